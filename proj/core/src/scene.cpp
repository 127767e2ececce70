#include "boxlab/scene.hpp"

#include <cmath>

#include "boxlab/container.hpp"
#include "boxlab/errors.hpp"

namespace boxlab {

void PointCloud::validate() const {
    if (positions.rows() < 1) throw ValidationError("point cloud: positions must have N >= 1");
    if (positions.cols() != 3) throw ValidationError("point cloud: positions must be N x 3");
    if (colors.rows() != positions.rows() || colors.cols() != 3)
        throw ValidationError("point cloud: colors must match positions (N x 3)");
    if (!positions.allFinite()) throw ValidationError("point cloud: positions contain non-finite values");
    if (!colors.allFinite()) throw ValidationError("point cloud: colors contain non-finite values");
}

void SuperpointPartition::validate(Eigen::Index n_points) const {
    if (assignment.size() != static_cast<std::size_t>(n_points))
        throw ValidationError("superpoints: assignment length does not match point count");
    std::vector<int> members(static_cast<std::size_t>(count), 0);
    for (int id : assignment) {
        if (id < 0 || id >= count)
            throw ValidationError("superpoints: id out of range [0, P)");
        ++members[static_cast<std::size_t>(id)];
    }
    for (int m : members)
        if (m == 0) throw ValidationError("superpoints: empty superpoint id");
}

SuperpointPartition voxel_superpoints(const Eigen::MatrixXd& positions, double edge) {
    auto [assignment, count] = voxel_clusters(positions, edge);
    return SuperpointPartition{std::move(assignment), count};
}

void Scene::validate() const {
    cloud.validate();
    superpoints.validate(cloud.size());
    for (std::size_t k = 0; k < boxes.size(); ++k) {
        const auto& b = boxes[k];
        if (!(b.dims.x() > 0 && b.dims.y() > 0 && b.dims.z() > 0))
            throw ValidationError("scene '" + id + "': box " + std::to_string(k) +
                                  " dims must be strictly positive");
    }
    if (gt_instance) {
        if (gt_instance->size() != static_cast<std::size_t>(cloud.size()))
            throw ValidationError("scene '" + id + "': gt_instance length mismatch");
        for (int v : *gt_instance)
            if (v < -1 || v >= static_cast<int>(boxes.size()))
                throw ValidationError("scene '" + id + "': gt_instance value out of range");
    }
}

void PseudoLabelSet::validate() const {
    const Eigen::Index k = masks.rows(), n = masks.cols();
    if (categories.size() != static_cast<std::size_t>(k))
        throw ValidationError("labels: categories length must equal K");
    if (determinate.size() != static_cast<std::size_t>(k * n))
        throw ValidationError("labels: determinate must be K x N");
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double m = masks(i, j);
            if (!(m >= 0.0 && m <= 1.0))
                throw ValidationError("labels: mask value outside [0, 1]");
            if (determinate_at(i, j) && m != 0.0 && m != 1.0)
                throw ValidationError("labels: determinate entry with soft value");
        }
    }
}

namespace {

Eigen::MatrixXd require_matrix(const ArrayContainer& c, const std::string& name, Eigen::Index cols,
                               const std::string& path) {
    if (!c.has(name)) throw ParseError("scene file " + path + ": missing array '" + name + "'");
    Eigen::MatrixXd m = get_matrix(c, name);
    if (m.cols() != cols)
        throw ParseError("scene file " + path + ": array '" + name + "' must have " +
                         std::to_string(cols) + " columns");
    return m;
}

} // namespace

Scene load_scene(const std::filesystem::path& path) {
    const ArrayContainer c = ArrayContainer::load(path);
    const std::string p = path.string();
    if (c.meta_or("format_version", "") != kSceneFormatVersion)
        throw ParseError("scene file " + p + ": missing or unsupported format_version");

    Scene s;
    s.id = c.meta_or("scene_id", path.stem().string());
    s.cloud.positions = require_matrix(c, "positions", 3, p);
    s.cloud.colors = require_matrix(c, "colors", 3, p);

    if (!c.has("superpoint")) throw ParseError("scene file " + p + ": missing array 'superpoint'");
    s.superpoints.assignment = get_ivec(c, "superpoint");
    int maxid = -1;
    for (int v : s.superpoints.assignment) maxid = std::max(maxid, v);
    s.superpoints.count = maxid + 1;

    const Eigen::MatrixXd centers = require_matrix(c, "box_center", 3, p);
    const Eigen::MatrixXd dims = require_matrix(c, "box_dims", 3, p);
    if (!c.has("box_category")) throw ParseError("scene file " + p + ": missing array 'box_category'");
    const std::vector<int> cats = get_ivec(c, "box_category");
    if (centers.rows() != dims.rows() || cats.size() != static_cast<std::size_t>(centers.rows()))
        throw ParseError("scene file " + p + ": box arrays disagree on K");
    for (Eigen::Index k = 0; k < centers.rows(); ++k)
        s.boxes.push_back(BBox3D{centers.row(k).transpose(), dims.row(k).transpose(),
                                 cats[static_cast<std::size_t>(k)]});

    if (c.has("gt_instance")) s.gt_instance = get_ivec(c, "gt_instance");

    try {
        s.validate();
    } catch (const ValidationError& e) {
        throw ValidationError("scene file " + p + ": " + e.what());
    }
    return s;
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
    scene.validate();
    ArrayContainer c;
    c.metadata()["format_version"] = kSceneFormatVersion;
    c.metadata()["kind"] = "scene";
    c.metadata()["scene_id"] = scene.id;

    put_matrix(c, "positions", scene.cloud.positions);
    put_matrix(c, "colors", scene.cloud.colors);
    put_ivec(c, "superpoint", scene.superpoints.assignment);

    const Eigen::Index k = static_cast<Eigen::Index>(scene.boxes.size());
    Eigen::MatrixXd centers(k, 3), dims(k, 3);
    std::vector<int> cats(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) {
        centers.row(i) = scene.boxes[static_cast<std::size_t>(i)].center.transpose();
        dims.row(i) = scene.boxes[static_cast<std::size_t>(i)].dims.transpose();
        cats[static_cast<std::size_t>(i)] = scene.boxes[static_cast<std::size_t>(i)].category;
    }
    put_matrix(c, "box_center", centers);
    put_matrix(c, "box_dims", dims);
    put_ivec(c, "box_category", cats);

    if (scene.gt_instance) put_ivec(c, "gt_instance", *scene.gt_instance);
    c.save(path);
}

PseudoLabelSet load_labels(const std::filesystem::path& path) {
    const ArrayContainer c = ArrayContainer::load(path);
    const std::string p = path.string();

    PseudoLabelSet out;
    out.scene_id = c.meta_or("scene_id", "");
    if (!c.has("masks")) throw ParseError("label file " + p + ": missing array 'masks'");
    out.masks = get_matrix(c, "masks");
    if (!c.has("determinate")) throw ParseError("label file " + p + ": missing array 'determinate'");
    out.determinate = c.u8("determinate");
    if (!c.has("categories")) throw ParseError("label file " + p + ": missing array 'categories'");
    out.categories = get_ivec(c, "categories");
    try {
        out.validate();
    } catch (const ValidationError& e) {
        throw ValidationError("label file " + p + ": " + e.what());
    }
    return out;
}

void save_labels(const PseudoLabelSet& labels, const std::filesystem::path& path) {
    labels.validate();
    ArrayContainer c;
    c.metadata()["format_version"] = kSceneFormatVersion;
    c.metadata()["kind"] = "labels";
    c.metadata()["scene_id"] = labels.scene_id;
    put_matrix(c, "masks", labels.masks);
    c.put_u8("determinate", labels.determinate,
             {static_cast<std::size_t>(labels.masks.rows()), static_cast<std::size_t>(labels.masks.cols())});
    put_ivec(c, "categories", labels.categories);
    c.save(path);
}

} // namespace boxlab
