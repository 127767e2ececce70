#include "boxlab/sample.hpp"

#include <algorithm>
#include <unordered_map>

#include "boxlab/container.hpp"
#include "boxlab/errors.hpp"

namespace boxlab {

void OverlapSample::validate(const Scene& scene) const {
    const int k = static_cast<int>(scene.boxes.size());
    if (box_a < 0 || box_a >= k || box_b < 0 || box_b >= k || box_a == box_b)
        throw ValidationError("overlap sample: bad box pair");
    std::vector<char> seen(static_cast<std::size_t>(scene.cloud.size()), 0);
    auto check = [&](const std::vector<int>& lst, const char* name) {
        for (int i : lst) {
            if (i < 0 || i >= scene.cloud.size())
                throw ValidationError(std::string("overlap sample: out-of-range index in ") + name);
            if (seen[static_cast<std::size_t>(i)]++)
                throw ValidationError(std::string("overlap sample: regions are not disjoint at ") + name);
        }
    };
    check(s1, "S1");
    check(s2, "S2");
    check(s3, "S3");
    check(background, "background");
    const BBox3D& a = scene.boxes[static_cast<std::size_t>(box_a)];
    const BBox3D& b = scene.boxes[static_cast<std::size_t>(box_b)];
    for (int i : s3) {
        const Vec3 p = scene.cloud.positions.row(i).transpose();
        if (!a.contains(p) || !b.contains(p))
            throw ValidationError("overlap sample: S3 point outside one of the boxes");
    }
    if (gt_region3 && gt_region3->size() != s3.size())
        throw ValidationError("overlap sample: gt_region3 length mismatch");
}

std::vector<int> TrainingSample::superpoints_in(Region r) const {
    std::vector<int> out;
    for (int i = 0; i < n_superpoints; ++i)
        if (sp_region[static_cast<std::size_t>(i)] == r) out.push_back(i);
    return out;
}

std::vector<int> TrainingSample::points_in(Region r) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < point_region.size(); ++i)
        if (point_region[i] == r) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> TrainingSample::sp_point_counts() const {
    std::vector<int> counts(static_cast<std::size_t>(n_superpoints), 0);
    for (int sp : superpoint) ++counts[static_cast<std::size_t>(sp)];
    return counts;
}

std::vector<Region3Label> TrainingSample::gt_s3_labels() const {
    if (!gt_instance) throw ValidationError("sample: gt_s3_labels requires gt_instance");
    std::vector<Region3Label> out;
    for (std::size_t i = 0; i < point_region.size(); ++i) {
        if (point_region[i] != Region::S3) continue;
        const int g = (*gt_instance)[i];
        out.push_back(g == 0 ? Region3Label::A : g == 1 ? Region3Label::B : Region3Label::BG);
    }
    return out;
}

void TrainingSample::validate() const {
    if (positions.rows() < 1 || positions.cols() != 3)
        throw ValidationError("sample: positions must be N x 3 with N >= 1");
    if (colors.rows() != positions.rows() || colors.cols() != 3)
        throw ValidationError("sample: colors must match positions");
    if (!positions.allFinite() || !colors.allFinite())
        throw ValidationError("sample: non-finite coordinates");
    const std::size_t n = static_cast<std::size_t>(positions.rows());
    if (point_region.size() != n || superpoint.size() != n)
        throw ValidationError("sample: per-point arrays must have length N");
    if (sp_region.size() != static_cast<std::size_t>(n_superpoints))
        throw ValidationError("sample: sp_region size mismatch");
    std::vector<int> counts(static_cast<std::size_t>(n_superpoints), 0);
    for (std::size_t i = 0; i < n; ++i) {
        const int sp = superpoint[i];
        if (sp < 0 || sp >= n_superpoints) throw ValidationError("sample: superpoint id out of range");
        if (sp_region[static_cast<std::size_t>(sp)] != point_region[i])
            throw ValidationError("sample: superpoint straddles regions");
        ++counts[static_cast<std::size_t>(sp)];
    }
    for (int c : counts)
        if (c == 0) throw ValidationError("sample: empty superpoint");
    if (!(box_a.dims.minCoeff() > 0) || !(box_b.dims.minCoeff() > 0))
        throw ValidationError("sample: box dims must be strictly positive");
    if (gt_instance) {
        if (gt_instance->size() != n) throw ValidationError("sample: gt_instance length mismatch");
        for (int v : *gt_instance)
            if (v < -1 || v > 1) throw ValidationError("sample: gt_instance value out of range");
    }
}

void rebuild_region_pure_superpoints(TrainingSample& s, const std::vector<int>& raw_assignment) {
    const std::size_t n = static_cast<std::size_t>(s.positions.rows());
    if (raw_assignment.size() != n || s.point_region.size() != n)
        throw ValidationError("rebuild superpoints: size mismatch");
    std::unordered_map<std::int64_t, int> ids;
    s.superpoint.assign(n, -1);
    s.sp_region.clear();
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::int64_t key =
            static_cast<std::int64_t>(raw_assignment[i]) * 4 + static_cast<int>(s.point_region[i]);
        auto [it, inserted] = ids.try_emplace(key, next);
        if (inserted) {
            s.sp_region.push_back(s.point_region[i]);
            ++next;
        }
        s.superpoint[i] = it->second;
    }
    s.n_superpoints = next;
}

TrainingSample materialize_sample(const Scene& scene, const OverlapSample& ovl) {
    ovl.validate(scene);

    // Gather selected points in ascending scene order so the layout is stable.
    std::vector<std::pair<int, Region>> picks;
    for (int i : ovl.s1) picks.emplace_back(i, Region::S1);
    for (int i : ovl.s2) picks.emplace_back(i, Region::S2);
    for (int i : ovl.s3) picks.emplace_back(i, Region::S3);
    for (int i : ovl.background) picks.emplace_back(i, Region::Background);
    std::sort(picks.begin(), picks.end());

    TrainingSample s;
    s.id = ovl.scene_id + "_pair" + std::to_string(ovl.box_a) + "_" + std::to_string(ovl.box_b);
    const Eigen::Index n = static_cast<Eigen::Index>(picks.size());
    s.positions.resize(n, 3);
    s.colors.resize(n, 3);
    s.point_region.resize(static_cast<std::size_t>(n));
    std::vector<int> raw_sp(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto [src, region] = picks[static_cast<std::size_t>(i)];
        s.positions.row(i) = scene.cloud.positions.row(src);
        s.colors.row(i) = scene.cloud.colors.row(src);
        s.point_region[static_cast<std::size_t>(i)] = region;
        raw_sp[static_cast<std::size_t>(i)] = scene.superpoints.assignment[static_cast<std::size_t>(src)];
    }
    s.box_a = scene.boxes[static_cast<std::size_t>(ovl.box_a)];
    s.box_b = scene.boxes[static_cast<std::size_t>(ovl.box_b)];
    if (scene.gt_instance) {
        std::vector<int> gt(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            const int g = (*scene.gt_instance)[static_cast<std::size_t>(picks[static_cast<std::size_t>(i)].first)];
            gt[static_cast<std::size_t>(i)] = g == ovl.box_a ? 0 : g == ovl.box_b ? 1 : -1;
        }
        s.gt_instance = std::move(gt);
    }
    rebuild_region_pure_superpoints(s, raw_sp);
    s.validate();
    return s;
}

TrainingSample load_sample(const std::filesystem::path& path) {
    const ArrayContainer c = ArrayContainer::load(path);
    const std::string p = path.string();
    if (c.meta_or("format_version", "") != kSceneFormatVersion)
        throw ParseError("sample file " + p + ": missing or unsupported format_version");

    TrainingSample s;
    s.id = c.meta_or("sample_id", path.stem().string());
    if (!c.has("positions") || !c.has("colors"))
        throw ParseError("sample file " + p + ": missing 'positions' or 'colors'");
    s.positions = get_matrix(c, "positions");
    s.colors = get_matrix(c, "colors");
    if (!c.has("region")) throw ParseError("sample file " + p + ": missing array 'region'");
    for (int r : get_ivec(c, "region")) {
        if (r < 0 || r > 3) throw ParseError("sample file " + p + ": region value out of range");
        s.point_region.push_back(static_cast<Region>(r));
    }
    if (!c.has("superpoint")) throw ParseError("sample file " + p + ": missing array 'superpoint'");
    const std::vector<int> raw_sp = get_ivec(c, "superpoint");

    const Eigen::MatrixXd centers = get_matrix(c, "box_center");
    const Eigen::MatrixXd dims = get_matrix(c, "box_dims");
    const std::vector<int> cats = get_ivec(c, "box_category");
    if (centers.rows() != 2 || dims.rows() != 2 || cats.size() != 2)
        throw ParseError("sample file " + p + ": box arrays must describe exactly 2 boxes");
    s.box_a = BBox3D{centers.row(0).transpose(), dims.row(0).transpose(), cats[0]};
    s.box_b = BBox3D{centers.row(1).transpose(), dims.row(1).transpose(), cats[1]};
    if (c.has("gt_instance")) s.gt_instance = get_ivec(c, "gt_instance");

    rebuild_region_pure_superpoints(s, raw_sp);
    try {
        s.validate();
    } catch (const ValidationError& e) {
        throw ValidationError("sample file " + p + ": " + e.what());
    }
    return s;
}

void save_sample(const TrainingSample& sample, const std::filesystem::path& path) {
    sample.validate();
    ArrayContainer c;
    c.metadata()["format_version"] = kSceneFormatVersion;
    c.metadata()["kind"] = "overlap_sample";
    c.metadata()["sample_id"] = sample.id;

    put_matrix(c, "positions", sample.positions);
    put_matrix(c, "colors", sample.colors);
    std::vector<int> region(sample.point_region.size());
    for (std::size_t i = 0; i < region.size(); ++i) region[i] = static_cast<int>(sample.point_region[i]);
    put_ivec(c, "region", region);
    put_ivec(c, "superpoint", sample.superpoint);

    Eigen::MatrixXd centers(2, 3), dims(2, 3);
    centers.row(0) = sample.box_a.center.transpose();
    centers.row(1) = sample.box_b.center.transpose();
    dims.row(0) = sample.box_a.dims.transpose();
    dims.row(1) = sample.box_b.dims.transpose();
    put_matrix(c, "box_center", centers);
    put_matrix(c, "box_dims", dims);
    put_ivec(c, "box_category", {sample.box_a.category, sample.box_b.category});
    if (sample.gt_instance) put_ivec(c, "gt_instance", *sample.gt_instance);
    c.save(path);
}

} // namespace boxlab
