#include "boxlab/overlap.hpp"

#include <algorithm>
#include <set>

#include "boxlab/container.hpp"
#include "boxlab/errors.hpp"

namespace boxlab {

std::vector<int> ObjectBank::of_category(int cat) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < objects.size(); ++i)
        if (objects[i].category == cat) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> ObjectBank::categories() const {
    std::set<int> cats;
    for (const auto& o : objects) cats.insert(o.category);
    return std::vector<int>(cats.begin(), cats.end());
}

std::vector<OverlapSample> extract_overlap_samples(const Scene& scene, double margin) {
    scene.validate();
    const Eigen::Index n = scene.cloud.size();
    const int k = static_cast<int>(scene.boxes.size());

    // Per-point membership over all boxes.
    std::vector<std::vector<char>> inside(static_cast<std::size_t>(k),
                                          std::vector<char>(static_cast<std::size_t>(n), 0));
    for (int b = 0; b < k; ++b) {
        const BBox3D& box = scene.boxes[static_cast<std::size_t>(b)];
        for (Eigen::Index i = 0; i < n; ++i)
            inside[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)] =
                box.contains(scene.cloud.positions.row(i).transpose());
    }

    std::vector<OverlapSample> out;
    for (int a = 0; a < k; ++a) {
        for (int b = a + 1; b < k; ++b) {
            const auto& in_a = inside[static_cast<std::size_t>(a)];
            const auto& in_b = inside[static_cast<std::size_t>(b)];
            OverlapSample s;
            s.scene_id = scene.id;
            s.box_a = a;
            s.box_b = b;
            const BBox3D crop_a = scene.boxes[static_cast<std::size_t>(a)].dilated(margin);
            const BBox3D crop_b = scene.boxes[static_cast<std::size_t>(b)].dilated(margin);
            for (Eigen::Index i = 0; i < n; ++i) {
                const std::size_t ii = static_cast<std::size_t>(i);
                if (in_a[ii] && in_b[ii]) {
                    s.s3.push_back(static_cast<int>(i));
                } else if (in_a[ii]) {
                    s.s1.push_back(static_cast<int>(i));
                } else if (in_b[ii]) {
                    s.s2.push_back(static_cast<int>(i));
                } else {
                    const Vec3 p = scene.cloud.positions.row(i).transpose();
                    if (crop_a.contains(p) || crop_b.contains(p)) s.background.push_back(static_cast<int>(i));
                }
            }
            if (s.s3.empty()) continue; // nothing to label for this pair
            if (scene.gt_instance) {
                std::vector<Region3Label> gt;
                gt.reserve(s.s3.size());
                for (int i : s.s3) {
                    const int g = (*scene.gt_instance)[static_cast<std::size_t>(i)];
                    gt.push_back(g == a ? Region3Label::A : g == b ? Region3Label::B : Region3Label::BG);
                }
                s.gt_region3 = std::move(gt);
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

ObjectBank extract_object_bank(std::span<const Scene> scenes) {
    ObjectBank bank;
    for (const Scene& scene : scenes) {
        scene.validate();
        const int k = static_cast<int>(scene.boxes.size());
        for (int b = 0; b < k; ++b) {
            bool isolated = true;
            for (int o = 0; o < k && isolated; ++o)
                if (o != b &&
                    scene.boxes[static_cast<std::size_t>(b)].intersects(scene.boxes[static_cast<std::size_t>(o)]))
                    isolated = false;
            if (!isolated) continue;

            const BBox3D& box = scene.boxes[static_cast<std::size_t>(b)];
            std::vector<int> rows;
            for (Eigen::Index i = 0; i < scene.cloud.size(); ++i)
                if (box.contains(scene.cloud.positions.row(i).transpose())) rows.push_back(static_cast<int>(i));
            if (rows.empty()) continue; // box annotates no points, nothing to bank

            BankObject obj;
            obj.positions.resize(static_cast<Eigen::Index>(rows.size()), 3);
            obj.colors.resize(static_cast<Eigen::Index>(rows.size()), 3);
            for (std::size_t r = 0; r < rows.size(); ++r) {
                obj.positions.row(static_cast<Eigen::Index>(r)) = scene.cloud.positions.row(rows[r]);
                obj.colors.row(static_cast<Eigen::Index>(r)) = scene.cloud.colors.row(rows[r]);
            }
            obj.category = box.category;
            obj.tight = tight_box(obj.positions, box.category);
            obj.source = scene.id + "_box" + std::to_string(b);
            bank.objects.push_back(std::move(obj));
        }
    }
    return bank;
}

namespace {

std::vector<Region3Label> assign_all(std::size_t n, Region3Label label) {
    return std::vector<Region3Label>(n, label);
}

Region3Label smaller_of(const BBox3D& a, const BBox3D& b) {
    return b.volume() < a.volume() ? Region3Label::B : Region3Label::A; // ties go to A
}

} // namespace

std::vector<Region3Label> smaller_box_assign(const OverlapSample& sample, const Scene& scene) {
    const BBox3D& a = scene.boxes[static_cast<std::size_t>(sample.box_a)];
    const BBox3D& b = scene.boxes[static_cast<std::size_t>(sample.box_b)];
    return assign_all(sample.s3.size(), smaller_of(a, b));
}

std::vector<Region3Label> smaller_box_assign(const TrainingSample& sample) {
    return assign_all(sample.points_in(Region::S3).size(), smaller_of(sample.box_a, sample.box_b));
}

void save_bank(const ObjectBank& bank, const std::filesystem::path& path) {
    ArrayContainer c;
    c.metadata()["format_version"] = kSceneFormatVersion;
    c.metadata()["kind"] = "object_bank";

    Eigen::Index total = 0;
    for (const auto& o : bank.objects) total += o.positions.rows();
    Eigen::MatrixXd pos(total, 3), col(total, 3);
    std::vector<int> start;
    std::vector<int> cats;
    Eigen::MatrixXd centers(static_cast<Eigen::Index>(bank.objects.size()), 3);
    Eigen::MatrixXd dims(static_cast<Eigen::Index>(bank.objects.size()), 3);
    Eigen::Index at = 0;
    for (std::size_t i = 0; i < bank.objects.size(); ++i) {
        const auto& o = bank.objects[i];
        start.push_back(static_cast<int>(at));
        pos.middleRows(at, o.positions.rows()) = o.positions;
        col.middleRows(at, o.positions.rows()) = o.colors;
        cats.push_back(o.category);
        centers.row(static_cast<Eigen::Index>(i)) = o.tight.center.transpose();
        dims.row(static_cast<Eigen::Index>(i)) = o.tight.dims.transpose();
        at += o.positions.rows();
    }
    start.push_back(static_cast<int>(at));

    put_matrix(c, "positions", pos);
    put_matrix(c, "colors", col);
    put_ivec(c, "object_start", start);
    put_ivec(c, "category", cats);
    put_matrix(c, "box_center", centers);
    put_matrix(c, "box_dims", dims);
    c.save(path);
}

ObjectBank load_bank(const std::filesystem::path& path) {
    const ArrayContainer c = ArrayContainer::load(path);
    const std::string p = path.string();
    if (c.meta_or("kind", "") != "object_bank")
        throw ParseError("bank file " + p + ": not an object bank");
    const Eigen::MatrixXd pos = get_matrix(c, "positions");
    const Eigen::MatrixXd col = get_matrix(c, "colors");
    const std::vector<int> start = get_ivec(c, "object_start");
    const std::vector<int> cats = get_ivec(c, "category");
    if (start.size() != cats.size() + 1)
        throw ParseError("bank file " + p + ": object_start/category size mismatch");

    ObjectBank bank;
    for (std::size_t i = 0; i + 1 < start.size(); ++i) {
        const int lo = start[i], hi = start[i + 1];
        if (lo < 0 || hi < lo || hi > pos.rows())
            throw ParseError("bank file " + p + ": bad object_start offsets");
        if (hi == lo) throw ParseError("bank file " + p + ": empty object");
        BankObject o;
        o.positions = pos.middleRows(lo, hi - lo);
        o.colors = col.middleRows(lo, hi - lo);
        o.category = cats[i];
        o.tight = tight_box(o.positions, o.category);
        o.source = p + "#" + std::to_string(i);
        bank.objects.push_back(std::move(o));
    }
    return bank;
}

} // namespace boxlab
