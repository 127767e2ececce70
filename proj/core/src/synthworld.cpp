#include "boxlab/synthworld.hpp"

#include <cmath>
#include <numbers>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "boxlab/errors.hpp"

namespace boxlab {

namespace {

constexpr double kPairCollisionVoxel = 0.03;
constexpr double kPairClearance = 0.1;     // pair vs rest of scene
constexpr double kIsolatedClearance = 0.15; // isolated object vs everything

struct ProtoObject {
    Eigen::MatrixXd positions; // local frame, resting at z = 0
    Eigen::MatrixXd colors;
    int category = -1;
};

// Uniform point on a cuboid surface, bottom face excluded (scanners don't
// see it and the open rim keeps min-z at the floor).
Vec3 cuboid_surface_point(const Vec3& dims, Prng& rng) {
    const double ax = dims.y() * dims.z(); // x = 0 / x = dx faces
    const double ay = dims.x() * dims.z();
    const double az = dims.x() * dims.y(); // top only
    const double total = 2 * ax + 2 * ay + az;
    double pick = rng.uniform01() * total;
    if (pick < ax) return {0.0, rng.uniform01() * dims.y(), rng.uniform01() * dims.z()};
    pick -= ax;
    if (pick < ax) return {dims.x(), rng.uniform01() * dims.y(), rng.uniform01() * dims.z()};
    pick -= ax;
    if (pick < ay) return {rng.uniform01() * dims.x(), 0.0, rng.uniform01() * dims.z()};
    pick -= ay;
    if (pick < ay) return {rng.uniform01() * dims.x(), dims.y(), rng.uniform01() * dims.z()};
    return {rng.uniform01() * dims.x(), rng.uniform01() * dims.y(), dims.z()};
}

Vec3 cylinder_surface_point(double radius, double height, Prng& rng) {
    const double lateral = 2 * std::numbers::pi * radius * height;
    const double top = std::numbers::pi * radius * radius;
    if (rng.uniform01() * (lateral + top) < lateral) {
        const double theta = rng.uniform01() * 2 * std::numbers::pi;
        return {radius * std::cos(theta), radius * std::sin(theta), rng.uniform01() * height};
    }
    const double r = radius * std::sqrt(rng.uniform01());
    const double theta = rng.uniform01() * 2 * std::numbers::pi;
    return {r * std::cos(theta), r * std::sin(theta), height};
}

ProtoObject make_object(const ShapeSpec& spec, int category, int n_points, double noise,
                        double color_noise, Prng& rng) {
    Vec3 dims;
    for (int d = 0; d < 3; ++d) dims[d] = rng.uniform_real(spec.dims_lo[d], spec.dims_hi[d]);

    ProtoObject obj;
    obj.category = category;
    obj.positions.resize(n_points, 3);
    for (int i = 0; i < n_points; ++i) {
        Vec3 p;
        switch (spec.kind) {
        case ShapeSpec::Kind::Box:
            p = cuboid_surface_point(dims, rng);
            p -= Vec3(dims.x() / 2, dims.y() / 2, 0.0);
            break;
        case ShapeSpec::Kind::Cylinder:
            p = cylinder_surface_point(dims.x() / 2, dims.z(), rng);
            break;
        case ShapeSpec::Kind::LShape: {
            // Horizontal slab plus a wall along the low-x edge.
            const Vec3 slab(dims.x(), dims.y(), 0.4 * dims.z());
            const Vec3 wall(0.35 * dims.x(), dims.y(), dims.z());
            const double a_slab = 2 * (slab.y() * slab.z() + slab.x() * slab.z()) + slab.x() * slab.y();
            const double a_wall = 2 * (wall.y() * wall.z() + wall.x() * wall.z()) + wall.x() * wall.y();
            if (rng.uniform01() * (a_slab + a_wall) < a_slab)
                p = cuboid_surface_point(slab, rng);
            else
                p = cuboid_surface_point(wall, rng);
            p -= Vec3(dims.x() / 2, dims.y() / 2, 0.0);
            break;
        }
        }
        for (int d = 0; d < 3; ++d) p[d] += rng.normal(0.0, noise);
        obj.positions.row(i) = p.transpose();
    }
    // Rest on the floor and center in XY.
    obj.positions.col(2).array() -= obj.positions.col(2).minCoeff();
    obj.positions.col(0).array() -= (obj.positions.col(0).minCoeff() + obj.positions.col(0).maxCoeff()) / 2;
    obj.positions.col(1).array() -= (obj.positions.col(1).minCoeff() + obj.positions.col(1).maxCoeff()) / 2;

    obj.colors.resize(n_points, 3);
    for (int i = 0; i < n_points; ++i)
        for (int d = 0; d < 3; ++d)
            obj.colors(i, d) =
                std::clamp(spec.base_color[d] + rng.uniform_real(-color_noise, color_noise), 0.0, 1.0);
    return obj;
}

bool voxels_collide(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double voxel) {
    std::unordered_set<VoxelKey, VoxelKeyHash> occ;
    for (Eigen::Index i = 0; i < a.rows(); ++i) occ.insert(voxel_of(a.row(i).transpose(), voxel));
    for (Eigen::Index i = 0; i < b.rows(); ++i)
        if (occ.contains(voxel_of(b.row(i).transpose(), voxel))) return true;
    return false;
}

bool any_point_in_both(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const BBox3D& box_a,
                       const BBox3D& box_b) {
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        if (box_b.contains(a.row(i).transpose())) return true;
    for (Eigen::Index i = 0; i < b.rows(); ++i)
        if (box_a.contains(b.row(i).transpose())) return true;
    return false;
}

void translate(ProtoObject& obj, const Vec3& t) {
    obj.positions.rowwise() += t.transpose();
}

} // namespace

std::vector<ShapeSpec> WorldConfig::default_categories() {
    return {
        {"crate", ShapeSpec::Kind::Box, Vec3(0.35, 0.35, 0.3), Vec3(0.6, 0.6, 0.5), Vec3(0.8, 0.3, 0.2)},
        {"locker", ShapeSpec::Kind::Box, Vec3(0.3, 0.3, 0.8), Vec3(0.45, 0.45, 1.1), Vec3(0.2, 0.4, 0.8)},
        {"drum", ShapeSpec::Kind::Cylinder, Vec3(0.3, 0.3, 0.4), Vec3(0.5, 0.5, 0.7), Vec3(0.3, 0.75, 0.3)},
        {"bench", ShapeSpec::Kind::LShape, Vec3(0.6, 0.3, 0.4), Vec3(0.9, 0.5, 0.6), Vec3(0.85, 0.7, 0.2)},
        {"post", ShapeSpec::Kind::Box, Vec3(0.12, 0.12, 0.9), Vec3(0.2, 0.2, 1.3), Vec3(0.6, 0.25, 0.7)},
    };
}

void WorldConfig::validate() const {
    if (num_scenes < 1) throw ValidationError("world config: num_scenes must be >= 1");
    if (objects_min < 1 || objects_max < objects_min)
        throw ValidationError("world config: bad objects-per-scene range");
    if (!(overlap_fraction >= 0 && overlap_fraction <= 1))
        throw ValidationError("world config: overlap_fraction must lie in [0, 1]");
    if (points_min < 10 || points_max < points_min)
        throw ValidationError("world config: bad points-per-object range");
    if (scene_extent <= 1) throw ValidationError("world config: scene_extent too small");
}

std::string WorldConfig::to_json() const {
    nlohmann::json j;
    j["num_scenes"] = num_scenes;
    j["objects_min"] = objects_min;
    j["objects_max"] = objects_max;
    j["overlap_fraction"] = overlap_fraction;
    j["points_min"] = points_min;
    j["points_max"] = points_max;
    j["scene_extent"] = scene_extent;
    j["floor_density"] = floor_density;
    j["superpoint_edge"] = superpoint_edge;
    j["surface_noise"] = surface_noise;
    j["color_noise"] = color_noise;
    j["seed"] = seed;
    nlohmann::json cats = nlohmann::json::array();
    for (const ShapeSpec& s : categories.empty() ? default_categories() : categories) {
        cats.push_back({{"name", s.name},
                        {"kind", s.kind == ShapeSpec::Kind::Box        ? "box"
                                 : s.kind == ShapeSpec::Kind::Cylinder ? "cylinder"
                                                                       : "lshape"},
                        {"dims_lo", {s.dims_lo.x(), s.dims_lo.y(), s.dims_lo.z()}},
                        {"dims_hi", {s.dims_hi.x(), s.dims_hi.y(), s.dims_hi.z()}},
                        {"color", {s.base_color.x(), s.base_color.y(), s.base_color.z()}}});
    }
    j["categories"] = cats;
    return j.dump(2);
}

WorldConfig WorldConfig::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("world config: invalid JSON: ") + e.what());
    }
    WorldConfig c;
    c.num_scenes = j.value("num_scenes", c.num_scenes);
    c.objects_min = j.value("objects_min", c.objects_min);
    c.objects_max = j.value("objects_max", c.objects_max);
    c.overlap_fraction = j.value("overlap_fraction", c.overlap_fraction);
    c.points_min = j.value("points_min", c.points_min);
    c.points_max = j.value("points_max", c.points_max);
    c.scene_extent = j.value("scene_extent", c.scene_extent);
    c.floor_density = j.value("floor_density", c.floor_density);
    c.superpoint_edge = j.value("superpoint_edge", c.superpoint_edge);
    c.surface_noise = j.value("surface_noise", c.surface_noise);
    c.color_noise = j.value("color_noise", c.color_noise);
    c.seed = j.value("seed", c.seed);
    if (j.contains("categories")) {
        for (const auto& cj : j["categories"]) {
            ShapeSpec s;
            s.name = cj.at("name").get<std::string>();
            const std::string kind = cj.at("kind").get<std::string>();
            s.kind = kind == "cylinder" ? ShapeSpec::Kind::Cylinder
                     : kind == "lshape" ? ShapeSpec::Kind::LShape
                                        : ShapeSpec::Kind::Box;
            const auto lo = cj.at("dims_lo"), hi = cj.at("dims_hi"), col = cj.at("color");
            s.dims_lo = Vec3(lo[0].get<double>(), lo[1].get<double>(), lo[2].get<double>());
            s.dims_hi = Vec3(hi[0].get<double>(), hi[1].get<double>(), hi[2].get<double>());
            s.base_color = Vec3(col[0].get<double>(), col[1].get<double>(), col[2].get<double>());
            c.categories.push_back(std::move(s));
        }
    }
    c.validate();
    return c;
}

std::vector<Scene> generate_world(const WorldConfig& cfg) {
    cfg.validate();
    const std::vector<ShapeSpec> cats = cfg.categories.empty() ? WorldConfig::default_categories() : cfg.categories;

    long total_objects = 0, overlapping_objects = 0;
    std::vector<Scene> scenes;
    for (int si = 0; si < cfg.num_scenes; ++si) {
        Prng rng = Prng::stream(cfg.seed, static_cast<std::uint64_t>(si));
        const int n_obj = cfg.objects_min +
                          static_cast<int>(rng.uniform_int(
                              static_cast<std::uint64_t>(cfg.objects_max - cfg.objects_min + 1)));
        const int n_pairs = std::min(n_obj / 2,
                                     static_cast<int>(std::lround(n_obj * cfg.overlap_fraction / 2.0)));

        std::vector<ProtoObject> placed;
        std::vector<BBox3D> placed_boxes;
        const double pad = 1.0;
        auto random_anchor = [&] {
            return Vec3(rng.uniform_real(pad, cfg.scene_extent - pad),
                        rng.uniform_real(pad, cfg.scene_extent - pad), 0.0);
        };
        auto fits = [&](const BBox3D& candidate, double clearance) {
            for (const BBox3D& b : placed_boxes)
                if (candidate.dilated(clearance).intersects(b)) return false;
            return true;
        };

        // Overlapping pairs first: build the pair in a local frame, then
        // drop the whole pair somewhere clear of everything else.
        for (int pi = 0; pi < n_pairs; ++pi) {
            bool pair_done = false;
            for (int attempt = 0; attempt < 60 && !pair_done; ++attempt) {
                const int cat_a = static_cast<int>(rng.uniform_int(cats.size()));
                const int cat_b = static_cast<int>(rng.uniform_int(cats.size()));
                const int np_a = cfg.points_min + static_cast<int>(rng.uniform_int(
                                                      static_cast<std::uint64_t>(cfg.points_max - cfg.points_min + 1)));
                const int np_b = cfg.points_min + static_cast<int>(rng.uniform_int(
                                                      static_cast<std::uint64_t>(cfg.points_max - cfg.points_min + 1)));
                ProtoObject a = make_object(cats[static_cast<std::size_t>(cat_a)], cat_a, np_a,
                                            cfg.surface_noise, cfg.color_noise, rng);
                ProtoObject b = make_object(cats[static_cast<std::size_t>(cat_b)], cat_b, np_b,
                                            cfg.surface_noise, cfg.color_noise, rng);
                const BBox3D ta = tight_box(a.positions, cat_a);
                const BBox3D tb = tight_box(b.positions, cat_b);
                const double reach = 0.5 * (std::hypot(ta.dims.x(), ta.dims.y()) +
                                            std::hypot(tb.dims.x(), tb.dims.y()));
                const double theta = rng.uniform_real(0.0, 2 * std::numbers::pi);
                for (double f = 0.95; f >= 0.45 && !pair_done; f -= 0.05) {
                    ProtoObject bb = b;
                    translate(bb, Vec3(f * reach * std::cos(theta), f * reach * std::sin(theta), 0.0));
                    const BBox3D box_a = tight_box(a.positions, cat_a);
                    const BBox3D box_b = tight_box(bb.positions, cat_b);
                    if (!box_a.intersects(box_b)) continue;
                    if (!any_point_in_both(a.positions, bb.positions, box_a, box_b)) continue;
                    if (voxels_collide(a.positions, bb.positions, kPairCollisionVoxel)) break;

                    // Anchor the pair in the scene.
                    for (int spot = 0; spot < 40; ++spot) {
                        const Vec3 anchor = random_anchor();
                        BBox3D moved_a = box_a, moved_b = box_b;
                        moved_a.center += anchor;
                        moved_b.center += anchor;
                        if (!fits(moved_a, kPairClearance) || !fits(moved_b, kPairClearance)) continue;
                        ProtoObject fa = a, fb = bb;
                        translate(fa, anchor);
                        translate(fb, anchor);
                        placed.push_back(std::move(fa));
                        placed_boxes.push_back(moved_a);
                        placed.push_back(std::move(fb));
                        placed_boxes.push_back(moved_b);
                        pair_done = true;
                        break;
                    }
                }
            }
            if (!pair_done)
                throw ValidationError("generate_world: could not place an overlapping pair (scene " +
                                      std::to_string(si) + "); extent too small for config");
        }

        // Isolated objects fill the rest.
        for (int oi = 2 * n_pairs; oi < n_obj; ++oi) {
            bool done = false;
            for (int attempt = 0; attempt < 80 && !done; ++attempt) {
                const int cat = static_cast<int>(rng.uniform_int(cats.size()));
                const int np = cfg.points_min + static_cast<int>(rng.uniform_int(
                                                    static_cast<std::uint64_t>(cfg.points_max - cfg.points_min + 1)));
                ProtoObject obj = make_object(cats[static_cast<std::size_t>(cat)], cat, np,
                                              cfg.surface_noise, cfg.color_noise, rng);
                const Vec3 anchor = random_anchor();
                translate(obj, anchor);
                const BBox3D box = tight_box(obj.positions, cat);
                if (!fits(box, kIsolatedClearance)) continue;
                placed.push_back(std::move(obj));
                placed_boxes.push_back(box);
                done = true;
            }
            if (!done)
                throw ValidationError("generate_world: could not place an isolated object (scene " +
                                      std::to_string(si) + "); extent too small for config");
        }

        total_objects += n_obj;
        overlapping_objects += 2 * n_pairs;

        // Floor, then assemble the scene.
        const std::uint64_t n_floor = rng.poisson(cfg.floor_density * cfg.scene_extent * cfg.scene_extent);
        Eigen::Index total_points = static_cast<Eigen::Index>(n_floor);
        for (const auto& o : placed) total_points += o.positions.rows();

        Scene scene;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "scene_%04d", si);
        scene.id = buf;
        scene.cloud.positions.resize(total_points, 3);
        scene.cloud.colors.resize(total_points, 3);
        std::vector<int> gt(static_cast<std::size_t>(total_points), -1);
        Eigen::Index at = 0;
        for (std::size_t oi = 0; oi < placed.size(); ++oi) {
            const auto& o = placed[oi];
            scene.cloud.positions.middleRows(at, o.positions.rows()) = o.positions;
            scene.cloud.colors.middleRows(at, o.positions.rows()) = o.colors;
            std::fill(gt.begin() + at, gt.begin() + at + o.positions.rows(), static_cast<int>(oi));
            at += o.positions.rows();
        }
        for (std::uint64_t i = 0; i < n_floor; ++i) {
            scene.cloud.positions.row(at) << rng.uniform_real(0.0, cfg.scene_extent),
                rng.uniform_real(0.0, cfg.scene_extent), rng.normal(0.0, cfg.surface_noise);
            for (int d = 0; d < 3; ++d)
                scene.cloud.colors(at, d) =
                    std::clamp(0.45 + rng.uniform_real(-0.05, 0.05), 0.0, 1.0);
            ++at;
        }
        scene.boxes = placed_boxes;
        scene.gt_instance = std::move(gt);
        scene.superpoints = voxel_superpoints(scene.cloud.positions, cfg.superpoint_edge);
        scene.validate();
        scenes.push_back(std::move(scene));
    }

    if (cfg.overlap_fraction > 0) {
        const double achieved =
            static_cast<double>(overlapping_objects) / static_cast<double>(total_objects);
        if (std::abs(achieved - cfg.overlap_fraction) > 0.2 * cfg.overlap_fraction + 1e-9)
            throw ValidationError("generate_world: achieved overlap fraction " +
                                  std::to_string(achieved) + " misses target " +
                                  std::to_string(cfg.overlap_fraction) + " by more than 20%");
    }
    return scenes;
}

} // namespace boxlab
