#pragma once

#include <filesystem>

#include "boxlab/rng.hpp"
#include "boxlab/scene.hpp"

namespace boxlab {

struct ShapeSpec {
    enum class Kind { Box, Cylinder, LShape };

    std::string name;
    Kind kind = Kind::Box;
    Vec3 dims_lo = Vec3(0.3, 0.3, 0.3); // per-axis uniform dim range, meters
    Vec3 dims_hi = Vec3(0.6, 0.6, 0.6);
    Vec3 base_color = Vec3(0.5, 0.5, 0.5);
};

// Desk-scale stand-in for a scanned indoor dataset: parametric objects on a
// floor with full per-point ground truth and tight boxes, a configurable
// share of them placed as overlapping pairs.
struct WorldConfig {
    int num_scenes = 50;
    int objects_min = 4;
    int objects_max = 7;
    std::vector<ShapeSpec> categories; // empty = default set
    double overlap_fraction = 0.4;     // share of objects placed in overlapping pairs
    int points_min = 80;
    int points_max = 150;
    double scene_extent = 4.0;   // square floor side, meters
    double floor_density = 120;  // floor points per m^2
    double superpoint_edge = 0.05;
    double surface_noise = 0.005; // sampling noise std, meters
    double color_noise = 0.08;
    std::uint64_t seed = 0;

    void validate() const;
    std::string to_json() const;
    static WorldConfig from_json(const std::string& text);
    static std::vector<ShapeSpec> default_categories();
};

/// Deterministic per seed; every point carries its instance id, every box is
/// tight around its instance's points.
std::vector<Scene> generate_world(const WorldConfig& cfg);

} // namespace boxlab
