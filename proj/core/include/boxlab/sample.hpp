#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "boxlab/scene.hpp"

namespace boxlab {

enum class Region : int { S1 = 0, S2 = 1, S3 = 2, Background = 3 };

/// Instance label for an overlapping-area point.
enum class Region3Label : int { A = 0, B = 1, BG = 2 };

// One overlapping box pair of a scene, as index lists into that scene.
// S1/S2 hold points inside exactly one of the pair's boxes, S3 points inside
// both, background points inside neither but within the crop envelope.
struct OverlapSample {
    std::string scene_id;
    int box_a = -1;
    int box_b = -1;
    std::vector<int> s1, s2, s3, background;
    std::optional<std::vector<Region3Label>> gt_region3; // aligned with s3

    void validate(const Scene& scene) const;
};

// Self-contained sample: cropped points, per-point region, a superpoint
// partition that never straddles region boundaries, and the box pair.
// gt_instance is 0 for instance A, 1 for B, -1 for background; present for
// simulated samples and for synthetic scenes with ground truth.
struct TrainingSample {
    std::string id;
    Eigen::MatrixXd positions; // N x 3
    Eigen::MatrixXd colors;    // N x 3
    std::vector<Region> point_region;
    std::vector<int> superpoint; // compact ids, region-pure
    int n_superpoints = 0;
    std::vector<Region> sp_region;
    BBox3D box_a, box_b;
    std::optional<std::vector<int>> gt_instance;

    Eigen::Index size() const { return positions.rows(); }
    std::vector<int> superpoints_in(Region r) const;
    std::vector<int> points_in(Region r) const;
    std::vector<int> sp_point_counts() const;
    /// Ground-truth label per S3 point (requires gt_instance), in the order
    /// produced by points_in(Region::S3).
    std::vector<Region3Label> gt_s3_labels() const;

    void validate() const;
};

/// Rebuilds `superpoint`/`sp_region` so every superpoint is region-pure,
/// splitting any cluster that straddles regions. Ids stay compact and are
/// assigned in first-occurrence point order.
void rebuild_region_pure_superpoints(TrainingSample& s, const std::vector<int>& raw_assignment);

/// Crops the sample's points out of the scene into a self-contained sample.
TrainingSample materialize_sample(const Scene& scene, const OverlapSample& ovl);

TrainingSample load_sample(const std::filesystem::path& path);
void save_sample(const TrainingSample& sample, const std::filesystem::path& path);

} // namespace boxlab
