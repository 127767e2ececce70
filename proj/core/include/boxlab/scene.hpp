#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "boxlab/geometry.hpp"

namespace boxlab {

struct PointCloud {
    Eigen::MatrixXd positions; // N x 3, meters
    Eigen::MatrixXd colors;    // N x 3, in [0, 1]

    Eigen::Index size() const { return positions.rows(); }
    void validate() const;
};

struct SuperpointPartition {
    std::vector<int> assignment; // point -> superpoint id in [0, P)
    int count = 0;               // P

    void validate(Eigen::Index n_points) const;
};

/// Uniform voxel-grid partition (default superpoints for synthetic data).
SuperpointPartition voxel_superpoints(const Eigen::MatrixXd& positions, double edge);

struct Scene {
    std::string id;
    PointCloud cloud;
    std::vector<BBox3D> boxes;
    SuperpointPartition superpoints;
    std::optional<std::vector<int>> gt_instance; // -1 = background

    void validate() const;
};

struct PseudoLabelSet {
    std::string scene_id;
    Eigen::MatrixXd masks;                  // K x N in [0, 1]
    std::vector<std::uint8_t> determinate;  // K x N row-major, 1 where hard
    std::vector<int> categories;            // K

    bool determinate_at(Eigen::Index k, Eigen::Index n) const {
        return determinate[static_cast<std::size_t>(k * masks.cols() + n)] != 0;
    }
    void validate() const;
};

constexpr const char* kSceneFormatVersion = "1";

Scene load_scene(const std::filesystem::path& path);
void save_scene(const Scene& scene, const std::filesystem::path& path);

PseudoLabelSet load_labels(const std::filesystem::path& path);
void save_labels(const PseudoLabelSet& labels, const std::filesystem::path& path);

} // namespace boxlab
