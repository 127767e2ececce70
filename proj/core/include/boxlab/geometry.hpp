#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace boxlab {

using Vec3 = Eigen::Vector3d;

// Axis-aligned box given by center and full extents. Membership uses a
// closed boundary on all faces so abutting boxes leave no orphan points.
struct BBox3D {
    Vec3 center = Vec3::Zero();
    Vec3 dims = Vec3::Zero();
    int category = -1;

    bool contains(const Vec3& p) const {
        const Vec3 h = 0.5 * dims;
        return std::abs(p.x() - center.x()) <= h.x() && std::abs(p.y() - center.y()) <= h.y() &&
               std::abs(p.z() - center.z()) <= h.z();
    }

    bool intersects(const BBox3D& other) const {
        const Vec3 h = 0.5 * (dims + other.dims);
        return std::abs(center.x() - other.center.x()) <= h.x() &&
               std::abs(center.y() - other.center.y()) <= h.y() &&
               std::abs(center.z() - other.center.z()) <= h.z();
    }

    double volume() const { return dims.x() * dims.y() * dims.z(); }
    Vec3 min() const { return center - 0.5 * dims; }
    Vec3 max() const { return center + 0.5 * dims; }

    BBox3D dilated(double margin) const {
        return BBox3D{center, dims + Vec3::Constant(2.0 * margin), category};
    }
};

/// Smallest box (closed) enclosing the given rows of an N x 3 position matrix.
BBox3D tight_box(const Eigen::MatrixXd& positions, const std::vector<int>& rows, int category);
BBox3D tight_box(const Eigen::MatrixXd& positions, int category);

struct VoxelKey {
    std::int64_t x, y, z;
    bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
    std::size_t operator()(const VoxelKey& k) const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (std::int64_t v : {k.x, k.y, k.z}) {
            h ^= static_cast<std::uint64_t>(v);
            h *= 0x100000001b3ull;
        }
        return static_cast<std::size_t>(h);
    }
};

VoxelKey voxel_of(const Vec3& p, double edge);

// Cluster points by voxel cell; cluster ids are assigned in order of first
// occurrence when scanning points by index, so the result is deterministic.
// Returns per-point cluster id and the number of clusters.
std::pair<std::vector<int>, int> voxel_clusters(const Eigen::MatrixXd& positions, double edge);

// Same, but cells are additionally split by an integer tag per point (used to
// keep superpoints from straddling region or instance boundaries).
std::pair<std::vector<int>, int> voxel_clusters_tagged(const Eigen::MatrixXd& positions, double edge,
                                                       const std::vector<int>& tag);

} // namespace boxlab
