#include "boxlab/geometry.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

#include "boxlab/errors.hpp"

namespace boxlab {

BBox3D tight_box(const Eigen::MatrixXd& positions, const std::vector<int>& rows, int category) {
    if (rows.empty()) throw ValidationError("tight_box: no points");
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (int r : rows) {
        const Vec3 p = positions.row(r).transpose();
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return BBox3D{0.5 * (lo + hi), hi - lo, category};
}

BBox3D tight_box(const Eigen::MatrixXd& positions, int category) {
    std::vector<int> rows(static_cast<std::size_t>(positions.rows()));
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
    return tight_box(positions, rows, category);
}

VoxelKey voxel_of(const Vec3& p, double edge) {
    return VoxelKey{static_cast<std::int64_t>(std::floor(p.x() / edge)),
                    static_cast<std::int64_t>(std::floor(p.y() / edge)),
                    static_cast<std::int64_t>(std::floor(p.z() / edge))};
}

std::pair<std::vector<int>, int> voxel_clusters(const Eigen::MatrixXd& positions, double edge) {
    std::vector<int> tag(static_cast<std::size_t>(positions.rows()), 0);
    return voxel_clusters_tagged(positions, edge, tag);
}

std::pair<std::vector<int>, int> voxel_clusters_tagged(const Eigen::MatrixXd& positions, double edge,
                                                       const std::vector<int>& tag) {
    if (edge <= 0) throw ValidationError("voxel_clusters: edge must be positive");
    if (tag.size() != static_cast<std::size_t>(positions.rows()))
        throw ValidationError("voxel_clusters: tag size mismatch");

    struct TaggedKey {
        VoxelKey k;
        int tag;
        bool operator==(const TaggedKey&) const = default;
    };
    struct TaggedKeyHash {
        std::size_t operator()(const TaggedKey& t) const {
            return VoxelKeyHash{}(t.k) * 1000003u + static_cast<std::size_t>(t.tag + 7);
        }
    };

    std::unordered_map<TaggedKey, int, TaggedKeyHash> ids;
    std::vector<int> out(static_cast<std::size_t>(positions.rows()));
    int next = 0;
    for (Eigen::Index i = 0; i < positions.rows(); ++i) {
        const TaggedKey key{voxel_of(positions.row(i).transpose(), edge), tag[static_cast<std::size_t>(i)]};
        auto [it, inserted] = ids.try_emplace(key, next);
        if (inserted) ++next;
        out[static_cast<std::size_t>(i)] = it->second;
    }
    return {out, next};
}

} // namespace boxlab
