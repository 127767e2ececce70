#pragma once

#include <filesystem>
#include <span>

#include "boxlab/sample.hpp"

namespace boxlab {

/// Object carved out of a box that intersects no other box; its instance
/// label is definite, making it raw material for simulated samples.
struct BankObject {
    Eigen::MatrixXd positions; // M x 3
    Eigen::MatrixXd colors;    // M x 3
    int category = -1;
    BBox3D tight; // recomputed from the points
    std::string source;
};

struct ObjectBank {
    std::vector<BankObject> objects;

    std::vector<int> of_category(int cat) const;
    std::vector<int> categories() const; // distinct, ascending
};

inline constexpr double kDefaultCropMargin = 0.1; // meters

// One sample per unordered box pair whose point-level intersection is
// non-empty. The crop envelope is the union of the two boxes dilated by
// `margin`; points inside it but in neither box become background context.
std::vector<OverlapSample> extract_overlap_samples(const Scene& scene,
                                                   double margin = kDefaultCropMargin);

/// Objects whose boxes intersect no other box in their scene.
ObjectBank extract_object_bank(std::span<const Scene> scenes);

// Table 5 baseline: every overlapping-area point goes to the smaller box,
// ties to box a.
std::vector<Region3Label> smaller_box_assign(const OverlapSample& sample, const Scene& scene);
std::vector<Region3Label> smaller_box_assign(const TrainingSample& sample);

void save_bank(const ObjectBank& bank, const std::filesystem::path& path);
ObjectBank load_bank(const std::filesystem::path& path);

} // namespace boxlab
