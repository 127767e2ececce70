#pragma once

#include <string>
#include <vector>

#include "boxlab/sample.hpp"

namespace boxlab {

struct MAccReport {
    std::vector<double> per_sample;       // accuracy of each included sample
    std::vector<std::string> sample_ids;  // aligned with per_sample
    double macc = 0;                      // unweighted mean over samples
    int skipped_empty = 0;                // samples excluded for having no points

    std::string warning() const {
        return skipped_empty > 0
                   ? std::to_string(skipped_empty) + " sample(s) with empty overlap excluded from mAcc"
                   : "";
    }
};

// Mean over samples of the per-point label accuracy inside the overlap area.
// Sample-averaged, never point-weighted. With binary_only, points whose
// ground truth is BG are dropped from both numerator and denominator.
MAccReport compute_macc(const std::vector<std::vector<Region3Label>>& predictions,
                        const std::vector<std::vector<Region3Label>>& ground_truth,
                        const std::vector<std::string>* sample_ids = nullptr,
                        bool binary_only = false);

} // namespace boxlab
