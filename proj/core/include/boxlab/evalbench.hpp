#pragma once

#include <functional>
#include <span>

#include "boxlab/labeler.hpp"
#include "boxlab/metrics.hpp"
#include "boxlab/overlap.hpp"

namespace boxlab {

/// Evaluation unit: a materialized sample plus its per-S3-point ground truth.
struct EvalSample {
    TrainingSample sample;
    std::vector<Region3Label> gt; // aligned with points_in(Region::S3)
};

/// A method maps an evaluation sample to per-S3-point labels. Oracle-style
/// baselines may read the ground truth; learned methods must not.
using MethodFn = std::function<std::vector<Region3Label>(const EvalSample&)>;

struct BenchmarkRow {
    std::string method;
    double macc = 0;
    int samples = 0;
    int skipped = 0;
};

struct BenchmarkTable {
    std::vector<BenchmarkRow> rows;
    bool binary_only = false;

    std::string to_text() const;
    std::string to_json() const;
};

BenchmarkTable run_benchmark(const std::vector<std::pair<std::string, MethodFn>>& methods,
                             const std::vector<EvalSample>& dataset, bool binary_only = false);

// Stock methods.
MethodFn method_smaller_box();
MethodFn method_majority_gt(); // per-sample majority class of the ground truth
MethodFn method_labeler(LabelerParams params);

/// Builds evaluation samples from scenes that carry ground truth.
std::vector<EvalSample> eval_samples_from_scenes(std::span<const Scene> scenes,
                                                 double margin = kDefaultCropMargin);

} // namespace boxlab
