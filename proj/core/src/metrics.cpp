#include "boxlab/metrics.hpp"

#include "boxlab/errors.hpp"

namespace boxlab {

MAccReport compute_macc(const std::vector<std::vector<Region3Label>>& predictions,
                        const std::vector<std::vector<Region3Label>>& ground_truth,
                        const std::vector<std::string>* sample_ids, bool binary_only) {
    if (predictions.size() != ground_truth.size())
        throw ValidationError("compute_macc: prediction/ground-truth sample count mismatch");
    if (sample_ids && sample_ids->size() != predictions.size())
        throw ValidationError("compute_macc: sample id count mismatch");

    MAccReport rep;
    for (std::size_t s = 0; s < predictions.size(); ++s) {
        const auto& pred = predictions[s];
        const auto& gt = ground_truth[s];
        if (pred.size() != gt.size())
            throw ValidationError("compute_macc: per-point label count mismatch in sample " +
                                  std::to_string(s));
        long correct = 0, counted = 0;
        for (std::size_t j = 0; j < gt.size(); ++j) {
            if (binary_only && gt[j] == Region3Label::BG) continue;
            ++counted;
            if (pred[j] == gt[j]) ++correct;
        }
        if (counted == 0) {
            ++rep.skipped_empty;
            continue;
        }
        rep.per_sample.push_back(static_cast<double>(correct) / static_cast<double>(counted));
        rep.sample_ids.push_back(sample_ids ? (*sample_ids)[s] : std::to_string(s));
    }
    if (!rep.per_sample.empty()) {
        double sum = 0;
        for (double a : rep.per_sample) sum += a;
        rep.macc = sum / static_cast<double>(rep.per_sample.size());
    }
    return rep;
}

} // namespace boxlab
