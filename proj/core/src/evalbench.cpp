#include "boxlab/evalbench.hpp"

#include <array>
#include <sstream>

#include <nlohmann/json.hpp>

#include "boxlab/overlap.hpp"

namespace boxlab {

std::string BenchmarkTable::to_text() const {
    std::size_t w = 8;
    for (const auto& r : rows) w = std::max(w, r.method.size());
    std::ostringstream os;
    os << "method" << std::string(w - 6, ' ') << "  mAcc    samples\n";
    os << std::string(w + 18, '-') << "\n";
    for (const auto& r : rows) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%-*s  %.4f  %d", static_cast<int>(w), r.method.c_str(),
                      r.macc, r.samples);
        os << buf;
        if (r.skipped > 0) os << "  (" << r.skipped << " skipped)";
        os << "\n";
    }
    return os.str();
}

std::string BenchmarkTable::to_json() const {
    nlohmann::json j;
    j["kind"] = "benchmark";
    j["binary_only"] = binary_only;
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& r : rows)
        rs.push_back({{"method", r.method}, {"macc", r.macc}, {"samples", r.samples}, {"skipped", r.skipped}});
    j["rows"] = rs;
    return j.dump(2);
}

BenchmarkTable run_benchmark(const std::vector<std::pair<std::string, MethodFn>>& methods,
                             const std::vector<EvalSample>& dataset, bool binary_only) {
    BenchmarkTable table;
    table.binary_only = binary_only;
    std::vector<std::vector<Region3Label>> gts;
    std::vector<std::string> ids;
    for (const EvalSample& e : dataset) {
        gts.push_back(e.gt);
        ids.push_back(e.sample.id);
    }
    for (const auto& [name, fn] : methods) {
        std::vector<std::vector<Region3Label>> preds;
        preds.reserve(dataset.size());
        for (const EvalSample& e : dataset) preds.push_back(fn(e));
        const MAccReport rep = compute_macc(preds, gts, &ids, binary_only);
        table.rows.push_back(BenchmarkRow{name, rep.macc, static_cast<int>(rep.per_sample.size()),
                                          rep.skipped_empty});
    }
    return table;
}

MethodFn method_smaller_box() {
    return [](const EvalSample& e) { return smaller_box_assign(e.sample); };
}

MethodFn method_majority_gt() {
    return [](const EvalSample& e) {
        std::array<long, 3> counts{0, 0, 0};
        for (Region3Label l : e.gt) ++counts[static_cast<std::size_t>(l)];
        Region3Label best = Region3Label::A;
        if (counts[1] > counts[static_cast<std::size_t>(best)]) best = Region3Label::B;
        if (counts[2] > counts[static_cast<std::size_t>(best)]) best = Region3Label::BG;
        return std::vector<Region3Label>(e.gt.size(), best);
    };
}

MethodFn method_labeler(LabelerParams params) {
    return [params = std::move(params)](const EvalSample& e) {
        return predict_sample(params, e.sample).s3_point_labels;
    };
}

std::vector<EvalSample> eval_samples_from_scenes(std::span<const Scene> scenes, double margin) {
    std::vector<EvalSample> out;
    for (const Scene& scene : scenes) {
        if (!scene.gt_instance)
            throw ValidationError("eval samples: scene '" + scene.id + "' carries no ground truth");
        for (const OverlapSample& ovl : extract_overlap_samples(scene, margin)) {
            EvalSample e;
            e.sample = materialize_sample(scene, ovl);
            e.gt = e.sample.gt_s3_labels();
            out.push_back(std::move(e));
        }
    }
    return out;
}

} // namespace boxlab
