#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "boxlab/overlap.hpp"
#include "boxlab/scene.hpp"

namespace boxlab {

/// Unordered category pair, normalized to lo <= hi.
struct PairKey {
    int lo, hi;
    PairKey(int a, int b) : lo(std::min(a, b)), hi(std::max(a, b)) {}
    auto operator<=>(const PairKey&) const = default;
};

struct PairStatsEntry {
    int n = 0;             // number of observed overlap samples
    double mean_dist = 0;  // mean center-to-center distance (m)
    double std_dist = 0;   // population std of the distances (m); 0 when n <= 1
};

// Class-pair occurrence counts and center-distance moments harvested from
// real overlap samples; drives both the pair draw and the distance draw of
// the simulator.
class PairStats {
public:
    void add_observation(int cat_a, int cat_b, double distance);
    void finalize(); // computes moments from accumulated observations

    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    const std::map<PairKey, PairStatsEntry>& entries() const { return entries_; }
    const PairStatsEntry* find(int cat_a, int cat_b) const;

    void validate() const;

    void save(const std::filesystem::path& path) const;
    static PairStats load(const std::filesystem::path& path);

private:
    std::map<PairKey, PairStatsEntry> entries_;
    std::map<PairKey, std::vector<double>> pending_;
};

/// Per-pair stats over all samples; distances measured between the two
/// annotated box centers of each sample's scene.
PairStats harvest_stats(std::span<const OverlapSample> samples, std::span<const Scene> scenes);

/// Same, for samples already materialized (box pair carried in the sample).
PairStats harvest_stats(std::span<const TrainingSample> samples);

} // namespace boxlab
