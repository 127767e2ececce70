#include "boxlab/stats.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "boxlab/errors.hpp"

namespace boxlab {

void PairStats::add_observation(int cat_a, int cat_b, double distance) {
    if (!(distance >= 0) || !std::isfinite(distance))
        throw ValidationError("pair stats: distance must be finite and non-negative");
    pending_[PairKey(cat_a, cat_b)].push_back(distance);
}

void PairStats::finalize() {
    for (auto& [key, dists] : pending_) {
        PairStatsEntry e;
        e.n = static_cast<int>(dists.size());
        double sum = 0;
        for (double d : dists) sum += d;
        e.mean_dist = sum / e.n;
        double ss = 0;
        for (double d : dists) ss += (d - e.mean_dist) * (d - e.mean_dist);
        e.std_dist = e.n > 1 ? std::sqrt(ss / e.n) : 0.0;
        entries_[key] = e;
    }
    pending_.clear();
}

const PairStatsEntry* PairStats::find(int cat_a, int cat_b) const {
    auto it = entries_.find(PairKey(cat_a, cat_b));
    return it == entries_.end() ? nullptr : &it->second;
}

void PairStats::validate() const {
    for (const auto& [key, e] : entries_) {
        if (e.n < 0) throw ValidationError("pair stats: negative count");
        if (e.std_dist < 0) throw ValidationError("pair stats: negative std");
        if (e.n > 1 && e.std_dist == 0 && e.mean_dist == 0)
            throw ValidationError("pair stats: degenerate entry with n > 1");
    }
}

void PairStats::save(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = "pair_stats";
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [key, e] : entries_)
        pairs.push_back({{"cat_a", key.lo},
                         {"cat_b", key.hi},
                         {"n", e.n},
                         {"mean_dist", e.mean_dist},
                         {"std_dist", e.std_dist}});
    j["pairs"] = pairs;
    std::ofstream out(path);
    if (!out) throw IoError("pair stats: cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
}

PairStats PairStats::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("pair stats: cannot open for reading: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("pair stats: invalid JSON in " + path.string() + ": " + e.what());
    }
    PairStats s;
    for (const auto& p : j.at("pairs")) {
        PairStatsEntry e;
        e.n = p.at("n").get<int>();
        e.mean_dist = p.at("mean_dist").get<double>();
        e.std_dist = p.at("std_dist").get<double>();
        s.entries_[PairKey(p.at("cat_a").get<int>(), p.at("cat_b").get<int>())] = e;
    }
    s.validate();
    return s;
}

PairStats harvest_stats(std::span<const OverlapSample> samples, std::span<const Scene> scenes) {
    std::map<std::string, const Scene*> by_id;
    for (const Scene& s : scenes) by_id[s.id] = &s;

    PairStats stats;
    for (const OverlapSample& s : samples) {
        auto it = by_id.find(s.scene_id);
        if (it == by_id.end())
            throw ValidationError("harvest_stats: sample references unknown scene '" + s.scene_id + "'");
        const Scene& scene = *it->second;
        const BBox3D& a = scene.boxes.at(static_cast<std::size_t>(s.box_a));
        const BBox3D& b = scene.boxes.at(static_cast<std::size_t>(s.box_b));
        stats.add_observation(a.category, b.category, (a.center - b.center).norm());
    }
    stats.finalize();
    return stats;
}

PairStats harvest_stats(std::span<const TrainingSample> samples) {
    PairStats stats;
    for (const TrainingSample& s : samples)
        stats.add_observation(s.box_a.category, s.box_b.category,
                              (s.box_a.center - s.box_b.center).norm());
    stats.finalize();
    return stats;
}

} // namespace boxlab
