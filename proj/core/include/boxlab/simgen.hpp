#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "boxlab/rng.hpp"
#include "boxlab/stats.hpp"

namespace boxlab {

struct SimConfig {
    int retry_limit = 8;             // M: distance samplings per pair before exclusion
    double floor_point_rate = 400.0; // floor points per m^2
    double floor_margin = 0.2;       // XY dilation of the footprint, meters
    double gravity_eps = 0.005;      // tolerated min-z gap, meters
    double collision_voxel = 0.03;   // co-occupancy voxel edge, meters
    double superpoint_edge = 0.05;   // voxel edge for the sample's superpoints
    std::uint64_t rng_seed = 0;

    // Ablation switches (simulate-distribution only / + gravity-collision /
    // + background points).
    bool gravity_on = true;
    bool collision_on = true;
    bool background_on = true;

    void validate() const;
};

/// Raised when no category pair in the stats can be served from the bank.
struct SimExhausted : std::runtime_error {
    explicit SimExhausted(const std::string& msg) : std::runtime_error(msg) {}
};

struct PairDraw {
    int obj_a = -1, obj_b = -1; // bank indices
    int cat_a = -1, cat_b = -1;
    double distance = 0; // target center distance d > 0
    double mean = 0, std = 0;
};

/// Categories drawn with probability proportional to n, objects uniformly
/// within category, d ~ Normal(mean, std) truncated to d > 0.
PairDraw sample_pair(const PairStats& stats, const ObjectBank& bank, Prng& rng);

// A sample under construction: the two placed objects, before floor points.
struct SampleDraft {
    Eigen::MatrixXd pos_a, col_a;
    Eigen::MatrixXd pos_b, col_b;
    int cat_a = -1, cat_b = -1;
    double floor_z = 0;
};

enum class Axis : int { PosX = 0, NegX = 1, PosY = 2, NegY = 3 };

/// Aligns tight-box centers, then translates object b by d along the axis.
SampleDraft place_pair(const BankObject& a, const BankObject& b, double d, Axis axis);

/// Drops each object so its min z sits on the joint floor plane.
void apply_gravity(SampleDraft& draft);

/// True when no voxel at `voxel` resolution holds points of both objects.
bool collision_free(const SampleDraft& draft, double voxel);

struct Rejection {
    int attempts = 0;
    std::string reason;
};

using ComposeResult = std::variant<TrainingSample, Rejection>;

struct GenManifest {
    int requested = 0;
    int accepted = 0;
    int pairs_rejected = 0;
    long attempts = 0;
    long failed_collision = 0;
    long failed_empty_s3 = 0;
};

// Full composition: placement, gravity, collision gate, floor points, region
// partition and superpoints. Retries the distance draw up to cfg.retry_limit
// times in total; pairs that never yield a collision-free non-empty overlap
// come back as a Rejection.
ComposeResult compose_sample(const BankObject& a, const BankObject& b, double d_first, double mean,
                             double stddev, const SimConfig& cfg, Prng& rng,
                             GenManifest* manifest = nullptr);

struct PlausibilityReport {
    bool grounded = false;
    bool no_collision = false;
    bool s3_nonempty = false;
    bool background_ok = false;
    double max_floor_gap = 0;
    int co_occupied_fine_voxels = 0;

    bool all_ok() const { return grounded && no_collision && s3_nonempty && background_ok; }
};

/// Independent post-hoc checks on a generated sample, with the collision
/// check re-run at half the generation voxel size.
PlausibilityReport verify_plausibility(const TrainingSample& sample, const SimConfig& cfg);

/// Generates `count` accepted samples; each output slot uses its own RNG
/// stream derived from (cfg.rng_seed, slot), so parallel and serial runs of
/// the driver agree.
std::vector<TrainingSample> generate_corpus(const PairStats& stats, const ObjectBank& bank, int count,
                                            const SimConfig& cfg, GenManifest* manifest = nullptr);

} // namespace boxlab
