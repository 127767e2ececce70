#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>

#include "boxlab/losses.hpp"

namespace boxlab {

struct AugmentConfig {
    bool flip = true;
    double flip_prob = 0.5; // per axis, X and Y independently
    bool jitter = true;
    double jitter_std = 0.01; // meters
    bool elastic = true;
    double elastic_granularity = 0.2; // displacement-field cell, meters
    double elastic_magnitude = 0.04;  // displacement std at field nodes, meters

    bool any() const { return flip || jitter || elastic; }
};

enum class LrSchedule { Constant, Cosine };

struct TrainConfig {
    int sim_epochs = 100;
    int sim_batch = 64;
    int real_epochs = 5;
    int real_batch = 64;
    double ema_decay = 0.999; // alpha
    double lr = 1e-3;
    LrSchedule lr_schedule = LrSchedule::Cosine;
    LossWeights weights;
    AugmentConfig augment;
    std::uint64_t seed = 0;

    void validate() const;
    std::string to_json() const;
    static TrainConfig from_json(const std::string& text);
};

/// Training loss became non-finite.
struct TrainingDiverged : std::runtime_error {
    explicit TrainingDiverged(const std::string& msg) : std::runtime_error(msg) {}
};

// Adam with state aligned to the params' visit order.
class Adam {
public:
    explicit Adam(const LabelerParams& shape);

    void step(LabelerParams& params, const std::vector<ad::Mat>& grads, double lr);
    long steps_taken() const { return t_; }

    std::vector<std::pair<std::string, ad::Mat>> m, v;
    long t_ = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

// Index-preserving augmentation: coordinates move, superpoints and regions
// carry over, so teacher and student stay in one-to-one correspondence.
TrainingSample augment(const TrainingSample& sample, const AugmentConfig& cfg, Prng& rng);

/// theta_t <- alpha * theta_t + (1 - alpha) * theta_s, every parameter.
void ema_update(LabelerParams& teacher, const LabelerParams& student, double alpha);

// Per-step metrics as line-delimited JSON; a default-constructed logger
// swallows everything.
class MetricsLogger {
public:
    MetricsLogger() = default;
    explicit MetricsLogger(const std::filesystem::path& path);
    void log(const std::string& json_line);
    bool active() const { return static_cast<bool>(out_); }

private:
    std::shared_ptr<std::ofstream> out_;
};

/// Supervised pretraining on simulated samples with full ground truth.
LabelerParams pretrain(const std::vector<TrainingSample>& corpus, const LabelerParams& init,
                       const TrainConfig& cfg, MetricsLogger log = {});

struct FinetuneHooks {
    /// phase is "pre_step", "post_student_update" or "post_ema".
    std::function<void(std::string_view phase, long step, const LabelerParams& teacher)> on_phase;
    long eval_every = 0; // 0 = never
    std::function<void(long step, const LabelerParams& teacher)> on_eval;
};

// Mean-Teacher fine-tuning: teacher sees originals without gradients, the
// student sees augmented copies, the teacher follows by EMA after every
// optimizer step. Returns the final teacher.
LabelerParams finetune_smt(const LabelerParams& init, const std::vector<TrainingSample>& real_samples,
                           const TrainConfig& cfg, MetricsLogger log = {}, FinetuneHooks hooks = {});

struct Checkpoint {
    LabelerParams params;
    std::optional<Adam> optim;
    long step = 0;
    std::string train_config_json;
};

constexpr const char* kCheckpointVersion = "1";

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Gradients for every parameter in visit order (zeros where untouched).
std::vector<ad::Mat> collect_grads(const LabelerParams& params, const std::vector<ad::Var>& encoder_vars,
                                   const std::vector<ad::Var>& decoder_vars);

} // namespace boxlab
