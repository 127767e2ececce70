#include "boxlab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "boxlab/container.hpp"

namespace boxlab {

void TrainConfig::validate() const {
    if (sim_epochs < 1 || real_epochs < 1) throw ValidationError("train config: epochs must be >= 1");
    if (sim_batch < 1 || real_batch < 1) throw ValidationError("train config: batch must be >= 1");
    if (!(ema_decay > 0 && ema_decay < 1) && ema_decay != 0.0 && ema_decay != 1.0)
        throw ValidationError("train config: ema_decay must lie in [0, 1]");
    if (lr < 0) throw ValidationError("train config: lr must be >= 0");
    weights.validate();
}

std::string TrainConfig::to_json() const {
    nlohmann::json j;
    j["sim_epochs"] = sim_epochs;
    j["sim_batch"] = sim_batch;
    j["real_epochs"] = real_epochs;
    j["real_batch"] = real_batch;
    j["ema_decay"] = ema_decay;
    j["lr"] = lr;
    j["lr_schedule"] = lr_schedule == LrSchedule::Cosine ? "cosine" : "constant";
    j["weights"] = {{"lambda1", weights.lambda1},
                    {"lambda2", weights.lambda2},
                    {"lambda3", weights.lambda3},
                    {"tau", weights.tau}};
    j["augment"] = {{"flip", augment.flip},
                    {"flip_prob", augment.flip_prob},
                    {"jitter", augment.jitter},
                    {"jitter_std", augment.jitter_std},
                    {"elastic", augment.elastic},
                    {"elastic_granularity", augment.elastic_granularity},
                    {"elastic_magnitude", augment.elastic_magnitude}};
    j["seed"] = seed;
    return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("train config: invalid JSON: ") + e.what());
    }
    TrainConfig c;
    c.sim_epochs = j.value("sim_epochs", c.sim_epochs);
    c.sim_batch = j.value("sim_batch", c.sim_batch);
    c.real_epochs = j.value("real_epochs", c.real_epochs);
    c.real_batch = j.value("real_batch", c.real_batch);
    c.ema_decay = j.value("ema_decay", c.ema_decay);
    c.lr = j.value("lr", c.lr);
    c.lr_schedule = j.value("lr_schedule", std::string("cosine")) == "constant" ? LrSchedule::Constant
                                                                                : LrSchedule::Cosine;
    if (j.contains("weights")) {
        const auto& w = j["weights"];
        c.weights.lambda1 = w.value("lambda1", c.weights.lambda1);
        c.weights.lambda2 = w.value("lambda2", c.weights.lambda2);
        c.weights.lambda3 = w.value("lambda3", c.weights.lambda3);
        c.weights.tau = w.value("tau", c.weights.tau);
    }
    if (j.contains("augment")) {
        const auto& a = j["augment"];
        c.augment.flip = a.value("flip", c.augment.flip);
        c.augment.flip_prob = a.value("flip_prob", c.augment.flip_prob);
        c.augment.jitter = a.value("jitter", c.augment.jitter);
        c.augment.jitter_std = a.value("jitter_std", c.augment.jitter_std);
        c.augment.elastic = a.value("elastic", c.augment.elastic);
        c.augment.elastic_granularity = a.value("elastic_granularity", c.augment.elastic_granularity);
        c.augment.elastic_magnitude = a.value("elastic_magnitude", c.augment.elastic_magnitude);
    }
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

Adam::Adam(const LabelerParams& shape) {
    shape.visit([this](std::string_view name, const ad::Mat& mat) {
        m.emplace_back(std::string(name), ad::Mat::Zero(mat.rows(), mat.cols()));
        v.emplace_back(std::string(name), ad::Mat::Zero(mat.rows(), mat.cols()));
    });
}

void Adam::step(LabelerParams& params, const std::vector<ad::Mat>& grads, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    std::size_t i = 0;
    params.visit([&](std::string_view, ad::Mat& p) {
        if (i >= grads.size()) throw ValidationError("adam: gradient count mismatch");
        const ad::Mat& g = grads[i];
        ad::Mat& mi = m[i].second;
        ad::Mat& vi = v[i].second;
        mi = beta1 * mi + (1.0 - beta1) * g;
        vi.array() = beta2 * vi.array() + (1.0 - beta2) * g.array().square();
        p.array() -= lr * (mi.array() / bc1) / ((vi.array() / bc2).sqrt() + eps);
        ++i;
    });
    if (i != grads.size()) throw ValidationError("adam: gradient count mismatch");
}

TrainingSample augment(const TrainingSample& sample, const AugmentConfig& cfg, Prng& rng) {
    TrainingSample out = sample;
    Eigen::MatrixXd& p = out.positions;
    const Eigen::Index n = p.rows();

    if (cfg.flip) {
        for (int axis = 0; axis < 2; ++axis) {
            if (!rng.bernoulli(cfg.flip_prob)) continue;
            const double c = p.col(axis).mean();
            p.col(axis) = (2.0 * c - p.col(axis).array()).matrix();
        }
    }
    if (cfg.jitter && cfg.jitter_std > 0) {
        for (Eigen::Index i = 0; i < n; ++i)
            for (int d = 0; d < 3; ++d) p(i, d) += rng.normal(0.0, cfg.jitter_std);
    }
    if (cfg.elastic && cfg.elastic_magnitude > 0) {
        const Eigen::RowVector3d lo = p.colwise().minCoeff();
        const Eigen::RowVector3d hi = p.colwise().maxCoeff();
        const double g = cfg.elastic_granularity;
        int nodes[3];
        for (int d = 0; d < 3; ++d)
            nodes[d] = 2 + static_cast<int>(std::floor((hi[d] - lo[d]) / g));
        // Random displacement field at grid nodes, trilinearly interpolated.
        std::vector<Eigen::Vector3d> field(static_cast<std::size_t>(nodes[0] * nodes[1] * nodes[2]));
        for (auto& f : field)
            f = Eigen::Vector3d(rng.normal(0.0, cfg.elastic_magnitude),
                                rng.normal(0.0, cfg.elastic_magnitude),
                                rng.normal(0.0, cfg.elastic_magnitude));
        auto node = [&](int ix, int iy, int iz) -> const Eigen::Vector3d& {
            return field[static_cast<std::size_t>((ix * nodes[1] + iy) * nodes[2] + iz)];
        };
        for (Eigen::Index i = 0; i < n; ++i) {
            double u[3], w[3];
            int base[3];
            for (int d = 0; d < 3; ++d) {
                u[d] = std::clamp((p(i, d) - lo[d]) / g, 0.0, static_cast<double>(nodes[d] - 1) - 1e-9);
                base[d] = static_cast<int>(u[d]);
                w[d] = u[d] - base[d];
            }
            Eigen::Vector3d disp = Eigen::Vector3d::Zero();
            for (int dx = 0; dx < 2; ++dx)
                for (int dy = 0; dy < 2; ++dy)
                    for (int dz = 0; dz < 2; ++dz) {
                        const double wt = (dx ? w[0] : 1 - w[0]) * (dy ? w[1] : 1 - w[1]) *
                                          (dz ? w[2] : 1 - w[2]);
                        disp += wt * node(base[0] + dx, base[1] + dy, base[2] + dz);
                    }
            p.row(i) += disp.transpose();
        }
    }
    return out;
}

void ema_update(LabelerParams& teacher, const LabelerParams& student, double alpha) {
    std::vector<ad::Mat*> t;
    teacher.visit([&](std::string_view, ad::Mat& m) { t.push_back(&m); });
    std::vector<const ad::Mat*> s;
    student.visit([&](std::string_view, const ad::Mat& m) { s.push_back(&m); });
    if (t.size() != s.size()) throw ValidationError("ema_update: parameter count mismatch");
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i]->rows() != s[i]->rows() || t[i]->cols() != s[i]->cols())
            throw ValidationError("ema_update: parameter shape mismatch");
        *t[i] = alpha * (*t[i]) + (1.0 - alpha) * (*s[i]);
    }
}

MetricsLogger::MetricsLogger(const std::filesystem::path& path) {
    out_ = std::make_shared<std::ofstream>(path, std::ios::trunc);
    if (!*out_) throw IoError("metrics: cannot open for writing: " + path.string());
}

void MetricsLogger::log(const std::string& json_line) {
    if (out_) (*out_) << json_line << "\n";
}

std::vector<ad::Mat> collect_grads(const LabelerParams& params, const std::vector<ad::Var>& encoder_vars,
                                   const std::vector<ad::Var>& decoder_vars) {
    std::vector<ad::Mat> grads;
    grads.reserve(encoder_vars.size() + decoder_vars.size());
    auto take = [&grads](const std::vector<ad::Var>& vars) {
        for (const ad::Var& v : vars) {
            const ad::Mat& g = v.grad();
            grads.push_back(g.size() > 0 ? g : ad::Mat::Zero(v.rows(), v.cols()));
        }
    };
    take(encoder_vars);
    take(decoder_vars);
    if (grads.size() != params.encoder.block.items.size() + params.decoder.block.items.size())
        throw ValidationError("collect_grads: parameter count mismatch");
    return grads;
}

namespace {

double lr_at(const TrainConfig& cfg, long step, long total_steps) {
    if (cfg.lr_schedule == LrSchedule::Constant || total_steps <= 1) return cfg.lr;
    const double t = static_cast<double>(step) / static_cast<double>(total_steps);
    return cfg.lr * 0.5 * (1.0 + std::cos(M_PI * std::min(1.0, t)));
}

std::vector<int> shuffled_indices(std::size_t n, Prng& rng) {
    std::vector<int> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng.uniform_int(i);
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

void accumulate(std::vector<ad::Mat>& acc, const std::vector<ad::Mat>& g) {
    if (acc.empty()) {
        acc = g;
        return;
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

struct SampleResult {
    std::vector<ad::Mat> grads;
    double total = 0, a = 0, b = 0, c = 0, coverage = 0;
};

} // namespace

LabelerParams pretrain(const std::vector<TrainingSample>& corpus, const LabelerParams& init,
                       const TrainConfig& cfg, MetricsLogger log) {
    cfg.validate();
    if (corpus.empty()) throw ValidationError("pretrain: empty simulated corpus");
    for (const auto& s : corpus)
        if (!s.gt_instance) throw ValidationError("pretrain: sample '" + s.id + "' lacks ground truth");

    LabelerParams params = init;
    Adam opt(params);
    const long steps_per_epoch = static_cast<long>((corpus.size() + cfg.sim_batch - 1) / cfg.sim_batch);
    const long total_steps = steps_per_epoch * cfg.sim_epochs;
    long step = 0;

    for (int epoch = 0; epoch < cfg.sim_epochs; ++epoch) {
        Prng order_rng = Prng::stream(cfg.seed, 1000 + static_cast<std::uint64_t>(epoch));
        const std::vector<int> order = shuffled_indices(corpus.size(), order_rng);
        for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.sim_batch)) {
            const std::size_t bsz = std::min(static_cast<std::size_t>(cfg.sim_batch), order.size() - at);
            std::vector<SampleResult> results(bsz);
            std::exception_ptr err;
#pragma omp parallel for schedule(static)
            for (long bi = 0; bi < static_cast<long>(bsz); ++bi) {
                try {
                    const TrainingSample& sample = corpus[static_cast<std::size_t>(order[at + static_cast<std::size_t>(bi)])];
                    ad::Tape tape;
                    std::vector<ad::Var> evars, dvars;
                    const LabelerForward fwd =
                        labeler_forward(tape, sample, params, /*with_grad=*/true, &evars, &dvars);
                    const SimLoss loss = loss_sim(tape, fwd, sample, cfg.weights);
                    tape.backward(loss.total);
                    SampleResult& r = results[static_cast<std::size_t>(bi)];
                    r.grads = collect_grads(params, evars, dvars);
                    r.total = loss.total.val()(0, 0);
                    r.a = loss.l_cls.val()(0, 0);
                    r.b = loss.l_bce.val()(0, 0);
                    r.c = loss.l_dice.val()(0, 0);
                } catch (...) {
#pragma omp critical
                    if (!err) err = std::current_exception();
                }
            }
            if (err) std::rethrow_exception(err);

            std::vector<ad::Mat> acc;
            double lt = 0, lc = 0, lb = 0, ld = 0;
            for (const SampleResult& r : results) {
                accumulate(acc, r.grads);
                lt += r.total;
                lc += r.a;
                lb += r.b;
                ld += r.c;
            }
            const double inv = 1.0 / static_cast<double>(bsz);
            for (ad::Mat& g : acc) g *= inv;
            lt *= inv;
            lc *= inv;
            lb *= inv;
            ld *= inv;
            if (!std::isfinite(lt))
                throw TrainingDiverged("pretrain: loss is not finite at step " + std::to_string(step) +
                                       " (cls=" + std::to_string(lc) + " bce=" + std::to_string(lb) +
                                       " dice=" + std::to_string(ld) + ")");
            opt.step(params, acc, lr_at(cfg, step, total_steps));

            std::ostringstream line;
            line << "{\"phase\":\"pretrain\",\"step\":" << step << ",\"l_cls\":" << lc
                 << ",\"l_bce\":" << lb << ",\"l_dice\":" << ld << ",\"total\":" << lt << "}";
            log.log(line.str());
            ++step;
        }
    }
    return params;
}

LabelerParams finetune_smt(const LabelerParams& init, const std::vector<TrainingSample>& real_samples,
                           const TrainConfig& cfg, MetricsLogger log, FinetuneHooks hooks) {
    cfg.validate();
    if (real_samples.empty()) throw ValidationError("finetune: empty real-sample set");

    LabelerParams teacher = init;
    LabelerParams student = init;
    Adam opt(student);
    const long steps_per_epoch =
        static_cast<long>((real_samples.size() + cfg.real_batch - 1) / cfg.real_batch);
    const long total_steps = steps_per_epoch * cfg.real_epochs;
    long step = 0;

    if (hooks.on_eval) hooks.on_eval(0, teacher);

    for (int epoch = 0; epoch < cfg.real_epochs; ++epoch) {
        Prng order_rng = Prng::stream(cfg.seed, 2000 + static_cast<std::uint64_t>(epoch));
        const std::vector<int> order = shuffled_indices(real_samples.size(), order_rng);
        for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.real_batch)) {
            const std::size_t bsz = std::min(static_cast<std::size_t>(cfg.real_batch), order.size() - at);
            if (hooks.on_phase) hooks.on_phase("pre_step", step, teacher);

            std::vector<SampleResult> results(bsz);
            std::exception_ptr err;
#pragma omp parallel for schedule(static)
            for (long bi = 0; bi < static_cast<long>(bsz); ++bi) {
                try {
                    const int src = order[at + static_cast<std::size_t>(bi)];
                    const TrainingSample& original = real_samples[static_cast<std::size_t>(src)];

                    // Teacher forward on the unaugmented sample, values only.
                    ad::Tape teacher_tape;
                    const LabelerForward tfwd =
                        labeler_forward(teacher_tape, original, teacher, /*with_grad=*/false);
                    const Eigen::MatrixXd teacher_s3 = tfwd.s3_logits.val();

                    Prng aug_rng = Prng::stream(cfg.seed ^ 0xA0617ull,
                                                static_cast<std::uint64_t>(epoch) * real_samples.size() +
                                                    static_cast<std::uint64_t>(src));
                    const TrainingSample augmented = augment(original, cfg.augment, aug_rng);

                    ad::Tape tape;
                    std::vector<ad::Var> evars, dvars;
                    const LabelerForward sfwd =
                        labeler_forward(tape, augmented, student, /*with_grad=*/true, &evars, &dvars);
                    const RealLoss loss = loss_total_real(tape, sfwd, teacher_s3, augmented, cfg.weights);
                    tape.backward(loss.total);

                    SampleResult& r = results[static_cast<std::size_t>(bi)];
                    r.grads = collect_grads(student, evars, dvars);
                    r.total = loss.total.val()(0, 0);
                    r.a = loss.l_cls.val()(0, 0);
                    r.b = loss.sup.total.val()(0, 0);
                    r.c = loss.unsup.total.val()(0, 0);
                    r.coverage = loss.unsup.coverage;
                } catch (...) {
#pragma omp critical
                    if (!err) err = std::current_exception();
                }
            }
            if (err) std::rethrow_exception(err);

            std::vector<ad::Mat> acc;
            double lt = 0, lc = 0, ls = 0, lu = 0, cov = 0;
            for (const SampleResult& r : results) {
                accumulate(acc, r.grads);
                lt += r.total;
                lc += r.a;
                ls += r.b;
                lu += r.c;
                cov += r.coverage;
            }
            const double inv = 1.0 / static_cast<double>(bsz);
            for (ad::Mat& g : acc) g *= inv;
            lt *= inv;
            lc *= inv;
            ls *= inv;
            lu *= inv;
            cov *= inv;
            if (!std::isfinite(lt))
                throw TrainingDiverged("finetune: loss is not finite at step " + std::to_string(step));

            opt.step(student, acc, lr_at(cfg, step, total_steps));
            if (hooks.on_phase) hooks.on_phase("post_student_update", step, teacher);
            ema_update(teacher, student, cfg.ema_decay);
            if (hooks.on_phase) hooks.on_phase("post_ema", step, teacher);

            std::ostringstream line;
            line << "{\"phase\":\"finetune\",\"step\":" << step << ",\"l_cls\":" << lc
                 << ",\"l_sup\":" << ls << ",\"l_unsup\":" << lu << ",\"coverage\":" << cov
                 << ",\"total\":" << lt << "}";
            log.log(line.str());
            ++step;
            if (hooks.on_eval && hooks.eval_every > 0 && step % hooks.eval_every == 0)
                hooks.on_eval(step, teacher);
        }
    }
    if (hooks.on_eval && !(hooks.eval_every > 0 && step % hooks.eval_every == 0))
        hooks.on_eval(step, teacher);
    return teacher;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    ArrayContainer c;
    c.metadata()["format_version"] = kCheckpointVersion;
    c.metadata()["kind"] = "checkpoint";
    c.metadata()["step"] = std::to_string(ckpt.step);
    const std::string model_json = ckpt.params.cfg.to_json();
    c.metadata()["model_config"] = model_json;
    c.metadata()["train_config"] = ckpt.train_config_json;
    c.metadata()["config_hash"] =
        std::to_string(fnv1a(model_json + "\n" + ckpt.train_config_json));
    if (!ckpt.train_config_json.empty()) {
        const TrainConfig tc = TrainConfig::from_json(ckpt.train_config_json);
        c.metadata()["rng_state"] = "seed:" + std::to_string(tc.seed) + ";step:" + std::to_string(ckpt.step);
    } else {
        c.metadata()["rng_state"] = "seed:0;step:" + std::to_string(ckpt.step);
    }

    ckpt.params.encoder.block.visit(
        [&](std::string_view name, const ad::Mat& m) { put_matrix64(c, std::string(name), m); });
    ckpt.params.decoder.block.visit(
        [&](std::string_view name, const ad::Mat& m) { put_matrix64(c, std::string(name), m); });
    if (ckpt.optim) {
        c.metadata()["optim_t"] = std::to_string(ckpt.optim->t_);
        for (const auto& [name, m] : ckpt.optim->m) put_matrix64(c, "optim/m/" + name, m);
        for (const auto& [name, m] : ckpt.optim->v) put_matrix64(c, "optim/v/" + name, m);
    }
    c.save(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const ArrayContainer c = ArrayContainer::load(path);
    const std::string p = path.string();
    if (c.meta_or("kind", "") != "checkpoint")
        throw ParseError("checkpoint " + p + ": not a checkpoint file");
    if (c.meta_or("format_version", "") != kCheckpointVersion)
        throw ParseError("checkpoint " + p + ": unsupported format_version");

    Checkpoint out;
    const ModelConfig cfg = ModelConfig::from_json(c.meta_or("model_config", ""));
    out.params = LabelerParams::init(cfg);
    out.params.visit([&](std::string_view name, ad::Mat& m) {
        const std::string n(name);
        if (!c.has(n)) throw ParseError("checkpoint " + p + ": missing parameter '" + n + "'");
        const ad::Mat loaded = get_matrix64(c, n);
        if (loaded.rows() != m.rows() || loaded.cols() != m.cols())
            throw ParseError("checkpoint " + p + ": shape mismatch for '" + n + "'");
        m = loaded;
    });
    out.step = std::stol(c.meta_or("step", "0"));
    out.train_config_json = c.meta_or("train_config", "");
    if (c.metadata().contains("optim_t")) {
        Adam opt(out.params);
        opt.t_ = std::stol(c.meta_or("optim_t", "0"));
        for (auto& [name, m] : opt.m) m = get_matrix64(c, "optim/m/" + name);
        for (auto& [name, m] : opt.v) m = get_matrix64(c, "optim/v/" + name);
        out.optim = std::move(opt);
    }
    return out;
}

} // namespace boxlab
