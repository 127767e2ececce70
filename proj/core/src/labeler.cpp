#include "boxlab/labeler.hpp"

#include <unordered_map>

#include <nlohmann/json.hpp>

namespace boxlab {

void ModelConfig::validate() const {
    if (encoder.channels != decoder.channels)
        throw ValidationError("model config: encoder/decoder channel width mismatch");
    if (decoder.num_categories < 1) throw ValidationError("model config: num_categories must be >= 1");
    if (decoder.n_local < 1 || decoder.n_global < 1)
        throw ValidationError("model config: layer counts must be >= 1");
}

std::string ModelConfig::to_json() const {
    nlohmann::json j;
    j["encoder"] = {{"preset", encoder.preset == EncoderConfig::Preset::Toy ? "toy" : "paper"},
                    {"channels", encoder.channels},
                    {"toy_agg_voxel", encoder.toy_agg_voxel},
                    {"paper_voxel", encoder.paper_voxel}};
    j["decoder"] = {{"channels", decoder.channels},
                    {"ffn_hidden", decoder.ffn_hidden},
                    {"n_local", decoder.n_local},
                    {"n_global", decoder.n_global},
                    {"n_heads", decoder.n_heads},
                    {"num_categories", decoder.num_categories},
                    {"query_init_std", decoder.query_init_std}};
    j["init_seed"] = init_seed;
    return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model config: invalid JSON: ") + e.what());
    }
    ModelConfig c;
    const auto& e = j.at("encoder");
    c.encoder.preset = e.at("preset").get<std::string>() == "paper" ? EncoderConfig::Preset::Paper
                                                                    : EncoderConfig::Preset::Toy;
    c.encoder.channels = e.at("channels").get<int>();
    c.encoder.toy_agg_voxel = e.at("toy_agg_voxel").get<double>();
    c.encoder.paper_voxel = e.at("paper_voxel").get<double>();
    const auto& d = j.at("decoder");
    c.decoder.channels = d.at("channels").get<int>();
    c.decoder.ffn_hidden = d.at("ffn_hidden").get<int>();
    c.decoder.n_local = d.at("n_local").get<int>();
    c.decoder.n_global = d.at("n_global").get<int>();
    c.decoder.n_heads = d.at("n_heads").get<int>();
    c.decoder.num_categories = d.at("num_categories").get<int>();
    c.decoder.query_init_std = d.at("query_init_std").get<double>();
    c.init_seed = j.at("init_seed").get<std::uint64_t>();
    c.validate();
    return c;
}

LabelerParams LabelerParams::init(const ModelConfig& cfg) {
    cfg.validate();
    LabelerParams p;
    p.cfg = cfg;
    Prng enc_rng = Prng::stream(cfg.init_seed, 11);
    Prng dec_rng = Prng::stream(cfg.init_seed, 13);
    p.encoder = EncoderParams::init(cfg.encoder, enc_rng);
    p.decoder = DecoderParams::init(cfg.decoder, dec_rng);
    return p;
}

std::uint64_t LabelerParams::param_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    visit([&h](std::string_view, const ad::Mat& m) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
        for (std::size_t i = 0; i < static_cast<std::size_t>(m.size()) * sizeof(double); ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ull;
        }
    });
    return h;
}

LabelerForward labeler_forward(ad::Tape& tape, const TrainingSample& sample,
                               const LabelerParams& params, bool with_grad,
                               std::vector<ad::Var>* encoder_vars,
                               std::vector<ad::Var>* decoder_vars) {
    std::vector<ad::Var> evars = params_to_tape(tape, params.encoder.block, with_grad);
    std::vector<ad::Var> dvars = params_to_tape(tape, params.decoder.block, with_grad);

    const FeatureSet fs = encode(tape, sample, params.encoder, evars);
    ad::Var f1 = tape.gather_rows(fs.superpoint_features, fs.sp_s1);
    ad::Var f2 = tape.gather_rows(fs.superpoint_features, fs.sp_s2);
    ad::Var f3 = tape.gather_rows(fs.superpoint_features, fs.sp_s3);

    auto dvar_at = [&](std::string_view name) {
        for (std::size_t i = 0; i < params.decoder.block.items.size(); ++i)
            if (params.decoder.block.items[i].first == name) return dvars[i];
        throw ValidationError("labeler: unknown decoder parameter");
    };

    auto [x1, x2] = local_structure_attention(tape, f1, f2, dvar_at("dec/q1"), dvar_at("dec/q2"),
                                              params.decoder, dvars);
    GlobalOut glob = global_context_attention(tape, x1, x2, f3, params.decoder, dvars);

    const Eigen::Index n1 = static_cast<Eigen::Index>(fs.sp_s1.size());
    const Eigen::Index n2 = static_cast<Eigen::Index>(fs.sp_s2.size());
    ad::Var s1_feats = tape.rows(x1, 0, n1);
    ad::Var s2_feats = tape.rows(x2, 0, n2);

    LabelerForward out;
    out.queries = glob.queries;
    out.s3_logits = predict_mask_logits(tape, glob.queries, glob.ctx_s3);
    out.nonoverlap_logits = predict_mask_logits(tape, glob.queries, tape.vstack({s1_feats, s2_feats}));
    out.all_logits = tape.hstack(out.nonoverlap_logits, out.s3_logits);
    out.class_logits =
        tape.add_rowvec(tape.matmul(glob.queries, dvar_at("dec/cls/w")), dvar_at("dec/cls/b"));
    out.sp_s1 = fs.sp_s1;
    out.sp_s2 = fs.sp_s2;
    out.sp_s3 = fs.sp_s3;
    if (encoder_vars) *encoder_vars = std::move(evars);
    if (decoder_vars) *decoder_vars = std::move(dvars);
    return out;
}

SamplePrediction predict_sample(const LabelerParams& params, const TrainingSample& sample) {
    ad::Tape tape;
    const LabelerForward fwd = labeler_forward(tape, sample, params, /*with_grad=*/false);

    SamplePrediction pred;
    pred.sp_s3 = fwd.sp_s3;
    const Eigen::MatrixXd logits = fwd.s3_logits.val();
    pred.s3_sp_conf.resize(2, logits.cols());
    for (Eigen::Index i = 0; i < 2; ++i)
        for (Eigen::Index j = 0; j < logits.cols(); ++j)
            pred.s3_sp_conf(i, j) = 1.0 / (1.0 + std::exp(-logits(i, j)));
    pred.s3_sp_labels = trichotomy_labels(logits);
    pred.class_logits = fwd.class_logits.val();

    std::unordered_map<int, int> sp_to_col;
    for (std::size_t c = 0; c < fwd.sp_s3.size(); ++c) sp_to_col[fwd.sp_s3[c]] = static_cast<int>(c);
    for (int pt : sample.points_in(Region::S3)) {
        const int col = sp_to_col.at(sample.superpoint[static_cast<std::size_t>(pt)]);
        pred.s3_point_labels.push_back(pred.s3_sp_labels[static_cast<std::size_t>(col)]);
    }
    return pred;
}

} // namespace boxlab
