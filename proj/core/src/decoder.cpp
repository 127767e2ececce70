#include "boxlab/decoder.hpp"

#include <cmath>

namespace boxlab {

namespace {

ad::Mat normal_init(Eigen::Index rows, Eigen::Index cols, double std, Prng& rng) {
    ad::Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = std * rng.normal();
    return m;
}

void add_block(ParamBlock& b, const std::string& prefix, const DecoderConfig& cfg, Prng& rng) {
    const int c = cfg.channels, h = cfg.ffn_hidden;
    const double attn_std = std::sqrt(1.0 / c);
    b.add(prefix + "/wq", normal_init(c, c, attn_std, rng));
    b.add(prefix + "/wk", normal_init(c, c, attn_std, rng));
    b.add(prefix + "/wv", normal_init(c, c, attn_std, rng));
    b.add(prefix + "/ffn1/w", normal_init(c, h, std::sqrt(2.0 / c), rng));
    b.add(prefix + "/ffn1/b", ad::Mat::Zero(1, h));
    b.add(prefix + "/ffn2/w", normal_init(h, c, std::sqrt(2.0 / h), rng));
    b.add(prefix + "/ffn2/b", ad::Mat::Zero(1, c));
}

struct TapeParams {
    const ParamBlock* block;
    const std::vector<ad::Var>* vars;

    ad::Var at(std::string_view name) const {
        for (std::size_t i = 0; i < block->items.size(); ++i)
            if (block->items[i].first == name) return (*vars)[i];
        throw ValidationError("decoder: unknown parameter '" + std::string(name) + "'");
    }
};

ad::Var feed_forward(ad::Tape& t, ad::Var x, const TapeParams& p, const std::string& prefix) {
    ad::Var h = t.relu(t.add_rowvec(t.matmul(x, p.at(prefix + "/ffn1/w")), p.at(prefix + "/ffn1/b")));
    return t.add_rowvec(t.matmul(h, p.at(prefix + "/ffn2/w")), p.at(prefix + "/ffn2/b"));
}

ad::Var attn_ffn(ad::Tape& t, ad::Var x, const TapeParams& p, const std::string& prefix, int n_heads) {
    ad::Var a = self_attention(t, x, p.at(prefix + "/wq"), p.at(prefix + "/wk"), p.at(prefix + "/wv"),
                               n_heads);
    return feed_forward(t, a, p, prefix);
}

} // namespace

DecoderParams DecoderParams::init(const DecoderConfig& cfg, Prng& rng) {
    if (cfg.channels % cfg.n_heads != 0)
        throw ValidationError("decoder: channels must be divisible by n_heads");
    DecoderParams p;
    p.cfg = cfg;
    p.block.add("dec/q1", normal_init(1, cfg.channels, cfg.query_init_std, rng));
    p.block.add("dec/q2", normal_init(1, cfg.channels, cfg.query_init_std, rng));
    for (int i = 0; i < cfg.n_local; ++i) add_block(p.block, "dec/local" + std::to_string(i), cfg, rng);
    for (int i = 0; i < cfg.n_global; ++i) add_block(p.block, "dec/global" + std::to_string(i), cfg, rng);
    p.block.add("dec/cls/w",
                normal_init(cfg.channels, cfg.class_logits_dim(), std::sqrt(1.0 / cfg.channels), rng));
    p.block.add("dec/cls/b", ad::Mat::Zero(1, cfg.class_logits_dim()));
    return p;
}

ad::Var self_attention(ad::Tape& tape, ad::Var x, ad::Var wq, ad::Var wk, ad::Var wv, int n_heads) {
    const Eigen::Index c = wq.cols();
    if (c % n_heads != 0) throw ValidationError("self_attention: channels not divisible by heads");
    const Eigen::Index ch = c / n_heads;
    ad::Var q = tape.matmul(x, wq);
    ad::Var k = tape.matmul(x, wk);
    ad::Var v = tape.matmul(x, wv);
    ad::Var out;
    for (int h = 0; h < n_heads; ++h) {
        ad::Var qh = n_heads == 1 ? q : tape.cols(q, h * ch, ch);
        ad::Var kh = n_heads == 1 ? k : tape.cols(k, h * ch, ch);
        ad::Var vh = n_heads == 1 ? v : tape.cols(v, h * ch, ch);
        ad::Var scores = tape.scale(tape.matmul_nt(qh, kh), 1.0 / std::sqrt(static_cast<double>(ch)));
        ad::Var head = tape.matmul(tape.softmax_rows(scores), vh);
        out = h == 0 ? head : tape.hstack(out, head);
    }
    return out;
}

std::pair<ad::Var, ad::Var> local_structure_attention(ad::Tape& tape, ad::Var f_sup1, ad::Var f_sup2,
                                                      ad::Var q1, ad::Var q2,
                                                      const DecoderParams& params,
                                                      const std::vector<ad::Var>& params_on_tape) {
    const TapeParams p{&params.block, &params_on_tape};
    ad::Var x1 = tape.vstack({f_sup1, q1});
    ad::Var x2 = tape.vstack({f_sup2, q2});
    for (int i = 0; i < params.cfg.n_local; ++i) {
        const std::string prefix = "dec/local" + std::to_string(i);
        x1 = attn_ffn(tape, x1, p, prefix, params.cfg.n_heads);
        x2 = attn_ffn(tape, x2, p, prefix, params.cfg.n_heads);
    }
    return {x1, x2};
}

GlobalOut global_context_attention(ad::Tape& tape, ad::Var f1_with_q, ad::Var f2_with_q,
                                   ad::Var f_sup3, const DecoderParams& params,
                                   const std::vector<ad::Var>& params_on_tape) {
    const TapeParams p{&params.block, &params_on_tape};
    const Eigen::Index n1 = f1_with_q.rows() - 1;
    const Eigen::Index n2 = f2_with_q.rows() - 1;
    const Eigen::Index n3 = f_sup3.rows();
    ad::Var x = tape.vstack({f1_with_q, f2_with_q, f_sup3});
    for (int i = 0; i < params.cfg.n_global; ++i)
        x = attn_ffn(tape, x, p, "dec/global" + std::to_string(i), params.cfg.n_heads);

    GlobalOut out;
    out.queries = tape.vstack({tape.rows(x, n1, 1), tape.rows(x, n1 + 1 + n2, 1)});
    out.ctx_s3 = tape.rows(x, n1 + n2 + 2, n3);
    return out;
}

ad::Var predict_mask_logits(ad::Tape& tape, ad::Var queries, ad::Var feats3) {
    return tape.matmul_nt(queries, feats3);
}

DecoderOutput decode(ad::Tape& tape, const FeatureSet& features, const DecoderParams& params,
                     const std::vector<ad::Var>& params_on_tape) {
    const TapeParams p{&params.block, &params_on_tape};
    ad::Var f1 = tape.gather_rows(features.superpoint_features, features.sp_s1);
    ad::Var f2 = tape.gather_rows(features.superpoint_features, features.sp_s2);
    ad::Var f3 = tape.gather_rows(features.superpoint_features, features.sp_s3);

    auto [x1, x2] = local_structure_attention(tape, f1, f2, p.at("dec/q1"), p.at("dec/q2"), params,
                                              params_on_tape);
    GlobalOut glob = global_context_attention(tape, x1, x2, f3, params, params_on_tape);
    ad::Var logits = predict_mask_logits(tape, glob.queries, glob.ctx_s3);
    ad::Var cls = tape.add_rowvec(tape.matmul(glob.queries, p.at("dec/cls/w")), p.at("dec/cls/b"));

    DecoderOutput out;
    out.mask_logits = logits.val();
    out.class_logits = cls.val();
    out.queries = glob.queries.val();
    out.m1.resize(static_cast<std::size_t>(out.mask_logits.cols()));
    out.m2.resize(static_cast<std::size_t>(out.mask_logits.cols()));
    for (Eigen::Index j = 0; j < out.mask_logits.cols(); ++j) {
        // Sigmoid(logit) > 0.5 strictly, i.e. logit > 0.
        out.m1[static_cast<std::size_t>(j)] = out.mask_logits(0, j) > 0.0;
        out.m2[static_cast<std::size_t>(j)] = out.mask_logits(1, j) > 0.0;
    }
    return out;
}

DecoderOutput decode(ad::Tape& tape, const FeatureSet& features, const DecoderParams& params) {
    const std::vector<ad::Var> vars = params_to_tape(tape, params.block, false);
    return decode(tape, features, params, vars);
}

std::vector<Region3Label> trichotomy_labels(const Eigen::MatrixXd& mask_logits) {
    std::vector<Region3Label> out(static_cast<std::size_t>(mask_logits.cols()));
    for (Eigen::Index j = 0; j < mask_logits.cols(); ++j) {
        const bool m1 = mask_logits(0, j) > 0.0;
        const bool m2 = mask_logits(1, j) > 0.0;
        Region3Label lbl;
        if (m1 && m2)
            lbl = mask_logits(0, j) >= mask_logits(1, j) ? Region3Label::A : Region3Label::B;
        else if (m1)
            lbl = Region3Label::A;
        else if (m2)
            lbl = Region3Label::B;
        else
            lbl = Region3Label::BG;
        out[static_cast<std::size_t>(j)] = lbl;
    }
    return out;
}

} // namespace boxlab
