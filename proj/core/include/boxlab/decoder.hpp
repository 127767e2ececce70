#pragma once

#include "boxlab/encoder.hpp"

namespace boxlab {

struct DecoderConfig {
    int channels = 32;
    int ffn_hidden = 64;
    int n_local = 1;  // local-structure attention blocks
    int n_global = 1; // global-context attention blocks
    int n_heads = 1;  // single-head matches the headless attention equation
    int num_categories = 1;
    double query_init_std = 0.02;

    int class_logits_dim() const { return num_categories + 1; } // + no-object
};

// Two learnable foreground queries, per-layer attention projections and
// feed-forward weights, and the class head.
struct DecoderParams {
    DecoderConfig cfg;
    ParamBlock block;

    static DecoderParams init(const DecoderConfig& cfg, Prng& rng);
};

/// Eq.-style self-attention: Softmax(Q K^T / sqrt(C)) V with Q = X Wq etc.
/// With n_heads > 1, heads act on column slices and are re-concatenated.
ad::Var self_attention(ad::Tape& tape, ad::Var x, ad::Var wq, ad::Var wk, ad::Var wv, int n_heads);

// Local stage: each region's superpoint features with its query appended as
// the last row, run separately through shared attention + feed-forward
// blocks. No information crosses between the two regions here.
std::pair<ad::Var, ad::Var> local_structure_attention(ad::Tape& tape, ad::Var f_sup1, ad::Var f_sup2,
                                                      ad::Var q1, ad::Var q2,
                                                      const DecoderParams& params,
                                                      const std::vector<ad::Var>& params_on_tape);

struct GlobalOut {
    ad::Var queries; // 2 x C, updated
    ad::Var ctx_s3;  // |S3| x C, contextual overlap features
};

/// Joint attention + feed-forward over [F''_v1 ; F''_v2 ; F_sup3].
GlobalOut global_context_attention(ad::Tape& tape, ad::Var f1_with_q, ad::Var f2_with_q,
                                   ad::Var f_sup3, const DecoderParams& params,
                                   const std::vector<ad::Var>& params_on_tape);

/// Mask logits as query / feature dot products: logits[i][j] = <Q_i, F3_j>.
ad::Var predict_mask_logits(ad::Tape& tape, ad::Var queries, ad::Var feats3);

struct DecoderOutput {
    Eigen::MatrixXd mask_logits;  // 2 x |S3|
    std::vector<char> m1, m2;     // sigmoid(logit) > 0.5, strict
    Eigen::MatrixXd class_logits; // 2 x (num_categories + 1)
    Eigen::MatrixXd queries;      // 2 x C
};

/// local -> global -> mask prediction on the S3 superpoints.
DecoderOutput decode(ad::Tape& tape, const FeatureSet& features, const DecoderParams& params,
                     const std::vector<ad::Var>& params_on_tape);
DecoderOutput decode(ad::Tape& tape, const FeatureSet& features, const DecoderParams& params);

// Every overlap superpoint gets exactly one of {A, B, BG}: a lone activated
// mask wins, both activated goes to the larger sigmoid, neither is background.
std::vector<Region3Label> trichotomy_labels(const Eigen::MatrixXd& mask_logits);

} // namespace boxlab
