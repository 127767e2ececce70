#pragma once

#include <cstdint>

#include "boxlab/decoder.hpp"

namespace boxlab {

struct ModelConfig {
    EncoderConfig encoder;
    DecoderConfig decoder;
    std::uint64_t init_seed = 1;

    void validate() const;
    std::string to_json() const;
    static ModelConfig from_json(const std::string& text);
};

// Full labeler: encoder + decoder parameters. Teacher and student are two
// instances of this struct with identical shapes.
struct LabelerParams {
    ModelConfig cfg;
    EncoderParams encoder;
    DecoderParams decoder;

    static LabelerParams init(const ModelConfig& cfg);

    template <class F>
    void visit(F&& f) {
        encoder.block.visit(f);
        decoder.block.visit(f);
    }
    template <class F>
    void visit(F&& f) const {
        encoder.block.visit(f);
        decoder.block.visit(f);
    }

    std::size_t scalar_count() const {
        return encoder.block.scalar_count() + decoder.block.scalar_count();
    }
    /// FNV-1a over all parameter bytes in visit order.
    std::uint64_t param_hash() const;
};

// One forward pass worth of tape nodes. Mask logits are query/feature dot
// products: S1/S2 columns use the local-stage features, S3 columns the
// global-stage contextual features.
struct LabelerForward {
    ad::Var queries;            // 2 x C
    ad::Var s3_logits;          // 2 x |S3 sps|
    ad::Var nonoverlap_logits;  // 2 x (|S1 sps| + |S2 sps|), S1 columns first
    ad::Var all_logits;         // 2 x (S1+S2+S3), column order S1, S2, S3
    ad::Var class_logits;       // 2 x (num_categories + 1)
    std::vector<int> sp_s1, sp_s2, sp_s3; // superpoint ids per column group
};

LabelerForward labeler_forward(ad::Tape& tape, const TrainingSample& sample,
                               const LabelerParams& params, bool with_grad,
                               std::vector<ad::Var>* encoder_vars = nullptr,
                               std::vector<ad::Var>* decoder_vars = nullptr);

// Inference result with superpoint decisions broadcast to points.
struct SamplePrediction {
    std::vector<int> sp_s3;                     // superpoint ids, column order
    Eigen::MatrixXd s3_sp_conf;                 // 2 x |S3 sps|, sigmoids
    std::vector<Region3Label> s3_sp_labels;     // per S3 superpoint
    std::vector<Region3Label> s3_point_labels;  // per S3 point, points_in(S3) order
    Eigen::MatrixXd class_logits;
};

SamplePrediction predict_sample(const LabelerParams& params, const TrainingSample& sample);

} // namespace boxlab
