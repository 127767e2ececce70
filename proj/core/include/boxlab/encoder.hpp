#pragma once

#include "boxlab/params.hpp"
#include "boxlab/rng.hpp"
#include "boxlab/sample.hpp"

namespace boxlab {

struct EncoderConfig {
    enum class Preset { Toy, Paper };

    Preset preset = Preset::Toy;
    int channels = 32;          // C
    double toy_agg_voxel = 0.1; // neighborhood cell of the toy preset, meters
    double paper_voxel = 0.02;  // finest voxel of the 3-level preset, meters

    static EncoderConfig toy(int channels = 32);
    static EncoderConfig paper(int channels = 32);
};

struct EncoderParams {
    EncoderConfig cfg;
    ParamBlock block;

    static EncoderParams init(const EncoderConfig& cfg, Prng& rng);
};

// Point features plus superpoint features pooled by arithmetic mean in
// ascending point order; region_split indexes F_sup rows per region.
struct FeatureSet {
    ad::Var point_features;      // N x C
    ad::Var superpoint_features; // P x C
    std::vector<int> sp_s1, sp_s2, sp_s3;
};

// Builds the feature graph on `tape`. Inputs are (x,y,z,r,g,b) with
// coordinates centered on the sample centroid; voxel structures are built
// from the centered coordinates so a whole-sample translation changes
// nothing. `params_on_tape` holds the parameter Vars in block order.
FeatureSet encode(ad::Tape& tape, const TrainingSample& sample, const EncoderParams& params,
                  const std::vector<ad::Var>& params_on_tape);

/// Convenience: params as constants on a fresh region of `tape`.
FeatureSet encode(ad::Tape& tape, const TrainingSample& sample, const EncoderParams& params,
                  bool with_grad = false);

/// Puts every parameter on the tape (leaf when with_grad, constant otherwise).
std::vector<ad::Var> params_to_tape(ad::Tape& tape, const ParamBlock& block, bool with_grad);

} // namespace boxlab
