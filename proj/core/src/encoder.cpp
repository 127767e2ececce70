#include "boxlab/encoder.hpp"

#include <cmath>

namespace boxlab {

EncoderConfig EncoderConfig::toy(int channels) {
    EncoderConfig c;
    c.preset = Preset::Toy;
    c.channels = channels;
    return c;
}

EncoderConfig EncoderConfig::paper(int channels) {
    EncoderConfig c;
    c.preset = Preset::Paper;
    c.channels = channels;
    return c;
}

namespace {

ad::Mat he_init(Eigen::Index rows, Eigen::Index cols, Prng& rng) {
    const double std = std::sqrt(2.0 / static_cast<double>(rows));
    ad::Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = std * rng.normal();
    return m;
}

void add_linear(ParamBlock& b, const std::string& name, Eigen::Index in, Eigen::Index out, Prng& rng) {
    b.add(name + "/w", he_init(in, out, rng));
    b.add(name + "/b", ad::Mat::Zero(1, out));
}

struct TapeParams {
    const ParamBlock* block;
    const std::vector<ad::Var>* vars;

    ad::Var at(std::string_view name) const {
        for (std::size_t i = 0; i < block->items.size(); ++i)
            if (block->items[i].first == name) return (*vars)[i];
        throw ValidationError("encoder: unknown parameter '" + std::string(name) + "'");
    }
};

ad::Var linear_relu(ad::Tape& t, ad::Var x, const TapeParams& p, const std::string& name) {
    return t.relu(t.add_rowvec(t.matmul(x, p.at(name + "/w")), p.at(name + "/b")));
}

} // namespace

std::vector<ad::Var> params_to_tape(ad::Tape& tape, const ParamBlock& block, bool with_grad) {
    std::vector<ad::Var> vars;
    vars.reserve(block.items.size());
    for (const auto& [name, mat] : block.items)
        vars.push_back(with_grad ? tape.leaf(mat) : tape.constant(mat));
    return vars;
}

EncoderParams EncoderParams::init(const EncoderConfig& cfg, Prng& rng) {
    EncoderParams p;
    p.cfg = cfg;
    const int c = cfg.channels;
    switch (cfg.preset) {
    case EncoderConfig::Preset::Toy:
        add_linear(p.block, "enc/point1", 6, c, rng);
        add_linear(p.block, "enc/point2", c, c, rng);
        add_linear(p.block, "enc/mix", 2 * c, c, rng);
        break;
    case EncoderConfig::Preset::Paper:
        add_linear(p.block, "enc/stem", 6, c, rng);
        add_linear(p.block, "enc/down0", c, c, rng);
        add_linear(p.block, "enc/down1", c, c, rng);
        add_linear(p.block, "enc/down2", c, c, rng);
        add_linear(p.block, "enc/up1", 2 * c, c, rng);
        add_linear(p.block, "enc/up0", 2 * c, c, rng);
        add_linear(p.block, "enc/point", 2 * c, c, rng);
        break;
    }
    return p;
}

FeatureSet encode(ad::Tape& tape, const TrainingSample& sample, const EncoderParams& params,
                  const std::vector<ad::Var>& params_on_tape) {
    sample.validate();
    const TapeParams p{&params.block, &params_on_tape};
    const Eigen::Index n = sample.positions.rows();

    // Center coordinates on the sample centroid; colors pass through.
    const Eigen::RowVector3d centroid = sample.positions.colwise().mean();
    Eigen::MatrixXd centered = sample.positions.rowwise() - centroid;
    ad::Mat input(n, 6);
    input << centered, sample.colors;
    ad::Var x = tape.constant(std::move(input));

    ad::Var point_features;
    if (params.cfg.preset == EncoderConfig::Preset::Toy) {
        ad::Var h = linear_relu(tape, x, p, "enc/point1");
        h = linear_relu(tape, h, p, "enc/point2");
        auto [p2v, nv] = voxel_clusters(centered, params.cfg.toy_agg_voxel);
        ad::Var pooled = tape.group_mean_rows(h, p2v, nv);
        ad::Var ctx = tape.gather_rows(pooled, p2v);
        point_features = linear_relu(tape, tape.hstack(h, ctx), p, "enc/mix");
    } else {
        // 3-level sparse-voxel U: pool down twice from the finest grid, then
        // broadcast back up with skip connections.
        const double h0 = params.cfg.paper_voxel;
        auto [p2v0, n0] = voxel_clusters(centered, h0);
        auto [p2v1, n1] = voxel_clusters(centered, 2 * h0);
        auto [p2v2, n2] = voxel_clusters(centered, 4 * h0);
        std::vector<int> v0_to_v1(static_cast<std::size_t>(n0), -1);
        std::vector<int> v1_to_v2(static_cast<std::size_t>(n1), -1);
        for (Eigen::Index i = 0; i < n; ++i) {
            v0_to_v1[static_cast<std::size_t>(p2v0[static_cast<std::size_t>(i)])] =
                p2v1[static_cast<std::size_t>(i)];
            v1_to_v2[static_cast<std::size_t>(p2v1[static_cast<std::size_t>(i)])] =
                p2v2[static_cast<std::size_t>(i)];
        }

        ad::Var stem = linear_relu(tape, x, p, "enc/stem");
        ad::Var b0 = linear_relu(tape, tape.group_mean_rows(stem, p2v0, n0), p, "enc/down0");
        ad::Var b1 = linear_relu(tape, tape.group_mean_rows(b0, v0_to_v1, n1), p, "enc/down1");
        ad::Var b2 = linear_relu(tape, tape.group_mean_rows(b1, v1_to_v2, n2), p, "enc/down2");
        ad::Var u1 = linear_relu(tape, tape.hstack(b1, tape.gather_rows(b2, v1_to_v2)), p, "enc/up1");
        ad::Var u0 = linear_relu(tape, tape.hstack(b0, tape.gather_rows(u1, v0_to_v1)), p, "enc/up0");
        point_features = linear_relu(tape, tape.hstack(stem, tape.gather_rows(u0, p2v0)), p, "enc/point");
    }

    FeatureSet fs;
    fs.point_features = point_features;
    fs.superpoint_features = tape.group_mean_rows(point_features, sample.superpoint, sample.n_superpoints);
    fs.sp_s1 = sample.superpoints_in(Region::S1);
    fs.sp_s2 = sample.superpoints_in(Region::S2);
    fs.sp_s3 = sample.superpoints_in(Region::S3);
    return fs;
}

FeatureSet encode(ad::Tape& tape, const TrainingSample& sample, const EncoderParams& params,
                  bool with_grad) {
    const std::vector<ad::Var> vars = params_to_tape(tape, params.block, with_grad);
    return encode(tape, sample, params, vars);
}

} // namespace boxlab
