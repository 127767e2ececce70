#include "boxlab/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "boxlab/errors.hpp"

namespace boxlab {

void SimConfig::validate() const {
    if (retry_limit < 1) throw ValidationError("sim config: retry_limit must be >= 1");
    if (floor_point_rate < 0) throw ValidationError("sim config: floor_point_rate must be >= 0");
    for (double v : {floor_margin, gravity_eps, collision_voxel, superpoint_edge})
        if (!(v > 0)) throw ValidationError("sim config: distances must be positive");
}

PairDraw sample_pair(const PairStats& stats, const ObjectBank& bank, Prng& rng) {
    if (stats.empty()) throw SimExhausted("sample_pair: empty pair stats");

    struct Cand {
        PairKey key;
        const PairStatsEntry* entry;
    };
    std::vector<Cand> cands;
    long total_n = 0;
    for (const auto& [key, e] : stats.entries()) {
        if (e.n <= 0) continue;
        if (bank.of_category(key.lo).empty() || bank.of_category(key.hi).empty()) continue;
        cands.push_back({key, &e});
        total_n += e.n;
    }
    if (cands.empty())
        throw SimExhausted("sample_pair: no category pair in the stats can be served from the bank");

    long r = static_cast<long>(rng.uniform_int(static_cast<std::uint64_t>(total_n)));
    const Cand* picked = &cands.back();
    for (const Cand& c : cands) {
        if (r < c.entry->n) {
            picked = &c;
            break;
        }
        r -= c.entry->n;
    }

    PairDraw draw;
    draw.cat_a = picked->key.lo;
    draw.cat_b = picked->key.hi;
    draw.mean = picked->entry->mean_dist;
    draw.std = picked->entry->std_dist;
    const std::vector<int> pool_a = bank.of_category(draw.cat_a);
    const std::vector<int> pool_b = bank.of_category(draw.cat_b);
    draw.obj_a = pool_a[rng.uniform_int(pool_a.size())];
    draw.obj_b = pool_b[rng.uniform_int(pool_b.size())];

    // Truncated normal: resample while d <= 0.
    for (int tries = 0; tries < 10000; ++tries) {
        const double d = rng.normal(draw.mean, draw.std);
        if (d > 0) {
            draw.distance = d;
            return draw;
        }
    }
    throw SimExhausted("sample_pair: could not draw a positive distance");
}

SampleDraft place_pair(const BankObject& a, const BankObject& b, double d, Axis axis) {
    SampleDraft draft;
    draft.cat_a = a.category;
    draft.cat_b = b.category;
    draft.pos_a = a.positions.rowwise() - a.tight.center.transpose();
    draft.col_a = a.colors;
    Vec3 offset = Vec3::Zero();
    switch (axis) {
    case Axis::PosX: offset.x() = d; break;
    case Axis::NegX: offset.x() = -d; break;
    case Axis::PosY: offset.y() = d; break;
    case Axis::NegY: offset.y() = -d; break;
    }
    draft.pos_b = (b.positions.rowwise() - b.tight.center.transpose()).rowwise() + offset.transpose();
    draft.col_b = b.colors;
    draft.floor_z = std::min(draft.pos_a.col(2).minCoeff(), draft.pos_b.col(2).minCoeff());
    return draft;
}

void apply_gravity(SampleDraft& draft) {
    const double floor_z = std::min(draft.pos_a.col(2).minCoeff(), draft.pos_b.col(2).minCoeff());
    draft.pos_a.col(2).array() -= draft.pos_a.col(2).minCoeff() - floor_z;
    draft.pos_b.col(2).array() -= draft.pos_b.col(2).minCoeff() - floor_z;
    draft.floor_z = floor_z;
}

namespace {

std::unordered_set<VoxelKey, VoxelKeyHash> voxel_set(const Eigen::MatrixXd& pos, double voxel) {
    std::unordered_set<VoxelKey, VoxelKeyHash> out;
    for (Eigen::Index i = 0; i < pos.rows(); ++i) out.insert(voxel_of(pos.row(i).transpose(), voxel));
    return out;
}

int co_occupied_count(const Eigen::MatrixXd& pa, const Eigen::MatrixXd& pb, double voxel) {
    const auto occ_a = voxel_set(pa, voxel);
    std::unordered_set<VoxelKey, VoxelKeyHash> hits;
    for (Eigen::Index i = 0; i < pb.rows(); ++i) {
        const VoxelKey k = voxel_of(pb.row(i).transpose(), voxel);
        if (occ_a.contains(k)) hits.insert(k);
    }
    return static_cast<int>(hits.size());
}

struct Rect {
    double x0, y0, x1, y1;
    double area() const { return std::max(0.0, x1 - x0) * std::max(0.0, y1 - y0); }
    bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

Rect footprint(const BBox3D& box, double margin) {
    return Rect{box.min().x() - margin, box.min().y() - margin, box.max().x() + margin,
                box.max().y() + margin};
}

double union_area(const Rect& a, const Rect& b) {
    const Rect inter{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1),
                     std::min(a.y1, b.y1)};
    return a.area() + b.area() - inter.area();
}

} // namespace

bool collision_free(const SampleDraft& draft, double voxel) {
    return co_occupied_count(draft.pos_a, draft.pos_b, voxel) == 0;
}

ComposeResult compose_sample(const BankObject& a, const BankObject& b, double d_first, double mean,
                             double stddev, const SimConfig& cfg, Prng& rng, GenManifest* manifest) {
    cfg.validate();
    double d = d_first;
    std::string last_reason = "no attempt made";
    for (int attempt = 1; attempt <= cfg.retry_limit; ++attempt) {
        if (manifest) ++manifest->attempts;
        const Axis axis = static_cast<Axis>(rng.uniform_int(4));
        SampleDraft draft = place_pair(a, b, d, axis);
        if (cfg.gravity_on) apply_gravity(draft);

        bool ok = true;
        if (cfg.collision_on && !collision_free(draft, cfg.collision_voxel)) {
            ok = false;
            last_reason = "collision";
            if (manifest) ++manifest->failed_collision;
        }
        BBox3D box_a, box_b;
        if (ok) {
            box_a = tight_box(draft.pos_a, draft.cat_a);
            box_b = tight_box(draft.pos_b, draft.cat_b);
            bool any_s3 = false;
            for (Eigen::Index i = 0; i < draft.pos_a.rows() && !any_s3; ++i)
                any_s3 = box_b.contains(draft.pos_a.row(i).transpose());
            for (Eigen::Index i = 0; i < draft.pos_b.rows() && !any_s3; ++i)
                any_s3 = box_a.contains(draft.pos_b.row(i).transpose());
            if (!any_s3) {
                ok = false;
                last_reason = "empty overlap";
                if (manifest) ++manifest->failed_empty_s3;
            }
        }
        if (!ok) {
            // fresh distance draw for the next attempt
            for (int tries = 0; tries < 10000; ++tries) {
                d = rng.normal(mean, stddev);
                if (d > 0) break;
            }
            continue;
        }

        // Accepted: add floor points, derive regions, build the sample.
        Eigen::MatrixXd floor_pos(0, 3), floor_col(0, 3);
        if (cfg.background_on && cfg.floor_point_rate > 0) {
            const Rect fa = footprint(box_a, cfg.floor_margin);
            const Rect fb = footprint(box_b, cfg.floor_margin);
            const double area = union_area(fa, fb);
            const std::uint64_t count = rng.poisson(cfg.floor_point_rate * area);
            const Rect bound{std::min(fa.x0, fb.x0), std::min(fa.y0, fb.y0), std::max(fa.x1, fb.x1),
                             std::max(fa.y1, fb.y1)};
            floor_pos.resize(static_cast<Eigen::Index>(count), 3);
            floor_col.resize(static_cast<Eigen::Index>(count), 3);
            for (std::uint64_t i = 0; i < count; ++i) {
                double x, y;
                do {
                    x = rng.uniform_real(bound.x0, bound.x1);
                    y = rng.uniform_real(bound.y0, bound.y1);
                } while (!fa.contains(x, y) && !fb.contains(x, y));
                floor_pos.row(static_cast<Eigen::Index>(i)) << x, y, draft.floor_z;
                for (int ch = 0; ch < 3; ++ch)
                    floor_col(static_cast<Eigen::Index>(i), ch) =
                        std::clamp(0.5 + rng.uniform_real(-0.05, 0.05), 0.0, 1.0);
            }
        }

        const Eigen::Index na = draft.pos_a.rows(), nb = draft.pos_b.rows(), nf = floor_pos.rows();
        TrainingSample s;
        s.positions.resize(na + nb + nf, 3);
        s.positions << draft.pos_a, draft.pos_b, floor_pos;
        s.colors.resize(na + nb + nf, 3);
        s.colors << draft.col_a, draft.col_b, floor_col;
        s.box_a = box_a;
        s.box_b = box_b;
        std::vector<int> gt(static_cast<std::size_t>(na + nb + nf), -1);
        std::fill(gt.begin(), gt.begin() + na, 0);
        std::fill(gt.begin() + na, gt.begin() + na + nb, 1);
        s.gt_instance = std::move(gt);
        s.point_region.resize(static_cast<std::size_t>(s.positions.rows()));
        for (Eigen::Index i = 0; i < s.positions.rows(); ++i) {
            const Vec3 p = s.positions.row(i).transpose();
            const bool ia = box_a.contains(p), ib = box_b.contains(p);
            s.point_region[static_cast<std::size_t>(i)] =
                ia && ib ? Region::S3 : ia ? Region::S1 : ib ? Region::S2 : Region::Background;
        }
        std::vector<int> tags(s.point_region.size());
        for (std::size_t i = 0; i < tags.size(); ++i) tags[i] = static_cast<int>(s.point_region[i]);
        auto [raw, n_raw] = voxel_clusters_tagged(s.positions, cfg.superpoint_edge, tags);
        (void)n_raw;
        rebuild_region_pure_superpoints(s, raw);
        s.validate();
        return s;
    }
    return Rejection{cfg.retry_limit, last_reason};
}

PlausibilityReport verify_plausibility(const TrainingSample& sample, const SimConfig& cfg) {
    if (!sample.gt_instance)
        throw ValidationError("verify_plausibility: sample carries no ground truth");
    std::vector<int> rows_a, rows_b;
    int bg_count = 0;
    for (std::size_t i = 0; i < sample.gt_instance->size(); ++i) {
        const int g = (*sample.gt_instance)[i];
        if (g == 0) rows_a.push_back(static_cast<int>(i));
        else if (g == 1) rows_b.push_back(static_cast<int>(i));
        else ++bg_count;
    }
    PlausibilityReport rep;
    if (rows_a.empty() || rows_b.empty()) return rep;

    auto min_z = [&](const std::vector<int>& rows) {
        double z = std::numeric_limits<double>::infinity();
        for (int r : rows) z = std::min(z, sample.positions(r, 2));
        return z;
    };
    const double za = min_z(rows_a), zb = min_z(rows_b);
    const double floor_z = std::min(za, zb);
    rep.max_floor_gap = std::max(za - floor_z, zb - floor_z);
    rep.grounded = rep.max_floor_gap < cfg.gravity_eps;

    Eigen::MatrixXd pa(static_cast<Eigen::Index>(rows_a.size()), 3);
    Eigen::MatrixXd pb(static_cast<Eigen::Index>(rows_b.size()), 3);
    for (std::size_t i = 0; i < rows_a.size(); ++i) pa.row(static_cast<Eigen::Index>(i)) = sample.positions.row(rows_a[i]);
    for (std::size_t i = 0; i < rows_b.size(); ++i) pb.row(static_cast<Eigen::Index>(i)) = sample.positions.row(rows_b[i]);
    rep.co_occupied_fine_voxels = co_occupied_count(pa, pb, cfg.collision_voxel * 0.5);
    rep.no_collision = rep.co_occupied_fine_voxels == 0;

    rep.s3_nonempty = !sample.points_in(Region::S3).empty();
    rep.background_ok =
        !(cfg.background_on && cfg.floor_point_rate > 0) || bg_count > 0;
    return rep;
}

std::vector<TrainingSample> generate_corpus(const PairStats& stats, const ObjectBank& bank, int count,
                                            const SimConfig& cfg, GenManifest* manifest) {
    cfg.validate();
    GenManifest local;
    GenManifest* m = manifest ? manifest : &local;
    m->requested = count;

    std::vector<TrainingSample> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int slot = 0; slot < count; ++slot) {
        Prng rng = Prng::stream(cfg.rng_seed, static_cast<std::uint64_t>(slot));
        for (int pair_tries = 0;; ++pair_tries) {
            if (pair_tries >= 1000)
                throw SimExhausted("generate_corpus: no composable pair after 1000 pair draws");
            const PairDraw draw = sample_pair(stats, bank, rng);
            ComposeResult res = compose_sample(bank.objects[static_cast<std::size_t>(draw.obj_a)],
                                               bank.objects[static_cast<std::size_t>(draw.obj_b)],
                                               draw.distance, draw.mean, draw.std, cfg, rng, m);
            if (std::holds_alternative<TrainingSample>(res)) {
                TrainingSample s = std::get<TrainingSample>(std::move(res));
                char buf[32];
                std::snprintf(buf, sizeof(buf), "sim_%06d", slot);
                s.id = buf;
                out.push_back(std::move(s));
                ++m->accepted;
                break;
            }
            ++m->pairs_rejected;
        }
    }
    return out;
}

} // namespace boxlab
