#include "boxlab/losses.hpp"

#include <cmath>

namespace boxlab {

void LossWeights::validate() const {
    if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0)
        throw ValidationError("loss weights: lambdas must be non-negative");
    if (!(tau > 0 && tau < 1)) throw ValidationError("loss weights: tau must be in (0, 1)");
}

Eigen::MatrixXd sigmoid_values(const Eigen::MatrixXd& logits) {
    return logits.unaryExpr([](double z) {
        return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    });
}

Eigen::MatrixXd sim_mask_targets(const TrainingSample& sample, const LabelerForward& fwd) {
    if (!sample.gt_instance)
        throw ValidationError("sim_mask_targets: sample carries no ground truth");

    // Majority provenance per superpoint; ties resolved A, then B, then BG.
    std::vector<std::array<int, 3>> counts(static_cast<std::size_t>(sample.n_superpoints), {0, 0, 0});
    for (std::size_t i = 0; i < sample.superpoint.size(); ++i) {
        const int g = (*sample.gt_instance)[i];
        const int slot = g == 0 ? 0 : g == 1 ? 1 : 2;
        ++counts[static_cast<std::size_t>(sample.superpoint[i])][static_cast<std::size_t>(slot)];
    }
    auto majority = [&](int sp) {
        const auto& c = counts[static_cast<std::size_t>(sp)];
        if (c[0] >= c[1] && c[0] >= c[2]) return 0;
        if (c[1] >= c[2]) return 1;
        return 2;
    };

    const Eigen::Index n1 = static_cast<Eigen::Index>(fwd.sp_s1.size());
    const Eigen::Index n2 = static_cast<Eigen::Index>(fwd.sp_s2.size());
    const Eigen::Index n3 = static_cast<Eigen::Index>(fwd.sp_s3.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(2, n1 + n2 + n3);
    Eigen::Index col = 0;
    for (const auto* group : {&fwd.sp_s1, &fwd.sp_s2, &fwd.sp_s3}) {
        for (int sp : *group) {
            const int m = majority(sp);
            if (m == 0) t(0, col) = 1.0;
            else if (m == 1) t(1, col) = 1.0;
            ++col;
        }
    }
    return t;
}

Eigen::MatrixXd nonoverlap_targets(Eigen::Index n_s1, Eigen::Index n_s2) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(2, n_s1 + n_s2);
    t.row(0).head(n_s1).setOnes();
    t.row(1).tail(n_s2).setOnes();
    return t;
}

SimLoss loss_sim(ad::Tape& tape, const LabelerForward& fwd, const TrainingSample& sample,
                 const LossWeights& w) {
    w.validate();
    Eigen::MatrixXd targets = sim_mask_targets(sample, fwd);
    SimLoss out;
    out.l_cls = tape.softmax_xent(fwd.class_logits, {sample.box_a.category, sample.box_b.category});
    out.l_bce = tape.bce_with_logits(fwd.all_logits, targets);
    out.l_dice = tape.dice_loss(fwd.all_logits, targets);
    out.total = tape.weighted_sum({out.l_cls, out.l_bce, out.l_dice}, {w.lambda1, w.lambda2, w.lambda3});
    return out;
}

SupLoss loss_sup(ad::Tape& tape, ad::Var nonoverlap_logits, Eigen::Index n_s1, Eigen::Index n_s2,
                 const LossWeights& w) {
    w.validate();
    if (nonoverlap_logits.cols() != n_s1 + n_s2)
        throw ValidationError("loss_sup: column count does not match region sizes");
    Eigen::MatrixXd targets = nonoverlap_targets(n_s1, n_s2);
    SupLoss out;
    out.l_bce = tape.bce_with_logits(nonoverlap_logits, targets);
    out.l_dice = tape.dice_loss(nonoverlap_logits, targets);
    out.total = tape.weighted_sum({out.l_bce, out.l_dice}, {w.lambda2, w.lambda3});
    return out;
}

UnsupLoss loss_unsup(ad::Tape& tape, ad::Var student_s3_logits,
                     const Eigen::MatrixXd& teacher_s3_logits, const LossWeights& w) {
    w.validate();
    if (student_s3_logits.rows() != teacher_s3_logits.rows() ||
        student_s3_logits.cols() != teacher_s3_logits.cols())
        throw ValidationError("loss_unsup: student/teacher logit shape mismatch");

    const Eigen::MatrixXd probs = sigmoid_values(teacher_s3_logits);
    Eigen::MatrixXd gate(probs.rows(), probs.cols());
    for (Eigen::Index i = 0; i < probs.rows(); ++i)
        for (Eigen::Index j = 0; j < probs.cols(); ++j) gate(i, j) = probs(i, j) > w.tau ? 1.0 : 0.0;
    const Eigen::MatrixXd targets = probs.cwiseProduct(gate);

    UnsupLoss out;
    out.coverage = gate.size() > 0 ? gate.sum() / static_cast<double>(gate.size()) : 0.0;
    out.l_bce = tape.bce_with_logits(student_s3_logits, targets, gate);
    out.l_dice = tape.dice_loss(student_s3_logits, targets, gate);
    out.total = tape.weighted_sum({out.l_bce, out.l_dice}, {w.lambda2, w.lambda3});
    return out;
}

RealLoss loss_total_real(ad::Tape& tape, const LabelerForward& student,
                         const Eigen::MatrixXd& teacher_s3_logits, const TrainingSample& sample,
                         const LossWeights& w) {
    RealLoss out;
    out.l_cls = tape.softmax_xent(student.class_logits, {sample.box_a.category, sample.box_b.category});
    out.sup = loss_sup(tape, student.nonoverlap_logits, static_cast<Eigen::Index>(student.sp_s1.size()),
                       static_cast<Eigen::Index>(student.sp_s2.size()), w);
    out.unsup = loss_unsup(tape, student.s3_logits, teacher_s3_logits, w);
    out.total = tape.weighted_sum({out.l_cls, out.sup.total, out.unsup.total}, {w.lambda1, 1.0, 1.0});
    return out;
}

SoftBce soft_bce(ad::Tape& tape, ad::Var pred_logits, const Eigen::MatrixXd& soft_labels) {
    if (pred_logits.rows() != soft_labels.rows() || pred_logits.cols() != soft_labels.cols())
        throw ValidationError("soft_bce: shape mismatch");
    for (Eigen::Index i = 0; i < soft_labels.rows(); ++i)
        for (Eigen::Index j = 0; j < soft_labels.cols(); ++j)
            if (!(soft_labels(i, j) >= 0.0 && soft_labels(i, j) <= 1.0))
                throw ValidationError("soft_bce: labels must lie in [0, 1]");
    SoftBce out;
    out.degenerate = soft_labels.sum() <= 0.0;
    out.loss = tape.soft_bce_weighted(pred_logits, soft_labels);
    return out;
}

} // namespace boxlab
