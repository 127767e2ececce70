#pragma once

#include "boxlab/labeler.hpp"

namespace boxlab {

struct LossWeights {
    double lambda1 = 2.0; // class term
    double lambda2 = 5.0; // bce term
    double lambda3 = 2.0; // dice term
    double tau = 0.9;     // teacher confidence gate, on sigmoid probabilities

    void validate() const;
};

Eigen::MatrixXd sigmoid_values(const Eigen::MatrixXd& logits);

/// Binary mask targets over the S1|S2|S3 column layout of `all_logits`,
/// derived from per-point ground truth by per-superpoint majority.
Eigen::MatrixXd sim_mask_targets(const TrainingSample& sample, const LabelerForward& fwd);

/// Region-indicator targets for the non-overlap columns: instance 1 owns S1,
/// instance 2 owns S2.
Eigen::MatrixXd nonoverlap_targets(Eigen::Index n_s1, Eigen::Index n_s2);

struct SimLoss {
    ad::Var total, l_cls, l_bce, l_dice;
};

/// Fully supervised simulated-phase loss: lambda1*cls + lambda2*bce +
/// lambda3*dice over all sample superpoints.
SimLoss loss_sim(ad::Tape& tape, const LabelerForward& fwd, const TrainingSample& sample,
                 const LossWeights& w);

struct SupLoss {
    ad::Var total, l_bce, l_dice;
};

/// Supervised real-phase loss on non-overlap columns only.
SupLoss loss_sup(ad::Tape& tape, ad::Var nonoverlap_logits, Eigen::Index n_s1, Eigen::Index n_s2,
                 const LossWeights& w);

struct UnsupLoss {
    ad::Var total, l_bce, l_dice;
    double coverage = 0; // gated entries / total S3 entries
};

// Teacher-gated loss on overlap columns: entries where the teacher sigmoid
// exceeds tau are supervised toward the teacher's soft values; everything
// else contributes exactly zero loss and gradient.
UnsupLoss loss_unsup(ad::Tape& tape, ad::Var student_s3_logits,
                     const Eigen::MatrixXd& teacher_s3_logits, const LossWeights& w);

struct RealLoss {
    ad::Var total, l_cls;
    SupLoss sup;
    UnsupLoss unsup;
};

/// Eq. lambda1*cls + L_sup + L_unsup on a real sample; class targets are the
/// two box categories with fixed query assignment.
RealLoss loss_total_real(ad::Tape& tape, const LabelerForward& student,
                         const Eigen::MatrixXd& teacher_s3_logits, const TrainingSample& sample,
                         const LossWeights& w);

struct SoftBce {
    ad::Var loss;
    bool degenerate = false; // sum of soft labels was zero
};

/// Confidence-weighted downstream mask loss: sum bce(pred, m)*m / sum m.
SoftBce soft_bce(ad::Tape& tape, ad::Var pred_logits, const Eigen::MatrixXd& soft_labels);

} // namespace boxlab
