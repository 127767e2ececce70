#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace boxlab::ad {

using Mat = Eigen::MatrixXd;

class Tape;

/// Handle to a tape node; cheap to copy, valid while the tape lives.
class Var {
public:
    Var() = default;
    const Mat& val() const;
    const Mat& grad() const;
    Eigen::Index rows() const { return val().rows(); }
    Eigen::Index cols() const { return val().cols(); }
    bool valid() const { return tape_ != nullptr; }
    Tape* tape() const { return tape_; }
    int index() const { return idx_; }

private:
    friend class Tape;
    Var(Tape* t, int idx) : tape_(t), idx_(idx) {}
    Tape* tape_ = nullptr;
    int idx_ = -1;
};

// Reverse-mode tape over dense double matrices. One tape per forward pass;
// nodes are appended in evaluation order, so a single reverse sweep visits
// them in valid topological order. All reductions run in fixed index order,
// which keeps results bit-reproducible.
class Tape {
public:
    /// Input with no gradient (data, targets).
    Var constant(Mat v);
    /// Parameter leaf; grad() is readable after backward().
    Var leaf(Mat v);

    void backward(Var scalar_loss);

    Var matmul(Var a, Var b);
    Var matmul_nt(Var a, Var b); // a * b^T
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b); // elementwise
    Var add_rowvec(Var a, Var bias);
    Var scale(Var a, double c);
    Var relu(Var a);
    Var sigmoid(Var a);
    Var softmax_rows(Var a);
    Var vstack(const std::vector<Var>& parts);
    Var hstack(Var a, Var b);
    Var rows(Var a, Eigen::Index start, Eigen::Index count);
    Var cols(Var a, Eigen::Index start, Eigen::Index count);
    Var gather_rows(Var a, std::vector<int> idx);
    /// out[g] = mean over rows i with group[i] == g; every group must be
    /// non-empty. Accumulates in ascending row order.
    Var group_mean_rows(Var a, std::vector<int> group, int n_groups);
    Var sum_all(Var a);
    Var mean_all(Var a);
    /// Sum of 1x1 scalars with fixed coefficients.
    Var weighted_sum(const std::vector<Var>& scalars, const std::vector<double>& coeffs);

    // Fused losses (numerically stable, hand-derived backward).
    /// sum(w .* bce(z, t)) / sum(w); 0 when sum(w) == 0. Targets may be soft.
    Var bce_with_logits(Var logits, Mat targets, Mat weights);
    Var bce_with_logits(Var logits, Mat targets);
    /// Mean over rows of 1 - (2*sum(p.*t)+eps)/(sum(p)+sum(t)+eps), with
    /// p = sigmoid(z) and sums restricted to gate != 0.
    Var dice_loss(Var logits, Mat targets, Mat gate, double eps = 1.0);
    Var dice_loss(Var logits, Mat targets, double eps = 1.0);
    /// Mean categorical cross-entropy over rows against integer targets.
    Var softmax_xent(Var logits, std::vector<int> targets);
    /// Confidence-weighted BCE: sum(bce(z, m) .* m) / sum(m); 0 if sum(m)=0.
    Var soft_bce_weighted(Var logits, Mat soft_targets);

    std::size_t size() const { return nodes_.size(); }

private:
    friend class Var;
    struct Node {
        Mat val;
        Mat grad;
        bool needs_grad = false;
        std::function<void(Tape&)> back;
    };
    std::vector<Node> nodes_;

    int push(Mat val, bool needs_grad, std::function<void(Tape&)> back);
    bool ng(Var v) const { return nodes_[static_cast<std::size_t>(v.index())].needs_grad; }
    Mat& grad_buf(int idx);
    const Mat& val_of(int idx) const { return nodes_[static_cast<std::size_t>(idx)].val; }
    const Mat& grad_of(int idx) const { return nodes_[static_cast<std::size_t>(idx)].grad; }
    bool grad_ready(int idx) const { return nodes_[static_cast<std::size_t>(idx)].grad.size() > 0; }
};

/// max_ij |a - b|; convenience for tests and oracles.
double max_abs_diff(const Mat& a, const Mat& b);

} // namespace boxlab::ad
