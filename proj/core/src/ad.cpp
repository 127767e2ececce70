#include "boxlab/ad.hpp"

#include <cmath>

#include "boxlab/errors.hpp"

namespace boxlab::ad {

namespace {

double sigmoid_scalar(double z) {
    return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// max(z,0) - z*t + log(1 + exp(-|z|)): stable BCE-with-logits, soft targets ok
double bce_scalar(double z, double t) {
    return std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
}

} // namespace

const Mat& Var::val() const {
    if (!tape_) throw ValidationError("ad: use of empty Var");
    return tape_->val_of(idx_);
}

const Mat& Var::grad() const {
    if (!tape_) throw ValidationError("ad: use of empty Var");
    if (!tape_->grad_ready(idx_)) {
        static const Mat empty;
        return empty;
    }
    return tape_->grad_of(idx_);
}

int Tape::push(Mat val, bool needs_grad, std::function<void(Tape&)> back) {
    nodes_.push_back(Node{std::move(val), Mat(), needs_grad, std::move(back)});
    return static_cast<int>(nodes_.size()) - 1;
}

Mat& Tape::grad_buf(int idx) {
    Node& n = nodes_[static_cast<std::size_t>(idx)];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.val.rows(), n.val.cols());
    return n.grad;
}

Var Tape::constant(Mat v) { return Var(this, push(std::move(v), false, nullptr)); }

Var Tape::leaf(Mat v) { return Var(this, push(std::move(v), true, nullptr)); }

void Tape::backward(Var loss) {
    if (loss.val().rows() != 1 || loss.val().cols() != 1)
        throw ValidationError("ad: backward needs a 1x1 loss");
    grad_buf(loss.index()).setOnes();
    for (int i = loss.index(); i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (!n.needs_grad || !n.back || n.grad.size() == 0) continue;
        n.back(*this);
    }
}

Var Tape::matmul(Var a, Var b) {
    if (a.cols() != b.rows()) throw ValidationError("ad: matmul shape mismatch");
    Mat v = a.val() * b.val();
    const bool needs = ng(a) || ng(b);
    const int ia = a.index(), ib = b.index();
    int idx = push(std::move(v), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(idx)].back = [ia, ib, idx](Tape& t) {
            const Mat& g = t.grad_of(idx);
            if (t.nodes_[static_cast<std::size_t>(ia)].needs_grad)
                t.grad_buf(ia).noalias() += g * t.val_of(ib).transpose();
            if (t.nodes_[static_cast<std::size_t>(ib)].needs_grad)
                t.grad_buf(ib).noalias() += t.val_of(ia).transpose() * g;
        };
    }
    return Var(this, idx);
}

Var Tape::matmul_nt(Var a, Var b) {
    if (a.cols() != b.cols()) throw ValidationError("ad: matmul_nt shape mismatch");
    Mat v = a.val() * b.val().transpose();
    const bool needs = ng(a) || ng(b);
    const int ia = a.index(), ib = b.index();
    int idx = push(std::move(v), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(idx)].back = [ia, ib, idx](Tape& t) {
            const Mat& g = t.grad_of(idx);
            if (t.nodes_[static_cast<std::size_t>(ia)].needs_grad)
                t.grad_buf(ia).noalias() += g * t.val_of(ib);
            if (t.nodes_[static_cast<std::size_t>(ib)].needs_grad)
                t.grad_buf(ib).noalias() += g.transpose() * t.val_of(ia);
        };
    }
    return Var(this, idx);
}

Var Tape::add(Var a, Var b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ValidationError("ad: add shape mismatch");
    Mat v = a.val() + b.val();
    const bool needs = ng(a) || ng(b);
    const int ia = a.index(), ib = b.index();
    int idx = push(std::move(v), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(idx)].back = [ia, ib, idx](Tape& t) {
            const Mat& g = t.grad_of(idx);
            if (t.nodes_[static_cast<std::size_t>(ia)].needs_grad) t.grad_buf(ia) += g;
            if (t.nodes_[static_cast<std::size_t>(ib)].needs_grad) t.grad_buf(ib) += g;
        };
    }
    return Var(this, idx);
}

Var Tape::sub(Var a, Var b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ValidationError("ad: sub shape mismatch");
    Mat v = a.val() - b.val();
    const bool needs = ng(a) || ng(b);
    const int ia = a.index(), ib = b.index();
    int idx = push(std::move(v), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(idx)].back = [ia, ib, idx](Tape& t) {
            const Mat& g = t.grad_of(idx);
            if (t.nodes_[static_cast<std::size_t>(ia)].needs_grad) t.grad_buf(ia) += g;
            if (t.nodes_[static_cast<std::size_t>(ib)].needs_grad) t.grad_buf(ib) -= g;
        };
    }
    return Var(this, idx);
}

Var Tape::mul(Var a, Var b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ValidationError("ad: mul shape mismatch");
    Mat v = a.val().cwiseProduct(b.val());
    const bool needs = ng(a) || ng(b);
    const int ia = a.index(), ib = b.index();
    int idx = push(std::move(v), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(idx)].back = [ia, ib, idx](Tape& t) {
            const Mat& g = t.grad_of(idx);
            if (t.nodes_[static_cast<std::size_t>(ia)].needs_grad)
                t.grad_buf(ia) += g.cwiseProduct(t.val_of(ib));
            if (t.nodes_[static_cast<std::size_t>(ib)].needs_grad)
                t.grad_buf(ib) += g.cwiseProduct(t.val_of(ia));
        };
    }
    return Var(this, idx);
}

Var Tape::add_rowvec(Var a, Var bias) {
    if (bias.rows() != 1 || bias.cols() != a.cols())
        throw ValidationError("ad: add_rowvec bias must be 1 x cols(a)");
    Mat v = a.val().rowwise() + bias.val().row(0);
    const bool needs = ng(a) || ng(bias);
    const int ia = a.index(), ib = bias.index();
    int idx = push(std::move(v), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(idx)].back = [ia, ib, idx](Tape& t) {
            const Mat& g = t.grad_of(idx);
            if (t.nodes_[static_cast<std::size_t>(ia)].needs_grad) t.grad_buf(ia) += g;
            if (t.nodes_[static_cast<std::size_t>(ib)].needs_grad)
                t.grad_buf(ib).row(0) += g.colwise().sum();
        };
    }
    return Var(this, idx);
}

Var Tape::scale(Var a, double c) {
    Mat v = a.val() * c;
    const bool needs = ng(a);
    const int ia = a.index();
    int idx = push(std::move(v), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(idx)].back = [ia, idx, c](Tape& t) {
            t.grad_buf(ia) += c * t.grad_of(idx);
        };
    }
    return Var(this, idx);
}

Var Tape::relu(Var a) {
    Mat v = a.val().cwiseMax(0.0);
    const bool needs = ng(a);
    const int ia = a.index();
    int idx = push(std::move(v), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(idx)].back = [ia, idx](Tape& t) {
            const Mat& g = t.grad_of(idx);
            const Mat& x = t.val_of(ia);
            t.grad_buf(ia) += (x.array() > 0.0).select(g, Mat::Zero(g.rows(), g.cols()));
        };
    }
    return Var(this, idx);
}

Var Tape::sigmoid(Var a) {
    Mat v = a.val().unaryExpr([](double z) { return sigmoid_scalar(z); });
    const bool needs = ng(a);
    const int ia = a.index();
    int idx = push(std::move(v), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(idx)].back = [ia, idx](Tape& t) {
            const Mat& g = t.grad_of(idx);
            const Mat& y = t.val_of(idx);
            t.grad_buf(ia).array() += g.array() * y.array() * (1.0 - y.array());
        };
    }
    return Var(this, idx);
}

Var Tape::softmax_rows(Var a) {
    Mat v = a.val();
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
        const double m = v.row(r).maxCoeff();
        v.row(r) = (v.row(r).array() - m).exp();
        v.row(r) /= v.row(r).sum();
    }
    const bool needs = ng(a);
    const int ia = a.index();
    int idx = push(std::move(v), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(idx)].back = [ia, idx](Tape& t) {
            const Mat& g = t.grad_of(idx);
            const Mat& y = t.val_of(idx);
            Mat& ga = t.grad_buf(ia);
            for (Eigen::Index r = 0; r < y.rows(); ++r) {
                const double s = g.row(r).dot(y.row(r));
                ga.row(r).array() += y.row(r).array() * (g.row(r).array() - s);
            }
        };
    }
    return Var(this, idx);
}

Var Tape::vstack(const std::vector<Var>& parts) {
    if (parts.empty()) throw ValidationError("ad: vstack of nothing");
    Eigen::Index total = 0;
    const Eigen::Index c = parts.front().cols();
    bool needs = false;
    for (const Var& p : parts) {
        if (p.cols() != c) throw ValidationError("ad: vstack column mismatch");
        total += p.rows();
        needs = needs || ng(p);
    }
    Mat v(total, c);
    Eigen::Index at = 0;
    std::vector<int> srcs;
    std::vector<Eigen::Index> offs, cnts;
    for (const Var& p : parts) {
        v.middleRows(at, p.rows()) = p.val();
        srcs.push_back(p.index());
        offs.push_back(at);
        cnts.push_back(p.rows());
        at += p.rows();
    }
    int idx = push(std::move(v), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(idx)].back = [srcs, offs, cnts, idx](Tape& t) {
            const Mat& g = t.grad_of(idx);
            for (std::size_t i = 0; i < srcs.size(); ++i)
                if (t.nodes_[static_cast<std::size_t>(srcs[i])].needs_grad && cnts[i] > 0)
                    t.grad_buf(srcs[i]) += g.middleRows(offs[i], cnts[i]);
        };
    }
    return Var(this, idx);
}

Var Tape::hstack(Var a, Var b) {
    if (a.rows() != b.rows()) throw ValidationError("ad: hstack row mismatch");
    Mat v(a.rows(), a.cols() + b.cols());
    v << a.val(), b.val();
    const bool needs = ng(a) || ng(b);
    const int ia = a.index(), ib = b.index();
    const Eigen::Index ca = a.cols(), cb = b.cols();
    int idx = push(std::move(v), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(idx)].back = [ia, ib, ca, cb, idx](Tape& t) {
            const Mat& g = t.grad_of(idx);
            if (t.nodes_[static_cast<std::size_t>(ia)].needs_grad) t.grad_buf(ia) += g.leftCols(ca);
            if (t.nodes_[static_cast<std::size_t>(ib)].needs_grad) t.grad_buf(ib) += g.rightCols(cb);
        };
    }
    return Var(this, idx);
}

Var Tape::rows(Var a, Eigen::Index start, Eigen::Index count) {
    if (start < 0 || count < 0 || start + count > a.rows())
        throw ValidationError("ad: rows out of range");
    Mat v = a.val().middleRows(start, count);
    const bool needs = ng(a);
    const int ia = a.index();
    int idx = push(std::move(v), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(idx)].back = [ia, start, count, idx](Tape& t) {
            t.grad_buf(ia).middleRows(start, count) += t.grad_of(idx);
        };
    }
    return Var(this, idx);
}

Var Tape::cols(Var a, Eigen::Index start, Eigen::Index count) {
    if (start < 0 || count < 0 || start + count > a.cols())
        throw ValidationError("ad: cols out of range");
    Mat v = a.val().middleCols(start, count);
    const bool needs = ng(a);
    const int ia = a.index();
    int idx = push(std::move(v), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(idx)].back = [ia, start, count, idx](Tape& t) {
            t.grad_buf(ia).middleCols(start, count) += t.grad_of(idx);
        };
    }
    return Var(this, idx);
}

Var Tape::gather_rows(Var a, std::vector<int> idxs) {
    Mat v(static_cast<Eigen::Index>(idxs.size()), a.cols());
    for (std::size_t i = 0; i < idxs.size(); ++i) {
        if (idxs[i] < 0 || idxs[i] >= a.rows()) throw ValidationError("ad: gather index out of range");
        v.row(static_cast<Eigen::Index>(i)) = a.val().row(idxs[i]);
    }
    const bool needs = ng(a);
    const int ia = a.index();
    int idx = push(std::move(v), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(idx)].back = [ia, idxs = std::move(idxs), idx](Tape& t) {
            const Mat& g = t.grad_of(idx);
            Mat& ga = t.grad_buf(ia);
            for (std::size_t i = 0; i < idxs.size(); ++i)
                ga.row(idxs[i]) += g.row(static_cast<Eigen::Index>(i));
        };
    }
    return Var(this, idx);
}

Var Tape::group_mean_rows(Var a, std::vector<int> group, int n_groups) {
    if (group.size() != static_cast<std::size_t>(a.rows()))
        throw ValidationError("ad: group size must match rows");
    std::vector<int> counts(static_cast<std::size_t>(n_groups), 0);
    Mat v = Mat::Zero(n_groups, a.cols());
    for (std::size_t i = 0; i < group.size(); ++i) {
        const int gidx = group[i];
        if (gidx < 0 || gidx >= n_groups) throw ValidationError("ad: group id out of range");
        v.row(gidx) += a.val().row(static_cast<Eigen::Index>(i));
        ++counts[static_cast<std::size_t>(gidx)];
    }
    for (int gidx = 0; gidx < n_groups; ++gidx) {
        if (counts[static_cast<std::size_t>(gidx)] == 0)
            throw ValidationError("ad: empty group in group_mean_rows");
        v.row(gidx) /= counts[static_cast<std::size_t>(gidx)];
    }
    const bool needs = ng(a);
    const int ia = a.index();
    int idx = push(std::move(v), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(idx)].back =
            [ia, group = std::move(group), counts = std::move(counts), idx](Tape& t) {
                const Mat& g = t.grad_of(idx);
                Mat& ga = t.grad_buf(ia);
                for (std::size_t i = 0; i < group.size(); ++i)
                    ga.row(static_cast<Eigen::Index>(i)) +=
                        g.row(group[i]) / counts[static_cast<std::size_t>(group[i])];
            };
    }
    return Var(this, idx);
}

Var Tape::sum_all(Var a) {
    Mat v(1, 1);
    v(0, 0) = a.val().sum();
    const bool needs = ng(a);
    const int ia = a.index();
    int idx = push(std::move(v), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(idx)].back = [ia, idx](Tape& t) {
            t.grad_buf(ia).array() += t.grad_of(idx)(0, 0);
        };
    }
    return Var(this, idx);
}

Var Tape::mean_all(Var a) {
    const double denom = static_cast<double>(a.rows() * a.cols());
    Mat v(1, 1);
    v(0, 0) = a.val().sum() / denom;
    const bool needs = ng(a);
    const int ia = a.index();
    int idx = push(std::move(v), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(idx)].back = [ia, idx, denom](Tape& t) {
            t.grad_buf(ia).array() += t.grad_of(idx)(0, 0) / denom;
        };
    }
    return Var(this, idx);
}

Var Tape::weighted_sum(const std::vector<Var>& scalars, const std::vector<double>& coeffs) {
    if (scalars.size() != coeffs.size()) throw ValidationError("ad: weighted_sum size mismatch");
    Mat v = Mat::Zero(1, 1);
    bool needs = false;
    std::vector<int> srcs;
    for (std::size_t i = 0; i < scalars.size(); ++i) {
        if (scalars[i].rows() != 1 || scalars[i].cols() != 1)
            throw ValidationError("ad: weighted_sum expects 1x1 terms");
        v(0, 0) += coeffs[i] * scalars[i].val()(0, 0);
        needs = needs || ng(scalars[i]);
        srcs.push_back(scalars[i].index());
    }
    int idx = push(std::move(v), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(idx)].back = [srcs, coeffs, idx](Tape& t) {
            const double g = t.grad_of(idx)(0, 0);
            for (std::size_t i = 0; i < srcs.size(); ++i)
                if (t.nodes_[static_cast<std::size_t>(srcs[i])].needs_grad)
                    t.grad_buf(srcs[i])(0, 0) += coeffs[i] * g;
        };
    }
    return Var(this, idx);
}

Var Tape::bce_with_logits(Var logits, Mat targets, Mat weights) {
    if (targets.rows() != logits.rows() || targets.cols() != logits.cols() ||
        weights.rows() != logits.rows() || weights.cols() != logits.cols())
        throw ValidationError("ad: bce shape mismatch");
    const double wsum = weights.sum();
    Mat v(1, 1);
    double acc = 0;
    const Mat& z = logits.val();
    for (Eigen::Index i = 0; i < z.rows(); ++i)
        for (Eigen::Index j = 0; j < z.cols(); ++j)
            acc += weights(i, j) * bce_scalar(z(i, j), targets(i, j));
    v(0, 0) = wsum > 0 ? acc / wsum : 0.0;
    const bool needs = ng(logits);
    const int ia = logits.index();
    int idx = push(std::move(v), needs, nullptr);
    if (needs && wsum > 0) {
        nodes_[static_cast<std::size_t>(idx)].back =
            [ia, idx, targets = std::move(targets), weights = std::move(weights), wsum](Tape& t) {
                const double g = t.grad_of(idx)(0, 0);
                const Mat& z = t.val_of(ia);
                Mat& ga = t.grad_buf(ia);
                for (Eigen::Index i = 0; i < z.rows(); ++i)
                    for (Eigen::Index j = 0; j < z.cols(); ++j)
                        ga(i, j) += g * weights(i, j) * (sigmoid_scalar(z(i, j)) - targets(i, j)) / wsum;
            };
    }
    return Var(this, idx);
}

Var Tape::bce_with_logits(Var logits, Mat targets) {
    Mat w = Mat::Ones(logits.rows(), logits.cols());
    return bce_with_logits(logits, std::move(targets), std::move(w));
}

Var Tape::dice_loss(Var logits, Mat targets, Mat gate, double eps) {
    if (targets.rows() != logits.rows() || targets.cols() != logits.cols() ||
        gate.rows() != logits.rows() || gate.cols() != logits.cols())
        throw ValidationError("ad: dice shape mismatch");
    const Eigen::Index r = logits.rows();
    if (r == 0) return constant(Mat::Zero(1, 1));
    const Mat& z = logits.val();
    Mat p(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i)
        for (Eigen::Index j = 0; j < z.cols(); ++j)
            p(i, j) = gate(i, j) != 0 ? sigmoid_scalar(z(i, j)) : 0.0;

    std::vector<double> num(static_cast<std::size_t>(r)), den(static_cast<std::size_t>(r));
    double total = 0;
    for (Eigen::Index i = 0; i < r; ++i) {
        double pt = 0, ps = 0, ts = 0;
        for (Eigen::Index j = 0; j < z.cols(); ++j) {
            if (gate(i, j) == 0) continue;
            pt += p(i, j) * targets(i, j);
            ps += p(i, j);
            ts += targets(i, j);
        }
        num[static_cast<std::size_t>(i)] = 2.0 * pt + eps;
        den[static_cast<std::size_t>(i)] = ps + ts + eps;
        total += 1.0 - num[static_cast<std::size_t>(i)] / den[static_cast<std::size_t>(i)];
    }
    Mat v(1, 1);
    v(0, 0) = total / static_cast<double>(r);
    const bool needs = ng(logits);
    const int ia = logits.index();
    int idx = push(std::move(v), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(idx)].back = [ia, idx, targets = std::move(targets),
                                                      gate = std::move(gate), p = std::move(p),
                                                      num = std::move(num), den = std::move(den),
                                                      r](Tape& t) {
            const double g = t.grad_of(idx)(0, 0);
            Mat& ga = t.grad_buf(ia);
            for (Eigen::Index i = 0; i < ga.rows(); ++i) {
                const double n_i = num[static_cast<std::size_t>(i)];
                const double d_i = den[static_cast<std::size_t>(i)];
                for (Eigen::Index j = 0; j < ga.cols(); ++j) {
                    if (gate(i, j) == 0) continue;
                    // d(dice)/dp = -(2t*den - num) / den^2
                    const double dd_dp = -(2.0 * targets(i, j) * d_i - n_i) / (d_i * d_i);
                    const double dp_dz = p(i, j) * (1.0 - p(i, j));
                    ga(i, j) += g * dd_dp * dp_dz / static_cast<double>(r);
                }
            }
        };
    }
    return Var(this, idx);
}

Var Tape::dice_loss(Var logits, Mat targets, double eps) {
    Mat gate = Mat::Ones(logits.rows(), logits.cols());
    return dice_loss(logits, std::move(targets), std::move(gate), eps);
}

Var Tape::softmax_xent(Var logits, std::vector<int> targets) {
    if (targets.size() != static_cast<std::size_t>(logits.rows()))
        throw ValidationError("ad: softmax_xent targets size mismatch");
    const Mat& z = logits.val();
    Mat probs(z.rows(), z.cols());
    double total = 0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const int tgt = targets[static_cast<std::size_t>(i)];
        if (tgt < 0 || tgt >= z.cols()) throw ValidationError("ad: softmax_xent target out of range");
        const double m = z.row(i).maxCoeff();
        const Eigen::ArrayXd e = (z.row(i).array() - m).exp();
        const double s = e.sum();
        probs.row(i) = (e / s).matrix();
        total += -(z(i, tgt) - m - std::log(s));
    }
    Mat v(1, 1);
    v(0, 0) = total / static_cast<double>(z.rows());
    const bool needs = ng(logits);
    const int ia = logits.index();
    int idx = push(std::move(v), needs, nullptr);
    if (needs) {
        nodes_[static_cast<std::size_t>(idx)].back =
            [ia, idx, probs = std::move(probs), targets = std::move(targets)](Tape& t) {
                const double g = t.grad_of(idx)(0, 0);
                Mat& ga = t.grad_buf(ia);
                const double r = static_cast<double>(ga.rows());
                for (Eigen::Index i = 0; i < ga.rows(); ++i) {
                    ga.row(i) += (g / r) * probs.row(i);
                    ga(i, targets[static_cast<std::size_t>(i)]) -= g / r;
                }
            };
    }
    return Var(this, idx);
}

Var Tape::soft_bce_weighted(Var logits, Mat soft_targets) {
    Mat weights = soft_targets;
    return bce_with_logits(logits, std::move(soft_targets), std::move(weights));
}

double max_abs_diff(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return std::numeric_limits<double>::infinity();
    if (a.size() == 0) return 0.0;
    return (a - b).cwiseAbs().maxCoeff();
}

} // namespace boxlab::ad
