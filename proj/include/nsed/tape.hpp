#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "nsed/common.hpp"

namespace nsed {

// Dense row-major matrix with plain-loop kernels. The matmul accumulates
// along k in a fixed scalar order per output element, so a row's result
// depends only on its own inputs — never on how many other rows share the
// batch. That property backs the bit-exact batch-independence contract of
// the encoder.
template <typename Real>
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<Real> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, Real(0)) {}

    static Matrix zeros(int r, int c) { return Matrix(r, c); }
    static Matrix scalar(Real v) {
        Matrix m(1, 1);
        m.data[0] = v;
        return m;
    }

    Real& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    Real at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    const Real* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
    Real* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
    std::size_t size() const { return data.size(); }

    std::string shape() const { return std::to_string(rows) + "x" + std::to_string(cols); }

    bool all_finite() const {
        return std::all_of(data.begin(), data.end(), [](Real v) { return std::isfinite(v); });
    }

    template <typename Other>
    Matrix<Other> cast() const {
        Matrix<Other> out(rows, cols);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<Other>(data[i]);
        return out;
    }
};

namespace detail {

// C += A * B, i-k-j loop order: j vectorizes, k order is fixed per element.
template <typename Real>
void matmul_acc(const Matrix<Real>& a, const Matrix<Real>& b, Matrix<Real>& c) {
    for (int i = 0; i < a.rows; ++i) {
        const Real* arow = a.row(i);
        Real* crow = c.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const Real aik = arow[k];
            if (aik == Real(0)) continue;
            const Real* brow = b.row(k);
            for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
}

// C += A * B^T: per-element dot of two rows.
template <typename Real>
void matmul_bt_acc(const Matrix<Real>& a, const Matrix<Real>& b, Matrix<Real>& c) {
    for (int i = 0; i < a.rows; ++i) {
        const Real* arow = a.row(i);
        for (int k = 0; k < b.rows; ++k) {
            const Real* brow = b.row(k);
            Real acc = 0;
            for (int j = 0; j < a.cols; ++j) acc += arow[j] * brow[j];
            c.row(i)[k] += acc;
        }
    }
}

// C += A^T * B.
template <typename Real>
void matmul_at_acc(const Matrix<Real>& a, const Matrix<Real>& b, Matrix<Real>& c) {
    for (int i = 0; i < a.rows; ++i) {
        const Real* arow = a.row(i);
        const Real* brow = b.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const Real aik = arow[k];
            if (aik == Real(0)) continue;
            Real* crow = c.row(k);
            for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
}

} // namespace detail

// Reverse-mode tape. Nodes are appended in execution order; backward walks
// the records in exact reverse and accumulates gradients additively, so
// fan-out just works. One tape per forward pass.
template <typename Real>
class Tape {
public:
    using NodeId = int;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    NodeId leaf(Matrix<Real> value) { return push(std::move(value), nullptr); }

    const Matrix<Real>& value(NodeId id) const { return nodes_[check(id)].value; }
    const Matrix<Real>& grad(NodeId id) const { return nodes_[check(id)].grad; }

    NodeId matmul(NodeId a, NodeId b) {
        const auto& A = value(a);
        const auto& B = value(b);
        shapes_must(A.cols == B.rows, "matmul", A, B);
        Matrix<Real> out(A.rows, B.cols);
        detail::matmul_acc(A, B, out);
        return push(std::move(out), [this, a, b](const Matrix<Real>& g) {
            detail::matmul_bt_acc(g, value(b), nodes_[a].grad);
            detail::matmul_at_acc(value(a), g, nodes_[b].grad);
        });
    }

    NodeId add(NodeId a, NodeId b) {
        const auto& A = value(a);
        const auto& B = value(b);
        shapes_must(A.rows == B.rows && A.cols == B.cols, "add", A, B);
        Matrix<Real> out = A;
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += B.data[i];
        return push(std::move(out), [this, a, b](const Matrix<Real>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                nodes_[a].grad.data[i] += g.data[i];
                nodes_[b].grad.data[i] += g.data[i];
            }
        });
    }

    NodeId sub(NodeId a, NodeId b) {
        const auto& A = value(a);
        const auto& B = value(b);
        shapes_must(A.rows == B.rows && A.cols == B.cols, "sub", A, B);
        Matrix<Real> out = A;
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= B.data[i];
        return push(std::move(out), [this, a, b](const Matrix<Real>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                nodes_[a].grad.data[i] += g.data[i];
                nodes_[b].grad.data[i] -= g.data[i];
            }
        });
    }

    // out_ij = a_ij + bias_j; the only broadcast in the engine.
    NodeId add_row(NodeId a, NodeId bias) {
        const auto& A = value(a);
        const auto& B = value(bias);
        shapes_must(B.rows == 1 && B.cols == A.cols, "add_row", A, B);
        Matrix<Real> out = A;
        for (int r = 0; r < out.rows; ++r)
            for (int c = 0; c < out.cols; ++c) out.at(r, c) += B.at(0, c);
        return push(std::move(out), [this, a, bias](const Matrix<Real>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) nodes_[a].grad.data[i] += g.data[i];
            auto& gb = nodes_[bias].grad;
            for (int r = 0; r < g.rows; ++r)
                for (int c = 0; c < g.cols; ++c) gb.at(0, c) += g.at(r, c);
        });
    }

    NodeId scale(NodeId a, Real s) {
        Matrix<Real> out = value(a);
        for (auto& v : out.data) v *= s;
        return push(std::move(out), [this, a, s](const Matrix<Real>& g) {
            for (std::size_t i = 0; i < g.size(); ++i) nodes_[a].grad.data[i] += s * g.data[i];
        });
    }

    // out = s * a with a learnable 1x1 scalar node.
    NodeId mul_scalar(NodeId a, NodeId s) {
        const auto& A = value(a);
        const auto& S = value(s);
        shapes_must(S.rows == 1 && S.cols == 1, "mul_scalar", A, S);
        Matrix<Real> out = A;
        const Real sv = S.data[0];
        for (auto& v : out.data) v *= sv;
        return push(std::move(out), [this, a, s](const Matrix<Real>& g) {
            const Real sv = value(s).data[0];
            const auto& A = value(a);
            Real acc = 0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                nodes_[a].grad.data[i] += sv * g.data[i];
                acc += g.data[i] * A.data[i];
            }
            nodes_[s].grad.data[0] += acc;
        });
    }

    // ReLU'(0) = 0 by convention; activation signs feed the kink tracker
    // used by grad_check.
    NodeId relu(NodeId a) {
        const auto& A = value(a);
        Matrix<Real> out = A;
        for (auto& v : out.data) {
            track_kink(std::abs(static_cast<double>(v)), v > Real(0));
            if (v <= Real(0)) v = Real(0);
        }
        return push(std::move(out), [this, a](const Matrix<Real>& g) {
            const auto& A = value(a);
            for (std::size_t i = 0; i < g.size(); ++i)
                if (A.data[i] > Real(0)) nodes_[a].grad.data[i] += g.data[i];
        });
    }

    NodeId square(NodeId a) {
        const auto& A = value(a);
        Matrix<Real> out = A;
        for (auto& v : out.data) v *= v;
        return push(std::move(out), [this, a](const Matrix<Real>& g) {
            const auto& A = value(a);
            for (std::size_t i = 0; i < g.size(); ++i)
                nodes_[a].grad.data[i] += Real(2) * A.data[i] * g.data[i];
        });
    }

    NodeId concat_cols(const std::vector<NodeId>& parts) {
        contract(!parts.empty(), "concat_cols needs at least one input");
        int rows = value(parts[0]).rows;
        int cols = 0;
        for (NodeId p : parts) {
            shapes_must(value(p).rows == rows, "concat_cols", value(parts[0]), value(p));
            cols += value(p).cols;
        }
        Matrix<Real> out(rows, cols);
        int offset = 0;
        for (NodeId p : parts) {
            const auto& P = value(p);
            for (int r = 0; r < rows; ++r)
                std::copy(P.row(r), P.row(r) + P.cols, out.row(r) + offset);
            offset += P.cols;
        }
        return push(std::move(out), [this, parts](const Matrix<Real>& g) {
            int offset = 0;
            for (NodeId p : parts) {
                auto& gp = nodes_[p].grad;
                for (int r = 0; r < g.rows; ++r)
                    for (int c = 0; c < gp.cols; ++c) gp.at(r, c) += g.at(r, offset + c);
                offset += gp.cols;
            }
        });
    }

    NodeId gather_rows(NodeId a, std::vector<int> idx) {
        const auto& A = value(a);
        for (int i : idx) contract(i >= 0 && i < A.rows, "gather_rows index out of range");
        Matrix<Real> out(static_cast<int>(idx.size()), A.cols);
        for (std::size_t r = 0; r < idx.size(); ++r)
            std::copy(A.row(idx[r]), A.row(idx[r]) + A.cols, out.row(static_cast<int>(r)));
        return push(std::move(out), [this, a, idx = std::move(idx)](const Matrix<Real>& g) {
            auto& ga = nodes_[a].grad;
            for (std::size_t r = 0; r < idx.size(); ++r)
                for (int c = 0; c < g.cols; ++c)
                    ga.at(idx[r], c) += g.at(static_cast<int>(r), c);
        });
    }

    // Sums rows into segments. Accumulation is in row order by default;
    // canonical=true accumulates each segment's rows in lexicographic order
    // of their contents, which makes the result invariant to input row
    // permutations bit-for-bit.
    NodeId segment_sum(NodeId a, std::vector<int> segments, int num_segments,
                       bool canonical = false) {
        const auto& A = value(a);
        shapes_must(static_cast<int>(segments.size()) == A.rows, "segment_sum", A,
                    Matrix<Real>(static_cast<int>(segments.size()), 1));
        for (int s : segments)
            contract(s >= 0 && s < num_segments, "segment id out of range");
        Matrix<Real> out(num_segments, A.cols);
        if (!canonical) {
            for (int r = 0; r < A.rows; ++r) {
                Real* dst = out.row(segments[static_cast<std::size_t>(r)]);
                const Real* src = A.row(r);
                for (int c = 0; c < A.cols; ++c) dst[c] += src[c];
            }
        } else {
            std::vector<std::vector<int>> members(static_cast<std::size_t>(num_segments));
            for (int r = 0; r < A.rows; ++r)
                members[static_cast<std::size_t>(segments[static_cast<std::size_t>(r)])]
                    .push_back(r);
            for (int s = 0; s < num_segments; ++s) {
                auto& rows = members[static_cast<std::size_t>(s)];
                std::sort(rows.begin(), rows.end(), [&](int x, int y) {
                    return std::lexicographical_compare(A.row(x), A.row(x) + A.cols, A.row(y),
                                                        A.row(y) + A.cols);
                });
                Real* dst = out.row(s);
                for (int r : rows) {
                    const Real* src = A.row(r);
                    for (int c = 0; c < A.cols; ++c) dst[c] += src[c];
                }
            }
        }
        return push(std::move(out),
                    [this, a, segments = std::move(segments)](const Matrix<Real>& g) {
                        auto& ga = nodes_[a].grad;
                        for (int r = 0; r < ga.rows; ++r) {
                            const Real* src = g.row(segments[static_cast<std::size_t>(r)]);
                            Real* dst = ga.row(r);
                            for (int c = 0; c < g.cols; ++c) dst[c] += src[c];
                        }
                    });
    }

    // Row-wise L2 norm, n x c -> n x 1. Gradient at a zero row is zero.
    NodeId l2_norm_rows(NodeId a) {
        const auto& A = value(a);
        Matrix<Real> out(A.rows, 1);
        for (int r = 0; r < A.rows; ++r) {
            double acc = 0;
            for (int c = 0; c < A.cols; ++c)
                acc += static_cast<double>(A.at(r, c)) * static_cast<double>(A.at(r, c));
            double norm = std::sqrt(acc);
            track_kink(norm, norm > 0.0);
            out.at(r, 0) = static_cast<Real>(norm);
        }
        return push(std::move(out), [this, a](const Matrix<Real>& g) {
            const auto& A = value(a);
            auto& ga = nodes_[a].grad;
            for (int r = 0; r < A.rows; ++r) {
                double acc = 0;
                for (int c = 0; c < A.cols; ++c)
                    acc += static_cast<double>(A.at(r, c)) * static_cast<double>(A.at(r, c));
                double norm = std::sqrt(acc);
                if (norm <= 0) continue;
                Real scale = g.at(r, 0) / static_cast<Real>(norm);
                for (int c = 0; c < A.cols; ++c) ga.at(r, c) += scale * A.at(r, c);
            }
        });
    }

    // Row-wise ||max(0, a - b)||_2, the asymmetric prediction head. Both the
    // ReLU kink and the norm-at-zero kink use the zero-gradient convention.
    NodeId relu_diff_norm(NodeId a, NodeId b) {
        const auto& A = value(a);
        const auto& B = value(b);
        shapes_must(A.rows == B.rows && A.cols == B.cols, "relu_diff_norm", A, B);
        Matrix<Real> out(A.rows, 1);
        for (int r = 0; r < A.rows; ++r) {
            double acc = 0;
            for (int c = 0; c < A.cols; ++c) {
                double d = static_cast<double>(A.at(r, c)) - static_cast<double>(B.at(r, c));
                track_kink(std::abs(d), d > 0.0);
                if (d > 0) acc += d * d;
            }
            double norm = std::sqrt(acc);
            track_kink(norm, norm > 0.0);
            out.at(r, 0) = static_cast<Real>(norm);
        }
        return push(std::move(out), [this, a, b](const Matrix<Real>& g) {
            const auto& A = value(a);
            const auto& B = value(b);
            auto& ga = nodes_[a].grad;
            auto& gb = nodes_[b].grad;
            for (int r = 0; r < A.rows; ++r) {
                double acc = 0;
                for (int c = 0; c < A.cols; ++c) {
                    double d = static_cast<double>(A.at(r, c)) - static_cast<double>(B.at(r, c));
                    if (d > 0) acc += d * d;
                }
                double norm = std::sqrt(acc);
                if (norm <= 0) continue;
                for (int c = 0; c < A.cols; ++c) {
                    double d = static_cast<double>(A.at(r, c)) - static_cast<double>(B.at(r, c));
                    if (d <= 0) continue;
                    Real delta = static_cast<Real>(static_cast<double>(g.at(r, 0)) * d / norm);
                    ga.at(r, c) += delta;
                    gb.at(r, c) -= delta;
                }
            }
        });
    }

    NodeId sum_all(NodeId a) {
        const auto& A = value(a);
        double acc = 0;
        for (Real v : A.data) acc += static_cast<double>(v);
        return push(Matrix<Real>::scalar(static_cast<Real>(acc)),
                    [this, a](const Matrix<Real>& g) {
                        for (auto& v : nodes_[a].grad.data) v += g.data[0];
                    });
    }

    NodeId mean_all(NodeId a) {
        const auto& A = value(a);
        const Real inv = Real(1) / static_cast<Real>(A.size());
        double acc = 0;
        for (Real v : A.data) acc += static_cast<double>(v);
        return push(Matrix<Real>::scalar(static_cast<Real>(acc) * inv),
                    [this, a, inv](const Matrix<Real>& g) {
                        const Real gi = g.data[0] * inv;
                        for (auto& v : nodes_[a].grad.data) v += gi;
                    });
    }

    // Seeds d(root)/d(root) = 1 and replays the tape in reverse.
    void backward(NodeId root) {
        const auto& R = value(root);
        contract(R.rows == 1 && R.cols == 1, "backward root must be a scalar, got " + R.shape());
        nodes_[static_cast<std::size_t>(root)].grad.data[0] = Real(1);
        for (int i = root; i >= 0; --i) {
            auto& node = nodes_[static_cast<std::size_t>(i)];
            if (node.back) node.back(node.grad);
        }
    }

    void check_finite(NodeId id) const {
        contract(value(id).all_finite(), "non-finite values in tape node");
    }

    // Smallest |pre-activation| (and norm magnitude) seen by any kinked op
    // during forward.
    double min_kink_gap() const { return min_kink_gap_; }

    // Hash over the sign pattern of every kinked op's inputs, in forward
    // order. Two evaluations with equal signatures stayed inside the same
    // piecewise-smooth region, so central differences between them are
    // meaningful.
    std::uint64_t kink_signature() const { return kink_sig_; }

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Matrix<Real> value;
        Matrix<Real> grad;
        std::function<void(const Matrix<Real>&)> back;
    };

    NodeId push(Matrix<Real> value, std::function<void(const Matrix<Real>&)> back) {
        Node n;
        n.grad = Matrix<Real>::zeros(value.rows, value.cols);
        n.value = std::move(value);
        n.back = std::move(back);
        nodes_.push_back(std::move(n));
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    NodeId check(NodeId id) const {
        contract(id >= 0 && id < static_cast<NodeId>(nodes_.size()), "invalid tape node id");
        return id;
    }

    void shapes_must(bool ok, const char* op, const Matrix<Real>& a, const Matrix<Real>& b) const {
        contract(ok, std::string(op) + ": incompatible shapes " + a.shape() + " and " + b.shape());
    }

    void track_kink(double gap, bool active) {
        min_kink_gap_ = std::min(min_kink_gap_, gap);
        kink_sig_ ^= active ? 0x9e3779b97f4a7c15ull : 0x2545f4914f6cdd1dull;
        kink_sig_ *= 0x100000001b3ull;
    }

    std::vector<Node> nodes_;
    double min_kink_gap_ = std::numeric_limits<double>::infinity();
    std::uint64_t kink_sig_ = 0xcbf29ce484222325ull;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    int checked = 0;
    int excluded = 0;
};

// Central finite differences against the tape's analytic gradients.
// build(tape, leaves) must construct the scalar loss from freshly staged
// parameter leaves. A coordinate is excluded when its two perturbed
// evaluations do not share one piecewise-smooth region (some ReLU input or
// norm changed sign between them) — that is exactly when a pre-activation
// sits within about eps of a kink and a central difference says nothing
// about the subgradient convention there.
template <typename BuildFn>
GradCheckReport grad_check(BuildFn&& build, std::vector<Matrix<double>> params, double eps = 1e-4) {
    using T = Tape<double>;
    auto eval = [&](const std::vector<Matrix<double>>& p, std::uint64_t* sig) {
        T tape;
        std::vector<typename T::NodeId> leaves;
        leaves.reserve(p.size());
        for (const auto& m : p) leaves.push_back(tape.leaf(m));
        auto root = build(tape, leaves);
        if (sig) *sig = tape.kink_signature();
        return tape.value(root).data[0];
    };

    // Analytic pass.
    T tape;
    std::vector<typename T::NodeId> leaves;
    for (const auto& m : params) leaves.push_back(tape.leaf(m));
    auto root = build(tape, leaves);
    tape.backward(root);
    std::vector<Matrix<double>> analytic;
    analytic.reserve(leaves.size());
    for (auto id : leaves) analytic.push_back(tape.grad(id));

    GradCheckReport report;
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t i = 0; i < params[p].size(); ++i) {
            const double saved = params[p].data[i];
            std::uint64_t sig_plus = 0, sig_minus = 0;
            params[p].data[i] = saved + eps;
            double f_plus = eval(params, &sig_plus);
            params[p].data[i] = saved - eps;
            double f_minus = eval(params, &sig_minus);
            params[p].data[i] = saved;

            if (sig_plus != sig_minus) {
                ++report.excluded;
                continue;
            }
            const double numeric = (f_plus - f_minus) / (2.0 * eps);
            const double a = analytic[p].data[i];
            const double rel = std::abs(a - numeric) / std::max(1.0, std::abs(a) + std::abs(numeric));
            report.max_rel_error = std::max(report.max_rel_error, rel);
            ++report.checked;
        }
    }
    return report;
}

} // namespace nsed
