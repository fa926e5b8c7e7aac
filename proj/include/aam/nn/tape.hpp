#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "aam/nn/matrix.hpp"

namespace aam::nn {

// Trainable parameter with gradient accumulator and Adam moments.
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;
    Matrix m;  // first moment
    Matrix v;  // second moment

    explicit Parameter(std::string n, Matrix val)
        : name(std::move(n)),
          value(std::move(val)),
          grad(value.rows, value.cols),
          m(value.rows, value.cols),
          v(value.rows, value.cols) {}

    void zero_grad() { std::fill(grad.d.begin(), grad.d.end(), 0.0); }
};

// Masked log-probabilities use this finite sentinel instead of -inf so that
// exp() yields exactly 0 without producing NaN in downstream products.
inline constexpr double kMaskedLogProb = -1e30;

// Reverse-mode tape over matrix-granularity ops. One tape per forward pass
// (or per minibatch); call backward() on a 1x1 node to accumulate gradients
// into the referenced Parameters.
class Tape {
public:
    using Id = int;

    enum class Op {
        Input, Param, MatMul, Transpose, Add, Sub, Mul, Scale, AddConst,
        ConcatCols, ConcatRows, MeanRows, GatherRows, SegmentSum, ScaleRows,
        LeakyRelu, Exp, Log, SegmentSoftmax, LogSoftmaxMasked, Pick, Sum,
        Clamp, Min,
    };

    struct Node {
        Op op;
        Id a = -1, b = -1;
        Matrix val;
        Matrix grad;
        std::vector<Id> parents;     // ConcatCols/ConcatRows
        std::vector<int> iaux;       // indices / segment ids / mask
        double daux = 0.0, daux2 = 0.0;
        Parameter* param = nullptr;
    };

    const Matrix& value(Id id) const { return nodes_[id].val; }
    const Matrix& grad(Id id) const { return nodes_[id].grad; }
    size_t num_nodes() const { return nodes_.size(); }

    Id input(Matrix m) {
        Node n{Op::Input};
        n.val = std::move(m);
        return push(std::move(n));
    }

    Id param(Parameter& p) {
        Node n{Op::Param};
        n.val = p.value;
        n.param = &p;
        return push(std::move(n));
    }

    Id matmul(Id a, Id b) {
        const Matrix& A = nodes_[a].val;
        const Matrix& B = nodes_[b].val;
        if (A.cols != B.rows) throw std::invalid_argument("matmul: shape mismatch");
        Node n{Op::MatMul, a, b};
        n.val = matmul_val(A, B);
        return push(std::move(n));
    }

    Id transpose(Id a) {
        const Matrix& A = nodes_[a].val;
        Node n{Op::Transpose, a};
        n.val = Matrix(A.cols, A.rows);
        for (int i = 0; i < A.rows; ++i)
            for (int j = 0; j < A.cols; ++j) n.val.at(j, i) = A.at(i, j);
        return push(std::move(n));
    }

    Id add(Id a, Id b) { return binary(Op::Add, a, b); }
    Id sub(Id a, Id b) { return binary(Op::Sub, a, b); }
    Id mul(Id a, Id b) { return binary(Op::Mul, a, b); }

    Id scale(Id a, double c) {
        Node n{Op::Scale, a};
        n.daux = c;
        n.val = nodes_[a].val;
        for (double& x : n.val.d) x *= c;
        return push(std::move(n));
    }

    Id add_const(Id a, double c) {
        Node n{Op::AddConst, a};
        n.daux = c;
        n.val = nodes_[a].val;
        for (double& x : n.val.d) x += c;
        return push(std::move(n));
    }

    Id concat_cols(const std::vector<Id>& parts) {
        if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
        int rows = nodes_[parts[0]].val.rows, cols = 0;
        for (Id p : parts) {
            if (nodes_[p].val.rows != rows) throw std::invalid_argument("concat_cols: row mismatch");
            cols += nodes_[p].val.cols;
        }
        Node n{Op::ConcatCols};
        n.parents = parts;
        n.val = Matrix(rows, cols);
        int off = 0;
        for (Id p : parts) {
            const Matrix& M = nodes_[p].val;
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < M.cols; ++j) n.val.at(i, off + j) = M.at(i, j);
            off += M.cols;
        }
        return push(std::move(n));
    }

    Id concat_rows(const std::vector<Id>& parts) {
        if (parts.empty()) throw std::invalid_argument("concat_rows: empty");
        int cols = nodes_[parts[0]].val.cols, rows = 0;
        for (Id p : parts) {
            if (nodes_[p].val.cols != cols) throw std::invalid_argument("concat_rows: col mismatch");
            rows += nodes_[p].val.rows;
        }
        Node n{Op::ConcatRows};
        n.parents = parts;
        n.val = Matrix(rows, cols);
        int off = 0;
        for (Id p : parts) {
            const Matrix& M = nodes_[p].val;
            for (int i = 0; i < M.rows; ++i)
                for (int j = 0; j < cols; ++j) n.val.at(off + i, j) = M.at(i, j);
            off += M.rows;
        }
        return push(std::move(n));
    }

    // 1 x cols row of column means; order-independent accumulation.
    Id mean_rows(Id a) {
        const Matrix& A = nodes_[a].val;
        if (A.rows == 0) throw std::invalid_argument("mean_rows: empty matrix");
        Node n{Op::MeanRows, a};
        n.val = Matrix(1, A.cols);
        std::vector<double> col(A.rows);
        for (int j = 0; j < A.cols; ++j) {
            for (int i = 0; i < A.rows; ++i) col[i] = A.at(i, j);
            n.val.at(0, j) = stable_sum(col) / A.rows;
        }
        return push(std::move(n));
    }

    Id gather_rows(Id a, std::vector<int> idx) {
        const Matrix& A = nodes_[a].val;
        Node n{Op::GatherRows, a};
        n.val = Matrix(static_cast<int>(idx.size()), A.cols);
        for (size_t i = 0; i < idx.size(); ++i)
            for (int j = 0; j < A.cols; ++j) n.val.at(static_cast<int>(i), j) = A.at(idx[i], j);
        n.iaux = std::move(idx);
        return push(std::move(n));
    }

    // Sum rows of `a` into `nseg` output rows according to seg ids.
    Id segment_sum(Id a, std::vector<int> seg, int nseg) {
        const Matrix& A = nodes_[a].val;
        if (static_cast<int>(seg.size()) != A.rows)
            throw std::invalid_argument("segment_sum: seg size mismatch");
        Node n{Op::SegmentSum, a};
        n.val = Matrix(nseg, A.cols);
        std::vector<double> terms;
        for (int s = 0; s < nseg; ++s) {
            for (int j = 0; j < A.cols; ++j) {
                terms.clear();
                for (int i = 0; i < A.rows; ++i)
                    if (seg[i] == s) terms.push_back(A.at(i, j));
                n.val.at(s, j) = stable_sum(terms);
            }
        }
        n.iaux = std::move(seg);
        return push(std::move(n));
    }

    // Scale row i of `a` by colvec[i].
    Id scale_rows(Id a, Id colvec) {
        const Matrix& A = nodes_[a].val;
        const Matrix& V = nodes_[colvec].val;
        if (V.cols != 1 || V.rows != A.rows)
            throw std::invalid_argument("scale_rows: shape mismatch");
        Node n{Op::ScaleRows, a, colvec};
        n.val = A;
        for (int i = 0; i < A.rows; ++i)
            for (int j = 0; j < A.cols; ++j) n.val.at(i, j) *= V.at(i, 0);
        return push(std::move(n));
    }

    Id leaky_relu(Id a, double slope) {
        Node n{Op::LeakyRelu, a};
        n.daux = slope;
        n.val = nodes_[a].val;
        for (double& x : n.val.d)
            if (x < 0.0) x *= slope;
        return push(std::move(n));
    }

    Id exp(Id a) {
        Node n{Op::Exp, a};
        n.val = nodes_[a].val;
        for (double& x : n.val.d) x = std::exp(x);
        return push(std::move(n));
    }

    Id log(Id a) {
        Node n{Op::Log, a};
        n.val = nodes_[a].val;
        for (double& x : n.val.d) x = std::log(x);
        return push(std::move(n));
    }

    // Softmax within each segment of a column vector of logits.
    Id segment_softmax(Id logits, std::vector<int> seg) {
        const Matrix& L = nodes_[logits].val;
        if (L.cols != 1 || static_cast<int>(seg.size()) != L.rows)
            throw std::invalid_argument("segment_softmax: shape mismatch");
        int nseg = 0;
        for (int s : seg) nseg = std::max(nseg, s + 1);
        Node n{Op::SegmentSoftmax, logits};
        n.val = Matrix(L.rows, 1);
        std::vector<double> terms;
        for (int s = 0; s < nseg; ++s) {
            double mx = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < L.rows; ++i)
                if (seg[i] == s) mx = std::max(mx, L.at(i, 0));
            terms.clear();
            for (int i = 0; i < L.rows; ++i)
                if (seg[i] == s) terms.push_back(std::exp(L.at(i, 0) - mx));
            double z = stable_sum(terms);
            for (int i = 0; i < L.rows; ++i)
                if (seg[i] == s) n.val.at(i, 0) = std::exp(L.at(i, 0) - mx) / z;
        }
        n.iaux = std::move(seg);
        return push(std::move(n));
    }

    // Log-softmax of a column vector with a boolean mask; masked entries get
    // kMaskedLogProb and receive zero gradient. Rejects all-masked input.
    Id log_softmax_masked(Id logits, std::vector<int> mask) {
        const Matrix& L = nodes_[logits].val;
        if (L.cols != 1 || static_cast<int>(mask.size()) != L.rows)
            throw std::invalid_argument("log_softmax_masked: shape mismatch");
        double mx = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < L.rows; ++i)
            if (!mask[i]) mx = std::max(mx, L.at(i, 0));
        if (!std::isfinite(mx)) throw std::invalid_argument("log_softmax_masked: all entries masked");
        std::vector<double> terms;
        for (int i = 0; i < L.rows; ++i)
            if (!mask[i]) terms.push_back(std::exp(L.at(i, 0) - mx));
        double lz = std::log(stable_sum(terms)) + mx;
        Node n{Op::LogSoftmaxMasked, logits};
        n.val = Matrix(L.rows, 1);
        for (int i = 0; i < L.rows; ++i)
            n.val.at(i, 0) = mask[i] ? kMaskedLogProb : L.at(i, 0) - lz;
        n.iaux = std::move(mask);
        return push(std::move(n));
    }

    Id pick(Id a, int i, int j) {
        Node n{Op::Pick, a};
        n.iaux = {i, j};
        n.val = Matrix(1, 1);
        n.val.at(0, 0) = nodes_[a].val.at(i, j);
        return push(std::move(n));
    }

    Id sum(Id a) {
        Node n{Op::Sum, a};
        n.val = Matrix(1, 1);
        double s = 0.0;
        for (double x : nodes_[a].val.d) s += x;
        n.val.at(0, 0) = s;
        return push(std::move(n));
    }

    // Elementwise clamp; gradient 1 inside [lo, hi], 0 outside.
    Id clamp(Id a, double lo, double hi) {
        Node n{Op::Clamp, a};
        n.daux = lo;
        n.daux2 = hi;
        n.val = nodes_[a].val;
        for (double& x : n.val.d) x = std::min(hi, std::max(lo, x));
        return push(std::move(n));
    }

    // Elementwise min; gradient flows to the smaller argument (ties -> a).
    Id min(Id a, Id b) { return binary(Op::Min, a, b); }

    // Convenience helpers.
    Id dot(Id u, Id v) { return sum(mul(u, v)); }
    Id square(Id a) { return mul(a, a); }

    void backward(Id root) {
        if (nodes_[root].val.rows != 1 || nodes_[root].val.cols != 1)
            throw std::invalid_argument("backward: root must be scalar");
        for (auto& n : nodes_) n.grad = Matrix(n.val.rows, n.val.cols);
        nodes_[root].grad.at(0, 0) = 1.0;
        for (Id id = root; id >= 0; --id) backprop(id);
        for (auto& n : nodes_)
            if (n.op == Op::Param)
                for (size_t k = 0; k < n.grad.d.size(); ++k) n.param->grad.d[k] += n.grad.d[k];
    }

private:
    std::vector<Node> nodes_;

    Id push(Node n) {
        nodes_.push_back(std::move(n));
        return static_cast<Id>(nodes_.size() - 1);
    }

    Id binary(Op op, Id a, Id b) {
        const Matrix& A = nodes_[a].val;
        const Matrix& B = nodes_[b].val;
        if (!A.same_shape(B)) throw std::invalid_argument("binary op: shape mismatch");
        Node n{op, a, b};
        n.val = A;
        switch (op) {
            case Op::Add: for (size_t i = 0; i < A.d.size(); ++i) n.val.d[i] = A.d[i] + B.d[i]; break;
            case Op::Sub: for (size_t i = 0; i < A.d.size(); ++i) n.val.d[i] = A.d[i] - B.d[i]; break;
            case Op::Mul: for (size_t i = 0; i < A.d.size(); ++i) n.val.d[i] = A.d[i] * B.d[i]; break;
            case Op::Min: for (size_t i = 0; i < A.d.size(); ++i) n.val.d[i] = std::min(A.d[i], B.d[i]); break;
            default: throw std::logic_error("not a binary op");
        }
        return push(std::move(n));
    }

    void backprop(Id id) {
        Node& n = nodes_[id];
        const Matrix& g = n.grad;
        bool all_zero = true;
        for (double x : g.d)
            if (x != 0.0) { all_zero = false; break; }
        if (all_zero) return;

        switch (n.op) {
            case Op::Input:
            case Op::Param:
                break;
            case Op::MatMul: {
                const Matrix& A = nodes_[n.a].val;
                const Matrix& B = nodes_[n.b].val;
                Matrix& ga = nodes_[n.a].grad;
                Matrix& gb = nodes_[n.b].grad;
                // ga += g * B^T
                for (int i = 0; i < A.rows; ++i)
                    for (int k = 0; k < A.cols; ++k) {
                        double s = 0.0;
                        for (int j = 0; j < B.cols; ++j) s += g.at(i, j) * B.at(k, j);
                        ga.at(i, k) += s;
                    }
                // gb += A^T * g
                for (int k = 0; k < B.rows; ++k)
                    for (int j = 0; j < B.cols; ++j) {
                        double s = 0.0;
                        for (int i = 0; i < A.rows; ++i) s += A.at(i, k) * g.at(i, j);
                        gb.at(k, j) += s;
                    }
                break;
            }
            case Op::Transpose: {
                Matrix& ga = nodes_[n.a].grad;
                for (int i = 0; i < g.rows; ++i)
                    for (int j = 0; j < g.cols; ++j) ga.at(j, i) += g.at(i, j);
                break;
            }
            case Op::Add:
                for (size_t i = 0; i < g.d.size(); ++i) nodes_[n.a].grad.d[i] += g.d[i];
                for (size_t i = 0; i < g.d.size(); ++i) nodes_[n.b].grad.d[i] += g.d[i];
                break;
            case Op::Sub:
                for (size_t i = 0; i < g.d.size(); ++i) nodes_[n.a].grad.d[i] += g.d[i];
                for (size_t i = 0; i < g.d.size(); ++i) nodes_[n.b].grad.d[i] -= g.d[i];
                break;
            case Op::Mul:
                for (size_t i = 0; i < g.d.size(); ++i) {
                    nodes_[n.a].grad.d[i] += g.d[i] * nodes_[n.b].val.d[i];
                    nodes_[n.b].grad.d[i] += g.d[i] * nodes_[n.a].val.d[i];
                }
                break;
            case Op::Min:
                for (size_t i = 0; i < g.d.size(); ++i) {
                    if (nodes_[n.a].val.d[i] <= nodes_[n.b].val.d[i])
                        nodes_[n.a].grad.d[i] += g.d[i];
                    else
                        nodes_[n.b].grad.d[i] += g.d[i];
                }
                break;
            case Op::Scale:
                for (size_t i = 0; i < g.d.size(); ++i) nodes_[n.a].grad.d[i] += g.d[i] * n.daux;
                break;
            case Op::AddConst:
                for (size_t i = 0; i < g.d.size(); ++i) nodes_[n.a].grad.d[i] += g.d[i];
                break;
            case Op::ConcatCols: {
                int off = 0;
                for (Id p : n.parents) {
                    Matrix& gp = nodes_[p].grad;
                    for (int i = 0; i < gp.rows; ++i)
                        for (int j = 0; j < gp.cols; ++j) gp.at(i, j) += g.at(i, off + j);
                    off += gp.cols;
                }
                break;
            }
            case Op::ConcatRows: {
                int off = 0;
                for (Id p : n.parents) {
                    Matrix& gp = nodes_[p].grad;
                    for (int i = 0; i < gp.rows; ++i)
                        for (int j = 0; j < gp.cols; ++j) gp.at(i, j) += g.at(off + i, j);
                    off += gp.rows;
                }
                break;
            }
            case Op::MeanRows: {
                Matrix& ga = nodes_[n.a].grad;
                double inv = 1.0 / ga.rows;
                for (int i = 0; i < ga.rows; ++i)
                    for (int j = 0; j < ga.cols; ++j) ga.at(i, j) += g.at(0, j) * inv;
                break;
            }
            case Op::GatherRows: {
                Matrix& ga = nodes_[n.a].grad;
                for (size_t i = 0; i < n.iaux.size(); ++i)
                    for (int j = 0; j < ga.cols; ++j)
                        ga.at(n.iaux[i], j) += g.at(static_cast<int>(i), j);
                break;
            }
            case Op::SegmentSum: {
                Matrix& ga = nodes_[n.a].grad;
                for (int i = 0; i < ga.rows; ++i)
                    for (int j = 0; j < ga.cols; ++j) ga.at(i, j) += g.at(n.iaux[i], j);
                break;
            }
            case Op::ScaleRows: {
                const Matrix& A = nodes_[n.a].val;
                const Matrix& V = nodes_[n.b].val;
                Matrix& ga = nodes_[n.a].grad;
                Matrix& gv = nodes_[n.b].grad;
                for (int i = 0; i < A.rows; ++i) {
                    double s = 0.0;
                    for (int j = 0; j < A.cols; ++j) {
                        ga.at(i, j) += g.at(i, j) * V.at(i, 0);
                        s += g.at(i, j) * A.at(i, j);
                    }
                    gv.at(i, 0) += s;
                }
                break;
            }
            case Op::LeakyRelu:
                for (size_t i = 0; i < g.d.size(); ++i) {
                    double x = nodes_[n.a].val.d[i];
                    nodes_[n.a].grad.d[i] += g.d[i] * (x >= 0.0 ? 1.0 : n.daux);
                }
                break;
            case Op::Exp:
                for (size_t i = 0; i < g.d.size(); ++i)
                    nodes_[n.a].grad.d[i] += g.d[i] * n.val.d[i];
                break;
            case Op::Log:
                for (size_t i = 0; i < g.d.size(); ++i)
                    nodes_[n.a].grad.d[i] += g.d[i] / nodes_[n.a].val.d[i];
                break;
            case Op::SegmentSoftmax: {
                Matrix& ga = nodes_[n.a].grad;
                int nseg = 0;
                for (int s : n.iaux) nseg = std::max(nseg, s + 1);
                std::vector<double> dotv(nseg, 0.0);
                for (int i = 0; i < g.rows; ++i) dotv[n.iaux[i]] += g.at(i, 0) * n.val.at(i, 0);
                for (int i = 0; i < g.rows; ++i)
                    ga.at(i, 0) += n.val.at(i, 0) * (g.at(i, 0) - dotv[n.iaux[i]]);
                break;
            }
            case Op::LogSoftmaxMasked: {
                Matrix& ga = nodes_[n.a].grad;
                double gs = 0.0;
                for (int i = 0; i < g.rows; ++i)
                    if (!n.iaux[i]) gs += g.at(i, 0);
                for (int i = 0; i < g.rows; ++i) {
                    if (n.iaux[i]) continue;
                    double p = std::exp(n.val.at(i, 0));
                    ga.at(i, 0) += g.at(i, 0) - p * gs;
                }
                break;
            }
            case Op::Pick:
                nodes_[n.a].grad.at(n.iaux[0], n.iaux[1]) += g.at(0, 0);
                break;
            case Op::Sum:
                for (size_t i = 0; i < nodes_[n.a].grad.d.size(); ++i)
                    nodes_[n.a].grad.d[i] += g.at(0, 0);
                break;
            case Op::Clamp:
                for (size_t i = 0; i < g.d.size(); ++i) {
                    double x = nodes_[n.a].val.d[i];
                    if (x >= n.daux && x <= n.daux2) nodes_[n.a].grad.d[i] += g.d[i];
                }
                break;
        }
    }
};

}  // namespace aam::nn
