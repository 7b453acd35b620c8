#include "smac/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace smac {

namespace {

double softplus_stable(double x) {
    // log(1 + e^x) without overflow for large |x|
    if (x > 35.0) return x;
    if (x < -35.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

void check(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

Var Tape::push(Node&& n) {
    compute(n);
    n.grad.assign(n.val.size(), 0.0);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::input(int rows, int cols, std::span<const double> data) {
    check(static_cast<int>(data.size()) == rows * cols, "input: size mismatch");
    Node n;
    n.op = Op::Input;
    n.rows = rows;
    n.cols = cols;
    n.aux.assign(data.begin(), data.end());
    return push(std::move(n));
}

Var Tape::input_scalar(double v) { return input(1, 1, std::span<const double>(&v, 1)); }

Var Tape::param(const ParamStore& ps, int group_id) {
    const auto& g = ps.group(group_id);
    Node n;
    n.op = Op::Param;
    n.rows = g.rows;
    n.cols = g.cols;
    n.aux = g.value;
    n.pgroup = group_id;
    return push(std::move(n));
}

Var Tape::linear(Var x, Var W, Var b) {
    const auto& nx = node(x);
    const auto& nw = node(W);
    const auto& nb = node(b);
    check(nx.cols == nw.cols, "linear: input width mismatch");
    check(nb.rows == 1 && nb.cols == nw.rows, "linear: bias shape mismatch");
    Node n;
    n.op = Op::Linear;
    n.a = x.id;
    n.b = W.id;
    n.c = b.id;
    n.rows = nx.rows;
    n.cols = nw.rows;
    return push(std::move(n));
}

#define SMAC_UNARY(FN, OP)                          \
    Var Tape::FN(Var x) {                           \
        Node n;                                     \
        n.op = Op::OP;                              \
        n.a = x.id;                                 \
        n.rows = node(x).rows;                      \
        n.cols = node(x).cols;                      \
        return push(std::move(n));                  \
    }

SMAC_UNARY(tanh_, Tanh)
SMAC_UNARY(relu, Relu)
SMAC_UNARY(exp_, Exp)
SMAC_UNARY(log_, Log)
SMAC_UNARY(neg, Neg)
SMAC_UNARY(square, Square)
SMAC_UNARY(softplus, Softplus)
SMAC_UNARY(detach, Detach)
#undef SMAC_UNARY

Var Tape::scale(Var x, double c) {
    Node n;
    n.op = Op::Scale;
    n.a = x.id;
    n.rows = node(x).rows;
    n.cols = node(x).cols;
    n.aux = {c};
    return push(std::move(n));
}

Var Tape::add_scalar(Var x, double c) {
    Node n;
    n.op = Op::AddScalarC;
    n.a = x.id;
    n.rows = node(x).rows;
    n.cols = node(x).cols;
    n.aux = {c};
    return push(std::move(n));
}

static bool binary_shapes_ok(const Tape::Node& a, const Tape::Node& b) {
    if (a.rows == b.rows && a.cols == b.cols) return true;
    return b.rows == 1 && b.cols == 1;  // scalar broadcast on rhs
}

Var Tape::add(Var a, Var b) {
    check(binary_shapes_ok(node(a), node(b)), "add: shape mismatch");
    Node n;
    n.op = Op::Add;
    n.a = a.id;
    n.b = b.id;
    n.rows = node(a).rows;
    n.cols = node(a).cols;
    return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
    check(binary_shapes_ok(node(a), node(b)), "sub: shape mismatch");
    Node n;
    n.op = Op::Sub;
    n.a = a.id;
    n.b = b.id;
    n.rows = node(a).rows;
    n.cols = node(a).cols;
    return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
    check(binary_shapes_ok(node(a), node(b)), "mul: shape mismatch");
    Node n;
    n.op = Op::Mul;
    n.a = a.id;
    n.b = b.id;
    n.rows = node(a).rows;
    n.cols = node(a).cols;
    return push(std::move(n));
}

Var Tape::min_(Var a, Var b) {
    check(node(a).rows == node(b).rows && node(a).cols == node(b).cols, "min: shape mismatch");
    Node n;
    n.op = Op::Min;
    n.a = a.id;
    n.b = b.id;
    n.rows = node(a).rows;
    n.cols = node(a).cols;
    return push(std::move(n));
}

Var Tape::mul_const(Var x, std::span<const double> c) {
    check(static_cast<int>(c.size()) == node(x).rows * node(x).cols, "mul_const: size mismatch");
    Node n;
    n.op = Op::MulConst;
    n.a = x.id;
    n.rows = node(x).rows;
    n.cols = node(x).cols;
    n.aux.assign(c.begin(), c.end());
    return push(std::move(n));
}

Var Tape::add_const(Var x, std::span<const double> c) {
    check(static_cast<int>(c.size()) == node(x).rows * node(x).cols, "add_const: size mismatch");
    Node n;
    n.op = Op::AddConst;
    n.a = x.id;
    n.rows = node(x).rows;
    n.cols = node(x).cols;
    n.aux.assign(c.begin(), c.end());
    return push(std::move(n));
}

Var Tape::clamp(Var x, double lo, double hi) {
    Node n;
    n.op = Op::Clamp;
    n.a = x.id;
    n.rows = node(x).rows;
    n.cols = node(x).cols;
    n.aux = {lo, hi};
    return push(std::move(n));
}

Var Tape::repeat_rows(Var x, int k) {
    check(k >= 1, "repeat_rows: k must be >= 1");
    Node n;
    n.op = Op::RepeatRows;
    n.a = x.id;
    n.i0 = k;
    n.rows = node(x).rows * k;
    n.cols = node(x).cols;
    return push(std::move(n));
}

Var Tape::reshape(Var x, int rows, int cols) {
    check(rows * cols == node(x).rows * node(x).cols, "reshape: size mismatch");
    Node n;
    n.op = Op::Reshape;
    n.a = x.id;
    n.rows = rows;
    n.cols = cols;
    return push(std::move(n));
}

Var Tape::concat_cols(const std::vector<Var>& xs) {
    check(!xs.empty(), "concat_cols: empty input");
    int r = node(xs[0]).rows;
    int c = 0;
    Node n;
    n.op = Op::ConcatCols;
    for (Var v : xs) {
        check(node(v).rows == r, "concat_cols: row mismatch");
        c += node(v).cols;
        n.srcs.push_back(v.id);
    }
    n.rows = r;
    n.cols = c;
    return push(std::move(n));
}

Var Tape::slice_cols(Var x, int c0, int c1) {
    check(0 <= c0 && c0 < c1 && c1 <= node(x).cols, "slice_cols: bad range");
    Node n;
    n.op = Op::SliceCols;
    n.a = x.id;
    n.i0 = c0;
    n.i1 = c1;
    n.rows = node(x).rows;
    n.cols = c1 - c0;
    return push(std::move(n));
}

#define SMAC_ROWRED(FN, OP)                  \
    Var Tape::FN(Var x) {                    \
        Node n;                              \
        n.op = Op::OP;                       \
        n.a = x.id;                          \
        n.rows = node(x).rows;               \
        n.cols = 1;                          \
        return push(std::move(n));           \
    }

SMAC_ROWRED(row_sum, RowSum)
SMAC_ROWRED(row_mean, RowMean)
SMAC_ROWRED(logsumexp_row, LogSumExpRow)
#undef SMAC_ROWRED

Var Tape::sum_all(Var x) {
    Node n;
    n.op = Op::SumAll;
    n.a = x.id;
    n.rows = 1;
    n.cols = 1;
    return push(std::move(n));
}

Var Tape::mean_all(Var x) {
    Node n;
    n.op = Op::MeanAll;
    n.a = x.id;
    n.rows = 1;
    n.cols = 1;
    return push(std::move(n));
}

double Tape::scalar(Var v) const {
    check(node(v).rows == 1 && node(v).cols == 1, "scalar: node is not 1x1");
    return node(v).val[0];
}

void Tape::compute(Node& n) {
    auto sz = static_cast<std::size_t>(n.rows) * static_cast<std::size_t>(n.cols);
    n.val.resize(sz);
    auto A = [&](int id) -> const Node& { return nodes_[static_cast<std::size_t>(id)]; };

    switch (n.op) {
        case Op::Input:
        case Op::Param:
            std::copy(n.aux.begin(), n.aux.end(), n.val.begin());
            break;
        case Op::Linear: {
            const auto& x = A(n.a);
            const auto& w = A(n.b);
            const auto& b = A(n.c);
            int B = x.rows, in = x.cols, out = w.rows;
            for (int i = 0; i < B; ++i) {
                const double* xr = &x.val[static_cast<std::size_t>(i) * in];
                double* yr = &n.val[static_cast<std::size_t>(i) * out];
                for (int o = 0; o < out; ++o) {
                    const double* wr = &w.val[static_cast<std::size_t>(o) * in];
                    double acc = b.val[static_cast<std::size_t>(o)];
                    for (int j = 0; j < in; ++j) acc += wr[j] * xr[j];
                    yr[o] = acc;
                }
            }
            break;
        }
        case Op::Tanh:
            for (std::size_t i = 0; i < sz; ++i) n.val[i] = std::tanh(A(n.a).val[i]);
            break;
        case Op::Relu:
            for (std::size_t i = 0; i < sz; ++i) n.val[i] = std::max(0.0, A(n.a).val[i]);
            break;
        case Op::Exp:
            for (std::size_t i = 0; i < sz; ++i) n.val[i] = std::exp(A(n.a).val[i]);
            break;
        case Op::Log:
            for (std::size_t i = 0; i < sz; ++i) n.val[i] = std::log(A(n.a).val[i]);
            break;
        case Op::Neg:
            for (std::size_t i = 0; i < sz; ++i) n.val[i] = -A(n.a).val[i];
            break;
        case Op::Square:
            for (std::size_t i = 0; i < sz; ++i) n.val[i] = A(n.a).val[i] * A(n.a).val[i];
            break;
        case Op::Softplus:
            for (std::size_t i = 0; i < sz; ++i) n.val[i] = softplus_stable(A(n.a).val[i]);
            break;
        case Op::Scale:
            for (std::size_t i = 0; i < sz; ++i) n.val[i] = n.aux[0] * A(n.a).val[i];
            break;
        case Op::AddScalarC:
            for (std::size_t i = 0; i < sz; ++i) n.val[i] = A(n.a).val[i] + n.aux[0];
            break;
        case Op::Add: {
            const auto& b = A(n.b);
            bool bc = (b.rows == 1 && b.cols == 1 && sz != 1);
            for (std::size_t i = 0; i < sz; ++i) n.val[i] = A(n.a).val[i] + (bc ? b.val[0] : b.val[i]);
            break;
        }
        case Op::Sub: {
            const auto& b = A(n.b);
            bool bc = (b.rows == 1 && b.cols == 1 && sz != 1);
            for (std::size_t i = 0; i < sz; ++i) n.val[i] = A(n.a).val[i] - (bc ? b.val[0] : b.val[i]);
            break;
        }
        case Op::Mul: {
            const auto& b = A(n.b);
            bool bc = (b.rows == 1 && b.cols == 1 && sz != 1);
            for (std::size_t i = 0; i < sz; ++i) n.val[i] = A(n.a).val[i] * (bc ? b.val[0] : b.val[i]);
            break;
        }
        case Op::Min:
            for (std::size_t i = 0; i < sz; ++i) n.val[i] = std::min(A(n.a).val[i], A(n.b).val[i]);
            break;
        case Op::MulConst:
            for (std::size_t i = 0; i < sz; ++i) n.val[i] = A(n.a).val[i] * n.aux[i];
            break;
        case Op::AddConst:
            for (std::size_t i = 0; i < sz; ++i) n.val[i] = A(n.a).val[i] + n.aux[i];
            break;
        case Op::Clamp:
            for (std::size_t i = 0; i < sz; ++i)
                n.val[i] = std::min(n.aux[1], std::max(n.aux[0], A(n.a).val[i]));
            break;
        case Op::RepeatRows: {
            const auto& x = A(n.a);
            int k = n.i0, c = x.cols;
            for (int i = 0; i < x.rows; ++i)
                for (int r = 0; r < k; ++r)
                    std::copy(&x.val[static_cast<std::size_t>(i) * c],
                              &x.val[static_cast<std::size_t>(i) * c] + c,
                              &n.val[(static_cast<std::size_t>(i) * k + r) * c]);
            break;
        }
        case Op::Reshape:
        case Op::Detach:
            std::copy(A(n.a).val.begin(), A(n.a).val.end(), n.val.begin());
            break;
        case Op::ConcatCols: {
            int off = 0;
            for (int sid : n.srcs) {
                const auto& s = A(sid);
                for (int i = 0; i < s.rows; ++i)
                    std::copy(&s.val[static_cast<std::size_t>(i) * s.cols],
                              &s.val[static_cast<std::size_t>(i) * s.cols] + s.cols,
                              &n.val[static_cast<std::size_t>(i) * n.cols + off]);
                off += s.cols;
            }
            break;
        }
        case Op::SliceCols: {
            const auto& x = A(n.a);
            for (int i = 0; i < n.rows; ++i)
                std::copy(&x.val[static_cast<std::size_t>(i) * x.cols + n.i0],
                          &x.val[static_cast<std::size_t>(i) * x.cols + n.i1],
                          &n.val[static_cast<std::size_t>(i) * n.cols]);
            break;
        }
        case Op::RowSum:
        case Op::RowMean: {
            const auto& x = A(n.a);
            for (int i = 0; i < x.rows; ++i) {
                double acc = 0.0;
                for (int j = 0; j < x.cols; ++j) acc += x.val[static_cast<std::size_t>(i) * x.cols + j];
                n.val[static_cast<std::size_t>(i)] = (n.op == Op::RowMean) ? acc / x.cols : acc;
            }
            break;
        }
        case Op::LogSumExpRow: {
            const auto& x = A(n.a);
            for (int i = 0; i < x.rows; ++i) {
                const double* xr = &x.val[static_cast<std::size_t>(i) * x.cols];
                double m = xr[0];
                for (int j = 1; j < x.cols; ++j) m = std::max(m, xr[j]);
                double acc = 0.0;
                for (int j = 0; j < x.cols; ++j) acc += std::exp(xr[j] - m);
                n.val[static_cast<std::size_t>(i)] = m + std::log(acc);
            }
            break;
        }
        case Op::SumAll:
        case Op::MeanAll: {
            const auto& x = A(n.a);
            double acc = 0.0;
            for (double v : x.val) acc += v;
            n.val[0] = (n.op == Op::MeanAll) ? acc / static_cast<double>(x.val.size()) : acc;
            break;
        }
    }
}

void Tape::replay_forward() {
    for (auto& n : nodes_) compute(n);
}

void Tape::backward(Var loss, Gradients& out) {
    check(node(loss).rows == 1 && node(loss).cols == 1, "backward: loss must be scalar");
    for (auto& n : nodes_) std::fill(n.grad.begin(), n.grad.end(), 0.0);
    node(loss).grad[0] = 1.0;

    for (int id = loss.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        bool any = false;
        for (double g : n.grad)
            if (g != 0.0) {
                any = true;
                break;
            }
        if (!any) continue;
        auto A = [&](int i) -> Node& { return nodes_[static_cast<std::size_t>(i)]; };
        auto sz = n.val.size();

        switch (n.op) {
            case Op::Input:
                break;
            case Op::Param:
                if (n.pgroup >= 0) {
                    auto& g = out.g.at(static_cast<std::size_t>(n.pgroup));
                    for (std::size_t i = 0; i < sz; ++i) g[i] += n.grad[i];
                }
                break;
            case Op::Linear: {
                Node& x = A(n.a);
                Node& w = A(n.b);
                Node& b = A(n.c);
                int B = x.rows, in = x.cols, out_ = w.rows;
                for (int i = 0; i < B; ++i) {
                    const double* gy = &n.grad[static_cast<std::size_t>(i) * out_];
                    const double* xr = &x.val[static_cast<std::size_t>(i) * in];
                    double* gx = &x.grad[static_cast<std::size_t>(i) * in];
                    for (int o = 0; o < out_; ++o) {
                        double g = gy[o];
                        if (g == 0.0) continue;
                        const double* wr = &w.val[static_cast<std::size_t>(o) * in];
                        double* gw = &w.grad[static_cast<std::size_t>(o) * in];
                        for (int j = 0; j < in; ++j) {
                            gx[j] += g * wr[j];
                            gw[j] += g * xr[j];
                        }
                        b.grad[static_cast<std::size_t>(o)] += g;
                    }
                }
                break;
            }
            case Op::Tanh:
                for (std::size_t i = 0; i < sz; ++i)
                    A(n.a).grad[i] += n.grad[i] * (1.0 - n.val[i] * n.val[i]);
                break;
            case Op::Relu:
                for (std::size_t i = 0; i < sz; ++i)
                    if (A(n.a).val[i] > 0.0) A(n.a).grad[i] += n.grad[i];
                break;
            case Op::Exp:
                for (std::size_t i = 0; i < sz; ++i) A(n.a).grad[i] += n.grad[i] * n.val[i];
                break;
            case Op::Log:
                for (std::size_t i = 0; i < sz; ++i) A(n.a).grad[i] += n.grad[i] / A(n.a).val[i];
                break;
            case Op::Neg:
                for (std::size_t i = 0; i < sz; ++i) A(n.a).grad[i] -= n.grad[i];
                break;
            case Op::Square:
                for (std::size_t i = 0; i < sz; ++i) A(n.a).grad[i] += n.grad[i] * 2.0 * A(n.a).val[i];
                break;
            case Op::Softplus:
                for (std::size_t i = 0; i < sz; ++i) {
                    double s = 1.0 / (1.0 + std::exp(-A(n.a).val[i]));
                    A(n.a).grad[i] += n.grad[i] * s;
                }
                break;
            case Op::Scale:
                for (std::size_t i = 0; i < sz; ++i) A(n.a).grad[i] += n.grad[i] * n.aux[0];
                break;
            case Op::AddScalarC:
            case Op::Detach:
                if (n.op == Op::AddScalarC)
                    for (std::size_t i = 0; i < sz; ++i) A(n.a).grad[i] += n.grad[i];
                break;
            case Op::Add: {
                Node& b = A(n.b);
                bool bc = (b.val.size() == 1 && sz != 1);
                for (std::size_t i = 0; i < sz; ++i) {
                    A(n.a).grad[i] += n.grad[i];
                    b.grad[bc ? 0 : i] += n.grad[i];
                }
                break;
            }
            case Op::Sub: {
                Node& b = A(n.b);
                bool bc = (b.val.size() == 1 && sz != 1);
                for (std::size_t i = 0; i < sz; ++i) {
                    A(n.a).grad[i] += n.grad[i];
                    b.grad[bc ? 0 : i] -= n.grad[i];
                }
                break;
            }
            case Op::Mul: {
                Node& a = A(n.a);
                Node& b = A(n.b);
                bool bc = (b.val.size() == 1 && sz != 1);
                for (std::size_t i = 0; i < sz; ++i) {
                    a.grad[i] += n.grad[i] * (bc ? b.val[0] : b.val[i]);
                    b.grad[bc ? 0 : i] += n.grad[i] * a.val[i];
                }
                break;
            }
            case Op::Min:
                for (std::size_t i = 0; i < sz; ++i) {
                    if (A(n.a).val[i] <= A(n.b).val[i])
                        A(n.a).grad[i] += n.grad[i];
                    else
                        A(n.b).grad[i] += n.grad[i];
                }
                break;
            case Op::MulConst:
                for (std::size_t i = 0; i < sz; ++i) A(n.a).grad[i] += n.grad[i] * n.aux[i];
                break;
            case Op::AddConst:
                for (std::size_t i = 0; i < sz; ++i) A(n.a).grad[i] += n.grad[i];
                break;
            case Op::Clamp:
                for (std::size_t i = 0; i < sz; ++i) {
                    double v = A(n.a).val[i];
                    if (v >= n.aux[0] && v <= n.aux[1]) A(n.a).grad[i] += n.grad[i];
                }
                break;
            case Op::RepeatRows: {
                Node& x = A(n.a);
                int k = n.i0, c = x.cols;
                for (int i = 0; i < x.rows; ++i)
                    for (int r = 0; r < k; ++r)
                        for (int j = 0; j < c; ++j)
                            x.grad[static_cast<std::size_t>(i) * c + j] +=
                                n.grad[(static_cast<std::size_t>(i) * k + r) * c + j];
                break;
            }
            case Op::Reshape:
                for (std::size_t i = 0; i < sz; ++i) A(n.a).grad[i] += n.grad[i];
                break;
            case Op::ConcatCols: {
                int off = 0;
                for (int sid : n.srcs) {
                    Node& s = A(sid);
                    for (int i = 0; i < s.rows; ++i)
                        for (int j = 0; j < s.cols; ++j)
                            s.grad[static_cast<std::size_t>(i) * s.cols + j] +=
                                n.grad[static_cast<std::size_t>(i) * n.cols + off + j];
                    off += s.cols;
                }
                break;
            }
            case Op::SliceCols: {
                Node& x = A(n.a);
                for (int i = 0; i < n.rows; ++i)
                    for (int j = 0; j < n.cols; ++j)
                        x.grad[static_cast<std::size_t>(i) * x.cols + n.i0 + j] +=
                            n.grad[static_cast<std::size_t>(i) * n.cols + j];
                break;
            }
            case Op::RowSum:
            case Op::RowMean: {
                Node& x = A(n.a);
                double inv = (n.op == Op::RowMean) ? 1.0 / x.cols : 1.0;
                for (int i = 0; i < x.rows; ++i)
                    for (int j = 0; j < x.cols; ++j)
                        x.grad[static_cast<std::size_t>(i) * x.cols + j] +=
                            n.grad[static_cast<std::size_t>(i)] * inv;
                break;
            }
            case Op::LogSumExpRow: {
                Node& x = A(n.a);
                for (int i = 0; i < x.rows; ++i) {
                    double g = n.grad[static_cast<std::size_t>(i)];
                    if (g == 0.0) continue;
                    double lse = n.val[static_cast<std::size_t>(i)];
                    for (int j = 0; j < x.cols; ++j)
                        x.grad[static_cast<std::size_t>(i) * x.cols + j] +=
                            g * std::exp(x.val[static_cast<std::size_t>(i) * x.cols + j] - lse);
                }
                break;
            }
            case Op::SumAll:
            case Op::MeanAll: {
                Node& x = A(n.a);
                double inv = (n.op == Op::MeanAll) ? 1.0 / static_cast<double>(x.val.size()) : 1.0;
                for (std::size_t i = 0; i < x.val.size(); ++i) x.grad[i] += n.grad[0] * inv;
                break;
            }
        }
    }
}

}  // namespace smac
