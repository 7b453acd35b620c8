#pragma once

#include <span>
#include <vector>

#include "smac/params.hpp"

namespace smac {

// Handle into a Tape. Only meaningful for the tape that produced it.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape over matrix-valued nodes (row-major, rows x cols).
// Forward values are computed eagerly as nodes are recorded; backward()
// replays the record in reverse. Stochastic nodes enter as constants holding
// pre-drawn noise, so replaying the tape is bit-for-bit reproducible.
class Tape {
public:
    enum class Op {
        Input,        // constant leaf, no gradient
        Param,        // parameter leaf, gradient exported per group
        Linear,       // x (B x in), W (out x in), b (1 x out) -> B x out
        Tanh,
        Relu,
        Exp,
        Log,
        Neg,
        Square,
        Softplus,     // log(1 + e^x), stable
        Scale,        // c * x
        AddScalarC,   // x + c
        Add,          // elementwise; rhs may be 1x1 (broadcast)
        Sub,
        Mul,
        Min,          // elementwise min of two same-shape nodes
        MulConst,     // x .* aux
        AddConst,     // x + aux
        Clamp,        // clamp to [lo, hi]; gradient zero outside
        RepeatRows,   // each row repeated k times
        Reshape,      // same data, new shape
        ConcatCols,   // horizontal concat of same-row nodes
        SliceCols,    // columns [c0, c1)
        RowSum,       // B x D -> B x 1
        RowMean,      // B x D -> B x 1
        LogSumExpRow, // B x D -> B x 1, max-subtracted
        SumAll,       // -> 1 x 1
        MeanAll,      // -> 1 x 1
        Detach,       // value copy, stops gradient
    };

    struct Node {
        Op op;
        int rows = 0, cols = 0;
        int a = -1, b = -1, c = -1;       // input ids
        std::vector<int> srcs;            // ConcatCols inputs
        std::vector<double> val;
        std::vector<double> grad;
        std::vector<double> aux;          // constant payload / op scalars
        int i0 = 0;                       // op int parameter (k, c0, ...)
        int i1 = 0;
        int pgroup = -1;                  // Param leaf: group index
    };

    // --- leaves ---
    Var input(int rows, int cols, std::span<const double> data);
    Var input_scalar(double v);
    Var param(const ParamStore& ps, int group_id);

    // --- ops ---
    Var linear(Var x, Var W, Var b);
    Var tanh_(Var x);
    Var relu(Var x);
    Var exp_(Var x);
    Var log_(Var x);
    Var neg(Var x);
    Var square(Var x);
    Var softplus(Var x);
    Var scale(Var x, double c);
    Var add_scalar(Var x, double c);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var min_(Var a, Var b);
    Var mul_const(Var x, std::span<const double> c);
    Var add_const(Var x, std::span<const double> c);
    Var clamp(Var x, double lo, double hi);
    Var repeat_rows(Var x, int k);
    Var reshape(Var x, int rows, int cols);
    Var concat_cols(const std::vector<Var>& xs);
    Var slice_cols(Var x, int c0, int c1);
    Var row_sum(Var x);
    Var row_mean(Var x);
    Var logsumexp_row(Var x);
    Var sum_all(Var x);
    Var mean_all(Var x);
    Var detach(Var x);

    // --- access ---
    int rows(Var v) const { return node(v).rows; }
    int cols(Var v) const { return node(v).cols; }
    std::span<const double> value(Var v) const { return node(v).val; }
    double scalar(Var v) const;
    std::span<const double> grad(Var v) const { return node(v).grad; }

    // Reverse sweep from a scalar loss node. Throws std::invalid_argument for
    // non-scalar losses. Gradients accumulate into `out` for Param leaves.
    void backward(Var loss, Gradients& out);

    // Recompute all node values from the recorded program. Used to verify
    // that the record is a faithful replayable program.
    void replay_forward();

    std::size_t num_nodes() const { return nodes_.size(); }

private:
    const Node& node(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)); }
    Node& node(Var v) { return nodes_.at(static_cast<std::size_t>(v.id)); }
    Var push(Node&& n);
    void compute(Node& n);

    std::vector<Node> nodes_;
};

}  // namespace smac
