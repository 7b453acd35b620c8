#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "smac/tape.hpp"

namespace smac {

enum class Activation { Tanh, Relu };

// Fully connected network with linear output head. Parameter groups live in
// an external ParamStore; the Mlp only keeps the group handles.
class Mlp {
public:
    Mlp() = default;

    static Mlp create(ParamStore& ps, const std::string& prefix, int in,
                      const std::vector<int>& hidden, int out, Activation act, RngStream& rng) {
        Mlp m;
        m.in_ = in;
        m.out_ = out;
        m.act_ = act;
        int prev = in;
        std::vector<int> widths = hidden;
        widths.push_back(out);
        for (std::size_t l = 0; l < widths.size(); ++l) {
            int w = widths[l];
            double bound = 1.0 / std::sqrt(static_cast<double>(prev));
            m.w_.push_back(ps.add_uniform(prefix + ".w" + std::to_string(l), w, prev, bound, rng));
            m.b_.push_back(ps.add_uniform(prefix + ".b" + std::to_string(l), 1, w, bound, rng));
            prev = w;
        }
        return m;
    }

    Var forward(Tape& t, const ParamStore& ps, Var x) const {
        if (t.cols(x) != in_) throw std::invalid_argument("Mlp::forward: input width mismatch");
        Var h = x;
        for (std::size_t l = 0; l < w_.size(); ++l) {
            h = t.linear(h, t.param(ps, w_[l]), t.param(ps, b_[l]));
            if (l + 1 < w_.size()) h = (act_ == Activation::Tanh) ? t.tanh_(h) : t.relu(h);
        }
        return h;
    }

    // Value-only evaluation for oracles and diagnostics; no tape is recorded.
    std::vector<double> forward_value(const ParamStore& ps, std::span<const double> x) const {
        if (static_cast<int>(x.size()) != in_)
            throw std::invalid_argument("Mlp::forward_value: input width mismatch");
        std::vector<double> h(x.begin(), x.end());
        for (std::size_t l = 0; l < w_.size(); ++l) {
            const auto& W = ps.group(w_[l]);
            const auto& b = ps.group(b_[l]);
            std::vector<double> y(static_cast<std::size_t>(W.rows));
            for (int o = 0; o < W.rows; ++o) {
                double acc = b.value[static_cast<std::size_t>(o)];
                for (int j = 0; j < W.cols; ++j)
                    acc += W.value[static_cast<std::size_t>(o) * W.cols + j] * h[static_cast<std::size_t>(j)];
                y[static_cast<std::size_t>(o)] = acc;
            }
            if (l + 1 < w_.size())
                for (auto& v : y) v = (act_ == Activation::Tanh) ? std::tanh(v) : std::max(0.0, v);
            h = std::move(y);
        }
        return h;
    }

    int input_dim() const { return in_; }
    int output_dim() const { return out_; }
    const std::vector<int>& weight_groups() const { return w_; }
    const std::vector<int>& bias_groups() const { return b_; }

private:
    int in_ = 0;
    int out_ = 0;
    Activation act_ = Activation::Tanh;
    std::vector<int> w_;
    std::vector<int> b_;
};

}  // namespace smac
