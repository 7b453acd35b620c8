#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "smac/rng.hpp"

namespace smac {

struct ParamGroup {
    std::string name;
    int rows = 0;
    int cols = 0;
    std::vector<double> value;  // row-major, rows*cols

    int size() const { return rows * cols; }
};

// Named flat parameter groups. Group layout is fixed after construction;
// every learnable component registers its groups here once.
class ParamStore {
public:
    int add(const std::string& name, int rows, int cols, double init = 0.0) {
        if (index_.count(name)) throw std::invalid_argument("duplicate param group: " + name);
        ParamGroup g;
        g.name = name;
        g.rows = rows;
        g.cols = cols;
        g.value.assign(static_cast<std::size_t>(rows) * cols, init);
        index_[name] = static_cast<int>(groups_.size());
        groups_.push_back(std::move(g));
        return static_cast<int>(groups_.size()) - 1;
    }

    int add_uniform(const std::string& name, int rows, int cols, double bound, RngStream& rng) {
        int id = add(name, rows, cols);
        for (auto& v : groups_[id].value) v = rng.uniform(-bound, bound);
        return id;
    }

    ParamGroup& group(int id) { return groups_.at(static_cast<std::size_t>(id)); }
    const ParamGroup& group(int id) const { return groups_.at(static_cast<std::size_t>(id)); }
    int find(const std::string& name) const { return index_.at(name); }
    int num_groups() const { return static_cast<int>(groups_.size()); }

    int total_size() const {
        int n = 0;
        for (const auto& g : groups_) n += g.size();
        return n;
    }

    bool all_finite() const {
        for (const auto& g : groups_)
            for (double v : g.value)
                if (!std::isfinite(v)) return false;
        return true;
    }

private:
    std::vector<ParamGroup> groups_;
    std::map<std::string, int> index_;
};

// Gradient buffers aligned group-by-group with a ParamStore.
struct Gradients {
    std::vector<std::vector<double>> g;

    explicit Gradients(const ParamStore& ps) {
        g.resize(static_cast<std::size_t>(ps.num_groups()));
        for (int i = 0; i < ps.num_groups(); ++i)
            g[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(ps.group(i).size()), 0.0);
    }

    void zero() {
        for (auto& v : g) std::fill(v.begin(), v.end(), 0.0);
    }

    bool all_finite() const {
        for (const auto& v : g)
            for (double x : v)
                if (!std::isfinite(x)) return false;
        return true;
    }
};

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam over a subset of a ParamStore's groups. Different
// components (actor, critic, world model, temperature) keep independent
// optimizers over one shared store. Moment buffers mirror the covered
// groups; the step counter is shared across them.
class AdamOptimizer {
public:
    AdamOptimizer() = default;
    AdamOptimizer(const ParamStore& ps, std::vector<int> groups, AdamConfig cfg = {})
        : cfg_(cfg), groups_(std::move(groups)) {
        m_.resize(groups_.size());
        v_.resize(groups_.size());
        for (std::size_t i = 0; i < groups_.size(); ++i) {
            auto n = static_cast<std::size_t>(ps.group(groups_[i]).size());
            m_[i].assign(n, 0.0);
            v_[i].assign(n, 0.0);
        }
    }
    explicit AdamOptimizer(const ParamStore& ps, AdamConfig cfg = {})
        : AdamOptimizer(ps, all_groups(ps), cfg) {}

    // Returns false (and leaves params untouched) when the gradient carries a
    // non-finite entry in any covered group.
    bool step(ParamStore& ps, const Gradients& grads) {
        for (int gi : groups_)
            for (double x : grads.g[static_cast<std::size_t>(gi)])
                if (!std::isfinite(x)) {
                    ++rejected_;
                    return false;
                }
        ++t_;
        double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t k = 0; k < groups_.size(); ++k) {
            int gi = groups_[k];
            auto& p = ps.group(gi).value;
            const auto& g = grads.g[static_cast<std::size_t>(gi)];
            auto& m = m_[k];
            auto& v = v_[k];
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
                double mhat = m[i] / bc1;
                double vhat = v[i] / bc2;
                p[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
        return true;
    }

    long step_count() const { return t_; }
    long rejected_count() const { return rejected_; }
    double learning_rate() const { return cfg_.lr; }
    void set_learning_rate(double lr) { cfg_.lr = lr; }
    const std::vector<int>& covered_groups() const { return groups_; }

private:
    static std::vector<int> all_groups(const ParamStore& ps) {
        std::vector<int> g(static_cast<std::size_t>(ps.num_groups()));
        for (int i = 0; i < ps.num_groups(); ++i) g[static_cast<std::size_t>(i)] = i;
        return g;
    }

    AdamConfig cfg_;
    std::vector<int> groups_;
    long t_ = 0;
    long rejected_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

}  // namespace smac
