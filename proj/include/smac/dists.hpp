#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "smac/rng.hpp"
#include "smac/tape.hpp"

namespace smac {

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
inline constexpr double kHalfLogTwoPiE = 1.4189385332046727417803297364056;
inline constexpr double kLogStdMin = -10.0;
inline constexpr double kLogStdMax = 2.0;

// ---------------------------------------------------------------------------
// Value-level distributions (environments, oracles, diagnostics).
// ---------------------------------------------------------------------------

struct DiagGaussian {
    std::vector<double> mean;
    std::vector<double> log_std;

    int dim() const { return static_cast<int>(mean.size()); }

    std::vector<double> sample_reparam(const NoiseVector& eps) const {
        if (eps.dim() != dim()) throw std::invalid_argument("sample_reparam: dim mismatch");
        std::vector<double> x(mean.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = mean[i] + std::exp(log_std[i]) * eps.eps[i];
        return x;
    }

    double log_prob(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != dim()) throw std::invalid_argument("log_prob: dim mismatch");
        double lp = 0.0;
        for (std::size_t i = 0; i < mean.size(); ++i) {
            double z = (x[i] - mean[i]) * std::exp(-log_std[i]);
            lp += -0.5 * kLogTwoPi - log_std[i] - 0.5 * z * z;
        }
        return lp;
    }

    double entropy_closed_form() const {
        double h = 0.0;
        for (double ls : log_std) h += kHalfLogTwoPiE + ls;
        return h;
    }
};

// tanh-squashed diagonal Gaussian; samples carry their pre-squash value.
struct TanhDiagGaussian {
    DiagGaussian base;

    // returns (a, u) with a = tanh(u)
    std::pair<std::vector<double>, std::vector<double>> sample_reparam(const NoiseVector& eps) const {
        auto u = base.sample_reparam(eps);
        std::vector<double> a(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) a[i] = std::tanh(u[i]);
        return {a, u};
    }

    // log pi(a) given the pre-squash value u. Uses the stable expansion
    // log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u)).
    double log_prob(std::span<const double> a, std::span<const double> u) const {
        if (a.size() != u.size() || static_cast<int>(a.size()) != base.dim())
            throw std::invalid_argument("tanh log_prob: dim mismatch");
        // |a| == 1.0 is reachable: tanh saturates in double for |u| > ~19 while
        // the density stays well-defined through u, so only reject |a| > 1.
        for (double ai : a)
            if (std::abs(ai) > 1.0)
                throw std::domain_error("tanh log_prob: |a| > 1, upstream clamp failed");
        double lp = base.log_prob(u);
        for (double ui : u) {
            double softplus_m2u;
            double x = -2.0 * ui;
            if (x > 35.0)
                softplus_m2u = x;
            else if (x < -35.0)
                softplus_m2u = std::exp(x);
            else
                softplus_m2u = std::log1p(std::exp(x));
            lp -= 2.0 * (std::log(2.0) - ui - softplus_m2u);
        }
        return lp;
    }
};

// ---------------------------------------------------------------------------
// Tape-level building blocks. Shapes are B x D; results are B x 1.
// ---------------------------------------------------------------------------

// mean + exp(log_std) .* eps, recorded on the tape (eps enters as a constant)
inline Var sample_reparam(Tape& t, Var mean, Var log_std, std::span<const double> eps) {
    return t.add(mean, t.mul_const(t.exp_(log_std), eps));
}

// per-row Gaussian log density, summed over coordinates
inline Var gaussian_log_prob(Tape& t, Var mean, Var log_std, Var x) {
    Var z = t.mul(t.sub(x, mean), t.exp_(t.neg(log_std)));
    Var per = t.sub(t.scale(t.square(z), -0.5), log_std);
    per = t.add_scalar(per, -0.5 * kLogTwoPi);
    return t.row_sum(per);
}

// per-row closed-form Gaussian entropy
inline Var gaussian_entropy(Tape& t, Var log_std) {
    return t.row_sum(t.add_scalar(log_std, kHalfLogTwoPiE));
}

// log pi(a) of the tanh-squashed Gaussian, given pre-squash u (B x D) on the
// tape. a = tanh(u) is derived internally; the correction term uses the
// cancellation-free form.
inline Var tanh_gaussian_log_prob(Tape& t, Var mean, Var log_std, Var u) {
    Var base = gaussian_log_prob(t, mean, log_std, u);
    // log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u))
    Var corr = t.scale(t.add_scalar(t.add(t.neg(u), t.neg(t.softplus(t.scale(u, -2.0)))), std::log(2.0)), 2.0);
    return t.sub(base, t.row_sum(corr));
}

// closed-form KL(q || p) between diagonal Gaussians, per row
inline Var gaussian_kl(Tape& t, Var mean_q, Var log_std_q, Var mean_p, Var log_std_p) {
    Var dls = t.sub(log_std_p, log_std_q);
    Var var_ratio = t.exp_(t.scale(t.sub(log_std_q, log_std_p), 2.0));
    Var md = t.square(t.mul(t.sub(mean_q, mean_p), t.exp_(t.neg(log_std_p))));
    Var per = t.add_scalar(t.add(dls, t.scale(t.add(var_ratio, md), 0.5)), -0.5);
    return t.row_sum(per);
}

}  // namespace smac
