#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "smac/dists.hpp"
#include "smac/quad.hpp"

using namespace smac;
using namespace smac::testing;

TEST_CASE("diagonal Gaussian log density: frozen values") {
    DiagGaussian g{{0.0}, {0.0}};
    // log N(0; 0, 1) = -0.5 log(2 pi), computed independently
    CHECK(g.log_prob(std::vector<double>{0.0}) ==
          doctest::Approx(-0.91893853320467274).epsilon(1e-14));
    CHECK(g.log_prob(std::vector<double>{1.0}) ==
          doctest::Approx(-1.4189385332046727).epsilon(1e-14));

    DiagGaussian g2{{1.0, -2.0}, {std::log(0.5), std::log(2.0)}};
    double lp = -0.5 * std::log(2 * M_PI * 0.25) - 0.5 * std::pow((0.3 - 1.0) / 0.5, 2) +
                -0.5 * std::log(2 * M_PI * 4.0) - 0.5 * std::pow((-1.0 + 2.0) / 2.0, 2);
    CHECK(g2.log_prob(std::vector<double>{0.3, -1.0}) == doctest::Approx(lp).epsilon(1e-13));
}

TEST_CASE("Gaussian density integrates to one") {
    DiagGaussian g{{0.4}, {std::log(0.7)}};
    double z = adaptive_simpson(
        [&](double x) { return std::exp(g.log_prob(std::vector<double>{x})); }, -8.0, 8.0);
    CHECK(z == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("tanh-squashed density integrates to one over (-1, 1)") {
    TanhDiagGaussian g{{{0.3}, {std::log(0.8)}}};
    double z = adaptive_simpson(
        [&](double a) {
            double u = std::atanh(a);
            return std::exp(g.log_prob(std::vector<double>{a}, std::vector<double>{u}));
        },
        -1.0 + 1e-12, 1.0 - 1e-12);
    CHECK(z == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("tanh correction equals the naive form away from saturation") {
    TanhDiagGaussian g{{{0.0}, {0.0}}};
    for (double u : {-1.5, -0.2, 0.0, 0.7, 2.0}) {
        double a = std::tanh(u);
        double lp = g.log_prob(std::vector<double>{a}, std::vector<double>{u});
        double naive = g.base.log_prob(std::vector<double>{u}) - std::log(1.0 - a * a);
        CHECK(lp == doctest::Approx(naive).epsilon(1e-12));
    }
}

TEST_CASE("tanh log density rejects out-of-range actions but accepts saturation") {
    TanhDiagGaussian g{{{0.0}, {0.0}}};
    CHECK_THROWS_AS(g.log_prob(std::vector<double>{1.5}, std::vector<double>{40.0}),
                    std::domain_error);
    // tanh(u) rounds to exactly 1.0 for large u, but the density is still
    // well-defined (it is computed from u, not a) and must stay finite
    double lp = g.log_prob(std::vector<double>{std::tanh(40.0)}, std::vector<double>{40.0});
    CHECK(std::isfinite(lp));
}

TEST_CASE("closed-form entropy matches Monte Carlo") {
    DiagGaussian g{{0.5, -1.0}, {std::log(0.6), std::log(1.4)}};
    RngStream rng(21, 0);
    double acc = 0.0;
    int n = 200000;
    for (int i = 0; i < n; ++i) {
        auto x = g.sample_reparam(NoiseVector::draw(rng, 2));
        acc -= g.log_prob(x);
    }
    CHECK(acc / n == doctest::Approx(g.entropy_closed_form()).epsilon(5e-3));
}

TEST_CASE("tape-level log prob and entropy agree with value level") {
    ParamStore ps;
    ps.add("mean", 1, 2);
    ps.add("ls", 1, 2);
    ps.group(0).value = {0.2, -0.9};
    ps.group(1).value = {std::log(0.5), std::log(1.7)};
    DiagGaussian g{ps.group(0).value, ps.group(1).value};
    std::vector<double> x = {0.9, 0.1};

    Tape t;
    Var mean = t.param(ps, 0), ls = t.param(ps, 1);
    Var lp = gaussian_log_prob(t, mean, ls, t.input(1, 2, x));
    CHECK(t.scalar(lp) == doctest::Approx(g.log_prob(x)).epsilon(1e-14));
    CHECK(t.scalar(gaussian_entropy(t, ls)) ==
          doctest::Approx(g.entropy_closed_form()).epsilon(1e-14));
}

TEST_CASE("tape tanh log prob matches the value-level form and its gradient checks out") {
    ParamStore ps;
    ps.add("mean", 1, 2);
    ps.add("ls", 1, 2);
    ps.group(0).value = {-0.3, 0.6};
    ps.group(1).value = {std::log(0.9), std::log(0.4)};
    std::vector<double> u = {0.8, -1.1};
    std::vector<double> a = {std::tanh(0.8), std::tanh(-1.1)};

    auto value_lp = [&] {
        TanhDiagGaussian g{{ps.group(0).value, ps.group(1).value}};
        return g.log_prob(a, u);
    };
    auto tape_lp = [&](Gradients* grads) {
        Tape t;
        Var lp = tanh_gaussian_log_prob(t, t.param(ps, 0), t.param(ps, 1), t.input(1, 2, u));
        Var loss = t.sum_all(lp);
        if (grads) t.backward(loss, *grads);
        return t.scalar(loss);
    };

    CHECK(tape_lp(nullptr) == doctest::Approx(value_lp()).epsilon(1e-13));

    Gradients grads(ps);
    tape_lp(&grads);
    auto fd = fd_gradient(ps, {0, 1}, [&] { return tape_lp(nullptr); });
    CHECK(max_rel_err(collect(grads, {0, 1}), fd) < 1e-4);
}

TEST_CASE("closed-form KL matches quadrature") {
    ParamStore ps;
    ps.add("mq", 1, 1, 0.3);
    ps.add("lsq", 1, 1, std::log(0.8));
    ps.add("mp", 1, 1, -0.5);
    ps.add("lsp", 1, 1, std::log(1.3));

    Tape t;
    double kl = t.scalar(gaussian_kl(t, t.param(ps, 0), t.param(ps, 1), t.param(ps, 2),
                                     t.param(ps, 3)));

    DiagGaussian q{{0.3}, {std::log(0.8)}}, p{{-0.5}, {std::log(1.3)}};
    double quad = adaptive_simpson(
        [&](double x) {
            double lq = q.log_prob(std::vector<double>{x});
            return std::exp(lq) * (lq - p.log_prob(std::vector<double>{x}));
        },
        -10.0, 10.0);
    CHECK(kl == doctest::Approx(quad).epsilon(1e-8));
}

TEST_CASE("reparameterized sampling on the tape matches the value path") {
    ParamStore ps;
    ps.add("mean", 1, 3);
    ps.add("ls", 1, 3);
    ps.group(0).value = {0.1, -0.4, 2.0};
    ps.group(1).value = {std::log(0.5), 0.0, std::log(2.0)};

    RngStream rng(33, 5);
    NoiseVector nv = NoiseVector::draw(rng, 3);
    DiagGaussian g{ps.group(0).value, ps.group(1).value};
    auto xv = g.sample_reparam(nv);

    Tape t;
    Var x = sample_reparam(t, t.param(ps, 0), t.param(ps, 1), nv.eps);
    for (int i = 0; i < 3; ++i)
        CHECK(t.value(x)[static_cast<std::size_t>(i)] ==
              doctest::Approx(xv[static_cast<std::size_t>(i)]).epsilon(1e-15));
}
