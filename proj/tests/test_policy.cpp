#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "smac/policy.hpp"
#include "smac/quad.hpp"

using namespace smac;
using namespace smac::testing;

namespace {

History mdp_history(std::vector<double> feat) {
    return History{std::move(feat), History::Mode::Mdp};
}

}  // namespace

TEST_CASE("linear-Gaussian test policy: analytic marginal entropy matches quadrature") {
    ParamStore ps;
    LinearGaussianTestPolicy pol(ps, "tp", 1, 1);
    pol.set_encoder(0.3, std::log(0.9));
    pol.set_decoder(1.4, -0.2, std::log(0.5));

    // marginal over actions is N(w mu + b, w^2 s_q^2 + s_d^2)
    double mu = 1.4 * 0.3 - 0.2;
    double var = 1.4 * 1.4 * 0.9 * 0.9 + 0.5 * 0.5;
    double h_analytic = pol.marginal_entropy_1d();
    CHECK(h_analytic == doctest::Approx(0.5 * std::log(2 * M_PI * M_E * var)).epsilon(1e-14));

    double h_quad = adaptive_simpson(
        [&](double a) {
            double lp = -0.5 * std::log(2 * M_PI * var) - 0.5 * (a - mu) * (a - mu) / var;
            return -std::exp(lp) * lp;
        },
        mu - 10 * std::sqrt(var), mu + 10 * std::sqrt(var));
    CHECK(h_analytic == doctest::Approx(h_quad).epsilon(1e-8));
}

TEST_CASE("marginal log-prob oracle converges to the analytic marginal") {
    ParamStore ps;
    LinearGaussianTestPolicy pol(ps, "tp", 1, 1);
    pol.set_encoder(-0.5, std::log(0.7));
    pol.set_decoder(0.8, 0.1, std::log(0.6));

    double mu = 0.8 * -0.5 + 0.1;
    double var = 0.8 * 0.8 * 0.7 * 0.7 + 0.6 * 0.6;
    std::vector<double> a = {0.4};
    double lp_true = -0.5 * std::log(2 * M_PI * var) - 0.5 * (a[0] - mu) * (a[0] - mu) / var;

    RngStream rng(17, 0);
    double lp_mc = marginal_log_prob_oracle(pol, a, a, mdp_history({0.0}), 400000, rng);
    CHECK(lp_mc == doctest::Approx(lp_true).epsilon(5e-3));
}

TEST_CASE("action sampling is a pure function of the stream") {
    ParamStore ps;
    RngStream init(2, 0);
    LatentVariablePolicy pol(ps, "pi", LvpConfig{.obs_dim = 3, .latent_dim = 4, .action_dim = 2,
                                                 .encoder_hidden = {8}, .decoder_hidden = {8}},
                             init);
    History h = mdp_history({0.2, -0.7, 1.0});

    RngStream r1(5, 9), r2(5, 9);
    ActionSample s1 = sample_action(pol, h, r1);
    ActionSample s2 = sample_action(pol, h, r2);
    CHECK(s1.a == s2.a);
    CHECK(s1.u == s2.u);
    CHECK(s1.s0.s == s2.s0.s);

    RngStream r3(5, 10);
    ActionSample s3 = sample_action(pol, h, r3);
    CHECK(s1.a != s3.a);
}

TEST_CASE("deterministic encoder collapses the latent to its mean") {
    ParamStore ps;
    RngStream init(2, 0);
    LvpConfig cfg{.obs_dim = 2, .latent_dim = 3, .action_dim = 1, .encoder_hidden = {8},
                  .decoder_hidden = {8}, .encoder_deterministic = true};
    LatentVariablePolicy pol(ps, "pi", cfg, init);
    History h = mdp_history({0.5, -0.5});

    RngStream rng(7, 0);
    ActionSample s = sample_action(pol, h, rng);
    DiagGaussian enc = pol.encode_value(h);
    for (int i = 0; i < 3; ++i)
        CHECK(s.s0.s[static_cast<std::size_t>(i)] ==
              doctest::Approx(enc.mean[static_cast<std::size_t>(i)]).epsilon(1e-15));
}

TEST_CASE("tape encode/decode agree with the value-level heads") {
    ParamStore ps;
    RngStream init(4, 0);
    LatentVariablePolicy pol(ps, "pi", LvpConfig{.obs_dim = 3, .latent_dim = 2, .action_dim = 2,
                                                 .encoder_hidden = {6}, .decoder_hidden = {6}},
                             init);
    History h = mdp_history({1.0, 0.0, -1.0});

    Tape t;
    GaussHeads enc = pol.encode(t, {h});
    DiagGaussian encv = pol.encode_value(h);
    for (int i = 0; i < 2; ++i) {
        CHECK(t.value(enc.mean)[static_cast<std::size_t>(i)] ==
              doctest::Approx(encv.mean[static_cast<std::size_t>(i)]).epsilon(1e-13));
        CHECK(t.value(enc.log_std)[static_cast<std::size_t>(i)] ==
              doctest::Approx(encv.log_std[static_cast<std::size_t>(i)]).epsilon(1e-13));
    }

    std::vector<double> s = {0.4, -0.9};
    Tape t2;
    GaussHeads dec = pol.decode(t2, t2.input(1, 2, s));
    DiagGaussian decv = pol.decode_value(s);
    for (int i = 0; i < 2; ++i) {
        CHECK(t2.value(dec.mean)[static_cast<std::size_t>(i)] ==
              doctest::Approx(decv.mean[static_cast<std::size_t>(i)]).epsilon(1e-13));
        CHECK(t2.value(dec.log_std)[static_cast<std::size_t>(i)] ==
              doctest::Approx(decv.log_std[static_cast<std::size_t>(i)]).epsilon(1e-13));
    }
}

TEST_CASE("squashed actions stay strictly inside (-1, 1)") {
    ParamStore ps;
    RngStream init(6, 0);
    LatentVariablePolicy pol(ps, "pi", LvpConfig{.obs_dim = 2, .latent_dim = 2, .action_dim = 2,
                                                 .encoder_hidden = {8}, .decoder_hidden = {8}},
                             init);
    History h = mdp_history({3.0, -3.0});
    RngStream rng(8, 0);
    for (int i = 0; i < 200; ++i) {
        ActionSample s = sample_action(pol, h, rng);
        for (double a : s.a) {
            CHECK(a > -1.0);
            CHECK(a < 1.0);
        }
    }
}

TEST_CASE("conditional log prob: tape and value paths agree") {
    ParamStore ps;
    RngStream init(12, 0);
    LatentVariablePolicy pol(ps, "pi", LvpConfig{.obs_dim = 2, .latent_dim = 3, .action_dim = 2,
                                                 .encoder_hidden = {6}, .decoder_hidden = {6}},
                             init);
    History h = mdp_history({0.1, 0.9});
    RngStream rng(13, 0);
    ActionSample s = sample_action(pol, h, rng);

    double lp_val = conditional_log_prob_value(pol, s.a, s.u, s.s0.s);
    Tape t;
    Var lp = conditional_log_prob(t, pol, t.input(1, 3, s.s0.s), t.input(1, 2, s.u));
    CHECK(t.scalar(t.sum_all(lp)) == doctest::Approx(lp_val).epsilon(1e-12));
}
