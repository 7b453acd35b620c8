#include <cmath>

#include "doctest.h"
#include "smac/params.hpp"

using namespace smac;

TEST_CASE("ParamStore bookkeeping") {
    ParamStore ps;
    int a = ps.add("a", 2, 3, 0.5);
    int b = ps.add("b", 1, 4);
    CHECK(ps.num_groups() == 2);
    CHECK(ps.total_size() == 10);
    CHECK(ps.find("a") == a);
    CHECK(ps.find("b") == b);
    CHECK(ps.group(a).value[5] == 0.5);
    CHECK(ps.all_finite());
    CHECK_THROWS_AS(ps.add("a", 1, 1), std::invalid_argument);
}

TEST_CASE("first Adam step is lr * sign(g) up to epsilon") {
    ParamStore ps;
    int id = ps.add("p", 1, 2, 1.0);
    AdamOptimizer opt(ps, AdamConfig{.lr = 0.01});
    Gradients g(ps);
    g.g[static_cast<std::size_t>(id)] = {4.0, -0.25};
    REQUIRE(opt.step(ps, g));
    // m_hat = g, v_hat = g^2 => update = lr * g / (|g| + eps)
    CHECK(ps.group(id).value[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-7));
    CHECK(ps.group(id).value[1] == doctest::Approx(1.0 + 0.01).epsilon(1e-7));
}

TEST_CASE("second Adam step matches the closed form") {
    ParamStore ps;
    int id = ps.add("p", 1, 1, 0.0);
    AdamConfig cfg{.lr = 0.1, .beta1 = 0.9, .beta2 = 0.999, .eps = 1e-8};
    AdamOptimizer opt(ps, cfg);
    Gradients g(ps);

    g.g[0] = {2.0};
    opt.step(ps, g);
    double p = -cfg.lr * 2.0 / (2.0 + cfg.eps);

    g.g[0] = {1.0};
    opt.step(ps, g);
    double m = cfg.beta1 * ((1 - cfg.beta1) * 2.0) + (1 - cfg.beta1) * 1.0;
    double v = cfg.beta2 * ((1 - cfg.beta2) * 4.0) + (1 - cfg.beta2) * 1.0;
    double mhat = m / (1 - cfg.beta1 * cfg.beta1);
    double vhat = v / (1 - cfg.beta2 * cfg.beta2);
    p -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);

    CHECK(ps.group(id).value[0] == doctest::Approx(p).epsilon(1e-14));
}

TEST_CASE("Adam minimizes a quadratic bowl") {
    ParamStore ps;
    int id = ps.add("p", 1, 2);
    ps.group(id).value = {3.0, -2.0};
    AdamOptimizer opt(ps, AdamConfig{.lr = 0.05});
    Gradients g(ps);
    for (int i = 0; i < 2000; ++i) {
        g.g[0][0] = 2.0 * (ps.group(id).value[0] - 1.0);
        g.g[0][1] = 2.0 * (ps.group(id).value[1] + 0.5);
        opt.step(ps, g);
    }
    CHECK(ps.group(id).value[0] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(ps.group(id).value[1] == doctest::Approx(-0.5).epsilon(1e-4));
}

TEST_CASE("group-subset optimizer leaves uncovered groups untouched") {
    ParamStore ps;
    int a = ps.add("a", 1, 1, 1.0);
    int b = ps.add("b", 1, 1, 1.0);
    AdamOptimizer opt(ps, std::vector<int>{a}, AdamConfig{.lr = 0.1});
    Gradients g(ps);
    g.g[static_cast<std::size_t>(a)] = {1.0};
    g.g[static_cast<std::size_t>(b)] = {1.0};
    REQUIRE(opt.step(ps, g));
    CHECK(ps.group(a).value[0] < 1.0);
    CHECK(ps.group(b).value[0] == 1.0);

    // non-finite gradients in an uncovered group do not block the step
    g.g[static_cast<std::size_t>(b)] = {std::nan("")};
    CHECK(opt.step(ps, g));
}

TEST_CASE("non-finite gradients in a covered group reject the step") {
    ParamStore ps;
    int id = ps.add("p", 1, 1, 1.0);
    AdamOptimizer opt(ps);
    Gradients g(ps);
    g.g[static_cast<std::size_t>(id)] = {std::nan("")};
    CHECK_FALSE(opt.step(ps, g));
    CHECK(ps.group(id).value[0] == 1.0);
    CHECK(opt.rejected_count() == 1);
    CHECK(opt.step_count() == 0);
}
