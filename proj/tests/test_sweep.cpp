#include <vector>

#include "doctest.h"
#include "smac/rng.hpp"
#include "smac/sweep.hpp"

using namespace smac;

TEST_CASE("serial and parallel sweeps produce identical output") {
    auto run = [](ExecMode mode) {
        std::vector<double> out(512);
        for_each_index(512, mode, [&](int i) {
            RngStream rng(99, static_cast<std::uint64_t>(i));
            double acc = 0.0;
            for (int k = 0; k < 100; ++k) acc += rng.normal();
            out[static_cast<std::size_t>(i)] = acc;
        });
        return out;
    };
    CHECK(run(ExecMode::Serial) == run(ExecMode::Parallel));
}

TEST_CASE("rng streams are pure functions of (seed, stream, counter)") {
    RngStream a(5, 7), b(5, 7), c(5, 8), d(6, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(a.counter() == 100);
    CHECK(c.next_u64() != d.next_u64());

    RngStream u(1, 1);
    for (int i = 0; i < 10000; ++i) {
        double x = u.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("normal draws have roughly standard moments") {
    RngStream rng(13, 0);
    double m = 0.0, v = 0.0;
    int n = 100000;
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (auto& x : xs) x = rng.normal();
    for (double x : xs) m += x;
    m /= n;
    for (double x : xs) v += (x - m) * (x - m);
    v /= n - 1;
    CHECK(m == doctest::Approx(0.0).epsilon(0.02));
    CHECK(std::abs(m) < 0.02);
    CHECK(v == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("hardware thread count is sane") { CHECK(hardware_threads() >= 1); }
