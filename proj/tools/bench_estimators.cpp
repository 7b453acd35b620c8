// Benchmark: serial reference vs OpenMP-parallel repetition sweeps. The two
// paths must agree bit for bit (per-repetition RNG streams make the work
// schedule-independent); the benchmark reports wall times and the speedup.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "smac/estimators.hpp"
#include "smac/policy.hpp"
#include "smac/sweep.hpp"

using namespace smac;

namespace {

double time_seconds(const std::function<void()>& f) {
    auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    int n_reps = argc > 1 ? std::atoi(argv[1]) : 20000;

    ParamStore ps;
    LinearGaussianTestPolicy pol(ps, "lin", 1, 1);
    pol.set_encoder(0.3, std::log(0.5));
    pol.set_decoder(1.0, -0.2, 0.0);
    History h{{0.0}, History::Mode::Mdp};

    std::printf("threads available: %d, n_reps = %d\n", hardware_threads(), n_reps);
    std::printf("%-28s %10s %10s %8s %s\n", "workload", "serial[s]", "parallel[s]", "speedup",
                "identical");

    struct Case {
        std::string name;
        EstimatorKind kind;
        int K;
    };
    const std::vector<Case> cases = {{"nested K=32", EstimatorKind::Nested, 32},
                                     {"mlmc K=32", EstimatorKind::Mlmc, 32},
                                     {"iwae K=32", EstimatorKind::Iwae, 32}};

    bool all_identical = true;
    for (const auto& c : cases) {
        RepSweep serial, parallel;
        double ts = time_seconds(
            [&] { serial = estimate_repeated(c.kind, pol, h, c.K, n_reps, 7, ExecMode::Serial); });
        double tp = time_seconds([&] {
            parallel = estimate_repeated(c.kind, pol, h, c.K, n_reps, 7, ExecMode::Parallel);
        });
        bool same = serial.values == parallel.values;
        all_identical = all_identical && same;
        std::printf("%-28s %10.3f %10.3f %8.2f %s\n", c.name.c_str(), ts, tp, ts / tp,
                    same ? "yes" : "NO");
    }

    {
        std::vector<int> ks = {1, 2, 4, 8, 16, 32, 64, 128, 256};
        LadderSweep serial, parallel;
        double ts = time_seconds(
            [&] { serial = nested_ladder_repeated(pol, h, ks, n_reps, 7, ExecMode::Serial); });
        double tp = time_seconds(
            [&] { parallel = nested_ladder_repeated(pol, h, ks, n_reps, 7, ExecMode::Parallel); });
        bool same = serial.nested == parallel.nested && serial.naive == parallel.naive;
        all_identical = all_identical && same;
        std::printf("%-28s %10.3f %10.3f %8.2f %s\n", "nested ladder K<=256", ts, tp, ts / tp,
                    same ? "yes" : "NO");
    }

    if (!all_identical) {
        std::fprintf(stderr, "serial and parallel results differ\n");
        return 1;
    }
    return 0;
}
