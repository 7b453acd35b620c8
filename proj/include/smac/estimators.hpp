#pragma once

#include <functional>
#include <string>

#include "smac/policy.hpp"
#include "smac/stats.hpp"
#include "smac/sweep.hpp"

namespace smac {

enum class EstimatorKind { Naive, Nested, Mlmc, Iwae, Oracle };

std::string to_string(EstimatorKind k);
EstimatorKind estimator_kind_from_string(const std::string& s);

struct EstimatorConfig {
    int K = 8;
    EstimatorKind kind = EstimatorKind::Mlmc;
    std::uint64_t rng_stream = 0;
};

struct EstimatorReport {
    double value = 0.0;
    std::vector<double> level_terms;  // MLMC only; value == sum of terms
    int samples_used = 0;
    double variance = 0.0;  // across a repetition batch, when measured

    std::string csv_row(EstimatorKind kind, int K, std::uint64_t seed) const;
    static std::string csv_header();
};

// Shared reparameterized action draw recorded on a tape: s0 ~ q(s|h),
// a ~ pi(.|s0). All entropy estimators condition on the same draw.
struct ActionNodes {
    GaussHeads enc;  // B x L
    Var s0;          // B x L
    Var u;           // B x A, pre-squash
    Var a;           // B x A
    int batch = 0;
};

ActionNodes sample_action_nodes(Tape& t, const PolicyModel& pol, const HistoryBatch& h,
                                RngStream& rng);

// K fresh encoder particles per batch row, stacked as (B*K) x L.
Var encoder_particles(Tape& t, const PolicyModel& pol, const GaussHeads& enc, int batch, int K,
                      RngStream& rng);

// log pi(a | s^(k)) for every particle, reshaped to B x K.
Var particle_log_probs(Tape& t, const PolicyModel& pol, Var particles, Var u, int batch, int K);

// --- differentiable estimator graphs (B x 1 results) ---

// nested lower bound: -log((1/(K+1)) sum_{k=0..K} pi(a|s^(k))), s^(0) = s0
Var nested_entropy_node(Tape& t, const PolicyModel& pol, const ActionNodes& an, int K,
                        RngStream& rng);

struct MlmcNodes {
    Var value;                     // B x 1
    std::vector<Var> level_terms;  // each B x 1; value == sum of terms
};

// antithetic multi-level telescoping of the nested bound; K must be a power
// of two; every level shares (a, u, s0) and draws its own particle block
MlmcNodes mlmc_entropy_node(Tape& t, const PolicyModel& pol, const ActionNodes& an, int K,
                            RngStream& rng);

// ELBO-style upper-bound estimator (failure reproduction). q_tilde defaults
// to the encoder itself, which cancels the log-ratio terms exactly.
using QTildeFn = std::function<GaussHeads(Tape&)>;
Var naive_entropy_node(Tape& t, const PolicyModel& pol, const ActionNodes& an, RngStream& rng,
                       const QTildeFn& q_tilde = nullptr);

// IWAE-style log marginal estimate over K prior draws (s0 excluded)
Var iwae_log_prob_node(Tape& t, const PolicyModel& pol, const ActionNodes& an, int K,
                       RngStream& rng);

// one-sample estimate of E_{s~q}[ H(pi(.|s)) ] via a fresh latent draw and a
// fresh conditional action draw
Var conditional_entropy_penalty_node(Tape& t, const PolicyModel& pol, const GaussHeads& enc,
                                     int batch, RngStream& rng);

// --- single-history convenience wrappers ---

EstimatorReport nested_entropy(const PolicyModel& pol, const History& h, int K, RngStream& rng);

// Estimates at an explicit action draw (a, u, s0), e.g. inside Bellman
// targets where the next action is sampled once and reused.
double nested_entropy_at(const PolicyModel& pol, const History& h, std::span<const double> a,
                         std::span<const double> u, std::span<const double> s0, int K,
                         RngStream& rng);
double mlmc_entropy_at(const PolicyModel& pol, const History& h, std::span<const double> a,
                       std::span<const double> u, std::span<const double> s0, int K,
                       RngStream& rng);
double naive_entropy_at(const PolicyModel& pol, const History& h, std::span<const double> a,
                        std::span<const double> u, RngStream& rng);
EstimatorReport mlmc_entropy(const PolicyModel& pol, const History& h, int K, RngStream& rng);
double naive_entropy(const PolicyModel& pol, const History& h, RngStream& rng);
double iwae_log_prob(const PolicyModel& pol, std::span<const double> a, std::span<const double> u,
                     const History& h, int K, RngStream& rng);
double conditional_entropy_penalty(const PolicyModel& pol, const History& h, RngStream& rng);

// --- repetition sweeps (value statistics; parallel-safe per-rep streams) ---

struct RepSweep {
    std::vector<double> values;
    SampleStats stats;
};

RepSweep estimate_repeated(EstimatorKind kind, const PolicyModel& pol, const History& h, int K,
                           int n_reps, std::uint64_t seed, ExecMode mode = ExecMode::Serial);

// Paired ladder: one shared particle pool per repetition evaluated at every
// requested K via prefixes, so adjacent-K comparisons are common-random.
// Value-level (no gradients). Row i corresponds to Ks[i].
struct LadderSweep {
    std::vector<int> Ks;
    std::vector<std::vector<double>> nested;  // [Ks.size()][n_reps]
    std::vector<double> naive;                // [n_reps]
};

LadderSweep nested_ladder_repeated(const PolicyModel& pol, const History& h,
                                   const std::vector<int>& Ks, int n_reps, std::uint64_t seed,
                                   ExecMode mode = ExecMode::Serial);

bool is_power_of_two(int k);

}  // namespace smac
