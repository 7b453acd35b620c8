#include "smac/estimators.hpp"

#include <cmath>
#include <stdexcept>

#include "smac/csv.hpp"

namespace smac {

namespace {

double log_sum_exp(std::span<const double> xs) {
    double m = xs[0];
    for (double x : xs) m = std::max(m, x);
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - m);
    return m + std::log(acc);
}

int log2_exact(int k) {
    int l = 0;
    while ((1 << l) < k) ++l;
    return l;
}

}  // namespace

bool is_power_of_two(int k) { return k >= 1 && (k & (k - 1)) == 0; }

std::string to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::Naive: return "naive";
        case EstimatorKind::Nested: return "nested";
        case EstimatorKind::Mlmc: return "mlmc";
        case EstimatorKind::Iwae: return "iwae";
        case EstimatorKind::Oracle: return "oracle";
    }
    throw std::logic_error("to_string: bad EstimatorKind");
}

EstimatorKind estimator_kind_from_string(const std::string& s) {
    if (s == "naive") return EstimatorKind::Naive;
    if (s == "nested") return EstimatorKind::Nested;
    if (s == "mlmc") return EstimatorKind::Mlmc;
    if (s == "iwae") return EstimatorKind::Iwae;
    if (s == "oracle") return EstimatorKind::Oracle;
    throw std::invalid_argument("unknown estimator kind: " + s);
}

std::string EstimatorReport::csv_header() { return "kind,K,value,variance,seed"; }

std::string EstimatorReport::csv_row(EstimatorKind kind, int K, std::uint64_t seed) const {
    return to_string(kind) + "," + std::to_string(K) + "," + format_double(value) + "," +
           format_double(variance) + "," + std::to_string(seed);
}

// ---------------------------------------------------------------------------
// tape-level graphs
// ---------------------------------------------------------------------------

ActionNodes sample_action_nodes(Tape& t, const PolicyModel& pol, const HistoryBatch& h,
                                RngStream& rng) {
    ActionNodes an;
    an.batch = static_cast<int>(h.size());
    an.enc = pol.encode(t, h);
    int L = pol.latent_dim(), A = pol.action_dim();

    std::vector<double> eps_s(static_cast<std::size_t>(an.batch) * L, 0.0);
    if (!pol.encoder_deterministic()) eps_s = rng.normal_vec(an.batch * L);
    an.s0 = sample_reparam(t, an.enc.mean, an.enc.log_std, eps_s);

    GaussHeads dec = pol.decode(t, an.s0);
    std::vector<double> eps_a = rng.normal_vec(an.batch * A);
    an.u = sample_reparam(t, dec.mean, dec.log_std, eps_a);
    an.a = pol.tanh_squashed() ? t.tanh_(an.u) : an.u;
    return an;
}

Var encoder_particles(Tape& t, const PolicyModel& pol, const GaussHeads& enc, int batch, int K,
                      RngStream& rng) {
    Var mean = t.repeat_rows(enc.mean, K);
    if (pol.encoder_deterministic()) return mean;
    Var log_std = t.repeat_rows(enc.log_std, K);
    std::vector<double> eps = rng.normal_vec(batch * K * pol.latent_dim());
    return sample_reparam(t, mean, log_std, eps);
}

Var particle_log_probs(Tape& t, const PolicyModel& pol, Var particles, Var u, int batch, int K) {
    Var u_rep = t.repeat_rows(u, K);
    Var lp = conditional_log_prob(t, pol, particles, u_rep);  // (B*K) x 1
    return t.reshape(lp, batch, K);
}

namespace {

// nested bound from a posterior-path term (B x 1) and an optional B x n block
// of particle terms: -(logsumexp(lp0, cols) - log(n + 1))
Var nested_bound(Tape& t, Var lp0, Var lp_block, int n) {
    Var all = n > 0 ? t.concat_cols({lp0, lp_block}) : lp0;
    return t.add_scalar(t.neg(t.logsumexp_row(all)), std::log(static_cast<double>(n + 1)));
}

}  // namespace

Var nested_entropy_node(Tape& t, const PolicyModel& pol, const ActionNodes& an, int K,
                        RngStream& rng) {
    if (K < 1) throw std::invalid_argument("nested_entropy_node: K >= 1");
    Var lp0 = conditional_log_prob(t, pol, an.s0, an.u);
    Var particles = encoder_particles(t, pol, an.enc, an.batch, K, rng);
    Var lps = particle_log_probs(t, pol, particles, an.u, an.batch, K);
    return nested_bound(t, lp0, lps, K);
}

MlmcNodes mlmc_entropy_node(Tape& t, const PolicyModel& pol, const ActionNodes& an, int K,
                            RngStream& rng) {
    if (!is_power_of_two(K)) throw std::invalid_argument("mlmc_entropy_node: K must be 2^L");
    int levels = log2_exact(K);
    int total = 2 * K - 1;  // sum of 2^l for l = 0..levels

    Var lp0 = conditional_log_prob(t, pol, an.s0, an.u);
    // every level gets its own fresh i.i.d. particle block; one decoder pass
    Var particles = encoder_particles(t, pol, an.enc, an.batch, total, rng);
    Var lps = particle_log_probs(t, pol, particles, an.u, an.batch, total);

    MlmcNodes out;
    for (int l = 0; l <= levels; ++l) {
        int n = 1 << l;
        int off = n - 1;  // 2^l - 1
        Var block = t.slice_cols(lps, off, off + n);
        Var term;
        if (l == 0) {
            term = nested_bound(t, lp0, block, 1);
        } else {
            Var full = nested_bound(t, lp0, block, n);
            Var ha = nested_bound(t, lp0, t.slice_cols(lps, off, off + n / 2), n / 2);
            Var hb = nested_bound(t, lp0, t.slice_cols(lps, off + n / 2, off + n), n / 2);
            term = t.add(full, t.scale(t.add(ha, hb), -0.5));
        }
        out.level_terms.push_back(term);
        out.value = l == 0 ? term : t.add(out.value, term);
    }
    return out;
}

Var naive_entropy_node(Tape& t, const PolicyModel& pol, const ActionNodes& an, RngStream& rng,
                       const QTildeFn& q_tilde) {
    GaussHeads qt = q_tilde ? q_tilde(t) : an.enc;
    std::vector<double> eps = rng.normal_vec(an.batch * pol.latent_dim());
    Var s = sample_reparam(t, qt.mean, qt.log_std, eps);
    Var lp = conditional_log_prob(t, pol, s, an.u);
    // ELBO on log pi(a|h): lp + log q(s|h) - log q~(s|a,h); the negation is
    // the entropy estimate. With q~ == q the ratio cancels node-for-node.
    Var lq = gaussian_log_prob(t, an.enc.mean, an.enc.log_std, s);
    Var lqt = gaussian_log_prob(t, qt.mean, qt.log_std, s);
    return t.neg(t.add(lp, t.sub(lq, lqt)));
}

Var iwae_log_prob_node(Tape& t, const PolicyModel& pol, const ActionNodes& an, int K,
                       RngStream& rng) {
    if (K < 1) throw std::invalid_argument("iwae_log_prob_node: K >= 1");
    Var particles = encoder_particles(t, pol, an.enc, an.batch, K, rng);
    Var lps = particle_log_probs(t, pol, particles, an.u, an.batch, K);
    return t.add_scalar(t.logsumexp_row(lps), -std::log(static_cast<double>(K)));
}

Var conditional_entropy_penalty_node(Tape& t, const PolicyModel& pol, const GaussHeads& enc,
                                     int batch, RngStream& rng) {
    int L = pol.latent_dim(), A = pol.action_dim();
    std::vector<double> eps_s(static_cast<std::size_t>(batch) * L, 0.0);
    if (!pol.encoder_deterministic()) eps_s = rng.normal_vec(batch * L);
    Var s = sample_reparam(t, enc.mean, enc.log_std, eps_s);
    GaussHeads dec = pol.decode(t, s);
    std::vector<double> eps_a = rng.normal_vec(batch * A);
    Var u = sample_reparam(t, dec.mean, dec.log_std, eps_a);
    Var lp = pol.tanh_squashed() ? tanh_gaussian_log_prob(t, dec.mean, dec.log_std, u)
                                 : gaussian_log_prob(t, dec.mean, dec.log_std, u);
    return t.neg(lp);
}

// ---------------------------------------------------------------------------
// value-level core (no tape): one action draw plus a fresh particle pool
// ---------------------------------------------------------------------------

namespace {

struct ValueDraw {
    ActionSample act;
    double lp0 = 0.0;
    std::vector<double> lps;  // particle conditional log probs
};

std::vector<double> particle_lps_value(const PolicyModel& pol, const History& h,
                                       std::span<const double> a, std::span<const double> u,
                                       int n_particles, RngStream& rng) {
    DiagGaussian enc = pol.encode_value(h);
    std::vector<double> s(static_cast<std::size_t>(pol.latent_dim()));
    std::vector<double> lps(static_cast<std::size_t>(n_particles));
    for (int k = 0; k < n_particles; ++k) {
        for (int i = 0; i < pol.latent_dim(); ++i) {
            auto j = static_cast<std::size_t>(i);
            double e = pol.encoder_deterministic() ? 0.0 : rng.normal();
            s[j] = enc.mean[j] + std::exp(enc.log_std[j]) * e;
        }
        lps[static_cast<std::size_t>(k)] = conditional_log_prob_value(pol, a, u, s);
    }
    return lps;
}

ValueDraw value_draw(const PolicyModel& pol, const History& h, int n_particles, RngStream& rng) {
    ValueDraw d;
    d.act = sample_action(pol, h, rng);
    d.lp0 = conditional_log_prob_value(pol, d.act.a, d.act.u, d.act.s0.s);
    d.lps = particle_lps_value(pol, h, d.act.a, d.act.u, n_particles, rng);
    return d;
}

double nested_value(const ValueDraw& d, int off, int n) {
    std::vector<double> all;
    all.reserve(static_cast<std::size_t>(n) + 1);
    all.push_back(d.lp0);
    all.insert(all.end(), d.lps.begin() + off, d.lps.begin() + off + n);
    return -(log_sum_exp(all) - std::log(static_cast<double>(n + 1)));
}

double mlmc_value(const ValueDraw& d, int K, std::vector<double>* terms) {
    int levels = log2_exact(K);
    double acc = 0.0;
    for (int l = 0; l <= levels; ++l) {
        int n = 1 << l;
        int off = n - 1;
        double term;
        if (l == 0) {
            term = nested_value(d, 0, 1);
        } else {
            term = nested_value(d, off, n) -
                   0.5 * (nested_value(d, off, n / 2) + nested_value(d, off + n / 2, n / 2));
        }
        if (terms) terms->push_back(term);
        acc += term;
    }
    return acc;
}

}  // namespace

// ---------------------------------------------------------------------------
// single-history wrappers
// ---------------------------------------------------------------------------

EstimatorReport nested_entropy(const PolicyModel& pol, const History& h, int K, RngStream& rng) {
    if (K < 1) throw std::invalid_argument("nested_entropy: K >= 1");
    ValueDraw d = value_draw(pol, h, K, rng);
    EstimatorReport r;
    r.value = nested_value(d, 0, K);
    r.samples_used = K + 1;
    return r;
}

EstimatorReport mlmc_entropy(const PolicyModel& pol, const History& h, int K, RngStream& rng) {
    if (!is_power_of_two(K)) throw std::invalid_argument("mlmc_entropy: K must be 2^L");
    ValueDraw d = value_draw(pol, h, 2 * K - 1, rng);
    EstimatorReport r;
    r.value = mlmc_value(d, K, &r.level_terms);
    r.samples_used = 2 * K;
    return r;
}

double nested_entropy_at(const PolicyModel& pol, const History& h, std::span<const double> a,
                         std::span<const double> u, std::span<const double> s0, int K,
                         RngStream& rng) {
    if (K < 1) throw std::invalid_argument("nested_entropy_at: K >= 1");
    ValueDraw d;
    d.lp0 = conditional_log_prob_value(pol, a, u, s0);
    d.lps = particle_lps_value(pol, h, a, u, K, rng);
    return nested_value(d, 0, K);
}

double mlmc_entropy_at(const PolicyModel& pol, const History& h, std::span<const double> a,
                       std::span<const double> u, std::span<const double> s0, int K,
                       RngStream& rng) {
    if (!is_power_of_two(K)) throw std::invalid_argument("mlmc_entropy_at: K must be 2^L");
    ValueDraw d;
    d.lp0 = conditional_log_prob_value(pol, a, u, s0);
    d.lps = particle_lps_value(pol, h, a, u, 2 * K - 1, rng);
    return mlmc_value(d, K, nullptr);
}

double naive_entropy_at(const PolicyModel& pol, const History& h, std::span<const double> a,
                        std::span<const double> u, RngStream& rng) {
    return -particle_lps_value(pol, h, a, u, 1, rng)[0];
}

double naive_entropy(const PolicyModel& pol, const History& h, RngStream& rng) {
    // q~ == q cancellation path: the estimate is -log pi(a|s') at a fresh s'
    ValueDraw d = value_draw(pol, h, 1, rng);
    return -d.lps[0];
}

double iwae_log_prob(const PolicyModel& pol, std::span<const double> a, std::span<const double> u,
                     const History& h, int K, RngStream& rng) {
    if (K < 1) throw std::invalid_argument("iwae_log_prob: K >= 1");
    return marginal_log_prob_oracle(pol, a, u, h, K, rng);
}

double conditional_entropy_penalty(const PolicyModel& pol, const History& h, RngStream& rng) {
    ActionSample s = sample_action(pol, h, rng);
    return -conditional_log_prob_value(pol, s.a, s.u, s.s0.s);
}

// ---------------------------------------------------------------------------
// repetition sweeps
// ---------------------------------------------------------------------------

RepSweep estimate_repeated(EstimatorKind kind, const PolicyModel& pol, const History& h, int K,
                           int n_reps, std::uint64_t seed, ExecMode mode) {
    RepSweep out;
    out.values.assign(static_cast<std::size_t>(n_reps), 0.0);
    for_each_index(n_reps, mode, [&](int i) {
        RngStream rng(seed, static_cast<std::uint64_t>(i));
        double v = 0.0;
        switch (kind) {
            case EstimatorKind::Naive:
                v = naive_entropy(pol, h, rng);
                break;
            case EstimatorKind::Nested:
                v = nested_entropy(pol, h, K, rng).value;
                break;
            case EstimatorKind::Mlmc:
                v = mlmc_entropy(pol, h, K, rng).value;
                break;
            case EstimatorKind::Iwae: {
                ActionSample s = sample_action(pol, h, rng);
                v = -iwae_log_prob(pol, s.a, s.u, h, K, rng);
                break;
            }
            case EstimatorKind::Oracle: {
                ActionSample s = sample_action(pol, h, rng);
                v = -marginal_log_prob_oracle(pol, s.a, s.u, h, K, rng);
                break;
            }
        }
        out.values[static_cast<std::size_t>(i)] = v;
    });
    out.stats = summarize(out.values);
    return out;
}

LadderSweep nested_ladder_repeated(const PolicyModel& pol, const History& h,
                                   const std::vector<int>& Ks, int n_reps, std::uint64_t seed,
                                   ExecMode mode) {
    if (Ks.empty()) throw std::invalid_argument("nested_ladder_repeated: empty K list");
    int max_k = 0;
    for (int k : Ks) max_k = std::max(max_k, k);

    LadderSweep out;
    out.Ks = Ks;
    out.nested.assign(Ks.size(), std::vector<double>(static_cast<std::size_t>(n_reps), 0.0));
    out.naive.assign(static_cast<std::size_t>(n_reps), 0.0);

    for_each_index(n_reps, mode, [&](int i) {
        RngStream rng(seed, static_cast<std::uint64_t>(i));
        // one extra particle reserved for the naive estimate, drawn after the
        // shared prefix pool so every K reuses a common prefix
        ValueDraw d = value_draw(pol, h, max_k + 1, rng);
        for (std::size_t j = 0; j < Ks.size(); ++j)
            out.nested[j][static_cast<std::size_t>(i)] = nested_value(d, 0, Ks[j]);
        out.naive[static_cast<std::size_t>(i)] = -d.lps[static_cast<std::size_t>(max_k)];
    });
    return out;
}

}  // namespace smac
