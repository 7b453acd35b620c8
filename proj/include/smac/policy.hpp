#pragma once

#include <memory>
#include <string>
#include <vector>

#include "smac/dists.hpp"
#include "smac/mlp.hpp"

namespace smac {

// History the policy conditions on. In MDP mode this is the current
// observation; in POMDP mode it is the feature vector the belief posterior
// consumes (previous latent, previous action, current observation).
struct History {
    enum class Mode { Mdp, Pomdp };
    std::vector<double> feat;
    Mode mode = Mode::Mdp;
};

using HistoryBatch = std::vector<History>;

struct LatentState {
    std::vector<double> s;
};

struct GaussHeads {
    Var mean;
    Var log_std;
};

// Interface every latent-variable policy exposes to the estimators: an
// encoder distribution over the latent and a decoder distribution over
// actions. Tape-level methods build differentiable graphs; value-level
// methods back the environment loop and Monte Carlo oracles.
class PolicyModel {
public:
    virtual ~PolicyModel() = default;

    virtual int latent_dim() const = 0;
    virtual int action_dim() const = 0;
    virtual bool tanh_squashed() const = 0;
    // collapsed-latent mode: the encoder emits its mean with zero noise
    virtual bool encoder_deterministic() const { return false; }

    virtual GaussHeads encode(Tape& t, const HistoryBatch& h) const = 0;
    virtual GaussHeads decode(Tape& t, Var s) const = 0;

    virtual DiagGaussian encode_value(const History& h) const = 0;
    virtual DiagGaussian decode_value(std::span<const double> s) const = 0;
};

// Flattens a batch of histories into a B x D input node.
inline Var history_input(Tape& t, const HistoryBatch& h) {
    int B = static_cast<int>(h.size());
    int d = static_cast<int>(h[0].feat.size());
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(B) * d);
    for (const auto& hi : h) flat.insert(flat.end(), hi.feat.begin(), hi.feat.end());
    return t.input(B, d, flat);
}

// Conditional action log-density log pi(a | s) for a latent batch, shared
// across squashed and plain policies. `u` is the pre-squash value (equal to
// the action itself when the policy is not squashed).
inline Var conditional_log_prob(Tape& t, const PolicyModel& pol, Var s, Var u) {
    GaussHeads dec = pol.decode(t, s);
    return pol.tanh_squashed() ? tanh_gaussian_log_prob(t, dec.mean, dec.log_std, u)
                               : gaussian_log_prob(t, dec.mean, dec.log_std, u);
}

// One environment-facing action draw: s0 ~ q(s|h), a ~ pi(.|s0), both
// reparameterized. The noise is kept so estimators can rebuild the same draw
// on a tape.
struct ActionSample {
    std::vector<double> a;
    std::vector<double> u;   // pre-squash value (== a when not squashed)
    LatentState s0;
    std::vector<double> eps_s;
    std::vector<double> eps_a;
};

inline ActionSample sample_action(const PolicyModel& pol, const History& h, RngStream& rng) {
    ActionSample out;
    DiagGaussian enc = pol.encode_value(h);
    out.eps_s = pol.encoder_deterministic() ? std::vector<double>(static_cast<std::size_t>(pol.latent_dim()), 0.0)
                                            : rng.normal_vec(pol.latent_dim());
    out.s0.s.resize(static_cast<std::size_t>(pol.latent_dim()));
    for (int i = 0; i < pol.latent_dim(); ++i)
        out.s0.s[static_cast<std::size_t>(i)] =
            enc.mean[static_cast<std::size_t>(i)] +
            std::exp(enc.log_std[static_cast<std::size_t>(i)]) * out.eps_s[static_cast<std::size_t>(i)];

    DiagGaussian dec = pol.decode_value(out.s0.s);
    out.eps_a = rng.normal_vec(pol.action_dim());
    out.u.resize(static_cast<std::size_t>(pol.action_dim()));
    out.a.resize(static_cast<std::size_t>(pol.action_dim()));
    for (int i = 0; i < pol.action_dim(); ++i) {
        auto k = static_cast<std::size_t>(i);
        out.u[k] = dec.mean[k] + std::exp(dec.log_std[k]) * out.eps_a[k];
        out.a[k] = pol.tanh_squashed() ? std::tanh(out.u[k]) : out.u[k];
    }
    return out;
}

// Value-level conditional log prob (oracles, diagnostics).
inline double conditional_log_prob_value(const PolicyModel& pol, std::span<const double> a,
                                         std::span<const double> u, std::span<const double> s) {
    DiagGaussian dec = pol.decode_value(s);
    if (pol.tanh_squashed()) return TanhDiagGaussian{dec}.log_prob(a, u);
    return dec.log_prob(u);
}

// High-accuracy marginal log-density oracle: log-mean-exp of the conditional
// density over fresh encoder draws. Diagnostic only; never drives gradients.
inline double marginal_log_prob_oracle(const PolicyModel& pol, std::span<const double> a,
                                       std::span<const double> u, const History& h, int n_samples,
                                       RngStream& rng) {
    if (n_samples < 1) throw std::invalid_argument("marginal_log_prob_oracle: n_samples >= 1");
    DiagGaussian enc = pol.encode_value(h);
    std::vector<double> lps(static_cast<std::size_t>(n_samples));
    std::vector<double> s(static_cast<std::size_t>(pol.latent_dim()));
    for (int k = 0; k < n_samples; ++k) {
        for (int i = 0; i < pol.latent_dim(); ++i) {
            auto j = static_cast<std::size_t>(i);
            s[j] = enc.mean[j] + std::exp(enc.log_std[j]) * rng.normal();
        }
        lps[static_cast<std::size_t>(k)] = conditional_log_prob_value(pol, a, u, s);
    }
    double m = lps[0];
    for (double v : lps) m = std::max(m, v);
    double acc = 0.0;
    for (double v : lps) acc += std::exp(v - m);
    return m + std::log(acc / n_samples);
}

// ---------------------------------------------------------------------------
// MLP-backed latent variable policy (encoder h -> s, decoder s -> a).
// ---------------------------------------------------------------------------

struct LvpConfig {
    int obs_dim = 0;       // history feature width
    int latent_dim = 16;
    int action_dim = 0;
    std::vector<int> encoder_hidden = {64, 64};
    std::vector<int> decoder_hidden = {64, 64};
    bool tanh_squashed = true;
    bool encoder_deterministic = false;
    double log_std_min = kLogStdMin;
    double log_std_max = kLogStdMax;
};

class LatentVariablePolicy final : public PolicyModel {
public:
    LatentVariablePolicy() = default;
    LatentVariablePolicy(ParamStore& ps, const std::string& prefix, const LvpConfig& cfg,
                         RngStream& rng)
        : cfg_(cfg), store_(&ps) {
        encoder_ = Mlp::create(ps, prefix + ".enc", cfg.obs_dim, cfg.encoder_hidden,
                               2 * cfg.latent_dim, Activation::Tanh, rng);
        decoder_ = Mlp::create(ps, prefix + ".dec", cfg.latent_dim, cfg.decoder_hidden,
                               2 * cfg.action_dim, Activation::Tanh, rng);
    }

    int latent_dim() const override { return cfg_.latent_dim; }
    int action_dim() const override { return cfg_.action_dim; }
    bool tanh_squashed() const override { return cfg_.tanh_squashed; }
    bool encoder_deterministic() const override { return cfg_.encoder_deterministic; }

    GaussHeads encode(Tape& t, const HistoryBatch& h) const override {
        Var out = encoder_.forward(t, *store_, history_input(t, h));
        return split_heads(t, out, cfg_.latent_dim);
    }

    GaussHeads decode(Tape& t, Var s) const override {
        Var out = decoder_.forward(t, *store_, s);
        return split_heads(t, out, cfg_.action_dim);
    }

    DiagGaussian encode_value(const History& h) const override {
        return value_heads(encoder_.forward_value(*store_, h.feat), cfg_.latent_dim);
    }

    DiagGaussian decode_value(std::span<const double> s) const override {
        return value_heads(decoder_.forward_value(*store_, s), cfg_.action_dim);
    }

    const Mlp& encoder() const { return encoder_; }
    const Mlp& decoder() const { return decoder_; }

    std::vector<int> encoder_groups() const { return all_groups(encoder_); }
    std::vector<int> decoder_groups() const { return all_groups(decoder_); }

    void set_encoder_deterministic(bool v) { cfg_.encoder_deterministic = v; }

private:
    GaussHeads split_heads(Tape& t, Var out, int d) const {
        Var mean = t.slice_cols(out, 0, d);
        Var log_std = t.clamp(t.slice_cols(out, d, 2 * d), cfg_.log_std_min, cfg_.log_std_max);
        return {mean, log_std};
    }

    DiagGaussian value_heads(const std::vector<double>& out, int d) const {
        DiagGaussian g;
        g.mean.assign(out.begin(), out.begin() + d);
        g.log_std.assign(out.begin() + d, out.begin() + 2 * d);
        for (auto& v : g.log_std) v = std::min(cfg_.log_std_max, std::max(cfg_.log_std_min, v));
        return g;
    }

    static std::vector<int> all_groups(const Mlp& m) {
        std::vector<int> g = m.weight_groups();
        g.insert(g.end(), m.bias_groups().begin(), m.bias_groups().end());
        return g;
    }

    LvpConfig cfg_;
    ParamStore* store_ = nullptr;
    Mlp encoder_;
    Mlp decoder_;
};

// ---------------------------------------------------------------------------
// Identity-encoder policy: the latent is the observation itself (point-mass
// encoder), so every marginal estimator collapses to its conditional value
// and the machinery reduces exactly to a standard squashed-Gaussian actor.
// ---------------------------------------------------------------------------

class IdentityEncoderPolicy final : public PolicyModel {
public:
    IdentityEncoderPolicy() = default;
    IdentityEncoderPolicy(ParamStore& ps, const std::string& prefix, int obs_dim, int action_dim,
                          const std::vector<int>& hidden, RngStream& rng)
        : obs_dim_(obs_dim), action_dim_(action_dim), store_(&ps) {
        decoder_ = Mlp::create(ps, prefix + ".dec", obs_dim, hidden, 2 * action_dim,
                               Activation::Tanh, rng);
    }

    int latent_dim() const override { return obs_dim_; }
    int action_dim() const override { return action_dim_; }
    bool tanh_squashed() const override { return true; }
    bool encoder_deterministic() const override { return true; }

    GaussHeads encode(Tape& t, const HistoryBatch& h) const override {
        Var mean = history_input(t, h);
        std::vector<double> ls(static_cast<std::size_t>(h.size()) * obs_dim_, kLogStdMin);
        return {mean, t.input(static_cast<int>(h.size()), obs_dim_, ls)};
    }

    GaussHeads decode(Tape& t, Var s) const override {
        Var out = decoder_.forward(t, *store_, s);
        Var mean = t.slice_cols(out, 0, action_dim_);
        Var log_std = t.clamp(t.slice_cols(out, action_dim_, 2 * action_dim_), kLogStdMin,
                              kLogStdMax);
        return {mean, log_std};
    }

    DiagGaussian encode_value(const History& h) const override {
        return {h.feat, std::vector<double>(h.feat.size(), kLogStdMin)};
    }

    DiagGaussian decode_value(std::span<const double> s) const override {
        auto out = decoder_.forward_value(*store_, s);
        DiagGaussian g;
        g.mean.assign(out.begin(), out.begin() + action_dim_);
        g.log_std.assign(out.begin() + action_dim_, out.begin() + 2 * action_dim_);
        for (auto& v : g.log_std) v = std::min(kLogStdMax, std::max(kLogStdMin, v));
        return g;
    }

    std::vector<int> decoder_groups() const {
        std::vector<int> g = decoder_.weight_groups();
        g.insert(g.end(), decoder_.bias_groups().begin(), decoder_.bias_groups().end());
        return g;
    }
    std::vector<int> encoder_groups() const { return {}; }

private:
    int obs_dim_ = 0;
    int action_dim_ = 0;
    ParamStore* store_ = nullptr;
    Mlp decoder_;
};

// ---------------------------------------------------------------------------
// Belief-head policy: the "encoder" is an externally supplied belief whose
// (mean, log_std) are packed into the history features, so only the decoder
// carries trainable parameters. Used when a world model owns the filtering.
// ---------------------------------------------------------------------------

class BeliefHeadPolicy final : public PolicyModel {
public:
    BeliefHeadPolicy() = default;
    BeliefHeadPolicy(ParamStore& ps, const std::string& prefix, int belief_dim, int action_dim,
                     const std::vector<int>& hidden, RngStream& rng)
        : belief_dim_(belief_dim), action_dim_(action_dim), store_(&ps) {
        decoder_ = Mlp::create(ps, prefix + ".dec", belief_dim, hidden, 2 * action_dim,
                               Activation::Tanh, rng);
    }

    static std::vector<double> pack_belief(const DiagGaussian& b) {
        std::vector<double> f(b.mean);
        f.insert(f.end(), b.log_std.begin(), b.log_std.end());
        return f;
    }

    int latent_dim() const override { return belief_dim_; }
    int action_dim() const override { return action_dim_; }
    bool tanh_squashed() const override { return true; }

    GaussHeads encode(Tape& t, const HistoryBatch& h) const override {
        Var feat = history_input(t, h);
        return {t.slice_cols(feat, 0, belief_dim_), t.slice_cols(feat, belief_dim_, 2 * belief_dim_)};
    }

    GaussHeads decode(Tape& t, Var s) const override {
        Var out = decoder_.forward(t, *store_, s);
        Var mean = t.slice_cols(out, 0, action_dim_);
        Var log_std = t.clamp(t.slice_cols(out, action_dim_, 2 * action_dim_), kLogStdMin,
                              kLogStdMax);
        return {mean, log_std};
    }

    DiagGaussian encode_value(const History& h) const override {
        DiagGaussian g;
        g.mean.assign(h.feat.begin(), h.feat.begin() + belief_dim_);
        g.log_std.assign(h.feat.begin() + belief_dim_, h.feat.begin() + 2 * belief_dim_);
        return g;
    }

    DiagGaussian decode_value(std::span<const double> s) const override {
        auto out = decoder_.forward_value(*store_, s);
        DiagGaussian g;
        g.mean.assign(out.begin(), out.begin() + action_dim_);
        g.log_std.assign(out.begin() + action_dim_, out.begin() + 2 * action_dim_);
        for (auto& v : g.log_std) v = std::min(kLogStdMax, std::max(kLogStdMin, v));
        return g;
    }

    std::vector<int> decoder_groups() const {
        std::vector<int> g = decoder_.weight_groups();
        g.insert(g.end(), decoder_.bias_groups().begin(), decoder_.bias_groups().end());
        return g;
    }
    std::vector<int> encoder_groups() const { return {}; }

private:
    int belief_dim_ = 0;
    int action_dim_ = 0;
    ParamStore* store_ = nullptr;
    Mlp decoder_;
};

// ---------------------------------------------------------------------------
// Linear-Gaussian test head: q(s|h) and pi(a|s) = N(W s + b, exp(log_std)^2),
// no squashing, history ignored. The marginal over actions is Gaussian with
// known mean and covariance, so entropy and log-densities have closed forms.
// ---------------------------------------------------------------------------

class LinearGaussianTestPolicy final : public PolicyModel {
public:
    LinearGaussianTestPolicy(ParamStore& ps, const std::string& prefix, int latent_dim,
                             int action_dim)
        : latent_dim_(latent_dim), action_dim_(action_dim), store_(&ps) {
        enc_mean_ = ps.add(prefix + ".enc_mean", 1, latent_dim, 0.0);
        enc_log_std_ = ps.add(prefix + ".enc_log_std", 1, latent_dim, 0.0);
        dec_w_ = ps.add(prefix + ".dec_w", action_dim, latent_dim, 0.0);
        dec_b_ = ps.add(prefix + ".dec_b", 1, action_dim, 0.0);
        dec_log_std_ = ps.add(prefix + ".dec_log_std", 1, action_dim, 0.0);
    }

    int latent_dim() const override { return latent_dim_; }
    int action_dim() const override { return action_dim_; }
    bool tanh_squashed() const override { return false; }

    GaussHeads encode(Tape& t, const HistoryBatch& h) const override {
        int B = static_cast<int>(h.size());
        return {t.repeat_rows(t.param(*store_, enc_mean_), B),
                t.repeat_rows(t.param(*store_, enc_log_std_), B)};
    }

    GaussHeads decode(Tape& t, Var s) const override {
        Var mean = t.linear(s, t.param(*store_, dec_w_), t.param(*store_, dec_b_));
        Var log_std = t.repeat_rows(t.param(*store_, dec_log_std_), t.rows(s));
        return {mean, log_std};
    }

    DiagGaussian encode_value(const History&) const override {
        return {store_->group(enc_mean_).value, store_->group(enc_log_std_).value};
    }

    DiagGaussian decode_value(std::span<const double> s) const override {
        const auto& W = store_->group(dec_w_);
        DiagGaussian g;
        g.mean.resize(static_cast<std::size_t>(action_dim_));
        for (int o = 0; o < action_dim_; ++o) {
            double acc = store_->group(dec_b_).value[static_cast<std::size_t>(o)];
            for (int j = 0; j < latent_dim_; ++j)
                acc += W.value[static_cast<std::size_t>(o) * latent_dim_ + j] * s[static_cast<std::size_t>(j)];
            g.mean[static_cast<std::size_t>(o)] = acc;
        }
        g.log_std = store_->group(dec_log_std_).value;
        return g;
    }

    // Analytic marginal over actions: N(W mu_q + b, W diag(sig_q^2) W^T + diag(sig_dec^2)).
    // Entropy in the 1-D case: 0.5 log(2 pi e (w^2 sig_q^2 + sig_dec^2)).
    double marginal_entropy_1d() const {
        if (latent_dim_ != 1 || action_dim_ != 1)
            throw std::logic_error("marginal_entropy_1d: needs 1-D latent and action");
        double w = store_->group(dec_w_).value[0];
        double sq = std::exp(store_->group(enc_log_std_).value[0]);
        double sd = std::exp(store_->group(dec_log_std_).value[0]);
        return 0.5 * std::log(2.0 * M_PI * M_E * (w * w * sq * sq + sd * sd));
    }

    void set_encoder(double mean, double log_std) {
        for (auto& v : store_->group(enc_mean_).value) v = mean;
        for (auto& v : store_->group(enc_log_std_).value) v = log_std;
    }

    void set_decoder(double w_diag, double b, double log_std) {
        auto& W = store_->group(dec_w_);
        std::fill(W.value.begin(), W.value.end(), 0.0);
        for (int i = 0; i < std::min(action_dim_, latent_dim_); ++i)
            W.value[static_cast<std::size_t>(i) * latent_dim_ + i] = w_diag;
        for (auto& v : store_->group(dec_b_).value) v = b;
        for (auto& v : store_->group(dec_log_std_).value) v = log_std;
    }

private:
    int latent_dim_;
    int action_dim_;
    ParamStore* store_;
    int enc_mean_, enc_log_std_, dec_w_, dec_b_, dec_log_std_;
};

}  // namespace smac
