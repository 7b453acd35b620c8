#include "smac/world_model.hpp"

#include <cmath>
#include <stdexcept>

namespace smac {

SequentialLatentModel::SequentialLatentModel(ParamStore& ps, const std::string& prefix,
                                             const WorldModelConfig& cfg, RngStream& rng)
    : cfg_(cfg) {
    int L = cfg.latent_dim, A = cfg.action_dim, X = cfg.obs_dim;
    prior_ = Mlp::create(ps, prefix + ".prior", L + A, cfg.hidden, 2 * L, Activation::Tanh, rng);
    post_ = Mlp::create(ps, prefix + ".post", L + A + X, cfg.hidden, 2 * L, Activation::Tanh, rng);
    obs_dec_ = Mlp::create(ps, prefix + ".obs", L, cfg.hidden, 2 * X, Activation::Tanh, rng);
    rew_dec_ = Mlp::create(ps, prefix + ".rew", L, cfg.hidden, 2, Activation::Tanh, rng);
    for (const Mlp* m : {&prior_, &post_, &obs_dec_, &rew_dec_}) {
        groups_.insert(groups_.end(), m->weight_groups().begin(), m->weight_groups().end());
        groups_.insert(groups_.end(), m->bias_groups().begin(), m->bias_groups().end());
    }
}

GaussHeads SequentialLatentModel::heads(Tape& t, const ParamStore& ps, const Mlp& net, Var in,
                                        int d) const {
    Var out = net.forward(t, ps, in);
    Var mean = t.slice_cols(out, 0, d);
    Var log_std = t.clamp(t.slice_cols(out, d, 2 * d), cfg_.log_std_min, cfg_.log_std_max);
    return {mean, log_std};
}

DiagGaussian SequentialLatentModel::heads_value(const ParamStore& ps, const Mlp& net,
                                                std::span<const double> in, int d) const {
    auto out = net.forward_value(ps, in);
    DiagGaussian g;
    g.mean.assign(out.begin(), out.begin() + d);
    g.log_std.assign(out.begin() + d, out.begin() + 2 * d);
    for (auto& v : g.log_std) v = std::min(cfg_.log_std_max, std::max(cfg_.log_std_min, v));
    return g;
}

namespace {

std::vector<double> cat2(std::span<const double> a, std::span<const double> b) {
    std::vector<double> v(a.begin(), a.end());
    v.insert(v.end(), b.begin(), b.end());
    return v;
}

std::vector<double> cat3(std::span<const double> a, std::span<const double> b,
                         std::span<const double> c) {
    std::vector<double> v = cat2(a, b);
    v.insert(v.end(), c.begin(), c.end());
    return v;
}

}  // namespace

DiagGaussian SequentialLatentModel::prior_value(const ParamStore& ps,
                                                std::span<const double> s_prev,
                                                std::span<const double> a_prev) const {
    return heads_value(ps, prior_, cat2(s_prev, a_prev), cfg_.latent_dim);
}

DiagGaussian SequentialLatentModel::posterior_value(const ParamStore& ps,
                                                    std::span<const double> s_prev,
                                                    std::span<const double> a_prev,
                                                    std::span<const double> x) const {
    return heads_value(ps, post_, cat3(s_prev, a_prev, x), cfg_.latent_dim);
}

DiagGaussian SequentialLatentModel::decode_obs_value(const ParamStore& ps,
                                                     std::span<const double> s) const {
    return heads_value(ps, obs_dec_, s, cfg_.obs_dim);
}

DiagGaussian SequentialLatentModel::decode_reward_value(const ParamStore& ps,
                                                        std::span<const double> s) const {
    return heads_value(ps, rew_dec_, s, 1);
}

BeliefState SequentialLatentModel::initial_belief(const ParamStore& ps, std::span<const double> x0,
                                                  RngStream& rng, bool deterministic) const {
    BeliefState zero;
    zero.s.assign(static_cast<std::size_t>(cfg_.latent_dim), 0.0);
    std::vector<double> a0(static_cast<std::size_t>(cfg_.action_dim), 0.0);
    return filter_step(ps, zero, a0, x0, rng, deterministic);
}

BeliefState SequentialLatentModel::filter_step(const ParamStore& ps, const BeliefState& prev,
                                               std::span<const double> a_prev,
                                               std::span<const double> x, RngStream& rng,
                                               bool deterministic) const {
    BeliefState b;
    b.post = posterior_value(ps, prev.s, a_prev, x);
    b.s.resize(b.post.mean.size());
    for (std::size_t i = 0; i < b.s.size(); ++i) {
        double e = deterministic ? 0.0 : rng.normal();
        b.s[i] = b.post.mean[i] + std::exp(b.post.log_std[i]) * e;
    }
    return b;
}

SequentialLatentModel::ElboNodes SequentialLatentModel::elbo_nodes(
    Tape& t, const ParamStore& ps, const std::vector<TrajectorySegment>& batch,
    RngStream& rng) const {
    if (batch.empty()) throw std::invalid_argument("elbo_nodes: empty batch");
    int B = static_cast<int>(batch.size());
    int T = batch[0].length();
    for (const auto& seg : batch)
        if (seg.length() != T) throw std::invalid_argument("elbo_nodes: ragged segment batch");
    int L = cfg_.latent_dim, A = cfg_.action_dim, X = cfg_.obs_dim;

    Var s_prev = t.input(B, L, std::vector<double>(static_cast<std::size_t>(B) * L, 0.0));
    std::vector<double> zero_a(static_cast<std::size_t>(B) * A, 0.0);

    Var recon_x, recon_r, kl;
    for (int step = 0; step < T; ++step) {
        std::vector<double> xs, as, rs;
        for (const auto& seg : batch) {
            const auto& x = seg.obs[static_cast<std::size_t>(step)];
            xs.insert(xs.end(), x.begin(), x.end());
            rs.push_back(seg.rew[static_cast<std::size_t>(step)]);
            if (step > 0) {
                const auto& a = seg.act[static_cast<std::size_t>(step) - 1];
                as.insert(as.end(), a.begin(), a.end());
            }
        }
        Var x_t = t.input(B, X, xs);
        Var a_prev = t.input(B, A, step == 0 ? zero_a : as);
        Var r_t = t.input(B, 1, rs);

        Var sa = t.concat_cols({s_prev, a_prev});
        GaussHeads prior = heads(t, ps, prior_, sa, L);
        GaussHeads post = heads(t, ps, post_, t.concat_cols({sa, x_t}), L);

        Var s = sample_reparam(t, post.mean, post.log_std, rng.normal_vec(B * L));
        GaussHeads px = heads(t, ps, obs_dec_, s, X);
        GaussHeads pr = heads(t, ps, rew_dec_, s, 1);

        Var lx = t.mean_all(gaussian_log_prob(t, px.mean, px.log_std, x_t));
        Var lr = t.mean_all(gaussian_log_prob(t, pr.mean, pr.log_std, r_t));
        Var lkl = t.mean_all(gaussian_kl(t, post.mean, post.log_std, prior.mean, prior.log_std));

        recon_x = step == 0 ? lx : t.add(recon_x, lx);
        recon_r = step == 0 ? lr : t.add(recon_r, lr);
        kl = step == 0 ? lkl : t.add(kl, lkl);
        s_prev = s;
    }

    ElboNodes out;
    out.recon_x = recon_x;
    out.recon_r = recon_r;
    out.kl = kl;
    out.total = t.sub(t.add(recon_x, recon_r), kl);
    return out;
}

double SequentialLatentModel::elbo_value(const ParamStore& ps, const TrajectorySegment& seg,
                                         RngStream& rng) const {
    Tape t;
    return t.scalar(elbo_nodes(t, ps, {seg}, rng).total);
}

std::vector<double> train_world_model(ParamStore& ps, const SequentialLatentModel& model,
                                      const std::vector<TrajectorySegment>& data,
                                      AdamOptimizer& opt, int batch_size, int steps,
                                      RngStream& rng) {
    if (data.empty()) throw std::invalid_argument("train_world_model: no data");
    std::vector<double> history;
    history.reserve(static_cast<std::size_t>(steps));
    Gradients grads(ps);
    for (int i = 0; i < steps; ++i) {
        std::vector<TrajectorySegment> batch;
        for (int b = 0; b < batch_size; ++b)
            batch.push_back(data[static_cast<std::size_t>(
                rng.uniform_int(static_cast<int>(data.size())))]);
        Tape t;
        auto elbo = model.elbo_nodes(t, ps, batch, rng);
        grads.zero();
        t.backward(t.neg(elbo.total), grads);
        opt.step(ps, grads);
        history.push_back(t.scalar(elbo.total));
    }
    return history;
}

}  // namespace smac
