#include "smac/critic.hpp"

#include <cmath>
#include <stdexcept>

namespace smac {

CriticNetwork::CriticNetwork(ParamStore& ps, const std::string& prefix, const CriticConfig& cfg,
                             RngStream& rng)
    : cfg_(cfg) {
    int in = cfg.state_dim + cfg.action_dim;
    q1_ = Mlp::create(ps, prefix + ".q1", in, cfg.hidden, 1, Activation::Relu, rng);
    t1_ = Mlp::create(ps, prefix + ".t1", in, cfg.hidden, 1, Activation::Relu, rng);
    if (cfg.twin) {
        q2_ = Mlp::create(ps, prefix + ".q2", in, cfg.hidden, 1, Activation::Relu, rng);
        t2_ = Mlp::create(ps, prefix + ".t2", in, cfg.hidden, 1, Activation::Relu, rng);
    }

    auto push = [](std::vector<int>& dst, const Mlp& m) {
        dst.insert(dst.end(), m.weight_groups().begin(), m.weight_groups().end());
        dst.insert(dst.end(), m.bias_groups().begin(), m.bias_groups().end());
    };
    push(online_groups_, q1_);
    push(target_groups_, t1_);
    if (cfg.twin) {
        push(online_groups_, q2_);
        push(target_groups_, t2_);
    }
    hard_sync(ps);
}

Var CriticNetwork::q1_node(Tape& t, const ParamStore& ps, Var state, Var action) const {
    return q1_.forward(t, ps, t.concat_cols({state, action}));
}

Var CriticNetwork::q2_node(Tape& t, const ParamStore& ps, Var state, Var action) const {
    if (!cfg_.twin) throw std::logic_error("q2_node: critic has a single head");
    return q2_.forward(t, ps, t.concat_cols({state, action}));
}

Var CriticNetwork::q_node(Tape& t, const ParamStore& ps, Var state, Var action) const {
    Var q1 = q1_node(t, ps, state, action);
    if (!cfg_.twin) return q1;
    return t.min_(q1, q2_node(t, ps, state, action));
}

std::vector<double> CriticNetwork::cat(std::span<const double> s,
                                       std::span<const double> a) const {
    std::vector<double> sa(s.begin(), s.end());
    sa.insert(sa.end(), a.begin(), a.end());
    return sa;
}

double CriticNetwork::q_value(const ParamStore& ps, std::span<const double> s,
                              std::span<const double> a) const {
    auto sa = cat(s, a);
    double q = q1_.forward_value(ps, sa)[0];
    if (cfg_.twin) q = std::min(q, q2_.forward_value(ps, sa)[0]);
    return q;
}

double CriticNetwork::target_q_value(const ParamStore& ps, std::span<const double> s,
                                     std::span<const double> a) const {
    auto sa = cat(s, a);
    double q = t1_.forward_value(ps, sa)[0];
    if (cfg_.twin) q = std::min(q, t2_.forward_value(ps, sa)[0]);
    return q;
}

void CriticNetwork::polyak_update(ParamStore& ps, double tau) const {
    for (std::size_t i = 0; i < online_groups_.size(); ++i) {
        const auto& src = ps.group(online_groups_[i]).value;
        auto& dst = ps.group(target_groups_[i]).value;
        for (std::size_t j = 0; j < dst.size(); ++j)
            dst[j] = (1.0 - tau) * dst[j] + tau * src[j];
    }
}

Var marginal_q_node(Tape& t, const ParamStore& ps, const CriticNetwork& c, Var particles,
                    Var action, int batch, int K) {
    if (K < 1) throw std::invalid_argument("marginal_q_node: K >= 1");
    Var a_rep = t.repeat_rows(action, K);
    Var q = c.q_node(t, ps, particles, a_rep);          // (B*K) x 1, twin-min per particle
    Var qm = t.reshape(q, batch, K);
    return t.add_scalar(t.logsumexp_row(qm), -std::log(static_cast<double>(K)));
}

double marginal_q_target_value(const ParamStore& ps, const CriticNetwork& c,
                               const DiagGaussian& belief, std::span<const double> a, int K,
                               RngStream& rng, bool deterministic_belief) {
    if (K < 1) throw std::invalid_argument("marginal_q_target_value: K >= 1");
    std::vector<double> qs(static_cast<std::size_t>(K));
    std::vector<double> s(belief.mean.size());
    for (int k = 0; k < K; ++k) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            double e = deterministic_belief ? 0.0 : rng.normal();
            s[i] = belief.mean[i] + std::exp(belief.log_std[i]) * e;
        }
        qs[static_cast<std::size_t>(k)] = c.target_q_value(ps, s, a);
    }
    double m = qs[0];
    for (double q : qs) m = std::max(m, q);
    double acc = 0.0;
    for (double q : qs) acc += std::exp(q - m);
    return m + std::log(acc / K);
}

}  // namespace smac
