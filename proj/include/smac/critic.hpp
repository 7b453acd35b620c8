#pragma once

#include <string>
#include <vector>

#include "smac/dists.hpp"
#include "smac/mlp.hpp"

namespace smac {

struct CriticConfig {
    int state_dim = 0;   // latent (or observation) feature width
    int action_dim = 0;
    std::vector<int> hidden = {64, 64};
    bool twin = true;    // twin heads with elementwise min; single head when false
};

// Q-network over (state, action) pairs with an optional twin head and a
// slow-moving target copy updated by Polyak averaging. Online and target
// parameters are separate groups in the shared store; only the online groups
// are exposed for optimization.
class CriticNetwork {
public:
    CriticNetwork() = default;
    CriticNetwork(ParamStore& ps, const std::string& prefix, const CriticConfig& cfg,
                  RngStream& rng);

    // online twin-min, differentiable; sa rows are concat(state, action)
    Var q_node(Tape& t, const ParamStore& ps, Var state, Var action) const;
    // per-head access for the critic regression loss
    Var q1_node(Tape& t, const ParamStore& ps, Var state, Var action) const;
    Var q2_node(Tape& t, const ParamStore& ps, Var state, Var action) const;

    double q_value(const ParamStore& ps, std::span<const double> s,
                   std::span<const double> a) const;
    double target_q_value(const ParamStore& ps, std::span<const double> s,
                          std::span<const double> a) const;

    // target <- (1 - tau) target + tau online
    void polyak_update(ParamStore& ps, double tau) const;
    void hard_sync(ParamStore& ps) const { polyak_update(ps, 1.0); }

    const std::vector<int>& online_groups() const { return online_groups_; }
    bool twin() const { return cfg_.twin; }
    int state_dim() const { return cfg_.state_dim; }
    int action_dim() const { return cfg_.action_dim; }

private:
    std::vector<double> cat(std::span<const double> s, std::span<const double> a) const;

    CriticConfig cfg_;
    Mlp q1_, q2_;
    Mlp t1_, t2_;
    std::vector<int> online_groups_;
    std::vector<int> target_groups_;  // aligned with online_groups_
};

// Marginal soft value operator: log-mean-exp of exp(Q(s^(k), a)) over K
// latent particles. K = 1 reduces exactly to Q at the single particle.
// `particles` is (B*K) x L, `action` is B x A; result is B x 1.
Var marginal_q_node(Tape& t, const ParamStore& ps, const CriticNetwork& c, Var particles,
                    Var action, int batch, int K);

// Value-level counterpart over the target network, used for Bellman targets.
double marginal_q_target_value(const ParamStore& ps, const CriticNetwork& c,
                               const DiagGaussian& belief, std::span<const double> a, int K,
                               RngStream& rng, bool deterministic_belief = false);

}  // namespace smac
