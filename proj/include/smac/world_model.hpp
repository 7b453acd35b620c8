#pragma once

#include <string>
#include <vector>

#include "smac/dists.hpp"
#include "smac/mlp.hpp"
#include "smac/policy.hpp"

namespace smac {

// One stored trajectory piece: x_t, r_t observed at step t, a_t taken after
// x_t. The generative chain is s_t ~ p(s_t | s_{t-1}, a_{t-1}),
// x_t ~ p(x_t | s_t), r_t ~ p(r_t | s_t), with s_0 = 0 and a_0 = 0.
struct TrajectorySegment {
    std::vector<std::vector<double>> obs;
    std::vector<std::vector<double>> act;
    std::vector<double> rew;

    int length() const { return static_cast<int>(obs.size()); }
};

struct WorldModelConfig {
    int obs_dim = 0;
    int action_dim = 0;
    int latent_dim = 8;
    std::vector<int> hidden = {32, 32};
    double log_std_min = kLogStdMin;
    double log_std_max = kLogStdMax;
};

struct BeliefState {
    DiagGaussian post;       // q(s_t | s_{t-1}, a_{t-1}, x_t)
    std::vector<double> s;   // sampled latent carried to the next step
};

// Sequential latent-variable model with Gaussian prior/posterior transitions
// and Gaussian observation/reward decoders. All heads are MLPs over the
// concatenated conditioning vector; log-stds are clamped.
class SequentialLatentModel {
public:
    SequentialLatentModel() = default;
    SequentialLatentModel(ParamStore& ps, const std::string& prefix, const WorldModelConfig& cfg,
                          RngStream& rng);

    const WorldModelConfig& config() const { return cfg_; }
    const std::vector<int>& groups() const { return groups_; }

    // --- value-level filtering (environment loop) ---
    BeliefState initial_belief(const ParamStore& ps, std::span<const double> x0,
                               RngStream& rng, bool deterministic = false) const;
    BeliefState filter_step(const ParamStore& ps, const BeliefState& prev,
                            std::span<const double> a_prev, std::span<const double> x,
                            RngStream& rng, bool deterministic = false) const;

    DiagGaussian prior_value(const ParamStore& ps, std::span<const double> s_prev,
                             std::span<const double> a_prev) const;
    DiagGaussian posterior_value(const ParamStore& ps, std::span<const double> s_prev,
                                 std::span<const double> a_prev, std::span<const double> x) const;
    DiagGaussian decode_obs_value(const ParamStore& ps, std::span<const double> s) const;
    DiagGaussian decode_reward_value(const ParamStore& ps, std::span<const double> s) const;

    // --- tape-level ELBO over a batch of equal-length segments ---
    // sum over time of log p(x|s) + log p(r|s) - KL(q || p), one posterior
    // sample per step, averaged over the batch. Returns a 1 x 1 node.
    struct ElboNodes {
        Var total;    // 1 x 1
        Var recon_x;  // 1 x 1 diagnostics
        Var recon_r;
        Var kl;
    };
    ElboNodes elbo_nodes(Tape& t, const ParamStore& ps,
                         const std::vector<TrajectorySegment>& batch, RngStream& rng) const;

    double elbo_value(const ParamStore& ps, const TrajectorySegment& seg, RngStream& rng) const;

private:
    GaussHeads heads(Tape& t, const ParamStore& ps, const Mlp& net, Var in, int d) const;
    DiagGaussian heads_value(const ParamStore& ps, const Mlp& net, std::span<const double> in,
                             int d) const;

    WorldModelConfig cfg_;
    Mlp prior_, post_, obs_dec_, rew_dec_;
    std::vector<int> groups_;
};

// Runs Adam on the negative ELBO over minibatches of stored segments.
// Returns the per-step ELBO values observed during training.
std::vector<double> train_world_model(ParamStore& ps, const SequentialLatentModel& model,
                                      const std::vector<TrajectorySegment>& data,
                                      AdamOptimizer& opt, int batch_size, int steps,
                                      RngStream& rng);

}  // namespace smac
