#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "smac/critic.hpp"
#include "smac/csv.hpp"
#include "smac/envs.hpp"
#include "smac/estimators.hpp"
#include "smac/policy.hpp"
#include "smac/world_model.hpp"

namespace smac {

// Ring buffer over transitions. Model-based mode additionally stores whole
// episodes so the world model can train on contiguous segments.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void push(Transition tr);
    std::size_t size() const { return data_.size(); }
    const Transition& sample(RngStream& rng) const;

    void begin_episode();
    void push_episode_step(std::vector<double> obs, std::vector<double> act, double rew);
    // uniformly sampled contiguous segment of the requested length
    std::optional<TrajectorySegment> sample_segment(int len, RngStream& rng) const;
    std::size_t num_episodes() const { return episodes_.size(); }

private:
    std::size_t capacity_;
    std::vector<Transition> data_;
    std::size_t head_ = 0;
    std::vector<TrajectorySegment> episodes_;
};

enum class TrainerMode { Sac, LatentSac, Smac, SmacWm };

std::string to_string(TrainerMode m);
TrainerMode trainer_mode_from_string(const std::string& s);

struct TrainerConfig {
    TrainerMode mode = TrainerMode::Smac;
    std::uint64_t seed = 0;

    long total_steps = 20000;
    int warmup_steps = 1000;
    int update_every = 1;       // gradient phase every N env steps
    int updates_per_phase = 1;  // gradient steps per phase

    double gamma = 0.99;
    double tau = 0.005;  // Polyak rate
    double lr = 3e-4;
    int batch_size = 64;
    std::size_t replay_capacity = 100000;

    // entropy machinery
    EstimatorKind entropy_estimator = EstimatorKind::Mlmc;
    int k_entropy = 8;  // particles for the entropy bound
    int k_q = 4;        // particles for the actor-side marginal Q
    int k_critic = 1;   // particles for the target-side marginal Q
    double beta = 0.0;  // conditional-entropy penalty weight

    // temperature
    double alpha_init = 0.2;
    bool alpha_auto = true;
    double target_entropy = 0.0;  // 0 -> defaults to -action_dim

    // networks
    int latent_dim = 8;
    std::vector<int> encoder_hidden = {32, 32};
    std::vector<int> decoder_hidden = {32, 32};
    std::vector<int> critic_hidden = {64, 64};
    bool critic_twin = true;
    bool encoder_deterministic = false;

    // world model (SmacWm)
    int wm_latent_dim = 4;
    std::vector<int> wm_hidden = {32, 32};
    int wm_segment_len = 16;
    int wm_batch_size = 8;
    int wm_updates_per_phase = 1;
    int wm_warmup_updates = 200;  // ELBO-only updates before RL starts

    // after this step the actor and temperature stop updating and only the
    // critic keeps regressing (policy-evaluation phase); 0 disables
    long freeze_actor_after = 0;

    // reporting
    int metrics_every = 1000;
    int oracle_samples = 2000;  // Monte Carlo size for the entropy oracle column
};

// One metrics CSV row; schema is fixed.
struct MetricsRow {
    long step = 0;
    double episode_return = 0.0;
    double actor_loss = 0.0;
    double critic_loss = 0.0;
    double alpha = 0.0;
    double entropy_estimate = 0.0;
    double entropy_oracle = 0.0;
    double estimator_variance = 0.0;

    static std::string csv_header() {
        return "step,episode_return,actor_loss,critic_loss,alpha,entropy_estimate,"
               "entropy_oracle,estimator_variance";
    }
    std::vector<double> csv_cells() const {
        return {static_cast<double>(step), episode_return, actor_loss, critic_loss,
                alpha,                     entropy_estimate, entropy_oracle, estimator_variance};
    }
};

struct TrainResult {
    std::vector<MetricsRow> metrics;
    std::vector<double> episode_returns;  // every completed training episode
    double final_average_return = 0.0;    // mean over the last tail of episodes
};

// Full training loop. All modes share one code path: SAC is the collapsed
// special case (identity point-mass encoder), LatentSac uses the conditional
// entropy with K = 1 marginal Q, SmacWm swaps the encoder for a world-model
// belief filter and trains only the action decoder with the actor loss.
class Trainer {
public:
    Trainer(Env& env, const TrainerConfig& cfg);

    // Called at every metrics row, after the row is recorded; gives probes
    // access to the live policy/critic state.
    using MetricsObserver = std::function<void(const MetricsRow&, Trainer&)>;

    TrainResult run(CsvWriter* metrics_csv = nullptr, const MetricsObserver& observer = {});

    // exposed for targeted tests
    const ParamStore& params() const { return ps_; }
    ParamStore& params() { return ps_; }
    const PolicyModel& policy() const { return *policy_; }
    const CriticNetwork& critic() const { return critic_; }
    double alpha() const;

    struct UpdateStats {
        double actor_loss = 0.0;
        double critic_loss = 0.0;
        double entropy_estimate = 0.0;
        double estimator_variance = 0.0;
    };
    // one gradient phase over an explicit batch; public so the SAC-reduction
    // test can drive updates with controlled data
    UpdateStats update_on_batch(const std::vector<Transition>& batch);

private:
    History make_history(const std::vector<double>& obs) const;
    Var entropy_node(Tape& t, const ActionNodes& an, RngStream& rng) const;
    double entropy_value(const History& h, RngStream& rng) const;
    double bellman_target(const Transition& tr);
    UpdateStats critic_update(const std::vector<Transition>& batch);
    UpdateStats actor_update(const std::vector<Transition>& batch);
    void alpha_update(double entropy_estimate);
    void wm_update();

    Env& env_;
    TrainerConfig cfg_;
    ParamStore ps_;
    std::unique_ptr<PolicyModel> policy_;
    CriticNetwork critic_;
    SequentialLatentModel wm_;
    ReplayBuffer replay_;

    int log_alpha_group_ = -1;
    AdamOptimizer actor_opt_, critic_opt_, alpha_opt_, wm_opt_;

    RngStream env_rng_, act_rng_, batch_rng_, grad_rng_, wm_rng_, oracle_rng_;

    // belief filtering state (SmacWm)
    BeliefState belief_;
    bool wm_ready_ = false;
    bool actor_frozen_ = false;
};

TrainResult train(Env& env, const TrainerConfig& cfg, CsvWriter* metrics_csv = nullptr);

}  // namespace smac
