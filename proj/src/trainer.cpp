#include "smac/trainer.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace smac {

// ---------------------------------------------------------------------------
// replay buffer
// ---------------------------------------------------------------------------

void ReplayBuffer::push(Transition tr) {
    if (data_.size() < capacity_) {
        data_.push_back(std::move(tr));
    } else {
        data_[head_] = std::move(tr);
        head_ = (head_ + 1) % capacity_;
    }
}

const Transition& ReplayBuffer::sample(RngStream& rng) const {
    if (data_.empty()) throw std::logic_error("ReplayBuffer::sample: empty buffer");
    return data_[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(data_.size())))];
}

void ReplayBuffer::begin_episode() {
    constexpr std::size_t kMaxEpisodes = 512;
    episodes_.emplace_back();
    if (episodes_.size() > kMaxEpisodes) episodes_.erase(episodes_.begin());
}

void ReplayBuffer::push_episode_step(std::vector<double> obs, std::vector<double> act,
                                     double rew) {
    if (episodes_.empty()) begin_episode();
    auto& ep = episodes_.back();
    ep.obs.push_back(std::move(obs));
    ep.act.push_back(std::move(act));
    ep.rew.push_back(rew);
}

std::optional<TrajectorySegment> ReplayBuffer::sample_segment(int len, RngStream& rng) const {
    for (int attempt = 0; attempt < 16; ++attempt) {
        if (episodes_.empty()) return std::nullopt;
        const auto& ep =
            episodes_[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(episodes_.size())))];
        if (ep.length() < len) continue;
        int start = rng.uniform_int(ep.length() - len + 1);
        TrajectorySegment seg;
        seg.obs.assign(ep.obs.begin() + start, ep.obs.begin() + start + len);
        seg.act.assign(ep.act.begin() + start, ep.act.begin() + start + len);
        seg.rew.assign(ep.rew.begin() + start, ep.rew.begin() + start + len);
        return seg;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// trainer
// ---------------------------------------------------------------------------

std::string to_string(TrainerMode m) {
    switch (m) {
        case TrainerMode::Sac: return "sac";
        case TrainerMode::LatentSac: return "latent-sac";
        case TrainerMode::Smac: return "smac";
        case TrainerMode::SmacWm: return "smac-wm";
    }
    throw std::logic_error("to_string: bad TrainerMode");
}

TrainerMode trainer_mode_from_string(const std::string& s) {
    if (s == "sac") return TrainerMode::Sac;
    if (s == "latent-sac") return TrainerMode::LatentSac;
    if (s == "smac") return TrainerMode::Smac;
    if (s == "smac-wm") return TrainerMode::SmacWm;
    throw std::invalid_argument("unknown trainer mode: " + s);
}

Trainer::Trainer(Env& env, const TrainerConfig& cfg)
    : env_(env),
      cfg_(cfg),
      replay_(cfg.replay_capacity),
      env_rng_(cfg.seed, 0),
      act_rng_(cfg.seed, 1),
      batch_rng_(cfg.seed, 2),
      grad_rng_(cfg.seed, 3),
      wm_rng_(cfg.seed, 4),
      oracle_rng_(cfg.seed, 5) {
    RngStream init_rng(cfg.seed, 100);

    std::vector<int> actor_groups;
    switch (cfg.mode) {
        case TrainerMode::Sac: {
            auto pol = std::make_unique<IdentityEncoderPolicy>(
                ps_, "actor", env.obs_dim(), env.action_dim(), cfg.decoder_hidden, init_rng);
            actor_groups = pol->decoder_groups();
            policy_ = std::move(pol);
            break;
        }
        case TrainerMode::LatentSac:
        case TrainerMode::Smac: {
            LvpConfig pc;
            pc.obs_dim = env.obs_dim();
            pc.latent_dim = cfg.latent_dim;
            pc.action_dim = env.action_dim();
            pc.encoder_hidden = cfg.encoder_hidden;
            pc.decoder_hidden = cfg.decoder_hidden;
            pc.tanh_squashed = true;
            pc.encoder_deterministic = cfg.encoder_deterministic;
            auto pol = std::make_unique<LatentVariablePolicy>(ps_, "actor", pc, init_rng);
            actor_groups = pol->encoder_groups();
            auto dec = pol->decoder_groups();
            actor_groups.insert(actor_groups.end(), dec.begin(), dec.end());
            policy_ = std::move(pol);
            break;
        }
        case TrainerMode::SmacWm: {
            WorldModelConfig wc;
            wc.obs_dim = env.obs_dim();
            wc.action_dim = env.action_dim();
            wc.latent_dim = cfg.wm_latent_dim;
            wc.hidden = cfg.wm_hidden;
            wm_ = SequentialLatentModel(ps_, "wm", wc, init_rng);
            auto pol = std::make_unique<BeliefHeadPolicy>(ps_, "actor", cfg.wm_latent_dim,
                                                          env.action_dim(), cfg.decoder_hidden,
                                                          init_rng);
            actor_groups = pol->decoder_groups();
            policy_ = std::move(pol);
            break;
        }
    }

    CriticConfig cc;
    cc.state_dim = policy_->latent_dim();
    cc.action_dim = env.action_dim();
    cc.hidden = cfg.critic_hidden;
    cc.twin = cfg.critic_twin;
    critic_ = CriticNetwork(ps_, "critic", cc, init_rng);

    log_alpha_group_ = ps_.add("log_alpha", 1, 1, std::log(cfg.alpha_init));

    AdamConfig ac{.lr = cfg.lr};
    actor_opt_ = AdamOptimizer(ps_, actor_groups, ac);
    critic_opt_ = AdamOptimizer(ps_, critic_.online_groups(), ac);
    alpha_opt_ = AdamOptimizer(ps_, std::vector<int>{log_alpha_group_}, ac);
    if (cfg.mode == TrainerMode::SmacWm) wm_opt_ = AdamOptimizer(ps_, wm_.groups(), ac);

    if (cfg_.target_entropy == 0.0) cfg_.target_entropy = -static_cast<double>(env.action_dim());
}

double Trainer::alpha() const {
    return std::exp(ps_.group(log_alpha_group_).value[0]);
}

History Trainer::make_history(const std::vector<double>& obs) const {
    if (cfg_.mode == TrainerMode::SmacWm)
        return History{BeliefHeadPolicy::pack_belief(belief_.post), History::Mode::Pomdp};
    return History{obs, History::Mode::Mdp};
}

Var Trainer::entropy_node(Tape& t, const ActionNodes& an, RngStream& rng) const {
    if (cfg_.mode == TrainerMode::LatentSac)
        return t.neg(conditional_log_prob(t, *policy_, an.s0, an.u));
    switch (cfg_.entropy_estimator) {
        case EstimatorKind::Naive:
            return naive_entropy_node(t, *policy_, an, rng);
        case EstimatorKind::Nested:
            return nested_entropy_node(t, *policy_, an, cfg_.k_entropy, rng);
        case EstimatorKind::Mlmc:
            return mlmc_entropy_node(t, *policy_, an, cfg_.k_entropy, rng).value;
        case EstimatorKind::Iwae:
            return t.neg(iwae_log_prob_node(t, *policy_, an, cfg_.k_entropy, rng));
        case EstimatorKind::Oracle:
            break;
    }
    throw std::invalid_argument("entropy_node: unsupported estimator for training");
}

double Trainer::bellman_target(const Transition& tr) {
    if (tr.done) return tr.reward;
    History h2{tr.next_obs, cfg_.mode == TrainerMode::SmacWm ? History::Mode::Pomdp
                                                             : History::Mode::Mdp};
    ActionSample a2 = sample_action(*policy_, h2, grad_rng_);
    double H = 0.0;
    if (cfg_.mode == TrainerMode::LatentSac) {
        H = -conditional_log_prob_value(*policy_, a2.a, a2.u, a2.s0.s);
    } else {
        switch (cfg_.entropy_estimator) {
            case EstimatorKind::Naive:
                H = naive_entropy_at(*policy_, h2, a2.a, a2.u, grad_rng_);
                break;
            case EstimatorKind::Nested:
                H = nested_entropy_at(*policy_, h2, a2.a, a2.u, a2.s0.s, cfg_.k_entropy,
                                      grad_rng_);
                break;
            case EstimatorKind::Mlmc:
                H = mlmc_entropy_at(*policy_, h2, a2.a, a2.u, a2.s0.s, cfg_.k_entropy, grad_rng_);
                break;
            default:
                throw std::invalid_argument("bellman_target: unsupported estimator");
        }
    }
    DiagGaussian belief2 = policy_->encode_value(h2);
    double qt = marginal_q_target_value(ps_, critic_, belief2, a2.a, cfg_.k_critic, grad_rng_,
                                        policy_->encoder_deterministic());
    return tr.reward + cfg_.gamma * (qt + alpha() * H);
}

Trainer::UpdateStats Trainer::critic_update(const std::vector<Transition>& batch) {
    int B = static_cast<int>(batch.size());
    int L = policy_->latent_dim();
    int A = env_.action_dim();

    std::vector<double> ys(static_cast<std::size_t>(B));
    std::vector<double> ss, as;
    ss.reserve(static_cast<std::size_t>(B) * L);
    as.reserve(static_cast<std::size_t>(B) * A);
    for (int i = 0; i < B; ++i) {
        const Transition& tr = batch[static_cast<std::size_t>(i)];
        ys[static_cast<std::size_t>(i)] = bellman_target(tr);
        History h{tr.obs, cfg_.mode == TrainerMode::SmacWm ? History::Mode::Pomdp
                                                           : History::Mode::Mdp};
        DiagGaussian enc = policy_->encode_value(h);
        for (int j = 0; j < L; ++j) {
            auto k = static_cast<std::size_t>(j);
            double e = policy_->encoder_deterministic() ? 0.0 : grad_rng_.normal();
            ss.push_back(enc.mean[k] + std::exp(enc.log_std[k]) * e);
        }
        as.insert(as.end(), tr.action.begin(), tr.action.end());
    }

    Tape t;
    Var s = t.input(B, L, ss);
    Var a = t.input(B, A, as);
    Var y = t.input(B, 1, ys);
    Var loss = t.mean_all(t.square(t.sub(critic_.q1_node(t, ps_, s, a), y)));
    if (critic_.twin())
        loss = t.add(loss, t.mean_all(t.square(t.sub(critic_.q2_node(t, ps_, s, a), y))));

    Gradients grads(ps_);
    t.backward(loss, grads);
    critic_opt_.step(ps_, grads);

    UpdateStats st;
    st.critic_loss = t.scalar(loss);
    return st;
}

Trainer::UpdateStats Trainer::actor_update(const std::vector<Transition>& batch) {
    int B = static_cast<int>(batch.size());
    HistoryBatch hb;
    hb.reserve(static_cast<std::size_t>(B));
    for (const auto& tr : batch)
        hb.push_back(History{tr.obs, cfg_.mode == TrainerMode::SmacWm ? History::Mode::Pomdp
                                                                      : History::Mode::Mdp});

    Tape t;
    ActionNodes an = sample_action_nodes(t, *policy_, hb, grad_rng_);
    Var H = entropy_node(t, an, grad_rng_);
    Var particles = encoder_particles(t, *policy_, an.enc, B, cfg_.k_q, grad_rng_);
    Var q = marginal_q_node(t, ps_, critic_, particles, an.a, B, cfg_.k_q);

    Var obj = t.add(q, t.scale(H, alpha()));
    if (cfg_.beta != 0.0) {
        Var pen = conditional_entropy_penalty_node(t, *policy_, an.enc, B, grad_rng_);
        obj = t.sub(obj, t.scale(pen, cfg_.beta));
    }
    Var loss = t.neg(t.mean_all(obj));

    Gradients grads(ps_);
    t.backward(loss, grads);
    actor_opt_.step(ps_, grads);

    UpdateStats st;
    st.actor_loss = t.scalar(loss);
    auto hv = t.value(H);
    SampleStats hs = summarize(hv);
    st.entropy_estimate = hs.mean;
    st.estimator_variance = hs.var;
    return st;
}

void Trainer::alpha_update(double entropy_estimate) {
    // d/d(log alpha) of log_alpha * (H - target)
    Gradients grads(ps_);
    grads.g[static_cast<std::size_t>(log_alpha_group_)][0] =
        entropy_estimate - cfg_.target_entropy;
    alpha_opt_.step(ps_, grads);
}

Trainer::UpdateStats Trainer::update_on_batch(const std::vector<Transition>& batch) {
    UpdateStats c = critic_update(batch);
    if (actor_frozen_) {
        critic_.polyak_update(ps_, cfg_.tau);
        return c;
    }
    UpdateStats a = actor_update(batch);
    if (cfg_.alpha_auto) alpha_update(a.entropy_estimate);
    critic_.polyak_update(ps_, cfg_.tau);
    a.critic_loss = c.critic_loss;
    return a;
}

void Trainer::wm_update() {
    std::vector<TrajectorySegment> batch;
    for (int b = 0; b < cfg_.wm_batch_size; ++b) {
        auto seg = replay_.sample_segment(cfg_.wm_segment_len, wm_rng_);
        if (seg) batch.push_back(std::move(*seg));
    }
    if (batch.empty()) return;
    Tape t;
    auto elbo = wm_.elbo_nodes(t, ps_, batch, wm_rng_);
    Gradients grads(ps_);
    t.backward(t.neg(elbo.total), grads);
    wm_opt_.step(ps_, grads);
}

TrainResult Trainer::run(CsvWriter* metrics_csv, const MetricsObserver& observer) {
    TrainResult res;
    const bool wm_mode = cfg_.mode == TrainerMode::SmacWm;

    std::vector<double> obs = env_.reset(env_rng_);
    replay_.begin_episode();
    if (wm_mode) belief_ = wm_.initial_belief(ps_, obs, wm_rng_);

    double ep_return = 0.0;
    std::vector<double> window_returns;
    double last_window_mean = 0.0;
    UpdateStats last_stats;

    for (long step = 1; step <= cfg_.total_steps; ++step) {
        History h = make_history(obs);
        std::vector<double> a(static_cast<std::size_t>(env_.action_dim()));
        if (step <= cfg_.warmup_steps) {
            for (auto& v : a) v = act_rng_.uniform(-1.0, 1.0);
        } else {
            a = sample_action(*policy_, h, act_rng_).a;
        }

        Env::StepResult sr = env_.step(a, env_rng_);
        ep_return += sr.reward;
        replay_.push_episode_step(obs, a, sr.reward);

        Transition tr;
        tr.obs = h.feat;
        tr.action = a;
        tr.reward = sr.reward;
        tr.done = sr.done;
        if (wm_mode) {
            belief_ = wm_.filter_step(ps_, belief_, a, sr.obs, wm_rng_);
            tr.next_obs = BeliefHeadPolicy::pack_belief(belief_.post);
        } else {
            tr.next_obs = sr.obs;
        }
        replay_.push(std::move(tr));

        if (sr.done) {
            res.episode_returns.push_back(ep_return);
            window_returns.push_back(ep_return);
            ep_return = 0.0;
            obs = env_.reset(env_rng_);
            replay_.begin_episode();
            if (wm_mode) belief_ = wm_.initial_belief(ps_, obs, wm_rng_);
        } else {
            obs = sr.obs;
        }

        if (step == cfg_.warmup_steps && wm_mode)
            for (int i = 0; i < cfg_.wm_warmup_updates; ++i) wm_update();

        if (cfg_.freeze_actor_after > 0 && step > cfg_.freeze_actor_after) actor_frozen_ = true;

        if (step > cfg_.warmup_steps && step % cfg_.update_every == 0) {
            if (wm_mode)
                for (int i = 0; i < cfg_.wm_updates_per_phase; ++i) wm_update();
            for (int u = 0; u < cfg_.updates_per_phase; ++u) {
                std::vector<Transition> batch;
                batch.reserve(static_cast<std::size_t>(cfg_.batch_size));
                for (int b = 0; b < cfg_.batch_size; ++b) batch.push_back(replay_.sample(batch_rng_));
                last_stats = update_on_batch(batch);
            }
        }

        if (step % cfg_.metrics_every == 0) {
            if (!window_returns.empty()) {
                last_window_mean = std::accumulate(window_returns.begin(), window_returns.end(),
                                                   0.0) /
                                   static_cast<double>(window_returns.size());
                window_returns.clear();
            }
            MetricsRow row;
            row.step = step;
            row.episode_return = last_window_mean;
            row.actor_loss = last_stats.actor_loss;
            row.critic_loss = last_stats.critic_loss;
            row.alpha = alpha();
            row.entropy_estimate = last_stats.entropy_estimate;
            row.estimator_variance = last_stats.estimator_variance;
            {
                History hh = make_history(obs);
                ActionSample s = sample_action(*policy_, hh, oracle_rng_);
                row.entropy_oracle = -marginal_log_prob_oracle(*policy_, s.a, s.u, hh,
                                                               cfg_.oracle_samples, oracle_rng_);
            }
            res.metrics.push_back(row);
            if (metrics_csv) metrics_csv->write_row(row.csv_cells());
            if (observer) observer(row, *this);
        }
    }

    std::size_t n = res.episode_returns.size();
    std::size_t tail = std::max<std::size_t>(5, n / 10);
    tail = std::min(tail, n);
    if (tail > 0)
        res.final_average_return =
            std::accumulate(res.episode_returns.end() - static_cast<long>(tail),
                            res.episode_returns.end(), 0.0) /
            static_cast<double>(tail);
    return res;
}

TrainResult train(Env& env, const TrainerConfig& cfg, CsvWriter* metrics_csv) {
    Trainer tr(env, cfg);
    return tr.run(metrics_csv);
}

}  // namespace smac
