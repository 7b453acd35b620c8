#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "smac/rng.hpp"

namespace smac {

struct Transition {
    std::vector<double> obs;
    std::vector<double> action;
    std::vector<double> next_obs;
    double reward = 0.0;
    bool done = false;
};

class Env {
public:
    virtual ~Env() = default;

    virtual int obs_dim() const = 0;
    virtual int action_dim() const = 0;
    virtual int horizon() const = 0;

    virtual std::vector<double> reset(RngStream& rng) = 0;

    struct StepResult {
        std::vector<double> obs;
        double reward = 0.0;
        bool done = false;
    };
    virtual StepResult step(std::span<const double> a, RngStream& rng) = 0;

    // underlying (possibly hidden) state, for oracles and readout probes
    virtual std::vector<double> debug_state() const { return {}; }
};

// Reward surface of the one-step multimodal bandit: the max over four
// Gaussian bumps centered at (+-c, +-c). Exposed so density fits can target
// the exact surface.
double multimodal_bandit_reward(std::span<const double> a, double c = 0.5, double sigma_r = 0.25);

// Single-step bandit over 2-D actions in (-1, 1)^2 with the bump reward.
class MultimodalBandit final : public Env {
public:
    MultimodalBandit(double c = 0.5, double sigma_r = 0.25) : c_(c), sigma_r_(sigma_r) {}
    int obs_dim() const override { return 1; }
    int action_dim() const override { return 2; }
    int horizon() const override { return 1; }
    std::vector<double> reset(RngStream&) override { return {0.0}; }
    StepResult step(std::span<const double> a, RngStream&) override {
        return {{0.0}, multimodal_bandit_reward(a, c_, sigma_r_), true};
    }

private:
    double c_, sigma_r_;
};

struct PointmassConfig {
    double dt = 0.05;
    double damping = 0.2;
    double goal_x = 0.6;
    double goal_y = 0.6;
    double goal_radius = 0.1;
    double start_noise = 0.02;
    int horizon = 200;
};

// 2-D point mass with velocity damping and a sparse unit reward inside a
// goal disc. Observation is [pos, vel]; action is acceleration in [-1, 1]^2.
class PointmassSparse final : public Env {
public:
    explicit PointmassSparse(PointmassConfig cfg = {}) : cfg_(cfg) {}
    int obs_dim() const override { return 4; }
    int action_dim() const override { return 2; }
    int horizon() const override { return cfg_.horizon; }
    std::vector<double> reset(RngStream& rng) override;
    StepResult step(std::span<const double> a, RngStream& rng) override;
    std::vector<double> debug_state() const override { return {px_, py_, vx_, vy_}; }

private:
    std::vector<double> obs() const { return {px_, py_, vx_, vy_}; }

    PointmassConfig cfg_;
    double px_ = 0, py_ = 0, vx_ = 0, vy_ = 0;
    int t_ = 0;
};

enum class RewardKind { Quadratic, LinearNoisy };

struct LinearGaussianPomdpConfig {
    double a = 0.98;          // state transition coefficient
    double b = 0.2;           // action gain
    double c = 1.0;           // observation gain
    double sigma_process = 0.2;
    double sigma_obs = 1.0;
    double sigma_reward = 1.5;  // LinearNoisy only
    RewardKind reward_kind = RewardKind::LinearNoisy;
    int horizon = 50;
};

// Scalar hidden state z' = a z + b u + eps_p observed through x = c z +
// eps_o. Reward is -z^2 (Quadratic) or z + eps_r (LinearNoisy). The reward
// sequence is informative about z, which is what makes filtering with the
// reward channel matter.
class LinearGaussianPomdp final : public Env {
public:
    explicit LinearGaussianPomdp(LinearGaussianPomdpConfig cfg = {}) : cfg_(cfg) {}
    int obs_dim() const override { return 1; }
    int action_dim() const override { return 1; }
    int horizon() const override { return cfg_.horizon; }
    std::vector<double> reset(RngStream& rng) override;
    StepResult step(std::span<const double> a, RngStream& rng) override;
    std::vector<double> debug_state() const override { return {z_}; }
    const LinearGaussianPomdpConfig& config() const { return cfg_; }

private:
    LinearGaussianPomdpConfig cfg_;
    double z_ = 0;
    int t_ = 0;
};

// Additive Gaussian observation noise wrapper.
class GaussianNoiseEnv final : public Env {
public:
    GaussianNoiseEnv(std::unique_ptr<Env> inner, double scale)
        : inner_(std::move(inner)), scale_(scale) {}
    int obs_dim() const override { return inner_->obs_dim(); }
    int action_dim() const override { return inner_->action_dim(); }
    int horizon() const override { return inner_->horizon(); }
    std::vector<double> reset(RngStream& rng) override;
    StepResult step(std::span<const double> a, RngStream& rng) override;
    std::vector<double> debug_state() const override { return inner_->debug_state(); }

private:
    std::unique_ptr<Env> inner_;
    double scale_;
};

// Observation dropout wrapper: each reading is zeroed independently with
// probability p.
class DropoutNoiseEnv final : public Env {
public:
    DropoutNoiseEnv(std::unique_ptr<Env> inner, double p) : inner_(std::move(inner)), p_(p) {}
    int obs_dim() const override { return inner_->obs_dim(); }
    int action_dim() const override { return inner_->action_dim(); }
    int horizon() const override { return inner_->horizon(); }
    std::vector<double> reset(RngStream& rng) override;
    StepResult step(std::span<const double> a, RngStream& rng) override;
    std::vector<double> debug_state() const override { return inner_->debug_state(); }

private:
    std::unique_ptr<Env> inner_;
    double p_;
};

// Factory used by the CLI: "bandit", "pointmass", "lgpomdp". Noise wrapping
// is applied on top: kind in {"none", "gauss", "dropout"}.
std::unique_ptr<Env> make_env(const std::string& name);
std::unique_ptr<Env> wrap_noise(std::unique_ptr<Env> env, const std::string& kind, double level);

}  // namespace smac
