#include "smac/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace smac {

double multimodal_bandit_reward(std::span<const double> a, double c, double sigma_r) {
    if (a.size() != 2) throw std::invalid_argument("multimodal_bandit_reward: 2-D actions");
    double best = 0.0;
    for (double sx : {-1.0, 1.0})
        for (double sy : {-1.0, 1.0}) {
            double dx = a[0] - sx * c, dy = a[1] - sy * c;
            best = std::max(best, std::exp(-(dx * dx + dy * dy) / (2.0 * sigma_r * sigma_r)));
        }
    return best;
}

std::vector<double> PointmassSparse::reset(RngStream& rng) {
    px_ = cfg_.start_noise * rng.normal();
    py_ = cfg_.start_noise * rng.normal();
    vx_ = vy_ = 0.0;
    t_ = 0;
    return obs();
}

Env::StepResult PointmassSparse::step(std::span<const double> a, RngStream&) {
    if (a.size() != 2) throw std::invalid_argument("PointmassSparse::step: 2-D actions");
    double ax = std::clamp(a[0], -1.0, 1.0);
    double ay = std::clamp(a[1], -1.0, 1.0);
    vx_ = (1.0 - cfg_.damping) * vx_ + cfg_.dt * ax;
    vy_ = (1.0 - cfg_.damping) * vy_ + cfg_.dt * ay;
    px_ += cfg_.dt * vx_;
    py_ += cfg_.dt * vy_;
    ++t_;
    double dx = px_ - cfg_.goal_x, dy = py_ - cfg_.goal_y;
    bool in_goal = dx * dx + dy * dy <= cfg_.goal_radius * cfg_.goal_radius;
    return {obs(), in_goal ? 1.0 : 0.0, t_ >= cfg_.horizon};
}

std::vector<double> LinearGaussianPomdp::reset(RngStream& rng) {
    z_ = rng.normal();
    t_ = 0;
    return {cfg_.c * z_ + cfg_.sigma_obs * rng.normal()};
}

Env::StepResult LinearGaussianPomdp::step(std::span<const double> a, RngStream& rng) {
    if (a.size() != 1) throw std::invalid_argument("LinearGaussianPomdp::step: 1-D actions");
    double u = std::clamp(a[0], -1.0, 1.0);
    double r = cfg_.reward_kind == RewardKind::Quadratic
                   ? -z_ * z_
                   : z_ + cfg_.sigma_reward * rng.normal();
    z_ = cfg_.a * z_ + cfg_.b * u + cfg_.sigma_process * rng.normal();
    ++t_;
    return {{cfg_.c * z_ + cfg_.sigma_obs * rng.normal()}, r, t_ >= cfg_.horizon};
}

std::vector<double> GaussianNoiseEnv::reset(RngStream& rng) {
    auto x = inner_->reset(rng);
    for (auto& v : x) v += scale_ * rng.normal();
    return x;
}

Env::StepResult GaussianNoiseEnv::step(std::span<const double> a, RngStream& rng) {
    auto r = inner_->step(a, rng);
    for (auto& v : r.obs) v += scale_ * rng.normal();
    return r;
}

std::vector<double> DropoutNoiseEnv::reset(RngStream& rng) {
    auto x = inner_->reset(rng);
    for (auto& v : x)
        if (rng.uniform() < p_) v = 0.0;
    return x;
}

Env::StepResult DropoutNoiseEnv::step(std::span<const double> a, RngStream& rng) {
    auto r = inner_->step(a, rng);
    for (auto& v : r.obs)
        if (rng.uniform() < p_) v = 0.0;
    return r;
}

std::unique_ptr<Env> make_env(const std::string& name) {
    if (name == "bandit") return std::make_unique<MultimodalBandit>();
    if (name == "pointmass") return std::make_unique<PointmassSparse>();
    if (name == "lgpomdp") return std::make_unique<LinearGaussianPomdp>();
    throw std::invalid_argument("unknown env: " + name);
}

std::unique_ptr<Env> wrap_noise(std::unique_ptr<Env> env, const std::string& kind, double level) {
    if (kind == "none") return env;
    if (kind == "gauss") return std::make_unique<GaussianNoiseEnv>(std::move(env), level);
    if (kind == "dropout") return std::make_unique<DropoutNoiseEnv>(std::move(env), level);
    throw std::invalid_argument("unknown noise kind: " + kind);
}

}  // namespace smac
