// Acceptance criterion 7: every differentiable estimator and training loss
// matches central finite differences under matched noise (rel err <= 1e-3);
// the math core alone is held to 1e-4.

#include <cmath>
#include <functional>
#include <vector>

#include "acceptance_util.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "smac/critic.hpp"
#include "smac/estimators.hpp"
#include "smac/world_model.hpp"

using namespace smac;
using namespace smac::testing;

namespace {

struct TinyRig {
    ParamStore ps;
    LatentVariablePolicy pol;
    CriticNetwork critic;
    HistoryBatch hb;
    std::vector<int> pol_groups;

    TinyRig() {
        RngStream init(21, 0);
        LvpConfig pc;
        pc.obs_dim = 2;
        pc.latent_dim = 2;
        pc.action_dim = 2;
        pc.encoder_hidden = {8};
        pc.decoder_hidden = {8};
        pol = LatentVariablePolicy(ps, "p", pc, init);
        CriticConfig cc;
        cc.state_dim = 2;
        cc.action_dim = 2;
        cc.hidden = {8};
        critic = CriticNetwork(ps, "c", cc, init);
        hb = {History{{0.3, -0.2}, History::Mode::Mdp}, History{{-0.5, 0.1}, History::Mode::Mdp},
              History{{0.0, 0.7}, History::Mode::Mdp}};
        pol_groups = pol.encoder_groups();
        auto d = pol.decoder_groups();
        pol_groups.insert(pol_groups.end(), d.begin(), d.end());
    }
};

// Runs the FD comparison for a scalar loss builder that redraws identical
// noise on every call (the rng is reconstructed inside the builder).
void check_fd(ParamStore& ps, const std::vector<int>& groups,
              const std::function<double(Gradients*)>& loss, double tol) {
    Gradients grads(ps);
    loss(&grads);
    auto analytic = collect(grads, groups);
    auto fd = fd_gradient(ps, groups, [&] { return loss(nullptr); }, 1e-5);
    double err = max_rel_err(analytic, fd, 1e-5);
    INFO("max rel err ", err);
    CHECK(err <= tol);
}

}  // namespace

TEST_CASE("c07 math-core gradients match finite differences at 1e-4") {
    ParamStore ps;
    RngStream init(5, 0);
    Mlp net = Mlp::create(ps, "m", 3, {8, 8}, 2, Activation::Tanh, init);
    std::vector<int> groups = net.weight_groups();
    groups.insert(groups.end(), net.bias_groups().begin(), net.bias_groups().end());

    auto loss = [&](Gradients* out) {
        Tape t;
        Var x = t.input(4, 3, std::vector<double>{0.1, -0.4, 0.7, 0.2, 0.9, -0.3, -0.8, 0.5, 0.0,
                                                  0.6, -0.1, 0.4});
        Var y = net.forward(t, ps, x);
        Var l = t.add(t.mean_all(t.square(t.tanh_(y))),
                      t.mean_all(t.softplus(t.logsumexp_row(y))));
        if (out) t.backward(l, *out);
        return t.scalar(l);
    };
    check_fd(ps, groups, loss, 1e-4);
}

TEST_CASE("c07 estimator gradients match finite differences at 1e-3") {
    TinyRig rig;

    auto entropy_loss = [&](EstimatorKind kind, std::uint64_t seed) {
        return [&, kind, seed](Gradients* out) {
            RngStream rng(seed, 0);
            Tape t;
            ActionNodes an = sample_action_nodes(t, rig.pol, rig.hb, rng);
            Var node;
            switch (kind) {
                case EstimatorKind::Naive: node = naive_entropy_node(t, rig.pol, an, rng); break;
                case EstimatorKind::Nested:
                    node = nested_entropy_node(t, rig.pol, an, 4, rng);
                    break;
                case EstimatorKind::Mlmc:
                    node = mlmc_entropy_node(t, rig.pol, an, 4, rng).value;
                    break;
                case EstimatorKind::Iwae:
                    node = t.neg(iwae_log_prob_node(t, rig.pol, an, 4, rng));
                    break;
                case EstimatorKind::Oracle:
                    node = conditional_entropy_penalty_node(t, rig.pol, an.enc, an.batch, rng);
                    break;
            }
            Var l = t.mean_all(node);
            if (out) t.backward(l, *out);
            return t.scalar(l);
        };
    };

    for (auto kind : {EstimatorKind::Naive, EstimatorKind::Nested, EstimatorKind::Mlmc,
                      EstimatorKind::Iwae, EstimatorKind::Oracle})
        check_fd(rig.ps, rig.pol_groups, entropy_loss(kind, 60 + static_cast<int>(kind)), 1e-3);
}

TEST_CASE("c07 actor, critic and ELBO losses match finite differences at 1e-3") {
    TinyRig rig;

    // actor loss: -(marginal Q + alpha H - beta penalty), gradients through
    // both the policy and the critic
    std::vector<int> all = rig.pol_groups;
    all.insert(all.end(), rig.critic.online_groups().begin(), rig.critic.online_groups().end());
    auto actor_loss = [&](Gradients* out) {
        RngStream rng(71, 0);
        Tape t;
        ActionNodes an = sample_action_nodes(t, rig.pol, rig.hb, rng);
        Var H = mlmc_entropy_node(t, rig.pol, an, 4, rng).value;
        Var particles = encoder_particles(t, rig.pol, an.enc, an.batch, 3, rng);
        Var q = marginal_q_node(t, rig.ps, rig.critic, particles, an.a, an.batch, 3);
        Var pen = conditional_entropy_penalty_node(t, rig.pol, an.enc, an.batch, rng);
        Var l = t.neg(t.mean_all(t.sub(t.add(q, t.scale(H, 0.2)), t.scale(pen, 0.1))));
        if (out) t.backward(l, *out);
        return t.scalar(l);
    };
    check_fd(rig.ps, all, actor_loss, 1e-3);

    // critic regression loss against fixed targets
    auto critic_loss = [&](Gradients* out) {
        Tape t;
        Var s = t.input(3, 2, std::vector<double>{0.2, -0.4, 0.5, 0.1, -0.3, 0.6});
        Var a = t.input(3, 2, std::vector<double>{0.3, 0.3, -0.6, 0.2, 0.1, -0.5});
        Var y = t.input(3, 1, std::vector<double>{0.7, -0.2, 1.1});
        Var l = t.add(t.mean_all(t.square(t.sub(rig.critic.q1_node(t, rig.ps, s, a), y))),
                      t.mean_all(t.square(t.sub(rig.critic.q2_node(t, rig.ps, s, a), y))));
        if (out) t.backward(l, *out);
        return t.scalar(l);
    };
    check_fd(rig.ps, rig.critic.online_groups(), critic_loss, 1e-3);

    // world-model negative ELBO on one short segment
    ParamStore wps;
    RngStream winit(77, 0);
    WorldModelConfig wc;
    wc.obs_dim = 2;
    wc.action_dim = 1;
    wc.latent_dim = 2;
    wc.hidden = {8};
    SequentialLatentModel wm(wps, "w", wc, winit);
    TrajectorySegment seg;
    seg.obs = {{0.4, -0.1}, {0.2, 0.3}, {-0.5, 0.0}, {0.1, 0.6}};
    seg.act = {{0.3}, {-0.7}, {0.2}, {0.5}};
    seg.rew = {0.1, -0.4, 0.8, 0.0};
    auto elbo_loss = [&](Gradients* out) {
        RngStream rng(78, 0);
        Tape t;
        auto e = wm.elbo_nodes(t, wps, {seg}, rng);
        Var l = t.neg(e.total);
        if (out) t.backward(l, *out);
        return t.scalar(l);
    };
    check_fd(wps, wm.groups(), elbo_loss, 1e-3);
}
