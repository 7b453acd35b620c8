// Command-line harness: estimator benchmarks, failure reproductions, density
// fits, full training runs, the noise-robustness grid, and plot emission.
// Every command is a pure function of (config, seeds): re-runs produce
// byte-identical CSV output.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smac/config.hpp"
#include "smac/csv.hpp"
#include "smac/envs.hpp"
#include "smac/estimators.hpp"
#include "smac/policy.hpp"
#include "smac/stats.hpp"
#include "smac/svg_plot.hpp"
#include "smac/trainer.hpp"

namespace {

using namespace smac;

constexpr const char* kCodeVersion = "0.1.0";

// --- small parsing helpers -------------------------------------------------

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
    std::vector<std::uint64_t> out;
    for (const auto& tok : split(s, ','))
        if (!tok.empty()) out.push_back(std::stoull(tok));
    if (out.empty()) throw std::invalid_argument("seed list is empty");
    return out;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    for (const auto& tok : split(s, ','))
        if (!tok.empty()) out.push_back(std::stoi(tok));
    return out;
}

// --- config plumbing ---------------------------------------------------------

struct CommonArgs {
    std::string config_path;
    std::string seeds = "";
    std::string out_dir = "";
    std::vector<std::string> overrides;
};

void add_common_flags(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "config file (flat key=value with [sections])");
    cmd->add_option("--seed", args.seeds, "comma-separated seed list, overrides the config");
    cmd->add_option("--out", args.out_dir, "output directory, overrides the config");
    cmd->add_option("--override", args.overrides, "key=value config override (repeatable)");
}

Config load_config(const CommonArgs& args, const std::string& default_out) {
    Config cfg = args.config_path.empty() ? Config{} : Config::from_file(args.config_path);
    for (const auto& ov : args.overrides) cfg.apply_override(ov);
    if (!args.seeds.empty()) cfg.set("experiment.seeds", args.seeds);
    if (!args.out_dir.empty()) cfg.set("experiment.out", args.out_dir);
    if (!cfg.has("experiment.out")) cfg.set("experiment.out", default_out);
    return cfg;
}

std::vector<std::uint64_t> config_seeds(const Config& cfg, const std::string& fallback) {
    return parse_seeds(cfg.get_string("experiment.seeds", fallback));
}

std::filesystem::path ensure_out_dir(const Config& cfg) {
    std::filesystem::path dir = cfg.get_string("experiment.out", "runs/out");
    std::filesystem::create_directories(dir);
    return dir;
}

TrainerConfig trainer_config_from(const Config& cfg, std::uint64_t seed) {
    TrainerConfig tc;
    tc.mode = trainer_mode_from_string(cfg.get_string("trainer.mode", "smac"));
    tc.seed = seed;
    tc.total_steps = cfg.get_int("trainer.total_steps", 20000);
    tc.warmup_steps = cfg.get_int("trainer.warmup_steps", 1000);
    tc.update_every = cfg.get_int("trainer.update_every", 1);
    tc.updates_per_phase = cfg.get_int("trainer.updates_per_phase", 1);
    tc.gamma = cfg.get_double("trainer.gamma", 0.99);
    tc.tau = cfg.get_double("trainer.tau", 0.005);
    tc.lr = cfg.get_double("trainer.lr", 3e-4);
    tc.batch_size = cfg.get_int("trainer.batch_size", 64);
    tc.replay_capacity = static_cast<std::size_t>(cfg.get_int("trainer.replay_capacity", 100000));
    tc.entropy_estimator =
        estimator_kind_from_string(cfg.get_string("trainer.entropy_estimator", "mlmc"));
    tc.k_entropy = cfg.get_int("trainer.k_entropy", 8);
    tc.k_q = cfg.get_int("trainer.k_q", 4);
    tc.k_critic = cfg.get_int("trainer.k_critic", 1);
    tc.beta = cfg.get_double("trainer.beta", 0.0);
    tc.alpha_init = cfg.get_double("trainer.alpha_init", 0.2);
    tc.alpha_auto = cfg.get_bool("trainer.alpha_auto", true);
    tc.target_entropy = cfg.get_double("trainer.target_entropy", 0.0);
    tc.latent_dim = cfg.get_int("trainer.latent_dim", 8);
    tc.encoder_hidden = parse_int_list(cfg.get_string("trainer.encoder_hidden", "32,32"));
    tc.decoder_hidden = parse_int_list(cfg.get_string("trainer.decoder_hidden", "32,32"));
    tc.critic_hidden = parse_int_list(cfg.get_string("trainer.critic_hidden", "64,64"));
    tc.critic_twin = cfg.get_bool("trainer.critic_twin", true);
    tc.encoder_deterministic = cfg.get_bool("trainer.encoder_deterministic", false);
    tc.wm_latent_dim = cfg.get_int("trainer.wm_latent_dim", 4);
    tc.wm_hidden = parse_int_list(cfg.get_string("trainer.wm_hidden", "32,32"));
    tc.wm_segment_len = cfg.get_int("trainer.wm_segment_len", 16);
    tc.wm_batch_size = cfg.get_int("trainer.wm_batch_size", 8);
    tc.wm_updates_per_phase = cfg.get_int("trainer.wm_updates_per_phase", 1);
    tc.wm_warmup_updates = cfg.get_int("trainer.wm_warmup_updates", 200);
    tc.freeze_actor_after = cfg.get_int("trainer.freeze_actor_after", 0);
    tc.metrics_every = cfg.get_int("trainer.metrics_every", 1000);
    tc.oracle_samples = cfg.get_int("trainer.oracle_samples", 2000);
    return tc;
}

std::unique_ptr<Env> env_from_config(const Config& cfg) {
    std::string name = cfg.get_string("env.name", "pointmass");
    std::unique_ptr<Env> env;
    if (name == "lgpomdp") {
        LinearGaussianPomdpConfig pc;
        std::string rk = cfg.get_string("env.reward_kind", "linear_noisy");
        if (rk == "quadratic")
            pc.reward_kind = RewardKind::Quadratic;
        else if (rk == "linear_noisy")
            pc.reward_kind = RewardKind::LinearNoisy;
        else
            throw std::invalid_argument("unknown env.reward_kind: " + rk);
        env = std::make_unique<LinearGaussianPomdp>(pc);
    } else {
        env = make_env(name);
    }
    return wrap_noise(std::move(env), cfg.get_string("env.noise_kind", "none"),
                      cfg.get_double("env.noise_level", 0.0));
}

// RunRecord manifest: config hash, code version, artifact paths, duration.
// Durations vary run to run; the CSV artifacts themselves are byte-stable.
struct RunRecord {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    std::vector<std::string> artifacts;

    void write(const std::filesystem::path& dir, const Config& cfg) const {
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                          .count();
        std::ofstream out(dir / "run_record.txt");
        out << "code_version=" << kCodeVersion << "\n";
        out << "config_hash=" << cfg.hash() << "\n";
        out << "duration_seconds=" << format_double(secs) << "\n";
        for (std::size_t i = 0; i < artifacts.size(); ++i)
            out << "artifact." << i << "=" << artifacts[i] << "\n";
        std::ofstream cfg_out(dir / "config_resolved.txt");
        cfg_out << cfg.serialize();
    }
};

// --- learning-curve aggregation ---------------------------------------------

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open CSV: " + path);
    CsvTable t;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split(line, ',');
        if (lineno == 1) {
            t.header = cells;
            continue;
        }
        std::vector<double> row;
        for (const auto& c : cells) {
            std::size_t pos = 0;
            double v = std::stod(c, &pos);
            if (pos != c.size())
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": not a number: " + c);
            row.push_back(v);
        }
        if (row.size() != t.header.size())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": column count");
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw std::runtime_error(path + ": empty CSV");
    return t;
}

std::size_t column_index(const CsvTable& t, const std::string& name) {
    for (std::size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i] == name) return i;
    throw std::runtime_error("CSV has no column named " + name);
}

// Mean and 95% t-interval band of one column across seed files, keyed by step.
PlotSeries aggregate_curves(const std::vector<std::string>& paths, const std::string& column,
                            const std::string& label) {
    std::map<double, std::vector<double>> by_step;
    for (const auto& p : paths) {
        CsvTable t = read_csv(p);
        std::size_t sc = column_index(t, "step"), yc = column_index(t, column);
        for (const auto& row : t.rows) by_step[row[sc]].push_back(row[yc]);
    }
    PlotSeries s;
    s.label = label;
    for (const auto& [step, ys] : by_step) {
        SampleStats st = summarize(ys);
        double half = t_crit_95(st.n) * st.std_err();
        s.x.push_back(step);
        s.y.push_back(st.mean);
        s.y_lo.push_back(st.mean - half);
        s.y_hi.push_back(st.mean + half);
    }
    return s;
}

// --- estimator-bench ----------------------------------------------------------

int cmd_estimator_bench(const CommonArgs& args) {
    Config cfg = load_config(args, "runs/estimator_bench");
    auto dir = ensure_out_dir(cfg);
    RunRecord rec;
    std::uint64_t seed = config_seeds(cfg, "1").front();

    // frozen linear-Gaussian test head with a closed-form marginal entropy
    ParamStore ps;
    LinearGaussianTestPolicy pol(ps, "lin", 1, 1);
    pol.set_encoder(cfg.get_double("bench.enc_mean", 0.3),
                    std::log(cfg.get_double("bench.enc_std", 0.5)));
    pol.set_decoder(cfg.get_double("bench.dec_w", 1.0), cfg.get_double("bench.dec_b", -0.2),
                    std::log(cfg.get_double("bench.dec_std", 1.0)));
    const double H = pol.marginal_entropy_1d();
    History h{{0.0}, History::Mode::Mdp};

    const int n_reps = cfg.get_int("bench.n_reps", 20000);
    std::vector<int> ks = parse_int_list(cfg.get_string("bench.ks", "1,2,4,8,16,32,64,128,256"));

    std::string csv_path = (dir / "estimator_bench.csv").string();
    CsvWriter csv(csv_path, "kind,K,n_reps,mean,variance,oracle,gap");
    rec.artifacts.push_back(csv_path);

    auto emit = [&](EstimatorKind kind, int K, const SampleStats& st) {
        csv.write_row({to_string(kind), std::to_string(K), std::to_string(n_reps),
                       format_double(st.mean), format_double(st.var), format_double(H),
                       format_double(st.mean - H)});
    };

    // paired nested ladder plus the naive upper bound on the shared draws
    LadderSweep lad = nested_ladder_repeated(pol, h, ks, n_reps, seed, ExecMode::Parallel);
    std::vector<SampleStats> nested_stats;
    for (std::size_t j = 0; j < ks.size(); ++j) {
        nested_stats.push_back(summarize(lad.nested[j]));
        emit(EstimatorKind::Nested, ks[j], nested_stats.back());
    }
    SampleStats naive_stats = summarize(lad.naive);
    emit(EstimatorKind::Naive, 1, naive_stats);

    for (int K : ks) {
        if (!is_power_of_two(K)) continue;
        RepSweep sw = estimate_repeated(EstimatorKind::Mlmc, pol, h, K, n_reps, seed + 1,
                                        ExecMode::Parallel);
        emit(EstimatorKind::Mlmc, K, sw.stats);
    }
    {  // Fig. 2 protocol pins the importance-weighted comparison at 32 particles
        RepSweep sw = estimate_repeated(EstimatorKind::Iwae, pol, h, 32, n_reps, seed + 2,
                                        ExecMode::Parallel);
        emit(EstimatorKind::Iwae, 32, sw.stats);
    }

    // bound-ordering assertions; violations exit nonzero
    int violations = 0;
    auto assert_ge = [&](double x, double y, double se, const std::string& what) {
        if (x - y < -3.0 * se) {
            std::cerr << "ORDERING VIOLATION: " << what << " (" << x << " < " << y << ")\n";
            ++violations;
        }
    };
    for (std::size_t j = 0; j + 1 < ks.size(); ++j) {
        std::vector<double> diff(static_cast<std::size_t>(n_reps));
        for (int i = 0; i < n_reps; ++i)
            diff[static_cast<std::size_t>(i)] = lad.nested[j + 1][static_cast<std::size_t>(i)] -
                                                lad.nested[j][static_cast<std::size_t>(i)];
        SampleStats d = summarize(diff);
        assert_ge(d.mean, 0.0, d.std_err(),
                  "nested K=" + std::to_string(ks[j + 1]) + " >= K=" + std::to_string(ks[j]));
    }
    for (std::size_t j = 0; j < ks.size(); ++j)
        assert_ge(H, nested_stats[j].mean, nested_stats[j].std_err(),
                  "H >= nested K=" + std::to_string(ks[j]));
    assert_ge(naive_stats.mean, H, naive_stats.std_err(), "naive >= H");

    std::cout << "analytic entropy H = " << H << "\n";
    std::cout << "nested K=" << ks.back() << " mean = " << nested_stats.back().mean << "\n";
    std::cout << "naive mean = " << naive_stats.mean << "\n";
    std::cout << (violations == 0 ? "bound ordering: OK" : "bound ordering: FAILED") << "\n";
    rec.write(dir, cfg);
    return violations == 0 ? 0 : 1;
}

// --- naive-failure --------------------------------------------------------------

int cmd_naive_failure(const CommonArgs& args) {
    Config cfg = load_config(args, "runs/naive_failure");
    auto dir = ensure_out_dir(cfg);
    RunRecord rec;
    std::uint64_t seed = config_seeds(cfg, "5").front();

    const int oracle_draws = cfg.get_int("failure.oracle_draws", 20);
    const int oracle_inner = cfg.get_int("failure.oracle_inner", 5000);

    auto run_probe = [&](EstimatorKind kind, CsvWriter& csv) {
        MultimodalBandit env;
        Config tcfg = cfg;  // estimator differs between the paired twins
        tcfg.set("trainer.entropy_estimator", to_string(kind));
        TrainerConfig tc = trainer_config_from(tcfg, seed);
        Trainer tr(env, tc);
        History h{{0.0}, History::Mode::Mdp};
        struct Row {
            long step;
            double estimate, est_se, oracle, oracle_se;
        };
        std::vector<Row> rows;
        tr.run(nullptr, [&](const MetricsRow& m, Trainer& t) {
            if (m.step <= tc.warmup_steps) return;
            RngStream orng(909, static_cast<std::uint64_t>(m.step));
            std::vector<double> vals(static_cast<std::size_t>(oracle_draws));
            for (int i = 0; i < oracle_draws; ++i) {
                ActionSample s = sample_action(t.policy(), h, orng);
                vals[static_cast<std::size_t>(i)] =
                    -marginal_log_prob_oracle(t.policy(), s.a, s.u, h, oracle_inner, orng);
            }
            SampleStats st = summarize(vals);
            double est_se = std::sqrt(std::max(0.0, m.estimator_variance) /
                                      static_cast<double>(tc.batch_size));
            rows.push_back({m.step, m.entropy_estimate, est_se, st.mean, st.std_err()});
            csv.write_row({to_string(kind), std::to_string(m.step),
                           format_double(m.entropy_estimate), format_double(est_se),
                           format_double(st.mean), format_double(st.std_err())});
        });
        return rows;
    };

    std::string csv_path = (dir / "naive_failure.csv").string();
    CsvWriter csv(csv_path, "estimator,step,estimate,estimate_se,oracle,oracle_se");
    rec.artifacts.push_back(csv_path);

    auto naive_rows = run_probe(EstimatorKind::Naive, csv);
    auto nested_rows = run_probe(EstimatorKind::Nested, csv);

    bool exploded = false;
    for (const auto& r : naive_rows)
        if (r.estimate >= r.oracle + 10.0 * std::max(std::abs(r.oracle), 1.0)) exploded = true;
    bool nested_honest = true;
    for (const auto& r : nested_rows) {
        double se = std::sqrt(r.est_se * r.est_se + r.oracle_se * r.oracle_se);
        if (r.estimate > r.oracle + 3.0 * se) nested_honest = false;
    }
    std::cout << "naive overshoot >= 10x observed: " << (exploded ? "yes" : "no") << "\n";
    std::cout << "nested stayed <= oracle + 3 SE: " << (nested_honest ? "yes" : "no") << "\n";
    std::cout << "verdict: " << (exploded && nested_honest ? "PASS" : "FAIL") << "\n";
    rec.write(dir, cfg);
    return 0;
}

// --- multimodal-fit --------------------------------------------------------------

int cmd_multimodal_fit(const CommonArgs& args) {
    Config cfg = load_config(args, "runs/multimodal_fit");
    auto dir = ensure_out_dir(cfg);
    RunRecord rec;
    auto seeds = config_seeds(cfg, "12,13");
    std::uint64_t smac_seed = seeds.front();
    std::uint64_t sac_seed = seeds.size() > 1 ? seeds[1] : seeds.front() + 1;
    const double alpha = cfg.get_double("fit.alpha", 0.1);

    // exact MaxEnt target mass on a grid, by midpoint quadrature; its entropy
    // is the autotuning target (the Gaussian baseline gets the single-mode
    // analog, H* - log 4), so at equilibrium the latent policy should
    // reproduce the alpha-Boltzmann density itself
    const int bins = cfg.get_int("fit.bins", 20);
    const int sub = 8;
    std::vector<double> target(static_cast<std::size_t>(bins * bins), 0.0);
    double total = 0.0;
    for (int bx = 0; bx < bins; ++bx)
        for (int by = 0; by < bins; ++by) {
            double m = 0.0;
            for (int i = 0; i < sub; ++i)
                for (int j = 0; j < sub; ++j) {
                    double x = -1.0 + (bx + (i + 0.5) / sub) * 2.0 / bins;
                    double y = -1.0 + (by + (j + 0.5) / sub) * 2.0 / bins;
                    m += std::exp(multimodal_bandit_reward(std::vector<double>{x, y}) / alpha);
                }
            target[static_cast<std::size_t>(bx * bins + by)] = m;
            total += m;
        }
    for (auto& m : target) m /= total;
    const double cell_area = (2.0 / bins) * (2.0 / bins);
    double h_star = 0.0;
    for (double p : target)
        if (p > 0.0) h_star -= p * std::log(p / cell_area);

    auto train_policy = [&](TrainerMode mode, std::uint64_t seed) {
        MultimodalBandit env;
        Config tcfg = cfg;
        double target_h = mode == TrainerMode::Sac ? h_star - std::log(4.0) : h_star;
        tcfg.set("trainer.mode", to_string(mode));
        tcfg.set("trainer.alpha_auto", "true");
        tcfg.set("trainer.alpha_init", format_double(alpha));
        tcfg.set("trainer.target_entropy", format_double(target_h));
        TrainerConfig tc = trainer_config_from(tcfg, seed);
        auto tr = std::make_unique<Trainer>(env, tc);
        tr->run();
        return tr;
    };
    auto smac_tr = train_policy(TrainerMode::Smac, smac_seed);
    auto sac_tr = train_policy(TrainerMode::Sac, sac_seed);

    History h{{0.0}, History::Mode::Mdp};
    auto basin = [](double x, double y) { return (x > 0.0 ? 1 : 0) + (y > 0.0 ? 2 : 0); };
    auto fractions = [&](const PolicyModel& pol, std::uint64_t s) {
        RngStream rng(s, 0);
        std::array<double, 4> counts{};
        const int n = 10000;
        for (int i = 0; i < n; ++i) {
            auto a = sample_action(pol, h, rng).a;
            counts[static_cast<std::size_t>(basin(a[0], a[1]))] += 1.0 / n;
        }
        return counts;
    };
    auto smac_frac = fractions(smac_tr->policy(), 71);
    auto sac_frac = fractions(sac_tr->policy(), 71);

    const int n_samples = cfg.get_int("fit.tv_samples", 200000);
    std::vector<double> hist(static_cast<std::size_t>(bins * bins), 0.0);
    RngStream hrng(72, 0);
    for (int i = 0; i < n_samples; ++i) {
        auto a = sample_action(smac_tr->policy(), h, hrng).a;
        int bx = std::min(bins - 1, static_cast<int>((a[0] + 1.0) / 2.0 * bins));
        int by = std::min(bins - 1, static_cast<int>((a[1] + 1.0) / 2.0 * bins));
        hist[static_cast<std::size_t>(bx * bins + by)] += 1.0 / n_samples;
    }
    double tv = 0.0;
    for (std::size_t i = 0; i < hist.size(); ++i) tv += std::abs(hist[i] - target[i]);
    tv *= 0.5;

    std::string csv_path = (dir / "multimodal_fit.csv").string();
    CsvWriter csv(csv_path, "policy,basin0,basin1,basin2,basin3,tv_to_target");
    csv.write_row({"latent", format_double(smac_frac[0]), format_double(smac_frac[1]),
                   format_double(smac_frac[2]), format_double(smac_frac[3]), format_double(tv)});
    csv.write_row({"gaussian", format_double(sac_frac[0]), format_double(sac_frac[1]),
                   format_double(sac_frac[2]), format_double(sac_frac[3]), ""});
    rec.artifacts.push_back(csv_path);

    // density plot: marginal over the first action coordinate
    auto x_marginal = [&](const std::vector<double>& grid) {
        std::vector<double> m(static_cast<std::size_t>(bins), 0.0);
        for (int bx = 0; bx < bins; ++bx)
            for (int by = 0; by < bins; ++by)
                m[static_cast<std::size_t>(bx)] += grid[static_cast<std::size_t>(bx * bins + by)];
        return m;
    };
    PlotSeries target_s, policy_s;
    target_s.label = "maxent target";
    policy_s.label = "latent policy";
    auto tm = x_marginal(target), pm = x_marginal(hist);
    for (int bx = 0; bx < bins; ++bx) {
        double x = -1.0 + (bx + 0.5) * 2.0 / bins;
        target_s.x.push_back(x);
        target_s.y.push_back(tm[static_cast<std::size_t>(bx)]);
        policy_s.x.push_back(x);
        policy_s.y.push_back(pm[static_cast<std::size_t>(bx)]);
    }
    std::string svg_path = (dir / "density_x_marginal.svg").string();
    write_svg_plot(svg_path, "action density, x marginal", "a_x", "mass",
                   {target_s, policy_s});
    rec.artifacts.push_back(svg_path);

    std::cout << "latent basin fractions:";
    for (double f : smac_frac) std::cout << " " << f;
    std::cout << "\ngaussian basin fractions:";
    for (double f : sac_frac) std::cout << " " << f;
    std::cout << "\nTV(latent, target) = " << tv << "\n";
    rec.write(dir, cfg);
    return 0;
}

// --- train / train-wm -------------------------------------------------------------

int cmd_train(const CommonArgs& args, bool world_model) {
    Config cfg = load_config(args, world_model ? "runs/train_wm" : "runs/train");
    if (world_model) cfg.set("trainer.mode", "smac-wm");
    if (world_model && !cfg.has("env.name")) cfg.set("env.name", "lgpomdp");
    auto dir = ensure_out_dir(cfg);
    RunRecord rec;
    auto seeds = config_seeds(cfg, "1");

    std::vector<std::string> csv_paths;
    for (std::uint64_t seed : seeds) {
        auto env = env_from_config(cfg);
        TrainerConfig tc = trainer_config_from(cfg, seed);
        std::string path = (dir / ("metrics_seed" + std::to_string(seed) + ".csv")).string();
        CsvWriter csv(path, MetricsRow::csv_header());
        TrainResult res = train(*env, tc, &csv);
        csv_paths.push_back(path);
        rec.artifacts.push_back(path);
        std::cout << "seed " << seed << ": final average return = " << res.final_average_return
                  << ", episodes = " << res.episode_returns.size() << "\n";
    }

    std::string svg_path = (dir / "learning_curve.svg").string();
    write_svg_plot(svg_path, "episode return", "step", "return",
                   {aggregate_curves(csv_paths, "episode_return", "mean over seeds")});
    rec.artifacts.push_back(svg_path);
    rec.write(dir, cfg);
    return 0;
}

// --- noise-robustness ---------------------------------------------------------------

int cmd_noise_robustness(const CommonArgs& args) {
    Config cfg = load_config(args, "runs/noise_robustness");
    auto dir = ensure_out_dir(cfg);
    RunRecord rec;
    auto seeds = config_seeds(cfg, "1,2,3,4,5");

    // cells as "kind:level" pairs; the zero-noise column reproduces plain training
    std::vector<std::pair<std::string, double>> cells;
    for (const auto& tok :
         split(cfg.get_string("noise.cells",
                              "none:0,gauss:0.01,gauss:0.05,dropout:0.01,dropout:0.05"),
               ',')) {
        auto kv = split(tok, ':');
        if (kv.size() != 2) throw std::invalid_argument("noise cell must be kind:level: " + tok);
        cells.emplace_back(kv[0], std::stod(kv[1]));
    }

    std::string csv_path = (dir / "noise_robustness.csv").string();
    CsvWriter csv(csv_path, "noise_kind,noise_level,mode,best_return_mean,best_return_std,"
                            "best_return_median,seeds");
    rec.artifacts.push_back(csv_path);

    int smac_wins = 0;
    for (const auto& [kind, level] : cells) {
        std::map<TrainerMode, std::vector<double>> best;
        for (TrainerMode mode : {TrainerMode::Smac, TrainerMode::LatentSac}) {
            for (std::uint64_t seed : seeds) {
                Config ccfg = cfg;
                ccfg.set("env.noise_kind", kind);
                ccfg.set("env.noise_level", format_double(level));
                ccfg.set("trainer.mode", to_string(mode));
                auto env = env_from_config(ccfg);
                TrainerConfig tc = trainer_config_from(ccfg, seed);
                TrainResult res = train(*env, tc);
                // Table-1 reporting: best episodic reward across training
                double b = res.metrics.empty() ? 0.0 : res.metrics.front().episode_return;
                for (const auto& m : res.metrics) b = std::max(b, m.episode_return);
                best[mode].push_back(b);
            }
            SampleStats st = summarize(best[mode]);
            csv.write_row({kind, format_double(level), to_string(mode), format_double(st.mean),
                           format_double(std::sqrt(st.var)), format_double(median(best[mode])),
                           std::to_string(seeds.size())});
        }
        double ms = median(best[TrainerMode::Smac]);
        double ml = median(best[TrainerMode::LatentSac]);
        std::cout << kind << " " << level << ": smac " << ms << " latent-sac " << ml << "\n";
        if (ms >= ml) ++smac_wins;
    }
    std::cout << "smac >= latent-sac in median on " << smac_wins << " of " << cells.size()
              << " cells\n";
    rec.write(dir, cfg);
    return 0;
}

// --- plot ---------------------------------------------------------------------------

int cmd_plot(const std::vector<std::string>& csvs, const std::string& column,
             const std::string& out_path, const std::string& title) {
    PlotSeries s = aggregate_curves(csvs, column, column);
    write_svg_plot(out_path, title.empty() ? column : title, "step", column, {s});
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"latent-policy MaxEnt RL laboratory"};
    app.require_subcommand(1);

    CommonArgs bench_args, fail_args, fit_args, train_args, wm_args, noise_args;
    auto* bench = app.add_subcommand("estimator-bench",
                                     "entropy-estimator sweep on the frozen linear test head");
    add_common_flags(bench, bench_args);
    auto* fail = app.add_subcommand("naive-failure",
                                    "reproduce the naive upper bound's blow-up during training");
    add_common_flags(fail, fail_args);
    auto* fit = app.add_subcommand("multimodal-fit",
                                   "reverse-KL density fit on the four-bump bandit");
    add_common_flags(fit, fit_args);
    auto* train_cmd = app.add_subcommand("train", "full training run with metrics CSV");
    add_common_flags(train_cmd, train_args);
    auto* wm_cmd = app.add_subcommand("train-wm",
                                      "training with the sequential latent world model");
    add_common_flags(wm_cmd, wm_args);
    auto* noise = app.add_subcommand("noise-robustness",
                                     "noise grid: marginal-entropy vs conditional baseline");
    add_common_flags(noise, noise_args);

    std::vector<std::string> plot_csvs;
    std::string plot_column = "episode_return", plot_out = "plot.svg", plot_title;
    auto* plot = app.add_subcommand("plot", "aggregate metrics CSVs into an SVG curve");
    plot->add_option("csv", plot_csvs, "metrics CSV files (one per seed)")->required();
    plot->add_option("--column", plot_column, "metrics column to plot");
    plot->add_option("--out", plot_out, "output SVG path");
    plot->add_option("--title", plot_title, "plot title");

    CLI11_PARSE(app, argc, argv);

    try {
        if (bench->parsed()) return cmd_estimator_bench(bench_args);
        if (fail->parsed()) return cmd_naive_failure(fail_args);
        if (fit->parsed()) return cmd_multimodal_fit(fit_args);
        if (train_cmd->parsed()) return cmd_train(train_args, false);
        if (wm_cmd->parsed()) return cmd_train(wm_args, true);
        if (noise->parsed()) return cmd_noise_robustness(noise_args);
        if (plot->parsed()) return cmd_plot(plot_csvs, plot_column, plot_out, plot_title);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
