#include "crop/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "crop/config.hpp"
#include "crop/policy_net.hpp"
#include "crop/trainer.hpp"
#include "crop/verifier.hpp"
#include "crop/violation.hpp"

namespace crop {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

std::string default_root()
{
    const char* env = std::getenv(kOutDirEnv);
    return env != nullptr && *env != '\0' ? std::string(env) : std::string("runs");
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream os(path);
    if (!os) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return os;
}

struct TrainFlags {
    std::string algo;
    std::string env;
    std::string config;
    std::string out;
    std::vector<std::uint64_t> seeds;
    std::int64_t steps = -1;
    std::vector<std::string> sets;
};

ExperimentConfig resolve_train_config(const TrainFlags& f)
{
    ExperimentConfig cfg;
    if (!f.config.empty()) {
        cfg = load_experiment_config(f.config);
    }
    for (const auto& s : f.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--set expects key=value, got '" + s + "'");
        }
        apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    if (!f.algo.empty()) {
        apply_setting(cfg, "run.algo", f.algo);
    }
    if (!f.env.empty()) {
        apply_setting(cfg, "run.env", f.env);
    }
    if (!f.seeds.empty()) {
        cfg.seeds = f.seeds;
    }
    if (f.steps >= 0) {
        cfg.train.total_steps = f.steps;
    }
    if (!f.out.empty()) {
        cfg.out_dir = f.out;
    }
    if (!cfg.algo) {
        throw ConfigError("no algorithm given (--algo or run.algo)");
    }
    cfg.validate();
    return cfg;
}

fs::path run_dir(const ExperimentConfig& cfg, std::uint64_t seed)
{
    const std::string name = to_string(*cfg.algo) + "_" + to_string(cfg.env) + "_seed" + std::to_string(seed);
    if (cfg.out_dir.empty()) {
        return fs::path(default_root()) / name;
    }
    if (cfg.seeds.size() == 1) {
        return fs::path(cfg.out_dir);
    }
    return fs::path(cfg.out_dir) / ("seed" + std::to_string(seed));
}

void train_one(const ExperimentConfig& base, std::uint64_t seed, std::ostream& out)
{
    ExperimentConfig cfg = base;
    cfg.train.seed = seed;
    const fs::path dir = run_dir(base, seed);
    fs::create_directories(dir);

    {
        auto snap = open_out(dir / "config.ini");
        write_experiment_config(snap, cfg, seed);
    }

    auto metrics = open_out(dir / "metrics.csv");
    write_metrics_header(metrics);
    metrics.flush();
    auto timing = open_out(dir / "timing.csv");
    timing << "step,episode,wall_time\n";
    std::ofstream props;
    if (*cfg.algo == Algo::ppo_crop) {
        props = open_out(dir / "properties.jsonl");
    }

    const auto start = std::chrono::steady_clock::now();
    TrainCallbacks cb;
    cb.on_episode = [&](const EpisodeMetrics& m) {
        write_metrics_row(metrics, m);
        metrics.flush();
        const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start;
        timing << m.step << ',' << m.episode << ',' << std::setprecision(6) << el.count() << '\n';
        timing.flush();
    };
    if (props.is_open()) {
        cb.on_episode_properties = [&](std::int64_t episode, std::span<const SafetyProperty> ps) {
            write_properties_jsonl(props, ps, episode);
            props.flush();
        };
    }

    TrainResult result = cfg.scenario_path.empty()
                             ? train(*cfg.algo, cfg.env, cfg.train, cfg.crop, cfg.env_cfg, cb)
                             : train(*cfg.algo, NavEnv(load_scenario(cfg.scenario_path), seed, cfg.env_cfg),
                                     cfg.train, cfg.crop, cb);
    save_checkpoint(result.net, (dir / "checkpoint.json").string());

    const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start;
    out << to_string(*cfg.algo) << " seed " << seed << ": " << result.episodes.size() << " episodes in "
        << std::fixed << std::setprecision(1) << el.count() << " s -> " << dir.string() << '\n';
    out.unsetf(std::ios::floatfield);
}

struct EvalFlags {
    std::string checkpoint;
    std::string env = "evaluation";
    std::string scenario;
    std::string config;
    std::string out;
    int episodes = 10;
    std::uint64_t seed = 0;
    int cloud_size = kDefaultCloudSize;
};

void print_eval_table(std::ostream& out, const std::string& label, const EvalSummary& s)
{
    out << std::left << std::setw(14) << "env" << std::setw(12) << "success" << std::setw(12) << "success/10"
        << std::setw(12) << "cost" << "violation\n";
    out << std::setw(14) << label << std::fixed << std::setprecision(3) << std::setw(12) << s.mean_success
        << std::setprecision(1) << std::setw(12) << 10.0 * s.mean_success << std::setprecision(2) << std::setw(12)
        << s.mean_cost << std::setprecision(3) << s.mean_violation << '\n';
    out.unsetf(std::ios::floatfield | std::ios::adjustfield);
}

int run_eval(const EvalFlags& f, std::ostream& out)
{
    EnvConfig env_cfg;
    EnvKind kind = parse_env_kind(f.env);
    if (!f.config.empty()) {
        env_cfg = load_experiment_config(f.config).env_cfg;
    }
    env_cfg.validate();
    if (f.episodes < 1) {
        throw UsageError("--episodes must be >= 1");
    }
    if (f.cloud_size < 1) {
        throw UsageError("--cloud-size must be >= 1");
    }

    PolicyNetwork net;
    try {
        net = load_checkpoint(f.checkpoint);
    } catch (const std::exception& e) {
        throw std::runtime_error(e.what());
    }
    NavEnv env = f.scenario.empty() ? make_env(kind, f.seed, env_cfg)
                                    : NavEnv(load_scenario(f.scenario), f.seed, env_cfg);
    const EvalSummary s = evaluate_policy(net, env, f.episodes, f.cloud_size, f.seed);
    print_eval_table(out, f.scenario.empty() ? to_string(kind) : "scenario", s);

    const fs::path dir = f.out.empty() ? fs::path(default_root()) / ("eval_" + f.env + "_seed" + std::to_string(f.seed))
                                       : fs::path(f.out);
    fs::create_directories(dir);
    auto episodes = open_out(dir / "episodes.csv");
    write_metrics_header(episodes);
    for (const auto& m : s.rollouts) {
        write_metrics_row(episodes, m);
    }
    auto summary = open_out(dir / "summary.csv");
    summary << "env,episodes,mean_success,mean_cost,mean_violation,hardcoded_ratio\n"
            << std::setprecision(12) << (f.scenario.empty() ? to_string(kind) : "scenario") << ',' << s.episodes
            << ',' << s.mean_success << ',' << s.mean_cost << ',' << s.mean_violation << ',' << s.hardcoded_ratio
            << '\n';
    return kExitOk;
}

struct VerifyFlags {
    std::string checkpoint;
    std::string properties;
    std::string out;
    double min_width = VerifierOptions{}.min_width;
    std::int64_t budget = VerifierOptions{}.budget;
};

int run_verify(const VerifyFlags& f, std::ostream& out)
{
    VerifierOptions opts;
    opts.min_width = f.min_width;
    opts.budget = f.budget;
    if (!(opts.min_width > 0.0) || opts.budget < 1) {
        throw UsageError("--min-width must be > 0 and --budget >= 1");
    }

    std::vector<SafetyProperty> props;
    std::vector<std::string> ids;
    PolicyNetwork net;
    try {
        net = load_checkpoint(f.checkpoint);
        if (f.properties.empty()) {
            props = hardcoded_property_set();
            ids = hardcoded_property_names();
        } else {
            props = load_properties_jsonl(f.properties);
            for (std::size_t i = 0; i < props.size(); ++i) {
                ids.push_back("p" + std::to_string(i));
            }
        }
    } catch (const std::exception& e) {
        throw std::runtime_error(e.what());
    }

    std::vector<VerificationRow> rows;
    for (std::size_t i = 0; i < props.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        VerificationRow row{ids[i], verify_property(net, props[i], opts), 0.0};
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rows.push_back(std::move(row));
    }
    write_verification_csv(out, rows);
    if (!f.out.empty()) {
        const fs::path path(f.out);
        if (path.has_parent_path()) {
            fs::create_directories(path.parent_path());
        }
        auto os = open_out(path);
        write_verification_csv(os, rows);
    }
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"CROP safe reinforcement learning workbench"};
    app.require_subcommand(1);

    TrainFlags tf;
    auto* train_cmd = app.add_subcommand("train", "train one policy per seed");
    train_cmd->add_option("--algo", tf.algo, "ppo_cost | ppo_violation | ppo_crop | lppo");
    train_cmd->add_option("--env", tf.env, "fixed | dynamic | evaluation");
    train_cmd->add_option("--seed", tf.seeds, "run seed")->expected(1);
    train_cmd->add_option("--seeds", tf.seeds, "comma-separated seeds, one run each")->delimiter(',');
    train_cmd->add_option("--config", tf.config, "key = value config file")->check(CLI::ExistingFile);
    train_cmd->add_option("--steps", tf.steps, "total environment steps");
    train_cmd->add_option("--out", tf.out, "output directory");
    train_cmd->add_option("--set", tf.sets, "override a config key (key=value), repeatable");

    EvalFlags ef;
    auto* eval_cmd = app.add_subcommand("eval", "deterministic rollouts of a checkpoint");
    eval_cmd->add_option("--checkpoint", ef.checkpoint, "checkpoint file")->required();
    eval_cmd->add_option("--env", ef.env, "fixed | dynamic | evaluation");
    eval_cmd->add_option("--scenario", ef.scenario, "scenario file (overrides --env)");
    eval_cmd->add_option("--episodes", ef.episodes, "number of rollouts");
    eval_cmd->add_option("--seed", ef.seed, "environment seed");
    eval_cmd->add_option("--cloud-size", ef.cloud_size, "samples per hard-coded property");
    eval_cmd->add_option("--config", ef.config, "config file (env.* keys are used)")->check(CLI::ExistingFile);
    eval_cmd->add_option("--out", ef.out, "output directory");

    VerifyFlags vf;
    auto* verify_cmd = app.add_subcommand("verify", "certified violation bounds per property");
    verify_cmd->add_option("--checkpoint", vf.checkpoint, "checkpoint file")->required();
    verify_cmd->add_option("--properties", vf.properties, "properties JSONL (default: hard-coded set)");
    verify_cmd->add_option("--min-width", vf.min_width, "smallest normalized box width");
    verify_cmd->add_option("--budget", vf.budget, "maximum IBP evaluations per property");
    verify_cmd->add_option("--out", vf.out, "also write the CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "crop: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (train_cmd->parsed()) {
            ExperimentConfig cfg;
            try {
                cfg = resolve_train_config(tf);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            for (const auto seed : cfg.seeds) {
                train_one(cfg, seed, out);
            }
            return kExitOk;
        }
        if (eval_cmd->parsed()) {
            try {
                return run_eval(ef, out);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
        }
        return run_verify(vf, out);
    } catch (const UsageError& e) {
        err << "crop: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "crop: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace crop
