// Command-line workbench: dataset generation, offline Q-learning, checkpoint
// evaluation, autonomous rollouts, and dataset inspection.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "sfdqn/dataset.hpp"
#include "sfdqn/errors.hpp"
#include "sfdqn/eval.hpp"
#include "sfdqn/qnet.hpp"
#include "sfdqn/rl.hpp"
#include "sfdqn/sim.hpp"
#include "sfdqn/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sfdqn;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitFormat = 3;
constexpr int kExitNumeric = 4;

struct GenArgs {
    std::string config_path;
    std::string out_dir;
    std::size_t n_units = 12000;
    std::optional<std::uint64_t> seed;
};

struct TrainArgs {
    std::string data_dir;
    std::string out_dir;
    std::string arch = "shallow";
    double train_fraction = 0.9;
    TrainConfig cfg;
};

struct EvalArgs {
    std::string run_dir;
    std::string data_dir;
    std::string test_path;  // defaults to <run>/test.sfds
    std::string out_dir;
};

struct RolloutArgs {
    std::string checkpoint_path;
    std::string config_path;
    std::string out_dir;
    std::size_t steps = 500;
    double drift = 1e-4;
    std::size_t warmup = 50;
    std::size_t dump_every = 0;
    std::optional<std::uint64_t> seed;
};

EnvConfig load_env_config(const std::string& path, std::optional<std::uint64_t> seed) {
    EnvConfig cfg = path.empty() ? EnvConfig{} : EnvConfig::from_file(path);
    if (seed) cfg.seed = *seed;
    return cfg;
}

std::string checkpoint_name(int step) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "ckpt_%06d.sfck", step);
    return buf;
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad JSON in ") + path.string() + ": " + e.what(), 0);
    }
    return j;
}

int run_gen_data(const GenArgs& args) {
    const EnvConfig cfg = load_env_config(args.config_path, args.seed);
    fs::create_directories(args.out_dir);
    const fs::path out(args.out_dir);

    TactileEnv env(cfg);
    save_pgm(env.pipeline().background, out / "background.pgm");

    const ActionClasses classes = classify_actions(env);
    save_classes(classes, out / "action_classes.txt");

    Rng rng(mix_seed(cfg.seed, 0x67656EULL));
    const Dataset dataset = generate_dataset(env, args.n_units, classes, rng);
    save_dataset(dataset, out / "dataset.sfds");
    cfg.save(out / "resolved_env.cfg");

    json meta;
    meta["n_units"] = dataset.units.size();
    meta["seed"] = cfg.seed;
    meta["env_config_hash"] = cfg.hash();
    meta["tau"] = cfg.tau;
    meta["delta"] = cfg.delta;
    meta["cr_min"] = cfg.cr_min;
    meta["cr_max"] = cfg.cr_max;
    meta["class_epsilon"] = cfg.class_epsilon;
    meta["action_classes"] = classes_to_table(classes);
    meta["dataset"] = "dataset.sfds";
    meta["background"] = "background.pgm";
    meta["env_config"] = "resolved_env.cfg";
    write_json(meta, out / "meta.json");

    std::printf("wrote %zu units to %s\n", dataset.units.size(),
                (out / "dataset.sfds").string().c_str());
    return 0;
}

// Contact metric bundle reconstructed from a gen-data output directory.
struct DataBundle {
    json meta;
    ContactPipeline pipeline;
    ContactBand band;
    ActionClasses classes;
    double delta = 0.0;
};

DataBundle load_bundle(const fs::path& data_dir) {
    DataBundle b;
    b.meta = read_json(data_dir / "meta.json");
    b.pipeline.background = load_pgm(data_dir / b.meta.value("background", "background.pgm"));
    b.pipeline.tau = b.meta.at("tau").get<int>();
    b.band.cr_min = b.meta.at("cr_min").get<double>();
    b.band.cr_max = b.meta.at("cr_max").get<double>();
    b.classes = classes_from_table(b.meta.at("action_classes").get<std::string>());
    b.delta = b.meta.at("delta").get<double>();
    return b;
}

int run_train(const TrainArgs& args) {
    const fs::path data_dir(args.data_dir);
    const DataBundle bundle = load_bundle(data_dir);
    const Dataset dataset =
        load_dataset(data_dir / bundle.meta.value("dataset", "dataset.sfds"));

    fs::create_directories(args.out_dir);
    const fs::path out(args.out_dir);

    auto [train_set, test_set] = split_dataset(dataset, args.train_fraction, args.cfg.seed);
    save_dataset(test_set, out / "test.sfds");

    NetworkArch arch;
    if (args.arch == "shallow") {
        arch = NetworkArch::make(ArchVariant::shallow);
    } else if (args.arch == "deep") {
        arch = NetworkArch::make(ArchVariant::deep);
    } else {
        throw ConfigError("arch must be shallow or deep, got '" + args.arch + "'");
    }
    arch.vel_scale = bundle.delta;

    json snapshot;
    snapshot["arch"] = args.arch;
    snapshot["train_fraction"] = args.train_fraction;
    snapshot["steps"] = args.cfg.steps;
    snapshot["units_per_step"] = args.cfg.units_per_step;
    snapshot["sync_interval"] = args.cfg.sync_interval;
    snapshot["checkpoint_interval"] = args.cfg.checkpoint_interval;
    snapshot["gamma"] = args.cfg.gamma;
    snapshot["lr"] = args.cfg.lr;
    snapshot["seed"] = args.cfg.seed;
    snapshot["data_dir"] = args.data_dir;
    snapshot["train_units"] = train_set.units.size();
    snapshot["test_units"] = test_set.units.size();
    write_json(snapshot, out / "train_config.json");

    const auto [net, log] =
        train(train_set, arch, args.cfg, [&out](int, int step, const QNetwork& n) {
            save_checkpoint(n, out / checkpoint_name(step));
        });
    log.save_csv(out / "train_log.csv");
    std::printf("trained %d steps on %zu units; checkpoints in %s\n", args.cfg.steps,
                train_set.units.size(), out.string().c_str());
    return 0;
}

std::vector<std::pair<int, fs::path>> list_checkpoints(const fs::path& run_dir) {
    std::vector<std::pair<int, fs::path>> found;
    for (const auto& entry : fs::directory_iterator(run_dir)) {
        const std::string name = entry.path().filename().string();
        int step = 0;
        if (std::sscanf(name.c_str(), "ckpt_%d.sfck", &step) == 1) {
            found.emplace_back(step, entry.path());
        }
    }
    std::sort(found.begin(), found.end());
    return found;
}

int run_eval(const EvalArgs& args) {
    const fs::path run_dir(args.run_dir);
    const DataBundle bundle = load_bundle(args.data_dir);
    const fs::path test_path =
        args.test_path.empty() ? run_dir / "test.sfds" : fs::path(args.test_path);
    const Dataset test_set = load_dataset(test_path);

    fs::create_directories(args.out_dir);
    const fs::path out(args.out_dir);

    json snapshot;
    snapshot["run_dir"] = args.run_dir;
    snapshot["data_dir"] = args.data_dir;
    snapshot["test"] = test_path.string();
    snapshot["test_units"] = test_set.units.size();
    write_json(snapshot, out / "eval_config.json");

    const auto checkpoints = list_checkpoints(run_dir);
    if (checkpoints.empty()) throw ConfigError("no checkpoints found in " + args.run_dir);

    std::vector<PrecisionReport> curve;
    curve.reserve(checkpoints.size());
    for (const auto& [step, path] : checkpoints) {
        const QNetwork net = load_checkpoint(path);
        PrecisionReport r = precision(net, test_set, bundle.classes, bundle.band, bundle.pipeline);
        r.step = step;
        r.checkpoint_id = static_cast<int>(curve.size()) + 1;
        curve.push_back(r);
        std::printf("step %6d  precision %.4f\n", step, r.precision);
    }
    save_learning_curve_csv(curve, out / "learning_curve.csv");
    save_precision_csv(curve.back(), out / "precision.csv");

    const double baseline =
        random_argmax_baseline(test_set, bundle.classes, bundle.band, bundle.pipeline);
    const auto best =
        std::max_element(curve.begin(), curve.end(), [](const auto& a, const auto& b) {
            return a.precision < b.precision;
        });
    std::printf("final precision %.4f | best %.4f at step %d | random baseline %.4f\n",
                curve.back().precision, best->precision, best->step, baseline);
    return 0;
}

int run_rollout(const RolloutArgs& args) {
    const EnvConfig cfg = load_env_config(args.config_path, args.seed);
    fs::create_directories(args.out_dir);
    const fs::path out(args.out_dir);
    cfg.save(out / "resolved_env.cfg");

    const QNetwork net = load_checkpoint(args.checkpoint_path);
    TactileEnv env(cfg);

    json snapshot;
    snapshot["checkpoint"] = args.checkpoint_path;
    snapshot["steps"] = args.steps;
    snapshot["drift"] = args.drift;
    snapshot["warmup"] = args.warmup;
    snapshot["seed"] = cfg.seed;
    write_json(snapshot, out / "rollout_config.json");

    RolloutReport report;
    if (args.dump_every > 0) {
        Workspace ws;
        std::size_t frame = 0;
        report = rollout_with_policy(
            [&](const State& s) {
                if (frame % args.dump_every == 0) {
                    char buf[32];
                    std::snprintf(buf, sizeof(buf), "frame_%06zu.pgm", frame);
                    save_pgm(s.image, out / buf);
                }
                ++frame;
                return argmax(net.forward(s, ws));
            },
            env, args.steps, args.drift, args.warmup);
    } else {
        report = rollout(net, env, args.steps, args.drift, args.warmup);
    }
    save_rollout_csv(report, out / "rollout_trace.csv", out / "rollout_summary.csv");
    std::printf("rollout %zu steps at drift %g: in-band fraction %.4f, lost contact %zu\n",
                report.steps, report.drift, report.in_band_fraction, report.lost_contact);
    return 0;
}

int run_inspect(const std::string& dataset_path) {
    const fs::path path(dataset_path);
    const Dataset d = load_dataset(path);
    const DataBundle bundle = load_bundle(path.parent_path());

    std::printf("units: %zu  seed: %llu  env hash: %016llx\n", d.units.size(),
                static_cast<unsigned long long>(d.seed),
                static_cast<unsigned long long>(d.env_config_hash));

    const ActionHistogram hist = action_distribution(d);
    std::printf("action histogram:\n");
    for (int a = 0; a < kNumActions; ++a) {
        std::printf("  action %d: %6zu (%.3f)\n", a, hist.counts[a], hist.frequency(a));
    }

    // Contact-rate histogram over the pre-action states, 100-unit bins.
    std::array<std::size_t, 10> cr_bins{};
    double max_cr = 0.0;
    std::size_t rewarded = 0;
    for (const TransitionUnit& u : d.units) {
        const double cr = bundle.pipeline.contact_rate_of(u.s.image);
        cr_bins[std::min<std::size_t>(static_cast<std::size_t>(cr / 100.0), 9)] += 1;
        max_cr = std::max(max_cr, bundle.pipeline.contact_rate_of(u.s_next.image));
        if (u.reward > 0.0) ++rewarded;
    }
    std::printf("contact-rate histogram (pre-action states):\n");
    for (std::size_t b = 0; b < cr_bins.size(); ++b) {
        std::printf("  [%3zu,%3zu): %6zu\n", b * 100, (b + 1) * 100, cr_bins[b]);
    }
    std::printf("reward rate: %.4f\n",
                static_cast<double>(rewarded) / static_cast<double>(d.units.size()));
    std::printf("max post-action contact rate: %.3f\n", max_cr);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tactile surface-following workbench"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* cmd_gen = app.add_subcommand("gen-data", "Generate a behavior-policy dataset");
    cmd_gen->add_option("--config", gen.config_path, "Environment config file");
    cmd_gen->add_option("--out", gen.out_dir, "Output directory")->required();
    cmd_gen->add_option("--n-units", gen.n_units, "Number of transition units");
    cmd_gen->add_option("--seed", gen.seed, "Override the config seed");

    TrainArgs tr;
    auto* cmd_train = app.add_subcommand("train", "Train a value network offline");
    cmd_train->add_option("--data", tr.data_dir, "gen-data output directory")->required();
    cmd_train->add_option("--out", tr.out_dir, "Output directory")->required();
    cmd_train->add_option("--arch", tr.arch, "Network variant: shallow|deep");
    cmd_train->add_option("--steps", tr.cfg.steps, "Training steps");
    cmd_train->add_option("--units-per-step", tr.cfg.units_per_step, "Units sampled per step");
    cmd_train->add_option("--sync-interval", tr.cfg.sync_interval, "Target sync interval");
    cmd_train->add_option("--checkpoint-interval", tr.cfg.checkpoint_interval,
                          "Checkpoint interval");
    cmd_train->add_option("--gamma", tr.cfg.gamma, "Discount factor");
    cmd_train->add_option("--lr", tr.cfg.lr, "Learning rate");
    cmd_train->add_option("--seed", tr.cfg.seed, "Training seed");
    cmd_train->add_option("--train-fraction", tr.train_fraction, "Train split fraction");

    EvalArgs ev;
    auto* cmd_eval = app.add_subcommand("eval", "Evaluate checkpoints on a test set");
    cmd_eval->add_option("--run", ev.run_dir, "train output directory")->required();
    cmd_eval->add_option("--data", ev.data_dir, "gen-data output directory")->required();
    cmd_eval->add_option("--test", ev.test_path, "Test dataset (default <run>/test.sfds)");
    cmd_eval->add_option("--out", ev.out_dir, "Output directory")->required();

    RolloutArgs ro;
    auto* cmd_rollout = app.add_subcommand("rollout", "Run an autonomous surface-following test");
    cmd_rollout->add_option("--checkpoint", ro.checkpoint_path, "Checkpoint file")->required();
    cmd_rollout->add_option("--config", ro.config_path, "Environment config file");
    cmd_rollout->add_option("--out", ro.out_dir, "Output directory")->required();
    cmd_rollout->add_option("--steps", ro.steps, "Rollout steps");
    cmd_rollout->add_option("--drift", ro.drift, "Lateral surface drift per step, meters");
    cmd_rollout->add_option("--warmup", ro.warmup,
                            "Warm-up steps excluded from the in-band fraction");
    cmd_rollout->add_option("--dump-frames", ro.dump_every,
                            "Dump every k-th tactile frame as PGM");
    cmd_rollout->add_option("--seed", ro.seed, "Override the config seed");

    std::string inspect_path;
    auto* cmd_inspect = app.add_subcommand("inspect", "Summarize a dataset file");
    cmd_inspect->add_option("--dataset", inspect_path, "Dataset file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_gen->parsed()) return run_gen_data(gen);
        if (cmd_train->parsed()) return run_train(tr);
        if (cmd_eval->parsed()) return run_eval(ev);
        if (cmd_rollout->parsed()) return run_rollout(ro);
        if (cmd_inspect->parsed()) return run_inspect(inspect_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ShapeError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitFormat;
    } catch (const NumericError& e) {
        std::cerr << "numeric fault: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
