#include "sfdqn/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "sfdqn/errors.hpp"

namespace sfdqn {

namespace {

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

void TrainLog::save_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot write train log: " + path.string(), 0);
    out << "step,mean_loss,checkpoint_id\n";
    for (const TrainLogEntry& e : entries) {
        out << e.step << "," << format_number(e.mean_loss) << ",";
        if (e.checkpoint_id >= 0) out << e.checkpoint_id;
        out << "\n";
    }
}

double compute_target(const TransitionUnit& unit, const QNetwork& target_net, double gamma,
                      Workspace& ws) {
    const QValues q = target_net.forward(unit.s_next, ws);
    const double best = *std::max_element(q.begin(), q.end());
    const double y = unit.reward + gamma * best;
    if (!std::isfinite(y)) throw NumericError("non-finite regression target");
    return y;
}

std::size_t sample_unit_index(Rng& rng, std::size_t n) {
    return static_cast<std::size_t>(rng.uniform_int(n));
}

std::pair<QNetwork, TrainLog> train(const Dataset& train_set, const NetworkArch& arch,
                                    const TrainConfig& cfg, const CheckpointSink& sink) {
    if (cfg.steps > 0 && train_set.units.empty()) {
        throw ConfigError("training requires a nonempty dataset");
    }
    QNetwork net = QNetwork::build(arch, mix_seed(cfg.seed, 0x6E6574ULL));
    QNetwork target = net;
    Rng rng(mix_seed(cfg.seed, 0x73616D706C65ULL));
    Workspace net_ws, target_ws;
    TrainLog log;
    log.entries.reserve(cfg.steps);

    for (int step = 1; step <= cfg.steps; ++step) {
        double loss_sum = 0.0;
        for (int t = 0; t < cfg.units_per_step; ++t) {
            const TransitionUnit& unit =
                train_set.units[sample_unit_index(rng, train_set.units.size())];
            const double y = compute_target(unit, target, cfg.gamma, target_ws);
            loss_sum += net.backward_step(unit.s, unit.action, y, cfg.lr, net_ws);
        }
        if (cfg.sync_interval > 0 && step % cfg.sync_interval == 0) {
            sync_target(net, target);
        }
        int checkpoint_id = -1;
        if (cfg.checkpoint_interval > 0 && step % cfg.checkpoint_interval == 0) {
            checkpoint_id = step / cfg.checkpoint_interval;
            if (sink) sink(checkpoint_id, step, net);
        }
        log.entries.push_back(
            {step, loss_sum / std::max(1, cfg.units_per_step), checkpoint_id});
    }
    return {std::move(net), std::move(log)};
}

}  // namespace sfdqn
