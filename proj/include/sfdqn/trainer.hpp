#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <utility>
#include <vector>

#include "sfdqn/dataset.hpp"
#include "sfdqn/qnet.hpp"

namespace sfdqn {

struct TrainConfig {
    int steps = 20000;             // M
    int units_per_step = 10;       // T
    int sync_interval = 500;       // C
    int checkpoint_interval = 100; // E
    double gamma = 0.9;
    double lr = 1e-4;
    std::uint64_t seed = 0;
};

struct TrainLogEntry {
    int step;
    double mean_loss;
    int checkpoint_id;  // -1 when the step emitted no checkpoint
};

struct TrainLog {
    std::vector<TrainLogEntry> entries;

    void save_csv(const std::filesystem::path& path) const;
};

// Bootstrapped regression target: r + gamma * max_a' Q(s', a') under the
// frozen target network. The task is continuing, so there is no terminal
// special case.
double compute_target(const TransitionUnit& unit, const QNetwork& target_net, double gamma,
                      Workspace& ws);

// Index sampler used by the training loop (uniform with replacement).
std::size_t sample_unit_index(Rng& rng, std::size_t n);

// Called after the steps that are multiples of checkpoint_interval.
using CheckpointSink = std::function<void(int checkpoint_id, int step, const QNetwork& net)>;

// Offline Q-learning over a fixed dataset: per step, sample units_per_step
// units, regress each toward its frozen-target value, sync the target every
// sync_interval steps and emit a checkpoint every checkpoint_interval steps.
std::pair<QNetwork, TrainLog> train(const Dataset& train_set, const NetworkArch& arch,
                                    const TrainConfig& cfg,
                                    const CheckpointSink& sink = nullptr);

}  // namespace sfdqn
