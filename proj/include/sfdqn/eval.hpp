#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <vector>

#include "sfdqn/dataset.hpp"
#include "sfdqn/qnet.hpp"

namespace sfdqn {

class TactileEnv;

struct BandCounts {
    std::size_t states = 0;
    std::size_t good = 0;
};

// Fraction of test states whose argmax action falls in the good set for the
// state's contact-rate regime, with a per-regime breakdown.
struct PrecisionReport {
    int checkpoint_id = -1;
    int step = 0;
    double precision = 0.0;
    std::size_t n_test = 0;
    BandCounts low, in_band, high;
};

PrecisionReport precision(const QNetwork& net, const Dataset& test, const ActionClasses& classes,
                          const ContactBand& band, const ContactPipeline& pipeline);

// Expected precision of a uniformly random policy: the mean of
// |good set| / 9 over the test states, computed exhaustively.
double random_argmax_baseline(const Dataset& test, const ActionClasses& classes,
                              const ContactBand& band, const ContactPipeline& pipeline);

struct CheckpointEntry {
    int checkpoint_id;
    int step;
    const QNetwork* net;
};

std::vector<PrecisionReport> learning_curve(const std::vector<CheckpointEntry>& checkpoints,
                                            const Dataset& test, const ActionClasses& classes,
                                            const ContactBand& band,
                                            const ContactPipeline& pipeline);

void save_learning_curve_csv(const std::vector<PrecisionReport>& curve,
                             const std::filesystem::path& path);
void save_precision_csv(const PrecisionReport& report, const std::filesystem::path& path);

struct ActionHistogram {
    std::array<std::size_t, kNumActions> counts{};

    std::size_t total() const;
    double frequency(int action) const;
};

ActionHistogram action_distribution(const Dataset& d);

struct RolloutReport {
    std::size_t steps = 0;
    std::size_t warmup = 0;
    double drift = 0.0;
    double in_band_fraction = 0.0;  // over steps after warmup
    std::size_t lost_contact = 0;   // steps with zero contact rate
    std::vector<double> cr_trace;
    std::vector<int> actions;
};

// Autonomous surface following: each step the surface drifts laterally by
// drift, the policy acts greedily, and the contact rate is recorded. The
// in-band fraction ignores the first warmup steps.
RolloutReport rollout(const QNetwork& net, TactileEnv& env, std::size_t steps, double drift,
                      std::size_t warmup = 50);

// Same loop under an arbitrary policy; used for oracle baselines.
RolloutReport rollout_with_policy(const std::function<int(const State&)>& policy,
                                  TactileEnv& env, std::size_t steps, double drift,
                                  std::size_t warmup = 50);

void save_rollout_csv(const RolloutReport& report, const std::filesystem::path& trace_path,
                      const std::filesystem::path& summary_path);

}  // namespace sfdqn
