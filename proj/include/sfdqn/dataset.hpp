#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sfdqn/rl.hpp"
#include "sfdqn/rng.hpp"

namespace sfdqn {

class TactileEnv;

// One recorded interaction: the reward belongs to the post-action state.
struct TransitionUnit {
    State s;
    int action = 0;
    double reward = 0.0;
    State s_next;

    bool operator==(const TransitionUnit&) const = default;
};

struct Dataset {
    std::vector<TransitionUnit> units;
    std::uint64_t seed = 0;
    std::uint64_t env_config_hash = 0;

    std::size_t size() const { return units.size(); }
};

// Behavior-policy action for unit number units_num (1-based). Units whose
// number mod 10 is in [5, 9] draw uniformly from all 9 actions; the others
// draw from the actions that do not push the contact rate away from the band
// median.
int select_behavior_action(std::uint64_t units_num, double cr, double cr_ideal,
                           const ActionClasses& classes, Rng& rng);

// Runs the behavior policy for n steps and records every transition. If the
// sensor reports zero contact for 50 consecutive steps the environment is
// reset to a jittered band pose; recording continues across resets.
Dataset generate_dataset(TactileEnv& env, std::size_t n, const ActionClasses& classes, Rng& rng);

// Seeded shuffle, then an exact disjoint split with round(train_fraction * n)
// units in the first part.
std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double train_fraction,
                                          std::uint64_t seed);

void save_dataset(const Dataset& d, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace sfdqn
