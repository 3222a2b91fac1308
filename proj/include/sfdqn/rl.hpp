#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sfdqn/image.hpp"
#include "sfdqn/types.hpp"

namespace sfdqn {

class TactileEnv;

inline constexpr int kNumActions = 9;

// Action i maps to joint deltas (d3, d4) = (i/3 - 1, i%3 - 1), a fixed
// bijection onto {-1,0,+1}^2. Index 4 is the null action.
inline constexpr int kNullAction = 4;

constexpr int action_d3(int action) { return action / 3 - 1; }
constexpr int action_d4(int action) { return action % 3 - 1; }

// The RL state: tactile frame plus the controlled joints.
struct State {
    TactileImage image;
    JointConfig joints;

    bool operator==(const State&) const = default;
};

// Desired contact window. Reward is 10 inside [cr_min, cr_max] (closed), 0
// elsewhere; cr_ideal is the window median used by the behavior policy.
struct ContactBand {
    double cr_min = 20.0;
    double cr_max = 40.0;

    double cr_ideal() const { return 0.5 * (cr_min + cr_max); }
    bool contains(double cr) const { return cr >= cr_min && cr <= cr_max; }
};

inline double reward(double cr, const ContactBand& band) {
    return band.contains(cr) ? 10.0 : 0.0;
}

enum class ActionEffect : std::uint8_t {
    increases_contact,
    decreases_contact,
    unchanged,
};

using ActionClasses = std::array<ActionEffect, kNumActions>;

// Empirically classify each action by its effect on the contact rate,
// probing from the environment's current pose. The environment must be in
// contact inside the band; the probe is deterministic (reference and
// post-action frames share one noise seed so the noise cancels).
ActionClasses classify_actions(const TactileEnv& env);

// Actions considered good for a state with contact rate cr: below the band
// pick from the increase set, in band from the unchanged set, above from the
// decrease set. Returned sorted by action index.
std::vector<int> good_actions(double cr, const ContactBand& band, const ActionClasses& classes);

// 9-line audit table: "<action> <ic|dc|uc>".
std::string classes_to_table(const ActionClasses& classes);
ActionClasses classes_from_table(const std::string& table);
void save_classes(const ActionClasses& classes, const std::filesystem::path& path);
ActionClasses load_classes(const std::filesystem::path& path);

}  // namespace sfdqn
