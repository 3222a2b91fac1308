#pragma once

namespace sfdqn {

// The two controlled joints. Velocities are the last commanded joint deltas
// (radians per step); actions are position updates, so the commanded delta is
// the only velocity signal available.
struct JointConfig {
    double theta3 = 0.0;
    double theta4 = 0.0;
    double vel3 = 0.0;
    double vel4 = 0.0;

    bool operator==(const JointConfig&) const = default;
};

}  // namespace sfdqn
