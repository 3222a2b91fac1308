#pragma once

#include <cstdint>
#include <optional>

#include "sfdqn/config.hpp"
#include "sfdqn/image.hpp"
#include "sfdqn/rl.hpp"
#include "sfdqn/rng.hpp"
#include "sfdqn/types.hpp"

namespace sfdqn {

struct ArmGeometry {
    double l1 = 0.2;
    double l2 = 0.2;
    double base_x = 0.0;
    double base_z = 0.19;
};

struct SensorPose {
    double x = 0.0;
    double z = 0.0;
    double orientation = 0.0;  // patch tangent angle in the x-z plane
};

// Height field over the lateral axis. lateral_offset translates the profile,
// which is how rollouts emulate the surface moving under the arm.
struct Surface {
    SurfaceKind kind = SurfaceKind::flat;
    double slope = 0.0;
    double offset = 0.0;  // vertical
    double amplitude = 0.01;
    double wavelength = 0.3;
    std::vector<std::pair<double, double>> points;  // sorted by x
    double lateral_offset = 0.0;

    static Surface from_config(const EnvConfig& cfg);
};

double surface_height(const Surface& surface, double x);

// Synthetic sensor face: a rectangular patch (width x width*48/64) whose
// center protrudes face_depth toward the surface. Contact area therefore
// grows monotonically with penetration depth.
struct SensorModel {
    double patch_size = 0.02;
    double face_depth = 0.002;
    double gain = 3.0e5;
    double depth_saturation = 5.0e-4;
    double background_level = 30.0;
    double noise_sigma = 5.0;
    double sensitivity_falloff = 0.0;

    static SensorModel from_config(const EnvConfig& cfg);
};

// Standard planar two-link chain: tip = base + l1*dir(t3) + l2*dir(t3+t4).
SensorPose forward_kinematics(const JointConfig& joints, const ArmGeometry& geom);

struct ActionResult {
    JointConfig joints;
    bool clamped3 = false;
    bool clamped4 = false;

    bool clamped() const { return clamped3 || clamped4; }
};

// theta3 += d3*delta, theta4 += d4*delta, clamped to [-limit, limit].
// Velocities carry the commanded deltas.
ActionResult apply_action(const JointConfig& joints, int action, double delta,
                          double joint_limit = 2.0);

// Renders the raw 640x480x3 sensor frame for a pose over a surface. Per
// pixel: penetration of the face into the surface, scaled by gain, clipped at
// depth_saturation, plus seeded Gaussian noise. The noise is a pure function
// of (noise_seed, pixel), so a fixed seed gives a fixed noise field.
RawImage render_tactile(const SensorPose& pose, const Surface& surface, const SensorModel& model,
                        std::uint64_t noise_seed);

struct StepRecord {
    State state;          // state after the action
    double contact_rate;  // of the new frame, via the session pipeline
    bool clamped3 = false;
    bool clamped4 = false;
};

// Deterministic stand-in for the arm + sensor rig. One instance is
// single-threaded; run independent seeded instances for parallel work.
class TactileEnv {
public:
    explicit TactileEnv(EnvConfig cfg);

    // Stores the no-contact frame used by the session's contact metric.
    // Fails if any part of the face touches the surface.
    TactileImage capture_background();

    // Deterministically seeks a level-patch pose whose contact rate is near
    // target_cr (bisection on theta3 with theta4 = -theta3). The overload
    // with an rng jitters the pose slightly; used for episode resets.
    void reset_to_contact(double target_cr);
    void reset_to_contact(double target_cr, Rng& jitter_rng);

    StepRecord step(int action);

    // Translates the surface laterally; emulates base motion during rollouts.
    void advance_surface(double dx);

    const State& state() const { return state_; }
    double current_contact_rate() const { return current_cr_; }
    SensorPose pose() const;
    const EnvConfig& config() const { return cfg_; }
    const ContactPipeline& pipeline() const { return pipeline_; }
    const Surface& surface() const { return surface_; }
    ContactBand band() const { return ContactBand{cfg_.cr_min, cfg_.cr_max}; }

    // Renders a frame for an arbitrary joint configuration without touching
    // the environment state. Used by the action-classification probe.
    RawImage render_at(const JointConfig& joints, std::uint64_t noise_seed) const;
    std::uint64_t probe_noise_seed() const { return mix_seed(cfg_.seed, 0x70726F6265ULL); }

private:
    void render_current_frame();
    double center_penetration(const JointConfig& joints) const;

    EnvConfig cfg_;
    ArmGeometry geom_;
    Surface surface_;
    SensorModel model_;
    ContactPipeline pipeline_;
    JointConfig joints_;
    State state_;
    double current_cr_ = 0.0;
    std::uint64_t frame_counter_ = 0;
    Rng reset_rng_;
    bool background_ready_ = false;
};

}  // namespace sfdqn
