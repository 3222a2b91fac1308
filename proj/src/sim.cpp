#include "sfdqn/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sfdqn/errors.hpp"

namespace sfdqn {

Surface Surface::from_config(const EnvConfig& cfg) {
    Surface s;
    s.kind = cfg.surface;
    s.slope = cfg.surface_slope;
    s.offset = cfg.surface_offset;
    s.amplitude = cfg.surface_amplitude;
    s.wavelength = cfg.surface_wavelength;
    s.points = cfg.surface_points;
    return s;
}

double surface_height(const Surface& surface, double x) {
    const double u = x - surface.lateral_offset;
    switch (surface.kind) {
        case SurfaceKind::flat:
            return surface.slope * u + surface.offset;
        case SurfaceKind::sine:
            return surface.amplitude * std::sin(2.0 * std::numbers::pi * u / surface.wavelength) +
                   surface.offset;
        case SurfaceKind::piecewise: {
            const auto& pts = surface.points;
            if (u <= pts.front().first) return pts.front().second + surface.offset;
            if (u >= pts.back().first) return pts.back().second + surface.offset;
            auto hi = std::upper_bound(pts.begin(), pts.end(), u,
                                       [](double v, const auto& p) { return v < p.first; });
            auto lo = hi - 1;
            const double t = (u - lo->first) / (hi->first - lo->first);
            return lo->second + t * (hi->second - lo->second) + surface.offset;
        }
    }
    return 0.0;
}

SensorModel SensorModel::from_config(const EnvConfig& cfg) {
    SensorModel m;
    m.patch_size = cfg.patch_size;
    m.face_depth = cfg.face_depth;
    m.gain = cfg.gain;
    m.depth_saturation = cfg.depth_saturation;
    m.background_level = cfg.background_level;
    m.noise_sigma = cfg.noise_sigma;
    m.sensitivity_falloff = cfg.sensitivity_falloff;
    return m;
}

SensorPose forward_kinematics(const JointConfig& joints, const ArmGeometry& geom) {
    SensorPose pose;
    const double phi = joints.theta3 + joints.theta4;
    pose.x = geom.base_x + geom.l1 * std::cos(joints.theta3) + geom.l2 * std::cos(phi);
    pose.z = geom.base_z + geom.l1 * std::sin(joints.theta3) + geom.l2 * std::sin(phi);
    pose.orientation = phi;
    return pose;
}

ActionResult apply_action(const JointConfig& joints, int action, double delta,
                          double joint_limit) {
    if (action < 0 || action >= kNumActions) {
        throw ShapeError("action index must be in [0, 8], got " + std::to_string(action));
    }
    ActionResult res;
    const double raw3 = joints.theta3 + action_d3(action) * delta;
    const double raw4 = joints.theta4 + action_d4(action) * delta;
    res.joints.theta3 = std::clamp(raw3, -joint_limit, joint_limit);
    res.joints.theta4 = std::clamp(raw4, -joint_limit, joint_limit);
    res.joints.vel3 = action_d3(action) * delta;
    res.joints.vel4 = action_d4(action) * delta;
    res.clamped3 = raw3 != res.joints.theta3;
    res.clamped4 = raw4 != res.joints.theta4;
    return res;
}

RawImage render_tactile(const SensorPose& pose, const Surface& surface, const SensorModel& model,
                        std::uint64_t noise_seed) {
    RawImage raw;
    const double patch_w = model.patch_size;
    const double patch_h = patch_w * static_cast<double>(kTactileHeight) / kTactileWidth;
    const double cos_o = std::cos(pose.orientation);
    const double sin_o = std::sin(pose.orientation);

    // Column-dependent quantities: lateral position, patch plane height and
    // the in-plane component of the normalized face radius.
    std::vector<double> col_height(kRawWidth), col_plane(kRawWidth), col_a2(kRawWidth);
    for (int i = 0; i < kRawWidth; ++i) {
        const double u = ((i + 0.5) / kRawWidth - 0.5) * patch_w;
        col_height[i] = surface_height(surface, pose.x + u * cos_o);
        col_plane[i] = pose.z + u * sin_o;
        const double a = 2.0 * u / patch_w;
        col_a2[i] = a * a;
    }
    std::vector<double> row_b2(kRawHeight);
    for (int j = 0; j < kRawHeight; ++j) {
        const double v = ((j + 0.5) / kRawHeight - 0.5) * patch_h;
        const double b = 2.0 * v / patch_h;
        row_b2[j] = b * b;
    }

    const bool noisy = model.noise_sigma > 0.0;
    for (int j = 0; j < kRawHeight; ++j) {
        std::uint8_t* out = raw.data.data() + static_cast<std::size_t>(j) * kRawWidth * kRawChannels;
        for (int i = 0; i < kRawWidth; ++i) {
            // r = 0 at the face center, 1 at the corners. The face is a
            // spherical-style cap, so the contact disc area grows linearly
            // with penetration depth.
            const double r2 = 0.5 * (col_a2[i] + row_b2[j]);
            const double sense_z = col_plane[i] - model.face_depth * (1.0 - r2);
            const double pen =
                std::clamp(col_height[i] - sense_z, 0.0, model.depth_saturation);
            double val = model.background_level +
                         model.gain * (1.0 - model.sensitivity_falloff * r2) * pen;
            if (noisy) {
                val += model.noise_sigma *
                       gaussian_field(noise_seed, static_cast<std::uint64_t>(j) * kRawWidth + i);
            }
            const auto byte = static_cast<std::uint8_t>(
                std::clamp<long>(std::lround(val), 0, 255));
            out[i * kRawChannels] = byte;
            out[i * kRawChannels + 1] = byte;
            out[i * kRawChannels + 2] = byte;
        }
    }
    return raw;
}

TactileEnv::TactileEnv(EnvConfig cfg)
    : cfg_(std::move(cfg)),
      geom_{cfg_.l1, cfg_.l2, cfg_.base_x, cfg_.base_z},
      surface_(Surface::from_config(cfg_)),
      model_(SensorModel::from_config(cfg_)),
      reset_rng_(mix_seed(cfg_.seed, 0x7265736574ULL)) {
    pipeline_.tau = cfg_.tau;
    // Raised pose: straight chain, tip at base height, well clear of the
    // surface for sane configurations.
    joints_ = JointConfig{};
    capture_background();
    reset_to_contact(cfg_.cr_ideal());
}

double TactileEnv::center_penetration(const JointConfig& joints) const {
    const SensorPose pose = forward_kinematics(joints, geom_);
    return surface_height(surface_, pose.x) - pose.z + model_.face_depth;
}

TactileImage TactileEnv::capture_background() {
    // Geometric contact check over the face at tactile resolution.
    const SensorPose pose = forward_kinematics(joints_, geom_);
    const double patch_w = model_.patch_size;
    const double patch_h = patch_w * static_cast<double>(kTactileHeight) / kTactileWidth;
    const double cos_o = std::cos(pose.orientation);
    const double sin_o = std::sin(pose.orientation);
    for (int j = 0; j < kTactileHeight; ++j) {
        const double v = ((j + 0.5) / kTactileHeight - 0.5) * patch_h;
        const double b = 2.0 * v / patch_h;
        for (int i = 0; i < kTactileWidth; ++i) {
            const double u = ((i + 0.5) / kTactileWidth - 0.5) * patch_w;
            const double a = 2.0 * u / patch_w;
            const double r2 = 0.5 * (a * a + b * b);
            const double sense_z = pose.z + u * sin_o - model_.face_depth * (1.0 - r2);
            if (surface_height(surface_, pose.x + u * cos_o) > sense_z) {
                throw BackgroundCaptureError(
                    "sensor is in contact while capturing the background frame");
            }
        }
    }

    const RawImage raw = render_tactile(pose, surface_, model_, mix_seed(cfg_.seed, ++frame_counter_));
    pipeline_.background = preprocess(raw);
    background_ready_ = true;
    return pipeline_.background;
}

void TactileEnv::reset_to_contact(double target_cr) {
    // Invert the contact-area law for a level patch: the rim of the contact
    // disc sits where gain * (d - r^2 * face_depth) crosses tau, so the disc
    // area (and the contact rate) is linear in the center penetration d.
    const double d0 = cfg_.tau / model_.gain;
    const double target_pen =
        d0 + target_cr / (500.0 * std::numbers::pi) * model_.face_depth;

    // Level patch: theta4 = -theta3. The penetration profile along theta3
    // need not be monotone (the tip also sweeps laterally across the height
    // field), so scan for the crossing nearest the upright pose, then bisect
    // inside that interval.
    auto pen_at = [this](double t3) {
        JointConfig j;
        j.theta3 = t3;
        j.theta4 = -t3;
        return center_penetration(j);
    };
    const double floor_t3 = -std::min(cfg_.joint_limit, 1.55);
    constexpr int kScanPoints = 4000;
    double lo = 0.0, hi = 0.0;
    bool found = false;
    double above = pen_at(0.0);
    for (int i = 1; i <= kScanPoints; ++i) {
        const double t3 = floor_t3 * i / kScanPoints;  // walks downward from 0
        const double pen = pen_at(t3);
        if (pen >= target_pen && above < target_pen) {
            lo = t3;
            hi = floor_t3 * (i - 1) / kScanPoints;
            found = true;
            break;
        }
        above = pen;
    }
    if (!found) {
        throw ConfigError("no level contact pose reaches the requested contact rate");
    }
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (pen_at(mid) >= target_pen) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    joints_ = JointConfig{};
    joints_.theta3 = 0.5 * (lo + hi);
    joints_.theta4 = -joints_.theta3;
    render_current_frame();
}

void TactileEnv::reset_to_contact(double target_cr, Rng& jitter_rng) {
    reset_to_contact(target_cr);
    joints_.theta3 += jitter_rng.uniform(-1e-3, 1e-3);
    joints_.theta4 = -joints_.theta3 + jitter_rng.uniform(-0.01, 0.01);
    render_current_frame();
}

StepRecord TactileEnv::step(int action) {
    const ActionResult res = apply_action(joints_, action, cfg_.delta, cfg_.joint_limit);
    joints_ = res.joints;
    render_current_frame();
    StepRecord rec;
    rec.state = state_;
    rec.contact_rate = current_cr_;
    rec.clamped3 = res.clamped3;
    rec.clamped4 = res.clamped4;
    return rec;
}

void TactileEnv::advance_surface(double dx) { surface_.lateral_offset += dx; }

SensorPose TactileEnv::pose() const { return forward_kinematics(joints_, geom_); }

RawImage TactileEnv::render_at(const JointConfig& joints, std::uint64_t noise_seed) const {
    return render_tactile(forward_kinematics(joints, geom_), surface_, model_, noise_seed);
}

void TactileEnv::render_current_frame() {
    if (!background_ready_) {
        throw BackgroundCaptureError("background frame must be captured before stepping");
    }
    const RawImage raw =
        render_tactile(forward_kinematics(joints_, geom_), surface_, model_,
                       mix_seed(cfg_.seed, ++frame_counter_));
    state_.image = preprocess(raw);
    state_.joints = joints_;
    current_cr_ = pipeline_.contact_rate_of(state_.image);
}

}  // namespace sfdqn
