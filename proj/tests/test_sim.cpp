#include <cmath>
#include <numbers>

#include "doctest.h"
#include "sfdqn/errors.hpp"
#include "sfdqn/rng.hpp"
#include "sfdqn/sim.hpp"

using namespace sfdqn;

namespace {

constexpr double kPi = std::numbers::pi;

ArmGeometry unit_geom() { return ArmGeometry{0.2, 0.2, 0.0, 0.0}; }

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("forward kinematics of the straight chain") {
    const SensorPose p = forward_kinematics(JointConfig{}, unit_geom());
    CHECK(p.x == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(p.z == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(p.orientation == 0.0);
}

TEST_CASE("forward kinematics of a quarter turn") {
    JointConfig j;
    j.theta3 = kPi / 2;
    const SensorPose p = forward_kinematics(j, unit_geom());
    CHECK(p.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(p.z == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(p.orientation == doctest::Approx(kPi / 2));
}

TEST_CASE("forward kinematics matches an independent trigonometric evaluation") {
    JointConfig j;
    j.theta3 = 0.3;
    j.theta4 = -0.1;
    const SensorPose p = forward_kinematics(j, unit_geom());
    CHECK(p.x == doctest::Approx(0.2 * std::cos(0.3) + 0.2 * std::cos(0.2)).epsilon(1e-14));
    CHECK(p.z == doctest::Approx(0.2 * std::sin(0.3) + 0.2 * std::sin(0.2)).epsilon(1e-14));
    CHECK(p.orientation == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("kinematic consistency: the tip stays within arm reach") {
    Rng rng(17);
    const ArmGeometry geom{0.2, 0.15, 0.3, -0.1};
    for (int i = 0; i < 500; ++i) {
        JointConfig j;
        j.theta3 = rng.uniform(-2.0, 2.0);
        j.theta4 = rng.uniform(-2.0, 2.0);
        const SensorPose p = forward_kinematics(j, geom);
        const double dist = std::hypot(p.x - geom.base_x, p.z - geom.base_z);
        CHECK(dist <= geom.l1 + geom.l2 + 1e-12);
    }
}

TEST_CASE("the null action leaves joints unchanged with zero velocities") {
    JointConfig j;
    j.theta3 = 0.4;
    j.theta4 = -0.2;
    j.vel3 = 0.1;
    const ActionResult res = apply_action(j, kNullAction, 0.2);
    CHECK(res.joints.theta3 == 0.4);
    CHECK(res.joints.theta4 == -0.2);
    CHECK(res.joints.vel3 == 0.0);
    CHECK(res.joints.vel4 == 0.0);
    CHECK_FALSE(res.clamped());
}

TEST_CASE("a (+1,+1) action adds delta to both joints") {
    const ActionResult res = apply_action(JointConfig{}, 8, 0.2);
    CHECK(res.joints.theta3 == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(res.joints.theta4 == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(res.joints.vel3 == doctest::Approx(0.2));
    CHECK(res.joints.vel4 == doctest::Approx(0.2));
}

TEST_CASE("joint limits clamp and set the clamp flag") {
    JointConfig j;
    j.theta3 = -1.95;
    const ActionResult res = apply_action(j, 1, 0.2, 2.0);  // (-1, 0)
    CHECK(res.joints.theta3 == -2.0);
    CHECK(res.clamped3);
    CHECK_FALSE(res.clamped4);
    // Velocity still reports the commanded delta.
    CHECK(res.joints.vel3 == doctest::Approx(-0.2));
}

TEST_CASE("a null action followed by any action equals the action alone") {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        JointConfig j;
        j.theta3 = rng.uniform(-1.9, 1.9);
        j.theta4 = rng.uniform(-1.9, 1.9);
        j.vel3 = rng.uniform(-0.1, 0.1);
        const int action = static_cast<int>(rng.uniform_int(kNumActions));
        const JointConfig via_null =
            apply_action(apply_action(j, kNullAction, 0.2).joints, action, 0.2).joints;
        const JointConfig direct = apply_action(j, action, 0.2).joints;
        CHECK(via_null == direct);
    }
}

TEST_CASE("surface heights: flat, sine quarter-period peak, piecewise midpoint") {
    Surface flat;
    flat.kind = SurfaceKind::flat;
    flat.offset = 0.05;
    for (double x : {-1.0, 0.0, 2.5}) CHECK(surface_height(flat, x) == 0.05);

    Surface sine;
    sine.kind = SurfaceKind::sine;
    sine.amplitude = 0.01;
    sine.wavelength = 0.3;
    CHECK(surface_height(sine, 0.075) == doctest::Approx(0.01).epsilon(1e-12));

    Surface pw;
    pw.kind = SurfaceKind::piecewise;
    pw.points = {{0.0, 0.0}, {1.0, 0.1}};
    CHECK(surface_height(pw, 0.5) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(surface_height(pw, -1.0) == 0.0);   // clamped before the table
    CHECK(surface_height(pw, 2.0) == 0.1);    // clamped after the table
}

TEST_CASE("lateral offset translates the profile") {
    Surface sine;
    sine.kind = SurfaceKind::sine;
    sine.amplitude = 0.01;
    sine.wavelength = 0.3;
    sine.lateral_offset = 0.075;
    CHECK(surface_height(sine, 0.15) == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("a pose far above the surface yields zero contact rate") {
    EnvConfig cfg;
    TactileEnv env(cfg);
    SensorPose pose;
    pose.x = 0.2;
    pose.z = 0.1;  // 100 mm above a flat surface at z = 0
    const RawImage raw = render_tactile(pose, env.surface(), SensorModel::from_config(cfg), 77);
    CHECK(env.pipeline().contact_rate_of(preprocess(raw)) == 0.0);
}

TEST_CASE("a saturating parallel contact turns every pixel on") {
    EnvConfig cfg;
    TactileEnv env(cfg);
    SensorPose pose;
    pose.x = 0.2;
    pose.z = -(cfg.depth_saturation + cfg.tau / cfg.gain);
    const RawImage raw = render_tactile(pose, env.surface(), SensorModel::from_config(cfg), 77);
    CHECK(env.pipeline().contact_rate_of(preprocess(raw)) == 1000.0);
}

TEST_CASE("contact rate is nondecreasing in penetration depth") {
    EnvConfig cfg;
    TactileEnv env(cfg);
    for (std::uint64_t seed : {101ULL, 202ULL, 303ULL}) {
        double prev = -1.0;
        for (int i = 0; i <= 20; ++i) {
            SensorPose pose;
            pose.x = 0.2;
            pose.z = cfg.face_depth - (cfg.face_depth + cfg.tau / cfg.gain) * i / 20.0;
            const double cr = env.pipeline().contact_rate_of(
                preprocess(render_tactile(pose, env.surface(), SensorModel::from_config(cfg), seed)));
            CHECK(cr >= prev);
            prev = cr;
        }
        CHECK(prev == 1000.0);
    }
}

TEST_CASE("the environment resets into the contact band") {
    EnvConfig cfg;
    TactileEnv env(cfg);
    CHECK(env.band().contains(env.current_contact_rate()));
    env.reset_to_contact(10.0);
    CHECK(env.current_contact_rate() == doctest::Approx(10.0).epsilon(0.25));
}

TEST_CASE("identical seeds and actions reproduce bit-identical trajectories") {
    EnvConfig cfg;
    cfg.surface = SurfaceKind::sine;
    TactileEnv a(cfg);
    TactileEnv b(cfg);
    Rng rng(5);
    for (int i = 0; i < 30; ++i) {
        const int action = static_cast<int>(rng.uniform_int(kNumActions));
        const StepRecord ra = a.step(action);
        const StepRecord rb = b.step(action);
        CHECK(ra.state == rb.state);
        CHECK(ra.contact_rate == rb.contact_rate);
    }
}

TEST_CASE("different seeds give different noise") {
    EnvConfig cfg;
    TactileEnv a(cfg);
    cfg.seed = 2;
    TactileEnv b(cfg);
    CHECK(a.state().image != b.state().image);
}

TEST_CASE("step records clamp events") {
    EnvConfig cfg;
    cfg.joint_limit = 1.36;  // just past the default start pose
    TactileEnv env(cfg);
    bool clamped = false;
    for (int i = 0; i < 80 && !clamped; ++i) {
        clamped = env.step(0).clamped3;  // (-1,-1) drives theta3 to the limit
    }
    CHECK(clamped);
    CHECK(env.state().joints.theta3 == -1.36);
}

TEST_CASE("background capture fails when the sensor is in contact") {
    EnvConfig cfg;
    cfg.surface_offset = 0.3;  // surface above the raised pose
    CHECK_THROWS_AS(TactileEnv{cfg}, BackgroundCaptureError);
}

TEST_CASE("env config hash is recorded against the exact run configuration") {
    EnvConfig cfg;
    TactileEnv env(cfg);
    CHECK(env.config().hash() == cfg.hash());
}

}  // TEST_SUITE
