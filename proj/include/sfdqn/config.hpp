#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace sfdqn {

enum class SurfaceKind { flat, sine, piecewise };

// Full simulator configuration, loadable from a flat key=value text file.
// Unknown keys are rejected so typos fail loudly.
struct EnvConfig {
    // Arm geometry (planar two-link chain).
    double l1 = 0.2;
    double l2 = 0.2;
    double base_x = 0.0;
    double base_z = 0.197;
    double joint_limit = 2.0;  // symmetric limit, radians

    // Surface model.
    SurfaceKind surface = SurfaceKind::flat;
    double surface_slope = 0.0;        // flat: h = slope*x + offset
    double surface_offset = 0.0;       // vertical offset, all kinds
    double surface_amplitude = 0.002;  // sine; keep within level-pose reach
    double surface_wavelength = 0.3;   // sine
    std::vector<std::pair<double, double>> surface_points;  // piecewise (x, h), sorted by x

    // Sensor model. The face is a shallow spherical-style cap: the center
    // protrudes face_depth toward the surface, so the contact disc grows
    // linearly with penetration instead of flipping all pixels at once.
    double patch_size = 0.02;          // width of the sensing face, meters
    double face_depth = 0.002;         // face profile depth, meters
    double gain = 3.0e5;               // intensity per meter of penetration
    double depth_saturation = 5.0e-4;  // penetration beyond this saturates
    double background_level = 30.0;    // intensity with no contact
    double noise_sigma = 5.0;          // per-pixel Gaussian noise
    double sensitivity_falloff = 0.0;  // optional radial gain falloff in [0,1]

    // Contact metric and control.
    int tau = 20;               // threshold for the contact mask
    double delta = 7e-5;        // joint shift per action, radians
    double class_epsilon = 5.0; // |dCR| below this counts as "unchanged"
    double cr_min = 20.0;
    double cr_max = 40.0;

    std::uint64_t seed = 1;

    double cr_ideal() const { return 0.5 * (cr_min + cr_max); }

    static EnvConfig from_file(const std::filesystem::path& path);
    static EnvConfig from_string(const std::string& text);

    // Canonical key=value form: fixed key order, shortest round-trip numbers.
    std::string to_string() const;
    void save(const std::filesystem::path& path) const;

    // FNV-1a over the canonical form; recorded in dataset headers.
    std::uint64_t hash() const;
};

}  // namespace sfdqn
