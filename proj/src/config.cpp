#include "sfdqn/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "sfdqn/errors.hpp"
#include "sfdqn/rng.hpp"

namespace sfdqn {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

// Shortest decimal that round-trips, via to_chars.
std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& value) {
    double v = 0.0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
        throw ConfigError("invalid number for key '" + key + "': " + value);
    }
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
        throw ConfigError("invalid integer for key '" + key + "': " + value);
    }
    return v;
}

int parse_int(const std::string& key, const std::string& value) {
    int v = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
        throw ConfigError("invalid integer for key '" + key + "': " + value);
    }
    return v;
}

// "x0:h0, x1:h1, ..." -> sorted point table.
std::vector<std::pair<double, double>> parse_points(const std::string& value) {
    std::vector<std::pair<double, double>> points;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("surface_points entries must be 'x:h', got '" + item + "'");
        }
        points.emplace_back(parse_double("surface_points.x", trim(item.substr(0, colon))),
                            parse_double("surface_points.h", trim(item.substr(colon + 1))));
    }
    if (!std::is_sorted(points.begin(), points.end(),
                        [](const auto& a, const auto& b) { return a.first < b.first; })) {
        throw ConfigError("surface_points must be sorted by x");
    }
    return points;
}

std::string format_points(const std::vector<std::pair<double, double>>& points) {
    std::string out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i) out += ", ";
        out += format_number(points[i].first) + ":" + format_number(points[i].second);
    }
    return out;
}

}  // namespace

EnvConfig EnvConfig::from_string(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line.erase(hash_pos);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (!kv.emplace(key, value).second) {
            throw ConfigError("duplicate key '" + key + "'");
        }
    }

    EnvConfig cfg;
    auto take = [&kv](const char* key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string val = it->second;
        kv.erase(it);
        return val;
    };

    if (auto v = take("l1")) cfg.l1 = parse_double("l1", *v);
    if (auto v = take("l2")) cfg.l2 = parse_double("l2", *v);
    if (auto v = take("base_x")) cfg.base_x = parse_double("base_x", *v);
    if (auto v = take("base_z")) cfg.base_z = parse_double("base_z", *v);
    if (auto v = take("joint_limit")) cfg.joint_limit = parse_double("joint_limit", *v);
    if (auto v = take("surface")) {
        if (*v == "flat") cfg.surface = SurfaceKind::flat;
        else if (*v == "sine") cfg.surface = SurfaceKind::sine;
        else if (*v == "piecewise") cfg.surface = SurfaceKind::piecewise;
        else throw ConfigError("surface must be flat|sine|piecewise, got '" + *v + "'");
    }
    if (auto v = take("surface_slope")) cfg.surface_slope = parse_double("surface_slope", *v);
    if (auto v = take("surface_offset")) cfg.surface_offset = parse_double("surface_offset", *v);
    if (auto v = take("surface_amplitude"))
        cfg.surface_amplitude = parse_double("surface_amplitude", *v);
    if (auto v = take("surface_wavelength"))
        cfg.surface_wavelength = parse_double("surface_wavelength", *v);
    if (auto v = take("surface_points")) cfg.surface_points = parse_points(*v);
    if (auto v = take("patch_size")) cfg.patch_size = parse_double("patch_size", *v);
    if (auto v = take("face_depth")) cfg.face_depth = parse_double("face_depth", *v);
    if (auto v = take("gain")) cfg.gain = parse_double("gain", *v);
    if (auto v = take("depth_saturation"))
        cfg.depth_saturation = parse_double("depth_saturation", *v);
    if (auto v = take("background_level"))
        cfg.background_level = parse_double("background_level", *v);
    if (auto v = take("noise_sigma")) cfg.noise_sigma = parse_double("noise_sigma", *v);
    if (auto v = take("sensitivity_falloff"))
        cfg.sensitivity_falloff = parse_double("sensitivity_falloff", *v);
    if (auto v = take("tau")) cfg.tau = parse_int("tau", *v);
    if (auto v = take("delta")) cfg.delta = parse_double("delta", *v);
    if (auto v = take("class_epsilon")) cfg.class_epsilon = parse_double("class_epsilon", *v);
    if (auto v = take("cr_min")) cfg.cr_min = parse_double("cr_min", *v);
    if (auto v = take("cr_max")) cfg.cr_max = parse_double("cr_max", *v);
    if (auto v = take("seed")) cfg.seed = parse_u64("seed", *v);

    if (!kv.empty()) {
        throw ConfigError("unknown config key '" + kv.begin()->first + "'");
    }

    if (cfg.l1 <= 0 || cfg.l2 <= 0) throw ConfigError("link lengths must be positive");
    if (cfg.joint_limit <= 0) throw ConfigError("joint_limit must be positive");
    if (cfg.tau < 0 || cfg.tau > 255) throw ConfigError("tau must be in [0, 255]");
    if (cfg.delta <= 0) throw ConfigError("delta must be positive");
    if (cfg.cr_min >= cfg.cr_max) throw ConfigError("cr_min must be below cr_max");
    if (cfg.surface == SurfaceKind::piecewise && cfg.surface_points.size() < 2) {
        throw ConfigError("piecewise surface needs at least 2 points");
    }
    return cfg;
}

EnvConfig EnvConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
}

std::string EnvConfig::to_string() const {
    std::string out;
    auto put = [&out](const char* key, const std::string& value) {
        out += key;
        out += " = ";
        out += value;
        out += "\n";
    };
    put("l1", format_number(l1));
    put("l2", format_number(l2));
    put("base_x", format_number(base_x));
    put("base_z", format_number(base_z));
    put("joint_limit", format_number(joint_limit));
    switch (surface) {
        case SurfaceKind::flat: put("surface", "flat"); break;
        case SurfaceKind::sine: put("surface", "sine"); break;
        case SurfaceKind::piecewise: put("surface", "piecewise"); break;
    }
    put("surface_slope", format_number(surface_slope));
    put("surface_offset", format_number(surface_offset));
    put("surface_amplitude", format_number(surface_amplitude));
    put("surface_wavelength", format_number(surface_wavelength));
    if (!surface_points.empty()) put("surface_points", format_points(surface_points));
    put("patch_size", format_number(patch_size));
    put("face_depth", format_number(face_depth));
    put("gain", format_number(gain));
    put("depth_saturation", format_number(depth_saturation));
    put("background_level", format_number(background_level));
    put("noise_sigma", format_number(noise_sigma));
    put("sensitivity_falloff", format_number(sensitivity_falloff));
    put("tau", std::to_string(tau));
    put("delta", format_number(delta));
    put("class_epsilon", format_number(class_epsilon));
    put("cr_min", format_number(cr_min));
    put("cr_max", format_number(cr_max));
    put("seed", std::to_string(seed));
    return out;
}

void EnvConfig::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write config file: " + path.string());
    out << to_string();
}

std::uint64_t EnvConfig::hash() const { return fnv1a(to_string()); }

}  // namespace sfdqn
