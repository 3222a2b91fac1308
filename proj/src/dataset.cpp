#include "sfdqn/dataset.hpp"

#include <cmath>

#include "sfdqn/binio.hpp"
#include "sfdqn/errors.hpp"
#include "sfdqn/sim.hpp"

namespace sfdqn {

namespace {

constexpr char kMagic[9] = {'S', 'F', 'D', 'Q', 'N', '-', 'D', 'S', '\0'};
constexpr std::uint16_t kVersion = 1;
constexpr int kLostContactResetSteps = 50;

void put_state(BinaryWriter& w, const State& s) {
    w.put_bytes(std::span<const unsigned char>(s.image.pixels.data(), s.image.pixels.size()));
    w.put_f64(s.joints.theta3);
    w.put_f64(s.joints.theta4);
    w.put_f64(s.joints.vel3);
    w.put_f64(s.joints.vel4);
}

State get_state(BinaryReader& r) {
    State s;
    r.get_bytes(s.image.pixels.data(), s.image.pixels.size());
    s.joints.theta3 = r.get_f64();
    s.joints.theta4 = r.get_f64();
    s.joints.vel3 = r.get_f64();
    s.joints.vel4 = r.get_f64();
    return s;
}

}  // namespace

int select_behavior_action(std::uint64_t units_num, double cr, double cr_ideal,
                           const ActionClasses& classes, Rng& rng) {
    if (units_num % 10 >= 5) {
        return static_cast<int>(rng.uniform_int(kNumActions));
    }
    const ActionEffect excluded = cr >= cr_ideal ? ActionEffect::increases_contact
                                                 : ActionEffect::decreases_contact;
    std::array<int, kNumActions> candidates{};
    int n = 0;
    for (int a = 0; a < kNumActions; ++a) {
        if (classes[a] != excluded) candidates[n++] = a;
    }
    if (n == 0) throw NumericError("behavior policy has no candidate actions");
    return candidates[rng.uniform_int(static_cast<std::uint64_t>(n))];
}

Dataset generate_dataset(TactileEnv& env, std::size_t n, const ActionClasses& classes, Rng& rng) {
    Dataset d;
    d.seed = env.config().seed;
    d.env_config_hash = env.config().hash();
    d.units.reserve(n);

    const double cr_ideal = env.config().cr_ideal();
    int lost_contact_streak = 0;
    std::uint64_t units_num = 1;
    try {
        for (; units_num <= n; ++units_num) {
            if (lost_contact_streak >= kLostContactResetSteps) {
                env.reset_to_contact(cr_ideal, rng);
                lost_contact_streak = 0;
            }
            TransitionUnit unit;
            unit.s = env.state();
            const double cr = env.current_contact_rate();
            unit.action = select_behavior_action(units_num, cr, cr_ideal, classes, rng);
            const StepRecord rec = env.step(unit.action);
            unit.s_next = rec.state;
            unit.reward = reward(rec.contact_rate, env.band());
            d.units.push_back(std::move(unit));
            lost_contact_streak = rec.contact_rate == 0.0 ? lost_contact_streak + 1 : 0;
        }
    } catch (const std::exception& e) {
        throw NumericError("dataset generation aborted at unit " + std::to_string(units_num) +
                           " of " + std::to_string(n) + ": " + e.what());
    }
    return d;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double train_fraction,
                                          std::uint64_t seed) {
    if (train_fraction <= 0.0 || train_fraction >= 1.0) {
        throw ConfigError("train fraction must be in (0, 1)");
    }
    std::vector<std::size_t> order(d.units.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mix_seed(seed, 0x73706C6974ULL));
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.uniform_int(i)]);
    }

    const auto n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(d.units.size())));
    Dataset train, test;
    train.seed = test.seed = d.seed;
    train.env_config_hash = test.env_config_hash = d.env_config_hash;
    train.units.reserve(n_train);
    test.units.reserve(d.units.size() - n_train);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_train ? train : test).units.push_back(d.units[order[i]]);
    }
    return {std::move(train), std::move(test)};
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
    BinaryWriter w;
    w.put_bytes(kMagic, sizeof(kMagic));
    w.put_u16(kVersion);
    w.put_u64(d.units.size());
    w.put_u16(kTactileWidth);
    w.put_u16(kTactileHeight);
    w.put_u64(d.env_config_hash);
    w.put_u64(d.seed);
    for (const TransitionUnit& u : d.units) {
        put_state(w, u.s);
        w.put_u8(static_cast<std::uint8_t>(u.action));
        w.put_f64(u.reward);
        put_state(w, u.s_next);
    }
    write_file_bytes(path, w.bytes());
}

Dataset load_dataset(const std::filesystem::path& path) {
    BinaryReader r(read_file_bytes(path));
    char magic[sizeof(kMagic)];
    r.get_bytes(reinterpret_cast<unsigned char*>(magic), sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw FormatError("not a dataset file (bad magic)", 0);
    }
    const std::uint16_t version = r.get_u16();
    if (version != kVersion) {
        throw FormatError("unsupported dataset version " + std::to_string(version), 9);
    }
    Dataset d;
    const std::uint64_t n = r.get_u64();
    const std::uint16_t w = r.get_u16();
    const std::uint16_t h = r.get_u16();
    if (w != kTactileWidth || h != kTactileHeight) {
        throw FormatError("dataset image dims must be 64x48", 19);
    }
    d.env_config_hash = r.get_u64();
    d.seed = r.get_u64();
    d.units.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        TransitionUnit u;
        u.s = get_state(r);
        const std::uint8_t action = r.get_u8();
        if (action >= kNumActions) {
            throw FormatError("action index out of range: " + std::to_string(action),
                              r.offset() - 1);
        }
        u.action = action;
        u.reward = r.get_f64();
        u.s_next = get_state(r);
        d.units.push_back(std::move(u));
    }
    if (r.remaining() != 0) {
        throw FormatError("trailing bytes after last record", r.offset());
    }
    return d;
}

}  // namespace sfdqn
