#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "sfdqn/binio.hpp"
#include "sfdqn/dataset.hpp"
#include "sfdqn/errors.hpp"
#include "sfdqn/sim.hpp"

using namespace sfdqn;

namespace {

const ActionClasses& default_classes() {
    static const ActionClasses classes = [] {
        TactileEnv env{EnvConfig{}};
        return classify_actions(env);
    }();
    return classes;
}

std::set<int> class_members(ActionEffect e) {
    std::set<int> out;
    for (int a = 0; a < kNumActions; ++a) {
        if (default_classes()[a] == e) out.insert(a);
    }
    return out;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("complete-random units draw from all nine actions") {
    Rng rng(51);
    std::set<int> seen;
    for (int i = 0; i < 2000; ++i) {
        seen.insert(select_behavior_action(7, 500.0, 30.0, default_classes(), rng));
    }
    CHECK(seen.size() == kNumActions);
}

TEST_CASE("partial rule above the median never increases contact") {
    const std::set<int> ic = class_members(ActionEffect::increases_contact);
    Rng rng(52);
    std::set<int> seen;
    for (int i = 0; i < 2000; ++i) {
        const int a = select_behavior_action(3, 50.0, 30.0, default_classes(), rng);
        CHECK_FALSE(ic.contains(a));
        seen.insert(a);
    }
    CHECK(seen.size() == kNumActions - ic.size());
}

TEST_CASE("partial rule below the median never decreases contact") {
    const std::set<int> dc = class_members(ActionEffect::decreases_contact);
    Rng rng(53);
    std::set<int> seen;
    for (int i = 0; i < 2000; ++i) {
        const int a = select_behavior_action(3, 10.0, 30.0, default_classes(), rng);
        CHECK_FALSE(dc.contains(a));
        seen.insert(a);
    }
    CHECK(seen.size() == kNumActions - dc.size());
}

TEST_CASE("the median itself uses the above-median branch") {
    const std::set<int> ic = class_members(ActionEffect::increases_contact);
    Rng rng(54);
    for (int i = 0; i < 500; ++i) {
        CHECK_FALSE(ic.contains(select_behavior_action(1, 30.0, 30.0, default_classes(), rng)));
    }
}

TEST_CASE("generation produces exactly n ordered units") {
    TactileEnv env{EnvConfig{}};
    Rng rng(61);
    CHECK(generate_dataset(env, 0, default_classes(), rng).units.empty());
    const Dataset d = generate_dataset(env, 10, default_classes(), rng);
    CHECK(d.units.size() == 10);
    CHECK(d.seed == env.config().seed);
    CHECK(d.env_config_hash == env.config().hash());
}

TEST_CASE("partial-phase units respect the exclusion rule, complete-phase units break it") {
    EnvConfig cfg;
    TactileEnv env(cfg);
    Rng rng(62);
    const Dataset d = generate_dataset(env, 200, default_classes(), rng);
    const std::set<int> ic = class_members(ActionEffect::increases_contact);
    const std::set<int> dc = class_members(ActionEffect::decreases_contact);

    // Recompute each unit's pre-action contact rate the same way the
    // generator saw it.
    TactileEnv pipeline_env(cfg);
    const ContactPipeline& pipeline = pipeline_env.pipeline();
    bool complete_phase_violates = false;
    for (std::size_t i = 0; i < d.units.size(); ++i) {
        const std::uint64_t units_num = i + 1;
        const double cr = pipeline.contact_rate_of(d.units[i].s.image);
        const std::set<int>& excluded = cr >= 30.0 ? ic : dc;
        if (units_num % 10 < 5) {
            CHECK_FALSE(excluded.contains(d.units[i].action));
        } else if (excluded.contains(d.units[i].action)) {
            complete_phase_violates = true;
        }
    }
    // The complete-random phases must actually switch rules: across 100
    // complete-phase units, excluded-class draws are statistically certain.
    CHECK(complete_phase_violates);
}

TEST_CASE("stored rewards match the post-action state exactly") {
    EnvConfig cfg;
    TactileEnv env(cfg);
    Rng rng(63);
    const Dataset d = generate_dataset(env, 120, default_classes(), rng);
    TactileEnv pipeline_env(cfg);
    const ContactPipeline& pipeline = pipeline_env.pipeline();
    int rewarded = 0;
    for (const TransitionUnit& u : d.units) {
        const double cr = pipeline.contact_rate_of(u.s_next.image);
        CHECK(u.reward == reward(cr, pipeline_env.band()));
        if (u.reward == 10.0) ++rewarded;
    }
    CHECK(rewarded > 0);  // the band is actually visited
}

TEST_CASE("generation is deterministic in the seeds") {
    EnvConfig cfg;
    TactileEnv env1(cfg);
    TactileEnv env2(cfg);
    Rng rng1(64), rng2(64);
    const Dataset a = generate_dataset(env1, 50, default_classes(), rng1);
    const Dataset b = generate_dataset(env2, 50, default_classes(), rng2);
    CHECK(a.units == b.units);
}

TEST_CASE("split produces an exact, seeded, disjoint partition") {
    EnvConfig cfg;
    TactileEnv env(cfg);
    Rng rng(65);
    const Dataset d = generate_dataset(env, 20, default_classes(), rng);

    auto [train, test] = split_dataset(d, 0.9, 7);
    CHECK(train.units.size() == 18);
    CHECK(test.units.size() == 2);

    auto [train2, test2] = split_dataset(d, 0.9, 7);
    CHECK(train.units == train2.units);
    CHECK(test.units == test2.units);

    // Every original unit appears exactly once across the two parts.
    std::vector<TransitionUnit> all = train.units;
    all.insert(all.end(), test.units.begin(), test.units.end());
    for (const TransitionUnit& u : d.units) {
        CHECK(std::count(all.begin(), all.end(), u) == 1);
    }

    auto [train3, _] = split_dataset(d, 0.9, 8);
    CHECK(train3.units != train.units);  // different seed, different shuffle

    CHECK_THROWS_AS(split_dataset(d, 0.0, 1), ConfigError);
    CHECK_THROWS_AS(split_dataset(d, 1.0, 1), ConfigError);
}

TEST_CASE("split arithmetic at the 10-unit boundary") {
    Dataset d;
    d.units.resize(10);
    auto [train, test] = split_dataset(d, 0.9, 1);
    CHECK(train.units.size() == 9);
    CHECK(test.units.size() == 1);
}

TEST_CASE("dataset files round-trip bit-exactly") {
    const auto dir = std::filesystem::temp_directory_path() / "sfdqn_dataset_test";
    std::filesystem::create_directories(dir);
    EnvConfig cfg;
    TactileEnv env(cfg);
    Rng rng(66);
    const Dataset d = generate_dataset(env, 12, default_classes(), rng);

    save_dataset(d, dir / "d.sfds");
    const Dataset loaded = load_dataset(dir / "d.sfds");
    CHECK(loaded.units == d.units);
    CHECK(loaded.seed == d.seed);
    CHECK(loaded.env_config_hash == d.env_config_hash);

    // Saving the loaded copy reproduces the same bytes.
    save_dataset(loaded, dir / "d2.sfds");
    const auto bytes1 = read_file_bytes(dir / "d.sfds");
    const auto bytes2 = read_file_bytes(dir / "d2.sfds");
    CHECK(bytes1 == bytes2);

    std::filesystem::remove_all(dir);
}

TEST_CASE("corrupt and truncated dataset files report format errors with offsets") {
    const auto dir = std::filesystem::temp_directory_path() / "sfdqn_dataset_test2";
    std::filesystem::create_directories(dir);
    EnvConfig cfg;
    TactileEnv env(cfg);
    Rng rng(67);
    const Dataset d = generate_dataset(env, 3, default_classes(), rng);
    save_dataset(d, dir / "d.sfds");

    auto bytes = read_file_bytes(dir / "d.sfds");

    {  // bad magic
        auto bad = bytes;
        bad[0] = 'X';
        write_file_bytes(dir / "bad.sfds", bad);
        CHECK_THROWS_AS(load_dataset(dir / "bad.sfds"), FormatError);
    }
    {  // truncated mid-record
        auto bad = bytes;
        bad.resize(bytes.size() - 100);
        write_file_bytes(dir / "trunc.sfds", bad);
        try {
            load_dataset(dir / "trunc.sfds");
            FAIL("expected a format error");
        } catch (const FormatError& e) {
            CHECK(e.offset() > 0);
        }
    }
    {  // out-of-range action byte in the first record
        auto bad = bytes;
        const std::size_t action_offset = 39 + 3072 + 32;
        bad[action_offset] = 42;
        write_file_bytes(dir / "act.sfds", bad);
        CHECK_THROWS_AS(load_dataset(dir / "act.sfds"), FormatError);
    }
    {  // empty file
        write_file_bytes(dir / "empty.sfds", std::vector<unsigned char>{});
        CHECK_THROWS_AS(load_dataset(dir / "empty.sfds"), FormatError);
    }

    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
