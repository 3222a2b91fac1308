#include "sfdqn/rl.hpp"

#include <fstream>
#include <sstream>

#include "sfdqn/errors.hpp"
#include "sfdqn/sim.hpp"

namespace sfdqn {

ActionClasses classify_actions(const TactileEnv& env) {
    const std::uint64_t probe_seed = env.probe_noise_seed();
    const ContactPipeline& pipeline = env.pipeline();
    const JointConfig ref_joints = env.state().joints;

    // Reference and post-action frames share the probe noise seed, so the
    // measured deltas are free of frame-to-frame noise.
    const double cr_ref = pipeline.contact_rate_of(preprocess(env.render_at(ref_joints, probe_seed)));
    if (!env.band().contains(cr_ref)) {
        throw ClassificationError("probe pose must be in band contact, contact rate = " +
                                  std::to_string(cr_ref));
    }

    const double eps = env.config().class_epsilon;
    ActionClasses classes;
    for (int a = 0; a < kNumActions; ++a) {
        if (a == kNullAction) {
            classes[a] = ActionEffect::unchanged;
            continue;
        }
        const JointConfig moved =
            apply_action(ref_joints, a, env.config().delta, env.config().joint_limit).joints;
        const double cr = pipeline.contact_rate_of(preprocess(env.render_at(moved, probe_seed)));
        const double delta_cr = cr - cr_ref;
        if (delta_cr > eps) {
            classes[a] = ActionEffect::increases_contact;
        } else if (delta_cr < -eps) {
            classes[a] = ActionEffect::decreases_contact;
        } else {
            classes[a] = ActionEffect::unchanged;
        }
    }
    return classes;
}

std::vector<int> good_actions(double cr, const ContactBand& band, const ActionClasses& classes) {
    ActionEffect wanted;
    if (cr < band.cr_min) {
        wanted = ActionEffect::increases_contact;
    } else if (cr > band.cr_max) {
        wanted = ActionEffect::decreases_contact;
    } else {
        wanted = ActionEffect::unchanged;
    }
    std::vector<int> out;
    for (int a = 0; a < kNumActions; ++a) {
        if (classes[a] == wanted) out.push_back(a);
    }
    return out;
}

namespace {

const char* effect_tag(ActionEffect e) {
    switch (e) {
        case ActionEffect::increases_contact: return "ic";
        case ActionEffect::decreases_contact: return "dc";
        case ActionEffect::unchanged: return "uc";
    }
    return "uc";
}

}  // namespace

std::string classes_to_table(const ActionClasses& classes) {
    std::string out;
    for (int a = 0; a < kNumActions; ++a) {
        out += std::to_string(a);
        out += " ";
        out += effect_tag(classes[a]);
        out += "\n";
    }
    return out;
}

ActionClasses classes_from_table(const std::string& table) {
    ActionClasses classes;
    std::array<bool, kNumActions> seen{};
    std::stringstream ss(table);
    std::string line;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        int a = -1;
        std::string tag;
        ls >> a >> tag;
        if (a < 0 || a >= kNumActions || ls.fail()) {
            throw FormatError("bad action-class line: " + line, 0);
        }
        if (tag == "ic") classes[a] = ActionEffect::increases_contact;
        else if (tag == "dc") classes[a] = ActionEffect::decreases_contact;
        else if (tag == "uc") classes[a] = ActionEffect::unchanged;
        else throw FormatError("bad action-class tag: " + tag, 0);
        seen[a] = true;
    }
    for (int a = 0; a < kNumActions; ++a) {
        if (!seen[a]) throw FormatError("action-class table misses action " + std::to_string(a), 0);
    }
    return classes;
}

void save_classes(const ActionClasses& classes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot write class table: " + path.string(), 0);
    out << classes_to_table(classes);
}

ActionClasses load_classes(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open class table: " + path.string(), 0);
    std::stringstream ss;
    ss << in.rdbuf();
    return classes_from_table(ss.str());
}

}  // namespace sfdqn
