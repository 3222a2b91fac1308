// Scratch: max post-state CR over a full 12000-unit generation vs delta.
#include <cstdio>

#include "sfdqn/dataset.hpp"
#include "sfdqn/eval.hpp"
#include "sfdqn/rl.hpp"
#include "sfdqn/sim.hpp"

using namespace sfdqn;

int main(int argc, char** argv) {
    EnvConfig cfg;
    cfg.delta = argc > 1 ? std::atof(argv[1]) : 2.2e-4;
    const int n = argc > 2 ? std::atoi(argv[2]) : 12000;
    TactileEnv env(cfg);
    const ActionClasses classes = classify_actions(env);
    std::printf("delta=%g classes: ", cfg.delta);
    for (int a = 0; a < 9; ++a)
        std::printf("%s", classes[a] == ActionEffect::increases_contact   ? "i"
                          : classes[a] == ActionEffect::decreases_contact ? "d"
                                                                          : "u");
    std::printf("\n");
    // Probe the per-action band effects for the margin story.
    const auto& pipe = env.pipeline();
    const double ref =
        pipe.contact_rate_of(preprocess(env.render_at(env.state().joints, 42)));
    for (int a = 0; a < 9; ++a) {
        const JointConfig moved =
            apply_action(env.state().joints, a, cfg.delta, cfg.joint_limit).joints;
        std::printf(" a%d:%+.1f", a,
                    pipe.contact_rate_of(preprocess(env.render_at(moved, 42))) - ref);
    }
    std::printf("\n");

    Rng rng(mix_seed(cfg.seed, 0x67656EULL));
    const Dataset d = generate_dataset(env, n, classes, rng);
    double max_cr = 0.0;
    int low = 0, band = 0, high = 0, rewarded = 0;
    for (const auto& u : d.units) {
        max_cr = std::max(max_cr, pipe.contact_rate_of(u.s_next.image));
        const double cr = pipe.contact_rate_of(u.s.image);
        if (cr < 20) ++low;
        else if (cr <= 40) ++band;
        else ++high;
        if (u.reward > 0) ++rewarded;
    }
    const ActionHistogram h = action_distribution(d);
    double min_f = 1.0;
    for (int a = 0; a < 9; ++a) min_f = std::min(min_f, h.frequency(a));
    std::printf("N=%d max postCR %.1f | mix %.2f/%.2f/%.2f | reward %.3f | min freq %.3f\n", n,
                max_cr, (double)low / n, (double)band / n, (double)high / n,
                (double)rewarded / n, min_f);
    return 0;
}
