// Scratch experiment: end-to-end pipeline at reduced scale. Not shipped.
#include <cstdio>
#include <ctime>

#include "sfdqn/dataset.hpp"
#include "sfdqn/eval.hpp"
#include "sfdqn/rl.hpp"
#include "sfdqn/sim.hpp"
#include "sfdqn/trainer.hpp"

using namespace sfdqn;

static double now() { return static_cast<double>(clock()) / CLOCKS_PER_SEC; }

int main(int argc, char** argv) {
    const int n_units = argc > 1 ? std::atoi(argv[1]) : 2000;
    const int steps = argc > 2 ? std::atoi(argv[2]) : 2000;

    EnvConfig cfg;
    TactileEnv env(cfg);
    const ActionClasses classes = classify_actions(env);
    std::printf("classes: ");
    for (int a = 0; a < 9; ++a)
        std::printf("%d:%s ", a,
                    classes[a] == ActionEffect::increases_contact   ? "ic"
                    : classes[a] == ActionEffect::decreases_contact ? "dc"
                                                                    : "uc");
    std::printf("\n");

    double t0 = now();
    Rng rng(cfg.seed);
    const Dataset d = generate_dataset(env, n_units, classes, rng);
    std::printf("gen %d units: %.1f s\n", n_units, now() - t0);

    // Contact-rate stats over pre-action states.
    const ContactPipeline& pipe = env.pipeline();
    int low = 0, band = 0, high = 0, rewarded = 0;
    double max_cr = 0;
    for (const auto& u : d.units) {
        const double cr = pipe.contact_rate_of(u.s.image);
        if (cr < 20) ++low;
        else if (cr <= 40) ++band;
        else ++high;
        const double cr2 = pipe.contact_rate_of(u.s_next.image);
        max_cr = std::max(max_cr, cr2);
        if (u.reward > 0) ++rewarded;
    }
    std::printf("states: low %.2f band %.2f high %.2f | reward rate %.3f | max postCR %.1f\n",
                (double)low / n_units, (double)band / n_units, (double)high / n_units,
                (double)rewarded / n_units, max_cr);
    const ActionHistogram hist = action_distribution(d);
    std::printf("action freq:");
    for (int a = 0; a < 9; ++a) std::printf(" %.3f", hist.frequency(a));
    std::printf("\n");

    auto [train_set, test_set] = split_dataset(d, 0.9, cfg.seed);
    std::printf("split: %zu / %zu\n", train_set.size(), test_set.size());
    const double baseline = random_argmax_baseline(test_set, classes, env.band(), pipe);
    std::printf("random baseline: %.4f\n", baseline);

    NetworkArch arch = NetworkArch::make(ArchVariant::shallow);
    arch.vel_scale = cfg.delta;

    TrainConfig tc;
    tc.steps = steps;
    tc.seed = cfg.seed;
    std::vector<std::pair<int, QNetwork>> ckpts;
    t0 = now();
    const auto [net, log] = train(train_set, arch, tc, [&](int, int step, const QNetwork& n) {
        if (step % 500 == 0) ckpts.emplace_back(step, n);
    });
    std::printf("train %d steps: %.1f s (%.2f ms/unit)\n", steps, now() - t0,
                1000.0 * (now() - t0) / (steps * 10));

    for (const auto& [step, n] : ckpts) {
        const PrecisionReport r = precision(n, test_set, classes, env.band(), pipe);
        std::printf(
            "step %5d  precision %.4f  (low %zu/%zu band %zu/%zu high %zu/%zu)\n", step,
            r.precision, r.low.good, r.low.states, r.in_band.good, r.in_band.states,
            r.high.good, r.high.states);
    }
    const PrecisionReport rf = precision(net, test_set, classes, env.band(), pipe);
    std::printf("final precision %.4f vs baseline %.4f (+%.1f pts)\n", rf.precision, baseline,
                100 * (rf.precision - baseline));
    return 0;
}
