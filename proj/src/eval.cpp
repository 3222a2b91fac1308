#include "sfdqn/eval.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "sfdqn/errors.hpp"
#include "sfdqn/sim.hpp"

namespace sfdqn {

namespace {

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

BandCounts& counts_for(PrecisionReport& report, double cr, const ContactBand& band) {
    if (cr < band.cr_min) return report.low;
    if (cr > band.cr_max) return report.high;
    return report.in_band;
}

}  // namespace

PrecisionReport precision(const QNetwork& net, const Dataset& test, const ActionClasses& classes,
                          const ContactBand& band, const ContactPipeline& pipeline) {
    if (test.units.empty()) throw ConfigError("precision requires a nonempty test set");
    PrecisionReport report;
    report.n_test = test.units.size();
    Workspace ws;
    std::size_t good_total = 0;
    for (const TransitionUnit& unit : test.units) {
        const double cr = pipeline.contact_rate_of(unit.s.image);
        const QValues q = net.forward(unit.s, ws);
        const int predicted = argmax(q);
        const std::vector<int> good = good_actions(cr, band, classes);
        const bool is_good = std::find(good.begin(), good.end(), predicted) != good.end();
        BandCounts& bucket = counts_for(report, cr, band);
        bucket.states += 1;
        if (is_good) {
            bucket.good += 1;
            good_total += 1;
        }
    }
    report.precision = static_cast<double>(good_total) / static_cast<double>(report.n_test);
    return report;
}

double random_argmax_baseline(const Dataset& test, const ActionClasses& classes,
                              const ContactBand& band, const ContactPipeline& pipeline) {
    if (test.units.empty()) throw ConfigError("baseline requires a nonempty test set");
    double sum = 0.0;
    for (const TransitionUnit& unit : test.units) {
        const double cr = pipeline.contact_rate_of(unit.s.image);
        sum += static_cast<double>(good_actions(cr, band, classes).size()) / kNumActions;
    }
    return sum / static_cast<double>(test.units.size());
}

std::vector<PrecisionReport> learning_curve(const std::vector<CheckpointEntry>& checkpoints,
                                            const Dataset& test, const ActionClasses& classes,
                                            const ContactBand& band,
                                            const ContactPipeline& pipeline) {
    std::vector<PrecisionReport> curve;
    curve.reserve(checkpoints.size());
    for (const CheckpointEntry& entry : checkpoints) {
        PrecisionReport report = precision(*entry.net, test, classes, band, pipeline);
        report.checkpoint_id = entry.checkpoint_id;
        report.step = entry.step;
        curve.push_back(report);
    }
    return curve;
}

void save_learning_curve_csv(const std::vector<PrecisionReport>& curve,
                             const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot write learning curve: " + path.string(), 0);
    out << "step,precision\n";
    for (const PrecisionReport& r : curve) {
        out << r.step << "," << format_number(r.precision) << "\n";
    }
}

void save_precision_csv(const PrecisionReport& r, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot write precision report: " + path.string(), 0);
    out << "checkpoint_id,step,precision,n_test,"
           "low_states,low_good,band_states,band_good,high_states,high_good\n";
    out << r.checkpoint_id << "," << r.step << "," << format_number(r.precision) << ","
        << r.n_test << "," << r.low.states << "," << r.low.good << "," << r.in_band.states << ","
        << r.in_band.good << "," << r.high.states << "," << r.high.good << "\n";
}

std::size_t ActionHistogram::total() const {
    std::size_t n = 0;
    for (std::size_t c : counts) n += c;
    return n;
}

double ActionHistogram::frequency(int action) const {
    const std::size_t n = total();
    return n == 0 ? 0.0 : static_cast<double>(counts[action]) / static_cast<double>(n);
}

ActionHistogram action_distribution(const Dataset& d) {
    if (d.units.empty()) throw ConfigError("action distribution requires a nonempty dataset");
    ActionHistogram hist;
    for (const TransitionUnit& unit : d.units) hist.counts[unit.action] += 1;
    return hist;
}

RolloutReport rollout_with_policy(const std::function<int(const State&)>& policy,
                                  TactileEnv& env, std::size_t steps, double drift,
                                  std::size_t warmup) {
    RolloutReport report;
    report.steps = steps;
    report.warmup = warmup;
    report.drift = drift;
    report.cr_trace.reserve(steps);
    report.actions.reserve(steps);
    const ContactBand band = env.band();
    std::size_t in_band = 0;
    std::size_t measured = 0;
    for (std::size_t i = 0; i < steps; ++i) {
        env.advance_surface(drift);
        const int action = policy(env.state());
        const StepRecord rec = env.step(action);
        report.cr_trace.push_back(rec.contact_rate);
        report.actions.push_back(action);
        if (rec.contact_rate == 0.0) report.lost_contact += 1;
        if (i >= warmup) {
            measured += 1;
            if (band.contains(rec.contact_rate)) in_band += 1;
        }
    }
    report.in_band_fraction =
        measured == 0 ? 0.0 : static_cast<double>(in_band) / static_cast<double>(measured);
    return report;
}

RolloutReport rollout(const QNetwork& net, TactileEnv& env, std::size_t steps, double drift,
                      std::size_t warmup) {
    Workspace ws;
    return rollout_with_policy(
        [&net, &ws](const State& s) { return argmax(net.forward(s, ws)); }, env, steps, drift,
        warmup);
}

void save_rollout_csv(const RolloutReport& report, const std::filesystem::path& trace_path,
                      const std::filesystem::path& summary_path) {
    {
        std::ofstream out(trace_path, std::ios::trunc);
        if (!out) throw FormatError("cannot write rollout trace: " + trace_path.string(), 0);
        out << "step,action,contact_rate\n";
        for (std::size_t i = 0; i < report.cr_trace.size(); ++i) {
            out << i + 1 << "," << report.actions[i] << "," << format_number(report.cr_trace[i])
                << "\n";
        }
    }
    {
        std::ofstream out(summary_path, std::ios::trunc);
        if (!out) throw FormatError("cannot write rollout summary: " + summary_path.string(), 0);
        out << "steps,warmup,drift,in_band_fraction,lost_contact\n";
        out << report.steps << "," << report.warmup << "," << format_number(report.drift) << ","
            << format_number(report.in_band_fraction) << "," << report.lost_contact << "\n";
    }
}

}  // namespace sfdqn
