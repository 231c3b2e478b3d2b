#include "plantclean/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "plantclean/csv.hpp"
#include "plantclean/error.hpp"
#include "plantclean/random.hpp"

namespace plantclean {

namespace {

// stream ids; signals use kSignalStreams + j
constexpr std::uint64_t kLoadingStream = 1;
constexpr std::uint64_t kLatentStreams = 1000;
constexpr std::uint64_t kSignalStreams = 1000000;

[[noreturn]] void invalid(const std::string& msg) {
    throw Error(ErrorCode::validation, "synthetic spec: " + msg);
}

std::vector<std::string> resolve_ids(const SyntheticSpec& spec) {
    const std::size_t m = spec.noise_sigma.size();
    if (!spec.signal_ids.empty()) {
        if (spec.signal_ids.size() != m) invalid("signal_ids and noise_sigma lengths differ");
        return spec.signal_ids;
    }
    std::vector<std::string> ids;
    for (std::size_t j = 0; j < m; ++j) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "S%02zu", j + 1);
        ids.emplace_back(buf);
    }
    return ids;
}

void validate(const SyntheticSpec& spec, const std::vector<std::string>& ids) {
    const std::size_t m = spec.noise_sigma.size();
    if (m == 0) invalid("at least one signal (noise_sigma entry) is required");
    if (spec.n_samples < 2) invalid("n_samples must be >= 2");
    if (!spec.segment_plan.empty() && spec.segment_plan.size() != m) {
        invalid("segment_plan needs one entry per signal");
    }
    for (const auto& plan : spec.segment_plan) {
        for (std::size_t k = 0; k < plan.size(); ++k) {
            if (plan[k].start >= spec.n_samples) invalid("segment start beyond n_samples");
            if (k > 0 && plan[k].start <= plan[k - 1].start) {
                invalid("segment starts must be strictly increasing");
            }
        }
    }
    for (double s : spec.noise_sigma) {
        if (!(s >= 0.0) || !std::isfinite(s)) invalid("noise_sigma must be finite and >= 0");
    }
    if (!(spec.spike_rate >= 0.0 && spec.spike_rate <= 0.05)) invalid("spike_rate must be in [0, 0.05]");
    if (!std::isfinite(spec.loadings_scale)) invalid("loadings_scale must be finite");
    for (const auto& w : spec.fault_windows) {
        if (w.start >= w.end || w.end > spec.n_samples) invalid("fault window outside [0, n_samples)");
        for (const auto& id : w.signal_ids) {
            if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
                invalid("fault window names unknown signal '" + id + "'");
            }
        }
    }
}

}  // namespace

bool GroundTruth::empty() const noexcept {
    const bool no_cps = std::all_of(change_points.begin(), change_points.end(),
                                    [](const auto& v) { return v.empty(); });
    return no_cps && spikes.empty() && faults.empty();
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    const auto ids = resolve_ids(spec);
    validate(spec, ids);
    const std::size_t n = spec.n_samples;
    const std::size_t m = ids.size();
    const std::size_t k_lat = spec.n_latent;

    GroundTruth truth;
    truth.loadings.resize(m * k_lat);
    {
        auto rng = Rng::stream(spec.seed, kLoadingStream);
        for (auto& l : truth.loadings) l = rng.normal() * spec.loadings_scale;
    }

    // latent factors, column-major n x k
    std::vector<double> latent(n * k_lat);
    for (std::size_t k = 0; k < k_lat; ++k) {
        auto rng = Rng::stream(spec.seed, kLatentStreams + k);
        double* f = latent.data() + k * n;
        if (spec.latent_shape == LatentShape::gaussian) {
            for (std::size_t t = 0; t < n; ++t) f[t] = rng.normal();
        } else if (spec.latent_shape == LatentShape::uniform) {
            for (std::size_t t = 0; t < n; ++t) f[t] = std::sqrt(3.0) * rng.uniform(-1.0, 1.0);
        } else {
            const double period = rng.uniform(static_cast<double>(n) / 6.0, static_cast<double>(n) / 2.0);
            const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            for (std::size_t t = 0; t < n; ++t) {
                f[t] = std::numbers::sqrt2 *
                       std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period + phase);
            }
        }
    }

    std::vector<std::uint8_t> in_any_fault(n, 0);
    for (const auto& w : spec.fault_windows) {
        std::fill(in_any_fault.begin() + static_cast<std::ptrdiff_t>(w.start),
                  in_any_fault.begin() + static_cast<std::ptrdiff_t>(w.end), 1);
    }

    truth.change_points.resize(m);
    truth.change_levels.resize(m);
    std::vector<Signal> signals;
    signals.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
        auto rng = Rng::stream(spec.seed, kSignalStreams + j);
        const double sigma = spec.noise_sigma[j];
        std::vector<double> values(n);

        std::vector<LevelStep> plan;
        if (!spec.segment_plan.empty()) plan = spec.segment_plan[j];
        std::size_t step = 0;
        double level = 0.0;
        std::vector<std::uint8_t> faulted(n, 0);
        for (const auto& w : spec.fault_windows) {
            if (std::find(w.signal_ids.begin(), w.signal_ids.end(), ids[j]) == w.signal_ids.end()) {
                continue;
            }
            for (std::size_t t = w.start; t < w.end; ++t) faulted[t] = 1;
        }

        for (std::size_t t = 0; t < n; ++t) {
            while (step < plan.size() && plan[step].start == t) {
                level = plan[step].level;
                ++step;
            }
            double clean = level;
            for (std::size_t k = 0; k < k_lat; ++k) {
                clean += truth.loadings[j * k_lat + k] * latent[k * n + t];
            }
            // draws happen unconditionally so spike/fault edits never shift the stream
            const double eps = rng.normal();
            const bool spike = rng.bernoulli(spec.spike_rate);
            const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
            values[t] = clean + sigma * eps;
            const bool blocked = faulted[t] || (spec.spikes_avoid_faults && in_any_fault[t]);
            if (spike && !blocked) {
                values[t] = clean + sign * spec.spike_amplitude * sigma;
                truth.spikes.push_back(SpikeTruth{j, t, values[t]});
            }
        }
        for (const auto& s : plan) {
            if (s.start == 0) continue;
            truth.change_points[j].push_back(s.start);
            truth.change_levels[j].push_back(s.level);
        }
        for (const auto& w : spec.fault_windows) {
            if (std::find(w.signal_ids.begin(), w.signal_ids.end(), ids[j]) == w.signal_ids.end()) {
                continue;
            }
            std::fill(values.begin() + static_cast<std::ptrdiff_t>(w.start),
                      values.begin() + static_cast<std::ptrdiff_t>(w.end), w.value);
        }
        signals.push_back(Signal::from_values(ids[j], std::move(values)));
    }
    truth.faults = spec.fault_windows;
    return SyntheticData{Dataset::from_signals(std::move(signals)), std::move(truth)};
}

std::vector<LevelStep> random_level_plan(std::size_t n_samples, std::size_t count, double min_jump,
                                         double max_jump, std::size_t min_gap, std::uint64_t seed) {
    if (!(min_jump >= 0.0 && max_jump >= min_jump)) invalid("jump range must satisfy 0 <= min <= max");
    if (min_gap == 0) invalid("min_gap must be positive");
    if (min_gap * (count + 1) > n_samples) {
        invalid(std::to_string(count) + " steps spaced " + std::to_string(min_gap) +
                " apart do not fit in " + std::to_string(n_samples) + " samples");
    }
    auto rng = Rng::stream(seed, 0);
    const std::size_t slack = n_samples - min_gap * (count + 1);
    std::vector<std::size_t> offsets(count);
    for (auto& o : offsets) {
        o = static_cast<std::size_t>(rng.uniform() * static_cast<double>(slack + 1));
        o = std::min(o, slack);
    }
    std::sort(offsets.begin(), offsets.end());
    std::vector<LevelStep> plan{LevelStep{0, 0.0}};
    double level = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        const double size = rng.uniform(min_jump, max_jump);
        level += rng.uniform() < 0.5 ? -size : size;
        plan.push_back(LevelStep{min_gap * (k + 1) + offsets[k], level});
    }
    return plan;
}

void write_ground_truth(const GroundTruth& truth, const Dataset& dataset, std::ostream& out) {
    out << "kind,signal_id,start,end,value\n";
    for (std::size_t j = 0; j < truth.change_points.size(); ++j) {
        const auto& s = dataset.signal(j);
        for (std::size_t k = 0; k < truth.change_points[j].size(); ++k) {
            const std::size_t cp = truth.change_points[j][k];
            out << "changepoint," << s.id << ',' << cp << ',' << cp + 1 << ','
                << format_value(truth.change_levels[j][k]) << '\n';
        }
    }
    for (const auto& sp : truth.spikes) {
        out << "spike," << dataset.signal(sp.signal).id << ',' << sp.index << ','
            << sp.index + 1 << ',' << format_value(sp.value) << '\n';
    }
    for (const auto& w : truth.faults) {
        for (const auto& id : w.signal_ids) {
            out << "fault," << id << ',' << w.start << ',' << w.end << ','
                << format_value(w.value) << '\n';
        }
    }
}

}  // namespace plantclean
