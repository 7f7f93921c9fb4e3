/*
 * Copyright 2026 The nigprate Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Monte-Carlo harness: trial generation, per-method rate selection, outage
// and rate-distribution aggregation, sigma_x sweeps and margin search.
//
// Every trial draws from its own stream derived from (master_seed, index),
// so results never depend on how trials are scheduled across threads.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "nigprate/channel_model.hpp"
#include "nigprate/errors.hpp"
#include "nigprate/gp_regression.hpp"
#include "nigprate/rate_selection.hpp"
#include "nigprate/types.hpp"

namespace nigprate {

struct SimConfig {
    double area_side = 300.0;
    ChannelParams channel;
    KernelHyper hyper = KernelHyper::matched(ChannelParams{});
    NoiseParams noise;
    RateConfig rate_cfg;
    NigpOptions nigp;
    int n_sensors = 100;
    int n_test_points = 20;
    int n_trials = 10000;
    std::uint64_t master_seed = 1;
    std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};
    /// Evaluation points on the x2 = area_side/2 line for the 1-D profile demo.
    int demo_grid_points = 301;

    friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

/// Aborted trials above this fraction fail a run.
inline constexpr double kMaxAbortFraction = 1e-3;

class AbortThresholdExceeded : public NumericalError {
public:
    using NumericalError::NumericalError;
};

struct TrialRecord {
    std::size_t trial_index = 0;
    Method method = Method::PureGP;
    Point2 test_point;
    double predicted_rate = 0.0;
    double true_capacity = 0.0;
    bool outage = false;
    double received_rate = 0.0;
};

/// Posterior at one test point for one method, with the true capacity there.
/// Rate decisions are derived from these so margins can be re-evaluated
/// against a fixed set of trials.
struct PointPrediction {
    Method method = Method::PureGP;
    Point2 test_point;
    Posterior posterior;
    double true_capacity = 0.0;
};

struct TrialOutcome {
    std::size_t trial_index = 0;
    std::vector<PointPrediction> predictions;
};

struct Batch {
    std::vector<TrialOutcome> outcomes;  // completed trials, ascending index
    std::vector<std::size_t> aborted;    // ascending index
    std::vector<std::string> abort_reasons;
};

struct OutageEstimate {
    Method method = Method::PureGP;
    double outage_prob = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n_samples = 0;
};

struct SweepRow {
    double sigma_x = 0.0;
    OutageEstimate estimate;
};

struct CdfRow {
    Method method = Method::PureGP;
    double rate = 0.0;
    double cum_prob = 0.0;
};

struct ProfileRow {
    Method method = Method::PureGP;
    double x1 = 0.0;
    double mean = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double truth = 0.0;
};

inline void validate(const SimConfig& cfg) {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(what);
    };
    require(cfg.area_side > 0.0, "area_side must be > 0");
    require(cfg.n_sensors >= 1, "n_sensors must be >= 1");
    require(cfg.n_test_points >= 1, "n_test_points must be >= 1");
    require(cfg.n_trials >= 1, "n_trials must be >= 1");
    require(cfg.demo_grid_points >= 2, "demo_grid_points must be >= 2");
    require(cfg.channel.eta > 0.0, "channel.eta must be > 0");
    require(cfg.channel.sigma_db >= 0.0, "channel.sigma_db must be >= 0");
    require(cfg.channel.d_cor > 0.0, "channel.d_cor must be > 0");
    require(cfg.hyper.sigma_k > 0.0, "kernel.sigma_k must be > 0");
    require(cfg.hyper.ell > 0.0, "kernel.ell must be > 0");
    require(cfg.hyper.d_c > 0.0, "kernel.d_c must be > 0");
    require(cfg.noise.sigma_x >= 0.0, "noise.sigma_x must be >= 0");
    require(cfg.noise.sigma_y >= 0.0, "noise.sigma_y must be >= 0");
    require(cfg.rate_cfg.p_out > 0.0 && cfg.rate_cfg.p_out < 1.0, "rate.p_out must lie in (0, 1)");
    require(cfg.rate_cfg.sigma_delta >= 0.0, "rate.sigma_delta must be >= 0");
    require(cfg.nigp.correction_passes >= 1, "nigp.correction_passes must be >= 1");
    require(!cfg.methods.empty(), "methods must not be empty");
}

/// Independent, replayable stream for one trial.
inline std::mt19937_64 trial_stream(std::uint64_t master_seed, std::size_t trial_index) {
    auto splitmix = [](std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    };
    const std::uint64_t a = splitmix(master_seed);
    const std::uint64_t b = splitmix(a ^ splitmix(static_cast<std::uint64_t>(trial_index)));
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

/// Ground truth and reported data of one trial, before any estimation.
struct TrialScene {
    std::vector<Point2> sensors;      // true sensing locations
    std::vector<Point2> test_points;
    std::vector<double> shadow;       // sensors first, then test points
    SensingDataset dataset;           // noisy locations + observations
};

/// Draw order: sensor locations, test locations, joint shadowing, observation
/// noise, location noise. Standard normals are always drawn so streams stay
/// aligned across noise levels (common random numbers).
template <class Rng>
TrialScene draw_scene(const SimConfig& cfg, Rng& rng, std::vector<Point2> sensors, std::vector<Point2> test_points) {
    TrialScene scene;
    scene.sensors = std::move(sensors);
    scene.test_points = std::move(test_points);

    std::vector<Point2> all = scene.sensors;
    all.insert(all.end(), scene.test_points.begin(), scene.test_points.end());
    scene.shadow = sample_shadow_field(all, cfg.channel, rng).values;

    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t n = scene.sensors.size();
    scene.dataset.observations.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        scene.dataset.observations[i] =
            received_power(cfg.channel, scene.sensors[i], scene.shadow[i]) + cfg.noise.sigma_y * normal(rng);
    }
    const auto [v1, v2] = cfg.noise.location_variance();
    const double s1 = std::sqrt(v1);
    const double s2 = std::sqrt(v2);
    scene.dataset.noisy_locations.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double e1 = normal(rng);
        const double e2 = normal(rng);
        scene.dataset.noisy_locations[i] = {scene.sensors[i].x1 + s1 * e1, scene.sensors[i].x2 + s2 * e2};
    }
    return scene;
}

template <class Rng>
TrialScene draw_area_scene(const SimConfig& cfg, Rng& rng) {
    std::uniform_real_distribution<double> coord(0.0, cfg.area_side);
    auto draw = [&](int count) {
        std::vector<Point2> pts(static_cast<std::size_t>(count));
        for (auto& p : pts) {
            p.x1 = coord(rng);
            p.x2 = coord(rng);
        }
        return pts;
    };
    auto sensors = draw(cfg.n_sensors);
    auto tests = draw(cfg.n_test_points);
    return draw_scene(cfg, rng, std::move(sensors), std::move(tests));
}

/// Runs every configured method on one trial and records posteriors and true capacities.
inline TrialOutcome simulate_trial(const SimConfig& cfg, std::size_t trial_index) {
    auto rng = trial_stream(cfg.master_seed, trial_index);
    const TrialScene scene = draw_area_scene(cfg, rng);
    const std::size_t n = scene.sensors.size();

    TrialOutcome out;
    out.trial_index = trial_index;
    out.predictions.reserve(cfg.methods.size() * scene.test_points.size());
    for (Method method : cfg.methods) {
        std::optional<FittedModel> model;
        if (method != Method::PathLoss) model = fit(method, scene.dataset, cfg.channel, cfg.hyper, cfg.noise, cfg.nigp);
        for (std::size_t t = 0; t < scene.test_points.size(); ++t) {
            const Point2& x = scene.test_points[t];
            PointPrediction p;
            p.method = method;
            p.test_point = x;
            p.posterior = model ? predict(*model, x) : pathloss_posterior(cfg.channel, x);
            p.true_capacity = capacity(received_power(cfg.channel, x, scene.shadow[n + t]), cfg.channel.n0);
            out.predictions.push_back(p);
        }
    }
    return out;
}

inline TrialRecord make_record(std::size_t trial_index, const PointPrediction& p, double n0, const RateConfig& rate_cfg) {
    TrialRecord r;
    r.trial_index = trial_index;
    r.method = p.method;
    r.test_point = p.test_point;
    r.predicted_rate = decide(p.posterior, n0, rate_cfg).rate;
    r.true_capacity = p.true_capacity;
    r.outage = r.predicted_rate > r.true_capacity;
    r.received_rate = r.outage ? 0.0 : r.predicted_rate;
    return r;
}

inline std::vector<TrialRecord> to_records(const TrialOutcome& outcome, double n0, const RateConfig& rate_cfg) {
    std::vector<TrialRecord> records;
    records.reserve(outcome.predictions.size());
    for (const auto& p : outcome.predictions) records.push_back(make_record(outcome.trial_index, p, n0, rate_cfg));
    return records;
}

/// Margin-overridden rate configs per method; methods absent from the map use `base`.
using MarginMap = std::map<Method, double>;

inline std::vector<TrialRecord> to_records(const std::vector<TrialOutcome>& outcomes, double n0,
                                           const RateConfig& base, const MarginMap& margins = {}) {
    std::vector<TrialRecord> records;
    for (const auto& o : outcomes) {
        for (const auto& p : o.predictions) {
            RateConfig rc = base;
            if (auto it = margins.find(p.method); it != margins.end()) rc.sigma_delta = it->second;
            records.push_back(make_record(o.trial_index, p, n0, rc));
        }
    }
    return records;
}

inline std::vector<TrialRecord> run_trial(const SimConfig& cfg, std::size_t trial_index) {
    return to_records(simulate_trial(cfg, trial_index), cfg.channel.n0, cfg.rate_cfg);
}

/// Runs trials [0, n_trials) on `threads` workers; output is in trial order.
inline Batch run_batch(const SimConfig& cfg, unsigned threads = 1) {
    validate(cfg);
    const auto n = static_cast<std::size_t>(cfg.n_trials);
    std::vector<std::optional<TrialOutcome>> slots(n);
    std::vector<std::string> errors(n);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                slots[i] = simulate_trial(cfg, i);
            } catch (const DomainError& e) {
                errors[i] = e.what();
            } catch (const NumericalError& e) {
                errors[i] = e.what();
            }
        }
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    Batch batch;
    batch.outcomes.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (slots[i]) {
            batch.outcomes.push_back(std::move(*slots[i]));
        } else {
            batch.aborted.push_back(i);
            batch.abort_reasons.push_back(std::move(errors[i]));
        }
    }
    return batch;
}

/// Throws AbortThresholdExceeded when more than 0.1% of trials failed.
inline void check_aborts(const Batch& batch, int n_trials) {
    if (static_cast<double>(batch.aborted.size()) > kMaxAbortFraction * n_trials) {
        std::ostringstream msg;
        msg << batch.aborted.size() << " of " << n_trials << " trials aborted (first: trial " << batch.aborted.front()
            << ": " << batch.abort_reasons.front() << ")";
        throw AbortThresholdExceeded(msg.str());
    }
}

/// 95% Wilson score interval for k successes in n trials.
inline std::pair<double, double> wilson_interval(std::size_t k, std::size_t n) {
    constexpr double z = 1.959963984540054;
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double denom = 1.0 + z * z / nn;
    const double center = (p + z * z / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

inline OutageEstimate make_estimate(Method method, std::size_t outages, std::size_t samples) {
    const auto [lo, hi] = wilson_interval(outages, samples);
    const double p = static_cast<double>(outages) / static_cast<double>(samples);
    return {method, p, std::min(lo, p), std::max(hi, p), samples};
}

/// Per-method outage frequency with Wilson intervals, in canonical method order.
inline std::vector<OutageEstimate> estimate_outage(const std::vector<TrialRecord>& records) {
    std::map<Method, std::pair<std::size_t, std::size_t>> counts;  // outages, samples
    for (const auto& r : records) {
        auto& c = counts[r.method];
        c.first += r.outage ? 1 : 0;
        c.second += 1;
    }
    std::vector<OutageEstimate> out;
    for (Method m : kAllMethods) {
        auto it = counts.find(m);
        if (it == counts.end() || it->second.second == 0) continue;
        out.push_back(make_estimate(m, it->second.first, it->second.second));
    }
    return out;
}

/// Outage count of one method over fixed trials at a given margin.
inline std::pair<std::size_t, std::size_t> count_outages(const std::vector<TrialOutcome>& outcomes, Method method,
                                                         double n0, const RateConfig& rate_cfg) {
    std::size_t k = 0;
    std::size_t n = 0;
    for (const auto& o : outcomes) {
        for (const auto& p : o.predictions) {
            if (p.method != method) continue;
            ++n;
            if (decide(p.posterior, n0, rate_cfg).rate > p.true_capacity) ++k;
        }
    }
    return {k, n};
}

inline OutageEstimate estimate_outage(const std::vector<TrialOutcome>& outcomes, Method method, double n0,
                                      const RateConfig& rate_cfg) {
    const auto [k, n] = count_outages(outcomes, method, n0, rate_cfg);
    if (n == 0) throw DomainError("estimate_outage: no samples for method " + std::string(method_name(method)));
    return make_estimate(method, k, n);
}

/// Outage per method for each sigma_x, reusing the same trial streams at every grid point.
inline std::vector<SweepRow> sweep_sigma_x(const SimConfig& cfg, const std::vector<double>& sigma_x_grid,
                                           unsigned threads = 1, std::size_t* aborted_total = nullptr) {
    if (sigma_x_grid.empty()) throw ConfigError("sweep_sigma_x: empty sigma_x grid");
    std::vector<SweepRow> rows;
    for (double sx : sigma_x_grid) {
        SimConfig c = cfg;
        c.noise.sigma_x = sx;
        const Batch batch = run_batch(c, threads);
        check_aborts(batch, c.n_trials);
        if (aborted_total) *aborted_total += batch.aborted.size();
        for (Method m : kAllMethods) {
            if (std::find(c.methods.begin(), c.methods.end(), m) == c.methods.end()) continue;
            rows.push_back({sx, estimate_outage(batch.outcomes, m, c.channel.n0, c.rate_cfg)});
        }
    }
    return rows;
}

inline constexpr double kMarginStep = 0.01;

/// Smallest margin on the 0.01 dB grid within [low, high] whose outage over
/// `outcomes` is at most `target`. Per-sample rates fall monotonically with
/// the margin, so the outage count is monotone and bisection is exact.
inline double find_required_margin(const std::vector<TrialOutcome>& outcomes, Method method, double n0,
                                   double p_out, double target, double low, double high) {
    if (!(low >= 0.0) || !(high >= low)) throw DomainError("find_required_margin: invalid bracket");
    auto lo = static_cast<long>(std::ceil(low / kMarginStep - 1e-9));
    auto hi = static_cast<long>(std::floor(high / kMarginStep + 1e-9));
    auto outage_at = [&](long idx) {
        const auto [k, n] = count_outages(outcomes, method, n0, RateConfig{p_out, static_cast<double>(idx) * kMarginStep});
        if (n == 0) throw DomainError("find_required_margin: no samples for method " + std::string(method_name(method)));
        return static_cast<double>(k) / static_cast<double>(n);
    };
    if (outage_at(hi) > target) {
        std::ostringstream msg;
        msg << "find_required_margin: outage at upper bracket " << high << " dB still exceeds target " << target
            << "; widen the bracket";
        throw DomainError(msg.str());
    }
    if (outage_at(lo) <= target) return static_cast<double>(lo) * kMarginStep;
    while (hi - lo > 1) {
        const long mid = lo + (hi - lo) / 2;
        if (outage_at(mid) <= target) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return static_cast<double>(hi) * kMarginStep;
}

/// Runs cfg.n_trials trials and searches the margin for one method on them.
inline double find_required_margin(const SimConfig& cfg, Method method, double target, double low, double high,
                                   unsigned threads = 1) {
    SimConfig c = cfg;
    c.methods = {method};
    const Batch batch = run_batch(c, threads);
    check_aborts(batch, c.n_trials);
    return find_required_margin(batch.outcomes, method, c.channel.n0, c.rate_cfg.p_out, target, low, high);
}

/// Empirical CDF of received rate per method at each grid value; outages count as rate 0.
inline std::vector<CdfRow> rate_cdf(const std::vector<TrialRecord>& records, const std::vector<double>& grid) {
    if (records.empty()) throw DomainError("rate_cdf: no records");
    std::map<Method, std::vector<double>> rates;
    for (const auto& r : records) rates[r.method].push_back(r.received_rate);
    std::vector<CdfRow> out;
    for (Method m : kAllMethods) {
        auto it = rates.find(m);
        if (it == rates.end()) continue;
        auto& v = it->second;
        std::sort(v.begin(), v.end());
        const double n = static_cast<double>(v.size());
        for (double g : grid) {
            const auto count = std::upper_bound(v.begin(), v.end(), g) - v.begin();
            out.push_back({m, g, static_cast<double>(count) / n});
        }
    }
    return out;
}

/// One-dimensional profile: sensors and an evaluation grid on the line
/// x2 = area_side / 2, location noise on x1 only. Rows carry mean +- 1.96 std
/// and the true received power.
inline std::vector<ProfileRow> demo_1d(const SimConfig& cfg) {
    validate(cfg);
    SimConfig c = cfg;
    c.noise.axes = NoiseAxes::FirstOnly;
    const double line = c.area_side / 2.0;

    auto rng = trial_stream(c.master_seed, 0);
    std::uniform_real_distribution<double> coord(0.0, c.area_side);
    std::vector<Point2> sensors(static_cast<std::size_t>(c.n_sensors));
    for (auto& p : sensors) p = {coord(rng), line};
    std::vector<Point2> grid(static_cast<std::size_t>(c.demo_grid_points));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid[i] = {c.area_side * static_cast<double>(i) / static_cast<double>(grid.size() - 1), line};
    }
    const TrialScene scene = draw_scene(c, rng, std::move(sensors), grid);
    const std::size_t n = scene.sensors.size();

    constexpr double z95 = 1.96;
    std::vector<ProfileRow> rows;
    for (Method method : c.methods) {
        std::optional<FittedModel> model;
        if (method != Method::PathLoss) model = fit(method, scene.dataset, c.channel, c.hyper, c.noise, c.nigp);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const Posterior post = model ? predict(*model, grid[g]) : pathloss_posterior(c.channel, grid[g]);
            rows.push_back({method, grid[g].x1, post.mean, post.mean - z95 * post.std, post.mean + z95 * post.std,
                            received_power(c.channel, grid[g], scene.shadow[n + g])});
        }
    }
    return rows;
}

}  // namespace nigprate
