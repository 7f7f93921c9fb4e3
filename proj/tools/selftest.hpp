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

// Fast invariant checks bundled into the CLI (`nigprate selftest`).

#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "nigprate/nigprate.hpp"

namespace nigprate::tools {

struct SelftestCase {
    std::string name;
    std::function<bool()> check;
};

inline std::vector<SelftestCase> selftest_cases() {
    std::vector<SelftestCase> cases;

    cases.push_back({"erfinv round trip", [] {
        for (int i = 0; i <= 2000; ++i) {
            const double u = -(1.0 - 1e-12) + 2.0 * (1.0 - 1e-12) * i / 2000.0;
            if (std::abs(std::erf(erfinv(u)) - u) > 1e-9) return false;
        }
        return true;
    }});

    cases.push_back({"kernel derivatives vs finite differences", [] {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> c(0.0, 300.0);
        const KernelHyper h = KernelHyper::matched(ChannelParams{});
        for (int t = 0; t < 20; ++t) {
            const Point2 x{c(rng), c(rng)};
            const Point2 xi{c(rng), c(rng)};
            const double s = 1e-4;
            const Grad2 g = kernel_grad(x, xi, h);
            const double f1 = (kernel({x.x1 + s, x.x2}, xi, h) - kernel({x.x1 - s, x.x2}, xi, h)) / (2 * s);
            const double f2 = (kernel({x.x1, x.x2 + s}, xi, h) - kernel({x.x1, x.x2 - s}, xi, h)) / (2 * s);
            const double scale = std::max(std::hypot(g.g1, g.g2), 1e-300);
            if (std::hypot(g.g1 - f1, g.g2 - f2) / scale > 1e-6) return false;
        }
        return true;
    }});

    cases.push_back({"predictive variance ordering pure_gp <= nigp1 <= nigp2", [] {
        SimConfig cfg;
        cfg.noise.sigma_x = 10.0;
        cfg.n_sensors = 30;
        for (std::size_t trial = 0; trial < 10; ++trial) {
            auto rng = trial_stream(99, trial);
            const TrialScene scene = draw_area_scene(cfg, rng);
            const auto eg = fit_pure(scene.dataset, cfg.channel, cfg.hyper, cfg.noise);
            const auto ng1 = fit_nigp1(scene.dataset, cfg.channel, cfg.hyper, cfg.noise, cfg.nigp);
            const auto ng2 = fit_nigp2(scene.dataset, cfg.channel, cfg.hyper, cfg.noise, cfg.nigp);
            for (const auto& x : scene.test_points) {
                const double v0 = predict(eg, x).std;
                const double v1 = predict(ng1, x).std;
                const double v2 = predict(ng2, x).std;
                if (v1 < v0 - 1e-9 || v2 < v1 - 1e-9) return false;
            }
        }
        return true;
    }});

    cases.push_back({"trial determinism", [] {
        SimConfig cfg;
        cfg.noise.sigma_x = 10.0;
        cfg.n_sensors = 20;
        const auto a = run_trial(cfg, 3);
        const auto b = run_trial(cfg, 3);
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i].predicted_rate != b[i].predicted_rate || a[i].true_capacity != b[i].true_capacity) return false;
        }
        return true;
    }});

    cases.push_back({"Gaussian-oracle outage calibration", [] {
        std::mt19937_64 rng(5);
        std::normal_distribution<double> normal(0.0, 1.0);
        const Posterior post{-60.0, 3.0};
        const RateConfig rc{1e-2, 0.0};
        const double rate = decide(post, -174.0, rc).rate;
        const int draws = 200000;
        int outages = 0;
        for (int i = 0; i < draws; ++i) {
            if (rate > capacity(post.mean + post.std * normal(rng), -174.0)) ++outages;
        }
        const double p = static_cast<double>(outages) / draws;
        const double se = std::sqrt(rc.p_out * (1 - rc.p_out) / draws);
        return std::abs(p - rc.p_out) <= 4 * se;
    }});

    return cases;
}

/// Runs every case, printing one PASS/FAIL line each. Returns true when all pass.
inline bool run_selftest(std::ostream& out) {
    bool ok = true;
    for (const auto& c : selftest_cases()) {
        bool passed = false;
        try {
            passed = c.check();
        } catch (const std::exception& e) {
            out << "  (exception: " << e.what() << ")\n";
        }
        out << (passed ? "PASS  " : "FAIL  ") << c.name << '\n';
        ok = ok && passed;
    }
    return ok;
}

}  // namespace nigprate::tools
