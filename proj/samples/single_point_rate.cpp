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

// Draws one sensing campaign, fits every estimator and prints the rate each
// one would select at a single receiver location.

#include <iomanip>
#include <iostream>

#include "nigprate/nigprate.hpp"

int main() {
    using namespace nigprate;

    SimConfig cfg;
    cfg.noise.sigma_x = 10.0;
    auto rng = trial_stream(cfg.master_seed, 0);
    const TrialScene scene = draw_area_scene(cfg, rng);

    const Point2 receiver = scene.test_points.front();
    const double truth = capacity(received_power(cfg.channel, receiver, scene.shadow[scene.sensors.size()]),
                                  cfg.channel.n0);
    std::cout << std::fixed << std::setprecision(3) << "receiver (" << receiver.x1 << ", " << receiver.x2
              << "), true capacity " << truth << " bps/Hz\n";

    for (Method m : kAllMethods) {
        RateDecision d;
        Posterior post;
        if (m == Method::PathLoss) {
            post = pathloss_posterior(cfg.channel, receiver);
            d = pathloss_rate(cfg.channel, receiver, cfg.rate_cfg);
        } else {
            const FittedModel model = fit(m, scene.dataset, cfg.channel, cfg.hyper, cfg.noise, cfg.nigp);
            post = predict(model, receiver);
            d = select_rate(model, receiver, cfg.channel.n0, cfg.rate_cfg);
        }
        std::cout << std::setw(10) << method_name(m) << "  mean " << post.mean << " dBm  std " << post.std
                  << " dB  rate " << d.rate << " bps/Hz" << (d.rate > truth ? "  (outage)" : "") << '\n';
    }
}
