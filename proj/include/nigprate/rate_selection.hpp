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

#include <array>
#include <cmath>
#include <numbers>

#include "nigprate/channel_model.hpp"
#include "nigprate/errors.hpp"
#include "nigprate/gp_regression.hpp"
#include "nigprate/types.hpp"

namespace nigprate {

struct RateConfig {
    double p_out = 1e-3;
    double sigma_delta = 0.0;  // dB added to the predictive std

    friend bool operator==(const RateConfig&, const RateConfig&) = default;
};

struct RateDecision {
    double gamma_db = 0.0;  // outage SNR
    double rate = 0.0;      // bps/Hz
};

namespace detail {

// Lower-tail standard normal quantile (P. J. Acklam), relative error < 1.2e-9.
inline double normal_quantile_approx(double p) {
    constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                      1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                      6.680131188771972e+01, -1.328068155288572e+01};
    constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                      -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                      3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace detail

/// Inverse error function on (-1, 1).
///
/// Seeded from a normal-quantile rational approximation and refined by one
/// Newton step on erfc, which keeps full accuracy in both tails.
inline double erfinv(double u) {
    if (!(std::abs(u) < 1.0)) {
        throw DomainError("erfinv: argument must lie strictly inside (-1, 1)");
    }
    if (u == 0.0) return 0.0;
    const double a = std::abs(u);
    const double tail = 1.0 - a;  // erfc target
    double x = -detail::normal_quantile_approx(0.5 * tail) / std::numbers::sqrt2;
    const double slope = 2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x);
    x += (std::erfc(x) - tail) / slope;
    return u < 0.0 ? -x : x;
}

/// Outage SNR in dB: the p_out quantile of P_rx - N0 under the (margin-inflated) posterior.
inline double outage_snr(const Posterior& posterior, double n0, const RateConfig& cfg) {
    if (!(cfg.p_out > 0.0 && cfg.p_out < 1.0)) throw DomainError("outage_snr: p_out must lie in (0, 1)");
    return posterior.mean - n0 +
           std::numbers::sqrt2 * (posterior.std + cfg.sigma_delta) * erfinv(2.0 * cfg.p_out - 1.0);
}

inline double rate_from_snr(double gamma_db) {
    return std::log1p(std::pow(10.0, gamma_db / 10.0)) / std::numbers::ln2;
}

/// Inverse of rate_from_snr: 10*log10(2^R - 1).
inline double snr_from_rate(double rate) {
    return 10.0 * std::log10(std::expm1(rate * std::numbers::ln2));
}

inline RateDecision decide(const Posterior& posterior, double n0, const RateConfig& cfg) {
    const double gamma = outage_snr(posterior, n0, cfg);
    return {gamma, rate_from_snr(gamma)};
}

inline RateDecision select_rate(const FittedModel& model, const Point2& x_star, double n0, const RateConfig& cfg) {
    return decide(predict(model, x_star), n0, cfg);
}

/// Baseline that ignores the data: prior mean with the shadowing std as uncertainty.
inline Posterior pathloss_posterior(const ChannelParams& channel, const Point2& x_star) {
    return {path_loss_mean(channel, x_star), channel.sigma_db};
}

inline RateDecision pathloss_rate(const ChannelParams& channel, const Point2& x_star, const RateConfig& cfg) {
    return decide(pathloss_posterior(channel, x_star), channel.n0, cfg);
}

}  // namespace nigprate
