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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "nigprate/channel_model.hpp"

namespace nigprate {

/// Exponential kernel hyperparameters: amplitude (dB), length scale L (m), smoothing constant (m).
struct KernelHyper {
    double sigma_k = 6.0;
    double ell = 50.0 / std::numbers::ln2;
    double d_c = 1e-3;

    /// Hyperparameters whose kernel reproduces the shadowing covariance of `channel`.
    static KernelHyper matched(const ChannelParams& channel, double d_c = 1e-3) {
        return {channel.sigma_db, channel.d_cor / std::numbers::ln2, d_c};
    }

    friend bool operator==(const KernelHyper&, const KernelHyper&) = default;
};

struct Grad2 {
    double g1 = 0.0;
    double g2 = 0.0;
};

struct Hess2 {
    double h11 = 0.0;
    double h12 = 0.0;
    double h21 = 0.0;
    double h22 = 0.0;
};

/// Which coordinates carry location noise. The 1-D profile demo perturbs x1 only.
enum class NoiseAxes { Both, FirstOnly };

/// Location and observation noise.
///
/// By default `sigma_x` is the per-axis location-noise variance (m^2), i.e.
/// Sigma_x = diag(sigma_x, sigma_x); the default scenario's outage levels and
/// margins are calibrated under this convention. With `sigma_x_is_variance` off it
/// is a standard deviation in meters and Sigma_x = diag(sigma_x^2, sigma_x^2).
struct NoiseParams {
    double sigma_x = 0.0;
    double sigma_y = 0.0;  // dB
    bool sigma_x_is_variance = true;
    NoiseAxes axes = NoiseAxes::Both;

    /// Diagonal of the location-noise covariance Sigma_x.
    std::array<double, 2> location_variance() const {
        const double v = sigma_x_is_variance ? sigma_x : sigma_x * sigma_x;
        return {v, axes == NoiseAxes::Both ? v : 0.0};
    }

    friend bool operator==(const NoiseParams&, const NoiseParams&) = default;
};

/// Reported sensing data: noisy coordinates and observed power (dBm).
struct SensingDataset {
    std::vector<Point2> noisy_locations;
    std::vector<double> observations;

    std::size_t size() const { return noisy_locations.size(); }
};

enum class Method { PureGP, NIGP1, NIGP2, PathLoss };

inline constexpr std::array<Method, 4> kAllMethods{Method::PureGP, Method::NIGP1, Method::NIGP2, Method::PathLoss};

inline std::string_view method_name(Method m) {
    switch (m) {
        case Method::PureGP: return "pure_gp";
        case Method::NIGP1: return "nigp1";
        case Method::NIGP2: return "nigp2";
        case Method::PathLoss: return "path_loss";
    }
    return "unknown";
}

inline std::optional<Method> parse_method(std::string_view name) {
    for (Method m : kAllMethods) {
        if (method_name(m) == name) return m;
    }
    return std::nullopt;
}

/// Knobs of the noisy-input corrections beyond the default single pass.
struct NigpOptions {
    int correction_passes = 1;
    bool include_mean_hessian = false;
    bool second_order_mean_shift = false;
    /// Smoothing constant (m) for the mean-surface derivatives; <= 0 means use the kernel's d_c.
    double derivative_d_c = 1.25;

    friend bool operator==(const NigpOptions&, const NigpOptions&) = default;
};

/// Trained GP state. Immutable once returned by a fit_* call.
struct FittedModel {
    Method method = Method::PureGP;
    SensingDataset dataset;
    ChannelParams channel;
    KernelHyper hyper;
    NoiseParams noise;
    /// Cholesky factor of the effective covariance K' (+ corrections).
    Eigen::LLT<Eigen::MatrixXd> factor;
    Eigen::VectorXd alpha;
    /// sigma_y^2 + factorization jitter actually added to diag(K).
    double base_diagonal = 0.0;
    /// Per-sample first-order correction d^T Sigma_x d (zero for PureGP).
    Eigen::VectorXd first_order_correction;
    /// Per-sample second-order correction 0.5*tr((H Sigma_x)^2) (zero unless NIGP2).
    Eigen::VectorXd second_order_correction;
};

/// Predictive distribution of received power at one location.
struct Posterior {
    double mean = 0.0;  // dBm
    double std = 0.0;   // dB
};

}  // namespace nigprate
