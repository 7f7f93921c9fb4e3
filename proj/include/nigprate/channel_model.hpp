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

#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "nigprate/errors.hpp"

namespace nigprate {

/// Planar coordinate in meters.
struct Point2 {
    double x1 = 0.0;
    double x2 = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(const Point2& a, const Point2& b) {
    return std::hypot(a.x1 - b.x1, a.x2 - b.x2);
}

/// Transmitter and propagation environment. Powers in dBm, distances in meters.
struct ChannelParams {
    double p_tx = 10.0;
    Point2 x_tx{-10.0, 150.0};
    double eta = 3.0;
    double sigma_db = 6.0;
    double d_cor = 50.0;
    double n0 = -174.0;

    friend bool operator==(const ChannelParams&, const ChannelParams&) = default;
};

/// Shadowing realization in dB, one value per point.
struct ShadowField {
    std::vector<Point2> points;
    std::vector<double> values;
};

/// Deterministic mean received power P_tx - 10*eta*log10(d).
inline double path_loss_mean(const ChannelParams& params, const Point2& x) {
    const double d = distance(params.x_tx, x);
    if (!(d > 0.0)) {
        throw DomainError("path_loss_mean: receiver coincides with the transmitter");
    }
    return params.p_tx - 10.0 * params.eta * std::log10(d);
}

/// Gudmundson covariance: halves every correlation distance.
inline double shadow_cov(double d, double sigma_db, double d_cor) {
    return sigma_db * sigma_db * std::exp(-(d / d_cor) * std::numbers::ln2);
}

inline double received_power(const ChannelParams& params, const Point2& x, double shadow_value) {
    return path_loss_mean(params, x) + shadow_value;
}

/// Shannon capacity in bps/Hz for a received power and noise floor in dBm.
inline double capacity(double p_rx, double n0) {
    const double snr = std::pow(10.0, (p_rx - n0) / 10.0);
    return std::log2(1.0 + snr);
}

namespace detail {

inline constexpr double kShadowJitter = 1e-9;
inline constexpr int kJitterRetries = 3;

inline Eigen::MatrixXd shadow_covariance(std::span<const Point2> points, const ChannelParams& params) {
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        cov(i, i) = shadow_cov(0.0, params.sigma_db, params.d_cor);
        for (Eigen::Index j = 0; j < i; ++j) {
            const double c = shadow_cov(distance(points[i], points[j]), params.sigma_db, params.d_cor);
            cov(i, j) = c;
            cov(j, i) = c;
        }
    }
    return cov;
}

}  // namespace detail

/// One joint draw of zero-mean shadowing at all `points`.
///
/// The covariance is regularized with 1e-9*sigma_db^2 on the diagonal; on a
/// failed Cholesky the jitter grows tenfold, up to three more attempts.
template <class Rng>
ShadowField sample_shadow_field(std::span<const Point2> points, const ChannelParams& params, Rng& rng) {
    if (points.empty()) {
        throw DomainError("sample_shadow_field: empty point set");
    }
    const auto n = static_cast<Eigen::Index>(points.size());
    ShadowField field{{points.begin(), points.end()}, std::vector<double>(points.size(), 0.0)};

    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
    if (params.sigma_db == 0.0) {
        return field;
    }

    const Eigen::MatrixXd cov = detail::shadow_covariance(points, params);
    const double variance = params.sigma_db * params.sigma_db;
    double jitter = detail::kShadowJitter * variance;
    for (int attempt = 0; attempt <= detail::kJitterRetries; ++attempt, jitter *= 10.0) {
        Eigen::MatrixXd regularized = cov;
        regularized.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(regularized);
        if (llt.info() == Eigen::Success) {
            const Eigen::VectorXd w = llt.matrixL() * z;
            for (Eigen::Index i = 0; i < n; ++i) field.values[static_cast<std::size_t>(i)] = w(i);
            return field;
        }
    }

    const Eigen::VectorXd eig = cov.selfadjointView<Eigen::Lower>().eigenvalues();
    std::ostringstream msg;
    msg << "sample_shadow_field: covariance factorization failed for " << n << " points (min eigenvalue "
        << eig.minCoeff() << ", max eigenvalue " << eig.maxCoeff() << ", last jitter " << jitter / 10.0 << ")";
    throw NumericalError(msg.str());
}

}  // namespace nigprate
