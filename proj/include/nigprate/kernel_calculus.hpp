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

// Smoothed exponential kernel k(x, xi) = sigma_k^2 * exp(-r_c / L) with
// r_c = sqrt(d(x, xi)^2 + d_c^2), and the spatial derivatives of the GP
// posterior mean that drive the noisy-input corrections.
//
// With this r_c the gradient -k * (x - xi) / (L * r_c) and the Hessian
//   k * [-delta_mn / (L r_c) + dx_m dx_n / r_c^2 * (1/L^2 + 1/(L r_c))]
// are exact derivatives of the kernel, and both stay finite at x = xi.

#include <cmath>
#include <numbers>
#include <span>

#include <Eigen/Core>

#include "nigprate/channel_model.hpp"
#include "nigprate/types.hpp"

namespace nigprate {

inline double smoothed_distance(const Point2& x, const Point2& xi, double d_c) {
    const double dx1 = x.x1 - xi.x1;
    const double dx2 = x.x2 - xi.x2;
    return std::sqrt(dx1 * dx1 + dx2 * dx2 + d_c * d_c);
}

inline double kernel(const Point2& xi, const Point2& xj, const KernelHyper& hyper) {
    const double r = smoothed_distance(xi, xj, hyper.d_c);
    return hyper.sigma_k * hyper.sigma_k * std::exp(-r / hyper.ell);
}

inline Eigen::MatrixXd kernel_matrix(std::span<const Point2> points, const KernelHyper& hyper) {
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = kernel(points[i], points[i], hyper);
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = kernel(points[i], points[j], hyper);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

/// k(X, x) for every training point in X.
inline Eigen::VectorXd kernel_vector(std::span<const Point2> points, const Point2& x, const KernelHyper& hyper) {
    Eigen::VectorXd k(static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) k(static_cast<Eigen::Index>(i)) = kernel(points[i], x, hyper);
    return k;
}

/// Gradient of kernel(., xi) evaluated at x.
inline Grad2 kernel_grad(const Point2& x, const Point2& xi, const KernelHyper& hyper) {
    const double r = smoothed_distance(x, xi, hyper.d_c);
    const double k = hyper.sigma_k * hyper.sigma_k * std::exp(-r / hyper.ell);
    const double scale = -k / (hyper.ell * r);
    return {scale * (x.x1 - xi.x1), scale * (x.x2 - xi.x2)};
}

/// Hessian of kernel(., xi) evaluated at x.
inline Hess2 kernel_hess(const Point2& x, const Point2& xi, const KernelHyper& hyper) {
    const double r = smoothed_distance(x, xi, hyper.d_c);
    const double l = hyper.ell;
    const double k = hyper.sigma_k * hyper.sigma_k * std::exp(-r / l);
    const double diag = -1.0 / (l * r);
    const double outer = (1.0 / (l * l) + 1.0 / (l * r)) / (r * r);
    const double d1 = x.x1 - xi.x1;
    const double d2 = x.x2 - xi.x2;
    const double off = k * outer * d1 * d2;
    return {k * (diag + outer * d1 * d1), off, off, k * (diag + outer * d2 * d2)};
}

/// Gradient of the log-distance path-loss mean.
inline Grad2 path_loss_grad(const ChannelParams& channel, const Point2& x) {
    const double d1 = x.x1 - channel.x_tx.x1;
    const double d2 = x.x2 - channel.x_tx.x2;
    const double d_sq = d1 * d1 + d2 * d2;
    if (!(d_sq > 0.0)) {
        throw DomainError("path_loss_grad: point coincides with the transmitter");
    }
    const double c = -10.0 * channel.eta / std::numbers::ln10 / d_sq;
    return {c * d1, c * d2};
}

inline Hess2 path_loss_hess(const ChannelParams& channel, const Point2& x) {
    const double d1 = x.x1 - channel.x_tx.x1;
    const double d2 = x.x2 - channel.x_tx.x2;
    const double d_sq = d1 * d1 + d2 * d2;
    if (!(d_sq > 0.0)) {
        throw DomainError("path_loss_hess: point coincides with the transmitter");
    }
    const double c = -10.0 * channel.eta / std::numbers::ln10;
    const double inv = 1.0 / d_sq;
    const double off = c * (-2.0 * d1 * d2 * inv * inv);
    return {c * (inv - 2.0 * d1 * d1 * inv * inv), off, off, c * (inv - 2.0 * d2 * d2 * inv * inv)};
}

/// Gradient of the posterior mean P(x) + sum_i alpha_i k(x, x_i).
inline Grad2 posterior_mean_grad(const FittedModel& model, const Point2& x) {
    Grad2 g = path_loss_grad(model.channel, x);
    const auto& pts = model.dataset.noisy_locations;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double a = model.alpha(static_cast<Eigen::Index>(i));
        const Grad2 gk = kernel_grad(x, pts[i], model.hyper);
        g.g1 += a * gk.g1;
        g.g2 += a * gk.g2;
    }
    return g;
}

/// Hessian of the kernel-sum part of the posterior mean; the path-loss
/// curvature is added only when `include_mean_hessian` is set.
inline Hess2 posterior_mean_hess(const FittedModel& model, const Point2& x, bool include_mean_hessian = false) {
    Hess2 h;
    if (include_mean_hessian) h = path_loss_hess(model.channel, x);
    const auto& pts = model.dataset.noisy_locations;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double a = model.alpha(static_cast<Eigen::Index>(i));
        const Hess2 hk = kernel_hess(x, pts[i], model.hyper);
        h.h11 += a * hk.h11;
        h.h12 += a * hk.h12;
        h.h21 += a * hk.h21;
        h.h22 += a * hk.h22;
    }
    return h;
}

}  // namespace nigprate
