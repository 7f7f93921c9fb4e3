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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "nigprate/channel_model.hpp"
#include "nigprate/errors.hpp"
#include "nigprate/kernel_calculus.hpp"
#include "nigprate/types.hpp"

namespace nigprate {

namespace detail {

inline constexpr double kFitJitter = 1e-8;
inline constexpr int kFitJitterRetries = 3;

inline std::atomic<std::size_t>& variance_clamp_counter() {
    static std::atomic<std::size_t> counter{0};
    return counter;
}

inline void validate(const SensingDataset& dataset, const NoiseParams& noise) {
    if (dataset.noisy_locations.empty()) throw DomainError("dataset: no samples");
    if (dataset.noisy_locations.size() != dataset.observations.size()) {
        throw DomainError("dataset: locations and observations differ in length");
    }
    if (noise.sigma_x < 0.0 || noise.sigma_y < 0.0) throw DomainError("noise: negative standard deviation");
}

inline Eigen::VectorXd prior_residual(const SensingDataset& dataset, const ChannelParams& channel) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(dataset.size()));
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        r(static_cast<Eigen::Index>(i)) = dataset.observations[i] - path_loss_mean(channel, dataset.noisy_locations[i]);
    }
    return r;
}

/// Factorizes K + diag(extra) + (sigma_y^2 + jitter) I and solves for alpha.
inline void factorize(FittedModel& model, const Eigen::MatrixXd& k, const Eigen::VectorXd& extra,
                      const Eigen::VectorXd& residual) {
    const double amp = model.hyper.sigma_k * model.hyper.sigma_k;
    const double noise_var = model.noise.sigma_y * model.noise.sigma_y;
    double jitter = kFitJitter * amp;
    for (int attempt = 0; attempt <= kFitJitterRetries; ++attempt, jitter *= 10.0) {
        Eigen::MatrixXd eff = k;
        eff.diagonal() += extra;
        eff.diagonal().array() += noise_var + jitter;
        model.factor.compute(eff);
        if (model.factor.info() == Eigen::Success) {
            model.base_diagonal = noise_var + jitter;
            model.alpha = model.factor.solve(residual);
            return;
        }
    }
    std::ostringstream msg;
    msg << "GP fit: effective covariance not positive definite for " << k.rows() << " samples (last jitter "
        << jitter / 10.0 << ")";
    throw NumericalError(msg.str());
}

/// Per-sample noisy-input corrections derived from the mean surface of `reference`.
struct Corrections {
    Eigen::VectorXd first;
    Eigen::VectorXd second;
    Eigen::VectorXd mean_shift;
};

inline Corrections corrections(const FittedModel& reference, const NoiseParams& noise, bool second_order,
                               const NigpOptions& options) {
    const auto n = static_cast<Eigen::Index>(reference.dataset.size());
    const auto [s1, s2] = noise.location_variance();
    FittedModel smoothed_view;
    const FittedModel* surface = &reference;
    if (options.derivative_d_c > 0.0 && options.derivative_d_c != reference.hyper.d_c) {
        smoothed_view = reference;
        smoothed_view.hyper.d_c = options.derivative_d_c;
        surface = &smoothed_view;
    }
    Corrections c{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        const Point2& x = reference.dataset.noisy_locations[static_cast<std::size_t>(i)];
        const Grad2 g = posterior_mean_grad(*surface, x);
        c.first(i) = g.g1 * g.g1 * s1 + g.g2 * g.g2 * s2;
        if (second_order) {
            const Hess2 h = posterior_mean_hess(*surface, x, options.include_mean_hessian);
            // tr((H S)^2) for S = diag(s1, s2)
            const double tr_sq = h.h11 * h.h11 * s1 * s1 + 2.0 * h.h12 * h.h21 * s1 * s2 + h.h22 * h.h22 * s2 * s2;
            c.second(i) = 0.5 * tr_sq;
            c.mean_shift(i) = 0.5 * (h.h11 * s1 + h.h22 * s2);
        }
    }
    return c;
}

inline FittedModel make_model(Method method, const SensingDataset& dataset, const ChannelParams& channel,
                              const KernelHyper& hyper, const NoiseParams& noise) {
    detail::validate(dataset, noise);
    FittedModel model;
    model.method = method;
    model.dataset = dataset;
    model.channel = channel;
    model.hyper = hyper;
    model.noise = noise;
    const auto n = static_cast<Eigen::Index>(dataset.size());
    model.first_order_correction = Eigen::VectorXd::Zero(n);
    model.second_order_correction = Eigen::VectorXd::Zero(n);
    return model;
}

inline FittedModel fit_noisy_input(Method method, const SensingDataset& dataset, const ChannelParams& channel,
                                   const KernelHyper& hyper, const NoiseParams& noise, const NigpOptions& options) {
    FittedModel model = make_model(Method::PureGP, dataset, channel, hyper, noise);
    const Eigen::MatrixXd k = kernel_matrix(dataset.noisy_locations, hyper);
    const Eigen::VectorXd residual = prior_residual(dataset, channel);
    const auto n = static_cast<Eigen::Index>(dataset.size());
    factorize(model, k, Eigen::VectorXd::Zero(n), residual);

    const bool second_order = method == Method::NIGP2;
    const int passes = std::max(1, options.correction_passes);
    for (int pass = 0; pass < passes; ++pass) {
        const Corrections c = corrections(model, noise, second_order, options);
        FittedModel next = make_model(method, dataset, channel, hyper, noise);
        next.first_order_correction = c.first;
        next.second_order_correction = c.second;
        const Eigen::VectorXd rhs =
            (second_order && options.second_order_mean_shift) ? Eigen::VectorXd(residual - c.mean_shift) : residual;
        factorize(next, k, c.first + c.second, rhs);
        model = std::move(next);
    }
    return model;
}

}  // namespace detail

/// Number of predictive variances clamped at zero with pre-clamp magnitude above 1e-8*sigma_k^2.
inline std::size_t variance_clamp_warnings() { return detail::variance_clamp_counter().load(); }

/// Pure GP: K' = K + sigma_y^2 I, alpha = K'^-1 (Y - P).
inline FittedModel fit_pure(const SensingDataset& dataset, const ChannelParams& channel, const KernelHyper& hyper,
                            const NoiseParams& noise) {
    FittedModel model = detail::make_model(Method::PureGP, dataset, channel, hyper, noise);
    const Eigen::MatrixXd k = kernel_matrix(dataset.noisy_locations, hyper);
    detail::factorize(model, k, Eigen::VectorXd::Zero(k.rows()), detail::prior_residual(dataset, channel));
    return model;
}

/// First-order noisy-input GP: adds grad^T Sigma_x grad of the pure-GP mean at each noisy input.
inline FittedModel fit_nigp1(const SensingDataset& dataset, const ChannelParams& channel, const KernelHyper& hyper,
                             const NoiseParams& noise, const NigpOptions& options = {}) {
    return detail::fit_noisy_input(Method::NIGP1, dataset, channel, hyper, noise, options);
}

/// Second-order noisy-input GP: first-order term plus 0.5*tr((H Sigma_x)^2).
inline FittedModel fit_nigp2(const SensingDataset& dataset, const ChannelParams& channel, const KernelHyper& hyper,
                             const NoiseParams& noise, const NigpOptions& options = {}) {
    return detail::fit_noisy_input(Method::NIGP2, dataset, channel, hyper, noise, options);
}

inline FittedModel fit(Method method, const SensingDataset& dataset, const ChannelParams& channel,
                       const KernelHyper& hyper, const NoiseParams& noise, const NigpOptions& options = {}) {
    switch (method) {
        case Method::PureGP: return fit_pure(dataset, channel, hyper, noise);
        case Method::NIGP1: return fit_nigp1(dataset, channel, hyper, noise, options);
        case Method::NIGP2: return fit_nigp2(dataset, channel, hyper, noise, options);
        case Method::PathLoss: break;
    }
    throw DomainError("fit: path-loss baseline has no fitted model");
}

inline Posterior predict(const FittedModel& model, const Point2& x_star) {
    const double prior = path_loss_mean(model.channel, x_star);
    const Eigen::VectorXd k_star = kernel_vector(model.dataset.noisy_locations, x_star, model.hyper);
    const double mean = prior + k_star.dot(model.alpha);
    const Eigen::VectorXd v = model.factor.matrixL().solve(k_star);
    const double var = kernel(x_star, x_star, model.hyper) - v.squaredNorm();
    if (var < -detail::kFitJitter * model.hyper.sigma_k * model.hyper.sigma_k) {
        detail::variance_clamp_counter().fetch_add(1, std::memory_order_relaxed);
    }
    return {mean, std::sqrt(std::max(var, 0.0))};
}

}  // namespace nigprate
