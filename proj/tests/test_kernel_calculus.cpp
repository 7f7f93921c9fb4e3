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

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "nigprate/nigprate.hpp"
#include "test_support.hpp"

namespace nigprate {
namespace {

using testing::fd_grad;
using testing::fd_hess;
using testing::random_point;
using testing::rel_error;

const KernelHyper kTable = KernelHyper::matched(ChannelParams{});

KernelHyper random_hyper(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> amp(1.0, 10.0);
    std::uniform_real_distribution<double> len(10.0, 150.0);
    std::uniform_real_distribution<double> dc(1e-3, 2.0);
    const double a = amp(rng);
    const double l = len(rng);
    return {a, l, dc(rng)};
}

TEST(Kernel, MatchedHyperparameters) {
    EXPECT_DOUBLE_EQ(kTable.sigma_k, 6.0);
    EXPECT_NEAR(kTable.ell, 72.13475204444817, 1e-12);
    EXPECT_DOUBLE_EQ(kTable.d_c, 1e-3);
}

TEST(Kernel, Values) {
    KernelHyper h{6.0, kTable.ell, 1e-12};
    EXPECT_NEAR(kernel({3.0, 4.0}, {3.0, 4.0}, h), 36.0, 1e-12);
    EXPECT_NEAR(kernel({0.0, 0.0}, {h.ell, 0.0}, h), 13.24365988217192, 1e-12);
    EXPECT_LT(kernel({0.0, 0.0}, {1e5, 0.0}, h), 1e-300);
    // Smoothed self-covariance.
    EXPECT_NEAR(kernel({1.0, 1.0}, {1.0, 1.0}, kTable), 36.0 * std::exp(-1e-3 / kTable.ell), 1e-13);
}

TEST(Kernel, SymmetricAndInvariantUnderRigidMotion) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> angle(0.0, 2 * std::numbers::pi);
    for (int t = 0; t < 100; ++t) {
        const KernelHyper h = random_hyper(rng);
        const Point2 a = random_point(rng);
        const Point2 b = random_point(rng);
        const double k = kernel(a, b, h);
        EXPECT_DOUBLE_EQ(k, kernel(b, a, h));
        EXPECT_GT(k, 0.0);
        const double th = angle(rng);
        const Point2 shift = random_point(rng, -500, 500);
        auto move = [&](const Point2& p) {
            return Point2{std::cos(th) * p.x1 - std::sin(th) * p.x2 + shift.x1,
                          std::sin(th) * p.x1 + std::cos(th) * p.x2 + shift.x2};
        };
        EXPECT_NEAR(kernel(move(a), move(b), h), k, 1e-10 * h.sigma_k * h.sigma_k);
    }
}

TEST(KernelMatrix, SmallCases) {
    const std::vector<Point2> one{{5.0, 5.0}};
    const auto k1 = kernel_matrix(one, kTable);
    ASSERT_EQ(k1.rows(), 1);
    EXPECT_DOUBLE_EQ(k1(0, 0), 36.0 * std::exp(-kTable.d_c / kTable.ell));

    const std::vector<Point2> two{{5.0, 5.0}, {5.0, 5.0}};
    const auto k2 = kernel_matrix(two, kTable);
    EXPECT_DOUBLE_EQ(k2(0, 1), k2(0, 0));
    EXPECT_DOUBLE_EQ(k2(1, 1), k2(0, 0));
    EXPECT_NEAR(k2.determinant(), 0.0, 1e-9);
}

TEST(KernelMatrix, MatchesElementwiseCalls) {
    std::mt19937_64 rng(5);
    std::vector<Point2> pts;
    for (int i = 0; i < 5; ++i) pts.push_back(random_point(rng));
    const auto k = kernel_matrix(pts, kTable);
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) EXPECT_EQ(k(i, j), kernel(pts[i], pts[j], kTable));
    }
}

TEST(KernelMatrix, PositiveSemidefiniteUpToRoundoff) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<Point2> pts;
        for (int i = 0; i < 200; ++i) pts.push_back(random_point(rng));
        for (int i = 0; i < 10; ++i) pts[static_cast<std::size_t>(i)] = pts[static_cast<std::size_t>(i + 10)];
        const auto k = kernel_matrix(pts, kTable);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k, Eigen::EigenvaluesOnly);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8 * 36.0);
    }
}

TEST(KernelGrad, ZeroAtCenterAndAntisymmetric) {
    const Grad2 g = kernel_grad({7.0, 9.0}, {7.0, 9.0}, kTable);
    EXPECT_EQ(g.g1, 0.0);
    EXPECT_EQ(g.g2, 0.0);

    std::mt19937_64 rng(2);
    for (int t = 0; t < 50; ++t) {
        const Point2 a = random_point(rng);
        const Point2 b = random_point(rng);
        const Grad2 ab = kernel_grad(a, b, kTable);
        const Grad2 ba = kernel_grad(b, a, kTable);
        EXPECT_NEAR(ab.g1, -ba.g1, 1e-15);
        EXPECT_NEAR(ab.g2, -ba.g2, 1e-15);
    }
}

TEST(KernelGrad, MatchesFiniteDifferences) {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 100; ++t) {
        const KernelHyper h = random_hyper(rng);
        const Point2 x = random_point(rng);
        const Point2 xi = random_point(rng);
        const auto f = [&](const Point2& p) { return kernel(p, xi, h); };
        EXPECT_LE(rel_error(kernel_grad(x, xi, h), fd_grad(f, x, 1e-4)), 1e-6) << "config " << t;
    }
}

TEST(KernelHess, CenterValue) {
    const Hess2 h = kernel_hess({4.0, 4.0}, {4.0, 4.0}, kTable);
    const double expected = -36.0 * std::exp(-kTable.d_c / kTable.ell) / (kTable.ell * kTable.d_c);
    EXPECT_NEAR(h.h11, expected, 1e-12 * std::abs(expected));
    EXPECT_NEAR(h.h22, expected, 1e-12 * std::abs(expected));
    EXPECT_EQ(h.h12, 0.0);
    EXPECT_EQ(h.h21, 0.0);
}

TEST(KernelHess, MatchesFiniteDifferencesAndIsSymmetric) {
    std::mt19937_64 rng(37);
    for (int t = 0; t < 100; ++t) {
        const KernelHyper h = random_hyper(rng);
        const Point2 x = random_point(rng);
        const Point2 xi = random_point(rng);
        const auto f = [&](const Point2& p) { return kernel(p, xi, h); };
        const Hess2 an = kernel_hess(x, xi, h);
        EXPECT_EQ(an.h12, an.h21);
        EXPECT_LE(rel_error(an, fd_hess(f, x, 1e-3)), 1e-4) << "config " << t;
    }
}

class PosteriorMeanDerivatives : public ::testing::Test {
protected:
    void SetUp() override {
        const SensingDataset ds = testing::random_dataset(77, 40, 10.0);
        model_ = fit_pure(ds, channel_, kTable, NoiseParams{});
    }

    double mean_surface(const Point2& x) const { return predict(model_, x).mean; }
    double kernel_part(const Point2& x) const { return predict(model_, x).mean - path_loss_mean(channel_, x); }

    ChannelParams channel_;
    FittedModel model_;
};

TEST_F(PosteriorMeanDerivatives, GradientMatchesFiniteDifferenceOfMean) {
    std::mt19937_64 rng(41);
    for (int t = 0; t < 100; ++t) {
        const Point2 x = random_point(rng);
        const auto f = [&](const Point2& p) { return mean_surface(p); };
        EXPECT_LE(rel_error(posterior_mean_grad(model_, x), fd_grad(f, x, 1e-4)), 1e-5) << "point " << t;
    }
}

TEST_F(PosteriorMeanDerivatives, HessianMatchesFiniteDifferenceOfKernelSum) {
    std::mt19937_64 rng(43);
    for (int t = 0; t < 100; ++t) {
        const Point2 x = random_point(rng);
        const auto f = [&](const Point2& p) { return kernel_part(p); };
        const Hess2 an = posterior_mean_hess(model_, x, false);
        EXPECT_EQ(an.h12, an.h21);
        // 1 cm step: at 1 mm, roundoff in the ~50 dB surface dominates small curvatures far from data.
        EXPECT_LE(rel_error(an, fd_hess(f, x, 1e-2)), 1e-4) << "point " << t;
    }
}

TEST_F(PosteriorMeanDerivatives, MeanHessianFlagAddsPathLossCurvature) {
    std::mt19937_64 rng(47);
    for (int t = 0; t < 20; ++t) {
        const Point2 x = random_point(rng);
        const auto f = [&](const Point2& p) { return mean_surface(p); };
        EXPECT_LE(rel_error(posterior_mean_hess(model_, x, true), fd_hess(f, x, 1e-2)), 1e-4);
    }
    EXPECT_THROW(posterior_mean_hess(model_, channel_.x_tx, true), DomainError);
    EXPECT_NO_THROW(posterior_mean_hess(model_, channel_.x_tx, false));
}

TEST(PosteriorMeanGrad, ZeroWeightsGivePathLossGradient) {
    const ChannelParams ch;
    SensingDataset ds = testing::random_dataset(3, 10);
    for (std::size_t i = 0; i < ds.size(); ++i) ds.observations[i] = path_loss_mean(ch, ds.noisy_locations[i]);
    const FittedModel m = fit_pure(ds, ch, kTable, NoiseParams{});
    ASSERT_EQ(m.alpha.norm(), 0.0);

    const Point2 x{120.0, 80.0};
    const Grad2 g = posterior_mean_grad(m, x);
    const double d_sq = std::pow(x.x1 - ch.x_tx.x1, 2) + std::pow(x.x2 - ch.x_tx.x2, 2);
    const double c = -10.0 * ch.eta / std::log(10.0) / d_sq;
    EXPECT_NEAR(g.g1, c * (x.x1 - ch.x_tx.x1), 1e-15);
    EXPECT_NEAR(g.g2, c * (x.x2 - ch.x_tx.x2), 1e-15);

    const Hess2 h = posterior_mean_hess(m, x, false);
    EXPECT_EQ(h.h11, 0.0);
    EXPECT_EQ(h.h12, 0.0);
    EXPECT_EQ(h.h22, 0.0);
    EXPECT_THROW(posterior_mean_grad(m, ch.x_tx), DomainError);
}

TEST(PosteriorMeanGrad, CrossTrackComponentVanishesFarFromDataOnTransmitterAxis) {
    const ChannelParams ch;
    const SensingDataset ds = testing::random_dataset(8, 30);
    const FittedModel m = fit_pure(ds, ch, kTable, NoiseParams{});
    const Point2 far{ch.x_tx.x1 + 20000.0, ch.x_tx.x2};
    const Grad2 g = posterior_mean_grad(m, far);
    EXPECT_NEAR(g.g2, 0.0, 1e-12);
    EXPECT_LT(g.g1, 0.0);
}

}  // namespace
}  // namespace nigprate
