#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "muonpp/correlation.hpp"
#include "muonpp/errors.hpp"
#include "muonpp/seeding.hpp"
#include "oracles.hpp"

using namespace muonpp;
using namespace muonpp::corr;

TEST(Spec, Validation) {
  EXPECT_NO_THROW((CorrelatedWeightSpec{4, 8, 1.0, 0.5}.validate()));
  EXPECT_NO_THROW((CorrelatedWeightSpec{4, 8, 0.0, 0.0}.validate()));
  EXPECT_THROW((CorrelatedWeightSpec{8, 4, 1.0, 0.0}.validate()), InvalidInput);
  EXPECT_THROW((CorrelatedWeightSpec{4, 8, -1.0, 0.0}.validate()), InvalidInput);
  EXPECT_THROW((CorrelatedWeightSpec{4, 8, 1.0, 1.5}.validate()), InvalidInput);
  const CorrelatedWeightSpec s{2, 2, 1.0, 0.0};
  EXPECT_DOUBLE_EQ(s.min_rho(), -1.0 / 3.0);
  EXPECT_NO_THROW((CorrelatedWeightSpec{2, 2, 1.0, -1.0 / 3.0}.validate()));
  EXPECT_THROW((CorrelatedWeightSpec{2, 2, 1.0, -0.34}.validate()), InvalidInput);
  try {
    CorrelatedWeightSpec{2, 2, 1.0, 2.0}.validate();
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("rho"), std::string::npos);
  }
}

TEST(Spec, CovarianceEigenvaluesAreNonNegativeAtTheBound) {
  const CorrelatedWeightSpec s{3, 5, 2.0, -1.0 / 14.0};
  const auto [perp, ones] = covariance_eigenvalues(s);
  EXPECT_NEAR(perp, 4.0 * (1.0 + 1.0 / 14.0), 1e-12);
  EXPECT_NEAR(ones, 0.0, 1e-12);
}

TEST(Sampler, RhoOneIsConstant) {
  const CorrelatedDraw d = sample_correlated({5, 7, 0.3, 1.0}, 11);
  EXPECT_LE((d.weight.array() - 0.3 * d.z).abs().maxCoeff(), 1e-15);
}

TEST(Sampler, RhoZeroMoments) {
  const double sigma = 0.7;
  const CorrelatedDraw d = sample_correlated({100, 100, sigma, 0.0}, 12);
  const double mean = d.weight.mean();
  const double var = (d.weight.array() - mean).square().mean();
  EXPECT_LE(std::abs(mean), 4.0 * sigma / 100.0);
  EXPECT_LE(std::abs(var - sigma * sigma), 0.05 * sigma * sigma);
}

TEST(Sampler, DeterministicAndReconstructible) {
  const CorrelatedWeightSpec spec{6, 9, 1.3, 0.2};
  const CorrelatedDraw a = sample_correlated(spec, 99);
  const CorrelatedDraw b = sample_correlated(spec, 99);
  EXPECT_EQ(a.weight, b.weight);
  EXPECT_EQ(a.z, b.z);
  Rng rng = make_rng(99);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double z = normal(rng);
  EXPECT_EQ(z, a.z);
  const linalg::Matrix phi = gaussian_matrix(6, 9, rng);
  const linalg::Matrix expected =
      spec.sigma_n * (std::sqrt(spec.rho_n) * z * linalg::Matrix::Ones(6, 9) + std::sqrt(1.0 - spec.rho_n) * phi);
  EXPECT_LE((a.weight - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Sampler, PairwiseCorrelationMatchesRho) {
  // Correlation between entries (0,0) and (1,2) across independent draws.
  const CorrelatedWeightSpec spec{3, 4, 1.0, 0.3};
  const int draws = 2000;
  std::vector<double> a;
  std::vector<double> b;
  for (int i = 0; i < draws; ++i) {
    const CorrelatedDraw d = sample_correlated(spec, stream_key(5, 0, static_cast<std::uint64_t>(i)));
    a.push_back(d.weight(0, 0));
    b.push_back(d.weight(1, 2));
  }
  double ma = 0, mb = 0;
  for (int i = 0; i < draws; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= draws;
  mb /= draws;
  double sab = 0, saa = 0, sbb = 0;
  for (int i = 0; i < draws; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  const double r = sab / std::sqrt(saa * sbb);
  const double se = (1.0 - 0.09) / std::sqrt(static_cast<double>(draws));
  EXPECT_LE(std::abs(r - 0.3), 3.0 * se);
}

TEST(Sampler, NegativeRhoIsWithinBoundAndFinite) {
  const CorrelatedWeightSpec spec{4, 4, 1.0, -1.0 / 15.0};
  const CorrelatedDraw d = sample_correlated(spec, 3);
  EXPECT_EQ(d.z, 0.0);
  EXPECT_TRUE(d.weight.allFinite());
  EXPECT_NEAR(d.weight.sum(), 0.0, 1e-12);
  EXPECT_THROW(sample_correlated({4, 4, 1.0, -0.5}, 3), InvalidInput);
}

TEST(MomRho, ExactCases) {
  EXPECT_EQ(mom_rho(linalg::Matrix::Constant(256, 256, -0.37)), 1.0);
  EXPECT_EQ(mom_rho(linalg::Matrix::Constant(3, 7, 1e-5)), 1.0);
  linalg::Matrix w(2, 2);
  w << 1, -1, -1, 1;
  EXPECT_EQ(mom_rho(w), -1.0 / 3.0);
  EXPECT_THROW(mom_rho(linalg::Matrix::Zero(3, 3)), DegenerateInput);
  EXPECT_THROW(mom_rho(linalg::Matrix::Ones(1, 1)), InvalidInput);
}

TEST(MomRho, MatchesTwoPassFormula) {
  std::mt19937_64 rng(4);
  const linalg::Matrix w = oracle::gaussian(17, 23, rng).array() + 0.4;
  const double k = static_cast<double>(w.size());
  const double mean = w.mean();
  const double s2 = w.array().square().mean();
  EXPECT_NEAR(mom_rho(w), (k * mean * mean - s2) / ((k - 1.0) * s2), 1e-14);
}

TEST(MomRho, ConditionalLimit) {
  EXPECT_EQ(conditional_mom_limit(1.0, 0.5), 1.0);
  EXPECT_EQ(conditional_mom_limit(0.0, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(conditional_mom_limit(0.5, 1.0), 0.5);
}

TEST(Predictions, Frobenius) {
  EXPECT_EQ(predict_frobenius({4, 4, 0.0, 0.0}).value, 0.0);
  EXPECT_NEAR(predict_frobenius({512, 512, 1.0 / std::sqrt(512.0), 0.0}).value, 22.6274, 1e-4);
  EXPECT_TRUE(predict_frobenius({4, 4, 1.0, 0.5}).outside_regime);
  EXPECT_FALSE(predict_frobenius({4, 4, 1.0, 0.05}).outside_regime);
}

TEST(Predictions, RegimesAndValues) {
  const SpectralPrediction sub = predict_spectral({1024, 1024, 1.0 / 64.0, 1e-9}, 0.3);
  EXPECT_EQ(sub.regime, Regime::sub_critical);
  EXPECT_NEAR(sub.predicted_norm, 1.0, 1e-15);

  const double rho = 1.0 / 64.0;
  const SpectralPrediction sup = predict_spectral({4096, 4096, 0.01, rho}, 2.0);
  EXPECT_EQ(sup.regime, Regime::super_critical);
  EXPECT_NEAR(sup.predicted_norm, 0.01 * std::sqrt(4096.0 * 4096.0 * rho) * 2.0, 1e-12);

  // tau = n rho = 1, c = 1/4, z = 1: Z^2 tau sqrt(c) = 0.5 <= 1 -> factor 1.
  const SpectralPrediction b = predict_spectral({256, 1024, 0.1, 1.0 / 1024.0}, 1.0);
  EXPECT_EQ(b.regime, Regime::boundary);
  ASSERT_TRUE(b.tau.has_value());
  EXPECT_NEAR(*b.tau, 1.0, 1e-15);
  EXPECT_NEAR(b.predicted_norm, 0.1 * (16.0 + 32.0), 1e-12);

  const SpectralPrediction nv = predict_spectral({64, 64, 1.0 / 64.0, 0.5}, -1.5);
  EXPECT_EQ(nv.regime, Regime::non_vanishing);
  EXPECT_NEAR(nv.predicted_norm, std::sqrt(0.5) * 1.5, 1e-12);
}

TEST(Predictions, BoundaryFactorBranches) {
  EXPECT_EQ(boundary_limit_factor(1.0, 1.0, 0.25), 1.0);
  // Outlier branch: rank-one spike of strength theta = |z| sqrt(tau c) on an
  // edge of 1 + sqrt(c), giving sqrt((1 + theta^2)(c + theta^2)) / theta.
  const double z = 2.0, tau = 2.0, c = 0.5;
  const double theta = std::abs(z) * std::sqrt(tau * c);
  const double expected =
      std::sqrt((1 + theta * theta) * (c + theta * theta)) / theta / (1 + std::sqrt(c));
  EXPECT_NEAR(boundary_limit_factor(z, tau, c), expected, 1e-14);
  // The alternative rule can pick a different branch.
  EXPECT_EQ(boundary_limit_factor(1.2, 0.8, 1.0, BoundaryRule::abs_z_c_quarter_tau), 1.0);
  EXPECT_GT(boundary_limit_factor(1.2, 0.8, 1.0, BoundaryRule::z2_tau_sqrt_c), 1.0);
}

TEST(Predictions, ClassifyThresholds) {
  EXPECT_EQ(classify_regime({100, 100, 1.0, 0.2}), Regime::non_vanishing);
  EXPECT_EQ(classify_regime({100, 100, 1.0, 0.0009}), Regime::sub_critical);
  EXPECT_EQ(classify_regime({100, 100, 1.0, 0.05}), Regime::boundary);
  EXPECT_EQ(classify_regime({1000, 1000, 1.0, 0.05}), Regime::super_critical);
  EXPECT_EQ(to_string(Regime::super_critical), "super_critical");
}

TEST(StableRank, Examples) {
  std::mt19937_64 rng(6);
  EXPECT_NEAR(stable_rank(oracle::orthonormal_columns(9, 9, rng)), 9.0, 1e-10);
  const linalg::Matrix r1 = oracle::gaussian(5, 1, rng) * oracle::gaussian(1, 7, rng);
  EXPECT_NEAR(stable_rank(r1), 1.0, 1e-12);
  EXPECT_THROW(stable_rank(linalg::Matrix::Zero(3, 3)), DegenerateInput);

  double total = 0.0;
  for (int i = 0; i < 20; ++i) total += stable_rank(oracle::gaussian(256, 256, rng) / 16.0);
  EXPECT_NEAR(total / 20.0, 64.0, 6.4);
}

TEST(FitExponent, Examples) {
  std::vector<RhoSample> exact;
  for (double n : {64.0, 128.0, 256.0}) exact.push_back({n, 5.0 / n});
  const PowerLawFit f = fit_rho_exponent(exact);
  EXPECT_NEAR(f.slope, -1.0, 1e-12);
  EXPECT_NEAR(f.intercept, std::log(5.0), 1e-12);
  EXPECT_NEAR(f.residual, 0.0, 1e-12);

  const std::vector<RhoSample> flat{{10, 0.3}, {20, 0.3}, {40, 0.3}};
  EXPECT_NEAR(fit_rho_exponent(flat).slope, 0.0, 1e-14);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> noise(-0.05, 0.05);
  std::vector<RhoSample> noisy;
  for (int k = 0; k < 8; ++k) {
    const double n = 32.0 * std::pow(2.0, k);
    noisy.push_back({n, 2.0 * std::pow(n, -0.5) * (1.0 + noise(rng))});
  }
  EXPECT_NEAR(fit_rho_exponent(noisy).slope, -0.5, 0.1);

  const std::vector<RhoSample> one{{10, 0.1}};
  EXPECT_THROW(fit_rho_exponent(one), InvalidInput);
  const std::vector<RhoSample> neg{{10, 0.1}, {20, -0.1}};
  EXPECT_THROW(fit_rho_exponent(neg), InvalidInput);
}

TEST(Trigger, Examples) {
  const linalg::Matrix w = linalg::Matrix::Ones(100, 100);
  const TriggerOutcome below = rescale_on_trigger(w, 0.1, 0.15, 1.0, false);
  EXPECT_FALSE(below.fired);
  EXPECT_EQ(below.weight, w);

  const TriggerOutcome fire = rescale_on_trigger(w, 0.1, 0.4, 1.0, false);
  EXPECT_TRUE(fire.fired);
  EXPECT_NEAR(fire.threshold, 0.2, 1e-15);
  EXPECT_NEAR(fire.factor, 0.5, 1e-15);
  EXPECT_LE((fire.weight - 0.5 * w).cwiseAbs().maxCoeff(), 1e-15);

  const TriggerOutcome again = rescale_on_trigger(w, 0.1, 0.4, 1.0, true);
  EXPECT_TRUE(again.fired);
  EXPECT_EQ(again.weight, w);

  EXPECT_THROW(rescale_on_trigger(w, 0.0, 0.4, 1.0, false), InvalidInput);
}
