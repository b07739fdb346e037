#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "muonpp/errors.hpp"
#include "muonpp/spectral_update.hpp"
#include "oracles.hpp"

using namespace muonpp;
using namespace muonpp::optim;

namespace {

Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

Matrix normalized_to(const Matrix& m, double S) { return m * (S / oracle::spectral(m)); }

}  // namespace

TEST(SpectralTarget, SquareRootOfRatio) {
  const SpectralTarget t = SpectralTarget::for_shape(24, 16);
  EXPECT_EQ(t.S, std::sqrt(24.0 / 16.0));
  EXPECT_THROW(SpectralTarget::for_shape(0, 3), InvalidInput);
  const MuonPPState s = MuonPPState::init(3, 4, 0.9);
  EXPECT_EQ(s.momentum, Matrix::Zero(3, 4));
  EXPECT_EQ(s.step, 0);
  EXPECT_THROW(MuonPPState::init(3, 4, 1.0), InvalidInput);
}

TEST(AdmissibleEta, Examples) {
  EXPECT_NEAR(admissible_eta(diag2(1, 0.2)), 0.8, 1e-12);
  std::mt19937_64 rng(1);
  EXPECT_EQ(admissible_eta(3.0 * oracle::orthonormal_columns(6, 6, rng)), 0.0);
  const Matrix w = oracle::gaussian(32, 32, rng);
  const auto sv = oracle::singular_values(w);
  EXPECT_NEAR(admissible_eta(w), (sv(0) - sv(1)) / sv(0), 1e-8);
  EXPECT_THROW(admissible_eta(Matrix::Zero(2, 2)), DegenerateInput);
}

TEST(MuonPPStep, HandComputedInstance) {
  MuonPPState s = MuonPPState::init(2, 2, 0.0);
  const StepResult r = muonpp_step(s, diag2(1, 0.2), diag2(0, -1), 0.5);
  EXPECT_LE((r.report.delta - diag2(0, -1)).norm(), 1e-10);
  EXPECT_LE((r.weight - diag2(1, 0.7)).norm(), 1e-10);
  EXPECT_NEAR(r.report.spectral_norm_after, 1.0, 1e-10);
  EXPECT_NEAR(r.report.admissible_eta, 0.8, 1e-10);
  EXPECT_EQ(r.state.step, 1);
  EXPECT_FALSE(r.report.rescaled);
}

TEST(MuonPPStep, AlignedGradientGivesZeroUpdate) {
  std::mt19937_64 rng(2);
  const Matrix w = normalized_to(oracle::gaussian(6, 5, rng), 1.0);
  const linalg::SingularInfo top = linalg::top_two_singular(w);
  const StepResult r = muonpp_step(MuonPPState::init(6, 5, 0.0), w, top.u1 * top.v1.transpose(), 0.3);
  EXPECT_LE(r.report.delta.norm(), 1e-9);
  EXPECT_LE((r.weight - w).norm(), 1e-9);
}

TEST(MuonPPStep, RandomAdmissibleStepPreservesNorm) {
  std::mt19937_64 rng(3);
  const double S = std::sqrt(24.0 / 16.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix w = normalized_to(oracle::gaussian(24, 16, rng), S);
    const Matrix g = oracle::gaussian(24, 16, rng);
    const double eta = 0.9 * admissible_eta(w);
    const StepResult r = muonpp_step(MuonPPState::init(24, 16, 0.0), w, g, eta);
    EXPECT_LE(std::abs(oracle::spectral(r.weight) - S), 1e-8 * S);
    const linalg::SingularInfo top = linalg::top_two_singular(w);
    EXPECT_LE((top.u1.transpose() * r.report.delta).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((r.report.delta * top.v1).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(MuonPPStep, MomentumAccumulates) {
  std::mt19937_64 rng(4);
  const Matrix w = normalized_to(oracle::gaussian(5, 5, rng), 1.0);
  const Matrix g1 = oracle::gaussian(5, 5, rng);
  const Matrix g2 = oracle::gaussian(5, 5, rng);
  const StepResult a = muonpp_step(MuonPPState::init(5, 5, 0.5), w, g1, 0.01);
  const StepResult b = muonpp_step(a.state, a.weight, g2, 0.01);
  EXPECT_LE((b.state.momentum - (0.5 * g1 + g2)).norm(), 1e-14);
  EXPECT_EQ(b.state.step, 2);
}

TEST(MuonPPStep, Errors) {
  const MuonPPState s = MuonPPState::init(2, 2, 0.0);
  EXPECT_THROW(muonpp_step(s, diag2(1, 0.2), Matrix::Ones(2, 3), 0.1), InvalidInput);
  Matrix g = diag2(1, 1);
  g(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(muonpp_step(s, diag2(1, 0.2), g, 0.1), InvalidInput);
  EXPECT_THROW(muonpp_step(MuonPPState::init(3, 3, 0.0), diag2(1, 0.2), diag2(1, 1), 0.1), InvalidInput);
}

TEST(RescaleStep, EqualsAlgorithmOneInsideAdmissibleRange) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix w = normalized_to(oracle::gaussian(12, 9, rng), std::sqrt(12.0 / 9.0));
    const Matrix g = oracle::gaussian(12, 9, rng);
    const double eta = 0.5 * admissible_eta(w);
    const StepResult a = muonpp_step(MuonPPState::init(12, 9, 0.0), w, g, eta);
    const StepResult b = muonpp_rescale_step(MuonPPState::init(12, 9, 0.0), w, g, eta);
    EXPECT_LE((a.weight - b.weight).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_FALSE(b.report.rescaled);
  }
}

TEST(RescaleStep, ViolatedConstraintIsRepaired) {
  std::mt19937_64 rng(6);
  const double S = std::sqrt(10.0 / 14.0);
  const Matrix w = normalized_to(oracle::gaussian(10, 14, rng), S);
  const Matrix g = oracle::gaussian(10, 14, rng);
  const StepResult r = muonpp_rescale_step(MuonPPState::init(10, 14, 0.0), w, g, 3.0);
  EXPECT_LE(std::abs(oracle::spectral(r.weight) - S), 1e-12 * S);
  EXPECT_TRUE(r.report.rescaled);
}

TEST(RescaleToTarget, ScalarRescaling) {
  const RescaleOutcome r = rescale_to_target(diag2(2, 0.4), 1.0);
  EXPECT_LE((r.weight - diag2(1, 0.2)).norm(), 1e-15);
  EXPECT_TRUE(r.rescaled);
  EXPECT_FALSE(rescale_to_target(diag2(1, 0.2), 1.0).rescaled);
}

TEST(MuonBaseline, Examples) {
  std::mt19937_64 rng(7);
  const Matrix q = oracle::orthonormal_columns(4, 4, rng);
  const BaselineResult a = muon_baseline_step(MuonPPState::init(4, 4, 0.0), Matrix::Zero(4, 4), q, 1.0, false);
  EXPECT_LE((a.weight + q).norm(), 1e-12);

  EXPECT_DOUBLE_EQ(muon_match_factor(25, 25), 1.0);
  EXPECT_DOUBLE_EQ(muon_match_factor(4, 100), 2.0);

  const BaselineResult b = muon_baseline_step(MuonPPState::init(2, 2, 0.0), diag2(1, 1), diag2(4, -2), 0.1, false);
  EXPECT_LE((b.weight - diag2(0.9, 1.1)).norm(), 1e-14);
}

TEST(Cascade, DefectInstance) {
  const CascadeResult r = cascade_step(diag2(1, 0.2), diag2(1, 0), 0.5);
  EXPECT_LE((r.weight - diag2(1, 0.4)).norm(), 1e-15);
  EXPECT_NEAR(r.net_update_spectral_norm, 0.2, 1e-15);
}

TEST(Cascade, NoOpNormalizationAndPureRenormalization) {
  std::mt19937_64 rng(8);
  const double s = std::sqrt(6.0 / 9.0);
  const Matrix w = oracle::gaussian(6, 9, rng);
  const Matrix g = oracle::gaussian(6, 9, rng);

  const CascadeResult pure = cascade_step(w, g, 0.0, 1.5);
  EXPECT_LE((pure.weight - 1.5 * s * w / oracle::spectral(w)).norm(), 1e-12);

  // Choose W so that the half step already has norm sqrt(m/n): then W' = W_half.
  const double eta = 0.1;
  const Matrix gn = g / oracle::spectral(g);
  const Matrix half = normalized_to(oracle::gaussian(6, 9, rng), s);
  const Matrix w0 = half + eta * s * gn;
  const CascadeResult r = cascade_step(w0, g, eta);
  EXPECT_LE((r.weight - half).norm(), 1e-12);
  EXPECT_NEAR(r.net_update_spectral_norm, eta * s, 1e-12);

  EXPECT_THROW(cascade_step(w, Matrix::Zero(6, 9), 0.1), DegenerateInput);
}

TEST(DualDelta, OrthogonalGradient) {
  const Vector u = Vector::Unit(3, 0);
  const Vector v = Vector::Unit(3, 0);
  Matrix g = Matrix::Zero(3, 3);
  g(1, 1) = 2.0;
  g(2, 1) = 1.0;
  g(1, 2) = -0.5;
  const DualSolve d = dual_delta(g, u, v);
  EXPECT_NEAR(d.nu_min, 0.0, 1e-6);
  EXPECT_NEAR(d.objective, oracle::nuclear(g), 1e-8);
  EXPECT_LE((d.delta - oracle::polar(g)).norm(), 1e-6);
}

TEST(DualDelta, RankOneCancellationIsDegenerate) {
  const Vector u = Eigen::Vector3d(1, 2, 2) / 3.0;
  const Vector v = Eigen::Vector2d(3, 4) / 5.0;
  const DualSolve d = dual_delta(u * v.transpose(), u, v);
  EXPECT_NEAR(d.nu_min, -1.0, 1e-6);
  EXPECT_NEAR(d.objective, 0.0, 1e-6);
  EXPECT_TRUE(d.degenerate);
  EXPECT_EQ(d.delta.norm(), 0.0);
}

TEST(DualDelta, RandomInstanceMatchesGrid) {
  std::mt19937_64 rng(9);
  const Matrix g = oracle::gaussian(8, 6, rng);
  const Vector u = oracle::gaussian(8, 1, rng).col(0).normalized();
  const Vector v = oracle::gaussian(6, 1, rng).col(0).normalized();
  const Matrix uv = u * v.transpose();
  const double r = 3.0 * oracle::nuclear(g);
  const double best = oracle::grid_min([&](double nu) { return oracle::nuclear(g + nu * uv); }, -r, r, 1e-2, 1e-4);
  const DualSolve d = dual_delta(g, u, v);
  EXPECT_LE(std::abs(d.objective - best), 1e-4);
  EXPECT_LE(oracle::spectral(d.delta), 1.0 + 1e-8);
  EXPECT_LE(std::abs(u.dot(d.delta * v)), 1e-6);  // stationarity, limited by the accuracy of nu
}

TEST(Budget, WorkedExampleAndLinearity) {
  const TokenBudget b = token_budget_threshold(0.001, 10000, 0.02, 2, 1);
  EXPECT_EQ(b.T_threshold, 2000.0);
  EXPECT_EQ(b.token_threshold, 2000.0);
  const TokenBudget b2 = token_budget_threshold(0.001, 10000, 0.02, 2, 2);
  EXPECT_EQ(b2.T_threshold, b.T_threshold);
  EXPECT_EQ(b2.token_threshold, 2.0 * b.token_threshold);
  EXPECT_THROW(token_budget_threshold(0.0, 10, 0.02, 2, 1), InvalidInput);
  EXPECT_THROW(token_budget_threshold(0.1, 0, 0.02, 2, 1), InvalidInput);
}

TEST(StepCsv, HeaderMatchesRowWidth) {
  const StepResult r = muonpp_step(MuonPPState::init(2, 2, 0.0), diag2(1, 0.2), diag2(0, -1), 0.5);
  const std::string header = step_report_csv_header();
  const std::string row = step_report_csv_row(r.report);
  EXPECT_EQ(header, "step,eta,S,gap_before,admissible_eta,spectral_norm_after,rescaled,delta_residual");
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
  EXPECT_EQ(row.rfind("1,0.5,1,", 0), 0u);
}
