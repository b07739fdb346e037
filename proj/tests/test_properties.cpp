// Randomized invariants, each over a fixed family of seeded instances.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "muonpp/correlation.hpp"
#include "muonpp/linalg.hpp"
#include "muonpp/spectral_update.hpp"
#include "muonpp/train.hpp"
#include "oracles.hpp"

using namespace muonpp;
using linalg::Matrix;
using linalg::Vector;

namespace {

std::pair<Eigen::Index, Eigen::Index> random_shape(std::mt19937_64& rng, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  return {d(rng), d(rng)};
}

Matrix spectral_ball_point(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  // U diag(s) V^T with s in [0, 1]: an arbitrary point with ||X|| <= 1.
  const Eigen::Index k = std::min(r, c);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector s(k);
  for (Eigen::Index i = 0; i < k; ++i) s(i) = unif(rng);
  return oracle::orthonormal_columns(r, k, rng) * s.asDiagonal() * oracle::orthonormal_columns(c, k, rng).transpose();
}

}  // namespace

TEST(Property, TopSingularMatchesOracle) {
  std::mt19937_64 rng(100);
  for (int t = 0; t < 40; ++t) {
    const auto [r, c] = random_shape(rng, 2, 64);
    const Matrix m = oracle::gaussian(r, c, rng);
    const linalg::SingularInfo s = linalg::top_two_singular(m);
    const double ref = oracle::spectral(m);
    EXPECT_LE(std::abs(ref - s.sigma1), 1e-8 * s.sigma1);
    EXPECT_GE(s.sigma1, s.sigma2);
    EXPECT_GE(s.sigma2, 0.0);
    // Fact: Q = u1 v1^T is a spectral-norm subgradient, <M, Q> = sigma1.
    EXPECT_NEAR(linalg::inner(m, s.u1 * s.v1.transpose()), s.sigma1, 1e-8 * s.sigma1);
  }
}

TEST(Property, MsignIdempotentAndOptimal) {
  std::mt19937_64 rng(101);
  for (int t = 0; t < 100; ++t) {
    const auto [r, c] = random_shape(rng, 1, 12);
    const Matrix m = oracle::gaussian(r, c, rng);
    const Matrix s = linalg::msign(m);
    EXPECT_LE((linalg::msign(s) - s).norm(), 1e-8);
    const double value = linalg::inner(m, s);
    const double nuc = oracle::nuclear(m);
    EXPECT_NEAR(value, nuc, 1e-8 * nuc);
    const Matrix x = spectral_ball_point(r, c, rng);
    EXPECT_GE(value, linalg::inner(m, x) - 1e-8);
    EXPECT_LE((s - oracle::polar(m)).norm(), 1e-8);
  }
}

TEST(Property, ProjectionIsIdempotentContraction) {
  std::mt19937_64 rng(102);
  for (int t = 0; t < 50; ++t) {
    const auto [r, c] = random_shape(rng, 2, 20);
    const Matrix m = oracle::gaussian(r, c, rng);
    const Vector u = oracle::gaussian(r, 1, rng).col(0).normalized();
    const Vector v = oracle::gaussian(c, 1, rng).col(0).normalized();
    const Matrix p = linalg::project_out_top(m, u, v);
    EXPECT_LE((linalg::project_out_top(p, u, v) - p).norm(), 1e-12 * std::max(1.0, m.norm()));
    EXPECT_LE(oracle::spectral(p), oracle::spectral(m) + 1e-12);
    EXPECT_LE((u.transpose() * p).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((p * v).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Property, AlgorithmOneDirectionAvoidsTopPair) {
  std::mt19937_64 rng(103);
  for (int t = 0; t < 30; ++t) {
    const auto [r, c] = random_shape(rng, 3, 24);
    const Matrix w = oracle::gaussian(r, c, rng);
    optim::MuonPPState state = optim::MuonPPState::init(r, c, 0.5);
    state.momentum = oracle::gaussian(r, c, rng);
    const optim::StepResult s = optim::muonpp_step(state, w, oracle::gaussian(r, c, rng), 0.1);
    const linalg::SingularInfo top = linalg::top_two_singular(w);
    EXPECT_LE((top.u1.transpose() * s.report.delta).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((s.report.delta * top.v1).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE(oracle::spectral(s.report.delta), 1.0 + 1e-10);
  }
}

TEST(Property, AdmissibleStepsPreserveNormAndAlgorithmsAgree) {
  std::mt19937_64 rng(104);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  for (int t = 0; t < 60; ++t) {
    const auto [r, c] = random_shape(rng, 4, 20);
    const double S = std::sqrt(static_cast<double>(r) / static_cast<double>(c));
    Matrix w = oracle::gaussian(r, c, rng);
    w *= S / oracle::spectral(w);
    const Matrix g = oracle::gaussian(r, c, rng);
    const double eta = frac(rng) * optim::admissible_eta(w);
    const optim::MuonPPState state = optim::MuonPPState::init(r, c, 0.0);
    const optim::StepResult a = optim::muonpp_step(state, w, g, eta);
    const optim::StepResult b = optim::muonpp_rescale_step(state, w, g, eta);
    EXPECT_LE(std::abs(oracle::spectral(a.weight) - S), 1e-8 * S);
    EXPECT_LE((a.weight - b.weight).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Property, RescaleAlwaysLandsOnTarget) {
  std::mt19937_64 rng(105);
  for (int t = 0; t < 30; ++t) {
    const auto [r, c] = random_shape(rng, 2, 20);
    const double S = std::sqrt(static_cast<double>(r) / static_cast<double>(c));
    const Matrix w = oracle::gaussian(r, c, rng);
    const optim::StepResult s =
        optim::muonpp_rescale_step(optim::MuonPPState::init(r, c, 0.0), w, oracle::gaussian(r, c, rng), 3.0);
    EXPECT_LE(std::abs(oracle::spectral(s.weight) - S), 1e-12 * S);
  }
}

TEST(Property, DualDominatesProjection) {
  std::mt19937_64 rng(106);
  for (int t = 0; t < 10; ++t) {
    const Matrix g = oracle::gaussian(6, 5, rng);
    const linalg::SingularInfo top = linalg::top_two_singular(oracle::gaussian(6, 5, rng));
    const optim::DualSolve d = optim::dual_delta(g, top.u1, top.v1);
    const Matrix proj = linalg::msign(linalg::project_out_top(g, top.u1, top.v1));
    EXPECT_GE(linalg::inner(g, d.delta), linalg::inner(g, proj) - 1e-6);
    EXPECT_LE(oracle::spectral(d.delta), 1.0 + 1e-8);
  }
}

TEST(Property, MomRhoWithinAdmissibleRange) {
  std::mt19937_64 rng(107);
  for (int t = 0; t < 50; ++t) {
    const auto [r, c] = random_shape(rng, 1, 10);
    if (r * c < 2) continue;
    const Matrix w = oracle::gaussian(r, c, rng).array() + static_cast<double>(t % 5) * 0.3;
    const double rho = corr::mom_rho(w);
    const double k = static_cast<double>(r * c);
    EXPECT_GE(rho, -1.0 / (k - 1.0) - 1e-15);
    EXPECT_LE(rho, 1.0 + 1e-15);
  }
}

TEST(Property, TrainingIsDeterministicAndAdmissibleStepsKeepNorms) {
  train::MLPConfig c;
  c.widths = {6, 12, 12, 3};
  c.batch_size = 8;
  c.steps = 8;
  c.seed = 9;
  train::TrainOptions o;
  o.optimizer = train::OptimizerKind::muonpp;
  o.eta = 0.02;
  o.eval_batch = 16;
  o.msign_mode = linalg::MsignMode::exact;
  const train::TrainResult a = train::train_run(c, o);
  const train::TrainResult b = train::train_run(c, o);
  EXPECT_EQ(train::train_csv(a), train::train_csv(b));
  // Once a layer takes an inadmissible step its norm is no longer guaranteed.
  std::vector<bool> intact(a.records.front().per_layer.size(), true);
  for (std::size_t i = 1; i < a.records.size(); ++i) {
    for (std::size_t l = 0; l < a.records[i].per_layer.size(); ++l) {
      const auto& rec = a.records[i].per_layer[l];
      if (o.eta > rec.admissible_eta) intact[l] = false;
      if (!intact[l]) continue;
      const double S = std::sqrt(static_cast<double>(c.widths[l + 1]) / static_cast<double>(c.widths[l]));
      EXPECT_LE(std::abs(rec.spectral_norm_W - S), 1e-8 * S) << "step " << i << " layer " << l;
    }
  }
}
