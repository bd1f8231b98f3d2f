#include "kfosu/kalman.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>
#include <vector>

namespace kfosu {
namespace {

using testing::random_matrix;
using testing::random_simplex;
using testing::random_vector;

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

FilterState make_state(const Vector& mean, const Matrix& cov, Eigen::Index block_dim, Eigen::Index k) {
  FilterState s;
  s.mean = mean;
  s.covariance = cov;
  s.block_dim = block_dim;
  s.n_endmembers = k;
  return s;
}

TEST(Kalman, ScalarClosedForm) {
  const FilterState s0 = make_state(Vector::Zero(1), Matrix::Identity(1, 1), 1, 1);
  const FilterState s1 = kf_update(s0, Vector::Ones(1), Vector::Ones(1), {0.0, 1.0});
  EXPECT_NEAR(s1.mean(0), 0.5, 1e-15);
  EXPECT_NEAR(s1.covariance(0, 0), 0.5, 1e-15);
  EXPECT_EQ(s1.t, 1);
}

TEST(Kalman, KroneckerIdentity) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 1000; ++rep) {
    const Eigen::Index d = 1 + rep % 6;
    const Eigen::Index k = 1 + rep % 4;
    const Matrix s = random_matrix(d, k, rng);
    const Vector c = random_simplex(k, rng);
    const Vector expected = s * c;
    EXPECT_LT((apply_observation(vec(s), c, d) - expected).norm(), 1e-12);
    EXPECT_LT((observation_matrix(c, d) * vec(s) - expected).norm(), 1e-12);
  }
}

TEST(Kalman, MatchesBatchPosteriorWithoutDrift) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Index d = 1 + rep % 6;
    const Eigen::Index k = 1 + rep % 3;
    const Eigen::Index n = d * k;
    const Matrix a = random_matrix(n, n, rng);
    const Matrix sigma0 = a * a.transpose() + 0.5 * Matrix::Identity(n, n);
    const Vector mu0 = random_vector(n, rng);
    const double sigma_e2 = 0.3;
    FilterState state = make_state(mu0, sigma0, d, k);

    Matrix info = sigma0.inverse();
    Vector rhs = info * mu0;
    for (int t = 0; t < 50; ++t) {
      const Vector c = random_simplex(k, rng);
      const Vector y = random_vector(d, rng);
      state = kf_update(state, y, c, {0.0, sigma_e2});
      const Matrix h = observation_matrix(c, d);
      info += h.transpose() * h / sigma_e2;
      rhs += h.transpose() * y / sigma_e2;
    }
    const Vector batch = info.ldlt().solve(rhs);
    EXPECT_LT((state.mean - batch).norm() / batch.norm(), 1e-8);
    EXPECT_LT((state.covariance - info.inverse()).norm() / info.inverse().norm(), 1e-8);
  }
}

TEST(Kalman, CovarianceStaysSymmetricPsd) {
  std::mt19937_64 rng(3);
  const Eigen::Index d = 4;
  const Eigen::Index k = 3;
  FilterState state = FilterState::from_reduced(random_matrix(d, k, rng), 1.0);
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    state = kf_update(state, random_vector(d, rng, -5.0, 5.0), random_simplex(k, rng), {1e-3, 0.5});
    if (t % 100 == 0) {
      EXPECT_LT((state.covariance - state.covariance.transpose()).norm(), 1e-10);
      const Eigen::SelfAdjointEigenSolver<Matrix> eig(state.covariance, Eigen::EigenvaluesOnly);
      worst = std::min(worst, eig.eigenvalues().minCoeff());
    }
  }
  EXPECT_GE(worst, -1e-8);
  EXPECT_EQ(state.t, 10000);
}

TEST(Kalman, TraceNonincreasingWithoutDrift) {
  std::mt19937_64 rng(4);
  FilterState state = FilterState::from_reduced(random_matrix(3, 2, rng), 2.0);
  double prev = state.covariance.trace();
  for (int t = 0; t < 200; ++t) {
    state = kf_update(state, random_vector(3, rng), random_simplex(2, rng), {0.0, 1.0});
    const double tr = state.covariance.trace();
    EXPECT_LE(tr, prev + 1e-12);
    prev = tr;
  }
}

TEST(Kalman, PurePixelUpdatesOnlyItsBlock) {
  std::mt19937_64 rng(5);
  const Eigen::Index d = 3;
  const Eigen::Index k = 3;
  for (Eigen::Index j = 0; j < k; ++j) {
    const FilterState s0 = FilterState::from_reduced(random_matrix(d, k, rng), 0.7);
    const FilterState s1 = kf_update(s0, random_vector(d, rng), Vector::Unit(k, j), {0.2, 1.0});
    for (Eigen::Index b = 0; b < k; ++b) {
      const double change = (s1.mean.segment(b * d, d) - s0.mean.segment(b * d, d)).norm();
      if (b == j) {
        EXPECT_GT(change, 0.0);
      } else {
        EXPECT_EQ(change, 0.0);
      }
    }
  }
}

TEST(Kalman, RejectsInvalidInputs) {
  const FilterState s = FilterState::from_reduced(Matrix::Zero(2, 2), 1.0);
  EXPECT_THROW(kf_update(s, Vector::Zero(2), Vector::Constant(2, 0.7), {}), ConfigError);
  EXPECT_THROW(kf_update(s, Vector::Zero(3), Vector::Constant(2, 0.5), {}), ConfigError);
  EXPECT_THROW(kf_update(s, Vector::Zero(2), Vector::Constant(2, 0.5), {1.0, 0.0}), ConfigError);
}

TEST(Kalman, SingularInnovationThrows) {
  FilterState s = FilterState::from_reduced(Matrix::Zero(2, 1), 0.0);
  s.covariance(0, 0) = 1e14;
  EXPECT_THROW(kf_update(s, Vector::Zero(2), Vector::Ones(1), {0.0, 1.0}), NumericalError);
}

TEST(Rls, UnitForgettingGivesSampleMean) {
  FilterState s = make_state(Vector::Zero(1), Matrix::Constant(1, 1, 1e8), 1, 1);
  for (int t = 0; t < 25; ++t) s = rls_update(s, Vector::Constant(1, 3.0), Vector::Ones(1), 1.0);
  EXPECT_NEAR(s.mean(0), 3.0, 1e-6);
}

TEST(Rls, EquivalentToKalmanWithoutDrift) {
  std::mt19937_64 rng(6);
  const Eigen::Index d = 3;
  const Eigen::Index k = 2;
  const Matrix init = random_matrix(d, k, rng);
  FilterState kf = FilterState::from_reduced(init, 0.8);
  FilterState rls = kf;
  for (int t = 0; t < 40; ++t) {
    const Vector y = random_vector(d, rng);
    const Vector c = random_simplex(k, rng);
    kf = kf_update(kf, y, c, {0.0, 1.0});
    rls = rls_update(rls, y, c, 1.0);
  }
  EXPECT_LT((kf.mean - rls.mean).norm(), 1e-10);
  EXPECT_LT((kf.covariance - rls.covariance).norm(), 1e-10);
}

TEST(Rls, ForgettingMatchesWeightedLeastSquares) {
  const std::vector<double> ys{0.0, 1.0, 0.0, 1.0};
  const double p0 = 10.0;
  const double s0 = 0.2;
  auto run = [&](double lambda) {
    FilterState s = make_state(Vector::Constant(1, s0), Matrix::Constant(1, 1, p0), 1, 1);
    for (double y : ys) s = rls_update(s, Vector::Constant(1, y), Vector::Ones(1), lambda);
    return s.mean(0);
  };
  // Closed form: argmin sum lambda^(t-i) (y_i - s)^2 + lambda^t (s - s0)^2 / p0.
  auto oracle = [&](double lambda) {
    const auto t = static_cast<double>(ys.size());
    double num = std::pow(lambda, t) * s0 / p0;
    double den = std::pow(lambda, t) / p0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      const double w = std::pow(lambda, t - 1.0 - static_cast<double>(i));
      num += w * ys[i];
      den += w;
    }
    return num / den;
  };
  EXPECT_NEAR(run(0.5), oracle(0.5), 1e-12);
  EXPECT_NEAR(run(1.0), oracle(1.0), 1e-12);
  EXPECT_GT(run(0.5), run(1.0));
}

TEST(Rls, RejectsBadForgettingFactor) {
  const FilterState s = FilterState::from_reduced(Matrix::Zero(1, 1), 1.0);
  EXPECT_THROW(rls_update(s, Vector::Zero(1), Vector::Ones(1), 0.0), ConfigError);
  EXPECT_THROW(rls_update(s, Vector::Zero(1), Vector::Ones(1), 1.5), ConfigError);
}

TEST(DictionaryLearning, ScalarRunningAverage) {
  std::mt19937_64 rng(7);
  DlState s = DlState::from_reduced(Matrix::Zero(2, 1), Matrix::Zero(1, 1));
  Vector sum = Vector::Zero(2);
  for (int t = 1; t <= 30; ++t) {
    const Vector y = random_vector(2, rng);
    sum += y;
    s = dl_update(s, y, Vector::Ones(1));
    EXPECT_LT((s.mean - sum / t).norm(), 1e-8);
    EXPECT_NEAR(s.gram(0, 0), t, 1e-12);
  }
}

TEST(DictionaryLearning, FirstPurePixelStepFromZeroGram) {
  Matrix init(2, 2);
  init << 1, 2, 3, 4;
  const DlState s0 = DlState::from_reduced(init, Matrix::Zero(2, 2));
  Vector y(2);
  y << -1, 5;
  const DlState s1 = dl_update(s0, y, Vector::Unit(2, 0));
  EXPECT_LT((s1.mean.head(2) - y).norm(), 1e-8);
  EXPECT_EQ(s1.mean(2), 2.0);
  EXPECT_EQ(s1.mean(3), 4.0);
}

TEST(DictionaryLearning, GainDecaysInverselyWithTime) {
  std::mt19937_64 rng(8);
  const Eigen::Index k = 3;
  DlState s = DlState::from_reduced(Matrix::Zero(1, k), Matrix::Zero(k, k));
  auto gain_norm = [&](const DlState& st) {
    const Vector c = Vector::Constant(k, 1.0 / k);
    return (st.gram + c * c.transpose()).ldlt().solve(c).norm();
  };
  double g100 = 0.0;
  for (int t = 1; t <= 1000; ++t) {
    s = dl_update(s, random_vector(1, rng), random_simplex(k, rng));
    if (t == 100) g100 = gain_norm(s);
  }
  const double ratio = g100 / gain_norm(s);
  EXPECT_GT(ratio, 7.0);
  EXPECT_LT(ratio, 13.0);
}

}  // namespace
}  // namespace kfosu
