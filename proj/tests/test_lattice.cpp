#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "knc/lattice.hpp"
#include "oracles.hpp"

using namespace knc;

namespace {

RealMatrix random_basis(int d, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  RealMatrix b(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) b(i, j) = nd(gen);
  return b + 0.5 * RealMatrix::Identity(d, d);
}

RealMatrix random_integer_basis(int d, std::mt19937_64& gen) {
  std::uniform_int_distribution<int> ud(-20, 20);
  for (;;) {
    RealMatrix b(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) b(i, j) = ud(gen);
    if (std::abs(b.determinant()) > 0.5) return b;
  }
}

RealVector random_vector(int d, std::mt19937_64& gen, double scale) {
  std::uniform_real_distribution<double> ud(-scale, scale);
  RealVector v(d);
  for (int i = 0; i < d; ++i) v(i) = ud(gen);
  return v;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::io;
}

}  // namespace

TEST(PsdFactor, Identity) {
  const RealMatrix l = psd_factor(RealMatrix::Identity(3, 3), 0.0);
  EXPECT_LE(max_abs(RealMatrix(l.transpose() * l - RealMatrix::Identity(3, 3))), 1e-15);
}

TEST(PsdFactor, RankOneWithRidge) {
  RealMatrix q(2, 2);
  q << 1, 1, 1, 1;
  const RealMatrix l = psd_factor(q, 1e-3);
  EXPECT_LE(max_abs(RealMatrix(l.transpose() * l - q - 1e-3 * RealMatrix::Identity(2, 2))), 1e-14);
  EXPECT_GT(std::abs(l.determinant()), 0.0);
}

TEST(PsdFactor, RandomGramMatrices) {
  std::mt19937_64 gen(11);
  for (int rep = 0; rep < 20; ++rep) {
    const int d = 2 + rep % 9;
    const RealMatrix a = random_basis(d, gen);
    const RealMatrix q = a.transpose() * a;
    const RealMatrix l = psd_factor(q, 0.0);
    EXPECT_LE(max_abs(RealMatrix(l.transpose() * l - q)), 1e-11 * q.trace());
  }
}

TEST(PsdFactor, IndefiniteRejected) {
  RealMatrix q(2, 2);
  q << 1, 0, 0, -1;
  EXPECT_EQ(kind_of([&] { psd_factor(q, 0.0); }), ErrorKind::not_psd);
}

TEST(Lll, IdentityUnchanged) {
  const auto lb = lll_reduce(RealMatrix::Identity(4, 4));
  EXPECT_EQ(lb.transform, IntMatrix::Identity(4, 4));
  EXPECT_TRUE(verify_lll(lb.columns, 0.75).ok);
}

TEST(Lll, ShearedBasisReducesToIdentityLattice) {
  RealMatrix b(2, 2);
  b << 1, 100, 0, 1;
  const auto lb = lll_reduce(b);
  EXPECT_TRUE(verify_lll(lb.columns, 0.75).ok);
  for (int j = 0; j < 2; ++j) EXPECT_NEAR(lb.columns.col(j).norm(), 1.0, 1e-12);
  EXPECT_LE(max_abs(RealMatrix(lb.columns - b * lb.transform.cast<double>())), 1e-12);
}

TEST(Lll, ReducedBasisSpansSameIntegerLattice) {
  std::mt19937_64 gen(5);
  for (int rep = 0; rep < 10; ++rep) {
    const RealMatrix b = random_integer_basis(6, gen);
    const auto lb = lll_reduce(b);
    EXPECT_TRUE(verify_lll(lb.columns, lb.delta).ok);
    // The reduced columns expressed in the original basis are integral with
    // unit determinant, so both bases generate the same lattice.
    const RealMatrix reduced = b * lb.transform.cast<double>();
    const auto coeffs = oracle::rational_solve(b, reduced);
    oracle::RatMat t(6, std::vector<oracle::Rational>(6));
    for (std::size_t i = 0; i < 6; ++i) {
      for (std::size_t j = 0; j < 6; ++j) {
        EXPECT_EQ(boost::multiprecision::denominator(coeffs[i][j]), 1);
        t[i][j] = coeffs[i][j];
      }
    }
    const auto det = oracle::rational_det(t);
    EXPECT_TRUE(det == 1 || det == -1);
  }
}

TEST(Lll, QrFactorsHavePositiveDiagonal) {
  std::mt19937_64 gen(9);
  const auto lb = lll_reduce(random_basis(7, gen));
  EXPECT_LE(max_abs(RealMatrix(lb.ortho * lb.upper - lb.columns)), 1e-12);
  for (int i = 0; i < 7; ++i) EXPECT_GT(lb.upper(i, i), 0.0);
  EXPECT_LE(max_abs(RealMatrix(lb.upper.triangularView<Eigen::StrictlyLower>())), 0.0);
}

TEST(Lll, IllConditionedRejected) {
  RealMatrix b(2, 2);
  b << 1, 1, 1, 1 + 1e-14;
  EXPECT_EQ(kind_of([&] { lll_reduce(b); }), ErrorKind::conditioning);
  EXPECT_EQ(kind_of([&] { lll_reduce(RealMatrix::Zero(3, 3)); }), ErrorKind::conditioning);
}

TEST(Lll, DeltaOutOfRangeRejected) {
  EXPECT_EQ(kind_of([&] { lll_reduce(RealMatrix::Identity(2, 2), 1.0); }), ErrorKind::invalid_input);
  EXPECT_EQ(kind_of([&] { lll_reduce(RealMatrix::Identity(2, 2), 0.2); }), ErrorKind::invalid_input);
}

TEST(Babai, LatticePointTargetIsExact) {
  std::mt19937_64 gen(2);
  const RealMatrix b = random_basis(5, gen);
  const auto lb = lll_reduce(b);
  IntVector k(5);
  k << 3, -1, 0, 7, -2;
  const auto sol = babai_nearest_plane(lb, b * k.cast<double>());
  EXPECT_EQ(sol.k, k);
  EXPECT_NEAR(sol.distance, 0.0, 1e-10);
}

TEST(Babai, IdentityRoundsEachCoordinate) {
  const auto lb = lll_reduce(RealMatrix::Identity(3, 3));
  RealVector t(3);
  t << 0.4, -1.6, 2.2;
  const auto sol = babai_nearest_plane(lb, t);
  IntVector expect(3);
  expect << 0, -2, 2;
  EXPECT_EQ(sol.k, expect);
  EXPECT_EQ(sol.method, CvpMethod::babai);
}

TEST(Babai, NeverBeatsExactAndWithinApproximationFactor) {
  std::mt19937_64 gen(77);
  for (int rep = 0; rep < 50; ++rep) {
    const auto lb = lll_reduce(random_basis(6, gen));
    const RealVector t = random_vector(6, gen, 5.0);
    const auto approx = babai_nearest_plane(lb, t);
    const auto exact = cvp_enumerate(lb, t);
    EXPECT_GE(approx.distance, exact.distance - 1e-12);
    EXPECT_LE(approx.distance, std::pow(2.0, 3.0) * exact.distance + 1e-12);
  }
}

TEST(Enumerate, TwoDimensionalByHand) {
  const auto lb = lll_reduce(RealMatrix::Identity(2, 2));
  RealVector t(2);
  t << 0.6, 0.5;
  const auto sol = cvp_enumerate(lb, t);
  IntVector expect(2);
  expect << 1, 0;
  EXPECT_EQ(sol.k, expect);
  EXPECT_NEAR(sol.distance, std::sqrt(0.16 + 0.25), 1e-15);
}

TEST(Enumerate, NoiseAroundLatticePoint) {
  std::mt19937_64 gen(3);
  const RealMatrix b = random_basis(8, gen);
  const auto lb = lll_reduce(b);
  IntVector k(8);
  k << 1, -4, 2, 0, 9, -3, 5, 1;
  const RealVector t = b * k.cast<double>() + RealVector::Constant(8, 1e-12);
  const auto sol = cvp_enumerate(lb, t);
  EXPECT_EQ(sol.k, k);
  EXPECT_LE(sol.distance, 1e-10);
}

TEST(Enumerate, MatchesBruteForceOnRandomInstances) {
  std::mt19937_64 gen(2024);
  for (int rep = 0; rep < 100; ++rep) {
    const int d = 2 + rep % 4;
    const RealMatrix b = RealMatrix::Identity(d, d) + 0.3 * random_basis(d, gen);
    const auto lb = lll_reduce(b);
    const RealVector x = random_vector(d, gen, 3.0);
    const auto exact = cvp_enumerate(lb, b * x);
    const auto brute = cvp_bruteforce(b.transpose() * b, x, 5);
    EXPECT_NEAR(exact.distance, brute.distance, 1e-9) << "instance " << rep;
  }
}

TEST(Enumerate, TieBreaksToLexicographicallySmallest) {
  const auto lb = lll_reduce(RealMatrix::Identity(2, 2));
  RealVector t(2);
  t << 0.5, 0.5;
  const auto sol = cvp_enumerate(lb, t);
  EXPECT_EQ(sol.k, IntVector::Zero(2));
}

TEST(Enumerate, TranslationInvariance) {
  std::mt19937_64 gen(41);
  for (int rep = 0; rep < 20; ++rep) {
    const RealMatrix b = random_basis(5, gen);
    const auto lb = lll_reduce(b);
    const RealVector t = random_vector(5, gen, 2.0);
    IntVector shift(5);
    std::uniform_int_distribution<int> ud(-5, 5);
    for (int i = 0; i < 5; ++i) shift(i) = ud(gen);
    const auto a = cvp_enumerate(lb, t);
    const auto s = cvp_enumerate(lb, t + b * shift.cast<double>());
    EXPECT_NEAR(a.distance, s.distance, 1e-12);
    EXPECT_EQ(s.k - a.k, shift);
  }
}

TEST(Enumerate, DimensionCap) {
  const auto lb = lll_reduce(RealMatrix::Identity(17, 17));
  EXPECT_EQ(kind_of([&] { cvp_enumerate(lb, RealVector::Zero(17)); }), ErrorKind::solver_cap);
  EXPECT_NO_THROW(cvp_enumerate(lb, RealVector::Zero(17), -1.0, 20));
}

TEST(Enumerate, TargetDimensionMismatch) {
  const auto lb = lll_reduce(RealMatrix::Identity(3, 3));
  EXPECT_EQ(kind_of([&] { cvp_enumerate(lb, RealVector::Zero(2)); }), ErrorKind::invalid_input);
}

TEST(BruteForce, TieBreakPrefersZero) {
  RealVector t(1);
  t << 0.5;
  const auto sol = cvp_bruteforce(RealMatrix::Identity(1, 1), t, 2);
  EXPECT_EQ(sol.k(0), 0);
  EXPECT_NEAR(sol.distance, 0.5, 1e-15);
}

TEST(BruteForce, ResourceLimit) {
  EXPECT_EQ(kind_of([&] { cvp_bruteforce(RealMatrix::Identity(10, 10), RealVector::Zero(10), 6); }),
            ErrorKind::resource);
}
