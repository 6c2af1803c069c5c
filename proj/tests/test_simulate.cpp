#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "gpmle/simulate.hpp"

using namespace gpmle;

namespace {

double brute_force_separation(const Design& d) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = i + 1; j < d.size(); ++j) best = std::min(best, (d.points.row(i) - d.points.row(j)).norm());
  }
  return best;
}

}  // namespace

TEST(Seeds, SplitMixReferenceOutputs) {
  // first two outputs of the reference SplitMix64 generator started from state 0
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(splitmix64(0x9E3779B97F4A7C15ULL), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(stream_seed({5, 9}), splitmix64(splitmix64(5) ^ 9));
  EXPECT_NE(stream_seed({5, 9}), stream_seed({5, 10}));
}

TEST(RandomStream, UniformRangeAndNormalMoments) {
  RandomStream rng(SeedSpec{1, 2});
  const int draws = 200000;
  double s = 0.0;
  double s2 = 0.0;
  double s4 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
  for (int i = 0; i < draws; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  EXPECT_NEAR(s / draws, 0.0, 4.0 / std::sqrt(draws));
  EXPECT_NEAR(s2 / draws, 1.0, 4.0 * std::sqrt(2.0 / draws));
  EXPECT_NEAR(s4 / draws, 3.0, 4.0 * std::sqrt(96.0 / draws));
}

TEST(GenIncreasing, UnperturbedGrids) {
  const Design a = gen_increasing(4, 1, 1.0, 0.0, SeedSpec{});
  ASSERT_EQ(a.size(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(a.points(i, 0), i);
  const Design b = gen_increasing(9, 2, 1.0, 0.0, SeedSpec{});
  ASSERT_EQ(b.size(), 9u);
  for (int i = 0; i < 9; ++i) {
    EXPECT_EQ(b.points(i, 0), i / 3);
    EXPECT_EQ(b.points(i, 1), i % 3);
  }
  EXPECT_EQ(b.regime, Regime::IncreasingDomain);
}

TEST(GenIncreasing, SeparationAtLeastDelta) {
  for (int d = 1; d <= 3; ++d) {
    for (double delta : {0.5, 1.0, 2.0}) {
      for (double p : {0.0, 0.1, 0.2, 0.4}) {
        const Design des = gen_increasing(60, d, delta, p, SeedSpec{static_cast<std::uint64_t>(d), 3});
        EXPECT_GE(brute_force_separation(des), delta * (1.0 - 1e-12)) << "d=" << d << " p=" << p;
      }
    }
  }
  EXPECT_THROW(gen_increasing(10, 1, 1.0, 0.5, SeedSpec{}), DomainError);
  EXPECT_THROW(gen_increasing(10, 4, 1.0, 0.1, SeedSpec{}), DomainError);
  EXPECT_THROW(gen_increasing(10, 1, 0.0, 0.1, SeedSpec{}), DomainError);
}

TEST(GenIncreasing, SameSeedGivesNestedPrefixInOneDimension) {
  const Design big = gen_increasing(100, 1, 1.0, 0.2, SeedSpec{4, 4});
  const Design small = gen_increasing(40, 1, 1.0, 0.2, SeedSpec{4, 4});
  EXPECT_TRUE(small.points == big.points.topRows(40));
}

TEST(GenFixed, GridAndUniform) {
  const Design g = gen_fixed(3, 1, Box::unit(1), FixedMode::Grid, SeedSpec{});
  EXPECT_EQ(g.points(0, 0), 0.0);
  EXPECT_EQ(g.points(1, 0), 0.5);
  EXPECT_EQ(g.points(2, 0), 1.0);
  const Design u = gen_fixed(100, 1, Box::unit(1), FixedMode::Uniform, SeedSpec{9, 0});
  for (int i = 0; i < 100; ++i) {
    EXPECT_GE(u.points(i, 0), 0.0);
    EXPECT_LE(u.points(i, 0), 1.0);
  }
  const Box box{{-1.0, 2.0}, {1.0, 5.0}};
  const Design u2 = gen_fixed(500, 2, box, FixedMode::Uniform, SeedSpec{9, 1});
  for (int i = 0; i < 500; ++i) EXPECT_TRUE(box.contains(u2.points.row(i)));
  EXPECT_EQ(u2.regime, Regime::FixedDomain);
}

TEST(GenFixed, NestedSeparationShrinks) {
  const Design big = gen_fixed(400, 1, Box::unit(1), FixedMode::Uniform, SeedSpec{21, 0});
  const double s50 = min_separation(big.head(50));
  const double s400 = min_separation(big);
  EXPECT_LT(s400, s50);
  EXPECT_LT(s400, 1e-3);
}

TEST(MinSeparation, WorkedValues) {
  Design d;
  d.points.resize(3, 1);
  d.points << 0.0, 1.0, 3.0;
  EXPECT_EQ(min_separation(d), 1.0);
  EXPECT_EQ(min_separation(gen_fixed(9, 2, Box::unit(2), FixedMode::Grid, SeedSpec{})), 0.5);
  EXPECT_EQ(min_separation(gen_increasing(9, 2, 1.0, 0.0, SeedSpec{})), 1.0);
  EXPECT_THROW(min_separation(d.head(1)), DomainError);
}

TEST(MinSeparation, MatchesBruteForce) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    for (int dim = 1; dim <= 3; ++dim) {
      const Design d = gen_fixed(150, dim, Box::unit(dim), FixedMode::Uniform, SeedSpec{s, 77});
      EXPECT_EQ(min_separation(d), brute_force_separation(d));
    }
  }
}

TEST(SampleGp, IdentityFactorGivesRawNormals) {
  const CholFactor id = chol(CovMatrix{Matrix::Identity(6, 6)});
  const Vector y = sample_gp(id, SeedSpec{3, 14});
  RandomStream rng(SeedSpec{3, 14});
  for (int i = 0; i < 6; ++i) EXPECT_EQ(y(i), rng.normal());
}

TEST(SampleGp, Deterministic) {
  const Design d = gen_fixed(30, 1, Box::unit(1), FixedMode::Uniform, SeedSpec{1, 1});
  const CholFactor f = chol(build_cov(KernelSpec::exponential(), {1.0, 2.0}, d));
  const Vector a = sample_gp(f, SeedSpec{8, 8});
  const Vector b = sample_gp(f, SeedSpec{8, 8});
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == sample_gp(f, SeedSpec{8, 9}));
}

TEST(SampleGp, EmpiricalCovarianceMatchesKernel) {
  Design d;
  d.points.resize(3, 1);
  d.points << 0.0, 0.4, 1.3;
  const CovMatrix r = build_cov(KernelSpec::matern(1.5), {2.0, 1.5}, d);
  const CholFactor f = chol(r);
  Matrix acc = Matrix::Zero(3, 3);
  const int reps = 1000000;
  for (int k = 0; k < reps; ++k) {
    const Vector y = sample_gp(f, SeedSpec{99, static_cast<std::uint64_t>(k)});
    acc += y * y.transpose();
  }
  acc /= reps;
  EXPECT_LT((acc - r.entries).norm() / r.entries.norm(), 0.01);
}

TEST(Csv, DesignAndVectorRoundTrip) {
  const Design d = gen_fixed(25, 2, Box::unit(2), FixedMode::Uniform, SeedSpec{5, 5});
  std::stringstream ss;
  write_design_csv(ss, d);
  EXPECT_EQ(ss.str().substr(0, 6), "x1,x2\n");
  const Design back = read_design_csv(ss);
  EXPECT_TRUE(back.points == d.points);
  const Vector y = sample_gp(chol(build_cov(KernelSpec::exponential(), {1.0, 1.0}, d)), SeedSpec{1, 2});
  std::stringstream sy;
  write_vector_csv(sy, y);
  EXPECT_TRUE(read_vector_csv(sy) == y);
  std::stringstream bad("a,b\n1,2\n");
  EXPECT_THROW(read_design_csv(bad), DomainError);
}
