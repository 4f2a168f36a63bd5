#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "lltbrw/binomial.hpp"
#include "lltbrw/rng.hpp"

using namespace lltbrw;

namespace {

double binomial_pmf(int n, int k, double p) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
                  (n - k) * std::log1p(-p));
}

/// Upper tail of chi-square with `dof` degrees of freedom (Wilson-Hilferty).
double chi_square_p_value(double stat, int dof) {
  const double k = dof;
  const double x = (std::cbrt(stat / k) - (1 - 2 / (9 * k))) / std::sqrt(2 / (9 * k));
  return 0.5 * std::erfc(x / std::sqrt(2.0));
}

double chi_square_p(int n, double p, int draws, std::uint64_t seed) {
  Stream rng(seed);
  std::vector<double> counts(static_cast<std::size_t>(n + 1), 0.0);
  for (int i = 0; i < draws; ++i) counts[static_cast<std::size_t>(binomial_exact<std::uint64_t>(n, p, rng))] += 1;
  // Pool cells with expected count below 5 into their neighbours.
  double stat = 0, exp_acc = 0, obs_acc = 0;
  int cells = 0;
  for (int k = 0; k <= n; ++k) {
    exp_acc += draws * binomial_pmf(n, k, p);
    obs_acc += counts[static_cast<std::size_t>(k)];
    if (exp_acc >= 5 || k == n) {
      stat += (obs_acc - exp_acc) * (obs_acc - exp_acc) / std::max(exp_acc, 1e-300);
      ++cells;
      exp_acc = obs_acc = 0;
    }
  }
  return chi_square_p_value(stat, cells - 1);
}

}  // namespace

TEST(Rng, DeterministicAndKeyed) {
  Stream a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
  }
  const ReplicateSeed s{7, 3};
  EXPECT_EQ(s.stream(2, 5).next(), s.stream(2, 5).next());
  std::set<std::uint64_t> firsts;
  for (std::uint64_t g = 0; g < 20; ++g)
    for (std::uint64_t o = 0; o < 20; ++o) firsts.insert(s.stream(g, o).next());
  EXPECT_EQ(firsts.size(), 400u);
  EXPECT_NE((ReplicateSeed{7, 3}.stream(0, 0).next()), (ReplicateSeed{7, 4}.stream(0, 0).next()));
}

TEST(Rng, UniformOpenIntervalAndMoments) {
  Stream rng(1);
  double sum = 0, sum_sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
  sum = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum_sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 4 / std::sqrt(n));
  EXPECT_NEAR(sum_sq / n, 1.0, 4 * std::sqrt(2.0 / n));
}

TEST(Binomial, EdgeCases) {
  Stream rng(3);
  EXPECT_EQ(binomial_exact<std::uint64_t>(100, 0.0, rng), 0u);
  EXPECT_EQ(binomial_exact<std::uint64_t>(100, 1.0, rng), 100u);
  EXPECT_EQ(binomial_exact<std::uint64_t>(0, 0.3, rng), 0u);
  const uint128 huge = uint128{1} << 100;
  EXPECT_TRUE(binomial_exact<uint128>(huge, 1.0, rng) == huge);
  EXPECT_THROW(binomial_exact<std::uint64_t>(10, 1.5, rng), Error);
  EXPECT_THROW(binomial_exact<std::uint64_t>(10, -0.1, rng), Error);
}

TEST(Binomial, SmallPmfChiSquare) { EXPECT_GT(chi_square_p(5, 0.3, 1000000, 11), 0.001); }

TEST(Binomial, InversionRegimeChiSquare) { EXPECT_GT(chi_square_p(40, 0.1, 200000, 12), 0.001); }

TEST(Binomial, RejectionRegimeChiSquare) {
  EXPECT_GT(chi_square_p(1000, 0.4, 200000, 13), 0.001);
  EXPECT_GT(chi_square_p(200, 0.75, 200000, 14), 0.001);
}

TEST(Binomial, BillionTrialsMean) {
  Stream rng(15);
  const std::uint64_t n = 1000000000;
  const int draws = 10000;
  double sum = 0, sum_sq = 0;
  for (int i = 0; i < draws; ++i) {
    const double x = static_cast<double>(binomial_exact<std::uint64_t>(n, 0.5, rng));
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / draws;
  const double sd = std::sqrt(n * 0.25);
  EXPECT_NEAR(mean, 5e8, 4 * sd / std::sqrt(draws));
  EXPECT_NEAR(std::sqrt(sum_sq / draws - mean * mean) / sd, 1.0, 0.05);
}

TEST(Binomial, BeyondDirectLimitMeanAndSpread) {
  // 2^40 and 2^90 trials use the order-statistic halving path.
  for (int bits : {40, 90}) {
    Stream rng(100 + bits);
    const uint128 n = uint128{1} << bits;
    const double nd = std::ldexp(1.0, bits);
    const double p = 0.3;
    const int draws = 4000;
    double sum = 0, sum_sq = 0;
    for (int i = 0; i < draws; ++i) {
      const uint128 x = binomial_exact<uint128>(n, p, rng);
      ASSERT_TRUE(x <= n);
      const double centred = (static_cast<double>(x) - nd * p) / std::sqrt(nd * p * (1 - p));
      sum += centred;
      sum_sq += centred * centred;
    }
    EXPECT_NEAR(sum / draws, 0.0, 4 / std::sqrt(draws)) << bits;
    EXPECT_NEAR(sum_sq / draws, 1.0, 0.1) << bits;
  }
}

TEST(Binomial, Deterministic) {
  Stream a(77), b(77);
  for (int i = 0; i < 1000; ++i)
    EXPECT_TRUE(binomial_exact<uint128>(uint128{1} << 70, 0.37, a) == binomial_exact<uint128>(uint128{1} << 70, 0.37, b));
}

TEST(Multinomial, ConservesTrialsAndMatchesMeans) {
  Stream rng(5);
  const std::array<double, 4> probs{0.1, 0.0, 0.6, 0.3};
  std::array<std::uint64_t, 4> out{};
  std::array<double, 4> sums{};
  const int draws = 20000;
  const std::uint64_t n = 1000;
  for (int i = 0; i < draws; ++i) {
    multinomial_exact<std::uint64_t>(n, probs, rng, out);
    ASSERT_EQ(std::accumulate(out.begin(), out.end(), std::uint64_t{0}), n);
    ASSERT_EQ(out[1], 0u);
    for (std::size_t k = 0; k < 4; ++k) sums[k] += static_cast<double>(out[k]);
  }
  for (std::size_t k = 0; k < 4; ++k) {
    const double sd = std::sqrt(n * probs[k] * (1 - probs[k]) / draws);
    EXPECT_NEAR(sums[k] / draws, n * probs[k], 4 * sd + 1e-12);
  }
}

TEST(Multinomial, HugeCountsConserved) {
  Stream rng(6);
  const std::array<double, 3> probs{0.25, 0.5, 0.25};
  std::array<uint128, 3> out{};
  const uint128 n = (uint128{1} << 110) + 12345;
  multinomial_exact<uint128>(n, probs, rng, out);
  EXPECT_TRUE(out[0] + out[1] + out[2] == n);
}

TEST(Multinomial, SizeMismatchThrows) {
  Stream rng(1);
  const std::array<double, 2> probs{0.5, 0.5};
  std::array<std::uint64_t, 3> out{};
  EXPECT_THROW(multinomial_exact<std::uint64_t>(4, probs, rng, out), Error);
}
