#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "lltbrw/exact_dist.hpp"

using namespace lltbrw;

namespace {

StepLaw law_of(int d, double zeta0, std::vector<std::vector<double>> axes) {
  return StepLaw::validate({d, zeta0, std::move(axes)});
}

/// Oracle: enumerate all atom sequences of length n and add their products.
std::map<Point, double> brute_force(const StepLaw& law, int n) {
  std::map<Point, double> out{{origin(law.dim()), 1.0}};
  const auto atoms = law.atoms();
  for (int k = 0; k < n; ++k) {
    std::map<Point, double> next;
    for (const auto& [x, p] : out)
      for (const auto& a : atoms) {
        Point y = x;
        if (a.axis >= 0) y[static_cast<std::size_t>(a.axis)] += a.offset;
        next[y] += p * a.prob;
      }
    out = std::move(next);
  }
  return out;
}

std::vector<StepLaw> sample_laws() {
  return {law_of(1, 0.0, {{1.0}}),
          law_of(1, 1.0 / 3, {{2.0 / 3}}),
          law_of(1, 0.1, {{0.3, 0.2, 0.4}}),
          law_of(2, 0.0, {{0.5}, {0.5}}),
          law_of(2, 1.0 / 3, {{1.0 / 3}, {1.0 / 3}}),
          law_of(2, 0.2, {{0.3, 0.1}, {0.4}})};
}

}  // namespace

TEST(DeltaDist, PointMassAtOrigin) {
  const LatticeDist d = delta_dist(law_of(2, 0.2, {{0.4}, {0.4}}));
  EXPECT_EQ(d.size(), 1u);
  EXPECT_EQ(d.at({0, 0}), 1.0);
  EXPECT_EQ(d.at({1, 0}), 0.0);
  EXPECT_EQ(d.total_mass(), 1.0);
}

TEST(ConvolveStep, SmallExamples) {
  const StepLaw simple = law_of(1, 0.0, {{1.0}});
  const LatticeDist one = convolve_step(delta_dist(simple), simple);
  EXPECT_EQ(one.at({-1}), 0.5);
  EXPECT_EQ(one.at({1}), 0.5);
  EXPECT_EQ(one.at({0}), 0.0);
  const LatticeDist two = convolve_step(one, simple);
  EXPECT_EQ(two.at({0}), 0.5);
  EXPECT_EQ(two.at({2}), 0.25);
  EXPECT_EQ(two.at({-2}), 0.25);
  EXPECT_EQ(dist_at(two, {1}), 0.0);
  EXPECT_EQ(dist_at(two, {1000}), 0.0);

  const StepLaw lazy = law_of(1, 0.5, {{0.5}});
  const LatticeDist l1 = convolve_step(delta_dist(lazy), lazy);
  EXPECT_EQ(l1.at({0}), 0.5);
  EXPECT_EQ(l1.at({1}), 0.25);
  EXPECT_EQ(l1.at({-1}), 0.25);
}

TEST(ConvolveStep, MatchesPathEnumeration) {
  for (const StepLaw& law : sample_laws()) {
    const int n_max = law.dim() == 1 ? 8 : 5;
    LatticeDist dist = delta_dist(law);
    for (int n = 1; n <= n_max; ++n) {
      dist = convolve_step(dist, law);
      for (const auto& [z, p] : brute_force(law, n)) EXPECT_NEAR(dist.at(z), p, 1e-15) << format_point(z);
    }
  }
}

TEST(ConvolveStep, InvariantsHoldEveryStep) {
  for (const StepLaw& law : sample_laws()) {
    const bool bipartite = classify(law) == WalkClass::Bipartite;
    LatticeDist dist = delta_dist(law);
    const int n_max = law.dim() == 1 ? 60 : 25;
    for (int n = 1; n <= n_max; ++n) {
      dist = convolve_step(dist, law);
      EXPECT_NEAR(dist.total_mass(), 1.0, 1e-12 * n);
      const auto mass = dist.mass();
      for (std::size_t i = 0; i < mass.size(); ++i) {
        ASSERT_EQ(mass[i], mass[mass.size() - 1 - i]);
        if (bipartite && !parity_matched(n, dist.point_of(i))) {
          ASSERT_EQ(mass[i], 0.0);
        }
      }
    }
  }
}

TEST(ConvolveStep, ThreadCountDoesNotChangeBits) {
  const StepLaw law = law_of(2, 0.2, {{0.3, 0.1}, {0.4}});
  const LatticeDist a = exact_distribution(law, 40, {kDefaultElementBudget, 1});
  const LatticeDist b = exact_distribution(law, 40, {kDefaultElementBudget, 4});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a.mass()[i], b.mass()[i]);
}

TEST(ConvolveStep, CapacityExceeded) {
  const StepLaw law = law_of(2, 0.0, {{0.5}, {0.5}});
  try {
    exact_distribution(law, 10, {100, 1});
    FAIL() << "expected CapacityExceeded";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CapacityExceeded);
  }
}

TEST(CfInvert, Examples) {
  const StepLaw simple = law_of(1, 0.0, {{1.0}});
  EXPECT_NEAR(cf_invert(simple, 2, {0}), 0.5, 1e-10);
  EXPECT_NEAR(cf_invert(simple, 3, {0}), 0.0, 1e-10);
  for (const StepLaw& law : sample_laws()) EXPECT_NEAR(cf_invert(law, 0, origin(law.dim())), 1.0, 1e-12);
}

TEST(CfInvert, ResolutionTooLow) {
  const StepLaw simple = law_of(1, 0.0, {{1.0}});
  const std::size_t minimum = cf_min_panels(simple, 10, {3});
  EXPECT_NO_THROW(cf_invert(simple, 10, {3}, minimum));
  try {
    cf_invert(simple, 10, {3}, minimum - 1);
    FAIL() << "expected ResolutionTooLow";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ResolutionTooLow);
  }
}

TEST(CfInvert, AgreesWithConvolutionOnWholeBox) {
  for (const StepLaw& law : sample_laws()) {
    const int n = law.dim() == 1 ? 30 : 12;
    const LatticeDist dist = exact_distribution(law, n);
    for (std::size_t i = 0; i < dist.size(); ++i) {
      const Point z = dist.point_of(i);
      ASSERT_NEAR(cf_invert(law, n, z), dist.mass()[i], 1e-12) << format_point(z);
    }
  }
}

TEST(CfInvert, MinimumPanelsAlreadyExact) {
  const StepLaw law = law_of(1, 0.1, {{0.3, 0.2, 0.4}});
  const LatticeDist dist = exact_distribution(law, 20);
  for (std::int64_t z = -60; z <= 60; z += 7)
    EXPECT_NEAR(cf_invert(law, 20, {z}, cf_min_panels(law, 20, {z})), dist.at({z}), 1e-13);
}

TEST(CfInvertBox, AgreesWithConvolution) {
  for (const StepLaw& law : sample_laws()) {
    const int n = law.dim() == 1 ? 50 : 20;
    const LatticeDist a = exact_distribution(law, n);
    const LatticeDist b = cf_invert_box(law, n);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a.mass()[i], b.mass()[i], 1e-13);
  }
}

TEST(WriteDistCsv, HeaderAndRows) {
  const StepLaw simple = law_of(1, 0.0, {{1.0}});
  std::ostringstream os;
  write_dist_csv(os, exact_distribution(simple, 1));
  const std::string text = os.str();
  EXPECT_NE(text.find("z1"), std::string::npos);
  EXPECT_NE(text.find("0.5"), std::string::npos);
}
