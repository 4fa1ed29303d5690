#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "neuroconn/stats.hpp"

using namespace neuroconn::stats;

namespace {

// P(|T| >= |t|) by composite Simpson integration of the t density on [0, |t|].
double two_tailed_by_quadrature(double t, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * std::numbers::pi);
  auto pdf = [&](double x) { return c * std::pow(1 + x * x / df, -(df + 1) / 2); };
  const int n = 20000;
  const double h = std::abs(t) / n;
  double s = pdf(0) + pdf(std::abs(t));
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * pdf(i * h);
  return 1.0 - 2.0 * s * h / 3.0;
}

}  // namespace

TEST_CASE("incomplete beta against reference values") {
  // scipy.special.betainc
  CHECK(std::abs(incomplete_beta(0.5, 0.5, 0.3) - 0.36901011956554536) < 1e-10);
  CHECK(std::abs(incomplete_beta(2, 3, 0.4) - 0.5248) < 1e-10);
  CHECK(std::abs(incomplete_beta(10, 0.5, 0.9) - 0.15164090963470994) < 1e-10);
  CHECK(std::abs(incomplete_beta(4.5, 0.5, 0.6) - 0.036787497879786156) < 1e-10);
  CHECK(incomplete_beta(2, 3, 0.0) == 0.0);
  CHECK(incomplete_beta(2, 3, 1.0) == 1.0);
}

TEST_CASE("student t against reference values") {
  // scipy.stats.t
  struct Ref { double t, df, p2, cdf; };
  const Ref refs[] = {{2.45, 9, 0.0367567181165944, 0.9816216409417028},
                      {1.69, 9, 0.12528993093071453, 0.9373550345346428},
                      {0.5, 1, 0.7048327646991336, 0.6475836176504333},
                      {3.0, 2, 0.09546596626670913, 0.9522670168666455},
                      {-1.2, 30, 0.23953035088966235, 0.11976517544483117},
                      {10.0, 5, 0.00017094757574296357, 0.9999145262121285},
                      {0.0, 4, 1.0, 0.5}};
  for (const auto& r : refs) {
    CHECK(std::abs(student_t_two_tailed(r.t, r.df) - r.p2) < 1e-10);
    CHECK(std::abs(student_t_cdf(r.t, r.df) - r.cdf) < 1e-10);
  }
}

TEST_CASE("two-tailed p: anchor, symmetry and monotonicity") {
  CHECK(std::abs(student_t_two_tailed(2.45, 9) - 0.037) <= 0.001);
  // One-tailed would be about half.
  CHECK(std::abs(student_t_two_tailed(2.45, 9) / 2 - 0.018) < 0.001);
  for (double df : {1.0, 3.0, 9.0, 50.0}) {
    double prev = 1.0 + 1e-15;
    for (double t = 0.0; t < 8; t += 0.25) {
      const double p = student_t_two_tailed(t, df);
      CHECK(p == student_t_two_tailed(-t, df));
      CHECK(p < prev);
      CHECK(std::abs(p - two_tailed_by_quadrature(t, df)) < 1e-9);
      prev = p;
    }
  }
}

TEST_CASE("t cdf agrees with Monte Carlo") {
  std::mt19937_64 rng(2718);
  for (double df : {3.0, 9.0}) {
    std::student_t_distribution<double> dist(df);
    std::vector<double> draws(1000000);
    for (auto& d : draws) d = dist(rng);
    std::sort(draws.begin(), draws.end());
    for (double t : {-2.0, -0.7, 0.0, 1.0, 2.45}) {
      const double frac = static_cast<double>(std::upper_bound(draws.begin(), draws.end(), t) - draws.begin()) / 1e6;
      CHECK(std::abs(frac - student_t_cdf(t, df)) < 0.003);
    }
  }
}

TEST_CASE("paired t-test") {
  SUBCASE("matches the textbook formula") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> d(0.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<double> a(10), b(10);
      for (int i = 0; i < 10; ++i) { a[i] = d(rng) + 0.4; b[i] = d(rng); }
      double mean = 0;
      for (int i = 0; i < 10; ++i) mean += (a[i] - b[i]) / 10;
      double ss = 0;
      for (int i = 0; i < 10; ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
      const double t = mean / (std::sqrt(ss / 9) / std::sqrt(10.0));
      const auto r = paired_ttest(a, b);
      CHECK(r.df == 9);
      CHECK(std::abs(r.t - t) < 1e-10);
      CHECK(std::abs(r.p_two_tailed - two_tailed_by_quadrature(t, 9)) < 1e-9);
    }
  }
  SUBCASE("zero mean difference") {
    const std::vector<double> a{1, 2, 3, 4}, b{2, 1, 4, 3};
    CHECK(paired_ttest(a, b).t == 0.0);
    CHECK(paired_ttest(a, b).p_two_tailed == 1.0);
  }
  SUBCASE("errors") {
    const std::vector<double> a{1, 2, 3};
    CHECK_THROWS_WITH(paired_ttest(a, a), doctest::Contains("zero variance"));
    CHECK_THROWS(paired_ttest(a, std::vector<double>{1, 2}));
    CHECK_THROWS(paired_ttest(std::vector<double>{1}, std::vector<double>{2}));
  }
}

TEST_CASE("Benjamini-Hochberg") {
  SUBCASE("four-value example") {
    const std::vector<double> p{0.01, 0.02, 0.04, 0.5};
    const auto r = bh_fdr(p, 0.05);
    const std::vector<double> expected{0.04, 0.04, 0.04 * 4 / 3, 0.5};
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(r.adjusted_p[i] - expected[i]) < 1e-12);
    CHECK(r.rejected == std::vector<bool>{true, true, false, false});
  }
  SUBCASE("single p") {
    const std::vector<double> p{0.3};
    CHECK(bh_fdr(p).adjusted_p[0] == 0.3);
  }
  SUBCASE("all equal") {
    const std::vector<double> p(5, 0.03);
    const auto r = bh_fdr(p, 0.05);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(std::abs(r.adjusted_p[i] - 0.03) < 1e-15);
      CHECK(r.rejected[i]);
    }
  }
  SUBCASE("order invariance and monotonicity") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 0.2);
    std::vector<double> p(12);
    for (auto& v : p) v = u(rng);
    const auto r = bh_fdr(p);
    std::vector<std::size_t> order(p.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] < p[b]; });
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(r.adjusted_p[i] >= p[i]);
      CHECK(r.adjusted_p[i] <= 1.0);
      if (i > 0) CHECK(r.adjusted_p[order[i]] >= r.adjusted_p[order[i - 1]]);
    }
    std::vector<double> shuffled(p);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto a = r.adjusted_p, b = bh_fdr(shuffled).adjusted_p;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
  SUBCASE("errors") {
    const std::vector<double> bad{0.1, 1.5};
    CHECK_THROWS(bh_fdr(bad));
  }
}
