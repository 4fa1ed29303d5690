#pragma once

#include <span>
#include <vector>

namespace neuroconn::stats {

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

// Student's t cumulative distribution.
double student_t_cdf(double t, double df);
// P(|T| >= |t|).
double student_t_two_tailed(double t, double df);

struct TTestResult {
  double t = 0.0;
  int df = 0;
  double p_two_tailed = 1.0;
};

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

struct FdrResult {
  std::vector<double> adjusted_p;
  std::vector<bool> rejected;
  double q = 0.05;
};

// Benjamini-Hochberg step-up; outputs are in input order.
FdrResult bh_fdr(std::span<const double> p_values, double q = 0.05);

}  // namespace neuroconn::stats
