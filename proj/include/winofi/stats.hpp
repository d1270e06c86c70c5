#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace winofi {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

// Wilson score interval for a binomial proportion (default 95%).
Interval wilson_ci(uint64_t correct, uint64_t total, double z = 1.959963984540054);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

// Upper regularized incomplete gamma Q(a, x); chi-square survival function
// is chi2_p_value(x, k) = Q(k/2, x/2).
double gamma_q(double a, double x);
double chi2_p_value(double chi2, int dof);

// Two-sample chi-square homogeneity test over matched histogram buckets.
// Buckets with too few expected counts are pooled. Returns the p-value.
double chi2_two_sample_p(std::span<const uint64_t> counts_a,
                         std::span<const uint64_t> counts_b);

}  // namespace winofi
