#pragma once

#include <array>
#include <span>
#include <vector>

namespace showcast::stats {

// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
// Series expansion below x < a + 1, Lentz continued fraction above.
double gamma_q(double a, double x);

// P(X >= x) for X ~ chi-square with `df` degrees of freedom.
double chi_square_sf(double x, double df);

// Pearson statistic for an r x 2 contingency table (rows = groups, columns =
// non-event/event counts). Rows and columns with zero total are skipped and
// do not count towards the degrees of freedom.
struct ChiSquareTest {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
};
ChiSquareTest chi_square_test(std::span<const std::array<double, 2>> table);

// Bonferroni multipliers used by CHAID when `c` categories are merged into `g` groups.
double bonferroni_nominal(int c, int g);
double bonferroni_ordinal(int c, int g);

}  // namespace showcast::stats
