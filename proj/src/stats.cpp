#include "showcast/stats.hpp"

#include <cmath>
#include <limits>

namespace showcast::stats {

namespace {

constexpr int kMaxIterations = 1000;
constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

// Lower regularized P(a, x) by series; valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < kMaxIterations; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized Q(a, x) by modified Lentz; valid for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
  if (!(a > 0.0) || std::isnan(x)) return std::numeric_limits<double>::quiet_NaN();
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

double chi_square_sf(double x, double df) {
  if (df <= 0.0) return 1.0;
  return gamma_q(0.5 * df, 0.5 * x);
}

ChiSquareTest chi_square_test(std::span<const std::array<double, 2>> table) {
  double col[2] = {0.0, 0.0};
  double total = 0.0;
  int rows = 0;
  for (const auto& r : table) {
    col[0] += r[0];
    col[1] += r[1];
    if (r[0] + r[1] > 0.0) ++rows;
  }
  total = col[0] + col[1];
  const int cols = (col[0] > 0.0) + (col[1] > 0.0);
  ChiSquareTest out;
  if (rows < 2 || cols < 2) return out;
  for (const auto& r : table) {
    const double row_total = r[0] + r[1];
    if (row_total <= 0.0) continue;
    for (int k = 0; k < 2; ++k) {
      const double expected = row_total * col[k] / total;
      const double diff = r[k] - expected;
      out.statistic += diff * diff / expected;
    }
  }
  out.df = rows - 1;
  out.p_value = chi_square_sf(out.statistic, out.df);
  return out;
}

double bonferroni_nominal(int c, int g) {
  // Number of ways to partition c categories into g non-empty groups
  // (Stirling number of the second kind): sum_i (-1)^i (g-i)^c / (i! (g-i)!).
  if (g >= c || g <= 1) return 1.0;
  double sum = 0.0;
  for (int i = 0; i < g; ++i) {
    const double term =
        std::exp(c * std::log(double(g - i)) - std::lgamma(i + 1.0) - std::lgamma(double(g - i) + 1.0));
    sum += (i % 2 ? -term : term);
  }
  return std::max(1.0, sum);
}

double bonferroni_ordinal(int c, int g) {
  // C(c-1, g-1) ways to cut an ordered list of c values into g runs.
  if (g >= c || g <= 1) return 1.0;
  return std::round(std::exp(std::lgamma(double(c)) - std::lgamma(double(g)) - std::lgamma(double(c - g + 1))));
}

}  // namespace showcast::stats
