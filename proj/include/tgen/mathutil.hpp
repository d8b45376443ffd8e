#ifndef TGEN_MATHUTIL_HPP
#define TGEN_MATHUTIL_HPP

#include <array>
#include <cmath>
#include <span>

namespace tgen {

using Vec2 = std::array<double, 2>;

// Overflow-safe log(1 + exp(x)).
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  return x > 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

double log_sum_exp(std::span<const double> xs);

// Digamma via recurrence to x >= 6 plus the Bernoulli asymptotic series;
// absolute error below 1e-11 for x > 0.
double digamma(double x);

double mean(std::span<const double> xs);

// Population variance (denominator N).
double variance(std::span<const double> xs);

// Median; averages the two middle values for even sizes. Copies its input.
double median(std::span<const double> xs);

// Nearest-rank empirical quantile: the ceil(q*N)-th smallest value, q in (0, 1].
// Copies its input.
double nearest_rank_quantile(std::span<const double> xs, double q);

// Composite Simpson on [a, b] with n subintervals (n made even internally).
template <typename F>
double simpson(F&& f, double a, double b, int n) {
  if (n % 2 != 0) ++n;
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) {
    acc += f(a + i * h) * (i % 2 == 0 ? 2.0 : 4.0);
  }
  return acc * h / 3.0;
}

}  // namespace tgen

#endif  // TGEN_MATHUTIL_HPP
