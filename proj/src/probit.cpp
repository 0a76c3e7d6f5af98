#include <cmath>
#include <numbers>

#include "stancekit/gp_inference.hpp"

namespace stancekit {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
// Below this, erfc underflows too early to be useful; switch to the
// asymptotic tail series.
constexpr double kTailStart = -35.0;

double log_normal_pdf(double z) { return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi); }

// Phi(z) ~ N(z)/(-z) * (1 - 1/z^2 + 3/z^4 - 15/z^6 + ...) for z -> -inf.
double tail_series(double z) {
  const double r = 1.0 / (z * z);
  return 1.0 + r * (-1.0 + r * (3.0 + r * (-15.0 + r * (105.0 - 945.0 * r))));
}

}  // namespace

double probit(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double log_probit(double z) {
  if (z >= 0.0) return std::log1p(-0.5 * std::erfc(z * kInvSqrt2));
  if (z > kTailStart) return std::log(0.5 * std::erfc(-z * kInvSqrt2));
  return log_normal_pdf(z) - std::log(-z) + std::log(tail_series(z));
}

double probit_hazard(double z) {
  if (z > kTailStart) return std::exp(log_normal_pdf(z)) / probit(z);
  return -z / tail_series(z);
}

}  // namespace stancekit
