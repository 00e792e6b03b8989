#pragma once

// Tail probabilities used by the inferential routines.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/quadrature/gauss.hpp>

namespace uidprof::stats {

/// P(F > f) for F ~ F(df1, df2).
inline double f_upper_tail(double f, double df1, double df2) {
  if (std::isnan(f)) return std::numeric_limits<double>::quiet_NaN();
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  boost::math::fisher_f_distribution<double> dist(df1, df2);
  return boost::math::cdf(boost::math::complement(dist, f));
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

/// Two-sided normal-approximation p-value for a z statistic.
inline double normal_two_sided_p(double z) {
  if (std::isnan(z)) return std::numeric_limits<double>::quiet_NaN();
  return std::erfc(std::abs(z) / std::numbers::sqrt2);
}

namespace detail {

// Composite 20-point Gauss-Legendre over equal panels. Both integrands below are
// smooth and confined to a known finite range, so a fixed rule reaches near
// machine precision at a predictable cost (adaptive rules with a relative
// tolerance stall where the inner integral is tiny).
// Against a 48x48-panel reference the error stays below 1e-12 for k <= 11 and
// df from 1 to 5e5.
inline constexpr int kInnerPanels = 8;
inline constexpr int kOuterPanels = 16;

template <class F>
double integrate(F f, double a, double b, int panels) {
  if (!(b > a)) return 0.0;
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double lo = a + i * h;
    total += boost::math::quadrature::gauss<double, 20>::integrate(f, lo, i + 1 == panels ? b : lo + h);
  }
  return total;
}

inline double int_pow(double x, int n) {
  double r = 1.0;
  for (; n > 0; n >>= 1, x *= x)
    if (n & 1) r *= x;
  return r;
}

// Range of k iid standard normals: P(R <= w) = k * int phi(z) [Phi(z) - Phi(z - w)]^(k-1) dz.
// The quadrature nodes do not depend on w, so phi and Phi are tabulated once.
class NormalRange {
 public:
  explicit NormalRange(int k) : k_(k) {
    const auto& x = boost::math::quadrature::gauss<double, 20>::abscissa();
    const auto& wt = boost::math::quadrature::gauss<double, 20>::weights();
    const double a = -8.5, b = 8.5;
    const double h = (b - a) / kInnerPanels;
    for (int p = 0; p < kInnerPanels; ++p) {
      const double mid = a + (p + 0.5) * h;
      const double half = 0.5 * h;
      for (std::size_t i = 0; i < x.size(); ++i) {
        for (double sign : {-1.0, 1.0}) {
          if (x[i] == 0.0 && sign < 0.0) continue;
          const double z = mid + sign * half * x[i];
          z_.push_back(z);
          cdf_.push_back(normal_cdf(z));
          weight_.push_back(half * wt[i] * normal_pdf(z));
        }
      }
    }
  }

  double cdf(double w) const {
    if (w <= 0.0) return 0.0;
    double total = 0.0;
    for (std::size_t j = 0; j < z_.size(); ++j) {
      const double d = cdf_[j] - normal_cdf(z_[j] - w);
      total += weight_[j] * int_pow(std::max(d, 0.0), k_ - 1);
    }
    return std::clamp(k_ * total, 0.0, 1.0);
  }

 private:
  int k_;
  std::vector<double> z_, cdf_, weight_;
};

inline double normal_range_cdf(double w, int k) { return NormalRange(k).cdf(w); }

}  // namespace detail

/// CDF of the studentized range statistic Q with k means and df error degrees
/// of freedom, by numerical integration over the distribution of s = sqrt(chi2_df / df).
/// For df above 1e6 the infinite-df (normal range) limit is used.
inline double studentized_range_cdf(double q, int k, double df) {
  if (k < 2) throw std::invalid_argument("studentized range needs k >= 2");
  if (!(df > 0.0)) throw std::invalid_argument("studentized range needs df > 0");
  if (q <= 0.0) return 0.0;
  if (std::isinf(q)) return 1.0;
  if (df > 1e6) return detail::normal_range_cdf(q, k);

  boost::math::chi_squared_distribution<double> chi2(df);
  const double tail = 1e-17;
  const double s_lo = std::sqrt(boost::math::quantile(chi2, tail) / df);
  const double s_hi = std::sqrt(boost::math::quantile(boost::math::complement(chi2, tail)) / df);

  // log density of s: df^(df/2) s^(df-1) exp(-df s^2 / 2) / (Gamma(df/2) 2^(df/2 - 1))
  const double log_norm =
      0.5 * df * std::log(df) - std::lgamma(0.5 * df) - (0.5 * df - 1.0) * std::log(2.0);
  const detail::NormalRange range(k);
  auto integrand = [&](double s) {
    if (s <= 0.0) return 0.0;
    const double log_f = log_norm + (df - 1.0) * std::log(s) - 0.5 * df * s * s;
    return std::exp(log_f) * range.cdf(q * s);
  };
  return std::clamp(detail::integrate(integrand, s_lo, s_hi, detail::kOuterPanels), 0.0, 1.0);
}

inline double studentized_range_upper_tail(double q, int k, double df) {
  return std::clamp(1.0 - studentized_range_cdf(q, k, df), 0.0, 1.0);
}

}  // namespace uidprof::stats
