#pragma once

// Random-intercept linear mixed model fit by REML.
//
//   y = X beta + b[group] + e,   b ~ N(0, sigma_b^2),  e ~ N(0, sigma^2)
//
// The fit is profiled on the single ratio gamma = sigma_b^2 / sigma^2. Per-group
// sufficient statistics make every evaluation O(groups * p^2), independent of
// the number of rows:
//
//   V_g^{-1} = I - c_g 11',  c_g = gamma / (1 + gamma n_g),  log|V_g| = log(1 + gamma n_g)

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "uidprof/error.hpp"
#include "uidprof/stats/distributions.hpp"

namespace uidprof::stats {

struct LmmFit {
  std::vector<std::string> terms;
  std::vector<double> beta;
  std::vector<double> se;
  std::vector<double> z;
  std::vector<double> p_value;  // two-sided, normal approximation to beta/se
  double intercept_variance = 0.0;
  double residual_variance = 0.0;
  double variance_ratio = 0.0;
  double log_reml = 0.0;
  bool converged = false;
  int iterations = 0;
  std::size_t n_obs = 0;
  std::size_t n_groups = 0;
};

class LmmNotConverged : public DataError {
 public:
  LmmNotConverged(const std::string& what, LmmFit best) : DataError(what), best_(std::move(best)) {}
  const LmmFit& best_iterate() const { return best_; }

 private:
  LmmFit best_;
};

struct LmmOptions {
  double objective_tolerance = 1e-10;
  int max_iterations = 200;
  double max_ratio = 1e8;
};

/// Streams design rows into per-group sufficient statistics.
class LmmAccumulator {
 public:
  explicit LmmAccumulator(std::vector<std::string> column_names)
      : names_(std::move(column_names)), p_(static_cast<Eigen::Index>(names_.size())) {
    if (names_.empty()) throw InputError("LMM design needs at least one column");
    xtx_ = Eigen::MatrixXd::Zero(p_, p_);
    xty_ = Eigen::VectorXd::Zero(p_);
  }

  void add_row(const std::string& group, std::span<const double> x, double y) {
    if (static_cast<Eigen::Index>(x.size()) != p_)
      throw InputError("LMM design row has wrong width");
    auto [it, inserted] = index_.emplace(group, groups_.size());
    if (inserted) groups_.push_back({0, Eigen::VectorXd::Zero(p_), 0.0});
    auto& g = groups_[it->second];
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), p_);
    xtx_.selfadjointView<Eigen::Lower>().rankUpdate(xv);
    xty_ += xv * y;
    yty_ += y * y;
    ++g.n;
    g.x_sum += xv;
    g.y_sum += y;
    ++n_;
  }

  const std::vector<std::string>& column_names() const { return names_; }
  std::size_t rows() const { return n_; }
  std::size_t groups() const { return groups_.size(); }

 private:
  friend class RandomInterceptReml;
  struct Group {
    std::size_t n;
    Eigen::VectorXd x_sum;  // X_g' 1
    double y_sum;           // 1' y_g
  };
  std::vector<std::string> names_;
  Eigen::Index p_;
  Eigen::MatrixXd xtx_;  // lower triangle filled
  Eigen::VectorXd xty_;
  double yty_ = 0.0;
  std::size_t n_ = 0;
  std::vector<Group> groups_;
  std::unordered_map<std::string, std::size_t> index_;
};

class RandomInterceptReml {
 public:
  struct Evaluation {
    double log_reml = 0.0;
    double gradient = 0.0;
    Eigen::VectorXd beta;
    Eigen::MatrixXd xvx_inv;  // (X' V^{-1} X)^{-1}
    double sigma2 = 0.0;
  };

  explicit RandomInterceptReml(const LmmAccumulator& acc)
      : names_(acc.names_), p_(acc.p_), groups_(acc.groups_), yty_(acc.yty_), n_(acc.n_) {
    xtx_ = acc.xtx_.selfadjointView<Eigen::Lower>();
    xty_ = acc.xty_;
    if (groups_.size() < 2) throw InputError("LMM needs >= 2 groups (essays), got " +
                                             std::to_string(groups_.size()));
    if (n_ <= static_cast<std::size_t>(p_))
      throw InputError("LMM needs more observations than fixed-effect columns");
    check_rank();
  }

  std::size_t n_obs() const { return n_; }
  std::size_t n_groups() const { return groups_.size(); }
  const std::vector<std::string>& column_names() const { return names_; }

  Evaluation evaluate(double gamma) const {
    Eigen::MatrixXd a = xtx_;
    Eigen::VectorXd b = xty_;
    double yvy = yty_;
    double logdet_v = 0.0;
    for (const auto& g : groups_) {
      const double n = static_cast<double>(g.n);
      const double c = gamma / (1.0 + gamma * n);
      a.noalias() -= c * g.x_sum * g.x_sum.transpose();
      b.noalias() -= c * g.y_sum * g.x_sum;
      yvy -= c * g.y_sum * g.y_sum;
      logdet_v += std::log1p(gamma * n);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) throw DataError("LMM: X' V^-1 X is not positive definite");

    Evaluation e;
    e.beta = llt.solve(b);
    const double q = yvy - b.dot(e.beta);
    const double dof = static_cast<double>(n_) - static_cast<double>(p_);
    if (!(q > 0.0)) throw DataError("LMM: residual sum of squares is zero (perfect fit)");
    e.sigma2 = q / dof;
    const auto& l = llt.matrixL();
    double logdet_a = 0.0;
    for (Eigen::Index i = 0; i < p_; ++i) logdet_a += 2.0 * std::log(l(i, i));
    e.log_reml =
        -0.5 * (dof * (1.0 + std::log(2.0 * std::numbers::pi * e.sigma2)) + logdet_v + logdet_a);
    e.xvx_inv = llt.solve(Eigen::MatrixXd::Identity(p_, p_));

    // d/dgamma of each term; dA and dQ pick up -(1+gamma n)^-2 per group.
    double d_logdet_v = 0.0;
    Eigen::MatrixXd da = Eigen::MatrixXd::Zero(p_, p_);
    double dq = 0.0;
    for (const auto& g : groups_) {
      const double n = static_cast<double>(g.n);
      const double u = 1.0 + gamma * n;
      d_logdet_v += n / u;
      const double w = 1.0 / (u * u);
      da.noalias() -= w * g.x_sum * g.x_sum.transpose();
      const double r_sum = g.y_sum - g.x_sum.dot(e.beta);
      dq -= w * r_sum * r_sum;
    }
    const double d_logdet_a = (e.xvx_inv * da).trace();
    e.gradient = -0.5 * (d_logdet_v + d_logdet_a + dof * dq / q);
    return e;
  }

  double objective(double gamma) const { return evaluate(gamma).log_reml; }
  double gradient(double gamma) const { return evaluate(gamma).gradient; }

  /// Maximizes the profiled REML criterion over gamma in [0, max_ratio] with a
  /// bracketing root search on its analytic derivative (Illinois steps, with
  /// bisection when a step leaves the bracket).
  LmmFit fit(const LmmOptions& opt = {}) const {
    int iterations = 0;
    double best_gamma = 0.0;
    Evaluation best = evaluate(0.0);
    ++iterations;
    bool converged = false;

    if (best.gradient <= 0.0) {
      converged = true;  // boundary optimum
    } else {
      double lo = 0.0, g_lo = best.gradient;
      double hi = 1.0;
      Evaluation e_hi = evaluate(hi);
      ++iterations;
      while (e_hi.gradient > 0.0) {
        lo = hi;
        g_lo = e_hi.gradient;
        best_gamma = hi;
        best = e_hi;
        if (hi >= opt.max_ratio || iterations >= opt.max_iterations)
          throw LmmNotConverged("LMM: variance ratio diverges (no interior REML maximum)",
                                make_fit(best_gamma, best, false, iterations));
        hi = std::min(hi * 8.0, opt.max_ratio);
        e_hi = evaluate(hi);
        ++iterations;
      }
      double g_hi = e_hi.gradient;
      if (e_hi.log_reml > best.log_reml) {
        best = e_hi;
        best_gamma = hi;
      }
      double prev_obj = best.log_reml;
      // Near the maximum the criterion is flat to rounding, so on convergence the
      // final bracketed root estimate is reported rather than the highest value seen.
      Evaluation last = best;
      double last_gamma = best_gamma;
      int side = 0;
      while (iterations < opt.max_iterations) {
        double x = lo - g_lo * (hi - lo) / (g_hi - g_lo);
        if (!(x > lo && x < hi)) x = lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
        Evaluation e = evaluate(x);
        ++iterations;
        if (e.log_reml >= best.log_reml) {
          best = e;
          best_gamma = x;
        }
        last = e;
        last_gamma = x;
        if (e.gradient > 0.0) {
          lo = x;
          g_lo = e.gradient;
          if (side == -1) g_hi *= 0.5;
          side = -1;
        } else if (e.gradient < 0.0) {
          hi = x;
          g_hi = e.gradient;
          if (side == 1) g_lo *= 0.5;
          side = 1;
        } else {
          converged = true;
          break;
        }
        const double width = (hi - lo) / std::max(hi, 1e-300);
        const double change = std::abs(e.log_reml - prev_obj);
        prev_obj = e.log_reml;
        if ((change < opt.objective_tolerance && width < 1e-10) || width < 1e-14) {
          converged = true;
          break;
        }
      }
      if (!converged)
        throw LmmNotConverged("LMM: REML optimization did not converge within " +
                                  std::to_string(opt.max_iterations) + " iterations",
                              make_fit(best_gamma, best, false, iterations));
      return make_fit(last_gamma, last, true, iterations);
    }
    return make_fit(best_gamma, best, converged, iterations);
  }

 private:
  LmmFit make_fit(double gamma, const Evaluation& e, bool converged, int iterations) const {
    LmmFit f;
    f.terms = names_;
    f.variance_ratio = gamma;
    f.residual_variance = e.sigma2;
    f.intercept_variance = gamma * e.sigma2;
    f.log_reml = e.log_reml;
    f.converged = converged;
    f.iterations = iterations;
    f.n_obs = n_;
    f.n_groups = groups_.size();
    for (Eigen::Index i = 0; i < p_; ++i) {
      const double b = e.beta(i);
      const double se = std::sqrt(std::max(0.0, e.sigma2 * e.xvx_inv(i, i)));
      f.beta.push_back(b);
      f.se.push_back(se);
      f.z.push_back(b / se);
      f.p_value.push_back(normal_two_sided_p(b / se));
    }
    return f;
  }

  // Sequential projection on X'X: column j is collinear when its residual after
  // projecting on the accepted earlier columns vanishes.
  void check_rank() const {
    std::vector<Eigen::Index> kept;
    for (Eigen::Index j = 0; j < p_; ++j) {
      const double diag = xtx_(j, j);
      if (diag <= 0.0) throw InputError("LMM design is rank-deficient: column '" + names_[j] + "' is all zeros");
      double resid = diag;
      Eigen::VectorXd coef;
      if (!kept.empty()) {
        const auto m = static_cast<Eigen::Index>(kept.size());
        Eigen::MatrixXd s(m, m);
        Eigen::VectorXd b(m);
        for (Eigen::Index r = 0; r < m; ++r) {
          b(r) = xtx_(kept[r], j);
          for (Eigen::Index c = 0; c < m; ++c) s(r, c) = xtx_(kept[r], kept[c]);
        }
        coef = s.ldlt().solve(b);
        resid = diag - b.dot(coef);
      }
      if (resid <= 1e-10 * diag) {
        std::string msg = "LMM design is rank-deficient: column '" + names_[j] +
                          "' is collinear with";
        const double scale = std::sqrt(diag);
        bool any = false;
        for (std::size_t r = 0; r < kept.size(); ++r) {
          if (std::abs(coef(static_cast<Eigen::Index>(r))) * std::sqrt(xtx_(kept[r], kept[r])) >
              1e-8 * scale) {
            msg += (any ? ", '" : " '") + names_[kept[r]] + "'";
            any = true;
          }
        }
        throw InputError(msg);
      }
      kept.push_back(j);
    }
  }

  std::vector<std::string> names_;
  Eigen::Index p_;
  std::vector<LmmAccumulator::Group> groups_;
  Eigen::MatrixXd xtx_;
  Eigen::VectorXd xty_;
  double yty_;
  std::size_t n_;
};

/// Dense-input convenience: rows of `x` (n x p), responses `y`, group id per row.
inline LmmFit fit_lmm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const std::vector<std::string>& groups,
                      const std::vector<std::string>& column_names, const LmmOptions& opt = {}) {
  if (x.rows() != y.size() || static_cast<std::size_t>(x.rows()) != groups.size())
    throw InputError("LMM: X, y and groups must have the same number of rows");
  LmmAccumulator acc(column_names);
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) row[static_cast<std::size_t>(j)] = x(i, j);
    acc.add_row(groups[static_cast<std::size_t>(i)], row, y(i));
  }
  return RandomInterceptReml(acc).fit(opt);
}

}  // namespace uidprof::stats
