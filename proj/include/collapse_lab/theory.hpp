#ifndef COLLAPSE_LAB_THEORY_HPP_
#define COLLAPSE_LAB_THEORY_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>

#include "collapse_lab/contrastive_loss.hpp"
#include "collapse_lab/errors.hpp"
#include "collapse_lab/geometry.hpp"

namespace collapse_lab {

namespace detail {

inline void require_classes_and_instances(std::size_t m, std::size_t n, const char* who) {
  if (m < 2) throw DomainError(std::string(who) + ": needs m >= 2");
  if (n < 2) throw DomainError(std::string(who) + ": needs n >= 2");
}

inline void require_alpha(double alpha, const char* who) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError(std::string(who) + ": alpha must lie in [0, 1]");
}

}  // namespace detail

/// Sign of the closed-form loss derivative in delta_tilde (up to a positive factor).
///
/// h(x) = (1-a) - a(n-1) e^{-x/t} + (mn-1-a(m-1)n) e^{(-m/(m-1) + x(n-1)/((m-1)n))/t}
/// is strictly increasing on [0, n/(n-1)].
inline double h_fn(double x, std::size_t m, std::size_t n, double tau, double alpha) {
  detail::require_classes_and_instances(m, n, "h_fn");
  detail::require_tau(tau, "h_fn");
  detail::require_alpha(alpha, "h_fn");
  const double md = static_cast<double>(m), nd = static_cast<double>(n);
  const double hi = nd / (nd - 1.0);
  if (!(x >= 0.0 && x <= hi * (1.0 + 1e-12))) {
    std::ostringstream msg;
    msg << "h_fn: x = " << x << " outside [0, " << hi << "]";
    throw DomainError(msg.str());
  }
  const double cross = (-md / (md - 1.0) + x * (nd - 1.0) / ((md - 1.0) * nd)) / tau;
  return (1.0 - alpha) - alpha * (nd - 1.0) * std::exp(-x / tau) +
         (md * nd - 1.0 - alpha * (md - 1.0) * nd) * std::exp(cross);
}

/// Optimal SSEM parameter for the SupCL loss.
struct DeltaSolution {
  double delta_star = 0.0;        // in [0, 1]
  double delta_tilde_star = 0.0;  // delta_star^2 mn/(mn-1)
  bool collapsed = true;          // h(0) >= 0
  double h_residual = 0.0;        // |h(delta_tilde_star)|, 0 when collapsed
  std::size_t iterations = 0;
};

/// Bracket width the solver always reaches on x.
inline constexpr double kDeltaSolverTolerance = 1e-13;

/// delta* = 0 if h(0) >= 0, otherwise the unique root of h(delta^2 mn/(mn-1)) on (0, 1].
///
/// Bisection on x in (0, mn/(mn-1)]. With the default x_tol = 0 the bracket is
/// halved until it stops shrinking in floating point (well below
/// kDeltaSolverTolerance), so the residual is limited by rounding in h only.
inline DeltaSolution solve_delta_star(std::size_t m, std::size_t n, double tau, double alpha,
                                      double x_tol = 0.0) {
  detail::require_classes_and_instances(m, n, "solve_delta_star");
  detail::require_tau(tau, "solve_delta_star");
  detail::require_alpha(alpha, "solve_delta_star");
  const double mn = static_cast<double>(m * n);
  const double x_one = mn / (mn - 1.0);  // delta = 1

  DeltaSolution sol;
  if (h_fn(0.0, m, n, tau, alpha) >= 0.0) return sol;
  sol.collapsed = false;

  double root;
  if (alpha == 1.0) {
    root = x_one;  // analytic: both exponentials meet exactly at delta = 1
  } else {
    double lo = 0.0, hi = x_one;
    std::size_t it = 0;
    while (true) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double h_mid = h_fn(mid, m, n, tau, alpha);
      ++it;
      if (h_mid == 0.0) {
        lo = hi = mid;
        break;
      }
      (h_mid < 0.0 ? lo : hi) = mid;
      if (hi - lo <= x_tol) break;
    }
    sol.iterations = it;
    root = std::abs(h_fn(lo, m, n, tau, alpha)) <= std::abs(h_fn(hi, m, n, tau, alpha)) ? lo : hi;
  }
  sol.delta_tilde_star = root;
  sol.delta_star = std::min(1.0, std::sqrt(root * (mn - 1.0) / mn));
  sol.h_residual = std::abs(h_fn(root, m, n, tau, alpha));
  return sol;
}

/// Infimum of the alpha values that avoid class collapse at temperature tau:
/// (mn-1+E)/(mn-n+nE), E = exp((m/(m-1))/tau).
///
/// Evaluated with q = 1/E so that small tau cannot overflow; q underflows to 0
/// and the value tends to 1/n.
inline double alpha_threshold(std::size_t m, std::size_t n, double tau) {
  detail::require_classes_and_instances(m, n, "alpha_threshold");
  detail::require_tau(tau, "alpha_threshold");
  const double md = static_cast<double>(m), nd = static_cast<double>(n);
  const double q = std::exp(-(md / (md - 1.0)) / tau);
  return (1.0 + (md * nd - 1.0) * q) / (nd * (1.0 + (md - 1.0) * q));
}

/// Supremum of the temperatures that avoid class collapse for a given alpha.
/// Returns +infinity at alpha = 1 (no temperature collapses).
inline double tau_threshold(std::size_t m, std::size_t n, double alpha) {
  detail::require_classes_and_instances(m, n, "tau_threshold");
  const double md = static_cast<double>(m), nd = static_cast<double>(n);
  if (!(alpha > 1.0 / nd && alpha <= 1.0)) {
    std::ostringstream msg;
    msg << "tau_threshold: alpha must lie in (1/n, 1], got " << alpha;
    throw DomainError(msg.str());
  }
  if (alpha == 1.0) return std::numeric_limits<double>::infinity();
  const double ratio = (md * nd - 1.0 - alpha * (md - 1.0) * nd) / std::fma(alpha, nd, -1.0);
  return 1.0 / ((1.0 - 1.0 / md) * std::log(ratio));
}

/// Open endpoints of the collapse-free region.
struct CollapseBound {
  double alpha_min = 0.0;  // collapse avoided for alpha in (alpha_min, 1]
  double tau_max = 0.0;    // collapse avoided for tau in (0, tau_max); +inf when unbounded
};

/// Within-class and between-class variance of the SSEM at `delta`.
struct PredictedVariances {
  double within = 0.0;
  double between = 0.0;
};

inline PredictedVariances predicted_variances(double delta, std::size_t m, std::size_t n) {
  if (m < 1) throw DomainError("predicted_variances: m must be >= 1");
  const double hi = max_delta(m, n);  // throws for n < 2
  if (!(delta >= 0.0 && delta <= hi * (1.0 + 1e-12))) throw DomainError("predicted_variances: delta outside range");
  const double mn = static_cast<double>(m * n);
  const double within = delta * delta * static_cast<double>(m) * static_cast<double>(n - 1) / (mn - 1.0);
  return {within, 1.0 - within};
}

/// Theory prediction with the per-class batch size substituted for n.
struct EffectiveNPrediction {
  DeltaSolution solution;
  PredictedVariances variances;
};

inline EffectiveNPrediction effective_n_prediction(std::size_t m, std::size_t n_tilde, double tau, double alpha) {
  if (n_tilde < 2) throw DomainError("effective_n_prediction: per-class batch size must be >= 2");
  EffectiveNPrediction out;
  out.solution = solve_delta_star(m, n_tilde, tau, alpha);
  out.variances = predicted_variances(out.solution.delta_star, m, n_tilde);
  return out;
}

/// Minimizer of the closed-form loss, i.e. the SupCL optimum.
inline double optimal_ssem_loss(std::size_t m, std::size_t n, std::size_t p, const LossParams& params) {
  const auto sol = solve_delta_star(m, n, params.tau, params.alpha);
  return ssem_supcl_loss(sol.delta_tilde_star, m, n, p, params);
}

/// Which constrained sub-problem a delta-from-constant map solves.
enum class LemmaKind {
  /// c = sum over same-class instance pairs of E[U_ij]^T E[U_ij'], c in [-mn, mn(n-1)].
  kCrossInstanceInner,
  /// c = sum over same-class instance pairs of ||E[U_ij] - E[U_ij']||^2, c in [0, 2mn^2].
  kInstanceSpread,
};

/// The SSEM parameter that attains a given value of the instance statistic `c`.
inline double lemma_delta(double c, std::size_t m, std::size_t n, LemmaKind which) {
  if (m < 1) throw DomainError("lemma_delta: m must be >= 1");
  if (n < 2) throw DomainError("lemma_delta: n must be >= 2");
  const double md = static_cast<double>(m), nd = static_cast<double>(n);
  const double mn = md * nd;
  // Sums measured on constructed embeddings overshoot the endpoints by rounding.
  constexpr double kSlack = 1e-12;
  double value = 0.0;
  switch (which) {
    case LemmaKind::kCrossInstanceInner: {
      if (!(c >= -mn * (1.0 + kSlack) && c <= mn * (nd - 1.0) * (1.0 + kSlack)))
        throw DomainError("lemma_delta: c outside [-mn, mn(n-1)]");
      c = std::clamp(c, -mn, mn * (nd - 1.0));
      // Factored so both interval endpoints evaluate exactly.
      value = (mn - 1.0) / mn * (1.0 - c / (mn * (nd - 1.0)));
      break;
    }
    case LemmaKind::kInstanceSpread: {
      if (!(c >= 0.0 && c <= 2.0 * md * nd * nd * (1.0 + kSlack)))
        throw DomainError("lemma_delta: c outside [0, 2mn^2]");
      c = std::min(c, 2.0 * md * nd * nd);
      value = (mn - 1.0) * c / (2.0 * mn * mn * (nd - 1.0));
      break;
    }
  }
  return std::sqrt(std::max(0.0, value));
}

}  // namespace collapse_lab

#endif  // COLLAPSE_LAB_THEORY_HPP_
