#ifndef COLLAPSE_LAB_VERIFY_HPP_
#define COLLAPSE_LAB_VERIFY_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "collapse_lab/contrastive_loss.hpp"
#include "collapse_lab/geometry.hpp"
#include "collapse_lab/metrics.hpp"
#include "collapse_lab/random.hpp"
#include "collapse_lab/theory.hpp"
#include "collapse_lab/trainer.hpp"

namespace collapse_lab {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out;
  for (std::size_t k = 0; k < count; ++k)
    out.push_back(count == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1));
  return out;
}

inline CheckResult check_ssem_geometry() {
  double worst = 0.0;
  for (auto [m, n, p] : {std::array<std::size_t, 3>{2, 2, 1}, {3, 4, 2}, {10, 10, 2}}) {
    for (double delta : linspace(0.0, max_delta(m, n), 11)) {
      const SsemSpec spec{m, n, p, delta};
      const auto u = build_ssem(spec, ssem_min_dim(spec));
      worst = std::max(worst, gram_check(u, spec, 1e-10).max_abs_residual);
      for (double c : centroid(u)) worst = std::max(worst, std::abs(c));
    }
  }
  return {"ssem_geometry", worst <= 1e-10, "max gram/centroid residual " + sci(worst)};
}

inline CheckResult check_closed_form() {
  auto rng = make_stream(0x5eed, 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const std::size_t m = 2 + rng() % 4, n = 2 + rng() % 4, p = 1 + rng() % 3;
    const LossParams params{0.1 + 0.9 * unit(rng), unit(rng)};
    const SsemSpec spec{m, n, p, max_delta(m, n) * unit(rng)};
    const double direct = supcl_loss(build_ssem(spec, ssem_min_dim(spec)), params);
    const double closed = ssem_supcl_loss(spec.delta_tilde(), m, n, p, params);
    worst = std::max(worst, std::abs(direct - closed) / std::abs(closed));
  }
  return {"closed_form_loss", worst <= 1e-8, "max relative error " + sci(worst)};
}

inline CheckResult check_gradient() {
  const Layout layout{3, 3, 2};
  const std::size_t d = 7;
  auto rng = make_stream(0x6ead, 2);
  std::normal_distribution<double> normal;
  std::vector<double> u(layout.rows() * d);
  for (double& x : u) x = normal(rng);
  renormalize_rows(u, d);
  LossGradient kernel(layout, d, {0.3, 0.4});
  std::vector<double> grad, scratch;
  kernel(u, grad);
  double worst = 0.0;
  const double h = 1e-5;
  for (std::size_t k = 0; k < u.size(); ++k) {
    auto plus = u, minus = u;
    plus[k] += h;
    minus[k] -= h;
    const double fd = (kernel(plus, scratch) - kernel(minus, scratch)) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - grad[k]) / std::max(1.0, std::abs(grad[k])));
  }
  return {"gradient", worst <= 1e-6, "max relative error " + sci(worst)};
}

inline CheckResult check_solver() {
  double worst = 0.0;
  bool ok = true;
  for (double alpha : linspace(0.0, 1.0, 6))
    for (double tau : linspace(0.1, 1.0, 5)) {
      const auto sol = solve_delta_star(10, 10, tau, alpha);
      if (!sol.collapsed) worst = std::max(worst, sol.h_residual);
      // Collapse exactly when alpha does not exceed the threshold.
      const bool predicted_collapse = alpha <= alpha_threshold(10, 10, tau);
      if (predicted_collapse != sol.collapsed && std::abs(alpha - alpha_threshold(10, 10, tau)) > 1e-9) ok = false;
    }
  return {"delta_solver", ok && worst <= 1e-12, "max h residual " + sci(worst)};
}

inline CheckResult check_thresholds() {
  const double a05 = alpha_threshold(10, 1000000, 0.5);
  const double a09 = alpha_threshold(10, 1000000, 0.9);
  double roundtrip = 0.0;
  for (double tau : {0.2, 0.5, 1.0, 2.0})
    roundtrip = std::max(roundtrip, std::abs(tau_threshold(10, 10, alpha_threshold(10, 10, tau)) - tau) / tau);
  const bool ok = std::abs(a05 - 0.549) <= 1e-3 && std::abs(a09 - 0.804) <= 1e-3 && roundtrip <= 1e-9 &&
                  std::abs(alpha_threshold(10, 10, 1e-3) - 0.1) <= 1e-6;
  return {"collapse_thresholds", ok,
          "alpha_min(tau=0.5)=" + sci(a05) + " alpha_min(tau=0.9)=" + sci(a09) + " roundtrip " + sci(roundtrip)};
}

inline CheckResult check_variance_laws() {
  double worst = 0.0;
  for (double delta : linspace(0.0, max_delta(4, 3), 20)) {
    const SsemSpec spec{4, 3, 2, delta};
    const auto u = build_ssem(spec, ssem_min_dim(spec));
    const auto report = measure_variances(u);
    const auto predicted = predicted_variances(delta, 4, 3);
    worst = std::max({worst, std::abs(report.avg_within - predicted.within), std::abs(report.between - predicted.between)});
  }
  bool bound = true;
  for (std::uint64_t s = 0; s < 10; ++s) {
    TrainConfig c;
    c.m = 3;
    c.n = 4;
    c.d = 5;
    c.seed = s;
    bound = bound && variance_identity_check(init_embeddings(c), 1e-12);
  }
  return {"variance_laws", bound && worst <= 1e-10, "max formula residual " + sci(worst)};
}

inline CheckResult check_similarity_ordering() {
  bool ok = true;
  for (auto [m, n] : {std::pair<std::size_t, std::size_t>{2, 2}, {10, 10}}) {
    for (double delta : linspace(0.0, 1.0, 5)) {
      const SsemSpec spec{m, n, 1, delta};
      ok = ok && similarity_margin(build_ssem(spec, ssem_min_dim(spec))) >= -1e-12;
    }
    const SsemSpec top{m, n, 1, max_delta(m, n)};
    ok = ok && similarity_margin(build_ssem(top, ssem_min_dim(top))) < 0.0;
  }
  return {"similarity_ordering", ok, ok ? "ordering holds up to delta = 1 and breaks at max_delta" : "ordering violated"};
}

inline CheckResult check_cnce_optimality() {
  const std::size_t m = 4, n = 3, p = 2;
  const double tau = 0.5;
  const SsemSpec top{m, n, p, max_delta(m, n)};
  const double at_top = cnce_loss(build_ssem(top, ssem_min_dim(top)), tau);
  bool ok = true;
  for (double delta : linspace(0.0, max_delta(m, n), 12)) {
    const SsemSpec spec{m, n, p, delta};
    const double closed = ssem_cnce_loss(spec.delta_tilde(), n, p, tau);
    ok = ok && at_top <= closed + 1e-12 &&
         std::abs(cnce_loss(build_ssem(spec, ssem_min_dim(spec)), tau) - closed) <= 1e-9 * std::abs(closed);
  }
  return {"cnce_optimality", ok, "cnce loss at max_delta " + sci(at_top)};
}

inline CheckResult check_lemmas() {
  double worst = 0.0;
  for (double delta : linspace(0.0, max_delta(3, 4), 9)) {
    const SsemSpec spec{3, 4, 2, delta};
    const auto u = build_ssem(spec, ssem_min_dim(spec));
    const double c = std::clamp(instance_spread_sum(u), 0.0, 2.0 * 3 * 4 * 4);
    worst = std::max(worst, std::abs(lemma_delta(c, 3, 4, LemmaKind::kInstanceSpread) - delta));
  }
  worst = std::max(worst, std::abs(lemma_delta(-12.0, 3, 4, LemmaKind::kCrossInstanceInner) - max_delta(3, 4)));
  worst = std::max(worst, std::abs(lemma_delta(36.0, 3, 4, LemmaKind::kCrossInstanceInner)));
  return {"lemma_oracles", worst <= 1e-9, "max round-trip error " + sci(worst)};
}

}  // namespace detail

/// Fast invariant suites over every module; each returns one pass/fail line.
inline std::vector<CheckResult> run_invariant_suites() {
  const std::vector<std::function<CheckResult()>> suites = {
      detail::check_ssem_geometry,   detail::check_closed_form,   detail::check_gradient,
      detail::check_solver,          detail::check_thresholds,    detail::check_variance_laws,
      detail::check_similarity_ordering, detail::check_cnce_optimality, detail::check_lemmas,
  };
  std::vector<CheckResult> out;
  for (const auto& suite : suites) {
    try {
      out.push_back(suite());
    } catch (const std::exception& e) {
      out.push_back({"suite", false, std::string("threw: ") + e.what()});
    }
  }
  return out;
}

}  // namespace collapse_lab

#endif  // COLLAPSE_LAB_VERIFY_HPP_
