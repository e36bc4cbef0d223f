#ifndef COLLAPSE_LAB_CONTRASTIVE_LOSS_HPP_
#define COLLAPSE_LAB_CONTRASTIVE_LOSS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <vector>

#include "collapse_lab/embedding_set.hpp"
#include "collapse_lab/errors.hpp"

namespace collapse_lab {

/// Temperature and loss-combining coefficient.
struct LossParams {
  double tau = 0.1;
  double alpha = 0.5;

  void validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("LossParams: tau must be a finite value > 0");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("LossParams: alpha must lie in [0, 1]");
  }
  bool operator==(const LossParams&) const = default;
};

inline constexpr double kLossNormTolerance = 1e-8;

namespace detail {

// Per-anchor sums shared by all four losses. Logits are u.w / tau.
struct AnchorTerms {
  std::vector<double> lse_all;        // log sum_{w in U} exp(logit)
  std::vector<double> lse_class;      // log sum_{w in U_i} exp(logit)
  std::vector<double> same_instance;  // sum of logits over the anchor's instance, anchor included
  std::vector<double> same_class;     // sum of logits over its class, other instances only
};

inline double log_sum_exp(const std::vector<double>& logits, std::size_t begin, std::size_t end) {
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t b = begin; b < end; ++b) peak = std::max(peak, logits[b]);
  double sum = 0.0;
  for (std::size_t b = begin; b < end; ++b) sum += std::exp(logits[b] - peak);
  return peak + std::log(sum);
}

inline AnchorTerms anchor_terms(const EmbeddingSet& u, double tau) {
  const std::size_t rows = u.rows();
  const std::size_t per_class = u.layout().rows_per_class();
  const std::size_t p = u.augmentations();
  AnchorTerms t;
  t.lse_all.resize(rows);
  t.lse_class.resize(rows);
  t.same_instance.resize(rows);
  t.same_class.resize(rows);
  std::vector<double> logits(rows);
  for (std::size_t a = 0; a < rows; ++a) {
    const auto ua = u.row(a);
    for (std::size_t b = 0; b < rows; ++b) logits[b] = dot(ua, u.row(b)) / tau;
    const std::size_t class_begin = u.class_of(a) * per_class;
    const std::size_t inst_begin = u.instance_of(a) * p;
    t.lse_all[a] = log_sum_exp(logits, 0, rows);
    t.lse_class[a] = log_sum_exp(logits, class_begin, class_begin + per_class);
    double inst = 0.0, cls = 0.0;
    for (std::size_t b = class_begin; b < class_begin + per_class; ++b) {
      if (b >= inst_begin && b < inst_begin + p)
        inst += logits[b];
      else
        cls += logits[b];
    }
    t.same_instance[a] = inst;
    t.same_class[a] = cls;
  }
  return t;
}

inline void require_tau(double tau, const char* who) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError(std::string(who) + ": tau must be a finite value > 0");
}

inline double sup_from_terms(const EmbeddingSet& u, const AnchorTerms& t) {
  const double n = static_cast<double>(u.instances());
  const double p = static_cast<double>(u.augmentations());
  const double positives = (n - 1.0) * p;
  double total = 0.0;
  for (std::size_t a = 0; a < u.rows(); ++a) total += positives * t.lse_all[a] - t.same_class[a];
  return total / (static_cast<double>(u.classes()) * n * (n - 1.0) * p * p);
}

inline double self_from_terms(const EmbeddingSet& u, const AnchorTerms& t, bool class_conditional) {
  const double p = static_cast<double>(u.augmentations());
  double total = 0.0;
  for (std::size_t a = 0; a < u.rows(); ++a)
    total += p * (class_conditional ? t.lse_class[a] : t.lse_all[a]) - t.same_instance[a];
  return total / (static_cast<double>(u.classes() * u.instances()) * p * p);
}

}  // namespace detail

/// Supervised contrastive loss: positives are same-class rows of other instances.
inline double sup_loss(const EmbeddingSet& u, double tau) {
  detail::require_tau(tau, "sup_loss");
  if (u.instances() < 2) throw DomainError("sup_loss: needs n >= 2 instances per class");
  u.require_unit_norm(kLossNormTolerance, "sup_loss");
  return detail::sup_from_terms(u, detail::anchor_terms(u, tau));
}

/// Self-supervised contrastive loss: positives are the anchor's own augmentations,
/// the anchor itself included.
inline double self_loss(const EmbeddingSet& u, double tau) {
  detail::require_tau(tau, "self_loss");
  u.require_unit_norm(kLossNormTolerance, "self_loss");
  return detail::self_from_terms(u, detail::anchor_terms(u, tau), false);
}

/// (1 - alpha) * sup_loss + alpha * self_loss. The supervised term is skipped at alpha = 1.
inline double supcl_loss(const EmbeddingSet& u, const LossParams& params) {
  params.validate();
  if (params.alpha < 1.0 && u.instances() < 2) throw DomainError("supcl_loss: alpha < 1 needs n >= 2");
  u.require_unit_norm(kLossNormTolerance, "supcl_loss");
  const auto terms = detail::anchor_terms(u, params.tau);
  const double self = detail::self_from_terms(u, terms, false);
  if (params.alpha == 1.0) return self;
  return (1.0 - params.alpha) * detail::sup_from_terms(u, terms) + params.alpha * self;
}

/// Class-conditional InfoNCE: like self_loss but the denominator only runs over the anchor's class.
inline double cnce_loss(const EmbeddingSet& u, double tau) {
  detail::require_tau(tau, "cnce_loss");
  u.require_unit_norm(kLossNormTolerance, "cnce_loss");
  return detail::self_from_terms(u, detail::anchor_terms(u, tau), true);
}

namespace detail {

inline void require_ssem_closed_form_domain(double delta_tilde, std::size_t m, std::size_t n, std::size_t p,
                                            const char* who) {
  if (m < 2) throw DomainError(std::string(who) + ": needs m >= 2");
  if (n < 2) throw DomainError(std::string(who) + ": needs n >= 2");
  if (p < 1) throw DomainError(std::string(who) + ": needs p >= 1");
  const double hi = static_cast<double>(n) / static_cast<double>(n - 1);
  if (!(delta_tilde >= 0.0 && delta_tilde <= hi * (1.0 + 1e-12))) {
    std::ostringstream msg;
    msg << who << ": delta_tilde " << delta_tilde << " outside [0, " << hi << "]";
    throw DomainError(msg.str());
  }
}

}  // namespace detail

/// Closed-form SupCL loss of the (m, n, p, delta) SSEM, written in delta_tilde = delta^2 mn/(mn-1).
inline double ssem_supcl_loss(double delta_tilde, std::size_t m, std::size_t n, std::size_t p,
                              const LossParams& params) {
  params.validate();
  detail::require_ssem_closed_form_domain(delta_tilde, m, n, p, "ssem_supcl_loss");
  const double md = static_cast<double>(m), nd = static_cast<double>(n);
  const double tau = params.tau;
  const double same = -delta_tilde / tau;
  const double cross = (-md / (md - 1.0) + delta_tilde * (nd - 1.0) / ((md - 1.0) * nd)) / tau;
  // Both exponents are <= 0 on the admissible range, so the sum needs no shifting.
  const double g = 1.0 + (nd - 1.0) * std::exp(same) + (md - 1.0) * nd * std::exp(cross);
  return std::log(g) + std::log(static_cast<double>(p)) + (1.0 - params.alpha) * delta_tilde / tau;
}

/// Closed-form class-conditional InfoNCE loss of the SSEM.
inline double ssem_cnce_loss(double delta_tilde, std::size_t n, std::size_t p, double tau) {
  detail::require_tau(tau, "ssem_cnce_loss");
  if (n < 1 || p < 1) throw DomainError("ssem_cnce_loss: n and p must be positive");
  const double pd = static_cast<double>(p);
  return std::log(static_cast<double>(n - 1) * pd * std::exp(-delta_tilde / tau) + pd);
}

}  // namespace collapse_lab

#endif  // COLLAPSE_LAB_CONTRASTIVE_LOSS_HPP_
