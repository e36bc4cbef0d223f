#ifndef COLLAPSE_LAB_TRAINER_HPP_
#define COLLAPSE_LAB_TRAINER_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "collapse_lab/contrastive_loss.hpp"
#include "collapse_lab/embedding_set.hpp"
#include "collapse_lab/errors.hpp"
#include "collapse_lab/io.hpp"
#include "collapse_lab/metrics.hpp"
#include "collapse_lab/random.hpp"

namespace collapse_lab {

struct AdamMoments {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool operator==(const AdamMoments&) const = default;
};

/// Direct optimization of m*n*p unit vectors in R^d. Defaults follow the
/// synthetic experiment: 1000 epochs of full-batch Adam at learning rate 0.5.
struct TrainConfig {
  std::size_t m = 10;
  std::size_t n = 10;
  std::size_t p = 2;
  std::size_t d = 100;
  LossParams loss{};
  std::size_t epochs = 1000;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
  AdamMoments optimizer_moments{};

  Layout layout() const { return {m, n, p}; }

  void validate() const {
    if (m < 1 || n < 1 || p < 1 || d < 1) throw DomainError("TrainConfig: m, n, p, d must be positive");
    loss.validate();
    if (loss.alpha < 1.0 && n < 2) throw DomainError("TrainConfig: alpha < 1 needs n >= 2");
    if (epochs < 1) throw DomainError("TrainConfig: epochs must be positive");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw DomainError("TrainConfig: learning_rate must be a finite value > 0");
    const auto& mo = optimizer_moments;
    if (!(mo.beta1 >= 0.0 && mo.beta1 < 1.0) || !(mo.beta2 >= 0.0 && mo.beta2 < 1.0) || !(mo.epsilon > 0.0))
      throw DomainError("TrainConfig: Adam moments need beta1, beta2 in [0, 1) and epsilon > 0");
  }
  bool operator==(const TrainConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"m", c.m},
                     {"n", c.n},
                     {"p", c.p},
                     {"d", c.d},
                     {"loss", {{"tau", c.loss.tau}, {"alpha", c.loss.alpha}}},
                     {"epochs", c.epochs},
                     {"learning_rate", c.learning_rate},
                     {"seed", c.seed},
                     {"optimizer_moments",
                      {{"beta1", c.optimizer_moments.beta1},
                       {"beta2", c.optimizer_moments.beta2},
                       {"epsilon", c.optimizer_moments.epsilon}}}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  static const char* const kKeys[] = {"m", "n", "p", "d", "loss", "epochs", "learning_rate", "seed", "optimizer_moments"};
  for (const auto& [key, _] : j.items())
    if (std::find_if(std::begin(kKeys), std::end(kKeys), [&](const char* k) { return key == k; }) == std::end(kKeys))
      throw std::invalid_argument("TrainConfig: unknown key '" + key + "'");
  if (j.contains("m")) j.at("m").get_to(c.m);
  if (j.contains("n")) j.at("n").get_to(c.n);
  if (j.contains("p")) j.at("p").get_to(c.p);
  if (j.contains("d")) j.at("d").get_to(c.d);
  if (j.contains("loss")) {
    const auto& l = j.at("loss");
    if (l.contains("tau")) l.at("tau").get_to(c.loss.tau);
    if (l.contains("alpha")) l.at("alpha").get_to(c.loss.alpha);
  }
  if (j.contains("epochs")) j.at("epochs").get_to(c.epochs);
  if (j.contains("learning_rate")) j.at("learning_rate").get_to(c.learning_rate);
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
  if (j.contains("optimizer_moments")) {
    const auto& o = j.at("optimizer_moments");
    if (o.contains("beta1")) o.at("beta1").get_to(c.optimizer_moments.beta1);
    if (o.contains("beta2")) o.at("beta2").get_to(c.optimizer_moments.beta2);
    if (o.contains("epsilon")) o.at("epsilon").get_to(c.optimizer_moments.epsilon);
  }
}

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double avg_within_var = 0.0;
  double between_var = 0.0;
  double min_row_norm = 0.0;  // smallest row norm before that step's renormalization
};

/// One record per epoch, epoch 0 being the initial state.
struct TrainHistory {
  std::vector<EpochRecord> records;
};

inline std::string to_csv(const TrainHistory& history) {
  std::string out = "epoch,loss,avg_within_var,between_var\n";
  for (const auto& r : history.records) {
    out += std::to_string(r.epoch) + ',' + io::format_real(r.loss) + ',' + io::format_real(r.avg_within_var) + ',' +
           io::format_real(r.between_var) + '\n';
  }
  return out;
}

namespace detail {

// Scales each row of a row-major table to unit norm; returns the smallest norm seen.
inline double renormalize_rows(std::vector<double>& data, std::size_t dim) {
  double min_norm = std::numeric_limits<double>::infinity();
  for (std::size_t off = 0; off < data.size(); off += dim) {
    double sq = 0.0;
    for (std::size_t c = 0; c < dim; ++c) sq += data[off + c] * data[off + c];
    const double norm = std::sqrt(sq);
    min_norm = std::min(min_norm, norm);
    for (std::size_t c = 0; c < dim; ++c) data[off + c] /= norm;
  }
  return min_norm;
}

}  // namespace detail

/// Row-wise renormalization of an embedding set.
inline EmbeddingSet renormalize(const EmbeddingSet& u) {
  std::vector<double> data(u.data().begin(), u.data().end());
  detail::renormalize_rows(data, u.dim());
  return EmbeddingSet(u.layout(), u.dim(), std::move(data));
}

namespace detail {

inline std::pair<EmbeddingSet, double> init_with_min_norm(const TrainConfig& config) {
  const std::size_t rows = config.layout().rows();
  std::vector<double> data(rows * config.d);
  for (std::size_t r = 0; r < rows; ++r) {
    auto rng = make_stream(config.seed, r);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t c = 0; c < config.d; ++c) data[r * config.d + c] = normal(rng);
  }
  const double min_norm = renormalize_rows(data, config.d);
  return {EmbeddingSet(config.layout(), config.d, std::move(data)), min_norm};
}

}  // namespace detail

/// Standard-normal rows scaled to unit norm; row r uses stream r of config.seed.
inline EmbeddingSet init_embeddings(const TrainConfig& config) {
  config.validate();
  return detail::init_with_min_norm(config).first;
}

/// Loss value and Euclidean gradient of the SupCL loss over raw coordinates.
///
/// With logits S = U U^T / tau, row softmax P and positive-pair weights C
/// (C_ab = (1-a)/(mn(n-1)p^2) for other instances of the anchor's class,
/// a/(mnp^2) within its instance), the loss is sum_a r_a lse_a - sum_ab C_ab S_ab
/// with r_a = sum_b C_ab, and dL/dU = (M + M^T) U / tau for M = diag(r) P - C.
/// Buffers are reused across calls.
class LossGradient {
 public:
  LossGradient(Layout layout, std::size_t dim, LossParams params)
      : layout_(layout), dim_(dim), params_(params), rows_(layout.rows()) {
    params_.validate();
    if (params_.alpha < 1.0 && layout_.instances < 2) throw DomainError("loss_and_grad: alpha < 1 needs n >= 2");
    const double m = static_cast<double>(layout_.classes);
    const double n = static_cast<double>(layout_.instances);
    const double p = static_cast<double>(layout_.augmentations);
    self_weight_ = params_.alpha / (m * n * p * p);
    sup_weight_ = params_.alpha < 1.0 ? (1.0 - params_.alpha) / (m * n * (n - 1.0) * p * p) : 0.0;
    row_weight_ = p * self_weight_ + (n - 1.0) * p * sup_weight_;
    transposed_.resize(dim_ * rows_);
    logits_.resize(rows_ * rows_);
  }

  /// Returns the loss at `u` (rows x dim, row-major) and writes the gradient into `grad`.
  double operator()(const std::vector<double>& u, std::vector<double>& grad) {
    const std::size_t N = rows_, d = dim_;
    const double inv_tau = 1.0 / params_.tau;
    for (std::size_t r = 0; r < N; ++r)
      for (std::size_t c = 0; c < d; ++c) transposed_[c * N + r] = u[r * d + c];

    const std::size_t per_class = layout_.rows_per_class();
    const std::size_t p = layout_.augmentations;
    double loss = 0.0;
    for (std::size_t a = 0; a < N; ++a) {
      double* s = logits_.data() + a * N;
      std::fill(s, s + N, 0.0);
      for (std::size_t c = 0; c < d; ++c) {
        const double x = u[a * d + c] * inv_tau;
        const double* col = transposed_.data() + c * N;
        for (std::size_t b = 0; b < N; ++b) s[b] += x * col[b];
      }
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t b = 0; b < N; ++b) peak = std::max(peak, s[b]);
      double z = 0.0;
      for (std::size_t b = 0; b < N; ++b) z += std::exp(s[b] - peak);
      const double lse = peak + std::log(z);

      const std::size_t class_begin = (a / per_class) * per_class;
      const std::size_t inst_begin = (a / p) * p;
      double positive = 0.0;
      for (std::size_t b = class_begin; b < class_begin + per_class; ++b)
        positive += (b >= inst_begin && b < inst_begin + p ? self_weight_ : sup_weight_) * s[b];
      loss += row_weight_ * lse - positive;

      // Overwrite the logits row with M_a. = r_a * softmax - C_a.
      for (std::size_t b = 0; b < N; ++b) s[b] = row_weight_ * std::exp(s[b] - lse);
      for (std::size_t b = class_begin; b < class_begin + per_class; ++b)
        s[b] -= (b >= inst_begin && b < inst_begin + p) ? self_weight_ : sup_weight_;
    }

    grad.assign(N * d, 0.0);
    for (std::size_t a = 0; a < N; ++a) {
      double* g = grad.data() + a * d;
      for (std::size_t b = 0; b < N; ++b) {
        const double w = (logits_[a * N + b] + logits_[b * N + a]) * inv_tau;
        const double* ub = u.data() + b * d;
        for (std::size_t c = 0; c < d; ++c) g[c] += w * ub[c];
      }
    }
    return loss;
  }

 private:
  Layout layout_;
  std::size_t dim_;
  LossParams params_;
  std::size_t rows_;
  double self_weight_ = 0.0, sup_weight_ = 0.0, row_weight_ = 0.0;
  std::vector<double> transposed_;
  std::vector<double> logits_;
};

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;  // rows x d, row-major
};

inline LossAndGrad loss_and_grad(const EmbeddingSet& u, const LossParams& params) {
  u.require_unit_norm(kLossNormTolerance, "loss_and_grad");
  LossGradient kernel(u.layout(), u.dim(), params);
  LossAndGrad out;
  const std::vector<double> coords(u.data().begin(), u.data().end());
  out.loss = kernel(coords, out.grad);
  return out;
}

/// Variance measurements of an embedding set.
inline VarianceReport measure(const EmbeddingSet& u) { return measure_variances(u); }

struct TrainResult {
  EmbeddingSet final;
  TrainHistory history;
};

/// Full-batch Adam on the flattened coordinates; every row is rescaled to unit
/// norm after each update. Moments track the raw coordinates.
inline TrainResult train(const TrainConfig& config) {
  config.validate();
  auto [initial, init_min_norm] = detail::init_with_min_norm(config);
  const Layout layout = config.layout();
  const std::size_t d = config.d;
  std::vector<double> coords(initial.data().begin(), initial.data().end());
  std::vector<double> grad, first(coords.size(), 0.0), second(coords.size(), 0.0);
  LossGradient kernel(layout, d, config.loss);
  const auto& mo = config.optimizer_moments;

  TrainHistory history;
  history.records.reserve(config.epochs + 1);
  double min_norm = init_min_norm;
  double beta1_power = 1.0, beta2_power = 1.0;

  auto record = [&](std::size_t epoch, double loss) {
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "train: non-finite loss " << loss << " at epoch " << epoch;
      throw DivergenceError(epoch, msg.str());
    }
    const EmbeddingSet current(layout, d, coords);
    const auto report = measure_variances(current);
    history.records.push_back({epoch, loss, report.avg_within, report.between, min_norm});
  };

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double loss = kernel(coords, grad);
    record(epoch, loss);
    beta1_power *= mo.beta1;
    beta2_power *= mo.beta2;
    const double lr = config.learning_rate;
    for (std::size_t k = 0; k < coords.size(); ++k) {
      first[k] = mo.beta1 * first[k] + (1.0 - mo.beta1) * grad[k];
      second[k] = mo.beta2 * second[k] + (1.0 - mo.beta2) * grad[k] * grad[k];
      const double m_hat = first[k] / (1.0 - beta1_power);
      const double v_hat = second[k] / (1.0 - beta2_power);
      coords[k] -= lr * m_hat / (std::sqrt(v_hat) + mo.epsilon);
    }
    min_norm = detail::renormalize_rows(coords, d);
    if (!std::isfinite(min_norm) || min_norm == 0.0) {
      std::ostringstream msg;
      msg << "train: degenerate row norm " << min_norm << " at epoch " << epoch + 1;
      throw DivergenceError(epoch + 1, msg.str());
    }
  }
  const double final_loss = kernel(coords, grad);
  record(config.epochs, final_loss);
  return {EmbeddingSet(layout, d, std::move(coords)), std::move(history)};
}

}  // namespace collapse_lab

#endif  // COLLAPSE_LAB_TRAINER_HPP_
