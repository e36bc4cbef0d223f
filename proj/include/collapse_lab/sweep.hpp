#ifndef COLLAPSE_LAB_SWEEP_HPP_
#define COLLAPSE_LAB_SWEEP_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "collapse_lab/contrastive_loss.hpp"
#include "collapse_lab/io.hpp"
#include "collapse_lab/metrics.hpp"
#include "collapse_lab/random.hpp"
#include "collapse_lab/theory.hpp"
#include "collapse_lab/trainer.hpp"

namespace collapse_lab {

inline std::vector<double> default_alpha_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(i / 20.0);
  return grid;
}

inline std::vector<double> default_tau_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 20; ++i) grid.push_back(i / 20.0);
  return grid;
}

/// An (alpha, tau) grid of training runs sharing one base configuration.
/// The base config's loss parameters are overridden per cell.
struct SweepConfig {
  TrainConfig base{};
  std::vector<double> alpha_grid = default_alpha_grid();
  std::vector<double> tau_grid = default_tau_grid();
  std::size_t repeats_per_cell = 1;
  std::filesystem::path output_dir = "sweep_out";
  std::size_t workers = 1;

  void validate() const {
    auto increasing = [](const std::vector<double>& g) {
      return !g.empty() && std::adjacent_find(g.begin(), g.end(), std::greater_equal<>()) == g.end();
    };
    if (!increasing(alpha_grid)) throw DomainError("SweepConfig: alpha_grid must be nonempty and strictly increasing");
    if (!increasing(tau_grid)) throw DomainError("SweepConfig: tau_grid must be nonempty and strictly increasing");
    if (alpha_grid.front() < 0.0 || alpha_grid.back() > 1.0) throw DomainError("SweepConfig: alpha values must lie in [0, 1]");
    if (!(tau_grid.front() > 0.0)) throw DomainError("SweepConfig: tau values must be positive");
    if (repeats_per_cell < 1) throw DomainError("SweepConfig: repeats_per_cell must be positive");
    if (workers < 1) throw DomainError("SweepConfig: workers must be positive");
    if (base.m < 2 || base.n < 2) throw DomainError("SweepConfig: theory columns need m >= 2 and n >= 2");
    TrainConfig probe = base;
    probe.loss = {tau_grid.front(), alpha_grid.front()};
    probe.validate();
  }
  bool operator==(const SweepConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const SweepConfig& c) {
  j = nlohmann::json{{"base", c.base},
                     {"alpha_grid", c.alpha_grid},
                     {"tau_grid", c.tau_grid},
                     {"repeats_per_cell", c.repeats_per_cell},
                     {"output_dir", c.output_dir.string()},
                     {"workers", c.workers}};
}

inline void from_json(const nlohmann::json& j, SweepConfig& c) {
  static const char* const kKeys[] = {"base", "alpha_grid", "tau_grid", "repeats_per_cell", "output_dir", "workers"};
  for (const auto& [key, _] : j.items())
    if (std::find_if(std::begin(kKeys), std::end(kKeys), [&](const char* k) { return key == k; }) == std::end(kKeys))
      throw std::invalid_argument("SweepConfig: unknown key '" + key + "'");
  if (j.contains("base")) j.at("base").get_to(c.base);
  if (j.contains("alpha_grid")) j.at("alpha_grid").get_to(c.alpha_grid);
  if (j.contains("tau_grid")) j.at("tau_grid").get_to(c.tau_grid);
  if (j.contains("repeats_per_cell")) j.at("repeats_per_cell").get_to(c.repeats_per_cell);
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("workers")) j.at("workers").get_to(c.workers);
}

/// One training run of the sweep.
struct SweepRow {
  double alpha = 0.0;
  double tau = 0.0;
  std::uint64_t seed = 0;
  double delta_star = 0.0;
  double theory_within = 0.0;
  double empirical_within = 0.0;
  double empirical_between = 0.0;
  double final_loss = 0.0;
  double closed_form_optimal_loss = 0.0;
  double abs_gap = 0.0;
  std::string error;  // non-empty for failed cells; empirical columns are NaN then

  bool failed() const { return !error.empty(); }
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

/// Cell seed = base seed XOR a 64-bit hash of (alpha index, tau index, repeat index).
inline std::uint64_t cell_seed(std::uint64_t base_seed, std::size_t alpha_index, std::size_t tau_index,
                               std::size_t repeat) {
  return base_seed ^ mix64(mix64(mix64(alpha_index) ^ tau_index) ^ repeat);
}

inline SweepRow run_cell(const SweepConfig& config, std::size_t alpha_index, std::size_t tau_index,
                         std::size_t repeat) {
  TrainConfig train_config = config.base;
  train_config.loss = {config.tau_grid.at(tau_index), config.alpha_grid.at(alpha_index)};
  train_config.seed = cell_seed(config.base.seed, alpha_index, tau_index, repeat);
  const std::size_t m = train_config.m, n = train_config.n;

  SweepRow row;
  row.alpha = train_config.loss.alpha;
  row.tau = train_config.loss.tau;
  row.seed = train_config.seed;
  const auto solution = solve_delta_star(m, n, row.tau, row.alpha);
  row.delta_star = solution.delta_star;
  row.theory_within = predicted_variances(solution.delta_star, m, n).within;
  row.closed_form_optimal_loss = ssem_supcl_loss(solution.delta_tilde_star, m, n, train_config.p, train_config.loss);
  try {
    const auto result = train(train_config);
    const auto report = measure(result.final);
    row.empirical_within = report.avg_within;
    row.empirical_between = report.between;
    row.final_loss = result.history.records.back().loss;
    row.abs_gap = std::abs(row.theory_within - row.empirical_within);
  } catch (const std::exception& e) {
    row.error = e.what();
    row.empirical_within = row.empirical_between = row.final_loss = row.abs_gap = std::nan("");
  }
  return row;
}

inline void sort_rows(std::vector<SweepRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.alpha, a.tau, a.seed) < std::tie(b.alpha, b.tau, b.seed);
  });
}

/// Runs every (alpha, tau, repeat) cell on up to `workers` threads. Cells own
/// their state; finished rows are handed to a single collector and sorted by
/// (alpha, tau, seed) before returning.
inline SweepResult run_sweep(const SweepConfig& config) {
  config.validate();
  struct Cell {
    std::size_t alpha_index, tau_index, repeat;
  };
  std::vector<Cell> cells;
  for (std::size_t a = 0; a < config.alpha_grid.size(); ++a)
    for (std::size_t t = 0; t < config.tau_grid.size(); ++t)
      for (std::size_t r = 0; r < config.repeats_per_cell; ++r) cells.push_back({a, t, r});

  SweepResult result;
  result.rows.reserve(cells.size());
  std::mutex collector;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      SweepRow row = run_cell(config, cells[i].alpha_index, cells[i].tau_index, cells[i].repeat);
      std::lock_guard<std::mutex> lock(collector);
      result.rows.push_back(std::move(row));
    }
  };
  const std::size_t threads = std::min(config.workers, cells.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  sort_rows(result.rows);
  return result;
}

inline constexpr const char* kSweepCsvHeader =
    "alpha,tau,seed,delta_star,theory_within,empirical_within,empirical_between,final_loss,closed_form_optimal_loss,"
    "abs_gap";

inline std::string to_csv(const SweepResult& result) {
  std::string out = kSweepCsvHeader;
  out += '\n';
  for (const auto& r : result.rows) {
    out += io::format_real(r.alpha) + ',' + io::format_real(r.tau) + ',' + std::to_string(r.seed) + ',' +
           io::format_real(r.delta_star) + ',' + io::format_real(r.theory_within) + ',' +
           io::format_real(r.empirical_within) + ',' + io::format_real(r.empirical_between) + ',' +
           io::format_real(r.final_loss) + ',' + io::format_real(r.closed_form_optimal_loss) + ',' +
           io::format_real(r.abs_gap) + '\n';
  }
  return out;
}

/// Parses the CSV written by to_csv. Error text is not persisted; failed rows
/// come back with NaN empirical columns and a generic error marker.
inline SweepResult sweep_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kSweepCsvHeader) throw std::invalid_argument("sweep CSV: bad header");
  SweepResult result;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = io::split_csv_line(line);
    if (f.size() != 10) throw std::invalid_argument("sweep CSV: expected 10 fields, got " + std::to_string(f.size()));
    SweepRow r;
    r.alpha = io::parse_real(f[0]);
    r.tau = io::parse_real(f[1]);
    r.seed = std::stoull(f[2]);
    r.delta_star = io::parse_real(f[3]);
    r.theory_within = io::parse_real(f[4]);
    r.empirical_within = io::parse_real(f[5]);
    r.empirical_between = io::parse_real(f[6]);
    r.final_loss = io::parse_real(f[7]);
    r.closed_form_optimal_loss = io::parse_real(f[8]);
    r.abs_gap = io::parse_real(f[9]);
    if (std::isnan(r.empirical_within)) r.error = "failed";
    result.rows.push_back(std::move(r));
  }
  return result;
}

inline void emit_csv(const SweepResult& result, const std::filesystem::path& path) {
  io::write_file(path, to_csv(result));
}

/// Aggregate statistics of a sweep.
struct SweepSummary {
  struct CellStats {
    double alpha = 0.0, tau = 0.0;
    std::size_t runs = 0;
    double theory_within = 0.0;
    double mean_empirical_within = 0.0;
    double std_empirical_within = 0.0;  // sample standard deviation; 0 for a single run
    double mean_abs_gap = 0.0;
  };
  std::vector<CellStats> cells;
  std::size_t rows = 0;
  std::size_t failed_rows = 0;
  double mean_abs_gap = 0.0;  // over successful rows
  double max_abs_gap = 0.0;
};

inline SweepSummary summarize(const SweepResult& result) {
  SweepSummary summary;
  summary.rows = result.rows.size();
  std::map<std::pair<double, double>, std::vector<const SweepRow*>> by_cell;
  double gap_sum = 0.0;
  std::size_t ok = 0;
  for (const auto& r : result.rows) {
    by_cell[{r.alpha, r.tau}].push_back(&r);
    if (r.failed()) {
      ++summary.failed_rows;
      continue;
    }
    gap_sum += r.abs_gap;
    summary.max_abs_gap = std::max(summary.max_abs_gap, r.abs_gap);
    ++ok;
  }
  summary.mean_abs_gap = ok > 0 ? gap_sum / static_cast<double>(ok) : std::nan("");
  for (const auto& [key, rows] : by_cell) {
    SweepSummary::CellStats cell;
    cell.alpha = key.first;
    cell.tau = key.second;
    cell.theory_within = rows.front()->theory_within;
    double sum = 0.0, gaps = 0.0;
    for (const auto* r : rows)
      if (!r->failed()) {
        sum += r->empirical_within;
        gaps += r->abs_gap;
        ++cell.runs;
      }
    if (cell.runs == 0) {
      cell.mean_empirical_within = cell.std_empirical_within = cell.mean_abs_gap = std::nan("");
    } else {
      const double k = static_cast<double>(cell.runs);
      cell.mean_empirical_within = sum / k;
      cell.mean_abs_gap = gaps / k;
      double ss = 0.0;
      for (const auto* r : rows)
        if (!r->failed()) ss += (r->empirical_within - cell.mean_empirical_within) * (r->empirical_within - cell.mean_empirical_within);
      cell.std_empirical_within = cell.runs > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
    }
    summary.cells.push_back(cell);
  }
  return summary;
}

inline void to_json(nlohmann::json& j, const SweepSummary& s) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : s.cells)
    cells.push_back({{"alpha", c.alpha},
                     {"tau", c.tau},
                     {"runs", c.runs},
                     {"theory_within", c.theory_within},
                     {"mean_empirical_within", c.mean_empirical_within},
                     {"std_empirical_within", c.std_empirical_within},
                     {"mean_abs_gap", c.mean_abs_gap}});
  j = nlohmann::json{{"rows", s.rows},
                     {"failed_rows", s.failed_rows},
                     {"mean_abs_gap", s.mean_abs_gap},
                     {"max_abs_gap", s.max_abs_gap},
                     {"cells", cells}};
}

}  // namespace collapse_lab

#endif  // COLLAPSE_LAB_SWEEP_HPP_
