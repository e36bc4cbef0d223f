// Command-line front end; kept in a header so tests can drive run_cli directly.
#ifndef COLLAPSE_LAB_TOOLS_CLI_HPP_
#define COLLAPSE_LAB_TOOLS_CLI_HPP_

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "collapse_lab/collapse_lab.hpp"

namespace collapse_lab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Raised for bad input discovered after flag parsing (config contents, env vars).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline nlohmann::json real_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline nlohmann::json to_json(const DeltaSolution& s) {
  return {{"delta_star", s.delta_star},
          {"delta_tilde_star", s.delta_tilde_star},
          {"collapsed", s.collapsed},
          {"h_residual", s.h_residual},
          {"iterations", s.iterations}};
}

inline nlohmann::json to_json(const GramReport& g) {
  return {{"max_abs_residual", g.max_abs_residual},
          {"residual_same_instance", g.residual_same_instance},
          {"residual_same_class", g.residual_same_class},
          {"residual_cross_class", g.residual_cross_class},
          {"passed", g.passed}};
}

inline nlohmann::json load_json(const std::string& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("malformed config '" + path + "': " + e.what());
  }
}

inline std::size_t workers_from_env() {
  const char* env = std::getenv("COLLAPSE_LAB_WORKERS");
  if (env == nullptr || *env == '\0') return 1;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(env, &used);
    if (used != std::string(env).size() || v < 1) throw std::invalid_argument("");
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw UsageError(std::string("COLLAPSE_LAB_WORKERS must be a positive integer, got '") + env + "'");
  }
}

}  // namespace detail

/// Runs the command line; returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Class-collapse analysis for supervised contrastive losses", "collapse_lab"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::optional<std::size_t> workers;
  app.add_option("--config", config_path, "JSON config (TrainConfig for train, SweepConfig for sweep)")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Base seed (overrides config)");
  app.add_option("--out-dir", out_dir, "Directory for output files")->capture_default_str();
  app.add_option("--workers", workers, "Sweep worker threads (default: $COLLAPSE_LAB_WORKERS or 1)")
      ->check(CLI::PositiveNumber);

  std::size_t m = 10, n = 10, p = 2;
  double tau = 0.1, alpha = 0.5, delta = 0.0;
  std::optional<std::size_t> dim;

  auto* build = app.add_subcommand("build", "Construct an SSEM; write embeddings CSV and Gram report");
  build->fallthrough();
  build->add_option("--m", m, "Classes")->capture_default_str();
  build->add_option("--n", n, "Instances per class")->capture_default_str();
  build->add_option("--p", p, "Augmentations per instance")->capture_default_str();
  build->add_option("--delta", delta, "SSEM parameter")->required();
  build->add_option("--dim", dim, "Embedding dimension (default: smallest admissible)");

  auto* solve = app.add_subcommand("solve-delta", "Print the optimal SSEM parameter as JSON");
  solve->fallthrough();
  solve->add_option("--m", m, "Classes")->capture_default_str();
  solve->add_option("--n", n, "Instances per class")->capture_default_str();
  solve->add_option("--tau", tau, "Temperature")->capture_default_str();
  solve->add_option("--alpha", alpha, "Loss-combining coefficient")->capture_default_str();

  std::vector<double> tau_list, alpha_list;
  auto* bounds = app.add_subcommand("bounds", "Print collapse-avoidance bounds for a list of tau or alpha values");
  bounds->fallthrough();
  bounds->add_option("--m", m, "Classes")->capture_default_str();
  bounds->add_option("--n", n, "Instances per class")->capture_default_str();
  auto* tau_opt = bounds->add_option("--tau", tau_list, "Temperatures -> alpha_min")->delimiter(',');
  auto* alpha_opt = bounds->add_option("--alpha", alpha_list, "Coefficients -> tau_max")->delimiter(',');
  tau_opt->excludes(alpha_opt);

  std::optional<std::size_t> t_m, t_n, t_p, t_d, t_epochs;
  std::optional<double> t_tau, t_alpha, t_lr;
  auto* train_cmd = app.add_subcommand("train", "One training run; write history CSV and final variance report");
  train_cmd->fallthrough();
  train_cmd->add_option("--m", t_m, "Classes");
  train_cmd->add_option("--n", t_n, "Instances per class");
  train_cmd->add_option("--p", t_p, "Augmentations per instance");
  train_cmd->add_option("--d", t_d, "Embedding dimension");
  train_cmd->add_option("--tau", t_tau, "Temperature");
  train_cmd->add_option("--alpha", t_alpha, "Loss-combining coefficient");
  train_cmd->add_option("--epochs", t_epochs, "Adam steps");
  train_cmd->add_option("--lr", t_lr, "Learning rate");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run an (alpha, tau) sweep; write CSV, summary and heatmaps");
  sweep_cmd->fallthrough();

  auto* verify_cmd = app.add_subcommand("verify", "Run the invariant suites");
  verify_cmd->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    const std::filesystem::path dir = out_dir;
    auto ensure_dir = [&] {
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());
    };

    if (*build) {
      const SsemSpec spec{m, n, p, delta};
      spec.validate();
      const auto u = build_ssem(spec, dim.value_or(ssem_min_dim(spec)));
      const auto report = gram_check(u, spec, 1e-10);
      ensure_dir();
      io::write_file(dir / "ssem.csv", to_csv(u));
      const auto j = detail::to_json(report);
      io::write_file(dir / "gram_report.json", j.dump(2) + "\n");
      out << j.dump(2) << "\n";
      return report.passed ? kExitOk : kExitFailure;
    }
    if (*solve) {
      out << detail::to_json(solve_delta_star(m, n, tau, alpha)).dump(2) << "\n";
      return kExitOk;
    }
    if (*bounds) {
      if (tau_list.empty() && alpha_list.empty()) throw UsageError("bounds: give --tau or --alpha values");
      nlohmann::json rows = nlohmann::json::array();
      for (double t : tau_list) rows.push_back({{"tau", t}, {"alpha_min", alpha_threshold(m, n, t)}});
      for (double a : alpha_list) rows.push_back({{"alpha", a}, {"tau_max", detail::real_or_null(tau_threshold(m, n, a))}});
      out << (rows.size() == 1 ? rows.front() : rows).dump(2) << "\n";
      return kExitOk;
    }
    if (*train_cmd) {
      TrainConfig config;
      if (!config_path.empty()) {
        const auto j = detail::load_json(config_path);
        try {
          config = j.contains("base") ? j.at("base").get<TrainConfig>() : j.get<TrainConfig>();
        } catch (const std::exception& e) {
          throw UsageError("malformed config '" + config_path + "': " + e.what());
        }
      }
      if (t_m) config.m = *t_m;
      if (t_n) config.n = *t_n;
      if (t_p) config.p = *t_p;
      if (t_d) config.d = *t_d;
      if (t_tau) config.loss.tau = *t_tau;
      if (t_alpha) config.loss.alpha = *t_alpha;
      if (t_epochs) config.epochs = *t_epochs;
      if (t_lr) config.learning_rate = *t_lr;
      if (seed) config.seed = *seed;
      config.validate();
      const auto result = train(config);
      const auto report = measure(result.final);
      ensure_dir();
      io::write_file(dir / "history.csv", to_csv(result.history));
      const nlohmann::json j = report;
      io::write_file(dir / "variance_report.json", j.dump(2) + "\n");
      out << j.dump(2) << "\n";
      return kExitOk;
    }
    if (*sweep_cmd) {
      SweepConfig config;
      if (!config_path.empty()) {
        const auto j = detail::load_json(config_path);
        try {
          config = j.get<SweepConfig>();
        } catch (const std::exception& e) {
          throw UsageError("malformed config '" + config_path + "': " + e.what());
        }
      }
      if (seed) config.base.seed = *seed;
      if (app.get_option("--out-dir")->count() > 0 || config_path.empty()) config.output_dir = dir;
      config.workers = workers ? *workers : (std::getenv("COLLAPSE_LAB_WORKERS") ? detail::workers_from_env() : config.workers);
      config.validate();
      const auto result = run_sweep(config);
      std::error_code ec;
      std::filesystem::create_directories(config.output_dir, ec);
      if (ec) throw std::runtime_error("cannot create '" + config.output_dir.string() + "': " + ec.message());
      emit_csv(result, config.output_dir / "sweep.csv");
      for (auto mode : {HeatmapMode::kTheory, HeatmapMode::kEmpirical, HeatmapMode::kGap})
        render_heatmap(result, mode, config.output_dir / (std::string("heatmap_") + to_string(mode) + ".svg"),
                       config.base.m, config.base.n);
      const nlohmann::json summary = summarize(result);
      io::write_file(config.output_dir / "summary.json", summary.dump(2) + "\n");
      out << "rows " << result.rows.size() << ", failed " << summary["failed_rows"] << ", mean |gap| "
          << io::format_real(summary["mean_abs_gap"].is_number() ? summary["mean_abs_gap"].get<double>() : NAN)
          << ", max |gap| " << io::format_real(summary["max_abs_gap"].get<double>()) << "\n";
      return kExitOk;
    }
    if (*verify_cmd) {
      bool all = true;
      for (const auto& check : run_invariant_suites()) {
        out << (check.passed ? "PASS " : "FAIL ") << check.name << ": " << check.detail << "\n";
        all = all && check.passed;
      }
      out << (all ? "all invariant suites passed" : "invariant suite failures") << "\n";
      return all ? kExitOk : kExitFailure;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {  // ShapeError, DimensionError, NormError, bad config values
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace collapse_lab::cli

#endif  // COLLAPSE_LAB_TOOLS_CLI_HPP_
