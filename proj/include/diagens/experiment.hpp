#pragma once

#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "diagens/chebyshev.hpp"
#include "diagens/model.hpp"

namespace diagens {

/// A grid of filter runs: one per (chain size, initial state[, order
/// schedule]). Field names double as the config-file keys and as the keys
/// of --key=value overrides.
struct ExperimentConfig {
  // model
  double j = 1.0;
  double g = -1.05;
  double h = 0.5;
  double alpha_margin = 0.01;  // safety margin of the spectral rescaling

  // grid
  std::vector<index_t> sizes;
  std::vector<std::string> states;
  /// Order-vs-size schedules ("sqrt" = ceil(5 sqrt N), "linear" = N,
  /// "nlogn" = ceil(N log2 N), "quadratic" = min(N^2, 400), all rounded up
  /// to even). Empty: a fixed-order sweep controlled by `order` /
  /// `checkpoints`. Nonempty: one single-order run per (size, schedule)
  /// and `checkpoints` must stay empty.
  std::vector<std::string> schedules;

  // filter
  index_t order = 64;     // final series order M (even)
  index_t max_bond = 128;
  double rel_tol = 1e-8;
  double abort_threshold = 1e-2;
  /// Sweep target orders (even, ascending). Empty: the default log-spaced
  /// schedule for `order`. Nonempty: overrides `order`.
  std::vector<index_t> checkpoints;
  /// Chebyshev recurrence degrees whose vectors T_m |rho0> are written to
  /// t_m<degree>.mps inside each run directory (for bond profiling).
  std::vector<index_t> store_orders;
  JacksonForm form = JacksonForm::standard;

  // measurement
  std::vector<std::string> observables{"sx", "sz"};
  bool oracle = true;       // dense reference tables for N <= 14
  bool oracle_osee = false; // exact OSEE per order in the reference table

  // output
  std::string output_dir = "runs";
  long seed = 0;
  index_t workers = 0;  // 0: DIAGENS_WORKERS env var, else 1
  std::string note;     // free-form, recorded in the manifests
};

/// Validates and normalizes (nonempty grid and observables, even ascending
/// orders, known labels; `checkpoints` back-fills `order`). Throws
/// dimension_error with the offending key.
ExperimentConfig normalize_experiment_config(ExperimentConfig cfg);

/// Parses "key = value" lines ('#' comments, [section] headers allowed;
/// keys match on their last dotted component), then applies overrides of
/// the form "--key=value" (dashes optional), then normalizes.
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::vector<std::string>& overrides = {});

/// read file + parse_config_text.
ExperimentConfig parse_config(const std::string& path,
                              const std::vector<std::string>& overrides = {});

/// Round-trippable "key = value" rendering of a config.
std::string config_text(const ExperimentConfig& cfg);

/// Target order of a named schedule at chain size n.
index_t schedule_order(const std::string& schedule, index_t n);

struct RunSummary {
  std::string dir;       // subdirectory under the experiment root
  index_t length = 0;
  std::string state;
  std::string schedule;  // "fixed" or the schedule name
  index_t order = 0;     // final target order
  double alpha = 0.0;
  std::string scalar;    // "f64" or "c128"
  std::string status;    // "ok", "aborted" or "error"
  std::string reason;    // nonempty unless ok
  double seconds = 0.0;
};

struct ExperimentResult {
  std::string root;
  std::vector<RunSummary> runs;
  bool ok() const;
};

/// Executes every run in the grid on a worker pool (`workers` threads; the
/// DIAGENS_WORKERS environment variable is honored when the field is 0 and
/// defaults to 1). Each run writes, into its own directory, a
/// checkpoints.tsv table (one row per target order; aborted targets become
/// failed rows, not exceptions), plus reference.tsv / ensemble.tsv when
/// the oracle is enabled and N <= 14, plus the requested recurrence
/// vectors. The coordinator alone writes runs.tsv and the manifests. All
/// tables are reproduced bit-identically by a re-run; wall-clock timings
/// only ever appear in manifests.
ExperimentResult run(const ExperimentConfig& cfg);

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;  // of log y vs log x (natural log)
  double r_squared = 0.0;  // clamped to [0, 1]
  double range_min = 0.0;  // abscissa actually used
  double range_max = 0.0;
  index_t points = 0;
};

/// Least-squares fit of log y against log x over the points whose x falls
/// in [range_min, range_max]. Needs >= 3 selected points, all positive;
/// throws dimension_error otherwise.
FitResult fit_power_law(
    const std::vector<double>& xs, const std::vector<double>& ys,
    double range_min = 0.0,
    double range_max = std::numeric_limits<double>::infinity());

/// Named experiment presets, desk-scale ({name, config} pairs).
std::vector<std::pair<std::string, ExperimentConfig>> figure_recipes();

struct ProfileRow {
  index_t degree = 0;      // Chebyshev degree of the stored vector
  double tolerance = 0.0;
  index_t bond = 0;        // smallest bond meeting the tolerance
};

/// For every stored recurrence vector t_m*.mps in the run directory and
/// every tolerance: the smallest bond dimension whose truncation keeps the
/// overlap deficit 1 - |<compressed|full>| / (norms) at or below the
/// tolerance, found by bisection. Tolerances must lie in (0, 1].
std::vector<ProfileRow> truncation_profile(
    const std::string& run_dir, const std::vector<double>& tolerances);

/// Tab-separated table with a single header line.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> cells;

  index_t rows() const { return (index_t)cells.size(); }
  index_t col(const std::string& name) const;  // throws when missing
  double number(index_t row, index_t col) const;
  std::vector<double> numbers(const std::string& name) const;
};

Table read_table(const std::string& path);

/// "key = value" file into a map (same syntax the config parser accepts,
/// but keys are kept verbatim and unknown keys are fine).
std::map<std::string, std::string> read_manifest(const std::string& path);

}  // namespace diagens
