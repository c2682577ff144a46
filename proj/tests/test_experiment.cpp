#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "diagens/chebyshev.hpp"
#include "diagens/experiment.hpp"
#include "test_helpers.hpp"

using namespace diagens;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("diagens_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  return {std::istreambuf_iterator<char>(is),
          std::istreambuf_iterator<char>()};
}

/// Smallest grid that exercises the full table set quickly.
ExperimentConfig tiny_config(const std::string& out_dir) {
  ExperimentConfig cfg;
  cfg.sizes = {4};
  cfg.states = {"X+", "Z+"};
  cfg.checkpoints = {4, 8};
  cfg.max_bond = 32;
  cfg.rel_tol = 0.0;  // tiny chain: keep every singular value
  cfg.observables = {"sx", "sz"};
  cfg.oracle = true;
  cfg.store_orders = {0, 4, 8};
  cfg.output_dir = out_dir;
  return cfg;
}

}  // namespace

TEST_CASE("power-law fit recovers exact exponents") {
  std::vector<double> xs = {1, 2, 4, 8, 16};
  std::vector<double> ys;
  for (double x : xs) ys.push_back(1.0 / (x * x));

  const FitResult fit = fit_power_law(xs, ys);
  REQUIRE_THAT(fit.slope, Catch::Matchers::WithinAbs(-2.0, 1e-12));
  REQUIRE_THAT(fit.intercept, Catch::Matchers::WithinAbs(0.0, 1e-12));
  REQUIRE_THAT(fit.r_squared, Catch::Matchers::WithinAbs(1.0, 1e-12));
  REQUIRE(fit.points == 5);
  REQUIRE(fit.range_min == 1.0);
  REQUIRE(fit.range_max == 16.0);

  // range selection drops out-of-window points
  const FitResult mid = fit_power_law(xs, ys, 2.0, 8.0);
  REQUIRE(mid.points == 3);
  REQUIRE(mid.range_min == 2.0);
  REQUIRE(mid.range_max == 8.0);
  REQUIRE_THAT(mid.slope, Catch::Matchers::WithinAbs(-2.0, 1e-12));

  // a noisy positive-slope set still lands in [0, 1]
  std::vector<double> yn = {1.1, 1.9, 4.3, 7.6, 16.9};
  const FitResult noisy = fit_power_law(xs, yn);
  REQUIRE(noisy.r_squared >= 0.0);
  REQUIRE(noisy.r_squared <= 1.0);
  REQUIRE(noisy.slope > 0.9);
}

TEST_CASE("power-law fit rejects unusable data") {
  REQUIRE_THROWS_AS(fit_power_law({1, 2}, {1, 2}), dimension_error);
  REQUIRE_THROWS_AS(fit_power_law({1, 2, 3}, {1, 2}), dimension_error);
  REQUIRE_THROWS_AS(fit_power_law({1, 2, 3}, {1, -2, 3}), dimension_error);
  REQUIRE_THROWS_AS(fit_power_law({1, 2, 0}, {1, 2, 3}), dimension_error);
  REQUIRE_THROWS_AS(fit_power_law({2, 2, 2}, {1, 2, 3}), dimension_error);
  // only one point inside the window
  REQUIRE_THROWS_AS(fit_power_law({1, 2, 30}, {1, 2, 3}, 10.0, 100.0),
                    dimension_error);
}

TEST_CASE("order schedules") {
  REQUIRE(schedule_order("sqrt", 16) == 20);    // 5 sqrt 16 = 20
  REQUIRE(schedule_order("sqrt", 12) == 18);    // ceil(17.32) -> 18
  REQUIRE(schedule_order("linear", 12) == 12);
  REQUIRE(schedule_order("linear", 13) == 14);  // rounded up to even
  REQUIRE(schedule_order("nlogn", 16) == 64);   // 16 log2 16
  REQUIRE(schedule_order("quadratic", 8) == 64);
  REQUIRE(schedule_order("quadratic", 21) == 400);  // desk cap
  REQUIRE_THROWS_AS(schedule_order("cubic", 8), dimension_error);
  REQUIRE_THROWS_AS(schedule_order("sqrt", 0), dimension_error);
}

TEST_CASE("config parsing: sections, comments, overrides") {
  const std::string text =
      "# demo experiment\n"
      "[model]\n"
      "J = 1.0\n"
      "g = -1.05\n"
      "model.h = 0.5\n"
      "\n"
      "[filter]\n"
      "order = 16\n"
      "max_bond = 24   # inline comment\n"
      "rel_tol = 1e-6\n"
      "\n"
      "sizes = 4, 6\n"
      "states = X+, Z-\n"
      "observables = sx, sz\n"
      "oracle = off\n"
      "output_dir = runs/demo\n"
      "seed = 7\n";

  const ExperimentConfig cfg = parse_config_text(text);
  REQUIRE(cfg.j == 1.0);
  REQUIRE(cfg.h == 0.5);
  REQUIRE(cfg.order == 16);
  REQUIRE(cfg.max_bond == 24);
  REQUIRE(cfg.rel_tol == 1e-6);
  REQUIRE(cfg.sizes == std::vector<index_t>{4, 6});
  REQUIRE(cfg.states == std::vector<std::string>{"X+", "Z-"});
  REQUIRE_FALSE(cfg.oracle);
  REQUIRE(cfg.output_dir == "runs/demo");
  REQUIRE(cfg.seed == 7);

  const ExperimentConfig over = parse_config_text(
      text, {"--order=32", "--sizes=8", "max_bond=40", "--oracle=on"});
  REQUIRE(over.order == 32);
  REQUIRE(over.sizes == std::vector<index_t>{8});
  REQUIRE(over.max_bond == 40);
  REQUIRE(over.oracle);

  REQUIRE_THROWS_AS(parse_config_text("bond = 4\nsizes=4\nstates=X+\n"),
                    dimension_error);  // unknown key
  REQUIRE_THROWS_AS(parse_config_text("sizes 4\n"), dimension_error);
  REQUIRE_THROWS_AS(parse_config_text(text, {"--order"}), dimension_error);
  REQUIRE_THROWS_AS(parse_config_text(text, {"--oracle=maybe"}),
                    dimension_error);
  REQUIRE_THROWS_AS(parse_config_text(text, {"--order=ten"}), dimension_error);
}

TEST_CASE("config text round-trips through the parser") {
  ExperimentConfig cfg;
  cfg.sizes = {6, 8};
  cfg.states = {"Y+"};
  cfg.schedules = {"sqrt", "nlogn"};
  cfg.max_bond = 48;
  cfg.rel_tol = 1e-9;
  cfg.abort_threshold = 0.5;
  cfg.store_orders = {0, 3, 8};
  cfg.form = JacksonForm::literal;
  cfg.observables = {"sx", "sy", "sz:2"};
  cfg.oracle_osee = true;
  cfg.output_dir = "runs/rt";
  cfg.seed = 41;
  cfg.workers = 3;
  cfg.note = "round trip probe";
  cfg = normalize_experiment_config(cfg);

  const ExperimentConfig back = parse_config_text(config_text(cfg));
  REQUIRE(back.sizes == cfg.sizes);
  REQUIRE(back.states == cfg.states);
  REQUIRE(back.schedules == cfg.schedules);
  REQUIRE(back.order == cfg.order);
  REQUIRE(back.max_bond == cfg.max_bond);
  REQUIRE(back.rel_tol == cfg.rel_tol);
  REQUIRE(back.abort_threshold == cfg.abort_threshold);
  REQUIRE(back.checkpoints == cfg.checkpoints);
  REQUIRE(back.store_orders == cfg.store_orders);
  REQUIRE(back.form == cfg.form);
  REQUIRE(back.observables == cfg.observables);
  REQUIRE(back.oracle == cfg.oracle);
  REQUIRE(back.oracle_osee == cfg.oracle_osee);
  REQUIRE(back.output_dir == cfg.output_dir);
  REQUIRE(back.seed == cfg.seed);
  REQUIRE(back.workers == cfg.workers);
  REQUIRE(back.note == cfg.note);
}

TEST_CASE("config validation catches empty or inconsistent grids") {
  ExperimentConfig cfg;
  cfg.sizes = {4};
  cfg.states = {"X+"};

  auto broken = cfg;
  broken.sizes.clear();
  REQUIRE_THROWS_AS(normalize_experiment_config(broken), dimension_error);
  broken = cfg;
  broken.states.clear();
  REQUIRE_THROWS_AS(normalize_experiment_config(broken), dimension_error);
  broken = cfg;
  broken.observables.clear();
  REQUIRE_THROWS_AS(normalize_experiment_config(broken), dimension_error);
  broken = cfg;
  broken.states = {"W+"};
  REQUIRE_THROWS_AS(normalize_experiment_config(broken), dimension_error);
  broken = cfg;
  broken.observables = {"st"};
  REQUIRE_THROWS_AS(normalize_experiment_config(broken), dimension_error);
  broken = cfg;
  broken.checkpoints = {4, 7};
  REQUIRE_THROWS_AS(normalize_experiment_config(broken), dimension_error);
  broken = cfg;
  broken.checkpoints = {8, 4};
  REQUIRE_THROWS_AS(normalize_experiment_config(broken), dimension_error);
  broken = cfg;
  broken.checkpoints = {8};
  broken.schedules = {"sqrt"};
  REQUIRE_THROWS_AS(normalize_experiment_config(broken), dimension_error);
  broken = cfg;
  broken.order = 7;
  REQUIRE_THROWS_AS(normalize_experiment_config(broken), dimension_error);
  broken = cfg;
  broken.max_bond = 0;
  REQUIRE_THROWS_AS(normalize_experiment_config(broken), dimension_error);
  broken = cfg;
  broken.abort_threshold = 0.0;
  REQUIRE_THROWS_AS(normalize_experiment_config(broken), dimension_error);
  broken = cfg;
  broken.store_orders = {4, 4};
  REQUIRE_THROWS_AS(normalize_experiment_config(broken), dimension_error);
  broken = cfg;
  broken.output_dir.clear();
  REQUIRE_THROWS_AS(normalize_experiment_config(broken), dimension_error);

  // checkpoints back-fill the final order
  auto filled = cfg;
  filled.checkpoints = {4, 12};
  REQUIRE(normalize_experiment_config(filled).order == 12);
}

TEST_CASE("experiment run emits the full table set") {
  TempDir tmp("run_tables");
  const ExperimentConfig cfg = tiny_config(tmp.str());
  const ExperimentResult result = run(cfg);

  REQUIRE(result.ok());
  REQUIRE(result.runs.size() == 2);
  REQUIRE(result.runs[0].dir == "N04_Xp_M008");
  REQUIRE(result.runs[1].dir == "N04_Zp_M008");
  REQUIRE(result.runs[0].scalar == "f64");
  REQUIRE(result.runs[0].seconds >= 0.0);

  const fs::path dir = tmp.path / "N04_Xp_M008";
  const Table ck = read_table((dir / "checkpoints.tsv").string());

  // every row starts with the full provenance prefix
  REQUIRE(ck.columns[0] == "n");
  REQUIRE(ck.columns[1] == "state");
  REQUIRE(ck.columns[2] == "m");
  REQUIRE(ck.columns[3] == "max_bond");
  REQUIRE(ck.columns[4] == "rel_tol");
  REQUIRE(ck.columns[5] == "alpha");
  REQUIRE(ck.rows() == 2);
  REQUIRE(ck.numbers("m") == std::vector<double>{4, 8});
  for (index_t r = 0; r < ck.rows(); ++r) {
    REQUIRE(ck.number(r, ck.col("n")) == 4);
    REQUIRE(ck.cells[(size_t)r][(size_t)ck.col("state")] == "X+");
    REQUIRE(ck.number(r, ck.col("max_bond")) == 32);
    REQUIRE(ck.cells[(size_t)r][(size_t)ck.col("status")] == "ok");
  }

  // untruncated run: the trace follows the order-dependent series constant
  // and the rescaled width is alpha^2 times the physical one
  for (index_t r = 0; r < ck.rows(); ++r) {
    const auto m = (index_t)ck.number(r, ck.col("m"));
    REQUIRE_THAT(ck.number(r, ck.col("trace_re")),
                 Catch::Matchers::WithinAbs(filter_trace_factor(m), 1e-12));
    const double a = ck.number(r, ck.col("alpha"));
    REQUIRE_THAT(ck.number(r, ck.col("delta_sq")),
                 Catch::Matchers::WithinRel(
                     a * a * ck.number(r, ck.col("delta_sq_physical")), 1e-10));
  }

  // dense reference agrees with the MPS tables on an exact run
  const Table ref = read_table((dir / "reference.tsv").string());
  REQUIRE(ref.rows() == ck.rows());
  for (index_t r = 0; r < ck.rows(); ++r) {
    for (const char* col : {"obs_sx", "obs_sz", "frobenius_sq", "trace_re"})
      REQUIRE_THAT(ref.number(r, ref.col(col)),
                   Catch::Matchers::WithinAbs(ck.number(r, ck.col(col)), 1e-8));
  }

  const Table ens = read_table((dir / "ensemble.tsv").string());
  REQUIRE(ens.rows() == 1);
  const double ipr = ens.number(0, ens.col("ipr"));
  REQUIRE(ipr > 0.0);
  REQUIRE(ipr <= 1.0);
  REQUIRE(std::isfinite(ens.number(0, ens.col("obs_d_sx"))));
  REQUIRE(std::isfinite(ens.number(0, ens.col("beta"))));

  // stored recurrence vectors and the run manifest
  for (const char* f : {"t_m000.mps", "t_m004.mps", "t_m008.mps"})
    REQUIRE(fs::exists(dir / f));
  const auto manifest = read_manifest((dir / "manifest.txt").string());
  REQUIRE(manifest.at("status") == "ok");
  REQUIRE(manifest.at("orders") == "4,8");
  REQUIRE(manifest.at("scalar") == "f64");
  REQUIRE(manifest.count("alpha") == 1);
  REQUIRE(manifest.count("seconds") == 1);

  const Table runs_table = read_table((tmp.path / "runs.tsv").string());
  REQUIRE(runs_table.rows() == 2);
  REQUIRE(runs_table.cells[0][(size_t)runs_table.col("status")] == "ok");
  const auto root_manifest =
      read_manifest((tmp.path / "manifest.txt").string());
  REQUIRE(root_manifest.at("status") == "ok");
  REQUIRE(root_manifest.at("runs") == "N04_Xp_M008,N04_Zp_M008");
}

TEST_CASE("re-running a config reproduces every table bit for bit") {
  TempDir tmp("run_determinism");
  ExperimentConfig cfg = tiny_config(tmp.str());
  cfg.rel_tol = 1e-8;  // exercise the truncating path too
  run(cfg);

  const std::vector<fs::path> tables = {
      tmp.path / "runs.tsv",
      tmp.path / "N04_Xp_M008" / "checkpoints.tsv",
      tmp.path / "N04_Xp_M008" / "reference.tsv",
      tmp.path / "N04_Xp_M008" / "ensemble.tsv",
      tmp.path / "N04_Zp_M008" / "checkpoints.tsv",
  };
  std::vector<std::string> before;
  for (const auto& p : tables) before.push_back(slurp(p));

  // second pass on a two-thread pool must produce identical bytes
  cfg.workers = 2;
  run(cfg);
  for (size_t i = 0; i < tables.size(); ++i)
    REQUIRE(slurp(tables[i]) == before[i]);
}

TEST_CASE("worker count honors the environment when unset") {
  TempDir tmp("run_env_workers");
  ExperimentConfig cfg = tiny_config(tmp.str());
  cfg.store_orders.clear();
  cfg.oracle = false;

  setenv("DIAGENS_WORKERS", "2", 1);
  const ExperimentResult result = run(cfg);
  unsetenv("DIAGENS_WORKERS");
  REQUIRE(result.ok());
  REQUIRE(fs::exists(tmp.path / "N04_Zp_M008" / "checkpoints.tsv"));
}

TEST_CASE("a blown truncation budget becomes a failed row, not a crash") {
  TempDir tmp("run_abort");
  ExperimentConfig cfg;
  cfg.sizes = {6};
  cfg.states = {"X+"};
  cfg.checkpoints = {16, 32};
  cfg.max_bond = 2;  // hopeless bond: the budget blows immediately
  cfg.rel_tol = 1e-8;
  cfg.abort_threshold = 1e-9;
  cfg.oracle = false;
  cfg.output_dir = tmp.str();

  const ExperimentResult result = run(cfg);
  REQUIRE_FALSE(result.ok());
  REQUIRE(result.runs.size() == 1);
  REQUIRE(result.runs[0].status == "aborted");
  REQUIRE_FALSE(result.runs[0].reason.empty());

  const Table ck =
      read_table((tmp.path / "N06_Xp_M032" / "checkpoints.tsv").string());
  REQUIRE(ck.rows() == 2);
  index_t aborted = 0;
  for (index_t r = 0; r < ck.rows(); ++r) {
    if (ck.cells[(size_t)r][(size_t)ck.col("status")] != "aborted") continue;
    ++aborted;
    REQUIRE(std::isnan(ck.number(r, ck.col("frobenius_sq"))));
    REQUIRE(ck.cells[(size_t)r][(size_t)ck.col("reason")] != "-");
  }
  REQUIRE(aborted == 2);

  const Table runs_table = read_table((tmp.path / "runs.tsv").string());
  REQUIRE(runs_table.cells[0][(size_t)runs_table.col("status")] == "aborted");
  const auto manifest =
      read_manifest((tmp.path / "manifest.txt").string());
  REQUIRE(manifest.at("status") == "failed");
}

TEST_CASE("order schedules fan out into one run per (size, schedule)") {
  TempDir tmp("run_schedules");
  ExperimentConfig cfg;
  cfg.sizes = {4, 6};
  cfg.states = {"X+"};
  cfg.schedules = {"sqrt", "linear"};
  cfg.max_bond = 64;  // exact for these chains; no budget pressure
  cfg.rel_tol = 1e-8;
  cfg.oracle = false;
  cfg.output_dir = tmp.str();

  const ExperimentResult result = run(cfg);
  REQUIRE(result.ok());
  REQUIRE(result.runs.size() == 4);
  for (const char* d : {"N04_Xp_M010_sqrt", "N04_Xp_M004_linear",
                        "N06_Xp_M014_sqrt", "N06_Xp_M006_linear"})
    REQUIRE(fs::exists(tmp.path / d / "checkpoints.tsv"));
  REQUIRE_FALSE(fs::exists(tmp.path / "N04_Xp_M010_sqrt" / "reference.tsv"));

  const Table ck =
      read_table((tmp.path / "N06_Xp_M014_sqrt" / "checkpoints.tsv").string());
  REQUIRE(ck.rows() == 1);  // schedule runs have a single target order
  REQUIRE(ck.number(0, ck.col("m")) == 14);

  const Table runs_table = read_table((tmp.path / "runs.tsv").string());
  REQUIRE(runs_table.rows() == 4);
  REQUIRE(runs_table.cells[0][(size_t)runs_table.col("schedule")] == "sqrt");
  REQUIRE(runs_table.cells[1][(size_t)runs_table.col("schedule")] == "linear");
}

TEST_CASE("truncation profile finds minimal bonds by bisection") {
  TempDir tmp("run_profile");
  ExperimentConfig cfg;
  cfg.sizes = {5};
  cfg.states = {"X+"};
  cfg.checkpoints = {4};
  cfg.max_bond = 64;
  cfg.rel_tol = 0.0;
  cfg.oracle = false;
  cfg.store_orders = {0, 2, 4};
  cfg.output_dir = tmp.str();
  REQUIRE(run(cfg).ok());

  const std::string dir = (tmp.path / "N05_Xp_M004").string();
  const std::vector<double> tols = {1.0, 1e-4, 1e-12};
  const auto rows = truncation_profile(dir, tols);
  REQUIRE(rows.size() == 9);

  auto bond = [&](index_t degree, double tol) {
    for (const auto& row : rows)
      if (row.degree == degree && row.tolerance == tol) return row.bond;
    FAIL("missing profile row");
    return (index_t)0;
  };

  // tolerance one is satisfied by a rank-one truncation of anything
  for (index_t degree : {0, 2, 4}) REQUIRE(bond(degree, 1.0) == 1);
  // the initial product state is rank one at every tolerance
  for (double tol : tols) REQUIRE(bond(0, tol) == 1);
  // tighter tolerances can only demand more bond
  for (index_t degree : {0, 2, 4}) {
    REQUIRE(bond(degree, 1e-4) >= bond(degree, 1.0));
    REQUIRE(bond(degree, 1e-12) >= bond(degree, 1e-4));
  }
  // higher Chebyshev degrees spread the state over more of the chain
  REQUIRE(bond(4, 1e-12) >= bond(2, 1e-12));
  REQUIRE(bond(2, 1e-12) > 1);

  REQUIRE_THROWS_AS(truncation_profile(dir, {}), dimension_error);
  REQUIRE_THROWS_AS(truncation_profile(dir, {0.0}), dimension_error);
  REQUIRE_THROWS_AS(truncation_profile(dir, {2.0}), dimension_error);
  REQUIRE_THROWS_AS(truncation_profile(tmp.str(), {1e-4}), dimension_error);
  REQUIRE_THROWS_AS(truncation_profile(tmp.str() + "/missing", {1e-4}),
                    dimension_error);
}

TEST_CASE("figure recipes are valid desk-scale configs") {
  const auto recipes = figure_recipes();
  REQUIRE(recipes.size() == 6);

  const std::vector<std::string> names = {
      "fig1-variance-scaling", "fig2-norm-vs-width", "fig3/5-error-small-N",
      "fig4/6-error-large-N",  "fig7-osee-scaling",  "fig8-osee-peak"};
  for (size_t i = 0; i < names.size(); ++i) REQUIRE(recipes[i].first == names[i]);

  for (const auto& [name, cfg] : recipes) {
    REQUIRE_NOTHROW(normalize_experiment_config(cfg));
    for (index_t n : cfg.sizes) REQUIRE(n <= 32);
    REQUIRE(cfg.max_bond <= 256);
    REQUIRE(cfg.order <= 400);
    REQUIRE_FALSE(cfg.note.empty());
    if (cfg.oracle)
      for (index_t n : cfg.sizes) REQUIRE(n <= 14);
  }

  const auto& osee = recipes[4].second;
  REQUIRE(osee.schedules ==
          std::vector<std::string>{"sqrt", "linear", "nlogn", "quadratic"});
  const auto& peak = recipes[5].second;
  REQUIRE(peak.oracle);
  REQUIRE(peak.oracle_osee);
  // the large-chain preset records why both quenches are run
  const auto& large = recipes[3].second;
  REQUIRE(large.note.find("ambiguous") != std::string::npos);
  REQUIRE(large.states == std::vector<std::string>{"X+", "Z+"});
}
