#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "diagens/experiment.hpp"

using namespace diagens;
namespace fs = std::filesystem;

namespace {

int cmd_run(const std::string& config_path,
            const std::vector<std::string>& overrides, index_t workers) {
  ExperimentConfig cfg = parse_config(config_path, overrides);
  if (workers > 0) cfg.workers = workers;
  const ExperimentResult result = run(cfg);
  for (const auto& r : result.runs)
    std::printf("%-30s %-8s %s\n", r.dir.c_str(), r.status.c_str(),
                r.status == "ok" ? "" : r.reason.c_str());
  std::printf("wrote %s\n", result.root.c_str());
  if (!result.ok()) {
    std::fprintf(stderr, "error: not every run completed\n");
    return 1;
  }
  return 0;
}

int cmd_fit(const std::string& table_path, const std::string& x_col,
            const std::string& y_col, const std::string& range) {
  const Table table = read_table(table_path);
  const auto xs_all = table.numbers(x_col);
  const auto ys_all = table.numbers(y_col);
  std::vector<double> xs, ys;  // failed rows carry nan: skip them
  for (size_t i = 0; i < xs_all.size(); ++i) {
    if (!std::isfinite(xs_all[i]) || !std::isfinite(ys_all[i])) continue;
    xs.push_back(xs_all[i]);
    ys.push_back(ys_all[i]);
  }
  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
  if (!range.empty()) {
    const auto comma = range.find(',');
    if (comma == std::string::npos)
      throw dimension_error("--range expects two comma-separated numbers");
    lo = std::stod(range.substr(0, comma));
    hi = std::stod(range.substr(comma + 1));
  }
  const FitResult fit = fit_power_law(xs, ys, lo, hi);
  std::printf("log(%s) = %.6g log(%s) %+.6g\n", y_col.c_str(), fit.slope,
              x_col.c_str(), fit.intercept);
  std::printf("slope     %.10g\n", fit.slope);
  std::printf("intercept %.10g\n", fit.intercept);
  std::printf("r_squared %.10g\n", fit.r_squared);
  std::printf("range     [%.6g, %.6g] over %lld points\n", fit.range_min,
              fit.range_max, (long long)fit.points);
  return 0;
}

int cmd_profile(const std::string& run_dir, const std::string& tols_arg) {
  std::vector<double> tols;
  std::string cur;
  for (char c : tols_arg + ",") {
    if (c != ',') {
      cur += c;
      continue;
    }
    if (!cur.empty()) tols.push_back(std::stod(cur));
    cur.clear();
  }
  const auto rows = truncation_profile(run_dir, tols);

  // prefix every row with the run provenance from its manifest
  const auto manifest = read_manifest((fs::path(run_dir) / "manifest.txt").string());
  auto field = [&](const char* key) {
    const auto it = manifest.find(key);
    return it == manifest.end() ? std::string("-") : it->second;
  };
  const std::string prefix = field("n") + "\t" + field("state") + "\t" +
                             field("order") + "\t" + field("max_bond") + "\t" +
                             field("rel_tol") + "\t" + field("alpha");

  std::string out = "n\tstate\tm\tmax_bond\trel_tol\talpha\tdegree\ttolerance\tbond\n";
  for (const auto& row : rows) {
    char line[128];
    std::snprintf(line, sizeof line, "%s\t%lld\t%.17g\t%lld\n", prefix.c_str(),
                  (long long)row.degree, row.tolerance, (long long)row.bond);
    out += line;
  }
  const fs::path table_path = fs::path(run_dir) / "profile.tsv";
  std::FILE* f = std::fopen(table_path.string().c_str(), "w");
  if (!f) throw dimension_error("cannot write " + table_path.string());
  std::fwrite(out.data(), 1, out.size(), f);
  std::fclose(f);

  std::printf("%-8s %-12s %s\n", "degree", "tolerance", "bond");
  for (const auto& row : rows)
    std::printf("%-8lld %-12.3g %lld\n", (long long)row.degree, row.tolerance,
                (long long)row.bond);
  std::printf("wrote %s\n", table_path.string().c_str());
  return 0;
}

int cmd_recipes(bool list, const std::string& show) {
  const auto recipes = figure_recipes();
  if (!show.empty()) {
    for (const auto& [name, cfg] : recipes)
      if (name == show) {
        std::fputs(config_text(cfg).c_str(), stdout);
        return 0;
      }
    std::fprintf(stderr, "error: no recipe named '%s'\n", show.c_str());
    return 1;
  }
  (void)list;  // default action
  for (const auto& [name, cfg] : recipes) {
    std::string sizes;
    for (index_t n : cfg.sizes)
      sizes += (sizes.empty() ? "" : ",") + std::to_string(n);
    std::printf("%-24s N={%s}  M<=%lld  bond<=%lld\n", name.c_str(),
                sizes.c_str(), (long long)cfg.order, (long long)cfg.max_bond);
    std::printf("    %s\n", cfg.note.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Chebyshev-filtered diagonal-ensemble experiments on spin chains"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "execute an experiment config");
  std::string config_path;
  run_cmd->add_option("config", config_path, "key = value config file")
      ->required();
  index_t workers = 0;
  run_cmd->add_option("--workers", workers,
                      "worker threads (else DIAGENS_WORKERS, else 1)");
  run_cmd->allow_extras();  // --key=value config overrides

  auto* fit_cmd =
      app.add_subcommand("fit", "power-law fit of one table column vs another");
  std::string table_path, x_col, y_col, range;
  fit_cmd->add_option("table", table_path, "tab-separated table")->required();
  fit_cmd->add_option("--x", x_col, "abscissa column")->required();
  fit_cmd->add_option("--y", y_col, "ordinate column")->required();
  fit_cmd->add_option("--range", range, "abscissa window a,b");

  auto* profile_cmd = app.add_subcommand(
      "profile", "minimal bond per stored recurrence vector and tolerance");
  std::string run_dir, tols;
  profile_cmd->add_option("run-dir", run_dir, "run directory with t_m*.mps")
      ->required();
  profile_cmd->add_option("--tols", tols, "comma-separated overlap tolerances")
      ->required();

  auto* recipes_cmd =
      app.add_subcommand("recipes", "named desk-scale experiment presets");
  bool list = false;
  std::string show;
  recipes_cmd->add_flag("--list", list, "list presets (default)");
  recipes_cmd->add_option("--show", show, "print one preset as a config file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(config_path, run_cmd->remaining(), workers);
    if (*fit_cmd) return cmd_fit(table_path, x_col, y_col, range);
    if (*profile_cmd) return cmd_profile(run_dir, tols);
    if (*recipes_cmd) return cmd_recipes(list, show);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
