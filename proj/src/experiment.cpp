#include "diagens/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "diagens/oracle.hpp"
#include "diagens/serialize.hpp"

namespace diagens {

namespace fs = std::filesystem;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(index_t v) { return std::to_string(v); }

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace((unsigned char)s[a])) ++a;
  while (b > a && std::isspace((unsigned char)s[b - 1])) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> parse_string_list(const std::string& value) {
  std::vector<std::string> out;
  for (const std::string& piece : split(value, ',')) {
    const std::string t = trim(piece);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  const std::string t = trim(value);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size())
    throw dimension_error("config key '" + key + "': bad number '" + value + "'");
  return v;
}

index_t parse_index(const std::string& key, const std::string& value) {
  const std::string t = trim(value);
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size())
    throw dimension_error("config key '" + key + "': bad integer '" + value + "'");
  return (index_t)v;
}

std::vector<index_t> parse_index_list(const std::string& key,
                                      const std::string& value) {
  std::vector<index_t> out;
  for (const std::string& piece : parse_string_list(value))
    out.push_back(parse_index(key, piece));
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  std::string t = trim(value);
  std::transform(t.begin(), t.end(), t.begin(),
                 [](unsigned char c) { return (char)std::tolower(c); });
  if (t == "on" || t == "true" || t == "yes" || t == "1") return true;
  if (t == "off" || t == "false" || t == "no" || t == "0") return false;
  throw dimension_error("config key '" + key + "': bad flag '" + value + "'");
}

void apply_key(ExperimentConfig& cfg, const std::string& key,
               const std::string& value) {
  if (key == "j")
    cfg.j = parse_double(key, value);
  else if (key == "g")
    cfg.g = parse_double(key, value);
  else if (key == "h")
    cfg.h = parse_double(key, value);
  else if (key == "alpha_margin")
    cfg.alpha_margin = parse_double(key, value);
  else if (key == "sizes")
    cfg.sizes = parse_index_list(key, value);
  else if (key == "states")
    cfg.states = parse_string_list(value);
  else if (key == "schedules")
    cfg.schedules = parse_string_list(value);
  else if (key == "order")
    cfg.order = parse_index(key, value);
  else if (key == "max_bond")
    cfg.max_bond = parse_index(key, value);
  else if (key == "rel_tol")
    cfg.rel_tol = parse_double(key, value);
  else if (key == "abort_threshold")
    cfg.abort_threshold = parse_double(key, value);
  else if (key == "checkpoints")
    cfg.checkpoints = parse_index_list(key, value);
  else if (key == "store_orders")
    cfg.store_orders = parse_index_list(key, value);
  else if (key == "form") {
    const std::string t = trim(value);
    if (t == "standard")
      cfg.form = JacksonForm::standard;
    else if (t == "literal")
      cfg.form = JacksonForm::literal;
    else
      throw dimension_error("config key 'form': expected standard|literal");
  } else if (key == "observables")
    cfg.observables = parse_string_list(value);
  else if (key == "oracle")
    cfg.oracle = parse_bool(key, value);
  else if (key == "oracle_osee")
    cfg.oracle_osee = parse_bool(key, value);
  else if (key == "output_dir")
    cfg.output_dir = trim(value);
  else if (key == "seed")
    cfg.seed = (long)parse_index(key, value);
  else if (key == "workers")
    cfg.workers = parse_index(key, value);
  else if (key == "note")
    cfg.note = trim(value);
  else
    throw dimension_error("unknown config key '" + key + "'");
}

void check_even_ascending(const std::vector<index_t>& v, const std::string& key) {
  for (size_t i = 0; i < v.size(); ++i) {
    if (v[i] < 0 || v[i] % 2 != 0)
      throw dimension_error("config key '" + key +
                            "': orders must be even and non-negative");
    if (i > 0 && v[i] <= v[i - 1])
      throw dimension_error("config key '" + key +
                            "': orders must be strictly ascending");
  }
}

std::string mangle_state(const std::string& state) {
  std::string out;
  for (char c : state) {
    if (c == '+')
      out += 'p';
    else if (c == '-')
      out += 'm';
    else
      out += c;
  }
  return out;
}

struct Job {
  index_t n = 0;
  std::string state;
  std::string schedule;  // empty: fixed-order sweep
};

std::vector<index_t> orders_for(const ExperimentConfig& cfg, const Job& job) {
  if (!job.schedule.empty())
    return {schedule_order(job.schedule, job.n)};
  if (!cfg.checkpoints.empty()) return cfg.checkpoints;
  return default_checkpoints(cfg.order);
}

std::string run_dir_name(const Job& job, index_t final_order) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "N%02lld_%s_M%03lld", (long long)job.n,
                mangle_state(job.state).c_str(), (long long)final_order);
  std::string name = buf;
  if (!job.schedule.empty()) name += "_" + job.schedule;
  return name;
}

void write_table(const fs::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw dimension_error("cannot write " + path.string());
  out << join(header, "\t") << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw dimension_error("table row width mismatch in " + path.string());
    out << join(row, "\t") << '\n';
  }
}

/// The six provenance cells every emitted row starts with.
std::vector<std::string> row_prefix(const Job& job, index_t m,
                                    const ExperimentConfig& cfg, double alpha) {
  return {fmt((index_t)job.n), job.state, fmt(m),      fmt(cfg.max_bond),
          fmt(cfg.rel_tol),    fmt(alpha)};
}

const std::vector<std::string> kPrefixHeader = {"n",        "state",
                                                "m",        "max_bond",
                                                "rel_tol",  "alpha"};

std::string sanitize_cell(const std::string& s) {
  std::string out;
  for (char c : s) out += (c == '\t' || c == '\n') ? ' ' : c;
  return out.empty() ? "-" : out;
}

struct RunOutcome {
  RunSummary summary;
  std::vector<std::pair<std::string, std::string>> manifest;
};

template <typename T>
MpoOperator<T> commutator_for(const SpinChainModel& model, double alpha);

template <>
MpoOperator<double> commutator_for<double>(const SpinChainModel& model,
                                           double alpha) {
  return commutator_mpo(model, alpha);
}

template <>
MpoOperator<cplx> commutator_for<cplx>(const SpinChainModel& model,
                                       double alpha) {
  return to_complex(commutator_mpo(model, alpha));
}

template <typename T>
void run_typed(const ExperimentConfig& cfg, const Job& job,
               const fs::path& dir, const std::vector<index_t>& orders,
               double alpha, RunOutcome& out) {
  const SpinChainModel model{job.n, cfg.j, cfg.g, cfg.h};
  const auto rho0 = vectorized_density<T>(job.state, job.n);
  const auto h_c = commutator_for<T>(model, alpha);

  FilterConfig base;
  base.order = orders.back();
  base.max_bond = cfg.max_bond;
  base.rel_tol = cfg.rel_tol;
  base.alpha = alpha;
  base.form = cfg.form;
  base.abort_threshold = cfg.abort_threshold;
  for (const std::string& label : cfg.observables)
    base.observables.push_back(observable_from_label(label));

  std::vector<index_t> wanted;
  for (index_t m : cfg.store_orders)
    if (m <= orders.back()) wanted.push_back(m);
  std::vector<std::string> stored;
  RecurrenceHook<T> hook;
  if (!wanted.empty())
    hook = [&](index_t degree, const MpsVector<T>& t) {
      if (!std::binary_search(wanted.begin(), wanted.end(), degree)) return;
      char name[32];
      std::snprintf(name, sizeof name, "t_m%03lld.mps", (long long)degree);
      save_mps(t, (dir / name).string());
      stored.push_back(name);
    };

  const auto runs = run_filter_sweep(rho0, h_c, orders, base, hook);

  std::vector<std::string> header = kPrefixHeader;
  for (const char* c : {"delta_sq", "delta_sq_physical", "frobenius_sq",
                        "trace_re", "trace_im", "osee_half"})
    header.push_back(c);
  for (const std::string& label : cfg.observables)
    header.push_back("obs_" + label);
  for (const char* c :
       {"obs_imag_max", "max_bond_used", "cum_discarded_weight", "status",
        "reason"})
    header.push_back(c);

  std::vector<std::vector<std::string>> rows;
  index_t completed = 0;
  for (const auto& r : runs) {
    auto row = row_prefix(job, r.config.order, cfg, alpha);
    if (!r.aborted) {
      ++completed;
      const CheckpointRecord& c = r.checkpoints.back();
      row.push_back(fmt(c.delta_sq));
      row.push_back(fmt(c.delta_sq_physical));
      row.push_back(fmt(c.frobenius_sq));
      row.push_back(fmt(c.trace.real()));
      row.push_back(fmt(c.trace.imag()));
      row.push_back(fmt(c.osee_half));
      for (const auto& [label, value] : c.observables) row.push_back(fmt(value));
      row.push_back(fmt(c.obs_imag_max));
      row.push_back(fmt(c.max_bond_used));
      row.push_back(fmt(c.cumulative_discarded_weight));
      row.push_back("ok");
      row.push_back("-");
    } else {
      for (size_t i = 0; i < 6 + cfg.observables.size() + 1; ++i)
        row.push_back(fmt(kNan));
      row.push_back(fmt(kNan));  // max_bond_used unknown
      row.push_back(fmt(r.cumulative_discarded_weight));
      row.push_back("aborted");
      row.push_back(sanitize_cell(r.abort_reason));
      if (out.summary.status == "ok") {
        out.summary.status = "aborted";
        out.summary.reason = "order " + std::to_string(r.config.order) + ": " +
                             r.abort_reason;
      }
    }
    rows.push_back(std::move(row));
  }
  write_table(dir / "checkpoints.tsv", header, rows);

  out.manifest.emplace_back("targets", fmt((index_t)runs.size()));
  out.manifest.emplace_back("targets_completed", fmt(completed));
  out.manifest.emplace_back("stored_files",
                            stored.empty() ? "-" : join(stored, ","));
}

void oracle_tables(const ExperimentConfig& cfg, const Job& job,
                   const fs::path& dir, const std::vector<index_t>& orders,
                   double alpha) {
  const SpinChainModel model{job.n, cfg.j, cfg.g, cfg.h};
  const auto sd = diagonalize(model);
  const auto psi0 = product_state_dense(job.state, job.n);
  const auto rho0 = initial_density(sd, psi0);

  std::vector<DenseTensor<cplx>> obs_eigen;
  for (const std::string& label : cfg.observables)
    obs_eigen.push_back(observable_eigen(sd, observable_from_label(label)));

  std::vector<std::string> header = kPrefixHeader;
  for (const char* c :
       {"delta_sq", "delta_sq_physical", "frobenius_sq", "trace_re"})
    header.push_back(c);
  for (const std::string& label : cfg.observables)
    header.push_back("obs_" + label);
  header.push_back("osee_half");

  std::vector<std::vector<std::string>> rows;
  for (index_t m : orders) {
    const auto f = chebyshev_filter_exact(sd, rho0, alpha, m, cfg.form);
    auto row = row_prefix(job, m, cfg, alpha);
    const double dphys = delta_squared_dense(sd, f);
    row.push_back(fmt(alpha * alpha * dphys));
    row.push_back(fmt(dphys));
    row.push_back(fmt(frobenius_sq_dense(f)));
    row.push_back(fmt(trace_dense(f)));
    for (const auto& obs : obs_eigen)
      row.push_back(fmt(expectation_dense(f, obs)));
    row.push_back(fmt(cfg.oracle_osee ? osee_exact(sd, f) : kNan));
    rows.push_back(std::move(row));
  }
  write_table(dir / "reference.tsv", header, rows);

  const auto ens = diagonal_ensemble(sd, psi0);
  double energy0 = 0.0;
  for (index_t n = 0; n < sd.dim(); ++n)
    energy0 += sd.energies[(size_t)n] * rho0.mat.at({n, n}).real();

  std::vector<std::string> h2 = kPrefixHeader;
  h2.push_back("energy");
  h2.push_back("ipr");
  for (const std::string& label : cfg.observables)
    h2.push_back("obs_d_" + label);
  for (const char* c : {"beta", "thermal_energy", "obs_th_sx", "obs_th_sy",
                        "obs_th_sz"})
    h2.push_back(c);

  auto row = row_prefix(job, orders.back(), cfg, alpha);
  row.push_back(fmt(energy0));
  row.push_back(fmt(ipr(sd, psi0)));
  for (const auto& obs : obs_eigen)
    row.push_back(fmt(expectation_dense(ens, obs)));
  try {
    const auto th = thermal_reference(sd, energy0);
    row.push_back(fmt(th.beta));
    row.push_back(fmt(th.energy));
    for (const auto& [label, value] : th.observables) row.push_back(fmt(value));
  } catch (const std::exception&) {
    // target energy at the edge of the spectrum: no canonical match
    for (int i = 0; i < 5; ++i) row.push_back(fmt(kNan));
  }
  write_table(dir / "ensemble.tsv", h2, {row});
}

index_t effective_workers(index_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DIAGENS_WORKERS")) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return (index_t)v;
  }
  return 1;
}

RunOutcome execute_run(const ExperimentConfig& cfg, const Job& job,
                       const fs::path& dir) {
  RunOutcome out;
  out.summary.dir = dir.filename().string();
  out.summary.length = job.n;
  out.summary.state = job.state;
  out.summary.schedule = job.schedule.empty() ? "fixed" : job.schedule;
  out.summary.status = "ok";
  out.summary.reason = "-";
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const SpinChainModel model{job.n, cfg.j, cfg.g, cfg.h};
    const double alpha = rescale_alpha(model, cfg.alpha_margin);
    const auto orders = orders_for(cfg, job);
    out.summary.order = orders.back();
    out.summary.alpha = alpha;
    out.summary.scalar = is_real_state(job.state) ? "f64" : "c128";

    out.manifest.emplace_back("format", "diagens-run-1");
    out.manifest.emplace_back("n", fmt((index_t)job.n));
    out.manifest.emplace_back("state", job.state);
    out.manifest.emplace_back("schedule", out.summary.schedule);
    out.manifest.emplace_back("scalar", out.summary.scalar);
    out.manifest.emplace_back("j", fmt(cfg.j));
    out.manifest.emplace_back("g", fmt(cfg.g));
    out.manifest.emplace_back("h", fmt(cfg.h));
    out.manifest.emplace_back("alpha", fmt(alpha));
    out.manifest.emplace_back("alpha_margin", fmt(cfg.alpha_margin));
    out.manifest.emplace_back("order", fmt(orders.back()));
    {
      std::vector<std::string> parts;
      for (index_t m : orders) parts.push_back(fmt(m));
      out.manifest.emplace_back("orders", join(parts, ","));
    }
    out.manifest.emplace_back("max_bond", fmt(cfg.max_bond));
    out.manifest.emplace_back("rel_tol", fmt(cfg.rel_tol));
    out.manifest.emplace_back("abort_threshold", fmt(cfg.abort_threshold));
    out.manifest.emplace_back(
        "form", cfg.form == JacksonForm::standard ? "standard" : "literal");
    out.manifest.emplace_back("sigma_rescaled", fmt(sigma_rescaled(orders.back())));
    out.manifest.emplace_back("sigma_physical",
                              fmt(sigma_for_order(orders.back(), alpha)));
    out.manifest.emplace_back("observables", join(cfg.observables, ","));
    out.manifest.emplace_back("oracle", cfg.oracle ? "on" : "off");
    out.manifest.emplace_back("oracle_osee", cfg.oracle_osee ? "on" : "off");
    out.manifest.emplace_back("seed", std::to_string(cfg.seed));

    if (is_real_state(job.state))
      run_typed<double>(cfg, job, dir, orders, alpha, out);
    else
      run_typed<cplx>(cfg, job, dir, orders, alpha, out);

    if (cfg.oracle && job.n <= 14) oracle_tables(cfg, job, dir, orders, alpha);
  } catch (const std::exception& e) {
    out.summary.status = "error";
    out.summary.reason = e.what();
  }
  out.summary.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return out;
}

void write_manifest(const fs::path& path,
                    const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ofstream out(path);
  if (!out) throw dimension_error("cannot write " + path.string());
  for (const auto& [key, value] : kv)
    out << key << " = " << sanitize_cell(value) << '\n';
}

}  // namespace

ExperimentConfig normalize_experiment_config(ExperimentConfig cfg) {
  if (cfg.sizes.empty())
    throw dimension_error("config needs at least one chain size");
  for (index_t n : cfg.sizes)
    if (n < 2) throw dimension_error("chain sizes must be at least 2");
  if (cfg.states.empty())
    throw dimension_error("config needs at least one initial state");
  for (const std::string& s : cfg.states) local_ket<cplx>(s);  // label probe
  if (cfg.observables.empty())
    throw dimension_error("config needs at least one observable");
  for (const std::string& label : cfg.observables) observable_from_label(label);

  if (cfg.max_bond < 1) throw dimension_error("max_bond must be positive");
  if (cfg.rel_tol < 0) throw dimension_error("rel_tol must be non-negative");
  if (!(cfg.abort_threshold > 0))
    throw dimension_error("abort_threshold must be positive");
  if (cfg.alpha_margin < 0 || cfg.alpha_margin >= 1)
    throw dimension_error("alpha_margin must lie in [0, 1)");

  if (!cfg.checkpoints.empty()) {
    if (!cfg.schedules.empty())
      throw dimension_error(
          "schedules and explicit checkpoints cannot be combined");
    check_even_ascending(cfg.checkpoints, "checkpoints");
    cfg.order = cfg.checkpoints.back();
  }
  if (cfg.order < 0 || cfg.order % 2 != 0)
    throw dimension_error("order must be even and non-negative");
  for (const std::string& s : cfg.schedules) schedule_order(s, 2);  // name probe
  for (size_t i = 0; i < cfg.store_orders.size(); ++i) {
    if (cfg.store_orders[i] < 0)
      throw dimension_error("store_orders must be non-negative");
    if (i > 0 && cfg.store_orders[i] <= cfg.store_orders[i - 1])
      throw dimension_error("store_orders must be strictly ascending");
  }

  if (cfg.workers < 0) throw dimension_error("workers must be non-negative");
  if (cfg.output_dir.empty()) throw dimension_error("output_dir must be set");
  return cfg;
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') continue;  // section headers are decorative
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw dimension_error("config line " + std::to_string(lineno) +
                            ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (const auto dot = key.rfind('.'); dot != std::string::npos)
      key = key.substr(dot + 1);
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return (char)std::tolower(c); });
    apply_key(cfg, key, line.substr(eq + 1));
  }
  for (const std::string& ov : overrides) {
    size_t start = 0;
    while (start < ov.size() && ov[start] == '-') ++start;
    const auto eq = ov.find('=', start);
    if (eq == std::string::npos)
      throw dimension_error("override '" + ov + "': expected --key=value");
    std::string key = trim(ov.substr(start, eq - start));
    if (const auto dot = key.rfind('.'); dot != std::string::npos)
      key = key.substr(dot + 1);
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return (char)std::tolower(c); });
    apply_key(cfg, key, ov.substr(eq + 1));
  }
  return normalize_experiment_config(std::move(cfg));
}

ExperimentConfig parse_config(const std::string& path,
                              const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw dimension_error("cannot open config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), overrides);
}

std::string config_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "j = " << fmt(cfg.j) << '\n';
  out << "g = " << fmt(cfg.g) << '\n';
  out << "h = " << fmt(cfg.h) << '\n';
  out << "alpha_margin = " << fmt(cfg.alpha_margin) << '\n';
  auto list = [&](const char* key, const std::vector<index_t>& v) {
    if (v.empty()) return;
    std::vector<std::string> parts;
    for (index_t x : v) parts.push_back(fmt(x));
    out << key << " = " << join(parts, ",") << '\n';
  };
  list("sizes", cfg.sizes);
  out << "states = " << join(cfg.states, ",") << '\n';
  if (!cfg.schedules.empty())
    out << "schedules = " << join(cfg.schedules, ",") << '\n';
  out << "order = " << fmt(cfg.order) << '\n';
  out << "max_bond = " << fmt(cfg.max_bond) << '\n';
  out << "rel_tol = " << fmt(cfg.rel_tol) << '\n';
  out << "abort_threshold = " << fmt(cfg.abort_threshold) << '\n';
  list("checkpoints", cfg.checkpoints);
  list("store_orders", cfg.store_orders);
  out << "form = "
      << (cfg.form == JacksonForm::standard ? "standard" : "literal") << '\n';
  out << "observables = " << join(cfg.observables, ",") << '\n';
  out << "oracle = " << (cfg.oracle ? "on" : "off") << '\n';
  out << "oracle_osee = " << (cfg.oracle_osee ? "on" : "off") << '\n';
  out << "output_dir = " << cfg.output_dir << '\n';
  out << "seed = " << cfg.seed << '\n';
  out << "workers = " << fmt(cfg.workers) << '\n';
  if (!cfg.note.empty()) out << "note = " << cfg.note << '\n';
  return out.str();
}

index_t schedule_order(const std::string& schedule, index_t n) {
  if (n < 1) throw dimension_error("schedule needs a positive chain size");
  double raw = 0.0;
  if (schedule == "sqrt")
    raw = 5.0 * std::sqrt((double)n);
  else if (schedule == "linear")
    raw = (double)n;
  else if (schedule == "nlogn")
    raw = (double)n * std::log2((double)n);
  else if (schedule == "quadratic")
    raw = std::min((double)(n * n), 400.0);
  else
    throw dimension_error("unknown order schedule '" + schedule + "'");
  index_t m = (index_t)std::ceil(raw - 1e-12);
  if (m % 2 != 0) ++m;
  return m;
}

bool ExperimentResult::ok() const {
  for (const auto& r : runs)
    if (r.status != "ok") return false;
  return true;
}

ExperimentResult run(const ExperimentConfig& raw) {
  const ExperimentConfig cfg = normalize_experiment_config(raw);
  const fs::path root = cfg.output_dir;
  fs::create_directories(root);

  std::vector<Job> jobs;
  for (index_t n : cfg.sizes)
    for (const std::string& state : cfg.states) {
      if (cfg.schedules.empty())
        jobs.push_back({n, state, ""});
      else
        for (const std::string& sched : cfg.schedules)
          jobs.push_back({n, state, sched});
    }

  // The coordinator prepares every directory up front so workers only ever
  // touch their own.
  std::vector<fs::path> dirs;
  for (const Job& job : jobs) {
    const fs::path dir = root / run_dir_name(job, orders_for(cfg, job).back());
    fs::remove_all(dir);
    fs::create_directories(dir);
    dirs.push_back(dir);
  }

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<RunOutcome> outcomes(jobs.size());
  const index_t workers =
      std::min<index_t>(effective_workers(cfg.workers), (index_t)jobs.size());
  if (workers <= 1) {
    for (size_t i = 0; i < jobs.size(); ++i)
      outcomes[i] = execute_run(cfg, jobs[i], dirs[i]);
  } else {
    std::atomic<size_t> next{0};
    auto body = [&] {
      for (size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1))
        outcomes[i] = execute_run(cfg, jobs[i], dirs[i]);
    };
    std::vector<std::thread> pool;
    for (index_t w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& th : pool) th.join();
  }
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  ExperimentResult result;
  result.root = root.string();
  for (auto& o : outcomes) result.runs.push_back(o.summary);

  // Coordinator-only writes: per-run manifests, the run index, the root
  // manifest. Timings stay out of the tables.
  for (size_t i = 0; i < outcomes.size(); ++i) {
    auto kv = outcomes[i].manifest;
    kv.emplace_back("status", outcomes[i].summary.status);
    kv.emplace_back("reason", outcomes[i].summary.reason);
    kv.emplace_back("seconds", fmt(outcomes[i].summary.seconds));
    if (!cfg.note.empty()) kv.emplace_back("note", cfg.note);
    write_manifest(dirs[i] / "manifest.txt", kv);
  }

  std::vector<std::string> header = kPrefixHeader;
  for (const char* c : {"dir", "schedule", "scalar", "status", "reason"})
    header.push_back(c);
  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < jobs.size(); ++i) {
    const RunSummary& s = outcomes[i].summary;
    auto row = row_prefix(jobs[i], s.order, cfg, s.alpha);
    row.push_back(s.dir);
    row.push_back(s.schedule);
    row.push_back(s.scalar);
    row.push_back(s.status);
    row.push_back(sanitize_cell(s.reason));
    rows.push_back(std::move(row));
  }
  write_table(root / "runs.tsv", header, rows);

  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("format", "diagens-experiment-1");
  kv.emplace_back("status", result.ok() ? "ok" : "failed");
  {
    std::vector<std::string> names;
    for (const auto& d : dirs) names.push_back(d.filename().string());
    kv.emplace_back("runs", join(names, ","));
  }
  kv.emplace_back("seconds_total", fmt(total));
  std::istringstream cfg_lines(config_text(cfg));
  std::string line;
  while (std::getline(cfg_lines, line)) {
    const auto eq = line.find('=');
    kv.emplace_back("config." + trim(line.substr(0, eq)),
                    trim(line.substr(eq + 1)));
  }
  write_manifest(root / "manifest.txt", kv);
  return result;
}

FitResult fit_power_law(const std::vector<double>& xs,
                        const std::vector<double>& ys, double range_min,
                        double range_max) {
  if (xs.size() != ys.size())
    throw dimension_error("fit needs matching x and y lengths");
  std::vector<double> lx, ly;
  FitResult fit;
  fit.range_min = std::numeric_limits<double>::infinity();
  fit.range_max = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] >= range_min && xs[i] <= range_max)) continue;
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0) || !std::isfinite(xs[i]) ||
        !std::isfinite(ys[i]))
      throw dimension_error("power-law fit needs positive finite data");
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
    fit.range_min = std::min(fit.range_min, xs[i]);
    fit.range_max = std::max(fit.range_max, xs[i]);
  }
  if (lx.size() < 3)
    throw dimension_error("power-law fit needs at least 3 points in range");
  const double n = (double)lx.size();
  double sx = 0, sy = 0;
  for (size_t i = 0; i < lx.size(); ++i) sx += lx[i], sy += ly[i];
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx < 1e-300)
    throw dimension_error("power-law fit needs at least two distinct x");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0, ss_tot = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    const double pred = fit.intercept + fit.slope * lx[i];
    ss_res += (ly[i] - pred) * (ly[i] - pred);
    ss_tot += (ly[i] - my) * (ly[i] - my);
  }
  fit.r_squared = ss_tot < 1e-300 ? (ss_res < 1e-300 ? 1.0 : 0.0)
                                  : 1.0 - ss_res / ss_tot;
  fit.r_squared = std::min(1.0, std::max(0.0, fit.r_squared));
  fit.points = (index_t)lx.size();
  return fit;
}

std::vector<std::pair<std::string, ExperimentConfig>> figure_recipes() {
  std::vector<std::pair<std::string, ExperimentConfig>> out;
  auto push = [&](const std::string& name, ExperimentConfig c) {
    out.emplace_back(name, normalize_experiment_config(std::move(c)));
  };

  ExperimentConfig sweep;
  sweep.sizes = {12, 16, 20};
  sweep.states = {"X+"};
  sweep.checkpoints = {32, 48, 64, 96, 128, 192, 256};
  sweep.max_bond = 256;
  sweep.oracle = false;
  sweep.output_dir = "runs/fig1-variance-scaling";
  sweep.note =
      "width of the surviving off-diagonal band against the filter order at "
      "fixed bond; expect delta_sq to fall like order^-2";
  push("fig1-variance-scaling", sweep);
  sweep.output_dir = "runs/fig2-norm-vs-width";
  sweep.note =
      "filtered norm frobenius_sq against the filter order; expect growth "
      "like order^+1 once converged";
  push("fig2-norm-vs-width", sweep);

  ExperimentConfig small;
  small.sizes = {8, 10, 12};
  small.states = {"X+", "Z+"};
  small.checkpoints = {16, 24, 32, 48, 64, 96, 128};
  small.max_bond = 128;
  small.oracle = true;
  small.output_dir = "runs/fig3-5-error-small-N";
  small.note =
      "observable error against 1/delta, compared row by row with the exact "
      "diagonal ensemble (both transverse and longitudinal quenches)";
  push("fig3/5-error-small-N", small);

  ExperimentConfig large = small;
  large.sizes = {10, 12};  // N = 14 references need ~4 GB per dense matrix
  large.output_dir = "runs/fig4-6-error-large-N";
  large.note =
      "reduced-size analogue of the large-chain comparison, scored against "
      "the matched-energy thermal reference in ensemble.tsv; the pairing of "
      "the second panel is ambiguous between X+ and Z+, so both quenches are "
      "run.";
  push("fig4/6-error-large-N", large);

  ExperimentConfig osee;
  osee.sizes = {8, 12, 16, 20};
  osee.states = {"X+"};
  osee.schedules = {"sqrt", "linear", "nlogn", "quadratic"};
  osee.max_bond = 128;
  osee.oracle = false;
  osee.output_dir = "runs/fig7-osee-scaling";
  osee.note =
      "final-order operator-space entanglement against chain size under the "
      "order schedules ceil(5 sqrt N), N, ceil(N log2 N) and N^2";
  push("fig7-osee-scaling", osee);

  ExperimentConfig peak;
  peak.sizes = {8, 10, 12};
  peak.states = {"X+"};
  peak.checkpoints = {8, 12, 16, 24, 32, 48, 64};
  peak.max_bond = 128;
  peak.oracle = true;
  peak.oracle_osee = true;
  peak.output_dir = "runs/fig8-osee-peak";
  peak.note =
      "exact operator-space entanglement against 1/delta; rises to a peak "
      "and then falls toward the diagonal-ensemble value";
  push("fig8-osee-peak", peak);

  return out;
}

namespace {

template <typename T>
index_t required_bond(const MpsVector<T>& t, double tol) {
  const double nt = norm(t);
  if (!(nt > 0.0)) return 1;
  auto deficit = [&](index_t bond) {
    MpsVector<T> c = t;
    compress(c, bond, 0.0);
    const double nc = norm(c);
    if (!(nc > 0.0)) return 1.0;
    return std::max(0.0, 1.0 - std::abs(inner(c, t)) / (nc * nt));
  };
  index_t lo = 1, hi = std::max<index_t>(1, t.max_bond_dim());
  if (deficit(hi) > tol) return hi;  // cannot happen for sane tolerances
  while (lo < hi) {
    const index_t mid = lo + (hi - lo) / 2;
    if (deficit(mid) <= tol)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

}  // namespace

std::vector<ProfileRow> truncation_profile(
    const std::string& run_dir, const std::vector<double>& tolerances) {
  if (tolerances.empty())
    throw dimension_error("profile needs at least one tolerance");
  for (double tol : tolerances)
    if (!(tol > 0.0) || tol > 1.0)
      throw dimension_error("profile tolerances must lie in (0, 1]");

  std::vector<std::pair<index_t, fs::path>> files;
  if (!fs::is_directory(run_dir))
    throw dimension_error("not a run directory: " + run_dir);
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() < 9 || name.rfind("t_m", 0) != 0 ||
        name.substr(name.size() - 4) != ".mps")
      continue;
    const std::string digits = name.substr(3, name.size() - 7);
    if (digits.empty() ||
        !std::all_of(digits.begin(), digits.end(),
                     [](unsigned char c) { return std::isdigit(c); }))
      continue;
    files.emplace_back((index_t)std::stoll(digits), entry.path());
  }
  if (files.empty())
    throw dimension_error("no stored recurrence vectors in " + run_dir);
  std::sort(files.begin(), files.end());

  std::vector<ProfileRow> rows;
  for (const auto& [degree, path] : files) {
    auto profile_one = [&](const auto& t) {
      for (double tol : tolerances)
        rows.push_back({degree, tol, required_bond(t, tol)});
    };
    try {
      profile_one(load_mps<double>(path.string()));
    } catch (const dimension_error&) {
      profile_one(load_mps<cplx>(path.string()));
    }
  }
  return rows;
}

index_t Table::col(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return (index_t)i;
  throw dimension_error("table has no column '" + name + "'");
}

double Table::number(index_t row, index_t column) const {
  const std::string& cell = cells.at((size_t)row).at((size_t)column);
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size() || cell.empty())
    return std::numeric_limits<double>::quiet_NaN();
  return v;
}

std::vector<double> Table::numbers(const std::string& name) const {
  const index_t c = col(name);
  std::vector<double> out;
  for (index_t r = 0; r < rows(); ++r) out.push_back(number(r, c));
  return out;
}

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dimension_error("cannot open table " + path);
  Table table;
  std::string line;
  if (!std::getline(in, line))
    throw dimension_error("empty table " + path);
  table.columns = split(line, '\t');
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line, '\t');
    if (cells.size() != table.columns.size())
      throw dimension_error("ragged row in table " + path);
    table.cells.push_back(std::move(cells));
  }
  return table;
}

std::map<std::string, std::string> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dimension_error("cannot open manifest " + path);
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

}  // namespace diagens
