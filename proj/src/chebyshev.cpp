#include "diagens/chebyshev.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

namespace diagens {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool scheduled(const FilterConfig& cfg, index_t m) {
  return std::binary_search(cfg.checkpoint_orders.begin(),
                            cfg.checkpoint_orders.end(), m);
}

}  // namespace

FilterConfig normalize_filter_config(FilterConfig cfg, index_t length) {
  if (cfg.order < 0 || cfg.order % 2 != 0)
    throw dimension_error("filter order must be even and non-negative");
  if (cfg.max_bond < 1) throw dimension_error("filter max_bond must be >= 1");
  if (!(cfg.rel_tol >= 0.0))
    throw dimension_error("filter rel_tol must be >= 0");
  if (!(cfg.abort_threshold > 0.0))
    throw dimension_error("filter abort threshold must be positive");
  if (cfg.checkpoint_orders.empty())
    cfg.checkpoint_orders = default_checkpoints(cfg.order);
  for (size_t i = 0; i < cfg.checkpoint_orders.size(); ++i) {
    const index_t c = cfg.checkpoint_orders[i];
    if (c < 0 || c % 2 != 0 || c > cfg.order)
      throw dimension_error("checkpoint orders must be even and <= M");
    if (i > 0 && c <= cfg.checkpoint_orders[i - 1])
      throw dimension_error("checkpoint orders must be strictly ascending");
  }
  if (cfg.checkpoint_orders.back() != cfg.order)
    cfg.checkpoint_orders.push_back(cfg.order);
  if (cfg.osee_cut < 0 || cfg.osee_cut >= length)
    throw dimension_error("osee_cut outside 1 .. length-1");
  for (const auto& spec : cfg.observables) validate_spec(spec, length);
  return cfg;
}

double jackson_coeff(index_t m, index_t order, JacksonForm form) {
  if (order < 0 || m < 0 || m > order)
    throw dimension_error("jackson_coeff requires 0 <= m <= M");
  if (m == 0) return 1.0;
  const double arg = std::numbers::pi / (double)(order + 1);
  const double tail = form == JacksonForm::standard
                          ? std::cos(arg) / std::sin(arg)
                          : std::cos(arg);
  return ((double)(order - m + 1) * std::cos(arg * (double)m) +
          std::sin(arg * (double)m) * tail) /
         (double)(order + 1);
}

double series_coeff(index_t k, index_t order, JacksonForm form) {
  if (k < 0 || 2 * k > order)
    throw dimension_error("series_coeff requires 0 <= 2k <= M");
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  const double weight = (k == 0) ? 1.0 : 2.0;
  return sign * weight / std::numbers::pi * jackson_coeff(2 * k, order, form);
}

double filter_symbol(double x, index_t order, JacksonForm form) {
  if (order < 0 || order % 2 != 0)
    throw dimension_error("filter order must be even and non-negative");
  double acc = series_coeff(0, order, form);  // T_0 = 1
  if (order == 0) return acc;
  double t_prev = 1.0;
  double t_curr = x;
  for (index_t m = 2; m <= order; ++m) {
    const double t_next = 2.0 * x * t_curr - t_prev;
    t_prev = t_curr;
    t_curr = t_next;
    if (m % 2 == 0) acc += series_coeff(m / 2, order, form) * t_curr;
  }
  return acc;
}

double filter_trace_factor(index_t order, JacksonForm form) {
  return filter_symbol(0.0, order, form);
}

double sigma_rescaled(index_t order) {
  if (order < 1) throw dimension_error("sigma needs order >= 1");
  return std::sqrt(std::numbers::pi) / (double)order;
}

double sigma_for_order(index_t order, double alpha) {
  if (!(alpha > 0.0)) throw dimension_error("sigma needs alpha > 0");
  return sigma_rescaled(order) / alpha;
}

std::vector<index_t> default_checkpoints(index_t order) {
  std::vector<index_t> out;
  for (index_t p = 16; p <= order; p *= 2) out.push_back(p);
  for (index_t p = 24; p <= order; p *= 2) out.push_back(p);
  out.push_back(order);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

template <typename T>
FilterRun<T> init_filter(const MpsVector<T>& rho0, const MpoOperator<T>& h_c,
                         FilterConfig cfg) {
  rho0.validate();
  h_c.validate();
  if (rho0.length() != h_c.length())
    throw dimension_error("state and operator lengths differ");

  FilterRun<T> run;
  run.config = normalize_filter_config(std::move(cfg), rho0.length());
  run.h_c = h_c;
  const auto t0 = Clock::now();
  run.t_prev = rho0;
  run.accumulator = rho0;
  scale(run.accumulator,
        T(series_coeff(0, run.config.order, run.config.form)));
  if (run.config.order >= 2) {
    run.t_curr =
        apply_mpo_compressed(run.h_c, rho0, run.config.max_bond,
                             run.config.rel_tol,
                             &run.cumulative_discarded_weight);
    run.order_done = 1;
  } else {
    run.t_curr = rho0;
    run.order_done = 0;
  }
  run.seconds_elapsed += seconds_since(t0);
  if (scheduled(run.config, 0))
    run.checkpoints.push_back(measure_checkpoint(run));
  return run;
}

template <typename T>
void advance(FilterRun<T>& run) {
  if (run.aborted || run.order_done >= run.config.order) return;
  const auto t0 = Clock::now();
  const index_t m = run.order_done + 1;
  double dw = 0.0;
  MpsVector<T> y = apply_mpo_compressed(run.h_c, run.t_curr,
                                        run.config.max_bond,
                                        run.config.rel_tol, &dw);
  MpsVector<T> t_next =
      linear_combine<T>({T(2), T(-1)}, {&y, &run.t_prev}, run.config.max_bond,
                        run.config.rel_tol, &dw);
  run.t_prev = std::move(run.t_curr);
  run.t_curr = std::move(t_next);
  run.order_done = m;
  if (m % 2 == 0) {
    const T c = T(series_coeff(m / 2, run.config.order, run.config.form));
    run.accumulator =
        linear_combine<T>({T(1), c}, {&run.accumulator, &run.t_curr},
                          run.config.max_bond, run.config.rel_tol, &dw);
  }
  run.cumulative_discarded_weight += dw;
  run.seconds_elapsed += seconds_since(t0);
  if (run.cumulative_discarded_weight > run.config.abort_threshold) {
    run.aborted = true;
    run.abort_reason = "cumulative discarded weight " +
                       std::to_string(run.cumulative_discarded_weight) +
                       " exceeded " +
                       std::to_string(run.config.abort_threshold) +
                       " at degree " + std::to_string(m);
    return;
  }
  if (m % 2 == 0 && scheduled(run.config, m))
    run.checkpoints.push_back(measure_checkpoint(run));
}

template <typename T>
CheckpointRecord measure_checkpoint(FilterRun<T>& run) {
  const auto t0 = Clock::now();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CheckpointRecord rec;
  rec.order = run.order_done - (run.order_done % 2);
  rec.frobenius_sq = frobenius_sq(run.accumulator);
  rec.trace = cplx(trace_overlap(run.accumulator));
  if (run.config.track_delta) {
    const auto d =
        delta_squared(run.accumulator, run.h_c, run.config.alpha,
                      run.config.max_bond, run.config.rel_tol);
    rec.delta_sq = d.rescaled;
    rec.delta_sq_physical = d.physical;
  } else {
    rec.delta_sq = rec.delta_sq_physical = nan;
  }
  if (run.config.track_osee) {
    const index_t cut = run.config.osee_cut > 0
                            ? run.config.osee_cut
                            : run.accumulator.length() / 2;
    rec.osee_half = schmidt_entropy(run.accumulator, cut);
  } else {
    rec.osee_half = nan;
  }
  for (const auto& spec : run.config.observables) {
    try {
      const auto e = expectation(run.accumulator, spec);
      rec.observables.emplace_back(spec.label, e.value);
      rec.obs_imag_max =
          std::max(rec.obs_imag_max, std::abs(e.imag_residue));
    } catch (const numerical_error&) {
      rec.observables.emplace_back(spec.label, nan);
    }
  }
  rec.max_bond_used = run.accumulator.max_bond_dim();
  if (!run.t_curr.sites.empty())
    rec.max_bond_used =
        std::max(rec.max_bond_used, run.t_curr.max_bond_dim());
  rec.cumulative_discarded_weight = run.cumulative_discarded_weight;
  run.seconds_elapsed += seconds_since(t0);
  rec.seconds = run.seconds_elapsed;
  return rec;
}

template <typename T>
void resume_filter(FilterRun<T>& run) {
  while (!run.aborted && run.order_done < run.config.order) advance(run);
}

template <typename T>
FilterRun<T> run_filter(const MpsVector<T>& rho0, const MpoOperator<T>& h_c,
                        const FilterConfig& cfg) {
  FilterRun<T> run = init_filter(rho0, h_c, cfg);
  resume_filter(run);
  return run;
}

template <typename T>
std::vector<FilterRun<T>> run_filter_sweep(const MpsVector<T>& rho0,
                                           const MpoOperator<T>& h_c,
                                           const std::vector<index_t>& orders,
                                           const FilterConfig& base,
                                           const RecurrenceHook<T>& on_recurrence) {
  rho0.validate();
  h_c.validate();
  if (orders.empty()) throw dimension_error("sweep needs at least one order");
  for (size_t i = 0; i < orders.size(); ++i) {
    if (orders[i] < 0 || orders[i] % 2 != 0)
      throw dimension_error("sweep orders must be even and non-negative");
    if (i > 0 && orders[i] <= orders[i - 1])
      throw dimension_error("sweep orders must be strictly ascending");
  }

  std::vector<FilterRun<T>> out(orders.size());
  for (size_t j = 0; j < orders.size(); ++j) {
    FilterConfig cfg = base;
    cfg.order = orders[j];
    cfg.checkpoint_orders = {orders[j]};
    out[j].config = normalize_filter_config(std::move(cfg), rho0.length());
    out[j].h_c = h_c;
    out[j].accumulator = rho0;
    scale(out[j].accumulator,
          T(series_coeff(0, orders[j], base.form)));
  }

  const auto t0 = Clock::now();
  double dw_shared = 0.0;
  size_t pending = 0;
  auto finalize = [&](FilterRun<T>& r) {
    r.order_done = r.config.order;
    r.cumulative_discarded_weight += dw_shared;
    r.seconds_elapsed = seconds_since(t0);
    r.checkpoints.push_back(measure_checkpoint(r));
  };

  if (on_recurrence) on_recurrence(0, rho0);
  while (pending < out.size() && out[pending].config.order == 0)
    finalize(out[pending++]);
  if (pending == out.size()) return out;

  MpsVector<T> t_prev = rho0;
  MpsVector<T> t_curr = apply_mpo_compressed(h_c, rho0, base.max_bond,
                                             base.rel_tol, &dw_shared);
  if (on_recurrence) on_recurrence(1, t_curr);
  for (index_t m = 2; m <= orders.back() && pending < out.size(); ++m) {
    double dw = 0.0;
    MpsVector<T> y =
        apply_mpo_compressed(h_c, t_curr, base.max_bond, base.rel_tol, &dw);
    MpsVector<T> t_next = linear_combine<T>(
        {T(2), T(-1)}, {&y, &t_prev}, base.max_bond, base.rel_tol, &dw);
    t_prev = std::move(t_curr);
    t_curr = std::move(t_next);
    dw_shared += dw;
    if (on_recurrence) on_recurrence(m, t_curr);
    if (m % 2 != 0) continue;

    bool any_alive = false;
    for (size_t j = pending; j < out.size(); ++j) {
      auto& r = out[j];
      if (r.aborted) continue;
      if (dw_shared + r.cumulative_discarded_weight >
          r.config.abort_threshold) {
        r.aborted = true;
        r.abort_reason =
            "cumulative discarded weight exceeded " +
            std::to_string(r.config.abort_threshold) + " at degree " +
            std::to_string(m);
        r.order_done = m;
        r.cumulative_discarded_weight += dw_shared;
        continue;
      }
      any_alive = true;
      const T c = T(series_coeff(m / 2, r.config.order, r.config.form));
      r.accumulator = linear_combine<T>(
          {T(1), c}, {&r.accumulator, &t_curr}, r.config.max_bond,
          r.config.rel_tol, &r.cumulative_discarded_weight);
    }
    while (pending < out.size() &&
           (out[pending].aborted || out[pending].config.order == m)) {
      if (!out[pending].aborted) finalize(out[pending]);
      ++pending;
    }
    if (!any_alive) break;
  }
  return out;
}

#define DIAGENS_INSTANTIATE_FILTER(T)                                     \
  template FilterRun<T> init_filter<T>(const MpsVector<T>&,               \
                                       const MpoOperator<T>&,             \
                                       FilterConfig);                     \
  template void advance<T>(FilterRun<T>&);                                \
  template CheckpointRecord measure_checkpoint<T>(FilterRun<T>&);         \
  template void resume_filter<T>(FilterRun<T>&);                          \
  template FilterRun<T> run_filter<T>(const MpsVector<T>&,                \
                                      const MpoOperator<T>&,              \
                                      const FilterConfig&);               \
  template std::vector<FilterRun<T>> run_filter_sweep<T>(                 \
      const MpsVector<T>&, const MpoOperator<T>&,                         \
      const std::vector<index_t>&, const FilterConfig&,                   \
      const RecurrenceHook<T>&);

DIAGENS_INSTANTIATE_FILTER(double)
DIAGENS_INSTANTIATE_FILTER(cplx)

#undef DIAGENS_INSTANTIATE_FILTER

}  // namespace diagens
