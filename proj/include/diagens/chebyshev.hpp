#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "diagens/mps.hpp"
#include "diagens/observables.hpp"

namespace diagens {

/// The damping-coefficient formula. `standard` is the usual
/// kernel-polynomial form with cot(pi/(M+1)) on the sine term and is the
/// default everywhere; `literal` replaces the cot by cos(pi/(M+1)) and is
/// kept only for comparison runs.
enum class JacksonForm { standard, literal };

/// Jackson damping coefficient gamma_m^M; gamma_0^M = 1 exactly.
/// Throws dimension_error unless 0 <= m <= M.
double jackson_coeff(index_t m, index_t order,
                     JacksonForm form = JacksonForm::standard);

/// Signed weight of T_{2k} in the filter series:
/// (-1)^k (2 - delta_{k0}) / pi * gamma_{2k}^M. Requires 0 <= 2k <= M.
double series_coeff(index_t k, index_t order,
                    JacksonForm form = JacksonForm::standard);

/// Scalar filter symbol q_M(x) = sum_k series_coeff(k, M) T_{2k}(x),
/// evaluated by the same three-term recurrence the MPS pipeline uses.
double filter_symbol(double x, index_t order,
                     JacksonForm form = JacksonForm::standard);

/// q_M(0): the exact factor multiplying tr(rho) under the filter. The
/// even Chebyshev polynomials contribute T_{2k}(0) = (-1)^k, so the series
/// rescales the trace by this (order-dependent) constant.
double filter_trace_factor(index_t order,
                           JacksonForm form = JacksonForm::standard);

/// Gaussian width approximated by the order-M kernel, rescaled units.
double sigma_rescaled(index_t order);

/// Physical width sqrt(pi)/(M alpha) for spectra rescaled by alpha.
double sigma_for_order(index_t order, double alpha);

/// Log-spaced even checkpoint orders {2^a, 3*2^a} in [16, M], plus M.
std::vector<index_t> default_checkpoints(index_t order);

struct FilterConfig;

/// Validates a config against a chain length, fills the default checkpoint
/// schedule, and guarantees the final order is scheduled. Throws
/// dimension_error on any violated invariant.
FilterConfig normalize_filter_config(FilterConfig cfg, index_t length);

struct FilterConfig {
  index_t order = 0;        // series order M, even
  index_t max_bond = 256;   // bond cap for every compression
  double rel_tol = 1e-8;    // relative discarded weight per compression
  double alpha = 1.0;       // spectral rescaling, for physical-unit reports
  JacksonForm form = JacksonForm::standard;
  double abort_threshold = 1e-2;  // cumulative discarded weight budget
  std::vector<index_t> checkpoint_orders;  // even ascending; empty = default
  bool track_delta = true;
  bool track_osee = true;
  index_t osee_cut = 0;  // sites left of the cut; 0 = floor(N/2)
  std::vector<ObservableSpec> observables;
};

struct CheckpointRecord {
  index_t order = 0;
  double delta_sq = 0.0;           // rescaled units; NaN when not tracked
  double delta_sq_physical = 0.0;  // delta_sq / alpha^2
  double frobenius_sq = 0.0;
  cplx trace{};
  double osee_half = 0.0;  // NaN when not tracked
  std::vector<std::pair<std::string, double>> observables;
  double obs_imag_max = 0.0;  // largest |imag residue| among observables
  index_t max_bond_used = 0;
  double cumulative_discarded_weight = 0.0;
  double seconds = 0.0;  // wall time since the run started
};

/// State of one Chebyshev recurrence: T_{m-1}, T_m and the partial
/// accumulator sum_{2k <= m} series_coeff(k, M) T_{2k} applied to rho0.
template <typename T>
struct FilterRun {
  FilterConfig config;
  MpoOperator<T> h_c;
  MpsVector<T> t_prev;       // T_{m-1}(H_C) rho0
  MpsVector<T> t_curr;       // T_m(H_C) rho0
  MpsVector<T> accumulator;  // partial rho_M
  index_t order_done = 0;    // m
  double cumulative_discarded_weight = 0.0;
  bool aborted = false;
  std::string abort_reason;
  std::vector<CheckpointRecord> checkpoints;
  double seconds_elapsed = 0.0;
};

/// Validates the config, seeds T_0 = rho0, T_1 = H_C rho0 (unless M = 0)
/// and accumulator = (1/pi) rho0; records a checkpoint at order 0 if
/// scheduled. rho0 should be normalized with physical dimension 4.
template <typename T>
FilterRun<T> init_filter(const MpsVector<T>& rho0, const MpoOperator<T>& h_c,
                         FilterConfig cfg);

/// Advances one Chebyshev degree: T_{m+1} = 2 H_C T_m - T_{m-1} with
/// compression, folds even degrees into the accumulator, records scheduled
/// checkpoints, and flags (not throws) a blown truncation budget.
template <typename T>
void advance(FilterRun<T>& run);

/// Measures the accumulator at the current order (norm, trace, delta^2,
/// OSEE, observables) without changing recurrence state.
template <typename T>
CheckpointRecord measure_checkpoint(FilterRun<T>& run);

/// Advances an (initialized or deserialized) run to its final order.
template <typename T>
void resume_filter(FilterRun<T>& run);

/// init + resume: the full filtered ensemble rho_M = Q_M rho0.
template <typename T>
FilterRun<T> run_filter(const MpsVector<T>& rho0, const MpoOperator<T>& h_c,
                        const FilterConfig& cfg);

/// Observer invoked with each Chebyshev recurrence vector T_m |rho0> as it
/// is produced (degree, state). The reference is only valid for the call.
template <typename T>
using RecurrenceHook = std::function<void(index_t, const MpsVector<T>&)>;

/// Shares one Chebyshev recurrence across several target orders, carrying
/// an accumulator per order (the damping coefficients depend on M, so
/// partial sums cannot be reused across orders). Each returned run holds
/// its final accumulator and a single final checkpoint. `orders` must be
/// even, ascending, unique. `on_recurrence`, when set, sees every degree
/// from 0 up to the last one computed.
template <typename T>
std::vector<FilterRun<T>> run_filter_sweep(
    const MpsVector<T>& rho0, const MpoOperator<T>& h_c,
    const std::vector<index_t>& orders, const FilterConfig& base,
    const RecurrenceHook<T>& on_recurrence = {});

}  // namespace diagens
