#pragma once

#include <string>

#include "diagens/chebyshev.hpp"
#include "diagens/mps.hpp"

namespace diagens {

/// Versioned little-endian binary container (see README for the layout):
/// an 8-byte magic "DGNSTN01", a kind tag (MPS / MPO / filter state), a
/// scalar tag (float64 / complex128), then shape headers and raw data.
/// Loading checks magic, kind, and scalar type and throws dimension_error
/// on any mismatch or on a truncated file.

template <typename T>
void save_mps(const MpsVector<T>& psi, const std::string& path);

template <typename T>
MpsVector<T> load_mps(const std::string& path);

template <typename T>
void save_mpo(const MpoOperator<T>& op, const std::string& path);

template <typename T>
MpoOperator<T> load_mpo(const std::string& path);

/// Restart snapshot: order_done, cumulative discarded weight, elapsed
/// seconds and the three recurrence vectors. The operator and config are
/// not stored; the loader reattaches the caller's copies, checking that
/// the snapshot's order_done fits the config.
template <typename T>
void save_filter_state(const FilterRun<T>& run, const std::string& path);

template <typename T>
FilterRun<T> load_filter_state(const std::string& path,
                               const MpoOperator<T>& h_c, FilterConfig cfg);

}  // namespace diagens
