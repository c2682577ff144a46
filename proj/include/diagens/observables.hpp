#pragma once

#include <string>

#include "diagens/model.hpp"
#include "diagens/mps.hpp"

namespace diagens {

/// Single-site measurement on a vectorized density matrix. `site` is
/// 1-based; site = 0 selects mid-chain floor(N/2).
struct ObservableSpec {
  std::string label;
  Mat2<cplx> op{};  // 2x2 Hermitian, row-major
  index_t site = 0;

  static ObservableSpec sigma_x(index_t site = 0);
  static ObservableSpec sigma_y(index_t site = 0);
  static ObservableSpec sigma_z(index_t site = 0);
  static ObservableSpec identity(index_t site = 0);
};

/// Parses an observable label: "sx", "sy" or "sz", optionally with a
/// 1-based site suffix as in "sz:3" (no suffix: mid-chain). The label is
/// kept verbatim so table columns stay distinguishable. Throws
/// dimension_error on anything else.
ObservableSpec observable_from_label(const std::string& label);

/// 1-based site the spec acts on for a chain of the given length.
index_t resolve_site(const ObservableSpec& spec, index_t length);

/// Hermiticity within 1e-12 and site in range; throws dimension_error.
void validate_spec(const ObservableSpec& spec, index_t length);

struct Expectation {
  double value = 0.0;         // Re(<O|rho>/<1|rho>)
  double imag_residue = 0.0;  // Im of the same ratio; truncation monitor
};

/// tr(O rho)/tr(rho). Throws numerical_error when |<1|rho>| < 1e-12 ||rho||
/// (normalization degenerate). A real-scalar rho requires a real operator.
template <typename T>
Expectation expectation(const MpsVector<T>& rho, const ObservableSpec& spec);

struct DeltaSquared {
  double rescaled = 0.0;  // ||H_C rho||^2 / <rho|rho> in rescaled units
  double physical = 0.0;  // rescaled / alpha^2
};

/// Off-diagonal width delta^2, computed apply-then-norm so truncation can
/// never push it negative. max_bond 0 lets the applied bond grow freely.
template <typename T>
DeltaSquared delta_squared(const MpsVector<T>& rho, const MpoOperator<T>& h_c,
                           double alpha, index_t max_bond = 0,
                           double rel_tol = 1e-10);

/// <rho|rho>, clipped to >= 0.
template <typename T>
double frobenius_sq(const MpsVector<T>& rho);

/// <1|rho> = tr(rho).
template <typename T>
T trace_overlap(const MpsVector<T>& rho);

}  // namespace diagens
