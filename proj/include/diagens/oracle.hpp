#pragma once

#include <string>
#include <utility>
#include <vector>

#include "diagens/chebyshev.hpp"
#include "diagens/model.hpp"
#include "diagens/observables.hpp"
#include "diagens/tensor.hpp"

// Dense reference implementation for small chains (N <= 14): exact
// diagonal ensemble, exact Gaussian / Chebyshev filters, thermal state,
// participation ratio and operator-space entanglement. Everything that
// can live in the energy eigenbasis does; conversions to the
// computational basis are explicit and cost two dense multiplies.

namespace diagens {

/// Dense H in the computational basis; site 0 is the most significant
/// bit, matching to_dense of the MPO forms.
DenseTensor<double> dense_hamiltonian(const SpinChainModel& m);

struct SpectralDecomposition {
  SpinChainModel model;
  std::vector<double> energies;  // ascending
  DenseTensor<double> vectors;   // (dim, dim); column n holds |E_n>
  bool degenerate = false;       // some |E_n - E_m| < 1e-10 for n != m
  index_t dim() const { return (index_t)energies.size(); }
};

/// Full eigendecomposition. Refuses chains beyond 14 sites.
SpectralDecomposition diagonalize(const SpinChainModel& m);

/// Density matrix written in the energy eigenbasis of some fixed
/// decomposition. Physical states have unit trace; filtered intermediates
/// keep whatever trace the series gives them.
struct DenseDensity {
  index_t length = 0;
  DenseTensor<cplx> mat;  // (dim, dim)
  void validate() const;  // square, matching length, Hermitian to 1e-10
};

/// Computational-basis amplitudes of a named product state.
DenseTensor<cplx> product_state_dense(const std::string& state,
                                      index_t length);

/// c_n = <E_n|psi0>.
std::vector<cplx> eigen_amplitudes(const SpectralDecomposition& sd,
                                   const DenseTensor<cplx>& psi0);

/// rho0 = |psi0><psi0| in the eigenbasis: entries c_n conj(c_m).
DenseDensity initial_density(const SpectralDecomposition& sd,
                             const DenseTensor<cplx>& psi0);

/// Infinite-time average rho_D = sum_n |c_n|^2 |E_n><E_n| (strictly
/// diagonal; degenerate spectra are only flagged, not block-resolved).
DenseDensity diagonal_ensemble(const SpectralDecomposition& sd,
                               const DenseTensor<cplx>& psi0);

/// Entrywise Gaussian damping exp(-(E_n - E_m)^2 / (2 sigma^2)); the
/// diagonal (and hence the trace) is untouched. sigma must be positive;
/// +infinity is allowed and is the identity.
DenseDensity gaussian_filter_exact(const SpectralDecomposition& sd,
                                   const DenseDensity& rho0, double sigma);

/// Entrywise damping by the order-M scalar symbol q_M(alpha (E_n - E_m)).
/// Requires alpha (E_max - E_min) < 1 so the argument stays in (-1, 1).
DenseDensity chebyshev_filter_exact(const SpectralDecomposition& sd,
                                    const DenseDensity& rho0, double alpha,
                                    index_t order,
                                    JacksonForm form = JacksonForm::standard);

double trace_dense(const DenseDensity& rho);         // Re tr(rho)
double frobenius_sq_dense(const DenseDensity& rho);  // sum |rho_nm|^2
double frobenius_off_diagonal(const DenseDensity& rho);  // n != m part

/// Energy width of the off-diagonal support, physical units:
/// sum_{nm} |rho_nm|^2 (E_n - E_m)^2 / sum_{nm} |rho_nm|^2.
double delta_squared_dense(const SpectralDecomposition& sd,
                           const DenseDensity& rho);

/// Participation sum_n |c_n|^4 of (normalized) eigenbasis amplitudes.
double ipr_amplitudes(const std::vector<cplx>& amplitudes);
double ipr(const SpectralDecomposition& sd, const DenseTensor<cplx>& psi0);

/// V^T O V of a single-site observable: one dense transform, meant to be
/// computed once and reused across many densities.
DenseTensor<cplx> observable_eigen(const SpectralDecomposition& sd,
                                   const ObservableSpec& spec);

/// Re tr(O rho) / tr(rho), both factors in the eigenbasis. Throws
/// numerical_error when the trace is smaller than 1e-12 * ||rho||_F.
double expectation_dense(const DenseDensity& rho,
                         const DenseTensor<cplx>& obs_eigen);

/// Site-interleaved vectorization (the MPS layout: one base-4 digit
/// 2*ket + bra per site) of a density given in the eigenbasis, and back.
DenseTensor<cplx> vectorized_from_density(const SpectralDecomposition& sd,
                                          const DenseDensity& rho);
template <typename T>
DenseDensity density_from_vectorized(const SpectralDecomposition& sd,
                                     const DenseTensor<T>& vec);

/// Gibbs state matched to a target mean energy. beta is found by a
/// bracketed bisection (the mean energy is strictly decreasing in beta),
/// stopping at |<H>_beta - target| <= 1e-10 N. Targets outside the open
/// interval (E_min, E_max) are rejected. `observables` holds mid-chain
/// sigma_x / sigma_y / sigma_z thermal expectations.
struct ThermalReference {
  double beta = 0.0;
  double energy = 0.0;
  std::vector<std::pair<std::string, double>> observables;
};
ThermalReference thermal_reference(const SpectralDecomposition& sd,
                                   double target_energy);
ThermalReference thermal_reference(const SpinChainModel& m,
                                   double target_energy);

/// Operator-space entanglement: vectorize rho site-interleaved, normalize,
/// Schmidt-decompose across `cut` doubled sites (0 = floor(N/2)) and
/// return -sum lambda^2 log2 lambda^2.
double osee_exact(const SpectralDecomposition& sd, const DenseDensity& rho,
                  index_t cut = 0);

/// Trapezoidal time average of rho(t) = e^{-iHt} rho0 e^{iHt} on a uniform
/// grid with the given step over [0, window] (window is rounded to a whole
/// number of steps). Evaluated entrywise in the eigenbasis through the
/// closed form of the geometric phase sums, which is arithmetic identical
/// to the time loop. By linearity the time-averaged expectation of any
/// observable is the expectation in the returned state.
DenseDensity window_average(const SpectralDecomposition& sd,
                            const DenseDensity& rho0, double window,
                            double step);

}  // namespace diagens
