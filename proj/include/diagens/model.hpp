#pragma once

#include <array>
#include <string>

#include "diagens/mps.hpp"

namespace diagens {

/// Tilted-field Ising chain H = sum_i J Z_i Z_{i+1} + g X_i + h Z_i with
/// open boundaries.
struct SpinChainModel {
  index_t length = 0;
  double j = 1.0;
  double g = -1.05;
  double h = 0.5;
};

/// 2x2 matrices, row-major.
template <typename T>
using Mat2 = std::array<T, 4>;

template <typename T>
Mat2<T> pauli_id();
template <typename T>
Mat2<T> pauli_x();
Mat2<cplx> pauli_y();
template <typename T>
Mat2<T> pauli_z();

/// Bond-dimension-3 MPO of the Hamiltonian (real).
MpoOperator<double> ising_mpo(const SpinChainModel& m);

/// Commutator superoperator alpha * (H rho - rho H) on vectorized density
/// matrices: physical dimension 4 with index k = 2*ket + bra, bond
/// dimension 6 (direct sum of left- and right-multiplication branches).
MpoOperator<double> commutator_mpo(const SpinChainModel& m,
                                   double alpha = 1.0);

/// Rescaling factor: alpha = (1 - margin) / (2 ((N-1)|J| + N|g| + N|h|)),
/// which keeps the spectrum of alpha * [H, .] inside (-1, 1).
double rescale_alpha(const SpinChainModel& m, double margin = 0.01);

/// Named single-site kets: X+/X-/Y+/Y-/Z+/Z-, the eigenstates of the
/// corresponding Pauli operator. Y states require complex scalars.
template <typename T>
std::array<T, 2> local_ket(const std::string& name);

/// Whether the named state has real amplitudes (everything except Y+/Y-).
bool is_real_state(const std::string& name);

/// Translation-invariant product state |s>^N with physical dimension 2.
template <typename T>
MpsVector<T> product_state(const std::string& name, index_t length);

/// Vectorized pure-state density matrix of a product state: per site
/// v[2s+s'] = psi_s * conj(psi_s'), physical dimension 4.
template <typename T>
MpsVector<T> vectorized_density(const std::string& name, index_t length);

/// <1| as an MPS: local vector vec(identity) = (1,0,0,1), so that
/// inner(trace_vector, rho) = tr(rho).
template <typename T>
MpsVector<T> trace_vector(index_t length);

/// Vectorization of a product operator O = prod of the given single-site
/// factors (identity elsewhere): local vectors v[2s+s'] = O[s][s']. With
/// the conjugate-linear inner product, inner(result, rho) = tr(O^dag rho).
template <typename T>
MpsVector<T> observable_vector(
    index_t length,
    const std::vector<std::pair<index_t, Mat2<T>>>& factors);

/// Adjoint in vectorized form: conjugate and swap ket/bra indices
/// (k: 1 <-> 2). rho is Hermitian iff swap_ketbra(rho) == rho.
template <typename T>
MpsVector<T> swap_ketbra(const MpsVector<T>& rho);

/// Relative norm of the anti-Hermitian part, ||rho - rho^dag|| / (2 ||rho||).
template <typename T>
double hermiticity_defect(const MpsVector<T>& rho);

}  // namespace diagens
