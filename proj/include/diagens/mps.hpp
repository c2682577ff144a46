#pragma once

#include <vector>

#include "diagens/tensor.hpp"

namespace diagens {

/// Matrix product state / vectorized operator. Site tensors carry axes
/// (left bond, physical, right bond); the first left and last right bond
/// have dimension 1. Nothing is kept normalized implicitly.
template <typename T>
struct MpsVector {
  std::vector<DenseTensor<T>> sites;

  index_t length() const { return (index_t)sites.size(); }
  index_t phys_dim(index_t i) const { return sites.at((size_t)i).dim(1); }
  /// Bond k sits between sites k-1 and k, k = 1 .. length()-1.
  index_t bond_dim(index_t k) const { return sites.at((size_t)k).dim(0); }
  index_t max_bond_dim() const;
  std::vector<index_t> bond_dims() const;

  /// Throws dimension_error unless bonds chain up and boundaries are 1.
  void validate() const;
};

/// Matrix product operator; site axes (left bond, phys out, phys in, right).
template <typename T>
struct MpoOperator {
  std::vector<DenseTensor<T>> sites;

  index_t length() const { return (index_t)sites.size(); }
  index_t phys_dim(index_t i) const { return sites.at((size_t)i).dim(1); }
  index_t bond_dim(index_t k) const { return sites.at((size_t)k).dim(0); }
  index_t max_bond_dim() const;

  void validate() const;
};

/// Product state from per-site local vectors.
template <typename T>
MpsVector<T> product_mps(const std::vector<std::vector<T>>& local);

/// Identity operator with bond dimension 1.
template <typename T>
MpoOperator<T> identity_mpo(index_t length, index_t phys_dim);

/// <a|b>, conjugate-linear in `a`.
template <typename T>
T inner(const MpsVector<T>& a, const MpsVector<T>& b);

template <typename T>
double norm(const MpsVector<T>& psi);

/// Scales the state to unit norm; returns the previous norm.
template <typename T>
double normalize(MpsVector<T>& psi);

template <typename T>
void scale(MpsVector<T>& psi, T alpha);

/// Mixed-canonical form: sites < center become left-orthonormal, sites
/// > center right-orthonormal, all weight collects in the center tensor.
/// Pure QR/LQ sweeps, no truncation.
template <typename T>
void canonicalize(MpsVector<T>& psi, index_t center);

/// Truncates every bond to max_bond (0 = unlimited) and relative discarded
/// weight rel_tol per cut: a left-to-right QR pass followed by a
/// right-to-left singular value truncation sweep. Ends in right-canonical
/// form with the weight on site 0. Returns the summed relative discarded
/// weight over all cuts. `fast` switches the SVDs to the Gram-matrix path.
template <typename T>
double compress(MpsVector<T>& psi, index_t max_bond, double rel_tol,
                bool fast = false);

/// Exact MPO application; bond dimensions multiply.
template <typename T>
MpsVector<T> apply_mpo(const MpoOperator<T>& op, const MpsVector<T>& psi);

/// MPO application with on-the-fly truncation (zip-up): one left-to-right
/// sweep absorbing the operator while truncating at a tightened tolerance,
/// then a right-to-left truncation sweep at (max_bond, rel_tol). Adds the
/// relative discarded weight onto *dw_accum when given.
template <typename T>
MpsVector<T> apply_mpo_compressed(const MpoOperator<T>& op,
                                  const MpsVector<T>& psi, index_t max_bond,
                                  double rel_tol, double* dw_accum = nullptr);

/// sum_i coeff[i] * |terms[i]> as a direct sum, then compressed to
/// (max_bond, rel_tol). All terms must share length and physical dims.
template <typename T>
MpsVector<T> linear_combine(const std::vector<T>& coeffs,
                            const std::vector<const MpsVector<T>*>& terms,
                            index_t max_bond, double rel_tol,
                            double* dw_accum = nullptr);

/// Singular values (descending, unnormalized) across the cut with `cut`
/// sites in the left block, cut = 1 .. length()-1.
template <typename T>
std::vector<double> schmidt_spectrum(const MpsVector<T>& psi, index_t cut);

/// Entanglement entropy -sum p log2 p of the normalized squared Schmidt
/// values across the cut.
template <typename T>
double schmidt_entropy(const MpsVector<T>& psi, index_t cut);

/// Contracts the chain into one rank-1 tensor of size prod(phys dims).
/// Guarded against sizes above 2^26 entries.
template <typename T>
DenseTensor<T> to_dense(const MpsVector<T>& psi);

/// Builds an MPS from a dense vector with uniform physical dimension by
/// successive truncated factorizations (test/bridge helper).
template <typename T>
MpsVector<T> mps_from_dense(const DenseTensor<T>& v, index_t phys_dim,
                            index_t length, index_t max_bond, double rel_tol);

/// Dense matrix of an MPO (small systems only; same size guard).
template <typename T>
DenseTensor<T> mpo_to_dense(const MpoOperator<T>& op);

MpsVector<cplx> to_complex(const MpsVector<double>& psi);
MpoOperator<cplx> to_complex(const MpoOperator<double>& op);

}  // namespace diagens
