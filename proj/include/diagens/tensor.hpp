#pragma once

#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "diagens/common.hpp"

namespace diagens {

/// Dense tensor with arbitrary rank, row-major storage (last index fastest).
template <typename T>
class DenseTensor {
 public:
  DenseTensor() = default;

  explicit DenseTensor(std::vector<index_t> shape)
      : shape_(std::move(shape)), data_(checked_size(shape_), T(0)) {}

  DenseTensor(std::vector<index_t> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if ((index_t)data_.size() != checked_size(shape_))
      throw dimension_error("tensor data size does not match shape");
  }

  index_t rank() const { return (index_t)shape_.size(); }
  const std::vector<index_t>& shape() const { return shape_; }
  index_t dim(index_t axis) const { return shape_.at((size_t)axis); }
  index_t size() const { return (index_t)data_.size(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& operator[](index_t i) { return data_[(size_t)i]; }
  const T& operator[](index_t i) const { return data_[(size_t)i]; }

  T& at(std::initializer_list<index_t> idx) { return data_[(size_t)offset(idx)]; }
  const T& at(std::initializer_list<index_t> idx) const {
    return data_[(size_t)offset(idx)];
  }

  /// Reinterpret with a new shape of identical total size.
  DenseTensor reshaped(std::vector<index_t> shape) const& {
    return DenseTensor(std::move(shape), data_);
  }
  DenseTensor reshaped(std::vector<index_t> shape) && {
    return DenseTensor(std::move(shape), std::move(data_));
  }
  void reshape_inplace(std::vector<index_t> shape) {
    if (checked_size(shape) != size())
      throw dimension_error("reshape changes total size");
    shape_ = std::move(shape);
  }

  static index_t checked_size(const std::vector<index_t>& shape) {
    index_t n = 1;
    for (index_t d : shape) {
      if (d < 0) throw dimension_error("negative tensor dimension");
      n *= d;
    }
    return n;
  }

 private:
  index_t offset(std::initializer_list<index_t> idx) const {
    if ((index_t)idx.size() != rank())
      throw dimension_error("index rank mismatch");
    index_t off = 0;
    auto it = idx.begin();
    for (size_t ax = 0; ax < shape_.size(); ++ax, ++it) {
      if (*it < 0 || *it >= shape_[ax]) throw dimension_error("index out of range");
      off = off * shape_[ax] + *it;
    }
    return off;
  }

  std::vector<index_t> shape_;
  std::vector<T> data_;
};

/// Result of a truncated SVD split: t ~ left * diag(s) * right with
/// left carrying the row group plus a new last axis of size rank(), and
/// right carrying a new first axis plus the column group. The singular
/// values are not folded into either factor.
template <typename T>
struct TruncatedFactorization {
  DenseTensor<T> left;
  DenseTensor<T> right;
  std::vector<double> singular_values;
  double discarded_weight = 0.0;  // discarded sum of squares / total sum of squares

  index_t rank() const { return (index_t)singular_values.size(); }
};

template <typename T>
DenseTensor<T> permute(const DenseTensor<T>& t, std::span<const index_t> perm);

template <typename T>
DenseTensor<T> permute(const DenseTensor<T>& t,
                       std::initializer_list<index_t> perm) {
  return permute(t, std::span<const index_t>(perm.begin(), perm.size()));
}

template <typename T>
DenseTensor<T> conj(DenseTensor<T> t);

template <typename T>
void scale(DenseTensor<T>& t, T alpha);

/// y += alpha * x (shapes must match).
template <typename T>
void axpy(T alpha, const DenseTensor<T>& x, DenseTensor<T>& y);

template <typename T>
double norm(const DenseTensor<T>& t);

/// Contract a with b over the given axis pairs (axis in a, axis in b).
/// Result axes: free axes of a in order, then free axes of b in order.
template <typename T>
DenseTensor<T> contract(const DenseTensor<T>& a, const DenseTensor<T>& b,
                        std::span<const std::pair<index_t, index_t>> pairs);

template <typename T>
DenseTensor<T> contract(const DenseTensor<T>& a, const DenseTensor<T>& b,
                        std::initializer_list<std::pair<index_t, index_t>> pairs) {
  return contract(a, b,
                  std::span<const std::pair<index_t, index_t>>(pairs.begin(),
                                                               pairs.size()));
}

/// Truncated SVD across the cut after the first `n_left_axes` axes.
/// Truncation policy: singular values below 1e-14 * sigma_max are always
/// dropped; beyond that the largest tail with relative discarded weight
/// (sum of squares) <= rel_tol goes, and finally max_rank caps the rank
/// (max_rank = 0 means unlimited). At least one value is always kept.
template <typename T>
TruncatedFactorization<T> svd_truncate(const DenseTensor<T>& t,
                                       index_t n_left_axes, index_t max_rank,
                                       double rel_tol);

/// Faster truncated SVD via the Gram matrix on the smaller side. Accuracy
/// is limited to singular values above ~1e-8 * sigma_max, so anything
/// below 1e-7 * sigma_max is dropped unconditionally; only use where
/// rel_tol makes such values discarded anyway.
template <typename T>
TruncatedFactorization<T> svd_truncate_gram(const DenseTensor<T>& t,
                                            index_t n_left_axes,
                                            index_t max_rank, double rel_tol);

/// QR across the cut after the first `n_left_axes` axes:
/// t = Q * R with Q having orthonormal columns. Returns {Q, R} shaped
/// [left dims..., k] and [k, right dims...].
template <typename T>
std::pair<DenseTensor<T>, DenseTensor<T>> qr_orthogonalize(
    const DenseTensor<T>& t, index_t n_left_axes);

/// LQ across the same cut: t = L * Q with Q having orthonormal rows.
/// Returns {L, Q} shaped [left dims..., k] and [k, right dims...].
template <typename T>
std::pair<DenseTensor<T>, DenseTensor<T>> lq_orthogonalize(
    const DenseTensor<T>& t, index_t n_left_axes);

}  // namespace diagens
