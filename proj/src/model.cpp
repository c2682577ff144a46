#include "diagens/model.hpp"

#include <cmath>

namespace diagens {

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

/// W[a][b] entries of the bond-3 Hamiltonian MPO, lower triangular:
///   [ I        ]
///   [ Z        ]      left boundary = row 2, right boundary = column 0.
///   [ hZ+gX  JZ  I ]
template <typename T>
using MpoBlock = std::array<std::array<Mat2<T>, 3>, 3>;

Mat2<double> zero2() { return {0.0, 0.0, 0.0, 0.0}; }

Mat2<double> combine2(double a, const Mat2<double>& ma, double b,
                      const Mat2<double>& mb) {
  Mat2<double> r;
  for (int i = 0; i < 4; ++i) r[(size_t)i] = a * ma[(size_t)i] + b * mb[(size_t)i];
  return r;
}

MpoBlock<double> hamiltonian_block(const SpinChainModel& m) {
  MpoBlock<double> w;
  for (auto& row : w)
    for (auto& e : row) e = zero2();
  w[0][0] = pauli_id<double>();
  w[1][0] = pauli_z<double>();
  w[2][0] = combine2(m.h, pauli_z<double>(), m.g, pauli_x<double>());
  w[2][1] = combine2(m.j, pauli_z<double>(), 0.0, zero2());
  w[2][2] = pauli_id<double>();
  return w;
}

/// Left multiplication on a vectorized matrix: O tensor identity.
std::array<double, 16> lift_ket(const Mat2<double>& o) {
  std::array<double, 16> r{};
  for (int s = 0; s < 2; ++s)
    for (int sp = 0; sp < 2; ++sp)
      for (int t = 0; t < 2; ++t)
        r[(size_t)((2 * s + sp) * 4 + (2 * t + sp))] = o[(size_t)(2 * s + t)];
  return r;
}

/// Right multiplication: identity tensor O^T.
std::array<double, 16> lift_bra(const Mat2<double>& o) {
  std::array<double, 16> r{};
  for (int s = 0; s < 2; ++s)
    for (int sp = 0; sp < 2; ++sp)
      for (int tp = 0; tp < 2; ++tp)
        r[(size_t)((2 * s + sp) * 4 + (2 * s + tp))] = o[(size_t)(2 * tp + sp)];
  return r;
}

void put_block2(DenseTensor<double>& w, index_t a, index_t b,
                const Mat2<double>& o) {
  for (index_t p = 0; p < 2; ++p)
    for (index_t q = 0; q < 2; ++q) w.at({a, p, q, b}) = o[(size_t)(2 * p + q)];
}

void put_block4(DenseTensor<double>& w, index_t a, index_t b,
                const std::array<double, 16>& o, double fac) {
  for (index_t p = 0; p < 4; ++p)
    for (index_t q = 0; q < 4; ++q)
      w.at({a, p, q, b}) += fac * o[(size_t)(p * 4 + q)];
}

void check_model(const SpinChainModel& m) {
  if (m.length < 2) throw dimension_error("chain needs at least 2 sites");
}

}  // namespace

template <typename T>
Mat2<T> pauli_id() {
  return {T(1), T(0), T(0), T(1)};
}
template <typename T>
Mat2<T> pauli_x() {
  return {T(0), T(1), T(1), T(0)};
}
Mat2<cplx> pauli_y() {
  return {cplx(0), cplx(0, -1), cplx(0, 1), cplx(0)};
}
template <typename T>
Mat2<T> pauli_z() {
  return {T(1), T(0), T(0), T(-1)};
}

template Mat2<double> pauli_id<double>();
template Mat2<cplx> pauli_id<cplx>();
template Mat2<double> pauli_x<double>();
template Mat2<cplx> pauli_x<cplx>();
template Mat2<double> pauli_z<double>();
template Mat2<cplx> pauli_z<cplx>();

MpoOperator<double> ising_mpo(const SpinChainModel& m) {
  check_model(m);
  const auto w = hamiltonian_block(m);
  MpoOperator<double> op;
  op.sites.resize((size_t)m.length);

  DenseTensor<double> mid({3, 2, 2, 3});
  for (index_t a = 0; a < 3; ++a)
    for (index_t b = 0; b < 3; ++b) put_block2(mid, a, b, w[(size_t)a][(size_t)b]);

  DenseTensor<double> first({1, 2, 2, 3});
  for (index_t b = 0; b < 3; ++b) put_block2(first, 0, b, w[2][(size_t)b]);
  DenseTensor<double> last({3, 2, 2, 1});
  for (index_t a = 0; a < 3; ++a) put_block2(last, a, 0, w[(size_t)a][0]);

  op.sites[0] = std::move(first);
  for (index_t k = 1; k + 1 < m.length; ++k) op.sites[(size_t)k] = mid;
  op.sites[(size_t)m.length - 1] = std::move(last);
  return op;
}

MpoOperator<double> commutator_mpo(const SpinChainModel& m, double alpha) {
  check_model(m);
  const auto w = hamiltonian_block(m);

  // Two independent bond-3 branches: branch 0 multiplies from the left
  // (O x 1), branch 1 from the right (1 x O^T) with an overall minus sign
  // carried by the boundary row. alpha also folds into the first site.
  MpoOperator<double> op;
  op.sites.resize((size_t)m.length);

  DenseTensor<double> mid({6, 4, 4, 6});
  for (index_t a = 0; a < 3; ++a)
    for (index_t b = 0; b < 3; ++b) {
      put_block4(mid, a, b, lift_ket(w[(size_t)a][(size_t)b]), 1.0);
      put_block4(mid, a + 3, b + 3, lift_bra(w[(size_t)a][(size_t)b]), 1.0);
    }

  DenseTensor<double> first({1, 4, 4, 6});
  for (index_t b = 0; b < 3; ++b) {
    put_block4(first, 0, b, lift_ket(w[2][(size_t)b]), alpha);
    put_block4(first, 0, b + 3, lift_bra(w[2][(size_t)b]), -alpha);
  }
  DenseTensor<double> last({6, 4, 4, 1});
  for (index_t a = 0; a < 3; ++a) {
    put_block4(last, a, 0, lift_ket(w[(size_t)a][0]), 1.0);
    put_block4(last, a + 3, 0, lift_bra(w[(size_t)a][0]), 1.0);
  }

  op.sites[0] = std::move(first);
  for (index_t k = 1; k + 1 < m.length; ++k) op.sites[(size_t)k] = mid;
  op.sites[(size_t)m.length - 1] = std::move(last);
  return op;
}

double rescale_alpha(const SpinChainModel& m, double margin) {
  check_model(m);
  if (margin < 0.0 || margin >= 1.0)
    throw dimension_error("margin must lie in [0, 1)");
  const double n = (double)m.length;
  const double bound =
      2.0 * ((n - 1.0) * std::abs(m.j) + n * std::abs(m.g) + n * std::abs(m.h));
  if (bound == 0.0) throw numerical_error("trivial model has no scale");
  return (1.0 - margin) / bound;
}

bool is_real_state(const std::string& name) {
  return name != "Y+" && name != "Y-";
}

template <typename T>
std::array<T, 2> local_ket(const std::string& name) {
  if (name == "Z+") return {T(1), T(0)};
  if (name == "Z-") return {T(0), T(1)};
  if (name == "X+") return {T(kInvSqrt2), T(kInvSqrt2)};
  if (name == "X-") return {T(kInvSqrt2), T(-kInvSqrt2)};
  if (name == "Y+" || name == "Y-") {
    if constexpr (is_complex_v<T>) {
      return {cplx(kInvSqrt2, 0.0),
              name == "Y+" ? cplx(0.0, kInvSqrt2) : cplx(0.0, -kInvSqrt2)};
    } else {
      throw dimension_error("state " + name + " needs complex amplitudes");
    }
  }
  throw dimension_error("unknown state name: " + name);
}

template std::array<double, 2> local_ket<double>(const std::string&);
template std::array<cplx, 2> local_ket<cplx>(const std::string&);

template <typename T>
MpsVector<T> product_state(const std::string& name, index_t length) {
  const auto v = local_ket<T>(name);
  std::vector<std::vector<T>> local((size_t)length, {v[0], v[1]});
  return product_mps(local);
}

template MpsVector<double> product_state<double>(const std::string&, index_t);
template MpsVector<cplx> product_state<cplx>(const std::string&, index_t);

template <typename T>
MpsVector<T> vectorized_density(const std::string& name, index_t length) {
  const auto v = local_ket<T>(name);
  std::vector<T> site(4);
  for (int s = 0; s < 2; ++s)
    for (int sp = 0; sp < 2; ++sp)
      site[(size_t)(2 * s + sp)] = v[(size_t)s] * conj_val(v[(size_t)sp]);
  std::vector<std::vector<T>> local((size_t)length, site);
  return product_mps(local);
}

template MpsVector<double> vectorized_density<double>(const std::string&,
                                                      index_t);
template MpsVector<cplx> vectorized_density<cplx>(const std::string&, index_t);

template <typename T>
MpsVector<T> trace_vector(index_t length) {
  std::vector<std::vector<T>> local((size_t)length, {T(1), T(0), T(0), T(1)});
  return product_mps(local);
}

template MpsVector<double> trace_vector<double>(index_t);
template MpsVector<cplx> trace_vector<cplx>(index_t);

template <typename T>
MpsVector<T> observable_vector(
    index_t length,
    const std::vector<std::pair<index_t, Mat2<T>>>& factors) {
  std::vector<std::vector<T>> local((size_t)length,
                                    {T(1), T(0), T(0), T(1)});
  for (const auto& [site, o] : factors) {
    if (site < 0 || site >= length)
      throw dimension_error("observable site out of range");
    local[(size_t)site] = {o[0], o[1], o[2], o[3]};
  }
  return product_mps(local);
}

template MpsVector<double> observable_vector(
    index_t, const std::vector<std::pair<index_t, Mat2<double>>>&);
template MpsVector<cplx> observable_vector(
    index_t, const std::vector<std::pair<index_t, Mat2<cplx>>>&);

template <typename T>
MpsVector<T> swap_ketbra(const MpsVector<T>& rho) {
  MpsVector<T> out = rho;
  for (auto& site : out.sites) {
    if (site.dim(1) != 4)
      throw dimension_error("swap_ketbra needs physical dimension 4");
    const index_t l = site.dim(0), r = site.dim(2);
    for (index_t il = 0; il < l; ++il)
      for (index_t ir = 0; ir < r; ++ir) {
        T& a = site.at({il, 1, ir});
        T& b = site.at({il, 2, ir});
        std::swap(a, b);
      }
    site = conj(std::move(site));
  }
  return out;
}

template MpsVector<double> swap_ketbra(const MpsVector<double>&);
template MpsVector<cplx> swap_ketbra(const MpsVector<cplx>&);

template <typename T>
double hermiticity_defect(const MpsVector<T>& rho) {
  const auto adj = swap_ketbra(rho);
  const double n2 = real_part(inner(rho, rho));
  if (!(n2 > 0.0)) throw numerical_error("hermiticity defect of zero state");
  const double cross = real_part(inner(adj, rho));
  const double diff2 = std::max(0.0, 2.0 * n2 - 2.0 * cross);
  return std::sqrt(diff2) / (2.0 * std::sqrt(n2));
}

template double hermiticity_defect(const MpsVector<double>&);
template double hermiticity_defect(const MpsVector<cplx>&);

}  // namespace diagens
