#include "diagens/mps.hpp"

#include <algorithm>
#include <cmath>

namespace diagens {

namespace {

constexpr index_t kDenseGuard = index_t(1) << 26;

// The Gram-matrix SVD cannot resolve weights below ~1e-14 of the total,
// so only route through it when the requested tolerance dwarfs that.
bool use_gram(double rel_tol) { return rel_tol >= 1e-13; }

template <typename T>
TruncatedFactorization<T> split(const DenseTensor<T>& t, index_t n_left,
                                index_t max_rank, double rel_tol, bool fast) {
  return fast ? svd_truncate_gram(t, n_left, max_rank, rel_tol)
              : svd_truncate(t, n_left, max_rank, rel_tol);
}

/// Right-to-left truncation sweep; expects left-canonical input (weight on
/// the last site) and leaves the state right-canonical with the weight on
/// site 0. Returns summed relative discarded weight.
template <typename T>
double truncate_sweep(MpsVector<T>& psi, index_t max_bond, double rel_tol,
                      bool fast) {
  double dw = 0.0;
  for (index_t k = psi.length() - 1; k >= 1; --k) {
    auto f = split(psi.sites[(size_t)k], 1, max_bond, rel_tol, fast);
    dw += f.discarded_weight;
    const index_t l = f.left.dim(0), r = f.rank();
    for (index_t i = 0; i < l; ++i)
      for (index_t j = 0; j < r; ++j)
        f.left[i * r + j] *= T(f.singular_values[(size_t)j]);
    psi.sites[(size_t)k] = std::move(f.right);
    psi.sites[(size_t)k - 1] =
        contract(psi.sites[(size_t)k - 1], f.left, {{2, 0}});
  }
  return dw;
}

}  // namespace

template <typename T>
index_t MpsVector<T>::max_bond_dim() const {
  index_t d = 1;
  for (const auto& s : sites) d = std::max(d, s.dim(0));
  return d;
}

template <typename T>
std::vector<index_t> MpsVector<T>::bond_dims() const {
  std::vector<index_t> d;
  for (index_t k = 1; k < length(); ++k) d.push_back(bond_dim(k));
  return d;
}

template <typename T>
void MpsVector<T>::validate() const {
  if (sites.empty()) throw dimension_error("empty MPS");
  for (index_t k = 0; k < length(); ++k) {
    if (sites[(size_t)k].rank() != 3)
      throw dimension_error("MPS site tensor must have rank 3");
    if (k > 0 && sites[(size_t)k - 1].dim(2) != sites[(size_t)k].dim(0))
      throw dimension_error("MPS bond dimensions do not chain");
  }
  if (sites.front().dim(0) != 1 || sites.back().dim(2) != 1)
    throw dimension_error("MPS boundary bonds must have dimension 1");
}

template <typename T>
index_t MpoOperator<T>::max_bond_dim() const {
  index_t d = 1;
  for (const auto& s : sites) d = std::max(d, s.dim(0));
  return d;
}

template <typename T>
void MpoOperator<T>::validate() const {
  if (sites.empty()) throw dimension_error("empty MPO");
  for (index_t k = 0; k < length(); ++k) {
    if (sites[(size_t)k].rank() != 4)
      throw dimension_error("MPO site tensor must have rank 4");
    if (sites[(size_t)k].dim(1) != sites[(size_t)k].dim(2))
      throw dimension_error("MPO physical dimensions must match");
    if (k > 0 && sites[(size_t)k - 1].dim(3) != sites[(size_t)k].dim(0))
      throw dimension_error("MPO bond dimensions do not chain");
  }
  if (sites.front().dim(0) != 1 || sites.back().dim(3) != 1)
    throw dimension_error("MPO boundary bonds must have dimension 1");
}

template <typename T>
MpsVector<T> product_mps(const std::vector<std::vector<T>>& local) {
  if (local.empty()) throw dimension_error("empty product state");
  MpsVector<T> psi;
  for (const auto& v : local) {
    if (v.empty()) throw dimension_error("empty local vector");
    DenseTensor<T> site({1, (index_t)v.size(), 1});
    std::copy(v.begin(), v.end(), site.data());
    psi.sites.push_back(std::move(site));
  }
  return psi;
}

template <typename T>
MpoOperator<T> identity_mpo(index_t length, index_t phys_dim) {
  if (length < 1 || phys_dim < 1) throw dimension_error("bad identity MPO");
  MpoOperator<T> op;
  DenseTensor<T> w({1, phys_dim, phys_dim, 1});
  for (index_t p = 0; p < phys_dim; ++p) w.at({0, p, p, 0}) = T(1);
  op.sites.assign((size_t)length, w);
  return op;
}

template <typename T>
T inner(const MpsVector<T>& a, const MpsVector<T>& b) {
  if (a.length() != b.length())
    throw dimension_error("inner: length mismatch");
  DenseTensor<T> e({1, 1});
  e[0] = T(1);
  for (index_t k = 0; k < a.length(); ++k) {
    if (a.phys_dim(k) != b.phys_dim(k))
      throw dimension_error("inner: physical dimension mismatch");
    auto tmp = contract(e, b.sites[(size_t)k], {{1, 0}});  // (Da, p, rb)
    e = contract(conj(a.sites[(size_t)k]), tmp, {{0, 0}, {1, 1}});
  }
  return e[0];
}

template <typename T>
double norm(const MpsVector<T>& psi) {
  return std::sqrt(std::max(0.0, real_part(inner(psi, psi))));
}

template <typename T>
double normalize(MpsVector<T>& psi) {
  const double n = norm(psi);
  if (n == 0.0) throw numerical_error("cannot normalize zero state");
  diagens::scale(psi.sites[0], T(1.0 / n));
  return n;
}

template <typename T>
void scale(MpsVector<T>& psi, T alpha) {
  diagens::scale(psi.sites[0], alpha);
}

template <typename T>
void canonicalize(MpsVector<T>& psi, index_t center) {
  const index_t n = psi.length();
  if (center < 0 || center >= n)
    throw dimension_error("canonical center out of range");
  for (index_t k = 0; k < center; ++k) {
    auto [q, r] = qr_orthogonalize(psi.sites[(size_t)k], 2);
    psi.sites[(size_t)k] = std::move(q);
    psi.sites[(size_t)k + 1] =
        contract(r, psi.sites[(size_t)k + 1], {{1, 0}});
  }
  for (index_t k = n - 1; k > center; --k) {
    auto [l, q] = lq_orthogonalize(psi.sites[(size_t)k], 1);
    psi.sites[(size_t)k] = std::move(q);
    psi.sites[(size_t)k - 1] =
        contract(psi.sites[(size_t)k - 1], l, {{2, 0}});
  }
}

template <typename T>
double compress(MpsVector<T>& psi, index_t max_bond, double rel_tol,
                bool fast) {
  canonicalize(psi, psi.length() - 1);
  return truncate_sweep(psi, max_bond, rel_tol, fast);
}

template <typename T>
MpsVector<T> apply_mpo(const MpoOperator<T>& op, const MpsVector<T>& psi) {
  if (op.length() != psi.length())
    throw dimension_error("apply_mpo: length mismatch");
  MpsVector<T> out;
  out.sites.reserve((size_t)psi.length());
  for (index_t k = 0; k < psi.length(); ++k) {
    const auto& w = op.sites[(size_t)k];
    const auto& a = psi.sites[(size_t)k];
    if (w.dim(2) != a.dim(1))
      throw dimension_error("apply_mpo: physical dimension mismatch");
    auto t = contract(w, a, {{2, 1}});       // (lw, po, rw, l, r)
    t = permute(t, {0, 3, 1, 2, 4});         // (lw, l, po, rw, r)
    const auto s = t.shape();
    out.sites.push_back(std::move(t).reshaped(
        {s[0] * s[1], s[2], s[3] * s[4]}));
  }
  return out;
}

template <typename T>
MpsVector<T> apply_mpo_compressed(const MpoOperator<T>& op,
                                  const MpsVector<T>& psi, index_t max_bond,
                                  double rel_tol, double* dw_accum) {
  if (op.length() != psi.length())
    throw dimension_error("apply_mpo_compressed: length mismatch");
  const index_t n = psi.length();
  MpsVector<T> rc = psi;
  canonicalize(rc, 0);

  // Zip sweep at a tightened tolerance; the final sweep re-truncates at
  // the requested one.
  const double ztol = rel_tol * 0.1;
  const bool fast = use_gram(ztol);
  double dw = 0.0;

  MpsVector<T> out;
  out.sites.resize((size_t)n);
  DenseTensor<T> z({1, 1, 1});  // (new bond, operator bond, old bond)
  z[0] = T(1);
  for (index_t k = 0; k < n; ++k) {
    const auto& w = op.sites[(size_t)k];
    const auto& a = rc.sites[(size_t)k];
    if (w.dim(2) != a.dim(1))
      throw dimension_error("apply_mpo_compressed: physical dim mismatch");
    auto b = contract(z, a, {{2, 0}});           // (new, wl, p, r)
    auto c = contract(b, w, {{1, 0}, {2, 2}});   // (new, r, po, rw)
    c = permute(c, {0, 2, 3, 1});                // (new, po, rw, r)
    if (k == n - 1) {
      const auto s = c.shape();
      out.sites[(size_t)k] =
          std::move(c).reshaped({s[0], s[1], s[2] * s[3]});
    } else {
      auto f = split(c, 2, max_bond, ztol, fast);
      dw += f.discarded_weight;
      const index_t r = f.rank();
      out.sites[(size_t)k] = std::move(f.left);
      z = std::move(f.right);  // (r, rw, rold)
      const index_t cols = z.size() / r;
      for (index_t i = 0; i < r; ++i)
        for (index_t j = 0; j < cols; ++j)
          z[i * cols + j] *= T(f.singular_values[(size_t)i]);
    }
  }
  dw += truncate_sweep(out, max_bond, rel_tol, use_gram(rel_tol));
  if (dw_accum) *dw_accum += dw;
  return out;
}

template <typename T>
MpsVector<T> linear_combine(const std::vector<T>& coeffs,
                            const std::vector<const MpsVector<T>*>& terms,
                            index_t max_bond, double rel_tol,
                            double* dw_accum) {
  if (terms.empty() || coeffs.size() != terms.size())
    throw dimension_error("linear_combine: bad term list");
  const index_t n = terms[0]->length();
  for (const auto* t : terms) {
    if (t->length() != n)
      throw dimension_error("linear_combine: length mismatch");
    for (index_t k = 0; k < n; ++k)
      if (t->phys_dim(k) != terms[0]->phys_dim(k))
        throw dimension_error("linear_combine: physical dim mismatch");
  }

  MpsVector<T> out;
  out.sites.resize((size_t)n);
  for (index_t k = 0; k < n; ++k) {
    const index_t p = terms[0]->phys_dim(k);
    index_t ltot = 0, rtot = 0;
    for (const auto* t : terms) {
      ltot += t->sites[(size_t)k].dim(0);
      rtot += t->sites[(size_t)k].dim(2);
    }
    if (k == 0) ltot = 1;
    if (k == n - 1) rtot = 1;
    DenseTensor<T> site({ltot, p, rtot});
    index_t loff = 0, roff = 0;
    for (size_t j = 0; j < terms.size(); ++j) {
      const auto& src = terms[j]->sites[(size_t)k];
      const index_t dl = src.dim(0), dr = src.dim(2);
      const T fac = (k == 0) ? coeffs[j] : T(1);
      for (index_t il = 0; il < dl; ++il)
        for (index_t ip = 0; ip < p; ++ip)
          for (index_t ir = 0; ir < dr; ++ir)
            site.at({k == 0 ? 0 : loff + il, ip, k == n - 1 ? 0 : roff + ir}) +=
                fac * src.at({il, ip, ir});
      loff += dl;
      roff += dr;
    }
    out.sites[(size_t)k] = std::move(site);
  }
  const double dw = compress(out, max_bond, rel_tol, use_gram(rel_tol));
  if (dw_accum) *dw_accum += dw;
  return out;
}

template <typename T>
std::vector<double> schmidt_spectrum(const MpsVector<T>& psi, index_t cut) {
  if (cut < 1 || cut >= psi.length())
    throw dimension_error("schmidt cut out of range");
  MpsVector<T> copy = psi;
  canonicalize(copy, cut - 1);
  auto f = svd_truncate(copy.sites[(size_t)cut - 1], 2, 0, 0.0);
  return f.singular_values;
}

template <typename T>
double schmidt_entropy(const MpsVector<T>& psi, index_t cut) {
  const auto s = schmidt_spectrum(psi, cut);
  double total = 0.0;
  for (double v : s) total += v * v;
  if (!(total > 0.0)) throw numerical_error("entropy of zero state");
  double h = 0.0;
  for (double v : s) {
    const double p = v * v / total;
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

template <typename T>
DenseTensor<T> to_dense(const MpsVector<T>& psi) {
  psi.validate();
  index_t total = 1;
  for (index_t k = 0; k < psi.length(); ++k) {
    total *= psi.phys_dim(k);
    if (total > kDenseGuard)
      throw dimension_error("to_dense: state too large to densify");
  }
  DenseTensor<T> v = psi.sites[0].reshaped(
      {psi.sites[0].dim(1), psi.sites[0].dim(2)});
  for (index_t k = 1; k < psi.length(); ++k) {
    v = contract(v, psi.sites[(size_t)k], {{1, 0}});  // (P, p, r)
    const auto s = v.shape();
    v.reshape_inplace({s[0] * s[1], s[2]});
  }
  return std::move(v).reshaped({total});
}

template <typename T>
MpsVector<T> mps_from_dense(const DenseTensor<T>& v, index_t phys_dim,
                            index_t length, index_t max_bond, double rel_tol) {
  index_t total = 1;
  for (index_t k = 0; k < length; ++k) total *= phys_dim;
  if (v.size() != total)
    throw dimension_error("mps_from_dense: size is not phys_dim^length");
  MpsVector<T> psi;
  psi.sites.resize((size_t)length);
  DenseTensor<T> carry = v.reshaped({1, v.size()});
  for (index_t k = 0; k + 1 < length; ++k) {
    const index_t chi = carry.dim(0);
    const index_t rem = carry.dim(1) / phys_dim;
    auto f = svd_truncate(carry.reshaped({chi, phys_dim, rem}), 2, max_bond,
                          rel_tol);
    psi.sites[(size_t)k] = std::move(f.left);
    const index_t r = f.rank();
    carry = std::move(f.right).reshaped({r, rem});
    for (index_t i = 0; i < r; ++i)
      for (index_t j = 0; j < rem; ++j)
        carry[i * rem + j] *= T(f.singular_values[(size_t)i]);
  }
  psi.sites[(size_t)length - 1] =
      std::move(carry).reshaped({carry.dim(0), phys_dim, 1});
  return psi;
}

template <typename T>
DenseTensor<T> mpo_to_dense(const MpoOperator<T>& op) {
  op.validate();
  index_t total = 1;
  for (index_t k = 0; k < op.length(); ++k) {
    total *= op.phys_dim(k) * op.phys_dim(k);
    if (total > kDenseGuard)
      throw dimension_error("mpo_to_dense: operator too large to densify");
  }
  const auto& w0 = op.sites[0];
  DenseTensor<T> m = w0.reshaped({w0.dim(1), w0.dim(2), w0.dim(3)});
  for (index_t k = 1; k < op.length(); ++k) {
    auto t = contract(m, op.sites[(size_t)k], {{2, 0}});  // (O, I, po, pi, r)
    t = permute(t, {0, 2, 1, 3, 4});
    const auto s = t.shape();
    m = std::move(t).reshaped({s[0] * s[1], s[2] * s[3], s[4]});
  }
  const auto s = m.shape();
  return std::move(m).reshaped({s[0], s[1]});
}

MpsVector<cplx> to_complex(const MpsVector<double>& psi) {
  MpsVector<cplx> out;
  out.sites.reserve(psi.sites.size());
  for (const auto& s : psi.sites) {
    DenseTensor<cplx> t(s.shape());
    for (index_t i = 0; i < s.size(); ++i) t[i] = cplx(s[i], 0.0);
    out.sites.push_back(std::move(t));
  }
  return out;
}

MpoOperator<cplx> to_complex(const MpoOperator<double>& op) {
  MpoOperator<cplx> out;
  out.sites.reserve(op.sites.size());
  for (const auto& s : op.sites) {
    DenseTensor<cplx> t(s.shape());
    for (index_t i = 0; i < s.size(); ++i) t[i] = cplx(s[i], 0.0);
    out.sites.push_back(std::move(t));
  }
  return out;
}

#define DIAGENS_INSTANTIATE_MPS(T)                                           \
  template struct MpsVector<T>;                                              \
  template struct MpoOperator<T>;                                            \
  template MpsVector<T> product_mps(const std::vector<std::vector<T>>&);     \
  template MpoOperator<T> identity_mpo(index_t, index_t);                    \
  template T inner(const MpsVector<T>&, const MpsVector<T>&);                \
  template double norm(const MpsVector<T>&);                                 \
  template double normalize(MpsVector<T>&);                                  \
  template void scale(MpsVector<T>&, T);                                     \
  template void canonicalize(MpsVector<T>&, index_t);                        \
  template double compress(MpsVector<T>&, index_t, double, bool);            \
  template MpsVector<T> apply_mpo(const MpoOperator<T>&,                     \
                                  const MpsVector<T>&);                      \
  template MpsVector<T> apply_mpo_compressed(                                \
      const MpoOperator<T>&, const MpsVector<T>&, index_t, double, double*); \
  template MpsVector<T> linear_combine(const std::vector<T>&,                \
                                       const std::vector<const MpsVector<T>*>&, \
                                       index_t, double, double*);            \
  template std::vector<double> schmidt_spectrum(const MpsVector<T>&,         \
                                                index_t);                    \
  template double schmidt_entropy(const MpsVector<T>&, index_t);             \
  template DenseTensor<T> to_dense(const MpsVector<T>&);                     \
  template MpsVector<T> mps_from_dense(const DenseTensor<T>&, index_t,       \
                                       index_t, index_t, double);            \
  template DenseTensor<T> mpo_to_dense(const MpoOperator<T>&);

DIAGENS_INSTANTIATE_MPS(double)
DIAGENS_INSTANTIATE_MPS(cplx)

#undef DIAGENS_INSTANTIATE_MPS

}  // namespace diagens
