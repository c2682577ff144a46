#include "diagens/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <utility>

#include "diagens/linalg.hpp"

namespace diagens {

namespace {

index_t bit_of(index_t s, index_t site, index_t n) {
  return (s >> (n - 1 - site)) & 1;
}

index_t flip_bit(index_t s, index_t site, index_t n) {
  return s ^ (index_t(1) << (n - 1 - site));
}

// global site-interleaved index of (ket u, bra s): base-4 digit
// 2*ket_i + bra_i per site, site 0 most significant
index_t interleave(index_t u, index_t s, index_t n) {
  index_t idx = 0;
  for (index_t i = 0; i < n; ++i)
    idx = idx * 4 + 2 * bit_of(u, i, n) + bit_of(s, i, n);
  return idx;
}

DenseTensor<cplx> to_cplx(const DenseTensor<double>& a) {
  DenseTensor<cplx> b(a.shape());
  for (index_t i = 0; i < a.size(); ++i) b[i] = cplx(a[i], 0.0);
  return b;
}

double max_abs(const DenseTensor<cplx>& a) {
  double m = 0.0;
  for (index_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i]));
  return m;
}

double max_imag(const DenseTensor<cplx>& a) {
  double m = 0.0;
  for (index_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i].imag()));
  return m;
}

// rho_c = V rho V^T (eigenbasis -> computational); V is real
DenseTensor<cplx> to_computational(const SpectralDecomposition& sd,
                                   const DenseTensor<cplx>& rho) {
  const index_t d = sd.dim();
  const auto vc = to_cplx(sd.vectors);
  DenseTensor<cplx> w({d, d}), out({d, d});
  la::gemm(la::Op::N, la::Op::T, d, d, d, cplx(1.0), rho.data(), d, vc.data(),
           d, cplx(0.0), w.data(), d);
  la::gemm(la::Op::N, la::Op::N, d, d, d, cplx(1.0), vc.data(), d, w.data(), d,
           cplx(0.0), out.data(), d);
  return out;
}

DenseTensor<double> to_computational_real(const SpectralDecomposition& sd,
                                          const DenseTensor<cplx>& rho) {
  const index_t d = sd.dim();
  DenseTensor<double> rr({d, d});
  for (index_t i = 0; i < rho.size(); ++i) rr[i] = rho[i].real();
  DenseTensor<double> w({d, d}), out({d, d});
  la::gemm(la::Op::N, la::Op::T, d, d, d, 1.0, rr.data(), d,
           sd.vectors.data(), d, 0.0, w.data(), d);
  la::gemm(la::Op::N, la::Op::N, d, d, d, 1.0, sd.vectors.data(), d, w.data(),
           d, 0.0, out.data(), d);
  return out;
}

void check_spec_density(const SpectralDecomposition& sd,
                        const DenseDensity& rho) {
  rho.validate();
  if (rho.length != sd.model.length)
    throw dimension_error("density does not belong to this spectrum");
}

double entropy_bits(const std::vector<double>& lambda) {
  double s = 0.0;
  for (double l : lambda) {
    const double p = l * l;
    if (p > 1e-30) s -= p * std::log2(p);
  }
  return s;
}

}  // namespace

DenseTensor<double> dense_hamiltonian(const SpinChainModel& m) {
  const index_t n = m.length;
  if (n < 1) throw dimension_error("dense_hamiltonian: empty chain");
  if (n > 14) throw dimension_error("dense_hamiltonian: chain beyond 14 sites");
  const index_t dim = index_t(1) << n;
  DenseTensor<double> ham({dim, dim});
  for (index_t s = 0; s < dim; ++s) {
    double diag = 0.0;
    for (index_t i = 0; i < n; ++i) {
      const double z = 1.0 - 2.0 * (double)bit_of(s, i, n);
      if (i + 1 < n)
        diag += m.j * z * (1.0 - 2.0 * (double)bit_of(s, i + 1, n));
      diag += m.h * z;
    }
    ham.at({s, s}) = diag;
    for (index_t i = 0; i < n; ++i) ham.at({flip_bit(s, i, n), s}) += m.g;
  }
  return ham;
}

SpectralDecomposition diagonalize(const SpinChainModel& m) {
  SpectralDecomposition sd;
  sd.model = m;
  sd.vectors = dense_hamiltonian(m);
  const index_t dim = sd.vectors.dim(0);
  sd.energies.resize((size_t)dim);
  la::eigh(dim, sd.vectors.data(), sd.energies.data());
  for (index_t n = 0; n + 1 < dim; ++n)
    if (sd.energies[(size_t)n + 1] - sd.energies[(size_t)n] < 1e-10)
      sd.degenerate = true;
  return sd;
}

void DenseDensity::validate() const {
  if (mat.rank() != 2 || mat.dim(0) != mat.dim(1))
    throw dimension_error("density matrix is not square");
  if (mat.dim(0) != (index_t(1) << length))
    throw dimension_error("density dimension does not match the length");
  const index_t d = mat.dim(0);
  double scale = 0.0, defect = 0.0;
  for (index_t n = 0; n < d; ++n)
    for (index_t m = n; m < d; ++m) {
      scale = std::max(scale, std::abs(mat.at({n, m})));
      defect = std::max(defect,
                        std::abs(mat.at({n, m}) - std::conj(mat.at({m, n}))));
    }
  if (defect > 1e-10 * std::max(1.0, scale))
    throw numerical_error("density matrix is not Hermitian");
}

DenseTensor<cplx> product_state_dense(const std::string& state,
                                      index_t length) {
  if (length < 1 || length > 14)
    throw dimension_error("product_state_dense: bad length");
  const auto ket = local_ket<cplx>(state);
  const index_t dim = index_t(1) << length;
  DenseTensor<cplx> psi({dim});
  for (index_t s = 0; s < dim; ++s) {
    cplx amp(1.0, 0.0);
    for (index_t i = 0; i < length; ++i) amp *= ket[(size_t)bit_of(s, i, length)];
    psi[s] = amp;
  }
  return psi;
}

std::vector<cplx> eigen_amplitudes(const SpectralDecomposition& sd,
                                   const DenseTensor<cplx>& psi0) {
  const index_t d = sd.dim();
  if (psi0.rank() != 1 || psi0.dim(0) != d)
    throw dimension_error("state vector does not match the spectrum");
  double nrm = la::nrm2(d, psi0.data());
  if (nrm < 1e-300) throw numerical_error("zero state vector");
  std::vector<cplx> c((size_t)d, cplx(0.0));
  for (index_t s = 0; s < d; ++s) {
    const cplx amp = psi0[s] / nrm;
    for (index_t n = 0; n < d; ++n) c[(size_t)n] += sd.vectors.at({s, n}) * amp;
  }
  return c;
}

DenseDensity initial_density(const SpectralDecomposition& sd,
                             const DenseTensor<cplx>& psi0) {
  const auto c = eigen_amplitudes(sd, psi0);
  const index_t d = sd.dim();
  DenseDensity rho;
  rho.length = sd.model.length;
  rho.mat = DenseTensor<cplx>({d, d});
  for (index_t n = 0; n < d; ++n)
    for (index_t m = 0; m < d; ++m)
      rho.mat.at({n, m}) = c[(size_t)n] * std::conj(c[(size_t)m]);
  return rho;
}

DenseDensity diagonal_ensemble(const SpectralDecomposition& sd,
                               const DenseTensor<cplx>& psi0) {
  const auto c = eigen_amplitudes(sd, psi0);
  const index_t d = sd.dim();
  DenseDensity rho;
  rho.length = sd.model.length;
  rho.mat = DenseTensor<cplx>({d, d});
  for (index_t n = 0; n < d; ++n)
    rho.mat.at({n, n}) = std::norm(c[(size_t)n]);
  return rho;
}

DenseDensity gaussian_filter_exact(const SpectralDecomposition& sd,
                                   const DenseDensity& rho0, double sigma) {
  check_spec_density(sd, rho0);
  if (!(sigma > 0.0)) throw dimension_error("gaussian filter needs sigma > 0");
  const index_t d = sd.dim();
  DenseDensity out = rho0;
  for (index_t n = 0; n < d; ++n)
    for (index_t m = n + 1; m < d; ++m) {
      const double t = (sd.energies[(size_t)n] - sd.energies[(size_t)m]) / sigma;
      const double f = std::exp(-0.5 * t * t);
      out.mat.at({n, m}) *= f;
      out.mat.at({m, n}) *= f;
    }
  return out;
}

DenseDensity chebyshev_filter_exact(const SpectralDecomposition& sd,
                                    const DenseDensity& rho0, double alpha,
                                    index_t order, JacksonForm form) {
  check_spec_density(sd, rho0);
  if (!(alpha > 0.0)) throw dimension_error("filter needs alpha > 0");
  const double spread = sd.energies.back() - sd.energies.front();
  if (!(alpha * spread < 1.0))
    throw dimension_error("alpha leaves the commutator spectrum outside (-1,1)");
  const index_t d = sd.dim();
  DenseDensity out = rho0;
  const double q0 = filter_trace_factor(order, form);
  for (index_t n = 0; n < d; ++n) out.mat.at({n, n}) *= q0;
  for (index_t n = 0; n < d; ++n)
    for (index_t m = n + 1; m < d; ++m) {
      const double x =
          alpha * (sd.energies[(size_t)n] - sd.energies[(size_t)m]);
      const double f = filter_symbol(x, order, form);
      out.mat.at({n, m}) *= f;
      out.mat.at({m, n}) *= f;
    }
  return out;
}

double trace_dense(const DenseDensity& rho) {
  double tr = 0.0;
  for (index_t n = 0; n < rho.mat.dim(0); ++n) tr += rho.mat.at({n, n}).real();
  return tr;
}

double frobenius_sq_dense(const DenseDensity& rho) {
  double s = 0.0;
  for (index_t i = 0; i < rho.mat.size(); ++i) s += std::norm(rho.mat[i]);
  return s;
}

double frobenius_off_diagonal(const DenseDensity& rho) {
  double s = frobenius_sq_dense(rho);
  for (index_t n = 0; n < rho.mat.dim(0); ++n) s -= std::norm(rho.mat.at({n, n}));
  return std::max(s, 0.0);
}

double delta_squared_dense(const SpectralDecomposition& sd,
                           const DenseDensity& rho) {
  rho.validate();
  if (sd.model.length != rho.length)
    throw dimension_error("density does not match the decomposition");
  const index_t dim = sd.dim();
  double num = 0.0, den = 0.0;
  for (index_t n = 0; n < dim; ++n)
    for (index_t m = 0; m < dim; ++m) {
      const double w = std::norm(rho.mat.at({n, m}));
      const double gap = sd.energies[n] - sd.energies[m];
      num += w * gap * gap;
      den += w;
    }
  if (den < 1e-300) throw numerical_error("zero density matrix");
  return num / den;
}

double ipr_amplitudes(const std::vector<cplx>& amplitudes) {
  double s2 = 0.0, s4 = 0.0;
  for (const cplx& c : amplitudes) {
    const double p = std::norm(c);
    s2 += p;
    s4 += p * p;
  }
  if (s2 < 1e-300) throw numerical_error("zero amplitude vector");
  return s4 / (s2 * s2);
}

double ipr(const SpectralDecomposition& sd, const DenseTensor<cplx>& psi0) {
  return ipr_amplitudes(eigen_amplitudes(sd, psi0));
}

DenseTensor<cplx> observable_eigen(const SpectralDecomposition& sd,
                                   const ObservableSpec& spec) {
  validate_spec(spec, sd.model.length);
  const index_t n = sd.model.length;
  const index_t d = sd.dim();
  const index_t site = resolve_site(spec, n);

  double im = 0.0;
  for (const cplx& v : spec.op) im = std::max(im, std::abs(v.imag()));

  if (im < 1e-14) {
    // real observable: stay in doubles for the dense multiply
    DenseTensor<double> ov({d, d});
    for (index_t s = 0; s < d; ++s) {
      const index_t b = bit_of(s, site, n);
      const index_t sf = flip_bit(s, site, n);
      const double o_keep = spec.op[(size_t)(2 * b + b)].real();
      const double o_flip = spec.op[(size_t)(2 * b + (1 - b))].real();
      for (index_t k = 0; k < d; ++k)
        ov.at({s, k}) = o_keep * sd.vectors.at({s, k}) +
                        o_flip * sd.vectors.at({sf, k});
    }
    DenseTensor<double> out({d, d});
    la::gemm(la::Op::T, la::Op::N, d, d, d, 1.0, sd.vectors.data(), d,
             ov.data(), d, 0.0, out.data(), d);
    return to_cplx(out);
  }

  DenseTensor<cplx> ov({d, d});
  for (index_t s = 0; s < d; ++s) {
    const index_t b = bit_of(s, site, n);
    const index_t sf = flip_bit(s, site, n);
    const cplx o_keep = spec.op[(size_t)(2 * b + b)];
    const cplx o_flip = spec.op[(size_t)(2 * b + (1 - b))];
    for (index_t k = 0; k < d; ++k)
      ov.at({s, k}) =
          o_keep * sd.vectors.at({s, k}) + o_flip * sd.vectors.at({sf, k});
  }
  const auto vc = to_cplx(sd.vectors);
  DenseTensor<cplx> out({d, d});
  la::gemm(la::Op::T, la::Op::N, d, d, d, cplx(1.0), vc.data(), d, ov.data(),
           d, cplx(0.0), out.data(), d);
  return out;
}

double expectation_dense(const DenseDensity& rho,
                         const DenseTensor<cplx>& obs_eigen) {
  const index_t d = rho.mat.dim(0);
  if (obs_eigen.rank() != 2 || obs_eigen.dim(0) != d || obs_eigen.dim(1) != d)
    throw dimension_error("observable does not match the density dimension");
  cplx num(0.0);
  for (index_t n = 0; n < d; ++n)
    for (index_t m = 0; m < d; ++m)
      num += obs_eigen.at({n, m}) * rho.mat.at({m, n});
  cplx den(0.0);
  for (index_t n = 0; n < d; ++n) den += rho.mat.at({n, n});
  const double fro = std::sqrt(frobenius_sq_dense(rho));
  if (std::abs(den) < 1e-12 * fro)
    throw numerical_error("expectation: vanishing trace");
  return (num / den).real();
}

DenseTensor<cplx> vectorized_from_density(const SpectralDecomposition& sd,
                                          const DenseDensity& rho) {
  check_spec_density(sd, rho);
  const index_t n = sd.model.length;
  const index_t d = sd.dim();
  const auto rc = to_computational(sd, rho.mat);
  DenseTensor<cplx> vec({d * d});
  for (index_t u = 0; u < d; ++u)
    for (index_t s = 0; s < d; ++s)
      vec[interleave(u, s, n)] = rc.at({u, s});
  return vec;
}

template <typename T>
DenseDensity density_from_vectorized(const SpectralDecomposition& sd,
                                     const DenseTensor<T>& vec) {
  const index_t n = sd.model.length;
  const index_t d = sd.dim();
  if (vec.rank() != 1 || vec.dim(0) != d * d)
    throw dimension_error("vectorized density does not match the spectrum");
  DenseTensor<T> rc({d, d});
  for (index_t u = 0; u < d; ++u)
    for (index_t s = 0; s < d; ++s)
      rc.at({u, s}) = vec[interleave(u, s, n)];
  DenseTensor<T> w({d, d}), mat({d, d});
  if constexpr (is_complex_v<T>) {
    const auto vc = to_cplx(sd.vectors);
    la::gemm(la::Op::N, la::Op::N, d, d, d, cplx(1.0), rc.data(), d, vc.data(),
             d, cplx(0.0), w.data(), d);
    la::gemm(la::Op::T, la::Op::N, d, d, d, cplx(1.0), vc.data(), d, w.data(),
             d, cplx(0.0), mat.data(), d);
  } else {
    la::gemm(la::Op::N, la::Op::N, d, d, d, 1.0, rc.data(), d,
             sd.vectors.data(), d, 0.0, w.data(), d);
    la::gemm(la::Op::T, la::Op::N, d, d, d, 1.0, sd.vectors.data(), d,
             w.data(), d, 0.0, mat.data(), d);
  }
  DenseDensity rho;
  rho.length = n;
  if constexpr (is_complex_v<T>) {
    rho.mat = std::move(mat);
  } else {
    rho.mat = to_cplx(mat);
  }
  return rho;
}

template DenseDensity density_from_vectorized<double>(
    const SpectralDecomposition&, const DenseTensor<double>&);
template DenseDensity density_from_vectorized<cplx>(
    const SpectralDecomposition&, const DenseTensor<cplx>&);

namespace {

double mean_energy(const std::vector<double>& e, double beta) {
  // shift to the dominant end so the weights never overflow
  const double ref = beta >= 0.0 ? e.front() : e.back();
  double z = 0.0, s = 0.0;
  for (double en : e) {
    const double w = std::exp(-beta * (en - ref));
    z += w;
    s += w * en;
  }
  return s / z;
}

}  // namespace

ThermalReference thermal_reference(const SpectralDecomposition& sd,
                                   double target_energy) {
  const auto& e = sd.energies;
  if (!(target_energy > e.front() && target_energy < e.back()))
    throw dimension_error("target energy outside the attainable range");

  double lo = -1.0, hi = 1.0;  // energy decreases with beta
  while (mean_energy(e, hi) > target_energy) hi *= 2.0;
  while (mean_energy(e, lo) < target_energy) lo *= 2.0;

  const double tol = 1e-10 * (double)sd.model.length;
  double beta = 0.0, reached = 0.0;
  for (int it = 0; it < 200; ++it) {
    beta = 0.5 * (lo + hi);
    reached = mean_energy(e, beta);
    if (std::abs(reached - target_energy) <= tol) break;
    if (mean_energy(e, lo) < mean_energy(e, hi))
      throw numerical_error("mean energy is not monotone in beta");
    if (reached > target_energy)
      lo = beta;
    else
      hi = beta;
  }
  if (std::abs(reached - target_energy) > tol)
    throw numerical_error("thermal bisection failed to reach the target");

  ThermalReference ref;
  ref.beta = beta;
  ref.energy = reached;

  const double shift = beta >= 0.0 ? e.front() : e.back();
  const index_t d = sd.dim();
  DenseDensity rho;
  rho.length = sd.model.length;
  rho.mat = DenseTensor<cplx>({d, d});
  double z = 0.0;
  for (index_t n = 0; n < d; ++n) {
    const double w = std::exp(-beta * (e[(size_t)n] - shift));
    rho.mat.at({n, n}) = w;
    z += w;
  }
  for (index_t n = 0; n < d; ++n) rho.mat.at({n, n}) /= z;

  for (const auto& spec : {ObservableSpec::sigma_x(), ObservableSpec::sigma_y(),
                           ObservableSpec::sigma_z()}) {
    const auto obs = observable_eigen(sd, spec);
    ref.observables.emplace_back(spec.label, expectation_dense(rho, obs));
  }
  return ref;
}

ThermalReference thermal_reference(const SpinChainModel& m,
                                   double target_energy) {
  return thermal_reference(diagonalize(m), target_energy);
}

double osee_exact(const SpectralDecomposition& sd, const DenseDensity& rho,
                  index_t cut) {
  check_spec_density(sd, rho);
  const index_t n = sd.model.length;
  const index_t c = cut > 0 ? cut : n / 2;
  if (c < 1 || c >= n) throw dimension_error("osee cut outside the chain");

  const index_t d = sd.dim();
  const index_t rows = index_t(1) << (2 * c);
  const index_t cols = index_t(1) << (2 * (n - c));
  const index_t k = std::min(rows, cols);
  std::vector<double> lambda((size_t)k);

  // amplitude at (left block, right block) of the vectorized operator
  const index_t rmask = (index_t(1) << (n - c)) - 1;

  if (max_imag(rho.mat) < 1e-13 * std::max(1.0, max_abs(rho.mat))) {
    const auto rc = to_computational_real(sd, rho.mat);
    DenseTensor<double> mx({rows, cols});
    for (index_t u = 0; u < d; ++u)
      for (index_t s = 0; s < d; ++s)
        mx.at({interleave(u >> (n - c), s >> (n - c), c),
               interleave(u & rmask, s & rmask, n - c)}) = rc.at({u, s});
    const double nrm = la::nrm2(mx.size(), mx.data());
    if (nrm < 1e-300) throw numerical_error("osee of a zero operator");
    for (index_t i = 0; i < mx.size(); ++i) mx[i] /= nrm;
    DenseTensor<double> uu({rows, k}), vh({k, cols});
    la::svd(rows, cols, mx.data(), uu.data(), lambda.data(), vh.data());
    return entropy_bits(lambda);
  }

  const auto rc = to_computational(sd, rho.mat);
  DenseTensor<cplx> mx({rows, cols});
  for (index_t u = 0; u < d; ++u)
    for (index_t s = 0; s < d; ++s)
      mx.at({interleave(u >> (n - c), s >> (n - c), c),
             interleave(u & rmask, s & rmask, n - c)}) = rc.at({u, s});
  const double nrm = la::nrm2(mx.size(), mx.data());
  if (nrm < 1e-300) throw numerical_error("osee of a zero operator");
  for (index_t i = 0; i < mx.size(); ++i) mx[i] /= nrm;
  DenseTensor<cplx> uu({rows, k}), vh({k, cols});
  la::svd(rows, cols, mx.data(), uu.data(), lambda.data(), vh.data());
  return entropy_bits(lambda);
}

DenseDensity window_average(const SpectralDecomposition& sd,
                            const DenseDensity& rho0, double window,
                            double step) {
  check_spec_density(sd, rho0);
  if (!(window > 0.0) || !(step > 0.0) || step > window)
    throw dimension_error("window average needs 0 < step <= window");
  const auto k_steps = (long long)std::llround(window / step);
  const index_t d = sd.dim();

  // trapezoidal mean of e^{-i delta t} over k uniform steps, in closed
  // form: (S - (1 - r^K)/2) / K with S = sum_{k<K} r^k, r = e^{-i delta dt}
  auto factor = [&](double delta) -> cplx {
    const double theta = delta * step;
    if (std::abs(theta) * (double)k_steps < 1e-9) return cplx(1.0, 0.0);
    const cplx r = std::polar(1.0, -theta);
    const cplx rk = std::polar(1.0, -theta * (double)k_steps);
    if (std::abs(cplx(1.0) - r) < 1e-12) return cplx(1.0, 0.0);
    const cplx s = (cplx(1.0) - rk) / (cplx(1.0) - r);
    return (s - 0.5 * (cplx(1.0) - rk)) / (double)k_steps;
  };

  DenseDensity out = rho0;
  for (index_t n = 0; n < d; ++n)
    for (index_t m = n + 1; m < d; ++m) {
      const cplx f =
          factor(sd.energies[(size_t)n] - sd.energies[(size_t)m]);
      out.mat.at({n, m}) *= f;
      out.mat.at({m, n}) *= std::conj(f);
    }
  return out;
}

}  // namespace diagens
