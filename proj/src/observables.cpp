#include "diagens/observables.hpp"

#include <cmath>
#include <utility>

namespace diagens {

namespace {

// Casts a complex 2x2 observable to the scalar type of the state.
template <typename T>
Mat2<T> cast_mat(const Mat2<cplx>& m);

template <>
Mat2<cplx> cast_mat<cplx>(const Mat2<cplx>& m) {
  return m;
}

template <>
Mat2<double> cast_mat<double>(const Mat2<cplx>& m) {
  Mat2<double> out{};
  for (int i = 0; i < 4; ++i) {
    if (std::abs(m[(size_t)i].imag()) > 1e-12)
      throw dimension_error(
          "complex observable applied to a real-valued state");
    out[(size_t)i] = m[(size_t)i].real();
  }
  return out;
}

}  // namespace

ObservableSpec ObservableSpec::sigma_x(index_t site) {
  return {"sx", {cplx(0), cplx(1), cplx(1), cplx(0)}, site};
}

ObservableSpec ObservableSpec::sigma_y(index_t site) {
  return {"sy", {cplx(0), cplx(0, -1), cplx(0, 1), cplx(0)}, site};
}

ObservableSpec ObservableSpec::sigma_z(index_t site) {
  return {"sz", {cplx(1), cplx(0), cplx(0), cplx(-1)}, site};
}

ObservableSpec ObservableSpec::identity(index_t site) {
  return {"id", {cplx(1), cplx(0), cplx(0), cplx(1)}, site};
}

ObservableSpec observable_from_label(const std::string& label) {
  std::string base = label;
  index_t site = 0;
  if (const auto colon = label.find(':'); colon != std::string::npos) {
    base = label.substr(0, colon);
    const std::string tail = label.substr(colon + 1);
    size_t used = 0;
    try {
      site = std::stoll(tail, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tail.size() || site < 1)
      throw dimension_error("bad site suffix in observable '" + label + "'");
  }
  ObservableSpec spec;
  if (base == "sx")
    spec = ObservableSpec::sigma_x(site);
  else if (base == "sy")
    spec = ObservableSpec::sigma_y(site);
  else if (base == "sz")
    spec = ObservableSpec::sigma_z(site);
  else if (base == "id")
    spec = ObservableSpec::identity(site);
  else
    throw dimension_error("unknown observable label '" + label + "'");
  spec.label = label;
  return spec;
}

index_t resolve_site(const ObservableSpec& spec, index_t length) {
  return spec.site > 0 ? spec.site : length / 2;
}

void validate_spec(const ObservableSpec& spec, index_t length) {
  if (std::abs(spec.op[1] - std::conj(spec.op[2])) > 1e-12 ||
      std::abs(spec.op[0].imag()) > 1e-12 || std::abs(spec.op[3].imag()) > 1e-12)
    throw dimension_error("observable '" + spec.label + "' is not Hermitian");
  const index_t s = resolve_site(spec, length);
  if (s < 1 || s > length)
    throw dimension_error("observable site out of range");
}

template <typename T>
Expectation expectation(const MpsVector<T>& rho, const ObservableSpec& spec) {
  const index_t n = rho.length();
  validate_spec(spec, n);
  const index_t site = resolve_site(spec, n) - 1;  // 0-based
  const auto obs =
      observable_vector<T>(n, {{site, cast_mat<T>(spec.op)}});
  const T num = inner(obs, rho);
  const T den = inner(trace_vector<T>(n), rho);
  if (std::abs(den) < 1e-12 * norm(rho))
    throw numerical_error("expectation: vanishing trace <1|rho>");
  const cplx r = cplx(num) / cplx(den);
  return {r.real(), r.imag()};
}

template <typename T>
DeltaSquared delta_squared(const MpsVector<T>& rho, const MpoOperator<T>& h_c,
                           double alpha, index_t max_bond, double rel_tol) {
  const double nrm = norm(rho);
  if (!(nrm > 0.0)) throw numerical_error("delta_squared: zero-norm state");
  MpsVector<T> applied =
      apply_mpo_compressed(h_c, rho, max_bond, rel_tol, nullptr);
  const double num = norm(applied);
  const double rescaled = (num / nrm) * (num / nrm);
  return {rescaled, rescaled / (alpha * alpha)};
}

template <typename T>
double frobenius_sq(const MpsVector<T>& rho) {
  const double f = real_part(inner(rho, rho));
  return f > 0.0 ? f : 0.0;
}

template <typename T>
T trace_overlap(const MpsVector<T>& rho) {
  return inner(trace_vector<T>(rho.length()), rho);
}

#define DIAGENS_INSTANTIATE_OBS(T)                                        \
  template Expectation expectation<T>(const MpsVector<T>&,                \
                                      const ObservableSpec&);             \
  template DeltaSquared delta_squared<T>(const MpsVector<T>&,             \
                                         const MpoOperator<T>&, double,   \
                                         index_t, double);                \
  template double frobenius_sq<T>(const MpsVector<T>&);                   \
  template T trace_overlap<T>(const MpsVector<T>&);

DIAGENS_INSTANTIATE_OBS(double)
DIAGENS_INSTANTIATE_OBS(cplx)

#undef DIAGENS_INSTANTIATE_OBS

}  // namespace diagens
