#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace diagens {

using cplx = std::complex<double>;
using index_t = std::int64_t;

template <typename T>
inline constexpr bool is_complex_v = std::is_same_v<T, cplx>;

template <typename T>
inline double real_part(T x) {
  if constexpr (is_complex_v<T>)
    return x.real();
  else
    return x;
}

template <typename T>
inline T conj_val(T x) {
  if constexpr (is_complex_v<T>)
    return std::conj(x);
  else
    return x;
}

/// Thrown on contract violations (dimension mismatches, bad arguments).
struct dimension_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical routine cannot complete (non-finite input,
/// LAPACK failure, truncation budget exceeded).
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace diagens
