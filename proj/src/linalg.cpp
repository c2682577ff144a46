#include "diagens/linalg.hpp"

#include <algorithm>
#include <cstring>

#include <cblas.h>

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace diagens::la {

namespace {

CBLAS_TRANSPOSE to_cblas(Op op) {
  switch (op) {
    case Op::N: return CblasNoTrans;
    case Op::T: return CblasTrans;
    case Op::C: return CblasConjTrans;
  }
  throw dimension_error("bad Op");
}

}  // namespace

template <>
void gemm<double>(Op opa, Op opb, index_t m, index_t n, index_t k,
                  double alpha, const double* a, index_t lda, const double* b,
                  index_t ldb, double beta, double* c, index_t ldc) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (beta == 0.0)
      for (index_t i = 0; i < m; ++i) std::fill_n(c + i * ldc, n, 0.0);
    else if (beta != 1.0)
      for (index_t i = 0; i < m; ++i)
        for (index_t j = 0; j < n; ++j) c[i * ldc + j] *= beta;
    return;
  }
  cblas_dgemm(CblasRowMajor, to_cblas(opa), to_cblas(opb), (int)m, (int)n,
              (int)k, alpha, a, (int)lda, b, (int)ldb, beta, c, (int)ldc);
}

template <>
void gemm<cplx>(Op opa, Op opb, index_t m, index_t n, index_t k, cplx alpha,
                const cplx* a, index_t lda, const cplx* b, index_t ldb,
                cplx beta, cplx* c, index_t ldc) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (beta == cplx(0.0))
      for (index_t i = 0; i < m; ++i) std::fill_n(c + i * ldc, n, cplx(0.0));
    else if (beta != cplx(1.0))
      for (index_t i = 0; i < m; ++i)
        for (index_t j = 0; j < n; ++j) c[i * ldc + j] *= beta;
    return;
  }
  cblas_zgemm(CblasRowMajor, to_cblas(opa), to_cblas(opb), (int)m, (int)n,
              (int)k, &alpha, a, (int)lda, b, (int)ldb, &beta, c, (int)ldc);
}

template <>
void svd<double>(index_t m, index_t n, double* a, double* u, double* s,
                 double* vh) {
  const index_t r = std::min(m, n);
  // gesdd occasionally fails to converge on ill-conditioned input; keep a
  // copy so we can retry with the slower QR-iteration driver.
  std::vector<double> backup(a, a + m * n);
  int info = LAPACKE_dgesdd(LAPACK_ROW_MAJOR, 'S', (int)m, (int)n, a, (int)n,
                            s, u, (int)r, vh, (int)n);
  if (info > 0) {
    std::copy(backup.begin(), backup.end(), a);
    std::vector<double> superb(r > 1 ? r - 1 : 1);
    info = LAPACKE_dgesvd(LAPACK_ROW_MAJOR, 'S', 'S', (int)m, (int)n, a,
                          (int)n, s, u, (int)r, vh, (int)n, superb.data());
  }
  if (info != 0) throw numerical_error("SVD failed, info=" + std::to_string(info));
}

template <>
void svd<cplx>(index_t m, index_t n, cplx* a, cplx* u, double* s, cplx* vh) {
  const index_t r = std::min(m, n);
  std::vector<cplx> backup(a, a + m * n);
  int info = LAPACKE_zgesdd(LAPACK_ROW_MAJOR, 'S', (int)m, (int)n, a, (int)n,
                            s, u, (int)r, vh, (int)n);
  if (info > 0) {
    std::copy(backup.begin(), backup.end(), a);
    std::vector<double> superb(r > 1 ? r - 1 : 1);
    info = LAPACKE_zgesvd(LAPACK_ROW_MAJOR, 'S', 'S', (int)m, (int)n, a,
                          (int)n, s, u, (int)r, vh, (int)n, superb.data());
  }
  if (info != 0) throw numerical_error("SVD failed, info=" + std::to_string(info));
}

template <>
void eigh<double>(index_t n, double* a, double* w) {
  int info = LAPACKE_dsyevd(LAPACK_ROW_MAJOR, 'V', 'U', (int)n, a, (int)n, w);
  if (info != 0)
    throw numerical_error("symmetric eigensolve failed, info=" +
                          std::to_string(info));
}

template <>
void eigh<cplx>(index_t n, cplx* a, double* w) {
  int info = LAPACKE_zheevd(LAPACK_ROW_MAJOR, 'V', 'U', (int)n, a, (int)n, w);
  if (info != 0)
    throw numerical_error("hermitian eigensolve failed, info=" +
                          std::to_string(info));
}

template <>
void qr<double>(index_t m, index_t n, double* a, double* r) {
  const index_t k = std::min(m, n);
  std::vector<double> tau(k);
  int info =
      LAPACKE_dgeqrf(LAPACK_ROW_MAJOR, (int)m, (int)n, a, (int)n, tau.data());
  if (info != 0) throw numerical_error("QR factorization failed");
  for (index_t i = 0; i < k; ++i)
    for (index_t j = 0; j < n; ++j) r[i * n + j] = j < i ? 0.0 : a[i * n + j];
  info = LAPACKE_dorgqr(LAPACK_ROW_MAJOR, (int)m, (int)k, (int)k, a, (int)n,
                        tau.data());
  if (info != 0) throw numerical_error("QR basis generation failed");
}

template <>
void qr<cplx>(index_t m, index_t n, cplx* a, cplx* r) {
  const index_t k = std::min(m, n);
  std::vector<cplx> tau(k);
  int info =
      LAPACKE_zgeqrf(LAPACK_ROW_MAJOR, (int)m, (int)n, a, (int)n, tau.data());
  if (info != 0) throw numerical_error("QR factorization failed");
  for (index_t i = 0; i < k; ++i)
    for (index_t j = 0; j < n; ++j)
      r[i * n + j] = j < i ? cplx(0.0) : a[i * n + j];
  info = LAPACKE_zungqr(LAPACK_ROW_MAJOR, (int)m, (int)k, (int)k, a, (int)n,
                        tau.data());
  if (info != 0) throw numerical_error("QR basis generation failed");
}

template <>
void lq<double>(index_t m, index_t n, double* a, double* l) {
  const index_t k = std::min(m, n);
  std::vector<double> tau(k);
  int info =
      LAPACKE_dgelqf(LAPACK_ROW_MAJOR, (int)m, (int)n, a, (int)n, tau.data());
  if (info != 0) throw numerical_error("LQ factorization failed");
  for (index_t i = 0; i < m; ++i)
    for (index_t j = 0; j < k; ++j) l[i * k + j] = j > i ? 0.0 : a[i * n + j];
  info = LAPACKE_dorglq(LAPACK_ROW_MAJOR, (int)k, (int)n, (int)k, a, (int)n,
                        tau.data());
  if (info != 0) throw numerical_error("LQ basis generation failed");
}

template <>
void lq<cplx>(index_t m, index_t n, cplx* a, cplx* l) {
  const index_t k = std::min(m, n);
  std::vector<cplx> tau(k);
  int info =
      LAPACKE_zgelqf(LAPACK_ROW_MAJOR, (int)m, (int)n, a, (int)n, tau.data());
  if (info != 0) throw numerical_error("LQ factorization failed");
  for (index_t i = 0; i < m; ++i)
    for (index_t j = 0; j < k; ++j)
      l[i * k + j] = j > i ? cplx(0.0) : a[i * n + j];
  info = LAPACKE_zunglq(LAPACK_ROW_MAJOR, (int)k, (int)n, (int)k, a, (int)n,
                        tau.data());
  if (info != 0) throw numerical_error("LQ basis generation failed");
}

template <>
void gram_rows<double>(index_t m, index_t n, const double* x, double* g) {
  if (m == 0) return;
  cblas_dsyrk(CblasRowMajor, CblasUpper, CblasNoTrans, (int)m, (int)n, 1.0, x,
              (int)n, 0.0, g, (int)m);
  for (index_t i = 0; i < m; ++i)
    for (index_t j = 0; j < i; ++j) g[i * m + j] = g[j * m + i];
}

template <>
void gram_rows<cplx>(index_t m, index_t n, const cplx* x, cplx* g) {
  if (m == 0) return;
  cblas_zherk(CblasRowMajor, CblasUpper, CblasNoTrans, (int)m, (int)n, 1.0, x,
              (int)n, 0.0, g, (int)m);
  for (index_t i = 0; i < m; ++i)
    for (index_t j = 0; j < i; ++j) g[i * m + j] = std::conj(g[j * m + i]);
}

template <>
void gram_cols<double>(index_t m, index_t n, const double* x, double* g) {
  if (n == 0) return;
  cblas_dsyrk(CblasRowMajor, CblasUpper, CblasTrans, (int)n, (int)m, 1.0, x,
              (int)n, 0.0, g, (int)n);
  for (index_t i = 0; i < n; ++i)
    for (index_t j = 0; j < i; ++j) g[i * n + j] = g[j * n + i];
}

template <>
void gram_cols<cplx>(index_t m, index_t n, const cplx* x, cplx* g) {
  if (n == 0) return;
  cblas_zherk(CblasRowMajor, CblasUpper, CblasConjTrans, (int)n, (int)m, 1.0,
              x, (int)n, 0.0, g, (int)n);
  for (index_t i = 0; i < n; ++i)
    for (index_t j = 0; j < i; ++j) g[i * n + j] = std::conj(g[j * n + i]);
}

double nrm2(index_t n, const double* x) {
  return cblas_dnrm2((int)n, x, 1);
}

double nrm2(index_t n, const cplx* x) {
  return cblas_dznrm2((int)n, x, 1);
}

}  // namespace diagens::la
