#pragma once

#include <vector>

#include "diagens/common.hpp"

// Thin row-major wrappers around BLAS/LAPACKE. Everything here works on
// contiguous row-major buffers; callers own all allocations except where
// noted. Real and complex double are the only instantiations.

namespace diagens::la {

enum class Op : char { N = 'N', T = 'T', C = 'C' };

/// c (m x n) += alpha * op(a) * op(b); beta scales the existing c.
template <typename T>
void gemm(Op opa, Op opb, index_t m, index_t n, index_t k, T alpha, const T* a,
          index_t lda, const T* b, index_t ldb, T beta, T* c, index_t ldc);

/// Economy SVD a = u * diag(s) * vh with r = min(m,n). `a` is destroyed.
/// u is m x r, vh is r x n. Uses gesdd, falling back to gesvd if the
/// divide-and-conquer iteration fails.
template <typename T>
void svd(index_t m, index_t n, T* a, T* u, double* s, T* vh);

/// Hermitian eigendecomposition, eigenvalues ascending. On exit `a` holds
/// the eigenvectors (row-major: a[i*n+j] is component i of eigenvector j).
template <typename T>
void eigh(index_t n, T* a, double* w);

/// Economy QR for m >= n is not required; general m,n with k = min(m,n).
/// On exit `a` holds Q (m x k, stored with row stride n -- callers must
/// compact when k < n) and `r` (k x n) the triangular factor.
template <typename T>
void qr(index_t m, index_t n, T* a, T* r);

/// Economy LQ: a = l * q, k = min(m,n). On exit the first k rows of `a`
/// hold Q (k x n) and `l` (m x k) the triangular factor.
template <typename T>
void lq(index_t m, index_t n, T* a, T* l);

/// Gram matrix g = x * x^H (m x m) of row-major x (m x n).
template <typename T>
void gram_rows(index_t m, index_t n, const T* x, T* g);

/// Gram matrix g = x^H * x (n x n).
template <typename T>
void gram_cols(index_t m, index_t n, const T* x, T* g);

double nrm2(index_t n, const double* x);
double nrm2(index_t n, const cplx* x);

}  // namespace diagens::la
