#pragma once

#include <cblas.h>

namespace afx {

// Row-major sgemm helpers. C(MxN) = op(A) * op(B) + beta * C.
inline void gemm_nn(int m, int n, int k, const float* a, const float* b, float* c,
                    float beta = 0.0f) {
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, m, n, k, 1.0f, a, k, b, n,
                beta, c, n);
}
inline void gemm_tn(int m, int n, int k, const float* a, const float* b, float* c,
                    float beta = 0.0f) {
    // A is stored (k x m), used transposed.
    cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, m, n, k, 1.0f, a, m, b, n,
                beta, c, n);
}
inline void gemm_nt(int m, int n, int k, const float* a, const float* b, float* c,
                    float beta = 0.0f) {
    // B is stored (n x k), used transposed.
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, m, n, k, 1.0f, a, k, b, k,
                beta, c, n);
}

}  // namespace afx
