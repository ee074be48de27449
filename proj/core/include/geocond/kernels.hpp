#pragma once

#include <cstddef>

namespace geocond::kernels {

// All convolutions in the architecture share one geometry: 4x4 kernel,
// stride 2, padding 1, so H and W halve (conv) or double (conv transpose).
inline constexpr int kKernel = 4;
inline constexpr int kStride = 2;
inline constexpr int kPad = 1;

inline int conv_out_extent(int in) { return (in + 2 * kPad - kKernel) / kStride + 1; }
inline int convt_out_extent(int in) { return (in - 1) * kStride - 2 * kPad + kKernel; }

/// One batch item: input [C,H,W] -> col [C*16, OH*OW], zero padding applied.
void im2col(const float* in, int C, int H, int W, float* col);

/// Adjoint scatter: col [C*16, OH*OW] accumulated back into out [C,H,W].
void col2im(const float* col, int C, int H, int W, float* out);

/// C[M,N] += A[M,K] * B[K,N], row-major. Accumulation order over k is fixed
/// per output element, so results do not depend on threading.
void gemm_acc(const float* A, const float* B, float* C, int M, int K, int N);

float dotf(const float* a, const float* b, int n);
void axpyf(float* y, float a, const float* x, int n);

// input [B,Ci,H,W], weight [Co,Ci,4,4], bias [Co] (may be null), out [B,Co,H/2,W/2]
void conv_forward(const float* in, const float* w, const float* bias, float* out,
                  int B, int Ci, int H, int W, int Co);
// grad_out [B,Co,OH,OW] -> grad_in accumulated into [B,Ci,H,W]
void conv_grad_input(const float* gout, const float* w, float* gin,
                     int B, int Ci, int H, int W, int Co);
// accumulates grad_w [Co,Ci,4,4] and grad_b [Co] (either may be null)
void conv_grad_weight(const float* in, const float* gout, float* gw, float* gb,
                      int B, int Ci, int H, int W, int Co);

// out[b,j] = bias[j] + sum_i in[b,i]*w[i,j]; weight is [F,G] row-major
void dense_forward(const float* in, const float* w, const float* bias, float* out,
                   int B, int F, int G);
void dense_grad_input(const float* gout, const float* w, float* gin, int B, int F, int G);
void dense_grad_weight(const float* in, const float* gout, float* gw, float* gb,
                       int B, int F, int G);

}  // namespace geocond::kernels
