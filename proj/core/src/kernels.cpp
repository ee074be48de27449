#include "geocond/kernels.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

namespace geocond::kernels {

namespace {
// thread-local scratch keeps per-item buffers off the allocator in hot loops
std::vector<float>& scratch() {
  thread_local std::vector<float> buf;
  return buf;
}
std::vector<float>& scratch2() {
  thread_local std::vector<float> buf;
  return buf;
}

// C rows in blocks of four so each B row feeds four accumulation streams
inline void gemm_rows(const float* __restrict__ A, const float* __restrict__ B,
                      float* __restrict__ C, int i0, int i1, int K, int N) {
  int i = i0;
  for (; i + 4 <= i1; i += 4) {
    const float* a0 = A + static_cast<std::size_t>(i) * K;
    const float* a1 = a0 + K;
    const float* a2 = a1 + K;
    const float* a3 = a2 + K;
    float* c0 = C + static_cast<std::size_t>(i) * N;
    float* c1 = c0 + N;
    float* c2 = c1 + N;
    float* c3 = c2 + N;
    for (int k = 0; k < K; ++k) {
      const float* __restrict__ b = B + static_cast<std::size_t>(k) * N;
      const float w0 = a0[k], w1 = a1[k], w2 = a2[k], w3 = a3[k];
      for (int j = 0; j < N; ++j) {
        const float bj = b[j];
        c0[j] += w0 * bj;
        c1[j] += w1 * bj;
        c2[j] += w2 * bj;
        c3[j] += w3 * bj;
      }
    }
  }
  for (; i < i1; ++i) {
    const float* a = A + static_cast<std::size_t>(i) * K;
    float* c = C + static_cast<std::size_t>(i) * N;
    for (int k = 0; k < K; ++k) {
      const float* __restrict__ b = B + static_cast<std::size_t>(k) * N;
      const float w = a[k];
      if (w == 0.0f) continue;
      for (int j = 0; j < N; ++j) c[j] += w * b[j];
    }
  }
}

// row-parallel variant; each C row is still accumulated by exactly one
// worker in k order, so results do not depend on the worker count
inline void gemm_acc_parallel(const float* A, const float* B, float* C, int M, int K, int N) {
  const int blocks = (M + 3) / 4;
#pragma omp parallel for schedule(static)
  for (int blk = 0; blk < blocks; ++blk) {
    const int i0 = blk * 4;
    gemm_rows(A, B, C, i0, std::min(M, i0 + 4), K, N);
  }
}

}  // namespace

float dotf(const float* a, const float* b, int n) {
  float acc[16] = {};
  int i = 0;
  for (; i + 16 <= n; i += 16)
    for (int l = 0; l < 16; ++l) acc[l] += a[i + l] * b[i + l];
  float s = 0.0f;
  for (; i < n; ++i) s += a[i] * b[i];
  for (int l = 0; l < 16; ++l) s += acc[l];
  return s;
}

void axpyf(float* __restrict__ y, float a, const float* __restrict__ x, int n) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

void gemm_acc(const float* A, const float* B, float* C, int M, int K, int N) {
  gemm_rows(A, B, C, 0, M, K, N);
}

void im2col(const float* in, int C, int H, int W, float* col) {
  const int OH = conv_out_extent(H), OW = conv_out_extent(W);
  const std::size_t ohw = static_cast<std::size_t>(OH) * OW;
  for (int c = 0; c < C; ++c) {
    const float* plane = in + static_cast<std::size_t>(c) * H * W;
    for (int u = 0; u < kKernel; ++u) {
      for (int v = 0; v < kKernel; ++v) {
        float* row = col + (static_cast<std::size_t>(c) * 16 + u * 4 + v) * ohw;
        for (int oh = 0; oh < OH; ++oh) {
          const int ih = kStride * oh + u - kPad;
          float* dst = row + static_cast<std::size_t>(oh) * OW;
          if (ih < 0 || ih >= H) {
            std::fill(dst, dst + OW, 0.0f);
            continue;
          }
          const float* src = plane + static_cast<std::size_t>(ih) * W;
          for (int ow = 0; ow < OW; ++ow) {
            const int iw = kStride * ow + v - kPad;
            dst[ow] = (iw >= 0 && iw < W) ? src[iw] : 0.0f;
          }
        }
      }
    }
  }
}

void col2im(const float* col, int C, int H, int W, float* out) {
  const int OH = conv_out_extent(H), OW = conv_out_extent(W);
  const std::size_t ohw = static_cast<std::size_t>(OH) * OW;
  for (int c = 0; c < C; ++c) {
    float* plane = out + static_cast<std::size_t>(c) * H * W;
    for (int u = 0; u < kKernel; ++u) {
      for (int v = 0; v < kKernel; ++v) {
        const float* row = col + (static_cast<std::size_t>(c) * 16 + u * 4 + v) * ohw;
        for (int oh = 0; oh < OH; ++oh) {
          const int ih = kStride * oh + u - kPad;
          if (ih < 0 || ih >= H) continue;
          float* dst = plane + static_cast<std::size_t>(ih) * W;
          const float* src = row + static_cast<std::size_t>(oh) * OW;
          for (int ow = 0; ow < OW; ++ow) {
            const int iw = kStride * ow + v - kPad;
            if (iw >= 0 && iw < W) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

void conv_forward(const float* in, const float* w, const float* bias, float* out,
                  int B, int Ci, int H, int W, int Co) {
  const int OH = conv_out_extent(H), OW = conv_out_extent(W);
  const std::size_t ohw = static_cast<std::size_t>(OH) * OW;
  const int K = Ci * 16;

#pragma omp parallel for schedule(static)
  for (int b = 0; b < B; ++b) {
    std::vector<float>& col = scratch();
    col.resize(static_cast<std::size_t>(K) * ohw);
    im2col(in + static_cast<std::size_t>(b) * Ci * H * W, Ci, H, W, col.data());
    float* dst = out + static_cast<std::size_t>(b) * Co * ohw;
    for (int co = 0; co < Co; ++co)
      std::fill(dst + static_cast<std::size_t>(co) * ohw,
                dst + static_cast<std::size_t>(co + 1) * ohw, bias ? bias[co] : 0.0f);
    gemm_acc(w, col.data(), dst, Co, K, static_cast<int>(ohw));
  }
}

void conv_grad_input(const float* gout, const float* w, float* gin,
                     int B, int Ci, int H, int W, int Co) {
  const int OH = conv_out_extent(H), OW = conv_out_extent(W);
  const std::size_t ohw = static_cast<std::size_t>(OH) * OW;
  const int K = Ci * 16;

  // W^T once: [K, Co]
  std::vector<float> wt(static_cast<std::size_t>(K) * Co);
  for (int co = 0; co < Co; ++co)
    for (int k = 0; k < K; ++k)
      wt[static_cast<std::size_t>(k) * Co + co] = w[static_cast<std::size_t>(co) * K + k];

#pragma omp parallel for schedule(static)
  for (int b = 0; b < B; ++b) {
    std::vector<float>& gcol = scratch();
    gcol.assign(static_cast<std::size_t>(K) * ohw, 0.0f);
    gemm_acc(wt.data(), gout + static_cast<std::size_t>(b) * Co * ohw, gcol.data(), K, Co,
             static_cast<int>(ohw));
    col2im(gcol.data(), Ci, H, W, gin + static_cast<std::size_t>(b) * Ci * H * W);
  }
}

void conv_grad_weight(const float* in, const float* gout, float* gw, float* gb,
                      int B, int Ci, int H, int W, int Co) {
  const int OH = conv_out_extent(H), OW = conv_out_extent(W);
  const int ohw = OH * OW;
  const int K = Ci * 16;

  // chunk the batch so the shared transposed-col buffer stays modest; chunks
  // and items accumulate sequentially, so results do not depend on workers
  const std::size_t per_item = static_cast<std::size_t>(K) * ohw;
  const int chunk = std::max(1, static_cast<int>((16u << 20) / (per_item * 4)));
  std::vector<float> colts;

  for (int b0 = 0; b0 < B; b0 += chunk) {
    const int bn = std::min(chunk, B - b0);
    colts.resize(per_item * static_cast<std::size_t>(bn));
#pragma omp parallel for schedule(static)
    for (int i = 0; i < bn; ++i) {
      std::vector<float>& col = scratch2();
      col.resize(per_item);
      im2col(in + static_cast<std::size_t>(b0 + i) * Ci * H * W, Ci, H, W, col.data());
      // transpose to [ohw, K] so the weight-gradient GEMM streams rows
      float* colt = colts.data() + per_item * static_cast<std::size_t>(i);
      for (int k = 0; k < K; ++k)
        for (int n = 0; n < ohw; ++n)
          colt[static_cast<std::size_t>(n) * K + k] = col[static_cast<std::size_t>(k) * ohw + n];
    }
    for (int i = 0; i < bn; ++i)
      gemm_acc_parallel(gout + static_cast<std::size_t>(b0 + i) * Co * ohw,
                        colts.data() + per_item * static_cast<std::size_t>(i), gw, Co, ohw, K);
  }

  if (gb) {
    for (int b = 0; b < B; ++b)
      for (int co = 0; co < Co; ++co) {
        const float* g = gout + (static_cast<std::size_t>(b) * Co + co) * ohw;
        double s = 0.0;
        for (int i = 0; i < ohw; ++i) s += g[i];
        gb[co] += static_cast<float>(s);
      }
  }
}

void dense_forward(const float* in, const float* w, const float* bias, float* out,
                   int B, int F, int G) {
#pragma omp parallel for schedule(static)
  for (int b = 0; b < B; ++b) {
    float* dst = out + static_cast<std::size_t>(b) * G;
    if (bias)
      std::copy(bias, bias + G, dst);
    else
      std::fill(dst, dst + G, 0.0f);
    const float* src = in + static_cast<std::size_t>(b) * F;
    gemm_rows(src, w, dst, 0, 1, F, G);
  }
}

void dense_grad_input(const float* gout, const float* w, float* gin, int B, int F, int G) {
#pragma omp parallel for schedule(static)
  for (int b = 0; b < B; ++b) {
    const float* g = gout + static_cast<std::size_t>(b) * G;
    float* dst = gin + static_cast<std::size_t>(b) * F;
    for (int i = 0; i < F; ++i) dst[i] += dotf(g, w + static_cast<std::size_t>(i) * G, G);
  }
}

void dense_grad_weight(const float* in, const float* gout, float* gw, float* gb,
                       int B, int F, int G) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < F; ++i) {
    float* grow = gw + static_cast<std::size_t>(i) * G;
    for (int b = 0; b < B; ++b) {
      const float a = in[static_cast<std::size_t>(b) * F + i];
      if (a == 0.0f) continue;
      axpyf(grow, a, gout + static_cast<std::size_t>(b) * G, G);
    }
  }
  if (gb) {
    for (int b = 0; b < B; ++b) axpyf(gb, 1.0f, gout + static_cast<std::size_t>(b) * G, G);
  }
}

}  // namespace geocond::kernels
