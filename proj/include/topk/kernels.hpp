#pragma once

#include <cstddef>
#include <cstdint>

// Numeric kernels behind the reward models. The primary implementations in
// topk::kernels parallelize with OpenMP over disjoint output elements, each
// accumulated in a fixed order, so results are identical for any thread
// count. topk::kernels::serial holds independently written naive loops used
// as the reference in tests and the baseline in the kernel benchmark.
//
// Convolutions are 3x3 with padding 1, stride 1; pooling is 2x2, stride 2
// (trailing odd row/column dropped). Shapes are row-major:
//   X [B, C, H, W]   K [Cout, Cin, 3, 3]   dense W [out, in]

namespace topk::kernels {

// Y[b,o] = bias[o] + sum_i X[b,i] * W[o,i]
void dense_forward(const double* X, std::size_t B, std::size_t in,
                   const double* W, const double* bias, std::size_t out,
                   double* Y);

// dX[b,i] = sum_o dY[b,o] * W[o,i]
void dense_backward_input(const double* dY, std::size_t B, std::size_t out,
                          const double* W, std::size_t in, double* dX);

// dW[o,i] = sum_b dY[b,o] * X[b,i];  db[o] = sum_b dY[b,o]
void dense_backward_params(const double* dY, std::size_t B, std::size_t out,
                           const double* X, std::size_t in, double* dW,
                           double* db);

void conv3x3_forward(const double* X, std::size_t B, std::size_t Cin,
                     std::size_t H, std::size_t W, const double* K,
                     const double* bias, std::size_t Cout, double* Y);

void conv3x3_backward_input(const double* dY, std::size_t B, std::size_t Cout,
                            std::size_t H, std::size_t W, const double* K,
                            std::size_t Cin, double* dX);

void conv3x3_backward_params(const double* dY, const double* X, std::size_t B,
                             std::size_t Cin, std::size_t Cout, std::size_t H,
                             std::size_t W, double* dK, double* db);

// argmax stores the flat input index of each window maximum (first maximum
// in row-major window order), consumed by the backward pass.
void maxpool2_forward(const double* X, std::size_t B, std::size_t C,
                      std::size_t H, std::size_t W, double* Y,
                      std::uint32_t* argmax);

// dX must be zeroed by the caller.
void maxpool2_backward(const double* dY, std::size_t B, std::size_t C,
                       std::size_t H, std::size_t W,
                       const std::uint32_t* argmax, double* dX);

namespace serial {

void dense_forward(const double* X, std::size_t B, std::size_t in,
                   const double* W, const double* bias, std::size_t out,
                   double* Y);
void dense_backward_input(const double* dY, std::size_t B, std::size_t out,
                          const double* W, std::size_t in, double* dX);
void dense_backward_params(const double* dY, std::size_t B, std::size_t out,
                           const double* X, std::size_t in, double* dW,
                           double* db);
void conv3x3_forward(const double* X, std::size_t B, std::size_t Cin,
                     std::size_t H, std::size_t W, const double* K,
                     const double* bias, std::size_t Cout, double* Y);
void conv3x3_backward_input(const double* dY, std::size_t B, std::size_t Cout,
                            std::size_t H, std::size_t W, const double* K,
                            std::size_t Cin, double* dX);
void conv3x3_backward_params(const double* dY, const double* X, std::size_t B,
                             std::size_t Cin, std::size_t Cout, std::size_t H,
                             std::size_t W, double* dK, double* db);
void maxpool2_forward(const double* X, std::size_t B, std::size_t C,
                      std::size_t H, std::size_t W, double* Y,
                      std::uint32_t* argmax);
void maxpool2_backward(const double* dY, std::size_t B, std::size_t C,
                       std::size_t H, std::size_t W,
                       const std::uint32_t* argmax, double* dX);

}  // namespace serial

}  // namespace topk::kernels
