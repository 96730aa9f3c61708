#include "topk/kernels.hpp"

// Reference implementations: straight-line gather loops with explicit bounds
// checks, no threading, no restructuring. Tests hold the optimized kernels
// to these outputs; the benchmark reports the speed gap.

namespace topk::kernels::serial {

namespace {
using std::size_t;
}

void dense_forward(const double* X, size_t B, size_t in, const double* W,
                   const double* bias, size_t out, double* Y) {
    for (size_t b = 0; b < B; ++b) {
        for (size_t o = 0; o < out; ++o) {
            double acc = bias[o];
            for (size_t i = 0; i < in; ++i) acc += X[b * in + i] * W[o * in + i];
            Y[b * out + o] = acc;
        }
    }
}

void dense_backward_input(const double* dY, size_t B, size_t out,
                          const double* W, size_t in, double* dX) {
    for (size_t b = 0; b < B; ++b) {
        for (size_t i = 0; i < in; ++i) {
            double acc = 0.0;
            for (size_t o = 0; o < out; ++o)
                acc += dY[b * out + o] * W[o * in + i];
            dX[b * in + i] = acc;
        }
    }
}

void dense_backward_params(const double* dY, size_t B, size_t out,
                           const double* X, size_t in, double* dW,
                           double* db) {
    for (size_t o = 0; o < out; ++o) {
        for (size_t i = 0; i < in; ++i) {
            double acc = 0.0;
            for (size_t b = 0; b < B; ++b)
                acc += dY[b * out + o] * X[b * in + i];
            dW[o * in + i] = acc;
        }
        double acc = 0.0;
        for (size_t b = 0; b < B; ++b) acc += dY[b * out + o];
        db[o] = acc;
    }
}

void conv3x3_forward(const double* X, size_t B, size_t Cin, size_t H, size_t W,
                     const double* K, const double* bias, size_t Cout,
                     double* Y) {
    const size_t plane = H * W;
    for (size_t b = 0; b < B; ++b) {
        for (size_t oc = 0; oc < Cout; ++oc) {
            for (size_t y = 0; y < H; ++y) {
                for (size_t x = 0; x < W; ++x) {
                    double acc = bias[oc];
                    for (size_t ic = 0; ic < Cin; ++ic) {
                        for (size_t ky = 0; ky < 3; ++ky) {
                            for (size_t kx = 0; kx < 3; ++kx) {
                                const long iy = static_cast<long>(y + ky) - 1;
                                const long ix = static_cast<long>(x + kx) - 1;
                                if (iy < 0 || iy >= static_cast<long>(H) ||
                                    ix < 0 || ix >= static_cast<long>(W))
                                    continue;
                                acc += K[(oc * Cin + ic) * 9 + ky * 3 + kx] *
                                       X[(b * Cin + ic) * plane + iy * W + ix];
                            }
                        }
                    }
                    Y[(b * Cout + oc) * plane + y * W + x] = acc;
                }
            }
        }
    }
}

void conv3x3_backward_input(const double* dY, size_t B, size_t Cout, size_t H,
                            size_t W, const double* K, size_t Cin,
                            double* dX) {
    const size_t plane = H * W;
    for (size_t b = 0; b < B; ++b) {
        for (size_t ic = 0; ic < Cin; ++ic) {
            for (size_t iy = 0; iy < H; ++iy) {
                for (size_t ix = 0; ix < W; ++ix) {
                    double acc = 0.0;
                    for (size_t oc = 0; oc < Cout; ++oc) {
                        for (size_t ky = 0; ky < 3; ++ky) {
                            for (size_t kx = 0; kx < 3; ++kx) {
                                const long oy = static_cast<long>(iy) + 1 -
                                                static_cast<long>(ky);
                                const long ox = static_cast<long>(ix) + 1 -
                                                static_cast<long>(kx);
                                if (oy < 0 || oy >= static_cast<long>(H) ||
                                    ox < 0 || ox >= static_cast<long>(W))
                                    continue;
                                acc += K[(oc * Cin + ic) * 9 + ky * 3 + kx] *
                                       dY[(b * Cout + oc) * plane + oy * W + ox];
                            }
                        }
                    }
                    dX[(b * Cin + ic) * plane + iy * W + ix] = acc;
                }
            }
        }
    }
}

void conv3x3_backward_params(const double* dY, const double* X, size_t B,
                             size_t Cin, size_t Cout, size_t H, size_t W,
                             double* dK, double* db) {
    const size_t plane = H * W;
    for (size_t oc = 0; oc < Cout; ++oc) {
        for (size_t ic = 0; ic < Cin; ++ic) {
            for (size_t ky = 0; ky < 3; ++ky) {
                for (size_t kx = 0; kx < 3; ++kx) {
                    double acc = 0.0;
                    for (size_t b = 0; b < B; ++b) {
                        for (size_t y = 0; y < H; ++y) {
                            for (size_t x = 0; x < W; ++x) {
                                const long iy = static_cast<long>(y + ky) - 1;
                                const long ix = static_cast<long>(x + kx) - 1;
                                if (iy < 0 || iy >= static_cast<long>(H) ||
                                    ix < 0 || ix >= static_cast<long>(W))
                                    continue;
                                acc += dY[(b * Cout + oc) * plane + y * W + x] *
                                       X[(b * Cin + ic) * plane + iy * W + ix];
                            }
                        }
                    }
                    dK[(oc * Cin + ic) * 9 + ky * 3 + kx] = acc;
                }
            }
        }
        double acc = 0.0;
        for (size_t b = 0; b < B; ++b)
            for (size_t p = 0; p < plane; ++p)
                acc += dY[(b * Cout + oc) * plane + p];
        db[oc] = acc;
    }
}

void maxpool2_forward(const double* X, size_t B, size_t C, size_t H, size_t W,
                      double* Y, std::uint32_t* argmax) {
    const size_t OH = H / 2, OW = W / 2;
    for (size_t b = 0; b < B; ++b) {
        for (size_t c = 0; c < C; ++c) {
            const double* xp = X + (b * C + c) * H * W;
            for (size_t oy = 0; oy < OH; ++oy) {
                for (size_t ox = 0; ox < OW; ++ox) {
                    size_t best = 2 * oy * W + 2 * ox;
                    for (size_t wy = 0; wy < 2; ++wy) {
                        for (size_t wx = 0; wx < 2; ++wx) {
                            const size_t idx = (2 * oy + wy) * W + 2 * ox + wx;
                            if (xp[idx] > xp[best]) best = idx;
                        }
                    }
                    Y[(b * C + c) * OH * OW + oy * OW + ox] = xp[best];
                    argmax[(b * C + c) * OH * OW + oy * OW + ox] =
                        static_cast<std::uint32_t>(best);
                }
            }
        }
    }
}

void maxpool2_backward(const double* dY, size_t B, size_t C, size_t H,
                       size_t W, const std::uint32_t* argmax, double* dX) {
    const size_t OH = H / 2, OW = W / 2;
    for (size_t b = 0; b < B; ++b) {
        for (size_t c = 0; c < C; ++c) {
            for (size_t p = 0; p < OH * OW; ++p) {
                dX[(b * C + c) * H * W + argmax[(b * C + c) * OH * OW + p]] +=
                    dY[(b * C + c) * OH * OW + p];
            }
        }
    }
}

}  // namespace topk::kernels::serial
