#include "topk/kernels.hpp"

#include <algorithm>
#include <cstdint>

namespace topk::kernels {

namespace {
using std::size_t;
using i64 = long long;
}  // namespace

void dense_forward(const double* X, size_t B, size_t in, const double* W,
                   const double* bias, size_t out, double* Y) {
#pragma omp parallel for collapse(2) schedule(static)
    for (i64 b = 0; b < static_cast<i64>(B); ++b) {
        for (i64 o = 0; o < static_cast<i64>(out); ++o) {
            const double* x = X + b * in;
            const double* w = W + o * in;
            // four independent accumulator chains; summed in fixed order
            double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
            size_t i = 0;
            for (; i + 4 <= in; i += 4) {
                a0 += x[i] * w[i];
                a1 += x[i + 1] * w[i + 1];
                a2 += x[i + 2] * w[i + 2];
                a3 += x[i + 3] * w[i + 3];
            }
            for (; i < in; ++i) a0 += x[i] * w[i];
            Y[b * out + o] = bias[o] + ((a0 + a1) + (a2 + a3));
        }
    }
}

void dense_backward_input(const double* dY, size_t B, size_t out,
                          const double* W, size_t in, double* dX) {
#pragma omp parallel for schedule(static)
    for (i64 b = 0; b < static_cast<i64>(B); ++b) {
        double* dx = dX + b * in;
        std::fill(dx, dx + in, 0.0);
        for (size_t o = 0; o < out; ++o) {
            const double g = dY[b * out + o];
            const double* w = W + o * in;
            for (size_t i = 0; i < in; ++i) dx[i] += g * w[i];
        }
    }
}

void dense_backward_params(const double* dY, size_t B, size_t out,
                           const double* X, size_t in, double* dW,
                           double* db) {
#pragma omp parallel for schedule(static)
    for (i64 o = 0; o < static_cast<i64>(out); ++o) {
        double* dw = dW + o * in;
        std::fill(dw, dw + in, 0.0);
        double acc = 0.0;
        for (size_t b = 0; b < B; ++b) {
            const double g = dY[b * out + o];
            acc += g;
            const double* x = X + b * in;
            for (size_t i = 0; i < in; ++i) dw[i] += g * x[i];
        }
        db[o] = acc;
    }
}

void conv3x3_forward(const double* X, size_t B, size_t Cin, size_t H, size_t W,
                     const double* K, const double* bias, size_t Cout,
                     double* Y) {
    const size_t plane = H * W;
#pragma omp parallel for collapse(2) schedule(static)
    for (i64 b = 0; b < static_cast<i64>(B); ++b) {
        for (i64 oc = 0; oc < static_cast<i64>(Cout); ++oc) {
            double* yp = Y + (b * Cout + oc) * plane;
            std::fill(yp, yp + plane, bias[oc]);
            for (size_t ic = 0; ic < Cin; ++ic) {
                const double* xp = X + (b * Cin + ic) * plane;
                const double* kp = K + (oc * Cin + ic) * 9;
                for (size_t ky = 0; ky < 3; ++ky) {
                    const size_t y0 = ky == 0 ? 1 : 0;
                    const size_t y1 = ky == 2 ? H - 1 : H;
                    for (size_t kx = 0; kx < 3; ++kx) {
                        const double k = kp[ky * 3 + kx];
                        const size_t x0 = kx == 0 ? 1 : 0;
                        const size_t x1 = kx == 2 ? W - 1 : W;
                        for (size_t y = y0; y < y1; ++y) {
                            double* yrow = yp + y * W;
                            const double* xrow = xp + (y + ky - 1) * W;
                            for (size_t x = x0; x < x1; ++x)
                                yrow[x] += k * xrow[x + kx - 1];
                        }
                    }
                }
            }
        }
    }
}

void conv3x3_backward_input(const double* dY, size_t B, size_t Cout, size_t H,
                            size_t W, const double* K, size_t Cin,
                            double* dX) {
    const size_t plane = H * W;
#pragma omp parallel for collapse(2) schedule(static)
    for (i64 b = 0; b < static_cast<i64>(B); ++b) {
        for (i64 ic = 0; ic < static_cast<i64>(Cin); ++ic) {
            double* dxp = dX + (b * Cin + ic) * plane;
            std::fill(dxp, dxp + plane, 0.0);
            for (size_t oc = 0; oc < Cout; ++oc) {
                const double* dyp = dY + (b * Cout + oc) * plane;
                const double* kp = K + (oc * Cin + ic) * 9;
                for (size_t ky = 0; ky < 3; ++ky) {
                    const size_t y0 = ky == 0 ? 1 : 0;
                    const size_t y1 = ky == 2 ? H - 1 : H;
                    for (size_t kx = 0; kx < 3; ++kx) {
                        const double k = kp[ky * 3 + kx];
                        const size_t x0 = kx == 0 ? 1 : 0;
                        const size_t x1 = kx == 2 ? W - 1 : W;
                        for (size_t y = y0; y < y1; ++y) {
                            const double* dyrow = dyp + y * W;
                            double* dxrow = dxp + (y + ky - 1) * W;
                            for (size_t x = x0; x < x1; ++x)
                                dxrow[x + kx - 1] += k * dyrow[x];
                        }
                    }
                }
            }
        }
    }
}

void conv3x3_backward_params(const double* dY, const double* X, size_t B,
                             size_t Cin, size_t Cout, size_t H, size_t W,
                             double* dK, double* db) {
    const size_t plane = H * W;
#pragma omp parallel for collapse(2) schedule(static)
    for (i64 oc = 0; oc < static_cast<i64>(Cout); ++oc) {
        for (i64 ic = 0; ic < static_cast<i64>(Cin); ++ic) {
            double* dkp = dK + (oc * Cin + ic) * 9;
            std::fill(dkp, dkp + 9, 0.0);
            for (size_t b = 0; b < B; ++b) {
                const double* dyp = dY + (b * Cout + oc) * plane;
                const double* xp = X + (b * Cin + ic) * plane;
                for (size_t ky = 0; ky < 3; ++ky) {
                    const size_t y0 = ky == 0 ? 1 : 0;
                    const size_t y1 = ky == 2 ? H - 1 : H;
                    for (size_t kx = 0; kx < 3; ++kx) {
                        const size_t x0 = kx == 0 ? 1 : 0;
                        const size_t x1 = kx == 2 ? W - 1 : W;
                        double acc = 0.0;
                        for (size_t y = y0; y < y1; ++y) {
                            const double* dyrow = dyp + y * W;
                            const double* xrow = xp + (y + ky - 1) * W;
                            double s = 0.0;
                            for (size_t x = x0; x < x1; ++x)
                                s += dyrow[x] * xrow[x + kx - 1];
                            acc += s;
                        }
                        dkp[ky * 3 + kx] += acc;
                    }
                }
            }
        }
    }
#pragma omp parallel for schedule(static)
    for (i64 oc = 0; oc < static_cast<i64>(Cout); ++oc) {
        double acc = 0.0;
        for (size_t b = 0; b < B; ++b) {
            const double* dyp = dY + (b * Cout + oc) * plane;
            for (size_t p = 0; p < plane; ++p) acc += dyp[p];
        }
        db[oc] = acc;
    }
}

void maxpool2_forward(const double* X, size_t B, size_t C, size_t H, size_t W,
                      double* Y, std::uint32_t* argmax) {
    const size_t OH = H / 2, OW = W / 2;
    const size_t plane = H * W, oplane = OH * OW;
#pragma omp parallel for collapse(2) schedule(static)
    for (i64 b = 0; b < static_cast<i64>(B); ++b) {
        for (i64 c = 0; c < static_cast<i64>(C); ++c) {
            const double* xp = X + (b * C + c) * plane;
            double* yp = Y + (b * C + c) * oplane;
            std::uint32_t* ap = argmax + (b * C + c) * oplane;
            for (size_t oy = 0; oy < OH; ++oy) {
                for (size_t ox = 0; ox < OW; ++ox) {
                    size_t best = (2 * oy) * W + 2 * ox;
                    double bv = xp[best];
                    const size_t cand[3] = {(2 * oy) * W + 2 * ox + 1,
                                            (2 * oy + 1) * W + 2 * ox,
                                            (2 * oy + 1) * W + 2 * ox + 1};
                    for (size_t k = 0; k < 3; ++k) {
                        if (xp[cand[k]] > bv) {
                            bv = xp[cand[k]];
                            best = cand[k];
                        }
                    }
                    yp[oy * OW + ox] = bv;
                    ap[oy * OW + ox] = static_cast<std::uint32_t>(best);
                }
            }
        }
    }
}

void maxpool2_backward(const double* dY, size_t B, size_t C, size_t H,
                       size_t W, const std::uint32_t* argmax, double* dX) {
    const size_t OH = H / 2, OW = W / 2;
    const size_t plane = H * W, oplane = OH * OW;
#pragma omp parallel for collapse(2) schedule(static)
    for (i64 b = 0; b < static_cast<i64>(B); ++b) {
        for (i64 c = 0; c < static_cast<i64>(C); ++c) {
            const double* dyp = dY + (b * C + c) * oplane;
            const std::uint32_t* ap = argmax + (b * C + c) * oplane;
            double* dxp = dX + (b * C + c) * plane;
            for (size_t p = 0; p < oplane; ++p) dxp[ap[p]] += dyp[p];
        }
    }
}

}  // namespace topk::kernels
