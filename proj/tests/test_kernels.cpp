#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <vector>

#include "topk/kernels.hpp"
#include "topk/rng.hpp"

using namespace topk;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng, double lo = -1.0,
                               double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b,
                 double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::fabs(a[i]), std::fabs(b[i]), 1.0});
        CHECK(std::fabs(a[i] - b[i]) / denom <= tol);
    }
}

}  // namespace

TEST_CASE("dense kernels match the serial reference") {
    Rng rng(101);
    const std::size_t B = 17, in = 53, out = 31;
    const auto X = random_vec(B * in, rng);
    const auto W = random_vec(out * in, rng);
    const auto bias = random_vec(out, rng);
    const auto dY = random_vec(B * out, rng);

    std::vector<double> y1(B * out), y2(B * out);
    kernels::dense_forward(X.data(), B, in, W.data(), bias.data(), out,
                           y1.data());
    kernels::serial::dense_forward(X.data(), B, in, W.data(), bias.data(), out,
                                   y2.data());
    check_close(y1, y2, 1e-13);

    std::vector<double> dx1(B * in), dx2(B * in);
    kernels::dense_backward_input(dY.data(), B, out, W.data(), in, dx1.data());
    kernels::serial::dense_backward_input(dY.data(), B, out, W.data(), in,
                                          dx2.data());
    check_close(dx1, dx2, 1e-13);

    std::vector<double> dw1(out * in), dw2(out * in), db1(out), db2(out);
    kernels::dense_backward_params(dY.data(), B, out, X.data(), in, dw1.data(),
                                   db1.data());
    kernels::serial::dense_backward_params(dY.data(), B, out, X.data(), in,
                                           dw2.data(), db2.data());
    check_close(dw1, dw2, 1e-13);
    check_close(db1, db2, 1e-13);
}

TEST_CASE("conv kernels match the serial reference") {
    Rng rng(202);
    for (auto [H, W] : {std::pair<std::size_t, std::size_t>{7, 7},
                        {14, 14},
                        {5, 9}}) {
        const std::size_t B = 6, Cin = 3, Cout = 5;
        const auto X = random_vec(B * Cin * H * W, rng);
        const auto K = random_vec(Cout * Cin * 9, rng);
        const auto bias = random_vec(Cout, rng);
        const auto dY = random_vec(B * Cout * H * W, rng);

        std::vector<double> y1(B * Cout * H * W), y2(y1.size());
        kernels::conv3x3_forward(X.data(), B, Cin, H, W, K.data(), bias.data(),
                                 Cout, y1.data());
        kernels::serial::conv3x3_forward(X.data(), B, Cin, H, W, K.data(),
                                         bias.data(), Cout, y2.data());
        check_close(y1, y2, 1e-13);

        std::vector<double> dx1(B * Cin * H * W), dx2(dx1.size());
        kernels::conv3x3_backward_input(dY.data(), B, Cout, H, W, K.data(),
                                        Cin, dx1.data());
        kernels::serial::conv3x3_backward_input(dY.data(), B, Cout, H, W,
                                                K.data(), Cin, dx2.data());
        check_close(dx1, dx2, 1e-13);

        std::vector<double> dk1(Cout * Cin * 9), dk2(dk1.size()), db1(Cout),
            db2(Cout);
        kernels::conv3x3_backward_params(dY.data(), X.data(), B, Cin, Cout, H,
                                         W, dk1.data(), db1.data());
        kernels::serial::conv3x3_backward_params(dY.data(), X.data(), B, Cin,
                                                 Cout, H, W, dk2.data(),
                                                 db2.data());
        check_close(dk1, dk2, 1e-13);
        check_close(db1, db2, 1e-13);
    }
}

TEST_CASE("maxpool kernels match the serial reference exactly") {
    Rng rng(303);
    const std::size_t B = 5, C = 4, H = 7, W = 9;  // odd dims drop the edge
    const auto X = random_vec(B * C * H * W, rng);
    const std::size_t on = B * C * (H / 2) * (W / 2);

    std::vector<double> y1(on), y2(on);
    std::vector<std::uint32_t> a1(on), a2(on);
    kernels::maxpool2_forward(X.data(), B, C, H, W, y1.data(), a1.data());
    kernels::serial::maxpool2_forward(X.data(), B, C, H, W, y2.data(),
                                      a2.data());
    CHECK(y1 == y2);
    CHECK(a1 == a2);

    const auto dY = random_vec(on, rng);
    std::vector<double> dx1(B * C * H * W, 0.0), dx2(B * C * H * W, 0.0);
    kernels::maxpool2_backward(dY.data(), B, C, H, W, a1.data(), dx1.data());
    kernels::serial::maxpool2_backward(dY.data(), B, C, H, W, a2.data(),
                                       dx2.data());
    CHECK(dx1 == dx2);
}

TEST_CASE("parallel kernels are bit-identical across thread counts") {
    Rng rng(404);
    const std::size_t B = 24, in = 77, out = 40;
    const auto X = random_vec(B * in, rng);
    const auto W = random_vec(out * in, rng);
    const auto bias = random_vec(out, rng);

    std::vector<std::vector<double>> results;
    for (int threads : {1, 2, 4}) {
        omp_set_num_threads(threads);
        std::vector<double> y(B * out);
        kernels::dense_forward(X.data(), B, in, W.data(), bias.data(), out,
                               y.data());
        results.push_back(std::move(y));
    }
    omp_set_num_threads(omp_get_num_procs());
    CHECK(results[0] == results[1]);
    CHECK(results[0] == results[2]);

    const std::size_t Cin = 2, Cout = 3, H = 12, Wd = 12;
    const auto Xc = random_vec(B * Cin * H * Wd, rng);
    const auto K = random_vec(Cout * Cin * 9, rng);
    const auto cbias = random_vec(Cout, rng);
    std::vector<std::vector<double>> conv_results;
    for (int threads : {1, 2, 4}) {
        omp_set_num_threads(threads);
        std::vector<double> y(B * Cout * H * Wd);
        kernels::conv3x3_forward(Xc.data(), B, Cin, H, Wd, K.data(),
                                 cbias.data(), Cout, y.data());
        conv_results.push_back(std::move(y));
    }
    omp_set_num_threads(omp_get_num_procs());
    CHECK(conv_results[0] == conv_results[1]);
    CHECK(conv_results[0] == conv_results[2]);
}

TEST_CASE("conv reproduces a hand-computed 3x3 example") {
    // single 3x3 input, identity-ish kernel: output at the center is the
    // full cross-correlation, corners see the padded zeros
    const std::size_t B = 1, Cin = 1, Cout = 1, H = 3, W = 3;
    std::vector<double> X{1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::vector<double> K{0, 0, 0, 0, 1, 0, 0, 0, 0};  // center tap
    std::vector<double> bias{0.5};
    std::vector<double> Y(9);
    kernels::conv3x3_forward(X.data(), B, Cin, H, W, K.data(), bias.data(),
                             Cout, Y.data());
    for (int i = 0; i < 9; ++i) CHECK(Y[i] == doctest::Approx(X[i] + 0.5));

    std::vector<double> K2{0, 0, 0, 0, 0, 1, 0, 0, 0};  // right tap
    kernels::conv3x3_forward(X.data(), B, Cin, H, W, K2.data(), bias.data(),
                             Cout, Y.data());
    // each output sees its right neighbour; last column sees padding
    CHECK(Y[0] == doctest::Approx(2.5));
    CHECK(Y[1] == doctest::Approx(3.5));
    CHECK(Y[2] == doctest::Approx(0.5));
}
