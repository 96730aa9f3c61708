#include "topk/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "topk/errors.hpp"
#include "topk/kernels.hpp"

namespace topk::nn {

namespace {

void relu_inplace(double* a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) a[i] = a[i] > 0.0 ? a[i] : 0.0;
}

// inverted dropout: zero with probability rate, scale survivors by
// 1/(1-rate) so the mask expectation is the identity
void dropout_inplace(double* a, std::size_t n, double rate, Rng& rng) {
    const double inv = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < n; ++i)
        a[i] = rng.uniform() < rate ? 0.0 : a[i] * inv;
}

// combined ReLU/dropout backward; activations were stored post-dropout, so
// a == 0 marks both dead units and dropped units
void mask_backward_inplace(double* g, const double* a, std::size_t n,
                           double scale) {
    for (std::size_t i = 0; i < n; ++i) g[i] = a[i] > 0.0 ? g[i] * scale : 0.0;
}

void resize(Tensor& t, std::initializer_list<std::size_t> shape) {
    std::vector<std::size_t> s(shape);
    if (t.shape != s) t = Tensor(s);
}

}  // namespace

AdamState::AdamState(AdamConfig cfg, const std::vector<Tensor*>& params)
    : cfg_(cfg) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const Tensor* p : params) {
        m_.emplace_back(p->shape);
        v_.emplace_back(p->shape);
    }
}

void AdamState::update(const std::vector<Tensor*>& params,
                       const std::vector<Tensor*>& grads) {
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        double* w = params[k]->ptr();
        const double* g = grads[k]->ptr();
        double* m = m_[k].ptr();
        double* v = v_[k].ptr();
        const std::size_t n = params[k]->numel();
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            w[i] -= cfg_.learning_rate * (m[i] / bc1) /
                    (std::sqrt(v[i] / bc2) + cfg_.eps_hat);
        }
    }
}

void DenseLayer::init(std::size_t in_dim, std::size_t out_dim, bool is_output,
                      Rng& rng) {
    in = in_dim;
    out = out_dim;
    W = Tensor({out, in});
    b = Tensor({out});
    gW = Tensor({out, in});
    gb = Tensor({out});
    const double bound =
        is_output ? 0.01 : std::sqrt(6.0 / static_cast<double>(in));
    for (double& w : W.data) w = rng.uniform(-bound, bound);
}

void ConvLayer::init(std::size_t cin_, std::size_t cout_, Rng& rng) {
    cin = cin_;
    cout = cout_;
    K = Tensor({cout, cin, 3, 3});
    b = Tensor({cout});
    gK = Tensor({cout, cin, 3, 3});
    gb = Tensor({cout});
    const double bound = std::sqrt(6.0 / static_cast<double>(cin * 9));
    for (double& w : K.data) w = rng.uniform(-bound, bound);
}

// ---------------------------------------------------------------------------
// MLP

MlpNetwork::MlpNetwork(std::size_t input_dim, std::size_t hidden,
                       double dropout_rate, Rng& rng)
    : input_dim_(input_dim), hidden_(hidden), dropout_rate_(dropout_rate) {
    l1.init(input_dim, hidden, false, rng);
    l2.init(hidden, hidden, false, rng);
    l3.init(hidden, 1, true, rng);
}

void MlpNetwork::ensure_ws(std::size_t B) {
    if (ws_.B == B) return;
    ws_.B = B;
    resize(ws_.x, {B, input_dim_});
    resize(ws_.a1, {B, hidden_});
    resize(ws_.a2, {B, hidden_});
    resize(ws_.y, {B});
    resize(ws_.g1, {B, hidden_});
    resize(ws_.g2, {B, hidden_});
    resize(ws_.dy, {B});
}

void MlpNetwork::forward(const double* X, std::size_t B, bool stochastic,
                         Rng* rng) {
    ensure_ws(B);
    std::memcpy(ws_.x.ptr(), X, B * input_dim_ * sizeof(double));
    const bool drop = stochastic && dropout_rate_ > 0.0;
    ws_.drop_scale = drop ? 1.0 / (1.0 - dropout_rate_) : 1.0;

    kernels::dense_forward(ws_.x.ptr(), B, input_dim_, l1.W.ptr(), l1.b.ptr(),
                           hidden_, ws_.a1.ptr());
    relu_inplace(ws_.a1.ptr(), B * hidden_);
    if (drop) dropout_inplace(ws_.a1.ptr(), B * hidden_, dropout_rate_, *rng);

    kernels::dense_forward(ws_.a1.ptr(), B, hidden_, l2.W.ptr(), l2.b.ptr(),
                           hidden_, ws_.a2.ptr());
    relu_inplace(ws_.a2.ptr(), B * hidden_);
    if (drop) dropout_inplace(ws_.a2.ptr(), B * hidden_, dropout_rate_, *rng);

    kernels::dense_forward(ws_.a2.ptr(), B, hidden_, l3.W.ptr(), l3.b.ptr(), 1,
                           ws_.y.ptr());
}

double MlpNetwork::backward(const double* targets, std::size_t B) {
    double sse = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        const double r = ws_.y[b] - targets[b];
        sse += r * r;
        ws_.dy[b] = 2.0 * r / static_cast<double>(B);
    }

    kernels::dense_backward_params(ws_.dy.ptr(), B, 1, ws_.a2.ptr(), hidden_,
                                   l3.gW.ptr(), l3.gb.ptr());
    kernels::dense_backward_input(ws_.dy.ptr(), B, 1, l3.W.ptr(), hidden_,
                                  ws_.g2.ptr());
    mask_backward_inplace(ws_.g2.ptr(), ws_.a2.ptr(), B * hidden_,
                          ws_.drop_scale);

    kernels::dense_backward_params(ws_.g2.ptr(), B, hidden_, ws_.a1.ptr(),
                                   hidden_, l2.gW.ptr(), l2.gb.ptr());
    kernels::dense_backward_input(ws_.g2.ptr(), B, hidden_, l2.W.ptr(),
                                  hidden_, ws_.g1.ptr());
    mask_backward_inplace(ws_.g1.ptr(), ws_.a1.ptr(), B * hidden_,
                          ws_.drop_scale);

    kernels::dense_backward_params(ws_.g1.ptr(), B, hidden_, ws_.x.ptr(),
                                   input_dim_, l1.gW.ptr(), l1.gb.ptr());
    return sse;
}

std::vector<double> MlpNetwork::hidden_features(const double* x) {
    forward(x, 1, false, nullptr);
    return std::vector<double>(ws_.a2.ptr(), ws_.a2.ptr() + hidden_);
}

std::vector<Tensor*> MlpNetwork::parameters() {
    return {&l1.W, &l1.b, &l2.W, &l2.b, &l3.W, &l3.b};
}

std::vector<Tensor*> MlpNetwork::gradients() {
    return {&l1.gW, &l1.gb, &l2.gW, &l2.gb, &l3.gW, &l3.gb};
}

// ---------------------------------------------------------------------------
// CNN

CnnNetwork::CnnNetwork(std::size_t hidden, double dropout_rate, Rng& rng)
    : hidden_(hidden), dropout_rate_(dropout_rate) {
    c1.init(1, kChannels[0], rng);
    c2.init(kChannels[0], kChannels[1], rng);
    c3.init(kChannels[1], kChannels[2], rng);
    d1.init(kFlat, hidden, false, rng);
    d2.init(hidden, 1, true, rng);
}

void CnnNetwork::ensure_ws(std::size_t B) {
    if (ws_.B == B) return;
    ws_.B = B;
    resize(ws_.x, {B, 1, 28, 28});
    resize(ws_.z1, {B, 8, 28, 28});
    resize(ws_.a1, {B, 8, 14, 14});
    resize(ws_.z2, {B, 16, 14, 14});
    resize(ws_.a2, {B, 16, 7, 7});
    resize(ws_.z3, {B, 32, 7, 7});
    resize(ws_.a3, {B, 32, 3, 3});
    resize(ws_.a4, {B, hidden_});
    resize(ws_.y, {B});
    ws_.am1.resize(B * 8 * 14 * 14);
    ws_.am2.resize(B * 16 * 7 * 7);
    ws_.am3.resize(B * 32 * 3 * 3);
    resize(ws_.dy, {B});
    resize(ws_.g4, {B, hidden_});
    resize(ws_.g3, {B, 32, 3, 3});
    resize(ws_.dz3, {B, 32, 7, 7});
    resize(ws_.g2, {B, 16, 7, 7});
    resize(ws_.dz2, {B, 16, 14, 14});
    resize(ws_.g1, {B, 8, 14, 14});
    resize(ws_.dz1, {B, 8, 28, 28});
}

void CnnNetwork::forward(const double* X, std::size_t B, bool stochastic,
                         Rng* rng) {
    ensure_ws(B);
    std::memcpy(ws_.x.ptr(), X, B * 784 * sizeof(double));
    const bool drop = stochastic && dropout_rate_ > 0.0;
    ws_.drop_scale = drop ? 1.0 / (1.0 - dropout_rate_) : 1.0;

    kernels::conv3x3_forward(ws_.x.ptr(), B, 1, 28, 28, c1.K.ptr(), c1.b.ptr(),
                             8, ws_.z1.ptr());
    kernels::maxpool2_forward(ws_.z1.ptr(), B, 8, 28, 28, ws_.a1.ptr(),
                              ws_.am1.data());
    relu_inplace(ws_.a1.ptr(), ws_.a1.numel());

    kernels::conv3x3_forward(ws_.a1.ptr(), B, 8, 14, 14, c2.K.ptr(),
                             c2.b.ptr(), 16, ws_.z2.ptr());
    kernels::maxpool2_forward(ws_.z2.ptr(), B, 16, 14, 14, ws_.a2.ptr(),
                              ws_.am2.data());
    relu_inplace(ws_.a2.ptr(), ws_.a2.numel());

    kernels::conv3x3_forward(ws_.a2.ptr(), B, 16, 7, 7, c3.K.ptr(), c3.b.ptr(),
                             32, ws_.z3.ptr());
    kernels::maxpool2_forward(ws_.z3.ptr(), B, 32, 7, 7, ws_.a3.ptr(),
                              ws_.am3.data());
    relu_inplace(ws_.a3.ptr(), ws_.a3.numel());

    kernels::dense_forward(ws_.a3.ptr(), B, kFlat, d1.W.ptr(), d1.b.ptr(),
                           hidden_, ws_.a4.ptr());
    relu_inplace(ws_.a4.ptr(), B * hidden_);
    if (drop) dropout_inplace(ws_.a4.ptr(), B * hidden_, dropout_rate_, *rng);

    kernels::dense_forward(ws_.a4.ptr(), B, hidden_, d2.W.ptr(), d2.b.ptr(), 1,
                           ws_.y.ptr());
}

double CnnNetwork::backward(const double* targets, std::size_t B) {
    double sse = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        const double r = ws_.y[b] - targets[b];
        sse += r * r;
        ws_.dy[b] = 2.0 * r / static_cast<double>(B);
    }

    kernels::dense_backward_params(ws_.dy.ptr(), B, 1, ws_.a4.ptr(), hidden_,
                                   d2.gW.ptr(), d2.gb.ptr());
    kernels::dense_backward_input(ws_.dy.ptr(), B, 1, d2.W.ptr(), hidden_,
                                  ws_.g4.ptr());
    mask_backward_inplace(ws_.g4.ptr(), ws_.a4.ptr(), B * hidden_,
                          ws_.drop_scale);

    kernels::dense_backward_params(ws_.g4.ptr(), B, hidden_, ws_.a3.ptr(),
                                   kFlat, d1.gW.ptr(), d1.gb.ptr());
    kernels::dense_backward_input(ws_.g4.ptr(), B, hidden_, d1.W.ptr(), kFlat,
                                  ws_.g3.ptr());
    mask_backward_inplace(ws_.g3.ptr(), ws_.a3.ptr(), ws_.g3.numel(), 1.0);

    ws_.dz3.fill(0.0);
    kernels::maxpool2_backward(ws_.g3.ptr(), B, 32, 7, 7, ws_.am3.data(),
                               ws_.dz3.ptr());
    kernels::conv3x3_backward_params(ws_.dz3.ptr(), ws_.a2.ptr(), B, 16, 32, 7,
                                     7, c3.gK.ptr(), c3.gb.ptr());
    kernels::conv3x3_backward_input(ws_.dz3.ptr(), B, 32, 7, 7, c3.K.ptr(), 16,
                                    ws_.g2.ptr());
    mask_backward_inplace(ws_.g2.ptr(), ws_.a2.ptr(), ws_.g2.numel(), 1.0);

    ws_.dz2.fill(0.0);
    kernels::maxpool2_backward(ws_.g2.ptr(), B, 16, 14, 14, ws_.am2.data(),
                               ws_.dz2.ptr());
    kernels::conv3x3_backward_params(ws_.dz2.ptr(), ws_.a1.ptr(), B, 8, 16, 14,
                                     14, c2.gK.ptr(), c2.gb.ptr());
    kernels::conv3x3_backward_input(ws_.dz2.ptr(), B, 16, 14, 14, c2.K.ptr(),
                                    8, ws_.g1.ptr());
    mask_backward_inplace(ws_.g1.ptr(), ws_.a1.ptr(), ws_.g1.numel(), 1.0);

    ws_.dz1.fill(0.0);
    kernels::maxpool2_backward(ws_.g1.ptr(), B, 8, 28, 28, ws_.am1.data(),
                               ws_.dz1.ptr());
    kernels::conv3x3_backward_params(ws_.dz1.ptr(), ws_.x.ptr(), B, 1, 8, 28,
                                     28, c1.gK.ptr(), c1.gb.ptr());
    return sse;
}

std::vector<double> CnnNetwork::hidden_features(const double* x) {
    forward(x, 1, false, nullptr);
    return std::vector<double>(ws_.a4.ptr(), ws_.a4.ptr() + hidden_);
}

std::vector<Tensor*> CnnNetwork::parameters() {
    return {&c1.K, &c1.b, &c2.K, &c2.b, &c3.K, &c3.b,
            &d1.W, &d1.b, &d2.W, &d2.b};
}

std::vector<Tensor*> CnnNetwork::gradients() {
    return {&c1.gK, &c1.gb, &c2.gK, &c2.gb, &c3.gK,
            &c3.gb, &d1.gW, &d1.gb, &d2.gW, &d2.gb};
}

// ---------------------------------------------------------------------------
// Training loop

template <typename Net>
std::vector<double> fit_mse(Net& net, const double* X, const double* y,
                            std::size_t count, int epochs,
                            std::size_t batch_size, AdamState& adam,
                            Rng& rng) {
    const std::size_t d = net.input_dim();
    const std::size_t B = std::min<std::size_t>(batch_size, count);
    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;

    std::vector<double> bx(B * d), bt(B);
    std::vector<double> losses;
    losses.reserve(static_cast<std::size_t>(epochs));
    const auto params = net.parameters();
    const auto grads = net.gradients();

    for (int e = 0; e < epochs; ++e) {
        rng.shuffle(order);
        double sse = 0.0;
        for (std::size_t start = 0; start < count; start += B) {
            const std::size_t bsz = std::min(B, count - start);
            for (std::size_t k = 0; k < bsz; ++k) {
                std::memcpy(&bx[k * d], X + order[start + k] * d,
                            d * sizeof(double));
                bt[k] = y[order[start + k]];
            }
            net.forward(bx.data(), bsz, true, &rng);
            sse += net.backward(bt.data(), bsz);
            adam.update(params, grads);
        }
        const double epoch_loss = sse / static_cast<double>(count);
        if (!std::isfinite(epoch_loss))
            throw DivergedTrainingError(
                "training diverged: non-finite loss at epoch " +
                    std::to_string(e),
                e);
        losses.push_back(epoch_loss);
    }
    return losses;
}

template std::vector<double> fit_mse<MlpNetwork>(MlpNetwork&, const double*,
                                                 const double*, std::size_t,
                                                 int, std::size_t, AdamState&,
                                                 Rng&);
template std::vector<double> fit_mse<CnnNetwork>(CnnNetwork&, const double*,
                                                 const double*, std::size_t,
                                                 int, std::size_t, AdamState&,
                                                 Rng&);

}  // namespace topk::nn
