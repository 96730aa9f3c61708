#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "topk/rng.hpp"
#include "topk/tensor.hpp"

// Minimal feed-forward engine: dense and 3x3-conv layers, ReLU, inverted
// dropout, Adam. Everything is double precision and batch-first. Hidden
// activations are stored post-ReLU/post-dropout; a zero activation therefore
// encodes "no gradient flows here", which is what the backward passes key on.

namespace topk::nn {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_hat = 1e-8;
};

class AdamState {
public:
    AdamState() = default;
    AdamState(AdamConfig cfg, const std::vector<Tensor*>& params);

    void update(const std::vector<Tensor*>& params,
                const std::vector<Tensor*>& grads);

    long step() const { return step_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::vector<Tensor> m_, v_;
    long step_ = 0;
};

struct DenseLayer {
    std::size_t in = 0, out = 0;
    Tensor W, b, gW, gb;

    // He-style symmetric init for hidden layers; small uniform for the
    // output head (is_output).
    void init(std::size_t in_dim, std::size_t out_dim, bool is_output,
              Rng& rng);
};

struct ConvLayer {
    std::size_t cin = 0, cout = 0;
    Tensor K, b, gK, gb;  // K is [cout, cin, 3, 3]

    void init(std::size_t cin_, std::size_t cout_, Rng& rng);
};

// x -> Dense(d,H) -> ReLU -> drop -> Dense(H,H) -> ReLU -> drop -> Dense(H,1)
class MlpNetwork {
public:
    MlpNetwork() = default;
    MlpNetwork(std::size_t input_dim, std::size_t hidden, double dropout_rate,
               Rng& rng);

    // stochastic=true draws a fresh dropout mask per batch row
    void forward(const double* X, std::size_t B, bool stochastic, Rng* rng);
    // mean-squared-error backward against targets; fills layer gradients and
    // returns the batch sum of squared errors
    double backward(const double* targets, std::size_t B);

    const double* outputs() const { return ws_.y.ptr(); }
    // post-ReLU activations of the last hidden layer for one input row
    std::vector<double> hidden_features(const double* x) ;

    std::vector<Tensor*> parameters();
    std::vector<Tensor*> gradients();

    std::size_t input_dim() const { return input_dim_; }
    std::size_t hidden() const { return hidden_; }
    double dropout_rate() const { return dropout_rate_; }

    DenseLayer l1, l2, l3;

private:
    struct Workspace {
        std::size_t B = 0;
        Tensor x, a1, a2, y;
        Tensor g1, g2, dy;
        double drop_scale = 1.0;
    };

    void ensure_ws(std::size_t B);

    std::size_t input_dim_ = 0, hidden_ = 0;
    double dropout_rate_ = 0.0;
    Workspace ws_;
};

// 28x28x1 -> 3 x [conv3x3 -> maxpool2 -> ReLU] (8/16/32 channels)
//         -> Dense(288,H) -> ReLU -> drop -> Dense(H,1)
class CnnNetwork {
public:
    static constexpr std::size_t kSide = 28;
    static constexpr std::size_t kChannels[3] = {8, 16, 32};
    static constexpr std::size_t kFlat = 32 * 3 * 3;

    CnnNetwork() = default;
    CnnNetwork(std::size_t hidden, double dropout_rate, Rng& rng);

    void forward(const double* X, std::size_t B, bool stochastic, Rng* rng);
    double backward(const double* targets, std::size_t B);

    const double* outputs() const { return ws_.y.ptr(); }
    std::vector<double> hidden_features(const double* x);

    std::vector<Tensor*> parameters();
    std::vector<Tensor*> gradients();

    std::size_t input_dim() const { return kSide * kSide; }
    std::size_t hidden() const { return hidden_; }
    double dropout_rate() const { return dropout_rate_; }

    ConvLayer c1, c2, c3;
    DenseLayer d1, d2;

private:
    struct Workspace {
        std::size_t B = 0;
        Tensor x;            // [B,1,28,28]
        Tensor z1, a1;       // conv1 out [B,8,28,28], pooled+relu [B,8,14,14]
        Tensor z2, a2;       // [B,16,14,14], [B,16,7,7]
        Tensor z3, a3;       // [B,32,7,7],  [B,32,3,3]
        Tensor a4, y;        // dense hidden [B,H], output [B]
        std::vector<std::uint32_t> am1, am2, am3;
        Tensor dy, g4, g3, dz3, g2, dz2, g1, dz1;
        double drop_scale = 1.0;
    };

    void ensure_ws(std::size_t B);

    std::size_t hidden_ = 0;
    double dropout_rate_ = 0.0;
    Workspace ws_;
};

// Shared mini-batch MSE training loop. Returns per-epoch mean losses;
// throws DivergedTrainingError when an epoch loss goes non-finite.
template <typename Net>
std::vector<double> fit_mse(Net& net, const double* X, const double* y,
                            std::size_t count, int epochs,
                            std::size_t batch_size, AdamState& adam, Rng& rng);

}  // namespace topk::nn
