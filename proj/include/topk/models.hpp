#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "topk/nn.hpp"
#include "topk/rng.hpp"
#include "topk/tensor.hpp"

namespace topk {

enum class PredictMode {
    kPoint,          // deterministic forward, dropout off
    kDropoutSample,  // one stochastic forward per call (posterior sample)
};

struct TrainingPair {
    std::vector<double> x;
    double y = 0.0;
};

struct ModelSpec {
    std::string kind = "linear";  // linear | neural_linear | mlp | cnn
    std::size_t hidden = 100;
    double dropout = 0.0;
    std::size_t batch_size = 64;
    double ridge_lambda = 1.0;
};

// Trainable scorer mapping a context vector to an estimated expected reward.
class RewardModel {
public:
    virtual ~RewardModel() = default;

    virtual std::size_t input_dim() const = 0;
    virtual double predict(std::span<const double> x, PredictMode mode,
                           Rng& rng) = 0;
    // scores `count` contexts stored contiguously; neural models batch this
    virtual std::vector<double> predict_batch(const double* X,
                                              std::size_t count,
                                              PredictMode mode, Rng& rng);
    virtual std::vector<double> fit(const std::vector<TrainingPair>& pairs,
                                    int epochs, Rng& rng) = 0;
    // per-observation hook called once per selected slot each round; only
    // the neural-linear head uses it (its ridge head absorbs every new
    // observation immediately, staying optimal between trunk refits)
    virtual void observe(const TrainingPair&) {}
    // parameter tensors in a stable order, for checkpointing
    virtual std::vector<std::pair<std::string, Tensor*>> named_parameters() = 0;
};

// Surface for probing a model's training objective, used by gradient_check.
class DifferentiableModel {
public:
    virtual ~DifferentiableModel() = default;
    virtual std::size_t parameter_count() const = 0;
    virtual double parameter(std::size_t i) const = 0;
    virtual void set_parameter(std::size_t i, double v) = 0;
    // mean squared error over the pairs, dropout off
    virtual double training_loss(const std::vector<TrainingPair>& pairs) = 0;
    virtual std::vector<double> training_gradient(
        const std::vector<TrainingPair>& pairs) = 0;
};

// Ridge regression on [x; 1] with accumulated normal-equation statistics.
// fit() consumes only pairs beyond what it has already absorbed (training
// sets in the bandit loop are append-only); reset() starts over.
class LinearModel : public RewardModel, public DifferentiableModel {
public:
    LinearModel(std::size_t dim, double ridge_lambda);

    std::size_t input_dim() const override { return dim_; }
    double predict(std::span<const double> x, PredictMode mode,
                   Rng& rng) override;
    std::vector<double> fit(const std::vector<TrainingPair>& pairs, int epochs,
                            Rng& rng) override;
    std::vector<std::pair<std::string, Tensor*>> named_parameters() override;

    std::size_t parameter_count() const override { return dim_ + 1; }
    double parameter(std::size_t i) const override { return weights_[i]; }
    void set_parameter(std::size_t i, double v) override { weights_[i] = v; }
    double training_loss(const std::vector<TrainingPair>& pairs) override;
    std::vector<double> training_gradient(
        const std::vector<TrainingPair>& pairs) override;

    void reset();
    void absorb(std::span<const double> x, double y);  // rank-one stat update
    void solve();  // (A)w = b via Cholesky

    const Tensor& weights() const { return weights_; }
    double residual_norm() const;  // ||A w - b||
    double stats_rhs_norm() const;  // ||b||
    std::size_t consumed() const;

private:
    std::size_t dim_;
    double lambda_;
    Tensor weights_;  // [dim+1], bias last
    Tensor stats_a_;  // [(dim+1)*(dim+1)]
    Tensor stats_b_;  // [dim+1]
    Tensor consumed_tag_;  // 1-element pair counter; checkpointed with the rest
};

class MlpModel : public RewardModel, public DifferentiableModel {
public:
    MlpModel(std::size_t input_dim, std::size_t hidden, double dropout,
             std::size_t batch_size, Rng& init_rng);

    std::size_t input_dim() const override { return net_.input_dim(); }
    double predict(std::span<const double> x, PredictMode mode,
                   Rng& rng) override;
    std::vector<double> predict_batch(const double* X, std::size_t count,
                                      PredictMode mode, Rng& rng) override;
    std::vector<double> fit(const std::vector<TrainingPair>& pairs, int epochs,
                            Rng& rng) override;
    std::vector<std::pair<std::string, Tensor*>> named_parameters() override;

    std::size_t parameter_count() const override;
    double parameter(std::size_t i) const override;
    void set_parameter(std::size_t i, double v) override;
    double training_loss(const std::vector<TrainingPair>& pairs) override;
    std::vector<double> training_gradient(
        const std::vector<TrainingPair>& pairs) override;

    std::vector<double> hidden_features(std::span<const double> x);
    std::size_t hidden() const { return net_.hidden(); }
    nn::MlpNetwork& network() { return net_; }

private:
    nn::MlpNetwork net_;
    nn::AdamState adam_;
    std::size_t batch_size_;
};

class CnnModel : public RewardModel, public DifferentiableModel {
public:
    CnnModel(std::size_t input_dim, std::size_t hidden, double dropout,
             std::size_t batch_size, Rng& init_rng);

    std::size_t input_dim() const override { return net_.input_dim(); }
    double predict(std::span<const double> x, PredictMode mode,
                   Rng& rng) override;
    std::vector<double> predict_batch(const double* X, std::size_t count,
                                      PredictMode mode, Rng& rng) override;
    std::vector<double> fit(const std::vector<TrainingPair>& pairs, int epochs,
                            Rng& rng) override;
    std::vector<std::pair<std::string, Tensor*>> named_parameters() override;

    std::size_t parameter_count() const override;
    double parameter(std::size_t i) const override;
    void set_parameter(std::size_t i, double v) override;
    double training_loss(const std::vector<TrainingPair>& pairs) override;
    std::vector<double> training_gradient(
        const std::vector<TrainingPair>& pairs) override;

    std::vector<double> hidden_features(std::span<const double> x);
    std::size_t hidden() const { return net_.hidden(); }
    nn::CnnNetwork& network() { return net_; }

private:
    nn::CnnNetwork net_;
    nn::AdamState adam_;
    std::size_t batch_size_;
};

// Greedy baseline: a neural trunk supplies last-hidden-layer features to a
// ridge head. Each fit retrains the trunk on the full pair set, re-extracts
// every pair's features, and re-solves the head, so head and features always
// come from the same trunk.
class NeuralLinearModel : public RewardModel {
public:
    NeuralLinearModel(std::unique_ptr<MlpModel> trunk, double ridge_lambda);
    NeuralLinearModel(std::unique_ptr<CnnModel> trunk, double ridge_lambda);

    std::size_t input_dim() const override;
    double predict(std::span<const double> x, PredictMode mode,
                   Rng& rng) override;
    std::vector<double> fit(const std::vector<TrainingPair>& pairs, int epochs,
                            Rng& rng) override;
    void observe(const TrainingPair& pair) override;
    std::vector<std::pair<std::string, Tensor*>> named_parameters() override;

    std::vector<double> features(std::span<const double> x);
    const LinearModel& head() const { return head_; }

private:
    std::vector<double> trunk_features(std::span<const double> x);

    std::unique_ptr<MlpModel> mlp_trunk_;
    std::unique_ptr<CnnModel> cnn_trunk_;
    LinearModel head_;
};

std::unique_ptr<RewardModel> make_model(const ModelSpec& spec,
                                        std::size_t input_dim, Rng& init_rng);

// Max relative error between analytic gradients and central finite
// differences on probe_count randomly chosen parameters. Dropout is off.
double gradient_check(DifferentiableModel& model,
                      const std::vector<TrainingPair>& pairs,
                      std::size_t probe_count, double h, Rng& rng);

// Versioned binary weight blob; see README for the layout.
void save_checkpoint(RewardModel& model, std::ostream& out);
void load_checkpoint(RewardModel& model, std::istream& in);
void save_checkpoint_file(RewardModel& model, const std::string& path);
void load_checkpoint_file(RewardModel& model, const std::string& path);

}  // namespace topk
