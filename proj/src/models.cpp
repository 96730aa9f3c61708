#include "topk/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "topk/errors.hpp"

namespace topk {

namespace {

void check_pairs(const std::vector<TrainingPair>& pairs, std::size_t dim) {
    if (pairs.empty())
        throw InvalidConfigError("fit requires at least one training pair");
    for (const auto& p : pairs) {
        if (p.x.size() != dim)
            throw InvalidConfigError(
                "training pair dimension " + std::to_string(p.x.size()) +
                " does not match model input dimension " + std::to_string(dim));
    }
}

void check_context(std::span<const double> x, std::size_t dim) {
    if (x.size() != dim)
        throw InvalidConfigError("context length " + std::to_string(x.size()) +
                                 " does not match model input dimension " +
                                 std::to_string(dim));
}

// Cholesky solve of the SPD system M x = rhs, M given row-major n x n.
std::vector<double> cholesky_solve(std::vector<double> m, std::size_t n,
                                   const double* rhs) {
    for (std::size_t j = 0; j < n; ++j) {
        double diag = m[j * n + j];
        for (std::size_t k = 0; k < j; ++k) diag -= m[j * n + k] * m[j * n + k];
        if (!(diag > 0.0))
            throw NumericError(
                "ridge normal equations are not positive definite; "
                "increase ridge_lambda");
        const double ljj = std::sqrt(diag);
        m[j * n + j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = m[i * n + j];
            for (std::size_t k = 0; k < j; ++k)
                v -= m[i * n + k] * m[j * n + k];
            m[i * n + j] = v / ljj;
        }
    }
    std::vector<double> x(rhs, rhs + n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) x[i] -= m[i * n + k] * x[k];
        x[i] /= m[i * n + i];
    }
    for (std::size_t ii = n; ii > 0; --ii) {
        const std::size_t i = ii - 1;
        for (std::size_t k = i + 1; k < n; ++k) x[i] -= m[k * n + i] * x[k];
        x[i] /= m[i * n + i];
    }
    return x;
}

// Chunked point-mode forward keeps workspaces bounded for big pair sets.
template <typename Net>
double mse_over_pairs(Net& net, const std::vector<TrainingPair>& pairs) {
    const std::size_t d = net.input_dim();
    const std::size_t chunk = 256;
    std::vector<double> buf(chunk * d);
    double sse = 0.0;
    for (std::size_t s = 0; s < pairs.size(); s += chunk) {
        const std::size_t c = std::min(chunk, pairs.size() - s);
        for (std::size_t k = 0; k < c; ++k)
            std::memcpy(&buf[k * d], pairs[s + k].x.data(), d * sizeof(double));
        net.forward(buf.data(), c, false, nullptr);
        for (std::size_t k = 0; k < c; ++k) {
            const double r = net.outputs()[k] - pairs[s + k].y;
            sse += r * r;
        }
    }
    return sse / static_cast<double>(pairs.size());
}

template <typename Net>
std::vector<double> flat_gradient(Net& net,
                                  const std::vector<TrainingPair>& pairs) {
    const std::size_t d = net.input_dim();
    std::vector<double> bx(pairs.size() * d), bt(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        std::memcpy(&bx[k * d], pairs[k].x.data(), d * sizeof(double));
        bt[k] = pairs[k].y;
    }
    net.forward(bx.data(), pairs.size(), false, nullptr);
    net.backward(bt.data(), pairs.size());
    std::vector<double> flat;
    for (Tensor* g : net.gradients())
        flat.insert(flat.end(), g->data.begin(), g->data.end());
    return flat;
}

template <typename Net>
double flat_parameter(Net& net, std::size_t i) {
    for (Tensor* p : net.parameters()) {
        if (i < p->numel()) return (*p)[i];
        i -= p->numel();
    }
    throw InvalidConfigError("parameter index out of range");
}

template <typename Net>
void set_flat_parameter(Net& net, std::size_t i, double v) {
    for (Tensor* p : net.parameters()) {
        if (i < p->numel()) {
            (*p)[i] = v;
            return;
        }
        i -= p->numel();
    }
    throw InvalidConfigError("parameter index out of range");
}

template <typename Net>
std::size_t flat_count(const std::vector<Tensor*>& params) {
    std::size_t n = 0;
    for (const Tensor* p : params) n += p->numel();
    return n;
}

}  // namespace

std::vector<double> RewardModel::predict_batch(const double* X,
                                               std::size_t count,
                                               PredictMode mode, Rng& rng) {
    std::vector<double> out(count);
    const std::size_t d = input_dim();
    for (std::size_t i = 0; i < count; ++i)
        out[i] = predict(std::span<const double>(X + i * d, d), mode, rng);
    return out;
}

// ---------------------------------------------------------------------------
// LinearModel

LinearModel::LinearModel(std::size_t dim, double ridge_lambda)
    : dim_(dim), lambda_(ridge_lambda) {
    if (dim == 0) throw InvalidConfigError("linear model needs dim >= 1");
    if (ridge_lambda < 0.0)
        throw InvalidConfigError("ridge_lambda must be >= 0");
    weights_ = Tensor({dim_ + 1});
    consumed_tag_ = Tensor({1});
    reset();
}

void LinearModel::reset() {
    const std::size_t n = dim_ + 1;
    stats_a_ = Tensor({n, n});
    stats_b_ = Tensor({n});
    for (std::size_t i = 0; i < n; ++i) stats_a_[i * n + i] = lambda_;
    weights_.fill(0.0);
    consumed_tag_[0] = 0.0;
}

void LinearModel::absorb(std::span<const double> x, double y) {
    check_context(x, dim_);
    const std::size_t n = dim_ + 1;
    // augmented feature [x; 1]
    auto at = [&](std::size_t i) { return i < dim_ ? x[i] : 1.0; };
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = at(i);
        if (xi != 0.0) {
            double* row = stats_a_.ptr() + i * n;
            for (std::size_t j = 0; j < n; ++j) row[j] += xi * at(j);
        }
        stats_b_[i] += at(i) * y;
    }
    consumed_tag_[0] += 1.0;
}

void LinearModel::solve() {
    const std::size_t n = dim_ + 1;
    auto w = cholesky_solve(stats_a_.data, n, stats_b_.ptr());
    std::copy(w.begin(), w.end(), weights_.data.begin());
}

double LinearModel::predict(std::span<const double> x, PredictMode, Rng&) {
    // no posterior here: dropout-sample mode degenerates to the point value
    check_context(x, dim_);
    double acc = weights_[dim_];
    for (std::size_t i = 0; i < dim_; ++i) acc += weights_[i] * x[i];
    return acc;
}

std::vector<double> LinearModel::fit(const std::vector<TrainingPair>& pairs,
                                     int epochs, Rng&) {
    check_pairs(pairs, dim_);
    const auto consumed = static_cast<std::size_t>(consumed_tag_[0]);
    if (pairs.size() < consumed)
        throw InvalidConfigError(
            "linear model saw a shrinking training set; call reset() when "
            "refitting on unrelated data");
    for (std::size_t i = consumed; i < pairs.size(); ++i)
        absorb(pairs[i].x, pairs[i].y);
    solve();
    // closed form: one loss entry regardless of requested epochs
    (void)epochs;
    return {training_loss(pairs)};
}

double LinearModel::training_loss(const std::vector<TrainingPair>& pairs) {
    check_pairs(pairs, dim_);
    Rng dummy(0);
    double sse = 0.0;
    for (const auto& p : pairs) {
        const double r = predict(p.x, PredictMode::kPoint, dummy) - p.y;
        sse += r * r;
    }
    return sse / static_cast<double>(pairs.size());
}

std::vector<double> LinearModel::training_gradient(
    const std::vector<TrainingPair>& pairs) {
    check_pairs(pairs, dim_);
    Rng dummy(0);
    std::vector<double> grad(dim_ + 1, 0.0);
    const double scale = 2.0 / static_cast<double>(pairs.size());
    for (const auto& p : pairs) {
        const double r = predict(p.x, PredictMode::kPoint, dummy) - p.y;
        for (std::size_t i = 0; i < dim_; ++i) grad[i] += scale * r * p.x[i];
        grad[dim_] += scale * r;
    }
    return grad;
}

double LinearModel::residual_norm() const {
    const std::size_t n = dim_ + 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = -stats_b_[i];
        for (std::size_t j = 0; j < n; ++j)
            r += stats_a_[i * n + j] * weights_[j];
        acc += r * r;
    }
    return std::sqrt(acc);
}

double LinearModel::stats_rhs_norm() const {
    double acc = 0.0;
    for (std::size_t i = 0; i <= dim_; ++i) acc += stats_b_[i] * stats_b_[i];
    return std::sqrt(acc);
}

std::size_t LinearModel::consumed() const {
    return static_cast<std::size_t>(consumed_tag_[0]);
}

std::vector<std::pair<std::string, Tensor*>> LinearModel::named_parameters() {
    return {{"linear.weights", &weights_},
            {"linear.stats_a", &stats_a_},
            {"linear.stats_b", &stats_b_},
            {"linear.consumed", &consumed_tag_}};
}

// ---------------------------------------------------------------------------
// MlpModel

MlpModel::MlpModel(std::size_t input_dim, std::size_t hidden, double dropout,
                   std::size_t batch_size, Rng& init_rng)
    : net_(input_dim, hidden, dropout, init_rng), batch_size_(batch_size) {
    if (batch_size == 0) throw InvalidConfigError("batch_size must be >= 1");
    adam_ = nn::AdamState(nn::AdamConfig{}, net_.parameters());
}

double MlpModel::predict(std::span<const double> x, PredictMode mode,
                         Rng& rng) {
    check_context(x, net_.input_dim());
    net_.forward(x.data(), 1, mode == PredictMode::kDropoutSample, &rng);
    return net_.outputs()[0];
}

std::vector<double> MlpModel::predict_batch(const double* X,
                                            std::size_t count,
                                            PredictMode mode, Rng& rng) {
    net_.forward(X, count, mode == PredictMode::kDropoutSample, &rng);
    return std::vector<double>(net_.outputs(), net_.outputs() + count);
}

std::vector<double> MlpModel::fit(const std::vector<TrainingPair>& pairs,
                                  int epochs, Rng& rng) {
    check_pairs(pairs, net_.input_dim());
    if (epochs < 1) throw InvalidConfigError("epochs must be >= 1");
    const std::size_t d = net_.input_dim();
    std::vector<double> X(pairs.size() * d), y(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        std::memcpy(&X[i * d], pairs[i].x.data(), d * sizeof(double));
        y[i] = pairs[i].y;
    }
    return nn::fit_mse(net_, X.data(), y.data(), pairs.size(), epochs,
                       batch_size_, adam_, rng);
}

std::vector<std::pair<std::string, Tensor*>> MlpModel::named_parameters() {
    return {{"mlp.l1.weight", &net_.l1.W}, {"mlp.l1.bias", &net_.l1.b},
            {"mlp.l2.weight", &net_.l2.W}, {"mlp.l2.bias", &net_.l2.b},
            {"mlp.l3.weight", &net_.l3.W}, {"mlp.l3.bias", &net_.l3.b}};
}

std::size_t MlpModel::parameter_count() const {
    return flat_count<nn::MlpNetwork>(
        const_cast<MlpModel*>(this)->net_.parameters());
}

double MlpModel::parameter(std::size_t i) const {
    return flat_parameter(const_cast<MlpModel*>(this)->net_, i);
}

void MlpModel::set_parameter(std::size_t i, double v) {
    set_flat_parameter(net_, i, v);
}

double MlpModel::training_loss(const std::vector<TrainingPair>& pairs) {
    check_pairs(pairs, net_.input_dim());
    return mse_over_pairs(net_, pairs);
}

std::vector<double> MlpModel::training_gradient(
    const std::vector<TrainingPair>& pairs) {
    check_pairs(pairs, net_.input_dim());
    return flat_gradient(net_, pairs);
}

std::vector<double> MlpModel::hidden_features(std::span<const double> x) {
    check_context(x, net_.input_dim());
    return net_.hidden_features(x.data());
}

// ---------------------------------------------------------------------------
// CnnModel

CnnModel::CnnModel(std::size_t input_dim, std::size_t hidden, double dropout,
                   std::size_t batch_size, Rng& init_rng)
    : net_(hidden, dropout, init_rng), batch_size_(batch_size) {
    if (input_dim != net_.input_dim())
        throw InvalidConfigError(
            "cnn model requires 784-dimensional (28x28) contexts, got " +
            std::to_string(input_dim));
    if (batch_size == 0) throw InvalidConfigError("batch_size must be >= 1");
    adam_ = nn::AdamState(nn::AdamConfig{}, net_.parameters());
}

double CnnModel::predict(std::span<const double> x, PredictMode mode,
                         Rng& rng) {
    check_context(x, net_.input_dim());
    net_.forward(x.data(), 1, mode == PredictMode::kDropoutSample, &rng);
    return net_.outputs()[0];
}

std::vector<double> CnnModel::predict_batch(const double* X,
                                            std::size_t count,
                                            PredictMode mode, Rng& rng) {
    net_.forward(X, count, mode == PredictMode::kDropoutSample, &rng);
    return std::vector<double>(net_.outputs(), net_.outputs() + count);
}

std::vector<double> CnnModel::fit(const std::vector<TrainingPair>& pairs,
                                  int epochs, Rng& rng) {
    check_pairs(pairs, net_.input_dim());
    if (epochs < 1) throw InvalidConfigError("epochs must be >= 1");
    const std::size_t d = net_.input_dim();
    std::vector<double> X(pairs.size() * d), y(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        std::memcpy(&X[i * d], pairs[i].x.data(), d * sizeof(double));
        y[i] = pairs[i].y;
    }
    return nn::fit_mse(net_, X.data(), y.data(), pairs.size(), epochs,
                       batch_size_, adam_, rng);
}

std::vector<std::pair<std::string, Tensor*>> CnnModel::named_parameters() {
    return {{"cnn.c1.kernel", &net_.c1.K}, {"cnn.c1.bias", &net_.c1.b},
            {"cnn.c2.kernel", &net_.c2.K}, {"cnn.c2.bias", &net_.c2.b},
            {"cnn.c3.kernel", &net_.c3.K}, {"cnn.c3.bias", &net_.c3.b},
            {"cnn.d1.weight", &net_.d1.W}, {"cnn.d1.bias", &net_.d1.b},
            {"cnn.d2.weight", &net_.d2.W}, {"cnn.d2.bias", &net_.d2.b}};
}

std::size_t CnnModel::parameter_count() const {
    return flat_count<nn::CnnNetwork>(
        const_cast<CnnModel*>(this)->net_.parameters());
}

double CnnModel::parameter(std::size_t i) const {
    return flat_parameter(const_cast<CnnModel*>(this)->net_, i);
}

void CnnModel::set_parameter(std::size_t i, double v) {
    set_flat_parameter(net_, i, v);
}

double CnnModel::training_loss(const std::vector<TrainingPair>& pairs) {
    check_pairs(pairs, net_.input_dim());
    return mse_over_pairs(net_, pairs);
}

std::vector<double> CnnModel::training_gradient(
    const std::vector<TrainingPair>& pairs) {
    check_pairs(pairs, net_.input_dim());
    return flat_gradient(net_, pairs);
}

std::vector<double> CnnModel::hidden_features(std::span<const double> x) {
    check_context(x, net_.input_dim());
    return net_.hidden_features(x.data());
}

// ---------------------------------------------------------------------------
// NeuralLinearModel

NeuralLinearModel::NeuralLinearModel(std::unique_ptr<MlpModel> trunk,
                                     double ridge_lambda)
    : mlp_trunk_(std::move(trunk)),
      head_(mlp_trunk_->hidden(), ridge_lambda) {}

NeuralLinearModel::NeuralLinearModel(std::unique_ptr<CnnModel> trunk,
                                     double ridge_lambda)
    : cnn_trunk_(std::move(trunk)),
      head_(cnn_trunk_->hidden(), ridge_lambda) {}

std::size_t NeuralLinearModel::input_dim() const {
    return mlp_trunk_ ? mlp_trunk_->input_dim() : cnn_trunk_->input_dim();
}

std::vector<double> NeuralLinearModel::trunk_features(
    std::span<const double> x) {
    return mlp_trunk_ ? mlp_trunk_->hidden_features(x)
                      : cnn_trunk_->hidden_features(x);
}

std::vector<double> NeuralLinearModel::features(std::span<const double> x) {
    check_context(x, input_dim());
    return trunk_features(x);
}

double NeuralLinearModel::predict(std::span<const double> x, PredictMode mode,
                                  Rng& rng) {
    const auto f = features(x);
    return head_.predict(f, mode, rng);
}

std::vector<double> NeuralLinearModel::fit(
    const std::vector<TrainingPair>& pairs, int epochs, Rng& rng) {
    auto losses = mlp_trunk_ ? mlp_trunk_->fit(pairs, epochs, rng)
                             : cnn_trunk_->fit(pairs, epochs, rng);
    // the refit moved the trunk, so every pair's features are re-extracted
    head_.reset();
    for (const auto& p : pairs) head_.absorb(trunk_features(p.x), p.y);
    head_.solve();
    return losses;
}

void NeuralLinearModel::observe(const TrainingPair& pair) {
    head_.absorb(trunk_features(pair.x), pair.y);
    head_.solve();
}

std::vector<std::pair<std::string, Tensor*>>
NeuralLinearModel::named_parameters() {
    auto out = mlp_trunk_ ? mlp_trunk_->named_parameters()
                          : cnn_trunk_->named_parameters();
    for (auto& [name, t] : out) name = "trunk." + name;
    for (auto& [name, t] : head_.named_parameters())
        out.emplace_back("head." + name, t);
    return out;
}

// ---------------------------------------------------------------------------

std::unique_ptr<RewardModel> make_model(const ModelSpec& spec,
                                        std::size_t input_dim, Rng& init_rng) {
    if (spec.kind == "linear")
        return std::make_unique<LinearModel>(input_dim, spec.ridge_lambda);
    if (spec.kind == "mlp")
        return std::make_unique<MlpModel>(input_dim, spec.hidden, spec.dropout,
                                          spec.batch_size, init_rng);
    if (spec.kind == "cnn")
        return std::make_unique<CnnModel>(input_dim, spec.hidden, spec.dropout,
                                          spec.batch_size, init_rng);
    if (spec.kind == "neural_linear") {
        // 784-dim contexts are images; feature trunk follows the data
        if (input_dim == 28 * 28)
            return std::make_unique<NeuralLinearModel>(
                std::make_unique<CnnModel>(input_dim, spec.hidden, spec.dropout,
                                           spec.batch_size, init_rng),
                spec.ridge_lambda);
        return std::make_unique<NeuralLinearModel>(
            std::make_unique<MlpModel>(input_dim, spec.hidden, spec.dropout,
                                       spec.batch_size, init_rng),
            spec.ridge_lambda);
    }
    throw InvalidConfigError("unknown model kind '" + spec.kind +
                             "' (expected linear|neural_linear|mlp|cnn)");
}

double gradient_check(DifferentiableModel& model,
                      const std::vector<TrainingPair>& pairs,
                      std::size_t probe_count, double h, Rng& rng) {
    if (probe_count == 0) throw InvalidConfigError("probe_count must be >= 1");
    if (!(h > 0.0)) throw InvalidConfigError("finite-difference step must be > 0");
    const auto grad = model.training_gradient(pairs);
    const std::size_t n = model.parameter_count();
    double worst = 0.0;
    for (std::size_t p = 0; p < probe_count; ++p) {
        const std::size_t i = rng.index(n);
        const double w0 = model.parameter(i);
        model.set_parameter(i, w0 + h);
        const double lp = model.training_loss(pairs);
        model.set_parameter(i, w0 - h);
        const double lm = model.training_loss(pairs);
        model.set_parameter(i, w0);
        const double fd = (lp - lm) / (2.0 * h);
        const double denom = std::max({std::fabs(fd), std::fabs(grad[i]), 1e-8});
        worst = std::max(worst, std::fabs(fd - grad[i]) / denom);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[4] = {'T', 'K', 'B', 'C'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ParseError("truncated checkpoint");
    return v;
}

}  // namespace

void save_checkpoint(RewardModel& model, std::ostream& out) {
    const auto params = model.named_parameters();
    out.write(kMagic, 4);
    put<std::uint32_t>(out, kVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, t] : params) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(t->shape.size()));
        for (std::size_t d : t->shape) put<std::uint64_t>(out, d);
        out.write(reinterpret_cast<const char*>(t->ptr()),
                  static_cast<std::streamsize>(t->numel() * sizeof(double)));
    }
}

void load_checkpoint(RewardModel& model, std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw ParseError("bad checkpoint magic");
    if (get<std::uint32_t>(in) != kVersion)
        throw ParseError("unsupported checkpoint version");
    auto params = model.named_parameters();
    const auto count = get<std::uint32_t>(in);
    if (count != params.size())
        throw ParseError("checkpoint parameter count does not match model");
    for (auto& [name, t] : params) {
        const auto name_len = get<std::uint32_t>(in);
        std::string got(name_len, '\0');
        in.read(got.data(), name_len);
        if (!in || got != name)
            throw ParseError("checkpoint parameter '" + got +
                             "' does not match expected '" + name + "'");
        const auto ndim = get<std::uint32_t>(in);
        std::vector<std::size_t> shape(ndim);
        for (auto& d : shape)
            d = static_cast<std::size_t>(get<std::uint64_t>(in));
        if (shape != t->shape)
            throw ParseError("checkpoint shape mismatch for '" + name + "'");
        in.read(reinterpret_cast<char*>(t->ptr()),
                static_cast<std::streamsize>(t->numel() * sizeof(double)));
        if (!in) throw ParseError("truncated checkpoint");
    }
}

void save_checkpoint_file(RewardModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open checkpoint file " + path);
    save_checkpoint(model, out);
}

void load_checkpoint_file(RewardModel& model, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open checkpoint file " + path);
    load_checkpoint(model, in);
}

}  // namespace topk
