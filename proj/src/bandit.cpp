#include "topk/bandit.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "topk/config.hpp"
#include "topk/errors.hpp"

namespace topk {

void History::append(RoundRecord record) {
    for (std::size_t k = 0; k < record.slate.picks.size(); ++k) {
        TrainingPair pair;
        const auto row = record.contexts.row(record.slate.picks[k]);
        pair.x.assign(row.begin(), row.end());
        pair.y = record.observed_rewards[k];
        pairs.push_back(std::move(pair));
    }
    records.push_back(std::move(record));
}

void ExperimentConfig::validate() const {
    env.validate();
    topk::validate(policy);
    if (model.kind != "linear" && model.kind != "neural_linear" &&
        model.kind != "mlp" && model.kind != "cnn")
        throw InvalidConfigError("unknown model kind '" + model.kind +
                                 "' (expected linear|neural_linear|mlp|cnn)");
    if (model.dropout < 0.0 || model.dropout >= 1.0)
        throw InvalidConfigError("model.dropout must be in [0, 1)");
    if (model.batch_size < 1)
        throw InvalidConfigError("model.batch_size must be >= 1");
    if (model.ridge_lambda < 0.0)
        throw InvalidConfigError("model.ridge_lambda must be >= 0");
    if (run.T < 1) throw InvalidConfigError("run.T must be >= 1");
    if (run.retrain_every < 1)
        throw InvalidConfigError("run.retrain_every must be >= 1");
    if (run.epochs_per_fit < 1)
        throw InvalidConfigError("run.epochs_per_fit must be >= 1");
}

std::string ExperimentConfig::canonical_text() const {
    std::ostringstream os;
    os << "env.kind = " << env.kind << "\n";
    os << "env.n = " << env.n << "\n";
    os << "env.K = " << env.K << "\n";
    os << "env.noise_scale = " << format_double_exact(env.noise_scale) << "\n";
    if (env.kind == "synthetic") os << "env.d = " << env.synthetic_dim << "\n";
    if (!env.data_path.empty())
        os << "env.data_path = " << env.data_path << "\n";
    os << "env.exact_balance = " << (env.exact_balance ? "true" : "false")
       << "\n";
    os << "model.kind = " << model.kind << "\n";
    os << "model.hidden = " << model.hidden << "\n";
    os << "model.dropout = " << format_double_exact(model.dropout) << "\n";
    os << "model.batch_size = " << model.batch_size << "\n";
    os << "model.ridge_lambda = " << format_double_exact(model.ridge_lambda)
       << "\n";
    os << "policy.kind = " << policy.kind << "\n";
    os << "policy.epsilon0 = " << format_double_exact(policy.epsilon0) << "\n";
    os << "policy.decay_scale = " << format_double_exact(policy.decay_scale)
       << "\n";
    os << "policy.posterior_samples = " << policy.posterior_samples << "\n";
    os << "run.T = " << run.T << "\n";
    os << "run.seed = " << run.seed << "\n";
    os << "run.retrain_every = " << run.retrain_every << "\n";
    os << "run.epochs_per_fit = " << run.epochs_per_fit << "\n";
    return os.str();
}

std::uint64_t ExperimentConfig::fingerprint() const {
    // FNV-1a over the canonical serialization
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canonical_text()) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

ModelArmScorer::ModelArmScorer(RewardModel& model,
                               const ContextMatrix& contexts, Rng& rng)
    : model_(model), contexts_(contexts) {
    if (model.input_dim() != contexts.dim)
        throw InvalidConfigError(
            "model input dimension " + std::to_string(model.input_dim()) +
            " does not match context dimension " + std::to_string(contexts.dim));
    points_ = model_.predict_batch(contexts.data.data(), contexts.arms,
                                   PredictMode::kPoint, rng);
}

double ModelArmScorer::point(std::size_t arm) const { return points_[arm]; }

double ModelArmScorer::sample(std::size_t arm, Rng& rng) {
    return model_.predict(contexts_.row(arm), PredictMode::kDropoutSample, rng);
}

Slate select_top_k(ArmScorer& scorer, std::size_t n, std::size_t K,
                   const PolicySpec& policy, std::size_t t, Rng& rng) {
    if (K > n)
        throw InvalidConfigError("K <= n required (got K=" + std::to_string(K) +
                                 ", n=" + std::to_string(n) + ")");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(scorer.point(i)))
            throw NumericError("non-finite score for arm " + std::to_string(i));
    }

    std::vector<std::size_t> candidates(n);
    for (std::size_t i = 0; i < n; ++i) candidates[i] = i;

    Slate slate;
    slate.picks.reserve(K);
    slate.scores.reserve(K);
    slate.explored.reserve(K);
    for (std::size_t slot = 0; slot < K; ++slot) {
        const ArmChoice choice = choose_arm(policy, candidates, scorer, t, rng);
        slate.picks.push_back(choice.arm);
        slate.scores.push_back(scorer.point(choice.arm));
        slate.explored.push_back(choice.explored);
        candidates.erase(
            std::find(candidates.begin(), candidates.end(), choice.arm));
    }
    return slate;
}

RoundRecord run_round(Environment& env, RewardModel& model,
                      const PolicySpec& policy, History& history,
                      std::size_t round_index, Rng& rng) {
    RoundRecord record;
    RoundDraw draw = env.draw_round(round_index, rng);
    draw.contexts.validate();

    ModelArmScorer scorer(model, draw.contexts, rng);
    record.slate = select_top_k(scorer, env.arm_count(), env.slate_size(),
                                policy, round_index, rng);

    record.observed_rewards.reserve(record.slate.picks.size());
    for (std::size_t arm : record.slate.picks)
        record.observed_rewards.push_back(env.observe_reward(draw, arm, rng));

    auto [oracle_picks, oracle_value] =
        oracle_top_k(draw.true_means, env.slate_size());
    record.oracle_value = oracle_value;
    record.true_means = std::move(draw.true_means);
    record.contexts = std::move(draw.contexts);

    history.append(record);
    return record;
}

ExperimentTrace run_experiment(const ExperimentConfig& config,
                               const DataContext& data) {
    config.validate();
    const auto started = std::chrono::steady_clock::now();

    Rng rng(config.run.seed);
    std::unique_ptr<Environment> env = make_environment(config.env, data, rng);
    std::unique_ptr<RewardModel> model =
        make_model(config.model, env->context_dim(), rng);

    ExperimentTrace trace;
    trace.config_fingerprint = config.fingerprint();
    trace.env_fingerprint = env->fingerprint();
    trace.policy_label = config.policy.kind;
    trace.model_label = config.model.kind;
    trace.seed = config.run.seed;
    trace.cum_reward.reserve(config.run.T);
    trace.cum_regret.reserve(config.run.T);
    trace.explored.reserve(config.run.T);

    History history;
    double cum_reward = 0.0, cum_regret = 0.0;
    for (std::size_t t = 1; t <= config.run.T; ++t) {
        try {
            const RoundRecord& record =
                run_round(*env, *model, config.policy, history, t, rng);
            for (double r : record.observed_rewards) cum_reward += r;
            cum_regret += record.regret();
            trace.cum_reward.push_back(cum_reward);
            trace.cum_regret.push_back(cum_regret);
            trace.explored.push_back(record.slate.explored_count());

            for (std::size_t k = history.pairs.size() - record.slate.picks.size();
                 k < history.pairs.size(); ++k)
                model->observe(history.pairs[k]);
            if (t % config.run.retrain_every == 0)
                model->fit(history.pairs, config.run.epochs_per_fit, rng);
        } catch (const InvalidConfigError&) {
            throw;
        } catch (const std::runtime_error& e) {
            throw NumericError("round " + std::to_string(t) + ": " + e.what());
        }
    }

    trace.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      started)
            .count();
    return trace;
}

ExperimentTrace run_experiment(const ExperimentConfig& config) {
    ExperimentConfig cfg = config;
    cfg.apply_defaults();
    cfg.validate();
    return run_experiment(cfg, load_data(cfg.env));
}

}  // namespace topk
