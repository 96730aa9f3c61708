#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "topk/context.hpp"
#include "topk/environments.hpp"
#include "topk/models.hpp"
#include "topk/policies.hpp"
#include "topk/rng.hpp"

namespace topk {

// Ordered selection of K distinct arms with the score estimates and
// exploration flags recorded at selection time.
struct Slate {
    std::vector<std::size_t> picks;
    std::vector<double> scores;
    std::vector<bool> explored;

    std::size_t explored_count() const {
        std::size_t c = 0;
        for (bool e : explored) c += e ? 1 : 0;
        return c;
    }
};

// One round: contexts, chosen slate, noisy observations, and the oracle
// values used only for regret accounting.
struct RoundRecord {
    ContextMatrix contexts;
    Slate slate;
    std::vector<double> observed_rewards;
    std::vector<double> true_means;
    double oracle_value = 0.0;

    double picked_true_sum() const {
        double s = 0.0;
        for (std::size_t i : slate.picks) s += true_means[i];
        return s;
    }
    double regret() const { return oracle_value - picked_true_sum(); }
};

// Append-only replay of the run plus the flattened (context, reward)
// training pairs of the picked slots.
struct History {
    std::vector<RoundRecord> records;
    std::vector<TrainingPair> pairs;

    void append(RoundRecord record);
};

struct RunSpec {
    std::size_t T = 1000;
    std::uint64_t seed = 1;
    std::size_t retrain_every = 1;
    int epochs_per_fit = 16;
};

struct ExperimentConfig {
    EnvSpec env;
    ModelSpec model;
    PolicySpec policy;
    RunSpec run;

    void apply_defaults() { env.apply_defaults(); }
    void validate() const;
    // canonical flat key=value text; also the config.echo payload
    std::string canonical_text() const;
    std::uint64_t fingerprint() const;
};

// Scores arms of one context matrix with a reward model; point estimates are
// computed once per round, posterior samples are fresh dropout forwards.
class ModelArmScorer : public ArmScorer {
public:
    ModelArmScorer(RewardModel& model, const ContextMatrix& contexts,
                   Rng& rng);

    double point(std::size_t arm) const override;
    double sample(std::size_t arm, Rng& rng) override;

    const std::vector<double>& point_scores() const { return points_; }

private:
    RewardModel& model_;
    const ContextMatrix& contexts_;
    std::vector<double> points_;
};

// Builds a slate slot by slot; at slot i the policy sees the candidate set
// with previous picks excluded. A pure-greedy policy yields exactly the K
// largest scores in descending order.
Slate select_top_k(ArmScorer& scorer, std::size_t n, std::size_t K,
                   const PolicySpec& policy, std::size_t t, Rng& rng);

// One pass of the Algorithm-1 loop body: draw contexts, score, select,
// observe picked arms, append to history.
RoundRecord run_round(Environment& env, RewardModel& model,
                      const PolicySpec& policy, History& history,
                      std::size_t round_index, Rng& rng);

struct ExperimentTrace {
    std::uint64_t config_fingerprint = 0;
    std::string env_fingerprint;
    std::string policy_label;
    std::string model_label;
    std::uint64_t seed = 0;
    std::vector<double> cum_reward;
    std::vector<double> cum_regret;
    std::vector<std::size_t> explored;  // per-round explored slot count
    double wall_seconds = 0.0;
};

// Executes T rounds with retraining every retrain_every rounds on the full
// flattened history. Deterministic: (config, seed) fixes the whole trace.
ExperimentTrace run_experiment(const ExperimentConfig& config,
                               const DataContext& data);
// convenience overload that loads datasets itself
ExperimentTrace run_experiment(const ExperimentConfig& config);

}  // namespace topk
