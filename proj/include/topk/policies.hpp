#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "topk/rng.hpp"

namespace topk {

// Exploration-exploitation rule applied per slot over the remaining
// candidate arms.
struct PolicySpec {
    std::string kind = "greedy";  // greedy | random | epsilon_greedy |
                                  // decaying_epsilon | thompson_dropout
    double epsilon0 = 0.05;
    double decay_scale = 100.0;
    std::size_t posterior_samples = 1;
};

void validate(const PolicySpec& spec);

// Per-arm score provider handed to a policy: point estimates for greedy
// decisions, posterior samples (dropout forwards) for Thompson.
class ArmScorer {
public:
    virtual ~ArmScorer() = default;
    virtual double point(std::size_t arm) const = 0;
    virtual double sample(std::size_t arm, Rng& rng) = 0;
};

// Fixed score table; posterior samples equal the point values.
class FixedScores : public ArmScorer {
public:
    explicit FixedScores(std::vector<double> scores)
        : scores_(std::move(scores)) {}
    double point(std::size_t arm) const override { return scores_[arm]; }
    double sample(std::size_t arm, Rng&) override { return scores_[arm]; }

private:
    std::vector<double> scores_;
};

struct ArmChoice {
    std::size_t arm = 0;
    bool explored = false;
};

// Picks one arm from `candidates` (non-empty, indices into the scorer).
// t is the 1-based round index, used by the decaying schedule.
ArmChoice choose_arm(const PolicySpec& spec,
                     const std::vector<std::size_t>& candidates,
                     ArmScorer& scorer, std::size_t t, Rng& rng);

// The decaying schedule eps_t = eps0 * c / (c + t); non-increasing in t with
// limit 0.
double epsilon_schedule(const PolicySpec& spec, std::size_t t);

}  // namespace topk
