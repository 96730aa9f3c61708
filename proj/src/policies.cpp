#include "topk/policies.hpp"

#include <cmath>

#include "topk/errors.hpp"

namespace topk {

namespace {

// argmax over candidates; exact ties broken uniformly from the stream
std::size_t argmax_candidate(const std::vector<std::size_t>& candidates,
                             const std::vector<double>& values, Rng& rng) {
    double best = values[0];
    std::size_t tie_count = 1;
    std::size_t pick = candidates[0];
    for (std::size_t k = 1; k < candidates.size(); ++k) {
        if (values[k] > best) {
            best = values[k];
            pick = candidates[k];
            tie_count = 1;
        } else if (values[k] == best) {
            // reservoir step: each tied arm ends up equally likely
            ++tie_count;
            if (rng.index(tie_count) == 0) pick = candidates[k];
        }
    }
    return pick;
}

std::vector<double> point_values(const std::vector<std::size_t>& candidates,
                                 const ArmScorer& scorer) {
    std::vector<double> v(candidates.size());
    for (std::size_t k = 0; k < candidates.size(); ++k)
        v[k] = scorer.point(candidates[k]);
    return v;
}

}  // namespace

void validate(const PolicySpec& spec) {
    if (spec.kind != "greedy" && spec.kind != "random" &&
        spec.kind != "epsilon_greedy" && spec.kind != "decaying_epsilon" &&
        spec.kind != "thompson_dropout")
        throw InvalidConfigError(
            "unknown policy kind '" + spec.kind +
            "' (expected greedy|random|epsilon_greedy|decaying_epsilon|"
            "thompson_dropout)");
    if (spec.epsilon0 < 0.0 || spec.epsilon0 > 1.0)
        throw InvalidConfigError("policy.epsilon0 must be in [0, 1]");
    if (!(spec.decay_scale > 0.0))
        throw InvalidConfigError("policy.decay_scale must be > 0");
    if (spec.posterior_samples < 1)
        throw InvalidConfigError("policy.posterior_samples must be >= 1");
}

double epsilon_schedule(const PolicySpec& spec, std::size_t t) {
    return spec.epsilon0 * spec.decay_scale /
           (spec.decay_scale + static_cast<double>(t));
}

ArmChoice choose_arm(const PolicySpec& spec,
                     const std::vector<std::size_t>& candidates,
                     ArmScorer& scorer, std::size_t t, Rng& rng) {
    if (candidates.empty())
        throw InvalidConfigError("choose_arm requires a non-empty candidate set");

    if (spec.kind == "random")
        return {candidates[rng.index(candidates.size())], true};

    if (spec.kind == "greedy")
        return {argmax_candidate(candidates, point_values(candidates, scorer),
                                 rng),
                false};

    if (spec.kind == "epsilon_greedy" || spec.kind == "decaying_epsilon") {
        const double eps = spec.kind == "epsilon_greedy"
                               ? spec.epsilon0
                               : epsilon_schedule(spec, t);
        if (eps > 0.0 && rng.uniform() < eps)
            return {candidates[rng.index(candidates.size())], true};
        return {argmax_candidate(candidates, point_values(candidates, scorer),
                                 rng),
                false};
    }

    // thompson_dropout: argmax over one posterior draw per candidate
    // (mean of posterior_samples draws when configured above 1); the slot
    // counts as exploration when the draw disagrees with the point argmax
    std::vector<double> sampled(candidates.size());
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        double acc = 0.0;
        for (std::size_t s = 0; s < spec.posterior_samples; ++s)
            acc += scorer.sample(candidates[k], rng);
        sampled[k] = acc / static_cast<double>(spec.posterior_samples);
    }
    const std::size_t pick = argmax_candidate(candidates, sampled, rng);
    const std::size_t greedy_pick =
        argmax_candidate(candidates, point_values(candidates, scorer), rng);
    return {pick, pick != greedy_pick};
}

}  // namespace topk
