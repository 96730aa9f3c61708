#include <doctest.h>

#include <cmath>

#include "topk/errors.hpp"
#include "topk/policies.hpp"

using namespace topk;

namespace {

std::vector<std::size_t> iota_candidates(std::size_t n) {
    std::vector<std::size_t> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = i;
    return c;
}

// posterior samples with a controllable offset per arm
class OffsetScorer : public ArmScorer {
public:
    OffsetScorer(std::vector<double> points, std::vector<double> offsets)
        : points_(std::move(points)), offsets_(std::move(offsets)) {}
    double point(std::size_t arm) const override { return points_[arm]; }
    double sample(std::size_t arm, Rng&) override {
        return points_[arm] + offsets_[arm];
    }

private:
    std::vector<double> points_, offsets_;
};

}  // namespace

TEST_CASE("epsilon 0 collapses to greedy") {
    Rng rng(1);
    FixedScores scorer({0.2, 0.9, 0.1, 0.5});
    PolicySpec spec{"epsilon_greedy", 0.0, 100.0, 1};
    for (int i = 0; i < 200; ++i) {
        const auto choice = choose_arm(spec, iota_candidates(4), scorer, 1, rng);
        CHECK(choice.arm == 1);
        CHECK(!choice.explored);
    }
}

TEST_CASE("epsilon 1 collapses to uniform (chi-squared at p > 0.01)") {
    Rng rng(2);
    FixedScores scorer({8, 7, 6, 5, 4, 3, 2, 1});
    PolicySpec spec{"epsilon_greedy", 1.0, 100.0, 1};
    const int N = 10000;
    std::vector<int> counts(8, 0);
    for (int i = 0; i < N; ++i) {
        const auto choice = choose_arm(spec, iota_candidates(8), scorer, 1, rng);
        CHECK(choice.explored);
        ++counts[choice.arm];
    }
    const double expected = N / 8.0;
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
    // chi-squared critical value, df=7, p=0.01
    CHECK(chi2 < 18.475);
}

TEST_CASE("decaying epsilon matches the schedule") {
    PolicySpec spec{"decaying_epsilon", 0.05, 100.0, 1};
    CHECK(epsilon_schedule(spec, 1) ==
          doctest::Approx(0.05 * 100.0 / 101.0).epsilon(1e-12));
    CHECK(epsilon_schedule(spec, 900) == doctest::Approx(0.005).epsilon(1e-12));
    CHECK(epsilon_schedule(spec, 1000000000) < 1e-5);

    PolicySpec zero{"decaying_epsilon", 0.0, 100.0, 1};
    for (std::size_t t : {1, 10, 1000000}) CHECK(epsilon_schedule(zero, t) == 0.0);

    // non-increasing, bounded by epsilon0
    double prev = spec.epsilon0;
    for (std::size_t t = 1; t < 2000; t += 7) {
        const double e = epsilon_schedule(spec, t);
        CHECK(e <= prev + 1e-15);
        CHECK(e >= 0.0);
        CHECK(e <= spec.epsilon0);
        prev = e;
    }
}

TEST_CASE("exploration frequency approaches epsilon (3-sigma binomial)") {
    Rng rng(3);
    FixedScores scorer({1.0, 0.5, 0.25, 0.0});
    const double eps = 0.2;
    PolicySpec spec{"epsilon_greedy", eps, 100.0, 1};
    const int N = 20000;
    int explored = 0;
    for (int i = 0; i < N; ++i)
        explored += choose_arm(spec, iota_candidates(4), scorer, 1, rng).explored;
    const double freq = static_cast<double>(explored) / N;
    const double sigma = std::sqrt(eps * (1 - eps) / N);
    CHECK(std::fabs(freq - eps) < 3 * sigma);
}

TEST_CASE("returned index is always a candidate (all policies)") {
    Rng rng(4);
    const std::vector<std::string> kinds{"greedy", "random", "epsilon_greedy",
                                         "decaying_epsilon",
                                         "thompson_dropout"};
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 2 + rng.index(9);
        std::vector<double> scores(n);
        for (auto& s : scores) s = rng.uniform(-5, 5);
        FixedScores scorer(scores);
        // random strict subset as the candidate set
        std::vector<std::size_t> candidates;
        for (std::size_t i = 0; i < n; ++i)
            if (rng.bernoulli(0.6)) candidates.push_back(i);
        if (candidates.empty()) candidates.push_back(rng.index(n));
        const auto& kind = kinds[trial % kinds.size()];
        PolicySpec spec{kind, 0.3, 50.0, 1};
        const auto choice =
            choose_arm(spec, candidates, scorer, 1 + trial, rng);
        CHECK(std::find(candidates.begin(), candidates.end(), choice.arm) !=
              candidates.end());
    }
}

TEST_CASE("greedy is invariant under strictly increasing transforms") {
    Rng rng(5);
    PolicySpec spec{"greedy", 0.0, 100.0, 1};
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 3 + rng.index(6);
        std::vector<double> scores(n), transformed(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = rng.uniform(-3, 3);
            transformed[i] = 2.0 * std::tanh(scores[i]) + 5.0;
        }
        FixedScores a(scores), b(transformed);
        Rng r1(trial), r2(trial);
        const auto c1 = choose_arm(spec, iota_candidates(n), a, 1, r1);
        const auto c2 = choose_arm(spec, iota_candidates(n), b, 1, r2);
        CHECK(c1.arm == c2.arm);
    }
}

TEST_CASE("thompson with zero posterior variance equals greedy") {
    Rng rng(6);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng.index(8);
        std::vector<double> scores(n);
        for (auto& s : scores) s = rng.uniform(-1, 1);
        FixedScores scorer(scores);
        PolicySpec thompson{"thompson_dropout", 0.05, 100.0, 1};
        PolicySpec greedy{"greedy", 0.0, 100.0, 1};
        Rng r1(trial), r2(trial);
        const auto ct = choose_arm(thompson, iota_candidates(n), scorer, 1, r1);
        const auto cg = choose_arm(greedy, iota_candidates(n), scorer, 1, r2);
        CHECK(ct.arm == cg.arm);
        CHECK(!ct.explored);
    }
}

TEST_CASE("thompson marks exploration when the sample flips the argmax") {
    Rng rng(7);
    // point argmax is arm 0; sampled argmax is arm 2
    OffsetScorer scorer({1.0, 0.2, 0.5}, {0.0, 0.0, 1.0});
    PolicySpec spec{"thompson_dropout", 0.05, 100.0, 1};
    const auto choice = choose_arm(spec, iota_candidates(3), scorer, 1, rng);
    CHECK(choice.arm == 2);
    CHECK(choice.explored);
}

TEST_CASE("ties break uniformly at random") {
    Rng rng(8);
    FixedScores scorer({1.0, 1.0, 0.0, 1.0});
    PolicySpec spec{"greedy", 0.0, 100.0, 1};
    std::vector<int> counts(4, 0);
    const int N = 30000;
    for (int i = 0; i < N; ++i)
        ++counts[choose_arm(spec, iota_candidates(4), scorer, 1, rng).arm];
    CHECK(counts[2] == 0);
    for (std::size_t i : {0u, 1u, 3u}) {
        const double freq = counts[i] / static_cast<double>(N);
        CHECK(std::fabs(freq - 1.0 / 3.0) < 0.02);
    }
}

TEST_CASE("empty candidate set and bad specs are rejected") {
    Rng rng(9);
    FixedScores scorer({1.0});
    CHECK_THROWS_AS(choose_arm(PolicySpec{"greedy"}, {}, scorer, 1, rng),
                    InvalidConfigError);
    CHECK_THROWS_AS(validate(PolicySpec{"ucb"}), InvalidConfigError);
    CHECK_THROWS_AS(validate(PolicySpec{"greedy", 1.5}), InvalidConfigError);
    CHECK_THROWS_AS(validate(PolicySpec{"greedy", 0.1, -2.0}),
                    InvalidConfigError);
    CHECK_THROWS_AS(validate(PolicySpec{"greedy", 0.1, 1.0, 0}),
                    InvalidConfigError);
}
