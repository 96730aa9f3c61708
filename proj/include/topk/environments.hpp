#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "topk/context.hpp"
#include "topk/rng.hpp"

namespace topk {

// ---------------------------------------------------------------------------
// Dataset pools

// UCI agaricus-lepiota records: 22 single-letter attributes plus the e/p
// label. Category tables are built per attribute in first-seen order; the
// '?' marker is an ordinary category.
struct MushroomPool {
    static constexpr std::size_t kAttributes = 22;

    struct Record {
        bool edible = false;
        std::array<char, kAttributes> attrs{};
    };

    std::string source_path;
    std::vector<Record> records;
    std::array<std::vector<char>, kAttributes> categories;

    std::size_t encoded_dim() const;
    // concatenated one-hot blocks, one per attribute; exactly 22 ones
    std::vector<double> encode(const Record& record) const;
    std::vector<std::size_t> indices_of(bool edible) const;
};

MushroomPool parse_mushroom_csv(const std::string& path);

// MNIST-format pool; images kept as raw bytes, normalized on access.
struct MnistPool {
    static constexpr std::size_t kPixels = 28 * 28;

    std::string source_path;
    std::size_t count = 0;
    std::vector<std::uint8_t> pixels;  // count x 784
    std::vector<std::uint8_t> labels;  // count, values 0..9
    std::array<std::vector<std::size_t>, 10> by_digit;

    // pixel bytes / 255, all in [0, 1]
    std::vector<double> image(std::size_t i) const;
};

MnistPool parse_idx(const std::string& images_path,
                    const std::string& labels_path);

// ---------------------------------------------------------------------------
// Environments

struct RoundDraw {
    ContextMatrix contexts;
    std::vector<double> true_means;  // noise-free expected reward per arm
};

// Generates per-round contexts, true means, and noisy reward observations.
// observe_reward draws its noise from the stream at call time, so an arm
// that is never picked never consumes a draw.
class Environment {
public:
    virtual ~Environment() = default;

    virtual std::string kind() const = 0;
    virtual std::size_t arm_count() const = 0;    // n
    virtual std::size_t slate_size() const = 0;   // K
    virtual std::size_t context_dim() const = 0;  // d
    virtual double noise_scale() const = 0;

    virtual RoundDraw draw_round(std::size_t round_index, Rng& rng) = 0;

    virtual double observe_reward(const RoundDraw& draw, std::size_t arm,
                                  Rng& rng) const {
        return draw.true_means[arm] + noise_scale() * rng.normal();
    }

    // env identity for trace compatibility checks
    virtual std::string fingerprint() const;
};

// Each slot is edible with probability K/n (independent Bernoulli draws, or
// exactly K edible slots when exact_balance); contexts are one-hot encoded
// records of the drawn class; reward is 1/0 plus eta/2 noise.
class MushroomEnv : public Environment {
public:
    MushroomEnv(std::shared_ptr<const MushroomPool> pool, std::size_t n,
                std::size_t K, double noise_scale, bool exact_balance);

    std::string kind() const override { return "mushroom"; }
    std::size_t arm_count() const override { return n_; }
    std::size_t slate_size() const override { return k_; }
    std::size_t context_dim() const override { return dim_; }
    double noise_scale() const override { return noise_scale_; }
    RoundDraw draw_round(std::size_t round_index, Rng& rng) override;
    std::string fingerprint() const override;

private:
    std::shared_ptr<const MushroomPool> pool_;
    std::vector<std::vector<double>> encoded_;  // cached encodings
    std::vector<std::size_t> edible_, poisonous_;
    std::size_t n_, k_, dim_;
    double noise_scale_;
    bool exact_balance_;
};

// Each slot shows a uniformly random digit (then a uniformly random image of
// that digit); true mean is the digit value; reward adds 2*eta noise.
class MnistEnv : public Environment {
public:
    MnistEnv(std::shared_ptr<const MnistPool> pool, std::size_t n,
             std::size_t K, double noise_scale);

    std::string kind() const override { return "mnist"; }
    std::size_t arm_count() const override { return n_; }
    std::size_t slate_size() const override { return k_; }
    std::size_t context_dim() const override { return MnistPool::kPixels; }
    double noise_scale() const override { return noise_scale_; }
    RoundDraw draw_round(std::size_t round_index, Rng& rng) override;

private:
    std::shared_ptr<const MnistPool> pool_;
    std::size_t n_, k_;
    double noise_scale_;
};

// Oracle environment for correctness tests: hidden weights drawn once,
// contexts uniform in [-1,1]^d, true mean w.x, known in closed form.
class SyntheticLinearEnv : public Environment {
public:
    SyntheticLinearEnv(std::size_t dim, std::size_t n, std::size_t K,
                       double sigma, Rng& init_rng);

    std::string kind() const override { return "synthetic"; }
    std::size_t arm_count() const override { return n_; }
    std::size_t slate_size() const override { return k_; }
    std::size_t context_dim() const override { return dim_; }
    double noise_scale() const override { return sigma_; }
    RoundDraw draw_round(std::size_t round_index, Rng& rng) override;
    std::string fingerprint() const override;

    const std::vector<double>& hidden_weights() const { return w_; }

private:
    std::vector<double> w_;
    std::size_t dim_, n_, k_;
    double sigma_;
};

// Indices of the K largest true means (ties to the lowest index) and their
// sum; for additive slate rewards this equals the brute-force best subset.
std::pair<std::vector<std::size_t>, double> oracle_top_k(
    const std::vector<double>& true_means, std::size_t K);

// ---------------------------------------------------------------------------
// Construction from a spec

struct EnvSpec {
    std::string kind = "synthetic";  // synthetic | mushroom | mnist
    std::size_t n = 0;               // 0 = kind default
    std::size_t K = 0;               // 0 = kind default
    double noise_scale = -1.0;       // negative = kind default
    std::string data_path;           // empty = TOPK_BANDIT_DATA default
    bool exact_balance = false;
    std::size_t synthetic_dim = 10;

    void apply_defaults();
    void validate() const;
};

// Parsed datasets, shareable read-only across concurrent runs.
struct DataContext {
    std::shared_ptr<const MushroomPool> mushroom;
    std::shared_ptr<const MnistPool> mnist;
};

// Loads whatever dataset the spec needs (no-op for synthetic).
DataContext load_data(const EnvSpec& spec);

std::unique_ptr<Environment> make_environment(const EnvSpec& spec,
                                              const DataContext& data,
                                              Rng& init_rng);

}  // namespace topk
