#include "topk/environments.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace topk {

// ---------------------------------------------------------------------------
// MushroomPool

std::size_t MushroomPool::encoded_dim() const {
    std::size_t d = 0;
    for (const auto& c : categories) d += c.size();
    return d;
}

std::vector<double> MushroomPool::encode(const Record& record) const {
    std::vector<double> out(encoded_dim(), 0.0);
    std::size_t offset = 0;
    for (std::size_t a = 0; a < kAttributes; ++a) {
        const auto& table = categories[a];
        const auto it =
            std::find(table.begin(), table.end(), record.attrs[a]);
        if (it == table.end())
            throw EncodingError("unseen category '" +
                                std::string(1, record.attrs[a]) +
                                "' for attribute " + std::to_string(a));
        out[offset + static_cast<std::size_t>(it - table.begin())] = 1.0;
        offset += table.size();
    }
    return out;
}

std::vector<std::size_t> MushroomPool::indices_of(bool edible) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (records[i].edible == edible) idx.push_back(i);
    return idx;
}

MushroomPool parse_mushroom_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open mushroom file " + path);
    MushroomPool pool;
    pool.source_path = path;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (line.back() == ',') fields.push_back("");
        if (fields.size() != MushroomPool::kAttributes + 1)
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(MushroomPool::kAttributes + 1) +
                             " fields, got " + std::to_string(fields.size()));
        MushroomPool::Record rec;
        for (std::size_t f = 0; f < fields.size(); ++f) {
            if (fields[f].size() != 1)
                throw ParseError("line " + std::to_string(line_no) +
                                 ": field " + std::to_string(f) +
                                 " is not a single letter");
            const char c = fields[f][0];
            if (f == 0) {
                if (c != 'e' && c != 'p')
                    throw ParseError("line " + std::to_string(line_no) +
                                     ": label must be 'e' or 'p'");
                rec.edible = c == 'e';
            } else {
                rec.attrs[f - 1] = c;
                auto& table = pool.categories[f - 1];
                if (std::find(table.begin(), table.end(), c) == table.end())
                    table.push_back(c);
            }
        }
        pool.records.push_back(rec);
    }
    if (pool.records.empty())
        throw ParseError("mushroom file " + path + " contains no records");
    return pool;
}

// ---------------------------------------------------------------------------
// MnistPool

std::vector<double> MnistPool::image(std::size_t i) const {
    std::vector<double> out(kPixels);
    const std::uint8_t* p = pixels.data() + i * kPixels;
    for (std::size_t k = 0; k < kPixels; ++k)
        out[k] = static_cast<double>(p[k]) / 255.0;
    return out;
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& what) {
    std::uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw ParseError("truncated IDX header while reading " + what);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

MnistPool parse_idx(const std::string& images_path,
                    const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw ParseError("cannot open IDX image file " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw ParseError("cannot open IDX label file " + labels_path);

    if (read_be32(img, "image magic") != 0x00000803u)
        throw ParseError("bad IDX magic in " + images_path +
                         " (expected 0x00000803)");
    const std::uint32_t img_count = read_be32(img, "image count");
    const std::uint32_t rows = read_be32(img, "rows");
    const std::uint32_t cols = read_be32(img, "cols");
    if (rows != 28 || cols != 28)
        throw ParseError("expected 28x28 images, got " + std::to_string(rows) +
                         "x" + std::to_string(cols));

    if (read_be32(lab, "label magic") != 0x00000801u)
        throw ParseError("bad IDX magic in " + labels_path +
                         " (expected 0x00000801)");
    const std::uint32_t lab_count = read_be32(lab, "label count");
    if (img_count != lab_count)
        throw ParseError("image count " + std::to_string(img_count) +
                         " does not match label count " +
                         std::to_string(lab_count));

    MnistPool pool;
    pool.source_path = images_path;
    pool.count = img_count;
    pool.pixels.resize(std::size_t(img_count) * MnistPool::kPixels);
    img.read(reinterpret_cast<char*>(pool.pixels.data()),
             static_cast<std::streamsize>(pool.pixels.size()));
    if (!img) throw ParseError("truncated image data in " + images_path);
    pool.labels.resize(img_count);
    lab.read(reinterpret_cast<char*>(pool.labels.data()),
             static_cast<std::streamsize>(pool.labels.size()));
    if (!lab) throw ParseError("truncated label data in " + labels_path);

    for (std::size_t i = 0; i < pool.count; ++i) {
        if (pool.labels[i] > 9)
            throw ParseError("label " + std::to_string(pool.labels[i]) +
                             " out of digit range at index " +
                             std::to_string(i));
        pool.by_digit[pool.labels[i]].push_back(i);
    }
    return pool;
}

// ---------------------------------------------------------------------------
// Environments

std::string Environment::fingerprint() const {
    std::ostringstream os;
    os << kind() << ";n=" << arm_count() << ";K=" << slate_size()
       << ";noise=" << noise_scale();
    return os.str();
}

MushroomEnv::MushroomEnv(std::shared_ptr<const MushroomPool> pool,
                         std::size_t n, std::size_t K, double noise_scale,
                         bool exact_balance)
    : pool_(std::move(pool)),
      n_(n),
      k_(K),
      noise_scale_(noise_scale),
      exact_balance_(exact_balance) {
    if (!pool_) throw InvalidConfigError("mushroom env needs a pool");
    if (k_ > n_ || k_ == 0)
        throw InvalidConfigError("mushroom env needs 1 <= K <= n");
    edible_ = pool_->indices_of(true);
    poisonous_ = pool_->indices_of(false);
    if (edible_.empty() || poisonous_.empty())
        throw InvalidConfigError(
            "mushroom pool must contain both edible and poisonous records");
    dim_ = pool_->encoded_dim();
    encoded_.reserve(pool_->records.size());
    for (const auto& r : pool_->records) encoded_.push_back(pool_->encode(r));
}

RoundDraw MushroomEnv::draw_round(std::size_t round_index, Rng& rng) {
    RoundDraw draw;
    draw.contexts = ContextMatrix(n_, dim_, round_index);
    draw.true_means.resize(n_);

    std::vector<bool> slot_edible(n_, false);
    if (exact_balance_) {
        std::vector<std::size_t> slots(n_);
        std::iota(slots.begin(), slots.end(), 0);
        rng.shuffle(slots);
        for (std::size_t i = 0; i < k_; ++i) slot_edible[slots[i]] = true;
    } else {
        const double p = static_cast<double>(k_) / static_cast<double>(n_);
        for (std::size_t i = 0; i < n_; ++i) slot_edible[i] = rng.bernoulli(p);
    }

    for (std::size_t i = 0; i < n_; ++i) {
        const auto& cls = slot_edible[i] ? edible_ : poisonous_;
        const std::size_t rec = cls[rng.index(cls.size())];
        std::memcpy(draw.contexts.row_ptr(i), encoded_[rec].data(),
                    dim_ * sizeof(double));
        draw.true_means[i] = slot_edible[i] ? 1.0 : 0.0;
    }
    return draw;
}

std::string MushroomEnv::fingerprint() const {
    return Environment::fingerprint() +
           (exact_balance_ ? ";balance=exact" : ";balance=bernoulli");
}

MnistEnv::MnistEnv(std::shared_ptr<const MnistPool> pool, std::size_t n,
                   std::size_t K, double noise_scale)
    : pool_(std::move(pool)), n_(n), k_(K), noise_scale_(noise_scale) {
    if (!pool_) throw InvalidConfigError("mnist env needs a pool");
    if (k_ > n_ || k_ == 0)
        throw InvalidConfigError("mnist env needs 1 <= K <= n");
    for (int d = 0; d < 10; ++d)
        if (pool_->by_digit[d].empty())
            throw InvalidConfigError("mnist pool has no images of digit " +
                                     std::to_string(d));
}

RoundDraw MnistEnv::draw_round(std::size_t round_index, Rng& rng) {
    RoundDraw draw;
    draw.contexts = ContextMatrix(n_, MnistPool::kPixels, round_index);
    draw.true_means.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t digit = rng.index(10);
        const auto& cls = pool_->by_digit[digit];
        const std::size_t idx = cls[rng.index(cls.size())];
        const auto img = pool_->image(idx);
        std::memcpy(draw.contexts.row_ptr(i), img.data(),
                    img.size() * sizeof(double));
        draw.true_means[i] = static_cast<double>(digit);
    }
    return draw;
}

SyntheticLinearEnv::SyntheticLinearEnv(std::size_t dim, std::size_t n,
                                       std::size_t K, double sigma,
                                       Rng& init_rng)
    : dim_(dim), n_(n), k_(K), sigma_(sigma) {
    if (dim_ == 0) throw InvalidConfigError("synthetic env needs d >= 1");
    if (k_ > n_ || k_ == 0)
        throw InvalidConfigError("synthetic env needs 1 <= K <= n");
    if (sigma_ < 0.0)
        throw InvalidConfigError("synthetic env needs sigma >= 0");
    w_.resize(dim_);
    for (double& w : w_) w = init_rng.uniform(-1.0, 1.0);
}

RoundDraw SyntheticLinearEnv::draw_round(std::size_t round_index, Rng& rng) {
    RoundDraw draw;
    draw.contexts = ContextMatrix(n_, dim_, round_index);
    draw.true_means.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        double* row = draw.contexts.row_ptr(i);
        double mean = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) {
            row[j] = rng.uniform(-1.0, 1.0);
            mean += w_[j] * row[j];
        }
        draw.true_means[i] = mean;
    }
    return draw;
}

std::string SyntheticLinearEnv::fingerprint() const {
    return Environment::fingerprint() + ";d=" + std::to_string(dim_);
}

// ---------------------------------------------------------------------------

std::pair<std::vector<std::size_t>, double> oracle_top_k(
    const std::vector<double>& true_means, std::size_t K) {
    if (K > true_means.size())
        throw InvalidConfigError("oracle_top_k requires K <= n");
    std::vector<std::size_t> order(true_means.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (true_means[a] != true_means[b])
            return true_means[a] > true_means[b];
        return a < b;
    });
    order.resize(K);
    double value = 0.0;
    for (std::size_t i : order) value += true_means[i];
    return {std::move(order), value};
}

// ---------------------------------------------------------------------------
// Spec plumbing

void EnvSpec::apply_defaults() {
    if (kind == "mushroom") {
        if (n == 0) n = 30;
        if (K == 0) K = 3;
        if (noise_scale < 0.0) noise_scale = 0.5;
    } else if (kind == "mnist") {
        if (n == 0) n = 20;
        if (K == 0) K = 5;
        if (noise_scale < 0.0) noise_scale = 2.0;
    } else if (kind == "synthetic") {
        if (n == 0) n = 20;
        if (K == 0) K = 3;
        if (noise_scale < 0.0) noise_scale = 0.1;
    }
    if (data_path.empty()) {
        if (const char* root = std::getenv("TOPK_BANDIT_DATA")) {
            if (kind == "mushroom")
                data_path = std::string(root) + "/agaricus-lepiota.data";
            else if (kind == "mnist")
                data_path = root;
        }
    }
}

void EnvSpec::validate() const {
    if (kind != "synthetic" && kind != "mushroom" && kind != "mnist")
        throw InvalidConfigError("unknown env kind '" + kind +
                                 "' (expected synthetic|mushroom|mnist)");
    if (n < 1) throw InvalidConfigError("env.n must be >= 1");
    if (K < 1 || K > n) throw InvalidConfigError("K <= n required (got K=" +
                                                 std::to_string(K) + ", n=" +
                                                 std::to_string(n) + ")");
    if (noise_scale < 0.0)
        throw InvalidConfigError("env.noise_scale must be >= 0");
    if (kind == "synthetic" && synthetic_dim == 0)
        throw InvalidConfigError("env.d must be >= 1");
    if ((kind == "mushroom" || kind == "mnist") && data_path.empty())
        throw InvalidConfigError(
            "env.data_path not set and TOPK_BANDIT_DATA is undefined");
}

DataContext load_data(const EnvSpec& spec) {
    DataContext data;
    if (spec.kind == "mushroom")
        data.mushroom = std::make_shared<const MushroomPool>(
            parse_mushroom_csv(spec.data_path));
    else if (spec.kind == "mnist")
        data.mnist = std::make_shared<const MnistPool>(
            parse_idx(spec.data_path + "/train-images-idx3-ubyte",
                      spec.data_path + "/train-labels-idx1-ubyte"));
    return data;
}

std::unique_ptr<Environment> make_environment(const EnvSpec& spec,
                                              const DataContext& data,
                                              Rng& init_rng) {
    spec.validate();
    if (spec.kind == "mushroom") {
        if (!data.mushroom)
            throw InvalidConfigError("mushroom env requested but no pool loaded");
        return std::make_unique<MushroomEnv>(data.mushroom, spec.n, spec.K,
                                             spec.noise_scale,
                                             spec.exact_balance);
    }
    if (spec.kind == "mnist") {
        if (!data.mnist)
            throw InvalidConfigError("mnist env requested but no pool loaded");
        return std::make_unique<MnistEnv>(data.mnist, spec.n, spec.K,
                                          spec.noise_scale);
    }
    return std::make_unique<SyntheticLinearEnv>(spec.synthetic_dim, spec.n,
                                                spec.K, spec.noise_scale,
                                                init_rng);
}

}  // namespace topk
