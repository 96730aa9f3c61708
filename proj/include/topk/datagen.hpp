#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace topk::datagen {

// Deterministic synthetic replica of the UCI agaricus-lepiota file: 8,124
// records by default, 23 single-letter comma-separated fields, the published
// attribute alphabets, and labels carried mostly by odor/spore-print/gill
// attributes so a linear one-hot model can learn the edibility signal.
void write_mushroom_csv(const std::string& path, std::size_t records = 8124,
                        std::uint64_t seed = 0x6d7573687231ull);

// Deterministic MNIST-format pair (train-images-idx3-ubyte /
// train-labels-idx1-ubyte) under dir: 28x28 glyph renderings of the digits
// at random offsets with intensity jitter and pixel noise, digit classes
// exactly balanced. The random placement keeps raw-pixel linear regression
// from ranking digit values well while a small CNN can.
void write_mnist_idx(const std::string& dir, std::size_t count = 60000,
                     std::uint64_t seed = 0x6d6e697374ull);

// Generates both datasets under dir unless the files already exist.
// Returns dir for convenience.
std::string ensure_datasets(const std::string& dir);

}  // namespace topk::datagen
