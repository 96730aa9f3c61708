#include "topk/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string_view>
#include <vector>

#include "topk/errors.hpp"
#include "topk/rng.hpp"

namespace topk::datagen {

namespace {

char weighted(Rng& rng, std::string_view chars,
              std::initializer_list<double> weights) {
    double u = rng.uniform();
    std::size_t i = 0;
    for (double w : weights) {
        if (u < w || i + 1 == chars.size()) return chars[i];
        u -= w;
        ++i;
    }
    return chars.back();
}

// Attribute draw tables in UCI column order. Class-dependent attributes get
// separate edible/poisonous mixes; the rest are shared.
void append_attributes(std::string& line, bool edible, Rng& rng) {
    auto put = [&](char c) {
        line += ',';
        line += c;
    };
    // cap-shape, cap-surface, cap-color
    put(weighted(rng, "xfkbsc", {.40, .30, .12, .10, .05, .03}));
    put(weighted(rng, "ysfg", {.35, .30, .30, .05}));
    put(weighted(rng, "ngeywbpcur",
                 {.25, .20, .15, .12, .12, .08, .05, .02, .005, .005}));
    // bruises
    put(edible ? weighted(rng, "tf", {.65, .35}) : weighted(rng, "tf", {.25, .75}));
    // odor: the dominant signal, as in the real data
    put(edible ? weighted(rng, "nal", {.62, .19, .19})
               : weighted(rng, "fyspcmn", {.52, .12, .12, .10, .06, .03, .05}));
    // gill-attachment, gill-spacing, gill-size
    put(weighted(rng, "fa", {.97, .03}));
    put(edible ? weighted(rng, "cw", {.75, .25}) : weighted(rng, "cw", {.85, .15}));
    put(edible ? weighted(rng, "bn", {.78, .22}) : weighted(rng, "bn", {.32, .68}));
    // gill-color
    put(edible ? weighted(rng, "knbhgwpoue",
                          {.15, .15, .12, .12, .12, .12, .08, .08, .03, .03})
               : weighted(rng, "bhgknwrp", {.30, .20, .15, .10, .10, .05, .05, .05}));
    // stalk-shape, stalk-root ('?' is a real category here)
    put(weighted(rng, "te", {.55, .45}));
    put(weighted(rng, "b?ecr", {.45, .30, .15, .07, .03}));
    // stalk-surface above/below ring
    for (int rep = 0; rep < 2; ++rep)
        put(edible ? weighted(rng, "sfyk", {.70, .15, .05, .10})
                   : weighted(rng, "ksfy", {.55, .30, .10, .05}));
    // stalk-color above/below ring
    for (int rep = 0; rep < 2; ++rep)
        put(weighted(rng, "wpgnboecy",
                     {.60, .15, .10, .06, .04, .02, .01, .01, .01}));
    // veil-type (single-valued in the real data), veil-color
    put('p');
    put(weighted(rng, "wnoy", {.97, .01, .01, .01}));
    // ring-number, ring-type
    put(weighted(rng, "otn", {.90, .08, .02}));
    put(edible ? weighted(rng, "pefl", {.60, .25, .10, .05})
               : weighted(rng, "lepn", {.45, .30, .15, .10}));
    // spore-print-color
    put(edible ? weighted(rng, "nkwubo", {.35, .35, .10, .10, .05, .05})
               : weighted(rng, "hwrkn", {.45, .30, .10, .075, .075}));
    // population, habitat
    put(edible ? weighted(rng, "vysnac", {.25, .20, .20, .15, .10, .10})
               : weighted(rng, "vsyc", {.50, .20, .15, .15}));
    put(edible ? weighted(rng, "dgmlpuw", {.30, .30, .15, .10, .05, .05, .05})
               : weighted(rng, "dgplumw", {.25, .20, .20, .15, .10, .05, .05}));
}

}  // namespace

void write_mushroom_csv(const std::string& path, std::size_t records,
                        std::uint64_t seed) {
    Rng rng(seed);
    // edible share matches the canonical file (4208/8124)
    const std::size_t edible_count =
        static_cast<std::size_t>(std::llround(records * 4208.0 / 8124.0));
    std::vector<bool> labels(records, false);
    for (std::size_t i = 0; i < edible_count && i < records; ++i)
        labels[i] = true;
    rng.shuffle(labels);

    std::ofstream out(path);
    if (!out) throw ParseError("cannot write mushroom file " + path);
    std::string line;
    for (std::size_t i = 0; i < records; ++i) {
        line.clear();
        line += labels[i] ? 'e' : 'p';
        append_attributes(line, labels[i], rng);
        line += '\n';
        out << line;
    }
}

namespace {

// 5x7 dot-matrix digits, scaled x3 and placed at a random offset in the
// 28x28 frame.
constexpr std::array<std::array<std::uint8_t, 7>, 10> kFont = {{
    {0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110},  // 0
    {0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110},  // 1
    {0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111},  // 2
    {0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110},  // 3
    {0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010},  // 4
    {0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110},  // 5
    {0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110},  // 6
    {0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000},  // 7
    {0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110},  // 8
    {0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100},  // 9
}};

void write_be32(std::ofstream& out, std::uint32_t v) {
    const std::uint8_t b[4] = {static_cast<std::uint8_t>(v >> 24),
                               static_cast<std::uint8_t>(v >> 16),
                               static_cast<std::uint8_t>(v >> 8),
                               static_cast<std::uint8_t>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void render_digit(std::uint8_t digit, Rng& rng, std::uint8_t* img) {
    const int ox = static_cast<int>(rng.index(14));  // glyph is 15 wide
    const int oy = static_cast<int>(rng.index(8));   // and 21 tall
    const double base = rng.uniform(0.55, 0.95);
    for (int p = 0; p < 28 * 28; ++p) {
        const double v = std::fabs(0.03 * rng.normal());
        img[p] = static_cast<std::uint8_t>(std::lround(std::min(v, 0.2) * 255));
    }
    for (int gy = 0; gy < 7; ++gy) {
        for (int gx = 0; gx < 5; ++gx) {
            if (!((kFont[digit][gy] >> (4 - gx)) & 1)) continue;
            const double shade =
                std::clamp(base + 0.08 * rng.normal(), 0.0, 1.0);
            const std::uint8_t byte =
                static_cast<std::uint8_t>(std::lround(shade * 255));
            for (int sy = 0; sy < 3; ++sy)
                for (int sx = 0; sx < 3; ++sx) {
                    const int y = oy + gy * 3 + sy;
                    const int x = ox + gx * 3 + sx;
                    img[y * 28 + x] = byte;
                }
        }
    }
}

}  // namespace

void write_mnist_idx(const std::string& dir, std::size_t count,
                     std::uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    Rng rng(seed);

    std::vector<std::uint8_t> labels(count);
    for (std::size_t i = 0; i < count; ++i)
        labels[i] = static_cast<std::uint8_t>(i % 10);
    rng.shuffle(labels);

    std::ofstream img(dir + "/train-images-idx3-ubyte", std::ios::binary);
    if (!img) throw ParseError("cannot write IDX images under " + dir);
    write_be32(img, 0x00000803u);
    write_be32(img, static_cast<std::uint32_t>(count));
    write_be32(img, 28);
    write_be32(img, 28);
    std::uint8_t buf[28 * 28];
    for (std::size_t i = 0; i < count; ++i) {
        render_digit(labels[i], rng, buf);
        img.write(reinterpret_cast<const char*>(buf), sizeof(buf));
    }
    img.close();

    std::ofstream lab(dir + "/train-labels-idx1-ubyte", std::ios::binary);
    if (!lab) throw ParseError("cannot write IDX labels under " + dir);
    write_be32(lab, 0x00000801u);
    write_be32(lab, static_cast<std::uint32_t>(count));
    lab.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
}

std::string ensure_datasets(const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    if (!fs::exists(dir + "/agaricus-lepiota.data"))
        write_mushroom_csv(dir + "/agaricus-lepiota.data");
    if (!fs::exists(dir + "/train-images-idx3-ubyte") ||
        !fs::exists(dir + "/train-labels-idx1-ubyte"))
        write_mnist_idx(dir);
    return dir;
}

}  // namespace topk::datagen
