// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3m/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

namespace s3m::synthgen {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Portable draws from the raw engine output; std distributions are not
// specified bit-exactly across standard libraries.
int draw_int(std::mt19937_64& rng, int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(rng() % span);
}

double draw_unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Per-pixel texture noise in [0,1), addressed in the layer's own (left-view) coordinates.
double noise(std::uint64_t seed, int layer, int row, int col, int ch) {
    std::uint64_t h = splitmix64(seed ^ 0xA5A5A5A5ULL);
    h = splitmix64(h ^ static_cast<std::uint64_t>(layer + 1));
    h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(row)));
    h = splitmix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(col)) << 2 | static_cast<std::uint64_t>(ch)));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

struct Texturer {
    std::uint64_t seed;
    double amplitude;

    /// Quantized to the 8-bit grid so in-memory and on-disk samples agree.
    [[nodiscard]] float at(int layer, int class_id, int row, int col, int ch) const {
        const double base = class_color(class_id)[ch] / 255.0;
        const double v = std::clamp(base + amplitude * (noise(seed, layer, row, col, ch) - 0.5), 0.0, 1.0);
        return static_cast<float>(std::round(v * 255.0) / 255.0);
    }

    [[nodiscard]] float sample(int layer, int class_id, int row, double col, int ch) const {
        const double fl = std::floor(col);
        const double t = col - fl;
        const int c0 = static_cast<int>(fl);
        if (t == 0.0) return at(layer, class_id, row, c0, ch);
        return static_cast<float>((1.0 - t) * at(layer, class_id, row, c0, ch) + t * at(layer, class_id, row, c0 + 1, ch));
    }
};

bool covers_right(const Layer& layer, int row, double x) {
    const double src = x + layer.disparity;
    return row >= layer.y0 && row < layer.y1 && src >= layer.x0 && src < layer.x1;
}

}  // namespace

std::array<std::uint8_t, 3> class_color(int class_id) {
    static constexpr std::array<std::array<std::uint8_t, 3>, 10> kPalette{{
        {90, 90, 90},
        {200, 60, 60},
        {60, 170, 70},
        {60, 90, 200},
        {210, 190, 60},
        {170, 70, 190},
        {60, 190, 190},
        {220, 130, 50},
        {140, 140, 220},
        {120, 60, 40},
    }};
    if (class_id >= 0 && class_id < static_cast<int>(kPalette.size())) return kPalette[class_id];
    const auto h = splitmix64(static_cast<std::uint64_t>(class_id));
    return {static_cast<std::uint8_t>(40 + (h & 0xFF) % 180), static_cast<std::uint8_t>(40 + ((h >> 8) & 0xFF) % 180),
            static_cast<std::uint8_t>(40 + ((h >> 16) & 0xFF) % 180)};
}

void validate(const SceneConfig& c) {
    auto bad = [](const std::string& msg) { fail(ErrorKind::Configuration, msg); };
    if (c.width < 8 || c.height < 4) bad("scene extent too small");
    if (c.layer_count < 0) bad("layer_count must be >= 0");
    if (!(c.disparity_min > 0.0 && c.disparity_min <= c.disparity_max && c.disparity_max < c.width / 4.0))
        bad("disparity range must satisfy 0 < d_min <= d_max < width/4");
    if (c.background_disparity < 0.0 || c.background_disparity >= c.width / 4.0)
        bad("background disparity must lie in [0, width/4)");
    if (c.texture_noise_amplitude < 0.0 || c.texture_noise_amplitude > 1.0) bad("texture noise amplitude outside [0,1]");
    if (c.class_palette_size < c.layer_count + 1 || c.class_palette_size > 254)
        bad("class_palette_size must be in [layer_count + 1, 254]");
    if (!c.subpixel) {
        if (c.background_disparity != std::floor(c.background_disparity))
            bad("background disparity must be an integer unless subpixel mode is on");
        // Strictly increasing integer disparities, all nearer than the background.
        const double lo = std::max(std::ceil(c.disparity_min), c.background_disparity + 1.0);
        const double hi = std::floor(c.disparity_max);
        if (c.layer_count > 0 && hi - lo + 1.0 < c.layer_count)
            bad("disparity budget infeasible: need " + std::to_string(c.layer_count) +
                " distinct integers in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    } else if (c.layer_count > 0 && c.disparity_min <= c.background_disparity) {
        bad("layers must be nearer than the background (d_min > background disparity)");
    }
    const int min_rect_width = std::max(4, c.width / 6);
    if (c.layer_count > 0 && c.width - static_cast<int>(std::ceil(c.disparity_max)) < min_rect_width)
        bad("rectangles do not fit: width - d_max < minimum rectangle width");
    if (c.val_samples < 0) bad("val_samples must be >= 0");
}

Scene generate_scene(const SceneConfig& config) {
    validate(config);
    const int H = config.height;
    const int W = config.width;
    std::mt19937_64 rng(splitmix64(config.seed));

    // Layer disparities, far to near.
    std::vector<double> disparities;
    if (config.subpixel) {
        for (int k = 0; k < config.layer_count; ++k)
            disparities.push_back(config.disparity_min + draw_unit(rng) * (config.disparity_max - config.disparity_min));
        std::sort(disparities.begin(), disparities.end());
        for (std::size_t k = 1; k < disparities.size(); ++k)
            if (disparities[k] <= disparities[k - 1]) disparities[k] = std::nextafter(disparities[k - 1], 1e9);
    } else {
        const int lo = static_cast<int>(std::max(std::ceil(config.disparity_min), config.background_disparity + 1.0));
        const int hi = static_cast<int>(std::floor(config.disparity_max));
        std::vector<int> pool(hi - lo + 1);
        std::iota(pool.begin(), pool.end(), lo);
        for (int k = 0; k < config.layer_count; ++k) {
            const int pick = draw_int(rng, k, static_cast<int>(pool.size()) - 1);
            std::swap(pool[k], pool[pick]);
        }
        for (int k = 0; k < config.layer_count; ++k) disparities.push_back(pool[k]);
        std::sort(disparities.begin(), disparities.end());
    }

    // Distinct non-background classes.
    std::vector<int> classes(config.class_palette_size - 1);
    std::iota(classes.begin(), classes.end(), 1);
    for (int k = 0; k < config.layer_count; ++k) {
        const int pick = draw_int(rng, k, static_cast<int>(classes.size()) - 1);
        std::swap(classes[k], classes[pick]);
    }

    Scene scene;
    const int min_w = std::max(4, W / 6);
    const int max_w = std::max(min_w, W / 3);
    const int min_h = std::max(2, H / 4);
    const int max_h = std::max(min_h, H / 2);
    for (int k = 0; k < config.layer_count; ++k) {
        Layer layer;
        layer.disparity = disparities[k];
        layer.class_id = classes[k];
        const int d_ceil = static_cast<int>(std::ceil(layer.disparity));
        const int rw = std::min(draw_int(rng, min_w, max_w), W - d_ceil);
        const int rh = draw_int(rng, min_h, max_h);
        layer.x0 = draw_int(rng, d_ceil, W - rw);
        layer.y0 = draw_int(rng, 0, H - rh);
        layer.x1 = layer.x0 + rw;
        layer.y1 = layer.y0 + rh;
        scene.layers.push_back(layer);
    }

    const Texturer tex{config.seed, config.texture_noise_amplitude};
    auto& s = scene.sample;
    s.class_count = config.class_palette_size;
    s.left = ImageF(H, W, 3);
    s.right = ImageF(H, W, 3);
    s.disparity = ImageF(H, W, 1);
    s.disparity_valid = Mask(H, W, 1, 1);
    s.labels = LabelMap(H, W, 1, 0);
    s.occlusion = Mask(H, W, 1, 0);

    const auto& layers = scene.layers;
    const int n_layers = static_cast<int>(layers.size());
    // Index -1 denotes the background plane.
    auto front_left = [&](int row, int col) {
        for (int k = n_layers - 1; k >= 0; --k) {
            const auto& l = layers[k];
            if (row >= l.y0 && row < l.y1 && col >= l.x0 && col < l.x1) return k;
        }
        return -1;
    };
    auto front_right = [&](int row, double x) {
        for (int k = n_layers - 1; k >= 0; --k)
            if (covers_right(layers[k], row, x)) return k;
        return -1;
    };
    auto layer_disparity = [&](int k) { return k < 0 ? config.background_disparity : layers[k].disparity; };
    auto layer_class = [&](int k) { return k < 0 ? 0 : layers[k].class_id; };
    auto texture_index = [](int k) { return k + 1; };

    for (int i = 0; i < H; ++i) {
        for (int j = 0; j < W; ++j) {
            const int f = front_left(i, j);
            const double d = layer_disparity(f);
            for (int ch = 0; ch < 3; ++ch) s.left(i, j, ch) = tex.at(texture_index(f), layer_class(f), i, j, ch);
            s.disparity(i, j) = static_cast<float>(d);
            s.labels(i, j) = static_cast<std::uint8_t>(layer_class(f));
            const double x = j - d;
            (*s.occlusion)(i, j) = (x < 0.0 || front_right(i, x) != f) ? 1 : 0;

            const int g = front_right(i, j);
            const double src = j + layer_disparity(g);
            for (int ch = 0; ch < 3; ++ch) s.right(i, j, ch) = tex.sample(texture_index(g), layer_class(g), i, src, ch);
        }
    }
    return scene;
}

std::uint64_t sample_seed(std::uint64_t dataset_seed, int index) {
    return splitmix64(dataset_seed * 0x100000001B3ULL + static_cast<std::uint64_t>(index));
}

std::string sample_id(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d", index);
    return buf;
}

dataio::Manifest generate_dataset(const SceneConfig& config, int sample_count, const std::filesystem::path& out_root) {
    validate(config);
    require(sample_count >= 1, ErrorKind::Configuration, "sample count must be >= 1");
    require(config.val_samples < sample_count || config.val_samples == 0, ErrorKind::Configuration,
            "val_samples must leave at least one training sample");
    std::error_code ec;
    std::filesystem::create_directories(out_root, ec);
    if (ec) fail(ErrorKind::Io, "cannot create " + out_root.string() + ": " + ec.message());

    dataio::Manifest manifest;
    manifest.class_count = config.class_palette_size;
    for (int c = 0; c < config.class_palette_size; ++c)
        manifest.classes.push_back({c == 0 ? "background" : "layer_class_" + std::to_string(c), class_color(c)});
    auto& train = manifest.splits["train"];
    auto& val = manifest.splits["val"];
    for (int n = 0; n < sample_count; ++n) {
        SceneConfig scene_config = config;
        scene_config.seed = sample_seed(config.seed, n);
        const auto id = sample_id(n);
        auto scene = generate_scene(scene_config);
        dataio::save_sample(out_root, id, scene.sample);
        manifest.sample_seeds[id] = scene_config.seed;
        (n >= sample_count - config.val_samples ? val : train).push_back(id);
    }
    std::ostringstream gen;
    gen << "synthgen width=" << config.width << " height=" << config.height << " layers=" << config.layer_count
        << " d_min=" << config.disparity_min << " d_max=" << config.disparity_max
        << " bg=" << config.background_disparity << " noise=" << config.texture_noise_amplitude
        << " classes=" << config.class_palette_size << " seed=" << config.seed << " subpixel=" << config.subpixel;
    manifest.generator = gen.str();
    dataio::save_manifest(out_root, manifest);
    return manifest;
}

}  // namespace s3m::synthgen
