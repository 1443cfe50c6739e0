// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3m/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace s3m {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    fail(ErrorKind::Configuration, "invalid value '" + value + "' for " + key);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size() || !std::isfinite(d)) bad_value(key, v);
        return d;
    } catch (const std::logic_error&) {
        bad_value(key, v);
    }
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& v) {
    Int out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v);
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad_value(key, v);
}

std::string fmt_double(double d) {
    // Shortest text that parses back to the same double.
    char buf[40];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), d);
    return std::string(buf, end);
}

struct Entry {
    std::string key;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <typename Field>
Entry real_entry(std::string key, Field field) {
    return {key,
            [key, field](ExperimentConfig& c, const std::string& v) { field(c) = parse_double(key, v); },
            [field](const ExperimentConfig& c) { return fmt_double(field(c)); }};
}

template <typename Int, typename Field>
Entry int_entry(std::string key, Field field) {
    return {key,
            [key, field](ExperimentConfig& c, const std::string& v) { field(c) = parse_int<Int>(key, v); },
            [field](const ExperimentConfig& c) { return std::to_string(field(c)); }};
}

template <typename Field>
Entry bool_entry(std::string key, Field field) {
    return {key,
            [key, field](ExperimentConfig& c, const std::string& v) { field(c) = parse_bool(key, v); },
            [field](const ExperimentConfig& c) {
                return std::string(field(c) ? "true" : "false");
            }};
}

const std::vector<Entry>& registry() {
    using C = ExperimentConfig;
    static const std::vector<Entry> entries = {
        int_entry<int>("scene.width", [](auto& c) -> auto& { return c.scene.width; }),
        int_entry<int>("scene.height", [](auto& c) -> auto& { return c.scene.height; }),
        int_entry<int>("scene.layers", [](auto& c) -> auto& { return c.scene.layer_count; }),
        real_entry("scene.disparity_min", [](auto& c) -> auto& { return c.scene.disparity_min; }),
        real_entry("scene.disparity_max", [](auto& c) -> auto& { return c.scene.disparity_max; }),
        real_entry("scene.background_disparity", [](auto& c) -> auto& { return c.scene.background_disparity; }),
        real_entry("scene.noise", [](auto& c) -> auto& { return c.scene.texture_noise_amplitude; }),
        int_entry<int>("scene.classes", [](auto& c) -> auto& { return c.scene.class_palette_size; }),
        int_entry<std::uint64_t>("scene.seed", [](auto& c) -> auto& { return c.scene.seed; }),
        bool_entry("scene.subpixel", [](auto& c) -> auto& { return c.scene.subpixel; }),
        int_entry<int>("scene.val_samples", [](auto& c) -> auto& { return c.scene.val_samples; }),

        real_entry("model.width_multiplier", [](auto& c) -> auto& { return c.train.model.width_multiplier; }),
        int_entry<int>("model.corr_levels", [](auto& c) -> auto& { return c.train.model.corr_levels; }),
        int_entry<int>("model.corr_radius", [](auto& c) -> auto& { return c.train.model.corr_radius; }),
        int_entry<int>("model.gru_iters", [](auto& c) -> auto& { return c.train.model.gru_iters; }),
        Entry{"model.fusion",
              [](C& c, const std::string& v) {
                  if (v == "addition") c.train.model.fusion = FusionStrategy::Addition;
                  else if (v == "concatenation") c.train.model.fusion = FusionStrategy::Concatenation;
                  else bad_value("model.fusion", v);
              },
              [](const C& c) { return to_string(c.train.model.fusion); }},
        Entry{"model.deep_input",
              [](C& c, const std::string& v) {
                  if (v == "literal") c.train.model.deep_input = DeepFusionInput::Literal;
                  else if (v == "pre_fusion") c.train.model.deep_input = DeepFusionInput::PreFusion;
                  else bad_value("model.deep_input", v);
              },
              [](const C& c) { return to_string(c.train.model.deep_input); }},

        real_entry("loss.alpha", [](auto& c) -> auto& { return c.train.loss.alpha; }),
        real_entry("loss.gamma", [](auto& c) -> auto& { return c.train.loss.gamma; }),
        int_entry<int>("loss.pool_kernel", [](auto& c) -> auto& { return c.train.loss.pool_kernel; }),
        int_entry<int>("loss.ignore_label", [](auto& c) -> auto& { return c.train.loss.ignore_label; }),

        int_entry<int>("train.steps", [](auto& c) -> auto& { return c.train.steps; }),
        real_entry("train.learning_rate", [](auto& c) -> auto& { return c.train.learning_rate; }),
        real_entry("train.epsilon", [](auto& c) -> auto& { return c.train.epsilon; }),
        real_entry("train.weight_decay", [](auto& c) -> auto& { return c.train.weight_decay; }),
        int_entry<int>("train.batch_size", [](auto& c) -> auto& { return c.train.batch_size; }),
        int_entry<int>("train.crop_height", [](auto& c) -> auto& { return c.train.crop_height; }),
        int_entry<int>("train.crop_width", [](auto& c) -> auto& { return c.train.crop_width; }),
        real_entry("train.max_disparity", [](auto& c) -> auto& { return c.train.max_disparity; }),
        int_entry<std::uint64_t>("train.seed", [](auto& c) -> auto& { return c.train.seed; }),
        bool_entry("train.deterministic", [](auto& c) -> auto& { return c.train.deterministic; }),
        int_entry<int>("train.checkpoint_every", [](auto& c) -> auto& { return c.train.checkpoint_every; }),
        int_entry<int>("train.log_every", [](auto& c) -> auto& { return c.train.log_every; }),
        bool_entry("train.warmdown", [](auto& c) -> auto& { return c.train.warmdown; }),
        real_entry("train.brightness", [](auto& c) -> auto& { return c.train.brightness; }),
        real_entry("train.contrast", [](auto& c) -> auto& { return c.train.contrast; }),
        real_entry("train.grad_clip", [](auto& c) -> auto& { return c.train.grad_clip; }),
    };
    return entries;
}

}  // namespace

int ModelConfig::channels(int base) const {
    return std::max(1, static_cast<int>(std::lround(base * width_multiplier)));
}

std::string to_string(FusionStrategy s) { return s == FusionStrategy::Addition ? "addition" : "concatenation"; }
std::string to_string(DeepFusionInput d) { return d == DeepFusionInput::Literal ? "literal" : "pre_fusion"; }

void validate(const TrainConfig& c) {
    auto check = [](bool ok, const std::string& msg) { require(ok, ErrorKind::Configuration, msg); };
    check(c.model.width_multiplier > 0.0 && c.model.width_multiplier <= 1.0, "model.width_multiplier must be in (0, 1]");
    check(c.model.corr_levels >= 1 && c.model.corr_levels <= 8, "model.corr_levels must be in [1, 8]");
    check(c.model.corr_radius >= 0, "model.corr_radius must be >= 0");
    check(c.model.gru_iters >= 1, "model.gru_iters must be >= 1");
    check(c.loss.alpha >= 0.0 && c.loss.alpha <= 1.0, "loss.alpha must be in [0, 1]");
    check(c.loss.gamma > 0.0 && c.loss.gamma <= 1.0, "loss.gamma must be in (0, 1]");
    check(c.loss.pool_kernel >= 1 && c.loss.pool_kernel % 2 == 1, "loss.pool_kernel must be odd");
    check(c.steps >= 0, "train.steps must be >= 0");
    check(c.learning_rate > 0.0, "train.learning_rate must be positive");
    check(c.epsilon > 0.0, "train.epsilon must be positive");
    check(c.weight_decay >= 0.0, "train.weight_decay must be >= 0");
    check(c.batch_size >= 1, "train.batch_size must be >= 1");
    check(c.crop_height > 0 && c.crop_width > 0 && c.crop_height % 32 == 0 && c.crop_width % 32 == 0,
          "crop dimensions must be positive multiples of 32");
    check(c.max_disparity > 0.0 && c.max_disparity <= c.crop_width, "max_disparity must be in (0, crop_width]");
    check(c.checkpoint_every >= 0 && c.log_every >= 1, "checkpoint_every >= 0 and log_every >= 1 required");
    check(c.brightness >= 0.0 && c.contrast >= 0.0 && c.contrast < 1.0, "jitter amplitudes out of range");
}

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::Configuration, "line " + std::to_string(lineno) + ": expected key = value");
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value) {
    for (const auto& e : registry()) {
        if (e.key == key) {
            e.set(config, value);
            return;
        }
    }
    fail(ErrorKind::Usage, "unknown config key '" + key + "'");
}

ExperimentConfig config_from_text(const std::string& text, ExperimentConfig base) {
    for (const auto& [k, v] : parse_config_text(text)) apply_setting(base, k, v);
    return base;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::NotFound, "cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_text(ss.str());
}

std::string to_text(const ExperimentConfig& config) {
    std::string out;
    for (const auto& e : registry()) out += e.key + " = " + e.get(config) + "\n";
    return out;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& e : registry()) keys.push_back(e.key);
    return keys;
}

namespace presets {

ExperimentConfig desk() {
    ExperimentConfig c;
    c.scene.width = 128;
    c.scene.height = 64;
    c.scene.layer_count = 3;
    c.scene.disparity_min = 4.0;
    c.scene.disparity_max = 16.0;
    c.scene.background_disparity = 2.0;
    c.scene.texture_noise_amplitude = 0.4;
    c.scene.class_palette_size = 5;
    c.scene.seed = 1;
    c.train.model.width_multiplier = 0.125;
    c.train.model.gru_iters = 8;
    c.train.steps = 5000;
    c.train.crop_height = 64;
    c.train.crop_width = 128;
    c.train.max_disparity = 32.0;
    c.train.checkpoint_every = 1000;
    c.train.log_every = 10;
    return c;
}

ExperimentConfig full() {
    ExperimentConfig c;
    c.scene.width = 1248;
    c.scene.height = 384;
    c.scene.layer_count = 8;
    c.scene.disparity_min = 8.0;
    c.scene.disparity_max = 192.0;
    c.scene.background_disparity = 4.0;
    c.scene.class_palette_size = 19;
    c.train.model.width_multiplier = 1.0;
    c.train.steps = 100000;
    c.train.crop_height = 320;
    c.train.crop_width = 1024;
    c.train.max_disparity = 192.0;
    return c;
}

}  // namespace presets

}  // namespace s3m
