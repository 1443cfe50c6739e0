// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3m/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "s3m/png_io.hpp"

namespace s3m::dataio {
namespace fs = std::filesystem;
using nlohmann::json;

void validate(const StereoSample& s, double max_disparity) {
    require(s.left.channels() == 3 && s.right.channels() == 3, ErrorKind::Consistency, "images must be RGB");
    require(s.left.same_extent(s.right), ErrorKind::Consistency,
            "left " + std::to_string(s.left.height()) + "x" + std::to_string(s.left.width()) + " vs right " +
                std::to_string(s.right.height()) + "x" + std::to_string(s.right.width()));
    require(s.left.same_extent(s.disparity) && s.left.same_extent(s.disparity_valid) && s.left.same_extent(s.labels),
            ErrorKind::Consistency, "ground-truth rasters do not match image extent");
    if (s.occlusion) require(s.left.same_extent(*s.occlusion), ErrorKind::Consistency, "occlusion mask extent");
    require(s.class_count >= 2 && s.class_count <= kIgnoreLabel, ErrorKind::Label,
            "class_count must be in [2, 255], got " + std::to_string(s.class_count));

    for (std::size_t i = 0; i < s.labels.size(); ++i) {
        const auto label = s.labels.data()[i];
        if (label != kIgnoreLabel && label >= s.class_count)
            fail(ErrorKind::Label, "label " + std::to_string(label) + " >= class_count " + std::to_string(s.class_count));
    }
    for (std::size_t i = 0; i < s.disparity.size(); ++i) {
        if (!s.disparity_valid.data()[i]) continue;
        const float d = s.disparity.data()[i];
        if (!std::isfinite(d) || d < 0.0F || d > max_disparity)
            fail(ErrorKind::Range, "valid disparity " + std::to_string(d) + " outside [0, " +
                                       std::to_string(max_disparity) + "]");
    }
}

Image<std::uint16_t> encode_disparity_16bit(const ImageF& disparity, const Mask& valid) {
    require_same_extent(disparity, valid, "encode_disparity_16bit");
    Image<std::uint16_t> raw(disparity.height(), disparity.width(), 1);
    for (std::size_t i = 0; i < disparity.size(); ++i) {
        if (!valid.data()[i]) continue;
        const double d = disparity.data()[i];
        if (!std::isfinite(d) || d < 0.0 || d >= 256.0)
            fail(ErrorKind::Range, "disparity " + std::to_string(d) + " not encodable in [0, 256)");
        const double scaled = std::round(d * kDisparityScale);
        raw.data()[i] = static_cast<std::uint16_t>(std::clamp(scaled, 1.0, 65535.0));
    }
    return raw;
}

std::pair<ImageF, Mask> decode_disparity_16bit(const Image<std::uint16_t>& raw) {
    ImageF disparity(raw.height(), raw.width(), 1);
    Mask valid(raw.height(), raw.width(), 1);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto v = raw.data()[i];
        valid.data()[i] = v != 0;
        disparity.data()[i] = static_cast<float>(v / kDisparityScale);
    }
    return {std::move(disparity), std::move(valid)};
}

const std::vector<std::string>& Manifest::split(const std::string& name) const {
    auto it = splits.find(name);
    if (it == splits.end()) fail(ErrorKind::Data, "split '" + name + "' not present in manifest");
    if (it->second.empty()) fail(ErrorKind::Data, "split '" + name + "' is empty");
    return it->second;
}

Manifest load_manifest(const fs::path& root) {
    const auto path = root / "manifest.json";
    std::ifstream in(path);
    if (!in) fail(ErrorKind::NotFound, "missing manifest " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(ErrorKind::Data, "malformed manifest " + path.string() + ": " + e.what());
    }
    Manifest m;
    try {
        m.class_count = j.at("class_count").get<int>();
        for (const auto& c : j.value("classes", json::array())) {
            ClassInfo info;
            info.name = c.at("name").get<std::string>();
            info.color = c.at("color").get<std::array<std::uint8_t, 3>>();
            m.classes.push_back(std::move(info));
        }
        m.splits = j.value("splits", std::map<std::string, std::vector<std::string>>{});
        m.sample_seeds = j.value("sample_seeds", std::map<std::string, std::uint64_t>{});
        m.generator = j.value("generator", std::string{});
    } catch (const json::exception& e) {
        fail(ErrorKind::Data, "manifest " + path.string() + ": " + e.what());
    }
    require(m.class_count >= 2 && m.class_count < kIgnoreLabel, ErrorKind::Data, "manifest class_count out of range");
    return m;
}

void save_manifest(const fs::path& root, const Manifest& m) {
    json j;
    j["class_count"] = m.class_count;
    j["classes"] = json::array();
    for (const auto& c : m.classes) j["classes"].push_back({{"name", c.name}, {"color", c.color}});
    j["splits"] = m.splits;
    j["sample_seeds"] = m.sample_seeds;
    j["generator"] = m.generator;
    std::ofstream out(root / "manifest.json");
    if (!out) fail(ErrorKind::Io, "cannot write manifest under " + root.string());
    out << j.dump(2) << '\n';
    if (!out) fail(ErrorKind::Io, "write failed for manifest under " + root.string());
}

ImageF to_float_rgb(const Image<std::uint8_t>& rgb) {
    ImageF out(rgb.height(), rgb.width(), rgb.channels());
    std::transform(rgb.data().begin(), rgb.data().end(), out.data().begin(),
                   [](std::uint8_t v) { return static_cast<float>(v) / 255.0F; });
    return out;
}

Image<std::uint8_t> to_u8_rgb(const ImageF& rgb) {
    Image<std::uint8_t> out(rgb.height(), rgb.width(), rgb.channels());
    std::transform(rgb.data().begin(), rgb.data().end(), out.data().begin(), [](float v) {
        return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0F, 1.0F) * 255.0F));
    });
    return out;
}

ImageF load_rgb(const fs::path& path) { return to_float_rgb(png::read_u8(path, 3)); }

StereoSample load_sample(const fs::path& root, const std::string& sample_id) {
    return load_sample(root, sample_id, load_manifest(root));
}

StereoSample load_sample(const fs::path& root, const std::string& sample_id, const Manifest& manifest) {
    const auto dir = root / sample_id;
    for (const char* name : {"left.png", "right.png", "disp.png", "labels.png"}) {
        if (!fs::exists(dir / name)) fail(ErrorKind::NotFound, "missing " + (dir / name).string());
    }
    StereoSample s;
    s.class_count = manifest.class_count;
    s.left = load_rgb(dir / "left.png");
    s.right = load_rgb(dir / "right.png");
    auto [disparity, valid] = decode_disparity_16bit(png::read_u16(dir / "disp.png"));
    s.disparity = std::move(disparity);
    s.disparity_valid = std::move(valid);
    s.labels = png::read_u8(dir / "labels.png", 1);
    if (fs::exists(dir / "occlusion.png")) {
        auto occ = png::read_u8(dir / "occlusion.png", 1);
        for (auto& v : occ.data()) v = v ? 1 : 0;
        s.occlusion = std::move(occ);
    }
    validate(s);
    return s;
}

void save_sample(const fs::path& root, const std::string& sample_id, const StereoSample& s) {
    validate(s);
    const auto dir = root / sample_id;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
    png::write_u8(dir / "left.png", to_u8_rgb(s.left));
    png::write_u8(dir / "right.png", to_u8_rgb(s.right));
    png::write_u16(dir / "disp.png", encode_disparity_16bit(s.disparity, s.disparity_valid));
    png::write_u8(dir / "labels.png", s.labels);
    if (s.occlusion) {
        Mask occ = *s.occlusion;
        for (auto& v : occ.data()) v = v ? 255 : 0;
        png::write_u8(dir / "occlusion.png", occ);
    }
}

}  // namespace s3m::dataio
