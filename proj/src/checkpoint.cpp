// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3m/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <sstream>

#include "s3m/errors.hpp"

namespace s3m::checkpoint {

namespace {

constexpr std::array<char, 8> kMagic{'S', '3', 'M', 'C', 'K', 'P', 'T', '1'};

constexpr std::array<torch::Dtype, 6> kDtypes{torch::kFloat32, torch::kFloat64, torch::kInt64,
                                              torch::kUInt8,   torch::kBool,    torch::kInt32};

std::uint8_t dtype_code(torch::Dtype dtype) {
    for (std::size_t i = 0; i < kDtypes.size(); ++i)
        if (kDtypes[i] == dtype) return static_cast<std::uint8_t>(i);
    fail(ErrorKind::Data, std::string("unsupported tensor dtype in checkpoint: ") + c10::toString(dtype));
}

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    }
    template <typename T>
    void pod(T value) {
        out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
    }
    void bytes(const void* data, std::size_t n) { out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n)); }
    void text(const std::string& s) {
        pod<std::uint64_t>(s.size());
        bytes(s.data(), s.size());
    }
    void finish(const std::filesystem::path& path) {
        out_.flush();
        if (!out_) fail(ErrorKind::Io, "failed writing " + path.string());
    }

private:
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
        if (!std::filesystem::exists(path)) fail(ErrorKind::NotFound, "checkpoint not found: " + path.string());
        if (!in_) fail(ErrorKind::Io, "cannot open " + path.string());
    }
    template <typename T>
    T pod() {
        T value{};
        bytes(&value, sizeof(T));
        return value;
    }
    void bytes(void* data, std::size_t n) {
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) fail(ErrorKind::Data, "truncated checkpoint " + path_.string());
    }
    std::string text() {
        const auto n = pod<std::uint64_t>();
        if (n > (std::uint64_t{1} << 32)) fail(ErrorKind::Data, "corrupt string length in " + path_.string());
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }

private:
    std::filesystem::path path_;
    std::ifstream in_;
};

}  // namespace

Checkpoint capture(torch::nn::Module& model, const torch::optim::AdamW* optimizer, std::uint64_t step,
                   std::string config_text) {
    Checkpoint ckpt;
    ckpt.step = step;
    ckpt.config_text = std::move(config_text);
    for (const auto& item : model.named_parameters())
        ckpt.tensors["model/" + item.key()] = item.value().detach().clone();
    for (const auto& item : model.named_buffers())
        ckpt.tensors["buffer/" + item.key()] = item.value().detach().clone();
    if (optimizer) {
        const auto& state = optimizer->state();
        for (const auto& item : model.named_parameters()) {
            auto it = state.find(item.value().unsafeGetTensorImpl());
            if (it == state.end()) continue;
            const auto& s = static_cast<const torch::optim::AdamWParamState&>(*it->second);
            const auto prefix = "optim/" + item.key() + "/";
            ckpt.tensors[prefix + "exp_avg"] = s.exp_avg().detach().clone();
            ckpt.tensors[prefix + "exp_avg_sq"] = s.exp_avg_sq().detach().clone();
            ckpt.tensors[prefix + "step"] = torch::tensor(s.step(), torch::kInt64);
        }
    }
    return ckpt;
}

void restore(const Checkpoint& ckpt, torch::nn::Module& model, torch::optim::AdamW* optimizer) {
    torch::NoGradGuard no_grad;
    auto copy_into = [&](const std::string& key, torch::Tensor& target) {
        auto it = ckpt.tensors.find(key);
        if (it == ckpt.tensors.end()) fail(ErrorKind::Consistency, "checkpoint lacks " + key);
        if (it->second.sizes() != target.sizes()) {
            std::ostringstream msg;
            msg << "checkpoint entry " << key << " has shape " << it->second.sizes() << ", model expects "
                << target.sizes();
            fail(ErrorKind::Consistency, msg.str());
        }
        target.copy_(it->second);
    };
    for (auto& item : model.named_parameters()) copy_into("model/" + item.key(), item.value());
    for (auto& item : model.named_buffers()) copy_into("buffer/" + item.key(), item.value());
    if (!optimizer) return;
    auto& state = optimizer->state();
    state.clear();
    for (const auto& item : model.named_parameters()) {
        const auto prefix = "optim/" + item.key() + "/";
        auto avg = ckpt.tensors.find(prefix + "exp_avg");
        if (avg == ckpt.tensors.end()) continue;
        auto s = std::make_unique<torch::optim::AdamWParamState>();
        s->exp_avg(avg->second.clone());
        s->exp_avg_sq(ckpt.tensors.at(prefix + "exp_avg_sq").clone());
        s->step(ckpt.tensors.at(prefix + "step").item<int64_t>());
        state[item.value().unsafeGetTensorImpl()] = std::move(s);
    }
}

void write(const std::filesystem::path& path, const Checkpoint& ckpt) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        Writer w(tmp);
        w.bytes(kMagic.data(), kMagic.size());
        w.pod<std::uint32_t>(ckpt.version);
        w.pod<std::uint64_t>(ckpt.step);
        w.text(ckpt.config_text);
        w.pod<std::uint64_t>(ckpt.tensors.size());
        for (const auto& [key, value] : ckpt.tensors) {
            auto t = value.detach().to(torch::kCPU).contiguous();
            w.text(key);
            w.pod<std::uint8_t>(dtype_code(t.scalar_type()));
            w.pod<std::uint8_t>(static_cast<std::uint8_t>(t.dim()));
            for (auto d : t.sizes()) w.pod<std::int64_t>(d);
            w.bytes(t.data_ptr(), t.nbytes());
        }
        w.finish(tmp);
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint read(const std::filesystem::path& path) {
    Reader r(path);
    std::array<char, 8> magic{};
    r.bytes(magic.data(), magic.size());
    if (magic != kMagic) fail(ErrorKind::Data, path.string() + " is not a checkpoint");
    Checkpoint ckpt;
    ckpt.version = r.pod<std::uint32_t>();
    if (ckpt.version != kFormatVersion)
        fail(ErrorKind::Data, "unsupported checkpoint version " + std::to_string(ckpt.version));
    ckpt.step = r.pod<std::uint64_t>();
    ckpt.config_text = r.text();
    const auto count = r.pod<std::uint64_t>();
    for (std::uint64_t e = 0; e < count; ++e) {
        auto key = r.text();
        const auto code = r.pod<std::uint8_t>();
        if (code >= kDtypes.size()) fail(ErrorKind::Data, "unknown dtype code in " + key);
        const auto ndim = r.pod<std::uint8_t>();
        std::vector<int64_t> dims(ndim);
        for (auto& d : dims) {
            d = r.pod<std::int64_t>();
            if (d < 0) fail(ErrorKind::Data, "negative extent in " + key);
        }
        auto t = torch::empty(dims, torch::TensorOptions().dtype(kDtypes[code]));
        r.bytes(t.data_ptr(), t.nbytes());
        ckpt.tensors.emplace(std::move(key), std::move(t));
    }
    return ckpt;
}

}  // namespace s3m::checkpoint
