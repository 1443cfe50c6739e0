// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3m/train_eval.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "s3m/errors.hpp"
#include "s3m/png_io.hpp"
#include "s3m/scg_loss.hpp"
#include "s3m/tensor_utils.hpp"

namespace s3m::train {

namespace F = torch::nn::functional;

namespace {

constexpr const char* kClassCountKey = "meta/class_count";

bool env_forces_determinism() {
    const char* value = std::getenv("S3M_DETERMINISTIC");
    return value != nullptr && std::string(value) == "1";
}

Batch stack(const std::vector<Batch>& parts) {
    if (parts.size() == 1) return parts.front();
    std::vector<torch::Tensor> l, r, d, v, m;
    for (const auto& p : parts) {
        l.push_back(p.left);
        r.push_back(p.right);
        d.push_back(p.disparity);
        v.push_back(p.valid);
        m.push_back(p.labels);
    }
    return {torch::cat(l), torch::cat(r), torch::cat(d), torch::cat(v), torch::cat(m)};
}

std::vector<torch::Tensor> clone_buffers(torch::nn::Module& module) {
    std::vector<torch::Tensor> out;
    for (const auto& b : module.buffers()) out.push_back(b.detach().clone());
    return out;
}

void restore_buffers(torch::nn::Module& module, const std::vector<torch::Tensor>& saved) {
    torch::NoGradGuard no_grad;
    auto buffers = module.buffers();
    for (std::size_t i = 0; i < buffers.size(); ++i) buffers[i].copy_(saved[i]);
}

}  // namespace

std::vector<dataio::StereoSample> load_split(const std::filesystem::path& root, const std::string& split,
                                             int& class_count) {
    const auto manifest = dataio::load_manifest(root);
    class_count = manifest.class_count;
    std::vector<dataio::StereoSample> samples;
    for (const auto& id : manifest.split(split)) samples.push_back(dataio::load_sample(root, id, manifest));
    return samples;
}

bool configure_runtime(const TrainConfig& config) {
    const bool deterministic = config.deterministic || env_forces_determinism();
    if (deterministic) {
        at::set_num_threads(1);
        at::globalContext().setDeterministicAlgorithms(true, false);
    }
    return deterministic;
}

Batch to_batch(const dataio::StereoSample& sample) {
    Batch b;
    b.left = to_tensor(sample.left).unsqueeze(0);
    b.right = to_tensor(sample.right).unsqueeze(0);
    b.disparity = to_tensor(sample.disparity).squeeze(0).unsqueeze(0);
    b.valid = to_tensor(sample.disparity_valid, torch::kBool).unsqueeze(0);
    b.labels = to_tensor(sample.labels, torch::kLong).unsqueeze(0);
    return b;
}

Batch augment(const dataio::StereoSample& sample, const TrainConfig& config, std::mt19937_64& rng) {
    const int h = sample.height(), w = sample.width();
    if (h < config.crop_height || w < config.crop_width)
        fail(ErrorKind::Data, "sample " + std::to_string(w) + "x" + std::to_string(h) + " smaller than crop " +
                                  std::to_string(config.crop_width) + "x" + std::to_string(config.crop_height));
    std::uniform_int_distribution<int> row(0, h - config.crop_height);
    std::uniform_int_distribution<int> col(0, w - config.crop_width);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const int y0 = row(rng), x0 = col(rng);
    const double brightness = config.brightness * unit(rng);
    const double contrast = 1.0 + config.contrast * unit(rng);

    auto full = to_batch(sample);
    auto crop = [&](const torch::Tensor& t) {
        return t.narrow(-2, y0, config.crop_height).narrow(-1, x0, config.crop_width).contiguous();
    };
    auto jitter = [&](const torch::Tensor& t) { return ((t - 0.5) * contrast + 0.5 + brightness).clamp(0.0, 1.0); };
    return {jitter(crop(full.left)), jitter(crop(full.right)), crop(full.disparity), crop(full.valid),
            crop(full.labels)};
}

std::uint64_t step_seed(std::uint64_t seed, std::uint64_t step) {
    std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + step + 0x632BE59BD9B4E019ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::string format_log_line(const StepRecord& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%llu, %.9g, %.9g, %.9g, %.9g", static_cast<unsigned long long>(r.step),
                  r.loss.segmentation, r.loss.stereo, r.loss.total, r.learning_rate);
    return buf;
}

// ---------------------------------------------------------------------------

Trainer::Trainer(ExperimentConfig config, std::vector<dataio::StereoSample> dataset, int class_count)
    : config_(std::move(config)), dataset_(std::move(dataset)), class_count_(class_count) {
    validate(config_.train);
    require(!dataset_.empty(), ErrorKind::Data, "training set is empty");
    require(class_count_ >= 2, ErrorKind::Configuration, "need at least 2 classes");
    configure_runtime(config_.train);
    torch::manual_seed(config_.train.seed);
    model_ = S3MNet(config_.train.model, class_count_);
    const auto& t = config_.train;
    optimizer_ = std::make_unique<torch::optim::AdamW>(
        model_->parameters(),
        torch::optim::AdamWOptions(t.learning_rate).eps(t.epsilon).weight_decay(t.weight_decay));
}

double Trainer::current_learning_rate() const {
    const auto& t = config_.train;
    if (!t.warmdown) return t.learning_rate;
    const double progress = static_cast<double>(step_) / static_cast<double>(std::max(1, t.steps));
    return t.learning_rate * std::max(0.0, 1.0 - progress);
}

Batch Trainer::next_batch() const {
    std::mt19937_64 rng(step_seed(config_.train.seed, step_));
    std::uniform_int_distribution<std::size_t> pick(0, dataset_.size() - 1);
    std::vector<Batch> parts;
    for (int b = 0; b < config_.train.batch_size; ++b) parts.push_back(augment(dataset_[pick(rng)], config_.train, rng));
    return stack(parts);
}

std::pair<torch::Tensor, LossBreakdown> Trainer::compute_loss(const Batch& batch) {
    const auto& loss = config_.train.loss;
    auto out = model_(batch.left, batch.right);
    auto weights = scg::scg_weight_map(batch.labels, class_count_, loss.pool_kernel, loss.ignore_label);
    auto valid = batch.valid & (batch.disparity < config_.train.max_disparity);
    auto l_ss = scg::segmentation_loss(out.logits, batch.labels, weights, loss.alpha, loss.ignore_label);
    auto l_sm = scg::stereo_loss(out.disparity.maps, batch.disparity, valid, weights, loss.alpha, loss.gamma);
    auto total = scg::total_loss(l_ss, l_sm);
    LossBreakdown parts{l_ss.item<double>(), l_sm.item<double>(), 0.0};
    parts.total = total.item<double>();
    return {total, parts};
}

LossBreakdown Trainer::evaluate_loss(const Batch& batch) {
    torch::NoGradGuard no_grad;
    const auto saved = clone_buffers(*model_);
    model_->train();
    auto parts = compute_loss(batch).second;
    restore_buffers(*model_, saved);
    return parts;
}

StepRecord Trainer::step() { return step_on(next_batch()); }

StepRecord Trainer::step_on(const Batch& batch) {
    const double lr = current_learning_rate();
    for (auto& group : optimizer_->param_groups())
        static_cast<torch::optim::AdamWOptions&>(group.options()).lr(lr);
    model_->train();
    optimizer_->zero_grad();
    auto [total, parts] = compute_loss(batch);
    if (!std::isfinite(parts.total)) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "loss diverged at step %llu (l_ss=%g, l_sm=%g)",
                      static_cast<unsigned long long>(step_ + 1), parts.segmentation, parts.stereo);
        fail(ErrorKind::Divergence, buf);
    }
    total.backward();
    if (config_.train.grad_clip > 0.0) torch::nn::utils::clip_grad_norm_(model_->parameters(), config_.train.grad_clip);
    optimizer_->step();
    ++step_;
    return {step_, parts, lr};
}

checkpoint::Checkpoint Trainer::snapshot() {
    auto ckpt = checkpoint::capture(*model_, optimizer_.get(), step_, to_text(config_));
    ckpt.tensors[kClassCountKey] = torch::tensor(static_cast<int64_t>(class_count_), torch::kInt64);
    return ckpt;
}

void Trainer::resume(const checkpoint::Checkpoint& ckpt) {
    checkpoint::restore(ckpt, *model_, optimizer_.get());
    step_ = ckpt.step;
}

checkpoint::Checkpoint make_checkpoint(Trainer& trainer) { return trainer.snapshot(); }

TrainResult train(const ExperimentConfig& config, const std::filesystem::path& dataset_root,
                  const std::filesystem::path& out_dir, const TrainOptions& options) {
    int class_count = 0;
    auto samples = load_split(dataset_root, "train", class_count);
    Trainer trainer(config, std::move(samples), class_count);
    if (options.resume_from) trainer.resume(checkpoint::read(*options.resume_from));

    std::filesystem::create_directories(out_dir);
    {
        std::ofstream cfg(out_dir / "config.cfg");
        cfg << to_text(config);
    }
    const auto mode = options.resume_from ? std::ios::app : std::ios::trunc;
    std::ofstream log(out_dir / "metrics.log", std::ios::out | mode);
    if (!log) fail(ErrorKind::Io, "cannot open " + (out_dir / "metrics.log").string());

    TrainResult result;
    const auto& t = config.train;
    while (trainer.steps_done() < static_cast<std::uint64_t>(t.steps)) {
        const auto record = trainer.step();
        result.log.push_back(record);
        log << format_log_line(record) << '\n';
        if (options.verbose && t.log_every > 0 && record.step % static_cast<std::uint64_t>(t.log_every) == 0)
            std::cout << "step " << format_log_line(record) << std::endl;
        if (t.checkpoint_every > 0 && record.step % static_cast<std::uint64_t>(t.checkpoint_every) == 0) {
            char name[32];
            std::snprintf(name, sizeof name, "ckpt_%06llu.s3m", static_cast<unsigned long long>(record.step));
            checkpoint::write(out_dir / name, trainer.snapshot());
            log.flush();
        }
    }
    result.final_checkpoint = out_dir / "final.s3m";
    checkpoint::write(result.final_checkpoint, trainer.snapshot());
    return result;
}

// ---------------------------------------------------------------------------

metrics::MetricsReport evaluate_samples(const Predictor& predictor, const std::vector<dataio::StereoSample>& samples,
                                        int class_count) {
    require(!samples.empty(), ErrorKind::Data, "evaluation set is empty");
    metrics::ConfusionMatrix cm(class_count);
    metrics::StereoAccumulator stereo;
    for (const auto& sample : samples) {
        const auto pred = predictor(sample);
        require_same_extent(pred.labels, sample.labels, "predicted labels");
        require_same_extent(pred.disparity, sample.disparity, "predicted disparity");
        cm += metrics::confusion_matrix(pred.labels, sample.labels, class_count, dataio::kIgnoreLabel);
        stereo += metrics::accumulate_stereo(pred.disparity, sample.disparity, sample.disparity_valid);
    }
    return {metrics::segmentation_metrics(cm), metrics::finalize(stereo)};
}

metrics::MetricsReport evaluate(const Predictor& predictor, const std::filesystem::path& dataset_root,
                                const std::string& split) {
    int class_count = 0;
    auto samples = load_split(dataset_root, split, class_count);
    return evaluate_samples(predictor, samples, class_count);
}

LoadedModel load_model(const checkpoint::Checkpoint& ckpt) {
    LoadedModel loaded;
    loaded.config = config_from_text(ckpt.config_text);
    auto it = ckpt.tensors.find(kClassCountKey);
    require(it != ckpt.tensors.end(), ErrorKind::Data, "checkpoint lacks the class count");
    loaded.class_count = static_cast<int>(it->second.item<int64_t>());
    loaded.step = ckpt.step;
    configure_runtime(loaded.config.train);
    loaded.net = S3MNet(loaded.config.train.model, loaded.class_count);
    checkpoint::restore(ckpt, *loaded.net, nullptr);
    loaded.net->eval();
    return loaded;
}

LoadedModel load_model(const std::filesystem::path& checkpoint_path) {
    return load_model(checkpoint::read(checkpoint_path));
}

Prediction predict(S3MNet& net, const ImageF& left, const ImageF& right) {
    if (left.height() != right.height() || left.width() != right.width() || left.channels() != right.channels())
        fail(ErrorKind::Consistency, "left and right images differ in size");
    require(left.channels() == 3, ErrorKind::Dimension, "expected RGB images");
    torch::NoGradGuard no_grad;
    net->eval();
    const int64_t h = left.height(), w = left.width();
    const int64_t ph = (32 - h % 32) % 32, pw = (32 - w % 32) % 32;
    const int64_t top = ph / 2, lft = pw / 2;
    auto pad = [&](const ImageF& img) {
        auto t = to_tensor(img).unsqueeze(0);
        if (ph == 0 && pw == 0) return t;
        return F::pad(t, F::PadFuncOptions({lft, pw - lft, top, ph - top}).mode(torch::kReplicate));
    };
    auto out = net(pad(left), pad(right));
    auto crop = [&](const torch::Tensor& t) { return t.narrow(-2, top, h).narrow(-1, lft, w); };
    auto disparity = crop(out.disparity.final()).clamp_min(0.0)[0];
    auto labels = crop(out.logits.argmax(1))[0];
    return {to_image(disparity), to_label_map(labels)};
}

Predictor model_predictor(S3MNet& net) {
    return [net](const dataio::StereoSample& sample) mutable { return predict(net, sample.left, sample.right); };
}

InferOutputs infer(const std::filesystem::path& checkpoint_path, const std::filesystem::path& left_path,
                   const std::filesystem::path& right_path, const std::filesystem::path& out_dir) {
    auto loaded = load_model(checkpoint_path);
    const auto left = dataio::load_rgb(left_path);
    const auto right = dataio::load_rgb(right_path);
    auto pred = predict(loaded.net, left, right);
    // The 16-bit codec stops just below 256 px.
    for (auto& d : pred.disparity.storage()) d = std::min(d, static_cast<float>(65535.0 / dataio::kDisparityScale));
    Mask valid(pred.disparity.height(), pred.disparity.width(), 1, 1);
    std::filesystem::create_directories(out_dir);
    InferOutputs outputs{out_dir / "disparity.png", out_dir / "labels.png"};
    png::write_u16(outputs.disparity, dataio::encode_disparity_16bit(pred.disparity, valid));
    png::write_u8(outputs.labels, pred.labels);
    return outputs;
}

}  // namespace s3m::train
