// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training loop, evaluation harness and single-pair inference.
//
// Every optimizer step draws its sample choice, crop and photometric jitter
// from an RNG seeded by (seed, step), so a resumed run replays the same
// trajectory as an uninterrupted one.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "s3m/checkpoint.hpp"
#include "s3m/config.hpp"
#include "s3m/dataio.hpp"
#include "s3m/metrics.hpp"
#include "s3m/model.hpp"

namespace s3m::train {

/// Applies single-threaded, deterministic kernels when requested by the
/// config or by S3M_DETERMINISTIC=1 in the environment. Returns the effective flag.
bool configure_runtime(const TrainConfig& config);

struct Batch {
    torch::Tensor left, right;  // [B,3,H,W]
    torch::Tensor disparity;    // [B,H,W] float
    torch::Tensor valid;        // [B,H,W] bool
    torch::Tensor labels;       // [B,H,W] int64
};

/// Loads every sample of a manifest split; class_count receives the manifest value.
std::vector<dataio::StereoSample> load_split(const std::filesystem::path& root, const std::string& split,
                                             int& class_count);

Batch to_batch(const dataio::StereoSample& sample);

/// Random crop plus brightness/contrast jitter shared by both views.
Batch augment(const dataio::StereoSample& sample, const TrainConfig& config, std::mt19937_64& rng);

std::uint64_t step_seed(std::uint64_t seed, std::uint64_t step);

struct LossBreakdown {
    double segmentation = 0.0;
    double stereo = 0.0;
    double total = 0.0;
};

struct StepRecord {
    std::uint64_t step = 0;  // 1-based index of the completed optimizer step
    LossBreakdown loss;
    double learning_rate = 0.0;
};

/// "step, l_ss, l_sm, total, lr"
std::string format_log_line(const StepRecord& record);

class Trainer {
public:
    Trainer(ExperimentConfig config, std::vector<dataio::StereoSample> dataset, int class_count);

    /// One optimizer step on a batch assembled from the step RNG.
    StepRecord step();
    /// One optimizer step on a caller-provided batch.
    StepRecord step_on(const Batch& batch);
    /// Loss on a batch with the current parameters, without updating anything.
    LossBreakdown evaluate_loss(const Batch& batch);
    /// Forward pass + loss with autograd enabled; the caller owns backward.
    std::pair<torch::Tensor, LossBreakdown> compute_loss(const Batch& batch);

    Batch next_batch() const;

    [[nodiscard]] checkpoint::Checkpoint snapshot();
    void resume(const checkpoint::Checkpoint& ckpt);

    [[nodiscard]] std::uint64_t steps_done() const noexcept { return step_; }
    [[nodiscard]] const ExperimentConfig& config() const noexcept { return config_; }
    [[nodiscard]] S3MNet& model() noexcept { return model_; }
    [[nodiscard]] torch::optim::AdamW& optimizer() noexcept { return *optimizer_; }
    [[nodiscard]] int class_count() const noexcept { return class_count_; }

private:
    double current_learning_rate() const;

    ExperimentConfig config_;
    std::vector<dataio::StereoSample> dataset_;
    std::vector<torch::Tensor> weight_maps_;  // per sample, precomputed from ground truth
    int class_count_;
    S3MNet model_{nullptr};
    std::unique_ptr<torch::optim::AdamW> optimizer_;
    std::uint64_t step_ = 0;
};

struct TrainOptions {
    std::optional<std::filesystem::path> resume_from;
    bool verbose = true;
};

struct TrainResult {
    std::filesystem::path final_checkpoint;
    std::vector<StepRecord> log;
};

/// Trains on the "train" split of dataset_root, writing checkpoints, the
/// config snapshot and metrics.log into out_dir.
TrainResult train(const ExperimentConfig& config, const std::filesystem::path& dataset_root,
                  const std::filesystem::path& out_dir, const TrainOptions& options = {});

struct Prediction {
    ImageF disparity;  // H×W
    LabelMap labels;   // H×W
};

using Predictor = std::function<Prediction(const dataio::StereoSample&)>;

/// Accumulates confusion matrices and disparity errors over samples.
metrics::MetricsReport evaluate_samples(const Predictor& predictor, const std::vector<dataio::StereoSample>& samples,
                                        int class_count);
/// Empty or missing split → Data error.
metrics::MetricsReport evaluate(const Predictor& predictor, const std::filesystem::path& dataset_root,
                                const std::string& split);

struct LoadedModel {
    ExperimentConfig config;
    int class_count = 0;
    std::uint64_t step = 0;
    S3MNet net{nullptr};
};

checkpoint::Checkpoint make_checkpoint(Trainer& trainer);
LoadedModel load_model(const std::filesystem::path& checkpoint_path);
LoadedModel load_model(const checkpoint::Checkpoint& ckpt);

/// Eval-mode inference; inputs not divisible by 32 are edge-padded symmetrically
/// and the outputs cropped back. Disparity is clamped at 0.
Prediction predict(S3MNet& net, const ImageF& left, const ImageF& right);
Predictor model_predictor(S3MNet& net);

struct InferOutputs {
    std::filesystem::path disparity;
    std::filesystem::path labels;
};

/// Writes disparity.png (16-bit codec) and labels.png into out_dir.
InferOutputs infer(const std::filesystem::path& checkpoint_path, const std::filesystem::path& left_path,
                   const std::filesystem::path& right_path, const std::filesystem::path& out_dir);

}  // namespace s3m::train
