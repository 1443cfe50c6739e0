// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "s3m/image.hpp"

namespace s3m::metrics {

/// counts[g * C + p] = number of pixels with ground truth g predicted as p.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int class_count);

    [[nodiscard]] int class_count() const noexcept { return classes_; }
    [[nodiscard]] std::uint64_t at(int gt, int pred) const { return counts_[index(gt, pred)]; }
    [[nodiscard]] std::uint64_t total() const noexcept;

    void add(int gt, int pred, std::uint64_t n = 1);
    ConfusionMatrix& operator+=(const ConfusionMatrix& other);

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    [[nodiscard]] std::size_t index(int gt, int pred) const;

    int classes_;
    std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion_matrix(const LabelMap& pred, const LabelMap& gt, int class_count, int ignore_label = 255);

struct SegmentationMetrics {
    double acc = 0, m_acc = 0, m_iou = 0, fw_iou = 0, precision = 0, recall = 0, f_score = 0;
};

/// Macro averages over classes present in ground truth or predictions.
SegmentationMetrics segmentation_metrics(const ConfusionMatrix& cm);

/// Per-class IoU; classes absent from both ground truth and predictions get NaN.
std::vector<double> per_class_iou(const ConfusionMatrix& cm);

/// Running sums for the disparity metrics, mergeable across images.
struct StereoAccumulator {
    double abs_error_sum = 0.0;
    std::uint64_t over_1 = 0;
    std::uint64_t over_3 = 0;
    std::uint64_t count = 0;

    void add(double abs_error);
    StereoAccumulator& operator+=(const StereoAccumulator& other);
};

struct StereoMetrics {
    double epe = 0, pep_1 = 0, pep_3 = 0;
};

StereoAccumulator accumulate_stereo(const ImageF& disparity, const ImageF& disparity_gt, const Mask& valid);
StereoMetrics finalize(const StereoAccumulator& acc);
StereoMetrics stereo_metrics(const ImageF& disparity, const ImageF& disparity_gt, const Mask& valid);

/// 1 where a different label occurs within `columns` pixels on the same row.
Mask boundary_band(const LabelMap& labels, int columns);

struct MetricsReport {
    SegmentationMetrics segmentation;
    StereoMetrics stereo;
};

/// Flat `key: value` text, fixed key order, six decimals.
std::string format_report(const MetricsReport& report);
MetricsReport parse_report(const std::string& text);

}  // namespace s3m::metrics
