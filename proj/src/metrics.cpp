// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3m/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

namespace s3m::metrics {

ConfusionMatrix::ConfusionMatrix(int class_count)
    : classes_(class_count), counts_(static_cast<std::size_t>(class_count) * class_count, 0) {
    require(class_count >= 1, ErrorKind::Label, "class_count must be positive");
}

std::size_t ConfusionMatrix::index(int gt, int pred) const {
    if (gt < 0 || gt >= classes_ || pred < 0 || pred >= classes_)
        fail(ErrorKind::Label, "label pair (" + std::to_string(gt) + ", " + std::to_string(pred) +
                                   ") outside class range " + std::to_string(classes_));
    return static_cast<std::size_t>(gt) * classes_ + pred;
}

std::uint64_t ConfusionMatrix::total() const noexcept {
    std::uint64_t sum = 0;
    for (auto v : counts_) sum += v;
    return sum;
}

void ConfusionMatrix::add(int gt, int pred, std::uint64_t n) { counts_[index(gt, pred)] += n; }

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    require(other.classes_ == classes_, ErrorKind::Dimension, "confusion matrices of different class counts");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    return *this;
}

ConfusionMatrix confusion_matrix(const LabelMap& pred, const LabelMap& gt, int class_count, int ignore_label) {
    require_same_extent(pred, gt, "confusion_matrix");
    ConfusionMatrix cm(class_count);
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const int g = gt.data()[i];
        if (g == ignore_label) continue;
        cm.add(g, pred.data()[i]);
    }
    return cm;
}

namespace {

struct ClassTotals {
    std::vector<double> tp, gt, pred;
};

ClassTotals class_totals(const ConfusionMatrix& cm) {
    const int C = cm.class_count();
    ClassTotals t{std::vector<double>(C, 0.0), std::vector<double>(C, 0.0), std::vector<double>(C, 0.0)};
    for (int g = 0; g < C; ++g) {
        for (int p = 0; p < C; ++p) {
            const auto n = static_cast<double>(cm.at(g, p));
            t.gt[g] += n;
            t.pred[p] += n;
            if (g == p) t.tp[g] += n;
        }
    }
    return t;
}

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

std::vector<double> per_class_iou(const ConfusionMatrix& cm) {
    const auto t = class_totals(cm);
    std::vector<double> iou(cm.class_count(), std::numeric_limits<double>::quiet_NaN());
    for (int c = 0; c < cm.class_count(); ++c) {
        const double uni = t.gt[c] + t.pred[c] - t.tp[c];
        if (uni > 0.0) iou[c] = t.tp[c] / uni;
    }
    return iou;
}

SegmentationMetrics segmentation_metrics(const ConfusionMatrix& cm) {
    const double total = static_cast<double>(cm.total());
    require(total > 0.0, ErrorKind::UndefinedMetrics, "confusion matrix is empty");
    const auto t = class_totals(cm);
    const auto iou = per_class_iou(cm);

    SegmentationMetrics m;
    double trace = 0.0;
    double acc_sum = 0.0, iou_sum = 0.0, p_sum = 0.0, r_sum = 0.0, f_sum = 0.0;
    int in_gt = 0, present = 0;
    for (int c = 0; c < cm.class_count(); ++c) {
        trace += t.tp[c];
        if (t.gt[c] > 0.0) {
            acc_sum += t.tp[c] / t.gt[c];
            ++in_gt;
        }
        if (t.gt[c] > 0.0 || t.pred[c] > 0.0) {
            ++present;
            iou_sum += iou[c];
            const double p = ratio(t.tp[c], t.pred[c]);
            const double r = ratio(t.tp[c], t.gt[c]);
            p_sum += p;
            r_sum += r;
            f_sum += ratio(2.0 * p * r, p + r);
            m.fw_iou += (t.gt[c] / total) * iou[c];
        }
    }
    m.acc = trace / total;
    m.m_acc = acc_sum / in_gt;
    m.m_iou = iou_sum / present;
    m.precision = p_sum / present;
    m.recall = r_sum / present;
    m.f_score = f_sum / present;
    return m;
}

void StereoAccumulator::add(double abs_error) {
    abs_error_sum += abs_error;
    over_1 += abs_error > 1.0;
    over_3 += abs_error > 3.0;
    ++count;
}

StereoAccumulator& StereoAccumulator::operator+=(const StereoAccumulator& o) {
    abs_error_sum += o.abs_error_sum;
    over_1 += o.over_1;
    over_3 += o.over_3;
    count += o.count;
    return *this;
}

StereoAccumulator accumulate_stereo(const ImageF& disparity, const ImageF& disparity_gt, const Mask& valid) {
    require_same_extent(disparity, disparity_gt, "stereo_metrics");
    require_same_extent(disparity, valid, "stereo_metrics");
    StereoAccumulator acc;
    for (std::size_t i = 0; i < disparity.size(); ++i) {
        if (!valid.data()[i]) continue;
        acc.add(std::abs(static_cast<double>(disparity.data()[i]) - static_cast<double>(disparity_gt.data()[i])));
    }
    return acc;
}

StereoMetrics finalize(const StereoAccumulator& acc) {
    require(acc.count > 0, ErrorKind::UndefinedMetrics, "no valid disparity pixels");
    const auto n = static_cast<double>(acc.count);
    return {acc.abs_error_sum / n, static_cast<double>(acc.over_1) / n, static_cast<double>(acc.over_3) / n};
}

StereoMetrics stereo_metrics(const ImageF& disparity, const ImageF& disparity_gt, const Mask& valid) {
    return finalize(accumulate_stereo(disparity, disparity_gt, valid));
}

namespace {
constexpr const char* kKeys[] = {"acc",       "m_acc",  "m_iou", "fw_iou", "precision",
                                 "recall",    "f_score", "epe",  "pep_1",  "pep_3"};

std::vector<double*> report_fields(MetricsReport& r) {
    auto& s = r.segmentation;
    auto& d = r.stereo;
    return {&s.acc, &s.m_acc, &s.m_iou, &s.fw_iou, &s.precision, &s.recall, &s.f_score, &d.epe, &d.pep_1, &d.pep_3};
}
}  // namespace

std::string format_report(const MetricsReport& report) {
    MetricsReport copy = report;
    const auto fields = report_fields(copy);
    std::string out;
    char line[64];
    for (std::size_t i = 0; i < fields.size(); ++i) {
        std::snprintf(line, sizeof(line), "%s: %.6f\n", kKeys[i], *fields[i]);
        out += line;
    }
    return out;
}

MetricsReport parse_report(const std::string& text) {
    std::map<std::string, double> values;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        values[line.substr(0, colon)] = std::stod(line.substr(colon + 1));
    }
    MetricsReport report;
    const auto fields = report_fields(report);
    for (std::size_t i = 0; i < fields.size(); ++i) {
        auto it = values.find(kKeys[i]);
        if (it == values.end()) fail(ErrorKind::Data, std::string("report missing key ") + kKeys[i]);
        *fields[i] = it->second;
    }
    return report;
}

Mask boundary_band(const LabelMap& labels, int columns) {
    Mask band(labels.height(), labels.width(), 1);
    for (int r = 0; r < labels.height(); ++r) {
        for (int c = 0; c < labels.width(); ++c) {
            const int lo = std::max(0, c - columns), hi = std::min(labels.width() - 1, c + columns);
            for (int x = lo; x <= hi; ++x) {
                if (labels(r, x, 0) != labels(r, c, 0)) {
                    band(r, c, 0) = 1;
                    break;
                }
            }
        }
    }
    return band;
}

}  // namespace s3m::metrics
