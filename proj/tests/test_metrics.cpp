// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "unit.hpp"

#include <numeric>
#include <random>

#include "s3m/metrics.hpp"
#include "test_support.hpp"

using namespace s3m;
using namespace s3m::metrics;
using s3m::testing::throws_kind;

namespace {

LabelMap labels_from(std::initializer_list<std::initializer_list<int>> rows) {
    const int h = static_cast<int>(rows.size()), w = static_cast<int>(rows.begin()->size());
    LabelMap m(h, w, 1);
    int r = 0;
    for (const auto& row : rows) {
        int c = 0;
        for (int v : row) m(r, c++, 0) = static_cast<std::uint8_t>(v);
        ++r;
    }
    return m;
}

LabelMap random_map(std::mt19937& rng, int h, int w, int classes) {
    std::uniform_int_distribution<int> d(0, classes - 1);
    LabelMap m(h, w, 1);
    for (auto& v : m.storage()) v = static_cast<std::uint8_t>(d(rng));
    return m;
}

}  // namespace

TEST_CASE("hand-tallied 2x2 confusion case") {
    const auto gt = labels_from({{0, 0}, {1, 1}});
    const auto pred = labels_from({{0, 1}, {1, 1}});
    const auto cm = confusion_matrix(pred, gt, 2);
    CHECK(cm.at(0, 0) == 1);
    CHECK(cm.at(0, 1) == 1);
    CHECK(cm.at(1, 0) == 0);
    CHECK(cm.at(1, 1) == 2);
    const auto m = segmentation_metrics(cm);
    CHECK(m.acc == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(m.m_acc == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(m.m_iou == doctest::Approx((0.5 + 2.0 / 3.0) / 2).epsilon(1e-12));
    CHECK(m.fw_iou == doctest::Approx(0.5 * 0.5 + 0.5 * 2.0 / 3.0).epsilon(1e-12));
    CHECK(m.precision == doctest::Approx((1.0 + 2.0 / 3.0) / 2).epsilon(1e-12));
    CHECK(m.recall == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(m.f_score == doctest::Approx((2.0 / 3.0 + 0.8) / 2).epsilon(1e-12));
}

TEST_CASE("perfect and degenerate predictions") {
    std::mt19937 rng(3);
    const auto gt = random_map(rng, 5, 7, 4);
    const auto m = segmentation_metrics(confusion_matrix(gt, gt, 4));
    for (double v : {m.acc, m.m_acc, m.m_iou, m.fw_iou, m.precision, m.recall, m.f_score}) CHECK(v == 1.0);

    const LabelMap single(3, 3, 1, 2);
    const auto s = segmentation_metrics(confusion_matrix(single, single, 4));
    CHECK(s.acc == 1.0);
    CHECK(s.m_acc == 1.0);
    CHECK(s.m_iou == 1.0);
}

TEST_CASE("ignore pixels and label errors") {
    const LabelMap gt(2, 2, 1, 255);
    const LabelMap pred(2, 2, 1, 1);
    const auto cm = confusion_matrix(pred, gt, 2);
    CHECK(cm.total() == 0);
    CHECK(throws_kind([&] { segmentation_metrics(cm); }, ErrorKind::UndefinedMetrics));
    CHECK(throws_kind([&] { confusion_matrix(LabelMap(2, 2, 1, 5), LabelMap(2, 2, 1, 0), 2); }, ErrorKind::Label));
}

TEST_CASE("stereo metric examples") {
    ImageF d(1, 3, 1), gt(1, 3, 1, 10.0f);
    d(0, 0, 0) = 10.0f;
    d(0, 1, 0) = 12.0f;
    d(0, 2, 0) = 6.0f;
    const Mask valid(1, 3, 1, 1);
    const auto m = stereo_metrics(d, gt, valid);
    CHECK(m.epe == 2.0);
    CHECK(m.pep_1 == 2.0 / 3.0);
    CHECK(m.pep_3 == 1.0 / 3.0);

    const auto zero = stereo_metrics(gt, gt, valid);
    CHECK(zero.epe == 0.0);
    CHECK(zero.pep_1 == 0.0);

    ImageF one(1, 3, 1, 11.0f);
    CHECK(stereo_metrics(one, gt, valid).pep_1 == 0.0);
    CHECK(throws_kind([&] { stereo_metrics(d, gt, Mask(1, 3, 1, 0)); }, ErrorKind::UndefinedMetrics));
}

TEST_CASE("pep_3 never exceeds pep_1") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<float> u(0.0f, 8.0f);
    for (int trial = 0; trial < 200; ++trial) {
        ImageF d(4, 5, 1), gt(4, 5, 1);
        for (auto& v : d.storage()) v = u(rng);
        for (auto& v : gt.storage()) v = u(rng);
        const auto m = stereo_metrics(d, gt, Mask(4, 5, 1, 1));
        CHECK(m.pep_3 <= m.pep_1);
    }
}

TEST_CASE("class permutation invariance") {
    std::mt19937 rng(5);
    const std::array<int, 4> perm{2, 0, 3, 1};
    for (int trial = 0; trial < 50; ++trial) {
        const auto gt = random_map(rng, 6, 6, 4), pred = random_map(rng, 6, 6, 4);
        auto pgt = gt, ppred = pred;
        for (auto& v : pgt.storage()) v = static_cast<std::uint8_t>(perm[v]);
        for (auto& v : ppred.storage()) v = static_cast<std::uint8_t>(perm[v]);
        const auto a = segmentation_metrics(confusion_matrix(pred, gt, 4));
        const auto b = segmentation_metrics(confusion_matrix(ppred, pgt, 4));
        CHECK(a.acc == doctest::Approx(b.acc));
        CHECK(a.m_iou == doctest::Approx(b.m_iou));
        CHECK(a.fw_iou == doctest::Approx(b.fw_iou));
        CHECK(a.f_score == doctest::Approx(b.f_score));
        CHECK(a.precision == doctest::Approx(b.precision));
        CHECK(a.recall == doctest::Approx(b.recall));
        CHECK(a.m_acc == doctest::Approx(b.m_acc));
    }
}

TEST_CASE("fw_iou is a convex combination of present-class IoUs") {
    std::mt19937 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const auto gt = random_map(rng, 5, 5, 3), pred = random_map(rng, 5, 5, 3);
        const auto cm = confusion_matrix(pred, gt, 3);
        const auto ious = per_class_iou(cm);
        double lo = 1.0, hi = 0.0;
        for (int c = 0; c < 3; ++c) {
            std::uint64_t in_gt = 0;
            for (int p = 0; p < 3; ++p) in_gt += cm.at(c, p);
            if (in_gt == 0) continue;
            lo = std::min(lo, ious[c]);
            hi = std::max(hi, ious[c]);
        }
        const auto m = segmentation_metrics(cm);
        CHECK(m.fw_iou <= hi + 1e-12);
        CHECK(m.fw_iou >= lo - 1e-12);
    }
}

TEST_CASE("additivity across images") {
    std::mt19937 rng(13);
    const auto g1 = random_map(rng, 3, 4, 3), p1 = random_map(rng, 3, 4, 3);
    const auto g2 = random_map(rng, 3, 4, 3), p2 = random_map(rng, 3, 4, 3);
    LabelMap g(6, 4, 1), p(6, 4, 1);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) {
            g(r, c, 0) = g1(r, c, 0);
            g(r + 3, c, 0) = g2(r, c, 0);
            p(r, c, 0) = p1(r, c, 0);
            p(r + 3, c, 0) = p2(r, c, 0);
        }
    auto sum = confusion_matrix(p1, g1, 3);
    sum += confusion_matrix(p2, g2, 3);
    CHECK(sum == confusion_matrix(p, g, 3));

    ImageF d1(1, 2, 1, 1.0f), t1(1, 2, 1, 3.5f), d2(1, 1, 1, 0.0f), t2(1, 1, 1, 0.5f);
    auto acc = accumulate_stereo(d1, t1, Mask(1, 2, 1, 1));
    acc += accumulate_stereo(d2, t2, Mask(1, 1, 1, 1));
    const auto m = finalize(acc);
    CHECK(m.epe == doctest::Approx((2.5 + 2.5 + 0.5) / 3));
    CHECK(m.pep_1 == doctest::Approx(2.0 / 3));
}

TEST_CASE("report text round trip") {
    MetricsReport r;
    r.segmentation = {0.75, 0.5, 0.25, 0.125, 0.5, 0.25, 1.0};
    r.stereo = {2.0, 0.666667, 0.333333};
    const auto text = format_report(r);
    CHECK(text.rfind("acc: 0.750000\n", 0) == 0);
    CHECK(text.find("epe: 2.000000") != std::string::npos);
    const auto back = parse_report(text);
    CHECK(back.segmentation.m_iou == 0.25);
    CHECK(back.stereo.pep_3 == doctest::Approx(0.333333));
}

TEST_CASE("boundary band marks pixels near a label change on the same row") {
    const auto labels = labels_from({{0, 0, 0, 0, 1, 1, 1, 1, 1, 1}});
    const auto band = boundary_band(labels, 3);
    const std::array<int, 10> expected{0, 1, 1, 1, 1, 1, 1, 0, 0, 0};
    for (int c = 0; c < 10; ++c) CHECK(band(0, c, 0) == expected[c]);
}
