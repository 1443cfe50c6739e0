// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate. Runs the nine criteria at their stated tolerances and
// prints one PASS/FAIL line per criterion. Exit code is nonzero if any fails.
//
// Criteria 7 and 8 train six desk-scale models (three seeds, alpha 0.1 and 0)
// from scratch; expect roughly an hour and a half on a single CPU core.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "probes.hpp"
#include "s3m/dataio.hpp"
#include "s3m/metrics.hpp"
#include "s3m/png_io.hpp"
#include "s3m/scg_loss.hpp"
#include "s3m/semantic_branch.hpp"
#include "s3m/stereo_branch.hpp"
#include "s3m/synthgen.hpp"
#include "s3m/train_eval.hpp"
#include "test_support.hpp"

namespace {

using namespace s3m;
using s3m::testing::labels_tensor;
using s3m::testing::to_grid;
using s3m::testing::to_volume;
using Clock = std::chrono::steady_clock;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

const double kInvE = std::exp(-1.0);

// ---------------------------------------------------------------------------
// 1-3: SCG weight map and losses

Verdict scg_oracle_equivalence() {
    const auto start = Clock::now();
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> classes(2, 5);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const int c = classes(rng), k = trial % 2 == 0 ? 3 : 5;
        const auto labels = oracle::random_labels(rng, 16, 16, c);
        const auto want = oracle::scg_weight(labels, c, k);
        const auto got = to_grid(scg::scg_weight_map(labels_tensor(labels), c, k)[0]);
        for (int r = 0; r < 16; ++r)
            for (int x = 0; x < 16; ++x) worst = std::max(worst, std::abs(got[r][x] - want[r][x]));
    }
    const double elapsed = seconds_since(start);
    return {worst < 1e-6 && elapsed < 10.0, fmt("max |diff| %.3g over 200 maps, %.2f s", worst, elapsed)};
}

Verdict analytic_weight_values() {
    const auto uniform = scg::scg_weight_map(torch::full({1, 9, 9}, 1, torch::kLong), 3, 3, 255, torch::kFloat64);
    const double uniform_err = (uniform - kInvE).abs().max().item<double>();

    const double half = scg::normalize_volume(torch::tensor({0.5}, torch::kFloat64)).item<double>();

    std::vector<std::vector<int>> split(6, std::vector<int>(10, 0));
    for (auto& row : split)
        for (int c = 5; c < 10; ++c) row[c] = 1;
    const auto edge = scg::scg_weight_map(labels_tensor(split), 2, 3, 255, torch::kFloat64)[0];
    const double target = std::exp(-1.0 / 9.0);
    const double edge_err = std::max((edge.select(1, 4) - target).abs().max().item<double>(),
                                     (edge.select(1, 5) - target).abs().max().item<double>());
    const bool pass = uniform_err <= 1e-9 && half == 1.0 && edge_err <= 1e-9;
    return {pass, fmt("uniform err %.3g, 50/50 value %.17g, boundary err %.3g", uniform_err, half, edge_err)};
}

Verdict gradient_checks() {
    torch::manual_seed(21);
    std::mt19937_64 rng(21);
    const double h = 1e-4;
    const auto labels = labels_tensor(oracle::random_labels(rng, 4, 4, 3));
    const auto w = scg::scg_weight_map(labels, 3, 3, 255, torch::kFloat64);

    auto relative = [](double a, double fd) { return std::abs(a - fd) / std::max(std::abs(fd), 1e-3); };

    auto logits = torch::randn({1, 3, 4, 4}, torch::kFloat64).requires_grad_();
    scg::segmentation_loss(logits, labels, w, 0.1).backward();
    double seg_err = 0.0;
    for (int64_t i = 0; i < logits.numel(); ++i) {
        auto plus = logits.detach().clone(), minus = logits.detach().clone();
        plus.view(-1)[i] += h;
        minus.view(-1)[i] -= h;
        const double fd = (scg::segmentation_loss(plus, labels, w, 0.1).item<double>() -
                           scg::segmentation_loss(minus, labels, w, 0.1).item<double>()) / (2 * h);
        seg_err = std::max(seg_err, relative(logits.grad().view(-1)[i].item<double>(), fd));
    }

    const auto gt = torch::rand({1, 4, 4}, torch::kFloat64) * 10;
    const auto valid = torch::ones({1, 4, 4}, torch::kBool);
    std::vector<torch::Tensor> seq;
    for (int i = 0; i < 3; ++i)
        seq.push_back((gt + (torch::rand({1, 4, 4}, torch::kFloat64) + 0.1) * (i % 2 ? 1.0 : -1.0))
                          .unsqueeze(1)
                          .requires_grad_());
    scg::stereo_loss(seq, gt, valid, w, 0.1, 0.9).backward();
    double stereo_err = 0.0;
    for (std::size_t s = 0; s < seq.size(); ++s)
        for (int64_t i = 0; i < seq[s].numel(); ++i) {
            auto eval = [&](double delta) {
                std::vector<torch::Tensor> moved;
                for (const auto& t : seq) moved.push_back(t.detach().clone());
                moved[s].view(-1)[i] += delta;
                return scg::stereo_loss(moved, gt, valid, w, 0.1, 0.9).item<double>();
            };
            stereo_err = std::max(stereo_err, relative(seq[s].grad().view(-1)[i].item<double>(),
                                                       (eval(h) - eval(-h)) / (2 * h)));
        }

    // Alpha 0 against independent plain losses.
    namespace F = torch::nn::functional;
    auto lt = labels.clone();
    lt[0][0][0] = 255;
    const auto free_logits = logits.detach();
    const double ce = F::cross_entropy(free_logits, lt, F::CrossEntropyFuncOptions().ignore_index(255)).item<double>();
    const double ce_err = std::abs(scg::segmentation_loss(free_logits, lt, w, 0.0).item<double>() - ce);
    std::vector<torch::Tensor> plain_seq;
    double l1 = 0.0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        plain_seq.push_back(seq[i].detach());
        l1 += std::pow(0.9, static_cast<double>(seq.size() - 1 - i)) *
              (plain_seq.back()[0][0] - gt[0]).abs().mean().item<double>();
    }
    const double l1_err = std::abs(scg::stereo_loss(plain_seq, gt, valid, w, 0.0, 0.9).item<double>() - l1);

    const bool pass = seg_err < 1e-4 && stereo_err < 1e-4 && ce_err < 1e-6 && l1_err < 1e-6;
    return {pass, fmt("rel err L_ss %.2g, L_sm %.2g; alpha=0 diff CE %.2g, L1 %.2g", seg_err, stereo_err, ce_err,
                      l1_err)};
}

// ---------------------------------------------------------------------------
// 4: correlation

Verdict correlation_correctness() {
    torch::manual_seed(31);
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> channels(1, 4), rows(1, 6);
    double worst = 0.0;
    auto rel = [&](const torch::Tensor& got, const oracle::Volume& want) {
        const auto g = to_volume(got);
        for (std::size_t i = 0; i < want.size(); ++i)
            for (std::size_t j = 0; j < want[i].size(); ++j)
                for (std::size_t k = 0; k < want[i][j].size(); ++k)
                    worst = std::max(worst, std::abs(g[i][j][k] - want[i][j][k]) / std::max(1.0, std::abs(want[i][j][k])));
    };
    for (int trial = 0; trial < 50; ++trial) {
        const int64_t c = channels(rng), h = rows(rng), w = 8;
        const auto fl = torch::randn({1, c, h, w}), fr = torch::randn({1, c, h, w});
        const auto volume = stereo::build_correlation_volume(fl, fr);
        auto want = oracle::correlation(to_volume(fl[0]), to_volume(fr[0]));
        const auto pyramid = stereo::build_correlation_pyramid(volume, 4);
        for (int level = 0; level < 4; ++level) {
            rel(pyramid.volumes[level][0], want);
            want = oracle::pair_average(want);
        }
    }

    auto v = torch::zeros({1, 1, 2, 2});
    v[0][0][1][0] = 2.0f;
    v[0][0][1][1] = 4.0f;
    auto d = torch::zeros({1, 1, 1, 2});
    d[0][0][0][1] = 0.5f;
    const double mid = stereo::lookup_correlation(stereo::CorrelationPyramid{{v}, 2}, d, 0)[0][0][0][1].item<double>();
    const double mid_err = std::abs(mid - 3.0);
    return {worst < 1e-5 && mid_err <= 1e-6, fmt("volume+pyramid rel err %.2g, midpoint lookup err %.2g", worst, mid_err)};
}

// ---------------------------------------------------------------------------
// 5: metrics

Verdict metric_oracles() {
    LabelMap gt(2, 2, 1), pred(2, 2, 1);
    gt(1, 0) = gt(1, 1) = 1;
    pred(0, 1) = pred(1, 0) = pred(1, 1) = 1;
    const auto seg = metrics::segmentation_metrics(metrics::confusion_matrix(pred, gt, 2));
    const bool seg_ok = std::abs(seg.acc - 0.75) <= 1e-6 && std::abs(seg.m_iou - 0.583333) <= 1e-6 &&
                        std::abs(seg.f_score - 0.733333) <= 1e-6;

    ImageF d(1, 3, 1), truth(1, 3, 1, 10.0f);
    d(0, 0) = 10.0f;
    d(0, 1) = 12.0f;
    d(0, 2) = 6.0f;
    const auto st = metrics::stereo_metrics(d, truth, Mask(1, 3, 1, 1));
    const bool stereo_ok = st.epe == 2.0 && st.pep_1 == 2.0 / 3.0 && st.pep_3 == 1.0 / 3.0;

    std::mt19937 rng(41);
    std::uniform_real_distribution<float> u(0.0f, 10.0f);
    std::uniform_int_distribution<int> extent(1, 12);
    int violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int h = extent(rng), w = extent(rng);
        ImageF a(h, w, 1), b(h, w, 1);
        for (auto& x : a.storage()) x = u(rng);
        for (auto& x : b.storage()) x = u(rng);
        const auto m = metrics::stereo_metrics(a, b, Mask(h, w, 1, 1));
        if (m.pep_3 > m.pep_1) ++violations;
    }
    return {seg_ok && stereo_ok && violations == 0,
            fmt("acc %.6f m_iou %.6f f_score %.6f; epe %.6g pep_1 %.6g pep_3 %.6g; %d ordering violations", seg.acc,
                seg.m_iou, seg.f_score, st.epe, st.pep_1, st.pep_3, violations)};
}

// ---------------------------------------------------------------------------
// 6: architecture contracts and gradient flow

Verdict architecture_contracts(const ExperimentConfig& desk, const std::vector<dataio::StereoSample>& samples,
                               int classes) {
    torch::NoGradGuard no_grad;
    std::vector<std::string> problems;
    for (double w : {0.125, 0.25})
        for (auto fusion : {FusionStrategy::Addition, FusionStrategy::Concatenation}) {
            ModelConfig m = desk.train.model;
            m.width_multiplier = w;
            m.fusion = fusion;
            m.gru_iters = 2;
            torch::manual_seed(61);
            S3MNet net(m, classes);
            net->eval();
            const auto left = torch::rand({1, 3, 64, 128}), right = torch::rand({1, 3, 64, 128});
            auto [fl, fr] = split_views(net->encoder(torch::cat({left, right}, 0)));
            const auto disparity = torch::rand({1, 1, 64, 128}) * 10;
            const auto fused = net->fusion(fl, disparity);
            for (int i = 0; i < 5; ++i) {
                const auto& t = fused.levels[i];
                if (t.size(1) != m.channels(semantic::kFusedBaseChannels[i]) ||
                    t.size(2) * semantic::kFusedStrides[i] != 64 || t.size(3) * semantic::kFusedStrides[i] != 128)
                    problems.push_back(fmt("w=%g level %d shape", w, i));
            }
            std::vector<int> consumed;
            for (int i = 0; i < stereo::kPyramidLevels; ++i) {
                auto poisoned = fl;
                poisoned.levels[i] = torch::full_like(fl.levels[i], std::numeric_limits<float>::quiet_NaN());
                const auto out = net->fusion(poisoned, disparity);
                bool finite = true;
                for (const auto& level : out.levels) finite = finite && torch::isfinite(level).all().item<bool>();
                if (!finite) consumed.push_back(i);
            }
            if (consumed != std::vector<int>{0, 2, 4}) problems.push_back(fmt("w=%g consumed levels", w));
            const auto out = net(left, right);
            if (out.logits.sizes() != torch::IntArrayRef({1, classes, 64, 128}))
                problems.push_back(fmt("w=%g logits shape", w));
        }

    // Gradient flow: a finite perturbation of each parameter group must move the losses.
    train::Trainer trainer(desk, samples, classes);
    const auto batch = trainer.next_batch();
    std::string flow;
    const std::set<std::string> stereo_groups{"encoder", "refiner"};
    for (const auto& g : s3m::testing::loss_sensitivity(trainer, batch)) {
        flow += fmt(" %s(ss %.2g, sm %.2g)", g.group.c_str(), g.segmentation, g.stereo);
        if (!(g.segmentation != 0.0 && std::isfinite(g.segmentation))) problems.push_back(g.group + " gets no L_ss");
        if (stereo_groups.count(g.group) && !(g.stereo != 0.0 && std::isfinite(g.stereo)))
            problems.push_back(g.group + " gets no L_sm");
    }
    std::string detail = problems.empty() ? "shapes, consumed levels {F1,F3,F5} ok;" : "";
    for (const auto& p : problems) detail += " " + p + ";";
    return {problems.empty(), detail + " sensitivity" + flow};
}

// ---------------------------------------------------------------------------
// 7-8: desk-scale training

struct RunResult {
    metrics::MetricsReport report;
    double boundary_epe = 0.0;
    double first_loss = 0.0;  // mean total over the first 100 steps
    double last_loss = 0.0;   // mean total over the last 100 steps
    double minutes = 0.0;
};

double mean_total(const std::vector<train::StepRecord>& log, std::size_t from, std::size_t to) {
    double sum = 0.0;
    for (std::size_t i = from; i < to; ++i) sum += log[i].loss.total;
    return sum / static_cast<double>(to - from);
}

RunResult train_and_measure(ExperimentConfig config, const std::filesystem::path& data,
                            const std::filesystem::path& out) {
    const auto start = Clock::now();
    const auto trained = train::train(config, data, out, {std::nullopt, false});
    RunResult r;
    r.minutes = seconds_since(start) / 60.0;
    const std::size_t n = trained.log.size(), window = std::min<std::size_t>(100, n);
    r.first_loss = mean_total(trained.log, 0, window);
    r.last_loss = mean_total(trained.log, n - window, n);

    auto loaded = train::load_model(trained.final_checkpoint);
    int classes = 0;
    const auto samples = train::load_split(data, "train", classes);
    r.report = train::evaluate_samples(train::model_predictor(loaded.net), samples, classes);

    metrics::StereoAccumulator band_acc;
    for (const auto& s : samples) {
        const auto pred = train::predict(loaded.net, s.left, s.right);
        const auto band = metrics::boundary_band(s.labels, 3);
        Mask valid = s.disparity_valid;
        for (std::size_t i = 0; i < valid.size(); ++i) valid.storage()[i] = valid.storage()[i] && band.storage()[i];
        band_acc += metrics::accumulate_stereo(pred.disparity, s.disparity, valid);
    }
    r.boundary_epe = metrics::finalize(band_acc).epe;

    std::ofstream(out / "train.metrics.txt") << metrics::format_report(r.report)
                                             << fmt("boundary_epe: %.6f\n", r.boundary_epe);
    return r;
}

struct TrainingRuns {
    std::vector<RunResult> with_scg;  // alpha 0.1
    std::vector<RunResult> without;   // alpha 0
};

Verdict learnability(const std::vector<RunResult>& runs) {
    bool pass = !runs.empty();
    std::string detail;
    for (std::size_t s = 0; s < runs.size(); ++s) {
        const auto& r = runs[s];
        const bool ok = r.report.stereo.epe < 1.0 && r.report.stereo.pep_3 < 0.05 && r.report.segmentation.m_iou > 0.90;
        pass = pass && ok;
        detail += fmt("%sseed %zu: epe %.3f pep_3 %.4f m_iou %.4f (%.1f min)", s ? "; " : "", s, r.report.stereo.epe,
                      r.report.stereo.pep_3, r.report.segmentation.m_iou, r.minutes);
    }
    return {pass, detail};
}

Verdict scg_effect(const TrainingRuns& runs) {
    int wins = 0;
    bool converged = runs.with_scg.size() == runs.without.size() && !runs.without.empty();
    std::string detail;
    for (std::size_t s = 0; s < runs.without.size(); ++s) {
        const auto& a = runs.with_scg[s];
        const auto& b = runs.without[s];
        // Converged: finite, and the late loss is below a fifth of the early loss.
        for (const auto* r : {&a, &b})
            converged = converged && std::isfinite(r->last_loss) && r->last_loss < 0.2 * r->first_loss;
        if (a.boundary_epe <= b.boundary_epe) ++wins;
        detail += fmt("%sseed %zu: band epe %.4f (alpha 0.1) vs %.4f (alpha 0)", s ? "; " : "", s, a.boundary_epe,
                      b.boundary_epe);
    }
    return {converged && wins >= 2, fmt("%d/3 seeds favour alpha 0.1, converged=%s; ", wins, converged ? "yes" : "no") +
                                        detail};
}

// ---------------------------------------------------------------------------
// 9: determinism and round trips

Verdict determinism_and_round_trips(const ExperimentConfig& desk, const std::vector<dataio::StereoSample>& samples,
                                    int classes, const std::filesystem::path& work) {
    train::Trainer a(desk, samples, classes), b(desk, samples, classes);
    train::StepRecord ra, rb;
    for (int i = 0; i < 10; ++i) {
        ra = a.step();
        rb = b.step();
    }
    const bool steps_equal = ra.loss.total == rb.loss.total && ra.loss.segmentation == rb.loss.segmentation &&
                             ra.loss.stereo == rb.loss.stereo;

    const auto path = work / "round_trip.s3m";
    checkpoint::write(path, a.snapshot());
    a.model()->eval();
    const auto before = metrics::format_report(train::evaluate_samples(train::model_predictor(a.model()), samples, classes));
    auto loaded = train::load_model(path);
    const auto after =
        metrics::format_report(train::evaluate_samples(train::model_predictor(loaded.net), samples, classes));
    // Compare the raw predictions too: the text report rounds to six decimals.
    bool predictions_equal = true;
    for (const auto& s : samples) {
        const auto p = train::predict(a.model(), s.left, s.right), q = train::predict(loaded.net, s.left, s.right);
        predictions_equal = predictions_equal && p.disparity == q.disparity && p.labels == q.labels;
    }

    std::mt19937 rng(91);
    std::uniform_int_distribution<int> raw(1, 65535);
    std::bernoulli_distribution invalid(0.1);
    ImageF disparity(37, 53, 1);
    Mask valid(37, 53, 1, 1);
    for (std::size_t i = 0; i < disparity.size(); ++i) {
        disparity.storage()[i] = static_cast<float>(raw(rng) / dataio::kDisparityScale);
        if (invalid(rng)) {
            valid.storage()[i] = 0;
            disparity.storage()[i] = 0.0f;
        }
    }
    png::write_u16(work / "codec.png", dataio::encode_disparity_16bit(disparity, valid));
    const auto [decoded, decoded_valid] = dataio::decode_disparity_16bit(png::read_u16(work / "codec.png"));
    const bool codec_exact = decoded == disparity && decoded_valid == valid;

    return {steps_equal && before == after && predictions_equal && codec_exact,
            fmt("step-10 loss %.9g vs %.9g; reload eval %s, predictions %s; codec %s", ra.loss.total, rb.loss.total,
                before == after ? "equal" : "DIFFER", predictions_equal ? "equal" : "DIFFER",
                codec_exact ? "exact" : "MISMATCH")};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance gate"};
    std::vector<int> only;
    std::string work_dir = (std::filesystem::temp_directory_path() / "s3m_acceptance").string();
    app.add_option("--only", only, "run only these criteria (1-9)")->delimiter(',');
    app.add_option("--work", work_dir, "scratch directory for datasets and runs");
    CLI11_PARSE(app, argc, argv);
    const auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };

    const std::filesystem::path work(work_dir);
    std::filesystem::remove_all(work);
    std::filesystem::create_directories(work);

    auto desk = presets::desk();
    train::configure_runtime(desk.train);

    std::vector<dataio::StereoSample> samples;
    int classes = 0;
    const auto data = work / "data";
    if (wanted(6) || wanted(7) || wanted(8) || wanted(9)) {
        synthgen::generate_dataset(desk.scene, 8, data);
        samples = train::load_split(data, "train", classes);
    }

    TrainingRuns runs;
    if (wanted(7) || wanted(8)) {
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            auto cfg = desk;
            cfg.train.seed = seed;
            runs.with_scg.push_back(train_and_measure(cfg, data, work / fmt("seed%llu_alpha0.1", (unsigned long long)seed)));
            std::cout << "  trained seed " << seed << " alpha 0.1 in " << runs.with_scg.back().minutes << " min"
                      << std::endl;
            if (!wanted(8)) continue;
            cfg.train.loss.alpha = 0.0;
            runs.without.push_back(train_and_measure(cfg, data, work / fmt("seed%llu_alpha0", (unsigned long long)seed)));
            std::cout << "  trained seed " << seed << " alpha 0 in " << runs.without.back().minutes << " min"
                      << std::endl;
        }
    }

    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"SCG oracle equivalence", scg_oracle_equivalence},
        {"analytic weight values", analytic_weight_values},
        {"gradient checks", gradient_checks},
        {"correlation correctness", correlation_correctness},
        {"metric oracles", metric_oracles},
        {"architecture contracts", [&] { return architecture_contracts(desk, samples, classes); }},
        {"desk-scale learnability", [&] { return learnability(runs.with_scg); }},
        {"SCG effect smoke test", [&] { return scg_effect(runs); }},
        {"determinism and round trips", [&] { return determinism_and_round_trips(desk, samples, classes, work); }},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!wanted(id)) continue;
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        if (!v.pass) ++failures;
        std::cout << "criterion " << id << " (" << criteria[i].first << "): " << (v.pass ? "PASS" : "FAIL") << " | "
                  << v.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
