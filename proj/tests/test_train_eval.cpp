// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "unit.hpp"

#include <fstream>
#include <sstream>

#include "probes.hpp"
#include "s3m/dataio.hpp"
#include "s3m/png_io.hpp"
#include "s3m/synthgen.hpp"
#include "s3m/train_eval.hpp"
#include "test_support.hpp"

using namespace s3m;
using namespace s3m::train;
using s3m::testing::TempDir;
using s3m::testing::throws_kind;

namespace {

struct Fixture {
    TempDir dir{"train"};
    ExperimentConfig config = presets::desk();
    std::vector<dataio::StereoSample> samples;
    int classes = 0;

    explicit Fixture(int count = 2) {
        config.train.steps = 4;
        config.train.model.gru_iters = 3;
        synthgen::generate_dataset(config.scene, count, dir / "data");
        samples = load_split(dir / "data", "train", classes);
    }
};

std::string file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("identical seeds give identical step-10 losses") {
    Fixture f;
    f.config.train.steps = 10;
    Trainer a(f.config, f.samples, f.classes), b(f.config, f.samples, f.classes);
    StepRecord ra, rb;
    for (int i = 0; i < 10; ++i) {
        ra = a.step();
        rb = b.step();
    }
    CHECK(ra.step == 10);
    CHECK(ra.loss.total == rb.loss.total);
    CHECK(ra.loss.segmentation == rb.loss.segmentation);
    CHECK(ra.loss.stereo == rb.loss.stereo);
}

TEST_CASE("one small step decreases the loss on its batch") {
    Fixture f;
    f.config.train.learning_rate = 1e-5;
    for (std::uint64_t seed : {1, 2, 3}) {
        f.config.train.seed = seed;
        Trainer t(f.config, f.samples, f.classes);
        const auto batch = t.next_batch();
        const double before = t.evaluate_loss(batch).total;
        t.step_on(batch);
        CHECK(t.evaluate_loss(batch).total < before);
    }
}

TEST_CASE("logged total equals the sum of its parts") {
    Fixture f;
    Trainer t(f.config, f.samples, f.classes);
    for (int i = 0; i < 3; ++i) {
        const auto r = t.step();
        CHECK(std::abs(r.loss.total - (r.loss.segmentation + r.loss.stereo)) < 1e-6);
        CHECK(r.learning_rate == f.config.train.learning_rate);
        double step = 0, ss = 0, sm = 0, total = 0, lr = 0;
        char sep = 0;
        std::istringstream line(format_log_line(r));
        line >> step >> sep >> ss >> sep >> sm >> sep >> total >> sep >> lr;
        CHECK(step == r.step);
        CHECK(std::abs(total - (ss + sm)) < 1e-6);
    }
}

TEST_CASE("augmentation keeps the crop size and value range") {
    Fixture f;
    std::mt19937_64 rng(3);
    for (int i = 0; i < 5; ++i) {
        const auto b = augment(f.samples[0], f.config.train, rng);
        CHECK(b.left.sizes() == torch::IntArrayRef({1, 3, f.config.train.crop_height, f.config.train.crop_width}));
        CHECK(b.labels.sizes() == torch::IntArrayRef({1, f.config.train.crop_height, f.config.train.crop_width}));
        CHECK(b.left.min().item<float>() >= 0.0f);
        CHECK(b.right.max().item<float>() <= 1.0f);
    }
    CHECK(step_seed(1, 2) != step_seed(2, 1));
    CHECK(step_seed(7, 9) == step_seed(7, 9));
}

TEST_CASE("checkpoint round trip keeps predictions and losses bit-exact") {
    Fixture f;
    Trainer t(f.config, f.samples, f.classes);
    for (int i = 0; i < 2; ++i) t.step();
    const auto path = f.dir / "c.s3m";
    checkpoint::write(path, t.snapshot());

    const auto batch = t.next_batch();
    const auto loss_before = t.evaluate_loss(batch);
    auto loaded = load_model(path);
    CHECK(loaded.step == 2);
    CHECK(loaded.class_count == f.classes);
    t.model()->eval();
    const auto a = predict(t.model(), f.samples[0].left, f.samples[0].right);
    const auto b = predict(loaded.net, f.samples[0].left, f.samples[0].right);
    CHECK(a.disparity.storage() == b.disparity.storage());
    CHECK(a.labels.storage() == b.labels.storage());

    Trainer resumed(f.config, f.samples, f.classes);
    resumed.resume(checkpoint::read(path));
    const auto loss_after = resumed.evaluate_loss(batch);
    CHECK(loss_after.total == loss_before.total);
}

TEST_CASE("resuming replays the uninterrupted trajectory") {
    Fixture f;
    Trainer straight(f.config, f.samples, f.classes);
    std::vector<double> want;
    for (int i = 0; i < 4; ++i) want.push_back(straight.step().loss.total);

    Trainer first(f.config, f.samples, f.classes);
    first.step();
    first.step();
    checkpoint::write(f.dir / "half.s3m", first.snapshot());
    Trainer second(f.config, f.samples, f.classes);
    second.resume(checkpoint::read(f.dir / "half.s3m"));
    CHECK(second.step().loss.total == want[2]);
    CHECK(second.step().loss.total == want[3]);
}

TEST_CASE("train writes the log, checkpoints and config snapshot") {
    Fixture f;
    f.config.train.checkpoint_every = 2;
    const auto result = train::train(f.config, f.dir / "data", f.dir / "run", {std::nullopt, false});
    CHECK(result.log.size() == 4);
    CHECK(std::filesystem::exists(f.dir / "run" / "ckpt_000002.s3m"));
    CHECK(std::filesystem::exists(f.dir / "run" / "final.s3m"));
    CHECK(to_text(load_config(f.dir / "run" / "config.cfg")) == to_text(f.config));
    std::ifstream log(f.dir / "run" / "metrics.log");
    int lines = 0;
    for (std::string line; std::getline(log, line);) ++lines;
    CHECK(lines == 4);
}

TEST_CASE("ground-truth predictor reaches ideal metrics") {
    Fixture f(3);
    const Predictor oracle = [](const dataio::StereoSample& s) {
        Prediction p;
        p.disparity = s.disparity;
        p.labels = s.labels;
        for (auto& v : p.labels.storage())
            if (v == dataio::kIgnoreLabel) v = 0;
        return p;
    };
    const auto r = evaluate_samples(oracle, f.samples, f.classes);
    CHECK(r.stereo.epe == 0.0);
    CHECK(r.stereo.pep_1 == 0.0);
    CHECK(r.stereo.pep_3 == 0.0);
    CHECK(r.segmentation.acc == 1.0);
    CHECK(r.segmentation.m_iou == 1.0);
    CHECK(r.segmentation.fw_iou == 1.0);
    CHECK(r.segmentation.f_score == 1.0);
    CHECK(throws_kind([&] { evaluate_samples(oracle, {}, f.classes); }, ErrorKind::Data));
}

TEST_CASE("prediction pads odd sizes and rejects mismatched views") {
    Fixture f(1);
    S3MNet net(f.config.train.model, f.classes);
    net->eval();
    ImageF left(50, 70, 3, 0.5f), right(50, 70, 3, 0.4f);
    const auto p = predict(net, left, right);
    CHECK(p.disparity.height() == 50);
    CHECK(p.disparity.width() == 70);
    CHECK(p.labels.width() == 70);
    for (float v : p.disparity.storage()) CHECK(v >= 0.0f);
    CHECK(throws_kind([&] { predict(net, left, ImageF(50, 71, 3)); }, ErrorKind::Consistency));
}

TEST_CASE("infer writes decodable, repeatable outputs") {
    Fixture f(1);
    Trainer t(f.config, f.samples, f.classes);
    t.step();
    checkpoint::write(f.dir / "m.s3m", t.snapshot());
    const auto id = synthgen::sample_id(0);
    const auto left = f.dir / "data" / id / "left.png", right = f.dir / "data" / id / "right.png";
    const auto first = infer(f.dir / "m.s3m", left, right, f.dir / "o1");
    const auto second = infer(f.dir / "m.s3m", left, right, f.dir / "o2");
    CHECK(file_bytes(first.disparity) == file_bytes(second.disparity));
    CHECK(file_bytes(first.labels) == file_bytes(second.labels));

    const auto [disp, valid] = dataio::decode_disparity_16bit(png::read_u16(first.disparity));
    CHECK(disp.height() == f.samples[0].height());
    CHECK(disp.width() == f.samples[0].width());
    for (float v : disp.storage()) CHECK(v >= 0.0f);
    const auto labels = png::read_u8(first.labels, 1);
    CHECK(labels.width() == f.samples[0].width());
    for (auto v : labels.storage()) CHECK(v < f.classes);
}

TEST_CASE("both losses reach the parameter groups they depend on") {
    Fixture f(1);
    Trainer t(f.config, f.samples, f.classes);
    const auto batch = t.next_batch();
    for (const auto& g : s3m::testing::loss_sensitivity(t, batch)) {
        INFO(g.group);
        CHECK(g.segmentation != 0.0);
        if (g.group == "encoder" || g.group == "refiner") CHECK(g.stereo != 0.0);
        else CHECK(g.stereo == 0.0);
    }
}
