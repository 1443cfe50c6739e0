// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3m/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "s3m/config.hpp"
#include "s3m/dataio.hpp"
#include "s3m/errors.hpp"
#include "s3m/plot.hpp"
#include "s3m/png_io.hpp"
#include "s3m/scg_loss.hpp"
#include "s3m/synthgen.hpp"
#include "s3m/tensor_utils.hpp"
#include "s3m/train_eval.hpp"

namespace s3m::cli {

namespace {

struct Options {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out;
    int count = 8;
    std::string ckpt;
    std::string data;
    std::string split = "val";
    std::string left, right, input, kind;
};

ExperimentConfig resolve_config(const Options& o) {
    auto config = o.config_path.empty() ? presets::desk() : load_config(o.config_path);
    for (const auto& item : o.overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) fail(ErrorKind::Usage, "--set expects key=value, got '" + item + "'");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        apply_setting(config, trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
    }
    return config;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path);
    f << text;
    if (!f) fail(ErrorKind::Io, "cannot write " + path.string());
}

std::vector<plot::Rgb> palette_for(const Options& o, int class_count) {
    std::vector<plot::Rgb> palette;
    if (!o.data.empty()) {
        for (const auto& c : dataio::load_manifest(o.data).classes) palette.push_back({c.color[0], c.color[1], c.color[2]});
        return palette;
    }
    for (int c = 0; c < class_count; ++c) {
        const auto rgb = synthgen::class_color(c);
        palette.push_back({rgb[0], rgb[1], rgb[2]});
    }
    return palette;
}

int gen_data(const Options& o, std::ostream& out) {
    auto config = resolve_config(o);
    require(o.count > 0, ErrorKind::Usage, "--n must be positive");
    const auto manifest = synthgen::generate_dataset(config.scene, o.count, o.out);
    out << "wrote " << o.count << " samples (" << manifest.class_count << " classes) to " << o.out << "\n";
    return kExitOk;
}

int train_cmd(const Options& o, std::ostream& out) {
    auto config = resolve_config(o);
    train::TrainOptions options;
    if (!o.ckpt.empty()) options.resume_from = o.ckpt;
    const auto result = train::train(config, o.data, o.out, options);
    if (!result.log.empty()) out << "final " << train::format_log_line(result.log.back()) << "\n";
    out << "checkpoint " << result.final_checkpoint.string() << "\n";
    return kExitOk;
}

int eval_cmd(const Options& o, std::ostream& out) {
    auto loaded = train::load_model(o.ckpt);
    const auto report = train::evaluate(train::model_predictor(loaded.net), o.data, o.split);
    const auto text = metrics::format_report(report);
    out << text;
    const auto path = o.out.empty() ? std::filesystem::path(o.ckpt + "." + o.split + ".metrics.txt")
                                    : std::filesystem::path(o.out);
    write_text(path, text);
    return kExitOk;
}

int infer_cmd(const Options& o, std::ostream& out) {
    const auto outputs = train::infer(o.ckpt, o.left, o.right, o.out.empty() ? "." : o.out);
    out << "disparity " << outputs.disparity.string() << "\nlabels " << outputs.labels.string() << "\n";
    return kExitOk;
}

int plot_cmd(const Options& o, std::ostream& out) {
    auto config = resolve_config(o);
    Image<std::uint8_t> raster;
    if (o.kind == "disparity") {
        const auto [disparity, valid] = dataio::decode_disparity_16bit(png::read_u16(o.input));
        raster = plot::render_disparity(disparity, config.train.max_disparity, &valid);
    } else if (o.kind == "labels") {
        const auto labels = png::read_u8(o.input, 1);
        const int classes = o.data.empty() ? config.scene.class_palette_size
                                           : dataio::load_manifest(o.data).class_count;
        raster = plot::render_labels(labels, palette_for(o, classes));
    } else {
        const auto labels = png::read_u8(o.input, 1);
        const int classes = o.data.empty() ? config.scene.class_palette_size
                                           : dataio::load_manifest(o.data).class_count;
        auto weights = scg::scg_weight_map(to_tensor(labels, torch::kLong), classes, config.train.loss.pool_kernel,
                                           config.train.loss.ignore_label);
        raster = plot::render_weights(to_image(weights[0]));
    }
    png::write_u8(o.out, raster);
    out << "wrote " << o.out << "\n";
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"s3m: joint stereo matching and semantic segmentation"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "experiment config file (default: desk preset)")->check(CLI::ExistingFile);
        sub->add_option("--set", o.overrides, "override a config key, key=value (repeatable)")->take_all();
    };

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic stereo + segmentation dataset");
    common(gen);
    gen->add_option("--out", o.out, "dataset directory")->required();
    gen->add_option("--n", o.count, "number of samples");

    auto* tr = app.add_subcommand("train", "train a model");
    common(tr);
    tr->add_option("--data", o.data, "dataset directory")->required();
    tr->add_option("--out", o.out, "run directory")->required();
    tr->add_option("--ckpt", o.ckpt, "checkpoint to resume from")->check(CLI::ExistingFile);

    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
    ev->add_option("--ckpt", o.ckpt, "checkpoint")->required();
    ev->add_option("--data", o.data, "dataset directory")->required();
    ev->add_option("--split", o.split, "split name");
    ev->add_option("--out", o.out, "report path");

    auto* inf = app.add_subcommand("infer", "predict disparity and labels for one stereo pair");
    inf->add_option("--ckpt", o.ckpt, "checkpoint")->required();
    inf->add_option("--left", o.left, "left image")->required();
    inf->add_option("--right", o.right, "right image")->required();
    inf->add_option("--out", o.out, "output directory");

    auto* pl = app.add_subcommand("plot", "render a disparity map, label map or SCG weight map");
    common(pl);
    pl->add_option("--kind", o.kind, "disparity | labels | scg-weight")
        ->required()
        ->check(CLI::IsMember({"disparity", "labels", "scg-weight"}));
    pl->add_option("--input", o.input, "input PNG")->required();
    pl->add_option("--out", o.out, "output PNG")->required();
    pl->add_option("--data", o.data, "dataset directory supplying the class palette");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (gen->parsed()) return gen_data(o, out);
        if (tr->parsed()) return train_cmd(o, out);
        if (ev->parsed()) return eval_cmd(o, out);
        if (inf->parsed()) return infer_cmd(o, out);
        return plot_cmd(o, out);
    } catch (const Error& e) {
        err << e.what() << "\n";
        return e.kind() == ErrorKind::Usage ? kExitUsage : kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace s3m::cli
