// Command-line front end for the experiments, the oracle suite and
// parameter archives.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "wim/experiments.hpp"
#include "wim/png_io.hpp"
#include "wim/verify.hpp"

namespace fs = std::filesystem;
namespace ex = wim::experiments;

namespace {

struct SweepFlags {
    std::string config_path;
    std::string out = "out";
    std::vector<std::size_t> sizes;
    std::optional<std::size_t> reps;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    bool wall_time = false;
};

void add_sweep_flags(CLI::App* app, SweepFlags& f) {
    app->add_option("--config", f.config_path, "Key-value config file")->check(CLI::ExistingFile);
    app->add_option("--out", f.out, "Output directory")->capture_default_str();
    app->add_option("--sizes", f.sizes, "Training-set sizes, comma separated")->delimiter(',');
    app->add_option("--reps", f.reps, "Repetitions per size");
    app->add_option("--seed", f.seed, "Run seed");
    app->add_option("--workers", f.workers, "Concurrent (size, repetition) cells");
    app->add_flag("--wall-time", f.wall_time, "Record wall-clock seconds per cell");
}

template <class Config>
void apply_sweep_flags(Config& c, const SweepFlags& f) {
    if (!f.config_path.empty()) ex::apply_config(c, ex::read_key_values(f.config_path));
    if (!f.sizes.empty()) c.sizes = f.sizes;
    if (f.reps) c.repetitions = *f.reps;
    if (f.seed) c.seed = *f.seed;
    if (f.workers) c.workers = *f.workers;
    if (f.wall_time) c.record_wall_time = true;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw wim::Error("cannot write " + path.string());
    out << text;
    if (!out) throw wim::Error("write failed: " + path.string());
}

void write_run(const std::string& dir, const std::string& config_text,
               const std::vector<ex::ExperimentRecord>& records,
               const std::vector<ex::DivergenceNote>& divergences, const std::vector<ex::ChainStrip>& strips) {
    fs::create_directories(dir);
    write_text(fs::path(dir) / "resolved.cfg", config_text);
    if (records.empty()) {
        write_text(fs::path(dir) / "results.csv", ex::records_to_csv(records));
    } else {
        ex::emit_outputs(records, dir, strips);
    }
    if (!divergences.empty()) {
        std::string text;
        for (const auto& d : divergences) {
            text += d.experiment + " " + d.method + " T=" + std::to_string(d.train_size) +
                    " rep=" + std::to_string(d.repetition) + ": " + d.message + "\n";
            std::cerr << "diverged: " << d.method << " T=" << d.train_size << " rep=" << d.repetition << "\n";
        }
        write_text(fs::path(dir) / "divergences.txt", text);
    }
}

void print_summary(const std::vector<ex::ExperimentRecord>& records) {
    std::printf("%-24s %-14s %6s %5s %10s %10s %10s\n", "experiment", "method", "T", "n", "train", "test",
                "risk_diff");
    for (const auto& s : ex::summarize(records))
        std::printf("%-24s %-14s %6zu %5zu %10.4f %10.4f %10.4f\n", s.experiment.c_str(), s.method.c_str(),
                    s.train_size, s.count, s.train_mean, s.test_mean, s.risk_mean);
}

std::vector<wim::seg::LabeledImage> segmentation_images(const ex::SegmentationConfig& c, std::size_t count,
                                                        std::uint64_t seed) {
    if (!c.corpus_dir.empty()) {
        auto loaded = wim::seg::load_corpus(c.corpus_dir);
        if (loaded.size() < count)
            throw wim::Error("corpus has " + std::to_string(loaded.size()) + " images, need " + std::to_string(count));
        loaded.resize(count);
        return loaded;
    }
    wim::RngStream rng(seed);
    return wim::seg::generate_corpus(c.corpus, count, rng);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weak implicit modeling experiments"};
    app.require_subcommand(1);

    // verify
    auto* verify = app.add_subcommand("verify", "Run the oracle cross-check suite");
    std::uint64_t verify_seed = 1;
    bool quick = false;
    verify->add_option("--seed", verify_seed, "Seed")->capture_default_str();
    verify->add_flag("--quick", quick, "Fewer samples per check");

    // synthetic
    auto* synthetic = app.add_subcommand("synthetic", "1-D three-class study");
    SweepFlags syn_flags;
    bool misspecified = false;
    std::optional<std::size_t> test_points;
    add_sweep_flags(synthetic, syn_flags);
    synthetic->add_flag("--misspecified", misspecified, "Heteroscedastic world, shared-variance likelihood");
    synthetic->add_option("--test-points", test_points, "Test-set size");

    // segment
    auto* segment = app.add_subcommand("segment", "Grid-CRF segmentation study");
    segment->require_subcommand(1);

    auto* sweep = segment->add_subcommand("sweep", "RF / CL-CRF / IM over training sizes");
    SweepFlags seg_flags;
    std::string corpus_dir;
    std::optional<std::size_t> test_images;
    add_sweep_flags(sweep, seg_flags);
    sweep->add_option("--corpus-dir", corpus_dir, "Directory of <name>.png / <name>_label.png pairs");
    sweep->add_option("--test-images", test_images, "Held-out images per cell");

    auto* train = segment->add_subcommand("train", "Train the forest, CL-CRF and IM on T images");
    std::string train_config, train_out = "models", train_corpus;
    std::size_t train_size = 10;
    std::uint64_t train_seed = 1;
    train->add_option("--config", train_config, "Key-value config file")->check(CLI::ExistingFile);
    train->add_option("--out", train_out, "Output directory for parameter archives")->capture_default_str();
    train->add_option("--corpus-dir", train_corpus, "Directory corpus instead of synthetic scenes");
    train->add_option("--train-size", train_size, "Training images")->capture_default_str();
    train->add_option("--seed", train_seed, "Seed")->capture_default_str();

    auto* infer = segment->add_subcommand("infer", "Max-marginal decoding of one image");
    std::string infer_params, infer_image, infer_unary, infer_out = "labels.png", infer_preview;
    std::uint64_t infer_seed = 1;
    wim::seg::DecodeConfig decode;
    infer->add_option("--params", infer_params, "seg-crf parameter archive")->required()->check(CLI::ExistingFile);
    infer->add_option("--image", infer_image, "RGB PNG")->required()->check(CLI::ExistingFile);
    infer->add_option("--unary", infer_unary, "Unary label map PNG")->required()->check(CLI::ExistingFile);
    infer->add_option("--out", infer_out, "Decoded label map PNG")->capture_default_str();
    infer->add_option("--preview", infer_preview, "Also write a colour rendering of the labels");
    infer->add_option("--burn-in", decode.burn_in, "Discarded sweeps")->capture_default_str();
    infer->add_option("--samples", decode.samples, "Counted sweeps")->capture_default_str();
    infer->add_option("--seed", infer_seed, "Seed")->capture_default_str();

    auto* corpus = segment->add_subcommand("corpus", "Write synthetic scenes as PNG pairs");
    std::string corpus_out = "corpus", corpus_config;
    std::size_t corpus_count = 20;
    std::uint64_t corpus_seed = 1;
    corpus->add_option("--out", corpus_out, "Output directory")->capture_default_str();
    corpus->add_option("--count", corpus_count, "Number of scenes")->capture_default_str();
    corpus->add_option("--seed", corpus_seed, "Seed")->capture_default_str();
    corpus->add_option("--config", corpus_config, "Key-value config file")->check(CLI::ExistingFile);

    // plot
    auto* plot = app.add_subcommand("plot", "Plots and summary from a results CSV");
    std::string plot_csv, plot_out = "plots";
    plot->add_option("csv", plot_csv, "results.csv")->required()->check(CLI::ExistingFile);
    plot->add_option("--out", plot_out, "Output directory")->capture_default_str();

    // params
    auto* params = app.add_subcommand("params", "Parameter archives");
    params->require_subcommand(1);
    auto* show = params->add_subcommand("show", "Print an archive");
    std::string show_path;
    bool show_values = false;
    show->add_option("file", show_path, "Archive")->required()->check(CLI::ExistingFile);
    show->add_flag("--values", show_values, "Print every value");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*verify) {
            bool ok = true;
            for (const auto& r : wim::verify::run_oracle_suite(verify_seed, quick)) {
                std::puts(wim::verify::format_result(r).c_str());
                ok = ok && r.pass;
            }
            return ok ? 0 : 1;
        }
        if (*synthetic) {
            ex::SyntheticConfig c;
            apply_sweep_flags(c, syn_flags);
            if (misspecified) c.misspecified = true;
            if (test_points) c.test_points = *test_points;
            c.validate();
            std::vector<ex::DivergenceNote> divergences;
            const auto records = ex::run_synthetic(c, &divergences);
            write_run(syn_flags.out, ex::format_config(c), records, divergences, {});
            print_summary(records);
            return 0;
        }
        if (*sweep) {
            ex::SegmentationConfig c;
            apply_sweep_flags(c, seg_flags);
            if (!corpus_dir.empty()) c.corpus_dir = corpus_dir;
            if (test_images) c.test_images = *test_images;
            c.validate();
            const auto output = ex::run_segmentation(c);
            write_run(seg_flags.out, ex::format_config(c), output.records, output.divergences, output.strips);
            print_summary(output.records);
            return 0;
        }
        if (*train) {
            ex::SegmentationConfig c;
            if (!train_config.empty()) ex::apply_config(c, ex::read_key_values(train_config));
            if (!train_corpus.empty()) c.corpus_dir = train_corpus;
            const auto images = segmentation_images(c, train_size, wim::RngStream(train_seed).split(0).next_u64());
            std::vector<const wim::seg::LabeledImage*> ptrs;
            for (const auto& li : images) ptrs.push_back(&li);
            const auto models = ex::train_segmentation_models(ptrs, c, train_seed);
            fs::create_directories(train_out);
            const fs::path dir(train_out);
            ex::save_params((dir / "cl_crf.params").string(), ex::to_archive(models.cl_crf));
            ex::save_params((dir / "im_crf.params").string(), ex::to_archive(models.im.crf));
            ex::save_params((dir / "im_color.params").string(), ex::to_archive(models.im.color));
            for (std::size_t k = 0; k < images.size(); ++k)
                wim::write_png_labels((dir / ("unary_" + std::to_string(k) + ".png")).string(),
                                      models.forest.predict(images[k].image));
            write_text(dir / "resolved.cfg", ex::format_config(c));
            std::printf("wrote models for %zu training images to %s\n", images.size(), train_out.c_str());
            return 0;
        }
        if (*infer) {
            const auto crf = ex::crf_from_archive(ex::load_params(infer_params));
            const auto image = wim::read_png_image(infer_image);
            const auto unary = wim::read_png_labels(infer_unary);
            for (auto l : unary.labels)
                if (l >= crf.labels())
                    throw wim::Error("unary label " + std::to_string(l) + " outside the model's " +
                                     std::to_string(crf.labels()) + " labels");
            const wim::seg::GridGraph graph(image.width, image.height);
            graph.require_shape(unary);
            const wim::seg::CrfInput input(graph, image, unary);
            const wim::seg::CrfKernel kernel(crf, graph);
            wim::RngStream rng(infer_seed);
            const auto est = wim::seg::max_marginal_decode(kernel, input, unary, rng, decode.burn_in, decode.samples);
            wim::write_png_labels(infer_out, est.decoded);
            if (!infer_preview.empty()) {
                wim::seg::Image colour(image.width, image.height);
                for (std::size_t i = 0; i < colour.size(); ++i) colour[i] = wim::label_color(est.decoded[i]);
                wim::write_png_image(infer_preview, colour);
            }
            return 0;
        }
        if (*corpus) {
            ex::SegmentationConfig c;
            if (!corpus_config.empty()) ex::apply_config(c, ex::read_key_values(corpus_config));
            wim::RngStream rng(corpus_seed);
            const auto scenes = wim::seg::generate_corpus(c.corpus, corpus_count, rng);
            fs::create_directories(corpus_out);
            for (std::size_t k = 0; k < scenes.size(); ++k) {
                char name[32];
                std::snprintf(name, sizeof name, "scene%04zu", k);
                const fs::path base = fs::path(corpus_out) / name;
                wim::write_png_image(base.string() + ".png", scenes[k].image);
                wim::write_png_labels(base.string() + "_label.png", scenes[k].truth);
            }
            std::printf("wrote %zu scenes to %s\n", scenes.size(), corpus_out.c_str());
            return 0;
        }
        if (*plot) {
            const auto records = ex::read_csv(plot_csv);
            if (records.empty()) throw wim::Error("no records in " + plot_csv);
            for (const auto& path : ex::emit_outputs(records, plot_out)) std::puts(path.c_str());
            print_summary(records);
            return 0;
        }
        if (*show) {
            const auto archive = ex::load_params(show_path);
            if (show_values) {
                std::fputs(ex::format_params(archive).c_str(), stdout);
                return 0;
            }
            std::printf("kind %s, format %d, dims", archive.kind.c_str(), ex::kParamFormatVersion);
            for (auto d : archive.dims) std::printf(" %zu", d);
            std::printf(", %zu values\n", archive.total_size());
            for (const auto& b : archive.blocks) {
                double lo = 0.0, hi = 0.0;
                if (!b.values.empty()) {
                    lo = *std::min_element(b.values.begin(), b.values.end());
                    hi = *std::max_element(b.values.begin(), b.values.end());
                }
                std::printf("  %-8s %6zu values  min %.6g  max %.6g\n", b.name.c_str(), b.values.size(), lo, hi);
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "wim: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
