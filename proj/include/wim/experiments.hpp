#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wim/learning.hpp"
#include "wim/seg/corpus.hpp"
#include "wim/seg/forest.hpp"
#include "wim/seg/training.hpp"
#include "wim/synthetic.hpp"

namespace wim::experiments {

struct ExperimentRecord {
    std::string experiment;
    std::string method;
    std::size_t train_size = 0;
    std::size_t repetition = 0;
    double train_error = 0.0;
    double test_error = 0.0;
    double risk_diff = 0.0;
    std::uint64_t seed = 0;
    double wall_time = 0.0;

    bool operator==(const ExperimentRecord&) const = default;
};

/// risk_diff is filled in as |train_error - test_error|.
ExperimentRecord make_record(std::string experiment, std::string method, std::size_t train_size,
                             std::size_t repetition, double train_error, double test_error,
                             std::uint64_t seed, double wall_time = 0.0);

/// A (T, repetition, method) cell whose training diverged; it has no record.
struct DivergenceNote {
    std::string experiment;
    std::string method;
    std::size_t train_size = 0;
    std::size_t repetition = 0;
    std::string message;
};

/// Seed of one (T, repetition) cell derived from the run seed.
std::uint64_t cell_seed(std::uint64_t run_seed, std::size_t train_size, std::size_t repetition);

inline const std::vector<std::string> kSyntheticMethods{"CL", "CL-weak-reg", "CL-strong-reg", "IM"};
inline const std::vector<std::string> kSegmentationMethods{"RF", "CL-CRF", "IM"};

struct SyntheticConfig {
    bool misspecified = false;
    std::vector<std::size_t> sizes{10, 20, 50, 100, 500};
    std::size_t repetitions = 50;
    std::size_t test_points = 100000;
    std::uint64_t seed = 1;
    std::vector<std::string> methods = kSyntheticMethods;
    /// Per-method training settings; batch_size 0 means the whole training set.
    std::map<std::string, TrainConfig> train;
    std::size_t workers = 1;
    bool record_wall_time = false;

    SyntheticConfig();
    std::string experiment_name() const { return misspecified ? "synthetic-misspecified" : "synthetic"; }
    void validate() const;
};

std::vector<ExperimentRecord> run_synthetic(const SyntheticConfig& config,
                                            std::vector<DivergenceNote>* divergences = nullptr);

/// One column-strip of chain images:
/// y^, x~, y~, x*, y*, decoded, left to right.
struct ChainStrip {
    std::size_t train_size = 0;
    std::size_t repetition = 0;
    std::size_t example = 0;
    seg::Image image;
};

struct SegmentationConfig {
    std::vector<std::size_t> sizes{5, 10, 20, 40};
    std::size_t repetitions = 10;
    std::size_t test_images = 20;
    std::uint64_t seed = 1;
    std::string corpus_dir;  ///< empty: synthetic corpus
    seg::CorpusConfig corpus;
    seg::ForestConfig forest;
    std::map<std::string, TrainConfig> train;  ///< "CL-CRF" and "IM"
    std::size_t palette = 8;
    /// Images reserved for the forest alone; 0 trains it on the CRF training set.
    std::size_t forest_images = 0;
    seg::DecodeConfig decode;
    std::size_t strip_examples = 2;  ///< strips per (T, repetition 0)
    std::size_t workers = 1;
    bool record_wall_time = false;

    SegmentationConfig();
    void validate() const;
};

struct SegmentationOutput {
    std::vector<ExperimentRecord> records;
    std::vector<DivergenceNote> divergences;
    std::vector<ChainStrip> strips;
};

SegmentationOutput run_segmentation(const SegmentationConfig& config);

/// Trained models of one segmentation cell, for the CLI.
struct SegmentationModels {
    seg::UnaryPredictor forest;
    seg::SegCrfParams cl_crf{3};
    seg::SegModelPair im{seg::SegCrfParams(3), seg::GenColorParams(3, 1)};
};

SegmentationModels train_segmentation_models(const std::vector<const seg::LabeledImage*>& train,
                                             const SegmentationConfig& config, std::uint64_t seed);

// CSV ------------------------------------------------------------------------

inline constexpr const char* kCsvHeader =
    "experiment,method,train_size,repetition,train_error,test_error,risk_diff,seed,wall_time";

std::string records_to_csv(const std::vector<ExperimentRecord>& records);
std::vector<ExperimentRecord> parse_csv(const std::string& text);
std::vector<ExperimentRecord> read_csv(const std::string& path);

// Aggregation and plots -------------------------------------------------------

struct CellSummary {
    std::string experiment;
    std::string method;
    std::size_t train_size = 0;
    std::size_t count = 0;
    double test_mean = 0.0, test_stderr = 0.0;
    double train_mean = 0.0, train_stderr = 0.0;
    double risk_mean = 0.0, risk_stderr = 0.0;
};

/// Mean and standard error per (experiment, method, T), in first-seen order.
std::vector<CellSummary> summarize(const std::vector<ExperimentRecord>& records);

const CellSummary* find_summary(const std::vector<CellSummary>& summaries, const std::string& experiment,
                                const std::string& method, std::size_t train_size);

enum class PlotMetric { test_error, risk_diff };

/// Mean +- standard error line plot against T (log axis) for one experiment.
std::string svg_plot(const std::vector<CellSummary>& summaries, const std::string& experiment, PlotMetric metric);

/// Writes results.csv, per-experiment plots and chain strips into `dir`.
/// Returns the paths written.
std::vector<std::string> emit_outputs(const std::vector<ExperimentRecord>& records, const std::string& dir,
                                      const std::vector<ChainStrip>& strips = {});

// Parameter archives ----------------------------------------------------------

inline constexpr int kParamFormatVersion = 1;

struct ParamBlock {
    std::string name;
    std::vector<double> values;
};

struct ParamArchive {
    std::string kind;
    std::vector<std::size_t> dims;
    std::vector<ParamBlock> blocks;

    std::size_t total_size() const;
    const ParamBlock& block(const std::string& name) const;
};

void save_params(const std::string& path, const ParamArchive& archive);
ParamArchive load_params(const std::string& path);
std::string format_params(const ParamArchive& archive);
ParamArchive parse_params(const std::string& text);

ParamArchive to_archive(const Vector& theta);
ParamArchive to_archive(const synthetic::QuadLogReg& posterior);
ParamArchive to_archive(const synthetic::ClassGaussian& likelihood);
ParamArchive to_archive(const seg::SegCrfParams& crf);
ParamArchive to_archive(const seg::GenColorParams& color);

Vector vector_from_archive(const ParamArchive& archive);
synthetic::QuadLogReg quad_log_reg_from_archive(const ParamArchive& archive);
synthetic::ClassGaussian class_gaussian_from_archive(const ParamArchive& archive);
seg::SegCrfParams crf_from_archive(const ParamArchive& archive);
seg::GenColorParams color_from_archive(const ParamArchive& archive);

// Configuration files ---------------------------------------------------------

/// `key = value` lines under optional `[section]` headers; `#` starts a
/// comment. Keys are returned as "section.key".
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::string& path);

/// Applies recognised keys; throws on unknown keys or malformed values.
void apply_config(SyntheticConfig& config, const KeyValues& values);
void apply_config(SegmentationConfig& config, const KeyValues& values);

std::string format_config(const SyntheticConfig& config);
std::string format_config(const SegmentationConfig& config);

}  // namespace wim::experiments
