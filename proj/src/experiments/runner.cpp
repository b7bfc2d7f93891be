#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "wim/experiments.hpp"
#include "wim/png_io.hpp"

namespace wim::experiments {

ExperimentRecord make_record(std::string experiment, std::string method, std::size_t train_size,
                             std::size_t repetition, double train_error, double test_error,
                             std::uint64_t seed, double wall_time) {
    ExperimentRecord r;
    r.experiment = std::move(experiment);
    r.method = std::move(method);
    r.train_size = train_size;
    r.repetition = repetition;
    r.train_error = train_error;
    r.test_error = test_error;
    r.risk_diff = std::abs(train_error - test_error);
    r.seed = seed;
    r.wall_time = wall_time;
    return r;
}

std::uint64_t cell_seed(std::uint64_t run_seed, std::size_t train_size, std::size_t repetition) {
    RngStream s = RngStream(run_seed).split(train_size).split(repetition);
    return s.next_u64();
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t method_index(const std::vector<std::string>& all, const std::string& m) {
    const auto it = std::find(all.begin(), all.end(), m);
    if (it == all.end()) throw Error("unknown method: " + m);
    return static_cast<std::size_t>(it - all.begin());
}

// Runs fn(cell) for cell in [0, n) on up to `workers` threads.
template <class F>
void run_cells(std::size_t n, std::size_t workers, F&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t c = 0; c < n; ++c) fn(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w)
        threads.emplace_back([&] {
            for (std::size_t c = next++; c < n; c = next++) {
                try {
                    fn(c);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

TrainConfig resolved(const std::map<std::string, TrainConfig>& train, const std::string& method,
                     std::size_t train_size, std::uint64_t seed) {
    const auto it = train.find(method);
    if (it == train.end()) throw Error("no training configuration for method " + method);
    TrainConfig c = it->second;
    if (c.batch_size == 0) c.batch_size = std::max<std::size_t>(train_size, 1);
    c.seed = seed;
    return c;
}

struct CellOutput {
    std::vector<ExperimentRecord> records;
    std::vector<DivergenceNote> divergences;
    std::vector<ChainStrip> strips;
};

template <class Out>
void flatten(std::vector<CellOutput>& cells, Out& records, std::vector<DivergenceNote>* divergences) {
    for (auto& c : cells) {
        for (auto& r : c.records) records.push_back(std::move(r));
        if (divergences)
            for (auto& d : c.divergences) divergences->push_back(std::move(d));
    }
}

}  // namespace

SyntheticConfig::SyntheticConfig() {
    TrainConfig cl;
    cl.step_size = 0.3;
    cl.schedule = StepSchedule::constant;
    cl.epochs = 2000;
    cl.batch_size = 0;
    cl.clip = 10.0;
    train["CL"] = cl;
    TrainConfig weak = cl;
    weak.l2_weight = kWeakL2;
    train["CL-weak-reg"] = weak;
    TrainConfig strong = cl;
    strong.l2_weight = kStrongL2;
    train["CL-strong-reg"] = strong;
    TrainConfig im = cl;
    im.schedule = StepSchedule::inverse_t;
    im.decay_offset = 100.0;
    im.epochs = 10000;
    train["IM"] = im;
}

void SyntheticConfig::validate() const {
    if (test_points == 0) throw Error("synthetic: test_points must be positive");
    for (std::size_t t : sizes)
        if (t == 0) throw Error("synthetic: training sizes must be positive");
    for (const auto& m : methods) {
        method_index(kSyntheticMethods, m);
        if (!train.contains(m)) throw Error("synthetic: no training configuration for method " + m);
        TrainConfig c = train.at(m);
        if (c.batch_size == 0) c.batch_size = 1;
        c.validate();
    }
}

std::vector<ExperimentRecord> run_synthetic(const SyntheticConfig& config, std::vector<DivergenceNote>* divergences) {
    config.validate();
    const synthetic::GeneratorConfig generator = config.misspecified ? synthetic::GeneratorConfig::misspecified()
                                                                     : synthetic::GeneratorConfig::well_specified();
    const std::string name = config.experiment_name();
    const std::size_t reps = config.repetitions;
    std::vector<CellOutput> cells(config.sizes.size() * reps);

    run_cells(cells.size(), config.workers, [&](std::size_t cell) {
        const std::size_t T = config.sizes[cell / reps];
        const std::size_t rep = cell % reps;
        const std::uint64_t cs = cell_seed(config.seed, T, rep);
        const RngStream root(cs);
        RngStream train_rng = root.split(0), test_rng = root.split(1);
        const auto train = synthetic::sample_generator(generator, T, train_rng);
        const auto test = synthetic::sample_generator(generator, config.test_points, test_rng);
        CellOutput& out = cells[cell];

        for (const std::string& method : config.methods) {
            RngStream method_rng = root.split(2 + method_index(kSyntheticMethods, method));
            const TrainConfig c = resolved(config.train, method, T, method_rng.next_u64());
            const auto t0 = Clock::now();
            synthetic::QuadLogReg posterior;
            try {
                if (method == "IM") {
                    double mean = 0.0, var = 0.0;
                    for (const auto& ex : train) mean += ex.x;
                    mean /= static_cast<double>(T);
                    for (const auto& ex : train) var += (ex.x - mean) * (ex.x - mean);
                    var = std::max(var / static_cast<double>(T), 1e-2);
                    auto likelihood = synthetic::ClassGaussian::from_moments(mean, var, config.misspecified);
                    train_implicit(train, posterior, likelihood, c);
                } else {
                    train_conditional_likelihood(train, posterior, c);
                }
            } catch (const DivergenceError& e) {
                out.divergences.push_back({name, method, T, rep, e.what()});
                continue;
            }
            const double wall = config.record_wall_time ? seconds_since(t0) : 0.0;
            out.records.push_back(make_record(name, method, T, rep, synthetic::error_rate(posterior, train),
                                              synthetic::error_rate(posterior, test), cs, wall));
        }
    });

    std::vector<ExperimentRecord> records;
    flatten(cells, records, divergences);
    return records;
}

SegmentationConfig::SegmentationConfig() {
    TrainConfig c;
    c.step_size = 0.2;
    c.schedule = StepSchedule::inverse_t;
    c.decay_offset = 100.0;
    c.epochs = 200;
    c.batch_size = 1;
    c.clip = 10.0;
    c.gibbs_sweeps_per_update = 1;
    train["CL-CRF"] = c;
    train["IM"] = c;
}

void SegmentationConfig::validate() const {
    if (test_images == 0) throw Error("segmentation: test_images must be positive");
    if (palette == 0 || palette > 255) throw Error("segmentation: palette must be in [1, 255]");
    for (const char* m : {"CL-CRF", "IM"}) {
        if (!train.contains(m)) throw Error(std::string("segmentation: no training configuration for method ") + m);
        TrainConfig c = train.at(m);
        if (c.batch_size == 0) c.batch_size = 1;
        c.validate();
    }
}

namespace {

seg::Image label_image(const seg::Labeling& y) {
    seg::Image im(y.width, y.height);
    for (std::size_t i = 0; i < y.size(); ++i) im[i] = label_color(y[i]);
    return im;
}

seg::Image make_strip(const std::vector<seg::Image>& panels) {
    const std::size_t w = panels.front().width, h = panels.front().height, gap = 2;
    seg::Image strip(panels.size() * (w + gap) - gap, h, seg::Color{1.0, 1.0, 1.0});
    for (std::size_t p = 0; p < panels.size(); ++p)
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c) strip[r * strip.width + p * (w + gap) + c] = panels[p][r * w + c];
    return strip;
}

std::size_t count_labels(const std::vector<seg::LabeledImage>& pool) {
    std::size_t labels = 0;
    for (const auto& li : pool)
        for (seg::Label l : li.truth.labels) labels = std::max<std::size_t>(labels, l + 1u);
    return labels;
}

std::vector<const seg::Image*> images_of(const std::vector<const seg::LabeledImage*>& data) {
    std::vector<const seg::Image*> out;
    for (const auto* li : data) out.push_back(&li->image);
    return out;
}

std::vector<const seg::Labeling*> labelings_of(const std::vector<const seg::LabeledImage*>& data) {
    std::vector<const seg::Labeling*> out;
    for (const auto* li : data) out.push_back(&li->truth);
    return out;
}

}  // namespace

SegmentationModels train_segmentation_models(const std::vector<const seg::LabeledImage*>& train,
                                             const SegmentationConfig& config, std::uint64_t seed) {
    config.validate();
    if (train.empty()) throw Error("segment train: no training images");
    std::size_t labels = 0;
    for (const auto* li : train)
        for (seg::Label l : li->truth.labels) labels = std::max<std::size_t>(labels, l + 1u);
    labels = std::max(labels, config.corpus_dir.empty() ? config.corpus.labels : labels);
    const RngStream root(seed);
    RngStream forest_rng = root.split(1), color_rng = root.split(2);
    SegmentationModels m;
    m.forest = seg::UnaryPredictor::train(images_of(train), labelings_of(train), labels, config.forest, forest_rng);
    const seg::GridGraph graph(train.front()->image.width, train.front()->image.height);
    const auto examples = seg::prepare_examples(train, m.forest, graph);
    RngStream cl_rng = root.split(10), im_rng = root.split(11);
    m.cl_crf = seg::init_crf_from_confusion(examples, labels);
    seg::train_crf_conditional_likelihood(examples, graph, m.cl_crf,
                                          resolved(config.train, "CL-CRF", train.size(), cl_rng.next_u64()));
    m.im = {seg::init_crf_from_confusion(examples, labels),
            seg::init_color_model(examples, labels, config.palette, color_rng)};
    seg::train_crf_implicit(examples, graph, m.forest, m.im,
                            resolved(config.train, "IM", train.size(), im_rng.next_u64()));
    return m;
}

SegmentationOutput run_segmentation(const SegmentationConfig& config) {
    config.validate();
    const std::string name = "segmentation";
    std::vector<seg::LabeledImage> loaded;
    std::size_t labels = config.corpus.labels;
    if (!config.corpus_dir.empty()) {
        loaded = seg::load_corpus(config.corpus_dir);
        labels = count_labels(loaded);
        const std::size_t needed =
            config.test_images + config.forest_images + *std::max_element(config.sizes.begin(), config.sizes.end());
        if (loaded.size() < needed)
            throw Error("segmentation: corpus has " + std::to_string(loaded.size()) + " images, sweep needs " +
                        std::to_string(needed));
    }
    const std::size_t reps = config.repetitions;
    std::vector<CellOutput> cells(config.sizes.size() * reps);

    run_cells(cells.size(), config.workers, [&](std::size_t cell) {
        const std::size_t T = config.sizes[cell / reps];
        const std::size_t rep = cell % reps;
        const std::uint64_t cs = cell_seed(config.seed, T, rep);
        const RngStream root(cs);
        CellOutput& out = cells[cell];

        std::vector<seg::LabeledImage> generated;
        std::vector<const seg::LabeledImage*> train, test, forest_set;
        const std::size_t own_forest = config.forest_images;
        const std::size_t total = T + config.test_images + own_forest;
        RngStream data_rng = root.split(0);
        std::vector<const seg::LabeledImage*> drawn;
        if (config.corpus_dir.empty()) {
            generated = seg::generate_corpus(config.corpus, total, data_rng);
            for (const auto& li : generated) drawn.push_back(&li);
        } else {
            std::vector<std::size_t> order(loaded.size());
            for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
            for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[data_rng.below(i)]);
            for (std::size_t k = 0; k < total; ++k) drawn.push_back(&loaded[order[k]]);
        }
        for (std::size_t k = 0; k < drawn.size(); ++k) {
            if (k < T) train.push_back(drawn[k]);
            else if (k < T + config.test_images) test.push_back(drawn[k]);
            else forest_set.push_back(drawn[k]);
        }
        if (own_forest == 0) forest_set = train;
        if (forest_set.empty()) throw Error("segmentation: training size 0 needs forest_images > 0");

        auto t0 = Clock::now();
        RngStream forest_rng = root.split(1);
        const auto forest = seg::UnaryPredictor::train(images_of(forest_set), labelings_of(forest_set), labels,
                                                       config.forest, forest_rng);
        const seg::GridGraph graph(test.front()->image.width, test.front()->image.height);
        const auto fx = seg::prepare_examples(forest_set, forest, graph);
        const auto trx = seg::prepare_examples(train, forest, graph);
        const auto tex = seg::prepare_examples(test, forest, graph);
        const double forest_time = seconds_since(t0);
        auto wall = [&](double s) { return config.record_wall_time ? s : 0.0; };
        out.records.push_back(make_record(name, "RF", T, rep, seg::unary_error(fx), seg::unary_error(tex), cs,
                                          wall(forest_time)));
        if (train.empty()) return;

        const RngStream train_decode = root.split(20), test_decode = root.split(21);
        auto evaluate = [&](const seg::SegCrfParams& crf, const std::string& method, double seconds,
                            std::vector<seg::Labeling>* decoded) {
            RngStream a = train_decode, b = test_decode;
            const double tr = seg::segmentation_error(trx, graph, crf, config.decode, a, decoded);
            const double te = seg::segmentation_error(tex, graph, crf, config.decode, b);
            out.records.push_back(make_record(name, method, T, rep, tr, te, cs, wall(seconds)));
        };

        {
            t0 = Clock::now();
            RngStream cl_rng = root.split(10);
            seg::SegCrfParams crf = seg::init_crf_from_confusion(trx, labels);
            try {
                seg::train_crf_conditional_likelihood(trx, graph, crf,
                                                      resolved(config.train, "CL-CRF", T, cl_rng.next_u64()));
                evaluate(crf, "CL-CRF", seconds_since(t0), nullptr);
            } catch (const DivergenceError& e) {
                out.divergences.push_back({name, "CL-CRF", T, rep, e.what()});
            }
        }
        {
            t0 = Clock::now();
            RngStream color_rng = root.split(2), im_rng = root.split(11);
            seg::SegModelPair model{seg::init_crf_from_confusion(trx, labels),
                                    seg::init_color_model(trx, labels, config.palette, color_rng)};
            seg::WarmStartBuffer buffer(trx, labels, color_rng);
            try {
                seg::train_crf_implicit(trx, graph, forest, model,
                                        resolved(config.train, "IM", T, im_rng.next_u64()), &buffer);
                std::vector<seg::Labeling> decoded;
                evaluate(model.crf, "IM", seconds_since(t0), &decoded);
                if (rep == 0)
                    for (std::size_t k = 0; k < std::min(config.strip_examples, trx.size()); ++k) {
                        const seg::ChainState& s = buffer[k];
                        out.strips.push_back({T, rep, k,
                                              make_strip({label_image(s.y_hat), s.x_tilde, label_image(s.y_tilde),
                                                          trx[k].data->image, label_image(trx[k].data->truth),
                                                          label_image(decoded[k])})});
                    }
            } catch (const DivergenceError& e) {
                out.divergences.push_back({name, "IM", T, rep, e.what()});
            }
        }
    });

    SegmentationOutput result;
    flatten(cells, result.records, &result.divergences);
    for (auto& c : cells)
        for (auto& s : c.strips) result.strips.push_back(std::move(s));
    return result;
}

}  // namespace wim::experiments
