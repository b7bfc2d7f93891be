#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wim/experiments.hpp"

namespace wim::experiments {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw Error("config: bad value for " + key + ": '" + value + "'");
}

double to_real(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size()) bad_value(key, v);
    return x;
}

std::size_t to_size(const std::string& key, const std::string& v) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) bad_value(key, v);
    return static_cast<std::size_t>(std::stoull(v));
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(key, v);
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_size(key, trim(item)));
    if (out.empty()) bad_value(key, v);
    return out;
}

std::vector<std::string> to_names(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!trim(item).empty()) out.push_back(trim(item));
    return out;
}

const char* schedule_name(StepSchedule s) {
    switch (s) {
        case StepSchedule::constant: return "constant";
        case StepSchedule::inverse_t: return "inverse_t";
        case StepSchedule::inverse_sqrt_t: return "inverse_sqrt_t";
    }
    return "constant";
}

void set_train_key(TrainConfig& c, const std::string& field, const std::string& key, const std::string& v) {
    if (field == "step_size") c.step_size = to_real(key, v);
    else if (field == "schedule") {
        if (v == "constant") c.schedule = StepSchedule::constant;
        else if (v == "inverse_t") c.schedule = StepSchedule::inverse_t;
        else if (v == "inverse_sqrt_t") c.schedule = StepSchedule::inverse_sqrt_t;
        else bad_value(key, v);
    } else if (field == "decay_offset") c.decay_offset = to_real(key, v);
    else if (field == "step_floor") c.step_floor = to_real(key, v);
    else if (field == "epochs") c.epochs = to_size(key, v);
    else if (field == "batch_size") c.batch_size = to_size(key, v);
    else if (field == "l2_weight") c.l2_weight = to_real(key, v);
    else if (field == "gibbs_sweeps_per_update") c.gibbs_sweeps_per_update = to_size(key, v);
    else if (field == "warm_start") c.warm_start = to_bool(key, v);
    else if (field == "clip") c.clip = to_real(key, v);
    else if (field == "chain_steps") c.chain_steps = to_size(key, v);
    else throw Error("config: unknown key " + key);
}

std::string real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void format_train(std::ostringstream& o, const std::string& method, const TrainConfig& c) {
    o << "\n[train." << method << "]\n";
    o << "step_size = " << real(c.step_size) << '\n';
    o << "schedule = " << schedule_name(c.schedule) << '\n';
    o << "decay_offset = " << real(c.decay_offset) << '\n';
    o << "step_floor = " << real(c.step_floor) << '\n';
    o << "epochs = " << c.epochs << '\n';
    o << "batch_size = " << c.batch_size << '\n';
    o << "l2_weight = " << real(c.l2_weight) << '\n';
    o << "gibbs_sweeps_per_update = " << c.gibbs_sweeps_per_update << '\n';
    o << "warm_start = " << (c.warm_start ? "true" : "false") << '\n';
    o << "clip = " << real(c.clip) << '\n';
    o << "chain_steps = " << c.chain_steps << '\n';
}

std::string join(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + std::to_string(v[k]);
    return out;
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + v[k];
    return out;
}

bool in_list(const std::vector<std::string>& list, const std::string& s) {
    return std::find(list.begin(), list.end(), s) != list.end();
}

// Splits "train.IM.step_size" into ("IM", "step_size").
bool train_key(const std::string& key, std::string& method, std::string& field) {
    if (key.rfind("train.", 0) != 0) return false;
    const auto dot = key.rfind('.');
    if (dot <= 6) return false;
    method = key.substr(6, dot - 6);
    field = key.substr(dot + 1);
    return true;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
    KeyValues out;
    std::istringstream in(text);
    std::string line, section;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw Error("config line " + std::to_string(n) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error("config line " + std::to_string(n) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw Error("config line " + std::to_string(n) + ": empty key");
        out[section.empty() ? key : section + "." + key] = trim(line.substr(eq + 1));
    }
    return out;
}

KeyValues read_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_key_values(ss.str());
}

void apply_config(SyntheticConfig& c, const KeyValues& values) {
    for (const auto& [key, v] : values) {
        std::string method, field;
        if (train_key(key, method, field)) {
            if (in_list(kSyntheticMethods, method)) set_train_key(c.train[method], field, key, v);
            else if (!in_list(kSegmentationMethods, method)) throw Error("config: unknown method in " + key);
        } else if (key == "synthetic.misspecified") c.misspecified = to_bool(key, v);
        else if (key == "synthetic.sizes") c.sizes = to_sizes(key, v);
        else if (key == "synthetic.repetitions") c.repetitions = to_size(key, v);
        else if (key == "synthetic.test_points") c.test_points = to_size(key, v);
        else if (key == "synthetic.seed") c.seed = to_size(key, v);
        else if (key == "synthetic.methods") c.methods = to_names(v);
        else if (key == "synthetic.workers") c.workers = to_size(key, v);
        else if (key == "synthetic.record_wall_time") c.record_wall_time = to_bool(key, v);
        else if (key.rfind("segmentation.", 0) == 0 || key.rfind("corpus.", 0) == 0 ||
                 key.rfind("forest.", 0) == 0 || key.rfind("decode.", 0) == 0)
            continue;
        else throw Error("config: unknown key " + key);
    }
}

void apply_config(SegmentationConfig& c, const KeyValues& values) {
    for (const auto& [key, v] : values) {
        std::string method, field;
        if (train_key(key, method, field)) {
            if (method == "CL-CRF" || method == "IM") set_train_key(c.train[method], field, key, v);
            else if (!in_list(kSyntheticMethods, method)) throw Error("config: unknown method in " + key);
        } else if (key == "segmentation.sizes") c.sizes = to_sizes(key, v);
        else if (key == "segmentation.repetitions") c.repetitions = to_size(key, v);
        else if (key == "segmentation.test_images") c.test_images = to_size(key, v);
        else if (key == "segmentation.seed") c.seed = to_size(key, v);
        else if (key == "segmentation.corpus_dir") c.corpus_dir = v;
        else if (key == "segmentation.palette") c.palette = to_size(key, v);
        else if (key == "segmentation.forest_images") c.forest_images = to_size(key, v);
        else if (key == "segmentation.strip_examples") c.strip_examples = to_size(key, v);
        else if (key == "segmentation.workers") c.workers = to_size(key, v);
        else if (key == "segmentation.record_wall_time") c.record_wall_time = to_bool(key, v);
        else if (key == "corpus.width") c.corpus.width = to_size(key, v);
        else if (key == "corpus.height") c.corpus.height = to_size(key, v);
        else if (key == "corpus.labels") c.corpus.labels = to_size(key, v);
        else if (key == "corpus.coarse_grid") c.corpus.coarse_grid = to_size(key, v);
        else if (key == "corpus.pixel_noise") c.corpus.pixel_noise = to_real(key, v);
        else if (key == "corpus.illumination_shift") c.corpus.illumination_shift = to_real(key, v);
        else if (key == "corpus.palette_spread") c.corpus.palette_spread = to_real(key, v);
        else if (key == "forest.trees") c.forest.trees = to_size(key, v);
        else if (key == "forest.max_depth") c.forest.max_depth = to_size(key, v);
        else if (key == "forest.min_leaf") c.forest.min_leaf = to_size(key, v);
        else if (key == "forest.features_per_split") c.forest.features_per_split = to_size(key, v);
        else if (key == "forest.thresholds_per_feature") c.forest.thresholds_per_feature = to_size(key, v);
        else if (key == "forest.max_samples_per_tree") c.forest.max_samples_per_tree = to_size(key, v);
        else if (key == "decode.burn_in") c.decode.burn_in = to_size(key, v);
        else if (key == "decode.samples") c.decode.samples = to_size(key, v);
        else if (key.rfind("synthetic.", 0) == 0) continue;
        else throw Error("config: unknown key " + key);
    }
}

std::string format_config(const SyntheticConfig& c) {
    std::ostringstream o;
    o << "[synthetic]\n";
    o << "misspecified = " << (c.misspecified ? "true" : "false") << '\n';
    o << "sizes = " << join(c.sizes) << '\n';
    o << "repetitions = " << c.repetitions << '\n';
    o << "test_points = " << c.test_points << '\n';
    o << "seed = " << c.seed << '\n';
    o << "methods = " << join(c.methods) << '\n';
    o << "workers = " << c.workers << '\n';
    o << "record_wall_time = " << (c.record_wall_time ? "true" : "false") << '\n';
    for (const auto& m : c.methods)
        if (c.train.contains(m)) format_train(o, m, c.train.at(m));
    return o.str();
}

std::string format_config(const SegmentationConfig& c) {
    std::ostringstream o;
    o << "[segmentation]\n";
    o << "sizes = " << join(c.sizes) << '\n';
    o << "repetitions = " << c.repetitions << '\n';
    o << "test_images = " << c.test_images << '\n';
    o << "seed = " << c.seed << '\n';
    if (!c.corpus_dir.empty()) o << "corpus_dir = " << c.corpus_dir << '\n';
    o << "palette = " << c.palette << '\n';
    o << "forest_images = " << c.forest_images << '\n';
    o << "strip_examples = " << c.strip_examples << '\n';
    o << "workers = " << c.workers << '\n';
    o << "record_wall_time = " << (c.record_wall_time ? "true" : "false") << '\n';
    o << "\n[corpus]\n";
    o << "width = " << c.corpus.width << '\n';
    o << "height = " << c.corpus.height << '\n';
    o << "labels = " << c.corpus.labels << '\n';
    o << "coarse_grid = " << c.corpus.coarse_grid << '\n';
    o << "pixel_noise = " << real(c.corpus.pixel_noise) << '\n';
    o << "illumination_shift = " << real(c.corpus.illumination_shift) << '\n';
    o << "palette_spread = " << real(c.corpus.palette_spread) << '\n';
    o << "\n[forest]\n";
    o << "trees = " << c.forest.trees << '\n';
    o << "max_depth = " << c.forest.max_depth << '\n';
    o << "min_leaf = " << c.forest.min_leaf << '\n';
    o << "features_per_split = " << c.forest.features_per_split << '\n';
    o << "thresholds_per_feature = " << c.forest.thresholds_per_feature << '\n';
    o << "max_samples_per_tree = " << c.forest.max_samples_per_tree << '\n';
    o << "\n[decode]\n";
    o << "burn_in = " << c.decode.burn_in << '\n';
    o << "samples = " << c.decode.samples << '\n';
    for (const char* m : {"CL-CRF", "IM"})
        if (c.train.contains(m)) format_train(o, m, c.train.at(m));
    return o.str();
}

}  // namespace wim::experiments
