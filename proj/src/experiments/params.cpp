#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "wim/experiments.hpp"

namespace wim::experiments {

namespace {

constexpr const char* kMagic = "wim-params";
constexpr std::size_t kValuesPerLine = 6;

Vector to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> slice(const Vector& v, std::size_t start, std::size_t count) {
    return std::vector<double>(v.data() + start, v.data() + start + count);
}

void require_kind(const ParamArchive& a, const std::string& kind, std::size_t ndims) {
    if (a.kind != kind) throw Error("params: expected kind '" + kind + "', file has '" + a.kind + "'");
    if (a.dims.size() != ndims)
        throw Error("params: kind '" + kind + "' needs " + std::to_string(ndims) + " dimensions");
}

void require_block(const ParamArchive& a, const std::string& name, std::size_t size) {
    const ParamBlock& b = a.block(name);
    if (b.values.size() != size)
        throw Error("params: block '" + name + "' has " + std::to_string(b.values.size()) + " values, expected " +
                    std::to_string(size));
}

seg::EdgeType edge_type(std::size_t t) { return static_cast<seg::EdgeType>(t); }

}  // namespace

std::size_t ParamArchive::total_size() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.values.size();
    return n;
}

const ParamBlock& ParamArchive::block(const std::string& name) const {
    for (const auto& b : blocks)
        if (b.name == name) return b;
    throw Error("params: missing block '" + name + "'");
}

std::string format_params(const ParamArchive& archive) {
    std::string out = std::string(kMagic) + ' ' + std::to_string(kParamFormatVersion) + ' ' + archive.kind + ' ' +
                      std::to_string(archive.dims.size());
    for (std::size_t d : archive.dims) out += ' ' + std::to_string(d);
    out += '\n';
    char buf[40];
    for (const auto& b : archive.blocks) {
        if (b.name.empty() || b.name.find_first_of(" \t\n") != std::string::npos)
            throw Error("params: invalid block name");
        out += "block " + b.name + ' ' + std::to_string(b.values.size()) + '\n';
        for (std::size_t k = 0; k < b.values.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", b.values[k]);
            out += buf;
            out += (k + 1) % kValuesPerLine == 0 || k + 1 == b.values.size() ? '\n' : ' ';
        }
    }
    return out;
}

ParamArchive parse_params(const std::string& text) {
    std::istringstream in(text);
    std::string magic, kind;
    int version = 0;
    std::size_t ndims = 0;
    if (!(in >> magic >> version) || magic != kMagic) throw Error("params: not a parameter archive");
    if (version != kParamFormatVersion)
        throw Error("params: format version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kParamFormatVersion) + ")");
    if (!(in >> kind >> ndims) || ndims > 16) throw Error("params: malformed header");
    ParamArchive a;
    a.kind = kind;
    a.dims.resize(ndims);
    for (auto& d : a.dims)
        if (!(in >> d)) throw Error("params: malformed header dimensions");
    std::string word;
    while (in >> word) {
        if (word != "block") throw Error("params: expected 'block', found '" + word + "'");
        ParamBlock b;
        std::size_t size = 0;
        if (!(in >> b.name >> size)) throw Error("params: malformed block header");
        b.values.resize(size);
        for (auto& v : b.values) {
            std::string tok;
            if (!(in >> tok)) throw Error("params: block '" + b.name + "' is truncated");
            char* end = nullptr;
            v = std::strtod(tok.c_str(), &end);
            if (end != tok.c_str() + tok.size()) throw Error("params: bad value '" + tok + "'");
        }
        a.blocks.push_back(std::move(b));
    }
    return a;
}

void save_params(const std::string& path, const ParamArchive& archive) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("params: cannot write " + path);
    out << format_params(archive);
    if (!out) throw Error("params: write failed for " + path);
}

ParamArchive load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("params: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_params(ss.str());
}

ParamArchive to_archive(const Vector& theta) {
    ParamArchive a{"vector", {static_cast<std::size_t>(theta.size())}, {}};
    if (theta.size() > 0) a.blocks.push_back({"theta", slice(theta, 0, static_cast<std::size_t>(theta.size()))});
    return a;
}

Vector vector_from_archive(const ParamArchive& a) {
    require_kind(a, "vector", 1);
    if (a.dims[0] == 0) {
        if (!a.blocks.empty()) throw Error("params: empty vector archive has blocks");
        return Vector(0);
    }
    require_block(a, "theta", a.dims[0]);
    return to_vector(a.block("theta").values);
}

ParamArchive to_archive(const synthetic::QuadLogReg& posterior) {
    return {"quad-log-reg", {synthetic::kClasses}, {{"theta", slice(posterior.params(), 0, synthetic::QuadLogReg::kDim)}}};
}

synthetic::QuadLogReg quad_log_reg_from_archive(const ParamArchive& a) {
    require_kind(a, "quad-log-reg", 1);
    if (a.dims[0] != synthetic::kClasses) throw Error("params: quad-log-reg class count mismatch");
    require_block(a, "theta", synthetic::QuadLogReg::kDim);
    return synthetic::QuadLogReg(to_vector(a.block("theta").values));
}

ParamArchive to_archive(const synthetic::ClassGaussian& likelihood) {
    return {"class-gaussian",
            {synthetic::kClasses, likelihood.shared_d() ? 1u : 0u},
            {{"theta", slice(likelihood.params(), 0, synthetic::ClassGaussian::kDim)}}};
}

synthetic::ClassGaussian class_gaussian_from_archive(const ParamArchive& a) {
    require_kind(a, "class-gaussian", 2);
    if (a.dims[0] != synthetic::kClasses || a.dims[1] > 1) throw Error("params: class-gaussian dimension mismatch");
    require_block(a, "theta", synthetic::ClassGaussian::kDim);
    return synthetic::ClassGaussian(to_vector(a.block("theta").values), a.dims[1] == 1);
}

ParamArchive to_archive(const seg::SegCrfParams& crf) {
    const std::size_t L = crf.labels(), LL = L * L;
    ParamArchive a{"seg-crf", {L}, {}};
    a.blocks.push_back({"q", slice(crf.vector(), crf.q_index(0, 0), LL)});
    for (std::size_t t = 0; t < seg::kEdgeTypes; ++t)
        a.blocks.push_back({"a_" + std::to_string(t), slice(crf.vector(), crf.a_index(edge_type(t), 0, 0), LL)});
    for (std::size_t t = 0; t < seg::kEdgeTypes; ++t)
        a.blocks.push_back({"b_" + std::to_string(t), slice(crf.vector(), crf.b_index(edge_type(t), 0, 0), LL)});
    return a;
}

seg::SegCrfParams crf_from_archive(const ParamArchive& a) {
    require_kind(a, "seg-crf", 1);
    const std::size_t L = a.dims[0], LL = L * L;
    if (L == 0) throw Error("params: seg-crf needs at least one label");
    seg::SegCrfParams crf(L);
    Vector theta(static_cast<Eigen::Index>(crf.dim()));
    auto put = [&](const std::string& name, std::size_t start) {
        require_block(a, name, LL);
        const auto& v = a.block(name).values;
        for (std::size_t k = 0; k < LL; ++k) theta[static_cast<Eigen::Index>(start + k)] = v[k];
    };
    put("q", crf.q_index(0, 0));
    for (std::size_t t = 0; t < seg::kEdgeTypes; ++t) {
        put("a_" + std::to_string(t), crf.a_index(edge_type(t), 0, 0));
        put("b_" + std::to_string(t), crf.b_index(edge_type(t), 0, 0));
    }
    crf.set_vector(theta);
    return crf;
}

ParamArchive to_archive(const seg::GenColorParams& color) {
    const std::size_t L = color.labels(), G = color.palette();
    return {"gen-color",
            {L, G},
            {{"h", slice(color.vector(), color.h_index(0, 0), L * G)},
             {"c", slice(color.vector(), color.c_index(), 1)},
             {"d", slice(color.vector(), color.d_index(0, 0), 3 * G)},
             {"e", slice(color.vector(), color.e_index(), 1)}}};
}

seg::GenColorParams color_from_archive(const ParamArchive& a) {
    require_kind(a, "gen-color", 2);
    const std::size_t L = a.dims[0], G = a.dims[1];
    if (L == 0 || G == 0) throw Error("params: gen-color dimensions must be positive");
    seg::GenColorParams color(L, G);
    Vector theta(static_cast<Eigen::Index>(color.dim()));
    auto put = [&](const std::string& name, std::size_t start, std::size_t size) {
        require_block(a, name, size);
        const auto& v = a.block(name).values;
        for (std::size_t k = 0; k < size; ++k) theta[static_cast<Eigen::Index>(start + k)] = v[k];
    };
    put("h", color.h_index(0, 0), L * G);
    put("c", color.c_index(), 1);
    put("d", color.d_index(0, 0), 3 * G);
    put("e", color.e_index(), 1);
    color.set_vector(theta);
    return color;
}

}  // namespace wim::experiments
