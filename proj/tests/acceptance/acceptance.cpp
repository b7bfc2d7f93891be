// Acceptance suite: one PASS/FAIL line per criterion.
//
// Criteria 1-5, 8 and 10 check exact identities against oracles; a FAIL there
// is a defect and makes the process exit nonzero. Criteria 6, 7 and 9 compare
// mean curves of seeded experiments; their verdicts are reported, and only
// gate the exit code under --strict.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>

#include <CLI11.hpp>

#include "wim/experiments.hpp"
#include "wim/verify.hpp"

namespace ex = wim::experiments;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* title;
    double time_limit;  // seconds
    bool gating;
    std::function<Verdict()> run;
};

Verdict from_check(const wim::verify::CheckResult& r) { return {r.pass, r.detail}; }

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
    return buf;
}

const ex::CellSummary& cell(const std::vector<ex::CellSummary>& s, const std::string& exp, const std::string& m,
                            std::size_t t) {
    const auto* c = ex::find_summary(s, exp, m, t);
    if (!c) throw wim::Error("missing cell " + exp + "/" + m + "/T=" + std::to_string(t));
    return *c;
}

void print_table(const std::vector<ex::CellSummary>& s, const std::string& exp, const std::vector<std::string>& methods,
                 const std::vector<std::size_t>& sizes) {
    std::printf("    %-8s", "T");
    for (const auto& m : methods) std::printf(" %16s", (m + " test/gap").c_str());
    std::printf("\n");
    for (std::size_t t : sizes) {
        std::printf("    %-8zu", t);
        for (const auto& m : methods) {
            const auto& c = cell(s, exp, m, t);
            std::printf("    %.4f/%.4f", c.test_mean, c.risk_mean);
        }
        std::printf("\n");
    }
}

std::vector<ex::ExperimentRecord> first_reps(const std::vector<ex::ExperimentRecord>& r, std::size_t reps) {
    std::vector<ex::ExperimentRecord> out;
    for (const auto& x : r)
        if (x.repetition < reps) out.push_back(x);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::vector<int> only;
    std::string out_dir = "acceptance_out";
    std::uint64_t seed = 1;
    bool strict = false;
    app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',');
    app.add_option("--out", out_dir, "Directory for experiment outputs")->capture_default_str();
    app.add_option("--seed", seed, "Seed for every criterion")->capture_default_str();
    app.add_flag("--strict", strict, "Let the experiment-ordering criteria gate the exit code too");
    CLI11_PARSE(app, argc, argv);

    const wim::RngStream root(seed);
    auto seed_of = [&](int id) { return root.split(static_cast<std::uint64_t>(id)).next_u64(); };

    // Experiment outputs are shared by criteria 6, 7, 9 and 10.
    std::vector<ex::ExperimentRecord> syn, mis;
    ex::SegmentationOutput seg;
    ex::SyntheticConfig syn_cfg, mis_cfg;
    ex::SegmentationConfig seg_cfg;
    syn_cfg.seed = mis_cfg.seed = seg_cfg.seed = seed;
    mis_cfg.misspecified = true;

    auto save = [&](const std::string& name, const auto& records, const std::vector<ex::ChainStrip>& strips,
                    const std::string& config) {
        const auto dir = std::filesystem::path(out_dir) / name;
        ex::emit_outputs(records, dir.string(), strips);
        std::FILE* f = std::fopen((dir / "resolved.cfg").string().c_str(), "w");
        if (f) {
            std::fputs(config.c_str(), f);
            std::fclose(f);
        }
    };

    const std::vector<Criterion> criteria{
        {1, "stationary marginals vs dense eigensolver", 2.0, true,
         [&] { return from_check(wim::verify::check_stationary(seed_of(1), 200)); }},
        {2, "strong vs weak implicit consistency", 1e9, true,
         [&] { return from_check(wim::verify::check_strong_vs_weak(seed_of(2))); }},
        {3, "gradients vs finite differences", 1e9, true,
         [&] { return from_check(wim::verify::check_gradients(seed_of(3))); }},
        {4, "implicit step unbiasedness", 30.0, true,
         [&] { return from_check(wim::verify::check_implicit_step(seed_of(4), 200000, 4.0)); }},
        {5, "exact-case recovery", 120.0, true,
         [&] { return from_check(wim::verify::check_exact_recovery(seed_of(5), 5000, 0.01)); }},
        {6, "synthetic study orderings", 600.0, false,
         [&] {
             syn = ex::run_synthetic(syn_cfg);
             save("synthetic", syn, {}, ex::format_config(syn_cfg));
             const auto s = ex::summarize(syn);
             print_table(s, "synthetic", {"CL", "IM"}, syn_cfg.sizes);
             Verdict v{true, ""};
             for (std::size_t t : syn_cfg.sizes) {
                 const auto &cl = cell(s, "synthetic", "CL", t), &im = cell(s, "synthetic", "IM", t);
                 if (im.count != syn_cfg.repetitions || cl.count != syn_cfg.repetitions) v.pass = false;
                 if (!(im.test_mean <= cl.test_mean)) {
                     v.pass = false;
                     v.detail += fmt("T=%.0f: IM test %.4f > CL %.4f; ", t, im.test_mean, cl.test_mean);
                 }
                 if (t <= 100 && !(im.risk_mean < cl.risk_mean)) {
                     v.pass = false;
                     v.detail += fmt("T=%.0f: IM gap %.4f >= CL %.4f; ", t, im.risk_mean, cl.risk_mean);
                 }
             }
             if (v.pass) v.detail = "IM test <= CL at every T; IM gap < CL for T <= 100";
             return v;
         }},
        {7, "misspecification study orderings", 600.0, false,
         [&] {
             mis = ex::run_synthetic(mis_cfg);
             save("synthetic-misspecified", mis, {}, ex::format_config(mis_cfg));
             const auto s = ex::summarize(mis);
             const std::string e = "synthetic-misspecified";
             print_table(s, e, {"CL", "IM"}, mis_cfg.sizes);
             Verdict v{true, ""};
             for (std::size_t t : mis_cfg.sizes) {
                 const auto &cl = cell(s, e, "CL", t), &im = cell(s, e, "IM", t);
                 if (!(im.risk_mean < cl.risk_mean)) {
                     v.pass = false;
                     v.detail += fmt("T=%.0f: IM gap %.4f >= CL %.4f; ", t, im.risk_mean, cl.risk_mean);
                 }
             }
             const auto &cl = cell(s, e, "CL", 500), &im = cell(s, e, "IM", 500);
             if (!(cl.test_mean <= im.test_mean + 0.01)) {
                 v.pass = false;
                 v.detail += fmt("T=500: CL test %.4f > IM %.4f + 0.01; ", cl.test_mean, im.test_mean);
             }
             if (v.pass)
                 v.detail = fmt("IM gap < CL at every T; T=500 CL test %.4f vs IM %.4f", cl.test_mean, im.test_mean);
             return v;
         }},
        {8, "grid Gibbs sampler vs enumeration", 1e9, true,
         [&] { return from_check(wim::verify::check_gibbs(seed_of(8), 100000, 0.02)); }},
        {9, "segmentation study orderings", 1800.0, false,
         [&] {
             seg = ex::run_segmentation(seg_cfg);
             save("segmentation", seg.records, seg.strips, ex::format_config(seg_cfg));
             const auto s = ex::summarize(seg.records);
             print_table(s, "segmentation", {"RF", "CL-CRF", "IM"}, seg_cfg.sizes);
             Verdict v{seg.divergences.empty(), seg.divergences.empty() ? "" : "training diverged; "};
             for (std::size_t t : seg_cfg.sizes) {
                 const auto &rf = cell(s, "segmentation", "RF", t), &cl = cell(s, "segmentation", "CL-CRF", t),
                            &im = cell(s, "segmentation", "IM", t);
                 if (!(im.test_mean <= cl.test_mean)) {
                     v.pass = false;
                     v.detail += fmt("T=%.0f: IM test %.4f > CL-CRF %.4f; ", t, im.test_mean, cl.test_mean);
                 }
                 if (!(cl.test_mean <= rf.test_mean)) {
                     v.pass = false;
                     v.detail += fmt("T=%.0f: CL-CRF test %.4f > RF %.4f; ", t, cl.test_mean, rf.test_mean);
                 }
                 if (!(im.risk_mean < cl.risk_mean)) {
                     v.pass = false;
                     v.detail += fmt("T=%.0f: IM gap %.4f >= CL-CRF %.4f; ", t, im.risk_mean, cl.risk_mean);
                 }
             }
             if (v.pass) v.detail = "IM <= CL-CRF <= RF test error and IM gap < CL-CRF gap at every T";
             return v;
         }},
        {10, "determinism of rerun experiments", 1e9, true,
         [&] {
             // Each (T, repetition) cell owns its stream, so a rerun with fewer
             // repetitions (and more workers) must reproduce the leading rows.
             Verdict v{true, ""};
             auto compare = [&](const char* name, const std::string& first, const std::string& again) {
                 const bool same = first == again;
                 v.pass = v.pass && same;
                 v.detail += std::string(name) + (same ? " identical; " : " DIFFERS; ");
             };
             auto rerun_syn = [&](ex::SyntheticConfig c, const std::vector<ex::ExperimentRecord>& full) {
                 c.repetitions = 3;
                 c.workers = 2;
                 const auto base = full.empty() ? ex::run_synthetic(c) : first_reps(full, 3);
                 return std::pair{ex::records_to_csv(base), ex::records_to_csv(ex::run_synthetic(c))};
             };
             auto [a, b] = rerun_syn(syn_cfg, syn);
             compare("synthetic", a, b);
             auto [c, d] = rerun_syn(mis_cfg, mis);
             compare("misspecified", c, d);
             ex::SegmentationConfig sc = seg_cfg;
             sc.repetitions = 1;
             sc.workers = 2;
             const auto first = seg.records.empty() ? ex::run_segmentation(sc).records : first_reps(seg.records, 1);
             compare("segmentation", ex::records_to_csv(first), ex::records_to_csv(ex::run_segmentation(sc).records));
             const auto k1 = wim::verify::check_exact_recovery(seed_of(5));
             const auto k2 = wim::verify::check_exact_recovery(seed_of(5));
             compare("recovery", fmt("%a", k1.value), fmt("%a", k2.value));
             return v;
         }},
    };

    const std::set<int> selected(only.begin(), only.end());
    bool gate_ok = true, all_ok = true;
    std::vector<std::string> summary;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        std::printf("criterion %d: %s\n", c.id, c.title);
        std::fflush(stdout);
        const auto start = Clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
            gate_ok = false;
        }
        const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
        if (seconds > c.time_limit) {
            v.pass = false;
            v.detail += fmt(" runtime %.1fs exceeds %.0fs", seconds, c.time_limit);
        }
        char line[1024];
        std::snprintf(line, sizeof line, "%s criterion %d (%s): %s [%.1fs]", v.pass ? "PASS" : "FAIL", c.id, c.title,
                      v.detail.c_str(), seconds);
        std::puts(line);
        std::fflush(stdout);
        summary.emplace_back(line);
        all_ok = all_ok && v.pass;
        if (c.gating) gate_ok = gate_ok && v.pass;
    }
    std::puts("summary:");
    for (const auto& s : summary) std::printf("  %s\n", s.c_str());
    return (strict ? all_ok : gate_ok) ? 0 : 1;
}
