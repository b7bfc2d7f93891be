#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "wim/oracle.hpp"
#include "wim/png_io.hpp"
#include "wim/seg/training.hpp"

using namespace wim;
using namespace wim::seg;

namespace {

Image random_image(std::size_t w, std::size_t h, RngStream& rng) {
    Image img(w, h);
    for (auto& p : img.pixels)
        for (double& c : p) c = rng.uniform();
    return img;
}

Labeling random_labels(std::size_t w, std::size_t h, std::size_t labels, RngStream& rng) {
    Labeling y(w, h);
    for (auto& l : y.labels) l = static_cast<Label>(rng.below(labels));
    return y;
}

SegCrfParams random_crf(std::size_t labels, double scale, RngStream& rng) {
    SegCrfParams p(labels);
    Vector v(static_cast<Eigen::Index>(p.dim()));
    for (auto& x : v) x = scale * rng.normal();
    p.set_vector(v);
    return p;
}

GenColorParams random_color(std::size_t labels, std::size_t palette, RngStream& rng) {
    GenColorParams p(labels, palette);
    for (std::size_t y = 0; y < labels; ++y)
        for (std::size_t g = 0; g < palette; ++g) p.h(y, g) = rng.normal();
    p.c() = -1.0 - 3.0 * rng.uniform();
    for (std::size_t g = 0; g < palette; ++g)
        for (std::size_t ch = 0; ch < 3; ++ch) p.d(g, ch) = 2.0 * rng.normal();
    p.e() = -rng.uniform();
    return p;
}

}  // namespace

TEST_CASE("grid graph: 8-neighbourhood and edge types") {
    const GridGraph g(5, 4);
    std::array<std::size_t, kEdgeTypes> per_type{};
    for (const auto& e : g.edges()) ++per_type[static_cast<std::size_t>(e.type)];
    CHECK(per_type[0] == 4 * 4);
    CHECK(per_type[1] == 3 * 5);
    CHECK(per_type[2] == 3 * 4);
    CHECK(per_type[3] == 3 * 4);
    for (std::size_t r = 1; r + 1 < 4; ++r)
        for (std::size_t c = 1; c + 1 < 5; ++c) CHECK(g.neighbors(r * 5 + c).size() == 8);
    CHECK(g.neighbors(0).size() == 3);
    CHECK(GridGraph(1, 1).edges().empty());
    CHECK_THROWS_AS(g.require_shape(Labeling(4, 5)), Error);
}

TEST_CASE("CRF parameter count") {
    for (std::size_t l : {2u, 3u, 5u}) CHECK(SegCrfParams(l).dim() == 9 * l * l);
    CHECK_THROWS_AS(SegCrfParams(3, Vector::Zero(80)), Error);
}

TEST_CASE("CRF energy equals the inner product with its statistics") {
    RngStream rng(61);
    for (int k = 0; k < 100; ++k) {
        const std::size_t w = 1 + rng.below(4), h = 1 + rng.below(4), labels = 2 + rng.below(3);
        const GridGraph graph(w, h);
        const auto params = random_crf(labels, 1.0, rng);
        const Image img = random_image(w, h, rng);
        const CrfInput in(graph, img, random_labels(w, h, labels, rng));
        const Labeling y = random_labels(w, h, labels, rng);
        const CrfKernel kernel(params, graph);
        REQUIRE(std::abs(crf_statistics(params, graph, in, y).dot(params.vector()) - kernel.energy(in, y)) <= 1e-9);
    }
}

TEST_CASE("CRF energy agrees with the enumeration oracle") {
    RngStream rng(62);
    for (int k = 0; k < 20; ++k) {
        const std::size_t w = 1 + rng.below(2), h = 1 + rng.below(2), labels = 2 + rng.below(2);
        const GridGraph graph(w, h);
        const auto params = random_crf(labels, 1.0, rng);
        const Image img = random_image(w, h, rng);
        const Labeling unary = random_labels(w, h, labels, rng);
        const auto exact = oracle::enumerate_grid(params, img, unary);
        const CrfKernel kernel(params, graph);
        const CrfInput in(graph, img, unary);
        for (std::size_t s = 0; s < exact.log_weights.size(); ++s)
            REQUIRE(std::abs(kernel.energy(in, oracle::grid_state(w, h, labels, s)) - exact.log_weights[s]) <= 1e-9);
    }
}

TEST_CASE("CRF statistics: single pixel and constant scenes") {
    RngStream rng(63);
    const GridGraph one(1, 1);
    const auto params = random_crf(3, 1.0, rng);
    const Image px = random_image(1, 1, rng);
    const Labeling z(1, 1, 2), y(1, 1, 1);
    const Vector s = crf_statistics(params, one, CrfInput(one, px, z), y);
    CHECK(s.cwiseAbs().sum() == 1.0);
    CHECK(s[static_cast<Eigen::Index>(params.q_index(1, 2))] == 1.0);

    const GridGraph g(4, 4);
    const Image flat(4, 4, {0.2, 0.5, 0.9});
    const Vector c = crf_statistics(params, g, CrfInput(g, flat, Labeling(4, 4, 0)), Labeling(4, 4, 1));
    for (std::size_t t = 0; t < kEdgeTypes; ++t)
        for (std::size_t l = 0; l < 3; ++l)
            for (std::size_t m = 0; m < 3; ++m)
                CHECK(c[static_cast<Eigen::Index>(params.b_index(static_cast<EdgeType>(t), l, m))] == 0.0);
}

TEST_CASE("Gibbs sweep without pairwise terms samples independent softmaxes") {
    RngStream rng(64);
    const std::size_t labels = 3;
    SegCrfParams params(labels);
    for (std::size_t y = 0; y < labels; ++y)
        for (std::size_t z = 0; z < labels; ++z) params.q(y, z) = rng.normal();
    const GridGraph graph(3, 2);
    const Image img = random_image(3, 2, rng);
    const Labeling unary = random_labels(3, 2, labels, rng);
    const CrfInput in(graph, img, unary);
    const CrfKernel kernel(params, graph);
    Labeling y(3, 2);
    std::vector<double> freq(6 * labels, 0.0);
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
        crf_gibbs_sweep(kernel, in, y, rng);
        for (std::size_t i = 0; i < 6; ++i) freq[i * labels + y[i]] += 1.0 / n;
    }
    for (std::size_t i = 0; i < 6; ++i) {
        std::vector<double> q(labels);
        for (std::size_t l = 0; l < labels; ++l) q[l] = params.q(l, unary[i]);
        const ProbVector exact = normalize(q);
        CHECK(total_variation(std::span<const double>(freq).subspan(i * labels, labels), exact.values()) <= 0.01);
    }

    const auto est = max_marginal_decode(kernel, in, unary, rng, 5, 200);
    for (std::size_t i = 0; i < 6; ++i) {
        std::size_t best = 0;
        for (std::size_t l = 1; l < labels; ++l)
            if (params.q(l, unary[i]) > params.q(best, unary[i])) best = l;
        CHECK(est.decoded[i] == best);
    }
}

TEST_CASE("strongly attractive pairs give constant labelings") {
    RngStream rng(65);
    SegCrfParams params(2);
    for (std::size_t t = 0; t < kEdgeTypes; ++t)
        for (std::size_t l = 0; l < 2; ++l) params.a(static_cast<EdgeType>(t), l, l) = 10.0;
    const GridGraph graph(4, 4);
    const Image img(4, 4, {0.5, 0.5, 0.5});
    const CrfInput in(graph, img, Labeling(4, 4, 0));
    const CrfKernel kernel(params, graph);
    Labeling y = random_labels(4, 4, 2, rng);
    crf_gibbs_sweep(kernel, in, y, rng, 50);
    int constant = 0;
    const int n = 2000;
    for (int k = 0; k < n; ++k) {
        crf_gibbs_sweep(kernel, in, y, rng);
        constant += std::all_of(y.labels.begin(), y.labels.end(), [&](Label l) { return l == y[0]; });
    }
    CHECK(constant > 0.9 * n);
}

TEST_CASE("max-marginal decoding on 2x2 matches the exact marginals") {
    RngStream rng(66);
    const GridGraph graph(2, 2);
    const auto params = random_crf(2, 1.0, rng);
    const Image img = random_image(2, 2, rng);
    const Labeling unary = random_labels(2, 2, 2, rng);
    const auto exact = oracle::enumerate_grid(params, img, unary);
    const Labeling target = argmax_marginals(2, 2, 2, exact.marginals);
    const CrfKernel kernel(params, graph);
    const CrfInput in(graph, img, unary);
    int hits = 0;
    for (int run = 0; run < 100; ++run) {
        RngStream r = rng.split(run);
        hits += max_marginal_decode(kernel, in, unary, r, 20, 10000).decoded == target;
    }
    CHECK(hits >= 99);

    const std::vector<double> tie{0.5, 0.5, 0.2, 0.8};
    const Labeling d = argmax_marginals(2, 1, 2, tie);
    CHECK(d[0] == 0);
    CHECK(d[1] == 1);
}

TEST_CASE("colour model: propriety and statistics") {
    GenColorParams p(2, 3);
    p.c() = 0.0;
    CHECK_THROWS_AS(p.require_proper(), ImproperDistribution);
    p.c() = -1.0;
    p.e() = 0.5;
    CHECK_THROWS_AS(p.require_proper(), ImproperDistribution);
    CHECK(p.project());
    CHECK(p.e() == 0.0);
    CHECK_NOTHROW(p.require_proper());

    RngStream rng(67);
    for (int k = 0; k < 100; ++k) {
        const std::size_t w = 1 + rng.below(4), h = 1 + rng.below(4), labels = 2 + rng.below(2), pal = 1 + rng.below(4);
        const GridGraph graph(w, h);
        const auto params = random_color(labels, pal, rng);
        const Image img = random_image(w, h, rng);
        const Labeling y = random_labels(w, h, labels, rng);
        ColorIndexMap g(w * h);
        for (auto& v : g) v = static_cast<std::uint8_t>(rng.below(pal));
        REQUIRE(std::abs(color_statistics(params, graph, img, y, g).dot(params.vector()) -
                         color_energy(params, graph, img, y, g)) <= 1e-9);
    }

    const GridGraph one(1, 1);
    const auto params = random_color(2, 3, rng);
    const Image px(1, 1, {0.2, 0.4, 0.6});
    const Vector s = color_statistics(params, one, px, Labeling(1, 1, 1), ColorIndexMap{2});
    CHECK(s[static_cast<Eigen::Index>(params.h_index(1, 2))] == 1.0);
    CHECK(s[static_cast<Eigen::Index>(params.c_index())] == doctest::Approx(0.56));
    CHECK(s[static_cast<Eigen::Index>(params.d_index(2, 1))] == doctest::Approx(0.4));
    CHECK(s[static_cast<Eigen::Index>(params.e_index())] == 0.0);
    int nonzero = 0;
    for (auto v : s) nonzero += v != 0.0;
    CHECK(nonzero == 5);

    const GridGraph g4(3, 3);
    const Vector flat = color_statistics(params, g4, Image(3, 3, {0.3, 0.3, 0.3}), Labeling(3, 3, 0),
                                         ColorIndexMap(9, 0));
    CHECK(flat[static_cast<Eigen::Index>(params.e_index())] == 0.0);
}

TEST_CASE("colour sweep: single pixel is the completed square") {
    GenColorParams p(1, 1);
    p.c() = -50.0;  // variance 0.01
    p.d(0, 0) = 50.0;
    p.d(0, 1) = 40.0;
    p.d(0, 2) = 60.0;
    const GridGraph one(1, 1);
    const Labeling y(1, 1, 0);
    Image x(1, 1, {0.5, 0.5, 0.5});
    ColorIndexMap g{0};
    RngStream rng(68);
    std::array<double, 3> s{}, s2{};
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
        color_gibbs_sweep(p, one, y, x, g, rng);
        REQUIRE(g[0] == 0);
        for (std::size_t ch = 0; ch < 3; ++ch) {
            s[ch] += x[0][ch];
            s2[ch] += x[0][ch] * x[0][ch];
        }
    }
    const std::array<double, 3> mean{0.5, 0.4, 0.6};
    for (std::size_t ch = 0; ch < 3; ++ch) {
        CHECK(std::abs(s[ch] / n - mean[ch]) <= 0.002);
        CHECK(std::abs(s2[ch] / n - (s[ch] / n) * (s[ch] / n) - 0.01) <= 0.0005);
    }
}

TEST_CASE("colour sweep on two coupled pixels matches numeric integration") {
    GenColorParams p(1, 1);
    p.c() = -20.0;
    p.d(0, 0) = 20.0;  // mean 0.5 per channel before coupling
    p.d(0, 1) = 20.0;
    p.d(0, 2) = 20.0;
    p.e() = -15.0;
    const GridGraph graph(2, 1);
    const Labeling y(2, 1, 0);
    Image x(2, 1, {0.5, 0.5, 0.5});
    ColorIndexMap g(2, 0);
    RngStream rng(69);
    constexpr std::size_t bins = 32;
    std::vector<double> hist(bins, 0.0);
    color_gibbs_sweep(p, graph, y, x, g, rng, 100);
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
        color_gibbs_sweep(p, graph, y, x, g, rng);
        hist[std::min<std::size_t>(bins - 1, static_cast<std::size_t>(x[0][0] * bins))] += 1.0 / n;
    }
    // Joint density of channel 0 of both pixels on [0, 1]^2, integrated per bin
    // of the first pixel with a midpoint rule.
    constexpr std::size_t sub = 16, fine = bins * sub;
    std::vector<double> exact(bins, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < fine; ++i)
        for (std::size_t j = 0; j < fine; ++j) {
            const double a = (i + 0.5) / fine, b = (j + 0.5) / fine;
            const double w = std::exp(p.c() * (a * a + b * b) + p.d(0, 0) * (a + b) + p.e() * (a - b) * (a - b));
            exact[i / sub] += w;
            total += w;
        }
    for (double& v : exact) v /= total;
    CHECK(total_variation(hist, exact) <= 0.03);
}

TEST_CASE("forest: separable colours, determinism, better than majority") {
    RngStream rng(70);
    std::vector<Image> imgs;
    std::vector<Labeling> labs;
    const std::array<Color, 3> colours{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    for (int k = 0; k < 3; ++k) {
        Labeling y = random_labels(8, 8, 3, rng);
        Image img(8, 8);
        for (std::size_t i = 0; i < img.size(); ++i) img[i] = colours[y[i]];
        imgs.push_back(img);
        labs.push_back(y);
    }
    std::vector<const Image*> ip;
    std::vector<const Labeling*> lp;
    for (int k = 0; k < 3; ++k) {
        ip.push_back(&imgs[k]);
        lp.push_back(&labs[k]);
    }
    const auto forest = UnaryPredictor::train(ip, lp, 3, ForestConfig{}, rng);
    for (int k = 0; k < 3; ++k) CHECK(hamming_error(labs[k], forest.predict(imgs[k])) == 0.0);
    CHECK(forest.predict(imgs[0]) == forest.predict(imgs[0]));
    CHECK_THROWS_AS(UnaryPredictor::train(ip, {lp[0]}, 3, ForestConfig{}, rng), Error);
    CHECK_THROWS_AS(UnaryPredictor::train({}, {}, 3, ForestConfig{}, rng), Error);

    const CorpusConfig cc;
    const auto train = generate_corpus(cc, 10, rng);
    const auto test = generate_corpus(cc, 10, rng);
    std::vector<const Image*> ti;
    std::vector<const Labeling*> tl;
    for (const auto& li : train) {
        ti.push_back(&li.image);
        tl.push_back(&li.truth);
    }
    const auto f = UnaryPredictor::train(ti, tl, 3, ForestConfig{}, rng);
    double err = 0.0, majority_err = 0.0;
    for (const auto& li : test) {
        err += hamming_error(li.truth, f.predict(li.image));
        std::array<double, 3> counts{};
        for (auto l : li.truth.labels) counts[l] += 1.0;
        majority_err += 1.0 - *std::max_element(counts.begin(), counts.end()) / li.truth.size();
    }
    CHECK(err < majority_err);
}

TEST_CASE("corpus generation and PNG round trips") {
    const CorpusConfig cc;
    RngStream a(71), b(71);
    const auto c1 = generate_corpus(cc, 4, a);
    const auto c2 = generate_corpus(cc, 4, b);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(c1[k].truth == c2[k].truth);
        CHECK(c1[k].image.width == 32);
        for (auto l : c1[k].truth.labels) REQUIRE(l < 3);
        for (const auto& p : c1[k].image.pixels)
            for (double v : p) REQUIRE((v >= 0.0 && v <= 1.0));
    }

    const auto dir = std::filesystem::temp_directory_path() / "wim_unit_corpus";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    for (std::size_t k = 0; k < 4; ++k) {
        write_png_image((dir / ("s" + std::to_string(k) + ".png")).string(), c1[k].image);
        write_png_labels((dir / ("s" + std::to_string(k) + "_label.png")).string(), c1[k].truth);
    }
    const auto loaded = load_corpus(dir.string());
    REQUIRE(loaded.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(loaded[k].truth == c1[k].truth);
        for (std::size_t i = 0; i < loaded[k].image.size(); ++i)
            for (std::size_t ch = 0; ch < 3; ++ch)
                REQUIRE(std::abs(loaded[k].image[i][ch] - c1[k].image[i][ch]) <= 0.5 / 255.0 + 1e-12);
    }
    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS(load_corpus((dir / "missing").string()), Error);
    CHECK_THROWS_AS(read_png_image((dir / "missing.png").string()), Error);
}

TEST_CASE("segmentation training: initialization, warm-start bookkeeping, determinism") {
    RngStream rng(72);
    CorpusConfig cc;
    cc.width = cc.height = 12;
    const auto data = generate_corpus(cc, 4, rng);
    std::vector<const LabeledImage*> ptrs;
    std::vector<const Image*> ip;
    std::vector<const Labeling*> lp;
    for (const auto& li : data) {
        ptrs.push_back(&li);
        ip.push_back(&li.image);
        lp.push_back(&li.truth);
    }
    const auto forest = UnaryPredictor::train(ip, lp, 3, ForestConfig{}, rng);
    const GridGraph graph(12, 12);
    const auto examples = prepare_examples(ptrs, forest, graph);

    const SegCrfParams q = init_crf_from_confusion(examples, 3);
    for (std::size_t z = 0; z < 3; ++z) {
        double total = 0.0;
        for (std::size_t y = 0; y < 3; ++y) total += std::exp(q.q(y, z));
        CHECK(total == doctest::Approx(1.0));
    }

    WarmStartBuffer buffer(examples, 3, rng);
    CHECK(buffer.size() == 4);
    CHECK(buffer[0].x_tilde.pixels == data[0].image.pixels);
    CHECK(buffer[0].y_tilde.size() == 144);

    TrainConfig c;
    c.step_size = 0.1;
    c.epochs = 3;
    c.batch_size = 2;
    c.gibbs_sweeps_per_update = 2;
    c.seed = 17;
    RngStream color_rng(5);
    SegModelPair m1{q, init_color_model(examples, 3, 4, color_rng)};
    SegModelPair m2 = m1;
    WarmStartBuffer out(examples, 3, rng);
    const auto r1 = train_crf_implicit(examples, graph, forest, m1, c, &out);
    train_crf_implicit(examples, graph, forest, m2, c);
    CHECK(r1.updates == 6);
    CHECK(m1.crf.vector() == m2.crf.vector());
    CHECK(m1.color.vector() == m2.color.vector());
    CHECK_NOTHROW(m1.color.require_proper());
    for (std::size_t t = 0; t < out.size(); ++t) {
        CHECK(out[t].updates == 3);
        CHECK(out[t].y_tilde_sweeps == 6);
        CHECK(out[t].x_tilde_sweeps == 6);
        CHECK(out[t].y_hat_sweeps == 6);
    }

    SegCrfParams cl = q;
    const auto rc = train_crf_conditional_likelihood(examples, graph, cl, c);
    CHECK(rc.trace.size() == 3);
    DecodeConfig dc;
    RngStream d1(3), d2(3);
    CHECK(segmentation_error(examples, graph, cl, dc, d1) == segmentation_error(examples, graph, cl, dc, d2));
    CHECK(unary_error(examples) >= 0.0);
}
