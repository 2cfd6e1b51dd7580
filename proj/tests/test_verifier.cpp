#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "dilab/verifier.hpp"

using namespace dilab;
using Catch::Approx;

namespace {

// One-sided permutation oracle for P[mean(a) - mean(b) >= observed].
double permutation_p(const std::vector<double>& a, const std::vector<double>& b,
                     std::size_t n_perm, std::uint64_t seed) {
    const double observed = mean(a) - mean(b);
    std::vector<double> pool = a;
    pool.insert(pool.end(), b.begin(), b.end());
    Rng rng(seed);
    std::size_t hits = 0;
    std::vector<double> work = pool;
    for (std::size_t p = 0; p < n_perm; ++p) {
        shuffle(work, rng);
        double ma = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) ma += work[i];
        double mb = 0.0;
        for (std::size_t i = a.size(); i < work.size(); ++i) mb += work[i];
        const double diff =
            ma / static_cast<double>(a.size()) - mb / static_cast<double>(b.size());
        if (diff >= observed) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n_perm);
}

std::vector<double> gaussian_sample(double mu, double sd, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> xs(n);
    for (double& x : xs) x = rng.normal(mu, sd);
    return xs;
}

Embedding make_embedding(std::vector<double> d, int b) {
    Embedding e;
    e.distances = std::move(d);
    e.membership = b;
    return e;
}

}  // namespace

TEST_CASE("hypothesis_test basics", "[verifier]") {
    SECTION("identical score vectors are a coin flip") {
        const auto s = gaussian_sample(0.3, 0.2, 25, 5);
        const auto rep = hypothesis_test(s, s, 0.01);
        CHECK(rep.t_statistic == Approx(0.0).margin(1e-12));
        CHECK(rep.p_value == Approx(0.5).margin(1e-9));
        CHECK(rep.verdict == Verdict::Inconclusive);
        CHECK(rep.delta_mu == Approx(0.0).margin(1e-12));
    }

    SECTION("well-separated samples reject decisively") {
        const auto low = gaussian_sample(0.0, 0.1, 30, 7);
        const auto high = gaussian_sample(1.0, 0.1, 30, 8);
        const auto rep = hypothesis_test(low, high, 0.01);  // scores_v low, scores_0 high
        CHECK(rep.p_value < 1e-10);
        CHECK(rep.verdict == Verdict::Stolen);
        CHECK(rep.delta_mu > 0.9);
    }

    SECTION("degenerate zero-variance input is flagged") {
        const std::vector<double> flat_a{0.5, 0.5, 0.5};
        const std::vector<double> flat_b{0.5, 0.5, 0.5};
        const auto rep = hypothesis_test(flat_a, flat_b, 0.05);
        CHECK(rep.degenerate);
        CHECK(rep.p_value == 0.5);
        CHECK(rep.verdict == Verdict::Inconclusive);
    }

    SECTION("needs two scores per side and a sane alpha") {
        const std::vector<double> one{0.1};
        const std::vector<double> two{0.1, 0.2};
        CHECK_THROWS_AS(hypothesis_test(one, two, 0.05), ProtocolError);
        CHECK_THROWS_AS(hypothesis_test(two, two, 0.0), ConfigError);
    }

    SECTION("verdict is invariant under a common positive affine transform") {
        const auto v = gaussian_sample(0.2, 0.3, 20, 9);
        const auto z = gaussian_sample(0.5, 0.25, 20, 10);
        const auto base = hypothesis_test(v, z, 0.05);
        auto v2 = v, z2 = z;
        for (double& x : v2) x = 3.7 * x - 1.2;
        for (double& x : z2) x = 3.7 * x - 1.2;
        const auto scaled = hypothesis_test(v2, z2, 0.05);
        CHECK(scaled.t_statistic == Approx(base.t_statistic).epsilon(1e-10));
        CHECK(scaled.p_value == Approx(base.p_value).epsilon(1e-9));
        CHECK(scaled.verdict == base.verdict);
    }
}

TEST_CASE("t-test p-values match a permutation oracle", "[verifier]") {
    struct Case { double mu_a, mu_b, sd; std::size_t na, nb; std::uint64_t seed; };
    const Case cases[] = {
        {0.30, 0.00, 0.30, 12, 12, 21},
        {0.15, 0.00, 0.25, 10, 14, 22},
        {0.00, 0.00, 0.20, 15, 15, 23},
    };
    for (const auto& c : cases) {
        const auto a = gaussian_sample(c.mu_a, c.sd, c.na, c.seed);
        const auto b = gaussian_sample(c.mu_b, c.sd, c.nb, c.seed + 1000);
        const auto rep = hypothesis_test(b, a, 0.05);  // scores_v = b, scores_0 = a
        const double p_perm = permutation_p(a, b, 100000, c.seed + 5000);
        CHECK(rep.p_value == Approx(p_perm).margin(0.02));
    }
}

TEST_CASE("train_gv", "[verifier]") {
    // Synthetic embeddings: private ones have small distances, public large.
    std::vector<Embedding> separable;
    Rng rng(31);
    for (int i = 0; i < 40; ++i) {
        std::vector<double> low(6), high(6);
        for (std::size_t j = 0; j < 6; ++j) {
            low[j] = 0.05 + 0.02 * rng.uniform();
            high[j] = 0.9 + 0.05 * rng.uniform();
        }
        separable.push_back(make_embedding(low, 1));
        separable.push_back(make_embedding(high, 0));
    }

    SECTION("separable classes produce a positive score gap") {
        const auto g = train_gv(separable, GvArch::TwoLayerTanh, 3);
        double mu_v = 0.0, mu_0 = 0.0;
        for (const auto& e : separable)
            (e.membership == 1 ? mu_v : mu_0) += g.score(e);
        mu_v /= 40.0;
        mu_0 /= 40.0;
        CHECK(mu_0 - mu_v > 0.5);  // b=0 is pushed toward 1, b=1 toward 0
    }

    SECTION("zero training epochs leave the test inconclusive on same-origin data") {
        // Both classes drawn from one distribution: nothing to learn even in
        // principle; an untrained g must stay near delta_mu = 0.
        std::vector<Embedding> same;
        for (int i = 0; i < 30; ++i) {
            std::vector<double> d(6);
            for (auto& v : d) v = 0.4 + 0.2 * rng.uniform();
            same.push_back(make_embedding(d, i % 2));
        }
        GvTrainOptions opt;
        opt.epochs = 0;
        const auto g = train_gv(same, GvArch::TwoLayerTanh, 4, opt);
        std::vector<double> sv, s0;
        for (const auto& e : same) (e.membership == 1 ? sv : s0).push_back(g.score(e));
        const auto rep = hypothesis_test(sv, s0, 0.01);
        CHECK(std::abs(rep.delta_mu) < 0.2);
        CHECK(rep.verdict == Verdict::Inconclusive);
    }

    SECTION("single-class input is rejected") {
        std::vector<Embedding> one_class;
        for (int i = 0; i < 8; ++i) one_class.push_back(make_embedding({0.1, 0.2}, 1));
        CHECK_THROWS_AS(train_gv(one_class, GvArch::TwoLayerTanh, 1), ProtocolError);
    }

    SECTION("four-layer dropout variant trains and differs from two-layer") {
        const auto g2 = train_gv(separable, GvArch::TwoLayerTanh, 3);
        const auto g4 = train_gv(separable, GvArch::FourLayerDropout, 3);
        CHECK(g2.regressor.depth() == 2);
        CHECK(g4.regressor.depth() == 4);
        CHECK(g4.score(separable[0]) != g2.score(separable[0]));
    }

    SECTION("score equals the forward pass of the regressor") {
        const auto g = train_gv(separable, GvArch::TwoLayerTanh, 3);
        const auto& e = separable[5];
        CHECK(g.score(e) == forward(g.regressor, e.distances)[0]);
    }

    SECTION("zero-weight regressor scores 0") {
        Distinguisher g;
        Layer l;
        l.weights = Matrix(1, 6);
        l.bias = {0.0};
        l.activation = Activation::Identity;
        g.regressor.layers = {l};
        CHECK(g.score(separable[0]) == 0.0);
    }
}

namespace {

// A small victim/verify fixture on the linear closed-form model: cheap, and
// the memorized-noise margin gap is large enough for the pipeline to see.
struct LinearFixture {
    DistributionSpec spec;
    Dataset sv, s0;
    LinearModel victim;
    Distinguisher gv;
    WalkConfig walk;

    explicit LinearFixture(std::uint64_t seed) {
        spec.signal = {0.05};
        spec.noise_dim = 96;
        spec.noise_std = 0.5;
        spec.dataset_size = 96;
        sv = sample_dataset(spec, 96, derive_seed(seed, 1), Provenance::SV);
        s0 = sample_dataset(spec, 96, derive_seed(seed, 2), Provenance::S0);
        victim = train_linear(sv);
        walk.n_directions = 24;
        walk.max_steps = 40;
        walk.step_size = 0.05;
        walk.seed = derive_seed(seed, 3);
        gv = build_gv(make_predictor(victim), sv, s0, 64, walk, GvArch::TwoLayerTanh,
                      derive_seed(seed, 4));
    }
};

}  // namespace

TEST_CASE("verify_ownership end to end", "[verifier]") {
    SECTION("the victim's own model is flagged as stolen") {
        int stolen = 0;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            LinearFixture fx(100 + seed);
            const auto rep = verify_ownership(make_predictor(fx.victim), fx.sv, fx.s0, fx.gv,
                                              32, fx.walk, 0.01, derive_seed(seed, 9));
            if (rep.verdict == Verdict::Stolen) ++stolen;
        }
        CHECK(stolen >= 4);
    }

    SECTION("a fresh independent model of the same distribution is not flaged by margins alone") {
        // With i.i.d. pools the verification stage is exchangeable, so the
        // p-value should be well away from 0 most of the time.
        LinearFixture fx(7);
        int inconclusive = 0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto si = sample_dataset(fx.spec, 96, derive_seed(777 + seed, 5),
                                           Provenance::SI);
            const auto fi = train_linear(si);
            const auto rep = verify_ownership(make_predictor(fi), fx.sv, fx.s0, fx.gv, 32,
                                              fx.walk, 0.01, derive_seed(seed, 11));
            if (rep.verdict == Verdict::Inconclusive) ++inconclusive;
        }
        CHECK(inconclusive >= 8);
    }

    SECTION("k_reveal bounds") {
        LinearFixture fx(8);
        CHECK_THROWS_AS(verify_ownership(make_predictor(fx.victim), fx.sv, fx.s0, fx.gv, 1,
                                         fx.walk, 0.01, 1),
                        ConfigError);
        CHECK_THROWS_AS(verify_ownership(make_predictor(fx.victim), fx.sv, fx.s0, fx.gv, 97,
                                         fx.walk, 0.01, 1),
                        ConfigError);
    }
}

TEST_CASE("p-values are calibrated under the null", "[verifier]") {
    // Verification where the "private" samples are drawn from the public
    // distribution too: p-values must look uniform. The distinguisher is
    // fixed; the data and the revealed subsets are fresh per repetition.
    LinearFixture fx(42);
    const std::size_t reps = 200;
    std::size_t below_05 = 0;
    for (std::uint64_t r = 0; r < reps; ++r) {
        const auto a = sample_dataset(fx.spec, 40, derive_seed(r, 21), Provenance::S0);
        const auto b = sample_dataset(fx.spec, 40, derive_seed(r, 22), Provenance::S0);
        const auto si = sample_dataset(fx.spec, 96, derive_seed(r, 23), Provenance::SI);
        const auto suspect = train_linear(si);
        const auto rep = verify_ownership(make_predictor(suspect), a, b, fx.gv, 16, fx.walk,
                                          0.05, derive_seed(r, 24));
        if (rep.p_value < 0.05) ++below_05;
    }
    const double fraction = static_cast<double>(below_05) / static_cast<double>(reps);
    CHECK(fraction == Approx(0.05).margin(0.04));
}

TEST_CASE("augmented distinguisher training", "[verifier]") {
    LinearFixture fx(12);
    Dataset empty_portion;
    empty_portion.spec = fx.spec;

    SECTION("zero-size augmentation reduces to build_gv") {
        const auto plain = build_gv(make_predictor(fx.victim), fx.sv, fx.s0, 48, fx.walk,
                                    GvArch::TwoLayerTanh, 99);
        const auto augmented = augment_gv_training(make_predictor(fx.victim), fx.sv, fx.s0,
                                                   empty_portion, 48, fx.walk,
                                                   GvArch::TwoLayerTanh, 99);
        CHECK(mlp_to_text(plain.regressor) == mlp_to_text(augmented.regressor));
    }

    SECTION("a non-empty portion changes the regressor") {
        const auto si = sample_dataset(fx.spec, 48, 1234, Provenance::SI);
        const auto plain = build_gv(make_predictor(fx.victim), fx.sv, fx.s0, 48, fx.walk,
                                    GvArch::TwoLayerTanh, 99);
        const auto augmented = augment_gv_training(make_predictor(fx.victim), fx.sv, fx.s0, si,
                                                   48, fx.walk, GvArch::TwoLayerTanh, 99);
        CHECK(mlp_to_text(plain.regressor) != mlp_to_text(augmented.regressor));
    }
}

TEST_CASE("report formats", "[verifier]") {
    VerificationReport r;
    r.suspect_tag = "f_V";
    r.delta_mu = 0.5;
    r.t_statistic = 3.25;
    r.p_value = 0.001;
    r.alpha = 0.01;
    r.verdict = Verdict::Stolen;
    r.k_reveal = 10;
    r.seed = 7;
    CHECK(report_csv_header() == "suspect,delta_mu,t,p,alpha,verdict,k,seed");
    CHECK(report_csv_row(r) == "f_V,0.5,3.25,0.001,0.01,stolen,10,7");
    CHECK(report_block(r).find("verdict    = stolen") != std::string::npos);
}
