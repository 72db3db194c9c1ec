#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "bip/model.hpp"
#include "bip/simgen.hpp"
#include "helpers.hpp"

using namespace bip;

namespace {

// one smooth 1-observed/1-controlled reach with an exact sample count
Interaction ramp_demo(long T) {
    Interaction ix;
    ix.layout = default_layout(1, 1);
    ix.sample_rate = 30.0;
    ix.data.resize(2, T);
    for (long t = 0; t < T; ++t) {
        const double u = min_jerk(phase_of(t, T));
        ix.data(0, t) = 0.6 * u;
        ix.data(1, t) = -0.3 * u;
    }
    return ix;
}

} // namespace

TEST_CASE("initial phase velocity averages reciprocal durations") {
    std::vector<Interaction> demos{ramp_demo(100), ramp_demo(200)};
    std::vector<BasisConfig> cfgs(2, BasisConfig::regular(8));
    const PriorModel m = learn_prior(demos, cfgs);

    CHECK(m.phase_vel0 == doctest::Approx((1.0 / 100 + 1.0 / 200) / 2).epsilon(1e-15));
    CHECK(m.phase_vel0 == doctest::Approx(0.0075).epsilon(1e-12));
    // the mean of reciprocals, not the reciprocal of the mean duration
    CHECK(m.phase_vel0 != doctest::Approx(1.0 / 150).epsilon(1e-6));
    CHECK(m.mean_demo_length == 150.0);
    CHECK(m.demo_count == 2);
}

TEST_CASE("mean weights are the column means of the demo weight matrix") {
    const auto& demos = testutil::narrow_corpus();
    const auto& m = testutil::narrow_model();

    std::vector<BasisConfig> cfgs(2, BasisConfig::regular(15));
    Vec acc = Vec::Zero(30);
    for (const auto& ix : demos) acc += decompose_interaction(ix, cfgs).flattened();
    const Vec mean = acc / (double)demos.size();

    CHECK((m.w0.flattened() - mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(m.phase0 == 0.0);
}

TEST_CASE("identical demonstrations leave no weight spread") {
    std::vector<Interaction> demos(4, ramp_demo(120));
    std::vector<BasisConfig> cfgs(2, BasisConfig::regular(10));
    const PriorModel m = learn_prior(demos, cfgs);

    const Vec w_single = decompose_interaction(demos[0], cfgs).flattened();
    const double scale = w_single.cwiseAbs().maxCoeff();
    CHECK((m.w0.flattened() - w_single).cwiseAbs().maxCoeff() < 1e-12 * scale);

    const long B = m.weight_dim();
    CHECK(m.Sigma0.block(2, 2, B, B).cwiseAbs().maxCoeff() < 1e-15 * scale * scale);
    // but the phase blocks keep their configured floors
    CHECK(m.Sigma0(0, 0) == 1e-4);
    CHECK(m.Sigma0(1, 1) == 1e-8); // zero duration spread hits the floor
}

TEST_CASE("weight_covariance small exact case") {
    Mat W(2, 2);
    W << 0, 0, 2, 2;
    const Mat cov = weight_covariance(W);
    CHECK(cov(0, 0) == 2.0);
    CHECK(cov(0, 1) == 2.0);
    CHECK(cov(1, 0) == 2.0);
    CHECK(cov(1, 1) == 2.0);

    CHECK_THROWS_AS(weight_covariance(Mat::Zero(1, 3)), DataError);
}

TEST_CASE("weight_covariance zeroes rows of constant columns") {
    Mat W(2, 3);
    W << 1.0, 0.7, -2.0,
         3.0, 0.7, 0.5;
    const Mat cov = weight_covariance(W);
    for (int k = 0; k < 3; ++k) {
        CHECK(cov(1, k) == 0.0);
        CHECK(cov(k, 1) == 0.0);
    }
    CHECK(cov(0, 0) == 2.0);      // var{1,3}
    CHECK(cov(2, 2) == 3.125);    // var{-2,0.5}
    CHECK(cov(0, 2) == cov(2, 0));
}

TEST_CASE("weight_covariance of independent columns is near diagonal") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g(0.0, 1.0);
    Mat W(10000, 2);
    for (long i = 0; i < W.rows(); ++i) {
        W(i, 0) = g(rng);
        W(i, 1) = g(rng);
    }
    const Mat cov = weight_covariance(W);
    CHECK(cov(0, 0) > 0.9);
    CHECK(cov(0, 0) < 1.1);
    CHECK(cov(1, 1) > 0.9);
    CHECK(cov(1, 1) < 1.1);
    CHECK(std::abs(cov(0, 1)) < 0.05);
}

TEST_CASE("prior covariance starts block diagonal") {
    const auto& m = testutil::shared_model();
    const long B = m.weight_dim();
    REQUIRE(m.state_dim() == B + 2);
    REQUIRE(m.Sigma0.rows() == B + 2);

    CHECK(m.Sigma0.block(0, 2, 2, B).cwiseAbs().maxCoeff() == 0.0);
    CHECK(m.Sigma0.block(2, 0, B, 2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(m.Sigma0(0, 1) == 0.0);
    CHECK(m.Sigma0(1, 0) == 0.0);
    CHECK(m.Sigma0(0, 0) == 1e-4);

    // duration spread oracle recomputed from the corpus
    const auto& demos = testutil::shared_corpus();
    double s = 0, sq = 0;
    for (const auto& ix : demos) {
        const double pv = 1.0 / (double)ix.samples();
        s += pv;
        sq += pv * pv;
    }
    const double n = (double)demos.size();
    const double var_pv = (sq - s * s / n) / (n - 1);
    CHECK(m.phase_vel0 == doctest::Approx(s / n).epsilon(1e-14));
    CHECK(m.Sigma0(1, 1) == doctest::Approx(std::max(var_pv, 1e-8)).epsilon(1e-12));

    CHECK((m.Sigma0 - m.Sigma0.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Mat> es(m.Sigma0);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9);
}

TEST_CASE("demo_range spans the corpus per DoF with a tiny floor") {
    Interaction a = ramp_demo(100), b = ramp_demo(100);
    b.data.row(0) *= 2.0;             // widen DoF 0 range
    b.data.row(1).setConstant(0.0);   // flat controlled row
    a.data.row(1).setConstant(0.0);
    std::vector<BasisConfig> cfgs(2, BasisConfig::regular(8));
    const PriorModel m = learn_prior({a, b}, cfgs);

    CHECK(m.demo_range[0] == doctest::Approx(1.2).epsilon(1e-12)); // max over both demos
    CHECK(m.demo_range[1] == 1e-9);                                // floored, never zero
}

TEST_CASE("learn_prior rejects inconsistent corpora") {
    std::vector<BasisConfig> cfgs(2, BasisConfig::regular(8));
    CHECK_THROWS_AS(learn_prior({ramp_demo(100)}, cfgs), DataError);

    Interaction other = ramp_demo(100);
    other.sample_rate = 60.0;
    CHECK_THROWS_AS(learn_prior({ramp_demo(100), other}, cfgs), DataError);

    Interaction wide;
    wide.layout = default_layout(2, 1);
    wide.sample_rate = 30.0;
    wide.data = Mat::Zero(3, 100);
    CHECK_THROWS_AS(learn_prior({ramp_demo(100), wide}, cfgs), DataError);

    // a too-short demo fails with its index in the message
    try {
        learn_prior({ramp_demo(100), ramp_demo(5)}, cfgs);
        FAIL("expected failure");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("demonstration 1") != std::string::npos);
    }
}

TEST_CASE("model save/load round-trips every field exactly") {
    const auto& m = testutil::narrow_model();
    testutil::TempDir dir;
    const auto p = dir / "model.json";
    save_model(m, p);
    const PriorModel back = load_model(p);

    CHECK(back.layout == m.layout);
    CHECK(back.sample_rate == m.sample_rate);
    CHECK(back.phase0 == m.phase0);
    CHECK(back.phase_vel0 == m.phase_vel0);
    CHECK(back.var_phase0 == m.var_phase0);
    CHECK(back.var_phase_vel0 == m.var_phase_vel0);
    CHECK(back.mean_demo_length == m.mean_demo_length);
    CHECK(back.demo_count == m.demo_count);
    CHECK((back.w0.flattened() - m.w0.flattened()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.Sigma0 - m.Sigma0).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.demo_range - m.demo_range).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(back.basis.size() == m.basis.size());
    for (size_t d = 0; d < m.basis.size(); ++d) CHECK(back.basis[d] == m.basis[d]);

    // identical model, identical bytes
    const auto p2 = dir / "model2.json";
    save_model(back, p2);
    CHECK(testutil::read_file(p) == testutil::read_file(p2));
}

TEST_CASE("load_model rejects malformed files") {
    testutil::TempDir dir;
    const auto p = dir / "bad.json";

    testutil::write_file(p, "not json at all");
    CHECK_THROWS_AS(load_model(p), DataError);

    testutil::write_file(p, "{\"format_version\": 99}");
    CHECK_THROWS_AS(load_model(p), DataError);

    testutil::write_file(p, "{\"format_version\": 1}");
    CHECK_THROWS_AS(load_model(p), DataError); // everything else missing

    CHECK_THROWS_AS(load_model(dir / "absent.json"), DataError);
}
