#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "taprbm/denoise.hpp"
#include "taprbm/errors.hpp"

using namespace taprbm;

namespace {

GrbmModel binary_model(Eigen::Index nv, Eigen::Index nh, double wscale, std::uint64_t seed) {
    GrbmModel m;
    m.w.resize(nv, nh);
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (Eigen::Index i = 0; i < nv; ++i) {
        for (Eigen::Index j = 0; j < nh; ++j) m.w(i, j) = wscale * unif(gen);
    }
    for (Eigen::Index i = 0; i < nv; ++i) m.vis.push_back(BinaryParams{0.5 * unif(gen)});
    for (Eigen::Index j = 0; j < nh; ++j) m.hid.push_back(BinaryParams{0.5 * unif(gen)});
    return m;
}

}  // namespace

TEST_CASE("corrupt_bsc: limits, reproducibility, flip rate") {
    Vector x = (Vector::Random(400).array() > 0.0).cast<double>();
    CHECK(corrupt_bsc(x, 0.0, 1) == x);

    const Vector y1 = corrupt_bsc(x, 0.2, 77);
    const Vector y2 = corrupt_bsc(x, 0.2, 77);
    CHECK(y1 == y2);
    CHECK(corrupt_bsc(x, 0.2, 78) != y1);

    // empirical flip rate within 3 sigma at p = 1/2
    const Vector y = corrupt_bsc(x, 0.5, 5);
    const double flips = (y - x).cwiseAbs().sum();
    const double sigma = std::sqrt(400 * 0.25);
    CHECK(std::abs(flips - 200.0) < 3.0 * sigma);

    Vector bad(2);
    bad << 0.5, 1.0;
    CHECK_THROWS_AS(corrupt_bsc(bad, 0.1, 1), InputError);
    CHECK_THROWS_AS(corrupt_bsc(x, 0.7, 1), InputError);
}

TEST_CASE("OPE limits and the symmetric worked example") {
    Vector y(4);
    y << 1, 0, 1, 0;
    Vector m = Vector::Constant(4, 0.5);

    // p = 0 returns the observations
    CHECK(ope_denoise(y, m, 0.0).means == y);
    // p = 1/2 returns the prior magnetizations
    CHECK(ope_denoise(y, m, 0.5).means == Vector::Constant(4, 0.5));

    // m = 1/2, p = 1/4: mean is sigm(+-ln 3) = 0.75 / 0.25 toward the
    // observation
    const DenoiseResult r = ope_denoise(y, m, 0.25);
    for (int i = 0; i < 4; ++i) {
        const double want = y(i) == 1.0 ? 0.75 : 0.25;
        CHECK(r.means(i) == doctest::Approx(want).epsilon(1e-12));
        CHECK(r.estimate(i) == y(i));
    }

    // means are monotone in the observation site-wise
    const DenoiseResult r1 = ope_denoise(Vector::Ones(4), m, 0.1);
    const DenoiseResult r0 = ope_denoise(Vector::Zero(4), m, 0.1);
    for (int i = 0; i < 4; ++i) CHECK(r1.means(i) > r0.means(i));
}

TEST_CASE("1-NN: exact hit, tie to the lowest index, brute-force agreement") {
    Matrix ex(3, 4);
    ex << 1, 0, 1, 0, 0, 0, 1, 1, 1, 1, 1, 1;
    Vector y = ex.row(1).transpose();
    CHECK(knn_denoise(y, ex).means == y);

    // equidistant from rows 0 and 2 -> row 0 wins
    Vector tie(4);
    tie << 1, 0, 1, 1;
    CHECK(knn_denoise(tie, ex).means == ex.row(0).transpose());

    // random queries agree with a brute-force scan
    std::mt19937_64 gen(3);
    std::uniform_int_distribution<int> bit(0, 1);
    for (int t = 0; t < 20; ++t) {
        Vector q(4);
        for (int i = 0; i < 4; ++i) q(i) = bit(gen);
        Eigen::Index best = 0;
        double best_d = 1e9;
        for (Eigen::Index r = 0; r < 3; ++r) {
            const double d = (ex.row(r).transpose() - q).cwiseAbs().sum();
            if (d < best_d) {
                best_d = d;
                best = r;
            }
        }
        CHECK(knn_denoise(q, ex).means == ex.row(best).transpose());
    }

    CHECK_THROWS_AS(knn_denoise(y, Matrix(0, 4)), InputError);
    CHECK_THROWS_AS(knn_denoise(y, ex, 3), InputError);
}

TEST_CASE("tap_denoise: exact recovery at p = 0 and OPE reduction at W = 0") {
    GrbmModel m = binary_model(6, 3, 0.2, 9);
    Vector x = (Vector::Random(6).array() > 0.0).cast<double>();
    const TapSettings ts{2000, 1e-10, 0.5};

    const DenoiseResult r0 = tap_denoise(m, x, 0.0, ts);
    CHECK(r0.estimate == x);
    CHECK(mcc(r0.estimate, x) == ((x.sum() > 0 && x.sum() < 6) ? 1.0 : 0.0));

    GrbmModel free = m;
    free.w.setZero();
    Vector mags(6);
    for (int i = 0; i < 6; ++i) mags(i) = sigmoid(std::get<BinaryParams>(free.vis[i]).u);
    for (double p : {0.05, 0.2, 0.45, 0.5}) {
        const Vector y = corrupt_bsc(x, p, 31);
        const DenoiseResult tap = tap_denoise(free, y, p, ts);
        const DenoiseResult ope = ope_denoise(y, mags, p);
        for (int i = 0; i < 6; ++i) {
            CHECK(tap.means(i) == doctest::Approx(ope.means(i)).epsilon(1e-10));
        }
    }

    GrbmModel tg = m;
    tg.vis[0] = TruncGaussParams{0.0, 1.0, 0.0, 1.0};
    CHECK_THROWS_AS(tap_denoise(tg, x, 0.1, ts), InputError);
}

TEST_CASE("tap_denoise approaches the exact posterior on an enumerable model") {
    const GrbmModel m = binary_model(3, 2, 0.1, 15);
    const DbmModel dbm = to_dbm(m);
    Vector x(3);
    x << 1, 0, 1;
    const double p = 0.1;
    const Vector y = corrupt_bsc(x, p, 4);

    // exact posterior: P(x | y) over the 8 visible configurations with the
    // hidden layer summed out and the channel evidence attached
    const double d_field = std::log((1.0 - p) / p);
    double z = 0.0;
    Vector post = Vector::Zero(3);
    for (int mask = 0; mask < 8; ++mask) {
        Vector cand(3);
        for (int i = 0; i < 3; ++i) cand(i) = (mask >> i) & 1;
        double lp = oracle::exact_log_prob(dbm, cand);
        for (int i = 0; i < 3; ++i) lp += d_field * (2.0 * y(i) - 1.0) * cand(i);
        const double w = std::exp(lp);
        z += w;
        post += w * cand;
    }
    post /= z;

    const DenoiseResult r = tap_denoise(m, y, p, {5000, 1e-12, 0.5});
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(r.means(i) - post(i)) < 1e-2);
    }
}

TEST_CASE("MCC hand values") {
    Vector t(4), e(4);
    t << 1, 1, 0, 0;
    CHECK(mcc(t, t) == doctest::Approx(1.0));
    e = Vector::Ones(4) - t;
    CHECK(mcc(e, t) == doctest::Approx(-1.0));

    // TP=4 TN=3 FP=2 FN=1 -> (4*3 - 2*1)/sqrt(6*5*5*4)
    Vector truth(10), est(10);
    truth << 1, 1, 1, 1, 1, 0, 0, 0, 0, 0;
    est << 1, 1, 1, 1, 0, 1, 1, 0, 0, 0;
    CHECK(mcc(est, truth) == doctest::Approx(10.0 / std::sqrt(600.0)));

    // all-one estimate: a zero marginal count returns 0
    CHECK(mcc(Vector::Ones(4), t) == 0.0);
    CHECK_THROWS_AS(mcc(Vector::Ones(3), t), InputError);
}
