#include "taprbm/denoise.hpp"

#include <cmath>
#include <random>

#include "taprbm/errors.hpp"

namespace taprbm {

namespace {

void check_binary(const Vector& x, const char* what) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x(i) != 0.0 && x(i) != 1.0) {
            throw InputError(std::string(what) + ": entry " + std::to_string(i) +
                             " is not binary");
        }
    }
}

void check_p(double p) {
    if (!(p >= 0.0 && p <= 0.5)) throw InputError("flip probability must lie in [0, 0.5]");
}

Vector round_half_up(const Vector& means) {
    Vector est(means.size());
    for (Eigen::Index i = 0; i < means.size(); ++i) est(i) = means(i) >= 0.5 ? 1.0 : 0.0;
    return est;
}

}  // namespace

double BscChannel::field(double y) const {
    if (!(p > 0.0 && p < 0.5)) {
        throw InputError("BSC field is defined only for p in (0, 0.5)");
    }
    return (2.0 * y - 1.0) * std::log((1.0 - p) / p);
}

Vector corrupt_bsc(const Vector& x, double p, std::uint64_t seed) {
    check_binary(x, "corrupt_bsc");
    check_p(p);
    std::mt19937_64 gen(seed);
    std::bernoulli_distribution flip(p);
    Vector y = x;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (flip(gen)) y(i) = 1.0 - y(i);
    }
    return y;
}

DenoiseResult ope_denoise(const Vector& y, const Vector& m, double p) {
    check_binary(y, "ope_denoise");
    check_p(p);
    if (y.size() != m.size()) throw InputError("ope_denoise: magnetization length mismatch");

    DenoiseResult out;
    out.method = "ope";
    if (p == 0.0) {
        out.means = y;  // the channel is noiseless
        out.estimate = y;
        return out;
    }
    out.means.resize(y.size());
    if (p == 0.5) {
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            out.means(i) = std::clamp(m(i), 1e-3, 1.0 - 1e-3);
        }
    } else {
        const BscChannel ch{p};
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double mi = std::clamp(m(i), 1e-3, 1.0 - 1e-3);
            out.means(i) = sigmoid(std::log(mi / (1.0 - mi)) + ch.field(y(i)));
        }
    }
    out.estimate = round_half_up(out.means);
    return out;
}

DenoiseResult knn_denoise(const Vector& y, const Matrix& exemplars, int k, KnnMetric metric) {
    if (exemplars.rows() == 0) throw InputError("knn_denoise: empty exemplar set");
    if (exemplars.cols() != y.size()) throw InputError("knn_denoise: exemplar width mismatch");
    if (k != 1) throw InputError("knn_denoise: only k = 1 is supported");

    Eigen::Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < exemplars.rows(); ++r) {
        double d;
        if (metric == KnnMetric::Hamming) {
            d = (exemplars.row(r).transpose() - y).cwiseAbs().sum();
        } else {
            d = (exemplars.row(r).transpose() - y).squaredNorm();
        }
        if (d < best_d) {  // strict: ties keep the lowest index
            best_d = d;
            best = r;
        }
    }
    DenoiseResult out;
    out.method = "knn";
    out.means = exemplars.row(best).transpose();
    out.estimate = round_half_up(out.means);
    return out;
}

DenoiseResult tap_denoise(const GrbmModel& model, const Vector& y, double p,
                          const TapSettings& settings) {
    check_binary(y, "tap_denoise");
    check_p(p);
    if (y.size() != model.n_visible()) throw InputError("tap_denoise: row width mismatch");
    for (const auto& u : model.vis) {
        if (family_of(u) != UnitFamily::Binary) {
            throw InputError("tap_denoise requires binary visible units");
        }
    }

    DenoiseResult out;
    out.method = "tap";
    if (p == 0.0) {
        out.means = y;  // exact limit: infinite evidence recovers the observation
        out.estimate = y;
        return out;
    }

    // prior magnetizations carried by the model's visible fields
    Vector m(model.n_visible());
    for (Eigen::Index i = 0; i < model.n_visible(); ++i) {
        m(i) = sigmoid(std::get<BinaryParams>(model.vis[static_cast<std::size_t>(i)]).u);
    }
    const DenoiseResult ope = ope_denoise(y, m, p);

    GrbmModel tilted = model;
    if (p < 0.5) {  // at p = 0.5 the channel carries no evidence
        const BscChannel ch{p};
        for (Eigen::Index i = 0; i < tilted.n_visible(); ++i) {
            std::get<BinaryParams>(tilted.vis[static_cast<std::size_t>(i)]).u += ch.field(y(i));
        }
    }
    const TapSolution sol =
        run_tap(tilted, ope.means, Vector::Zero(ope.means.size()), settings);
    out.means = sol.state.layers[0].a;
    out.estimate = round_half_up(out.means);
    return out;
}

double mcc(const Vector& estimate, const Vector& truth) {
    if (estimate.size() != truth.size()) throw InputError("mcc: length mismatch");
    check_binary(estimate, "mcc estimate");
    check_binary(truth, "mcc truth");
    double tp = 0, tn = 0, fp = 0, fn = 0;
    for (Eigen::Index i = 0; i < estimate.size(); ++i) {
        if (truth(i) == 1.0) {
            (estimate(i) == 1.0 ? tp : fn) += 1.0;
        } else {
            (estimate(i) == 0.0 ? tn : fp) += 1.0;
        }
    }
    const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    if (denom == 0.0) return 0.0;
    return (tp * tn - fp * fn) / std::sqrt(denom);
}

}  // namespace taprbm
