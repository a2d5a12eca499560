#pragma once

#include <cstdint>
#include <string>

#include "taprbm/model.hpp"
#include "taprbm/tap.hpp"

namespace taprbm {

/// Binary symmetric channel with flip probability p in [0, 0.5]. The p = 0
/// and p = 0.5 limits are handled exactly (no infinite fields are formed).
struct BscChannel {
    double p = 0.0;

    /// Per-site posterior field (2y - 1) ln((1-p)/p): positive evidence
    /// toward the observed bit for p < 0.5. Requires p in (0, 0.5).
    double field(double y) const;
};

/// Independent seeded bit flips with probability p.
Vector corrupt_bsc(const Vector& x, double p, std::uint64_t seed);

struct DenoiseResult {
    Vector means;     // posterior means in [0, 1]
    Vector estimate;  // rounded at 0.5, ties to one
    std::string method;
};

/// Bayes-optimal pointwise estimator under the factorized prior with
/// magnetizations m: sigm(ln(m/(1-m)) + field). Returns the observation at
/// p = 0 and the prior magnetizations at p = 0.5.
DenoiseResult ope_denoise(const Vector& y, const Vector& m, double p);

enum class KnnMetric { Hamming, Euclidean };

/// Nearest exemplar under the metric; ties break toward the lowest index.
/// Only k = 1 is supported (fusion of several neighbors is out of scope).
DenoiseResult knn_denoise(const Vector& y, const Matrix& exemplars, int k = 1,
                          KnnMetric metric = KnnMetric::Hamming);

/// Posterior inference on the model with the visible fields shifted by the
/// channel evidence, initialized at the OPE means (prior magnetizations taken
/// from the model's visible fields). Binary visible units only.
DenoiseResult tap_denoise(const GrbmModel& model, const Vector& y, double p,
                          const TapSettings& settings);

/// Matthews correlation coefficient; returns 0 when any marginal count is
/// zero.
double mcc(const Vector& estimate, const Vector& truth);

}  // namespace taprbm
