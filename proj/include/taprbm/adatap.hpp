#pragma once

#include "taprbm/model.hpp"

namespace taprbm {

/// Symmetric joint formulation of a binary-binary bipartite model:
/// J = [[0, W], [W^T, 0]], H = (visible fields; hidden fields).
struct JointModel {
    Matrix j;
    Vector h;
};

JointModel build_joint(const GrbmModel& m);

struct AdaTapSettings {
    int max_iters = 500;
    double tolerance = 1e-10;  // MSE of the magnetization update
    double damping = 0.5;
    int max_retries = 8;  // damped retries when diag(A2) - J turns singular
};

struct AdaTapResult {
    Vector a;  // unit means over all N_v + N_h sites
    Vector c;  // unit variances
    int iterations = 0;
    bool converged = false;
    double residual = 0.0;
};

/// Adaptive second-order inference: alternates the Bernoulli moment closure
/// with a Gaussian cavity update whose correlation matrix
/// C2 = (diag(A2) - J)^{-1} is recomputed (one dense inversion) per
/// iteration. The cavity transfer uses moment matching,
/// A2 = 1/c1 - A1 and B2 = a1/c1 - B1.
AdaTapResult adatap_run(const JointModel& jm, const AdaTapSettings& settings);

}  // namespace taprbm
