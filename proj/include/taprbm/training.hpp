#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "taprbm/model.hpp"
#include "taprbm/tap.hpp"

namespace taprbm {

struct TrainConfig {
    double gamma = 0.005;    // learning rate
    double gamma_final = 0;  // > 0 enables linear decay toward this value
    double epsilon = 0.001;  // L2 (weight decay) strength
    double eta = 0.5;        // momentum
    int batch_size = 100;    // M
    int k_solutions = 100;   // K fixed-point runs per update
    int epochs = 5;
    std::uint64_t seed = 0;
    TapSettings tap{2000, 1e-8, 0.0};  // damping off for training runs
    int monitor_rows = 1000;           // likelihood monitoring subset (fixed at start)
    int checkpoint_every = 0;          // epochs between checkpoints; 0 disables
    std::string checkpoint_dir;
    std::size_t threads = 0;  // 0 = auto
};

void validate(const TrainConfig& cfg);

struct GradientSet {
    Matrix d_w;
    std::vector<UnitGrad> d_vis;
    std::vector<UnitGrad> d_hid;
};

/// Likelihood-ascent gradients for one minibatch: data terms from the clamped
/// conditional moments, model terms averaged over the supplied converged
/// fixed points.
GradientSet compute_gradients(const GrbmModel& m, const Matrix& batch,
                              const std::vector<TapSolution>& solutions);

/// In-place parameter step: theta += gamma * grad (rho clamped into (0,1)).
void apply_grad(UnitParams& p, const UnitGrad& g, double gamma);

struct EpochMetrics {
    int epoch = 0;
    double nll_per_unit = 0.0;  // normalized likelihood on the monitoring subset
    double mean_fe = 0.0;       // Helmholtz estimate over unique solutions
    int n_unique = 0;
    int n_skipped_batches = 0;
    double wall_time_s = 0.0;
};

struct TrainResult {
    std::vector<EpochMetrics> metrics;  // entry 0 is the pre-training state
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Minibatch gradient ascent with momentum on the couplings and plain steps
/// on the site parameters. One epoch is a full seeded-shuffle pass; the K
/// fixed-point initializations are drawn from the current minibatch rows
/// (cycling when K exceeds the batch).
TrainResult train_epochs(GrbmModel& m, const Matrix& data, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = nullptr);

}  // namespace taprbm
