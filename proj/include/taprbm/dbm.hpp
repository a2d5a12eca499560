#pragma once

#include <vector>

#include "taprbm/model.hpp"
#include "taprbm/tap.hpp"
#include "taprbm/training.hpp"

namespace taprbm {

/// Free (unclamped) fixed point over all layers of a deep model. For a single
/// hidden layer this is identical to run_tap on the equivalent bipartite
/// model.
TapSolution dbm_tap_run(const DbmModel& m, const Vector& init_a, const Vector& init_c,
                        const TapSettings& settings);

struct DbmGradients {
    std::vector<Matrix> d_w;                    // one per coupling
    std::vector<std::vector<UnitGrad>> d_theta;  // one per layer
};

/// Likelihood gradients for a deep model: data terms from the per-row clamped
/// solutions, model terms from the free solutions. For one hidden layer the
/// output coincides with compute_gradients.
DbmGradients dbm_gradients(const DbmModel& m, const Matrix& batch,
                           const std::vector<TapSolution>& clamped,
                           const std::vector<TapSolution>& free_solutions);

/// Greedy layerwise pretraining: the first coupling is trained as an ordinary
/// bipartite model, the dataset is propagated through the trained layer
/// (conditional means by default, seeded Bernoulli sampling for binary units
/// when sample_propagation is set) and the next stage trains on the
/// propagated activations.
DbmModel pretrain_greedy(const std::vector<Eigen::Index>& hidden_sizes, UnitFamily vis_family,
                         UnitFamily hid_family, const Matrix& data, const TrainConfig& cfg,
                         bool sample_propagation = false);

/// Joint gradient ascent over all layers (Deep extension of train_epochs:
/// K free runs plus one clamped run per batch row per update). Momentum
/// applies only when cfg.eta > 0; deep models default it off at the CLI.
TrainResult train_dbm_joint(DbmModel& m, const Matrix& data, const TrainConfig& cfg,
                            const EpochCallback& on_epoch = nullptr);

}  // namespace taprbm
