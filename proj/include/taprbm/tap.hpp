#pragma once

#include <iosfwd>
#include <vector>

#include "taprbm/model.hpp"

namespace taprbm {

struct TapSettings {
    int max_iters = 2000;
    double tolerance = 1e-8;  // MSE of the magnetization update
    double damping = 0.5;     // new = (1-d) proposed + d old
};

/// Per-layer marginal moments and the cavity fields that produced them.
struct LayerState {
    Vector a;      // magnetizations
    Vector c;      // variances
    Vector cav_b;  // linear cavity field B
    Vector cav_a;  // quadratic cavity precision A (<= 0 at closures)
};

/// Layer 0 is visible; deeper entries are hidden layers.
struct TapState {
    std::vector<LayerState> layers;
};

struct TapSolution {
    TapState state;
    double free_energy = 0.0;
    int iterations = 0;
    bool converged = false;
    double residual = 0.0;  // final MSE of the undamped magnetization proposal
};

/// Precomputed per-run context: squared couplings and per-site prior moments.
/// Keeps only pointers into the model, which must outlive the runtime.
struct TapRuntime {
    std::vector<const std::vector<UnitParams>*> params;  // one per layer
    std::vector<const Matrix*> w;                        // couplings between adjacent layers
    std::vector<Matrix> w2;                              // elementwise squares
    std::vector<std::vector<PriorMoments>> priors;
    bool clamp_visible = false;

    std::size_t n_layers() const { return params.size(); }
};

TapRuntime make_runtime(const GrbmModel& m);
TapRuntime make_runtime(const DbmModel& m);

/// Initial state: visible layer from (init_a, init_c), hidden layers at their
/// prior moments, cavity fields zero.
TapState make_state(const TapRuntime& rt, const Vector& init_a, const Vector& init_c);

/// One full sweep over the layers (odd layers first, then even; for a single
/// hidden layer this is exactly hidden-then-visible). Returns the MSE of the
/// undamped magnetization proposals. Site-level numerical failures are
/// rethrown with the layer and site index attached.
double sweep(const TapRuntime& rt, TapState& state, double damping);

/// Iterates sweeps until the proposal MSE drops to settings.tolerance or
/// max_iters is exhausted; non-converged states are returned flagged.
TapSolution run_fixed_point(const TapRuntime& rt, TapState state, const TapSettings& settings);

/// TAP free energy of a state: cavity closures are recomputed from (a, c), so
/// the value is a function of the moments alone. Clamped layers contribute
/// coupling terms but no site terms.
double free_energy(const TapRuntime& rt, const TapState& state);

// -- bipartite (single hidden layer) front ends --

TapState tap_step(const GrbmModel& m, const TapState& state, double damping);
TapSolution run_tap(const GrbmModel& m, const Vector& init_a, const Vector& init_c,
                    const TapSettings& settings);
double free_energy_rbm(const GrbmModel& m, const TapState& state);

/// Clamped inference over the hidden layers with the visible layer pinned at
/// x (zero variance). For a single hidden layer this converges in one sweep.
TapSolution run_clamped_tap(const DbmModel& m, const Vector& x, const TapSettings& settings);

/// Greedy dedup: two solutions coincide when the max-norm distance between
/// their concatenated magnetizations is below tol. First representative wins;
/// input order is preserved.
std::vector<TapSolution> dedup_solutions(const std::vector<TapSolution>& solutions, double tol);

/// Columnar text export, one record per solution: index, converged flag,
/// iterations, residual, free energy, then per-layer magnetizations and
/// variances.
void export_solutions(std::ostream& out, const std::vector<TapSolution>& solutions);

}  // namespace taprbm
