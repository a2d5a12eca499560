#pragma once

#include <vector>

#include "taprbm/model.hpp"
#include "taprbm/tap.hpp"

namespace taprbm {

/// Arithmetic mean of the solutions' free energies (the Helmholtz estimate;
/// solutions are weighted uniformly).
double mean_free_energy(const std::vector<TapSolution>& solutions);

/// TAP log-likelihood of one row: visible prior terms, the clamped
/// log-partition over the hidden layers, plus the mean solution free energy.
/// Callers are expected to pass a deduplicated solution set.
double tap_log_likelihood(const DbmModel& m, const Vector& x,
                          const std::vector<TapSolution>& solutions,
                          const TapSettings& settings = {});
double tap_log_likelihood(const GrbmModel& m, const Vector& x,
                          const std::vector<TapSolution>& solutions,
                          const TapSettings& settings = {});

std::size_t total_units(const DbmModel& m);

/// Per-unit normalization of the same quantity (divide by the total number of
/// visible and hidden units).
double normalized_tap_log_likelihood(const DbmModel& m, const Vector& x,
                                     const std::vector<TapSolution>& solutions,
                                     const TapSettings& settings = {});

struct LandscapeReport {
    int n_initializations = 0;
    int n_converged = 0;
    int n_unique = 0;
    std::vector<double> free_energies;  // one per unique solution
    double mean_fe = 0.0;
    std::vector<double> bin_edges;  // Freedman-Diaconis histogram (presentation only)
    std::vector<int> bin_counts;
    std::vector<TapSolution> unique;  // kept for scoring and export
};

/// Runs the fixed point from every initialization row, deduplicates the
/// converged solutions and summarizes their free energies.
LandscapeReport landscape_report(const DbmModel& m, const Matrix& initializations,
                                 const TapSettings& settings, double dedup_tol = 1e-4,
                                 std::size_t threads = 0);
LandscapeReport landscape_report(const GrbmModel& m, const Matrix& initializations,
                                 const TapSettings& settings, double dedup_tol = 1e-4,
                                 std::size_t threads = 0);

}  // namespace taprbm
