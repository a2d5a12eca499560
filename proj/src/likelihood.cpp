#include "taprbm/likelihood.hpp"

#include <algorithm>
#include <cmath>

#include "taprbm/errors.hpp"
#include "taprbm/parallel.hpp"

namespace taprbm {

double mean_free_energy(const std::vector<TapSolution>& solutions) {
    if (solutions.empty()) throw InputError("mean_free_energy: empty solution set");
    double s = 0.0;
    for (const auto& sol : solutions) s += sol.free_energy;
    return s / static_cast<double>(solutions.size());
}

std::size_t total_units(const DbmModel& m) {
    std::size_t n = 0;
    for (const auto& layer : m.layers) n += layer.size();
    return n;
}

double tap_log_likelihood(const DbmModel& m, const Vector& x,
                          const std::vector<TapSolution>& solutions,
                          const TapSettings& settings) {
    if (solutions.empty()) throw InputError("tap_log_likelihood: empty solution set");
    if (x.size() != static_cast<Eigen::Index>(m.layers[0].size())) {
        throw InputError("tap_log_likelihood: row size mismatch");
    }
    double ll = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        ll += log_prior(m.layers[0][static_cast<std::size_t>(i)], x(i));
    }
    // Clamped log-partition of the hidden system given x. For one hidden
    // layer this reduces to sum_j ln Z_j(sum_i W_ij x_i, 0), exact after one
    // undamped sweep; damping would only bias the evaluation.
    TapSettings cs = settings;
    cs.damping = 0.0;
    const TapSolution clamped = run_clamped_tap(m, x, cs);
    ll -= clamped.free_energy;
    ll += mean_free_energy(solutions);
    return ll;
}

double tap_log_likelihood(const GrbmModel& m, const Vector& x,
                          const std::vector<TapSolution>& solutions,
                          const TapSettings& settings) {
    return tap_log_likelihood(to_dbm(m), x, solutions, settings);
}

double normalized_tap_log_likelihood(const DbmModel& m, const Vector& x,
                                     const std::vector<TapSolution>& solutions,
                                     const TapSettings& settings) {
    return tap_log_likelihood(m, x, solutions, settings) /
           static_cast<double>(total_units(m));
}

namespace {

void fd_histogram(const std::vector<double>& values, std::vector<double>& edges,
                  std::vector<int>& counts) {
    edges.clear();
    counts.clear();
    if (values.empty()) return;
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted.front(), hi = sorted.back();
    const std::size_t n = sorted.size();
    const double q1 = sorted[(n - 1) / 4];
    const double q3 = sorted[(3 * (n - 1)) / 4];
    const double iqr = q3 - q1;
    const double width = 2.0 * iqr / std::cbrt(static_cast<double>(n));
    int bins = 1;
    if (width > 0.0 && hi > lo) {
        bins = std::max(1, static_cast<int>(std::ceil((hi - lo) / width)));
        bins = std::min(bins, 512);
    }
    const double span = (hi > lo) ? (hi - lo) : 1.0;
    edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int b = 0; b <= bins; ++b) edges[static_cast<std::size_t>(b)] = lo + span * b / bins;
    counts.assign(static_cast<std::size_t>(bins), 0);
    for (double v : sorted) {
        int b = static_cast<int>((v - lo) / span * bins);
        b = std::clamp(b, 0, bins - 1);
        ++counts[static_cast<std::size_t>(b)];
    }
}

}  // namespace

LandscapeReport landscape_report(const DbmModel& m, const Matrix& initializations,
                                 const TapSettings& settings, double dedup_tol,
                                 std::size_t threads) {
    const TapRuntime rt = make_runtime(m);
    const Eigen::Index n = initializations.rows();
    std::vector<TapSolution> runs(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
        const Vector row = initializations.row(static_cast<Eigen::Index>(i)).transpose();
        runs[i] = run_fixed_point(rt, make_state(rt, row, Vector::Zero(row.size())), settings);
    });

    LandscapeReport rep;
    rep.n_initializations = static_cast<int>(n);
    std::vector<TapSolution> converged;
    converged.reserve(runs.size());
    for (auto& r : runs) {
        if (r.converged) converged.push_back(std::move(r));
    }
    rep.n_converged = static_cast<int>(converged.size());
    rep.unique = dedup_solutions(converged, dedup_tol);
    rep.n_unique = static_cast<int>(rep.unique.size());
    rep.free_energies.reserve(rep.unique.size());
    for (const auto& s : rep.unique) rep.free_energies.push_back(s.free_energy);
    if (!rep.unique.empty()) rep.mean_fe = mean_free_energy(rep.unique);
    fd_histogram(rep.free_energies, rep.bin_edges, rep.bin_counts);
    return rep;
}

LandscapeReport landscape_report(const GrbmModel& m, const Matrix& initializations,
                                 const TapSettings& settings, double dedup_tol,
                                 std::size_t threads) {
    return landscape_report(to_dbm(m), initializations, settings, dedup_tol, threads);
}

}  // namespace taprbm
