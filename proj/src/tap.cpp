#include "taprbm/tap.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "taprbm/errors.hpp"

namespace taprbm {

namespace {

std::vector<PriorMoments> layer_priors(const std::vector<UnitParams>& params) {
    std::vector<PriorMoments> out;
    out.reserve(params.size());
    for (const auto& p : params) out.push_back(prior_moments(p));
    return out;
}

TapRuntime runtime_from(std::vector<const std::vector<UnitParams>*> params,
                        std::vector<const Matrix*> w) {
    TapRuntime rt;
    rt.params = std::move(params);
    rt.w = std::move(w);
    rt.w2.reserve(rt.w.size());
    for (const Matrix* m : rt.w) rt.w2.push_back(m->array().square().matrix());
    rt.priors.reserve(rt.params.size());
    for (const auto* layer : rt.params) rt.priors.push_back(layer_priors(*layer));
    return rt;
}

// Cavity closures for one layer given current neighbor moments.
void cavity_fields(const TapRuntime& rt, const TapState& state, std::size_t l, Vector& b,
                   Vector& a) {
    const Eigen::Index n = static_cast<Eigen::Index>(rt.params[l]->size());
    a = Vector::Zero(n);
    b = Vector::Zero(n);
    if (l > 0) {
        a.noalias() -= rt.w2[l - 1].transpose() * state.layers[l - 1].c;
        b.noalias() += rt.w[l - 1]->transpose() * state.layers[l - 1].a;
    }
    if (l + 1 < rt.n_layers()) {
        a.noalias() -= rt.w2[l] * state.layers[l + 1].c;
        b.noalias() += (*rt.w[l]) * state.layers[l + 1].a;
    }
    b.array() += a.array() * state.layers[l].a.array();  // Onsager term on the old moments
}

}  // namespace

TapRuntime make_runtime(const GrbmModel& m) {
    return runtime_from({&m.vis, &m.hid}, {&m.w});
}

TapRuntime make_runtime(const DbmModel& m) {
    std::vector<const std::vector<UnitParams>*> params;
    std::vector<const Matrix*> w;
    for (const auto& layer : m.layers) params.push_back(&layer);
    for (const auto& mat : m.weights) w.push_back(&mat);
    return runtime_from(std::move(params), std::move(w));
}

TapState make_state(const TapRuntime& rt, const Vector& init_a, const Vector& init_c) {
    const Eigen::Index n_vis = static_cast<Eigen::Index>(rt.params[0]->size());
    if (init_a.size() != n_vis || init_c.size() != n_vis) {
        throw InputError("initial state must be sized to the visible layer");
    }
    if (!init_a.allFinite() || !init_c.allFinite()) {
        throw InputError("initial state must be finite");
    }
    TapState st;
    st.layers.resize(rt.n_layers());
    st.layers[0].a = init_a;
    st.layers[0].c = init_c;
    st.layers[0].cav_b = Vector::Zero(n_vis);
    st.layers[0].cav_a = Vector::Zero(n_vis);
    for (std::size_t l = 1; l < rt.n_layers(); ++l) {
        const Eigen::Index n = static_cast<Eigen::Index>(rt.params[l]->size());
        LayerState& ls = st.layers[l];
        ls.a.resize(n);
        ls.c.resize(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const PriorMoments& pm = rt.priors[l][static_cast<std::size_t>(j)];
            ls.a(j) = pm.mean;
            ls.c(j) = pm.second - pm.mean * pm.mean;
        }
        ls.cav_b = Vector::Zero(n);
        ls.cav_a = Vector::Zero(n);
    }
    return st;
}

double sweep(const TapRuntime& rt, TapState& state, double damping) {
    double sq_change = 0.0;
    std::size_t n_sites = 0;
    Vector b, a;
    for (int parity : {1, 0}) {
        for (std::size_t l = (parity == 1) ? 1 : 0; l < rt.n_layers(); l += 2) {
            if (l == 0 && rt.clamp_visible) continue;
            cavity_fields(rt, state, l, b, a);
            LayerState& ls = state.layers[l];
            const auto& params = *rt.params[l];
            for (Eigen::Index j = 0; j < b.size(); ++j) {
                TiltedMoments tm;
                try {
                    tm = tilted_moments(params[static_cast<std::size_t>(j)], b(j), a(j),
                                        rt.priors[l][static_cast<std::size_t>(j)]);
                } catch (const NumericalError& e) {
                    throw NumericalError("layer " + std::to_string(l) + " site " +
                                             std::to_string(j) + ": " + e.what(),
                                         e.field_b, e.precision_a);
                }
                const double da = tm.a - ls.a(j);
                sq_change += da * da;
                ls.a(j) = (1.0 - damping) * tm.a + damping * ls.a(j);
                ls.c(j) = (1.0 - damping) * tm.c + damping * ls.c(j);
            }
            ls.cav_b = b;
            ls.cav_a = a;
            n_sites += static_cast<std::size_t>(b.size());
        }
    }
    return sq_change / static_cast<double>(n_sites);
}

TapSolution run_fixed_point(const TapRuntime& rt, TapState state, const TapSettings& settings) {
    if (!(settings.tolerance > 0.0)) throw InputError("tolerance must be positive");
    if (settings.damping < 0.0 || settings.damping >= 1.0) {
        throw InputError("damping must lie in [0, 1)");
    }
    TapSolution sol;
    sol.residual = std::numeric_limits<double>::infinity();
    for (int it = 0; it < settings.max_iters; ++it) {
        sol.residual = sweep(rt, state, settings.damping);
        ++sol.iterations;
        if (sol.residual <= settings.tolerance) {
            sol.converged = true;
            break;
        }
    }
    if (sol.converged) {
        // Undamped polish sweeps: the damped iterate stalls a factor
        // ~sqrt(tolerance) short of the fixed point, so the stopping residual
        // alone does not pin the solution. A couple of full steps close that
        // gap without leaving the basin.
        for (int extra = 0; extra < 4 && sol.residual > 1e-4 * settings.tolerance; ++extra) {
            sol.residual = sweep(rt, state, 0.0);
            ++sol.iterations;
        }
    }
    sol.state = std::move(state);
    sol.free_energy = free_energy(rt, sol.state);
    return sol;
}

double free_energy(const TapRuntime& rt, const TapState& state) {
    double neg_f = 0.0;
    Vector b, a;
    for (std::size_t l = 0; l < rt.n_layers(); ++l) {
        if (l == 0 && rt.clamp_visible) continue;
        cavity_fields(rt, state, l, b, a);
        const auto& params = *rt.params[l];
        const LayerState& ls = state.layers[l];
        for (Eigen::Index j = 0; j < b.size(); ++j) {
            const TiltedMoments tm = tilted_moments(params[static_cast<std::size_t>(j)], b(j),
                                                    a(j), rt.priors[l][static_cast<std::size_t>(j)]);
            neg_f += tm.log_z - b(j) * ls.a(j) +
                     0.5 * a(j) * (ls.a(j) * ls.a(j) + ls.c(j));
        }
    }
    for (std::size_t l = 0; l + 1 < rt.n_layers(); ++l) {
        const LayerState& lo = state.layers[l];
        const LayerState& hi = state.layers[l + 1];
        neg_f += lo.a.dot((*rt.w[l]) * hi.a);
        neg_f += 0.5 * lo.c.dot(rt.w2[l] * hi.c);
    }
    return -neg_f;
}

TapState tap_step(const GrbmModel& m, const TapState& state, double damping) {
    const TapRuntime rt = make_runtime(m);
    TapState next = state;
    sweep(rt, next, damping);
    return next;
}

TapSolution run_tap(const GrbmModel& m, const Vector& init_a, const Vector& init_c,
                    const TapSettings& settings) {
    const TapRuntime rt = make_runtime(m);
    return run_fixed_point(rt, make_state(rt, init_a, init_c), settings);
}

double free_energy_rbm(const GrbmModel& m, const TapState& state) {
    const TapRuntime rt = make_runtime(m);
    return free_energy(rt, state);
}

TapSolution run_clamped_tap(const DbmModel& m, const Vector& x, const TapSettings& settings) {
    TapRuntime rt = make_runtime(m);
    rt.clamp_visible = true;
    TapState st = make_state(rt, x, Vector::Zero(x.size()));
    return run_fixed_point(rt, std::move(st), settings);
}

std::vector<TapSolution> dedup_solutions(const std::vector<TapSolution>& solutions, double tol) {
    std::vector<TapSolution> unique;
    for (const auto& s : solutions) {
        bool seen = false;
        for (const auto& u : unique) {
            double max_diff = 0.0;
            for (std::size_t l = 0; l < s.state.layers.size(); ++l) {
                max_diff = std::max(
                    max_diff,
                    (s.state.layers[l].a - u.state.layers[l].a).cwiseAbs().maxCoeff());
            }
            if (max_diff < tol) {
                seen = true;
                break;
            }
        }
        if (!seen) unique.push_back(s);
    }
    return unique;
}

void export_solutions(std::ostream& out, const std::vector<TapSolution>& solutions) {
    out << "# id converged iterations residual free_energy";
    if (!solutions.empty()) {
        for (std::size_t l = 0; l < solutions.front().state.layers.size(); ++l) {
            const auto n = solutions.front().state.layers[l].a.size();
            out << " a" << l << "[" << n << "] c" << l << "[" << n << "]";
        }
    }
    out << "\n";
    out.precision(17);
    for (std::size_t i = 0; i < solutions.size(); ++i) {
        const TapSolution& s = solutions[i];
        out << i << ' ' << (s.converged ? 1 : 0) << ' ' << s.iterations << ' ' << s.residual
            << ' ' << s.free_energy;
        for (const auto& layer : s.state.layers) {
            for (Eigen::Index j = 0; j < layer.a.size(); ++j) out << ' ' << layer.a(j);
            for (Eigen::Index j = 0; j < layer.c.size(); ++j) out << ' ' << layer.c(j);
        }
        out << '\n';
    }
}

}  // namespace taprbm
