#include "taprbm/training.hpp"

#include <algorithm>
#include <chrono>
#include <iostream>
#include <cmath>

#include "taprbm/data_io.hpp"
#include "taprbm/errors.hpp"
#include "taprbm/likelihood.hpp"
#include "taprbm/parallel.hpp"

namespace taprbm {

void validate(const TrainConfig& cfg) {
    if (cfg.gamma < 0.0) throw InputError("learning rate must be non-negative");
    if (cfg.eta < 0.0 || cfg.eta >= 1.0) throw InputError("momentum must lie in [0, 1)");
    if (cfg.batch_size < 1) throw InputError("batch size must be >= 1");
    if (cfg.k_solutions < 1) throw InputError("K must be >= 1");
    if (cfg.epochs < 0) throw InputError("epoch count must be >= 0");
    if (cfg.monitor_rows < 1) throw InputError("monitoring subset must be >= 1 row");
}

GradientSet compute_gradients(const GrbmModel& m, const Matrix& batch,
                              const std::vector<TapSolution>& solutions) {
    if (batch.rows() == 0) throw InputError("compute_gradients: empty batch");
    if (solutions.empty()) throw InputError("compute_gradients: no converged solutions");
    if (batch.cols() != m.n_visible()) throw InputError("compute_gradients: shape mismatch");

    const Eigen::Index n_v = m.n_visible();
    const Eigen::Index n_h = m.n_hidden();
    const Eigen::Index n_rows = batch.rows();
    const double inv_m = 1.0 / static_cast<double>(n_rows);
    const double inv_k = 1.0 / static_cast<double>(solutions.size());

    std::vector<PriorMoments> hid_priors, vis_priors;
    hid_priors.reserve(static_cast<std::size_t>(n_h));
    for (const auto& p : m.hid) hid_priors.push_back(prior_moments(p));
    vis_priors.reserve(static_cast<std::size_t>(n_v));
    for (const auto& p : m.vis) vis_priors.push_back(prior_moments(p));

    GradientSet g;
    g.d_w = Matrix::Zero(n_v, n_h);
    g.d_vis.assign(static_cast<std::size_t>(n_v), UnitGrad{});
    g.d_hid.assign(static_cast<std::size_t>(n_h), UnitGrad{});

    // data terms, row by row (matches the clamped inference arithmetic)
    Vector f_row(n_h);
    for (Eigen::Index r = 0; r < n_rows; ++r) {
        const Vector x = batch.row(r).transpose();
        const Vector bt = m.w.transpose() * x;
        for (Eigen::Index j = 0; j < n_h; ++j) {
            const std::size_t js = static_cast<std::size_t>(j);
            const TiltedMoments tm = tilted_moments(m.hid[js], bt(j), 0.0, hid_priors[js]);
            f_row(j) = tm.a;
            const UnitGrad gz = grad_log_z(m.hid[js], bt(j), 0.0);
            g.d_hid[js].d_u += inv_m * gz.d_u;
            g.d_hid[js].d_v += inv_m * gz.d_v;
            g.d_hid[js].d_rho += inv_m * gz.d_rho;
        }
        g.d_w.noalias() += inv_m * (x * f_row.transpose());
        for (Eigen::Index i = 0; i < n_v; ++i) {
            const std::size_t is = static_cast<std::size_t>(i);
            const UnitGrad gp = grad_log_prior(m.vis[is], x(i));
            g.d_vis[is].d_u += inv_m * gp.d_u;
            g.d_vis[is].d_v += inv_m * gp.d_v;
            g.d_vis[is].d_rho += inv_m * gp.d_rho;
        }
    }

    // model terms from the fixed points
    for (const auto& sol : solutions) {
        const LayerState& v = sol.state.layers[0];
        const LayerState& h = sol.state.layers[1];
        g.d_w.noalias() -= inv_k * (v.a * h.a.transpose());
        g.d_w.array() -= inv_k * m.w.array() * (v.c * h.c.transpose()).array();
        for (Eigen::Index j = 0; j < n_h; ++j) {
            const std::size_t js = static_cast<std::size_t>(j);
            const UnitGrad gz = grad_log_z(m.hid[js], h.cav_b(j), h.cav_a(j));
            g.d_hid[js].d_u -= inv_k * gz.d_u;
            g.d_hid[js].d_v -= inv_k * gz.d_v;
            g.d_hid[js].d_rho -= inv_k * gz.d_rho;
        }
        for (Eigen::Index i = 0; i < n_v; ++i) {
            const std::size_t is = static_cast<std::size_t>(i);
            const UnitGrad gz = grad_log_z(m.vis[is], v.cav_b(i), v.cav_a(i));
            g.d_vis[is].d_u -= inv_k * gz.d_u;
            g.d_vis[is].d_v -= inv_k * gz.d_v;
            g.d_vis[is].d_rho -= inv_k * gz.d_rho;
        }
    }
    return g;
}

void apply_grad(UnitParams& p, const UnitGrad& g, double gamma) {
    std::visit(
        [&](auto& q) {
            using T = std::decay_t<decltype(q)>;
            q.u += gamma * g.d_u;
            if constexpr (!std::is_same_v<T, BinaryParams>) {
                q.v += gamma * g.d_v;
            }
            if constexpr (std::is_same_v<T, TgbParams>) {
                q.rho = std::clamp(q.rho + gamma * g.d_rho, 1e-6, 1.0 - 1e-6);
            }
        },
        p);
}

namespace {

EpochMetrics monitor_metrics(const GrbmModel& m, const Matrix& monitor, const TrainConfig& cfg,
                             int epoch, int skipped, double wall_s) {
    EpochMetrics em;
    em.epoch = epoch;
    em.n_skipped_batches = skipped;
    em.wall_time_s = wall_s;
    const DbmModel dbm = to_dbm(m);
    const LandscapeReport rep =
        landscape_report(dbm, monitor, cfg.tap, 1e-4, cfg.threads);
    em.n_unique = rep.n_unique;
    em.mean_fe = rep.mean_fe;
    if (!rep.unique.empty()) {
        std::vector<double> lls(static_cast<std::size_t>(monitor.rows()));
        parallel_for(lls.size(), cfg.threads, [&](std::size_t r) {
            lls[r] = normalized_tap_log_likelihood(
                dbm, monitor.row(static_cast<Eigen::Index>(r)).transpose(), rep.unique, cfg.tap);
        });
        double s = 0.0;
        for (double v : lls) s += v;
        em.nll_per_unit = s / static_cast<double>(lls.size());
    }
    return em;
}

}  // namespace

TrainResult train_epochs(GrbmModel& m, const Matrix& data, const TrainConfig& cfg,
                         const EpochCallback& on_epoch) {
    validate(cfg);
    validate(m);
    if (data.rows() == 0 || data.cols() != m.n_visible()) {
        throw InputError("train_epochs: dataset shape mismatch");
    }

    const Eigen::Index n_monitor = std::min<Eigen::Index>(cfg.monitor_rows, data.rows());
    const Matrix monitor = data.topRows(n_monitor);

    TrainResult result;
    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };

    EpochMetrics initial = monitor_metrics(m, monitor, cfg, 0, 0, elapsed());
    if (on_epoch) on_epoch(initial);
    result.metrics.push_back(initial);

    Matrix velocity = Matrix::Zero(m.w.rows(), m.w.cols());
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double gamma =
            (cfg.gamma_final > 0.0 && cfg.epochs > 1)
                ? cfg.gamma + (cfg.gamma_final - cfg.gamma) * (epoch - 1) / (cfg.epochs - 1)
                : cfg.gamma;
        int skipped = 0;
        const auto batches =
            minibatches(data.rows(), cfg.batch_size, cfg.seed, static_cast<std::uint64_t>(epoch));
        for (const auto& batch_idx : batches) {
            Matrix batch(static_cast<Eigen::Index>(batch_idx.size()), data.cols());
            for (std::size_t r = 0; r < batch_idx.size(); ++r) {
                batch.row(static_cast<Eigen::Index>(r)) = data.row(batch_idx[r]);
            }

            // K fixed-point runs initialized from the batch rows, cycling
            const TapRuntime rt = make_runtime(m);
            std::vector<TapSolution> runs(static_cast<std::size_t>(cfg.k_solutions));
            parallel_for(runs.size(), cfg.threads, [&](std::size_t k) {
                const Eigen::Index row = static_cast<Eigen::Index>(k % batch_idx.size());
                const Vector init = batch.row(row).transpose();
                runs[k] = run_fixed_point(rt, make_state(rt, init, Vector::Zero(init.size())),
                                          cfg.tap);
            });
            std::vector<TapSolution> converged;
            converged.reserve(runs.size());
            for (auto& r : runs) {
                if (r.converged) converged.push_back(std::move(r));
            }
            if (converged.empty()) {
                ++skipped;
                continue;
            }

            const GradientSet g = compute_gradients(m, batch, converged);
            velocity = cfg.eta * velocity;
            velocity.noalias() += gamma * g.d_w;
            velocity.noalias() -= (gamma * cfg.epsilon) * m.w;  // R(W) = -W decay
            m.w += velocity;
            for (Eigen::Index i = 0; i < m.n_visible(); ++i) {
                apply_grad(m.vis[static_cast<std::size_t>(i)],
                           g.d_vis[static_cast<std::size_t>(i)], gamma);
            }
            for (Eigen::Index j = 0; j < m.n_hidden(); ++j) {
                apply_grad(m.hid[static_cast<std::size_t>(j)],
                           g.d_hid[static_cast<std::size_t>(j)], gamma);
            }
        }

        EpochMetrics em = monitor_metrics(m, monitor, cfg, epoch, skipped, elapsed());
        if (on_epoch) on_epoch(em);
        result.metrics.push_back(em);

        if (cfg.checkpoint_every > 0 && !cfg.checkpoint_dir.empty() &&
            epoch % cfg.checkpoint_every == 0) {
            try {
                ModelMeta meta;
                meta.epoch = static_cast<std::uint32_t>(epoch);
                meta.seed = cfg.seed;
                save_model(m, cfg.checkpoint_dir + "/model_epoch_" + std::to_string(epoch) +
                                  ".tapm",
                           meta);
            } catch (const IoError& err) {
                // checkpoint failures are non-fatal
                std::cerr << "checkpoint failed: " << err.what() << "\n";
            }
        }
    }
    return result;
}

}  // namespace taprbm
