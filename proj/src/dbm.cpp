#include "taprbm/dbm.hpp"

#include <chrono>
#include <iostream>
#include <random>

#include "taprbm/data_io.hpp"
#include "taprbm/errors.hpp"
#include "taprbm/likelihood.hpp"
#include "taprbm/parallel.hpp"

namespace taprbm {

TapSolution dbm_tap_run(const DbmModel& m, const Vector& init_a, const Vector& init_c,
                        const TapSettings& settings) {
    const TapRuntime rt = make_runtime(m);
    return run_fixed_point(rt, make_state(rt, init_a, init_c), settings);
}

DbmGradients dbm_gradients(const DbmModel& m, const Matrix& batch,
                           const std::vector<TapSolution>& clamped,
                           const std::vector<TapSolution>& free_solutions) {
    if (batch.rows() == 0) throw InputError("dbm_gradients: empty batch");
    if (free_solutions.empty()) throw InputError("dbm_gradients: no converged free solutions");
    if (clamped.size() != static_cast<std::size_t>(batch.rows())) {
        throw InputError("dbm_gradients: need one clamped solution per batch row");
    }
    const std::size_t n_layers = m.layers.size();
    const double inv_m = 1.0 / static_cast<double>(batch.rows());
    const double inv_k = 1.0 / static_cast<double>(free_solutions.size());

    DbmGradients g;
    g.d_w.reserve(m.weights.size());
    for (const auto& w : m.weights) g.d_w.push_back(Matrix::Zero(w.rows(), w.cols()));
    g.d_theta.resize(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) g.d_theta[l].assign(m.layers[l].size(), UnitGrad{});

    // data terms: visible priors at the raw rows, hidden sites at the clamped
    // cavity fields, couplings from clamped moments (visible variance is zero,
    // so the first coupling has no quadratic correction)
    for (Eigen::Index r = 0; r < batch.rows(); ++r) {
        const Vector x = batch.row(r).transpose();
        const TapState& cs = clamped[static_cast<std::size_t>(r)].state;
        for (std::size_t j = 0; j < m.layers[1].size(); ++j) {
            const LayerState& h1 = cs.layers[1];
            const UnitGrad gz = grad_log_z(m.layers[1][j], h1.cav_b(static_cast<Eigen::Index>(j)),
                                           h1.cav_a(static_cast<Eigen::Index>(j)));
            g.d_theta[1][j].d_u += inv_m * gz.d_u;
            g.d_theta[1][j].d_v += inv_m * gz.d_v;
            g.d_theta[1][j].d_rho += inv_m * gz.d_rho;
        }
        g.d_w[0].noalias() += inv_m * (x * cs.layers[1].a.transpose());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const std::size_t is = static_cast<std::size_t>(i);
            const UnitGrad gp = grad_log_prior(m.layers[0][is], x(i));
            g.d_theta[0][is].d_u += inv_m * gp.d_u;
            g.d_theta[0][is].d_v += inv_m * gp.d_v;
            g.d_theta[0][is].d_rho += inv_m * gp.d_rho;
        }
        for (std::size_t l = 2; l < n_layers; ++l) {
            const LayerState& lo = cs.layers[l - 1];
            const LayerState& hi = cs.layers[l];
            g.d_w[l - 1].noalias() += inv_m * (lo.a * hi.a.transpose());
            g.d_w[l - 1].array() +=
                inv_m * m.weights[l - 1].array() * (lo.c * hi.c.transpose()).array();
            for (std::size_t j = 0; j < m.layers[l].size(); ++j) {
                const UnitGrad gz =
                    grad_log_z(m.layers[l][j], hi.cav_b(static_cast<Eigen::Index>(j)),
                               hi.cav_a(static_cast<Eigen::Index>(j)));
                g.d_theta[l][j].d_u += inv_m * gz.d_u;
                g.d_theta[l][j].d_v += inv_m * gz.d_v;
                g.d_theta[l][j].d_rho += inv_m * gz.d_rho;
            }
        }
    }

    // model terms from the free fixed points
    for (const auto& sol : free_solutions) {
        for (std::size_t l = 0; l + 1 < n_layers; ++l) {
            const LayerState& lo = sol.state.layers[l];
            const LayerState& hi = sol.state.layers[l + 1];
            g.d_w[l].noalias() -= inv_k * (lo.a * hi.a.transpose());
            g.d_w[l].array() -= inv_k * m.weights[l].array() * (lo.c * hi.c.transpose()).array();
        }
        for (std::size_t l = 0; l < n_layers; ++l) {
            const LayerState& ls = sol.state.layers[l];
            for (std::size_t j = 0; j < m.layers[l].size(); ++j) {
                const UnitGrad gz = grad_log_z(m.layers[l][j],
                                               ls.cav_b(static_cast<Eigen::Index>(j)),
                                               ls.cav_a(static_cast<Eigen::Index>(j)));
                g.d_theta[l][j].d_u -= inv_k * gz.d_u;
                g.d_theta[l][j].d_v -= inv_k * gz.d_v;
                g.d_theta[l][j].d_rho -= inv_k * gz.d_rho;
            }
        }
    }
    return g;
}

namespace {

/// Propagates a dataset through one trained stage: conditional means by
/// default, seeded Bernoulli draws in sampling mode.
Matrix propagate(const GrbmModel& stage, const Matrix& data, bool sample, std::uint64_t seed) {
    Matrix h(data.rows(), stage.n_hidden());
    std::vector<PriorMoments> priors;
    priors.reserve(static_cast<std::size_t>(stage.n_hidden()));
    for (const auto& p : stage.hid) priors.push_back(prior_moments(p));
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        const Vector bt = stage.w.transpose() * data.row(r).transpose();
        for (Eigen::Index j = 0; j < stage.n_hidden(); ++j) {
            h(r, j) = conditional_mean(stage.hid[static_cast<std::size_t>(j)], bt(j),
                                       priors[static_cast<std::size_t>(j)]);
        }
    }
    if (sample) {
        for (const auto& p : stage.hid) {
            if (family_of(p) != UnitFamily::Binary) {
                throw InputError("sampled propagation requires binary hidden units");
            }
        }
        std::mt19937_64 gen(seed);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (Eigen::Index r = 0; r < h.rows(); ++r) {
            for (Eigen::Index j = 0; j < h.cols(); ++j) {
                h(r, j) = unif(gen) < h(r, j) ? 1.0 : 0.0;
            }
        }
    }
    return h;
}

}  // namespace

DbmModel pretrain_greedy(const std::vector<Eigen::Index>& hidden_sizes, UnitFamily vis_family,
                         UnitFamily hid_family, const Matrix& data, const TrainConfig& cfg,
                         bool sample_propagation) {
    if (hidden_sizes.empty()) throw InputError("pretrain_greedy: need at least one hidden layer");

    DbmModel out;
    Matrix activations = data;
    for (std::size_t stage = 0; stage < hidden_sizes.size(); ++stage) {
        const UnitFamily fam = (stage == 0) ? vis_family : hid_family;
        GrbmModel rbm = init_model(hidden_sizes[stage], fam, hid_family, activations, 1e-3,
                                   cfg.seed + stage);
        TrainConfig stage_cfg = cfg;
        stage_cfg.seed = cfg.seed + stage;
        train_epochs(rbm, activations, stage_cfg);
        if (stage == 0) {
            out.layers.push_back(rbm.vis);
        }
        out.layers.push_back(rbm.hid);
        out.weights.push_back(rbm.w);
        if (stage + 1 < hidden_sizes.size()) {
            activations = propagate(rbm, activations, sample_propagation, cfg.seed + 1000 + stage);
        }
    }
    validate(out);
    return out;
}

TrainResult train_dbm_joint(DbmModel& m, const Matrix& data, const TrainConfig& cfg,
                            const EpochCallback& on_epoch) {
    validate(cfg);
    validate(m);
    if (data.rows() == 0 || data.cols() != static_cast<Eigen::Index>(m.layers[0].size())) {
        throw InputError("train_dbm_joint: dataset shape mismatch");
    }

    const Eigen::Index n_monitor = std::min<Eigen::Index>(cfg.monitor_rows, data.rows());
    const Matrix monitor = data.topRows(n_monitor);
    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };

    auto metrics_for = [&](int epoch, int skipped) {
        EpochMetrics em;
        em.epoch = epoch;
        em.n_skipped_batches = skipped;
        const LandscapeReport rep = landscape_report(m, monitor, cfg.tap, 1e-4, cfg.threads);
        em.n_unique = rep.n_unique;
        em.mean_fe = rep.mean_fe;
        if (!rep.unique.empty()) {
            std::vector<double> lls(static_cast<std::size_t>(monitor.rows()));
            parallel_for(lls.size(), cfg.threads, [&](std::size_t r) {
                lls[r] = normalized_tap_log_likelihood(
                    m, monitor.row(static_cast<Eigen::Index>(r)).transpose(), rep.unique,
                    cfg.tap);
            });
            double s = 0.0;
            for (double v : lls) s += v;
            em.nll_per_unit = s / static_cast<double>(lls.size());
        }
        em.wall_time_s = elapsed();
        return em;
    };

    TrainResult result;
    EpochMetrics initial = metrics_for(0, 0);
    if (on_epoch) on_epoch(initial);
    result.metrics.push_back(initial);

    std::vector<Matrix> velocity;
    velocity.reserve(m.weights.size());
    for (const auto& w : m.weights) velocity.push_back(Matrix::Zero(w.rows(), w.cols()));

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

            const TapRuntime rt_free = make_runtime(m);
            std::vector<TapSolution> runs(static_cast<std::size_t>(cfg.k_solutions));
            parallel_for(runs.size(), cfg.threads, [&](std::size_t k) {
                const Eigen::Index row = static_cast<Eigen::Index>(k % batch_idx.size());
                const Vector init = batch.row(row).transpose();
                runs[k] = run_fixed_point(rt_free, make_state(rt_free, init,
                                                              Vector::Zero(init.size())),
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

            std::vector<TapSolution> clamped(static_cast<std::size_t>(batch.rows()));
            parallel_for(clamped.size(), cfg.threads, [&](std::size_t r) {
                clamped[r] =
                    run_clamped_tap(m, batch.row(static_cast<Eigen::Index>(r)).transpose(),
                                    cfg.tap);
            });

            const DbmGradients g = dbm_gradients(m, batch, clamped, converged);
            for (std::size_t l = 0; l < m.weights.size(); ++l) {
                velocity[l] = cfg.eta * velocity[l];
                velocity[l].noalias() += gamma * g.d_w[l];
                velocity[l].noalias() -= (gamma * cfg.epsilon) * m.weights[l];
                m.weights[l] += velocity[l];
            }
            for (std::size_t l = 0; l < m.layers.size(); ++l) {
                for (std::size_t j = 0; j < m.layers[l].size(); ++j) {
                    apply_grad(m.layers[l][j], g.d_theta[l][j], gamma);
                }
            }
        }

        EpochMetrics em = metrics_for(epoch, skipped);
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
