#include "taprbm/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "taprbm/adatap.hpp"
#include "taprbm/data_io.hpp"
#include "taprbm/dbm.hpp"
#include "taprbm/denoise.hpp"
#include "taprbm/errors.hpp"
#include "taprbm/likelihood.hpp"
#include "taprbm/model.hpp"
#include "taprbm/parallel.hpp"
#include "taprbm/training.hpp"

namespace taprbm {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kToolVersion = "1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

// ---------------------------------------------------------------------------
// shared option bundles

struct DataOpts {
    std::string path;
    std::string format = "idx";  // idx | csv
    std::string mode = "binarize";  // binarize | normalize | raw
    bool header = false;
    bool rescale = false;
    long limit = 0;  // 0 = all rows
};

struct RunOpts {
    std::string out_dir;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    double damping = 0.5;
    double tol = 1e-8;
    int max_iters = 2000;
};

void add_data_opts(CLI::App* cmd, DataOpts& d, const std::string& flag = "--data",
                   bool required = true) {
    auto* opt = cmd->add_option(flag, d.path, "dataset path");
    if (required) opt->required();
    cmd->add_option("--format", d.format, "dataset container: idx or csv")
        ->check(CLI::IsMember({"idx", "csv"}))
        ->capture_default_str();
    cmd->add_option("--mode", d.mode, "preprocessing: binarize, normalize or raw")
        ->check(CLI::IsMember({"binarize", "normalize", "raw"}))
        ->capture_default_str();
    cmd->add_flag("--header", d.header, "csv carries a header line");
    cmd->add_flag("--rescale", d.rescale, "rescale csv values into [0,1] by the global max");
    cmd->add_option("--limit", d.limit, "cap the number of rows (0 = all)")
        ->capture_default_str();
}

void add_run_opts(CLI::App* cmd, RunOpts& r, double default_damping) {
    r.damping = default_damping;
    cmd->add_option("--out", r.out_dir, "output directory for this run")->required();
    cmd->add_option("--seed", r.seed, "random seed")->capture_default_str();
    cmd->add_option("--threads", r.threads, "worker cap (0 = auto, or TAPRBM_THREADS)")
        ->capture_default_str();
    cmd->add_option("--damping", r.damping, "fixed-point damping in [0,1)")
        ->capture_default_str();
    cmd->add_option("--tol", r.tol, "fixed-point tolerance (MSE of magnetizations)")
        ->capture_default_str();
    cmd->add_option("--max-iters", r.max_iters, "fixed-point iteration cap")
        ->capture_default_str();
}

TapSettings tap_settings(const RunOpts& r) { return {r.max_iters, r.tol, r.damping}; }

Matrix load_matrix(const DataOpts& d) {
    Dataset ds;
    if (d.format == "idx") {
        const IdxTensor raw = read_idx(d.path);
        ds = preprocess(raw, d.mode == "normalize" || d.mode == "raw" ? Preprocess::Normalize01
                                                                      : Preprocess::Binarize);
    } else {
        ds = read_delimited(d.path, d.header, d.rescale);
        if (d.mode == "binarize") ds.rows = binarize(ds.rows);
    }
    if (d.limit > 0 && ds.rows.rows() > d.limit) {
        ds.rows = ds.rows.topRows(d.limit).eval();
    }
    return ds.rows;
}

UnitFamily parse_family(const std::string& name) {
    if (name == "binary") return UnitFamily::Binary;
    if (name == "tgauss") return UnitFamily::TruncGauss;
    if (name == "tgb") return UnitFamily::TruncGaussBernoulli;
    throw CLI::ValidationError("--vis-prior/--hid-prior",
                               "unknown prior family '" + name + "'");
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory: " + dir);
}

void write_manifest(const std::string& dir, const std::string& command,
                    const std::vector<std::string>& argv_rest, const json& resolved) {
    json m;
    m["tool"] = "taprbm";
    m["version"] = kToolVersion;
    m["command"] = command;
    m["argv"] = argv_rest;
    m["resolved"] = resolved;
    std::ofstream out(dir + "/manifest.json");
    if (!out) throw IoError("cannot write manifest in " + dir);
    out << m.dump(2) << "\n";
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.precision(17);
    return out;
}

void append_metrics_line(std::ostream& out, const EpochMetrics& em) {
    out << "epoch=" << em.epoch << " nll_per_unit=" << em.nll_per_unit
        << " mean_fe=" << em.mean_fe << " n_unique=" << em.n_unique
        << " skipped=" << em.n_skipped_batches << " wall_time=" << em.wall_time_s << "\n";
    out.flush();
}

// ---------------------------------------------------------------------------
// train

struct TrainCmd {
    DataOpts data;
    RunOpts run;
    long n_hidden = 25;
    std::string vis_prior = "binary";
    std::string hid_prior = "binary";
    int epochs = 5;
    double lr = 0.005;
    double lr_final = 0.0;
    double l2 = 0.001;
    double momentum = 0.5;
    int batch = 100;
    int k = 100;
    double sigma = 1e-3;
    int monitor_rows = 1000;
    int checkpoint_every = 0;
};

json train_resolved(const TrainCmd& c) {
    json j;
    j["data"] = c.data.path;
    j["format"] = c.data.format;
    j["mode"] = c.data.mode;
    j["header"] = c.data.header;
    j["rescale"] = c.data.rescale;
    j["limit"] = c.data.limit;
    j["nh"] = c.n_hidden;
    j["vis_prior"] = c.vis_prior;
    j["hid_prior"] = c.hid_prior;
    j["epochs"] = c.epochs;
    j["lr"] = c.lr;
    j["lr_final"] = c.lr_final;
    j["l2"] = c.l2;
    j["momentum"] = c.momentum;
    j["batch"] = c.batch;
    j["k"] = c.k;
    j["sigma"] = c.sigma;
    j["monitor_rows"] = c.monitor_rows;
    j["checkpoint_every"] = c.checkpoint_every;
    j["seed"] = c.run.seed;
    j["damping"] = c.run.damping;
    j["tol"] = c.run.tol;
    j["max_iters"] = c.run.max_iters;
    return j;
}

TrainConfig train_config(const TrainCmd& c) {
    TrainConfig cfg;
    cfg.gamma = c.lr;
    cfg.gamma_final = c.lr_final;
    cfg.epsilon = c.l2;
    cfg.eta = c.momentum;
    cfg.batch_size = c.batch;
    cfg.k_solutions = c.k;
    cfg.epochs = c.epochs;
    cfg.seed = c.run.seed;
    cfg.tap = tap_settings(c.run);
    cfg.monitor_rows = c.monitor_rows;
    cfg.checkpoint_every = c.checkpoint_every;
    cfg.threads = c.run.threads;
    return cfg;
}

int cmd_train(const TrainCmd& c, const std::vector<std::string>& argv_rest) {
    ensure_dir(c.run.out_dir);
    const json resolved = train_resolved(c);
    write_manifest(c.run.out_dir, "train", argv_rest, resolved);

    const Matrix rows = load_matrix(c.data);
    TrainConfig cfg = train_config(c);
    cfg.checkpoint_dir = c.run.out_dir;

    GrbmModel model = init_model(c.n_hidden, parse_family(c.vis_prior),
                                 parse_family(c.hid_prior), rows, c.sigma, cfg.seed);

    std::ofstream log = open_out(c.run.out_dir + "/metrics.log");
    if (cfg.epochs > 0) {
        train_epochs(model, rows, cfg,
                     [&](const EpochMetrics& em) { append_metrics_line(log, em); });
    }

    ModelMeta meta;
    meta.epoch = static_cast<std::uint32_t>(cfg.epochs);
    meta.seed = cfg.seed;
    meta.config_hash = fnv1a(resolved.dump());
    save_model(model, c.run.out_dir + "/model.tapm", meta);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalCmd {
    DataOpts data;
    RunOpts run;
    std::string model_path;
    int k_inits = 1000;
};

int cmd_eval(const EvalCmd& c, const std::vector<std::string>& argv_rest) {
    ensure_dir(c.run.out_dir);
    json resolved;
    resolved["data"] = c.data.path;
    resolved["model"] = c.model_path;
    resolved["k_inits"] = c.k_inits;
    resolved["seed"] = c.run.seed;
    resolved["damping"] = c.run.damping;
    resolved["tol"] = c.run.tol;
    resolved["max_iters"] = c.run.max_iters;
    write_manifest(c.run.out_dir, "eval", argv_rest, resolved);

    const Matrix rows = load_matrix(c.data);
    const DbmModel model = load_model(c.model_path).model;
    const TapSettings ts = tap_settings(c.run);

    const Eigen::Index n_inits = std::min<Eigen::Index>(c.k_inits, rows.rows());
    const LandscapeReport rep =
        landscape_report(model, rows.topRows(n_inits), ts, 1e-4, c.run.threads);
    if (rep.unique.empty()) {
        throw NumericalError("no converged solutions to score against", 0.0, 0.0);
    }

    const double units = static_cast<double>(total_units(model));
    std::vector<double> lls(static_cast<std::size_t>(rows.rows()));
    parallel_for(lls.size(), c.run.threads, [&](std::size_t r) {
        lls[r] = tap_log_likelihood(model, rows.row(static_cast<Eigen::Index>(r)).transpose(),
                                    rep.unique, ts);
    });

    std::ofstream per_row = open_out(c.run.out_dir + "/scores.csv");
    per_row << "row,ll_nats,ll_per_unit\n";
    double sum = 0.0;
    for (std::size_t r = 0; r < lls.size(); ++r) {
        per_row << r << ',' << lls[r] << ',' << lls[r] / units << "\n";
        sum += lls[r];
    }
    std::ofstream agg = open_out(c.run.out_dir + "/aggregate.csv");
    agg << "n_rows,n_unique_solutions,mean_ll_nats,mean_ll_per_unit\n";
    agg << lls.size() << ',' << rep.n_unique << ',' << sum / static_cast<double>(lls.size())
        << ',' << sum / static_cast<double>(lls.size()) / units << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// landscape

struct LandscapeCmd {
    DataOpts data;
    RunOpts run;
    std::string model_path;
    double dedup_tol = 1e-4;
};

int cmd_landscape(const LandscapeCmd& c, const std::vector<std::string>& argv_rest) {
    ensure_dir(c.run.out_dir);
    json resolved;
    resolved["data"] = c.data.path;
    resolved["model"] = c.model_path;
    resolved["dedup_tol"] = c.dedup_tol;
    resolved["seed"] = c.run.seed;
    resolved["damping"] = c.run.damping;
    resolved["tol"] = c.run.tol;
    resolved["max_iters"] = c.run.max_iters;
    write_manifest(c.run.out_dir, "landscape", argv_rest, resolved);

    const Matrix rows = load_matrix(c.data);
    const DbmModel model = load_model(c.model_path).model;
    const LandscapeReport rep =
        landscape_report(model, rows, tap_settings(c.run), c.dedup_tol, c.run.threads);

    json rj;
    rj["n_initializations"] = rep.n_initializations;
    rj["n_converged"] = rep.n_converged;
    rj["n_unique"] = rep.n_unique;
    rj["mean_free_energy"] = rep.mean_fe;
    rj["free_energies"] = rep.free_energies;
    rj["histogram"] = {{"edges", rep.bin_edges}, {"counts", rep.bin_counts}};
    std::ofstream rep_out = open_out(c.run.out_dir + "/report.json");
    rep_out << rj.dump(2) << "\n";

    std::ofstream sols = open_out(c.run.out_dir + "/solutions.txt");
    export_solutions(sols, rep.unique);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// denoise

struct DenoiseCmd {
    DataOpts data;  // clean rows to corrupt and recover
    RunOpts run;
    std::string model_path;
    std::string exemplars_path;  // optional: 1-NN pool and OPE magnetizations
    std::vector<double> p_grid = {0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5};
    std::vector<std::string> methods = {"ope", "knn", "tap"};
};

int cmd_denoise(const DenoiseCmd& c, const std::vector<std::string>& argv_rest) {
    ensure_dir(c.run.out_dir);
    json resolved;
    resolved["data"] = c.data.path;
    resolved["model"] = c.model_path;
    resolved["exemplars"] = c.exemplars_path;
    resolved["p_grid"] = c.p_grid;
    resolved["methods"] = c.methods;
    resolved["seed"] = c.run.seed;
    resolved["damping"] = c.run.damping;
    resolved["tol"] = c.run.tol;
    resolved["max_iters"] = c.run.max_iters;
    write_manifest(c.run.out_dir, "denoise", argv_rest, resolved);

    const Matrix rows = load_matrix(c.data);
    const GrbmModel model = to_grbm(load_model(c.model_path).model);
    const TapSettings ts = tap_settings(c.run);

    Matrix exemplars;
    Vector mags(model.n_visible());
    if (!c.exemplars_path.empty()) {
        DataOpts ex = c.data;
        ex.path = c.exemplars_path;
        exemplars = load_matrix(ex);
        for (Eigen::Index i = 0; i < mags.size(); ++i) mags(i) = exemplars.col(i).mean();
    } else {
        for (Eigen::Index i = 0; i < mags.size(); ++i) {
            mags(i) = prior_moments(model.vis[static_cast<std::size_t>(i)]).mean;
        }
    }

    std::vector<std::string> methods = c.methods;
    if (exemplars.rows() == 0) {
        std::erase(methods, std::string("knn"));
    }

    std::ofstream per_sample = open_out(c.run.out_dir + "/per_sample.csv");
    per_sample << "p,method,row,mcc\n";
    std::ofstream curve = open_out(c.run.out_dir + "/mcc_vs_p.csv");
    curve << "p,method,mean_mcc\n";

    for (double p : c.p_grid) {
        // one corruption draw per row, shared across methods
        std::vector<Vector> noisy(static_cast<std::size_t>(rows.rows()));
        for (Eigen::Index r = 0; r < rows.rows(); ++r) {
            noisy[static_cast<std::size_t>(r)] =
                corrupt_bsc(rows.row(r).transpose(), p,
                            c.run.seed + 7919 * static_cast<std::uint64_t>(r) +
                                static_cast<std::uint64_t>(p * 1e6));
        }
        for (const std::string& method : methods) {
            std::vector<double> sample_mcc(static_cast<std::size_t>(rows.rows()));
            parallel_for(sample_mcc.size(), c.run.threads, [&](std::size_t r) {
                const Vector truth = rows.row(static_cast<Eigen::Index>(r)).transpose();
                DenoiseResult res;
                if (method == "ope") {
                    res = ope_denoise(noisy[r], mags, p);
                } else if (method == "knn") {
                    res = knn_denoise(noisy[r], exemplars);
                } else {
                    res = tap_denoise(model, noisy[r], p, ts);
                }
                sample_mcc[r] = mcc(res.estimate, truth);
            });
            double mean = 0.0;
            for (std::size_t r = 0; r < sample_mcc.size(); ++r) {
                per_sample << p << ',' << method << ',' << r << ',' << sample_mcc[r] << "\n";
                mean += sample_mcc[r];
            }
            curve << p << ',' << method << ','
                  << mean / static_cast<double>(sample_mcc.size()) << "\n";
        }
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// adatap-compare

struct AdaCmd {
    RunOpts run;
    std::string model_path;
    int timing_iters = 20;
};

int cmd_adatap_compare(const AdaCmd& c, const std::vector<std::string>& argv_rest) {
    ensure_dir(c.run.out_dir);
    json resolved;
    resolved["model"] = c.model_path;
    resolved["timing_iters"] = c.timing_iters;
    resolved["seed"] = c.run.seed;
    resolved["damping"] = c.run.damping;
    resolved["tol"] = c.run.tol;
    resolved["max_iters"] = c.run.max_iters;
    write_manifest(c.run.out_dir, "adatap-compare", argv_rest, resolved);

    const GrbmModel model = to_grbm(load_model(c.model_path).model);
    const JointModel jm = build_joint(model);
    const bool symmetric = jm.j == jm.j.transpose().eval();

    const TapSettings ts = tap_settings(c.run);
    const Vector init = Vector::Constant(model.n_visible(), 0.5);
    const TapSolution tap = run_tap(model, init, Vector::Zero(init.size()), ts);

    AdaTapSettings as;
    as.damping = c.run.damping;
    as.tolerance = c.run.tol;
    as.max_iters = c.run.max_iters;
    const AdaTapResult ada = adatap_run(jm, as);

    double max_diff = 0.0;
    for (Eigen::Index i = 0; i < model.n_visible(); ++i) {
        max_diff = std::max(max_diff, std::abs(ada.a(i) - tap.state.layers[0].a(i)));
    }
    for (Eigen::Index j = 0; j < model.n_hidden(); ++j) {
        max_diff = std::max(
            max_diff, std::abs(ada.a(model.n_visible() + j) - tap.state.layers[1].a(j)));
    }

    // per-iteration wall time at matched state
    using clock = std::chrono::steady_clock;
    const TapRuntime rt = make_runtime(model);
    TapState st = make_state(rt, init, Vector::Zero(init.size()));
    auto t0 = clock::now();
    for (int i = 0; i < c.timing_iters; ++i) sweep(rt, st, ts.damping);
    const double tap_per_iter =
        std::chrono::duration<double>(clock::now() - t0).count() / c.timing_iters;

    AdaTapSettings timing = as;
    timing.max_iters = c.timing_iters;
    timing.tolerance = 1e-300;  // force the full iteration budget
    t0 = clock::now();
    adatap_run(jm, timing);
    const double ada_per_iter =
        std::chrono::duration<double>(clock::now() - t0).count() / c.timing_iters;

    json rj;
    rj["j_symmetric"] = symmetric;
    rj["tap_converged"] = tap.converged;
    rj["adatap_converged"] = ada.converged;
    rj["moment_max_diff"] = max_diff;
    rj["tap_seconds_per_iteration"] = tap_per_iter;
    rj["adatap_seconds_per_iteration"] = ada_per_iter;
    std::ofstream out = open_out(c.run.out_dir + "/compare.json");
    out << rj.dump(2) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// dbm

struct DbmCmd {
    DataOpts data;
    RunOpts run;
    std::vector<long> layers;  // hidden layer sizes
    std::string vis_prior = "binary";
    std::string hid_prior = "binary";
    int pretrain_epochs = 50;
    int epochs = 5;
    double lr = 0.001;
    double l2 = 0.001;
    double momentum = 0.0;  // off by default for the joint phase
    int batch = 100;
    int k = 100;
    int monitor_rows = 1000;
    bool sample_propagation = false;
};

int cmd_dbm(const DbmCmd& c, const std::vector<std::string>& argv_rest) {
    ensure_dir(c.run.out_dir);
    json resolved;
    resolved["data"] = c.data.path;
    resolved["layers"] = c.layers;
    resolved["vis_prior"] = c.vis_prior;
    resolved["hid_prior"] = c.hid_prior;
    resolved["pretrain_epochs"] = c.pretrain_epochs;
    resolved["epochs"] = c.epochs;
    resolved["lr"] = c.lr;
    resolved["l2"] = c.l2;
    resolved["momentum"] = c.momentum;
    resolved["batch"] = c.batch;
    resolved["k"] = c.k;
    resolved["monitor_rows"] = c.monitor_rows;
    resolved["sample_propagation"] = c.sample_propagation;
    resolved["seed"] = c.run.seed;
    resolved["damping"] = c.run.damping;
    resolved["tol"] = c.run.tol;
    resolved["max_iters"] = c.run.max_iters;
    write_manifest(c.run.out_dir, "dbm", argv_rest, resolved);

    const Matrix rows = load_matrix(c.data);

    TrainConfig pre;
    pre.gamma = c.lr;
    pre.epsilon = c.l2;
    pre.eta = 0.5;  // bipartite pretraining keeps the usual momentum
    pre.batch_size = c.batch;
    pre.k_solutions = c.k;
    pre.epochs = c.pretrain_epochs;
    pre.seed = c.run.seed;
    pre.tap = tap_settings(c.run);
    pre.monitor_rows = c.monitor_rows;
    pre.threads = c.run.threads;

    std::vector<Eigen::Index> hidden(c.layers.begin(), c.layers.end());
    DbmModel model = pretrain_greedy(hidden, parse_family(c.vis_prior),
                                     parse_family(c.hid_prior), rows, pre,
                                     c.sample_propagation);

    TrainConfig joint = pre;
    joint.eta = c.momentum;
    joint.epochs = c.epochs;
    std::ofstream log = open_out(c.run.out_dir + "/metrics.log");
    if (joint.epochs > 0) {
        train_dbm_joint(model, rows, joint,
                        [&](const EpochMetrics& em) { append_metrics_line(log, em); });
    }

    ModelMeta meta;
    meta.epoch = static_cast<std::uint32_t>(c.epochs);
    meta.seed = c.run.seed;
    meta.config_hash = fnv1a(resolved.dump());
    save_model(model, c.run.out_dir + "/model.tapm", meta);
    return kExitOk;
}

// ---------------------------------------------------------------------------

std::vector<std::string> expand_manifest(const std::vector<std::string>& args) {
    // --from-manifest FILE re-runs the stored invocation; any flags passed
    // alongside (typically --out) are appended, overriding the stored ones.
    std::vector<std::string> out;
    std::string manifest_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--from-manifest") {
            if (i + 1 >= args.size()) throw CLI::ValidationError("--from-manifest needs a path");
            manifest_path = args[++i];
        } else {
            out.push_back(args[i]);
        }
    }
    if (manifest_path.empty()) return out;

    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open manifest: " + manifest_path);
    json m;
    in >> m;
    std::vector<std::string> expanded;
    expanded.push_back(m.at("command").get<std::string>());
    for (const auto& a : m.at("argv")) expanded.push_back(a.get<std::string>());
    // overrides (skip a duplicated subcommand token)
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (i == 0 && !out[i].empty() && out[i][0] != '-') continue;
        expanded.push_back(out[i]);
    }
    return expanded;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"TAP mean-field toolkit for generalized RBMs"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    TrainCmd train;
    auto* t = app.add_subcommand("train", "train a bipartite model");
    add_data_opts(t, train.data);
    add_run_opts(t, train.run, 0.0);
    t->add_option("--nh", train.n_hidden, "hidden units")->capture_default_str();
    t->add_option("--vis-prior", train.vis_prior, "binary | tgauss | tgb")
        ->check(CLI::IsMember({"binary", "tgauss", "tgb"}))
        ->capture_default_str();
    t->add_option("--hid-prior", train.hid_prior, "binary | tgauss | tgb")
        ->check(CLI::IsMember({"binary", "tgauss", "tgb"}))
        ->capture_default_str();
    t->add_option("--epochs", train.epochs)->capture_default_str();
    t->add_option("--lr", train.lr, "learning rate")->capture_default_str();
    t->add_option("--lr-final", train.lr_final, "linear decay target (0 = constant)")
        ->capture_default_str();
    t->add_option("--l2", train.l2, "weight decay strength")->capture_default_str();
    t->add_option("--momentum", train.momentum)->capture_default_str();
    t->add_option("--batch", train.batch, "minibatch size")->capture_default_str();
    t->add_option("--k", train.k, "fixed-point runs per update")->capture_default_str();
    t->add_option("--sigma", train.sigma, "initial coupling scale")->capture_default_str();
    t->add_option("--monitor-rows", train.monitor_rows)->capture_default_str();
    t->add_option("--checkpoint-every", train.checkpoint_every)->capture_default_str();

    EvalCmd eval;
    auto* e = app.add_subcommand("eval", "score a dataset's TAP log-likelihood");
    add_data_opts(e, eval.data);
    add_run_opts(e, eval.run, 0.5);
    e->add_option("--model", eval.model_path, "model file")->required();
    e->add_option("--k-inits", eval.k_inits, "rows used as fixed-point initializations")
        ->capture_default_str();

    LandscapeCmd land;
    auto* l = app.add_subcommand("landscape", "solution-landscape report and export");
    add_data_opts(l, land.data);
    add_run_opts(l, land.run, 0.5);
    l->add_option("--model", land.model_path, "model file")->required();
    l->add_option("--dedup-tol", land.dedup_tol)->capture_default_str();

    DenoiseCmd den;
    auto* d = app.add_subcommand("denoise", "bit-flip denoising across a p grid");
    add_data_opts(d, den.data);
    add_run_opts(d, den.run, 0.5);
    d->add_option("--model", den.model_path, "model file")->required();
    d->add_option("--exemplars", den.exemplars_path,
                  "training matrix for the 1-NN baseline and the OPE magnetizations");
    d->add_option("--p-grid", den.p_grid, "flip probabilities")->capture_default_str();
    d->add_option("--methods", den.methods, "subset of {ope, knn, tap}")
        ->capture_default_str();

    AdaCmd ada;
    auto* a = app.add_subcommand("adatap-compare",
                                 "adaptive inference cross-check and per-iteration timing");
    add_run_opts(a, ada.run, 0.5);
    a->add_option("--model", ada.model_path, "model file")->required();
    a->add_option("--timing-iters", ada.timing_iters)->capture_default_str();

    DbmCmd dbm;
    auto* b = app.add_subcommand("dbm", "greedy pretraining plus joint deep training");
    add_data_opts(b, dbm.data);
    add_run_opts(b, dbm.run, 0.0);
    b->add_option("--layers", dbm.layers, "hidden layer sizes")->required();
    b->add_option("--vis-prior", dbm.vis_prior)
        ->check(CLI::IsMember({"binary", "tgauss", "tgb"}))
        ->capture_default_str();
    b->add_option("--hid-prior", dbm.hid_prior)
        ->check(CLI::IsMember({"binary", "tgauss", "tgb"}))
        ->capture_default_str();
    b->add_option("--pretrain-epochs", dbm.pretrain_epochs)->capture_default_str();
    b->add_option("--epochs", dbm.epochs, "joint-training epochs")->capture_default_str();
    b->add_option("--lr", dbm.lr)->capture_default_str();
    b->add_option("--l2", dbm.l2)->capture_default_str();
    b->add_option("--momentum", dbm.momentum, "joint-phase momentum")->capture_default_str();
    b->add_option("--batch", dbm.batch)->capture_default_str();
    b->add_option("--k", dbm.k)->capture_default_str();
    b->add_option("--monitor-rows", dbm.monitor_rows)->capture_default_str();
    b->add_flag("--sample-propagation", dbm.sample_propagation,
                "Bernoulli draws instead of conditional means between stages");

    std::vector<std::string> raw_args;
    for (int i = 1; i < argc; ++i) raw_args.emplace_back(argv[i]);

    try {
        const std::vector<std::string> args = expand_manifest(raw_args);
        std::vector<const char*> cargs;
        cargs.push_back("taprbm");
        for (const auto& s : args) cargs.push_back(s.c_str());
        try {
            app.parse(static_cast<int>(cargs.size()), cargs.data());
        } catch (const CLI::CallForHelp& h) {
            std::cout << app.help() << std::endl;
            return kExitOk;
        } catch (const CLI::ParseError& pe) {
            std::cerr << "usage error: " << pe.what() << "\n";
            return kExitUsage;
        }

        // argv to persist in the manifest: everything after the subcommand
        std::vector<std::string> rest(args.begin() + 1, args.end());
        if (t->parsed()) return cmd_train(train, rest);
        if (e->parsed()) return cmd_eval(eval, rest);
        if (l->parsed()) return cmd_landscape(land, rest);
        if (d->parsed()) return cmd_denoise(den, rest);
        if (a->parsed()) return cmd_adatap_compare(ada, rest);
        if (b->parsed()) return cmd_dbm(dbm, rest);
        return kExitUsage;
    } catch (const CLI::ParseError& pe) {
        std::cerr << "usage error: " << pe.what() << "\n";
        return kExitUsage;
    } catch (const InputError& ie) {
        std::cerr << "usage error: " << ie.what() << "\n";
        return kExitUsage;
    } catch (const IoError& io) {
        std::cerr << "i/o error: " << io.what() << "\n";
        return kExitIo;
    } catch (const FormatError& fe) {
        std::cerr << "format error: " << fe.what() << "\n";
        return kExitIo;
    } catch (const NumericalError& ne) {
        std::cerr << "numerical error: " << ne.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitNumerical;
    }
}

}  // namespace taprbm
