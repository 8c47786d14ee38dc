#include "netlqr/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <unistd.h>

namespace netlqr::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

class UsageError : public Error {
public:
    using Error::Error;
};

template <typename T>
T field(const Json& obj, const char* key, T fallback) {
    if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) {
        return fallback;
    }
    try {
        return obj.at(key).get<T>();
    } catch (const Json::exception&) {
        throw UsageError(std::string("config: field '") + key + "' has the wrong type");
    }
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

// Results are written to a hidden sibling directory that is renamed into
// place once every file exists, so `out` never holds a partial run.
class OutputDir {
public:
    explicit OutputDir(const fs::path& final_dir) : final_(final_dir) {
        if (final_.empty()) {
            throw UsageError("--out is required");
        }
        if (fs::exists(final_) && !(fs::is_directory(final_) && fs::is_empty(final_))) {
            throw UsageError("output directory " + final_.string() + " already exists and is not empty");
        }
        const fs::path parent = final_.has_parent_path() ? final_.parent_path() : fs::path(".");
        fs::create_directories(parent);
        staging_ = parent / ("." + final_.filename().string() + ".staging-" + std::to_string(::getpid()));
        fs::remove_all(staging_);
        fs::create_directory(staging_);
    }
    OutputDir(const OutputDir&) = delete;
    OutputDir& operator=(const OutputDir&) = delete;
    ~OutputDir() {
        if (!committed_) {
            std::error_code ec;
            fs::remove_all(staging_, ec);
        }
    }

    [[nodiscard]] fs::path operator/(const std::string& name) const { return staging_ / name; }

    void commit() {
        if (fs::exists(final_)) {
            fs::remove(final_);  // verified empty in the constructor
        }
        fs::rename(staging_, final_);
        committed_ = true;
    }

private:
    fs::path final_;
    fs::path staging_;
    bool committed_ = false;
};

void write_manifest(const OutputDir& dir, const CliOptions& options, const std::string& config_path,
                    const std::string& config_hash, std::optional<std::uint64_t> seed,
                    const std::vector<std::string>& files) {
    Json m;
    m["command"] = options.command;
    m["config"] = config_path;
    m["output_dir"] = options.out.string();
    m["seed_overrides"] = options.seed ? Json({{"seed", *options.seed}}) : Json::object();
    m["seed"] = seed ? Json(*seed) : Json(nullptr);
    m["config_hash"] = config_hash;
    m["timestamp"] = utc_timestamp();
    m["tool_version"] = kToolVersion;
    m["files"] = files;
    io::write_json(dir / "manifest.json", m);
}

Vector read_vector_file(const fs::path& path) {
    const std::string text = io::read_text(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') {
        return io::vector_from_json(Json::parse(text));
    }
    const Matrix m = io::matrix_from_csv(text);
    require_dims(m.rows() == 1 || m.cols() == 1, "semi-stable vector file must hold a single row or column");
    return Eigen::Map<const Vector>(m.data(), m.size());
}

void apply_semistable_override(const std::string& spec, LtiSystem& sys) {
    if (spec.empty()) {
        return;
    }
    if (spec == "ones") {
        sys.semistable_eigvec = Vector::Ones(sys.n());
    } else {
        sys.semistable_eigvec = read_vector_file(spec);
    }
    sys.validate();
}

Vector default_x0(const LtiSystem& sys, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector x(sys.n());
    for (long i = 0; i < x.size(); ++i) {
        x(i) = normal(rng);
    }
    if (sys.semistable_eigvec) {
        const Vector v = sys.semistable_eigvec->normalized();
        x -= v * v.dot(x);
    }
    return x.normalized();
}

ConsensusConfig consensus_from_json(const Json& j) {
    ConsensusConfig c;
    c.area_sizes = field(j, "area_sizes", c.area_sizes);
    c.inter_area_links = field(j, "inter_area_links", c.inter_area_links);
    c.intra_weight_lo = field(j, "intra_weight_lo", c.intra_weight_lo);
    c.intra_weight_hi = field(j, "intra_weight_hi", c.intra_weight_hi);
    c.inter_weight = field(j, "inter_weight", c.inter_weight);
    c.actuated_nodes = field(j, "actuated_nodes", c.actuated_nodes);
    c.alpha = field(j, "alpha", c.alpha);
    c.attachment = field(j, "attachment", c.attachment);
    c.regenerate_disconnected = field(j, "regenerate_disconnected", c.regenerate_disconnected);
    return c;
}

OscillatorConfig oscillator_from_json(const Json& j) {
    OscillatorConfig c;
    c.k_nodes = field(j, "k_nodes", c.k_nodes);
    c.coupling_lo = field(j, "coupling_lo", c.coupling_lo);
    c.coupling_hi = field(j, "coupling_hi", c.coupling_hi);
    c.damping_lo = field(j, "damping_lo", c.damping_lo);
    c.damping_hi = field(j, "damping_hi", c.damping_hi);
    c.actuated = field(j, "actuated", c.actuated);
    c.alpha = field(j, "alpha", c.alpha);
    return c;
}

void check_weights(const LtiSystem& sys, const LqrWeights& w) {
    require_dims(w.Q.rows() == sys.n() && w.R.rows() == sys.m(), "weights do not match the model dimensions");
    w.validate(sys.semistable_eigvec);
}

int report_error(std::ostream& err, const std::exception& e, int code) {
    err << "netlqr: " << e.what() << '\n';
    return code;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const RankError& e) {
        return report_error(err, e, kRankGate);
    } catch (const NumericalError& e) {
        return report_error(err, e, kNumerical);
    } catch (const Error& e) {
        return report_error(err, e, kUsage);
    } catch (const Json::exception& e) {
        return report_error(err, e, kUsage);
    } catch (const fs::filesystem_error& e) {
        return report_error(err, e, kUsage);
    }
}

}  // namespace

LqrWeights default_weights(const LtiSystem& sys) {
    LqrWeights w{Matrix::Identity(sys.n(), sys.n()), Matrix::Identity(sys.m(), sys.m())};
    if (sys.semistable_eigvec) {
        const Vector v = sys.semistable_eigvec->normalized();
        w.Q -= v * v.transpose();
    }
    return w;
}

RunConfig load_config(const CliOptions& options) {
    if (options.config.empty()) {
        throw UsageError("--config is required");
    }
    if (!fs::exists(options.config)) {
        throw UsageError("config file not found: " + options.config.string());
    }
    Json j = io::read_json(options.config);
    if (!j.is_object()) {
        throw UsageError("config must be a JSON object");
    }
    if (options.seed) j["seed"] = *options.seed;
    if (options.kappa) j["kappa"] = *options.kappa;
    if (options.max_iter) j["max_iter"] = *options.max_iter;
    if (options.n_hat) j["n_hat"] = *options.n_hat;
    if (!options.n_hat_list.empty()) j["n_hat_list"] = options.n_hat_list;
    if (options.force_minnorm) j["force_minnorm"] = true;
    if (!options.semistable_vec.empty()) j["semistable_vec"] = options.semistable_vec;

    RunConfig rc;
    rc.seed = field<std::uint64_t>(j, "seed", 1);
    rc.kappa = field(j, "kappa", rc.kappa);
    rc.max_iter = field(j, "max_iter", rc.max_iter);
    rc.force_minnorm = field(j, "force_minnorm", rc.force_minnorm);
    rc.compute_epsilon = field(j, "compute_epsilon", rc.compute_epsilon);
    if (j.contains("n_hat") && !j["n_hat"].is_null()) rc.n_hat = field<long>(j, "n_hat", 0);
    rc.n_hat_list = field(j, "n_hat_list", rc.n_hat_list);
    if (rc.kappa <= 0.0 || rc.max_iter < 1) {
        throw UsageError("kappa must be positive and max_iter >= 1");
    }

    if (!j.contains("system") || !j["system"].is_object()) {
        throw UsageError("config needs a 'system' object");
    }
    const Json& s = j["system"];
    if (s.contains("model")) {
        fs::path model_path = s["model"].get<std::string>();
        if (model_path.is_relative()) {
            model_path = options.config.parent_path() / model_path;
        }
        io::ModelFile model = io::model_from_json(io::read_json(model_path));
        apply_semistable_override(options.semistable_vec, model.sys);
        rc.problem.sys = model.sys;
        rc.problem.weights = model.weights ? *model.weights : default_weights(model.sys);
        rc.problem.x0 = model.x0 ? *model.x0 : default_x0(model.sys, derive_seed(rc.seed, 12));
        rc.source = model_path.string();
    } else {
        const std::string gen = field<std::string>(s, "generator", "");
        if (gen == "consensus") {
            ConsensusConfig c = consensus_from_json(s);
            c.seed = derive_seed(rc.seed, 10);
            rc.problem = gen_consensus(c);
        } else if (gen == "oscillator") {
            OscillatorConfig c = oscillator_from_json(s);
            c.seed = derive_seed(rc.seed, 10);
            rc.problem = gen_oscillator_semistable(c);
        } else {
            throw UsageError("system.generator must be 'consensus' or 'oscillator' (or give system.model)");
        }
        apply_semistable_override(options.semistable_vec, rc.problem.sys);
        rc.source = gen;
    }
    require_dims(rc.problem.x0.size() == rc.problem.sys.n(), "x0 length must equal n");
    check_weights(rc.problem.sys, rc.problem.weights);

    const Json noise = field(j, "noise", Json::object());
    rc.noise.num_sines = field(noise, "num_sines", rc.noise.num_sines);
    rc.noise.amplitude = field(noise, "amplitude", rc.noise.amplitude);
    rc.noise.freq_lo = field(noise, "freq_lo", rc.noise.freq_lo);
    rc.noise.freq_hi = field(noise, "freq_hi", rc.noise.freq_hi);
    rc.noise.t_start = field(noise, "t_start", rc.noise.t_start);
    rc.noise.t_end = field(noise, "t_end", rc.noise.t_end);
    rc.noise.channel_map = field(noise, "channel_map", rc.noise.channel_map);
    rc.noise.num_inputs = rc.problem.sys.m();
    rc.noise.seed = derive_seed(rc.seed, 11);

    const Json sampling = field(j, "sampling", Json::object());
    rc.sampling.dt = field(sampling, "dt", rc.sampling.dt);
    rc.sampling.intervals = field(sampling, "intervals", rc.sampling.intervals);
    rc.sampling.substeps = field(sampling, "substeps", rc.sampling.substeps);
    if (rc.sampling.dt <= 0.0 || rc.sampling.intervals < 1 || rc.sampling.substeps < 1) {
        throw UsageError("sampling: dt > 0, intervals >= 1 and substeps >= 1 required");
    }

    rc.resolved = j;
    rc.config_hash = fnv1a_hex(j.dump());
    return rc;
}

int cmd_learn(const CliOptions& options, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig rc = load_config(options);
        OutputDir dir(options.out);
        const LtiSystem& sys = rc.problem.sys;
        const std::optional<Vector>& v = sys.semistable_eigvec;
        const long n = sys.n();
        const long full = v ? n - 1 : n;
        long n_hat = rc.n_hat.value_or(full);
        if (n_hat < 1 || n_hat > n) {
            throw UsageError("--n-hat must lie in [1, " + std::to_string(n) + "]");
        }
        if (n_hat == n && v) {
            err << "netlqr: n_hat = n on a semi-stable plant; using the deflated full dimension " << full << '\n';
            n_hat = full;
        }

        std::vector<std::string> files{"manifest.json", "model.json",    "projection.json",
                                       "policy.json",   "gain.csv",      "gain_reduced.csv"};
        if (options.save_trajectory) {
            files.emplace_back("trajectory.csv");
        }
        write_manifest(dir, options, options.config.string(), rc.config_hash, rc.seed, files);

        const SnapshotRecord record = simulate(sys, exploration_noise(rc.noise), rc.problem.x0,
                                               TimeGrid::uniform(rc.sampling.dt, rc.sampling.intervals,
                                                                 rc.sampling.substeps));
        PolicyOptions popts;
        popts.kappa = rc.kappa;
        popts.max_iter = rc.max_iter;
        popts.force_minnorm = rc.force_minnorm;

        ProjectionMatrix P;
        PolicyResult res;
        if (n_hat == full && !v) {
            P = ProjectionMatrix::identity(n);
            res = run_off_policy(build_data_matrices(record), rc.problem.weights, popts);
        } else {
            if (n_hat == full) {
                P = ProjectionMatrix::deflation_only(*v);
            } else {
                P = v ? deflate_semistable(record, *v, n_hat) : fit_projection(record, n_hat);
            }
            res = run_preconditioned(record, P, rc.problem.weights, popts);
        }
        for (const std::string& w : res.warnings) {
            err << "netlqr: warning: " << w << '\n';
        }

        io::write_json(dir / "model.json", io::model_to_json({sys, rc.problem.weights, rc.problem.x0}));
        io::write_json(dir / "projection.json", io::projection_to_json(P));
        io::write_json(dir / "policy.json", io::policy_to_json(res));
        io::write_text(dir / "gain.csv", io::matrix_csv(res.lifted_gain));
        io::write_text(dir / "gain_reduced.csv", io::matrix_csv(res.gains.back()));
        if (options.save_trajectory) {
            io::write_text(dir / "trajectory.csv", io::trajectory_csv(record));
        }
        dir.commit();

        const double total_ms = std::accumulate(res.timings_ms.begin(), res.timings_ms.end(), 0.0);
        out << "n_hat=" << n_hat << " iterations=" << res.iter_count << " converged=" << (res.converged ? 1 : 0)
            << " learn_time_ms=" << io::format_double(total_ms) << '\n';
        return res.converged ? kOk : kNumerical;
    });
}

int cmd_sweep(const CliOptions& options, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig rc = load_config(options);
        if (rc.n_hat_list.empty()) {
            throw UsageError("sweep needs --n-hat-list (or n_hat_list in the config)");
        }
        OutputDir dir(options.out);
        write_manifest(dir, options, options.config.string(), rc.config_hash, rc.seed,
                       {"manifest.json", "report.csv", "report.json", "timings.csv"});

        ExperimentOptions eopts;
        eopts.parallel = options.parallel;
        eopts.compute_epsilon = rc.compute_epsilon;
        eopts.max_iter = rc.max_iter;
        eopts.force_minnorm = rc.force_minnorm;
        ExperimentReport report =
            run_experiment(rc.problem, rc.n_hat_list, rc.noise, rc.sampling, rc.kappa, eopts);
        report.graph_seed = derive_seed(rc.seed, 10);
        report.config_hash = rc.config_hash;

        io::write_text(dir / "report.csv", io::experiment_csv(report, /*include_timing=*/false));
        io::write_json(dir / "report.json", io::experiment_to_json(report));
        io::write_text(dir / "timings.csv", io::timings_csv(report));
        dir.commit();

        bool any_ok = false;
        for (const ExperimentRow& row : report.rows) {
            if (!row.error.empty()) {
                err << "netlqr: n_hat=" << row.n_hat << ": " << row.error << '\n';
            }
            any_ok = any_ok || (row.error.empty() && row.stable && (row.converged || row.certified));
        }
        out << io::experiment_csv(report, /*include_timing=*/false);
        return any_ok ? kOk : kNumerical;
    });
}

int cmd_analyze(const CliOptions& options, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (options.model.empty() || options.gain.empty()) {
            throw UsageError("analyze needs --model and --gain");
        }
        if (!fs::exists(options.model)) {
            throw UsageError("model file not found: " + options.model.string());
        }
        io::ModelFile model = io::model_from_json(io::read_json(options.model));
        apply_semistable_override(options.semistable_vec, model.sys);
        const LtiSystem& sys = model.sys;
        const LqrWeights weights = model.weights ? *model.weights : default_weights(sys);
        check_weights(sys, weights);
        const Vector x0 = model.x0 ? *model.x0 : default_x0(sys, derive_seed(options.seed.value_or(1), 12));
        const Matrix gain = io::matrix_from_csv(io::read_text(options.gain));

        ProjectionMatrix P;
        Matrix Fhat;
        if (!options.projection.empty()) {
            P = io::projection_from_json(io::read_json(options.projection));
            require_dims(P.n() == sys.n(), "projection width does not match the model");
            require_dims(gain.rows() == sys.m() && gain.cols() == P.n_hat(),
                         "gain must be m x n_hat (" + std::to_string(sys.m()) + " x " + std::to_string(P.n_hat()) +
                             "), got " + std::to_string(gain.rows()) + " x " + std::to_string(gain.cols()));
            Fhat = gain;
        } else {
            require_dims(gain.rows() == sys.m() && gain.cols() == sys.n(),
                         "gain must be m x n (" + std::to_string(sys.m()) + " x " + std::to_string(sys.n()) +
                             "), got " + std::to_string(gain.rows()) + " x " + std::to_string(gain.cols()));
            const std::optional<Vector>& v = sys.semistable_eigvec;
            if (v && (gain * *v).norm() <= 1e-10 * std::max(1.0, gain.norm()) * v->norm()) {
                P = ProjectionMatrix::deflation_only(*v);
                Fhat = gain * P.P.transpose();
            } else {
                P = ProjectionMatrix::identity(sys.n());
                Fhat = gain;
            }
        }
        OutputDir dir(options.out);
        write_manifest(dir, options, options.model.string(), fnv1a_hex(io::read_text(options.model)), options.seed,
                       {"manifest.json", "cost_report.json"});

        const double eps_hat = P.singular_values.size() > 0 ? epsilon_hat_from_spectrum(P) : 0.0;
        const CostReport report = evaluate_controller(sys, weights, x0, P, Fhat, eps_hat);
        Json j = io::cost_report_to_json(report);
        j["n_hat"] = P.n_hat();
        j["n"] = sys.n();
        io::write_json(dir / "cost_report.json", j);
        dir.commit();

        out << "J=" << io::format_double(report.J) << " J_opt=" << io::format_double(report.J_opt)
            << " J_hat=" << io::format_double(report.J_hat) << " eps=" << io::format_double(report.epsilon)
            << " certified=" << (report.certified ? 1 : 0) << '\n';
        if (!report.stable) {
            err << "netlqr: closed loop is not (semi-)stable\n";
            return kNumerical;
        }
        return kOk;
    });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Learn LQR controllers from trajectory data with SVD-compressed policy iteration", "netlqr"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    CliOptions o;
    std::uint64_t seed = 0;
    long n_hat = 0;
    double kappa = 0.0;
    long max_iter = 0;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON run configuration");
        sub->add_option("--seed", seed, "Base seed for every random stream");
        sub->add_option("--out", o.out, "Output directory (created atomically)")->required();
        sub->add_option("--semistable-vec", o.semistable_vec, "Semi-stable eigenvector: 'ones' or a file");
    };
    auto learning = [&](CLI::App* sub) {
        sub->add_option("--kappa", kappa, "Stopping tolerance on ||F_{k+1} - F_k||_F");
        sub->add_option("--max-iter", max_iter, "Iteration cap");
        sub->add_flag("--force-minnorm", o.force_minnorm, "Continue with minimum-norm LS when the rank gate fails");
    };

    CLI::App* learn = app.add_subcommand("learn", "Collect data and learn one (compressed) controller");
    common(learn);
    learning(learn);
    learn->add_option("--n-hat", n_hat, "Reduced dimension");
    learn->add_flag("--save-trajectory", o.save_trajectory, "Also write the fine-grid trajectory CSV");

    CLI::App* sweep = app.add_subcommand("sweep", "Learn one controller per reduced dimension");
    common(sweep);
    learning(sweep);
    sweep->add_option("--n-hat-list", o.n_hat_list, "Comma-separated reduced dimensions")->delimiter(',');
    sweep->add_flag("--parallel", o.parallel, "Run sweep rows concurrently (skews timings)");

    CLI::App* analyze = app.add_subcommand("analyze", "Evaluate a gain against a known model");
    common(analyze);
    analyze->add_option("--model", o.model, "Model JSON {A, B, v?, Q?, R?, x0?}")->required();
    analyze->add_option("--gain", o.gain, "Gain CSV (m x n_hat with --projection, else m x n)")->required();
    analyze->add_option("--projection", o.projection, "Projection JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << '\n';
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "netlqr: " << e.what() << '\n';
        return kUsage;
    }

    CLI::App* sub = app.get_subcommands().front();
    o.command = sub->get_name();
    if (sub->count("--seed") > 0) o.seed = seed;
    if (sub->get_option_no_throw("--kappa") && sub->count("--kappa") > 0) o.kappa = kappa;
    if (sub->get_option_no_throw("--max-iter") && sub->count("--max-iter") > 0) o.max_iter = max_iter;
    if (sub->get_option_no_throw("--n-hat") && sub->count("--n-hat") > 0) o.n_hat = n_hat;

    if (o.command == "learn") return cmd_learn(o, out, err);
    if (o.command == "sweep") return cmd_sweep(o, out, err);
    return cmd_analyze(o, out, err);
}

}  // namespace netlqr::cli
