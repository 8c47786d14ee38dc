#include "netlqr/benchmarks.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace netlqr {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

// Uniform in (lo, hi]; constant when lo == hi.
double draw_weight(std::mt19937_64& rng, double lo, double hi) {
    if (hi == lo) {
        return hi;
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return hi - (hi - lo) * u(rng);
}

void add_edge(Matrix& L, long i, long j, double w) {
    L(i, j) -= w;
    L(j, i) -= w;
    L(i, i) += w;
    L(j, j) += w;
}

// Preferential attachment inside one area whose nodes start at `offset`.
void attach_area(Matrix& L, long offset, long size, long attachment, double lo, double hi, std::mt19937_64& rng) {
    const long core = std::min<long>(std::max<long>(attachment + 1, 2), size);
    std::vector<double> degree(static_cast<std::size_t>(size), 0.0);
    for (long i = 0; i < core; ++i) {
        for (long j = i + 1; j < core; ++j) {
            add_edge(L, offset + i, offset + j, draw_weight(rng, lo, hi));
            degree[static_cast<std::size_t>(i)] += 1.0;
            degree[static_cast<std::size_t>(j)] += 1.0;
        }
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (long node = core; node < size; ++node) {
        const long k = std::min(attachment, node);
        std::vector<long> targets;
        while (static_cast<long>(targets.size()) < k) {
            const double total = std::accumulate(degree.begin(), degree.begin() + node, 0.0);
            double pick = u(rng) * total;
            long chosen = node - 1;
            for (long c = 0; c < node; ++c) {
                pick -= degree[static_cast<std::size_t>(c)];
                if (pick < 0.0) {
                    chosen = c;
                    break;
                }
            }
            if (std::find(targets.begin(), targets.end(), chosen) == targets.end()) {
                targets.push_back(chosen);
            }
        }
        for (long t : targets) {
            add_edge(L, offset + node, offset + t, draw_weight(rng, lo, hi));
            degree[static_cast<std::size_t>(node)] += 1.0;
            degree[static_cast<std::size_t>(t)] += 1.0;
        }
    }
}

long zero_multiplicity(const Matrix& L) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(L, Eigen::EigenvaluesOnly);
    const double tol = 1e-9 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    return (es.eigenvalues().array().abs() <= tol).count();
}

Vector random_direction(std::uint64_t seed, long n, const Vector& remove) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector x(n);
    for (long i = 0; i < n; ++i) {
        x(i) = normal(rng);
    }
    const Vector v = remove.normalized();
    x -= v * v.dot(x);
    return x.normalized();
}

Matrix laplacian_for_seed(const ConsensusConfig& cfg, std::uint64_t seed) {
    const long n1 = cfg.area_sizes[0];
    const long n2 = cfg.area_sizes[1];
    const long n = n1 + n2;
    Matrix L = Matrix::Zero(n, n);
    std::mt19937_64 rng(derive_seed(seed, 0));
    attach_area(L, 0, n1, cfg.attachment, cfg.intra_weight_lo, cfg.intra_weight_hi, rng);
    attach_area(L, n1, n2, cfg.attachment, cfg.intra_weight_lo, cfg.intra_weight_hi, rng);

    // distinct endpoints within each area
    std::vector<long> first(static_cast<std::size_t>(n1));
    std::vector<long> second(static_cast<std::size_t>(n2));
    std::iota(first.begin(), first.end(), 0);
    std::iota(second.begin(), second.end(), n1);
    std::shuffle(first.begin(), first.end(), rng);
    std::shuffle(second.begin(), second.end(), rng);
    for (long k = 0; k < cfg.inter_area_links; ++k) {
        add_edge(L, first[static_cast<std::size_t>(k)], second[static_cast<std::size_t>(k)], cfg.inter_weight);
    }
    return L;
}

std::string consensus_fingerprint(const ConsensusConfig& cfg, const NoiseConfig& noise, const SamplingConfig& s,
                                  double kappa) {
    std::ostringstream os;
    os.precision(17);
    os << "consensus";
    for (long a : cfg.area_sizes) {
        os << ' ' << a;
    }
    os << '|' << cfg.inter_area_links << ' ' << cfg.intra_weight_lo << ' ' << cfg.intra_weight_hi << ' '
       << cfg.inter_weight << ' ' << cfg.alpha << ' ' << cfg.seed << ' ' << cfg.attachment << '|';
    for (long a : cfg.actuated_nodes) {
        os << a << ' ';
    }
    os << '|' << noise.num_sines << ' ' << noise.amplitude << ' ' << noise.freq_lo << ' ' << noise.freq_hi << ' '
       << noise.t_start << ' ' << noise.t_end << ' ' << noise.seed << '|' << s.dt << ' ' << s.intervals << ' '
       << s.substeps << '|' << kappa;
    return os.str();
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

void ConsensusConfig::validate() const {
    require(area_sizes.size() == 2, "ConsensusConfig: exactly two areas are supported");
    require(area_sizes[0] >= 1 && area_sizes[1] >= 1, "ConsensusConfig: area sizes must be positive");
    require(inter_area_links >= 1 && inter_area_links <= std::min(area_sizes[0], area_sizes[1]),
            "ConsensusConfig: inter_area_links must be in [1, min(area sizes)]");
    require(intra_weight_lo >= 0.0 && intra_weight_hi > 0.0 && intra_weight_hi >= intra_weight_lo,
            "ConsensusConfig: intra weight range must be (lo, hi] with 0 <= lo <= hi, hi > 0");
    require(inter_weight > 0.0, "ConsensusConfig: inter_weight must be positive");
    require(alpha >= 0.0, "ConsensusConfig: alpha must be non-negative");
    require(attachment >= 1, "ConsensusConfig: attachment degree must be >= 1");
    require(!actuated_nodes.empty(), "ConsensusConfig: at least one actuated node");
    const long n = area_sizes[0] + area_sizes[1];
    for (long a : actuated_nodes) {
        require(a >= 0 && a < n, "ConsensusConfig: actuated node index out of range");
    }
}

void OscillatorConfig::validate() const {
    require(k_nodes >= 2, "OscillatorConfig: k_nodes must be >= 2");
    require(coupling_lo >= 0.0 && coupling_hi > 0.0 && coupling_hi >= coupling_lo,
            "OscillatorConfig: coupling range must be (lo, hi]");
    require(damping_lo >= 0.0 && damping_hi > 0.0 && damping_hi >= damping_lo,
            "OscillatorConfig: damping range must be (lo, hi]");
    require(!actuated.empty(), "OscillatorConfig: at least one actuated node");
    for (long a : actuated) {
        require(a >= 0 && a < k_nodes, "OscillatorConfig: actuated node index out of range");
    }
}

Matrix consensus_laplacian(const ConsensusConfig& cfg) {
    cfg.validate();
    for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
        const Matrix L = laplacian_for_seed(cfg, cfg.seed + attempt);
        if (zero_multiplicity(L) == 1) {
            return L;
        }
        if (!cfg.regenerate_disconnected) {
            break;
        }
    }
    throw NumericalError("gen_consensus: sampled graph is disconnected");
}

BenchmarkProblem gen_consensus(const ConsensusConfig& cfg) {
    const Matrix L = consensus_laplacian(cfg);
    const long n = L.rows();
    const long m = static_cast<long>(cfg.actuated_nodes.size());
    BenchmarkProblem out;
    out.sys.A = -L;
    out.sys.B = Matrix::Zero(n, m);
    for (long j = 0; j < m; ++j) {
        out.sys.B(cfg.actuated_nodes[static_cast<std::size_t>(j)], j) = 1.0;
    }
    out.sys.semistable_eigvec = Vector::Ones(n);

    // x^T Q x = alpha sum_i (x_1 - x_i)^2
    Matrix Q = Matrix::Zero(n, n);
    Q(0, 0) = static_cast<double>(n - 1);
    for (long i = 1; i < n; ++i) {
        Q(0, i) = -1.0;
        Q(i, 0) = -1.0;
        Q(i, i) = 1.0;
    }
    out.weights.Q = cfg.alpha * Q;
    out.weights.R = Matrix::Identity(m, m);
    out.x0 = random_direction(derive_seed(cfg.seed, 1), n, Vector::Ones(n));
    return out;
}

BenchmarkProblem gen_oscillator_semistable(const OscillatorConfig& cfg) {
    cfg.validate();
    const long k = cfg.k_nodes;
    for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
        std::mt19937_64 rng(derive_seed(cfg.seed + attempt, 0));
        Matrix L = Matrix::Zero(k, k);
        if (k == 2) {
            add_edge(L, 0, 1, draw_weight(rng, cfg.coupling_lo, cfg.coupling_hi));
        } else {
            for (long i = 0; i < k; ++i) {
                add_edge(L, i, (i + 1) % k, draw_weight(rng, cfg.coupling_lo, cfg.coupling_hi));
            }
        }
        Vector damping(k);
        for (long i = 0; i < k; ++i) {
            damping(i) = draw_weight(rng, cfg.damping_lo, cfg.damping_hi);
        }

        BenchmarkProblem out;
        const long n = 2 * k;
        out.sys.A = Matrix::Zero(n, n);
        out.sys.A.topRightCorner(k, k).setIdentity();
        out.sys.A.bottomLeftCorner(k, k) = -L;
        out.sys.A.bottomRightCorner(k, k) = -damping.asDiagonal().toDenseMatrix();
        const long m = static_cast<long>(cfg.actuated.size());
        out.sys.B = Matrix::Zero(n, m);
        for (long j = 0; j < m; ++j) {
            out.sys.B(k + cfg.actuated[static_cast<std::size_t>(j)], j) = 1.0;
        }
        Vector v = Vector::Zero(n);
        v.head(k).setOnes();
        out.sys.semistable_eigvec = v;

        // semi-stable: everything but the single zero mode strictly stable
        const Matrix Vbar = deflation_basis(v);
        if (!is_hurwitz(Vbar * out.sys.A * Vbar.transpose())) {
            continue;
        }
        out.weights.Q = Matrix::Zero(n, n);
        out.weights.Q.bottomRightCorner(k, k) = cfg.alpha * Matrix::Identity(k, k);
        out.weights.R = Matrix::Identity(m, m);
        out.x0 = random_direction(derive_seed(cfg.seed + attempt, 1), n, v);
        return out;
    }
    throw NumericalError("gen_oscillator_semistable: no stable realization found (damping too small?)");
}

std::vector<Complex> dominant_eigenvalues(const Matrix& A, std::size_t count) {
    std::vector<Complex> ev = spectrum(A);
    if (ev.size() > count) {
        ev.resize(count);
    }
    return ev;
}

const ExperimentRow* ExperimentReport::row(long n_hat) const {
    for (const ExperimentRow& r : rows) {
        if (r.n_hat == n_hat) {
            return &r;
        }
    }
    return nullptr;
}

ExperimentReport run_experiment(const BenchmarkProblem& problem, std::vector<long> n_hat_list,
                                const NoiseConfig& noise, const SamplingConfig& sampling, double kappa,
                                const ExperimentOptions& options) {
    const LtiSystem& sys = problem.sys;
    sys.validate();
    const long n = sys.n();
    const long m = sys.m();
    const std::optional<Vector>& v = sys.semistable_eigvec;
    const long full = v ? n - 1 : n;
    require(!n_hat_list.empty(), "run_experiment: empty n_hat list");
    std::sort(n_hat_list.begin(), n_hat_list.end());
    n_hat_list.erase(std::unique(n_hat_list.begin(), n_hat_list.end()), n_hat_list.end());
    for (long k : n_hat_list) {
        require(k >= 1 && k <= full, "run_experiment: n_hat must lie in [1, " + std::to_string(full) + "]");
    }

    NoiseConfig noise_cfg = noise;
    noise_cfg.num_inputs = m;
    const SignalGenerator u = exploration_noise(noise_cfg);
    const TimeGrid grid = TimeGrid::uniform(sampling.dt, sampling.intervals, sampling.substeps);
    const SnapshotRecord record = simulate(sys, u, problem.x0, grid);

    ExperimentReport report;
    report.n = n;
    report.m = m;
    report.noise_seed = noise.seed;
    Matrix X = record.coarse_states();
    if (v) {
        const Vector vh = v->normalized();
        X -= vh * (vh.transpose() * X);
    }
    report.x_norm = X.norm();

    const RiccatiSolution opt = optimal_gain(sys, problem.weights);
    report.J_opt = lqr_cost(sys.A, sys.B, opt.F, problem.weights.Q, problem.weights.R, problem.x0, v).J;
    report.open_loop_dominant = dominant_eigenvalues(sys.A, 5);
    report.optimal_closed_loop_dominant = dominant_eigenvalues(sys.A - sys.B * opt.F, 5);

    PolicyOptions popts;
    popts.kappa = kappa;
    popts.max_iter = options.max_iter;
    popts.force_minnorm = options.force_minnorm;

    report.rows.resize(n_hat_list.size());
    const long count = static_cast<long>(n_hat_list.size());

    auto run_row = [&](long idx) {
        ExperimentRow& row = report.rows[static_cast<std::size_t>(idx)];
        row.n_hat = n_hat_list[static_cast<std::size_t>(idx)];
        try {
            const auto start = std::chrono::steady_clock::now();
            ProjectionMatrix P;
            if (row.n_hat == full) {
                P = v ? ProjectionMatrix::deflation_only(*v) : ProjectionMatrix::identity(n);
            } else {
                P = v ? deflate_semistable(record, *v, row.n_hat) : fit_projection(record, row.n_hat);
            }
            row.precondition_ms = row.n_hat == full ? 0.0 : elapsed_ms(start);
            row.eps_hat = epsilon_hat(record, P);

            const DataMatrices data = build_data_matrices(record, &P);
            const PolicyResult res = run_preconditioned(data, P, problem.weights, popts);
            row.iterations = res.iter_count;
            row.converged = res.converged;
            row.residuals = res.residuals;
            row.timings_ms = res.timings_ms;
            row.learn_time_ms = row.precondition_ms + std::accumulate(res.timings_ms.begin(), res.timings_ms.end(), 0.0);
            row.gain = res.lifted_gain;

            const CostValue J = lqr_cost(sys.A, sys.B, row.gain, problem.weights.Q, problem.weights.R, problem.x0, v);
            row.J = J.J;
            row.stable = J.stable;
            if (v) {
                row.semistable_residual = ((sys.A - sys.B * row.gain) * *v).norm() / v->norm();
            }
            const Matrix& Fhat = res.gains.back();
            row.J_hat = reduced_cost(sys.A, sys.B, problem.weights.Q, problem.weights.R, problem.x0, P, Fhat).J;
            if (options.compute_epsilon && !res.diverged) {
                const SmallGainCertificate cert = small_gain_certificate(
                    sys.A, sys.B, problem.x0, P, Fhat, options.compute_gamma ? &problem.weights : nullptr);
                row.eps = cert.lhs;
                row.margin = cert.margin;
                row.certified = cert.certified;
                row.gamma = cert.gamma;
            }
        } catch (const Error& e) {
            row.error = e.what();
            row.J = std::numeric_limits<double>::infinity();
            row.stable = false;
        }
    };

    if (options.parallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (long idx = 0; idx < count; ++idx) {
            run_row(idx);
        }
    } else {
        for (long idx = 0; idx < count; ++idx) {
            run_row(idx);
        }
    }

    report.knee_n_hat = report.rows.back().n_hat;
    for (const ExperimentRow& row : report.rows) {
        if (row.error.empty() && row.eps_hat < 1e-2 * report.x_norm) {
            report.knee_n_hat = row.n_hat;
            break;
        }
    }
    const ExperimentRow* knee = report.row(report.knee_n_hat);
    if (knee != nullptr && knee->gain.size() > 0) {
        report.closed_loop_dominant = dominant_eigenvalues(sys.A - sys.B * knee->gain, 5);
    }
    return report;
}

ExperimentReport run_case1(const ConsensusConfig& cfg, std::vector<long> n_hat_list, const NoiseConfig& noise,
                           const SamplingConfig& sampling, double kappa, const ExperimentOptions& options) {
    const BenchmarkProblem problem = gen_consensus(cfg);
    ExperimentReport report = run_experiment(problem, std::move(n_hat_list), noise, sampling, kappa, options);
    report.graph_seed = cfg.seed;
    report.config_hash = fnv1a_hex(consensus_fingerprint(cfg, noise, sampling, kappa));
    return report;
}

}  // namespace netlqr
