#include "netlqr/lti_sim.hpp"

#include <cmath>
#include <random>

namespace netlqr {

void LtiSystem::validate() const {
    require_dims(A.rows() == A.cols(), "LtiSystem: A must be square");
    require_dims(B.rows() == A.rows(), "LtiSystem: B must have n rows");
    const auto spectrum = eigenvalues(A);
    if (!semistable_eigvec) {
        for (const auto& value : spectrum) {
            if (value.real() >= 0.0) {
                throw NumericalError("LtiSystem: A is not Hurwitz");
            }
        }
        return;
    }
    const Vector& v = *semistable_eigvec;
    require_dims(v.size() == A.rows(), "LtiSystem: semi-stable eigenvector length mismatch");
    const double scale = std::max(A.norm(), 1.0) * v.norm();
    if ((A * v).norm() > 1e-10 * scale) {
        throw NumericalError("LtiSystem: A v != 0 for the declared semi-stable eigenvector");
    }
    long near_zero = 0;
    for (const auto& value : spectrum) {
        if (std::abs(value) <= 1e-8 * std::max(1.0, A.norm())) {
            ++near_zero;
        } else if (value.real() >= 0.0) {
            throw NumericalError("LtiSystem: unstable eigenvalue besides the semi-stable mode");
        }
    }
    if (near_zero != 1) {
        throw NumericalError("LtiSystem: expected exactly one zero eigenvalue, found " + std::to_string(near_zero));
    }
}

SignalGenerator::SignalGenerator(long num_inputs, double amplitude, std::vector<std::vector<double>> frequencies,
                                 std::vector<long> channel_map, double t_start, double t_end, std::uint64_t seed)
    : num_inputs_(num_inputs),
      amplitude_(amplitude),
      frequencies_(std::move(frequencies)),
      channel_map_(std::move(channel_map)),
      t_start_(t_start),
      t_end_(t_end),
      seed_(seed) {
    require_dims(frequencies_.size() == channel_map_.size(), "SignalGenerator: one frequency list per channel");
    for (long c : channel_map_) {
        require_dims(c >= 0 && c < num_inputs_, "SignalGenerator: channel index out of range");
    }
}

SignalGenerator SignalGenerator::zero(long num_inputs) { return SignalGenerator(num_inputs, 0.0, {}, {}, 0.0, 0.0); }

Vector SignalGenerator::evaluate(double t) const {
    Vector u = Vector::Zero(num_inputs_);
    for (std::size_t c = 0; c < channel_map_.size(); ++c) {
        double sum = 0.0;
        for (double w : frequencies_[c]) {
            sum += std::sin(w * t);
        }
        u(channel_map_[c]) += amplitude_ * sum;
    }
    return u;
}

Vector SignalGenerator::value(double t) const {
    if (t < t_start_ || t >= t_end_) {
        return Vector::Zero(num_inputs_);
    }
    return evaluate(t);
}

Vector SignalGenerator::left_value(double t) const {
    if (t <= t_start_ || t > t_end_) {
        return Vector::Zero(num_inputs_);
    }
    return evaluate(t);
}

SignalGenerator exploration_noise(const NoiseConfig& cfg) {
    require(cfg.num_sines >= 1, "exploration_noise: need at least one sinusoid");
    require(cfg.freq_lo < cfg.freq_hi, "exploration_noise: empty frequency range");
    require(cfg.amplitude > 0.0, "exploration_noise: amplitude must be positive");
    require(cfg.t_end > cfg.t_start, "exploration_noise: empty active window");
    require_dims(cfg.num_inputs >= 1, "exploration_noise: need at least one input");

    std::vector<long> channels = cfg.channel_map;
    if (channels.empty()) {
        for (long i = 0; i < cfg.num_inputs; ++i) {
            channels.push_back(i);
        }
    }
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> dist(cfg.freq_lo, cfg.freq_hi);
    std::vector<std::vector<double>> freqs(channels.size());
    for (auto& list : freqs) {
        list.resize(static_cast<std::size_t>(cfg.num_sines));
        for (double& w : list) {
            w = dist(rng);
        }
    }
    return SignalGenerator(cfg.num_inputs, cfg.amplitude, std::move(freqs), std::move(channels), cfg.t_start,
                           cfg.t_end, cfg.seed);
}

std::vector<double> TimeGrid::fine_times() const {
    std::vector<double> out;
    if (coarse_times.empty()) {
        return out;
    }
    out.reserve(static_cast<std::size_t>(num_intervals() * substeps + 1));
    for (long j = 0; j < num_intervals(); ++j) {
        const double a = coarse_times[static_cast<std::size_t>(j)];
        const double b = coarse_times[static_cast<std::size_t>(j + 1)];
        for (long k = 0; k < substeps; ++k) {
            out.push_back(a + (b - a) * static_cast<double>(k) / static_cast<double>(substeps));
        }
    }
    out.push_back(coarse_times.back());
    return out;
}

TimeGrid TimeGrid::uniform(double dt, long intervals, long substeps) {
    require(dt > 0.0 && intervals >= 1 && substeps >= 1, "TimeGrid::uniform: invalid arguments");
    TimeGrid grid;
    grid.substeps = substeps;
    grid.coarse_times.resize(static_cast<std::size_t>(intervals + 1));
    for (long j = 0; j <= intervals; ++j) {
        grid.coarse_times[static_cast<std::size_t>(j)] = dt * static_cast<double>(j);
    }
    return grid;
}

Matrix SnapshotRecord::coarse_states() const {
    Matrix out(n(), static_cast<Eigen::Index>(coarse_index.size()));
    for (std::size_t j = 0; j < coarse_index.size(); ++j) {
        out.col(static_cast<Eigen::Index>(j)) = states.col(coarse_index[j]);
    }
    return out;
}

SnapshotRecord simulate(const LtiSystem& sys, const SignalGenerator& u, const Vector& x0, const TimeGrid& grid) {
    require_dims(sys.A.rows() == sys.A.cols() && sys.B.rows() == sys.A.rows(), "simulate: inconsistent (A, B)");
    require_dims(x0.size() == sys.n(), "simulate: x0 length must equal n");
    require_dims(u.num_inputs() == sys.m(), "simulate: signal width must equal m");
    require(grid.num_intervals() >= 1 && grid.substeps >= 1, "simulate: need at least one coarse interval");
    for (std::size_t j = 1; j < grid.coarse_times.size(); ++j) {
        require(grid.coarse_times[j] > grid.coarse_times[j - 1], "simulate: coarse times must increase strictly");
    }
    require(grid.coarse_times.front() == 0.0, "simulate: time grid must start at 0");

    SnapshotRecord rec;
    rec.coarse_times = grid.coarse_times;
    rec.fine_times = grid.fine_times();
    const auto fine = static_cast<Eigen::Index>(rec.fine_times.size());
    rec.coarse_index.resize(grid.coarse_times.size());
    for (std::size_t j = 0; j < grid.coarse_times.size(); ++j) {
        rec.coarse_index[j] = static_cast<long>(j) * grid.substeps;
    }
    rec.x0 = x0;
    rec.states.resize(sys.n(), fine);
    rec.inputs.resize(sys.m(), fine);
    rec.inputs_left.resize(sys.m(), fine);

    const Matrix& A = sys.A;
    const Matrix& B = sys.B;
    Vector x = x0;
    rec.states.col(0) = x;
    rec.inputs.col(0) = u.value(rec.fine_times[0]);
    rec.inputs_left.col(0) = rec.inputs.col(0);
    for (Eigen::Index i = 0; i + 1 < fine; ++i) {
        const double t = rec.fine_times[static_cast<std::size_t>(i)];
        const double t_next = rec.fine_times[static_cast<std::size_t>(i + 1)];
        const double h = t_next - t;
        const Vector u0 = rec.inputs.col(i);
        const Vector um = u.value(t + 0.5 * h);
        const Vector u1 = u.left_value(t_next);
        const Vector k1 = A * x + B * u0;
        const Vector k2 = A * (x + 0.5 * h * k1) + B * um;
        const Vector k3 = A * (x + 0.5 * h * k2) + B * um;
        const Vector k4 = A * (x + h * k3) + B * u1;
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        rec.states.col(i + 1) = x;
        rec.inputs.col(i + 1) = u.value(t_next);
        rec.inputs_left.col(i + 1) = u1;
    }
    if (!all_finite(rec.states)) {
        throw NumericalError("simulate: non-finite state (is A unstable?)");
    }
    return rec;
}

std::vector<SnapshotRecord> impulse_responses(const LtiSystem& sys, std::span<const Vector> directions,
                                              double horizon, double fine_step) {
    require(!directions.empty(), "impulse_responses: no directions");
    require(horizon > 0.0 && fine_step > 0.0, "impulse_responses: horizon and step must be positive");
    constexpr long kSubsteps = 10;
    const double coarse_step = fine_step * kSubsteps;
    const long intervals = std::max<long>(1, static_cast<long>(std::ceil(horizon / coarse_step - 1e-9)));
    const TimeGrid grid = TimeGrid::uniform(horizon / static_cast<double>(intervals), intervals, kSubsteps);
    const SignalGenerator quiet = SignalGenerator::zero(sys.m());
    std::vector<SnapshotRecord> out;
    out.reserve(directions.size());
    for (const Vector& d : directions) {
        require_dims(d.size() == sys.n(), "impulse_responses: direction length must equal n");
        out.push_back(simulate(sys, quiet, d, grid));
    }
    return out;
}

Matrix stack_coarse_states(std::span<const SnapshotRecord> records) {
    require(!records.empty(), "stack_coarse_states: no records");
    const long n = records.front().n();
    Eigen::Index total = 0;
    for (const auto& rec : records) {
        require_dims(rec.n() == n, "stack_coarse_states: records disagree on n");
        total += static_cast<Eigen::Index>(rec.coarse_index.size());
    }
    Matrix out(n, total);
    Eigen::Index offset = 0;
    for (const auto& rec : records) {
        const Matrix block = rec.coarse_states();
        out.middleCols(offset, block.cols()) = block;
        offset += block.cols();
    }
    return out;
}

}  // namespace netlqr
