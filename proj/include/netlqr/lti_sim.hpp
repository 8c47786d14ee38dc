#pragma once

#include "netlqr/linalg.hpp"

#include <cstdint>
#include <span>

namespace netlqr {

/// Continuous-time LTI plant x' = A x + B u. The learner never reads A or B;
/// they are used for simulation and model-in-the-loop validation only.
struct LtiSystem {
    Matrix A;
    Matrix B;
    /// Right null vector of A when the plant is semi-stable (e.g. the consensus direction).
    std::optional<Vector> semistable_eigvec;

    [[nodiscard]] long n() const { return A.rows(); }
    [[nodiscard]] long m() const { return B.cols(); }

    /// Throws DimensionError / NumericalError when the stability invariants fail.
    void validate() const;
};

/// Sum-of-sinusoids exploration signal u_c(t) = beta * sum_k sin(w_{c,k} t),
/// active on [t_start, t_end] for the channels listed in channel_map.
class SignalGenerator {
public:
    SignalGenerator() = default;
    SignalGenerator(long num_inputs, double amplitude, std::vector<std::vector<double>> frequencies,
                    std::vector<long> channel_map, double t_start, double t_end, std::uint64_t seed = 0);

    /// Right-continuous value; zero for t outside [t_start, t_end).
    [[nodiscard]] Vector value(double t) const;
    /// Left limit; zero for t outside (t_start, t_end].
    [[nodiscard]] Vector left_value(double t) const;

    [[nodiscard]] long num_inputs() const { return num_inputs_; }
    [[nodiscard]] double amplitude() const { return amplitude_; }
    [[nodiscard]] const std::vector<std::vector<double>>& frequencies() const { return frequencies_; }
    [[nodiscard]] const std::vector<long>& channel_map() const { return channel_map_; }
    [[nodiscard]] double t_start() const { return t_start_; }
    [[nodiscard]] double t_end() const { return t_end_; }
    [[nodiscard]] std::uint64_t seed() const { return seed_; }

    /// Identically-zero signal with m inputs.
    static SignalGenerator zero(long num_inputs);

private:
    [[nodiscard]] Vector evaluate(double t) const;

    long num_inputs_ = 0;
    double amplitude_ = 0.0;
    std::vector<std::vector<double>> frequencies_;
    std::vector<long> channel_map_;
    double t_start_ = 0.0;
    double t_end_ = 0.0;
    std::uint64_t seed_ = 0;
};

struct NoiseConfig {
    long num_sines = 400;
    double amplitude = 0.05;
    double freq_lo = -20.0;
    double freq_hi = 20.0;
    double t_start = 0.0;
    double t_end = 1.0;
    std::uint64_t seed = 1;
    long num_inputs = 1;
    std::vector<long> channel_map;  // empty: every input
};

/// Draws num_sines frequencies per channel uniformly from [freq_lo, freq_hi].
[[nodiscard]] SignalGenerator exploration_noise(const NoiseConfig& cfg);

/// Coarse sample grid t_0 < ... < t_N, each interval split into equal fine steps.
struct TimeGrid {
    std::vector<double> coarse_times;
    long substeps = 10;

    [[nodiscard]] long num_intervals() const { return static_cast<long>(coarse_times.size()) - 1; }
    [[nodiscard]] std::vector<double> fine_times() const;

    static TimeGrid uniform(double dt, long intervals, long substeps = 10);
};

/// Raw snapshots of one data-collection run on the fine grid.
struct SnapshotRecord {
    std::vector<double> coarse_times;
    std::vector<double> fine_times;
    /// Fine-grid column index of each coarse sample.
    std::vector<long> coarse_index;
    Matrix states;       // n x fine
    Matrix inputs;       // m x fine, right-continuous
    Matrix inputs_left;  // m x fine, left limits (equal to inputs where u is continuous)
    Vector x0;

    [[nodiscard]] long n() const { return states.rows(); }
    [[nodiscard]] long m() const { return inputs.rows(); }
    [[nodiscard]] long num_intervals() const { return static_cast<long>(coarse_times.size()) - 1; }

    /// Coarse snapshots [x(t_0), ..., x(t_N)] as columns.
    [[nodiscard]] Matrix coarse_states() const;
};

/// Fixed-step classical RK4 on the fine grid.
[[nodiscard]] SnapshotRecord simulate(const LtiSystem& sys, const SignalGenerator& u, const Vector& x0,
                                      const TimeGrid& grid);

/// Zero-input responses from x0 = d_i. An impulse through column B_i is the
/// response from x0 = B_i.
[[nodiscard]] std::vector<SnapshotRecord> impulse_responses(const LtiSystem& sys, std::span<const Vector> directions,
                                                            double horizon, double fine_step);

/// Stacks all coarse snapshots of several records column-wise.
[[nodiscard]] Matrix stack_coarse_states(std::span<const SnapshotRecord> records);

}  // namespace netlqr
