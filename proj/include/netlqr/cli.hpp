#pragma once

// Command-line front end: learn / sweep / analyze.

#include "netlqr/io.hpp"

#include <iosfwd>

namespace netlqr::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kNumerical = 2, kRankGate = 3 };

inline constexpr const char* kToolVersion = "0.1.0";

struct CliOptions {
    std::string command;
    std::filesystem::path config;
    std::optional<long> n_hat;
    std::vector<long> n_hat_list;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out;
    std::optional<double> kappa;
    std::optional<long> max_iter;
    bool force_minnorm = false;
    bool parallel = false;
    bool save_trajectory = false;
    std::string semistable_vec;  // "", "ones" or a path
    // analyze
    std::filesystem::path model;
    std::filesystem::path gain;
    std::filesystem::path projection;
};

/// Everything a run needs, resolved from the config file plus flag overrides.
struct RunConfig {
    BenchmarkProblem problem;
    std::string source;  // "consensus", "oscillator" or the model path
    NoiseConfig noise;
    SamplingConfig sampling;
    double kappa = 0.01;
    long max_iter = 50;
    bool force_minnorm = false;
    bool compute_epsilon = true;
    std::optional<long> n_hat;
    std::vector<long> n_hat_list;
    std::uint64_t seed = 1;
    io::Json resolved;  // config after overrides; hashed into the manifest
    std::string config_hash;
};

[[nodiscard]] RunConfig load_config(const CliOptions& options);

/// Default weights for a model file without Q / R: Q = I (minus the v
/// direction when semi-stable), R = I.
[[nodiscard]] LqrWeights default_weights(const LtiSystem& sys);

/// Parses argv and dispatches. Diagnostics go to `err`, progress to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

int cmd_learn(const CliOptions& options, std::ostream& out, std::ostream& err);
int cmd_sweep(const CliOptions& options, std::ostream& out, std::ostream& err);
int cmd_analyze(const CliOptions& options, std::ostream& out, std::ostream& err);

}  // namespace netlqr::cli
