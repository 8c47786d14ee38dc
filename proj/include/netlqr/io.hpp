#pragma once

// JSON / CSV serialization. Numbers are written with 17 significant digits in
// the classic locale so files round-trip exactly.

#include "netlqr/benchmarks.hpp"

#include <json.hpp>

#include <filesystem>

namespace netlqr::io {

using Json = nlohmann::json;

[[nodiscard]] Json matrix_to_json(const Matrix& m);  // row-major nested arrays
[[nodiscard]] Matrix matrix_from_json(const Json& j);
[[nodiscard]] Json vector_to_json(const Vector& v);
[[nodiscard]] Vector vector_from_json(const Json& j);
[[nodiscard]] Json spectrum_to_json(const std::vector<Complex>& ev);

/// {n, m, A, B, v?, Q?, R?, x0?}
struct ModelFile {
    LtiSystem sys;
    std::optional<LqrWeights> weights;
    std::optional<Vector> x0;
};
[[nodiscard]] Json model_to_json(const ModelFile& model);
[[nodiscard]] ModelFile model_from_json(const Json& j);

[[nodiscard]] Json projection_to_json(const ProjectionMatrix& p);
[[nodiscard]] ProjectionMatrix projection_from_json(const Json& j);

[[nodiscard]] Json gramian_to_json(const Gramian& g);
[[nodiscard]] Json policy_to_json(const PolicyResult& r);
[[nodiscard]] Json cost_report_to_json(const CostReport& r);
[[nodiscard]] Json experiment_to_json(const ExperimentReport& r);

/// n_hat,iterations,learn_time_ms,J,eps_hat,eps,certified
[[nodiscard]] std::string experiment_csv(const ExperimentReport& r, bool include_timing = true);
/// n_hat,precondition_ms,learn_time_ms,iteration_ms (per-iteration times joined by ";")
[[nodiscard]] std::string timings_csv(const ExperimentReport& r);

/// Header t,x1..xn,u1..um on the fine grid.
[[nodiscard]] std::string trajectory_csv(const SnapshotRecord& rec);

[[nodiscard]] std::string matrix_csv(const Matrix& m);
[[nodiscard]] Matrix matrix_from_csv(const std::string& text);

[[nodiscard]] std::string format_double(double x);

[[nodiscard]] std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
[[nodiscard]] Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace netlqr::io
