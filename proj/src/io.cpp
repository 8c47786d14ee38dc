#include "netlqr/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <locale>
#include <sstream>

namespace netlqr::io {

namespace {

Json number(double x) {
    if (std::isfinite(x)) {
        return x;
    }
    // JSON has no infinity; keep the sentinel readable
    return std::isnan(x) ? Json("nan") : Json(x > 0 ? "inf" : "-inf");
}

double to_double(const Json& j) {
    if (j.is_number()) {
        return j.get<double>();
    }
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw DimensionError("expected a number, got " + j.dump());
}

Json doubles(const std::vector<double>& xs) {
    Json out = Json::array();
    for (double x : xs) {
        out.push_back(number(x));
    }
    return out;
}

}  // namespace

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os.precision(17);
    os << x;
    return os.str();
}

Json matrix_to_json(const Matrix& m) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(number(m(i, j)));
        }
        out.push_back(std::move(row));
    }
    return out;
}

Matrix matrix_from_json(const Json& j) {
    require_dims(j.is_array(), "matrix must be an array of rows");
    const long rows = static_cast<long>(j.size());
    const long cols = rows > 0 ? static_cast<long>(j[0].size()) : 0;
    Matrix m(rows, cols);
    for (long r = 0; r < rows; ++r) {
        require_dims(j[r].is_array() && static_cast<long>(j[r].size()) == cols, "matrix rows must have equal length");
        for (long c = 0; c < cols; ++c) {
            m(r, c) = to_double(j[r][c]);
        }
    }
    return m;
}

Json vector_to_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(number(v(i)));
    }
    return out;
}

Vector vector_from_json(const Json& j) {
    require_dims(j.is_array(), "vector must be an array");
    Vector v(static_cast<long>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<long>(i)) = to_double(j[i]);
    }
    return v;
}

Json spectrum_to_json(const std::vector<Complex>& ev) {
    Json out = Json::array();
    for (const Complex& z : ev) {
        out.push_back({number(z.real()), number(z.imag())});
    }
    return out;
}

Json model_to_json(const ModelFile& model) {
    Json j;
    j["n"] = model.sys.n();
    j["m"] = model.sys.m();
    j["A"] = matrix_to_json(model.sys.A);
    j["B"] = matrix_to_json(model.sys.B);
    if (model.sys.semistable_eigvec) {
        j["v"] = vector_to_json(*model.sys.semistable_eigvec);
    }
    if (model.weights) {
        j["Q"] = matrix_to_json(model.weights->Q);
        j["R"] = matrix_to_json(model.weights->R);
    }
    if (model.x0) {
        j["x0"] = vector_to_json(*model.x0);
    }
    return j;
}

ModelFile model_from_json(const Json& j) {
    require_dims(j.is_object() && j.contains("A") && j.contains("B"), "model file needs A and B");
    ModelFile model;
    model.sys.A = matrix_from_json(j.at("A"));
    model.sys.B = matrix_from_json(j.at("B"));
    if (j.contains("n")) {
        require_dims(j.at("n").get<long>() == model.sys.n(), "model file: n does not match A");
    }
    if (j.contains("m")) {
        require_dims(j.at("m").get<long>() == model.sys.m(), "model file: m does not match B");
    }
    if (j.contains("v") && !j.at("v").is_null()) {
        model.sys.semistable_eigvec = vector_from_json(j.at("v"));
    }
    if (j.contains("Q") || j.contains("R")) {
        require_dims(j.contains("Q") && j.contains("R"), "model file: Q and R must be given together");
        model.weights = LqrWeights{matrix_from_json(j.at("Q")), matrix_from_json(j.at("R"))};
    }
    if (j.contains("x0")) {
        model.x0 = vector_from_json(j.at("x0"));
    }
    model.sys.validate();
    return model;
}

Json projection_to_json(const ProjectionMatrix& p) {
    Json j;
    j["n_hat"] = p.n_hat();
    j["n"] = p.n();
    j["P"] = matrix_to_json(p.P);
    j["v"] = p.deflation_vec ? vector_to_json(*p.deflation_vec) : Json(nullptr);
    j["singular_values"] = vector_to_json(p.singular_values);
    j["numerical_rank"] = p.numerical_rank;
    j["warnings"] = p.warnings;
    return j;
}

ProjectionMatrix projection_from_json(const Json& j) {
    require_dims(j.is_object() && j.contains("P"), "projection file needs P");
    ProjectionMatrix p;
    p.P = matrix_from_json(j.at("P"));
    if (j.contains("n_hat")) {
        require_dims(j.at("n_hat").get<long>() == p.n_hat(), "projection file: n_hat does not match P");
    }
    if (j.contains("v") && !j.at("v").is_null()) {
        p.deflation_vec = vector_from_json(j.at("v"));
        require_dims(p.deflation_vec->size() == p.n(), "projection file: v length must equal n");
    }
    if (j.contains("singular_values")) {
        p.singular_values = vector_from_json(j.at("singular_values"));
    }
    if (j.contains("numerical_rank")) {
        p.numerical_rank = j.at("numerical_rank").get<long>();
    }
    const Matrix gram = p.P * p.P.transpose();
    require((gram - Matrix::Identity(p.n_hat(), p.n_hat())).norm() <= 1e-8 * std::max<double>(1.0, p.n_hat()),
            "projection file: P must have orthonormal rows");
    return p;
}

Json gramian_to_json(const Gramian& g) {
    return {{"horizon", number(g.horizon)}, {"Phi", matrix_to_json(g.Phi)}};
}

Json policy_to_json(const PolicyResult& r) {
    Json j;
    j["iterations"] = r.iter_count;
    j["residuals"] = doubles(r.residuals);
    j["relative_ls_residuals"] = doubles(r.relative_ls_residuals);
    j["timings_ms"] = doubles(r.timings_ms);
    j["converged"] = r.converged;
    j["diverged"] = r.diverged;
    j["n_hat"] = r.n_hat;
    j["rank"] = {{"rank", r.rank.rank}, {"required", r.rank.required}, {"satisfied", r.rank.satisfied}};
    j["warnings"] = r.warnings;
    j["gain"] = matrix_to_json(r.gains.empty() ? Matrix() : r.gains.back());
    j["lifted_gain"] = matrix_to_json(r.lifted_gain);
    return j;
}

Json cost_report_to_json(const CostReport& r) {
    Json j;
    j["J"] = number(r.J);
    j["J_opt"] = number(r.J_opt);
    j["J_hat"] = number(r.J_hat);
    j["eps"] = number(r.epsilon);
    j["eps_hat"] = number(r.epsilon_hat);
    j["small_gain_margin"] = number(r.small_gain_margin);
    j["certified"] = r.certified;
    j["stable"] = r.stable;
    j["gamma"] = number(r.gamma);
    j["closed_loop_spectrum"] = spectrum_to_json(r.closed_loop_spectrum);
    j["open_loop_spectrum"] = spectrum_to_json(r.open_loop_spectrum);
    return j;
}

Json experiment_to_json(const ExperimentReport& r) {
    Json j;
    j["n"] = r.n;
    j["m"] = r.m;
    j["J_opt"] = number(r.J_opt);
    j["x_norm"] = number(r.x_norm);
    j["knee_n_hat"] = r.knee_n_hat;
    j["open_loop_dominant"] = spectrum_to_json(r.open_loop_dominant);
    j["closed_loop_dominant"] = spectrum_to_json(r.closed_loop_dominant);
    j["optimal_closed_loop_dominant"] = spectrum_to_json(r.optimal_closed_loop_dominant);
    j["provenance"] = {{"graph_seed", r.graph_seed}, {"noise_seed", r.noise_seed}, {"config_hash", r.config_hash}};
    Json rows = Json::array();
    for (const ExperimentRow& row : r.rows) {
        Json o;
        o["n_hat"] = row.n_hat;
        o["iterations"] = row.iterations;
        o["learn_time_ms"] = number(row.learn_time_ms);
        o["precondition_ms"] = number(row.precondition_ms);
        o["J"] = number(row.J);
        o["J_hat"] = number(row.J_hat);
        o["eps_hat"] = number(row.eps_hat);
        o["eps"] = row.eps ? number(*row.eps) : Json(nullptr);
        o["margin"] = number(row.margin);
        o["certified"] = row.certified;
        o["converged"] = row.converged;
        o["stable"] = row.stable;
        o["semistable_residual"] = number(row.semistable_residual);
        o["gamma"] = number(row.gamma);
        o["residuals"] = doubles(row.residuals);
        o["timings_ms"] = doubles(row.timings_ms);
        if (!row.error.empty()) {
            o["error"] = row.error;
        }
        rows.push_back(std::move(o));
    }
    j["rows"] = std::move(rows);
    return j;
}

std::string experiment_csv(const ExperimentReport& r, bool include_timing) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << (include_timing ? "n_hat,iterations,learn_time_ms,J,eps_hat,eps,certified\n"
                          : "n_hat,iterations,J,eps_hat,eps,certified\n");
    for (const ExperimentRow& row : r.rows) {
        os << row.n_hat << ',' << row.iterations << ',';
        if (include_timing) {
            os << format_double(row.learn_time_ms) << ',';
        }
        os << format_double(row.J) << ',' << format_double(row.eps_hat) << ','
           << (row.eps ? format_double(*row.eps) : std::string()) << ',' << (row.certified ? 1 : 0) << '\n';
    }
    return os.str();
}

std::string timings_csv(const ExperimentReport& r) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << "n_hat,precondition_ms,learn_time_ms,iteration_ms\n";
    for (const ExperimentRow& row : r.rows) {
        os << row.n_hat << ',' << format_double(row.precondition_ms) << ',' << format_double(row.learn_time_ms) << ',';
        for (std::size_t k = 0; k < row.timings_ms.size(); ++k) {
            os << (k ? ";" : "") << format_double(row.timings_ms[k]);
        }
        os << '\n';
    }
    return os.str();
}

std::string trajectory_csv(const SnapshotRecord& rec) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << 't';
    for (long i = 0; i < rec.n(); ++i) os << ",x" << i + 1;
    for (long i = 0; i < rec.m(); ++i) os << ",u" << i + 1;
    os << '\n';
    for (std::size_t k = 0; k < rec.fine_times.size(); ++k) {
        const long c = static_cast<long>(k);
        os << format_double(rec.fine_times[k]);
        for (long i = 0; i < rec.n(); ++i) os << ',' << format_double(rec.states(i, c));
        for (long i = 0; i < rec.m(); ++i) os << ',' << format_double(rec.inputs(i, c));
        os << '\n';
    }
    return os.str();
}

std::string matrix_csv(const Matrix& m) {
    std::ostringstream os;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            os << (j ? "," : "") << format_double(m(i, j));
        }
        os << '\n';
    }
    return os.str();
}

Matrix matrix_from_csv(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            const auto b = cell.find_first_not_of(" \t");
            const auto e = cell.find_last_not_of(" \t");
            const char* first = cell.data() + (b == std::string::npos ? cell.size() : b);
            const char* last = cell.data() + (e == std::string::npos ? cell.size() : e + 1);
            double x = 0.0;
            const auto [ptr, ec] = std::from_chars(first, last, x);
            require_dims(ec == std::errc() && ptr == last && first != last,
                         "matrix CSV: cannot parse '" + cell + "'");
            row.push_back(x);
        }
        rows.push_back(std::move(row));
    }
    const long r = static_cast<long>(rows.size());
    const long c = r > 0 ? static_cast<long>(rows[0].size()) : 0;
    Matrix m(r, c);
    for (long i = 0; i < r; ++i) {
        require_dims(static_cast<long>(rows[static_cast<std::size_t>(i)].size()) == c, "matrix CSV: ragged rows");
        for (long j = 0; j < c; ++j) {
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    return m;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << text;
}

Json read_json(const std::filesystem::path& path) {
    try {
        return Json::parse(read_text(path));
    } catch (const Json::parse_error& e) {
        throw DimensionError(path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace netlqr::io
