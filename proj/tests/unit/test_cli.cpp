#include "netlqr/cli.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>
#include <sys/wait.h>

namespace netlqr {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        root_ = fs::temp_directory_path() /
                ("netlqr_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(root_);
        fs::create_directories(root_);
        config_ = root_ / "small.json";
        io::write_json(config_, io::Json::parse(R"({
            "seed": 3,
            "system": {"generator": "consensus", "area_sizes": [3, 4], "inter_area_links": 2,
                       "actuated_nodes": [0, 4], "alpha": 1.0},
            "noise": {"num_sines": 30, "amplitude": 0.5, "t_end": 20.0},
            "sampling": {"dt": 0.05, "intervals": 400, "substeps": 5},
            "kappa": 1e-6
        })"));
    }
    void TearDown() override { fs::remove_all(root_); }

    int run(std::vector<std::string> args) {
        args.insert(args.begin(), "netlqr");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        out_.str("");
        err_.str("");
        return cli::run(static_cast<int>(argv.size()), argv.data(), out_, err_);
    }

    fs::path root_;
    fs::path config_;
    std::ostringstream out_;
    std::ostringstream err_;
};

TEST_F(Cli, MissingConfigExitsOne) {
    EXPECT_EQ(run({"learn", "--config", (root_ / "nope.json").string(), "--out", (root_ / "o").string()}),
              cli::kUsage);
    EXPECT_NE(err_.str().find("not found"), std::string::npos);
    EXPECT_FALSE(fs::exists(root_ / "o"));
}

TEST_F(Cli, BinaryReportsUsageErrorOnStderr) {
    const std::string cmd = std::string(NETLQR_CLI_PATH) + " learn --config " + (root_ / "nope.json").string() +
                            " --out " + (root_ / "o").string() + " 2> " + (root_ / "err.txt").string();
    const int status = std::system(cmd.c_str());
    ASSERT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), 1);
    EXPECT_FALSE(io::read_text(root_ / "err.txt").empty());
}

TEST_F(Cli, UnknownFlagIsUsageError) { EXPECT_EQ(run({"learn", "--bogus"}), cli::kUsage); }

TEST_F(Cli, LearnWritesManifestAndGain) {
    const fs::path out = root_ / "learn";
    ASSERT_EQ(run({"learn", "--config", config_.string(), "--n-hat", "6", "--out", out.string()}), cli::kOk)
        << err_.str();
    const auto manifest = io::read_json(out / "manifest.json");
    EXPECT_EQ(manifest["command"], "learn");
    EXPECT_EQ(manifest["tool_version"], cli::kToolVersion);
    EXPECT_TRUE(manifest.contains("timestamp"));
    EXPECT_TRUE(manifest.contains("config_hash"));
    // every file is listed and every listed file exists
    std::set<std::string> listed;
    for (const auto& f : manifest["files"]) listed.insert(f.get<std::string>());
    for (const auto& e : fs::directory_iterator(out)) EXPECT_TRUE(listed.count(e.path().filename().string()));
    for (const auto& f : listed) EXPECT_TRUE(fs::exists(out / f)) << f;
    const Matrix gain = io::matrix_from_csv(io::read_text(out / "gain.csv"));
    EXPECT_EQ(gain.rows(), 2);
    EXPECT_EQ(gain.cols(), 7);
    EXPECT_LT(gain.rowwise().sum().norm(), 1e-10);  // F 1 = 0
    const auto policy = io::read_json(out / "policy.json");
    EXPECT_TRUE(policy["converged"].get<bool>());
}

TEST_F(Cli, RefusesNonEmptyOutput) {
    const fs::path out = root_ / "busy";
    fs::create_directories(out);
    io::write_text(out / "keep.txt", "x");
    EXPECT_EQ(run({"learn", "--config", config_.string(), "--out", out.string()}), cli::kUsage);
    EXPECT_TRUE(fs::exists(out / "keep.txt"));
}

TEST_F(Cli, RankGateExitsThree) {
    const fs::path out = root_ / "rank";
    io::write_json(config_, io::Json::parse(R"({
        "system": {"generator": "consensus", "area_sizes": [3, 4], "inter_area_links": 2},
        "sampling": {"dt": 0.05, "intervals": 10, "substeps": 5}
    })"));
    EXPECT_EQ(run({"learn", "--config", config_.string(), "--out", out.string()}), cli::kRankGate);
    EXPECT_FALSE(fs::exists(out));
}

TEST_F(Cli, SweepIsDeterministic) {
    const fs::path a = root_ / "a", b = root_ / "b";
    ASSERT_EQ(run({"sweep", "--config", config_.string(), "--n-hat-list", "2,4,6", "--out", a.string()}), cli::kOk)
        << err_.str();
    ASSERT_EQ(run({"sweep", "--config", config_.string(), "--n-hat-list", "6,4,2", "--parallel", "--out",
                   b.string()}),
              cli::kOk);
    const std::string csv = io::read_text(a / "report.csv");
    EXPECT_EQ(csv, io::read_text(b / "report.csv"));
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
    EXPECT_TRUE(fs::exists(a / "timings.csv"));
    const auto report = io::read_json(a / "report.json");
    EXPECT_EQ(report["rows"].size(), 3u);
    EXPECT_EQ(report["provenance"]["config_hash"], io::read_json(a / "manifest.json")["config_hash"]);
}

TEST_F(Cli, SeedOverrideChangesHash) {
    const fs::path a = root_ / "a", b = root_ / "b";
    ASSERT_EQ(run({"sweep", "--config", config_.string(), "--n-hat-list", "6", "--out", a.string()}), cli::kOk);
    ASSERT_EQ(run({"sweep", "--config", config_.string(), "--n-hat-list", "6", "--seed", "9", "--out", b.string()}),
              cli::kOk);
    EXPECT_NE(io::read_json(a / "manifest.json")["config_hash"], io::read_json(b / "manifest.json")["config_hash"]);
}

TEST_F(Cli, AnalyzeLearnedGain) {
    const fs::path learn = root_ / "learn", analysis = root_ / "analysis";
    ASSERT_EQ(run({"learn", "--config", config_.string(), "--n-hat", "6", "--out", learn.string()}), cli::kOk);
    ASSERT_EQ(run({"analyze", "--model", (learn / "model.json").string(), "--gain", (learn / "gain.csv").string(),
                   "--out", analysis.string()}),
              cli::kOk)
        << err_.str();
    const auto r = io::read_json(analysis / "cost_report.json");
    EXPECT_NEAR(r["J"].get<double>(), r["J_opt"].get<double>(), 1e-3 * r["J_opt"].get<double>());
    EXPECT_TRUE(r["stable"].get<bool>());

    // Reduced gain + projection
    const fs::path a2 = root_ / "analysis2";
    ASSERT_EQ(run({"analyze", "--model", (learn / "model.json").string(), "--gain",
                   (learn / "gain_reduced.csv").string(), "--projection", (learn / "projection.json").string(),
                   "--out", a2.string()}),
              cli::kOk)
        << err_.str();
}

TEST_F(Cli, AnalyzeWrongGainDimensionsExitsOne) {
    const fs::path learn = root_ / "learn";
    ASSERT_EQ(run({"learn", "--config", config_.string(), "--n-hat", "6", "--out", learn.string()}), cli::kOk);
    io::write_text(root_ / "bad.csv", "1,2,3\n");
    EXPECT_EQ(run({"analyze", "--model", (learn / "model.json").string(), "--gain", (root_ / "bad.csv").string(),
                   "--out", (root_ / "x").string()}),
              cli::kUsage);
}

TEST_F(Cli, AnalyzeUnstableGainExitsTwo) {
    const fs::path learn = root_ / "learn";
    ASSERT_EQ(run({"learn", "--config", config_.string(), "--n-hat", "6", "--out", learn.string()}), cli::kOk);
    Matrix F = Matrix::Zero(2, 7);
    F(0, 0) = -50.0;
    F.row(0) -= F.row(0).mean() * Eigen::RowVectorXd::Ones(7);  // keep F 1 = 0
    io::write_text(root_ / "unstable.csv", io::matrix_csv(F));
    EXPECT_EQ(run({"analyze", "--model", (learn / "model.json").string(), "--gain",
                   (root_ / "unstable.csv").string(), "--out", (root_ / "y").string()}),
              cli::kNumerical);
}

TEST_F(Cli, ModelFileSource) {
    io::ModelFile m;
    m.sys.A.resize(2, 2);
    m.sys.A << -1, 0.5, 0, -2;
    m.sys.B = Matrix::Identity(2, 1);
    io::write_json(root_ / "plant.json", io::model_to_json(m));
    io::write_json(config_, io::Json::parse(R"({
        "system": {"model": "plant.json"},
        "noise": {"num_sines": 20, "amplitude": 0.5, "t_end": 10.0},
        "sampling": {"dt": 0.05, "intervals": 200, "substeps": 5},
        "kappa": 1e-8
    })"));
    ASSERT_EQ(run({"learn", "--config", config_.string(), "--out", (root_ / "o").string()}), cli::kOk)
        << err_.str();
    const Matrix gain = io::matrix_from_csv(io::read_text(root_ / "o" / "gain.csv"));
    EXPECT_EQ(gain.cols(), 2);
}

}  // namespace
}  // namespace netlqr
