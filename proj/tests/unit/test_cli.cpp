#include <doctest.h>

#include <fstream>
#include <sstream>

#include "carloss/cli.hpp"
#include "carloss/csv_io.hpp"
#include "test_util.hpp"

using namespace carloss;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t data_rows(const fs::path& p) {
    const auto text = read_text(p);
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) - 1;
}

// The small measurement-error variance keeps the latent draws next to the
// positive observations, so every loss family applies.
Result fit_toy(const fs::path& dir, const std::string& seed = "7") {
    const auto fx = testing::fixtures_dir();
    return run({"fit", "--data", (fx / "toy_data.csv").string(), "--adjacency", (fx / "toy_adjacency.csv").string(),
                "--out-dir", dir.string(), "--iters", "1200", "--burn-in", "200", "--seed", seed, "--sigma2-meas",
                "0.01"});
}

}  // namespace

TEST_CASE("fit writes the draw files and reruns are byte-identical") {
    const auto a = testing::scratch_dir("cli_fit_a");
    const auto b = testing::scratch_dir("cli_fit_b");
    const auto ra = fit_toy(a);
    REQUIRE_MESSAGE(ra.code == 0, ra.err);
    REQUIRE(fit_toy(b).code == 0);
    for (const char* f : {io::kParamsFile, io::kFittedFile, io::kDiagnosticsFile, io::kObservedFile, io::kManifestFile})
        CHECK(fs::exists(a / f));
    CHECK(data_rows(a / io::kParamsFile) == 1000);
    CHECK(data_rows(a / io::kFittedFile) == 2000);
    CHECK(read_text(a / io::kParamsFile) == read_text(b / io::kParamsFile));
    CHECK(read_text(a / io::kFittedFile) == read_text(b / io::kFittedFile));

    const auto c = testing::scratch_dir("cli_fit_c");
    REQUIRE(fit_toy(c, "8").code == 0);
    CHECK(read_text(a / io::kFittedFile) != read_text(c / io::kFittedFile));
}

TEST_CASE("predict, sweep, risk and report on a fitted toy problem") {
    const auto dir = testing::scratch_dir("cli_pipeline");
    REQUIRE(fit_toy(dir).code == 0);
    const std::string d = dir.string();

    REQUIRE(run({"predict", "--draws-dir", d, "--loss", "squared_error"}).code == 0);
    REQUIRE(run({"predict", "--draws-dir", d, "--loss", "pdl", "--lambda", "0"}).code == 0);
    REQUIRE(run({"predict", "--draws-dir", d, "--loss", "linex", "--lambda", "-0.6"}).code == 0);
    CHECK(fs::exists(dir / "predict_squared_error.csv"));
    CHECK(fs::exists(dir / "predict_linex_-0.6.csv"));
    const auto sq = io::read_predictor_table(dir / "predict_squared_error.csv");
    const auto p0 = io::read_predictor_table(dir / "predict_pdl_0.csv");
    REQUIRE(sq.rows.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) CHECK(sq.rows[i].predictor == p0.rows[i].predictor);

    const auto sw = run({"sweep", "--draws-dir", d, "--loss", "pdl"});
    REQUIRE_MESSAGE(sw.code == 0, sw.err);
    CHECK(data_rows(dir / "sweep_pdl.csv") == 60);
    CHECK(data_rows(dir / "sweep_pdl_warnings.csv") == 0);
    REQUIRE(run({"sweep", "--draws-dir", d, "--loss", "linex"}).code == 0);
    CHECK(data_rows(dir / "sweep_linex.csv") == 60);

    const auto rr = run({"risk", "--draws-dir", d, "--table", (dir / "predict_squared_error.csv").string(), "--table",
                         "asym=" + (dir / "predict_linex_-0.6.csv").string(), "--true-loss", "squared_error",
                         "--true-loss", "linex:-0.6"});
    REQUIRE_MESSAGE(rr.code == 0, rr.err);
    CHECK(data_rows(dir / "risk_rr.csv") == 8);
    CHECK(data_rows(dir / "risk_summary.csv") == 4);
    CHECK(rr.out.find("asym") != std::string::npos);

    const auto rep = run({"report", "--draws-dir", d});
    REQUIRE_MESSAGE(rep.code == 0, rep.err);
    CHECK(rep.out.find("rho") != std::string::npos);
    CHECK(fs::exists(dir / "param_summary.csv"));
}

TEST_CASE("sweep through zero with --any-sign records the skipped point") {
    const auto dir = testing::scratch_dir("cli_anysign");
    REQUIRE(fit_toy(dir).code == 0);
    const std::string d = dir.string();
    CHECK(run({"sweep", "--draws-dir", d, "--loss", "linex", "--grid", "-0.2:0.2:0.1"}).code == 2);
    const auto r = run({"sweep", "--draws-dir", d, "--loss", "linex", "--grid", "-0.2:0.2:0.1", "--any-sign"});
    REQUIRE(r.code == 0);
    CHECK(data_rows(dir / "sweep_linex.csv") == 4);
    CHECK(data_rows(dir / "sweep_linex_warnings.csv") == 1);
    CHECK(r.err.find("warning") != std::string::npos);
}

TEST_CASE("exit codes") {
    const auto dir = testing::scratch_dir("cli_errors");
    const auto fx = testing::fixtures_dir();
    REQUIRE(fit_toy(dir).code == 0);
    const std::string d = dir.string();

    CHECK(run({"predict", "--draws-dir", d, "--loss", "linex", "--lambda", "0"}).code == 2);
    CHECK(run({"predict", "--draws-dir", d, "--loss", "huber"}).code == 2);
    CHECK(run({"risk", "--draws-dir", d, "--table", "nowhere.csv", "--true-loss", "squared_error"}).code == 2);
    CHECK(run({"predict", "--draws-dir", (dir / "missing").string(), "--loss", "squared_error"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"--help"}).code == 0);

    const auto unknown = run({"fit", "--data", (fx / "toy_data.csv").string(), "--adjacency",
                              (fx / "toy_adjacency_unknown.csv").string(), "--out-dir", (dir / "u").string()});
    CHECK(unknown.code == 2);
    CHECK(unknown.err.find("C") != std::string::npos);

    // negative fitted values cannot enter the power divergence loss
    const auto neg = testing::scratch_dir("cli_negative");
    {
        std::ofstream(neg / "data.csv") << "region_id,z\nA,-3.0\nB,-4.5\n";
    }
    REQUIRE(run({"fit", "--data", (neg / "data.csv").string(), "--adjacency", (fx / "toy_adjacency.csv").string(),
                 "--out-dir", (neg / "fit").string(), "--iters", "600", "--burn-in", "100"})
                .code == 0);
    CHECK(run({"predict", "--draws-dir", (neg / "fit").string(), "--loss", "pdl", "--lambda", "2"}).code == 4);

    // the report refuses inputs that changed since the fit
    const auto moved = testing::scratch_dir("cli_changed");
    fs::copy_file(fx / "toy_data.csv", moved / "data.csv");
    REQUIRE(run({"fit", "--data", (moved / "data.csv").string(), "--adjacency", (fx / "toy_adjacency.csv").string(),
                 "--out-dir", (moved / "fit").string(), "--iters", "600", "--burn-in", "100"})
                .code == 0);
    {
        std::ofstream(moved / "data.csv", std::ios::app) << "\n";
    }
    CHECK(run({"report", "--draws-dir", (moved / "fit").string()}).code == 2);
    CHECK(run({"report", "--draws-dir", (moved / "fit").string(), "--no-verify"}).code == 0);
}
