#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "bmnn/experiment.hpp"

using namespace bmnn;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
    std::vector<char*> argv;
    args.insert(args.begin(), "bmnn");
    argv.reserve(args.size());
    for (auto& a : args) argv.push_back(a.data());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("bmnn_cli_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string read_file(const std::string& p) {
    std::ifstream f(p);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Strips the wall_time_s column (last) from data rows so reruns compare equal.
std::string strip_wall_time(const std::string& csv) {
    std::stringstream in(csv), out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '#' && line.find(',') != std::string::npos &&
            line.rfind("condition,", 0) != 0) {
            line = line.substr(0, line.rfind(','));
        }
        out << line << "\n";
    }
    return out.str();
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
    CHECK(run_cli({"gen", "--task", "no_such_task", "--n", "10", "--out", "/tmp/x.bmnd"}) ==
          kExitUsage);
    CHECK(run_cli({"frobnicate"}) == kExitUsage);
    CHECK(run_cli({"gen", "--badflag"}) == kExitUsage);
}

TEST_CASE("gen refuses to overwrite without --force") {
    TempDir tmp;
    std::string out = tmp.file("ds.bmnd");
    std::ofstream(out) << "placeholder";
    CHECK(run_cli({"gen", "--task", "blnt_shrp", "--n", "10", "--seed", "1", "--out", out}) ==
          kExitOverwriteRefused);
    CHECK(run_cli({"gen", "--task", "blnt_shrp", "--n", "10", "--seed", "1", "--out", out,
                   "--force"}) == kExitOk);
    CHECK(fs::file_size(out) > 22);
}

TEST_CASE("train exits 4 when the dataset file is missing") {
    TempDir tmp;
    CHECK(run_cli({"train", "--data", tmp.file("absent.bmnd"), "--out", tmp.file("out")}) ==
          kExitMissingInput);
}

TEST_CASE("compose-train exits 4 when a checkpoint is missing") {
    TempDir tmp;
    std::string ds = tmp.file("ds.bmnd");
    REQUIRE(run_cli({"gen", "--task", "blnt_shrp", "--n", "12", "--seed", "3", "--out", ds}) ==
            kExitOk);
    CHECK(run_cli({"compose-train", "--data", ds, "--block", "0-50-50", "--originals",
                   tmp.file("no.bmnc"), "--out", tmp.file("out")}) == kExitMissingInput);
}

TEST_CASE("eval exits 4 on missing inputs") {
    TempDir tmp;
    CHECK(run_cli({"eval", "--net", tmp.file("no.bmnc"), "--data", tmp.file("no.bmnd")}) ==
          kExitMissingInput);
}

TEST_CASE("report exits 5 when no rows exist") {
    TempDir tmp;
    CHECK(run_cli({"report", "--in", tmp.file("")}) == kExitEmptyReport);
}

TEST_CASE("gen/train/eval/report round trip at toy scale") {
    TempDir tmp;
    std::string ds = tmp.file("blnt_shrp.bmnd");
    REQUIRE(run_cli({"gen", "--task", "blnt_shrp", "--n", "140", "--seed", "5", "--out", ds}) ==
            kExitOk);

    // Tiny network via config file; flags override the seed inside.
    std::string config = tmp.file("cfg.json");
    std::ofstream(config) << R"({"hidden": [8, 4], "seed": 99, "max_epochs": 2,
                                 "n_train": 120, "n_valid": 10, "n_test": 10})";
    std::string out1 = tmp.file("run1");
    REQUIRE(run_cli({"train", "--config", config, "--data", ds, "--seed", "7", "--out", out1}) ==
            kExitOk);
    CHECK(fs::exists(out1 + "/blnt_shrp_scratch_rep0.bmnc"));
    CHECK(fs::exists(out1 + "/blnt_shrp_scratch_rep0.json"));
    CHECK(fs::exists(out1 + "/results.csv"));

    CHECK(run_cli({"eval", "--net", out1 + "/blnt_shrp_scratch_rep0.bmnc", "--data", ds}) ==
          kExitOk);

    // Rerun with identical config into a second directory: identical rows.
    std::string out2 = tmp.file("run2");
    REQUIRE(run_cli({"train", "--config", config, "--data", ds, "--seed", "7", "--out", out2}) ==
            kExitOk);
    CHECK(strip_wall_time(read_file(out1 + "/results.csv")) ==
          strip_wall_time(read_file(out2 + "/results.csv")));

    CHECK(run_cli({"report", "--in", tmp.file(""), "--out", tmp.file("table.csv")}) == kExitOk);
    CHECK(fs::exists(tmp.file("table.csv")));
}

TEST_CASE("csv rows survive the write/read cycle") {
    TempDir tmp;
    std::string path = tmp.file("rows.csv");
    CsvRow row{"blnt_shrp", "blnt_shrp_ln", "0-50-50", 2, 12, 3.25, 17, 17802, 248054, 12.5};
    append_csv_row(path, row, "cafe0123");
    CsvFile csv = read_csv(path);
    REQUIRE(csv.rows.size() == 1);
    CHECK(csv.rows[0].condition == "blnt_shrp");
    CHECK(csv.rows[0].originals == "blnt_shrp_ln");
    CHECK(csv.rows[0].block == "0-50-50");
    CHECK(csv.rows[0].replicate == 2);
    CHECK(csv.rows[0].seed == 12);
    CHECK(csv.rows[0].test_error_pct == doctest::Approx(3.25));
    CHECK(csv.rows[0].best_epoch == 17);
    CHECK(csv.rows[0].trainable_params == 17802);
    CHECK(csv.rows[0].total_params == 248054);
    CHECK(csv.generator_versions == std::set<uint32_t>{kGeneratorVersion});
}

TEST_CASE("build_report groups rows and marks improvements") {
    std::vector<CsvRow> rows;
    auto add = [&](const char* cond, const char* origs, const char* block, double err) {
        CsvRow r;
        r.condition = cond;
        r.originals = origs;
        r.block = block;
        r.test_error_pct = err;
        r.trainable_params = block[0] ? 17802 : 230252;
        rows.push_back(r);
    };
    for (double e : {3.1, 2.4, 3.6, 3.0, 3.3}) add("ang_crs", "", "", e);
    for (double e : {2.7, 2.4, 3.3}) add("ang_crs", "ang_crs_ln", "0-50-50", e);
    for (double e : {9.0, 8.5, 9.4}) add("ang_crs_ln", "ang_crs", "0-50-50", e);

    auto report = build_report(rows);
    REQUIRE(report.size() == 3);
    for (const auto& r : report) {
        if (r.condition == "ang_crs" && r.originals.empty()) {
            CHECK(r.median == doctest::Approx(3.1));
            CHECK(r.min == doctest::Approx(2.4));
            CHECK(r.max == doctest::Approx(3.6));
            CHECK_FALSE(r.improved);
        } else if (r.condition == "ang_crs") {
            CHECK(r.median == doctest::Approx(2.7));
            CHECK(r.improved);  // 2.7 beats the scratch 3.1
        } else {
            CHECK(r.condition == "ang_crs_ln");
            CHECK_FALSE(r.improved);  // no scratch row for this condition
        }
    }
    std::string text = format_report(report);
    CHECK(text.find("3.1 (2.4–3.6)") != std::string::npos);
    CHECK(text.find("ang_crs (ang_crs_ln) *") != std::string::npos);
}

TEST_CASE("config hash ignores filesystem locations") {
    ExperimentConfig a, b;
    a.data = "/somewhere/x.bmnd";
    b.data = "/elsewhere/y.bmnd";
    a.out = "outA";
    b.out = "outB";
    CHECK(a.config_hash() == b.config_hash());
    b.seed = a.seed + 1;
    CHECK(a.config_hash() != b.config_hash());
}
