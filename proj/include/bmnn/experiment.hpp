#ifndef BMNN_EXPERIMENT_HPP
#define BMNN_EXPERIMENT_HPP

#include <set>
#include <string>
#include <vector>

#include "bmnn/trainer.hpp"

namespace bmnn {

// Stable process exit codes.
constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitOverwriteRefused = 3;
constexpr int kExitMissingInput = 4;
constexpr int kExitEmptyReport = 5;

struct ExperimentConfig {
    std::string task;
    std::string block;                    // "A-B-C"; empty for scratch training
    std::vector<std::string> originals;   // checkpoint paths
    uint32_t n = 70000;                   // desk-scale default
    size_t n_train = 60000, n_valid = 5000, n_test = 5000;
    uint64_t seed = 1;
    int replicates = 1;
    std::vector<int> hidden = {200, 100, 50};
    TrainConfig train;
    std::string data;     // dataset file
    std::string out = "."; // gen: dataset file; train/compose-train: output dir
    bool force = false;

    // Location-independent identity: experiment parameters plus the content
    // hashes of any original networks, but no filesystem paths.
    std::string config_hash(const std::vector<uint64_t>& original_hashes = {}) const;
};

// Reads a JSON config file into `cfg` (unknown keys rejected).
void load_config_file(const std::string& path, ExperimentConfig& cfg);

// One line of the fixed-column results CSV.
struct CsvRow {
    std::string condition;
    std::string originals;  // '+'-joined task names; empty for scratch
    std::string block;      // "A-B-C"; empty for scratch
    int replicate = 0;
    uint64_t seed = 0;
    double test_error_pct = 0.0;
    int best_epoch = 0;
    size_t trainable_params = 0;
    size_t total_params = 0;
    double wall_time_s = 0.0;
};

// Appends a row, creating the file (with its header) on first use. Every
// run stamps generator version and config hash as comment lines.
void append_csv_row(const std::string& path, const CsvRow& row, const std::string& config_hash);

struct CsvFile {
    std::vector<CsvRow> rows;
    std::set<uint32_t> generator_versions;
};
CsvFile read_csv(const std::string& path);

struct ReportRow {
    std::string condition, originals, block;
    int n_replicates = 0;
    double median = 0.0, min = 0.0, max = 0.0;
    size_t trainable_params = 0;
    bool improved = false;  // beats the scratch median for the same condition
};

std::vector<ReportRow> build_report(const std::vector<CsvRow>& rows);
std::string format_report(const std::vector<ReportRow>& rows);

// Subcommand entry points; return process exit codes.
int cmd_gen(const ExperimentConfig& cfg);
int cmd_train(const ExperimentConfig& cfg);
int cmd_compose_train(const ExperimentConfig& cfg);
int cmd_eval(const std::string& net_path, const std::string& data_path);
int cmd_report(const std::string& in_dir, const std::string& out_csv);

int cli_main(int argc, char** argv);

}  // namespace bmnn

#endif
