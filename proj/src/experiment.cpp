#include "bmnn/experiment.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "bmnn/errors.hpp"

namespace fs = std::filesystem;

namespace bmnn {

using json = nlohmann::json;

namespace {

std::string hex64s(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

json train_config_json(const TrainConfig& t) {
    return {{"batch_size", t.batch_size}, {"lr0", t.lr0},           {"lr_decay", t.lr_decay},
            {"patience", t.patience},     {"max_epochs", t.max_epochs},
            {"beta", t.loss.beta},        {"lambda", t.loss.lambda}, {"rho", t.loss.rho}};
}

}  // namespace

std::string ExperimentConfig::config_hash(const std::vector<uint64_t>& original_hashes) const {
    json basis;
    basis["generator_version"] = kGeneratorVersion;
    basis["task"] = task;
    basis["block"] = block;
    basis["n"] = n;
    basis["split"] = {n_train, n_valid, n_test};
    basis["seed"] = seed;
    basis["replicates"] = replicates;
    basis["hidden"] = hidden;
    basis["train"] = train_config_json(train);
    json oh = json::array();
    for (uint64_t h : original_hashes) oh.push_back(hex64s(h));
    basis["original_hashes"] = std::move(oh);
    const std::string text = basis.dump();
    return hex64s(fnv1a64(text.data(), text.size()));
}

void load_config_file(const std::string& path, ExperimentConfig& cfg) {
    std::ifstream f(path);
    if (!f) throw IoError("config: cannot open " + path);
    json j;
    try {
        j = json::parse(f);
    } catch (const json::exception& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "task") cfg.task = value.get<std::string>();
        else if (key == "block") cfg.block = value.get<std::string>();
        else if (key == "originals") cfg.originals = value.get<std::vector<std::string>>();
        else if (key == "n") cfg.n = value.get<uint32_t>();
        else if (key == "n_train") cfg.n_train = value.get<size_t>();
        else if (key == "n_valid") cfg.n_valid = value.get<size_t>();
        else if (key == "n_test") cfg.n_test = value.get<size_t>();
        else if (key == "seed") cfg.seed = value.get<uint64_t>();
        else if (key == "replicates") cfg.replicates = value.get<int>();
        else if (key == "hidden") cfg.hidden = value.get<std::vector<int>>();
        else if (key == "batch_size") cfg.train.batch_size = value.get<int>();
        else if (key == "lr0") cfg.train.lr0 = value.get<double>();
        else if (key == "lr_decay") cfg.train.lr_decay = value.get<double>();
        else if (key == "patience") cfg.train.patience = value.get<int>();
        else if (key == "max_epochs") cfg.train.max_epochs = value.get<int>();
        else if (key == "beta") cfg.train.loss.beta = value.get<double>();
        else if (key == "lambda") cfg.train.loss.lambda = value.get<double>();
        else if (key == "rho") cfg.train.loss.rho = value.get<double>();
        else if (key == "data") cfg.data = value.get<std::string>();
        else if (key == "out") cfg.out = value.get<std::string>();
        else throw FormatError("config: unknown key '" + key + "'");
    }
}

// ---------------------------------------------------------------------------
// Results CSV

namespace {

constexpr const char* kCsvHeader =
    "condition,originals,block,replicate,seed,test_error_pct,best_epoch,trainable_params,"
    "total_params,wall_time_s";

}  // namespace

void append_csv_row(const std::string& path, const CsvRow& row, const std::string& config_hash) {
    const bool fresh = !fs::exists(path);
    std::ofstream f(path, std::ios::app);
    if (!f) throw IoError("append_csv_row: cannot open " + path);
    if (fresh) {
        f << "# generator_version=" << kGeneratorVersion << "\n";
        f << kCsvHeader << "\n";
    }
    f << "# config_hash=" << config_hash << "\n";
    f << row.condition << ',' << row.originals << ',' << row.block << ',' << row.replicate << ','
      << row.seed << ',' << fmt("%.4f", row.test_error_pct) << ',' << row.best_epoch << ','
      << row.trainable_params << ',' << row.total_params << ',' << fmt("%.3f", row.wall_time_s)
      << "\n";
    if (!f) throw IoError("append_csv_row: write failed for " + path);
}

CsvFile read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("read_csv: cannot open " + path);
    CsvFile out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto eq = line.find("generator_version=");
            if (eq != std::string::npos)
                out.generator_versions.insert(
                    static_cast<uint32_t>(std::stoul(line.substr(eq + 18))));
            continue;
        }
        if (line.rfind("condition,", 0) == 0) continue;  // header
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 10) throw FormatError("read_csv: malformed row in " + path);
        CsvRow r;
        r.condition = fields[0];
        r.originals = fields[1];
        r.block = fields[2];
        r.replicate = std::stoi(fields[3]);
        r.seed = std::stoull(fields[4]);
        r.test_error_pct = std::stod(fields[5]);
        r.best_epoch = std::stoi(fields[6]);
        r.trainable_params = std::stoull(fields[7]);
        r.total_params = std::stoull(fields[8]);
        r.wall_time_s = std::stod(fields[9]);
        out.rows.push_back(std::move(r));
    }
    return out;
}

std::vector<ReportRow> build_report(const std::vector<CsvRow>& rows) {
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<const CsvRow*>> groups;
    for (const auto& r : rows) groups[{r.condition, r.originals, r.block}].push_back(&r);

    // Scratch medians per condition, for the improvement marks.
    std::map<std::string, double> scratch_median;
    for (const auto& [key, members] : groups) {
        const auto& [cond, origs, block] = key;
        if (!origs.empty() || !block.empty()) continue;
        std::vector<double> errs;
        for (const CsvRow* r : members) errs.push_back(r->test_error_pct);
        scratch_median[cond] = median_of(errs);
    }

    std::vector<ReportRow> out;
    for (const auto& [key, members] : groups) {
        const auto& [cond, origs, block] = key;
        ReportRow rr;
        rr.condition = cond;
        rr.originals = origs;
        rr.block = block;
        rr.n_replicates = static_cast<int>(members.size());
        std::vector<double> errs;
        for (const CsvRow* r : members) errs.push_back(r->test_error_pct);
        rr.median = median_of(errs);
        rr.min = *std::min_element(errs.begin(), errs.end());
        rr.max = *std::max_element(errs.begin(), errs.end());
        rr.trainable_params = members.front()->trainable_params;
        const bool is_block_row = !origs.empty() || !block.empty();
        auto it = scratch_median.find(cond);
        rr.improved = is_block_row && it != scratch_median.end() && rr.median < it->second;
        out.push_back(std::move(rr));
    }
    return out;
}

std::string format_report(const std::vector<ReportRow>& rows) {
    std::ostringstream os;
    size_t cond_w = 20;
    for (const auto& r : rows) {
        std::string label = r.condition + (r.originals.empty() ? "" : " (" + r.originals + ")");
        cond_w = std::max(cond_w, label.size() + 2);
    }
    os << std::left;
    os.width(static_cast<std::streamsize>(cond_w));
    os << "condition";
    os << std::left;
    os.width(12);
    os << "block";
    os.width(6);
    os << "runs";
    os.width(22);
    os << "error % median (range)";
    os << "trainable\n";
    for (const auto& r : rows) {
        std::string label = r.condition + (r.originals.empty() ? "" : " (" + r.originals + ")");
        if (r.improved) label += " *";
        os.width(static_cast<std::streamsize>(cond_w));
        os << label;
        os.width(12);
        os << (r.block.empty() ? "-" : r.block);
        os.width(6);
        os << r.n_replicates;
        std::string cell = fmt("%.1f", r.median) + " (" + fmt("%.1f", r.min) + "–" +
                           fmt("%.1f", r.max) + ")";
        os.width(22);
        os << cell;
        os << r.trainable_params << "\n";
    }
    os << "* median beats the scratch median for the condition\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Subcommands

namespace {

constexpr uint64_t kInitStream = 0xA111;  // parameter-init sub-stream tag

Task parse_task_or_throw(const std::string& name) {
    auto t = task_from_name(name);
    if (!t) throw InvalidInput("unknown task '" + name + "'");
    return *t;
}

SplitSpec split_spec_for(const ExperimentConfig& cfg, size_t available) {
    SplitSpec s{cfg.n_train, cfg.n_valid, cfg.n_test};
    if (s.n_train + s.n_valid + s.n_test != available) {
        // Derive desk-scale proportions (6/7 train, remainder split evenly)
        // when the configured sizes do not match the dataset on disk.
        s.n_train = available * 6 / 7;
        s.n_valid = (available - s.n_train) / 2;
        s.n_test = available - s.n_train - s.n_valid;
    }
    return s;
}

void write_json_report(const std::string& path, const ExperimentConfig& cfg,
                       const std::string& config_hash, const std::string& originals_label,
                       int replicate, uint64_t run_seed, const TrainReport& rep,
                       const ParamCount& pc) {
    json j;
    j["generator_version"] = kGeneratorVersion;
    j["config_hash"] = config_hash;
    j["condition"] = cfg.task;
    j["originals"] = originals_label;
    j["block"] = cfg.block;
    j["replicate"] = replicate;
    j["seed"] = run_seed;
    j["train_config"] = train_config_json(cfg.train);
    json epochs = json::array();
    for (const auto& e : rep.epochs) {
        epochs.push_back({{"j", e.train_loss.j_total},
                          {"j1", e.train_loss.j1_nll},
                          {"j2", e.train_loss.j2_sparsity},
                          {"j3", e.train_loss.j3_weights},
                          {"valid_error_pct", e.valid_error_pct},
                          {"lr", e.lr}});
    }
    j["epochs"] = std::move(epochs);
    j["best_epoch"] = rep.best_epoch;
    j["best_valid_error_pct"] = rep.best_valid_error_pct;
    j["test_error_pct"] = rep.test_error_pct;
    j["trainable_params"] = pc.trainable;
    j["total_params"] = pc.total;
    j["wall_time_s"] = rep.wall_time_s;
    j["best_params_hash"] = hex64s(rep.best_params_hash);
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << j.dump(2) << "\n";
}

std::string original_label(const CompositeNetwork& net, const std::string& path) {
    auto it = net.provenance.find("task");
    if (it != net.provenance.end()) return it->second;
    return fs::path(path).stem().string();
}

}  // namespace

int cmd_gen(const ExperimentConfig& cfg) {
    Task task = parse_task_or_throw(cfg.task);
    if (cfg.out.empty() || cfg.out == ".") throw InvalidInput("gen: --out file required");
    if (fs::exists(cfg.out) && !cfg.force) {
        std::cerr << "gen: refusing to overwrite existing " << cfg.out
                  << " (pass --force to allow)\n";
        return kExitOverwriteRefused;
    }
    GenStats stats;
    Dataset ds = generate_dataset(task, cfg.n, cfg.seed, &stats);
    save_dataset(ds, cfg.out);
    std::cout << "wrote " << cfg.out << ": " << ds.size() << " samples of " << task_name(task)
              << " (seed " << cfg.seed << ")\n";
    std::cout << "  class 0 (" << class_name(task, 0) << "): " << stats.class_counts[0]
              << ", class 1 (" << class_name(task, 1) << "): " << stats.class_counts[1] << "\n";
    std::cout << "  scenes passing constraint validation: " << stats.scenes_validated << "/"
              << ds.size() << "\n";
    std::cout << "  config_hash=" << cfg.config_hash() << "\n";
    return kExitOk;
}

int cmd_train(const ExperimentConfig& cfg) {
    if (cfg.data.empty() || !fs::exists(cfg.data)) {
        std::cerr << "train: dataset file not found: " << cfg.data << "\n";
        return kExitMissingInput;
    }
    Dataset full = load_dataset(cfg.data);
    const Task task = full.task().value();
    ExperimentConfig eff = cfg;
    if (eff.task.empty()) eff.task = task_name(task);
    const std::string hash = eff.config_hash();
    SplitResult parts = split(full, split_spec_for(eff, full.size()), eff.seed);
    fs::create_directories(eff.out);

    std::vector<double> errors;
    for (int r = 0; r < eff.replicates; ++r) {
        const uint64_t run_seed = eff.seed + static_cast<uint64_t>(r);
        Rng init_rng(mix_seed(run_seed, kInitStream));
        CompositeNetwork net = make_scratch({static_cast<int>(full.width()), eff.hidden}, init_rng);
        TrainConfig tc = eff.train;
        tc.seed = run_seed;
        TrainReport rep = train(net, parts.train, parts.valid, parts.test, tc);
        ParamCount pc = param_count(net);

        net.provenance["task"] = eff.task;
        net.provenance["seed"] = std::to_string(run_seed);
        net.provenance["config_hash"] = hash;
        const std::string stem =
            eff.out + "/" + eff.task + "_scratch_rep" + std::to_string(r);
        save_checkpoint(net, stem + ".bmnc");
        write_json_report(stem + ".json", eff, hash, "", r, run_seed, rep, pc);
        append_csv_row(eff.out + "/results.csv",
                       {eff.task, "", "", r, run_seed, rep.test_error_pct, rep.best_epoch,
                        pc.trainable, pc.total, rep.wall_time_s},
                       hash);
        errors.push_back(rep.test_error_pct);
        std::cout << "replicate " << r << ": test error " << fmt("%.4f", rep.test_error_pct)
                  << "% (best epoch " << rep.best_epoch << ", "
                  << fmt("%.1f", rep.wall_time_s) << " s)\n";
    }
    if (errors.size() > 1) {
        std::cout << "median " << fmt("%.4f", median_of(errors)) << "% over " << errors.size()
                  << " replicates\n";
    }
    return kExitOk;
}

int cmd_compose_train(const ExperimentConfig& cfg) {
    if (cfg.data.empty() || !fs::exists(cfg.data)) {
        std::cerr << "compose-train: dataset file not found: " << cfg.data << "\n";
        return kExitMissingInput;
    }
    if (cfg.originals.empty()) throw InvalidInput("compose-train: at least one --originals path");
    for (const auto& p : cfg.originals) {
        if (!fs::exists(p)) {
            std::cerr << "compose-train: checkpoint not found: " << p << "\n";
            return kExitMissingInput;
        }
    }
    BlockSpec block = BlockSpec::parse(cfg.block);

    std::vector<CompositeNetwork> originals;
    std::vector<uint64_t> original_hashes;
    std::vector<std::string> labels;
    for (const auto& p : cfg.originals) {
        originals.push_back(load_checkpoint(p));  // hash-verified on load
        original_hashes.push_back(frozen_params_hash(originals.back()) ^
                                  trainable_params_hash(originals.back()));
        labels.push_back(original_label(originals.back(), p));
    }
    std::string originals_label;
    for (size_t i = 0; i < labels.size(); ++i)
        originals_label += (i ? "+" : "") + labels[i];

    Dataset full = load_dataset(cfg.data);
    ExperimentConfig eff = cfg;
    if (eff.task.empty()) eff.task = task_name(full.task().value());
    const std::string hash = eff.config_hash(original_hashes);
    SplitResult parts = split(full, split_spec_for(eff, full.size()), eff.seed);
    fs::create_directories(eff.out);

    std::vector<double> errors;
    for (int r = 0; r < eff.replicates; ++r) {
        const uint64_t run_seed = eff.seed + static_cast<uint64_t>(r);
        Rng init_rng(mix_seed(run_seed, kInitStream));
        CompositeNetwork net = compose(originals, block, init_rng);

        // Freeze-invariance check: originals' classifiers scored on the
        // held-out data before and after block training.
        std::vector<double> before;
        for (size_t o = 0; o < cfg.originals.size(); ++o)
            before.push_back(classifier_error(net, o, parts.valid));

        TrainConfig tc = eff.train;
        tc.seed = run_seed;
        TrainReport rep = train(net, parts.train, parts.valid, parts.test, tc);
        ParamCount pc = param_count(net);

        for (size_t o = 0; o < cfg.originals.size(); ++o) {
            double after = classifier_error(net, o, parts.valid);
            std::cout << "  frozen check [" << labels[o] << "]: valid error "
                      << fmt("%.4f", before[o]) << "% before, " << fmt("%.4f", after)
                      << "% after block training ("
                      << (after == before[o] ? "identical" : "MISMATCH") << ")\n";
        }

        net.provenance["task"] = eff.task;
        net.provenance["originals"] = originals_label;
        net.provenance["block"] = cfg.block;
        net.provenance["seed"] = std::to_string(run_seed);
        net.provenance["config_hash"] = hash;
        const std::string stem = eff.out + "/" + eff.task + "_on_" + originals_label + "_block_" +
                                 cfg.block + "_rep" + std::to_string(r);
        save_checkpoint(net, stem + ".bmnc");
        write_json_report(stem + ".json", eff, hash, originals_label, r, run_seed, rep, pc);
        append_csv_row(eff.out + "/results.csv",
                       {eff.task, originals_label, cfg.block, r, run_seed, rep.test_error_pct,
                        rep.best_epoch, pc.trainable, pc.total, rep.wall_time_s},
                       hash);
        errors.push_back(rep.test_error_pct);
        std::cout << "replicate " << r << ": test error " << fmt("%.4f", rep.test_error_pct)
                  << "% (trainable " << pc.trainable << " of " << pc.total << " params, best epoch "
                  << rep.best_epoch << ", " << fmt("%.1f", rep.wall_time_s) << " s)\n";
    }
    if (errors.size() > 1) {
        std::cout << "median " << fmt("%.4f", median_of(errors)) << "% over " << errors.size()
                  << " replicates\n";
    }
    return kExitOk;
}

int cmd_eval(const std::string& net_path, const std::string& data_path) {
    if (!fs::exists(net_path)) {
        std::cerr << "eval: checkpoint not found: " << net_path << "\n";
        return kExitMissingInput;
    }
    if (!fs::exists(data_path)) {
        std::cerr << "eval: dataset file not found: " << data_path << "\n";
        return kExitMissingInput;
    }
    CompositeNetwork net = load_checkpoint(net_path);
    Dataset ds = load_dataset(data_path);
    std::cout << "error: " << fmt("%.4f", evaluate(net, ds)) << "%\n";
    return kExitOk;
}

int cmd_report(const std::string& in_dir, const std::string& out_csv) {
    std::vector<std::string> files;
    if (fs::is_directory(in_dir)) {
        for (const auto& entry : fs::recursive_directory_iterator(in_dir))
            if (entry.is_regular_file() && entry.path().extension() == ".csv")
                files.push_back(entry.path().string());
        std::sort(files.begin(), files.end());
    } else if (fs::exists(in_dir)) {
        files.push_back(in_dir);
    }

    std::vector<CsvRow> rows;
    std::set<uint32_t> versions;
    for (const auto& f : files) {
        CsvFile csv = read_csv(f);
        versions.insert(csv.generator_versions.begin(), csv.generator_versions.end());
        rows.insert(rows.end(), csv.rows.begin(), csv.rows.end());
    }
    if (versions.size() > 1) {
        std::cerr << "report: refusing to merge rows from mismatched generator versions\n";
        return kExitInternal;
    }
    if (rows.empty()) {
        std::cerr << "report: no result rows under " << in_dir << "\n";
        return kExitEmptyReport;
    }

    auto report = build_report(rows);
    std::cout << format_report(report);
    if (!out_csv.empty()) {
        std::ofstream f(out_csv);
        if (!f) throw IoError("report: cannot write " + out_csv);
        f << "condition,originals,block,replicates,median,min,max,trainable_params,improved\n";
        for (const auto& r : report)
            f << r.condition << ',' << r.originals << ',' << r.block << ',' << r.n_replicates
              << ',' << fmt("%.4f", r.median) << ',' << fmt("%.4f", r.min) << ','
              << fmt("%.4f", r.max) << ',' << r.trainable_params << ',' << (r.improved ? 1 : 0)
              << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

int cli_main(int argc, char** argv) {
    CLI::App app{"Block-modular feedforward networks on synthetic line/angle tasks"};
    app.require_subcommand(1);

    ExperimentConfig cfg;
    std::string config_path, net_path, report_in = ".", report_out;
    std::string originals_csv;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file (flags override)");
        sub->add_option("--seed", cfg.seed, "experiment seed");
        sub->add_option("--out", cfg.out, "output file or directory");
    };

    CLI::App* gen = app.add_subcommand("gen", "generate a task dataset");
    add_common(gen);
    gen->add_option("--task", cfg.task, "task condition name");
    gen->add_option("--n", cfg.n, "number of samples");
    gen->add_flag("--force", cfg.force, "overwrite an existing output file");

    CLI::App* tr = app.add_subcommand("train", "train a scratch network");
    add_common(tr);
    tr->add_option("--data", cfg.data, "dataset file");
    tr->add_option("--replicates", cfg.replicates, "independent replicates");
    tr->add_option("--max-epochs", cfg.train.max_epochs, "epoch cap");

    CLI::App* ct = app.add_subcommand("compose-train", "train a block on frozen originals");
    add_common(ct);
    ct->add_option("--data", cfg.data, "dataset file");
    ct->add_option("--block", cfg.block, "block triplet A-B-C");
    ct->add_option("--originals", originals_csv, "comma-separated checkpoint paths");
    ct->add_option("--replicates", cfg.replicates, "independent replicates");
    ct->add_option("--max-epochs", cfg.train.max_epochs, "epoch cap");

    CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    ev->add_option("--net", net_path, "checkpoint file")->required();
    ev->add_option("--data", cfg.data, "dataset file")->required();

    CLI::App* rp = app.add_subcommand("report", "aggregate results CSVs into a table");
    rp->add_option("--in", report_in, "directory or CSV file");
    rp->add_option("--out", report_out, "also write the table as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        // Flags override the config file: reload the file first, then
        // re-apply any explicitly passed options.
        if (!config_path.empty()) {
            ExperimentConfig from_file;
            load_config_file(config_path, from_file);
            auto keep = [&](const std::string& flag, auto& target, auto& source) {
                for (CLI::App* sub : {gen, tr, ct}) {
                    auto* opt = sub->get_option_no_throw(flag);
                    if (opt && opt->count() > 0) return;  // flag wins
                }
                target = source;
            };
            keep("--task", cfg.task, from_file.task);
            keep("--seed", cfg.seed, from_file.seed);
            keep("--n", cfg.n, from_file.n);
            keep("--out", cfg.out, from_file.out);
            keep("--data", cfg.data, from_file.data);
            keep("--block", cfg.block, from_file.block);
            keep("--replicates", cfg.replicates, from_file.replicates);
            keep("--max-epochs", cfg.train.max_epochs, from_file.train.max_epochs);
            cfg.n_train = from_file.n_train;
            cfg.n_valid = from_file.n_valid;
            cfg.n_test = from_file.n_test;
            cfg.hidden = from_file.hidden;
            cfg.train.batch_size = from_file.train.batch_size;
            cfg.train.lr0 = from_file.train.lr0;
            cfg.train.lr_decay = from_file.train.lr_decay;
            cfg.train.patience = from_file.train.patience;
            cfg.train.loss = from_file.train.loss;
            if (originals_csv.empty()) cfg.originals = from_file.originals;
        }
        if (!originals_csv.empty()) {
            cfg.originals.clear();
            std::stringstream ss(originals_csv);
            std::string part;
            while (std::getline(ss, part, ',')) cfg.originals.push_back(part);
        }

        if (gen->parsed()) return cmd_gen(cfg);
        if (tr->parsed()) return cmd_train(cfg);
        if (ct->parsed()) return cmd_compose_train(cfg);
        if (ev->parsed()) return cmd_eval(net_path, cfg.data);
        if (rp->parsed()) return cmd_report(report_in, report_out);
        return kExitUsage;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace bmnn
