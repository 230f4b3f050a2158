// pvq: sampling, baselines, experiments and coverage reports from the shell.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "pvq/pvq.hpp"

namespace {

using nlohmann::json;
using namespace pvq;

enum ExitCode { kOk = 0, kRuntime = 1, kUsage = 2, kData = 3 };

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InputOptions {
    std::string input;
    std::string schema;
    std::string label;
    bool raw = false;
};

struct ScheduleOptions {
    std::size_t rough = 10;
    std::size_t fine = 10;
    std::optional<double> radius;

    som::TrainSchedule build() const {
        som::TrainSchedule s;
        s.rough_epochs = rough;
        s.fine_epochs = fine;
        s.rough_radius_start = radius;
        s.validate();
        return s;
    }
};

void add_input(CLI::App* cmd, InputOptions& o, const char* what) {
    cmd->add_option("--input", o.input, what)->required()->check(CLI::ExistingFile);
    cmd->add_option("--schema", o.schema, "JSON schema file; default: all columns numeric")
        ->check(CLI::ExistingFile);
    cmd->add_option("--label", o.label, "label column (name or index) when no schema is given");
}

void add_schedule(CLI::App* cmd, ScheduleOptions& o) {
    cmd->add_option("--rough-epochs", o.rough, "rough-phase batch epochs")->capture_default_str();
    cmd->add_option("--fine-epochs", o.fine, "fine-phase batch epochs")->capture_default_str();
    cmd->add_option("--radius", o.radius, "initial neighbourhood radius; default max(rows,cols)/4");
}

ingest::Schema schema_of(const InputOptions& o) {
    ingest::Schema s = o.schema.empty() ? ingest::Schema{} : ingest::Schema::load(o.schema);
    if (!o.label.empty()) {
        if (!s.columns.empty()) throw UsageError("--label only applies without a column list in the schema");
        s.label = o.label;
    }
    return s;
}

Dataset load(const std::string& path, const ingest::Schema& s) { return ingest::load_delimited(path, s); }

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

void write_json(const std::string& path, const json& j) { open_out(path) << j.dump(2) << '\n'; }

double since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json input_json(const InputOptions& o, const Dataset& ds) {
    return json{{"input", o.input},
                {"schema", o.schema.empty() ? json(nullptr) : json(o.schema)},
                {"rows", ds.rows()},
                {"features", ds.features.cols()},
                {"standardized", !o.raw}};
}

/// Writes the sample in the requested format plus its sidecars.
void emit_sample(const std::string& out, const std::string& format, const SampleResult& r, const Dataset& source,
                 const json& parameters, double seconds) {
    json stats = io::to_json(r, format == "json");
    stats["metadata"] = io::metadata(parameters);
    if (format == "csv") {
        auto f = open_out(out);
        io::write_sample_csv(f, r, source);
        write_json(out + ".json", stats);
    } else {
        write_json(out, stats);
    }
    write_json(out + ".timing.json", json{{"wall_clock_seconds", seconds}});
    std::cerr << r.sampler << ": " << r.rows.size() << " rows from " << r.input_rows << " (bound " << r.size_bound
              << ", " << r.shard_count << " shard" << (r.shard_count == 1 ? "" : "s") << ")\n";
}

int cmd_sample(const InputOptions& in, std::optional<std::size_t> target, std::optional<std::size_t> shards,
               std::uint64_t seed, std::size_t workers, const ScheduleOptions& sched, const std::string& format,
               const std::string& out) {
    if (target.has_value() == shards.has_value()) throw UsageError("give exactly one of --target-size or --shards");
    const auto schedule = sched.build();
    const auto ds = load(in.input, schema_of(in));
    const DataMatrix work = in.raw ? ds.features : ingest::fit_scaler(ds.features).apply(ds.features);
    const auto t0 = std::chrono::steady_clock::now();
    const RandomSource rng(seed);
    const SampleResult r = target ? pvq_to_target(work, *target, schedule, rng, workers)
                                  : pvq::pvq(work, *shards, schedule, rng, workers);
    const double seconds = since(t0);
    json params = input_json(in, ds);
    params["command"] = "sample";
    params["seed"] = seed;
    params["target_size"] = target ? json(*target) : json(nullptr);
    params["shards"] = r.shard_count;
    params["schedule"] = io::schedule_json(schedule);
    emit_sample(out, format, r, ds, params, seconds);
    return kOk;
}

int cmd_baseline(const InputOptions& in, std::size_t size, std::uint64_t seed, const std::string& format,
                 const std::string& out) {
    const auto ds = load(in.input, schema_of(in));
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = eval::random_sample(ds.features, size, RandomSource(seed));
    const double seconds = since(t0);
    json params = input_json(in, ds);
    params["command"] = "baseline";
    params["seed"] = seed;
    params["size"] = size;
    params["standardized"] = false;
    emit_sample(out, format, r, ds, params, seconds);
    return kOk;
}

struct ExperimentOptions {
    InputOptions train;
    std::string test;
    std::size_t size = 0;
    std::size_t reps = 50;
    std::size_t k = 5;
    std::optional<std::size_t> test_size;
    std::string labels5;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    ScheduleOptions sched;
    std::string out;
};

int cmd_experiment(const ExperimentOptions& o) {
    const auto schema = schema_of(o.train);
    const auto train = load(o.train.input, schema);
    const auto test = load(o.test, schema);
    eval::ExperimentConfig cfg;
    cfg.sample_size = o.size;
    cfg.repetitions = o.reps;
    cfg.seed_base = o.seed;
    cfg.k = o.k;
    cfg.test_size = o.test_size;
    cfg.schedule = o.sched.build();
    cfg.workers = o.workers;
    if (!o.labels5.empty()) {
        cfg.label_map = ingest::LabelMap::load(o.labels5);
        std::vector<std::string> unmapped;
        ingest::aggregate_labels(*train.labels, *cfg.label_map, &unmapped);
        for (const auto& l : unmapped) std::cerr << "warning: label '" << l << "' is not in the label map\n";
    }

    cfg.sampler = eval::SamplerKind::pvq;
    const auto pvq_runs = eval::run_experiment(cfg, train, test);
    cfg.sampler = eval::SamplerKind::random;
    const auto random_runs = eval::run_experiment(cfg, train, test);

    std::vector<eval::RunRecord> all;
    for (std::size_t r = 0; r < o.reps; ++r) {
        all.push_back(pvq_runs[r]);
        all.push_back(random_runs[r]);
    }
    auto runs = open_out(o.out + ".runs.csv");
    io::write_runs_csv(runs, all, o.k);
    auto timing = open_out(o.out + ".timing.csv");
    io::write_timings_csv(timing, all);

    const auto summary = eval::summarize(all);
    json comparison;
    for (const auto& m : eval::summary_metrics()) {
        comparison[m] = json{{"pvq_median_ge_random", summary.at("pvq").at(m).median >= summary.at("random").at(m).median},
                             {"paired_pvq_ge_random", eval::paired_win_rate(pvq_runs, random_runs, m)}};
    }
    json params{{"command", "experiment"},
                {"train", o.train.input},
                {"test", o.test},
                {"schema", o.train.schema.empty() ? json(nullptr) : json(o.train.schema)},
                {"train_rows", train.rows()},
                {"test_rows", test.rows()},
                {"sample_size", o.size},
                {"repetitions", o.reps},
                {"seed", o.seed},
                {"classifier", json{{"name", "knn"}, {"k", o.k}, {"standardized", true}}},
                {"test_size", cfg.resolved_test_size(test.rows())},
                {"label_map", o.labels5.empty() ? json(nullptr) : json(o.labels5)},
                {"resample_per_repetition", true},
                {"schedule", io::schedule_json(cfg.schedule)}};
    write_json(o.out + ".summary.json",
               json{{"metadata", io::metadata(params)}, {"summary", io::to_json(summary)}, {"comparison", comparison}});
    for (const char* s : {"pvq", "random"}) {
        const auto& m = summary.at(s);
        std::cerr << s << ": median coverage " << m.at("classes_covered").median << ", macro_recall "
                  << m.at("macro_recall").median << ", mcc " << m.at("mcc").median << '\n';
    }
    return kOk;
}

std::vector<std::string> read_reference(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto t = ingest::detail::trim(item);
            if (!t.empty()) out.emplace(t);
        }
    }
    return {out.begin(), out.end()};
}

int cmd_coverage(const std::string& input, const std::string& column, const std::string& reference,
                 const std::string& out) {
    std::ifstream in(input);
    if (!in) throw std::runtime_error("cannot open " + input);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string_view> fields;
    std::optional<std::size_t> label_col;
    std::size_t width = 0;
    std::set<std::string> seen;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (ingest::detail::trim(line).empty()) continue;
        ingest::detail::split(line, ',', fields);
        if (!label_col) {
            width = fields.size();
            for (std::size_t i = 0; i < fields.size(); ++i)
                if (fields[i] == column) label_col = i;
            if (!label_col) throw ingest::ParseError(line_no, "no '" + column + "' column in header");
            continue;
        }
        if (fields.size() != width)
            throw ingest::ParseError(line_no, "expected " + std::to_string(width) + " columns, found " +
                                                  std::to_string(fields.size()));
        seen.emplace(fields[*label_col]);
        ++rows;
    }
    if (rows == 0) throw ingest::ParseError(line_no, "no data rows");

    json report{{"input", input}, {"rows", rows}, {"coverage", seen.size()},
                {"labels", std::vector<std::string>(seen.begin(), seen.end())}};
    std::string text = std::to_string(seen.size());
    if (!reference.empty()) {
        const auto ref = read_reference(reference);
        std::vector<std::string> missing, extra;
        std::size_t hit = 0;
        for (const auto& r : ref) (seen.count(r) ? (void)++hit : missing.push_back(r));
        for (const auto& s : seen)
            if (!std::binary_search(ref.begin(), ref.end(), s)) extra.push_back(s);
        text = std::to_string(hit) + "/" + std::to_string(ref.size());
        report["reference_size"] = ref.size();
        report["covered_reference"] = hit;
        report["missing"] = missing;
        report["not_in_reference"] = extra;
    }
    report["report"] = text;
    std::cout << text << '\n';
    if (!out.empty()) write_json(out, json{{"metadata", io::metadata(json{{"command", "coverage"}})}, {"coverage", report}});
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PVQ: label-free representative sampling with parallel vector quantization"};
    app.set_version_flag("--version", std::string(io::kVersion));
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    std::size_t workers = default_workers();
    std::string format = "csv";
    std::string out;

    InputOptions sample_in;
    ScheduleOptions sample_sched;
    std::optional<std::size_t> target, shards;
    auto* sample = app.add_subcommand("sample", "PVQ sample of a delimited file");
    add_input(sample, sample_in, "input file");
    sample->add_flag("--raw", sample_in.raw, "sample unscaled features instead of z-scores");
    auto* t_opt = sample->add_option("--target-size", target, "approximate sample size; picks the shard count")
                      ->check(CLI::PositiveNumber);
    auto* l_opt = sample->add_option("--shards", shards, "number of shards L")->check(CLI::PositiveNumber);
    t_opt->excludes(l_opt);
    add_schedule(sample, sample_sched);

    InputOptions base_in;
    std::size_t base_size = 0;
    auto* baseline = app.add_subcommand("baseline", "uniform random sample without replacement");
    add_input(baseline, base_in, "input file");
    baseline->add_option("--size,--target-size", base_size, "sample size")->required();

    ExperimentOptions ex;
    auto* experiment = app.add_subcommand("experiment", "paired PVQ vs random repetitions scored by kNN");
    add_input(experiment, ex.train, "training window");
    experiment->add_option("--test", ex.test, "test window")->required()->check(CLI::ExistingFile);
    experiment->add_option("--size,--target-size", ex.size, "training sample size")->required();
    experiment->add_option("--reps", ex.reps, "repetitions")->capture_default_str();
    experiment->add_option("--k", ex.k, "kNN neighbours")->capture_default_str()->check(CLI::PositiveNumber);
    experiment->add_option("--test-size", ex.test_size, "test rows per repetition; default 3.2% of the test window");
    experiment->add_option("--labels-5", ex.labels5, "label map file applied to both windows")
        ->check(CLI::ExistingFile);
    add_schedule(experiment, ex.sched);

    for (auto* cmd : {sample, baseline, experiment}) {
        cmd->add_option("--seed", seed, "seed")->capture_default_str();
        cmd->add_option("--out", out, "output path (prefix for experiment)")->required();
    }
    for (auto* cmd : {sample, experiment})
        cmd->add_option("--workers", workers, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    for (auto* cmd : {sample, baseline})
        cmd->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

    std::string cov_input, cov_column = "label", cov_ref, cov_out;
    auto* coverage = app.add_subcommand("coverage", "distinct labels in a sampled CSV");
    coverage->add_option("--input", cov_input, "sampled CSV with a header")->required()->check(CLI::ExistingFile);
    coverage->add_option("--column", cov_column, "label column name")->capture_default_str();
    coverage->add_option("--reference", cov_ref, "reference label list (comma or newline separated)")
        ->check(CLI::ExistingFile);
    coverage->add_option("--out", cov_out, "optional JSON report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*sample) return cmd_sample(sample_in, target, shards, seed, workers, sample_sched, format, out);
        if (*baseline) return cmd_baseline(base_in, base_size, seed, format, out);
        if (*experiment) {
            ex.seed = seed;
            ex.workers = workers;
            ex.out = out;
            return cmd_experiment(ex);
        }
        if (*coverage) return cmd_coverage(cov_input, cov_column, cov_ref, cov_out);
    } catch (const ingest::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kUsage;
}
