#include "mtrail/error.hpp"
#include "mtrail/evaluation.hpp"
#include "mtrail/history_json.hpp"
#include "mtrail/process.hpp"
#include "mtrail/service.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace mtrail;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitTrace = 3;

struct Locator {
    std::string repo;
    std::string commit;
    std::string file;
    std::string method;
    int line = 0;
};

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    if (line.find('\t') != std::string::npos) {
        std::stringstream in(line);
        std::string field;
        while (std::getline(in, field, '\t')) {
            out.push_back(field);
        }
    } else {
        std::stringstream in(line);
        std::string field;
        while (in >> field) {
            out.push_back(field);
        }
    }
    return out;
}

/// One locator per line: repo, commit, file, method, line (tab- or
/// space-separated). Blank lines and '#' comments are skipped.
std::vector<Locator> read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::InvalidArgument, "cannot read manifest " + path.string());
    }
    std::vector<Locator> out;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 5) {
            throw Error(ErrorCode::InvalidArgument,
                        path.string() + ":" + std::to_string(number) + ": expected 5 fields");
        }
        Locator loc{fields[0], fields[1], fields[2], fields[3], 0};
        try {
            loc.line = std::stoi(fields[4]);
        } catch (const std::exception&) {
            loc.line = 0;
        }
        if (loc.line < 1) {
            throw Error(ErrorCode::InvalidArgument, path.string() + ":" + std::to_string(number) + ": bad line");
        }
        out.push_back(std::move(loc));
    }
    return out;
}

void write_output(const std::optional<std::string>& out_path, const std::string& text) {
    if (!out_path) {
        std::cout << text << std::flush;
        return;
    }
    std::ofstream out(*out_path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
        throw Error(ErrorCode::InvalidArgument, "cannot write " + *out_path);
    }
}

fs::path self_executable(const char* argv0) {
    std::error_code ec;
    auto path = fs::read_symlink("/proc/self/exe", ec);
    return ec ? fs::absolute(argv0) : path;
}

struct TraceFlags {
    std::optional<std::string> repo;
    std::optional<std::string> commit;
    std::optional<std::string> file;
    std::optional<std::string> method;
    std::optional<int> line;
    std::optional<std::string> out;
    double threshold_same = 0.70;
    double threshold_cross = 0.75;
    bool no_formatting = false;
    bool no_javadoc = false;
    bool no_annotations = false;
    std::optional<std::size_t> max_commits;
    std::optional<std::string> cache_dir;
    std::optional<std::string> manifest;

    [[nodiscard]] TracerConfig config() const {
        TracerConfig c;
        c.thresholds = {threshold_same, threshold_cross};
        c.include_formatting = !no_formatting;
        c.include_javadoc = !no_javadoc;
        c.include_annotations = !no_annotations;
        c.max_commits = max_commits;
        return c;
    }
};

TraceRequest request_for(const Locator& loc, const TracerConfig& config) {
    return {loc.repo, loc.commit, loc.file, loc.method, loc.line, config};
}

int run_trace_command(const CLI::App& app, const TraceFlags& flags) {
    const auto config = flags.config();
    try {
        config.thresholds.validate();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    const fs::path cache = flags.cache_dir ? fs::path(*flags.cache_dir) : default_cache_dir();

    std::vector<Locator> locators;
    if (flags.manifest) {
        try {
            locators = read_manifest(*flags.manifest);
        } catch (const Error& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitUsage;
        }
    } else {
        std::vector<std::string> missing;
        if (!flags.repo) missing.push_back("--repo");
        if (!flags.commit) missing.push_back("--commit");
        if (!flags.file) missing.push_back("--file");
        if (!flags.method) missing.push_back("--method");
        if (!flags.line) missing.push_back("--line");
        if (!missing.empty()) {
            std::cerr << "error: missing required option";
            for (const auto& m : missing) {
                std::cerr << " " << m;
            }
            std::cerr << "\n\n" << app.help();
            return kExitUsage;
        }
        if (*flags.line < 1) {
            std::cerr << "error: --line must be >= 1\n";
            return kExitUsage;
        }
        locators.push_back({*flags.repo, *flags.commit, *flags.file, *flags.method, *flags.line});
    }

    std::string output;
    int status = kExitOk;
    for (const auto& loc : locators) {
        try {
            output += run_trace(request_for(loc, config), cache);
        } catch (const Error& e) {
            std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
            if (!flags.out) {
                output += error_document(to_string(e.code()), e.what());
            }
            status = kExitTrace;
        }
    }
    try {
        write_output(flags.out, output);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitTrace;
    }
    return status;
}

struct EvaluateFlags {
    std::string oracle_dir;
    std::string format = "native";
    std::optional<std::string> results_dir;
    std::string tool = "mtrail";
    std::optional<std::string> oracle_name;
    std::vector<std::string> kinds;
    std::optional<std::string> json_out;
    std::optional<std::string> repo_root;
    std::optional<std::string> cache_dir;
};

int run_evaluate(const EvaluateFlags& flags) {
    const auto format = oracle_format_from_string(flags.format);
    if (!format) {
        std::cerr << "error: unknown oracle format " << flags.format << "\n";
        return kExitUsage;
    }
    ChangeKinds filter;
    if (flags.kinds.empty()) {
        filter.insert(all_change_kinds().begin(), all_change_kinds().end());
    }
    for (const auto& name : flags.kinds) {
        const auto kind = change_kind_from_string(name);
        if (!kind) {
            std::cerr << "error: unknown change kind " << name << "\n";
            return kExitUsage;
        }
        filter.insert(*kind);
    }
    const auto load = load_oracle(flags.oracle_dir, *format);
    for (const auto& d : load.diagnostics) {
        std::cerr << "warning: " << d << "\n";
    }
    if (load.entries.empty()) {
        std::cerr << "error: no oracle entries in " << flags.oracle_dir << "\n";
        return kExitTrace;
    }
    const fs::path cache = flags.cache_dir ? fs::path(*flags.cache_dir) : default_cache_dir();

    std::vector<std::pair<std::string, MetricCounts>> per_method;
    for (const auto& entry : load.entries) {
        std::vector<ObservedChange> actual;
        try {
            if (flags.results_dir) {
                const auto path = fs::path(*flags.results_dir) / (entry.name + ".json");
                std::ifstream in(path, std::ios::binary);
                if (!in) {
                    throw Error(ErrorCode::InvalidArgument, "no result file " + path.string());
                }
                std::stringstream text;
                text << in.rdbuf();
                actual = observed(deserialize(text.str()));
            } else {
                std::string repo = entry.repository;
                if (flags.repo_root && fs::exists(fs::path(*flags.repo_root) / repo)) {
                    repo = (fs::path(*flags.repo_root) / repo).string();
                }
                TraceRequest request{repo, entry.start_commit, entry.file, entry.method_name, entry.start_line, {}};
                actual = observed(deserialize(run_trace(request, cache)));
            }
        } catch (const Error& e) {
            std::cerr << "warning: " << entry.name << ": " << e.what() << "\n";
        }
        const auto expected = observed(entry);
        per_method.emplace_back(entry.name, compare(actual, expected, filter));
    }
    const std::string label = flags.oracle_name ? *flags.oracle_name : fs::path(flags.oracle_dir).filename().string();
    const std::vector rows{evaluate_row(label, flags.tool, std::move(per_method))};
    std::cout << format_table(rows);
    if (flags.json_out) {
        write_output(flags.json_out, format_report_json(rows));
    }
    return kExitOk;
}

int run_bench(const fs::path& self, const std::string& manifest, const std::optional<std::string>& out,
              const std::optional<std::string>& cache_dir) {
    std::vector<Locator> locators;
    try {
        locators = read_manifest(manifest);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    if (locators.empty()) {
        std::cerr << "error: manifest is empty\n";
        return kExitUsage;
    }
    nlohmann::ordered_json report;
    auto runs = nlohmann::ordered_json::array();
    std::vector<double> seconds;
    int status = kExitOk;
    for (const auto& loc : locators) {
        std::vector<std::string> args{"--repo", loc.repo, "--commit", loc.commit, "--file", loc.file,
                                      "--method", loc.method, "--line", std::to_string(loc.line), "--out",
                                      "/dev/null"};
        if (cache_dir) {
            args.push_back("--cache-dir");
            args.push_back(*cache_dir);
        }
        // A fresh process per locator keeps every run cold.
        const auto start = std::chrono::steady_clock::now();
        const auto result = run_process(self.string(), args);
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        seconds.push_back(elapsed);
        if (!result.ok()) {
            status = kExitTrace;
            std::cerr << result.err;
        }
        nlohmann::ordered_json run;
        run["repo"] = loc.repo;
        run["commit"] = loc.commit;
        run["file"] = loc.file;
        run["method"] = loc.method;
        run["line"] = loc.line;
        run["seconds"] = elapsed;
        run["exit_code"] = result.exit_code;
        runs.push_back(std::move(run));
    }
    const auto stats = runtime_stats(seconds);
    report["runs"] = std::move(runs);
    report["runtime_stats"] = {{"mean", stats.mean}, {"median", stats.median}, {"min", stats.min}, {"max", stats.max}};
    write_output(out, report.dump(2) + "\n");
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trace the change history of a Java method through a Git repository."};
    app.name("mtrail");
    app.require_subcommand(0, 1);

    TraceFlags flags;
    app.add_option("--repo", flags.repo, "Local repository path or clone URL");
    app.add_option("--commit", flags.commit, "Commit to start from (full or abbreviated id, or a ref)");
    app.add_option("--file", flags.file, "Path of the Java file at that commit");
    app.add_option("--method", flags.method, "Method name");
    app.add_option("--line", flags.line, "Line where the method declaration begins");
    app.add_option("--out", flags.out, "Write JSON here instead of stdout");
    app.add_option("--threshold-same", flags.threshold_same, "Body similarity threshold within a file")
        ->capture_default_str();
    app.add_option("--threshold-cross", flags.threshold_cross, "Body similarity threshold across files")
        ->capture_default_str();
    app.add_flag("--no-formatting", flags.no_formatting, "Do not report formatting-only changes");
    app.add_flag("--no-javadoc", flags.no_javadoc, "Do not report Javadoc changes");
    app.add_flag("--no-annotations", flags.no_annotations, "Do not report annotation changes");
    app.add_option("--max-commits", flags.max_commits, "Stop after visiting this many commits")
        ->check(CLI::PositiveNumber);
    app.add_option("--cache-dir", flags.cache_dir, "Where remote repositories are cloned");
    app.add_option("--manifest", flags.manifest, "File with one locator per line; traces each");

    EvaluateFlags eval;
    auto* evaluate = app.add_subcommand("evaluate", "Score histories against an oracle directory");
    evaluate->add_option("--oracle", eval.oracle_dir, "Directory of oracle JSON files")->required();
    evaluate->add_option("--format", eval.format, "native, codeshovel or codetracker")->capture_default_str();
    evaluate->add_option("--results", eval.results_dir, "Directory of <entry>.json histories (skips tracing)");
    evaluate->add_option("--tool", eval.tool, "Tool label for the report")->capture_default_str();
    evaluate->add_option("--name", eval.oracle_name, "Oracle label for the report");
    evaluate->add_option("--kinds", eval.kinds, "Change kinds to keep (default: all)")->delimiter(',');
    evaluate->add_option("--json", eval.json_out, "Also write the report as JSON");
    evaluate->add_option("--repo-root", eval.repo_root, "Resolve oracle repository names under this directory");
    evaluate->add_option("--cache-dir", eval.cache_dir, "Where remote repositories are cloned");

    std::string bench_manifest;
    std::optional<std::string> bench_out;
    std::optional<std::string> bench_cache;
    auto* bench = app.add_subcommand("bench", "Time each manifest locator in a fresh process");
    bench->add_option("--manifest", bench_manifest, "File with one locator per line")->required();
    bench->add_option("--out", bench_out, "Write the JSON report here instead of stdout");
    bench->add_option("--cache-dir", bench_cache, "Where remote repositories are cloned");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (evaluate->parsed()) {
            return run_evaluate(eval);
        }
        if (bench->parsed()) {
            return run_bench(self_executable(argv[0]), bench_manifest, bench_out, bench_cache);
        }
        return run_trace_command(app, flags);
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return kExitTrace;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitTrace;
    }
}
