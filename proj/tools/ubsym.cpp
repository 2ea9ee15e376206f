// Command-line front end: analyze mini-IR programs or corpus directories for
// the four memory-corruption classes, confirm findings by replay, and emit a
// text report with metrics against ground-truth labels.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ubsym/parse.hpp"
#include "ubsym/report.hpp"

namespace fs = std::filesystem;
using namespace ubsym;

namespace {

struct Job
{
    std::string path;
    std::vector<VulnClass> classes;
    std::string labelsPath; // empty = no labels
};

std::vector<VulnClass> classes_for(const std::string& sel)
{
    if (sel == "all")
        return {VulnClass::HeapOverflow, VulnClass::StackOverflow,
                VulnClass::UseAfterFree, VulnClass::DoubleFree};
    return {*vuln_class_from_string(sel)};
}

std::string sibling_labels(const fs::path& mir)
{
    fs::path lab = mir;
    lab.replace_extension(".labels");
    return fs::exists(lab) ? lab.string() : std::string{};
}

std::optional<std::string> read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct JobResult
{
    ProgramReport report;
    // per class: counters against this program's labels
    std::map<VulnClass, MetricCounters> metrics;
    bool hadLabels = false;
};

JobResult run_job(const Job& job, const AnalyzeOptions& base, long timeoutSecs,
                  bool dumpTrees, const std::string& labelsOverride)
{
    JobResult out;
    out.report.path = job.path;
    out.report.dumpTrees = dumpTrees;

    auto text = read_file(job.path);
    if (!text) {
        out.report.parseErrors.push_back({0, 0, "cannot read file"});
        return out;
    }
    auto parsed = parse_program(*text);
    if (!parsed.ok()) {
        out.report.parseErrors = parsed.diagnostics;
        return out;
    }
    const Program& p = *parsed.program;

    std::string labelsPath = labelsOverride.empty() ? job.labelsPath : labelsOverride;
    LabelFile labels;
    if (!labelsPath.empty()) {
        if (auto lt = read_file(labelsPath)) {
            labels = parse_labels(*lt);
            for (const auto& e : check_labels(p, labels))
                out.report.labelErrors.push_back(e);
            for (const auto& e : labels.errors) out.report.labelErrors.push_back(e);
            out.hadLabels = true;
        } else {
            out.report.labelErrors.push_back("cannot read " + labelsPath);
        }
    }
    out.report.labels = labels.sites;

    AnalyzeOptions opts = base;
    if (timeoutSecs > 0)
        opts.deadline = std::chrono::steady_clock::now() +
                        std::chrono::seconds(timeoutSecs);

    for (VulnClass cls : job.classes) {
        ClassOutcome oc;
        oc.cls = cls;
        auto t0 = std::chrono::steady_clock::now();
        oc.analysis = analyze(p, cls, opts);
        oc.seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
        if (out.hadLabels)
            out.metrics[cls] = compute_metrics(findings_of(oc.analysis), labels.sites,
                                               oc.analysis.timedOut);
        out.report.outcomes.push_back(std::move(oc));
    }
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"unit-level symbolic detection of memory-corruption bugs in mini-IR"};

    std::vector<std::string> paths;
    std::string classSel = "all";
    long timeoutSecs = 900;
    int mcRunsCap = 512;
    std::uint64_t seed = 0;
    int threshold = 30;
    bool dumpTree = false;
    std::string labelsPath;
    int jobs = 1;
    std::string outputPath;

    app.add_option("paths", paths, "mini-IR files or corpus directories")->required();
    app.add_option("--class", classSel, "vulnerability class to analyze")
        ->check(CLI::IsMember({"heap", "stack", "uaf", "df", "all"}))
        ->capture_default_str();
    app.add_option("--timeout-secs", timeoutSecs, "per-program analysis timeout")
        ->capture_default_str();
    app.add_option("--mc-runs-cap", mcRunsCap, "simulation budget per unit")
        ->capture_default_str();
    app.add_option("--seed", seed, "random seed")->capture_default_str();
    app.add_option("--threshold", threshold, "map-inference ancestor walk-up bound")
        ->capture_default_str();
    app.add_flag("--dump-tree", dumpTree, "include constraint trees in the report");
    app.add_option("--labels", labelsPath, "ground-truth label file (single program)");
    app.add_option("--jobs", jobs, "programs analyzed in parallel")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("-o,--output", outputPath, "report file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        // expand paths into per-program jobs
        std::vector<Job> jobsList;
        for (const auto& path : paths) {
            fs::path p(path);
            if (fs::is_directory(p)) {
                std::vector<fs::path> files;
                for (const auto& entry : fs::recursive_directory_iterator(p))
                    if (entry.is_regular_file() && entry.path().extension() == ".mir")
                        files.push_back(entry.path());
                std::sort(files.begin(), files.end());
                for (const auto& f : files) {
                    Job job;
                    job.path = f.string();
                    job.labelsPath = sibling_labels(f);
                    std::string parent = f.parent_path().filename().string();
                    if (classSel == "all" && vuln_class_from_string(parent))
                        job.classes = {*vuln_class_from_string(parent)};
                    else
                        job.classes = classes_for(classSel);
                    jobsList.push_back(std::move(job));
                }
            } else if (fs::is_regular_file(p)) {
                Job job;
                job.path = p.string();
                job.labelsPath = sibling_labels(p);
                job.classes = classes_for(classSel);
                jobsList.push_back(std::move(job));
            } else {
                std::cerr << "ubsym: no such file or directory: " << path << "\n";
                return 1;
            }
        }
        if (jobsList.empty()) {
            std::cerr << "ubsym: no .mir programs found\n";
            return 1;
        }

        AnalyzeOptions base;
        base.seed = seed;
        base.mcRunsCap = mcRunsCap;
        base.threshold = threshold;

        // analyze in parallel, assemble in input order
        std::vector<JobResult> results(jobsList.size());
        std::size_t next = 0;
        while (next < jobsList.size()) {
            std::size_t batch =
                std::min<std::size_t>(static_cast<std::size_t>(jobs),
                                      jobsList.size() - next);
            std::vector<std::future<JobResult>> futures;
            for (std::size_t i = 0; i < batch; ++i) {
                const Job& job = jobsList[next + i];
                futures.push_back(std::async(std::launch::async, [&, i] {
                    return run_job(jobsList[next + i], base, timeoutSecs, dumpTree,
                                   labelsPath);
                }));
            }
            for (std::size_t i = 0; i < batch; ++i)
                results[next + i] = futures[i].get();
            next += batch;
        }

        std::string report;
        std::map<VulnClass, MetricCounters> totals;
        bool anyLabels = false;
        for (const auto& r : results) {
            report += render_program_report(r.report);
            for (const auto& [cls, m] : r.metrics) {
                totals[cls] += m;
                anyLabels = true;
            }
        }
        if (anyLabels)
            for (const auto& [cls, m] : totals) report += render_metrics(cls, m);

        if (outputPath.empty()) {
            std::cout << report;
        } else {
            std::ofstream outf(outputPath, std::ios::binary);
            if (!outf) {
                std::cerr << "ubsym: cannot write " << outputPath << "\n";
                return 2;
            }
            outf << report;
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "ubsym: internal error: " << e.what() << "\n";
        return 2;
    }
}
