#ifndef UBSYM_REPORT_HPP
#define UBSYM_REPORT_HPP

#include <cstdio>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ubsym/cover.hpp"

namespace ubsym {

// ---------------------------------------------------------------------------
// Ground-truth labels

struct LabeledSite
{
    Site site;
    bool bad = false;
};

struct LabelFile
{
    std::vector<LabeledSite> sites;
    std::vector<std::string> errors;
};

/// Lines of the form `site <function> <block> <index> {bad|good}`;
/// `#` comments and blank lines ignored.
inline LabelFile parse_labels(const std::string& text)
{
    LabelFile out;
    std::istringstream in(text);
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string head;
        if (!(ls >> head)) continue;
        std::string fn, block, verdict;
        int index = 0;
        if (head != "site" || !(ls >> fn >> block >> index >> verdict) ||
            (verdict != "bad" && verdict != "good")) {
            out.errors.push_back("line " + std::to_string(lineNo) +
                                 ": expected 'site <function> <block> <index> bad|good'");
            continue;
        }
        out.sites.push_back({Site{fn, block, index}, verdict == "bad"});
    }
    return out;
}

/// Labels must reference statements that exist in the program.
inline std::vector<std::string> check_labels(const Program& p, const LabelFile& labels)
{
    std::vector<std::string> errors;
    for (const auto& l : labels.sites) {
        const Function* f = p.function(l.site.function);
        const Block* b = f ? f->block(l.site.block) : nullptr;
        if (!b || l.site.stmtIndex < 0 ||
            l.site.stmtIndex >= static_cast<int>(b->stmts.size()))
            errors.push_back("label references unknown site " + l.site.function + " " +
                             l.site.block + " " + std::to_string(l.site.stmtIndex));
    }
    return errors;
}

// ---------------------------------------------------------------------------
// Metrics

struct MetricCounters
{
    long tp = 0, fp = 0, tn = 0, fn = 0;

    MetricCounters& operator+=(const MetricCounters& o)
    {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }

    std::optional<double> precision() const
    {
        if (tp + fp == 0) return std::nullopt;
        return static_cast<double>(tp) / static_cast<double>(tp + fp);
    }
    std::optional<double> recall() const
    {
        if (tp + fn == 0) return std::nullopt;
        return static_cast<double>(tp) / static_cast<double>(tp + fn);
    }
    std::optional<double> accuracy() const
    {
        if (tp + tn + fp + fn == 0) return std::nullopt;
        return static_cast<double>(tp + tn) / static_cast<double>(tp + tn + fp + fn);
    }
};

/// Score findings against labels. A site counts as detected only when some
/// finding there is replay-confirmed; a timed-out analysis detects nothing,
/// so its labeled-vulnerable sites become false negatives.
inline MetricCounters compute_metrics(const std::vector<const Finding*>& findings,
                                      const std::vector<LabeledSite>& labels,
                                      bool timedOut = false)
{
    std::set<Site> confirmed;
    std::set<Site> any;
    if (!timedOut) {
        for (const Finding* f : findings) {
            any.insert(f->site);
            if (f->confirmation == Finding::Confirmation::ReplayConfirmed)
                confirmed.insert(f->site);
        }
    }
    MetricCounters m;
    std::set<Site> labeled;
    for (const auto& l : labels) {
        labeled.insert(l.site);
        if (l.bad) {
            if (confirmed.count(l.site)) ++m.tp;
            else ++m.fn;
        } else {
            if (confirmed.count(l.site)) ++m.fp;
            else if (!any.count(l.site)) ++m.tn;
        }
    }
    for (const auto& s : confirmed)
        if (!labeled.count(s)) ++m.fp; // confirmed finding at an unlabeled site
    return m;
}

// ---------------------------------------------------------------------------
// Report rendering

inline std::string site_to_string(const Site& s)
{
    return s.function + " " + s.block + " " + std::to_string(s.stmtIndex);
}

inline std::string value_to_string(const Value& v)
{
    if (!v.isStr) return "int " + std::to_string(v.i);
    std::string out = "str \"";
    for (char c : v.s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

inline const char* to_string(Finding::Confirmation c)
{
    switch (c) {
    case Finding::Confirmation::ReplayConfirmed: return "ReplayConfirmed";
    case Finding::Confirmation::UnitOnly: return "UnitOnly";
    case Finding::Confirmation::Unconfirmed: return "Unconfirmed";
    }
    return "?";
}

inline std::string format_metric(const std::optional<double>& v)
{
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *v);
    return buf;
}

struct ClassOutcome
{
    VulnClass cls;
    AnalysisResult analysis;
    double seconds = 0.0;
};

struct ProgramReport
{
    std::string path;
    std::vector<Diagnostic> parseErrors;
    std::vector<ClassOutcome> outcomes;
    std::vector<LabeledSite> labels;
    std::vector<std::string> labelErrors;
    bool dumpTrees = false;
};

inline std::vector<const Finding*> findings_of(const AnalysisResult& a)
{
    std::vector<const Finding*> out;
    for (const auto& u : a.units)
        for (const auto& f : u.cover.findings) out.push_back(&f);
    return out;
}

/// Key/value blocks, one per finding, in a stable order.
inline std::string render_program_report(const ProgramReport& r)
{
    std::string out;
    out += "program: " + r.path + "\n";
    if (!r.parseErrors.empty()) {
        out += "status: parse-error\n";
        for (const auto& d : r.parseErrors)
            out += "error: " + std::to_string(d.line) + ":" +
                   std::to_string(d.column) + ": " + d.message + "\n";
        out += "\n";
        return out;
    }
    for (const auto& err : r.labelErrors) out += "label-error: " + err + "\n";
    for (const auto& oc : r.outcomes) {
        out += "class: " + std::string(to_string(oc.cls)) + "\n";
        out += "status: " + std::string(oc.analysis.timedOut ? "timeout" : "ok") + "\n";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", oc.seconds);
        out += "time_secs: " + std::string(buf) + "\n";
        for (const auto& u : oc.analysis.units) {
            out += "unit: " + u.unit.function + "\n";
            for (const auto& f : u.cover.findings) {
                out += "finding:\n";
                out += "  site: " + site_to_string(f.site) + "\n";
                out += "  kind: " + std::string(to_string(f.kind)) + "\n";
                out += "  confirmation: " + std::string(to_string(f.confirmation)) + "\n";
                out += "  condition: " + to_string(f.condition) + "\n";
                if (!f.unitModel.empty()) {
                    out += "  unit_model:";
                    for (const auto& [var, v] : f.unitModel)
                        out += " " + pretty_var(var) + "=" + std::to_string(v);
                    out += "\n";
                }
                if (!f.witness.empty()) {
                    out += "  witness:";
                    bool first = true;
                    for (const auto& v : f.witness) {
                        out += (first ? " " : " | ") + value_to_string(v);
                        first = false;
                    }
                    out += "\n";
                }
            }
            for (const auto& s : u.cover.staticallySafeSites)
                out += "statically_safe: " + site_to_string(s) + "\n";
            if (r.dumpTrees) {
                out += "tree:\n";
                std::istringstream lines(dump_tree(u.tree));
                std::string line;
                while (std::getline(lines, line)) out += "  " + line + "\n";
            }
        }
        for (const auto& w : oc.analysis.warnings)
            out += "warning: " + site_to_string(w.site) + ": " + w.message + "\n";
    }
    out += "\n";
    return out;
}

inline std::string render_metrics(VulnClass cls, const MetricCounters& m)
{
    std::string out;
    out += "metrics " + std::string(to_string(cls)) + ":\n";
    out += "  TP: " + std::to_string(m.tp) + "\n";
    out += "  FP: " + std::to_string(m.fp) + "\n";
    out += "  TN: " + std::to_string(m.tn) + "\n";
    out += "  FN: " + std::to_string(m.fn) + "\n";
    out += "  precision: " + format_metric(m.precision()) + "\n";
    out += "  recall: " + format_metric(m.recall()) + "\n";
    out += "  accuracy: " + format_metric(m.accuracy()) + "\n";
    return out;
}

} // namespace ubsym

#endif
