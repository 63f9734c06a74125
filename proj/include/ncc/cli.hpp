#ifndef NCC_CLI_HPP
#define NCC_CLI_HPP

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "classify.hpp"
#include "job.hpp"
#include "search.hpp"

namespace ncc
{

inline constexpr int exit_conclusive = 0;
inline constexpr int exit_error = 1;
inline constexpr int exit_undecided = 2;

// Mass column on the left, one row per mass, counts on the first row.
inline std::string table_text(const JobSpec &job, const CountTable &t)
{
    const std::vector<std::string> head = {"concave", "collinear", "convex", "spatial", "unresolved", "total"};
    const std::vector<std::size_t> val = {t.concave, t.collinear, t.convex, t.spatial, t.unresolved, t.total};
    std::vector<std::string> left;
    for (std::size_t i = 0; i < job.masses.size(); ++i) {
        std::ostringstream os;
        os << "m_" << i + 1 << " = ";
        if (i < job.mass_text.size()) {
            os << job.mass_text[i];
        }
        left.push_back(os.str());
    }
    std::size_t lw = 6;
    for (const auto &l : left) {
        lw = std::max(lw, l.size());
    }
    std::ostringstream os;
    os << std::left << std::setw(static_cast<int>(lw)) << "masses";
    for (const auto &h : head) {
        os << " | " << h;
    }
    os << '\n' << std::string(lw, '-');
    for (const auto &h : head) {
        os << "-+-" << std::string(h.size(), '-');
    }
    os << '\n';
    for (std::size_t r = 0; r < left.size(); ++r) {
        os << std::left << std::setw(static_cast<int>(lw)) << left[r];
        for (std::size_t c = 0; c < head.size(); ++c) {
            os << " | " << std::right << std::setw(static_cast<int>(head[c].size()));
            if (r == 0) {
                os << val[c];
            } else {
                os << "";
            }
        }
        os << '\n';
    }
    return os.str();
}

inline nlohmann::json interval_json(const Interval &v) { return nlohmann::json::array({v.lo(), v.hi()}); }

inline nlohmann::json report_json(const JobSpec &job, const SearchReport &rep, const Classification &cl)
{
    using nlohmann::json;
    json j;
    j["dimension"] = job.d;
    j["group"] = job.group == Group::SO2 ? "so2" : "so3";
    json ms = json::array();
    for (std::size_t i = 0; i < job.masses.size(); ++i) {
        ms.push_back({{"text", i < job.mass_text.size() ? job.mass_text[i] : ""},
                      {"enclosure", interval_json(job.masses[i])}});
    }
    j["masses"] = ms;
    j["runs"] = rep.runs;
    j["conclusive"] = rep.conclusive();
    j["boundary_touch"] = rep.boundary_touch;
    j["undecided"] = rep.undecided.size();
    j["excluded"] = rep.excluded_count;
    const SearchStats &s = rep.stats;
    j["stats"] = {{"boxes", s.boxes},
                  {"bisections", s.bisections},
                  {"excluded_residual", s.excluded_residual},
                  {"excluded_constraint", s.excluded_constraint},
                  {"excluded_virial", s.excluded_virial},
                  {"excluded_krawczyk", s.excluded_krawczyk},
                  {"repairs", s.repairs},
                  {"repair_failures", s.repair_failures},
                  {"conjecture_probes", s.conjecture_probes},
                  {"rs_only", s.rs_only},
                  {"unproven", s.unproven}};
    const CountTable &t = cl.table;
    j["table"] = {{"concave", t.concave},       {"collinear", t.collinear},   {"convex", t.convex},
                  {"spatial", t.spatial},       {"unresolved", t.unresolved}, {"total", t.total},
                  {"run_upper_bound", t.run_upper_bound}};
    json rel = json::array();
    for (const auto &r : job.relations) {
        rel.push_back({{"name", r.name}, {"enclosure", interval_json(r.value)}, {"holds", r.holds()}});
    }
    j["relations"] = rel;
    json cls = json::array();
    for (const auto &c : cl.classes) {
        json mid = json::array(), rad = json::array(), sig = json::array();
        for (const auto &q : c.config.q) {
            json m = json::array(), r = json::array();
            for (const auto &v : q) {
                m.push_back(v.mid());
                r.push_back(v.rad());
            }
            mid.push_back(m);
            rad.push_back(r);
        }
        for (const auto &e : c.sig) {
            sig.push_back({{"i", e.i}, {"j", e.j}, {"r", interval_json(e.r)}});
        }
        cls.push_back({{"shape", to_string(c.shape)},
                       {"members", c.members},
                       {"runs", std::vector<int>(c.runs.begin(), c.runs.end())},
                       {"consistent", c.consistent},
                       {"chirality", chirality(c.config)},
                       {"midpoint", mid},
                       {"radius", rad},
                       {"signature", sig}});
    }
    j["classes"] = cls;
    return j;
}

inline void write_file(const std::string &path, const std::string &text)
{
    std::ofstream f(path);
    if (!f) {
        throw JobError("cannot write " + path);
    }
    f << text;
}

// Whole front-end; returns the process exit code.
inline int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Counts normalized central configurations with interval certificates"};
    std::string config, table_out, json_out, checkpoint;
    bool resume = false, deterministic = false;
    unsigned workers = 0;
    std::size_t max_boxes = 0;
    app.add_option("--config", config, "job file")->required();
    app.add_flag("--resume", resume, "continue from the checkpoint");
    app.add_option("--workers", workers, "worker threads");
    app.add_option("--table-out", table_out, "count table (.csv for CSV, aligned text otherwise)");
    app.add_option("--json-out", json_out, "classes as JSON");
    app.add_option("--checkpoint", checkpoint, "checkpoint file");
    app.add_option("--max-boxes", max_boxes, "box budget per task");
    app.add_flag("--deterministic", deterministic, "single worker");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_conclusive : exit_error;
    }

    try {
        JobSpec job = parse_job(config);
        if (!table_out.empty()) {
            job.table_out = table_out;
        }
        if (!json_out.empty()) {
            job.json_out = json_out;
        }
        if (!checkpoint.empty()) {
            job.options.checkpoint = checkpoint;
        }
        if (max_boxes > 0) {
            job.options.max_boxes = max_boxes;
        }
        if (workers > 0) {
            job.options.workers = workers;
        } else if (!job.workers_set) {
            job.options.workers = std::max(1u, std::thread::hardware_concurrency());
        }
        if (deterministic) {
            job.options.workers = 1;
        }
        job.options.resume = resume;
        if (resume && job.options.checkpoint.empty()) {
            throw JobError("--resume needs a checkpoint");
        }

        const SearchReport rep = multi_run(job.masses, job.d, job.options, job.selection, job.run_list);
        const Classification cl = classify(rep, job.masses, job.group);

        const bool complete = rep.conclusive() && !rep.boundary_touch;
        std::string banner;
        if (!rep.conclusive()) {
            banner += "WARNING: " + std::to_string(rep.undecided.size())
                      + " undecided boxes remain; finiteness is not established and the counts are partial\n";
        }
        if (rep.boundary_touch) {
            banner += "WARNING: a box reaches |q| = x_max; the a-priori bound is not validated\n";
        }
        for (const auto &r : job.relations) {
            out << "relation " << r.name << ": [" << r.value.lo() << ", " << r.value.hi() << "] "
                << (r.holds() ? "holds" : "does not hold") << '\n';
        }
        const std::string text = table_text(job, cl.table);
        out << banner << text;
        if (!job.table_out.empty()) {
            const bool csv = job.table_out.size() >= 4 && job.table_out.substr(job.table_out.size() - 4) == ".csv";
            write_file(job.table_out, banner.empty() || csv ? (csv ? table_csv(cl.table) : text) : banner + text);
        }
        if (!job.json_out.empty()) {
            write_file(job.json_out, report_json(job, rep, cl).dump(2) + "\n");
        }
        return complete ? exit_conclusive : exit_undecided;
    } catch (const JobError &e) {
        err << "error: " << e.what() << '\n';
    } catch (const std::exception &e) {
        err << "internal error: " << e.what() << '\n';
    }
    return exit_error;
}

} // namespace ncc

#endif
