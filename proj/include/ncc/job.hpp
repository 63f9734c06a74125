#ifndef NCC_JOB_HPP
#define NCC_JOB_HPP

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "classify.hpp"
#include "search.hpp"

namespace ncc
{

class JobError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct RelationCheck
{
    std::string name;
    Interval value; // enclosure of the relation polynomial at the job's masses
    [[nodiscard]] bool holds() const { return value.contains_zero(); }
};

struct JobSpec
{
    int d = 2;
    std::vector<std::string> mass_text;
    Masses masses;
    RunSelection selection = RunSelection::Symmetry;
    std::vector<int> run_list;
    Group group = Group::SO2;
    RunOptions options;
    bool workers_set = false; // otherwise the front-end picks the hardware count
    std::string table_out, json_out;
    std::vector<RelationCheck> relations;
};

namespace detail
{

inline std::string trim(const std::string &s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Splits on whitespace and commas outside parentheses.
inline std::vector<std::string> tokens(const std::string &s)
{
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (char ch : s) {
        if (ch == '(') {
            ++depth;
        } else if (ch == ')') {
            --depth;
        }
        if (depth == 0 && (ch == ',' || ch == ' ' || ch == '\t')) {
            if (!cur.empty()) {
                out.push_back(cur);
            }
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) {
        out.push_back(cur);
    }
    return out;
}

struct Decimal
{
    __int128 digits = 0; // value = digits / 10^scale
    int scale = 0;
};

// Plain decimals "123", "0.21"; at most 30 significant places.
inline std::optional<Decimal> parse_decimal(const std::string &t)
{
    Decimal d;
    bool dot = false, any = false;
    int places = 0;
    for (char ch : t) {
        if (ch == '.' && !dot) {
            dot = true;
            continue;
        }
        if (ch < '0' || ch > '9') {
            return std::nullopt;
        }
        any = true;
        if (d.digits != 0 || ch != '0') {
            ++places;
        }
        if (places > 30) {
            return std::nullopt;
        }
        d.digits = d.digits * 10 + (ch - '0');
        d.scale += dot ? 1 : 0;
    }
    if (!any) {
        return std::nullopt;
    }
    return d;
}

inline __int128 pow10(int k)
{
    __int128 p = 1;
    while (k-- > 0) {
        p *= 10;
    }
    return p;
}

// Enclosure of an exact decimal: a point when the double is the decimal.
inline Interval decimal_interval(const std::string &t)
{
    const double v = std::stod(t);
    std::vector<char> buf(1200);
    std::snprintf(buf.data(), buf.size(), "%.1100f", v);
    auto canon = [](std::string s) {
        if (s.find('.') != std::string::npos) {
            while (!s.empty() && s.back() == '0') {
                s.pop_back();
            }
            if (!s.empty() && s.back() == '.') {
                s.pop_back();
            }
        }
        const auto nz = s.find_first_not_of('0');
        s = nz == std::string::npos ? "0" : s.substr(nz);
        if (s.empty() || s[0] == '.') {
            s = "0" + s;
        }
        return s;
    };
    if (canon(buf.data()) == canon(t)) {
        return Interval(v);
    }
    return from_decimal(t);
}

inline bool call_form(const std::string &t, const std::string &name, std::vector<std::string> &args)
{
    if (t.rfind(name + "(", 0) != 0 || t.back() != ')') {
        return false;
    }
    args = tokens(t.substr(name.size() + 1, t.size() - name.size() - 2));
    return true;
}

inline int mass_ref(const std::string &a, std::size_t n)
{
    std::size_t pos = 0;
    int i = 0;
    try {
        i = std::stoi(a, &pos);
    } catch (const std::exception &) {
        throw JobError("bad mass reference '" + a + "'");
    }
    if (pos != a.size() || i < 1 || static_cast<std::size_t>(i) > n) {
        throw JobError("mass reference out of range: " + a);
    }
    return i - 1;
}

// Tokens: exact decimals, p/q, rest (1 minus the others, which are then
// taken as already normalized), sqrt(i,j) with 1/sqrt(m) = 1/sqrt(m_i) +
// 1/sqrt(m_j) for 1-based references to literal masses.
inline Masses parse_masses(const std::vector<std::string> &toks)
{
    const std::size_t n = toks.size();
    if (n < 2) {
        throw JobError("need at least two masses");
    }
    std::vector<std::optional<Interval>> m(n);
    std::vector<std::optional<Decimal>> dec(n);
    int rest = -1;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string &t = toks[i];
        std::vector<std::string> args;
        if (t == "rest") {
            if (rest >= 0) {
                throw JobError("at most one 'rest' mass");
            }
            rest = static_cast<int>(i);
        } else if (call_form(t, "sqrt", args)) {
            if (args.size() != 2) {
                throw JobError("sqrt takes two mass references");
            }
        } else if (const auto slash = t.find('/'); slash != std::string::npos) {
            const auto p = parse_decimal(t.substr(0, slash));
            const auto q = parse_decimal(t.substr(slash + 1));
            if (!p || !q || q->digits == 0) {
                throw JobError("bad fraction '" + t + "'");
            }
            m[i] = decimal_interval(t.substr(0, slash)) / decimal_interval(t.substr(slash + 1));
        } else if ((dec[i] = parse_decimal(t))) {
            m[i] = decimal_interval(t);
        } else {
            throw JobError("bad mass '" + t + "'");
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> args;
        if (!m[i] && static_cast<int>(i) != rest && call_form(toks[i], "sqrt", args)) {
            const int a = mass_ref(args[0], n), b = mass_ref(args[1], n);
            if (!m[static_cast<std::size_t>(a)] || !m[static_cast<std::size_t>(b)]) {
                throw JobError("sqrt must reference literal masses");
            }
            const Interval s = Interval(1.0) / sqrt(*m[static_cast<std::size_t>(a)])
                               + Interval(1.0) / sqrt(*m[static_cast<std::size_t>(b)]);
            m[i] = Interval(1.0) / sqr(s);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (static_cast<int>(i) != rest && !(m[i]->lo() > 0)) {
            throw JobError("masses must be positive");
        }
    }
    if (rest >= 0) {
        Interval s(0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (static_cast<int>(i) != rest) {
                s += *m[i];
            }
        }
        const Interval r = Interval(1.0) - s;
        if (!(r.lo() > 0)) {
            throw JobError("'rest' mass is not positive");
        }
        m[static_cast<std::size_t>(rest)] = r;
    }
    std::vector<Interval> v;
    for (const auto &x : m) {
        v.push_back(*x);
    }
    if (rest >= 0) {
        return Masses(std::move(v), true);
    }
    // literal decimals summing to exactly 1 are used as they are
    bool all_dec = true;
    int scale = 0;
    for (const auto &x : dec) {
        all_dec = all_dec && x.has_value();
        scale = x ? std::max(scale, x->scale) : scale;
    }
    if (all_dec && scale <= 30) {
        __int128 sum = 0;
        for (const auto &x : dec) {
            sum += x->digits * pow10(scale - x->scale);
        }
        if (sum == pow10(scale)) {
            return Masses(std::move(v), true);
        }
    }
    return Masses(std::move(v), false).normalize();
}

inline RelationCheck relation(const std::string &name, const Masses &ms)
{
    const std::size_t n = ms.size();
    auto m = [&](std::size_t i) {
        if (i > n) {
            throw JobError("relation " + name + " needs at least " + std::to_string(i) + " masses");
        }
        return ms[i - 1];
    };
    Interval v;
    if (name == "m1m2-m3m4-m3m5") {
        v = m(1) * m(2) - m(3) * m(4) - m(3) * m(5);
    } else if (name == "m3-m4-m5") {
        v = m(3) - m(4) - m(5);
    } else if (name == "(m4+m5)^2-m1m2") {
        v = sqr(m(4)) + Interval(2.0) * m(4) * m(5) + sqr(m(5)) - m(1) * m(2);
    } else if (name == "m1m3-m2m4") {
        v = m(1) * m(3) - m(2) * m(4);
    } else if (name == "1/sqrt(m3)-1/sqrt(m1)-1/sqrt(m2)") {
        v = Interval(1.0) / sqrt(m(3)) - Interval(1.0) / sqrt(m(1)) - Interval(1.0) / sqrt(m(2));
    } else {
        throw JobError("unknown relation '" + name + "'");
    }
    return {name, v};
}

template <class T>
T parse_number(const std::string &key, const std::string &v)
{
    std::istringstream is(v);
    T x{};
    if (!(is >> x) || !(is >> std::ws).eof()) {
        throw JobError("bad value for " + key + ": '" + v + "'");
    }
    return x;
}

} // namespace detail

// Line-oriented "key = value" text; '#' starts a comment.
inline JobSpec parse_job_text(const std::string &text)
{
    JobSpec job;
    std::vector<std::string> relations;
    bool have_masses = false;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) {
            line.erase(h);
        }
        line = detail::trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw JobError("line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        try {
            if (key == "dimension") {
                job.d = detail::parse_number<int>(key, val);
                if (job.d != 2 && job.d != 3) {
                    throw JobError("dimension must be 2 or 3");
                }
            } else if (key == "masses") {
                job.mass_text = detail::tokens(val);
                have_masses = true;
            } else if (key == "runs") {
                job.run_list.clear();
                if (val == "symmetry") {
                    job.selection = RunSelection::Symmetry;
                } else if (val == "all") {
                    job.selection = RunSelection::All;
                } else {
                    job.selection = RunSelection::List;
                    for (const auto &t : detail::tokens(val)) {
                        job.run_list.push_back(detail::parse_number<int>(key, t));
                    }
                }
            } else if (key == "group") {
                if (val == "so2" || val == "SO2") {
                    job.group = Group::SO2;
                } else if (val == "so3" || val == "SO3") {
                    job.group = Group::SO3;
                } else {
                    throw JobError("group must be so2 or so3");
                }
            } else if (key == "min_box_width") {
                job.options.min_box_width = detail::parse_number<double>(key, val);
            } else if (key == "max_boxes") {
                job.options.max_boxes = detail::parse_number<std::size_t>(key, val);
            } else if (key == "x_max") {
                job.options.x_max = detail::parse_number<double>(key, val);
            } else if (key == "delta") {
                job.options.delta = detail::parse_number<double>(key, val);
            } else if (key == "repair_width") {
                job.options.repair_width = detail::parse_number<double>(key, val);
            } else if (key == "max_repairs") {
                job.options.max_repairs = detail::parse_number<int>(key, val);
            } else if (key == "refine_tol") {
                job.options.refine_tol = detail::parse_number<double>(key, val);
            } else if (key == "split_depth") {
                job.options.split_depth = detail::parse_number<int>(key, val);
            } else if (key == "workers") {
                job.options.workers = detail::parse_number<unsigned>(key, val);
                job.workers_set = true;
            } else if (key == "checkpoint") {
                job.options.checkpoint = val;
            } else if (key == "table_out") {
                job.table_out = val;
            } else if (key == "json_out") {
                job.json_out = val;
            } else if (key == "relation") {
                for (const auto &t : detail::tokens(val)) {
                    relations.push_back(t);
                }
            } else {
                throw JobError("unknown key '" + key + "'");
            }
        } catch (const JobError &e) {
            throw JobError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!have_masses) {
        throw JobError("no masses given");
    }
    try {
        job.masses = detail::parse_masses(job.mass_text);
    } catch (const DomainError &e) {
        throw JobError(std::string("masses: ") + e.what());
    } catch (const PreconditionError &e) {
        throw JobError(std::string("masses: ") + e.what());
    }
    const std::size_t n = job.masses.size();
    if (n < 3) {
        throw JobError("too few bodies for the dimension");
    }
    if (n > 10) {
        throw JobError("at most 10 bodies are supported");
    }
    for (int r : job.run_list) {
        if (r < 0 || static_cast<std::size_t>(r) >= n) {
            throw JobError("run index out of range: " + std::to_string(r));
        }
    }
    if (!(job.options.min_box_width > 0) || !(job.options.x_max > 0) || job.options.max_boxes == 0
        || job.options.split_depth < 0 || job.options.split_depth > 12) {
        throw JobError("thresholds out of range");
    }
    for (const auto &r : relations) {
        job.relations.push_back(detail::relation(r, job.masses));
    }
    return job;
}

inline JobSpec parse_job(const std::string &path)
{
    std::ifstream f(path);
    if (!f) {
        throw JobError("cannot read " + path);
    }
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_job_text(ss.str());
}

} // namespace ncc

#endif
