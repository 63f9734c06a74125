// Acceptance run: one line per criterion, exit status 1 when any fails.
// Usage: acceptance [--overnight] [criterion numbers...]

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "ncc/classify.hpp"
#include "ncc/degeneracy.hpp"
#include "oracles.hpp"
#include "poly_systems.hpp"

using namespace ncc;
using oracle::ld;
using oracle::Pts;

namespace
{

struct Outcome
{
    enum
    {
        Pass,
        Fail,
        Skip
    } status = Pass;
    std::string detail;
};

std::string fmt(const Interval &v)
{
    char buf[96];
    std::snprintf(buf, sizeof buf, "[%.6g, %.6g]", v.lo(), v.hi());
    return buf;
}

bool all_zero(const IntervalVector &v, double width)
{
    for (const auto &x : v) {
        if (!x.contains_zero() || x.width() >= width) {
            return false;
        }
    }
    return true;
}

// reports kept for the rank dictionary
std::vector<std::pair<std::string, SearchReport>> g_reports;

SearchReport search(const Masses &m, int d)
{
    RunOptions o;
    o.workers = std::max(1u, std::thread::hardware_concurrency());
    return multi_run(m, d, o, RunSelection::Symmetry);
}

std::string counts(const CountTable &t)
{
    std::ostringstream os;
    os << t.concave << '/' << t.collinear << '/' << t.convex << '/' << t.total;
    return os.str();
}

Outcome three_body()
{
    Outcome out;
    std::ostringstream os;
    for (const auto &[name, m] : {std::pair<std::string, Masses>{"(1/3,1/3,1/3)", Masses::from_values({1, 1, 1})},
                                  {"(0.5,0.3,0.2)", Masses::from_values({0.5, 0.3, 0.2})}}) {
        const SearchReport rep = search(m, 2);
        g_reports.emplace_back(name, rep);
        const Classification cl = classify(rep, m, Group::SO2);
        const auto eq = oracle::to_cfg(oracle::equilateral(oracle::mass_ld(m)), m, 0.0);
        double worst = 0;
        int contain = 0;
        for (const auto &c : cl.classes) {
            if (c.shape != Shape::Convex) {
                continue;
            }
            bool ok = signatures_intersect(c.sig, signature(eq));
            for (const auto &e : c.sig) {
                ok = ok && e.r.contains(1.0);
            }
            for (const auto &p : c.config.q) {
                for (const auto &v : p) {
                    worst = std::max(worst, v.rad());
                }
            }
            contain += ok ? 1 : 0;
        }
        const bool pass = rep.conclusive() && cl.table.total == 5 && cl.table.collinear == 3
                          && cl.table.convex == 2 && contain == 2 && worst < 1e-8;
        if (!pass) {
            out.status = Outcome::Fail;
        }
        os << name << " concave/collinear/convex/total " << counts(cl.table) << " equilateral in " << contain
           << "/2 triangles, max radius " << worst << "; ";
    }
    out.detail = os.str();
    return out;
}

Outcome moulton_counts()
{
    Outcome out;
    std::ostringstream os;
    for (const auto &[name, m] :
         {std::pair<std::string, Masses>{"equal", Masses::from_values({1, 1, 1, 1})},
          {"(0.4,0.3,0.2,0.1)", Masses::from_values({0.4, 0.3, 0.2, 0.1})}}) {
        const auto t0 = std::chrono::steady_clock::now();
        const SearchReport rep = search(m, 2);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        g_reports.emplace_back(name, rep);
        const Classification so2 = classify(rep, m, Group::SO2);
        const Classification so3 = classify(rep, m, Group::SO3);
        const bool pass = rep.conclusive() && so2.table.collinear == 12 && so3.table.total <= so2.table.total;
        if (!pass) {
            out.status = Outcome::Fail;
        }
        os << name << " collinear " << so2.table.collinear << " (all " << counts(so2.table) << ", so3 total "
           << so3.table.total << ", " << static_cast<int>(secs) << " s); ";
    }
    out.detail = os.str();
    return out;
}

Outcome identities()
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> um(0.1, 1.0);
    int bad = 0;
    double widest = 0;
    for (int it = 0; it < 1000; ++it) {
        const std::size_t n = 3 + static_cast<std::size_t>(it % 3);
        const std::size_t d = 2 + static_cast<std::size_t>((it / 3) % 2);
        std::vector<double> mv(n);
        for (auto &x : mv) {
            x = um(rng);
        }
        const Masses m = Masses::from_values(mv);
        const auto cfg = oracle::to_cfg(oracle::random_config(rng, n, d, oracle::mass_ld(m)), m, 0.0);
        const auto r = eval_f(cfg);
        const std::vector<IntervalVector> red(cfg.q.begin(), cfg.q.end() - 1);
        const IntervalVector am = reduced_angular_momentum(red, m);
        for (const auto *v : {&r.sum, &r.wedge_sum, &am}) {
            widest = std::max(widest, v->max_width());
            bad += all_zero(*v, 1e-10) ? 0 : 1;
        }
    }
    Outcome out;
    out.status = bad == 0 ? Outcome::Pass : Outcome::Fail;
    char buf[128];
    std::snprintf(buf, sizeof buf, "1000 configurations, %d failures, widest enclosure %.3g", bad, widest);
    out.detail = buf;
    return out;
}

Outcome block_spectra()
{
    Outcome out;
    int cases = 0;
    std::ostringstream os;
    for (const auto &mv :
         std::vector<std::vector<double>>{{1, 1, 1}, {0.5, 0.3, 0.2}, {1, 1, 1, 1}, {0.4, 0.3, 0.2, 0.1}}) {
        for (int d : {2, 3}) {
            const Masses m = Masses::from_values(mv);
            const auto x = oracle::moulton(oracle::mass_ld(m));
            Configuration c;
            c.d = d;
            c.masses = m;
            for (ld v : x) {
                IntervalVector p(static_cast<std::size_t>(d));
                p[0] = Interval(static_cast<double>(v) - 1e-14, static_cast<double>(v) + 1e-14);
                c.q.push_back(p);
            }
            const std::size_t n = c.n();
            CollinearBlocks b;
            try {
                b = collinear_blocks(c); // throws unless DF overlaps the block form
            } catch (const std::exception &e) {
                out.status = Outcome::Fail;
                os << "block form: " << e.what() << "; ";
                continue;
            }
            // M + 2A: symmetric with a certified Gershgorin margin
            bool pd = true;
            for (std::size_t i = 0; i < n; ++i) {
                Interval off(0.0);
                for (std::size_t j = 0; j < n; ++j) {
                    if (j != i) {
                        off += abs(Interval(2.0) * b.A(i, j));
                    }
                }
                pd = pd && (b.M(i, i) + Interval(2.0) * b.A(i, i) - off).certainly_positive();
            }
            const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.M.mid() - b.A.mid());
            int pos = 0, zero = 0, neg = 0;
            for (int i = 0; i < es.eigenvalues().size(); ++i) {
                const double l = es.eigenvalues()[i];
                (std::abs(l) < 1e-8 ? zero : l > 0 ? pos : neg)++;
            }
            const bool ok = pd && pos == 1 && zero == 1 && neg == static_cast<int>(n) - 2;
            if (!ok) {
                out.status = Outcome::Fail;
                os << "n=" << n << " d=" << d << " pd=" << pd << " spectrum " << pos << '/' << zero << '/' << neg
                   << "; ";
            }
            ++cases;
        }
    }
    out.detail = std::to_string(cases) + " Moulton cases checked. " + os.str();
    return out;
}

Outcome rank_dictionary()
{
    Outcome out;
    if (g_reports.empty()) {
        out.status = Outcome::Skip;
        out.detail = "needs the solutions of criteria 1 and 2";
        return out;
    }
    int checked = 0, bad = 0;
    for (const auto &[name, rep] : g_reports) {
        for (const auto &s : rep.certified) {
            if (s.duplicate || s.check != PostCheck::Verified) {
                continue;
            }
            Configuration c = s.config;
            for (auto &p : c.q) {
                for (std::size_t k = 0; k < p.size(); ++k) {
                    p[k] = Interval(p[k].mid());
                }
            }
            const int d = c.d;
            const int n = static_cast<int>(c.n());
            const int rf = numeric_rank(jacobian_F(c).mid(), 1e-8);
            const std::vector<IntervalVector> red(c.q.begin(), c.q.end() - 1);
            const int rr = numeric_rank(jacobian_F_red(red, c.masses).mid(), 1e-8);
            IntervalVector mid(s.box.free().size());
            for (std::size_t i = 0; i < mid.size(); ++i) {
                mid[i] = Interval(s.box.free()[i].mid());
            }
            const Eigen::MatrixXd jrs = jacobian_RS(s.box.with_free(mid)).mid();
            const int rs = numeric_rank(jrs, 1e-8);
            const int orbit = d == 2 ? 1 : (s.collinear ? 2 : 3);
            const bool ok = rf == d * n - orbit && rr == rf - d && rs == jrs.rows();
            bad += ok ? 0 : 1;
            ++checked;
        }
    }
    out.status = bad == 0 && checked > 0 ? Outcome::Pass : Outcome::Fail;
    out.detail = std::to_string(checked) + " certified solutions, " + std::to_string(bad) + " mismatches";
    return out;
}

Verdict certify_box(const ReducedBox &box) { return krawczyk_certify(box).verdict; }

ReducedBox repair(ReducedBox box)
{
    for (int round = 0; round < 3; ++round) {
        const auto rep = check_degeneracy(box);
        if (!rep.any()) {
            return box;
        }
        box = renormalize(box, rep);
    }
    return box;
}

Outcome degenerate_placements()
{
    struct Case
    {
        std::string name;
        Pts q;
        std::vector<double> m;
        std::vector<int> perm;
        bool DegeneracyReport::*flag;
    };
    std::vector<Case> cases;
    cases.push_back({"square+center (x_{n-1}=0)", oracle::square_center(0.2L, 0.2L), std::vector<double>(5, 0.2),
                     {2, 3, 4, 0, 1}, &DegeneracyReport::d1});
    const auto fam = oracle::family_1_3();
    cases.push_back({"1+3 family (x_{n-1}=x_n)", fam.q, {0.25, static_cast<double>(fam.m1), 0.35, 0.15},
                     {2, 3, 0, 1}, &DegeneracyReport::d2});
    Pts sq = oracle::square_center(0, 0.25L, 3);
    sq.erase(sq.begin());
    cases.push_back({"3D square (y_{n-2}=0)", sq, std::vector<double>(4, 0.25), {1, 2, 0, 3}, &DegeneracyReport::d3});
    cases.push_back({"square pyramid (det=0)", oracle::square_pyramid(0.2L), std::vector<double>(5, 0.2),
                     {3, 4, 2, 0, 1}, &DegeneracyReport::d4});
    Outcome out;
    std::ostringstream os;
    for (const auto &c : cases) {
        const Masses m = Masses::from_values(c.m, false);
        const Pts placed = oracle::place(c.q, c.perm);
        const ReducedBox pt = oracle::make_box(placed, m, c.perm, 0.0);
        const int full = static_cast<int>(pt.free().size());
        const int rank = numeric_rank(jacobian_RS(pt).mid(), 1e-8);
        const ReducedBox box = oracle::make_box(placed, m, c.perm, 1e-11);
        const DegeneracyReport rep = check_degeneracy(box);
        Verdict after = Verdict::Undecided;
        try {
            after = certify_box(repair(box));
        } catch (const std::exception &) {
        }
        const bool ok = rank == full - 1 && rep.*(c.flag) && after == Verdict::Certified;
        if (!ok) {
            out.status = Outcome::Fail;
        }
        os << c.name << ": rank " << rank << "/" << full << ", flagged " << (rep.*(c.flag) ? "yes" : "no")
           << ", after repair " << to_string(after) << "; ";
    }
    out.detail = os.str();
    return out;
}

Outcome ex1_rejection()
{
    Outcome out;
    std::ostringstream os;
    auto y1_of = [](ld m1, ld m2, ld m3) { return std::cbrt(m2 + m3 / ((1 + m1 / m3) * (1 + m1 / m3))); };
    auto box_at = [](const Masses &m, double y1, double r) {
        return ReducedBox(2, m, {0, 1, 2}, IntervalVector{Interval(-r, r), Interval(y1 - r, y1 + r), Interval(-r, r)});
    };
    {
        const Masses m = Masses::from_values({0.4, 0.3, 0.3});
        const auto y1 = static_cast<double>(y1_of(static_cast<ld>(m[0].mid()), static_cast<ld>(m[1].mid()),
                                                  static_cast<ld>(m[2].mid())));
        const ReducedBox box = box_at(m, y1, 1e-4);
        const auto k = krawczyk_certify(box);
        const auto s = finalize_certified(box, k, 1e-12);
        SearchReport rep;
        rep.certified.push_back(s);
        rep.runs = {0};
        const auto cl = classify(rep, m, Group::SO2);
        const bool ok = k.verdict == Verdict::Certified && s.check == PostCheck::Rejected && cl.table.total == 0;
        if (!ok) {
            out.status = Outcome::Fail;
        }
        os << "(0.4,0.3,0.3): RS " << to_string(k.verdict) << ", post-check " << to_string(s.check) << ", counted "
           << cl.table.total << "; ";
    }
    {
        const Masses m = Masses::from_values({0.35, 0.3, 0.35});
        const auto y1 = static_cast<double>(y1_of(0.35L, 0.3L, 0.35L));
        const ReducedBox box = box_at(m, y1, 1e-6);
        const auto dr = check_degeneracy(box);
        PostCheck pc = PostCheck::Unproven;
        bool col = false;
        try {
            const ReducedBox fixed = renormalize(box, dr);
            const auto s = finalize_certified(fixed, krawczyk_certify(fixed), 1e-12);
            pc = s.check;
            col = s.collinear;
        } catch (const std::exception &) {
        }
        const bool ok = pc == PostCheck::Verified && col;
        if (!ok) {
            out.status = Outcome::Fail;
        }
        os << "m1=m3: degenerate (x_{n-1}=0) " << (dr.d1 ? "yes" : "no") << ", after repair " << to_string(pc)
           << (col ? " collinear" : "");
    }
    out.detail = os.str();
    return out;
}

// Collinear 5-body configuration, bodies left to right 1 2 0 3 4; slots:
// bodies 1, 2, in-plane body 0, axis body 3, eliminated body 4.
ReducedBox ordering_box(const std::vector<double> &mv, double eps)
{
    const std::vector<int> order{1, 2, 0, 3, 4};
    const std::vector<int> perm{1, 2, 0, 3, 4};
    std::vector<ld> ml;
    for (int b : order) {
        ml.push_back(static_cast<ld>(mv[static_cast<std::size_t>(b)]));
    }
    const auto x = oracle::moulton(ml);
    Pts q(5);
    for (std::size_t i = 0; i < 5; ++i) {
        q[static_cast<std::size_t>(order[i])] = {x[i], 0, 0};
    }
    return oracle::make_box(oracle::place(q, perm), Masses::from_values(mv, false), perm, eps);
}

std::vector<double> mix(double t)
{
    const std::vector<double> a{0.25, 0.25, 0.25, 0.125, 0.125};
    const std::vector<double> b{1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 3};
    std::vector<double> m(5);
    for (std::size_t i = 0; i < 5; ++i) {
        m[i] = (1 - t) * a[i] + t * b[i];
    }
    return m;
}

Outcome collinear_3d()
{
    Outcome out;
    std::ostringstream os;
    // as listed: the first mass set itself
    const ReducedBox lit = ordering_box(mix(0), 1e-12);
    const Interval det_lit = detail::det_rs_z(lit);
    const DegeneracyReport rep_lit = check_degeneracy(lit);
    os << "listed masses: det D RS_z " << fmt(det_lit) << ", D5 " << (rep_lit.d5 ? "flagged" : "not flagged");
    if (!det_lit.contains_zero() || !rep_lit.d5) {
        out.status = Outcome::Fail;
    }

    // along the segment to the second mass set the determinant changes sign
    auto det_at = [](double t) { return detail::det_rs_z(ordering_box(mix(t), 0.0)).mid(); };
    double lo = 0, hi = 1;
    if (det_at(lo) * det_at(hi) < 0) {
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (det_at(mid) * det_at(lo) > 0 ? lo : hi) = mid;
        }
        const ReducedBox box = ordering_box(mix(lo), 1e-12);
        const DegeneracyReport rep = check_degeneracy(box);
        std::string repair_result;
        try {
            const ReducedBox fixed = renormalize(box, rep);
            repair_result = std::string("permuted, Krawczyk ") + to_string(certify_box(fixed));
        } catch (const NoRepairAvailable &e) {
            repair_result = std::string("no permutation helps (") + e.what() + ")";
        } catch (const PreconditionError &e) {
            repair_result = "not attempted";
        }
        os << "; convex combination t=" << lo << ": det " << fmt(detail::det_rs_z(box)) << ", D5 "
           << (rep.d5 ? "flagged" : "not flagged") << ", repair " << repair_result;
        if (!rep.d5) {
            out.status = Outcome::Fail;
        }
    } else {
        out.status = Outcome::Fail;
        os << "; no sign change along the segment";
    }
    return {out.status, os.str()};
}

Outcome table1(bool overnight)
{
    Outcome out;
    if (!overnight) {
        out.status = Outcome::Skip;
        out.detail = "overnight only (--overnight)";
        return out;
    }
    std::ostringstream os;
    const std::vector<std::pair<std::vector<double>, std::array<std::size_t, 4>>> rows = {
        {{1, 1, 1, 1, 1}, {270, 60, 24, 354}},
        {{0.21, 0.21, 0.19, 0.19, 0.2}, {270, 60, 24, 354}},
        {{0.22, 0.22, 0.18, 0.18, 0.2}, {246, 60, 24, 330}}};
    for (const auto &[mv, want] : rows) {
        const Masses m = Masses::from_values(mv);
        const SearchReport rep = search(m, 2);
        const auto t = classify(rep, m, Group::SO2).table;
        const bool ok = rep.conclusive() && t.concave == want[0] && t.collinear == want[1] && t.convex == want[2]
                        && t.total == want[3];
        if (!ok) {
            out.status = Outcome::Fail;
        }
        os << counts(t) << "; ";
    }
    out.detail = os.str();
    return out;
}

Outcome krawczyk_oracle()
{
    const poly::Tally t = poly::run_oracle(200, 60, 20261016);
    Outcome out;
    out.status = t.violations == 0 ? Outcome::Pass : Outcome::Fail;
    out.detail = "200 systems: " + std::to_string(t.certified) + " certified, " + std::to_string(t.excluded)
                 + " excluded, " + std::to_string(t.undecided) + " undecided, " + std::to_string(t.violations)
                 + " violations";
    return out;
}

} // namespace

int main(int argc, char **argv)
{
    bool overnight = false;
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--overnight") == 0) {
            overnight = true;
        } else {
            only.insert(std::atoi(argv[i]));
        }
    }
    const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
        {1, three_body},
        {2, moulton_counts},
        {3, identities},
        {4, block_spectra},
        {5, rank_dictionary},
        {6, degenerate_placements},
        {7, ex1_rejection},
        {8, collinear_3d},
        {9, [&] { return table1(overnight); }},
        {10, krawczyk_oracle},
    };
    int failed = 0;
    for (const auto &[id, run] : criteria) {
        if (!only.empty() && !only.count(id)) {
            continue;
        }
        Outcome o;
        try {
            o = run();
        } catch (const std::exception &e) {
            o = {Outcome::Fail, std::string("exception: ") + e.what()};
        }
        const char *s = o.status == Outcome::Pass ? "PASS" : o.status == Outcome::Fail ? "FAIL" : "SKIP";
        failed += o.status == Outcome::Fail ? 1 : 0;
        std::printf("criterion %2d: %s  %s\n", id, s, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
