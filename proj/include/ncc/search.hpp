#ifndef NCC_SEARCH_HPP
#define NCC_SEARCH_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "degeneracy.hpp"
#include "krawczyk.hpp"
#include "model.hpp"

namespace ncc
{

struct RunOptions
{
    double x_max = 2.5;
    double min_box_width = 1e-10;
    std::size_t max_boxes = 50'000'000; // per task
    double delta = 0.0;                 // <= 0: 10 * width + 1e-12 per box
    double repair_width = 1e-3;
    int max_repairs = 3;
    double refine_tol = 1e-12;
    int split_depth = 3; // each (run, subtree) is cut into 2^split_depth tasks
    unsigned workers = 1;
    std::string checkpoint; // empty: none
    bool resume = false;
};

struct RunConfig
{
    Masses masses;
    int d = 2;
    int run_index = 0;    // body pinned farthest from the origin, on +OX
    int plane_index = -1; // 3D: body farthest from OX, placed in OXY
    double min_box_width = 1e-10;
    std::size_t max_boxes = 50'000'000;
    double delta = 0.0;
    double x_max = 2.5;
    double repair_width = 1e-3;
    int max_repairs = 3;
    double refine_tol = 1e-12;
    ReducedBox bounds;
};

enum class PostCheck
{
    Verified, // full residual encloses 0 and the reduced-to-full conditions hold
    Rejected, // some full equation provably fails: an RS zero that is not an nCC
    Unproven  // residual encloses 0 but the conditions could not be established
};

inline const char *to_string(PostCheck p)
{
    switch (p) {
    case PostCheck::Verified:
        return "verified";
    case PostCheck::Rejected:
        return "rejected";
    case PostCheck::Unproven:
        return "unproven";
    }
    return "?";
}

struct CertifiedSolution
{
    ReducedBox box;       // refined certified box
    ReducedBox certified; // box as first certified
    Eigen::VectorXd midpoint;
    IntervalVector image;
    Configuration config; // body order, q_n reconstructed
    PostCheck check = PostCheck::Unproven;
    bool full_residual_contains_zero = false;
    bool separated = false;    // x_{n-1} - x_n excludes 0
    bool independent = false;  // 3D: projected determinant excludes 0
    bool planar = false;       // 3D: certified inside z = 0 (always true in 2D)
    bool collinear = false;    // certified inside the OX line
    int run_index = -1;
    int plane_index = -1;
    std::size_t task = 0;
    bool duplicate = false;
};

struct SearchStats
{
    std::size_t boxes = 0;
    std::size_t excluded_residual = 0;
    std::size_t excluded_constraint = 0;
    std::size_t excluded_virial = 0;
    std::size_t excluded_krawczyk = 0;
    std::size_t repairs = 0;
    std::size_t repair_failures = 0;
    std::size_t conjecture_probes = 0;
    std::size_t bisections = 0;
    std::size_t rs_only = 0; // certified RS zeros rejected by the full residual
    std::size_t unproven = 0;

    SearchStats &operator+=(const SearchStats &o)
    {
        boxes += o.boxes;
        excluded_residual += o.excluded_residual;
        excluded_constraint += o.excluded_constraint;
        excluded_virial += o.excluded_virial;
        excluded_krawczyk += o.excluded_krawczyk;
        repairs += o.repairs;
        repair_failures += o.repair_failures;
        conjecture_probes += o.conjecture_probes;
        bisections += o.bisections;
        rs_only += o.rs_only;
        unproven += o.unproven;
        return *this;
    }
};

struct SearchReport
{
    std::vector<CertifiedSolution> certified;
    std::size_t excluded_count = 0;
    std::vector<ReducedBox> undecided;
    SearchStats stats;
    bool boundary_touch = false; // some certified/undecided box reaches |q| = X_max
    std::vector<int> runs;

    [[nodiscard]] bool conclusive() const noexcept { return undecided.empty(); }

    void merge(const SearchReport &o)
    {
        certified.insert(certified.end(), o.certified.begin(), o.certified.end());
        excluded_count += o.excluded_count;
        undecided.insert(undecided.end(), o.undecided.begin(), o.undecided.end());
        stats += o.stats;
        boundary_touch = boundary_touch || o.boundary_touch;
    }
};

// ---- a-priori box ----

// max |q_i| >= (sum_{i<j} m_i m_j / (2M))^(1/3) at every nCC (virial identity
// with U >= S/(2R) and I <= M R^2); the farthest body sits at least this far
// out, capped at 0.5.
inline double farthest_lower_bound(const Masses &m)
{
    Interval s(0.0);
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = i + 1; j < m.size(); ++j) {
            s += m[i] * m[j];
        }
    }
    const double c = detail::div_down(s.lo(), detail::mul_up(2.0, m.total().hi()));
    // cube root rounded down: step below std::cbrt until the cube fits
    double r = std::cbrt(c);
    while (r > 0 && detail::mul_up(detail::mul_up(r, r), r) > c) {
        r = detail::next_down(r);
    }
    return std::min(0.5, r);
}

// Slot assignment of a run: run body on OX, (3D) plane body in OXY, the
// heaviest remaining body eliminated, the rest in label order.
inline std::vector<int> run_perm(const Masses &m, int d, int run_index, int plane_index)
{
    const auto n = static_cast<int>(m.size());
    int elim = -1;
    for (int i = 0; i < n; ++i) {
        if (i == run_index || (d == 3 && i == plane_index)) {
            continue;
        }
        if (elim < 0 || m[static_cast<std::size_t>(i)].mid() > m[static_cast<std::size_t>(elim)].mid()) {
            elim = i;
        }
    }
    std::vector<int> perm;
    for (int i = 0; i < n; ++i) {
        if (i != elim && i != run_index && !(d == 3 && i == plane_index)) {
            perm.push_back(i);
        }
    }
    if (d == 3) {
        perm.push_back(plane_index);
    }
    perm.push_back(run_index);
    perm.push_back(elim);
    return perm;
}

inline constexpr double plane_slack = 1.0 / 64.0; // y of the plane body may dip below 0

inline ReducedBox a_priori_box(const RunConfig &run)
{
    const std::size_t n = run.masses.size();
    const int d = run.d;
    if (run.run_index < 0 || static_cast<std::size_t>(run.run_index) >= n) {
        throw PreconditionError("a_priori_box: run_index out of range");
    }
    if (d == 3 && (run.plane_index < 0 || static_cast<std::size_t>(run.plane_index) >= n
                   || run.plane_index == run.run_index)) {
        throw PreconditionError("a_priori_box: bad plane_index");
    }
    if (!(run.min_box_width > 0)) {
        throw PreconditionError("a_priori_box: min_box_width must be positive");
    }
    const double X = run.x_max;
    const double xlo = farthest_lower_bound(run.masses);
    IntervalVector free(ReducedBox::free_dim(d, n), Interval(-X, X));
    free[free.size() - 1] = Interval(xlo, X);
    if (d == 3) {
        free[free.size() - 2] = Interval(-plane_slack, X);
    }
    return {d, run.masses, run_perm(run.masses, d, run.run_index, run.plane_index), free};
}

inline RunConfig make_run(const Masses &m, int d, int run_index, int plane_index, const RunOptions &o)
{
    RunConfig r;
    r.masses = m;
    r.d = d;
    r.run_index = run_index;
    r.plane_index = d == 3 ? plane_index : -1;
    r.min_box_width = o.min_box_width;
    r.max_boxes = o.max_boxes;
    r.delta = o.delta;
    r.x_max = o.x_max;
    r.repair_width = o.repair_width;
    r.max_repairs = o.max_repairs;
    r.refine_tol = o.refine_tol;
    r.bounds = a_priori_box(r);
    return r;
}

// ---- exclusion ----

enum class Exclusion
{
    None,
    Residual,
    Constraint,
    Virial
};

namespace detail
{

inline Interval dot_iv(const IntervalVector &a, const IntervalVector &b)
{
    Interval s(0.0);
    for (std::size_t k = 0; k < a.size(); ++k) {
        s += a[k] * b[k];
    }
    return s;
}

inline Interval cross_norm2(const IntervalVector &a, const IntervalVector &b)
{
    if (a.size() == 2) {
        return sqr(a[0] * b[1] - a[1] * b[0]);
    }
    return sqr(a[1] * b[2] - a[2] * b[1]) + sqr(a[2] * b[0] - a[0] * b[2]) + sqr(a[0] * b[1] - a[1] * b[0]);
}

// Rotation-invariant constraints of the run, evaluated by body label so that
// they survive relabeling repairs.
inline bool violates_run_constraints(const Configuration &c, const RunConfig &run, double xlo)
{
    const auto k = static_cast<std::size_t>(run.run_index);
    std::vector<Interval> r2(c.n());
    for (std::size_t i = 0; i < c.n(); ++i) {
        r2[i] = dot_iv(c.q[i], c.q[i]);
    }
    if (r2[k].hi() < xlo * xlo) {
        return true;
    }
    for (std::size_t i = 0; i < c.n(); ++i) {
        if (i != k && r2[i].lo() > r2[k].hi()) {
            return true;
        }
    }
    if (run.d == 3 && run.plane_index >= 0) {
        const auto j = static_cast<std::size_t>(run.plane_index);
        const Interval cj = cross_norm2(c.q[k], c.q[j]);
        for (std::size_t i = 0; i < c.n(); ++i) {
            if (i != k && i != j && cross_norm2(c.q[k], c.q[i]).lo() > cj.hi()) {
                return true;
            }
        }
    }
    return false;
}

// At an nCC, for any subset S with center of mass c_S,
//   sum_{i<j in S} m_i m_j / r_ij = I_S - E_S,
//   I_S = sum_{i<j in S} m_i m_j r_ij^2 / M_S,
//   E_S = sum_{i in S, k not in S} m_i m_k (q_i - c_S).(q_i - q_k) / r_ik^3,
// which S = everything reduces to the virial identity. Close pairs make the
// left side large while the right stays bounded.
inline bool virial_excludes(const Configuration &c)
{
    const std::size_t n = c.n();
    const int d = c.d;
    const auto &m = c.masses;
    std::vector<Interval> r2(n * n), rr(n * n);
    std::vector<bool> apart(n * n, false);
    std::vector<IntervalVector> dif(n * n);
    bool close_pair = false;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) {
                continue;
            }
            IntervalVector v(static_cast<std::size_t>(d));
            for (int k = 0; k < d; ++k) {
                v[static_cast<std::size_t>(k)] = c.q[i][static_cast<std::size_t>(k)] - c.q[j][static_cast<std::size_t>(k)];
            }
            dif[i * n + j] = v;
            r2[i * n + j] = dot_iv(v, v);
            apart[i * n + j] = r2[i * n + j].lo() > 0;
            rr[i * n + j] = Interval(detail::sqrt_down(std::max(0.0, r2[i * n + j].lo())),
                                     detail::sqrt_up(r2[i * n + j].hi()));
            close_pair = close_pair || r2[i * n + j].lo() < 0.04;
        }
    }
    const unsigned full = (1u << n) - 1;
    for (unsigned s = full; s > 0; s = close_pair && n <= 10 ? s - 1 : 0) {
        if (__builtin_popcount(s) < 2) {
            continue;
        }
        Interval ms(0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (s >> i & 1u) {
                ms += m[i];
            }
        }
        // U_S lower bound needs only upper distance bounds; the upper bound
        // needs every internal pair apart.
        double ulo = 0.0;
        bool u_finite = true;
        Interval u(0.0), is(0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!(s >> i & 1u) || !(s >> j & 1u)) {
                    continue;
                }
                const Interval mm = m[i] * m[j];
                ulo = detail::add_down(ulo, detail::div_down(mm.lo(), rr[i * n + j].hi()));
                if (rr[i * n + j].lo() > 0) {
                    u += mm / rr[i * n + j];
                } else {
                    u_finite = false;
                }
                is += mm * r2[i * n + j];
            }
        }
        is /= ms;
        Interval es(0.0);
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            if (!(s >> i & 1u)) {
                continue;
            }
            IntervalVector rel(static_cast<std::size_t>(d), Interval(0.0));
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i && (s >> j & 1u)) {
                    const Interval w = m[j] / ms;
                    for (int k = 0; k < d; ++k) {
                        rel[static_cast<std::size_t>(k)] += w * dif[i * n + j][static_cast<std::size_t>(k)];
                    }
                }
            }
            for (std::size_t k = 0; k < n; ++k) {
                if (s >> k & 1u) {
                    continue;
                }
                if (!apart[i * n + k]) {
                    ok = false;
                    break;
                }
                es += m[i] * m[k] * dot_iv(rel, dif[i * n + k]) * inv_r_cubed(r2[i * n + k]);
            }
        }
        if (!ok) {
            continue;
        }
        const Interval rhs = is - es;
        if (ulo > rhs.hi() || (u_finite && u.hi() < rhs.lo())) {
            return true;
        }
    }
    return false;
}

} // namespace detail

// Shrinks a box by |q_i| <= |q_k| (k the run body) applied to every slot,
// the eliminated one through sum m_i q_i = 0. Points removed violate the run
// constraints, so no nCC is lost. nullopt when nothing is left.
inline std::optional<ReducedBox> contract(const ReducedBox &box, const RunConfig &run)
{
    const std::size_t n = box.n();
    const int d = box.d();
    const auto du = static_cast<std::size_t>(d);
    const auto &perm = box.perm();
    const auto &ms = box.slot_masses();
    IntervalVector free = box.free();
    for (int pass = 0; pass < 2; ++pass) {
        const std::vector<Interval> pos = box.full_slot_positions(free);
        std::size_t sk = 0;
        while (perm[sk] != run.run_index) {
            ++sk;
        }
        Interval r2k(0.0);
        for (std::size_t c = 0; c < du; ++c) {
            r2k += sqr(pos[sk * du + c]);
        }
        // per-slot coordinate limits |q_s[c]| <= lim
        auto limit = [&](std::size_t s, std::size_t c) {
            Interval other(0.0);
            for (std::size_t e = 0; e < du; ++e) {
                if (e != c) {
                    other += sqr(pos[s * du + e]);
                }
            }
            return (r2k - other).hi();
        };
        bool changed = false;
        auto clip = [&](std::size_t fi, const Interval &range) {
            const double l = std::max(free[fi].lo(), range.lo());
            const double h = std::min(free[fi].hi(), range.hi());
            if (l > h) {
                return false;
            }
            if (l > free[fi].lo() || h < free[fi].hi()) {
                free[fi] = Interval(l, h);
                changed = true;
            }
            return true;
        };
        for (std::size_t s = 0; s + 1 < n; ++s) {
            if (s == sk) {
                continue;
            }
            for (std::size_t c = 0; c < du; ++c) {
                const int fi = ReducedBox::free_index(d, n, s, static_cast<int>(c));
                if (fi < 0) {
                    continue;
                }
                const double lim = limit(s, c);
                if (lim < 0) {
                    return std::nullopt;
                }
                const double r = detail::sqrt_up(lim);
                if (!clip(static_cast<std::size_t>(fi), Interval(-r, r))) {
                    return std::nullopt;
                }
            }
        }
        if (sk != n - 1) {
            for (std::size_t c = 0; c < du; ++c) {
                const double lim = limit(n - 1, c);
                if (lim < 0) {
                    return std::nullopt;
                }
                const double r = detail::sqrt_up(lim);
                // m_s q_s[c] = -m_e q_e[c] - sum over the other slots
                const Interval me = ms[n - 1] * Interval(-r, r);
                for (std::size_t s = 0; s + 1 < n; ++s) {
                    const int fi = ReducedBox::free_index(d, n, s, static_cast<int>(c));
                    if (fi < 0) {
                        continue;
                    }
                    Interval rest = -me;
                    for (std::size_t j = 0; j + 1 < n; ++j) {
                        if (j != s) {
                            const int fj = ReducedBox::free_index(d, n, j, static_cast<int>(c));
                            if (fj >= 0) {
                                rest -= ms[j] * free[static_cast<std::size_t>(fj)];
                            }
                        }
                    }
                    if (!clip(static_cast<std::size_t>(fi), rest / ms[s])) {
                        return std::nullopt;
                    }
                }
            }
        }
        if (!changed) {
            break;
        }
    }
    return box.with_free(std::move(free));
}

inline Exclusion exclusion_reason(const ReducedBox &box, const RunConfig &run)
{
    const Configuration c = box.configuration();
    if (detail::violates_run_constraints(c, run, run.bounds.free()[run.bounds.free().size() - 1].lo())) {
        return Exclusion::Constraint;
    }
    try {
        const IntervalVector f = eval_RS(box);
        for (const auto &v : f) {
            if (!v.contains_zero()) {
                return Exclusion::Residual;
            }
        }
    } catch (const CollisionPossible &) {
    }
    try {
        if (detail::virial_excludes(c)) {
            return Exclusion::Virial;
        }
    } catch (const CollisionPossible &) {
    }
    return Exclusion::None;
}

inline bool exclusion_test(const ReducedBox &box, const RunConfig &run)
{
    return exclusion_reason(box, run) != Exclusion::None;
}

// ---- certification ----

inline KrawczykResult krawczyk_certify(const ReducedBox &box)
{
    auto f = [&](const IntervalVector &x) { return eval_RS(box, x); };
    auto j = [&](const IntervalVector &x) { return jacobian_RS(box, x); };
    return krawczyk(box.free(), f, j);
}

// Splits along the widest coordinate; nullopt when that width is already
// at or below min_width.
inline std::optional<std::pair<ReducedBox, ReducedBox>> bisect(const ReducedBox &box, double min_width)
{
    const IntervalVector &x = box.free();
    std::size_t best = 0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (x[i].width() > x[best].width()) {
            best = i;
        }
    }
    if (x.size() == 0 || !(x[best].width() > min_width)) {
        return std::nullopt;
    }
    const double mid = x[best].mid();
    if (!(mid > x[best].lo() && mid < x[best].hi())) {
        return std::nullopt;
    }
    IntervalVector a = x, b = x;
    a[best] = Interval(x[best].lo(), mid);
    b[best] = Interval(mid, x[best].hi());
    return std::make_pair(box.with_free(std::move(a)), box.with_free(std::move(b)));
}

namespace detail
{

// Krawczyk on the restriction of RS to the free coordinates with component
// k < kmax (others held at 0). Returns true when that subsystem has a
// certified zero whose Krawczyk image lies inside the box; by uniqueness in
// the box this is the box's zero, which therefore lies in the subspace.
inline bool certify_subspace(const ReducedBox &box, int kmax)
{
    const std::size_t n = box.n();
    const int d = box.d();
    std::vector<std::size_t> kept;
    for (std::size_t s = 0; s + 1 < n; ++s) {
        for (int k = 0; k < d; ++k) {
            const int fi = ReducedBox::free_index(d, n, s, k);
            if (fi < 0) {
                continue;
            }
            if (k < kmax) {
                kept.push_back(static_cast<std::size_t>(fi));
            } else if (!box.free()[static_cast<std::size_t>(fi)].contains_zero()) {
                return false;
            }
        }
    }
    std::sort(kept.begin(), kept.end());
    auto embed = [&](const IntervalVector &xs) {
        IntervalVector full(box.free().size(), Interval(0.0));
        for (std::size_t i = 0; i < kept.size(); ++i) {
            full[kept[i]] = xs[i];
        }
        return full;
    };
    auto f = [&](const IntervalVector &xs) {
        const IntervalVector r = eval_RS(box, embed(xs));
        IntervalVector out(kept.size());
        for (std::size_t i = 0; i < kept.size(); ++i) {
            out[i] = r[kept[i]];
        }
        return out;
    };
    auto j = [&](const IntervalVector &xs) {
        const IntervalMatrix jm = jacobian_RS(box, embed(xs));
        IntervalMatrix out(kept.size(), kept.size());
        for (std::size_t r = 0; r < kept.size(); ++r) {
            for (std::size_t c = 0; c < kept.size(); ++c) {
                out(r, c) = jm(kept[r], kept[c]);
            }
        }
        return out;
    };
    IntervalVector inner(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        inner[i] = box.free()[kept[i]];
    }
    for (double grow : {1.0, 4.0, 64.0}) {
        IntervalVector xs(kept.size());
        for (std::size_t i = 0; i < kept.size(); ++i) {
            const double r = std::max(inner[i].rad(), 1e-300) * grow;
            xs[i] = Interval(add_down(inner[i].mid(), -r), add_up(inner[i].mid(), r));
            xs[i] = hull(xs[i], inner[i]);
        }
        const KrawczykResult k = krawczyk(xs, f, j);
        if (k.verdict == Verdict::Certified && inner.contains(k.image)) {
            return true;
        }
        if (k.verdict == Verdict::Excluded) {
            return false;
        }
    }
    return false;
}

} // namespace detail

// Post-verification of an RS zero certified in `box`: refine, rebuild q_n,
// check the full residual and the reduced-to-full conditions.
inline CertifiedSolution finalize_certified(const ReducedBox &box, const KrawczykResult &kr, double refine_tol)
{
    CertifiedSolution s;
    s.certified = box;
    s.box = box;
    s.image = kr.image;
    auto f = [&](const IntervalVector &x) { return eval_RS(box, x); };
    auto j = [&](const IntervalVector &x) { return jacobian_RS(box, x); };
    if (const auto r = refine(box.free(), f, j, refine_tol)) {
        s.box = box.with_free(r->box);
        s.image = r->image;
        s.midpoint = r->point;
    } else {
        s.midpoint = box.free().mid();
    }
    const ReducedBox &b = s.box;
    s.config = b.configuration();
    const std::size_t n = b.n();
    const auto P = detail::slot_vectors(b);

    bool residual_ok = true;
    bool residual_fails = false;
    try {
        for (const auto &v : eval_F(s.config)) {
            if (!v.contains_zero()) {
                residual_fails = true;
            }
        }
    } catch (const CollisionPossible &) {
        residual_ok = false;
    }
    s.full_residual_contains_zero = residual_ok && !residual_fails;

    s.separated = !(P[n - 2].x - P[n - 1].x).contains_zero();
    s.collinear = detail::certify_subspace(b, 1);
    if (b.d() == 2) {
        s.planar = true;
        s.independent = true;
    } else {
        s.independent = !detail::projected_det(P[n - 3], P[n - 2], P[n - 1]).contains_zero();
        s.planar = s.collinear || detail::certify_subspace(b, 2);
    }
    if (residual_fails) {
        s.check = PostCheck::Rejected;
    } else if (s.full_residual_contains_zero && s.separated && (s.independent || s.planar)) {
        s.check = PostCheck::Verified;
    } else {
        s.check = PostCheck::Unproven;
    }
    return s;
}

inline CertifiedSolution finalize_certified(const ReducedBox &box, double refine_tol = 1e-12)
{
    return finalize_certified(box, krawczyk_certify(box), refine_tol);
}

// ---- single search ----

struct WorkItem
{
    ReducedBox box;
    int repairs = 0;
    bool just_repaired = false;
};

inline bool touches_bound(const Configuration &c, const RunConfig &run)
{
    const auto k = static_cast<std::size_t>(run.run_index);
    return detail::dot_iv(c.q[k], c.q[k]).hi() >= run.x_max * run.x_max;
}

// Same center, every radius scaled by `factor`.
inline ReducedBox inflate(const ReducedBox &box, double factor)
{
    IntervalVector x = box.free();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = detail::mul_up(x[i].rad(), factor);
        x[i] = hull(x[i], Interval(detail::add_down(x[i].mid(), -r), detail::add_up(x[i].mid(), r)));
    }
    return box.with_free(std::move(x));
}

// Depth-first branch and prune from `root` under the constraints of `run`.
inline SearchReport search_box(const RunConfig &run, const ReducedBox &root)
{
    SearchReport rep;
    rep.runs = {run.run_index};
    std::vector<WorkItem> stack{{root, 0, false}};
    auto undecided = [&](const ReducedBox &b) {
        rep.undecided.push_back(b);
        if (touches_bound(b.configuration(), run)) {
            rep.boundary_touch = true;
        }
    };
    auto record = [&](CertifiedSolution s) {
        if (s.check == PostCheck::Verified) {
            if (touches_bound(s.config, run)) {
                rep.boundary_touch = true;
            }
            rep.certified.push_back(std::move(s));
        } else {
            // the box's only RS zero is not an nCC, so it holds no nCC
            ++rep.stats.rs_only;
            ++rep.excluded_count;
        }
    };
    auto try_repair = [&](const WorkItem &it, DegeneracyReport dr) {
        try {
            stack.push_back({renormalize(it.box, dr), it.repairs + 1, true});
            ++rep.stats.repairs;
            return true;
        } catch (const NoRepairAvailable &e) {
            ++rep.stats.repair_failures;
            if (e.conjecture_probe()) {
                ++rep.stats.conjecture_probes;
            }
        } catch (const CollisionPossible &) {
            ++rep.stats.repair_failures;
        } catch (const DomainError &) {
            ++rep.stats.repair_failures;
        }
        return false;
    };
    while (!stack.empty()) {
        if (rep.stats.boxes >= run.max_boxes) {
            for (const auto &it : stack) {
                undecided(it.box);
            }
            break;
        }
        WorkItem it = std::move(stack.back());
        stack.pop_back();
        ++rep.stats.boxes;

        if (auto shrunk = contract(it.box, run)) {
            it.box = std::move(*shrunk);
        } else {
            ++rep.stats.excluded_constraint;
            ++rep.excluded_count;
            continue;
        }

        switch (exclusion_reason(it.box, run)) {
        case Exclusion::Residual:
            ++rep.stats.excluded_residual;
            ++rep.excluded_count;
            continue;
        case Exclusion::Constraint:
            ++rep.stats.excluded_constraint;
            ++rep.excluded_count;
            continue;
        case Exclusion::Virial:
            ++rep.stats.excluded_virial;
            ++rep.excluded_count;
            continue;
        case Exclusion::None:
            break;
        }

        const double w = it.box.free().max_width();
        const bool may_repair = !it.just_repaired && it.repairs < run.max_repairs;
        if (w <= run.repair_width && may_repair) {
            const DegeneracyReport dr =
                check_degeneracy(it.box, run.delta > 0 ? run.delta : default_delta(it.box));
            if (dr.any() && try_repair(it, dr)) {
                continue;
            }
        }

        ReducedBox cbox = it.box;
        KrawczykResult kr = krawczyk_certify(cbox);
        if (kr.verdict == Verdict::Undecided && w <= run.repair_width) {
            // Zeros on a bisection face are never interior to either side:
            // retry on an enlarged box and keep the zero only if it meets
            // the original one.
            const ReducedBox big = inflate(it.box, 1.5);
            KrawczykResult kb = krawczyk_certify(big);
            if (kb.verdict == Verdict::Certified) {
                cbox = big;
                kr = std::move(kb);
            }
        }
        if (kr.verdict == Verdict::Excluded) {
            ++rep.stats.excluded_krawczyk;
            ++rep.excluded_count;
            continue;
        }
        if (kr.verdict == Verdict::Certified) {
            CertifiedSolution s = finalize_certified(cbox, kr, run.refine_tol);
            if (!s.box.free().intersects(it.box.free())) {
                // the enlarged box's unique zero lies outside this box
                ++rep.stats.excluded_krawczyk;
                ++rep.excluded_count;
                continue;
            }
            s.run_index = run.run_index;
            s.plane_index = run.plane_index;
            if (s.check != PostCheck::Unproven) {
                record(std::move(s));
            } else {
                ++rep.stats.unproven;
                DegeneracyReport dr = check_degeneracy(it.box, std::max(run.delta, default_delta(it.box)));
                if (!s.separated) {
                    const auto P = detail::slot_vectors(it.box);
                    (P[it.box.n() - 2].x.contains_zero() ? dr.d1 : dr.d2) = true;
                }
                if (it.box.d() == 3 && !s.independent && !s.planar) {
                    dr.d4 = true;
                }
                if (!(dr.any() && it.repairs < run.max_repairs && try_repair(it, dr))) {
                    undecided(it.box);
                }
            }
            continue;
        }

        auto halves = bisect(it.box, run.min_box_width);
        if (!halves) {
            undecided(it.box);
            continue;
        }
        ++rep.stats.bisections;
        stack.push_back({std::move(halves->second), it.repairs, false});
        stack.push_back({std::move(halves->first), it.repairs, false});
    }
    return rep;
}

inline SearchReport run_search(const RunConfig &run) { return search_box(run, run.bounds); }

// Marks certified solutions of the same reduced frame whose boxes overlap.
inline void flag_duplicates(std::vector<CertifiedSolution> &sols)
{
    for (std::size_t i = 0; i < sols.size(); ++i) {
        for (std::size_t j = 0; j < i && !sols[i].duplicate; ++j) {
            if (!sols[j].duplicate && sols[j].box.perm() == sols[i].box.perm()
                && sols[j].box.free().intersects(sols[i].box.free())) {
                sols[i].duplicate = true;
            }
        }
    }
}

// ---- multi-run orchestration ----

enum class RunSelection
{
    Symmetry, // one run per group of identical masses
    All,
    List
};

// Bodies that get their own run: the first member of every mass group in
// symmetry mode, every body in exhaustive mode.
inline std::vector<int> select_runs(const Masses &m, RunSelection sel, const std::vector<int> &list = {})
{
    std::vector<int> out;
    if (sel == RunSelection::List) {
        for (int r : list) {
            if (r < 0 || static_cast<std::size_t>(r) >= m.size()) {
                throw PreconditionError("run index out of range");
            }
        }
        out = list;
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }
    const std::vector<int> g = m.groups();
    std::vector<bool> seen(m.size(), false);
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (sel == RunSelection::All || !seen[static_cast<std::size_t>(g[i])]) {
            out.push_back(static_cast<int>(i));
            seen[static_cast<std::size_t>(g[i])] = true;
        }
    }
    return out;
}

struct Task
{
    std::size_t id = 0;
    RunConfig run;
    ReducedBox root;
};

inline std::vector<Task> make_tasks(const Masses &m, int d, const std::vector<int> &runs, const RunOptions &o)
{
    std::vector<Task> tasks;
    for (int k : runs) {
        std::vector<int> planes{-1};
        if (d == 3) {
            planes.clear();
            for (int j = 0; j < static_cast<int>(m.size()); ++j) {
                if (j != k) {
                    planes.push_back(j);
                }
            }
        }
        for (int j : planes) {
            const RunConfig rc = make_run(m, d, k, j, o);
            std::vector<ReducedBox> pieces{rc.bounds};
            for (int s = 0; s < o.split_depth; ++s) {
                std::vector<ReducedBox> next;
                for (const auto &p : pieces) {
                    auto h = bisect(p, 0.0);
                    next.push_back(h->first);
                    next.push_back(h->second);
                }
                pieces = std::move(next);
            }
            for (auto &p : pieces) {
                tasks.push_back({tasks.size(), rc, std::move(p)});
            }
        }
    }
    return tasks;
}

// ---- checkpoints ----

namespace detail
{

inline std::string hex(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

inline double unhex(const std::string &s)
{
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) {
        throw std::runtime_error("checkpoint: bad number " + s);
    }
    return v;
}

inline std::string encode_box(const ReducedBox &b)
{
    std::ostringstream os;
    for (std::size_t i = 0; i < b.perm().size(); ++i) {
        os << (i ? "," : "") << b.perm()[i];
    }
    for (const auto &v : b.free()) {
        os << ' ' << hex(v.lo()) << ':' << hex(v.hi());
    }
    return os.str();
}

inline ReducedBox decode_box(std::istringstream &is, const ReducedBox &shape)
{
    std::string ps;
    is >> ps;
    std::vector<int> perm;
    std::stringstream pss(ps);
    for (std::string t; std::getline(pss, t, ',');) {
        perm.push_back(std::stoi(t));
    }
    IntervalVector free(shape.free().size());
    for (std::size_t i = 0; i < free.size(); ++i) {
        std::string t;
        if (!(is >> t)) {
            throw std::runtime_error("checkpoint: truncated box");
        }
        const auto c = t.find(':');
        if (c == std::string::npos) {
            throw std::runtime_error("checkpoint: bad interval " + t);
        }
        free[i] = Interval(unhex(t.substr(0, c)), unhex(t.substr(c + 1)));
    }
    return {shape.d(), shape.masses(), perm, free};
}

inline std::string fingerprint(const Masses &m, int d, const std::vector<int> &runs, const RunOptions &o)
{
    std::ostringstream os;
    os << "d=" << d << " m=";
    for (const auto &v : m.values()) {
        os << hex(v.lo()) << ':' << hex(v.hi()) << ',';
    }
    os << " runs=";
    for (int r : runs) {
        os << r << ',';
    }
    os << " X=" << hex(o.x_max) << " w=" << hex(o.min_box_width) << " b=" << o.max_boxes << " delta=" << hex(o.delta)
       << " rw=" << hex(o.repair_width) << " rep=" << o.max_repairs << " tol=" << hex(o.refine_tol)
       << " split=" << o.split_depth;
    return os.str();
}

struct TaskRecord
{
    std::vector<ReducedBox> certified; // boxes as first certified
    std::vector<ReducedBox> undecided;
    SearchStats stats;
    std::size_t excluded = 0;
    bool boundary = false;
};

inline std::string encode_stats(const SearchStats &s, std::size_t excluded, bool boundary)
{
    std::ostringstream os;
    os << s.boxes << ' ' << s.excluded_residual << ' ' << s.excluded_constraint << ' ' << s.excluded_virial << ' '
       << s.excluded_krawczyk << ' ' << ' ' << s.repairs << ' ' << s.repair_failures << ' ' << s.conjecture_probes << ' '
       << s.bisections << ' ' << s.rs_only << ' ' << s.unproven << ' ' << excluded << ' ' << (boundary ? 1 : 0);
    return os.str();
}

// Reads committed task records; a task counts only once its S line exists.
inline std::map<std::size_t, TaskRecord> read_checkpoint(const std::string &path, const std::string &fp,
                                                         const std::vector<Task> &tasks)
{
    std::map<std::size_t, TaskRecord> done;
    std::ifstream in(path);
    if (!in) {
        return done;
    }
    std::map<std::size_t, TaskRecord> pending;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream is(line);
        char tag = 0;
        is >> tag;
        if (tag == 'H') {
            std::string rest;
            std::getline(is, rest);
            if (rest.size() > 0 && rest[0] == ' ') {
                rest.erase(0, 1);
            }
            if (rest != fp) {
                throw std::runtime_error("checkpoint " + path + " belongs to a different job");
            }
            header = true;
            continue;
        }
        if (!header) {
            throw std::runtime_error("checkpoint " + path + " has no header");
        }
        std::size_t id = 0;
        if (!(is >> id) || id >= tasks.size()) {
            // a torn final line is expected after an interruption
            continue;
        }
        try {
            if (tag == 'C') {
                pending[id].certified.push_back(decode_box(is, tasks[id].root));
            } else if (tag == 'U') {
                pending[id].undecided.push_back(decode_box(is, tasks[id].root));
            } else if (tag == 'S') {
                TaskRecord r = std::move(pending[id]);
                pending.erase(id);
                SearchStats &s = r.stats;
                int b = 0;
                if (!(is >> s.boxes >> s.excluded_residual >> s.excluded_constraint >> s.excluded_virial
                      >> s.excluded_krawczyk >> s.repairs >> s.repair_failures >> s.conjecture_probes >> s.bisections
                      >> s.rs_only >> s.unproven >> r.excluded >> b)) {
                    continue;
                }
                r.boundary = b != 0;
                done[id] = std::move(r);
            }
        } catch (const std::exception &) {
            // torn line
        }
    }
    return done;
}

} // namespace detail

// Runs every selected body (and in 3D every plane body) over a pool of
// workers. Tasks are independent and their reports are concatenated in task
// order, so the result does not depend on the worker count.
inline SearchReport multi_run(const Masses &masses, int d, const RunOptions &opt,
                              RunSelection sel = RunSelection::Symmetry, const std::vector<int> &list = {})
{
    const std::vector<int> runs = select_runs(masses, sel, list);
    const std::vector<Task> tasks = make_tasks(masses, d, runs, opt);
    const std::string fp = detail::fingerprint(masses, d, runs, opt);

    std::map<std::size_t, detail::TaskRecord> restored;
    if (!opt.checkpoint.empty() && opt.resume) {
        restored = detail::read_checkpoint(opt.checkpoint, fp, tasks);
    }
    std::ofstream ck;
    std::mutex ck_mutex;
    if (!opt.checkpoint.empty()) {
        const bool fresh = !opt.resume || restored.empty();
        ck.open(opt.checkpoint, fresh ? std::ios::trunc : std::ios::app);
        if (!ck) {
            throw std::runtime_error("cannot write checkpoint " + opt.checkpoint);
        }
        if (fresh) {
            ck << "H " << fp << '\n' << std::flush;
        } else {
            ck << '\n' << std::flush; // terminate a torn line
        }
    }

    std::vector<SearchReport> results(tasks.size());
    auto rebuild = [&](const Task &t, const detail::TaskRecord &r) {
        SearchReport rep;
        rep.runs = {t.run.run_index};
        for (const auto &b : r.certified) {
            CertifiedSolution s = finalize_certified(b, t.run.refine_tol);
            s.run_index = t.run.run_index;
            s.plane_index = t.run.plane_index;
            s.task = t.id;
            rep.certified.push_back(std::move(s));
        }
        rep.undecided = r.undecided;
        rep.stats = r.stats;
        rep.excluded_count = r.excluded;
        rep.boundary_touch = r.boundary;
        return rep;
    };
    auto execute = [&](const Task &t) {
        SearchReport rep = search_box(t.run, t.root);
        for (auto &s : rep.certified) {
            s.task = t.id;
        }
        if (ck.is_open()) {
            std::ostringstream os;
            for (const auto &s : rep.certified) {
                os << "C " << t.id << ' ' << detail::encode_box(s.certified) << '\n';
            }
            for (const auto &b : rep.undecided) {
                os << "U " << t.id << ' ' << detail::encode_box(b) << '\n';
            }
            os << "S " << t.id << ' ' << detail::encode_stats(rep.stats, rep.excluded_count, rep.boundary_touch)
               << '\n';
            const std::lock_guard<std::mutex> lock(ck_mutex);
            ck << os.str() << std::flush;
        }
        return rep;
    };

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex fail_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) {
                return;
            }
            try {
                const auto it = restored.find(i);
                results[i] = it != restored.end() ? rebuild(tasks[i], it->second) : execute(tasks[i]);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(fail_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next.store(tasks.size());
            }
        }
    };
    const unsigned nw = std::max(1u, std::min<unsigned>(opt.workers, static_cast<unsigned>(tasks.size())));
    if (nw == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < nw; ++w) {
            pool.emplace_back(worker);
        }
        for (auto &th : pool) {
            th.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    SearchReport out;
    out.runs = runs;
    for (const auto &r : results) {
        out.merge(r);
    }
    flag_duplicates(out.certified);
    return out;
}

} // namespace ncc

#endif
