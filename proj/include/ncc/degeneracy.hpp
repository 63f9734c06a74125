#ifndef NCC_DEGENERACY_HPP
#define NCC_DEGENERACY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "model.hpp"

namespace ncc
{

// No permutation/rotation clears the flagged conditions; the caller bisects.
class NoRepairAvailable : public std::runtime_error
{
public:
    NoRepairAvailable(const std::string &what, bool conjecture_probe)
        : std::runtime_error(what), conjecture_probe_(conjecture_probe)
    {
    }
    // Set when every candidate for the in-plane slot keeps the collinear
    // z-block singular.
    [[nodiscard]] bool conjecture_probe() const noexcept { return conjecture_probe_; }

private:
    bool conjecture_probe_;
};

struct DegeneracyReport
{
    // D1: x_{n-1} ~ 0, D2: x_{n-1} ~ x_n, D3: y_{n-2} ~ 0, D4: projected
    // determinant ~ 0, D5: det D RS_z ~ 0 (3D collinear candidates).
    bool d1 = false, d2 = false, d3 = false, d4 = false, d5 = false;
    bool collinear_candidate = false;
    // Certified distance of each quantity from zero (mignitude of its
    // enclosure); NaN when the condition was not evaluated.
    std::array<double, 5> margin{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
                                 std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
                                 std::numeric_limits<double>::quiet_NaN()};
    double delta = 0.0;

    [[nodiscard]] bool any() const noexcept { return d1 || d2 || d3 || d4 || d5; }

    [[nodiscard]] std::string describe() const
    {
        std::ostringstream os;
        const bool f[5] = {d1, d2, d3, d4, d5};
        bool first = true;
        for (int i = 0; i < 5; ++i) {
            if (f[i]) {
                os << (first ? "" : ",") << 'D' << (i + 1);
                first = false;
            }
        }
        return first ? "none" : os.str();
    }
};

inline double default_delta(const ReducedBox &box) { return 10.0 * box.free().max_width() + 1e-12; }

namespace detail
{

struct V3
{
    Interval x, y, z;
};

inline Interval dot(const V3 &a, const V3 &b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline V3 cross(const V3 &a, const V3 &b)
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline Interval norm2(const V3 &a) { return sqr(a.x) + sqr(a.y) + sqr(a.z); }

// Slot-ordered full positions as 3-vectors (z = 0 in 2D).
inline std::vector<V3> slot_vectors(const ReducedBox &box)
{
    const auto pos = box.full_slot_positions();
    const auto du = static_cast<std::size_t>(box.d());
    std::vector<V3> out(box.n());
    for (std::size_t s = 0; s < box.n(); ++s) {
        out[s].x = pos[s * du];
        out[s].y = pos[s * du + 1];
        out[s].z = du == 3 ? pos[s * du + 2] : Interval(0.0);
    }
    return out;
}

inline Interval clamp_abs(const Interval &v, const Interval &bound)
{
    const double b = bound.hi();
    const Interval lim(-b, b);
    return v.intersects(lim) ? intersect(v, lim) : v;
}

// det [[y_b - y_e, y_a - y_e], [x_b - x_e, x_a - x_e]]
inline Interval projected_det(const V3 &b, const V3 &a, const V3 &e)
{
    return (b.y - e.y) * (a.x - e.x) - (a.y - e.y) * (b.x - e.x);
}

// z-block of D RS (slots 0..n-4): the part that decides collinear 3D
// degeneracy; at collinear points it is (M_red - A_red)/m row-scaled.
inline Interval det_rs_z(const ReducedBox &box)
{
    const std::size_t n = box.n();
    if (box.d() != 3 || n < 4) {
        return Interval(1.0);
    }
    const IntervalMatrix j = jacobian_RS(box);
    const std::size_t k = n - 3;
    IntervalMatrix z(k, k);
    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t c = 0; c < k; ++c) {
            const auto fr = static_cast<std::size_t>(ReducedBox::free_index(3, n, r, 2));
            const auto fc = static_cast<std::size_t>(ReducedBox::free_index(3, n, c, 2));
            z(r, c) = j(fr, fc);
        }
    }
    return det_interval(z);
}

} // namespace detail

inline DegeneracyReport check_degeneracy(const ReducedBox &box, double delta)
{
    DegeneracyReport r;
    r.delta = delta;
    const std::size_t n = box.n();
    const auto P = detail::slot_vectors(box);
    const std::size_t a = n - 2, e = n - 1;
    r.margin[0] = P[a].x.mig();
    r.d1 = r.margin[0] < delta;
    r.margin[1] = (P[a].x - P[e].x).mig();
    r.d2 = r.margin[1] < delta;
    if (box.d() != 3) {
        return r;
    }
    r.collinear_candidate = true;
    for (const auto &p : P) {
        if (p.y.mig() > delta || p.z.mig() > delta) {
            r.collinear_candidate = false;
            break;
        }
    }
    if (r.collinear_candidate) {
        try {
            r.margin[4] = detail::det_rs_z(box).mig();
        } catch (const CollisionPossible &) {
            r.margin[4] = 0.0;
        }
        r.d5 = r.margin[4] < delta;
        return r;
    }
    const std::size_t b = n - 3;
    r.margin[2] = P[b].y.mig();
    r.d3 = r.margin[2] < delta;
    r.margin[3] = detail::projected_det(P[b], P[a], P[e]).mig();
    r.d4 = r.margin[3] < delta;
    return r;
}

inline DegeneracyReport check_degeneracy(const ReducedBox &box) { return check_degeneracy(box, default_delta(box)); }

// Rigorous enclosure of the rotation of every point of cfg by every angle in
// `angle`, about the given axis (0 = x, 1 = y, 2 = z; 2D uses z).
inline Configuration rotate_enclosure(const Configuration &cfg, int axis, const Interval &angle)
{
    if (angle.is_point() && angle.lo() == 0.0) {
        return cfg;
    }
    if (cfg.d == 2 && axis != 2) {
        throw PreconditionError("rotate_enclosure: 2D rotations are about the z axis");
    }
    const Interval c = cos(angle), s = sin(angle);
    const int i0 = axis == 0 ? 1 : (axis == 1 ? 2 : 0);
    const int i1 = axis == 0 ? 2 : (axis == 1 ? 0 : 1);
    Configuration out = cfg;
    for (auto &p : out.q) {
        const Interval u = p[static_cast<std::size_t>(i0)], v = p[static_cast<std::size_t>(i1)];
        p[static_cast<std::size_t>(i0)] = c * u - s * v;
        p[static_cast<std::size_t>(i1)] = s * u + c * v;
    }
    return out;
}

namespace detail
{

// Body-indexed positions after the proper rotation that puts body `a` on the
// positive OX axis and (3D) body `b` in the OXY half-plane y >= 0. Coordinates
// are written through the explicit frame e1 = q_a/|q_a|,
// e3 = q_a x q_b/|q_a x q_b|, e2 = e3 x e1.
inline std::vector<V3> frame_full(const std::vector<V3> &P, std::size_t a, std::size_t b, int d)
{
    const V3 qa = P[a];
    const Interval na2 = norm2(qa);
    if (!(na2.lo() > 0)) {
        throw NoRepairAvailable("axis body may sit at the origin", false);
    }
    const Interval na = sqrt(na2);
    std::vector<V3> out(P.size());
    if (d == 2) {
        for (std::size_t i = 0; i < P.size(); ++i) {
            const Interval ni = sqrt(norm2(P[i]));
            out[i].x = clamp_abs((qa.x * P[i].x + qa.y * P[i].y) / na, ni);
            out[i].y = clamp_abs((qa.x * P[i].y - qa.y * P[i].x) / na, ni);
            out[i].z = Interval(0.0);
        }
        out[a] = {na, Interval(0.0), Interval(0.0)};
        return out;
    }
    const V3 w = cross(qa, P[b]);
    const Interval nw2 = norm2(w);
    if (!(nw2.lo() > 0)) {
        throw NoRepairAvailable("in-plane body may lie on the new axis", false);
    }
    const Interval nw = sqrt(nw2);
    const V3 e2num = cross(w, qa); // |e2num| = |w||q_a|
    const Interval e2den = nw * na;
    for (std::size_t i = 0; i < P.size(); ++i) {
        const Interval ni = sqrt(norm2(P[i]));
        out[i].x = clamp_abs(dot(qa, P[i]) / na, ni);
        out[i].y = clamp_abs(dot(e2num, P[i]) / e2den, ni);
        out[i].z = clamp_abs(dot(w, P[i]) / nw, ni);
    }
    out[a] = {na, Interval(0.0), Interval(0.0)};
    out[b] = {clamp_abs(dot(qa, P[b]) / na, sqrt(norm2(P[b]))), nw / na, Interval(0.0)};
    return out;
}

// Rotation about OX that brings body b into the OXY half-plane y >= 0. When
// b may sit on the axis the angle is unknown and coordinates are bounded by
// their (rotation-invariant) distance to the axis.
inline std::vector<V3> frame_about_ox(const std::vector<V3> &P, std::size_t b)
{
    std::vector<V3> out(P.size());
    const Interval rb2 = sqr(P[b].y) + sqr(P[b].z);
    if (rb2.lo() > 0) {
        const Interval rb = sqrt(rb2);
        for (std::size_t i = 0; i < P.size(); ++i) {
            const Interval ri = sqrt(sqr(P[i].y) + sqr(P[i].z));
            out[i].x = P[i].x;
            out[i].y = clamp_abs((P[b].y * P[i].y + P[b].z * P[i].z) / rb, ri);
            out[i].z = clamp_abs((P[b].y * P[i].z - P[b].z * P[i].y) / rb, ri);
        }
        out[b] = {P[b].x, rb, Interval(0.0)};
        return out;
    }
    for (std::size_t i = 0; i < P.size(); ++i) {
        const double r = sqrt(sqr(P[i].y) + sqr(P[i].z)).hi();
        out[i] = {P[i].x, Interval(-r, r), Interval(-r, r)};
    }
    out[b] = {P[b].x, Interval(0.0, sqrt(rb2).hi()), Interval(0.0)};
    return out;
}

// Builds the reduced box for a new slot assignment from slot-indexed rotated
// positions (indices refer to the old slots). Images of a box under the
// change of frame can be far thinner than the box in some coordinate, which
// leaves Krawczyk no room; every coordinate is padded to the input radius.
inline ReducedBox assemble(const ReducedBox &box, const std::vector<V3> &P, const std::vector<std::size_t> &new_slots)
{
    const std::size_t n = box.n();
    const int d = box.d();
    const double pad = box.free().max_rad();
    std::vector<int> perm(n);
    IntervalVector free(box.free().size());
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t old = new_slots[s];
        perm[s] = box.perm()[old];
        for (int k = 0; k < d; ++k) {
            const int fi = ReducedBox::free_index(d, n, s, k);
            if (fi >= 0) {
                const Interval &v = k == 0 ? P[old].x : (k == 1 ? P[old].y : P[old].z);
                free[static_cast<std::size_t>(fi)] =
                    hull(v, Interval(detail::add_down(v.mid(), -pad), detail::add_up(v.mid(), pad)));
            }
        }
    }
    return ReducedBox(d, box.masses(), std::move(perm), std::move(free));
}

// New slot order (as old-slot indices) with given roles; the remaining
// slots keep their relative order.
inline std::vector<std::size_t> slot_order(std::size_t n, int d, std::size_t axis, std::size_t plane,
                                           std::size_t elim)
{
    std::vector<std::size_t> order(n, n);
    order[n - 1] = elim;
    order[n - 2] = axis;
    if (d == 3) {
        order[n - 3] = plane;
    }
    std::size_t next = 0;
    for (std::size_t old = 0; old < n; ++old) {
        if (old == elim || old == axis || (d == 3 && old == plane)) {
            continue;
        }
        order[next++] = old;
    }
    return order;
}

inline std::size_t farthest(const std::vector<V3> &P, const std::vector<Interval> &score, std::size_t skip)
{
    std::size_t best = P.size();
    for (std::size_t i = 0; i < P.size(); ++i) {
        if (i == skip) {
            continue;
        }
        if (best == P.size() || score[i].lo() > score[best].lo()) {
            best = i;
        }
    }
    return best;
}

} // namespace detail

// Switches to a different reduced system (relabeling and/or rotation) so
// that the flagged conditions clear. Every configuration in the input box has
// a congruent representative in the output box.
inline ReducedBox renormalize(const ReducedBox &box, const DegeneracyReport &report)
{
    using namespace detail;
    if (!report.any()) {
        throw PreconditionError("renormalize: no degeneracy flagged");
    }
    const std::size_t n = box.n();
    const int d = box.d();
    const double delta = report.delta;
    const std::vector<V3> P = slot_vectors(box);
    const std::size_t axis = n - 2, elim = n - 1;
    const std::size_t plane = d == 3 ? n - 3 : n;

    // Picks the eliminated body among slots that need no rotation, maximizing
    // the margin of x_axis - x_e (and in 3D of the projected determinant).
    auto choose_elim = [&](const std::vector<V3> &Q, std::size_t ax, std::size_t pl,
                           std::size_t current) -> std::optional<std::size_t> {
        std::optional<std::size_t> best;
        double best_margin = -1.0;
        for (std::size_t e = 0; e < n; ++e) {
            if (e == ax || (d == 3 && e == pl)) {
                continue;
            }
            double m = (Q[ax].x - Q[e].x).mig();
            if (d == 3) {
                m = std::min(m, projected_det(Q[pl], Q[ax], Q[e]).mig());
            }
            if (m >= delta && (m > best_margin || (m == best_margin && e == current))) {
                best = e;
                best_margin = m;
            }
        }
        return best;
    };

    if (report.d1 || report.d2) {
        std::vector<Interval> r2(n);
        for (std::size_t i = 0; i < n; ++i) {
            r2[i] = norm2(P[i]);
        }
        const std::size_t far = farthest(P, r2, n);
        if (far != axis) {
            std::size_t pl = plane;
            if (d == 3) {
                std::vector<Interval> off(n);
                for (std::size_t i = 0; i < n; ++i) {
                    off[i] = norm2(cross(P[far], P[i]));
                }
                pl = farthest(P, off, far);
            }
            const std::vector<V3> Q = frame_full(P, far, pl, d);
            std::size_t e = elim;
            for (const std::size_t c : {elim, axis, plane}) {
                if (c < n && c != far && !(d == 3 && c == pl)) {
                    e = c;
                    break;
                }
            }
            if (const auto better = choose_elim(Q, far, pl, e)) {
                e = *better;
            }
            return assemble(box, Q, slot_order(n, d, far, pl, e));
        }
        if (report.d1) {
            throw NoRepairAvailable("axis body is already the farthest from the origin", false);
        }
        if (const auto e = choose_elim(P, axis, plane, elim)) {
            return assemble(box, P, slot_order(n, d, axis, plane, *e));
        }
        throw NoRepairAvailable("no eliminated body separates from the axis body", false);
    }

    if (d != 3) {
        throw NoRepairAvailable("no repair for the flagged conditions", false);
    }

    if (report.d5) {
        // Cycle the in-plane slot through the other bodies in index order,
        // keeping the axis body; each choice needs a rotation about OX.
        std::vector<std::size_t> cands;
        for (std::size_t s = 0; s < n; ++s) {
            if (s != axis && s != plane) {
                cands.push_back(s);
            }
        }
        std::sort(cands.begin(), cands.end(),
                  [&](std::size_t x, std::size_t y) { return box.perm()[x] < box.perm()[y]; });
        for (const std::size_t b : cands) {
            const std::vector<V3> Q = frame_about_ox(P, b);
            const std::size_t e = (b == elim) ? plane : elim;
            const ReducedBox out = assemble(box, Q, slot_order(n, d, axis, b, e));
            double m = 0.0;
            try {
                m = det_rs_z(out).mig();
            } catch (const CollisionPossible &) {
                m = 0.0;
            }
            if (m >= delta) {
                return out;
            }
        }
        throw NoRepairAvailable("collinear z-block singular for every in-plane choice", true);
    }

    if (report.d3) {
        std::vector<Interval> off(n);
        for (std::size_t i = 0; i < n; ++i) {
            off[i] = sqr(P[i].y) + sqr(P[i].z);
        }
        const std::size_t b = farthest(P, off, axis);
        if (b != plane && off[b].lo() > 0) {
            const std::vector<V3> Q = frame_about_ox(P, b);
            std::size_t e = (b == elim) ? plane : elim;
            if (const auto better = choose_elim(Q, axis, b, e)) {
                e = *better;
            }
            return assemble(box, Q, slot_order(n, d, axis, b, e));
        }
        throw NoRepairAvailable("no body is certainly off the OX axis", false);
    }

    if (report.d4) {
        if (const auto e = choose_elim(P, axis, plane, elim)) {
            return assemble(box, P, slot_order(n, d, axis, plane, *e));
        }
        throw NoRepairAvailable("every eliminated-body choice keeps the projected determinant near zero", false);
    }
    throw NoRepairAvailable("no repair for the flagged conditions", false);
}

} // namespace ncc

#endif
