#ifndef NCC_CLASSIFY_HPP
#define NCC_CLASSIFY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "search.hpp"

namespace ncc
{

enum class Group
{
    SO2,
    SO3
};

enum class Shape
{
    Collinear,
    Concave,
    Convex,
    SpatialNonPlanar,
    Unresolved
};

inline const char *to_string(Shape s)
{
    switch (s) {
    case Shape::Collinear:
        return "collinear";
    case Shape::Concave:
        return "concave";
    case Shape::Convex:
        return "convex";
    case Shape::SpatialNonPlanar:
        return "spatial";
    case Shape::Unresolved:
        return "unresolved";
    }
    return "?";
}

struct SignatureEntry
{
    Interval mi, mj, r;
    int i = 0, j = 0;
};

// Sorted (m_i, m_j, r_ij) triples with m_i <= m_j (by midpoint).
using Signature = std::vector<SignatureEntry>;

inline Signature signature(const Configuration &c)
{
    Signature s;
    for (std::size_t i = 0; i < c.n(); ++i) {
        for (std::size_t j = i + 1; j < c.n(); ++j) {
            Interval r2(0.0);
            for (int k = 0; k < c.d; ++k) {
                r2 += sqr(c.q[i][static_cast<std::size_t>(k)] - c.q[j][static_cast<std::size_t>(k)]);
            }
            SignatureEntry e{c.masses[i], c.masses[j], sqrt(r2), static_cast<int>(i), static_cast<int>(j)};
            if (e.mj.mid() < e.mi.mid()) {
                std::swap(e.mi, e.mj);
                std::swap(e.i, e.j);
            }
            s.push_back(e);
        }
    }
    std::sort(s.begin(), s.end(), [](const SignatureEntry &a, const SignatureEntry &b) {
        if (a.mi.mid() != b.mi.mid()) {
            return a.mi.mid() < b.mi.mid();
        }
        if (a.mj.mid() != b.mj.mid()) {
            return a.mj.mid() < b.mj.mid();
        }
        return a.r.mid() < b.r.mid();
    });
    return s;
}

inline Signature signature(const CertifiedSolution &sol) { return signature(sol.config); }

// Overlap of two signatures as multisets: a perfect matching of entries
// with intersecting enclosures (augmenting paths).
inline bool signatures_intersect(const Signature &a, const Signature &b)
{
    if (a.size() != b.size()) {
        return false;
    }
    const std::size_t n = a.size();
    auto match = [](const SignatureEntry &x, const SignatureEntry &y) {
        return x.mi.intersects(y.mi) && x.mj.intersects(y.mj) && x.r.intersects(y.r);
    };
    std::vector<int> owner(n, -1);
    std::vector<bool> seen;
    std::function<bool(std::size_t)> augment = [&](std::size_t i) {
        for (std::size_t k = 0; k < n; ++k) {
            if (seen[k] || !match(a[i], b[k])) {
                continue;
            }
            seen[k] = true;
            if (owner[k] < 0 || augment(static_cast<std::size_t>(owner[k]))) {
                owner[k] = static_cast<int>(i);
                return true;
            }
        }
        return false;
    };
    for (std::size_t i = 0; i < n; ++i) {
        seen.assign(n, false);
        if (!augment(i)) {
            return false;
        }
    }
    return true;
}

// Orientation of the configuration: sign of the first signed area (2D) or
// volume (3D) that is certainly nonzero; 0 when none is.
inline int chirality(const Configuration &c)
{
    const std::size_t n = c.n();
    auto v = [&](std::size_t i, std::size_t k) { return c.q[i][k] - c.q[0][k]; };
    if (c.d == 2) {
        for (std::size_t i = 1; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const Interval a = v(i, 0) * v(j, 1) - v(i, 1) * v(j, 0);
                if (a.certainly_positive()) {
                    return 1;
                }
                if (a.certainly_negative()) {
                    return -1;
                }
            }
        }
        return 0;
    }
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            for (std::size_t k = j + 1; k < n; ++k) {
                const Interval w = v(i, 0) * (v(j, 1) * v(k, 2) - v(j, 2) * v(k, 1))
                                   - v(i, 1) * (v(j, 0) * v(k, 2) - v(j, 2) * v(k, 0))
                                   + v(i, 2) * (v(j, 0) * v(k, 1) - v(j, 1) * v(k, 0));
                if (w.certainly_positive()) {
                    return 1;
                }
                if (w.certainly_negative()) {
                    return -1;
                }
            }
        }
    }
    return 0;
}

namespace detail
{

inline Interval dotd(const IntervalVector &a, const IntervalVector &b, int d)
{
    Interval s(0.0);
    for (int k = 0; k < d; ++k) {
        s += a[static_cast<std::size_t>(k)] * b[static_cast<std::size_t>(k)];
    }
    return s;
}

inline IntervalVector cross3(const IntervalVector &a, const IntervalVector &b)
{
    return IntervalVector{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

// Coordinates of every body in the proper frame spanned by bodies k (first
// axis) and l (second axis, 3D). Equal frames of the same labels mean the
// configurations differ by a rotation. In 3D with l < 0 only the axial
// coordinate and the distance from the axis are returned.
inline std::vector<IntervalVector> body_frame(const Configuration &c, std::size_t k, int l)
{
    const int d = c.d;
    const Interval nk = sqrt(dotd(c.q[k], c.q[k], d));
    std::vector<IntervalVector> out;
    if (d == 2) {
        for (const auto &p : c.q) {
            out.push_back(IntervalVector{dotd(c.q[k], p, 2) / nk, (c.q[k][0] * p[1] - c.q[k][1] * p[0]) / nk});
        }
        return out;
    }
    if (l < 0) {
        for (const auto &p : c.q) {
            const IntervalVector w = cross3(c.q[k], p);
            out.push_back(IntervalVector{dotd(c.q[k], p, 3) / nk, sqrt(dotd(w, w, 3)) / nk});
        }
        return out;
    }
    const IntervalVector w = cross3(c.q[k], c.q[static_cast<std::size_t>(l)]);
    const Interval nw = sqrt(dotd(w, w, 3));
    const IntervalVector e2 = cross3(w, c.q[k]);
    const Interval n2 = nw * nk;
    for (const auto &p : c.q) {
        out.push_back(IntervalVector{dotd(c.q[k], p, 3) / nk, dotd(e2, p, 3) / n2, dotd(w, p, 3) / nw});
    }
    return out;
}

inline bool frames_overlap(const std::vector<IntervalVector> &a, const std::vector<IntervalVector> &b)
{
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].intersects(b[i])) {
            return false;
        }
    }
    return true;
}

inline bool equivalent_labeled(const Configuration &a, const Configuration &b, Group g)
{
    const std::size_t n = a.n();
    if (n != b.n() || a.d != b.d) {
        return false;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!a.masses[i].intersects(b.masses[i])) {
            return false;
        }
        for (std::size_t j = i + 1; j < n; ++j) {
            Interval ra(0.0), rb(0.0);
            for (int k = 0; k < a.d; ++k) {
                ra += sqr(a.q[i][static_cast<std::size_t>(k)] - a.q[j][static_cast<std::size_t>(k)]);
                rb += sqr(b.q[i][static_cast<std::size_t>(k)] - b.q[j][static_cast<std::size_t>(k)]);
            }
            if (!ra.intersects(rb)) {
                return false;
            }
        }
    }
    // Axis body: the one certainly farthest from the origin in a.
    std::size_t k = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (dotd(a.q[i], a.q[i], a.d).lo() > dotd(a.q[k], a.q[k], a.d).lo()) {
            k = i;
        }
    }
    if (!(dotd(a.q[k], a.q[k], a.d).lo() > 0) || !(dotd(b.q[k], b.q[k], b.d).lo() > 0)) {
        return false;
    }
    try {
        if (a.d == 2) {
            // SO(2) keeps orientation; SO(3) also allows the flip of the plane.
            const auto fa = body_frame(a, k, -1);
            const auto fb = body_frame(b, k, -1);
            if (frames_overlap(fa, fb)) {
                return true;
            }
            if (g == Group::SO3) {
                auto flipped = fb;
                for (auto &p : flipped) {
                    p[1] = -p[1];
                }
                return frames_overlap(fa, flipped);
            }
            return false;
        }
        int l = -1;
        double best = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == k) {
                continue;
            }
            const IntervalVector wa = cross3(a.q[k], a.q[i]);
            const IntervalVector wb = cross3(b.q[k], b.q[i]);
            const double lo = std::min(dotd(wa, wa, 3).lo(), dotd(wb, wb, 3).lo());
            if (lo > best) {
                best = lo;
                l = static_cast<int>(i);
            }
        }
        const auto fa = body_frame(a, k, l);
        const auto fb = body_frame(b, k, l);
        if (frames_overlap(fa, fb)) {
            return true;
        }
        if (g == Group::SO2 || l < 0) {
            return false;
        }
        // a planar configuration and its mirror image differ by a half turn
        // about an in-plane axis; only then may the normal coordinate flip
        bool planar = true;
        for (const auto &p : fa) {
            planar = planar && p[2].contains_zero();
        }
        if (!planar) {
            return false;
        }
        auto flipped = fb;
        for (auto &p : flipped) {
            p[2] = -p[2];
        }
        return frames_overlap(fa, flipped);
    } catch (const DomainError &) {
        return false;
    }
}

inline Configuration relabeled(const Configuration &c, const std::vector<int> &pi)
{
    Configuration out = c;
    for (std::size_t i = 0; i < c.n(); ++i) {
        out.q[i] = c.q[static_cast<std::size_t>(pi[i])];
    }
    out.masses = c.masses.permuted(pi);
    return out;
}

} // namespace detail

// True when a rotation (SO(2) in the plane, SO(3) in space, where planar
// mirror images coincide) maps a onto b with overlapping enclosures. With
// relabel set, permutations among bodies of identical mass are allowed too.
// 2D configurations compared under SO(3) are treated as lying in a plane.
inline bool equivalent(const Configuration &a, const Configuration &b, Group g, bool relabel = false)
{
    if (!relabel) {
        return detail::equivalent_labeled(a, b, g);
    }
    if (!signatures_intersect(signature(a), signature(b))) {
        return false;
    }
    const std::vector<int> grp = a.masses.groups();
    std::vector<int> pi(a.n());
    std::iota(pi.begin(), pi.end(), 0);
    do {
        bool ok = true;
        for (std::size_t i = 0; i < pi.size() && ok; ++i) {
            ok = grp[i] == grp[static_cast<std::size_t>(pi[i])];
        }
        if (ok && detail::equivalent_labeled(a, detail::relabeled(b, pi), g)) {
            return true;
        }
    } while (std::next_permutation(pi.begin(), pi.end()));
    return false;
}

inline bool equivalent(const CertifiedSolution &a, const CertifiedSolution &b, Group g, bool relabel = false)
{
    return equivalent(a.config, b.config, g, relabel);
}

namespace detail
{

inline Interval cross2(const Interval &ax, const Interval &ay, const Interval &bx, const Interval &by)
{
    return ax * by - ay * bx;
}

// Andrew's monotone chain on midpoints; returns hull vertex indices in
// counterclockwise order.
inline std::vector<std::size_t> float_hull(const std::vector<std::array<double, 2>> &p)
{
    std::vector<std::size_t> idx(p.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return p[a][0] < p[b][0] || (p[a][0] == p[b][0] && p[a][1] < p[b][1]);
    });
    auto turn = [&](std::size_t o, std::size_t a, std::size_t b) {
        return (p[a][0] - p[o][0]) * (p[b][1] - p[o][1]) - (p[a][1] - p[o][1]) * (p[b][0] - p[o][0]);
    };
    std::vector<std::size_t> h(2 * idx.size());
    std::size_t k = 0;
    for (std::size_t i : idx) {
        while (k >= 2 && turn(h[k - 2], h[k - 1], i) <= 0) {
            --k;
        }
        h[k++] = i;
    }
    for (std::size_t t = idx.size() - 1, lo = k + 1; t-- > 0;) {
        const std::size_t i = idx[t];
        while (k >= lo && turn(h[k - 2], h[k - 1], i) <= 0) {
            --k;
        }
        h[k++] = i;
    }
    h.resize(k > 1 ? k - 1 : k);
    return h;
}

// Planar hull classification of interval points.
inline Shape planar_shape(const std::vector<Interval> &x, const std::vector<Interval> &y)
{
    const std::size_t n = x.size();
    // certified interior: strictly inside a triangle of three other bodies
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a + 1; b < n; ++b) {
                for (std::size_t c = b + 1; c < n; ++c) {
                    if (i == a || i == b || i == c) {
                        continue;
                    }
                    const Interval det = cross2(x[b] - x[a], y[b] - y[a], x[c] - x[a], y[c] - y[a]);
                    if (det.contains_zero()) {
                        continue;
                    }
                    const Interval lb = cross2(x[i] - x[a], y[i] - y[a], x[c] - x[a], y[c] - y[a]) / det;
                    const Interval lc = cross2(x[b] - x[a], y[b] - y[a], x[i] - x[a], y[i] - y[a]) / det;
                    const Interval la = Interval(1.0) - lb - lc;
                    if (la.certainly_positive() && lb.certainly_positive() && lc.certainly_positive()) {
                        return Shape::Concave;
                    }
                }
            }
        }
    }
    std::vector<std::array<double, 2>> mid(n);
    for (std::size_t i = 0; i < n; ++i) {
        mid[i] = {x[i].mid(), y[i].mid()};
    }
    // a body on a diagonal (square plus center) escapes the triangle test:
    // strictly left of every edge of the others' hull, whose turns are all
    // certainly left and add up to one full turn
    for (std::size_t i = 0; i < n && n >= 4; ++i) {
        std::vector<std::array<double, 2>> rest;
        std::vector<std::size_t> ids;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                rest.push_back(mid[j]);
                ids.push_back(j);
            }
        }
        const auto h = float_hull(rest);
        const std::size_t k = h.size();
        if (k < 3) {
            continue;
        }
        bool inside = true;
        double turning = 0;
        for (std::size_t t = 0; t < k && inside; ++t) {
            const std::size_t a = ids[h[t]], b = ids[h[(t + 1) % k]], c = ids[h[(t + 2) % k]];
            inside = cross2(x[b] - x[a], y[b] - y[a], x[c] - x[b], y[c] - y[b]).certainly_positive()
                     && cross2(x[b] - x[a], y[b] - y[a], x[i] - x[a], y[i] - y[a]).certainly_positive();
            turning += std::atan2(
                (mid[b][0] - mid[a][0]) * (mid[c][1] - mid[b][1]) - (mid[b][1] - mid[a][1]) * (mid[c][0] - mid[b][0]),
                (mid[b][0] - mid[a][0]) * (mid[c][0] - mid[b][0]) + (mid[b][1] - mid[a][1]) * (mid[c][1] - mid[b][1]));
        }
        if (inside && std::abs(turning - 2 * std::numbers::pi) < 1) {
            return Shape::Concave;
        }
    }
    // certified vertices: a supporting direction strictly separating body i
    const auto hull = float_hull(mid);
    if (hull.size() != n) {
        return Shape::Unresolved;
    }
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t prev = hull[(t + n - 1) % n], i = hull[t], next = hull[(t + 1) % n];
        // outward normals of the two incident edges (counterclockwise order)
        double e1x = mid[i][0] - mid[prev][0], e1y = mid[i][1] - mid[prev][1];
        double e2x = mid[next][0] - mid[i][0], e2y = mid[next][1] - mid[i][1];
        const double l1 = std::hypot(e1x, e1y), l2 = std::hypot(e2x, e2y);
        const Interval ux((e1y / l1) + (e2y / l2));
        const Interval uy(-(e1x / l1) - (e2x / l2));
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i && !(ux * (x[i] - x[j]) + uy * (y[i] - y[j])).certainly_positive()) {
                return Shape::Unresolved;
            }
        }
    }
    return Shape::Convex;
}

} // namespace detail

inline Shape classify_shape(const CertifiedSolution &sol)
{
    if (sol.collinear) {
        return Shape::Collinear;
    }
    const Configuration &c = sol.config;
    if (c.d == 3 && !sol.planar) {
        return chirality(c) != 0 ? Shape::SpatialNonPlanar : Shape::Unresolved;
    }
    // configurations are kept in their reduced frame, so a planar 3D
    // solution lies in OXY
    std::vector<Interval> x, y;
    for (const auto &p : c.q) {
        x.push_back(p[0]);
        y.push_back(p[1]);
    }
    return detail::planar_shape(x, y);
}

struct EquivalenceClass
{
    CertifiedSolution representative;
    Configuration config; // labeled representative (relabeled copy when expanded)
    Signature sig;
    Shape shape = Shape::Unresolved;
    std::size_t members = 0;
    std::set<int> runs;
    bool consistent = true; // members pairwise equivalent
};

struct CountTable
{
    std::size_t concave = 0, collinear = 0, convex = 0, spatial = 0, unresolved = 0, total = 0;
    // sum over runs of (classes seen in the run) x (bodies the run stands for)
    std::size_t run_upper_bound = 0;
};

struct Classification
{
    std::vector<EquivalenceClass> classes;
    CountTable table;
};

inline CountTable build_tables(const std::vector<EquivalenceClass> &classes)
{
    CountTable t;
    for (const auto &c : classes) {
        switch (c.shape) {
        case Shape::Collinear:
            ++t.collinear;
            break;
        case Shape::Concave:
            ++t.concave;
            break;
        case Shape::Convex:
            ++t.convex;
            break;
        case Shape::SpatialNonPlanar:
            ++t.spatial;
            break;
        case Shape::Unresolved:
            ++t.unresolved;
            break;
        }
    }
    t.total = classes.size();
    return t;
}

// Testing stage: expand each run's solutions to the bodies of identical mass
// it stands for, then merge rotation-equivalent labeled configurations.
inline Classification classify(const SearchReport &rep, const Masses &masses, Group g)
{
    struct Item
    {
        std::size_t sol;
        Configuration config;
        int run;
        bool original;
    };
    const std::vector<int> grp = masses.groups();
    std::vector<Item> items;
    for (std::size_t s = 0; s < rep.certified.size(); ++s) {
        const auto &sol = rep.certified[s];
        if (sol.duplicate || sol.check != PostCheck::Verified) {
            continue;
        }
        items.push_back({s, sol.config, sol.run_index, true});
        if (sol.run_index < 0) {
            continue;
        }
        const auto k = static_cast<std::size_t>(sol.run_index);
        for (std::size_t k2 = 0; k2 < masses.size(); ++k2) {
            if (k2 == k || grp[k2] != grp[k]) {
                continue;
            }
            std::vector<int> pi(masses.size());
            std::iota(pi.begin(), pi.end(), 0);
            std::swap(pi[k], pi[k2]);
            items.push_back({s, detail::relabeled(sol.config, pi), sol.run_index, false});
        }
    }

    std::vector<std::size_t> parent(items.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    };
    std::vector<Signature> sigs;
    for (const auto &it : items) {
        sigs.push_back(signature(it.config));
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (find(i) == find(j)) {
                continue;
            }
            if (equivalent(items[i].config, items[j].config, g)) {
                parent[find(i)] = find(j);
            }
        }
    }

    Classification out;
    std::vector<std::size_t> class_of(items.size());
    std::vector<std::size_t> root_class(items.size(), items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        const std::size_t r = find(i);
        if (root_class[r] == items.size()) {
            root_class[r] = out.classes.size();
            EquivalenceClass c;
            c.representative = rep.certified[items[i].sol];
            c.config = items[i].config;
            c.sig = sigs[i];
            c.shape = classify_shape(c.representative);
            out.classes.push_back(std::move(c));
        }
        class_of[i] = root_class[r];
        auto &c = out.classes[class_of[i]];
        ++c.members;
        c.runs.insert(items[i].run);
    }
    // union-find closes transitively; confirm members really pair up
    for (std::size_t i = 0; i < items.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (class_of[i] == class_of[j] && !equivalent(items[i].config, items[j].config, g)) {
                out.classes[class_of[i]].consistent = false;
            }
        }
    }
    out.table = build_tables(out.classes);

    for (int k : rep.runs) {
        std::set<std::size_t> seen;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (items[i].original && items[i].run == k) {
                seen.insert(class_of[i]);
            }
        }
        const auto size = static_cast<std::size_t>(std::count(grp.begin(), grp.end(), grp[static_cast<std::size_t>(k)]));
        out.table.run_upper_bound += seen.size() * size;
    }
    return out;
}

inline std::string table_csv(const CountTable &t)
{
    std::ostringstream os;
    os << "concave,collinear,convex,spatial,unresolved,total\n"
       << t.concave << ',' << t.collinear << ',' << t.convex << ',' << t.spatial << ',' << t.unresolved << ','
       << t.total << '\n';
    return os.str();
}

} // namespace ncc

#endif
