#ifndef NCC_MODEL_HPP
#define NCC_MODEL_HPP

#include <algorithm>
#include <array>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "interval_linalg.hpp"

namespace ncc
{

class Masses
{
public:
    Masses() = default;
    explicit Masses(std::vector<Interval> m, bool normalized = false) : m_(std::move(m)), normalized_(normalized)
    {
        for (const auto &x : m_) {
            if (!(x.lo() > 0.0)) {
                throw PreconditionError("masses must be positive");
            }
        }
        if (normalized_ && !total().contains(1.0)) {
            throw PreconditionError("normalized masses do not sum to 1");
        }
    }

    // Point masses; with normalize set they are divided by their sum unless
    // they already sum to exactly 1.
    static Masses from_values(const std::vector<double> &v, bool normalize = true)
    {
        std::vector<Interval> m;
        m.reserve(v.size());
        for (double x : v) {
            m.emplace_back(x);
        }
        Masses out(std::move(m), false);
        return normalize ? out.normalize() : out;
    }

    [[nodiscard]] std::size_t size() const noexcept { return m_.size(); }
    const Interval &operator[](std::size_t i) const { return m_[i]; }
    [[nodiscard]] const std::vector<Interval> &values() const noexcept { return m_; }
    [[nodiscard]] bool normalized() const noexcept { return normalized_; }

    [[nodiscard]] Interval total() const
    {
        Interval s(0.0);
        for (const auto &x : m_) {
            s += x;
        }
        return s;
    }

    [[nodiscard]] Masses normalize() const
    {
        const Interval t = total();
        if (t.is_point() && t.lo() == 1.0) {
            return Masses(m_, true);
        }
        std::vector<Interval> m;
        m.reserve(m_.size());
        for (const auto &x : m_) {
            m.push_back(x / t);
        }
        return Masses(std::move(m), true);
    }

    // new[i] = old[order[i]]
    [[nodiscard]] Masses permuted(const std::vector<int> &order) const
    {
        std::vector<Interval> m;
        m.reserve(order.size());
        for (int i : order) {
            m.push_back(m_.at(static_cast<std::size_t>(i)));
        }
        Masses out;
        out.m_ = std::move(m);
        out.normalized_ = normalized_;
        return out;
    }

    // Equal-mass groups: bodies with identical enclosures share an id; ids are
    // numbered by first appearance.
    [[nodiscard]] std::vector<int> groups() const
    {
        std::vector<int> g(m_.size(), -1);
        int next = 0;
        for (std::size_t i = 0; i < m_.size(); ++i) {
            if (g[i] >= 0) {
                continue;
            }
            g[i] = next;
            for (std::size_t j = i + 1; j < m_.size(); ++j) {
                if (g[j] < 0 && m_[j] == m_[i]) {
                    g[j] = next;
                }
            }
            ++next;
        }
        return g;
    }

private:
    std::vector<Interval> m_;
    bool normalized_ = false;
};

struct Configuration
{
    int d = 2;
    std::vector<IntervalVector> q;
    Masses masses;

    [[nodiscard]] std::size_t n() const noexcept { return q.size(); }

    static Configuration from_points(int d, const std::vector<std::vector<double>> &pts, Masses m)
    {
        Configuration c;
        c.d = d;
        c.masses = std::move(m);
        for (const auto &p : pts) {
            if (p.size() != static_cast<std::size_t>(d)) {
                throw PreconditionError("from_points: wrong point dimension");
            }
            IntervalVector v(static_cast<std::size_t>(d));
            for (int k = 0; k < d; ++k) {
                v[static_cast<std::size_t>(k)] = Interval(p[static_cast<std::size_t>(k)]);
            }
            c.q.push_back(v);
        }
        c.validate();
        return c;
    }

    void validate() const
    {
        if (d != 2 && d != 3) {
            throw PreconditionError("dimension must be 2 or 3");
        }
        if (masses.size() != q.size()) {
            throw PreconditionError("mass count does not match body count");
        }
        for (const auto &p : q) {
            if (p.size() != static_cast<std::size_t>(d)) {
                throw PreconditionError("position has wrong dimension");
            }
        }
    }

    [[nodiscard]] std::vector<Interval> flat() const
    {
        std::vector<Interval> out;
        out.reserve(q.size() * static_cast<std::size_t>(d));
        for (const auto &p : q) {
            out.insert(out.end(), p.begin(), p.end());
        }
        return out;
    }
};

namespace detail
{

// Pairwise differences, squared distances and 1/r^3 for flat positions.
struct PairTable
{
    std::size_t n = 0;
    int d = 0;
    std::vector<Interval> diff; // (i*n + j)*d + k : q_i[k] - q_j[k]
    std::vector<Interval> r2;   // i*n + j
    std::vector<Interval> ir3;  // i*n + j, diagonal unused

    [[nodiscard]] const Interval &dif(std::size_t i, std::size_t j, int k) const
    {
        return diff[(i * n + j) * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)];
    }
};

inline PairTable pair_table(const std::vector<Interval> &pos, std::size_t n, int d)
{
    PairTable t;
    t.n = n;
    t.d = d;
    const auto du = static_cast<std::size_t>(d);
    t.diff.assign(n * n * du, Interval(0.0));
    t.r2.assign(n * n, Interval(0.0));
    t.ir3.assign(n * n, Interval(0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            Interval s(0.0);
            for (std::size_t k = 0; k < du; ++k) {
                const Interval v = pos[i * du + k] - pos[j * du + k];
                t.diff[(i * n + j) * du + k] = v;
                t.diff[(j * n + i) * du + k] = -v;
                s += sqr(v);
            }
            t.r2[i * n + j] = s;
            t.r2[j * n + i] = s;
            const Interval ir = inv_r_cubed(s);
            t.ir3[i * n + j] = ir;
            t.ir3[j * n + i] = ir;
        }
    }
    return t;
}

// F_i = q_i - sum_j m_j (q_i - q_j)/r_ij^3 for the first `rows` bodies.
inline std::vector<Interval> eval_F_flat(const std::vector<Interval> &pos, const std::vector<Interval> &m,
                                         std::size_t n, int d, std::size_t rows)
{
    const PairTable t = pair_table(pos, n, d);
    const auto du = static_cast<std::size_t>(d);
    std::vector<Interval> out(rows * du);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t k = 0; k < du; ++k) {
            Interval s(0.0);
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) {
                    s += m[j] * t.dif(i, j, static_cast<int>(k)) * t.ir3[i * n + j];
                }
            }
            out[i * du + k] = pos[i * du + k] - s;
        }
    }
    return out;
}

// q_n = -(1/m_n) sum_{i<n} m_i q_i, appended to the reduced positions.
inline std::vector<Interval> full_from_reduced(const std::vector<Interval> &pos_red, const std::vector<Interval> &m,
                                               int d)
{
    const auto du = static_cast<std::size_t>(d);
    const std::size_t nr = pos_red.size() / du;
    std::vector<Interval> full = pos_red;
    for (std::size_t k = 0; k < du; ++k) {
        Interval s(0.0);
        for (std::size_t i = 0; i < nr; ++i) {
            s += m[i] * pos_red[i * du + k];
        }
        full.push_back(-(s / m[nr]));
    }
    return full;
}

// Symmetric kernel K(v) = I/r^3 - 3 v v^T / r^5 per pair, stored d*d per pair.
inline std::vector<Interval> kernel_table(const PairTable &t)
{
    const std::size_t n = t.n;
    const auto du = static_cast<std::size_t>(t.d);
    std::vector<Interval> ker(n * n * du * du, Interval(0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const Interval ir3 = t.ir3[i * n + j];
            const Interval ir5 = ir3 / t.r2[i * n + j];
            for (std::size_t a = 0; a < du; ++a) {
                for (std::size_t b = a; b < du; ++b) {
                    Interval v = Interval(-3.0) * ir5 * t.dif(i, j, static_cast<int>(a))
                                 * t.dif(i, j, static_cast<int>(b));
                    if (a == b) {
                        v += ir3;
                    }
                    const std::size_t base_ij = (i * n + j) * du * du;
                    const std::size_t base_ji = (j * n + i) * du * du;
                    ker[base_ij + a * du + b] = v;
                    ker[base_ij + b * du + a] = v;
                    ker[base_ji + a * du + b] = v;
                    ker[base_ji + b * du + a] = v;
                }
            }
        }
    }
    return ker;
}

inline IntervalMatrix jacobian_F_flat(const std::vector<Interval> &pos, const std::vector<Interval> &m,
                                      std::size_t n, int d)
{
    const PairTable t = pair_table(pos, n, d);
    const std::vector<Interval> ker = kernel_table(t);
    const auto du = static_cast<std::size_t>(d);
    IntervalMatrix jm(n * du, n * du);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) {
                continue;
            }
            const std::size_t base = (i * n + j) * du * du;
            for (std::size_t a = 0; a < du; ++a) {
                for (std::size_t b = 0; b < du; ++b) {
                    const Interval v = m[j] * ker[base + a * du + b];
                    jm(i * du + a, j * du + b) = v;
                    jm(i * du + a, i * du + b) -= v;
                }
            }
        }
        for (std::size_t a = 0; a < du; ++a) {
            jm(i * du + a, i * du + a) += Interval(1.0);
        }
    }
    return jm;
}

// dF^red_i/dq_j = m_j K_ij - m_j K_in (j != i), and
// dF^red_i/dq_i = I - sum_{k != i} m_k K_ik - m_i K_in, for i, j < n.
inline IntervalMatrix jacobian_F_red_flat(const std::vector<Interval> &pos_red, const std::vector<Interval> &m,
                                          int d)
{
    const auto du = static_cast<std::size_t>(d);
    const std::vector<Interval> pos = full_from_reduced(pos_red, m, d);
    const std::size_t n = pos.size() / du;
    const std::size_t nr = n - 1;
    const PairTable t = pair_table(pos, n, d);
    const std::vector<Interval> ker = kernel_table(t);
    IntervalMatrix jm(nr * du, nr * du);
    auto K = [&](std::size_t i, std::size_t j, std::size_t a, std::size_t b) -> const Interval & {
        return ker[(i * n + j) * du * du + a * du + b];
    };
    for (std::size_t i = 0; i < nr; ++i) {
        for (std::size_t a = 0; a < du; ++a) {
            for (std::size_t b = 0; b < du; ++b) {
                Interval diag = (a == b) ? Interval(1.0) : Interval(0.0);
                for (std::size_t k = 0; k < n; ++k) {
                    if (k != i) {
                        diag -= m[k] * K(i, k, a, b);
                    }
                }
                diag -= m[i] * K(i, nr, a, b);
                jm(i * du + a, i * du + b) = diag;
                for (std::size_t j = 0; j < nr; ++j) {
                    if (j != i) {
                        jm(i * du + a, j * du + b) = m[j] * (K(i, j, a, b) - K(i, nr, a, b));
                    }
                }
            }
        }
    }
    return jm;
}

// a ^ b: scalar in 2D, (yz, zx, xy) components in 3D.
inline std::vector<Interval> wedge(const Interval *a, const Interval *b, int d)
{
    if (d == 2) {
        return {a[0] * b[1] - a[1] * b[0]};
    }
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

} // namespace detail

// ---- full system ----

struct ForceReport
{
    std::vector<IntervalVector> f;
    IntervalVector sum;       // sum_i f_i
    IntervalVector wedge_sum; // sum_i f_i ^ q_i
};

inline ForceReport eval_f(const Configuration &cfg)
{
    cfg.validate();
    const std::size_t n = cfg.n();
    const int d = cfg.d;
    const auto du = static_cast<std::size_t>(d);
    const std::vector<Interval> pos = cfg.flat();
    const detail::PairTable t = detail::pair_table(pos, n, d);
    ForceReport r;
    r.sum = IntervalVector(du);
    r.wedge_sum = IntervalVector(d == 2 ? 1 : 3);
    for (std::size_t i = 0; i < n; ++i) {
        IntervalVector fi(du);
        for (std::size_t k = 0; k < du; ++k) {
            Interval s(0.0);
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) {
                    s += cfg.masses[i] * cfg.masses[j] * t.dif(i, j, static_cast<int>(k)) * t.ir3[i * n + j];
                }
            }
            fi[k] = s;
            r.sum[k] += s;
        }
        const auto w = detail::wedge(&fi.values()[0], &pos[i * du], d);
        for (std::size_t k = 0; k < w.size(); ++k) {
            r.wedge_sum[k] += w[k];
        }
        r.f.push_back(std::move(fi));
    }
    return r;
}

inline IntervalVector eval_F(const Configuration &cfg)
{
    cfg.validate();
    return IntervalVector(detail::eval_F_flat(cfg.flat(), cfg.masses.values(), cfg.n(), cfg.d, cfg.n()));
}

// R_i = m_i F_i
inline IntervalVector eval_R(const Configuration &cfg)
{
    IntervalVector f = eval_F(cfg);
    const auto du = static_cast<std::size_t>(cfg.d);
    for (std::size_t i = 0; i < f.size(); ++i) {
        f[i] = cfg.masses[i / du] * f[i];
    }
    return f;
}

inline IntervalMatrix jacobian_F(const Configuration &cfg)
{
    cfg.validate();
    return detail::jacobian_F_flat(cfg.flat(), cfg.masses.values(), cfg.n(), cfg.d);
}

// ---- center-of-mass reduction ----

namespace detail
{
inline std::vector<Interval> flatten(const std::vector<IntervalVector> &pts, int d)
{
    std::vector<Interval> out;
    for (const auto &p : pts) {
        if (p.size() != static_cast<std::size_t>(d)) {
            throw PreconditionError("position has wrong dimension");
        }
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

inline int dim_of(const std::vector<IntervalVector> &pts)
{
    if (pts.empty()) {
        throw PreconditionError("no positions");
    }
    return static_cast<int>(pts.front().size());
}

inline void check_reduced(const std::vector<IntervalVector> &pts, const Masses &masses)
{
    if (masses.size() != pts.size() + 1) {
        throw PreconditionError("reduced positions need n-1 points for n masses");
    }
}
} // namespace detail

// Position of the eliminated (last) body from the n-1 others.
inline IntervalVector qn_from_com(const std::vector<IntervalVector> &reduced, const Masses &masses)
{
    detail::check_reduced(reduced, masses);
    const int d = detail::dim_of(reduced);
    const auto full = detail::full_from_reduced(detail::flatten(reduced, d), masses.values(), d);
    return IntervalVector(std::vector<Interval>(full.end() - d, full.end()));
}

inline Configuration reconstruct(const std::vector<IntervalVector> &reduced, const Masses &masses)
{
    Configuration c;
    c.d = detail::dim_of(reduced);
    c.masses = masses;
    c.q = reduced;
    c.q.push_back(qn_from_com(reduced, masses));
    c.validate();
    return c;
}

inline IntervalVector eval_F_red(const std::vector<IntervalVector> &reduced, const Masses &masses)
{
    detail::check_reduced(reduced, masses);
    const int d = detail::dim_of(reduced);
    const auto full = detail::full_from_reduced(detail::flatten(reduced, d), masses.values(), d);
    return IntervalVector(detail::eval_F_flat(full, masses.values(), masses.size(), d, masses.size() - 1));
}

inline IntervalVector eval_R_red(const std::vector<IntervalVector> &reduced, const Masses &masses)
{
    IntervalVector f = eval_F_red(reduced, masses);
    const auto du = static_cast<std::size_t>(detail::dim_of(reduced));
    for (std::size_t i = 0; i < f.size(); ++i) {
        f[i] = masses[i / du] * f[i];
    }
    return f;
}

// sum_{i<n} (q_i - q_n) ^ R^red_i, which vanishes for arbitrary positions.
inline IntervalVector reduced_angular_momentum(const std::vector<IntervalVector> &reduced, const Masses &masses)
{
    const int d = detail::dim_of(reduced);
    const auto du = static_cast<std::size_t>(d);
    const IntervalVector rr = eval_R_red(reduced, masses);
    const IntervalVector qn = qn_from_com(reduced, masses);
    IntervalVector out(d == 2 ? 1 : 3);
    for (std::size_t i = 0; i < reduced.size(); ++i) {
        std::array<Interval, 3> rel{};
        for (std::size_t k = 0; k < du; ++k) {
            rel[k] = reduced[i][k] - qn[k];
        }
        const auto w = detail::wedge(rel.data(), &rr.values()[i * du], d);
        for (std::size_t k = 0; k < w.size(); ++k) {
            out[k] += w[k];
        }
    }
    return out;
}

inline IntervalMatrix jacobian_F_red(const std::vector<IntervalVector> &reduced, const Masses &masses)
{
    detail::check_reduced(reduced, masses);
    const int d = detail::dim_of(reduced);
    return detail::jacobian_F_red_flat(detail::flatten(reduced, d), masses.values(), d);
}

// ---- reduced system ----

// Slot layout: slot n-1 is the eliminated body, slot n-2 sits on the positive
// OX axis, and in 3D slot n-3 lies in the OXY plane. perm maps slot -> body.
class ReducedBox
{
public:
    ReducedBox() = default;
    ReducedBox(int d, Masses masses, std::vector<int> perm, IntervalVector free)
        : d_(d), masses_(std::move(masses)), perm_(std::move(perm)), free_(std::move(free))
    {
        const std::size_t n = masses_.size();
        if (d_ != 2 && d_ != 3) {
            throw PreconditionError("ReducedBox: dimension must be 2 or 3");
        }
        if (n < static_cast<std::size_t>(d_)) {
            throw PreconditionError("ReducedBox: too few bodies");
        }
        if (perm_.size() != n) {
            throw PreconditionError("ReducedBox: permutation size mismatch");
        }
        std::vector<int> sorted = perm_;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < n; ++i) {
            if (sorted[i] != static_cast<int>(i)) {
                throw PreconditionError("ReducedBox: perm is not a permutation");
            }
        }
        if (free_.size() != free_dim(d_, n)) {
            throw PreconditionError("ReducedBox: free vector has wrong dimension");
        }
        slot_masses_ = masses_.permuted(perm_).values();
    }

    static std::size_t free_dim(int d, std::size_t n) { return d == 2 ? 2 * n - 3 : 3 * n - 6; }

    // Index of coordinate k of a slot in the free vector, -1 if pinned to zero
    // (or if the slot is the eliminated one).
    static int free_index(int d, std::size_t n, std::size_t slot, int k)
    {
        if (slot + 1 >= n) {
            return -1;
        }
        if (d == 2) {
            if (slot + 2 < n) {
                return static_cast<int>(2 * slot) + k;
            }
            return k == 0 ? static_cast<int>(2 * (n - 2)) : -1;
        }
        if (slot + 3 < n) {
            return static_cast<int>(3 * slot) + k;
        }
        if (slot + 3 == n) {
            return k < 2 ? static_cast<int>(3 * (n - 3)) + k : -1;
        }
        return k == 0 ? static_cast<int>(3 * (n - 3) + 2) : -1;
    }

    [[nodiscard]] int d() const noexcept { return d_; }
    [[nodiscard]] std::size_t n() const noexcept { return masses_.size(); }
    [[nodiscard]] const Masses &masses() const noexcept { return masses_; }
    [[nodiscard]] const std::vector<int> &perm() const noexcept { return perm_; }
    [[nodiscard]] const IntervalVector &free() const noexcept { return free_; }
    [[nodiscard]] const std::vector<Interval> &slot_masses() const noexcept { return slot_masses_; }

    [[nodiscard]] ReducedBox with_free(IntervalVector f) const
    {
        ReducedBox b = *this;
        if (f.size() != free_.size()) {
            throw PreconditionError("with_free: dimension mismatch");
        }
        b.free_ = std::move(f);
        return b;
    }

    // Flat (n-1)*d positions of the non-eliminated slots with pinned zeros.
    [[nodiscard]] std::vector<Interval> slot_positions(const IntervalVector &free) const
    {
        const std::size_t n = this->n();
        const auto du = static_cast<std::size_t>(d_);
        std::vector<Interval> pos((n - 1) * du, Interval(0.0));
        for (std::size_t s = 0; s + 1 < n; ++s) {
            for (int k = 0; k < d_; ++k) {
                const int fi = free_index(d_, n, s, k);
                if (fi >= 0) {
                    pos[s * du + static_cast<std::size_t>(k)] = free[static_cast<std::size_t>(fi)];
                }
            }
        }
        return pos;
    }
    [[nodiscard]] std::vector<Interval> slot_positions() const { return slot_positions(free_); }

    // Flat n*d positions in slot order including the eliminated body.
    [[nodiscard]] std::vector<Interval> full_slot_positions(const IntervalVector &free) const
    {
        return detail::full_from_reduced(slot_positions(free), slot_masses_, d_);
    }
    [[nodiscard]] std::vector<Interval> full_slot_positions() const { return full_slot_positions(free_); }

    // Full configuration enclosure in body order.
    [[nodiscard]] Configuration configuration() const
    {
        const auto pos = full_slot_positions();
        const auto du = static_cast<std::size_t>(d_);
        Configuration c;
        c.d = d_;
        c.masses = masses_;
        c.q.assign(n(), IntervalVector(du));
        for (std::size_t s = 0; s < n(); ++s) {
            IntervalVector p(du);
            for (std::size_t k = 0; k < du; ++k) {
                p[k] = pos[s * du + k];
            }
            c.q[static_cast<std::size_t>(perm_[s])] = p;
        }
        return c;
    }

    // Reduced positions (slots 0..n-2) and slot-ordered masses, as accepted by
    // eval_F_red / jacobian_F_red.
    [[nodiscard]] std::vector<IntervalVector> reduced_points() const
    {
        const auto pos = slot_positions();
        const auto du = static_cast<std::size_t>(d_);
        std::vector<IntervalVector> out;
        for (std::size_t s = 0; s + 1 < n(); ++s) {
            out.emplace_back(std::vector<Interval>(pos.begin() + static_cast<long>(s * du),
                                                   pos.begin() + static_cast<long>((s + 1) * du)));
        }
        return out;
    }
    [[nodiscard]] Masses slot_mass_object() const { return Masses(slot_masses_, masses_.normalized()); }

private:
    int d_ = 2;
    Masses masses_;
    std::vector<int> perm_;
    IntervalVector free_;
    std::vector<Interval> slot_masses_;
};

inline IntervalVector eval_RS(const ReducedBox &box, const IntervalVector &free)
{
    const std::size_t n = box.n();
    const int d = box.d();
    const auto full = box.full_slot_positions(free);
    const auto f = detail::eval_F_flat(full, box.slot_masses(), n, d, n - 1);
    IntervalVector out(free.size());
    const auto du = static_cast<std::size_t>(d);
    for (std::size_t s = 0; s + 1 < n; ++s) {
        for (int k = 0; k < d; ++k) {
            const int fi = ReducedBox::free_index(d, n, s, k);
            if (fi >= 0) {
                out[static_cast<std::size_t>(fi)] = f[s * du + static_cast<std::size_t>(k)];
            }
        }
    }
    return out;
}

inline IntervalVector eval_RS(const ReducedBox &box) { return eval_RS(box, box.free()); }

inline IntervalMatrix jacobian_RS(const ReducedBox &box, const IntervalVector &free)
{
    const std::size_t n = box.n();
    const int d = box.d();
    const auto du = static_cast<std::size_t>(d);
    const IntervalMatrix jr = detail::jacobian_F_red_flat(box.slot_positions(free), box.slot_masses(), d);
    std::vector<std::pair<std::size_t, std::size_t>> map; // free index -> flat reduced index
    map.resize(free.size());
    for (std::size_t s = 0; s + 1 < n; ++s) {
        for (int k = 0; k < d; ++k) {
            const int fi = ReducedBox::free_index(d, n, s, k);
            if (fi >= 0) {
                map[static_cast<std::size_t>(fi)] = {static_cast<std::size_t>(fi), s * du + static_cast<std::size_t>(k)};
            }
        }
    }
    IntervalMatrix out(free.size(), free.size());
    for (std::size_t r = 0; r < free.size(); ++r) {
        for (std::size_t c = 0; c < free.size(); ++c) {
            out(r, c) = jr(map[r].second, map[c].second);
        }
    }
    return out;
}

inline IntervalMatrix jacobian_RS(const ReducedBox &box) { return jacobian_RS(box, box.free()); }

// ---- collinear blocks ----

struct CollinearBlocks
{
    IntervalMatrix A, M, A_red, M_red;
};

inline bool is_on_ox(const Configuration &cfg)
{
    for (const auto &p : cfg.q) {
        for (std::size_t k = 1; k < p.size(); ++k) {
            if (!(p[k].lo() == 0.0 && p[k].hi() == 0.0)) {
                return false;
            }
        }
    }
    return true;
}

// Collinear configuration on OX; the last body is the eliminated one for the
// reduced blocks. Verifies that jacobian_F (scaled to R-form) matches
// diag(M+2A, M-A[, M-A]) by interval overlap.
inline CollinearBlocks collinear_blocks(const Configuration &cfg)
{
    cfg.validate();
    if (!is_on_ox(cfg)) {
        throw PreconditionError("collinear_blocks: configuration not on the OX axis");
    }
    const std::size_t n = cfg.n();
    const auto &m = cfg.masses;
    CollinearBlocks b{IntervalMatrix(n, n), IntervalMatrix(n, n), IntervalMatrix(n - 1, n - 1),
                      IntervalMatrix(n - 1, n - 1)};
    std::vector<Interval> ir3(n * n, Interval(0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const Interval dx = cfg.q[i][0] - cfg.q[j][0];
            if (dx.contains_zero()) {
                throw PreconditionError("collinear_blocks: coincident bodies");
            }
            const Interval v = inv_r_cubed(sqr(dx));
            ir3[i * n + j] = v;
            ir3[j * n + i] = v;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        b.M(i, i) = m[i];
        Interval diag(0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                const Interval v = m[i] * m[j] * ir3[i * n + j];
                b.A(i, j) = -v;
                diag += v;
            }
        }
        b.A(i, i) = diag;
    }
    const std::size_t last = n - 1;
    for (std::size_t i = 0; i < last; ++i) {
        b.M_red(i, i) = m[i];
        Interval diag = m[i] * (m[i] + m[last]) * ir3[i * n + last];
        for (std::size_t j = 0; j < last; ++j) {
            if (j != i) {
                diag += m[i] * m[j] * ir3[i * n + j];
                b.A_red(i, j) = m[i] * m[j] * (ir3[i * n + last] - ir3[i * n + j]);
            }
        }
        b.A_red(i, i) = diag;
    }

    const IntervalMatrix jf = jacobian_F(cfg);
    const auto du = static_cast<std::size_t>(cfg.d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t a = 0; a < du; ++a) {
                for (std::size_t c = 0; c < du; ++c) {
                    const Interval dr = m[i] * jf(i * du + a, j * du + c);
                    Interval expect(0.0);
                    if (a == c) {
                        const Interval mm = (i == j) ? m[i] : Interval(0.0);
                        expect = a == 0 ? mm + Interval(2.0) * b.A(i, j) : mm - b.A(i, j);
                    }
                    if (!dr.intersects(expect)) {
                        throw std::logic_error("collinear_blocks: Jacobian does not match block form");
                    }
                }
            }
        }
    }
    return b;
}

// Enclosure of det(A) for every point matrix A in a. Elimination with
// largest-mignitude pivots; if no pivot excludes zero the remainder is
// bounded by Hadamard's inequality.
inline Interval det_interval(IntervalMatrix a)
{
    const std::size_t n = a.rows();
    if (n == 0) {
        return Interval(1.0);
    }
    Interval det(1.0);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t r = k + 1; r < n; ++r) {
            if (a(r, k).mig() > a(piv, k).mig()) {
                piv = r;
            }
        }
        if (a(piv, k).contains_zero()) {
            double bound = 1.0;
            for (std::size_t r = k; r < n; ++r) {
                double row = 0.0;
                for (std::size_t c = k; c < n; ++c) {
                    row = detail::add_up(row, detail::mul_up(a(r, c).mag(), a(r, c).mag()));
                }
                bound = detail::mul_up(bound, detail::sqrt_up(row));
            }
            return det * Interval(-bound, bound);
        }
        if (piv != k) {
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(a(k, c), a(piv, c));
            }
            det = -det;
        }
        det *= a(k, k);
        for (std::size_t r = k + 1; r < n; ++r) {
            const Interval f = a(r, k) / a(k, k);
            for (std::size_t c = k + 1; c < n; ++c) {
                a(r, c) -= f * a(k, c);
            }
        }
    }
    return det;
}

// ---- ranks and identities ----

inline int numeric_rank(const Eigen::MatrixXd &mtx, double tol = 1e-8)
{
    if (mtx.size() == 0) {
        return 0;
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(mtx);
    const auto &s = svd.singularValues();
    const double smax = s.size() > 0 ? s[0] : 0.0;
    if (smax == 0.0) {
        return 0;
    }
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s[i] > tol * smax) {
            ++r;
        }
    }
    return r;
}

struct IdentityCheck
{
    std::string name;
    IntervalVector value;
    bool contains_zero = false;
    double max_width = 0.0;
};

struct IdentityReport
{
    std::vector<IdentityCheck> checks;
    [[nodiscard]] bool all_contain_zero() const
    {
        return std::all_of(checks.begin(), checks.end(), [](const IdentityCheck &c) { return c.contains_zero; });
    }
};

// The row and column combinations of DF^red that vanish at an nCC: rows
// sum_i m_i((a_i-a_n) DF_{i,b} - (b_i-b_n) DF_{i,a}) and columns
// sum_i(-dF/da_i b_i + dF/db_i a_i) for the coordinate planes (a,b).
inline IdentityReport check_row_col_identities(const std::vector<IntervalVector> &reduced, const Masses &masses)
{
    const int d = detail::dim_of(reduced);
    const auto du = static_cast<std::size_t>(d);
    const std::size_t nr = reduced.size();
    const IntervalMatrix jm = jacobian_F_red(reduced, masses);
    const IntervalVector qn = qn_from_com(reduced, masses);
    const std::size_t dim = nr * du;
    const std::vector<std::array<std::size_t, 2>> planes =
        d == 2 ? std::vector<std::array<std::size_t, 2>>{{0, 1}}
               : std::vector<std::array<std::size_t, 2>>{{0, 1}, {1, 2}, {2, 0}};
    const char *axis = "xyz";
    IdentityReport rep;
    auto finish = [](IdentityCheck &c) {
        c.contains_zero = std::all_of(c.value.begin(), c.value.end(), [](const Interval &v) { return v.contains_zero(); });
        c.max_width = c.value.max_width();
    };
    for (const auto &pl : planes) {
        const std::size_t a = pl[0], b = pl[1];
        IdentityCheck row{std::string("row ") + axis[a] + axis[b], IntervalVector(dim), false, 0.0};
        for (std::size_t col = 0; col < dim; ++col) {
            Interval s(0.0);
            for (std::size_t i = 0; i < nr; ++i) {
                const Interval da = reduced[i][a] - qn[a];
                const Interval db = reduced[i][b] - qn[b];
                s += masses[i] * (da * jm(i * du + b, col) - db * jm(i * du + a, col));
            }
            row.value[col] = s;
        }
        finish(row);
        rep.checks.push_back(std::move(row));
    }
    for (const auto &pl : planes) {
        const std::size_t a = pl[0], b = pl[1];
        IdentityCheck col{std::string("column ") + axis[a] + axis[b], IntervalVector(dim), false, 0.0};
        for (std::size_t r = 0; r < dim; ++r) {
            Interval s(0.0);
            for (std::size_t i = 0; i < nr; ++i) {
                s += jm(r, i * du + b) * reduced[i][a] - jm(r, i * du + a) * reduced[i][b];
            }
            col.value[r] = s;
        }
        finish(col);
        rep.checks.push_back(std::move(col));
    }
    return rep;
}

} // namespace ncc

#endif
