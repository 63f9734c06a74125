#ifndef NCC_KRAWCZYK_HPP
#define NCC_KRAWCZYK_HPP

#include <optional>
#include <string>

#include "interval_linalg.hpp"

namespace ncc
{

enum class Verdict
{
    Certified,
    Excluded,
    Undecided
};

inline const char *to_string(Verdict v)
{
    switch (v) {
    case Verdict::Certified:
        return "certified";
    case Verdict::Excluded:
        return "excluded";
    case Verdict::Undecided:
        return "undecided";
    }
    return "?";
}

struct KrawczykResult
{
    Verdict verdict = Verdict::Undecided;
    IntervalVector image; // K(X); empty when the operator could not be formed
    std::string reason;
};

// K(X) = m - C f(m) + (I - C J(X)) (X - m), with C the inverse of mid J(X).
// f maps a box to an enclosure of the function over it (called on the
// midpoint as a point box), jac maps a box to an enclosure of the Jacobian.
// K inside int(X) proves a unique zero in X; K disjoint from X proves none.
template <class F, class J>
KrawczykResult krawczyk(const IntervalVector &x, F &&f, J &&jac)
{
    KrawczykResult out;
    const std::size_t n = x.size();
    try {
        const Eigen::VectorXd mp = x.mid();
        const IntervalVector m = IntervalVector::from_point(mp);
        const IntervalVector fm = f(m);
        const IntervalMatrix jx = jac(x);
        const Eigen::MatrixXd c = point_inverse(jx.mid());
        const IntervalVector cfm = mul(c, fm);
        IntervalMatrix r = mul(c, jx);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                r(i, j) = (i == j ? Interval(1.0) : Interval(0.0)) - r(i, j);
            }
        }
        IntervalVector dx(n);
        for (std::size_t i = 0; i < n; ++i) {
            dx[i] = x[i] - m[i];
        }
        const IntervalVector rdx = mul(r, dx);
        IntervalVector k(n);
        for (std::size_t i = 0; i < n; ++i) {
            k[i] = m[i] - cfm[i] + rdx[i];
        }
        out.image = k;
        if (x.contains_interior(k)) {
            out.verdict = Verdict::Certified;
        } else if (!x.intersects(k)) {
            out.verdict = Verdict::Excluded;
        } else {
            out.verdict = Verdict::Undecided;
            out.reason = "no contraction";
        }
    } catch (const SingularMidpoint &e) {
        out.verdict = Verdict::Undecided;
        out.reason = e.what();
    } catch (const CollisionPossible &e) {
        out.verdict = Verdict::Undecided;
        out.reason = e.what();
    } catch (const DomainError &e) {
        out.verdict = Verdict::Undecided;
        out.reason = e.what();
    }
    return out;
}

// Newton iteration on midpoints of the enclosures; returns nullopt when it
// fails to converge.
template <class F, class J>
std::optional<Eigen::VectorXd> point_newton(Eigen::VectorXd x, F &&f, J &&jac, int max_iter = 30,
                                            double tol = 1e-15)
{
    try {
        for (int it = 0; it < max_iter; ++it) {
            const IntervalVector p = IntervalVector::from_point(x);
            const Eigen::VectorXd fx = f(p).mid();
            const Eigen::MatrixXd jx = jac(p).mid();
            const Eigen::VectorXd step = jx.partialPivLu().solve(fx);
            if (!step.allFinite()) {
                return std::nullopt;
            }
            x -= step;
            if (step.lpNorm<Eigen::Infinity>() <= tol * std::max(1.0, x.lpNorm<Eigen::Infinity>())) {
                return x;
            }
        }
    } catch (const std::exception &) {
        return std::nullopt;
    }
    return x;
}

struct Refinement
{
    IntervalVector box;   // certified box, subset of the original
    IntervalVector image; // its Krawczyk image
    Eigen::VectorXd point;
};

// Shrinks a certified box around its unique zero: polish the midpoint with
// Newton, then certify the smallest box of the radius ladder that works.
// Every tried box is intersected with the original certified box, so the
// zero it certifies is the same one.
template <class F, class J>
std::optional<Refinement> refine(const IntervalVector &certified, F &&f, J &&jac, double tol = 1e-12)
{
    const std::size_t n = certified.size();
    auto polished = point_newton(certified.mid(), f, jac);
    if (!polished || !certified.contains_point(*polished)) {
        return std::nullopt;
    }
    const double scale = std::max(1.0, polished->template lpNorm<Eigen::Infinity>());
    for (double r = tol * scale; r <= certified.max_width(); r *= 8.0) {
        IntervalVector b(n);
        bool ok = true;
        for (std::size_t i = 0; i < n; ++i) {
            const double c = (*polished)[static_cast<Eigen::Index>(i)];
            const Interval cand(c - r, c + r);
            if (!cand.intersects(certified[i])) {
                ok = false;
                break;
            }
            b[i] = intersect(cand, certified[i]);
        }
        if (!ok) {
            continue;
        }
        const KrawczykResult k = krawczyk(b, f, jac);
        if (k.verdict == Verdict::Certified) {
            return Refinement{b, k.image, *polished};
        }
    }
    return std::nullopt;
}

} // namespace ncc

#endif
