#ifndef NCC_TESTS_POLY_SYSTEMS_HPP
#define NCC_TESTS_POLY_SYSTEMS_HPP

#include <cmath>
#include <random>
#include <vector>

#include "ncc/krawczyk.hpp"

namespace poly
{

using ncc::Interval;
using ncc::IntervalMatrix;
using ncc::IntervalVector;
using ld = long double;

// f(y) = A g(phi(y)) with g_i(x) = prod_k (x_i - r_ik) and the triangular
// polynomial map phi(y) = (y1, y2 + c1 y1^2, y3 + c2 y1 y2). phi and A are
// invertible, so the zeros are exactly phi^-1 of the grid of r's.
struct System
{
    std::size_t d = 1;
    std::vector<std::vector<double>> r;
    std::vector<std::vector<double>> a;
    double c1 = 0, c2 = 0;

    template <class T>
    std::vector<T> phi(const std::vector<T> &y) const
    {
        std::vector<T> x = y;
        if (d >= 2) {
            x[1] = y[1] + T(c1) * y[0] * y[0];
        }
        if (d >= 3) {
            x[2] = y[2] + T(c2) * y[0] * y[1];
        }
        return x;
    }

    IntervalVector f(const IntervalVector &y) const
    {
        const std::vector<Interval> x = phi(std::vector<Interval>(y.begin(), y.end()));
        std::vector<Interval> g(d, Interval(1.0));
        for (std::size_t i = 0; i < d; ++i) {
            for (double root : r[i]) {
                g[i] = g[i] * (x[i] - Interval(root));
            }
        }
        IntervalVector out(d);
        for (std::size_t i = 0; i < d; ++i) {
            out[i] = Interval(0.0);
            for (std::size_t j = 0; j < d; ++j) {
                out[i] += Interval(a[i][j]) * g[j];
            }
        }
        return out;
    }

    IntervalMatrix jac(const IntervalVector &y) const
    {
        const std::vector<Interval> x = phi(std::vector<Interval>(y.begin(), y.end()));
        std::vector<Interval> dg(d, Interval(0.0));
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t k = 0; k < r[i].size(); ++k) {
                Interval p(1.0);
                for (std::size_t l = 0; l < r[i].size(); ++l) {
                    if (l != k) {
                        p = p * (x[i] - Interval(r[i][l]));
                    }
                }
                dg[i] += p;
            }
        }
        // D phi
        std::vector<std::vector<Interval>> dp(d, std::vector<Interval>(d, Interval(0.0)));
        for (std::size_t i = 0; i < d; ++i) {
            dp[i][i] = Interval(1.0);
        }
        if (d >= 2) {
            dp[1][0] = Interval(2 * c1) * y[0];
        }
        if (d >= 3) {
            dp[2][0] = Interval(c2) * y[1];
            dp[2][1] = Interval(c2) * y[0];
        }
        IntervalMatrix m(d, d);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                Interval s(0.0);
                for (std::size_t k = 0; k < d; ++k) {
                    s += Interval(a[i][k]) * dg[k] * dp[k][j];
                }
                m(i, j) = s;
            }
        }
        return m;
    }

    std::vector<std::vector<ld>> roots() const
    {
        std::vector<std::vector<ld>> out{{}};
        for (std::size_t i = 0; i < d; ++i) {
            std::vector<std::vector<ld>> next;
            for (const auto &p : out) {
                for (double v : r[i]) {
                    auto q = p;
                    q.push_back(v);
                    next.push_back(q);
                }
            }
            out = next;
        }
        for (auto &x : out) {
            // phi^-1
            if (d >= 2) {
                x[1] -= static_cast<ld>(c1) * x[0] * x[0];
            }
            if (d >= 3) {
                x[2] -= static_cast<ld>(c2) * x[0] * x[1];
            }
        }
        return out;
    }
};

inline System random_system(std::mt19937_64 &rng, std::size_t d)
{
    std::uniform_real_distribution<double> u(-1.5, 1.5), coef(-1, 1);
    std::uniform_int_distribution<int> deg(1, 3);
    System s;
    s.d = d;
    s.r.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        const int k = deg(rng);
        while (static_cast<int>(s.r[i].size()) < k) {
            const double v = u(rng);
            bool far = true;
            for (double w : s.r[i]) {
                far = far && std::abs(v - w) > 0.2;
            }
            if (far) {
                s.r[i].push_back(v);
            }
        }
    }
    // diagonally dominant mixing keeps A well conditioned
    s.a.assign(d, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            s.a[i][j] = i == j ? 2 + coef(rng) : 0.5 * coef(rng);
        }
    }
    s.c1 = 0.5 * coef(rng);
    s.c2 = 0.5 * coef(rng);
    return s;
}

// How many oracle roots lie in the box; -1 when one sits too close to the
// boundary to tell.
inline int roots_inside(const std::vector<std::vector<ld>> &roots, const IntervalVector &box)
{
    int n = 0;
    for (const auto &p : roots) {
        bool in = true;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const ld lo = box[i].lo(), hi = box[i].hi();
            if (std::abs(p[i] - lo) < 1e-12L || std::abs(p[i] - hi) < 1e-12L) {
                return -1;
            }
            in = in && lo < p[i] && p[i] < hi;
        }
        n += in ? 1 : 0;
    }
    return n;
}


struct Tally
{
    int certified = 0, excluded = 0, undecided = 0, violations = 0;
};

// Random boxes (half of them near a root) against every system; counts
// verdicts and verdicts contradicting the known roots.
inline Tally run_oracle(int systems, int boxes, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> c(-2, 2), unit(0, 1);
    Tally out;
    for (int sys = 0; sys < systems; ++sys) {
        const std::size_t d = 1 + static_cast<std::size_t>(sys % 3);
        const System s = random_system(rng, d);
        const auto roots = s.roots();
        auto f = [&](const IntervalVector &x) { return s.f(x); };
        auto j = [&](const IntervalVector &x) { return s.jac(x); };
        for (int t = 0; t < boxes; ++t) {
            IntervalVector box(d);
            const bool near = t % 2 == 0;
            const auto &root = roots[static_cast<std::size_t>(t / 2) % roots.size()];
            const double rad = near ? std::pow(10.0, -1 - 4 * unit(rng)) : 0.5 * unit(rng) + 1e-3;
            for (std::size_t i = 0; i < d; ++i) {
                const double mid = near ? static_cast<double>(root[i]) + rad * (unit(rng) - 0.5) : c(rng);
                box[i] = Interval(mid - rad * (0.5 + unit(rng)), mid + rad * (0.5 + unit(rng)));
            }
            const int inside = roots_inside(roots, box);
            if (inside < 0) {
                continue;
            }
            const auto k = ncc::krawczyk(box, f, j);
            if (k.verdict == ncc::Verdict::Certified) {
                ++out.certified;
                bool ok = inside == 1;
                for (const auto &p : roots) {
                    bool in = true;
                    for (std::size_t i = 0; i < d; ++i) {
                        in = in && static_cast<ld>(box[i].lo()) < p[i] && p[i] < static_cast<ld>(box[i].hi());
                    }
                    // the zero lies in K(X); slack covers the oracle's rounding
                    for (std::size_t i = 0; in && i < d; ++i) {
                        ok = ok && p[i] >= static_cast<ld>(k.image[i].lo()) - 1e-14L
                             && p[i] <= static_cast<ld>(k.image[i].hi()) + 1e-14L;
                    }
                }
                out.violations += ok ? 0 : 1;
            } else if (k.verdict == ncc::Verdict::Excluded) {
                ++out.excluded;
                out.violations += inside == 0 ? 0 : 1;
            } else {
                ++out.undecided;
            }
        }
    }
    return out;
}

} // namespace poly

#endif
