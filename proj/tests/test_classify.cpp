#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "ncc/classify.hpp"
#include "oracles.hpp"

using ncc::Configuration;
using ncc::Group;
using ncc::Interval;
using ncc::Masses;
using ncc::Shape;
using oracle::ld;
using oracle::Pts;

namespace
{

ncc::CertifiedSolution certify_at(const Pts &q, const Masses &m, const std::vector<int> &perm)
{
    const auto box = oracle::make_box(oracle::place(q, perm), m, perm, 1e-10);
    return ncc::finalize_certified(box);
}

Pts polygon(std::size_t n, ld r, ld phase = 0)
{
    Pts q;
    for (std::size_t i = 0; i < n; ++i) {
        const ld t = phase + 2 * std::numbers::pi_v<ld> * static_cast<ld>(i) / static_cast<ld>(n);
        q.push_back({r * std::cos(t), r * std::sin(t)});
    }
    return q;
}

Pts mirror(const Pts &q)
{
    Pts out = q;
    for (auto &p : out) {
        p[1] = -p[1];
    }
    return out;
}

Pts line(const std::vector<ld> &x)
{
    Pts q;
    for (ld v : x) {
        q.push_back({v, 0});
    }
    return q;
}

// Equal-mass square nCC; circumradius solves r^3 = m (1/sqrt2 + 1/4).
Pts square(ld m, const std::vector<int> &order)
{
    const Pts p = polygon(4, std::cbrt(m * (1 / std::sqrt(2.0L) + 0.25L)));
    Pts q(4);
    for (std::size_t i = 0; i < 4; ++i) {
        q[static_cast<std::size_t>(order[i])] = p[i];
    }
    return q;
}

} // namespace

TEST(Signature, EquilateralEntriesCoincide)
{
    const auto m = Masses::from_values({1, 1, 1});
    const auto c = oracle::to_cfg(oracle::equilateral(oracle::mass_ld(m)), m, 1e-14);
    const auto s = ncc::signature(c);
    ASSERT_EQ(s.size(), 3u);
    for (const auto &e : s) {
        EXPECT_TRUE(e.r.contains(1.0));
        EXPECT_LT(e.r.width(), 1e-12);
        EXPECT_TRUE(e.mi.intersects(s[0].mi) && e.mj.intersects(s[0].mj) && e.r.intersects(s[0].r));
    }
}

TEST(Signature, MirrorImagesShareSignature)
{
    const auto m = Masses::from_values(std::vector<double>(5, 1));
    const Pts p = oracle::newton_ncc(polygon(5, 0.7L, 0.3L), oracle::mass_ld(m));
    const auto a = oracle::to_cfg(p, m, 1e-14);
    const auto b = oracle::to_cfg(mirror(p), m, 1e-14);
    EXPECT_TRUE(ncc::signatures_intersect(ncc::signature(a), ncc::signature(b)));
    EXPECT_EQ(ncc::chirality(a), -ncc::chirality(b));
    EXPECT_NE(ncc::chirality(a), 0);
    EXPECT_FALSE(ncc::equivalent(a, b, Group::SO2));
    EXPECT_TRUE(ncc::equivalent(a, b, Group::SO3));
}

TEST(Signature, DistinctCollinearOrderingsDiffer)
{
    const std::vector<double> mv{0.4, 0.3, 0.2, 0.1};
    const auto m = Masses::from_values(mv);
    // bodies left to right as 0 1 2 3 and as 1 0 2 3
    const auto x1 = oracle::moulton({0.4L, 0.3L, 0.2L, 0.1L});
    const auto x2 = oracle::moulton({0.3L, 0.4L, 0.2L, 0.1L});
    const auto a = oracle::to_cfg(line(x1), m, 1e-13);
    const auto b = oracle::to_cfg(line({x2[1], x2[0], x2[2], x2[3]}), m, 1e-13);
    EXPECT_FALSE(ncc::signatures_intersect(ncc::signature(a), ncc::signature(b)));
    EXPECT_TRUE(ncc::signatures_intersect(ncc::signature(a), ncc::signature(a)));
}

TEST(Equivalence, RotationInvariance)
{
    const auto m = Masses::from_values({0.5, 0.3, 0.2});
    const Pts q = oracle::equilateral(oracle::mass_ld(m));
    const auto a = oracle::to_cfg(q, m, 1e-13);
    const auto b = oracle::to_cfg(oracle::rotate2(q, 0.7L), m, 1e-13);
    EXPECT_TRUE(ncc::equivalent(a, b, Group::SO2));
    EXPECT_TRUE(ncc::equivalent(b, a, Group::SO2));
    EXPECT_TRUE(ncc::equivalent(a, a, Group::SO2));
}

TEST(Equivalence, SquareLabelsSwappedAcrossDiagonal)
{
    const auto m = Masses::from_values({1, 1, 1, 1});
    const ld mm = 0.25L;
    const auto a = oracle::to_cfg(square(mm, {0, 1, 2, 3}), m, 1e-13);
    const auto b = oracle::to_cfg(square(mm, {0, 3, 2, 1}), m, 1e-13);
    EXPECT_LT(oracle::max_abs(oracle::F(square(mm, {0, 1, 2, 3}), {mm, mm, mm, mm})), 1e-15L);
    EXPECT_FALSE(ncc::equivalent(a, b, Group::SO2));
    EXPECT_TRUE(ncc::equivalent(a, b, Group::SO3));
    // a cyclic shift is a rotation
    const auto c = oracle::to_cfg(square(mm, {1, 2, 3, 0}), m, 1e-13);
    EXPECT_TRUE(ncc::equivalent(a, c, Group::SO2));
}

TEST(Equivalence, RelabelOnlyWithinMassGroups)
{
    const auto eq = Masses::from_values({1, 1, 1, 1});
    const ld mm = 0.25L;
    const auto a = oracle::to_cfg(square(mm, {0, 1, 2, 3}), eq, 1e-13);
    const auto b = oracle::to_cfg(square(mm, {0, 2, 1, 3}), eq, 1e-13);
    EXPECT_FALSE(ncc::equivalent(a, b, Group::SO3));
    EXPECT_TRUE(ncc::equivalent(a, b, Group::SO2, true));

    const auto uneq = Masses::from_values({0.4, 0.3, 0.2, 0.1});
    const auto x = oracle::moulton({0.4L, 0.3L, 0.2L, 0.1L});
    const auto y = oracle::moulton({0.3L, 0.4L, 0.2L, 0.1L});
    const auto c = oracle::to_cfg(line(x), uneq, 1e-13);
    const auto d = oracle::to_cfg(line({y[1], y[0], y[2], y[3]}), uneq, 1e-13);
    EXPECT_FALSE(ncc::equivalent(c, d, Group::SO3, true));
}

TEST(Equivalence, RandomConfigurationsAreReflexiveAndSymmetric)
{
    std::mt19937_64 rng(7);
    const auto m = Masses::from_values({0.3, 0.3, 0.2, 0.2});
    std::uniform_real_distribution<double> ang(0, 6.28);
    for (int t = 0; t < 50; ++t) {
        const Pts p = oracle::random_config(rng, 4, 2, oracle::mass_ld(m));
        const Pts r = oracle::rotate2(p, ang(rng));
        const auto a = oracle::to_cfg(p, m, 1e-12);
        const auto b = oracle::to_cfg(r, m, 1e-12);
        EXPECT_TRUE(ncc::equivalent(a, a, Group::SO2));
        EXPECT_TRUE(ncc::equivalent(a, b, Group::SO2));
        EXPECT_EQ(ncc::equivalent(a, b, Group::SO3), ncc::equivalent(b, a, Group::SO3));
        const auto other = oracle::to_cfg(oracle::random_config(rng, 4, 2, oracle::mass_ld(m)), m, 1e-12);
        EXPECT_EQ(ncc::equivalent(a, other, Group::SO2), ncc::equivalent(other, a, Group::SO2));
    }
}

TEST(Shape, Examples)
{
    const auto m3 = Masses::from_values({0.5, 0.3, 0.2});
    const auto x = oracle::moulton({0.5L, 0.3L, 0.2L});
    const auto col = certify_at(line(x), m3, {2, 0, 1});
    ASSERT_EQ(col.check, ncc::PostCheck::Verified);
    EXPECT_EQ(ncc::classify_shape(col), Shape::Collinear);

    const auto m5 = Masses::from_values(std::vector<double>(5, 1));
    const Pts pent = oracle::newton_ncc(polygon(5, 0.7L, 0.3L), oracle::mass_ld(m5));
    const auto cvx = certify_at(pent, m5, {0, 1, 2, 3, 4});
    ASSERT_EQ(cvx.check, ncc::PostCheck::Verified);
    EXPECT_EQ(ncc::classify_shape(cvx), Shape::Convex);

    const auto mc = Masses::from_values(std::vector<double>(5, 0.2), false);
    const auto cc = certify_at(oracle::square_center(0.2L, 0.2L), mc, {0, 2, 3, 4, 1});
    ASSERT_EQ(cc.check, ncc::PostCheck::Verified);
    EXPECT_EQ(ncc::classify_shape(cc), Shape::Concave);

    const auto tri = certify_at(oracle::equilateral(oracle::mass_ld(m3)), m3, {1, 2, 0});
    ASSERT_EQ(tri.check, ncc::PostCheck::Verified);
    EXPECT_EQ(ncc::classify_shape(tri), Shape::Convex);
}

TEST(Classify, ThreeBodies)
{
    for (const auto &mv : {std::vector<double>{1, 1, 1}, std::vector<double>{0.5, 0.3, 0.2}}) {
        const auto m = Masses::from_values(mv);
        const auto rep = ncc::multi_run(m, 2, ncc::RunOptions{}, ncc::RunSelection::Symmetry, {});
        ASSERT_TRUE(rep.conclusive());
        const auto so2 = ncc::classify(rep, m, Group::SO2);
        EXPECT_EQ(so2.table.total, 5u);
        EXPECT_EQ(so2.table.collinear, 3u);
        EXPECT_EQ(so2.table.convex, 2u);
        EXPECT_EQ(so2.table.concave, 0u);
        EXPECT_EQ(so2.table.total, so2.table.concave + so2.table.collinear + so2.table.convex
                                       + so2.table.spatial + so2.table.unresolved);
        EXPECT_GE(so2.table.run_upper_bound, so2.table.total);

        // the triangles enclose the unit equilateral with tight radii
        const auto eq = oracle::to_cfg(oracle::equilateral(oracle::mass_ld(m)), m, 0.0);
        int triangles = 0;
        for (const auto &c : so2.classes) {
            EXPECT_TRUE(c.consistent);
            if (c.shape != Shape::Convex) {
                continue;
            }
            ++triangles;
            for (const auto &e : c.sig) {
                EXPECT_TRUE(e.r.contains(1.0));
            }
            for (const auto &p : c.config.q) {
                for (const auto &v : p) {
                    EXPECT_LT(v.rad(), 1e-8);
                }
            }
            EXPECT_TRUE(ncc::signatures_intersect(c.sig, ncc::signature(eq)));
        }
        EXPECT_EQ(triangles, 2);

        // identifying mirror images can only merge classes
        const auto so3 = ncc::classify(rep, m, Group::SO3);
        EXPECT_LE(so3.table.total, so2.table.total);
        EXPECT_EQ(so3.table.total, 4u);
    }
}

TEST(Classify, TablesSum)
{
    std::vector<ncc::EquivalenceClass> cls(7);
    const Shape shapes[] = {Shape::Collinear, Shape::Concave, Shape::Concave, Shape::Convex,
                            Shape::SpatialNonPlanar, Shape::Unresolved, Shape::Convex};
    for (std::size_t i = 0; i < cls.size(); ++i) {
        cls[i].shape = shapes[i];
    }
    const auto t = ncc::build_tables(cls);
    EXPECT_EQ(t.collinear, 1u);
    EXPECT_EQ(t.concave, 2u);
    EXPECT_EQ(t.convex, 2u);
    EXPECT_EQ(t.spatial, 1u);
    EXPECT_EQ(t.unresolved, 1u);
    EXPECT_EQ(t.total, 7u);
    EXPECT_EQ(ncc::table_csv(t), "concave,collinear,convex,spatial,unresolved,total\n2,1,2,1,1,7\n");
}
