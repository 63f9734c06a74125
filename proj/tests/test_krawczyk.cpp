#include <cstdio>

#include <gtest/gtest.h>

#include "poly_systems.hpp"

TEST(Krawczyk, RandomPolynomialSystemsAgainstKnownRoots)
{
    const poly::Tally t = poly::run_oracle(200, 60, 20261016);
    EXPECT_EQ(t.violations, 0);
    // the operator has to decide a fair share, otherwise the checks are idle
    EXPECT_GT(t.certified, 1000);
    EXPECT_GT(t.excluded, 1000);
    std::printf("certified %d excluded %d undecided %d\n", t.certified, t.excluded, t.undecided);
}

TEST(Krawczyk, OtherSeeds)
{
    for (unsigned seed : {1u, 2u, 3u}) {
        EXPECT_EQ(poly::run_oracle(60, 40, seed).violations, 0) << seed;
    }
}
