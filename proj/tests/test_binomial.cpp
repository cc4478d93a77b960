#include <cmath>

#include <gtest/gtest.h>

#include <nmqsd/binomial.hpp>

using namespace nmqsd;

TEST(Binomial, SmallValues)
{
    EXPECT_EQ(binomial(0, 0), 1.0);
    EXPECT_EQ(binomial(5, 2), 10.0);
    EXPECT_EQ(binomial(10, 0), 1.0);
    EXPECT_EQ(binomial(10, 10), 1.0);
    EXPECT_EQ(binomial(3, 4), 0.0);
}

TEST(Binomial, MatchesLgammaAtHighOrder)
{
    for(std::size_t k = 0; k <= 100; k += 7)
    {
        const double ref = std::exp(std::lgamma(101.0) - std::lgamma(k + 1.0) - std::lgamma(101.0 - k));
        EXPECT_NEAR(binomial(100, k) / ref, 1.0, 1e-11) << k;
    }
}

TEST(BinomialWeight, ReferenceValues)
{
    EXPECT_DOUBLE_EQ(binomial_weight(2, 1, 1, 0), 0.5);
    EXPECT_DOUBLE_EQ(binomial_weight(2, 1, 1, 1), 0.5);
    EXPECT_NEAR(binomial_weight(3, 1, 1, 1), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(binomial_weight(3, 1, 1, 0), 1.0 / 3.0, 1e-15);
    EXPECT_DOUBLE_EQ(binomial_weight(3, 3, 2, 0), 1.0);
    EXPECT_DOUBLE_EQ(binomial_weight(0, 0, 0, 0), 1.0);
}

// Vandermonde: for fixed (n, m) the weights over all valid (l) at fixed k sum to one.
TEST(BinomialWeight, VandermondeIdentity)
{
    for(std::size_t n = 0; n <= 30; ++n)
        for(std::size_t m = 0; m <= n; ++m)
            for(std::size_t k = 0; k <= n; ++k)
            {
                const std::size_t la = k > m ? k - m : 0;
                const std::size_t lb = std::min(k, n - m);
                double s = 0.0;
                for(std::size_t l = la; l <= lb; ++l) s += binomial_weight(n, m, k, l);
                EXPECT_NEAR(s, 1.0, 1e-12) << n << " " << m << " " << k;
            }
}

TEST(BinomialWeight, OutOfBoundsThrows)
{
    EXPECT_THROW(binomial_weight(3, 1, 1, 2), std::out_of_range);
    EXPECT_THROW(binomial_weight(3, 4, 0, 0), std::out_of_range);
    EXPECT_THROW(binomial_weight(3, 1, 4, 0), std::out_of_range);
    EXPECT_THROW(binomial_weight(3, 0, 2, 0), std::out_of_range);
}
