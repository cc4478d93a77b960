#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace nmqsd;

TEST(Operator, PauliAlgebra)
{
    const complex_t i(0.0, 1.0);
    EXPECT_LT(testutil::max_diff(pauli::x() * pauli::y(), i * pauli::z()), 1e-15);
    EXPECT_LT(testutil::max_diff(commutator(pauli::x(), pauli::y()), complex_t(2.0) * i * pauli::z()), 1e-15);
    EXPECT_LT(testutil::max_diff(pauli::z() * pauli::z(), pauli::identity()), 1e-15);
    EXPECT_LT(testutil::max_diff(pauli::minus() + pauli::plus(), pauli::x()), 1e-15);
    EXPECT_LT(testutil::max_diff(adjoint(pauli::minus()), pauli::plus()), 1e-15);
}

TEST(Operator, BasisConvention)
{
    const StateVector e{1.0, 0.0};
    const StateVector g{0.0, 1.0};
    EXPECT_DOUBLE_EQ(expectation(pauli::z(), e).real(), 1.0);
    EXPECT_DOUBLE_EQ(expectation(pauli::z(), g).real(), -1.0);
    const StateVector lowered = pauli::minus() * e;
    EXPECT_EQ(lowered[0], complex_t(0.0));
    EXPECT_EQ(lowered[1], complex_t(1.0));
}

TEST(Operator, CommutatorMatchesEntrywise)
{
    std::mt19937_64 rng(11);
    for(std::size_t dim : {2u, 3u, 4u})
        for(int rep = 0; rep < 20; ++rep)
        {
            const Operator A = testutil::random_operator(rng, dim);
            const Operator B = testutil::random_operator(rng, dim);
            const Operator C = commutator(A, B);
            for(std::size_t r = 0; r < dim; ++r)
                for(std::size_t c = 0; c < dim; ++c)
                {
                    complex_t ref = 0.0;
                    for(std::size_t k = 0; k < dim; ++k) ref += A(r, k) * B(k, c) - B(r, k) * A(k, c);
                    EXPECT_LT(std::abs(C(r, c) - ref), 1e-12);
                }
        }
}

TEST(Operator, AdjointAndTrace)
{
    std::mt19937_64 rng(3);
    const Operator A = testutil::random_operator(rng, 3);
    const Operator B = testutil::random_operator(rng, 3);
    EXPECT_LT(testutil::max_diff(adjoint(adjoint(A)), A), 1e-15);
    EXPECT_LT(testutil::max_diff(adjoint(A * B), adjoint(B) * adjoint(A)), 1e-12);
    EXPECT_LT(std::abs(trace(commutator(A, B))), 1e-12);
    EXPECT_TRUE(is_hermitian(testutil::random_hermitian(rng, 3)));
    EXPECT_FALSE(is_hermitian(A));
}

TEST(Operator, ExpectationOfHermitianIsReal)
{
    std::mt19937_64 rng(5);
    for(int rep = 0; rep < 10; ++rep)
    {
        const Operator H = testutil::random_hermitian(rng, 2);
        const StateVector psi = testutil::random_state(rng, 2);
        EXPECT_LT(std::abs(expectation(H, psi).imag()), 1e-14);
        EXPECT_NEAR(std::real(trace(H * outer(psi, psi))), expectation(H, psi).real(), 1e-13);
    }
}

// Singular values of a 2x2 matrix from the eigenvalues of A^dagger A via the
// quadratic formula.
static double trace_norm_quadratic(const Operator& A)
{
    const Operator M = adjoint(A) * A;
    const double tr = std::real(M(0, 0) + M(1, 1));
    const double det = std::real(M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0));
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    return std::sqrt(std::max(0.0, tr / 2.0 + disc)) + std::sqrt(std::max(0.0, tr / 2.0 - disc));
}

TEST(Operator, TraceNorm2x2)
{
    EXPECT_NEAR(trace_norm(pauli::minus()), 1.0, 1e-15);
    EXPECT_NEAR(trace_norm(pauli::x()), 2.0, 1e-15);
    EXPECT_NEAR(trace_norm(Operator(2, {1.0, 1.0, 1.0, 1.0})), 2.0, 1e-14);
    std::mt19937_64 rng(17);
    for(int rep = 0; rep < 100; ++rep)
    {
        const Operator A = testutil::random_operator(rng, 2);
        EXPECT_NEAR(trace_norm(A), trace_norm_quadratic(A), 1e-12);
    }
}

TEST(Operator, TraceNormGeneric)
{
    std::mt19937_64 rng(19);
    Operator D = Operator::zero(3);
    D(0, 0) = complex_t(0.0, 2.0);
    D(1, 1) = -1.5;
    D(2, 2) = 0.25;
    EXPECT_NEAR(trace_norm(D), 3.75, 1e-12);
    for(int rep = 0; rep < 20; ++rep)
    {
        const Operator A = testutil::random_operator(rng, 3);
        const Operator B = testutil::random_operator(rng, 3);
        EXPECT_LE(trace_norm(A + B), trace_norm(A) + trace_norm(B) + 1e-12);
        EXPECT_NEAR(trace_norm(complex_t(0.0, -3.0) * A), 3.0 * trace_norm(A), 1e-11);
        EXPECT_NEAR(trace_norm(adjoint(A)), trace_norm(A), 1e-11);
    }
}

TEST(Operator, DimensionMismatchThrows)
{
    EXPECT_THROW(Operator::zero(2) + Operator::zero(3), dimension_error);
    EXPECT_THROW(commutator(Operator::zero(2), Operator::zero(3)), dimension_error);
}

TEST(StateVector, Normalize)
{
    StateVector psi{3.0, complex_t(0.0, 4.0)};
    EXPECT_DOUBLE_EQ(psi.norm_squared(), 25.0);
    psi.normalize();
    EXPECT_NEAR(psi.norm_squared(), 1.0, 1e-15);
}
