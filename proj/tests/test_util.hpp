#ifndef NMQSD_TEST_UTIL_HPP
#define NMQSD_TEST_UTIL_HPP

#include <random>

#include <nmqsd/nmqsd.hpp>

namespace testutil
{

inline nmqsd::Operator random_operator(std::mt19937_64& rng, std::size_t dim, double scale = 1.0)
{
    std::normal_distribution<double> g(0.0, scale);
    nmqsd::Operator A(dim);
    for(auto& v : A.entries()) v = nmqsd::complex_t(g(rng), g(rng));
    return A;
}

inline nmqsd::Operator random_hermitian(std::mt19937_64& rng, std::size_t dim)
{
    const nmqsd::Operator A = random_operator(rng, dim);
    nmqsd::Operator H = A + nmqsd::adjoint(A);
    H *= nmqsd::complex_t(0.5);
    return H;
}

inline nmqsd::StateVector random_state(std::mt19937_64& rng, std::size_t dim)
{
    std::normal_distribution<double> g(0.0, 1.0);
    nmqsd::StateVector psi(dim);
    for(std::size_t i = 0; i < dim; ++i) psi[i] = nmqsd::complex_t(g(rng), g(rng));
    psi.normalize();
    return psi;
}

// Fills every slot of the active triangle with random entries whose size
// decays with the order so that products stay O(1).
inline void fill_random(nmqsd::HierarchyState& s, std::mt19937_64& rng)
{
    for(std::size_t n = 0; n <= s.n_q(); ++n)
        for(std::size_t m = 0; m + n <= s.n_q() && m <= n; ++m)
            s.set(n, m, random_operator(rng, s.dim(), 1.0 / static_cast<double>(1 + n + m)));
}

inline double max_diff(const nmqsd::Operator& a, const nmqsd::Operator& b) { return (a - b).max_abs(); }

}   // namespace testutil

#endif
