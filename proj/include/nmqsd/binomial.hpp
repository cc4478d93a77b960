#ifndef NMQSD_BINOMIAL_HPP
#define NMQSD_BINOMIAL_HPP

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace nmqsd
{

// C(top, bottom) in double precision by the multiplicative formula. Exact for
// top <= 56 and within a few ulp above that; finite up to top ~ 1020.
inline double binomial(std::size_t top, std::size_t bottom)
{
    if(bottom > top) return 0.0;
    const std::size_t b = std::min(bottom, top - bottom);
    double r = 1.0;
    for(std::size_t i = 1; i <= b; ++i) r = r * static_cast<double>(top - b + i) / static_cast<double>(i);
    return r;
}

// Weight C(k, l) C(n - k, n - m - l) / C(n, m) of the commutator [L^dagger Q_{k-l}^{(k)}, Q_{m-k+l}^{(n-k)}]
// in the evolution of Q_m^{(n)}.
inline double binomial_weight(std::size_t n, std::size_t m, std::size_t k, std::size_t l)
{
    if(m > n || k > n) throw std::out_of_range("binomial_weight: require 0 <= m <= n and 0 <= k <= n");
    const std::size_t la = k > m ? k - m : 0;
    const std::size_t lb = std::min(k, n - m);
    if(l < la || l > lb)
        throw std::out_of_range("binomial_weight: l=" + std::to_string(l) + " outside [" + std::to_string(la) + ", " +
                                std::to_string(lb) + "] for n=" + std::to_string(n) + " m=" + std::to_string(m) +
                                " k=" + std::to_string(k));
    return binomial(k, l) * binomial(n - k, n - m - l) / binomial(n, m);
}

}   // namespace nmqsd

#endif  // NMQSD_BINOMIAL_HPP
