#ifndef NMQSD_ORACLES_HPP
#define NMQSD_ORACLES_HPP

// Independent reference computations used by the test suites and by the
// `validate` command. Nothing in here calls the generic hierarchy kernel.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "hierarchy.hpp"
#include "noise.hpp"
#include "operator.hpp"

namespace nmqsd::oracle
{

// Hand-written evolution equations for the lowest auxiliary operators, one
// closed expression per (n, m). Returns nullopt for pairs not covered.
inline std::optional<Operator> low_order_rhs(std::size_t n, std::size_t m, const HierarchyState& s, complex_t zt,
                                             const Operator& H, const Operator& L, double a0, double g)
{
    const auto Q = [&](long nn, long mm) { return s.get(nn, mm); };
    const Operator Ld = adjoint(L);
    const auto C = [](const Operator& A, const Operator& B) { return A * B - B * A; };
    const complex_t mi(0.0, -1.0);
    const auto c = [](double v) { return complex_t(v); };

    if(n == 0 && m == 0)
        return c(a0) * L - c(g) * Q(0, 0) + mi * C(H, Q(0, 0)) - C(Ld * Q(0, 0), Q(0, 0)) - Ld * Q(1, 1);

    if(n == 1 && m == 0)
        return zt * C(L, Q(0, 0)) - c(g) * Q(1, 0) + mi * C(H, Q(1, 0)) - C(Ld * Q(0, 0), Q(1, 0)) - C(Ld * Q(1, 0), Q(0, 0)) -
               c(2) * (Ld * Q(2, 1));

    if(n == 1 && m == 1)
        return c(a0) * C(L, Q(0, 0)) - c(2 * g) * Q(1, 1) + mi * C(H, Q(1, 1)) - C(Ld * Q(0, 0), Q(1, 1)) -
               C(Ld * Q(1, 1), Q(0, 0)) - c(2) * (Ld * Q(2, 2));

    if(n == 2 && m == 1)
        return c(a0 / 2) * C(L, Q(1, 0)) + (zt / 2.0) * C(L, Q(1, 1)) - c(2 * g) * Q(2, 1) + mi * C(H, Q(2, 1)) -
               c(3) * (Ld * Q(3, 2)) -
               c(0.5) * (c(2) * C(Ld * Q(0, 0), Q(2, 1)) + C(Ld * Q(1, 1), Q(1, 0)) + C(Ld * Q(1, 0), Q(1, 1)) +
                         c(2) * C(Ld * Q(2, 1), Q(0, 0)));

    if(n == 2 && m == 2)
        return c(a0) * C(L, Q(1, 1)) - c(3 * g) * Q(2, 2) + mi * C(H, Q(2, 2)) - C(Ld * Q(0, 0), Q(2, 2)) -
               C(Ld * Q(1, 1), Q(1, 1)) - C(Ld * Q(2, 2), Q(0, 0)) - c(3) * (Ld * Q(3, 3));

    if(n == 3 && m == 1)
        return c(a0 / 3) * C(L, Q(2, 0)) + (2.0 * zt / 3.0) * C(L, Q(2, 1)) - c(2 * g) * Q(3, 1) + mi * C(H, Q(3, 1)) -
               C(Ld * Q(0, 0), Q(3, 1)) - c(1.0 / 3) * C(Ld * Q(1, 1), Q(2, 0)) - c(2.0 / 3) * C(Ld * Q(1, 0), Q(2, 1)) -
               c(2.0 / 3) * C(Ld * Q(2, 1), Q(1, 0)) - c(1.0 / 3) * C(Ld * Q(2, 0), Q(1, 1)) - C(Ld * Q(3, 1), Q(0, 0)) -
               c(4) * (Ld * Q(4, 2));

    if(n == 3 && m == 2)
        return c(2 * a0 / 3) * C(L, Q(2, 1)) + (zt / 3.0) * C(L, Q(2, 2)) - c(3 * g) * Q(3, 2) + mi * C(H, Q(3, 2)) -
               C(Ld * Q(0, 0), Q(3, 2)) - c(2.0 / 3) * C(Ld * Q(1, 1), Q(2, 1)) - c(1.0 / 3) * C(Ld * Q(1, 0), Q(2, 2)) -
               c(1.0 / 3) * C(Ld * Q(2, 2), Q(1, 0)) - c(2.0 / 3) * C(Ld * Q(2, 1), Q(1, 1)) - C(Ld * Q(3, 2), Q(0, 0)) -
               c(4) * (Ld * Q(4, 3));

    if(n == 3 && m == 3)
        return c(a0) * C(L, Q(2, 2)) - c(4 * g) * Q(3, 3) + mi * C(H, Q(3, 3)) - C(Ld * Q(0, 0), Q(3, 3)) -
               C(Ld * Q(1, 1), Q(2, 2)) - C(Ld * Q(2, 2), Q(1, 1)) - C(Ld * Q(3, 3), Q(0, 0)) - c(4) * (Ld * Q(4, 4));

    return std::nullopt;
}

inline const std::vector<std::pair<std::size_t, std::size_t>>& low_order_pairs()
{
    static const std::vector<std::pair<std::size_t, std::size_t>> p{{0, 0}, {1, 0}, {1, 1}, {2, 1}, {2, 2}, {3, 1}, {3, 2}, {3, 3}};
    return p;
}

// Rotating-wave limit (L = sigma_-, H = omega/2 sigma_z): the hierarchy closes on
// Q_0^{(0)} = F(t) sigma_- with
//   dF/dt = alpha(0) - (gamma - i omega) F + F^2,   F(0) = 0,
// all higher Q vanish, and the excited population obeys d|c_e|^2/dt = -2 Re F |c_e|^2.
struct RwaSolution
{
    std::vector<double> times;
    std::vector<complex_t> F;
    std::vector<double> sigma_z;   // for the initial state |e>
};

inline RwaSolution rwa_riccati(double alpha0, double gamma, double omega, double t_final, double out_dt, std::size_t substeps = 200)
{
    const auto n_out = static_cast<std::size_t>(std::llround(t_final / out_dt));
    const double h = out_dt / static_cast<double>(substeps);
    const complex_t k(gamma, -omega);
    // State: F and I = integral of Re F.
    auto f = [&](complex_t F) { return alpha0 - k * F + F * F; };

    RwaSolution sol;
    complex_t F = 0.0;
    double I = 0.0;
    sol.times.push_back(0.0);
    sol.F.push_back(F);
    sol.sigma_z.push_back(1.0);
    for(std::size_t i = 0; i < n_out; ++i)
    {
        for(std::size_t j = 0; j < substeps; ++j)
        {
            const complex_t k1 = f(F);
            const complex_t k2 = f(F + 0.5 * h * k1);
            const complex_t k3 = f(F + 0.5 * h * k2);
            const complex_t k4 = f(F + h * k3);
            I += h / 6.0 * (F.real() + 2.0 * (F + 0.5 * h * k1).real() + 2.0 * (F + 0.5 * h * k2).real() + (F + h * k3).real());
            F += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        sol.times.push_back(static_cast<double>(i + 1) * out_dt);
        sol.F.push_back(F);
        sol.sigma_z.push_back(2.0 * std::exp(-2.0 * I) - 1.0);
    }
    return sol;
}

// Monte Carlo moments of the sampled noise at lags k = 0..max_lag relative to
// grid point t0: M[z_{t0+k} z*_{t0}] and M[z_{t0+k} z_{t0}], with standard errors
// of the real and imaginary parts.
struct LagMoment
{
    std::size_t lag = 0;
    complex_t mean;
    double se_re = 0.0;
    double se_im = 0.0;
};

struct NoiseMoments
{
    std::vector<LagMoment> correlation;         // M[z_t z*_s]
    std::vector<LagMoment> pseudo_correlation;  // M[z_t z_s]
    std::vector<LagMoment> variance_by_time;    // M[|z_t|^2] at t = 0..n_steps (lag field = time index)
};

inline NoiseMoments noise_moments(const NoiseParams& base, std::size_t n_paths, std::size_t max_lag, std::size_t t0,
                                  std::uint64_t master_seed)
{
    if(t0 + max_lag > base.n_steps) throw std::invalid_argument("noise_moments: lag window exceeds path length");
    struct Acc
    {
        double sr = 0, si = 0, srr = 0, sii = 0;
        void add(complex_t v)
        {
            sr += v.real();
            si += v.imag();
            srr += v.real() * v.real();
            sii += v.imag() * v.imag();
        }
        LagMoment finish(std::size_t lag, double N) const
        {
            LagMoment m;
            m.lag = lag;
            m.mean = complex_t(sr / N, si / N);
            m.se_re = std::sqrt(std::max(0.0, (srr / N - m.mean.real() * m.mean.real()) / (N - 1)));
            m.se_im = std::sqrt(std::max(0.0, (sii / N - m.mean.imag() * m.mean.imag()) / (N - 1)));
            return m;
        }
    };
    std::vector<Acc> corr(max_lag + 1), pseudo(max_lag + 1), var(base.n_steps + 1);
    for(std::size_t p = 0; p < n_paths; ++p)
    {
        NoiseParams np = base;
        np.seed = stream_seed(master_seed, p);
        const NoisePath path = sample_path(np);
        // path.z_star holds z*; recover z by conjugation.
        const complex_t zs0 = path.z_star[t0];
        const complex_t z0 = std::conj(zs0);
        for(std::size_t k = 0; k <= max_lag; ++k)
        {
            const complex_t zk = std::conj(path.z_star[t0 + k]);
            corr[k].add(zk * zs0);
            pseudo[k].add(zk * z0);
        }
        for(std::size_t t = 0; t <= base.n_steps; ++t) var[t].add(complex_t(std::norm(path.z_star[t]), 0.0));
    }
    NoiseMoments out;
    const double N = static_cast<double>(n_paths);
    for(std::size_t k = 0; k <= max_lag; ++k)
    {
        out.correlation.push_back(corr[k].finish(k, N));
        out.pseudo_correlation.push_back(pseudo[k].finish(k, N));
    }
    for(std::size_t t = 0; t <= base.n_steps; ++t) out.variance_by_time.push_back(var[t].finish(t, N));
    return out;
}

}   // namespace nmqsd::oracle

#endif  // NMQSD_ORACLES_HPP
