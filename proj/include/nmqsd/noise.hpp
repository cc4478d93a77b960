#ifndef NMQSD_NOISE_HPP
#define NMQSD_NOISE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "operator.hpp"

namespace nmqsd
{

// Zero-temperature Ornstein-Uhlenbeck bath: alpha(tau) = (gamma_Gamma / 2) exp(-gamma |tau|).
struct NoiseParams
{
    double gamma = 0.2;
    double gamma_Gamma = 0.2;
    double dt = 0.02;
    std::size_t n_steps = 600;
    std::uint64_t seed = 0;

    double alpha0() const { return 0.5 * gamma_Gamma; }

    void validate() const
    {
        if(!(gamma_Gamma >= 0.0) || !std::isfinite(gamma_Gamma)) throw std::invalid_argument("gamma_Gamma must be finite and >= 0");
        if(!(gamma > 0.0) && gamma_Gamma != 0.0) throw std::invalid_argument("gamma must be > 0 for a coupled bath");
        if(!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be finite and >= 0");
        if(!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be finite and > 0");
        if(n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
    }
};

// Sampled noise on the grid t_i = i dt, i = 0..n_steps. z_star holds z*_t; the
// shift y and shifted noise z_tilde_star = z_star + y are filled in by the
// trajectory as it integrates.
struct NoisePath
{
    double dt = 0.0;
    std::vector<complex_t> z_star;
    std::vector<complex_t> y;
    std::vector<complex_t> z_tilde_star;

    std::size_t n_steps() const { return z_star.empty() ? 0 : z_star.size() - 1; }

    void set_shift(std::size_t i, complex_t shift)
    {
        y[i] = shift;
        z_tilde_star[i] = z_star[i] + shift;
    }

    static NoisePath from_z_star(std::vector<complex_t> z_star, double dt)
    {
        NoisePath p;
        p.dt = dt;
        p.z_star = std::move(z_star);
        p.y.assign(p.z_star.size(), complex_t(0.0));
        p.z_tilde_star = p.z_star;
        return p;
    }
};

inline complex_t correlation(const NoiseParams& params, double tau)
{
    return complex_t(params.alpha0() * std::exp(-params.gamma * std::abs(tau)), 0.0);
}

// SplitMix64 finalizer. Used to derive independent per-trajectory streams
// from (master seed, index) so that results do not depend on scheduling.
inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t index, std::uint64_t tag = 0)
{
    return splitmix64(splitmix64(master_seed) ^ splitmix64(index * 0xD1B54A32D192ED03ULL + tag));
}

// Exact AR(1) sampler for a circular complex OU process: real and imaginary
// parts are independent OU processes each with stationary variance alpha(0)/2.
class OrnsteinUhlenbeckGenerator
{
public:
    explicit OrnsteinUhlenbeckGenerator(std::uint64_t seed) : m_rng(seed) {}

    complex_t stationary(double variance)
    {
        const double s = std::sqrt(0.5 * variance);
        return complex_t(s * m_normal(m_rng), s * m_normal(m_rng));
    }

    complex_t advance(complex_t z, double decay, double residual_variance)
    {
        return z * decay + stationary(residual_variance);
    }

    std::mt19937_64& engine() { return m_rng; }

private:
    std::mt19937_64 m_rng;
    std::normal_distribution<double> m_normal{0.0, 1.0};
};

inline NoisePath sample_path(const NoiseParams& params)
{
    params.validate();
    std::vector<complex_t> z(params.n_steps + 1, complex_t(0.0));
    const double var = params.alpha0();
    if(var > 0.0)
    {
        OrnsteinUhlenbeckGenerator gen(params.seed);
        const double decay = std::exp(-params.gamma * params.dt);
        const double residual = var * (1.0 - decay * decay);
        // z is circular, so sampling z and storing it as z* is equivalent in law.
        z[0] = gen.stationary(var);
        for(std::size_t i = 1; i < z.size(); ++i) z[i] = gen.advance(z[i - 1], decay, residual);
    }
    return NoisePath::from_z_star(std::move(z), params.dt);
}

// Halves the grid spacing of a sampled path. Even-indexed points are copied,
// midpoints are drawn from the exact OU bridge conditioned on both neighbours,
// so the refined path is a sample of the same process at dt/2 that coincides
// with the original on the coarse grid.
inline NoisePath refine_path(const NoisePath& coarse, const NoiseParams& params, std::uint64_t seed)
{
    const std::size_t n = coarse.n_steps();
    std::vector<complex_t> z(2 * n + 1, complex_t(0.0));
    const double var = params.alpha0();
    const double rho = std::exp(-params.gamma * 0.5 * coarse.dt);
    const double bridge_var = var * (1.0 - rho * rho) / (1.0 + rho * rho);
    OrnsteinUhlenbeckGenerator gen(seed);
    for(std::size_t i = 0; i < n; ++i)
    {
        z[2 * i] = coarse.z_star[i];
        const complex_t mean = rho * (coarse.z_star[i] + coarse.z_star[i + 1]) / (1.0 + rho * rho);
        z[2 * i + 1] = var > 0.0 ? mean + gen.stationary(bridge_var) : mean;
    }
    z[2 * n] = coarse.z_star[n];
    return NoisePath::from_z_star(std::move(z), 0.5 * coarse.dt);
}

// One explicit Euler step of dy/dt = -gamma y + alpha*(0) <L^dagger>.
inline complex_t advance_shift(complex_t y, complex_t expect_L_dagger, const NoiseParams& params)
{
    const complex_t alpha0_conj = std::conj(correlation(params, 0.0));
    return y + params.dt * (-params.gamma * y + alpha0_conj * expect_L_dagger);
}

}   // namespace nmqsd

#endif  // NMQSD_NOISE_HPP
