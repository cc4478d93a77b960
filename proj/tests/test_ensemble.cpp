#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace nmqsd;

namespace
{
EnsembleConfig small_config(std::size_t n_traj, double t_final = 2.0)
{
    EnsembleConfig c;
    c.gamma = 0.4;
    c.gamma_Gamma = 0.2;
    c.dt = 0.02;
    c.t_final = t_final;
    c.hierarchy.n_max = 30;
    c.n_traj = n_traj;
    c.master_seed = 5;
    c.threads = 1;
    return c;
}
}   // namespace

TEST(Ensemble, IdenticalNoiseGivesZeroSpread)
{
    auto c = small_config(8);
    c.noise_source = [&](std::size_t, const NoiseParams& p) {
        NoiseParams q = p;
        q.seed = 123;
        return sample_path(q);
    };
    const auto r = run_ensemble(c);
    for(double e : r.stderr_sigma_z) EXPECT_LT(e, 1e-7);
}

TEST(Ensemble, DensityMatrixProperties)
{
    const auto r = run_ensemble(small_config(40));
    ASSERT_EQ(r.rho.size(), r.times.size());
    for(std::size_t t = 0; t < r.times.size(); ++t)
    {
        EXPECT_NEAR(trace(r.rho[t]).real(), 1.0, 1e-12);
        EXPECT_NEAR(trace(r.rho[t]).imag(), 0.0, 1e-12);
        EXPECT_TRUE(is_hermitian(r.rho[t], 1e-12));
        EXPECT_NEAR(std::real(trace(r.rho[t] * pauli::z())), r.mean_sigma_z[t], 1e-12);
    }
    EXPECT_DOUBLE_EQ(r.mean_sigma_z[0], 1.0);
    EXPECT_EQ(r.stderr_sigma_z[0], 0.0);
}

TEST(Ensemble, CountsAndRejectionRate)
{
    auto c = small_config(64);
    c.gamma = 0.2;
    c.hierarchy.n_max = 8;
    const auto r = run_ensemble(c);
    EXPECT_EQ(r.total_count, 64u);
    EXPECT_EQ(r.accepted_count + r.rejected_count, r.total_count);
    EXPECT_DOUBLE_EQ(r.rejection_rate, static_cast<double>(r.rejected_count) / 64.0);
    std::size_t hist_total = 0;
    for(auto h : r.nq_histogram) hist_total += h;
    EXPECT_EQ(hist_total, r.accepted_count);
    std::size_t rejected = 0;
    for(const auto& s : r.trajectories) rejected += s.rejected;
    EXPECT_EQ(rejected, r.rejected_count);
}

TEST(Ensemble, AllRejectedThrows)
{
    auto c = small_config(4);
    c.hierarchy.n_max = 1;
    EXPECT_THROW(run_ensemble(c), all_rejected_error);
}

TEST(Ensemble, ThreadCountDoesNotChangeResult)
{
    auto c = small_config(100);
    const auto a = run_ensemble(c);
    c.threads = 4;
    const auto b = run_ensemble(c);
    EXPECT_EQ(a.mean_sigma_z, b.mean_sigma_z);
    EXPECT_EQ(a.stderr_sigma_z, b.stderr_sigma_z);
    EXPECT_EQ(a.mean_q_trace_norms, b.mean_q_trace_norms);
    EXPECT_EQ(a.nq_histogram, b.nq_histogram);
}

TEST(Ensemble, RejectionDoesNotAffectOtherTrajectories)
{
    // Trajectory i sees the same noise whatever the other indices do.
    auto c = small_config(6);
    const auto full = run_ensemble(c);
    for(std::size_t i = 0; i < 6; ++i)
    {
        auto single = c;
        single.n_traj = 1;
        single.noise_source = [&c, i](std::size_t, const NoiseParams&) { return sample_path(c.noise_params(i)); };
        const auto r = run_ensemble(single);
        EXPECT_EQ(r.trajectories[0].final_n_q, full.trajectories[i].final_n_q);
    }
}

TEST(Ensemble, StandardErrorShrinksWithSampleSize)
{
    const auto a = run_ensemble(small_config(64));
    const auto b = run_ensemble(small_config(256));
    const double ratio = a.time_averaged_stderr() / b.time_averaged_stderr();
    EXPECT_GT(ratio, 1.4);
    EXPECT_LT(ratio, 2.8);
}

TEST(Ensemble, LinearAndNonlinearAgreeAtWeakCoupling)
{
    auto c = small_config(200, 4.0);
    c.gamma_Gamma = 0.002;
    const auto nl = run_ensemble(c);
    c.options.evolution = Evolution::linear;
    const auto lin = run_ensemble(c);
    for(std::size_t t = 0; t < nl.times.size(); ++t)
        EXPECT_LT(std::abs(nl.mean_sigma_z[t] - lin.mean_sigma_z[t]), 3.0 * std::hypot(nl.stderr_sigma_z[t], lin.stderr_sigma_z[t]) + 1e-3);
}

TEST(Ensemble, RejectedPathsHaveLargerShiftedNoise)
{
    EnsembleConfig c;
    c.gamma = 0.2;
    c.gamma_Gamma = 0.2;
    c.hierarchy.n_max = 100;
    c.n_traj = 160;
    c.master_seed = 11;
    c.threads = 1;
    const auto r = run_ensemble(c);
    ASSERT_GT(r.rejected_count, 0u);
    double acc = 0.0, rej = 0.0;
    for(const auto& s : r.trajectories) (s.rejected ? rej : acc) += s.mean_abs_z_tilde_star;
    acc /= static_cast<double>(r.accepted_count);
    rej /= static_cast<double>(r.rejected_count);
    EXPECT_GT(rej, acc);
}

TEST(NqDistribution, DegenerateHistogramSkipsFit)
{
    EnsembleResult r;
    r.n_max = 10;
    r.nq_histogram.assign(11, 0);
    r.nq_histogram[4] = 500;
    const auto d = nq_distribution(r);
    EXPECT_FALSE(d.fit_valid);
    EXPECT_EQ(d.mode, 4u);
    EXPECT_NE(d.fit_note.find("degenerate"), std::string::npos);
}

TEST(NqDistribution, ExponentialTailRecovered)
{
    EnsembleResult r;
    r.n_max = 30;
    r.nq_histogram.assign(31, 0);
    for(std::size_t v = 5; v < 30; ++v) r.nq_histogram[v] = static_cast<std::size_t>(std::llround(1e6 * std::exp(-0.3 * double(v))));
    r.nq_histogram[30] = 99999;   // saturated, excluded by default
    const auto d = nq_distribution(r);
    ASSERT_TRUE(d.fit_valid);
    EXPECT_NEAR(d.rate, 0.3, 1e-3);
    EXPECT_GT(d.r_squared, 0.999);
    EXPECT_EQ(d.n_q.back(), 29u);
    r.histogram_include_saturated = true;
    EXPECT_EQ(nq_distribution(r).n_q.back(), 30u);
}

TEST(NqDistribution, TooFewSamples)
{
    EnsembleResult r;
    r.n_max = 10;
    r.nq_histogram = {0, 0, 10, 5, 2, 1, 0, 0, 0, 0, 0};
    const auto d = nq_distribution(r);
    EXPECT_FALSE(d.fit_valid);
    EXPECT_NE(d.fit_note.find("samples"), std::string::npos);
}

TEST(ErrorEstimate, ComponentsAreFiniteAndSmall)
{
    auto c = small_config(32);
    const auto base = run_ensemble(c);
    const auto e = estimate_errors(c, 20, &base);
    EXPECT_DOUBLE_EQ(e.E_Nz, base.time_averaged_stderr());
    EXPECT_GT(e.E_dt, 0.0);
    EXPECT_LT(e.E_dt, 0.05);
    EXPECT_GE(e.E_N, 0.0);
    EXPECT_LT(e.E_N, 0.05);
    EXPECT_NEAR(e.total(), std::sqrt(e.E_Nz * e.E_Nz + e.E_dt * e.E_dt + e.E_N * e.E_N), 1e-15);
}
