#ifndef NMQSD_ENSEMBLE_HPP
#define NMQSD_ENSEMBLE_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "noise.hpp"
#include "trajectory.hpp"

namespace nmqsd
{

class all_rejected_error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct EnsembleConfig
{
    ModelSpec model = ModelSpec::spin_boson();
    double gamma = 0.2;
    double gamma_Gamma = 0.2;
    double dt = 0.02;
    double t_final = 12.0;
    HierarchyParams hierarchy;
    TrajectoryOptions options;
    std::size_t n_traj = 8000;
    std::uint64_t master_seed = 0;
    std::size_t threads = 0;   // 0 = hardware concurrency
    bool histogram_include_saturated = false;

    // Optional override of the per-trajectory noise. Receives the trajectory
    // index and the default noise parameters for that index.
    std::function<NoisePath(std::size_t, const NoiseParams&)> noise_source;

    NoiseParams noise_params(std::size_t index) const
    {
        NoiseParams p;
        p.gamma = gamma;
        p.gamma_Gamma = gamma_Gamma;
        p.dt = dt;
        p.n_steps = step_count(dt, t_final);
        p.seed = stream_seed(master_seed, index);
        return p;
    }

    void validate() const
    {
        if(n_traj < 1) throw std::invalid_argument("n_traj must be >= 1");
        model.validate();
        noise_params(0).validate();
        hierarchy.validate();
        if(options.output_stride < 1) throw std::invalid_argument("output_stride must be >= 1");
    }
};

struct TrajectorySummary
{
    bool rejected = false;
    std::size_t final_n_q = 0;
    double reject_time = 0.0;
    double mean_abs_z_star = 0.0;
    double mean_abs_z_tilde_star = 0.0;
};

struct EnsembleResult
{
    std::vector<double> times;
    std::vector<double> mean_sigma_z;
    std::vector<double> stderr_sigma_z;
    std::vector<Operator> rho;
    std::size_t n_report = 0;
    std::vector<double> mean_q_trace_norms;   // (n_report + 1) per output time
    std::vector<std::size_t> nq_histogram;    // final N_Q counts over accepted trajectories, index = N_Q
    std::size_t n_max = 0;
    std::size_t total_count = 0;
    std::size_t accepted_count = 0;
    std::size_t rejected_count = 0;
    double rejection_rate = 0.0;
    double mean_final_n_q = 0.0;
    std::vector<TrajectorySummary> trajectories;
    double wall_seconds = 0.0;
    bool histogram_include_saturated = false;
    std::map<std::string, std::string> metadata;

    double mean_q_trace_norm(std::size_t t_index, std::size_t n) const { return mean_q_trace_norms[t_index * (n_report + 1) + n]; }

    // Ensemble sampling error averaged over the output times.
    double time_averaged_stderr() const
    {
        if(stderr_sigma_z.empty()) return 0.0;
        double s = 0.0;
        for(double e : stderr_sigma_z) s += e;
        return s / static_cast<double>(stderr_sigma_z.size());
    }

    double time_average(double t_lo, double t_hi) const
    {
        double s = 0.0;
        std::size_t c = 0;
        for(std::size_t i = 0; i < times.size(); ++i)
            if(times[i] >= t_lo - 1e-12 && times[i] <= t_hi + 1e-12)
            {
                s += mean_sigma_z[i];
                ++c;
            }
        return c ? s / static_cast<double>(c) : 0.0;
    }

    double time_averaged_stderr(double t_lo, double t_hi) const
    {
        double s = 0.0;
        std::size_t c = 0;
        for(std::size_t i = 0; i < times.size(); ++i)
            if(times[i] >= t_lo - 1e-12 && times[i] <= t_hi + 1e-12)
            {
                s += stderr_sigma_z[i];
                ++c;
            }
        return c ? s / static_cast<double>(c) : 0.0;
    }
};

namespace detail
{
// Partial sums for one contiguous block of trajectory indices. Blocks have a
// fixed size independent of the worker count and are merged in index order,
// so the floating-point result does not depend on scheduling.
struct BlockSums
{
    std::vector<double> sa, sb, saa, sbb, sab;   // a = w <obs>, b = w with w = ||psi||^2
    std::vector<complex_t> rho;
    std::vector<double> qnorm;
    std::size_t accepted = 0;

    void init(std::size_t n_out, std::size_t dim2, std::size_t n_orders)
    {
        sa.assign(n_out, 0.0);
        sb.assign(n_out, 0.0);
        saa.assign(n_out, 0.0);
        sbb.assign(n_out, 0.0);
        sab.assign(n_out, 0.0);
        rho.assign(n_out * dim2, complex_t(0.0));
        qnorm.assign(n_out * n_orders, 0.0);
    }

    void add(const TrajectoryResult& r)
    {
        for(std::size_t t = 0; t < sa.size(); ++t)
        {
            const double w = r.norm_squared[t];
            const double a = w * r.sigma_z[t];
            sa[t] += a;
            sb[t] += w;
            saa[t] += a * a;
            sbb[t] += w * w;
            sab[t] += a * w;
        }
        const std::size_t dim2 = rho.size() / sa.size();
        for(std::size_t k = 0; k < rho.size(); ++k) rho[k] += r.norm_squared[k / dim2] * r.rho[k];
        for(std::size_t k = 0; k < qnorm.size(); ++k) qnorm[k] += r.q_trace_norms[k];
        ++accepted;
    }

    void merge(const BlockSums& o)
    {
        for(std::size_t t = 0; t < sa.size(); ++t)
        {
            sa[t] += o.sa[t];
            sb[t] += o.sb[t];
            saa[t] += o.saa[t];
            sbb[t] += o.sbb[t];
            sab[t] += o.sab[t];
        }
        for(std::size_t k = 0; k < rho.size(); ++k) rho[k] += o.rho[k];
        for(std::size_t k = 0; k < qnorm.size(); ++k) qnorm[k] += o.qnorm[k];
        accepted += o.accepted;
    }
};

inline constexpr std::size_t ensemble_block_size = 32;
}   // namespace detail

// Runs n_traj independent trajectories, trajectory i seeded by
// stream_seed(master_seed, i). Rejected trajectories keep their seed slot and
// are excluded from every average.
inline EnsembleResult run_ensemble(const EnsembleConfig& config)
{
    config.validate();
    const auto wall_start = std::chrono::steady_clock::now();

    const NoiseParams base_noise = config.noise_params(0);
    const std::size_t n_steps = base_noise.n_steps;
    const std::size_t n_out = n_steps / config.options.output_stride + 1;
    const std::size_t dim = config.model.H_sys.dim();
    const std::size_t n_orders = config.options.n_report + 1;

    std::shared_ptr<const KernelPlan> plan;
    if(config.hierarchy.mode != HierarchyMode::bar_O_zero) plan = KernelPlan::shared(config.hierarchy.n_max);
    const TrajectoryIntegrator integrator(config.model, base_noise, config.hierarchy, config.options, plan);

    const std::size_t n_blocks = (config.n_traj + detail::ensemble_block_size - 1) / detail::ensemble_block_size;
    std::vector<detail::BlockSums> blocks(n_blocks);
    std::vector<TrajectorySummary> summaries(config.n_traj);

    std::atomic<std::size_t> next_block{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&]() {
        try
        {
            for(;;)
            {
                const std::size_t b = next_block.fetch_add(1);
                if(b >= n_blocks) return;
                auto& sums = blocks[b];
                sums.init(n_out, dim * dim, n_orders);
                const std::size_t lo = b * detail::ensemble_block_size;
                const std::size_t hi = std::min(config.n_traj, lo + detail::ensemble_block_size);
                for(std::size_t i = lo; i < hi; ++i)
                {
                    const NoiseParams np = config.noise_params(i);
                    NoisePath path = config.noise_source ? config.noise_source(i, np) : sample_path(np);
                    const TrajectoryResult r = integrator.run(path);
                    summaries[i] = {r.rejected, r.final_n_q, r.reject_time, r.mean_abs_z_star, r.mean_abs_z_tilde_star};
                    if(r.rejected) continue;
                    if(r.output_count() != n_out) throw std::logic_error("trajectory output grid mismatch");
                    sums.add(r);
                }
            }
        }
        catch(...)
        {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if(!failure) failure = std::current_exception();
            next_block.store(n_blocks);
        }
    };

    std::size_t n_threads = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
    n_threads = std::min(n_threads, n_blocks);
    if(n_threads <= 1)
        worker();
    else
    {
        std::vector<std::thread> pool;
        for(std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for(auto& th : pool) th.join();
    }
    if(failure) std::rethrow_exception(failure);

    EnsembleResult res;
    res.n_report = config.options.n_report;
    res.n_max = config.hierarchy.mode == HierarchyMode::bar_O_zero ? 0 : config.hierarchy.n_max;
    res.total_count = config.n_traj;
    res.trajectories = std::move(summaries);
    res.histogram_include_saturated = config.histogram_include_saturated;
    for(const auto& s : res.trajectories)
        if(s.rejected) ++res.rejected_count;
    res.accepted_count = res.total_count - res.rejected_count;
    res.rejection_rate = static_cast<double>(res.rejected_count) / static_cast<double>(res.total_count);

    if(res.accepted_count == 0)
        throw all_rejected_error("all " + std::to_string(res.total_count) + " trajectories were rejected (n_max=" +
                                 std::to_string(config.hierarchy.n_max) + ", eps_tol=" + std::to_string(config.hierarchy.eps_tol) +
                                 "); increase n_max or reduce the coupling");

    detail::BlockSums total;
    total.init(n_out, dim * dim, n_orders);
    for(const auto& b : blocks) total.merge(b);

    const double N = static_cast<double>(total.accepted);
    res.times.resize(n_out);
    for(std::size_t t = 0; t < n_out; ++t) res.times[t] = static_cast<double>(t * config.options.output_stride) * config.dt;
    res.mean_sigma_z.resize(n_out);
    res.stderr_sigma_z.resize(n_out);
    for(std::size_t t = 0; t < n_out; ++t)
    {
        // Ratio estimator sum(a)/sum(b); in nonlinear mode b = 1 and this is the
        // plain mean with the sample standard error.
        const double r = total.sa[t] / total.sb[t];
        res.mean_sigma_z[t] = r;
        if(total.accepted > 1)
        {
            const double mean_b = total.sb[t] / N;
            double var = (total.saa[t] - 2.0 * r * total.sab[t] + r * r * total.sbb[t]) / (N - 1.0);
            var = std::max(0.0, var);
            res.stderr_sigma_z[t] = std::sqrt(var / N) / mean_b;
        }
        else
            res.stderr_sigma_z[t] = 0.0;
    }

    res.rho.reserve(n_out);
    for(std::size_t t = 0; t < n_out; ++t)
    {
        Operator rho(dim);
        auto e = rho.entries();
        for(std::size_t k = 0; k < dim * dim; ++k) e[k] = total.rho[t * dim * dim + k] / total.sb[t];
        res.rho.push_back(rho);
    }

    res.mean_q_trace_norms.resize(total.qnorm.size());
    for(std::size_t k = 0; k < total.qnorm.size(); ++k) res.mean_q_trace_norms[k] = total.qnorm[k] / N;

    res.nq_histogram.assign(res.n_max + 1, 0);
    double nq_sum = 0.0;
    for(const auto& s : res.trajectories)
        if(!s.rejected)
        {
            ++res.nq_histogram[s.final_n_q];
            nq_sum += static_cast<double>(s.final_n_q);
        }
    res.mean_final_n_q = nq_sum / N;

    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return res;
}

struct NqDistribution
{
    std::vector<std::size_t> n_q;     // bin values
    std::vector<std::size_t> count;
    std::vector<double> density;      // count / included total (unit bin width)
    std::size_t included = 0;
    std::size_t mode = 0;
    bool fit_valid = false;
    std::string fit_note;
    double rate = 0.0;                // P(N_Q) ~ exp(-rate N_Q) over the tail
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t tail_points = 0;
};

// Histogram of the final N_Q over accepted trajectories with a least-squares
// fit of log P over the tail (mode upward, non-empty bins). Saturated
// trajectories (N_Q = n_max) are excluded unless the result says otherwise.
inline NqDistribution nq_distribution(const EnsembleResult& result, std::size_t min_samples = 100)
{
    NqDistribution d;
    std::size_t upper = result.nq_histogram.size();
    if(!result.histogram_include_saturated && upper > 0 && result.n_max > 0) upper = result.n_max;
    for(std::size_t v = 0; v < upper && v < result.nq_histogram.size(); ++v)
        if(result.nq_histogram[v] > 0)
        {
            d.n_q.push_back(v);
            d.count.push_back(result.nq_histogram[v]);
            d.included += result.nq_histogram[v];
        }
    for(auto c : d.count) d.density.push_back(static_cast<double>(c) / static_cast<double>(std::max<std::size_t>(1, d.included)));
    if(d.count.empty())
    {
        d.fit_note = "empty histogram";
        return d;
    }
    const auto mode_it = std::max_element(d.count.begin(), d.count.end());
    const std::size_t mode_idx = static_cast<std::size_t>(mode_it - d.count.begin());
    d.mode = d.n_q[mode_idx];

    if(d.count.size() == 1)
    {
        d.fit_note = "degenerate histogram (single bin); fit skipped";
        return d;
    }
    if(d.included < min_samples)
    {
        d.fit_note = "fewer than " + std::to_string(min_samples) + " samples; fit skipped";
        return d;
    }
    const std::size_t npts = d.n_q.size() - mode_idx;
    if(npts < 3)
    {
        d.fit_note = "fewer than 3 tail bins; fit skipped";
        return d;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for(std::size_t i = mode_idx; i < d.n_q.size(); ++i)
    {
        const double x = static_cast<double>(d.n_q[i]);
        const double yv = std::log(d.density[i]);
        sx += x;
        sy += yv;
        sxx += x * x;
        sxy += x * yv;
    }
    const double n = static_cast<double>(npts);
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double icpt = (sy - slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double ymean = sy / n;
    for(std::size_t i = mode_idx; i < d.n_q.size(); ++i)
    {
        const double x = static_cast<double>(d.n_q[i]);
        const double yv = std::log(d.density[i]);
        ss_res += (yv - (icpt + slope * x)) * (yv - (icpt + slope * x));
        ss_tot += (yv - ymean) * (yv - ymean);
    }
    d.rate = -slope;
    d.intercept = icpt;
    d.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    d.tail_points = npts;
    d.fit_valid = true;
    return d;
}

struct ErrorEstimate
{
    double E_Nz = 0.0;
    double E_dt = 0.0;
    double E_N = 0.0;
    std::size_t compare_n_max = 0;

    double total() const { return std::sqrt(E_Nz * E_Nz + E_dt * E_dt + E_N * E_N); }
};

namespace detail
{
inline double mean_abs_difference(const EnsembleResult& a, const EnsembleResult& b, std::size_t stride_b)
{
    double s = 0.0;
    std::size_t c = 0;
    for(std::size_t i = 0; i < a.times.size(); ++i)
    {
        const std::size_t j = i * stride_b;
        if(j >= b.times.size()) break;
        s += std::abs(a.mean_sigma_z[i] - b.mean_sigma_z[j]);
        ++c;
    }
    return c ? s / static_cast<double>(c) : 0.0;
}
}   // namespace detail

// Three-part error budget for a configuration:
//   E_Nz  time-averaged standard error of the ensemble mean,
//   E_dt  time-averaged |difference| against a run at dt/2 on bridge-refined copies of the same noise,
//   E_N   time-averaged |difference| against a run at a smaller cap compare_n_max on the same noise.
inline ErrorEstimate estimate_errors(const EnsembleConfig& config, std::size_t compare_n_max, const EnsembleResult* base_result = nullptr)
{
    ErrorEstimate e;
    EnsembleResult own;
    if(!base_result)
    {
        own = run_ensemble(config);
        base_result = &own;
    }
    e.E_Nz = base_result->time_averaged_stderr();

    EnsembleConfig fine = config;
    fine.dt = 0.5 * config.dt;
    fine.options.output_stride = config.options.output_stride;
    fine.noise_source = [&config](std::size_t i, const NoiseParams&) {
        const NoiseParams coarse_params = config.noise_params(i);
        const NoisePath coarse = config.noise_source ? config.noise_source(i, coarse_params) : sample_path(coarse_params);
        return refine_path(coarse, coarse_params, stream_seed(config.master_seed, i, 0x5EF1E));
    };
    const EnsembleResult fine_result = run_ensemble(fine);
    e.E_dt = detail::mean_abs_difference(*base_result, fine_result, 2);

    e.compare_n_max = compare_n_max;
    if(config.hierarchy.mode != HierarchyMode::bar_O_zero && compare_n_max != config.hierarchy.n_max)
    {
        EnsembleConfig reduced = config;
        reduced.hierarchy.n_max = compare_n_max;
        const EnsembleResult reduced_result = run_ensemble(reduced);
        e.E_N = detail::mean_abs_difference(*base_result, reduced_result, 1);
    }
    return e;
}

}   // namespace nmqsd

#endif  // NMQSD_ENSEMBLE_HPP
