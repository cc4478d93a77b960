#ifndef NMQSD_TRAJECTORY_HPP
#define NMQSD_TRAJECTORY_HPP

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "hierarchy.hpp"
#include "noise.hpp"
#include "operator.hpp"

namespace nmqsd
{

enum class CouplingMode
{
    sigma_x,
    sigma_minus
};

enum class Evolution
{
    nonlinear,   // norm-conserving equation driven by the shifted noise
    linear       // unnormalized equation driven by z*, validation only
};

struct ModelSpec
{
    double omega = 1.0;
    Operator H_sys = 0.5 * pauli::z();
    Operator L = pauli::x();
    StateVector psi0{1.0, 0.0};
    Operator observable = pauli::z();

    static ModelSpec spin_boson(double omega = 1.0, CouplingMode coupling = CouplingMode::sigma_x)
    {
        ModelSpec m;
        m.omega = omega;
        m.H_sys = (0.5 * omega) * pauli::z();
        m.L = coupling == CouplingMode::sigma_x ? pauli::x() : pauli::minus();
        return m;
    }

    void validate() const
    {
        H_sys.require_same_dim(L);
        H_sys.require_same_dim(observable);
        if(psi0.dim() != H_sys.dim()) throw dimension_error("psi0 dimension does not match H_sys");
        if(!is_hermitian(H_sys, 1e-12)) throw std::invalid_argument("H_sys must be Hermitian");
        if(std::abs(psi0.norm_squared() - 1.0) > 1e-9) throw std::invalid_argument("psi0 must be normalized");
    }
};

struct TrajectoryOptions
{
    Evolution evolution = Evolution::nonlinear;
    std::size_t output_stride = 1;
    std::size_t n_report = 12;   // orders 0..n_report of ||Q_0^{(n)}|| recorded
};

struct TrajectoryResult
{
    std::vector<double> times;
    std::vector<double> sigma_z;            // <observable>, normalized by ||psi||^2
    std::vector<double> norm_squared;       // 1 in nonlinear mode
    std::vector<complex_t> rho;             // |psi><psi| / ||psi||^2, dim^2 entries per output time
    std::vector<std::size_t> n_q_series;
    std::vector<double> q_trace_norms;      // (n_report + 1) entries per output time
    std::size_t n_report = 0;
    std::size_t dim = 2;
    bool rejected = false;
    double reject_time = 0.0;
    std::size_t final_n_q = 0;
    double mean_abs_z_star = 0.0;
    double mean_abs_z_tilde_star = 0.0;

    std::size_t output_count() const { return times.size(); }
};

inline complex_t expectation_unnormalized(const Operator& A, const StateVector& psi) { return inner(psi, A * psi); }

// -iH psi + (L - <L>) z~* psi - [(L^dag - <L^dag>) Obar - <(L^dag - <L^dag>) Obar>] psi,
// expectations taken in psi (assumed normalized).
inline StateVector nonlinear_rhs(const StateVector& psi, const Operator& bar_O, complex_t z_tilde_star, const ModelSpec& model)
{
    const std::size_t d = psi.dim();
    const Operator Ldag = adjoint(model.L);
    const complex_t eL = expectation(model.L, psi);
    const complex_t eLdag = expectation(Ldag, psi);

    Operator centered_Ldag = Ldag;
    for(std::size_t i = 0; i < d; ++i) centered_Ldag(i, i) -= eLdag;
    const Operator A = centered_Ldag * bar_O;
    const StateVector Apsi = A * psi;
    const complex_t eA = inner(psi, Apsi);

    const StateVector Hpsi = model.H_sys * psi;
    const StateVector Lpsi = model.L * psi;
    StateVector r(d);
    for(std::size_t i = 0; i < d; ++i)
        r[i] = complex_t(0.0, -1.0) * Hpsi[i] + z_tilde_star * (Lpsi[i] - eL * psi[i]) - (Apsi[i] - eA * psi[i]);
    return r;
}

// -iH psi + L z* psi - L^dag Obar psi
inline StateVector linear_rhs(const StateVector& psi, const Operator& bar_O, complex_t z_star, const ModelSpec& model)
{
    const std::size_t d = psi.dim();
    const StateVector Hpsi = model.H_sys * psi;
    const StateVector Lpsi = model.L * psi;
    const StateVector LdOpsi = (adjoint(model.L) * bar_O) * psi;
    StateVector r(d);
    for(std::size_t i = 0; i < d; ++i) r[i] = complex_t(0.0, -1.0) * Hpsi[i] + z_star * Lpsi[i] - LdOpsi[i];
    return r;
}

inline std::size_t step_count(double dt, double t_final)
{
    if(!(dt > 0.0) || !(t_final > 0.0)) throw std::invalid_argument("dt and t_final must be > 0");
    const double r = t_final / dt;
    const auto n = static_cast<std::size_t>(std::llround(r));
    if(n < 1 || std::abs(r - static_cast<double>(n)) > 1e-9 * std::max(1.0, r))
        throw std::invalid_argument("t_final must be a positive integer multiple of dt");
    return n;
}

// Explicit Euler integration of the state, the noise shift y and the
// hierarchy on one grid. A step that asks the hierarchy to grow is recomputed
// from the pre-step state at the higher order; a reject decision (or any
// non-finite value) ends the trajectory and marks it rejected.
class TrajectoryIntegrator
{
public:
    TrajectoryIntegrator(ModelSpec model, NoiseParams noise, HierarchyParams hier, TrajectoryOptions options = {},
                         std::shared_ptr<const KernelPlan> plan = nullptr)
        : m_model(std::move(model)), m_noise(noise), m_hier(hier), m_options(options), m_plan(std::move(plan))
    {
        m_model.validate();
        m_noise.validate();
        m_hier.validate();
        if(m_options.output_stride < 1) throw std::invalid_argument("output_stride must be >= 1");
        if(uses_hierarchy() && !m_plan) m_plan = KernelPlan::shared(m_hier.n_max);
    }

    bool uses_hierarchy() const { return m_hier.mode != HierarchyMode::bar_O_zero; }

    TrajectoryResult run(NoisePath& path) const
    {
        const std::size_t n_steps = m_noise.n_steps;
        if(path.n_steps() < n_steps) throw std::invalid_argument("noise path shorter than the integration grid");
        if(std::abs(path.dt - m_noise.dt) > 1e-12 * m_noise.dt) throw std::invalid_argument("noise path dt does not match");

        const bool nonlinear = m_options.evolution == Evolution::nonlinear;
        const double dt = m_noise.dt;
        const std::size_t d = m_model.H_sys.dim();
        const Operator Ldag = adjoint(m_model.L);

        TrajectoryResult res;
        res.n_report = m_options.n_report;
        res.dim = d;

        StateVector psi = m_model.psi0;
        complex_t y = 0.0;
        path.set_shift(0, y);

        HierarchyState state(d, uses_hierarchy() ? m_hier.n_max : 0);
        HierarchyState trial = state;
        std::optional<HierarchyKernel> kernel;
        std::vector<complex_t> deriv;
        if(uses_hierarchy())
        {
            kernel.emplace(m_plan, m_model.H_sys, m_model.L, m_noise.alpha0(), m_noise.gamma);
            deriv.resize(triangle::slot_count(m_hier.n_max) * d * d);
        }

        auto record = [&](std::size_t step) {
            const double n2 = psi.norm_squared();
            res.times.push_back(static_cast<double>(step) * dt);
            res.norm_squared.push_back(n2);
            res.sigma_z.push_back(expectation_unnormalized(m_model.observable, psi).real() / n2);
            const Operator rho = outer(psi, psi);
            for(const auto& v : rho.entries()) res.rho.push_back(v / n2);
            res.n_q_series.push_back(uses_hierarchy() ? state.n_q() : 0);
            for(std::size_t n = 0; n <= m_options.n_report; ++n)
                res.q_trace_norms.push_back(uses_hierarchy() && n <= state.n_q() ? trace_norm(state.get(static_cast<long>(n), 0)) : 0.0);
        };

        record(0);
        double sum_abs_z = 0.0, sum_abs_zt = 0.0;
        std::size_t steps_done = 0;

        for(std::size_t i = 0; i < n_steps; ++i)
        {
            const complex_t z_drive = nonlinear ? path.z_tilde_star[i] : path.z_star[i];
            sum_abs_z += std::abs(path.z_star[i]);
            sum_abs_zt += std::abs(path.z_tilde_star[i]);
            ++steps_done;

            const Operator bar_O = uses_hierarchy() ? assemble_bar_O(state) : Operator::zero(d);
            const StateVector dpsi = nonlinear ? nonlinear_rhs(psi, bar_O, z_drive, m_model) : linear_rhs(psi, bar_O, z_drive, m_model);
            const complex_t y_next = nonlinear ? advance_shift(y, expectation(Ldag, psi), m_noise) : complex_t(0.0);

            if(uses_hierarchy())
            {
                OrderDecision decision = OrderDecision::keep;
                for(;;)
                {
                    kernel->evaluate(state, z_drive, deriv);
                    trial.set_n_q(state.n_q());
                    auto src = state.active_data();
                    auto dst = trial.active_data();
                    for(std::size_t k = 0; k < dst.size(); ++k) dst[k] = src[k] + dt * deriv[k];
                    decision = adapt_order(trial, m_hier);
                    if(decision != OrderDecision::grow) break;
                    state.grow();
                }
                if(decision == OrderDecision::reject)
                {
                    reject(res, state, static_cast<double>(i + 1) * dt);
                    break;
                }
            }

            StateVector psi_next = psi + complex_t(dt) * dpsi;
            if(!psi_next.is_finite() || !std::isfinite(y_next.real()) || !std::isfinite(y_next.imag()) || !(psi_next.norm() > 0.0))
            {
                reject(res, state, static_cast<double>(i + 1) * dt);
                break;
            }
            if(nonlinear) psi_next.normalize();
            psi = std::move(psi_next);
            y = y_next;
            if(i + 1 < path.z_star.size()) path.set_shift(i + 1, y);
            if(uses_hierarchy()) std::swap(state, trial);

            if((i + 1) % m_options.output_stride == 0) record(i + 1);
        }

        if(!res.rejected) res.final_n_q = uses_hierarchy() ? state.n_q() : 0;
        if(steps_done > 0)
        {
            res.mean_abs_z_star = sum_abs_z / static_cast<double>(steps_done);
            res.mean_abs_z_tilde_star = sum_abs_zt / static_cast<double>(steps_done);
        }
        return res;
    }

private:
    static void reject(TrajectoryResult& res, const HierarchyState& state, double t)
    {
        res.rejected = true;
        res.reject_time = t;
        res.final_n_q = state.n_q();
    }

    ModelSpec m_model;
    NoiseParams m_noise;
    HierarchyParams m_hier;
    TrajectoryOptions m_options;
    std::shared_ptr<const KernelPlan> m_plan;
};

inline TrajectoryResult run_trajectory(const ModelSpec& model, NoiseParams noise, const HierarchyParams& hier, double dt,
                                       double t_final, const TrajectoryOptions& options = {})
{
    noise.dt = dt;
    noise.n_steps = step_count(dt, t_final);
    NoisePath path = sample_path(noise);
    return TrajectoryIntegrator(model, noise, hier, options).run(path);
}

inline TrajectoryResult run_trajectory(const ModelSpec& model, NoiseParams noise, const HierarchyParams& hier, double dt,
                                       double t_final, NoisePath& path, const TrajectoryOptions& options = {})
{
    noise.dt = dt;
    noise.n_steps = step_count(dt, t_final);
    return TrajectoryIntegrator(model, noise, hier, options).run(path);
}

}   // namespace nmqsd

#endif  // NMQSD_TRAJECTORY_HPP
