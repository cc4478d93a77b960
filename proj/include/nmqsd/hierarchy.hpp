#ifndef NMQSD_HIERARCHY_HPP
#define NMQSD_HIERARCHY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "binomial.hpp"
#include "operator.hpp"

namespace nmqsd
{

enum class HierarchyMode
{
    full,         // adaptive order, trajectories rejected when the cap shell exceeds eps_tol
    bar_O_zero,   // no hierarchy, O-bar identically zero
    truncated     // adaptive order up to the cap, no tolerance rejection
};

struct HierarchyParams
{
    std::size_t n_max = 100;
    double eps_thres = 1e-8;
    double eps_tol = 1e-4;
    HierarchyMode mode = HierarchyMode::full;

    void validate() const
    {
        if(!(eps_thres >= 0.0)) throw std::invalid_argument("eps_thres must be >= 0");
        if(!(eps_thres < eps_tol)) throw std::invalid_argument("eps_thres must be < eps_tol");
        if(n_max > 400) throw std::invalid_argument("n_max must be <= 400");
    }
};

// Slots of the triangle {(n, m) : 0 <= m <= n, n + m <= n_max} laid out shell
// by shell (s = n + m ascending, then m ascending). The slots active at order
// N_Q are then a prefix of the layout.
namespace triangle
{
inline std::size_t shell_begin(std::size_t s)
{
    // sum_{j<s} (floor(j/2) + 1)
    return s == 0 ? 0 : s + ((s - 1) * (s - 1)) / 4;
}

inline std::size_t slot_count(std::size_t n_q) { return shell_begin(n_q + 1); }

inline std::size_t offset(std::size_t n, std::size_t m) { return shell_begin(n + m) + m; }

inline bool contains(long n, long m, std::size_t n_q)
{
    return n >= 0 && m >= 0 && m <= n && static_cast<std::size_t>(n + m) <= n_q;
}
}   // namespace triangle

class HierarchyState
{
public:
    HierarchyState(std::size_t dim, std::size_t n_max)
        : m_dim(dim), m_n_max(n_max), m_n_q(std::min<std::size_t>(1, n_max)),
          m_data(triangle::slot_count(n_max) * dim * dim, complex_t(0.0))
    {
        if(dim == 0) throw dimension_error("HierarchyState dimension must be positive.");
    }

    std::size_t dim() const { return m_dim; }
    std::size_t n_max() const { return m_n_max; }
    std::size_t n_q() const { return m_n_q; }
    std::size_t active_slots() const { return triangle::slot_count(m_n_q); }
    std::size_t slot_size() const { return m_dim * m_dim; }

    bool rejected() const { return m_rejected; }
    void mark_rejected() { m_rejected = true; }

    // Slots beyond the active prefix are always zero, so growing never needs
    // an explicit fill.
    void grow()
    {
        if(m_n_q >= m_n_max) throw std::logic_error("HierarchyState::grow past n_max");
        ++m_n_q;
    }

    void set_n_q(std::size_t n_q)
    {
        if(n_q > m_n_max) throw std::out_of_range("set_n_q beyond n_max");
        if(n_q < m_n_q)
        {
            std::fill(m_data.begin() + static_cast<std::ptrdiff_t>(triangle::slot_count(n_q) * slot_size()),
                      m_data.end(), complex_t(0.0));
        }
        m_n_q = n_q;
    }

    bool active(long n, long m) const { return triangle::contains(n, m, m_n_q); }

    // Q_m^{(n)}; zero for any index outside the active triangle.
    Operator get(long n, long m) const
    {
        if(!active(n, m)) return Operator::zero(m_dim);
        return Operator(m_dim, slot(triangle::offset(static_cast<std::size_t>(n), static_cast<std::size_t>(m))));
    }

    void set(std::size_t n, std::size_t m, const Operator& q)
    {
        if(!active(static_cast<long>(n), static_cast<long>(m)))
            throw std::out_of_range("HierarchyState::set outside active triangle (" + std::to_string(n) + ", " + std::to_string(m) + ")");
        if(q.dim() != m_dim) throw dimension_error("HierarchyState::set dimension mismatch");
        std::copy(q.entries().begin(), q.entries().end(), slot(triangle::offset(n, m)).begin());
    }

    std::span<complex_t> slot(std::size_t idx) { return {m_data.data() + idx * slot_size(), slot_size()}; }
    std::span<const complex_t> slot(std::size_t idx) const { return {m_data.data() + idx * slot_size(), slot_size()}; }

    std::span<complex_t> active_data() { return {m_data.data(), active_slots() * slot_size()}; }
    std::span<const complex_t> active_data() const { return {m_data.data(), active_slots() * slot_size()}; }

    // this += dt * derivative over the active prefix.
    void axpy(double dt, std::span<const complex_t> derivative)
    {
        auto dst = active_data();
        for(std::size_t i = 0; i < dst.size(); ++i) dst[i] += dt * derivative[i];
    }

private:
    std::size_t m_dim;
    std::size_t m_n_max;
    std::size_t m_n_q;
    bool m_rejected = false;
    std::vector<complex_t> m_data;
};

// Bit flags selecting groups of terms in the hierarchy evolution. The sum of
// all groups is the full right-hand side; single groups are exposed so the
// scaling of each group with the state can be checked separately.
enum TermGroup : unsigned
{
    term_source = 1u << 0,     // delta_{n,0} alpha(0) L
    term_feed_down = 1u << 1,  // (m/n') alpha(0) [L, Q_{m-1}^{(n-1)}] + ((n-m)/n') z [L, Q_m^{(n-1)}]
    term_damping = 1u << 2,    // -(m+1) gamma Q_m^{(n)}
    term_unitary = 1u << 3,    // -i [H, Q_m^{(n)}]
    term_nonlinear = 1u << 4,  // -sum_k sum_l w [L^dagger Q, Q]
    term_feed_up = 1u << 5,    // -(n+1) L^dagger Q_{m+1}^{(n+1)}
    term_all = (1u << 6) - 1
};

struct CommutatorTerm
{
    std::uint32_t a;   // slot of Q_{k-l}^{(k)}
    std::uint32_t b;   // slot of Q_{m-k+l}^{(n-k)}
    double weight;
};

struct SlotPlan
{
    std::uint32_t n;
    std::uint32_t m;
    std::int64_t down_alpha;   // slot of Q_{m-1}^{(n-1)} or -1
    std::int64_t down_noise;   // slot of Q_m^{(n-1)} or -1
    std::int64_t up;           // slot of Q_{m+1}^{(n+1)} or -1 (beyond n_max)
    double c_alpha;            // m / n'
    double c_noise;            // (n - m) / n'
    double c_damping;          // m + 1
    double c_up;               // n + 1
    std::uint32_t terms_begin;
    std::uint32_t terms_end;
};

// Index bookkeeping for the evolution kernel, built once per n_max and shared
// read-only between trajectories.
class KernelPlan
{
public:
    explicit KernelPlan(std::size_t n_max) : m_n_max(n_max)
    {
        const std::size_t nslots = triangle::slot_count(n_max);
        m_slots.reserve(nslots);
        for(std::size_t s = 0; s <= n_max; ++s)
            for(std::size_t m = 0; 2 * m <= s; ++m)
            {
                const std::size_t n = s - m;
                SlotPlan p{};
                p.n = static_cast<std::uint32_t>(n);
                p.m = static_cast<std::uint32_t>(m);
                const double nprime = static_cast<double>(std::max<std::size_t>(1, n));
                p.c_alpha = static_cast<double>(m) / nprime;
                p.c_noise = static_cast<double>(n - m) / nprime;
                p.c_damping = static_cast<double>(m + 1);
                p.c_up = static_cast<double>(n + 1);
                p.down_alpha = (n >= 1 && m >= 1) ? static_cast<std::int64_t>(triangle::offset(n - 1, m - 1)) : -1;
                p.down_noise = (n >= 1 && n - m >= 1) ? static_cast<std::int64_t>(triangle::offset(n - 1, m)) : -1;
                p.up = (s + 2 <= n_max) ? static_cast<std::int64_t>(triangle::offset(n + 1, m + 1)) : -1;
                p.terms_begin = static_cast<std::uint32_t>(m_terms.size());
                for(std::size_t k = 0; k <= n; ++k)
                {
                    const std::size_t la = k > m ? k - m : 0;
                    const std::size_t lb = std::min(k, n - m);
                    for(std::size_t l = la; l <= lb; ++l)
                    {
                        m_terms.push_back({static_cast<std::uint32_t>(triangle::offset(k, k - l)),
                                           static_cast<std::uint32_t>(triangle::offset(n - k, m - k + l)),
                                           binomial_weight(n, m, k, l)});
                    }
                }
                p.terms_end = static_cast<std::uint32_t>(m_terms.size());
                m_slots.push_back(p);
            }
    }

    std::size_t n_max() const { return m_n_max; }
    const std::vector<SlotPlan>& slots() const { return m_slots; }
    const std::vector<CommutatorTerm>& terms() const { return m_terms; }

    static std::shared_ptr<const KernelPlan> shared(std::size_t n_max)
    {
        static std::mutex mtx;
        static std::map<std::size_t, std::weak_ptr<const KernelPlan>> cache;
        std::lock_guard<std::mutex> lock(mtx);
        if(auto p = cache[n_max].lock()) return p;
        auto p = std::make_shared<const KernelPlan>(n_max);
        cache[n_max] = p;
        return p;
    }

private:
    std::size_t m_n_max;
    std::vector<SlotPlan> m_slots;
    std::vector<CommutatorTerm> m_terms;
};

namespace detail
{
inline complex_t cmul(complex_t a, complex_t b)
{
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}
}   // namespace detail

// Evaluates dQ_m^{(n)}/dt for every active slot. Holds the model operators and
// scratch space; one instance per trajectory.
class HierarchyKernel
{
public:
    HierarchyKernel(std::shared_ptr<const KernelPlan> plan, const Operator& H, const Operator& L, double alpha0, double gamma)
        : m_plan(std::move(plan)), m_H(H), m_L(L), m_Ldag(adjoint(L)), m_alpha0(alpha0), m_gamma(gamma)
    {
        H.require_same_dim(L);
    }

    const KernelPlan& plan() const { return *m_plan; }
    std::size_t dim() const { return m_L.dim(); }

    void evaluate(const HierarchyState& state, complex_t z_tilde_star, std::span<complex_t> out, unsigned groups = term_all)
    {
        if(state.dim() != dim()) throw dimension_error("HierarchyKernel: state dimension mismatch");
        if(state.n_max() > m_plan->n_max()) throw std::invalid_argument("HierarchyKernel: plan smaller than state");
        if(out.size() < state.active_data().size()) throw std::invalid_argument("HierarchyKernel: output too small");
        if(dim() == 2)
            evaluate_2x2(state, z_tilde_star, out, groups);
        else
            evaluate_generic(state, z_tilde_star, out, groups);
    }

private:
    // Per-slot precomputation for the 2x2 commutator [P, Q] with P = L^dagger Q_a:
    //   [P,Q]_00 = p01 q10 - q01 p10 = -[P,Q]_11
    //   [P,Q]_01 = q01 (p00 - p11) - p01 (q00 - q11)
    //   [P,Q]_10 = p10 (q00 - q11) - q10 (p00 - p11)
    struct LeftFactor
    {
        complex_t p01, p10, dp;
    };
    struct RightFactor
    {
        complex_t q01, q10, dq;
    };

    void evaluate_2x2(const HierarchyState& state, complex_t z, std::span<complex_t> out, unsigned groups)
    {
        using detail::cmul;
        const std::size_t nslots = state.active_slots();
        const std::size_t n_q = state.n_q();
        const complex_t* q = state.active_data().data();

        const complex_t l00 = m_L(0, 0), l01 = m_L(0, 1), l10 = m_L(1, 0), l11 = m_L(1, 1);
        const complex_t d00 = m_Ldag(0, 0), d01 = m_Ldag(0, 1), d10 = m_Ldag(1, 0), d11 = m_Ldag(1, 1);
        const complex_t h00 = m_H(0, 0), h01 = m_H(0, 1), h10 = m_H(1, 0), h11 = m_H(1, 1);

        m_P.resize(nslots * 4);
        m_left.resize(nslots);
        m_right.resize(nslots);
        for(std::size_t s = 0; s < nslots; ++s)
        {
            const complex_t* Q = q + 4 * s;
            complex_t* P = m_P.data() + 4 * s;
            P[0] = cmul(d00, Q[0]) + cmul(d01, Q[2]);
            P[1] = cmul(d00, Q[1]) + cmul(d01, Q[3]);
            P[2] = cmul(d10, Q[0]) + cmul(d11, Q[2]);
            P[3] = cmul(d10, Q[1]) + cmul(d11, Q[3]);
            m_left[s] = {P[1], P[2], P[0] - P[3]};
            m_right[s] = {Q[1], Q[2], Q[0] - Q[3]};
        }

        const auto& slots = m_plan->slots();
        const auto& terms = m_plan->terms();
        const complex_t minus_i(0.0, -1.0);

        for(std::size_t s = 0; s < nslots; ++s)
        {
            const SlotPlan& sp = slots[s];
            const complex_t* Q = q + 4 * s;
            complex_t r0 = 0.0, r1 = 0.0, r2 = 0.0, r3 = 0.0;

            if((groups & term_source) && sp.n == 0)
            {
                r0 += m_alpha0 * l00;
                r1 += m_alpha0 * l01;
                r2 += m_alpha0 * l10;
                r3 += m_alpha0 * l11;
            }

            if(groups & term_feed_down)
            {
                auto add_LQ_commutator = [&](const complex_t* A, complex_t c) {
                    // c [L, A]
                    const complex_t c00 = cmul(l00, A[0]) + cmul(l01, A[2]) - cmul(A[0], l00) - cmul(A[1], l10);
                    const complex_t c01 = cmul(l00, A[1]) + cmul(l01, A[3]) - cmul(A[0], l01) - cmul(A[1], l11);
                    const complex_t c10 = cmul(l10, A[0]) + cmul(l11, A[2]) - cmul(A[2], l00) - cmul(A[3], l10);
                    const complex_t c11 = cmul(l10, A[1]) + cmul(l11, A[3]) - cmul(A[2], l01) - cmul(A[3], l11);
                    r0 += cmul(c, c00);
                    r1 += cmul(c, c01);
                    r2 += cmul(c, c10);
                    r3 += cmul(c, c11);
                };
                if(sp.down_alpha >= 0) add_LQ_commutator(q + 4 * sp.down_alpha, sp.c_alpha * m_alpha0);
                if(sp.down_noise >= 0) add_LQ_commutator(q + 4 * sp.down_noise, sp.c_noise * z);
            }

            if(groups & term_damping)
            {
                const double c = -sp.c_damping * m_gamma;
                r0 += c * Q[0];
                r1 += c * Q[1];
                r2 += c * Q[2];
                r3 += c * Q[3];
            }

            if(groups & term_unitary)
            {
                const complex_t c00 = cmul(h00, Q[0]) + cmul(h01, Q[2]) - cmul(Q[0], h00) - cmul(Q[1], h10);
                const complex_t c01 = cmul(h00, Q[1]) + cmul(h01, Q[3]) - cmul(Q[0], h01) - cmul(Q[1], h11);
                const complex_t c10 = cmul(h10, Q[0]) + cmul(h11, Q[2]) - cmul(Q[2], h00) - cmul(Q[3], h10);
                const complex_t c11 = cmul(h10, Q[1]) + cmul(h11, Q[3]) - cmul(Q[2], h01) - cmul(Q[3], h11);
                r0 += cmul(minus_i, c00);
                r1 += cmul(minus_i, c01);
                r2 += cmul(minus_i, c10);
                r3 += cmul(minus_i, c11);
            }

            if(groups & term_nonlinear)
            {
                complex_t x00 = 0.0, x01 = 0.0, x10 = 0.0;
                const CommutatorTerm* t = terms.data() + sp.terms_begin;
                const CommutatorTerm* tend = terms.data() + sp.terms_end;
                for(; t != tend; ++t)
                {
                    const LeftFactor& A = m_left[t->a];
                    const RightFactor& B = m_right[t->b];
                    const double w = t->weight;
                    x00 += w * (cmul(A.p01, B.q10) - cmul(B.q01, A.p10));
                    x01 += w * (cmul(B.q01, A.dp) - cmul(A.p01, B.dq));
                    x10 += w * (cmul(A.p10, B.dq) - cmul(B.q10, A.dp));
                }
                r0 -= x00;
                r1 -= x01;
                r2 -= x10;
                r3 += x00;
            }

            if((groups & term_feed_up) && sp.up >= 0 && sp.n + sp.m + 2 <= n_q)
            {
                const complex_t* P = m_P.data() + 4 * sp.up;
                r0 -= sp.c_up * P[0];
                r1 -= sp.c_up * P[1];
                r2 -= sp.c_up * P[2];
                r3 -= sp.c_up * P[3];
            }

            complex_t* o = out.data() + 4 * s;
            o[0] = r0;
            o[1] = r1;
            o[2] = r2;
            o[3] = r3;
        }
    }

    void evaluate_generic(const HierarchyState& state, complex_t z, std::span<complex_t> out, unsigned groups)
    {
        const std::size_t nslots = state.active_slots();
        const std::size_t n_q = state.n_q();
        const std::size_t d = dim();

        std::vector<Operator> Q;
        std::vector<Operator> P;
        Q.reserve(nslots);
        P.reserve(nslots);
        for(std::size_t s = 0; s < nslots; ++s)
        {
            Q.emplace_back(d, state.slot(s));
            P.push_back(m_Ldag * Q.back());
        }

        const auto& slots = m_plan->slots();
        const auto& terms = m_plan->terms();
        for(std::size_t s = 0; s < nslots; ++s)
        {
            const SlotPlan& sp = slots[s];
            Operator r(d);
            if((groups & term_source) && sp.n == 0) r += m_alpha0 * m_L;
            if(groups & term_feed_down)
            {
                if(sp.down_alpha >= 0) r += (sp.c_alpha * m_alpha0) * commutator(m_L, Q[static_cast<std::size_t>(sp.down_alpha)]);
                if(sp.down_noise >= 0) r += (sp.c_noise * z) * commutator(m_L, Q[static_cast<std::size_t>(sp.down_noise)]);
            }
            if(groups & term_damping) r += complex_t(-sp.c_damping * m_gamma) * Q[s];
            if(groups & term_unitary) r += complex_t(0.0, -1.0) * commutator(m_H, Q[s]);
            if(groups & term_nonlinear)
            {
                for(std::uint32_t t = sp.terms_begin; t < sp.terms_end; ++t)
                    r -= complex_t(terms[t].weight) * commutator(P[terms[t].a], Q[terms[t].b]);
            }
            if((groups & term_feed_up) && sp.up >= 0 && sp.n + sp.m + 2 <= n_q)
                r -= complex_t(sp.c_up) * P[static_cast<std::size_t>(sp.up)];
            std::copy(r.entries().begin(), r.entries().end(), out.begin() + static_cast<std::ptrdiff_t>(s * d * d));
        }
    }

    std::shared_ptr<const KernelPlan> m_plan;
    Operator m_H;
    Operator m_L;
    Operator m_Ldag;
    double m_alpha0;
    double m_gamma;
    std::vector<complex_t> m_P;
    std::vector<LeftFactor> m_left;
    std::vector<RightFactor> m_right;
};

// Right-hand side of the hierarchy evolution for every active (n, m), returned
// in slot order (see triangle::offset).
inline std::vector<Operator> hierarchy_rhs(const HierarchyState& state, complex_t z_tilde_star, const Operator& H_sys,
                                           const Operator& L, double alpha0, double gamma, unsigned groups = term_all)
{
    if(state.rejected()) throw std::logic_error("hierarchy_rhs called on a rejected state");
    HierarchyKernel kernel(KernelPlan::shared(state.n_max()), H_sys, L, alpha0, gamma);
    std::vector<complex_t> flat(state.active_data().size());
    kernel.evaluate(state, z_tilde_star, flat, groups);
    std::vector<Operator> r;
    const std::size_t ss = state.slot_size();
    for(std::size_t s = 0; s < state.active_slots(); ++s)
        r.emplace_back(state.dim(), std::span<const complex_t>(flat.data() + s * ss, ss));
    return r;
}

// O-bar = sum_{n=0}^{N_Q} Q_0^{(n)}
inline Operator assemble_bar_O(const HierarchyState& state)
{
    Operator r(state.dim());
    for(std::size_t n = 0; n <= state.n_q(); ++n)
    {
        const auto q = state.slot(triangle::offset(n, 0));
        auto e = r.entries();
        for(std::size_t i = 0; i < e.size(); ++i) e[i] += q[i];
    }
    return r;
}

enum class OrderDecision
{
    keep,
    grow,
    reject
};

// Inspects the outermost shell n + m = N_Q after a tentative step. Non-finite
// entries anywhere in the active triangle reject unconditionally.
inline OrderDecision adapt_order(const HierarchyState& state, const HierarchyParams& params)
{
    if(params.mode == HierarchyMode::bar_O_zero) return OrderDecision::keep;

    for(const auto& v : state.active_data())
        if(!std::isfinite(v.real()) || !std::isfinite(v.imag())) return OrderDecision::reject;

    const std::size_t n_q = state.n_q();
    const auto begin = state.active_data().begin() + static_cast<std::ptrdiff_t>(triangle::shell_begin(n_q) * state.slot_size());
    double shell_max = 0.0;
    for(auto it = begin; it != state.active_data().end(); ++it) shell_max = std::max(shell_max, std::abs(*it));

    if(n_q < params.n_max) return shell_max > params.eps_thres ? OrderDecision::grow : OrderDecision::keep;
    if(params.mode == HierarchyMode::full && shell_max > params.eps_tol) return OrderDecision::reject;
    return OrderDecision::keep;
}

}   // namespace nmqsd

#endif  // NMQSD_HIERARCHY_HPP
