#ifndef NMQSD_OPERATOR_HPP
#define NMQSD_OPERATOR_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

namespace nmqsd
{

using complex_t = std::complex<double>;

class dimension_error : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// Dense square complex matrix, row-major. Small by construction (2x2 for the
// spin-boson model) so everything is stored inline in one vector.
class Operator
{
public:
    Operator() : Operator(2) {}

    explicit Operator(std::size_t dim) : m_dim(dim), m_data(dim * dim)
    {
        if(dim == 0) throw dimension_error("Operator dimension must be positive.");
    }

    Operator(std::size_t dim, std::initializer_list<complex_t> entries) : Operator(dim)
    {
        if(entries.size() != dim * dim) throw dimension_error("Operator initializer has wrong number of entries.");
        std::copy(entries.begin(), entries.end(), m_data.begin());
    }

    Operator(std::size_t dim, std::span<const complex_t> entries) : Operator(dim)
    {
        if(entries.size() != dim * dim) throw dimension_error("Operator entry span has wrong length.");
        std::copy(entries.begin(), entries.end(), m_data.begin());
    }

    static Operator zero(std::size_t dim) { return Operator(dim); }

    static Operator identity(std::size_t dim)
    {
        Operator r(dim);
        for(std::size_t i = 0; i < dim; ++i) r(i, i) = 1.0;
        return r;
    }

    std::size_t dim() const { return m_dim; }

    complex_t& operator()(std::size_t row, std::size_t col) { return m_data[row * m_dim + col]; }
    const complex_t& operator()(std::size_t row, std::size_t col) const { return m_data[row * m_dim + col]; }

    std::span<complex_t> entries() { return m_data; }
    std::span<const complex_t> entries() const { return m_data; }

    Operator& operator+=(const Operator& o)
    {
        require_same_dim(o);
        for(std::size_t i = 0; i < m_data.size(); ++i) m_data[i] += o.m_data[i];
        return *this;
    }

    Operator& operator-=(const Operator& o)
    {
        require_same_dim(o);
        for(std::size_t i = 0; i < m_data.size(); ++i) m_data[i] -= o.m_data[i];
        return *this;
    }

    Operator& operator*=(complex_t s)
    {
        for(auto& v : m_data) v *= s;
        return *this;
    }

    friend Operator operator+(Operator a, const Operator& b) { return a += b; }
    friend Operator operator-(Operator a, const Operator& b) { return a -= b; }
    friend Operator operator-(Operator a) { return a *= -1.0; }
    friend Operator operator*(Operator a, complex_t s) { return a *= s; }
    friend Operator operator*(complex_t s, Operator a) { return a *= s; }

    friend Operator operator*(const Operator& a, const Operator& b)
    {
        a.require_same_dim(b);
        const std::size_t d = a.m_dim;
        Operator r(d);
        for(std::size_t i = 0; i < d; ++i)
            for(std::size_t k = 0; k < d; ++k)
            {
                const complex_t aik = a(i, k);
                for(std::size_t j = 0; j < d; ++j) r(i, j) += aik * b(k, j);
            }
        return r;
    }

    friend bool operator==(const Operator& a, const Operator& b) = default;

    double max_abs() const
    {
        double r = 0.0;
        for(const auto& v : m_data) r = std::max(r, std::abs(v));
        return r;
    }

    bool is_finite() const
    {
        return std::all_of(m_data.begin(), m_data.end(),
                           [](const complex_t& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
    }

    void require_same_dim(const Operator& o) const
    {
        if(o.m_dim != m_dim)
            throw dimension_error("Operator dimension mismatch: " + std::to_string(m_dim) + " vs " + std::to_string(o.m_dim) + ".");
    }

private:
    std::size_t m_dim;
    std::vector<complex_t> m_data;
};

class StateVector
{
public:
    StateVector() : StateVector(2) {}

    explicit StateVector(std::size_t dim) : m_amp(dim)
    {
        if(dim == 0) throw dimension_error("StateVector dimension must be positive.");
    }

    StateVector(std::initializer_list<complex_t> amps) : m_amp(amps)
    {
        if(m_amp.empty()) throw dimension_error("StateVector dimension must be positive.");
    }

    std::size_t dim() const { return m_amp.size(); }

    complex_t& operator[](std::size_t i) { return m_amp[i]; }
    const complex_t& operator[](std::size_t i) const { return m_amp[i]; }

    std::span<complex_t> amplitudes() { return m_amp; }
    std::span<const complex_t> amplitudes() const { return m_amp; }

    double norm_squared() const
    {
        double r = 0.0;
        for(const auto& a : m_amp) r += std::norm(a);
        return r;
    }

    double norm() const { return std::sqrt(norm_squared()); }

    void normalize()
    {
        const double n = norm();
        if(!(n > 0.0)) throw std::domain_error("Cannot normalize a zero or non-finite state.");
        for(auto& a : m_amp) a /= n;
    }

    bool is_finite() const
    {
        return std::all_of(m_amp.begin(), m_amp.end(),
                           [](const complex_t& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
    }

    StateVector& operator+=(const StateVector& o)
    {
        require_same_dim(o);
        for(std::size_t i = 0; i < m_amp.size(); ++i) m_amp[i] += o.m_amp[i];
        return *this;
    }

    StateVector& operator*=(complex_t s)
    {
        for(auto& a : m_amp) a *= s;
        return *this;
    }

    friend StateVector operator+(StateVector a, const StateVector& b) { return a += b; }
    friend StateVector operator*(StateVector a, complex_t s) { return a *= s; }
    friend StateVector operator*(complex_t s, StateVector a) { return a *= s; }

    friend StateVector operator*(const Operator& A, const StateVector& psi)
    {
        if(A.dim() != psi.dim()) throw dimension_error("Operator/state dimension mismatch.");
        StateVector r(psi.dim());
        for(std::size_t i = 0; i < psi.dim(); ++i)
            for(std::size_t j = 0; j < psi.dim(); ++j) r.m_amp[i] += A(i, j) * psi.m_amp[j];
        return r;
    }

    friend bool operator==(const StateVector& a, const StateVector& b) = default;

    void require_same_dim(const StateVector& o) const
    {
        if(o.dim() != dim()) throw dimension_error("StateVector dimension mismatch.");
    }

private:
    std::vector<complex_t> m_amp;
};

inline Operator commutator(const Operator& A, const Operator& B)
{
    A.require_same_dim(B);
    return A * B - B * A;
}

inline Operator adjoint(const Operator& A)
{
    Operator r(A.dim());
    for(std::size_t i = 0; i < A.dim(); ++i)
        for(std::size_t j = 0; j < A.dim(); ++j) r(j, i) = std::conj(A(i, j));
    return r;
}

inline complex_t inner(const StateVector& a, const StateVector& b)
{
    a.require_same_dim(b);
    complex_t r = 0.0;
    for(std::size_t i = 0; i < a.dim(); ++i) r += std::conj(a[i]) * b[i];
    return r;
}

// <psi|A|psi>. Does not renormalize; callers pass normalized states.
inline complex_t expectation(const Operator& A, const StateVector& psi)
{
    if(A.dim() != psi.dim()) throw dimension_error("Operator/state dimension mismatch in expectation.");
    return inner(psi, A * psi);
}

inline complex_t trace(const Operator& A)
{
    complex_t r = 0.0;
    for(std::size_t i = 0; i < A.dim(); ++i) r += A(i, i);
    return r;
}

// |psi><psi|
inline Operator outer(const StateVector& a, const StateVector& b)
{
    a.require_same_dim(b);
    Operator r(a.dim());
    for(std::size_t i = 0; i < a.dim(); ++i)
        for(std::size_t j = 0; j < a.dim(); ++j) r(i, j) = a[i] * std::conj(b[j]);
    return r;
}

namespace detail
{
// Singular values of a 2x2 complex matrix from the invariants of A^dagger A:
// s1^2 + s2^2 = ||A||_F^2 and s1 s2 = |det A|, so s1 + s2 = sqrt(||A||_F^2 + 2|det A|).
inline double trace_norm_2x2(const complex_t& a, const complex_t& b, const complex_t& c, const complex_t& d)
{
    const double frob2 = std::norm(a) + std::norm(b) + std::norm(c) + std::norm(d);
    const double absdet = std::abs(a * d - b * c);
    return std::sqrt(std::max(0.0, frob2 + 2.0 * absdet));
}
}   // namespace detail

// Tr sqrt(A^dagger A). Closed form for dim 2, Hermitian eigensolve of A^dagger A otherwise.
inline double trace_norm(const Operator& A)
{
    if(A.dim() == 2) return detail::trace_norm_2x2(A(0, 0), A(0, 1), A(1, 0), A(1, 1));

    const auto d = static_cast<Eigen::Index>(A.dim());
    Eigen::MatrixXcd m(d, d);
    for(Eigen::Index i = 0; i < d; ++i)
        for(Eigen::Index j = 0; j < d; ++j) m(i, j) = A(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m.adjoint() * m, Eigen::EigenvaluesOnly);
    double r = 0.0;
    for(Eigen::Index i = 0; i < d; ++i) r += std::sqrt(std::max(0.0, es.eigenvalues()(i)));
    return r;
}

inline bool is_hermitian(const Operator& A, double tol = 1e-12)
{
    for(std::size_t i = 0; i < A.dim(); ++i)
        for(std::size_t j = i; j < A.dim(); ++j)
            if(std::abs(A(i, j) - std::conj(A(j, i))) > tol) return false;
    return true;
}

// Two-level operators in the basis (|e>, |g>), so sigma_z = diag(1, -1) and
// the excited state |e> = (1, 0).
namespace pauli
{
inline Operator identity() { return Operator::identity(2); }
inline Operator x() { return Operator(2, {0.0, 1.0, 1.0, 0.0}); }
inline Operator y() { return Operator(2, {0.0, complex_t(0, -1), complex_t(0, 1), 0.0}); }
inline Operator z() { return Operator(2, {1.0, 0.0, 0.0, -1.0}); }
inline Operator minus() { return Operator(2, {0.0, 0.0, 1.0, 0.0}); }
inline Operator plus() { return Operator(2, {0.0, 1.0, 0.0, 0.0}); }
}   // namespace pauli

}   // namespace nmqsd

#endif  // NMQSD_OPERATOR_HPP
