#ifndef NMQSD_CONFIG_HPP
#define NMQSD_CONFIG_HPP

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ensemble.hpp"

namespace nmqsd
{

class config_error : public std::runtime_error
{
public:
    config_error(std::string key, const std::string& what) : std::runtime_error(key.empty() ? what : key + ": " + what), m_key(std::move(key)) {}
    const std::string& key() const { return m_key; }

private:
    std::string m_key;
};

enum class InitialState
{
    excited,
    ground,
    plus_x
};

// Every run parameter, in units of omega. Defaults reproduce the published
// spin-boson setup (gamma_Gamma = 0.2, N = 100, N_z = 8000, dt = 0.02, t <= 12).
struct RunConfig
{
    std::string label = "run";
    double omega = 1.0;
    double gamma = 0.2;
    double gamma_Gamma = 0.2;
    double dt = 0.02;
    double t_final = 12.0;
    std::size_t n_traj = 8000;
    std::uint64_t master_seed = 1;
    std::size_t threads = 0;
    std::size_t n_max = 100;
    double eps_thres = 1e-8;
    double eps_tol = 1e-4;
    HierarchyMode hierarchy_mode = HierarchyMode::full;
    CouplingMode coupling_mode = CouplingMode::sigma_x;
    Evolution evolution = Evolution::nonlinear;
    InitialState initial_state = InitialState::excited;
    std::string output_dir = "out";
    std::size_t output_stride = 1;
    std::size_t n_report = 12;
    bool histogram_include_saturated = false;
    bool estimate_errors = false;
    std::size_t compare_n_max = 0;   // 0 = 70% of n_max

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline std::string to_string(HierarchyMode m)
{
    switch(m)
    {
    case HierarchyMode::full: return "full";
    case HierarchyMode::bar_O_zero: return "bar_O_zero";
    case HierarchyMode::truncated: return "truncated";
    }
    return "?";
}

inline std::string to_string(CouplingMode m) { return m == CouplingMode::sigma_x ? "sigma_x" : "sigma_minus"; }
inline std::string to_string(Evolution e) { return e == Evolution::nonlinear ? "nonlinear" : "linear"; }

inline std::string to_string(InitialState s)
{
    switch(s)
    {
    case InitialState::excited: return "excited";
    case InitialState::ground: return "ground";
    case InitialState::plus_x: return "plus_x";
    }
    return "?";
}

namespace detail
{
inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if(b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string format_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& key, const std::string& v)
{
    try
    {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if(pos != v.size()) throw std::invalid_argument(v);
        if(!std::isfinite(d)) throw config_error(key, "value must be finite, got '" + v + "'");
        return d;
    }
    catch(const config_error&)
    {
        throw;
    }
    catch(const std::exception&)
    {
        throw config_error(key, "expected a number, got '" + v + "'");
    }
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v)
{
    std::uint64_t r = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), r);
    if(ec != std::errc() || p != v.data() + v.size()) throw config_error(key, "expected a non-negative integer, got '" + v + "'");
    return r;
}

inline bool parse_bool(const std::string& key, const std::string& v)
{
    if(v == "true" || v == "1" || v == "yes") return true;
    if(v == "false" || v == "0" || v == "no") return false;
    throw config_error(key, "expected true/false, got '" + v + "'");
}
}   // namespace detail

inline void apply_setting(RunConfig& c, const std::string& key, const std::string& value)
{
    using namespace detail;
    if(key == "label") c.label = value;
    else if(key == "omega") c.omega = parse_double(key, value);
    else if(key == "gamma") c.gamma = parse_double(key, value);
    else if(key == "gamma_Gamma") c.gamma_Gamma = parse_double(key, value);
    else if(key == "dt") c.dt = parse_double(key, value);
    else if(key == "t_final") c.t_final = parse_double(key, value);
    else if(key == "n_traj") c.n_traj = parse_uint(key, value);
    else if(key == "master_seed") c.master_seed = parse_uint(key, value);
    else if(key == "threads") c.threads = parse_uint(key, value);
    else if(key == "n_max") c.n_max = parse_uint(key, value);
    else if(key == "eps_thres") c.eps_thres = parse_double(key, value);
    else if(key == "eps_tol") c.eps_tol = parse_double(key, value);
    else if(key == "hierarchy_mode")
    {
        if(value == "full") c.hierarchy_mode = HierarchyMode::full;
        else if(value == "bar_O_zero") c.hierarchy_mode = HierarchyMode::bar_O_zero;
        else if(value == "truncated") c.hierarchy_mode = HierarchyMode::truncated;
        else throw config_error(key, "expected full, bar_O_zero or truncated, got '" + value + "'");
    }
    else if(key == "coupling_mode")
    {
        if(value == "sigma_x") c.coupling_mode = CouplingMode::sigma_x;
        else if(value == "sigma_minus") c.coupling_mode = CouplingMode::sigma_minus;
        else throw config_error(key, "expected sigma_x or sigma_minus, got '" + value + "'");
    }
    else if(key == "evolution")
    {
        if(value == "nonlinear") c.evolution = Evolution::nonlinear;
        else if(value == "linear") c.evolution = Evolution::linear;
        else throw config_error(key, "expected nonlinear or linear, got '" + value + "'");
    }
    else if(key == "initial_state")
    {
        if(value == "excited") c.initial_state = InitialState::excited;
        else if(value == "ground") c.initial_state = InitialState::ground;
        else if(value == "plus_x") c.initial_state = InitialState::plus_x;
        else throw config_error(key, "expected excited, ground or plus_x, got '" + value + "'");
    }
    else if(key == "output_dir") c.output_dir = value;
    else if(key == "output_stride") c.output_stride = parse_uint(key, value);
    else if(key == "n_report") c.n_report = parse_uint(key, value);
    else if(key == "histogram_include_saturated") c.histogram_include_saturated = parse_bool(key, value);
    else if(key == "estimate_errors") c.estimate_errors = parse_bool(key, value);
    else if(key == "compare_n_max") c.compare_n_max = parse_uint(key, value);
    else throw config_error(key, "unknown key");
}

inline void validate(const RunConfig& c)
{
    if(!(c.omega > 0)) throw config_error("omega", "must be > 0");
    if(!(c.gamma_Gamma >= 0)) throw config_error("gamma_Gamma", "must be >= 0");
    if(!(c.gamma > 0) && !(c.gamma == 0 && c.gamma_Gamma == 0)) throw config_error("gamma", "must be > 0");
    if(!(c.dt > 0)) throw config_error("dt", "must be > 0");
    if(!(c.t_final > 0)) throw config_error("t_final", "must be > 0");
    try
    {
        step_count(c.dt, c.t_final);
    }
    catch(const std::exception&)
    {
        throw config_error("t_final", "must be a positive integer multiple of dt");
    }
    if(c.n_traj < 1) throw config_error("n_traj", "must be >= 1");
    if(c.n_max > 400) throw config_error("n_max", "must be <= 400");
    if(!(c.eps_thres >= 0)) throw config_error("eps_thres", "must be >= 0");
    if(!(c.eps_thres < c.eps_tol)) throw config_error("eps_tol", "must exceed eps_thres");
    if(c.output_stride < 1) throw config_error("output_stride", "must be >= 1");
    if(c.compare_n_max > c.n_max) throw config_error("compare_n_max", "must be <= n_max");
    if(c.label.empty()) throw config_error("label", "must not be empty");
    if(c.label.find_first_of("\n\r=#") != std::string::npos) throw config_error("label", "must not contain '=', '#' or newlines");
}

// Parses `key = value` lines. Blank lines and text after '#' are ignored.
// Later assignments override earlier ones; the result is validated.
inline RunConfig parse_config(std::string_view text)
{
    RunConfig c;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while(std::getline(in, line))
    {
        ++lineno;
        if(const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = detail::trim(line);
        if(t.empty()) continue;
        const auto eq = t.find('=');
        if(eq == std::string::npos) throw config_error("", "line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = detail::trim(std::string_view(t).substr(0, eq));
        const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
        if(key.empty()) throw config_error("", "line " + std::to_string(lineno) + ": missing key");
        if(value.empty()) throw config_error(key, "missing value");
        apply_setting(c, key, value);
    }
    validate(c);
    return c;
}

inline std::string render_config(const RunConfig& c)
{
    using detail::format_double;
    std::ostringstream o;
    o << "label = " << c.label << '\n'
      << "omega = " << format_double(c.omega) << '\n'
      << "gamma = " << format_double(c.gamma) << '\n'
      << "gamma_Gamma = " << format_double(c.gamma_Gamma) << '\n'
      << "dt = " << format_double(c.dt) << '\n'
      << "t_final = " << format_double(c.t_final) << '\n'
      << "n_traj = " << c.n_traj << '\n'
      << "master_seed = " << c.master_seed << '\n'
      << "threads = " << c.threads << '\n'
      << "n_max = " << c.n_max << '\n'
      << "eps_thres = " << format_double(c.eps_thres) << '\n'
      << "eps_tol = " << format_double(c.eps_tol) << '\n'
      << "hierarchy_mode = " << to_string(c.hierarchy_mode) << '\n'
      << "coupling_mode = " << to_string(c.coupling_mode) << '\n'
      << "evolution = " << to_string(c.evolution) << '\n'
      << "initial_state = " << to_string(c.initial_state) << '\n'
      << "output_dir = " << c.output_dir << '\n'
      << "output_stride = " << c.output_stride << '\n'
      << "n_report = " << c.n_report << '\n'
      << "histogram_include_saturated = " << (c.histogram_include_saturated ? "true" : "false") << '\n'
      << "estimate_errors = " << (c.estimate_errors ? "true" : "false") << '\n'
      << "compare_n_max = " << c.compare_n_max << '\n';
    return o.str();
}

inline std::size_t effective_compare_n_max(const RunConfig& c)
{
    return c.compare_n_max != 0 ? c.compare_n_max : static_cast<std::size_t>(std::llround(0.7 * static_cast<double>(c.n_max)));
}

inline EnsembleConfig to_ensemble_config(const RunConfig& c)
{
    EnsembleConfig e;
    e.model = ModelSpec::spin_boson(c.omega, c.coupling_mode);
    switch(c.initial_state)
    {
    case InitialState::excited: e.model.psi0 = StateVector{1.0, 0.0}; break;
    case InitialState::ground: e.model.psi0 = StateVector{0.0, 1.0}; break;
    case InitialState::plus_x: e.model.psi0 = StateVector{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)}; break;
    }
    e.gamma = c.gamma;
    e.gamma_Gamma = c.gamma_Gamma;
    e.dt = c.dt;
    e.t_final = c.t_final;
    e.hierarchy.n_max = c.n_max;
    e.hierarchy.eps_thres = c.eps_thres;
    e.hierarchy.eps_tol = c.eps_tol;
    e.hierarchy.mode = c.hierarchy_mode;
    e.options.evolution = c.evolution;
    e.options.output_stride = c.output_stride;
    e.options.n_report = c.n_report;
    e.n_traj = c.n_traj;
    e.master_seed = c.master_seed;
    e.threads = c.threads;
    e.histogram_include_saturated = c.histogram_include_saturated;
    return e;
}

}   // namespace nmqsd

#endif  // NMQSD_CONFIG_HPP
