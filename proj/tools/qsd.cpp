// qsd: command-line driver for the hierarchy QSD simulator.
//
//   qsd run      --config FILE [--out DIR] [--threads N] [--seed S] [--set key=value ...]
//   qsd sweep    --config FILE --gamma 0.2,0.4 --n-max 10,40 ...   one subdirectory per grid point
//   qsd validate                                                   built-in oracle checks
//   qsd noise    --config FILE --paths N                           dump sampled noise paths as CSV
//
// Exit codes: 0 ok, 1 configuration error, 2 runtime failure, 3 every trajectory rejected.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <nmqsd/nmqsd.hpp>
#include <nmqsd/oracles.hpp>

namespace fs = std::filesystem;
using namespace nmqsd;

namespace
{

enum exit_code
{
    exit_ok = 0,
    exit_config = 1,
    exit_runtime = 2,
    exit_all_rejected = 3
};

struct CommonOptions
{
    std::string config_path;
    std::string out;
    std::size_t threads = 0;
    bool threads_set = false;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o)
{
    cmd->add_option("--config,-c", o.config_path, "Configuration file (key = value lines)");
    cmd->add_option("--out,-o", o.out, "Output directory (overrides output_dir)");
    cmd->add_option("--threads,-j", o.threads, "Worker threads, 0 = all cores");
    cmd->add_option("--seed,-s", o.seed, "Master seed (overrides master_seed)");
    cmd->add_option("--set", o.overrides, "Extra key=value overrides, applied after the file");
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if(!in) throw config_error("config", "cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

RunConfig load(const CommonOptions& o, CLI::App* cmd)
{
    RunConfig c = o.config_path.empty() ? RunConfig{} : parse_config(read_file(o.config_path));
    for(const auto& kv : o.overrides)
    {
        const auto eq = kv.find('=');
        if(eq == std::string::npos) throw config_error(kv, "--set expects key=value");
        apply_setting(c, detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
    }
    if(cmd->count("--out")) c.output_dir = o.out;
    if(cmd->count("--threads")) c.threads = o.threads;
    if(cmd->count("--seed")) c.master_seed = o.seed;
    validate(c);
    return c;
}

void run_one(const RunConfig& c, const fs::path& dir)
{
    const EnsembleConfig ec = to_ensemble_config(c);
    std::fprintf(stderr, "[%s] gamma=%g n_max=%zu mode=%s coupling=%s n_traj=%zu\n", c.label.c_str(), c.gamma, c.n_max,
                 to_string(c.hierarchy_mode).c_str(), to_string(c.coupling_mode).c_str(), c.n_traj);
    const EnsembleResult r = run_ensemble(ec);
    RunRecord rec{c, std::nullopt};
    if(c.estimate_errors) rec.errors = estimate_errors(ec, effective_compare_n_max(c), &r);
    write_outputs(r, dir, rec);
    std::fprintf(stderr, "[%s] accepted %zu/%zu (R=%.4f), <N_Q>=%.2f, E_Nz=%.4g, %.1fs -> %s\n", c.label.c_str(), r.accepted_count,
                 r.total_count, r.rejection_rate, r.mean_final_n_q, r.time_averaged_stderr(), r.wall_seconds, dir.string().c_str());
}

template <class T>
std::vector<T> split_list(const std::string& s, T (*conv)(const std::string&))
{
    std::vector<T> out;
    std::stringstream ss(s);
    std::string item;
    while(std::getline(ss, item, ','))
        if(!detail::trim(item).empty()) out.push_back(conv(detail::trim(item)));
    return out;
}

int cmd_validate()
{
    int failures = 0;
    auto report = [&](const char* name, bool ok, const std::string& detail) {
        std::printf("%s %-28s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
        failures += ok ? 0 : 1;
    };

    {
        std::mt19937_64 rng(2024);
        std::normal_distribution<double> g(0.0, 1.0);
        auto rnd = [&](double s) {
            Operator A(2);
            for(auto& v : A.entries()) v = complex_t(s * g(rng), s * g(rng));
            return A;
        };
        double worst = 0.0;
        for(int rep = 0; rep < 100; ++rep)
        {
            Operator H = rnd(1.0);
            H = complex_t(0.5) * (H + adjoint(H));
            const Operator L = rnd(1.0);
            HierarchyState s(2, 8);
            s.set_n_q(8);
            for(std::size_t n = 0; n <= 8; ++n)
                for(std::size_t m = 0; m <= n && n + m <= 8; ++m) s.set(n, m, rnd(1.0 / double(1 + n + m)));
            const complex_t z(g(rng), g(rng));
            const auto rhs = hierarchy_rhs(s, z, H, L, 0.1, 0.2);
            for(const auto& [n, m] : oracle::low_order_pairs())
            {
                const Operator ref = *oracle::low_order_rhs(n, m, s, z, H, L, 0.1, 0.2);
                worst = std::max(worst, (rhs[triangle::offset(n, m)] - ref).max_abs() / std::max(1.0, ref.max_abs()));
            }
        }
        report("low-order equations", worst <= 1e-12, "max rel err " + std::to_string(worst));
    }
    {
        const auto sol = oracle::rwa_riccati(0.1, 0.2, 1.0, 12.0, 0.02);
        auto euler = [](double dt) {
            HierarchyState s(2, 4);
            HierarchyKernel k(KernelPlan::shared(4), 0.5 * pauli::z(), pauli::minus(), 0.1, 0.2);
            std::vector<complex_t> d(triangle::slot_count(4) * 4);
            std::vector<complex_t> F{0.0};
            const std::size_t n = step_count(dt, 12.0), every = step_count(dt, 0.02);
            for(std::size_t i = 0; i < n; ++i)
            {
                k.evaluate(s, complex_t(0.0), d);
                s.axpy(dt, d);
                if((i + 1) % every == 0) F.push_back(s.get(0, 0)(1, 0));
            }
            return F;
        };
        const auto a = euler(0.02), b = euler(0.01);
        double err = 0.0;
        for(std::size_t i = 0; i < sol.F.size(); ++i) err = std::max(err, std::abs(2.0 * b[i] - a[i] - sol.F[i]));
        report("rotating-wave Riccati", err < 1e-4, "max |F - F_ref| " + std::to_string(err));
    }
    {
        NoiseParams p;
        p.n_steps = 100;
        const auto mom = oracle::noise_moments(p, 20000, 50, 20, 3);
        bool ok = true;
        for(const auto& c : mom.correlation)
        {
            const double ref = correlation(p, double(c.lag) * p.dt).real();
            ok &= std::abs(c.mean.real() - ref) < 4 * c.se_re && std::abs(c.mean.imag()) < 4 * c.se_im;
        }
        for(const auto& c : mom.pseudo_correlation) ok &= std::abs(c.mean.real()) < 4 * c.se_re && std::abs(c.mean.imag()) < 4 * c.se_im;
        report("noise moments", ok, "20000 paths, lags 0..50");
    }
    return failures == 0 ? exit_ok : exit_runtime;
}

}   // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hierarchy-of-operators QSD simulator for the spin-boson model"};
    app.require_subcommand(1);

    CommonOptions run_opts;
    auto* run = app.add_subcommand("run", "Run one ensemble and write CSV + run_meta.json");
    add_common(run, run_opts);

    CommonOptions sweep_opts;
    std::string g_list, n_list, mode_list, coupling_list;
    auto* sweep = app.add_subcommand("sweep", "Run a parameter grid, one subdirectory per point");
    add_common(sweep, sweep_opts);
    sweep->add_option("--gamma", g_list, "Comma-separated gamma values");
    sweep->add_option("--n-max", n_list, "Comma-separated n_max values");
    sweep->add_option("--hierarchy-mode", mode_list, "Comma-separated hierarchy modes");
    sweep->add_option("--coupling", coupling_list, "Comma-separated coupling modes");

    app.add_subcommand("validate", "Run the built-in oracle checks");

    CommonOptions noise_opts;
    std::size_t n_paths = 10;
    auto* noise = app.add_subcommand("noise", "Write sampled noise paths z*_t as CSV (path,t,re,im)");
    add_common(noise, noise_opts);
    noise->add_option("--paths", n_paths, "Number of paths");

    try
    {
        app.parse(argc, argv);
    }
    catch(const CLI::ParseError& e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_config;
    }

    try
    {
        if(*run)
        {
            const RunConfig c = load(run_opts, run);
            run_one(c, c.output_dir);
        }
        else if(*sweep)
        {
            const RunConfig base = load(sweep_opts, sweep);
            std::vector<std::string> gs{detail::format_double(base.gamma)}, ns{std::to_string(base.n_max)},
                ms{to_string(base.hierarchy_mode)}, cs{to_string(base.coupling_mode)};
            auto ident = +[](const std::string& s) { return s; };
            if(!g_list.empty()) gs = split_list<std::string>(g_list, ident);
            if(!n_list.empty()) ns = split_list<std::string>(n_list, ident);
            if(!mode_list.empty()) ms = split_list<std::string>(mode_list, ident);
            if(!coupling_list.empty()) cs = split_list<std::string>(coupling_list, ident);
            std::vector<RunConfig> points;
            for(const auto& g : gs)
                for(const auto& n : ns)
                    for(const auto& m : ms)
                        for(const auto& cp : cs)
                        {
                            RunConfig c = base;
                            apply_setting(c, "gamma", g);
                            apply_setting(c, "n_max", n);
                            apply_setting(c, "hierarchy_mode", m);
                            apply_setting(c, "coupling_mode", cp);
                            c.label = base.label + "_g" + g + "_n" + n + "_" + m + "_" + cp;
                            validate(c);
                            points.push_back(c);
                        }
            int rc = exit_ok;
            for(const auto& c : points)
            {
                try
                {
                    run_one(c, fs::path(base.output_dir) / c.label);
                }
                catch(const all_rejected_error& e)
                {
                    std::fprintf(stderr, "[%s] %s\n", c.label.c_str(), e.what());
                    rc = exit_all_rejected;
                }
            }
            return rc;
        }
        else if(app.got_subcommand("validate"))
            return cmd_validate();
        else if(*noise)
        {
            const RunConfig c = load(noise_opts, noise);
            const EnsembleConfig ec = to_ensemble_config(c);
            fs::create_directories(c.output_dir);
            const fs::path out = fs::path(c.output_dir) / "noise.csv";
            std::ofstream f(out, std::ios::binary);
            if(!f) throw output_error("cannot write " + out.string());
            f << "path,t,re,im\n";
            for(std::size_t p = 0; p < n_paths; ++p)
            {
                const NoisePath path = sample_path(ec.noise_params(p));
                for(std::size_t i = 0; i < path.z_star.size(); ++i)
                    f << p << ',' << detail::format_double(double(i) * c.dt) << ',' << detail::format_double(path.z_star[i].real()) << ','
                      << detail::format_double(path.z_star[i].imag()) << '\n';
            }
            if(!f) throw output_error("write failed for " + out.string());
        }
    }
    catch(const config_error& e)
    {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_config;
    }
    catch(const all_rejected_error& e)
    {
        std::fprintf(stderr, "%s\n", e.what());
        return exit_all_rejected;
    }
    catch(const std::exception& e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_runtime;
    }
    return exit_ok;
}
