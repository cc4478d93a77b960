#ifndef NMQSD_OUTPUT_HPP
#define NMQSD_OUTPUT_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "ensemble.hpp"

namespace nmqsd
{

inline constexpr const char* version_string = "nmqsd 1.0.0";

class output_error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct RunRecord
{
    RunConfig config;
    std::optional<ErrorEstimate> errors;
};

namespace detail
{
inline std::string g17(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string sigma_z_csv(const EnsembleResult& r)
{
    std::string s = "t,mean_sigma_z,stderr\n";
    for(std::size_t i = 0; i < r.times.size(); ++i) s += g17(r.times[i]) + "," + g17(r.mean_sigma_z[i]) + "," + g17(r.stderr_sigma_z[i]) + "\n";
    return s;
}

inline std::string qnorms_csv(const EnsembleResult& r)
{
    std::string s = "t,n,mean_trace_norm\n";
    for(std::size_t i = 0; i < r.times.size(); ++i)
        for(std::size_t n = 0; n <= r.n_report; ++n) s += g17(r.times[i]) + "," + std::to_string(n) + "," + g17(r.mean_q_trace_norm(i, n)) + "\n";
    return s;
}

inline std::string nq_hist_csv(const NqDistribution& d)
{
    std::string s = "n_q,count,probability_density\n";
    for(std::size_t i = 0; i < d.n_q.size(); ++i) s += std::to_string(d.n_q[i]) + "," + std::to_string(d.count[i]) + "," + g17(d.density[i]) + "\n";
    return s;
}

inline nlohmann::ordered_json run_meta(const EnsembleResult& r, const NqDistribution& d, const RunRecord& rec)
{
    nlohmann::ordered_json j;
    j["version"] = version_string;
    j["label"] = rec.config.label;
    j["master_seed"] = rec.config.master_seed;
    j["config"] = render_config(rec.config);
    nlohmann::ordered_json params;
    {
        std::istringstream in(render_config(rec.config));
        std::string line;
        while(std::getline(in, line))
        {
            const auto eq = line.find(" = ");
            if(eq != std::string::npos) params[line.substr(0, eq)] = line.substr(eq + 3);
        }
    }
    j["parameters"] = params;
    j["total_trajectories"] = r.total_count;
    j["accepted_trajectories"] = r.accepted_count;
    j["rejected_trajectories"] = r.rejected_count;
    j["rejection_rate"] = r.rejection_rate;
    j["mean_final_n_q"] = r.mean_final_n_q;
    j["E_Nz"] = r.time_averaged_stderr();
    if(rec.errors)
    {
        j["error_estimates"] = {{"E_Nz", rec.errors->E_Nz},
                                {"E_dt", rec.errors->E_dt},
                                {"E_N", rec.errors->E_N},
                                {"compare_n_max", rec.errors->compare_n_max},
                                {"total", rec.errors->total()}};
    }
    nlohmann::ordered_json fit;
    fit["valid"] = d.fit_valid;
    fit["note"] = d.fit_note;
    fit["mode"] = d.mode;
    fit["rate"] = d.rate;
    fit["intercept"] = d.intercept;
    fit["r_squared"] = d.r_squared;
    fit["tail_points"] = d.tail_points;
    fit["included"] = d.included;
    fit["include_saturated"] = r.histogram_include_saturated;
    j["nq_fit"] = fit;
    j["wall_seconds"] = r.wall_seconds;
    for(const auto& [k, v] : r.metadata) j["metadata"][k] = v;
    return j;
}
}   // namespace detail

// Writes sigma_z.csv, qnorms.csv, nq_hist.csv and run_meta.json into dir.
// Files are staged under temporary names and renamed at the end; on failure
// every staged or renamed file from this call is removed.
inline std::vector<std::filesystem::path> write_outputs(const EnsembleResult& result, const std::filesystem::path& dir, const RunRecord& record)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if(ec) throw output_error("cannot create output directory " + dir.string() + ": " + ec.message());

    const NqDistribution dist = nq_distribution(result);
    const std::vector<std::pair<std::string, std::string>> files{
        {"sigma_z.csv", detail::sigma_z_csv(result)},
        {"qnorms.csv", detail::qnorms_csv(result)},
        {"nq_hist.csv", detail::nq_hist_csv(dist)},
        {"run_meta.json", detail::run_meta(result, dist, record).dump(2) + "\n"},
    };

    std::vector<fs::path> staged, written;
    auto cleanup = [&]() {
        std::error_code ignore;
        for(const auto& p : staged) fs::remove(p, ignore);
        for(const auto& p : written) fs::remove(p, ignore);
    };
    try
    {
        for(const auto& [name, content] : files)
        {
            const fs::path tmp = dir / (name + ".tmp");
            staged.push_back(tmp);
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if(!out) throw output_error("cannot open " + tmp.string() + " for writing");
            out.write(content.data(), static_cast<std::streamsize>(content.size()));
            out.close();
            if(!out) throw output_error("write failed for " + tmp.string());
        }
        for(std::size_t i = 0; i < files.size(); ++i)
        {
            const fs::path final_path = dir / files[i].first;
            fs::rename(staged[i], final_path);
            written.push_back(final_path);
        }
        staged.clear();
    }
    catch(const fs::filesystem_error& e)
    {
        cleanup();
        throw output_error(e.what());
    }
    catch(...)
    {
        cleanup();
        throw;
    }
    return written;
}

}   // namespace nmqsd

#endif  // NMQSD_OUTPUT_HPP
