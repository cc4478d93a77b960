#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include <nmqsd/output.hpp>

using namespace nmqsd;
namespace fs = std::filesystem;

namespace
{
std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

RunConfig tiny()
{
    RunConfig c;
    c.dt = 0.02;
    c.t_final = 0.04;
    c.n_traj = 5;
    c.n_max = 10;
    c.threads = 1;
    c.n_report = 2;
    return c;
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("nmqsd_test_" + name);
    fs::remove_all(p);
    return p;
}
}   // namespace

TEST(Output, TwoStepRunHasThreeRows)
{
    const RunConfig c = tiny();
    const auto r = run_ensemble(to_ensemble_config(c));
    const fs::path dir = scratch("rows");
    write_outputs(r, dir, {c, std::nullopt});
    std::istringstream csv(slurp(dir / "sigma_z.csv"));
    std::string line;
    std::vector<std::string> lines;
    while(std::getline(csv, line)) lines.push_back(line);
    ASSERT_EQ(lines.size(), 4u);
    EXPECT_EQ(lines[0], "t,mean_sigma_z,stderr");
    EXPECT_EQ(lines[1].substr(0, 4), "0,1,");
    EXPECT_EQ(slurp(dir / "sigma_z.csv").find('\r'), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "qnorms.csv"));
    EXPECT_TRUE(fs::exists(dir / "nq_hist.csv"));
    for(const auto& e : fs::directory_iterator(dir)) EXPECT_NE(e.path().extension(), ".tmp");
}

TEST(Output, RerunIsByteIdentical)
{
    const RunConfig c = tiny();
    const fs::path a = scratch("a"), b = scratch("b");
    write_outputs(run_ensemble(to_ensemble_config(c)), a, {c, std::nullopt});
    write_outputs(run_ensemble(to_ensemble_config(c)), b, {c, std::nullopt});
    for(const char* f : {"sigma_z.csv", "qnorms.csv", "nq_hist.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Output, RunMetaCarriesStatistics)
{
    RunConfig c = tiny();
    c.t_final = 1.0;
    c.n_max = 6;
    c.n_traj = 20;
    c.gamma = 0.2;
    const auto r = run_ensemble(to_ensemble_config(c));
    const fs::path dir = scratch("meta");
    write_outputs(r, dir, {c, ErrorEstimate{0.01, 0.02, 0.03, 2}});
    const auto j = nlohmann::json::parse(slurp(dir / "run_meta.json"));
    EXPECT_DOUBLE_EQ(j["rejection_rate"].get<double>(), r.rejection_rate);
    EXPECT_EQ(j["accepted_trajectories"].get<std::size_t>(), r.accepted_count);
    EXPECT_EQ(j["total_trajectories"].get<std::size_t>(), 20u);
    EXPECT_EQ(j["master_seed"].get<std::uint64_t>(), c.master_seed);
    EXPECT_EQ(j["parameters"]["n_max"].get<std::string>(), "6");
    EXPECT_DOUBLE_EQ(j["error_estimates"]["E_N"].get<double>(), 0.03);
    EXPECT_EQ(parse_config(j["config"].get<std::string>()), c);
    EXPECT_TRUE(j.contains("wall_seconds"));
    EXPECT_TRUE(j["nq_fit"].contains("note"));
}

TEST(Output, UnwritableDirectoryThrows)
{
    const RunConfig c = tiny();
    const auto r = run_ensemble(to_ensemble_config(c));
    const fs::path blocker = scratch("blocker");
    std::ofstream(blocker) << "x";
    EXPECT_THROW(write_outputs(r, blocker / "sub", {c, std::nullopt}), output_error);
}
