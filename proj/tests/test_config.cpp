#include <gtest/gtest.h>

#include <nmqsd/config.hpp>

using namespace nmqsd;

TEST(Config, EmptyDocumentGivesDefaults)
{
    const RunConfig c = parse_config("");
    EXPECT_EQ(c, RunConfig{});
    EXPECT_DOUBLE_EQ(c.gamma, 0.2);
    EXPECT_DOUBLE_EQ(c.gamma_Gamma, 0.2);
    EXPECT_DOUBLE_EQ(c.dt, 0.02);
    EXPECT_EQ(c.n_max, 100u);
    EXPECT_EQ(c.n_traj, 8000u);
    EXPECT_EQ(c.hierarchy_mode, HierarchyMode::full);
}

TEST(Config, ParsesValuesAndComments)
{
    const RunConfig c = parse_config("# header\n gamma = 0.4  # memory\n\nn_max=10\nhierarchy_mode = truncated\ncoupling_mode = sigma_minus\n");
    EXPECT_DOUBLE_EQ(c.gamma, 0.4);
    EXPECT_EQ(c.n_max, 10u);
    EXPECT_EQ(c.hierarchy_mode, HierarchyMode::truncated);
    EXPECT_EQ(c.coupling_mode, CouplingMode::sigma_minus);
}

TEST(Config, RangeErrorNamesKey)
{
    try
    {
        parse_config("gamma = -0.1");
        FAIL();
    }
    catch(const config_error& e)
    {
        EXPECT_EQ(e.key(), "gamma");
    }
}

TEST(Config, UnknownKeyRejected)
{
    try
    {
        parse_config("gama = 0.3");
        FAIL();
    }
    catch(const config_error& e)
    {
        EXPECT_EQ(e.key(), "gama");
    }
}

TEST(Config, MalformedValues)
{
    EXPECT_THROW(parse_config("n_traj = many"), config_error);
    EXPECT_THROW(parse_config("n_traj = -3"), config_error);
    EXPECT_THROW(parse_config("dt = 0.03\nt_final = 1"), config_error);
    EXPECT_THROW(parse_config("hierarchy_mode = partial"), config_error);
    EXPECT_THROW(parse_config("just text"), config_error);
    EXPECT_THROW(parse_config("n_max = 10\ncompare_n_max = 20"), config_error);
}

TEST(Config, RoundTrip)
{
    RunConfig c;
    c.label = "relax_g08";
    c.gamma = 0.8;
    c.dt = 0.01;
    c.t_final = 3.0;
    c.n_max = 40;
    c.eps_thres = 3.3e-9;
    c.hierarchy_mode = HierarchyMode::bar_O_zero;
    c.evolution = Evolution::linear;
    c.initial_state = InitialState::plus_x;
    c.histogram_include_saturated = true;
    c.compare_n_max = 28;
    EXPECT_EQ(parse_config(render_config(c)), c);
    EXPECT_EQ(parse_config(render_config(RunConfig{})), RunConfig{});
}

TEST(Config, EnsembleMapping)
{
    RunConfig c = parse_config("n_max = 40\ngamma = 0.4\ncoupling_mode = sigma_minus\ninitial_state = ground");
    EXPECT_EQ(effective_compare_n_max(c), 28u);
    const EnsembleConfig e = to_ensemble_config(c);
    EXPECT_EQ(e.hierarchy.n_max, 40u);
    EXPECT_DOUBLE_EQ(e.gamma, 0.4);
    EXPECT_EQ(e.model.L(1, 0), complex_t(1.0));
    EXPECT_EQ(e.model.L(0, 1), complex_t(0.0));
    EXPECT_EQ(e.model.psi0[1], complex_t(1.0));
}
