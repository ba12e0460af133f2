#include "oracles.hpp"
#include "pinn_ntk/config.hpp"
#include "pinn_ntk/csv.hpp"
#include "pinn_ntk/experiments.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace pinn_ntk;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("pinn_ntk_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string data_rows(const std::string& path) {
    std::string text = read_text_file(path), out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(pos, end - pos);
        if (line.rfind("# ", 0) != 0) out += line + "\n";
        pos = end + 1;
    }
    return out;
}

}  // namespace

TEST(Csv, RealFormatting) {
    EXPECT_EQ(format_real(0.1), "0.10000000000000001");
    EXPECT_EQ(format_real(2.0), "2");
    EXPECT_EQ(parse_real(format_real(std::numbers::pi)), std::numbers::pi);
    EXPECT_EQ(parse_real(format_real_shortest(1e-5)), 1e-5);
    EXPECT_THROW(parse_real("1.5x"), std::invalid_argument);
    EXPECT_THROW(parse_integer("12.0"), std::invalid_argument);
}

TEST(Csv, QuotingAndLayout) {
    EXPECT_EQ(csv_escape("plain"), "plain");
    EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
    CsvWriter w({"k=v"});
    w.columns({"a", "b"});
    w.row({"1", "x,y"});
    EXPECT_EQ(w.str(), "# k=v\r\na,b\r\n1,\"x,y\"\r\n");
}

TEST(Schedule, ParseAndFormatRoundTrip) {
    const auto s = parse_schedule("adam:100:1e-3;lbfgs:50;gd:3:0.5");
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[0].optimizer, OptimizerKind::Adam);
    EXPECT_EQ(s[0].iterations, 100);
    EXPECT_EQ(s[0].learning_rate, 1e-3);
    EXPECT_EQ(s[1].optimizer, OptimizerKind::LBFGS);
    EXPECT_EQ(s[2].learning_rate, 0.5);
    EXPECT_EQ(format_schedule(parse_schedule(format_schedule(s))), format_schedule(s));
    EXPECT_TRUE(parse_schedule("").empty());
    EXPECT_THROW(parse_schedule("adam:10"), std::invalid_argument);
    EXPECT_THROW(parse_schedule("adam:-1:0.1"), std::invalid_argument);
    EXPECT_THROW(parse_schedule("sgd:1:0.1"), std::invalid_argument);
}

TEST(Config, SerializeParseRoundTripForEveryPreset) {
    for (const auto& name : preset_names()) {
        for (bool fast : {false, true}) {
            const ExperimentConfig c = preset(name, fast);
            EXPECT_NO_THROW(c.validate()) << name;
            const ExperimentConfig back = parse_config(c.serialize());
            EXPECT_EQ(back.serialize(), c.serialize()) << name;
        }
    }
}

TEST(Config, UnknownKeysAndMalformedLinesAreErrors) {
    EXPECT_THROW(parse_config("no_such_key=1\n"), std::invalid_argument);
    EXPECT_THROW(parse_config("seed\n"), std::invalid_argument);
    EXPECT_THROW(parse_config("seed=abc\n"), std::invalid_argument);
    const ExperimentConfig c = parse_config("# comment\n\nseed=42\nhidden_widths=3,4\n");
    EXPECT_EQ(c.seed, 42u);
    EXPECT_EQ(c.hidden_widths, (std::vector<int>{3, 4}));
}

TEST(Config, PresetDefaults) {
    const auto f1 = preset("fig1");
    EXPECT_EQ(f1.hidden_widths, (std::vector<int>{60, 60, 60, 60}));
    EXPECT_EQ(f1.n_collocation, 512);
    EXPECT_EQ(f1.lambda_b, 100.0);
    EXPECT_EQ(preset("fig1", true).schedule[0].iterations, 20000);
    const auto f2 = preset("fig2a");
    EXPECT_EQ(f2.epsilons.size(), 10u);
    EXPECT_DOUBLE_EQ(f2.epsilons.back(), 0.01);
    EXPECT_EQ(f2.n_seeds, 5);
    EXPECT_EQ(preset("fig2b", true).schedule[0].iterations, 2000);
    const auto f4 = preset("fig4", true);
    EXPECT_EQ(f4.trials, 3);
    EXPECT_EQ(f4.schedule_regression.back().iterations, 1800);
    EXPECT_EQ(preset("fig4").n_regression, 403);
    EXPECT_THROW(preset("fig9"), std::invalid_argument);
}

TEST(Config, ResolveFillsOptimizerConstants) {
    ExperimentConfig c = preset("fig4");
    c.set("adam_beta2", "0.99");
    c.set("lbfgs_history", "5");
    for (const auto& st : c.resolve(c.schedule_darcy)) {
        EXPECT_EQ(st.adam.beta2, 0.99);
        EXPECT_EQ(st.lbfgs.history, 5);
    }
}

TEST(Experiments, SlopeFit) {
    std::vector<double> x, y;
    for (int k = 1; k <= 10; ++k) {
        x.push_back(1.0 / (10.0 * k));
        y.push_back(3.7 / (x.back() * x.back()));
    }
    EXPECT_NEAR(*loglog_slope(x, y), -2.0, 1e-10);
    EXPECT_FALSE(loglog_slope({0.1}, {5.0}).has_value());
    EXPECT_FALSE(loglog_slope({0.1, 0.1}, {5.0, 6.0}).has_value());
}

TEST(Experiments, LinspaceAndParallelFor) {
    const auto xs = linspace(-1.0, 1.0, 5);
    EXPECT_EQ(xs, (std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0}));
    std::vector<int> hits(50, 0);
    parallel_for(50, 4, [&](int i) { hits[static_cast<std::size_t>(i)] += i; });
    for (int i = 0; i < 50; ++i) EXPECT_EQ(hits[static_cast<std::size_t>(i)], i);
    EXPECT_THROW(parallel_for(5, 2, [](int i) {
                     if (i == 3) throw std::runtime_error("boom");
                 }),
                 std::runtime_error);
}

TEST(Experiments, ScanSeedsDifferPerEpsilonAndReplicate) {
    EXPECT_NE(scan_seed(1, 0, 0), scan_seed(1, 0, 1));
    EXPECT_NE(scan_seed(1, 0, 0), scan_seed(1, 1, 0));
}

TEST(Experiments, FreqPrincipleWithNoIterationsWritesInitialSpectrumOnly) {
    ExperimentConfig c = preset("fig1");
    c.hidden_widths = {8};
    c.n_collocation = 32;
    c.n_eval = 64;
    c.schedule = parse_schedule("adam:0:1e-3");
    c.out_dir = scratch_dir("fp0").string();
    const auto r = run_freq_principle(c);
    ASSERT_EQ(r.spectra.size(), 1u);
    const std::string rows = data_rows((fs::path(c.out_dir) / "spectra.csv").string());
    EXPECT_EQ(std::count(rows.begin(), rows.end(), '\n'), 1 + 33);
    EXPECT_EQ(read_text_file((fs::path(c.out_dir) / "status.txt").string()), "status=ok\n");
    EXPECT_TRUE(fs::exists(fs::path(c.out_dir) / "config.txt"));
    EXPECT_TRUE(fs::exists(fs::path(c.out_dir) / "summary.json"));
}

TEST(Experiments, OutputsStartWithConfigHeader) {
    ExperimentConfig c = preset("flow");
    c.hidden_widths = {6};
    c.n_collocation = 10;
    c.out_dir = scratch_dir("hdr").string();
    run_flow_check(c);
    const std::string text = read_text_file((fs::path(c.out_dir) / "flow_check.csv").string());
    EXPECT_EQ(text.rfind("# artifact=pinn-ntk 1.0.0\r\n# experiment=flow-check\r\n", 0), 0u);
    EXPECT_NE(text.find("# seed=1\r\n"), std::string::npos);
    EXPECT_NE(text.find("eta,ratio,status\r\n"), std::string::npos);
}

TEST(Experiments, SingleEpsilonScanHasNoSlope) {
    ExperimentConfig c = preset("fig2a");
    c.hidden_widths = {6};
    c.n_collocation = 16;
    c.epsilons = {0.1};
    c.n_seeds = 2;
    c.out_dir = scratch_dir("scan1").string();
    const auto r = run_ntk_scan(c);
    EXPECT_FALSE(r.slopes.at("init").has_value());
    EXPECT_EQ(r.averaged.size(), 1u);
    EXPECT_EQ(r.runs.size(), 2u);
    EXPECT_NEAR(r.averaged[0].frob_kuu, 0.5 * (r.runs[0].frob_kuu + r.runs[1].frob_kuu), 1e-9 * r.averaged[0].frob_kuu);
    EXPECT_NE(read_text_file((fs::path(c.out_dir) / "slopes.csv").string()).find("init,\r\n"), std::string::npos);
}

TEST(Experiments, SpectrumHasOneEigenvaluePerCollocationPoint) {
    ExperimentConfig c = preset("fig3");
    c.hidden_widths = {6};
    c.n_collocation = 20;
    c.train_phase = false;
    c.out_dir = "";
    const auto r = run_ntk_spectrum(c);
    ASSERT_EQ(r.phases.size(), 1u);
    EXPECT_EQ(r.phases[0].eigenvalues.size(), 20);
}

TEST(Experiments, TwoScaleUntrainedRegressionColumnIsInitialNetwork) {
    ExperimentConfig c = preset("fig4");
    c.hidden_widths = {5};
    c.n_collocation = 16;
    c.n_regression = 12;
    c.n_eval = 30;
    c.trials = 1;
    c.schedule_regression = c.schedule_poisson = c.schedule_darcy = {};
    c.out_dir = scratch_dir("ts0").string();
    const auto r = run_two_scale(c);
    const MLPArchitecture arch = c.architecture();
    const ParameterSet init = initialize(arch, c.init, c.seed);
    for (std::size_t j = 0; j < r.x.size(); ++j) {
        EXPECT_EQ(r.mean_prediction.at("regression")[j], forward_value(init, arch, r.x[j]));
        EXPECT_EQ(r.u_exact[j], exact_two_scale(c.epsilons[0], r.x[j]));
    }
    EXPECT_EQ(r.summaries[0].mean_variance, 0.0);
}

TEST(Experiments, RerunsAreByteIdentical) {
    ExperimentConfig c = preset("fig4");
    c.hidden_widths = {6, 6};
    c.n_collocation = 24;
    c.n_regression = 20;
    c.n_eval = 40;
    c.trials = 2;
    c.schedule_regression = parse_schedule("adam:20:1e-2;lbfgs:5");
    c.schedule_poisson = parse_schedule("adam:20:1e-3");
    c.schedule_darcy = parse_schedule("adam:20:1e-3;lbfgs:5");
    c.out_dir = scratch_dir("det_a").string();
    run_two_scale(c);
    const std::string a = c.out_dir;
    c.out_dir = scratch_dir("det_b").string();
    run_two_scale(c);
    for (const char* f : {"predictions.csv", "errors.csv", "trials.csv"})
        EXPECT_EQ(data_rows((fs::path(a) / f).string()), data_rows((fs::path(c.out_dir) / f).string())) << f;
}
