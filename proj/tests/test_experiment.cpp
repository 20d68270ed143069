#include "tcm/experiment.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace tcm;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("tcm_test_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ExperimentConfig short_run(const std::string& preset, double t_end, int points) {
    ExperimentConfig cfg = load_experiment(preset, {}, {});
    cfg.t_end = t_end;
    cfg.points = points;
    cfg.q_times.clear();
    cfg.spin_q_times.clear();
    return cfg;
}

}  // namespace

// --- settings text

TEST(Settings, ParsesCommentsAndWhitespace) {
    const Settings s = parse_settings("# header\n  nbar = 20 # inline\n\ntheta=0.5\r\n");
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s.at("nbar"), "20");
    EXPECT_EQ(s.at("theta"), "0.5");
}

TEST(Settings, ReportsLineOfBadEntry) {
    try {
        parse_settings("nbar = 1\nbroken\n", "file.cfg");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("file.cfg:2"), std::string::npos);
    }
}

TEST(Settings, ValueParsers) {
    EXPECT_EQ(parse_double(" 2.5 ", "k"), 2.5);
    EXPECT_THROW(parse_double("2.5x", "k"), ConfigError);
    EXPECT_THROW(parse_double("nan", "k"), ConfigError);
    EXPECT_EQ(parse_int("7", "k"), 7);
    EXPECT_THROW(parse_int("7.0", "k"), ConfigError);
    EXPECT_TRUE(parse_bool("yes", "k"));
    EXPECT_FALSE(parse_bool("false", "k"));
    EXPECT_THROW(parse_bool("maybe", "k"), ConfigError);
    EXPECT_EQ(parse_complex("1:-2", "k"), cplx(1.0, -2.0));
    EXPECT_EQ(parse_complex("3", "k"), cplx(3.0, 0.0));
    EXPECT_EQ(parse_double_list("1, 2,,3", "k"), (std::vector<double>{1.0, 2.0, 3.0}));
}

TEST(Settings, NumberFormatting) {
    EXPECT_EQ(format_number(0.0), "0");
    EXPECT_EQ(format_number(0.5), "0.5");
    EXPECT_EQ(format_number(2.0e7), "2.00000000000e+07");
    EXPECT_EQ(format_complex(cplx(1.0, -0.5)), "1:-0.5");
    EXPECT_EQ(parse_double(format_number(1.0 / 3.0), "k"), std::stod(format_number(1.0 / 3.0)));
}

// --- presets and configuration

TEST(Presets, EveryPresetLoadsAndRoundTrips) {
    for (const auto& p : presets()) {
        const ExperimentConfig cfg = load_experiment(p.name, {}, {});
        EXPECT_EQ(cfg.preset, p.name);
        EXPECT_FALSE(cfg.description.empty()) << p.name;
        const ExperimentConfig again = config_from_settings(to_settings(cfg));
        EXPECT_EQ(to_settings(again), to_settings(cfg)) << p.name;
    }
}

TEST(Presets, UnknownNameListsAvailable) {
    try {
        find_preset("fig99");
        FAIL() << "expected UnknownPresetError";
    } catch (const UnknownPresetError& e) {
        EXPECT_NE(std::string(e.what()).find("fig12"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("table1"), std::string::npos);
    }
}

TEST(Presets, PrecedenceIsPresetThenFileThenOverrides) {
    const ExperimentConfig base = load_experiment("fig1", {}, {});
    const ExperimentConfig file = load_experiment("fig1", {{"nbar", "30"}, {"theta", "0.2"}}, {});
    EXPECT_EQ(file.model.nbar, 30.0);
    EXPECT_EQ(file.model.n_qubits, base.model.n_qubits);
    const ExperimentConfig both = load_experiment("fig1", {{"nbar", "30"}, {"theta", "0.2"}}, {{"nbar", "40"}});
    EXPECT_EQ(both.model.nbar, 40.0);
    EXPECT_EQ(both.model.theta, 0.2);
    const ExperimentConfig from_file = load_experiment("", {{"preset", "fig5"}}, {});
    EXPECT_EQ(from_file.mode, RunMode::basin_sweep);
}

TEST(Presets, RejectsUnknownKeysAndValues) {
    EXPECT_THROW(load_experiment("fig1", {}, {{"nbra", "20"}}), ConfigError);
    EXPECT_THROW(load_experiment("fig1", {}, {{"engine", "fast"}}), ConfigError);
    EXPECT_THROW(load_experiment("fig1", {}, {{"observables", "entropy,bogus"}}), ConfigError);
    EXPECT_THROW(load_experiment("fig1", {}, {{"fock_cutoff", "many"}}), ConfigError);
}

TEST(Presets, DescribeMentionsSettings) {
    const std::string d = describe("fig12");
    EXPECT_NE(d.find("n_qubits = 3"), std::string::npos);
}

TEST(Config, AutomaticPointCount) {
    ExperimentConfig cfg;
    cfg.t_start = 0.0;
    cfg.t_end = 1.5;
    EXPECT_EQ(cfg.resolved_points(), 3001);
    cfg.points = 11;
    EXPECT_EQ(cfg.times_over_tr().size(), 11u);
    EXPECT_DOUBLE_EQ(cfg.field_half_width(), std::sqrt(50.0) + 4.0);
}

// --- initial states

TEST(Initial, KindsAndNormalisation) {
    ModelConfig m;
    m.n_qubits = 2;
    InitialSpec spec;
    spec.kind = "product";
    spec.amplitudes = {1.0, 0.0, 0.0, 1.0};
    EXPECT_THROW(build_initial(spec, m), ConfigError);
    spec.normalize = true;
    const InitialState s = build_initial(spec, m);
    ASSERT_TRUE(s.product && s.dicke);
    EXPECT_NEAR(s.product->norm(), 1.0, 1e-15);

    spec.amplitudes = {0.0, 1.0, 0.0, 0.0};  // |eg> is not symmetric
    const InitialState asym = build_initial(spec, m);
    EXPECT_TRUE(asym.product.has_value());
    EXPECT_FALSE(asym.dicke.has_value());

    spec = InitialSpec{};
    spec.kind = "basin";
    spec.a = 0.9;
    EXPECT_THROW(build_initial(spec, m), std::invalid_argument);
    spec.kind = "nonsense";
    EXPECT_THROW(build_initial(spec, m), ConfigError);
}

TEST(Initial, BasinClassification) {
    ModelConfig m;
    m.n_qubits = 3;
    InitialSpec spec;
    spec.kind = "basin";
    spec.a = 0.25;
    EXPECT_TRUE(classify_basin(build_initial(spec, m), m).in_basin);
    spec.kind = "ground";
    const auto outside = classify_basin(build_initial(spec, m), m);
    EXPECT_FALSE(outside.in_basin);
    EXPECT_EQ(outside.measure, "residual");
    m.n_qubits = 2;
    const auto pair = classify_basin(build_initial(spec, m), m);
    EXPECT_EQ(pair.measure, "beta0");
    EXPECT_NEAR(pair.value, std::sqrt(0.5), 1e-12);
}

// --- simulation

TEST(Simulation, LargeNRejectsOutsideStatesForThreeQubits) {
    ExperimentConfig cfg = load_experiment("fig12", {}, {{"engine", "largen"}});
    EXPECT_NO_THROW(Simulation{cfg});
    cfg.state.kind = "ground";
    EXPECT_THROW(Simulation{cfg}, ConfigError);
}

TEST(Simulation, SymmetricBasisMatchesFull) {
    ExperimentConfig cfg = short_run("fig12", 0.2, 21);
    cfg.observables = {"entropy", "p_init"};
    cfg.basis = BasisChoice::full;
    const auto full = compute_series(cfg, Simulation(cfg)).first;
    cfg.basis = BasisChoice::symmetric;
    const auto sym = compute_series(cfg, Simulation(cfg)).first;
    for (std::size_t i = 0; i < full.rows.size(); ++i)
        for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(full.rows[i][k], sym.rows[i][k], 1e-10);
}

TEST(Series, DiagnosticsOnExactRun) {
    ExperimentConfig cfg = short_run("fig1", 0.6, 61);
    cfg.observables = {"entropy", "entropy_field", "norm", "excitation", "leakage"};
    const Simulation sim(cfg);
    const auto [table, diag] = compute_series(cfg, sim);
    EXPECT_EQ(table.rows.size(), 61u);
    EXPECT_LT(diag.max_norm_drift, 1e-10);
    EXPECT_LT(diag.max_excitation_drift, 1e-8);
    EXPECT_LT(diag.max_entropy_gap, 1e-8);
    EXPECT_LT(diag.max_leakage, kLeakageGuard);
    const auto s = table.column("entropy");
    EXPECT_NEAR(s.front(), 0.0, 1e-12);
    EXPECT_THROW(table.column("p_g"), std::out_of_range);
}

TEST(Series, PairTangleColumns) {
    ExperimentConfig cfg = short_run("fig12", 0.1, 5);
    cfg.observables = {"pair_tangles"};
    const auto table = compute_series(cfg, Simulation(cfg)).first;
    EXPECT_EQ(table.columns, (std::vector<std::string>{"pair_tangle_01", "pair_tangle_02", "pair_tangle_12"}));
}

TEST(Series, ObservableChecks) {
    ExperimentConfig cfg = short_run("fig12", 0.1, 5);
    cfg.observables = {"tangle"};
    EXPECT_THROW(compute_series(cfg, Simulation(cfg)), ConfigError);
    cfg.observables = {"entropy", "entropy"};
    EXPECT_THROW(compute_series(cfg, Simulation(cfg)), ConfigError);
}

TEST(Series, LeakageGuardTrips) {
    // eight excited qubits push photons past a cutoff sized only for the initial field
    ExperimentConfig cfg = short_run("fig1", 0.5, 11);
    cfg.model = ModelConfig{8, 1.0, 1.0, 0.0, 11};
    cfg.state.kind = "excited";
    cfg.basis = BasisChoice::symmetric;
    cfg.observables = {"entropy"};
    EXPECT_THROW(compute_series(cfg, Simulation(cfg)), TruncationError);
}

TEST(Sweep, TwoQubitBasinTangle) {
    const SweepTable t = basin_sweep(2, 0.0, 5, "real");
    ASSERT_EQ(t.rows.size(), 5u);
    EXPECT_NEAR(t.rows[2][2], 1.0, 1e-10);            // a = 0
    EXPECT_DOUBLE_EQ(t.rows[4][0], 1.0 / std::sqrt(2.0));  // endpoint pinned
    EXPECT_THROW(basin_sweep(4, 0.0, 5, "real"), ConfigError);
}

// --- output files

TEST(Run, WritesSeriesAndMeta) {
    ExperimentConfig cfg = short_run("fig2", 0.2, 11);
    cfg.q_times = {0.0};
    cfg.q_points = 21;
    const auto dir = scratch_dir("series");
    const RunReport r = run(cfg, dir);
    EXPECT_TRUE(std::filesystem::exists(dir / "series.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "qgrid_field_t0.csv"));
    const std::string meta = slurp(dir / "meta.txt");
    EXPECT_NE(meta.find("derived.n_max = 200"), std::string::npos);
    EXPECT_NE(meta.find("preset = fig2"), std::string::npos);
    EXPECT_EQ(r.meta.at("derived.basis_used"), "full");
    const std::string csv = slurp(dir / "series.csv");
    EXPECT_EQ(csv.substr(0, 10), "t_over_tr,");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 12);
    std::filesystem::remove_all(dir);
}

TEST(Run, WritesSweep) {
    const auto dir = scratch_dir("sweep");
    ExperimentConfig cfg = load_experiment("fig8", {}, {{"sweep.points", "9"}});
    run(cfg, dir);
    const std::string csv = slurp(dir / "sweep.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "a_re,a_im,three_tangle");
    std::filesystem::remove_all(dir);
}
