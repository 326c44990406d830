#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <string>

#include "micropump/csv.hpp"
#include "micropump/errors.hpp"
#include "micropump/run_config.hpp"

using namespace micropump;

namespace {

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const InvalidSpec& e) {
        return e.what();
    }
    return {};
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST(Csv, SkipsCommentsAndBlankLines) {
    std::istringstream in("# measured on the bench\n\nfrequency_hz,flow_ml_per_min\n70,10.5\n# mid comment\n80,12\n");
    const auto t = read_csv(in, "bench.csv");
    ASSERT_EQ(t.rows.size(), 2u);
    const auto curve = read_flow_curve(t);
    EXPECT_EQ(curve.points[1].frequency, 80.0);
    EXPECT_EQ(curve.points[0].flow_ml_per_min, 10.5);
}

TEST(Csv, ColumnsFoundByNameWithExtrasTolerated) {
    std::istringstream in("flow_ml_per_min,operator,frequency_hz\n5,1,100\n6,2,110\n");
    const auto curve = read_flow_curve(read_csv(in, "x"));
    EXPECT_EQ(curve.points[0].frequency, 100.0);
    EXPECT_EQ(curve.points[1].flow_ml_per_min, 6.0);
}

TEST(Csv, ErrorsNameSourceAndLine) {
    std::istringstream bad_number("frequency_hz,flow_ml_per_min\n70,abc\n");
    EXPECT_TRUE(contains(message_of([&] { read_csv(bad_number, "m.csv"); }), "m.csv:2"));
    std::istringstream ragged("frequency_hz,flow_ml_per_min\n70,1,2\n");
    EXPECT_TRUE(contains(message_of([&] { read_csv(ragged, "m.csv"); }), "m.csv:2"));
    std::istringstream empty("# nothing\n");
    EXPECT_THROW(read_csv(empty, "e.csv"), InvalidSpec);
    std::istringstream wrong("power_w,core_temp_c\n30,48\n");
    EXPECT_TRUE(contains(message_of([&] { read_flow_curve(read_csv(wrong, "w")); }), "frequency_hz"));
    EXPECT_THROW(read_csv_file("/nonexistent/file.csv"), InvalidSpec);
}

TEST(Csv, FlowCurveMustBeOrderedAndNonNegative) {
    std::istringstream unordered("frequency_hz,flow_ml_per_min\n80,1\n70,2\n");
    EXPECT_THROW(read_flow_curve(read_csv(unordered, "u")), InvalidSpec);
    std::istringstream negative("frequency_hz,flow_ml_per_min\n70,1\n80,-2\n");
    EXPECT_THROW(read_flow_curve(read_csv(negative, "n")), InvalidSpec);
}

TEST(Csv, FlowCurveWriteReadRoundTrip) {
    FlowFrequencyCurve c;
    c.points = {{70.0, 1.0 / 3.0, false}, {80.0, 0.0, true}, {90.0, 41.38912345678, false}};
    std::ostringstream out;
    write_flow_curve(out, c, 0xabcdefu);
    EXPECT_TRUE(out.str().starts_with("# micropump 1.0.0 config=0000000000abcdef\n"));
    std::istringstream in(out.str());
    const auto t = read_csv(in, "round");
    const auto back = read_flow_curve(t);
    ASSERT_EQ(back.points.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(back.points[i].frequency, c.points[i].frequency);
        EXPECT_EQ(back.points[i].flow_ml_per_min, c.points[i].flow_ml_per_min);
    }
    EXPECT_EQ(t.rows[1][t.column("abnormal")], 1.0);
}

TEST(Csv, OtherReaders) {
    std::istringstream loss("velocity_m_per_s,head_m\n0.1,0.04\n0.2,0.08\n");
    const auto s = read_head_loss_samples(read_csv(loss, "l"));
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[1].head, 0.08);
    std::istringstream thermal("power_w,core_temp_c\n30,48\n60,73.6\n");
    const auto p = read_thermal_points(read_csv(thermal, "t"));
    ASSERT_EQ(p.size(), 2u);
    EXPECT_EQ(p[1].temperature, 73.6);
}

TEST(Csv, FormatDoubleRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, 2.18e-3, 1e-300, -7.5, 0.0}) {
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
    EXPECT_EQ(hex_hash(fnv1a("")), "cbf29ce484222325");
}

TEST(CalibrationFile, RoundTrip) {
    CalibrationResult r;
    r.params = {3.1e-3, 2.9e-3, 4.2e-5, 1.17e-10};
    r.objective = 0.125;
    r.seed_objective = 17.5;
    r.iterations = 321;
    r.seed_returned = false;
    std::ostringstream out;
    write_calibration_result(out, r);
    std::istringstream in(out.str());
    const auto back = read_calibration_result(in, "cal.txt");
    EXPECT_EQ(back.params.inlet_damping, r.params.inlet_damping);
    EXPECT_EQ(back.params.outlet_damping, r.params.outlet_damping);
    EXPECT_EQ(back.params.force_per_volt, r.params.force_per_volt);
    EXPECT_EQ(back.params.stroke_volume_per_volt, r.params.stroke_volume_per_volt);
    EXPECT_EQ(back.objective, r.objective);
    EXPECT_EQ(back.seed_objective, r.seed_objective);
    EXPECT_EQ(back.iterations, 321);
    EXPECT_FALSE(back.seed_returned);
}

TEST(CalibrationFile, MissingKeyRejected) {
    std::istringstream in("inlet_damping_n_s_per_m = 1e-3\n");
    EXPECT_THROW(read_calibration_result(in, "cal.txt"), InvalidSpec);
}

TEST(RunConfigFile, EmptyTextGivesDefaults) {
    const auto c = parse_run_config("");
    EXPECT_EQ(c.pump.drive.frequency, 130.0);
    EXPECT_EQ(c.pump_shutoff_head, 0.52);
    EXPECT_FALSE(c.pipe_area.has_value());
    EXPECT_NO_THROW(c.validate());
}

TEST(RunConfigFile, AllProblemsReportedTogether) {
    const std::string text =
        "drive.frequency_hz = 120\n"
        "bogus.key = 1\n"
        "drive.frequency_hz = 140\n"
        "drive.voltage_v = fifty\n"
        "no equals sign here\n";
    const auto msg = message_of([&] { parse_run_config(text, "run.cfg"); });
    EXPECT_TRUE(contains(msg, "run.cfg:2: bogus.key: unknown key")) << msg;
    EXPECT_TRUE(contains(msg, "run.cfg:3: drive.frequency_hz: duplicate of line 1")) << msg;
    EXPECT_TRUE(contains(msg, "run.cfg:4: drive.voltage_v")) << msg;
    EXPECT_TRUE(contains(msg, "run.cfg:5: expected key = value")) << msg;
}

TEST(RunConfigFile, ShapeAppliedBeforeDimensionsWhateverTheOrder) {
    const auto c = parse_run_config(
        "valve.outlet.thickness_m = 0.8e-3\n"
        "valve.outlet.length_m = 4.5e-3\n"
        "valve.outlet.shape = narrow\n");
    EXPECT_EQ(c.pump.outlet_valve.spec.shape, ValveShape::Narrow);
    EXPECT_EQ(c.pump.outlet_valve.spec.width, 2e-3);
    EXPECT_EQ(c.pump.outlet_valve.spec.length, 4.5e-3);
    EXPECT_EQ(c.pump.outlet_valve.spec.thickness, 0.8e-3);
}

TEST(RunConfigFile, DumpParsesBackToTheSameConfig) {
    auto c = parse_run_config(
        "valve.inlet.shape = standard\n"
        "drive.frequency_hz = 155.5\n"
        "solver.forcing_mode = pressure_coupled\n"
        "solver.check_valves = false\n"
        "pipe.area_m2 = 3.1e-6\n"
        "calibration.budget = 77\n");
    const auto dump = dump_run_config(c);
    const auto back = parse_run_config(dump, "dump");
    EXPECT_EQ(dump_run_config(back), dump);
    EXPECT_EQ(config_hash(back), config_hash(c));
    EXPECT_EQ(back.pump.forcing_mode, ForcingMode::PressureCoupled);
    EXPECT_EQ(back.pipe_area.value(), 3.1e-6);
    EXPECT_EQ(back.calibration_budget, 77);
    c.pump.drive.frequency = 155.6;
    EXPECT_NE(config_hash(c), config_hash(back));
}

TEST(RunConfigFile, EveryKeyAppearsInTheDump) {
    const auto dump = dump_run_config(parse_run_config("pipe.area_m2 = 1e-6\n"));
    for (const auto& key : run_config_keys()) EXPECT_TRUE(contains(dump, key + " = ")) << key;
    const auto no_area = dump_run_config(RunConfig{});
    EXPECT_TRUE(contains(no_area, "# pipe.area_m2")) << no_area;
    EXPECT_NO_THROW(parse_run_config(no_area));
}

TEST(RunConfigFile, RequireListsMissingKeys) {
    RunConfig c;
    const auto msg = message_of([&] { c.require({"pipe.area_m2"}); });
    EXPECT_TRUE(contains(msg, "pipe.area_m2")) << msg;
    c.pipe_area = 2e-6;
    EXPECT_NO_THROW(c.require({"pipe.area_m2"}));
}

TEST(RunConfigFile, ValidationNamesTheConfigKey) {
    auto c = parse_run_config("valve.inlet.thickness_m = 0\n");
    try {
        c.validate();
        FAIL() << "expected InvalidSpec";
    } catch (const InvalidSpec& e) {
        EXPECT_EQ(e.field(), "valve.inlet.thickness_m");
    }
    c = parse_run_config("calibration.force_per_volt_seed_n_per_v = -1\n");
    EXPECT_THROW(c.validate(), InvalidSpec);
    c = parse_run_config("sweep.f_min_hz = 200\n");
    EXPECT_THROW(c.validate(), InvalidSpec);
    c = parse_run_config("pipe.area_m2 = 0\n");
    EXPECT_THROW(c.validate(), InvalidSpec);
}

TEST(RunConfigFile, LoadFromMissingFileFails) {
    EXPECT_THROW(load_run_config("/nonexistent/run.cfg"), InvalidSpec);
}
