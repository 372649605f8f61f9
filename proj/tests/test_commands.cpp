#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "qcorr/commands.hpp"
#include "qcorr/detection.hpp"

using namespace qcorr;

namespace {

RunConfig small_grid(RunConfig cfg) {
  cfg.t0_grid = GridSpec{0.0, 6.0, 7};
  cfg.t1_grid = GridSpec{0.0, 12.0, 9};
  cfg.dimensionless_time = true;
  return cfg;
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

PopulationDataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_dataset(in);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("csv rendering") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(-2.5) == "-2.5");
  CHECK(format_double(std::nan("")) == "nan");
  CsvTable t{{"qcorr test", "seed: 3"}, {"a", "b"}, {{1.0, 1.0 / 3.0}, {0.0, 1e-300}}};
  CHECK(t.render() ==
        "# qcorr test\n# seed: 3\na,b\n1,0.33333333333333331\n0,1e-300\n");
  // 17 significant digits round-trip exactly.
  for (double x : {1.0 / 3.0, 2.718281828459045, 6.02214076e23, 1e-300})
    CHECK(std::stod(format_double(x)) == x);
}

TEST_CASE("dataset parsing") {
  SUBCASE("comments, blank lines and CRLF") {
    const auto d = parse("# made by hand\n\nt_s,p_e,n_shots\r\n1e-5, 0.25 ,100\n2e-5,0.5,100\n");
    CHECK(d.size() == 2);
    CHECK(d.times[0] == 1e-5);
    CHECK(d.p_e[0] == 0.25);
    CHECK(d.n_shots[1] == 100);
  }
  SUBCASE("errors name the line") {
    CHECK(error_of("") == "dataset is empty");
    CHECK(error_of("# only a comment\n") == "dataset is empty");
    CHECK(error_of("t_s,p_e,n_shots\n") == "dataset has a header but no rows");
    CHECK(error_of("time,p,n\n1,0.5,1\n").find("line 1") != std::string::npos);
    CHECK(error_of("t_s,p_e,n_shots\n1,0.5\n").find("line 2: expected 3 columns") !=
          std::string::npos);
    CHECK(error_of("t_s,p_e,n_shots\n1,0.5,10\n2,abc,10\n").find("line 3: cannot parse p_e") !=
          std::string::npos);
    CHECK(error_of("t_s,p_e,n_shots\n1,1.5,10\n").find("outside") != std::string::npos);
    CHECK(error_of("t_s,p_e,n_shots\n1,0.5,0\n").find("positive") != std::string::npos);
    CHECK(error_of("t_s,p_e,n_shots\n1,0.5,2.5\n").find("n_shots") != std::string::npos);
    CHECK(error_of("t_s,p_e,n_shots\n2,0.5,10\n# x\n1,0.5,10\n").find("line 4") !=
          std::string::npos);
  }
  SUBCASE("missing file is an I/O error") {
    CHECK_THROWS_AS(read_dataset("/nonexistent/dir/data.csv"), IoError);
  }
  SUBCASE("rendering round-trips") {
    const PopulationDataset d{{1e-5, 3.3e-5}, {0.123456789012345678, 0.9}, {1000, 7}};
    const auto back = parse(render_dataset(d, {"meta"}));
    CHECK(back.times == d.times);
    CHECK(back.p_e == d.p_e);
    CHECK(back.n_shots == d.n_shots);
  }
}

TEST_CASE("configuration") {
  SUBCASE("presets") {
    CHECK(preset_names().size() == 5);
    const auto cfg = apply_preset(RunConfig{}, "avg-doppler-cooled");
    CHECK(cfg.nbar == 5.6);
    CHECK(cfg.eta == 0.04);
    CHECK(cfg.preset == "avg-doppler-cooled");
    CHECK(apply_preset(RunConfig{}, "ground-state").nbar == 0.0);
    CHECK_THROWS_AS(apply_preset(RunConfig{}, "lukewarm"), ConfigError);
    CHECK(time_scale(cfg) == doctest::Approx(0.04 * 2 * std::numbers::pi * 100e3));
  }
  SUBCASE("json overlay and round trip") {
    const auto cfg = merge_json(RunConfig{}, nlohmann::json::parse(
                                                 R"({"preset": "doppler-cooled", "seed": 9,
                                                     "t1_grid": {"start": 0, "stop": 1e-4, "count": 5},
                                                     "stark": {"detuning_hz": 3e11}})"));
    CHECK(cfg.nbar == 5.9);
    CHECK(cfg.seed == 9);
    CHECK(cfg.t1_grid->count == 5);
    CHECK(cfg.stark.detuning_hz == 3e11);
    const auto again = merge_json(RunConfig{}, to_json(cfg));
    CHECK(to_json(again) == to_json(cfg));
  }
  SUBCASE("unknown keys and bad values are rejected") {
    CHECK_THROWS_AS(merge_json(RunConfig{}, nlohmann::json::parse(R"({"nbr": 1})")), ConfigError);
    CHECK_THROWS_AS(merge_json(RunConfig{}, nlohmann::json::parse(R"({"stark": {"x": 1}})")),
                    ConfigError);
    CHECK_THROWS_AS(merge_json(RunConfig{}, nlohmann::json::parse(R"({"eta": "big"})")),
                    ConfigError);
    CHECK_THROWS_AS(merge_json(RunConfig{}, nlohmann::json::parse("[1]")), ConfigError);
    RunConfig bad;
    bad.eta = -1.0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = RunConfig{};
    bad.t0_grid = GridSpec{1.0, 0.0, 3};
    CHECK_THROWS_AS(validate(bad), ConfigError);
    CHECK_THROWS_AS(load_config_file("/nonexistent/cfg.json"), IoError);
  }
  SUBCASE("dimensionless time") {
    RunConfig cfg;
    CHECK(to_seconds(cfg, 1e-4) == 1e-4);
    cfg.dimensionless_time = true;
    CHECK(to_seconds(cfg, 2.0) == doctest::Approx(2.0 / time_scale(cfg)));
  }
}

TEST_CASE("flop and scan commands") {
  const auto cfg = small_grid(apply_preset(RunConfig{}, "sideband-cooled"));
  SUBCASE("flop runs both presets by default") {
    const auto out = cmd_flop(cfg, true);
    REQUIRE(out.files.size() == 2);
    CHECK(out.files[0].name == "flop_sideband-cooled.csv");
    CHECK(out.files[1].name == "flop_doppler-cooled.csv");
    const auto lines = lines_of(out.files[0].content);
    CHECK(lines[0] == "# qcorr flop");
    CHECK(lines[1].rfind("# config: {", 0) == 0);
    CHECK(std::count(lines.begin(), lines.end(), "t1_s,t1_dimensionless,p_e,p_e_dephased,d") == 1);
    CHECK(lines.size() == 5 + 1 + 9);
  }
  SUBCASE("columns agree with the library functions") {
    const auto out = cmd_scan(cfg);
    const auto model = sideband_model(cfg);
    const auto lines = lines_of(out.files.at(0).content);
    int rows = 0;
    for (const auto& l : lines) {
      if (l.empty() || l[0] == '#' || l[0] == 't') continue;
      std::vector<double> v;
      std::istringstream in(l);
      for (std::string c; std::getline(in, c, ',');) v.push_back(std::stod(c));
      REQUIRE(v.size() == 8);
      CHECK(v[4] <= v[5] + 1e-10);
      CHECK(v[4] == local_distance(model, v[0], v[1]));
      ++rows;
    }
    CHECK(rows == 7 * 9);
  }
  SUBCASE("coarse grid warns") {
    auto coarse = cfg;
    coarse.t1_grid = GridSpec{0.0, 200.0, 5};
    CHECK_FALSE(cmd_scan(coarse).warnings.empty());
  }
  SUBCASE("identical runs give identical bytes") {
    CHECK(cmd_scan(cfg).files[0].content == cmd_scan(cfg).files[0].content);
    CHECK(cmd_maxdist(cfg).files[0].content == cmd_maxdist(cfg).files[0].content);
    auto synth = cfg;
    synth.seed = 5;
    CHECK(cmd_synth(synth).files[0].content == cmd_synth(synth).files[0].content);
    auto other = synth;
    other.seed = 6;
    CHECK(cmd_synth(synth).files[0].content != cmd_synth(other).files[0].content);
  }
}

TEST_CASE("time-average and maxdist commands") {
  auto cfg = small_grid(apply_preset(RunConfig{}, "avg-sideband-cooled"));
  cfg.t0_grid = GridSpec{0.5, 2.5, 3};
  SUBCASE("timeavg close to half the HS discord") {
    const auto out = cmd_timeavg(cfg);
    CHECK(out.warnings.empty());
    int rows = 0;
    for (const auto& l : lines_of(out.files.at(0).content)) {
      if (l.empty() || l[0] == '#' || l[0] == 't') continue;
      std::vector<double> v;
      std::istringstream in(l);
      for (std::string c; std::getline(in, c, ',');) v.push_back(std::stod(c));
      CHECK(std::abs(v[5]) < 0.02);
      ++rows;
    }
    CHECK(rows == 3);
  }
  SUBCASE("detuned timeavg warns") {
    auto detuned = cfg;
    detuned.delta0_hz = 500.0;
    detuned.t1_samples = 2001;
    CHECK_FALSE(cmd_timeavg(detuned).warnings.empty());
  }
  SUBCASE("maxdist ratios stay below one") {
    for (const auto& l : lines_of(cmd_maxdist(cfg).files.at(0).content)) {
      if (l.empty() || l[0] == '#' || l[0] == 't') continue;
      std::vector<double> v;
      std::istringstream in(l);
      for (std::string c; std::getline(in, c, ',');) v.push_back(std::stod(c));
      CHECK(v[5] <= 1.0 + 1e-10);
      CHECK(v[8] <= 1.0 + 1e-10);
      CHECK(v[6] >= v[2]);
    }
  }
}

TEST_CASE("synth, fit and budget commands") {
  const auto dir = std::filesystem::temp_directory_path() / "qcorr_test_commands";
  std::filesystem::remove_all(dir);
  auto cfg = apply_preset(RunConfig{}, "sideband-cooled");
  cfg.delta0_hz = 1e3;
  cfg.sigma_delta_hz = 1e3;
  cfg.synth.times = GridSpec{500e-6 / 30, 500e-6, 30};
  cfg.synth.shot_noise = false;
  cfg.fit.nbar = 0.3;
  cfg.fit.omega_hz = 98e3;
  cfg.fit.delta0_hz = 600.0;
  cfg.fit.sigma_delta_hz = 1400.0;
  cfg.fit.n_starts = 3;

  SUBCASE("noiseless file round trip") {
    const auto synth = cmd_synth(cfg);
    write_outputs(synth, dir.string());
    const auto path = (dir / synth.files.at(0).name).string();
    const auto out = cmd_fit(path, cfg);
    const auto j = nlohmann::json::parse(out.files.at(0).content);
    CHECK(j["converged"] == true);
    CHECK(j["nbar"]["value"].get<double>() == doctest::Approx(0.2).epsilon(1e-6));
    CHECK(j["omega_hz"]["value"].get<double>() == doctest::Approx(100e3).epsilon(1e-6));
    CHECK(std::abs(j["delta0_hz"]["value"].get<double>()) == doctest::Approx(1e3).epsilon(1e-5));
    CHECK(j["covariance"].size() == 4);
    CHECK(j["dataset"] == path);
  }
  SUBCASE("empty and missing files") {
    std::filesystem::create_directories(dir);
    const auto empty = (dir / "empty.csv").string();
    std::ofstream(empty).close();
    CHECK_THROWS_AS(cmd_fit(empty, cfg), ConfigError);
    CHECK_THROWS_AS(cmd_fit((dir / "absent.csv").string(), cfg), IoError);
  }
  SUBCASE("budget report") {
    const auto j = nlohmann::json::parse(cmd_budget(RunConfig{}).files.at(0).content);
    CHECK(j["scattering_events"].get<double>() == doctest::Approx(3.5e-4).epsilon(0.02));
    CHECK(j["saturation_intensity_mw_per_cm2"].get<double>() == doctest::Approx(46.8).epsilon(0.01));
    CHECK(j["saturation_parameter"].get<double>() == doctest::Approx(255).epsilon(0.01));
    const auto& sweep = j["detuning_sweep"];
    REQUIRE(sweep.size() >= 3);
    for (std::size_t k = 1; k < sweep.size(); ++k)
      CHECK(sweep[k]["detuning_hz"].get<double>() > sweep[k - 1]["detuning_hz"].get<double>());
  }
  SUBCASE("unwritable output directory") {
    CommandOutput out;
    out.files.push_back({"x.txt", "x"});
    CHECK_THROWS_AS(write_outputs(out, "/proc/qcorr_no_such_dir"), IoError);
  }
  std::filesystem::remove_all(dir);
}
