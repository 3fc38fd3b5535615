// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "layercast/experiment.hpp"
#include "support.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

using namespace layercast;

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto& row = rows.emplace_back();
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    if (!line.empty() && line.back() == ',') row.push_back("");
  }
  return rows;
}

std::string powermin_csv(const ExperimentConfig& c) {
  std::ostringstream out;
  run_powermin(c, out);
  return out.str();
}

std::string utilitymax_csv(const ExperimentConfig& c) {
  std::ostringstream out;
  run_utilitymax(c, out);
  return out.str();
}

const VideoProfile kTable = {{0.7447, 0.9358, 2.9765, 3.3320, 7.1040},
                             {28.1496, 30.6066, 37.2694, 37.6534, 39.2136}};

}  // namespace

TEST_CASE("presets match their figure captions") {
  struct Caption {
    std::string name;
    std::vector<int> users;
    std::vector<double> distances;
    std::vector<int> r;  // empty for utility studies and group sweeps
    std::vector<double> rates;
    int antennas;  // 0 when swept
  };
  const std::vector<Caption> captions = {
      {"fig3a", {1, 1}, {1, 2}, {2, 1}, {2, 2}, 0},
      {"fig3b", {1, 1}, {1, 2}, {3, 2}, {2, 2, 2}, 0},
      {"fig4a", {3, 3, 3}, {1, 3, 5}, {5, 3, 1}, {2, 2, 2, 2, 2}, 0},
      {"fig4b", {3, 3, 3}, {1, 3, 5}, {5, 3, 1}, {2, 2, 2, 2, 2}, 0},
      {"fig4c", {3, 3, 3}, {1, 3, 5}, {}, {2, 2, 2, 2, 2}, 12},
      {"fig5", {2, 2}, {1, 3}, {}, kTable.rates, 12},
      {"fig6a", {4, 4}, {1, 3}, {}, kTable.rates, 12},
      {"fig6b", {4}, {1}, {}, kTable.rates, 12},
      {"fig6c", {4, 4, 4}, {1, 3, 5}, {5, 3, 1}, kTable.rates, 0},
      {"fig7a", {5, 5, 5}, {1, 3, 5}, {}, kTable.rates, 12},
      {"fig7b", {5, 5, 5}, {1, 3, 5}, {}, kTable.rates, 0},
      {"fig7c", {5, 5, 5}, {1, 3, 5}, {}, kTable.rates, 12},
  };
  REQUIRE(captions.size() == preset_names().size());
  for (const auto& cap : captions) {
    CAPTURE(cap.name);
    const auto c = preset(cap.name);
    CHECK_NOTHROW(c.validate());
    CHECK(c.groups.users == cap.users);
    CHECK(c.groups.distances == cap.distances);
    CHECK(c.groups.path_loss_exponent == 2.0);
    CHECK(c.noise_power == 1.0);
    CHECK(c.profile.rates == cap.rates);
    if (cap.name >= "fig5") CHECK(c.profile.utilities == kTable.utilities);
    if (!cap.r.empty()) CHECK(c.selection.r == cap.r);
    if (cap.antennas) CHECK(c.antennas == cap.antennas);
    CHECK(c.ensemble_size == 100);
    for (double n : c.sweep_values)
      if (c.sweep == SweepParameter::Antennas) CHECK(n <= 12);
  }

  // Panel-specific parameters.
  CHECK(preset("fig4c").sweep == SweepParameter::Quality);
  CHECK(preset("fig4c").selection.r == std::vector<int>{5, 2, 1});
  CHECK(sweep_point(preset("fig6a"), 3).selection.r == std::vector<int>{5, 3});
  const auto g3 = sweep_point(preset("fig6b"), 3);
  CHECK(g3.selection.r == std::vector<int>{5, 4, 3});
  CHECK(g3.groups.distances == std::vector<double>{1, 3, 5});
  CHECK(g3.groups.users == std::vector<int>{4, 4, 4});
  CHECK(preset("fig7b").budget_db == 35.0);
  CHECK(preset("fig7c").budget_db == 40.0);
  CHECK(sweep_point(preset("fig7a"), 30).budget == doctest::Approx(1000.0));

  const auto big5 = preset("fig5", true);
  CHECK(big5.groups.users == std::vector<int>{5, 5, 5, 5});
  CHECK(big5.groups.distances == std::vector<double>{1, 3, 5, 7});
  CHECK(big5.ensemble_size == 1000);
  CHECK(big5.paper_scale);

  CHECK_THROWS_AS(preset("fig9"), std::invalid_argument);
}

TEST_CASE("config validation") {
  auto c = preset("fig3a");
  c.methods.clear();
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = preset("fig3a");
  c.sdp_tolerance = -1e-8;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  std::ostringstream sink;
  CHECK_THROWS_AS(run_powermin(c, sink), std::invalid_argument);

  c = preset("fig3a");
  c.methods = {"greedy"};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.methods = {"lb", "lb"};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = preset("fig3a");
  c.sweep_values = {2.5};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.sweep_values = {};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = preset("fig3a");
  c.selection.r = {3, 1};  // beyond the two-layer profile
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = preset("fig5");
  c.sweep = SweepParameter::Budget;
  c.sweep_values = {-1.0};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.sweep_values = {0.0};
  CHECK_NOTHROW(c.validate());
  c.sweep = SweepParameter::Quality;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("config files round trip and layer over presets") {
  const auto c = preset("fig4c");
  Json j = c;
  ExperimentConfig back;
  from_json(Json::parse(j.dump()), back);
  CHECK(Json(back) == j);

  const std::string path = "test_experiment_config.json";
  {
    std::ofstream f(path);
    f << R"({"preset": "fig3a", "seed": 9, "ensemble_size": 4,
             "sweep": {"values": [3, 5]}, "methods": ["lb"]})";
  }
  const auto loaded = load_config(path);
  CHECK(loaded.name == "fig3a");
  CHECK(loaded.seed == 9);
  CHECK(loaded.ensemble_size == 4);
  CHECK(loaded.sweep_values == std::vector<double>{3, 5});
  CHECK(loaded.methods == std::vector<std::string>{"lb"});
  CHECK(loaded.selection.r == std::vector<int>{2, 1});

  {
    std::ofstream f(path);
    f << R"({"preset": "fig3a", "sweep": {"parameter": "sideways"}})";
  }
  CHECK_THROWS_AS(load_config(path), std::invalid_argument);
  {
    std::ofstream f(path);
    f << "{not json";
  }
  CHECK_THROWS_AS(load_config(path), std::invalid_argument);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_config(path), std::invalid_argument);
}

TEST_CASE("instances serialize with complex entries as pairs") {
  std::mt19937_64 rng(4);
  const auto inst = testing::random_instance(rng, GroupConfig{{1, 2}, {1, 3}, 2.0},
                                             VideoProfile::kendo().truncated(2), 3);
  const Json j = inst;
  const auto& h = j.at("channel")[1][0];
  REQUIRE(h.size() == 3);
  CHECK(h[0].size() == 2);
  CHECK(h[0][0].get<double>() == inst.channel.h[1][0][0].real());
  CHECK(h[0][1].get<double>() == inst.channel.h[1][0][0].imag());

  const auto back = Json::parse(j.dump()).get<ProblemInstance>();
  CHECK(back.antennas == 3);
  CHECK(back.noise == inst.noise);
  for (int g = 0; g < 2; ++g)
    for (int u = 0; u < inst.groups.users[g]; ++u)
      CHECK((back.channel.h[g][u] - inst.channel.h[g][u]).norm() == 0.0);

  Json bad = j;
  bad["channel"][0][0][0] = {1.0};
  CHECK_THROWS_AS(bad.get<ProblemInstance>(), std::invalid_argument);

  const LayerSelection sel{{2, 1}};
  const auto plan = build_plan(sel, inst.profile);
  const auto plan_back = Json::parse(Json(plan).dump()).get<SuperLayerPlan>();
  CHECK(plan_back.partitions == plan.partitions);
  CHECK(plan_back.super_rates == plan.super_rates);

  const auto r = power_min(inst, sel, SchemeKind::QualityBased);
  const auto r_back = Json::parse(Json(r).dump()).get<PowerResult>();
  CHECK(r_back.power == r.power);
  CHECK(r_back.method == r.method);
  CHECK(check_feasible(inst, sel, SchemeKind::QualityBased, r_back.beamformers).feasible);

  ChannelEnsemble ens = sample_channels(inst.groups, 3, 2, 5);
  const auto ens_back = Json::parse(Json(ens).dump()).get<ChannelEnsemble>();
  CHECK(ens_back.seed == 5);
  CHECK(ens_back.states.size() == 2);
}

TEST_CASE("fig3a: the special-case solution meets its relaxation bound") {
  auto c = preset("fig3a");
  c.ensemble_size = 8;
  const auto rows = parse_csv(powermin_csv(c));
  REQUIRE(rows.front() == std::vector<std::string>{"sweep_value", "method", "mean_power",
                                                   "mean_power_db", "std_power", "feasible_count",
                                                   "infeasible_count", "failed_count"});
  REQUIRE(rows.size() == 1 + 2 * c.sweep_values.size());
  for (std::size_t i = 1; i < rows.size(); i += 2) {
    CHECK(rows[i][1] == "lb");
    CHECK(rows[i + 1][1] == "lb_sdr");
    CHECK(rows[i][5] == "8");
    const double p = std::stod(rows[i][2]), bound = std::stod(rows[i + 1][2]);
    CHECK(std::abs(p - bound) <= 1e-5 * bound);
  }
}

TEST_CASE("fig4a: both schemes agree and beat the baselines") {
  auto c = preset("fig4a");
  c.ensemble_size = 4;
  c.sweep_values = {12};
  const auto rows = parse_csv(powermin_csv(c));
  std::map<std::string, double> mean;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i][5] == "4");
    mean[rows[i][1]] = std::stod(rows[i][2]);
  }
  CHECK(std::abs(mean["lb"] - mean["qb"]) <= 1e-3 * mean["qb"]);
  CHECK(mean["qb_sdr"] <= mean["qb"] * (1 + 1e-6));
  for (const char* base : {"mgm", "mrt"}) {
    CHECK(mean["lb"] <= mean[base]);
    CHECK(mean["qb"] <= mean[base]);
  }
}

TEST_CASE("CSV output is byte-deterministic and independent of threads") {
  auto c = preset("fig3b");
  c.ensemble_size = 5;
  c.threads = 1;
  const auto a = powermin_csv(c);
  c.threads = 3;
  CHECK(powermin_csv(c) == a);
  c.seed = 2;
  CHECK(powermin_csv(c) != a);
}

TEST_CASE("utility study: budget zero is recorded as infeasible") {
  auto c = preset("fig5");
  c.ensemble_size = 2;
  c.sweep = SweepParameter::Budget;
  c.sweep_values = {0.0};
  c.methods = {"greedy", "exhaustive", "mgm", "mrt"};
  const auto rows = parse_csv(utilitymax_csv(c));
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == std::vector<std::string>{"sweep_value", "budget", "method", "status",
                                            "utility", "worst_case_power", "selection"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i][3] == "infeasible");
    CHECK(rows[i][4] == "0");
  }
}

TEST_CASE("fig5 desk scale: greedy stays close to exhaustive") {
  auto c = preset("fig5");
  c.ensemble_size = 4;
  const auto runs = utilitymax_runs(c);
  REQUIRE(runs.size() == 2 * c.sweep_values.size());
  for (std::size_t i = 0; i < runs.size(); i += 2) {
    const auto& greedy = runs[i];
    const auto& exhaustive = runs[i + 1];
    REQUIRE(greedy.method == "greedy");
    REQUIRE(exhaustive.method == "exhaustive");
    CHECK(greedy.status == exhaustive.status);
    if (greedy.status != RunStatus::Ok) continue;
    CHECK(greedy.result.utility >= 0.98 * exhaustive.result.utility);
    CHECK(greedy.result.utility <= exhaustive.result.utility + 1e-9);
    CHECK(greedy.result.worst_case_power <= greedy.point.budget);
  }
}

TEST_CASE("baseline-driven selection never beats the proposed selection") {
  auto c = preset("fig7a");
  c.ensemble_size = 2;
  c.groups.users = {1, 1, 1};
  c.sweep_values = {30};
  const auto runs = utilitymax_runs(c);
  REQUIRE(runs.size() == 3);
  REQUIRE(runs[0].status == RunStatus::Ok);
  for (int i = 1; i < 3; ++i)
    if (runs[i].status == RunStatus::Ok) CHECK(runs[i].result.utility <= runs[0].result.utility);
}

TEST_CASE("timing adds a runtime column") {
  auto c = preset("fig3a");
  c.ensemble_size = 2;
  c.sweep_values = {4};
  c.timing = true;
  const auto rows = parse_csv(powermin_csv(c));
  CHECK(rows[0].back() == "mean_runtime_s");
  CHECK(std::stod(rows[1].back()) >= 0.0);
}

TEST_CASE("verify is deterministic and passes") {
  std::ostringstream a, b;
  const auto first = verify(42, 1);
  first.write(a);
  verify(42, 1).write(b);
  CHECK(a.str() == b.str());
  CHECK(first.passed());
  CHECK(a.str().rfind("layercast verify seed=42\n", 0) == 0);
}

TEST_CASE("verify passes across seeds") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto report = verify(seed, 1);
    std::ostringstream text;
    report.write(text);
    CAPTURE(text.str());
    CHECK(report.passed());
  }
}

TEST_CASE("special-case rows") {
  const auto rows = special_case_rows(3);
  int layer = 0, quality = 0;
  for (const auto& row : rows) {
    GroupConfig groups{row.users, std::vector<double>(row.users.size(), 1.0), 2.0};
    CHECK(row.quality_table);
    if (row.layer_table) {
      ++layer;
      CHECK(is_special_case(groups, row.selection, SchemeKind::LayerBased));
    }
    ++quality;
    CHECK(is_special_case(groups, row.selection, SchemeKind::QualityBased));
  }
  // Table I at L=3: 2+1+2 two-group rows, 3+2+1 single-group rows.
  CHECK(layer == 11);
  // Table II at L=3: 3 ordered pairs for each two-group U, 3 users x 3 qualities.
  CHECK(quality == 15);
}

TEST_CASE("dump-sdp writes the relaxation") {
  auto c = preset("fig4a");
  std::ostringstream qb, lb;
  dump_sdp(c, "qb", qb);
  dump_sdp(c, "lb", lb);
  CHECK(!qb.str().empty());
  CHECK(qb.str() != lb.str());
  CHECK_THROWS_AS(dump_sdp(c, "xb", qb), std::invalid_argument);
}
