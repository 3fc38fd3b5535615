// SPDX-License-Identifier: Apache-2.0
#include "layercast/experiment.hpp"

#include "layercast/baselines.hpp"
#include "layercast/beamform.hpp"
#include "layercast/errors.hpp"
#include "layercast/parallel.hpp"
#include "layercast/sdp.hpp"
#include "layercast/selection.hpp"
#include "layercast/superlayer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace layercast {

namespace {

const std::vector<std::string> kPowerMethods = {"lb", "qb", "lb_sdr", "qb_sdr", "mgm", "mrt"};
const std::vector<std::string> kUtilityMethods = {"greedy", "exhaustive", "mgm", "mrt"};

const std::map<std::string, SweepParameter> kSweepNames = {
    {"antennas", SweepParameter::Antennas}, {"quality", SweepParameter::Quality},
    {"groups", SweepParameter::Groups},     {"users", SweepParameter::Users},
    {"budget", SweepParameter::Budget},     {"budget_db", SweepParameter::BudgetDb}};

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::vector<double> range(double first, double last, double step) {
  std::vector<double> v;
  for (double x = first; x <= last + 1e-9; x += step) v.push_back(x);
  return v;
}

double from_db(double db) { return std::pow(10.0, db / 10.0); }

std::string num(double x) {
  std::ostringstream os;
  os << std::setprecision(12) << x;
  return os.str();
}

int as_count(double v, const char* what) {
  if (!std::isfinite(v) || v != std::floor(v) || v < 1 || v > 1e6)
    throw std::invalid_argument(std::string(what) + " sweep values must be positive integers");
  return static_cast<int>(v);
}

GroupConfig uniform_groups(int count, int users, double eta) {
  GroupConfig g;
  g.path_loss_exponent = eta;
  for (int i = 0; i < count; ++i) {
    g.users.push_back(users);
    g.distances.push_back(2.0 * i + 1.0);
  }
  return g;
}

PowerOptions power_options(double tolerance) {
  PowerOptions o;
  o.sdp.tolerance = tolerance;
  o.penalty.sdp.tolerance = tolerance;
  return o;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// One state, one power-minimization method. Library errors become outcomes;
// anything else is a bug and propagates.
MethodRun run_power_method(const std::string& method, const ProblemInstance& inst,
                          const LayerSelection& sel, const ExperimentConfig& config,
                          std::uint64_t state_seed) {
  MethodRun run;
  const auto start = Clock::now();
  try {
    const auto opts = power_options(config.sdp_tolerance);
    double p = 0.0;
    if (method == "lb" || method == "qb") {
      p = power_min(inst, sel, scheme_from_string(method), opts).power;
    } else if (method == "lb_sdr" || method == "qb_sdr") {
      const auto scheme = scheme_from_string(method.substr(0, 2));
      p = solve_sdr(build_sdr(inst, sel, scheme), scheme, opts.sdp).objective();
    } else if (method == "mgm") {
      p = mgm_power_min(inst, sel, config.mgm_randomizations, state_seed, opts.sdp).power;
    } else {
      p = mrt_power_min(inst, sel, SchemeKind::LayerBased).power;
    }
    if (std::isfinite(p)) {
      run.status = RunStatus::Ok;
      run.power = p;
    } else {
      run.status = RunStatus::Infeasible;
    }
  } catch (const InfeasibleError&) {
    run.status = RunStatus::Infeasible;
  } catch (const Error&) {
    run.status = RunStatus::Failed;
  }
  run.seconds = seconds_since(start);
  return run;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

ProblemInstance make_instance(const ExperimentConfig& config, const SweepPoint& point,
                              const ChannelState& state) {
  return ProblemInstance::make(config.profile, point.groups, state, config.noise_power);
}

}  // namespace

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Ok: return "ok";
    case RunStatus::Infeasible: return "infeasible";
    case RunStatus::Failed: return "failed";
  }
  return "failed";
}

std::string to_string(SweepParameter p) {
  for (const auto& [name, value] : kSweepNames)
    if (value == p) return name;
  return "antennas";
}

SweepParameter sweep_parameter_from_string(const std::string& name) {
  const auto it = kSweepNames.find(name);
  if (it == kSweepNames.end()) throw std::invalid_argument("unknown sweep parameter '" + name + "'");
  return it->second;
}

SweepPoint sweep_point(const ExperimentConfig& config, double value) {
  SweepPoint p;
  p.value = value;
  p.groups = config.groups;
  p.antennas = config.antennas;
  p.selection = config.selection;
  p.budget = from_db(config.budget_db);
  switch (config.sweep) {
    case SweepParameter::Antennas:
      p.antennas = as_count(value, "antenna");
      break;
    case SweepParameter::Quality:
      if (config.sweep_group < 0 || config.sweep_group >= p.selection.group_count())
        throw std::invalid_argument("sweep_group is out of range");
      p.selection.r[config.sweep_group] = as_count(value, "quality");
      break;
    case SweepParameter::Groups: {
      if (config.groups.users.empty()) throw std::invalid_argument("group sweep needs a first group");
      const int g = as_count(value, "group");
      const int layers = config.profile.layer_count();
      p.groups = uniform_groups(g, config.groups.users[0], config.groups.path_loss_exponent);
      p.selection.r.clear();
      for (int i = 1; i <= g; ++i) p.selection.r.push_back(std::clamp(layers + 1 - i, 1, layers));
      break;
    }
    case SweepParameter::Users:
      for (int& u : p.groups.users) u = as_count(value, "user");
      break;
    case SweepParameter::Budget:
      p.budget = value;
      break;
    case SweepParameter::BudgetDb:
      p.budget = from_db(value);
      break;
  }
  return p;
}

void ExperimentConfig::validate() const {
  profile.validate();
  groups.validate();
  if (!(noise_power > 0.0) || !std::isfinite(noise_power))
    throw std::invalid_argument("noise_power must be positive and finite");
  if (antennas < 1) throw std::invalid_argument("antennas must be at least 1");
  if (ensemble_size < 1) throw std::invalid_argument("ensemble_size must be at least 1");
  if (!(sdp_tolerance >= 1e-12 && sdp_tolerance <= 1e-4))
    throw std::invalid_argument("sdp_tolerance must lie in [1e-12, 1e-4]");
  if (mgm_randomizations < 1) throw std::invalid_argument("mgm_randomizations must be at least 1");
  if (threads < 0) throw std::invalid_argument("threads must be nonnegative");
  if (!std::isfinite(budget_db)) throw std::invalid_argument("budget_db must be finite");
  if (methods.empty()) throw std::invalid_argument("method list is empty");
  const auto& known = kind == StudyKind::PowerMin ? kPowerMethods : kUtilityMethods;
  std::set<std::string> seen;
  for (const auto& m : methods) {
    if (!contains(known, m)) throw std::invalid_argument("unknown method '" + m + "'");
    if (!seen.insert(m).second) throw std::invalid_argument("method '" + m + "' listed twice");
  }
  if (sweep_values.empty()) throw std::invalid_argument("sweep has no values");
  const bool budget_sweep = sweep == SweepParameter::Budget || sweep == SweepParameter::BudgetDb;
  if (kind == StudyKind::PowerMin && budget_sweep)
    throw std::invalid_argument("power minimization cannot sweep the budget");
  if (kind == StudyKind::UtilityMax && sweep == SweepParameter::Quality)
    throw std::invalid_argument("utility maximization chooses the qualities itself");
  for (double v : sweep_values) {
    const auto p = sweep_point(*this, v);
    p.groups.validate();
    if (kind == StudyKind::PowerMin) p.selection.validate(profile, p.groups);
    if (!(p.budget >= 0.0) || !std::isfinite(p.budget))
      throw std::invalid_argument("budgets must be finite and nonnegative");
  }
}

std::vector<std::string> preset_names() {
  return {"fig3a", "fig3b", "fig4a", "fig4b", "fig4c", "fig5", "fig6a",
          "fig6b", "fig6c", "fig7a", "fig7b", "fig7c"};
}

ExperimentConfig preset(const std::string& name, bool paper_scale) {
  ExperimentConfig c;
  c.name = name;
  c.paper_scale = paper_scale;
  c.ensemble_size = paper_scale ? 1000 : 100;
  c.noise_power = 1.0;
  const auto all_power = std::vector<std::string>{"lb", "qb", "lb_sdr", "qb_sdr", "mgm", "mrt"};

  if (name == "fig3a" || name == "fig3b") {
    c.kind = StudyKind::PowerMin;
    c.groups = GroupConfig{{1, 1}, {1.0, 2.0}, 2.0};
    if (name == "fig3a") {
      c.profile = VideoProfile::uniform(2, 2.0);
      c.selection = LayerSelection{{2, 1}};
      c.methods = {"lb", "lb_sdr"};
    } else {
      c.profile = VideoProfile::uniform(3, 2.0);
      c.selection = LayerSelection{{3, 2}};
      c.methods = {"qb", "qb_sdr"};
    }
    c.sweep = SweepParameter::Antennas;
    c.sweep_values = paper_scale ? range(2, 16, 2) : range(2, 12, 2);
  } else if (name == "fig4a" || name == "fig4b" || name == "fig4c") {
    c.kind = StudyKind::PowerMin;
    c.groups = uniform_groups(3, 3, 2.0);
    c.profile = VideoProfile::uniform(5, 2.0);
    c.selection = LayerSelection{{5, 3, 1}};
    c.methods = name == "fig4a" ? all_power : std::vector<std::string>{"lb", "qb"};
    if (name == "fig4c") {
      c.antennas = 12;
      c.selection = LayerSelection{{5, 2, 1}};
      c.sweep = SweepParameter::Quality;
      c.sweep_group = 0;
      c.sweep_values = range(2, 5, 1);
    } else {
      c.sweep = SweepParameter::Antennas;
      c.sweep_values = paper_scale ? range(4, 16, 2) : range(4, 12, 2);
    }
  } else if (name == "fig5") {
    c.kind = StudyKind::UtilityMax;
    c.profile = VideoProfile::kendo();
    c.groups = paper_scale ? uniform_groups(4, 5, 2.0) : uniform_groups(2, 2, 2.0);
    c.antennas = 12;
    c.methods = {"greedy", "exhaustive"};
    c.sweep = SweepParameter::BudgetDb;
    c.sweep_values = paper_scale ? range(20, 60, 5) : range(10, 40, 5);
  } else if (name == "fig6a" || name == "fig6b" || name == "fig6c") {
    c.kind = StudyKind::PowerMin;
    c.profile = VideoProfile::kendo();
    c.antennas = 12;
    c.methods = all_power;
    if (name == "fig6a") {
      c.groups = uniform_groups(2, 4, 2.0);
      c.selection = LayerSelection{{5, 1}};
      c.sweep = SweepParameter::Quality;
      c.sweep_group = 1;
      c.sweep_values = range(1, 5, 1);
    } else if (name == "fig6b") {
      c.groups = uniform_groups(1, 4, 2.0);
      c.selection = LayerSelection{{5}};
      c.sweep = SweepParameter::Groups;
      c.sweep_values = paper_scale ? range(1, 5, 1) : range(1, 3, 1);
    } else {
      c.groups = uniform_groups(3, 4, 2.0);
      c.selection = LayerSelection{{5, 3, 1}};
      c.sweep = SweepParameter::Antennas;
      c.sweep_values = paper_scale ? range(8, 16, 2) : range(8, 12, 2);
    }
  } else if (name == "fig7a" || name == "fig7b" || name == "fig7c") {
    c.kind = StudyKind::UtilityMax;
    c.profile = VideoProfile::kendo();
    c.groups = uniform_groups(3, 5, 2.0);
    c.antennas = 12;
    c.methods = {"greedy", "mgm", "mrt"};
    if (name == "fig7a") {
      c.sweep = SweepParameter::BudgetDb;
      c.sweep_values = range(20, 50, 5);
    } else if (name == "fig7b") {
      c.budget_db = 35.0;
      c.sweep = SweepParameter::Antennas;
      c.sweep_values = paper_scale ? range(4, 16, 2) : range(4, 12, 2);
    } else {
      c.budget_db = 40.0;
      c.sweep = SweepParameter::Users;
      c.sweep_values = paper_scale ? range(1, 10, 1) : range(1, 5, 1);
    }
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  return c;
}

void to_json(Json& j, const ExperimentConfig& c) {
  j = Json{{"name", c.name},
           {"study", c.kind == StudyKind::PowerMin ? "powermin" : "utilitymax"},
           {"groups", c.groups},
           {"profile", c.profile},
           {"noise_power", c.noise_power},
           {"antennas", c.antennas},
           {"selection", c.selection},
           {"budget_db", c.budget_db},
           {"sweep", {{"parameter", to_string(c.sweep)},
                      {"group", c.sweep_group},
                      {"values", c.sweep_values}}},
           {"ensemble_size", c.ensemble_size},
           {"seed", c.seed},
           {"methods", c.methods},
           {"sdp_tolerance", c.sdp_tolerance},
           {"mgm_randomizations", c.mgm_randomizations},
           {"paper_scale", c.paper_scale}};
}

void from_json(const Json& j, ExperimentConfig& c) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  if (j.contains("preset"))
    c = preset(j.at("preset").get<std::string>(), j.value("paper_scale", false));
  if (j.contains("name")) c.name = j.at("name").get<std::string>();
  if (j.contains("study")) {
    const auto s = j.at("study").get<std::string>();
    if (s == "powermin")
      c.kind = StudyKind::PowerMin;
    else if (s == "utilitymax")
      c.kind = StudyKind::UtilityMax;
    else
      throw std::invalid_argument("study must be powermin or utilitymax");
  }
  if (j.contains("groups")) j.at("groups").get_to(c.groups);
  if (j.contains("profile")) j.at("profile").get_to(c.profile);
  if (j.contains("noise_power")) c.noise_power = j.at("noise_power").get<double>();
  if (j.contains("antennas")) c.antennas = j.at("antennas").get<int>();
  if (j.contains("selection")) j.at("selection").get_to(c.selection);
  if (j.contains("budget_db")) c.budget_db = j.at("budget_db").get<double>();
  if (j.contains("sweep")) {
    const Json& s = j.at("sweep");
    if (s.contains("parameter"))
      c.sweep = sweep_parameter_from_string(s.at("parameter").get<std::string>());
    if (s.contains("group")) c.sweep_group = s.at("group").get<int>();
    if (s.contains("values")) s.at("values").get_to(c.sweep_values);
  }
  if (j.contains("ensemble_size")) c.ensemble_size = j.at("ensemble_size").get<int>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("methods")) j.at("methods").get_to(c.methods);
  if (j.contains("sdp_tolerance")) c.sdp_tolerance = j.at("sdp_tolerance").get<double>();
  if (j.contains("mgm_randomizations"))
    c.mgm_randomizations = j.at("mgm_randomizations").get<int>();
  if (j.contains("paper_scale")) c.paper_scale = j.at("paper_scale").get<bool>();
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw std::invalid_argument("config file '" + path + "': " + e.what());
  }
  ExperimentConfig c;
  try {
    from_json(j, c);
  } catch (const Json::exception& e) {
    throw std::invalid_argument("config file '" + path + "': " + e.what());
  }
  return c;
}

std::vector<PowerSweepPoint> powermin_runs(const ExperimentConfig& config) {
  config.validate();
  if (config.kind != StudyKind::PowerMin)
    throw std::invalid_argument("config describes a utility study");
  // Timed runs go one state at a time so the clock measures a solve, not
  // contention between workers.
  const int threads = config.timing ? 1 : config.threads;
  const int methods = static_cast<int>(config.methods.size());
  const int states = config.ensemble_size;

  std::vector<PowerSweepPoint> out;
  bool warmed = !config.timing;
  for (double value : config.sweep_values) {
    auto& entry = out.emplace_back();
    entry.point = sweep_point(config, value);
    const auto& point = entry.point;
    const auto ensemble = sample_channels(point.groups, point.antennas, states, config.seed);

    if (!warmed) {
      const auto inst = make_instance(config, point, ensemble.states[0]);
      for (const auto& m : config.methods) run_power_method(m, inst, point.selection, config, 0);
      warmed = true;
    }

    entry.runs.assign(states, std::vector<MethodRun>(methods));
    parallel_for(states, threads, [&](int s) {
      const auto inst = make_instance(config, point, ensemble.states[s]);
      for (int m = 0; m < methods; ++m)
        entry.runs[s][m] = run_power_method(config.methods[m], inst, point.selection, config,
                                            mix(config.seed, static_cast<std::uint64_t>(s)));
    });
  }
  return out;
}

void run_powermin(const ExperimentConfig& config, std::ostream& csv) {
  const auto sweep = powermin_runs(config);
  csv << "sweep_value,method,mean_power,mean_power_db,std_power,feasible_count,"
         "infeasible_count,failed_count"
      << (config.timing ? ",mean_runtime_s" : "") << "\n";

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& entry : sweep) {
    const int states = static_cast<int>(entry.runs.size());
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      int ok = 0, infeasible = 0, failed = 0;
      double sum = 0.0, seconds = 0.0;
      for (const auto& row : entry.runs) {
        const auto& r = row[m];
        seconds += r.seconds;
        if (r.status == RunStatus::Ok) {
          ++ok;
          sum += r.power;
        } else if (r.status == RunStatus::Infeasible) {
          ++infeasible;
        } else {
          ++failed;
        }
      }
      const double mean = ok ? sum / ok : nan;
      double var = 0.0;
      for (const auto& row : entry.runs)
        if (row[m].status == RunStatus::Ok) var += std::pow(row[m].power - mean, 2);
      const double sd = ok ? std::sqrt(var / ok) : nan;
      csv << num(entry.point.value) << ',' << config.methods[m] << ',' << num(mean) << ','
          << num(ok ? 10.0 * std::log10(mean) : nan) << ',' << num(sd) << ',' << ok << ','
          << infeasible << ',' << failed;
      if (config.timing) csv << ',' << num(seconds / states);
      csv << "\n";
    }
  }
}

std::vector<UtilityRun> utilitymax_runs(const ExperimentConfig& config) {
  config.validate();
  if (config.kind != StudyKind::UtilityMax)
    throw std::invalid_argument("config describes a power study");
  SelectionOptions options;
  options.power = power_options(config.sdp_tolerance);
  options.threads = config.timing ? 1 : config.threads;

  std::vector<UtilityRun> out;
  bool warmed = !config.timing;
  for (double value : config.sweep_values) {
    const auto point = sweep_point(config, value);
    const auto ensemble =
        sample_channels(point.groups, point.antennas, config.ensemble_size, config.seed);
    if (!warmed) {
      const auto inst = make_instance(config, point, ensemble.states[0]);
      LayerSelection ones{std::vector<int>(point.groups.group_count(), 1)};
      run_power_method("qb", inst, ones, config, 0);
      warmed = true;
    }

    for (const auto& method : config.methods) {
      auto& run = out.emplace_back();
      run.point = point;
      run.method = method;
      run.status = RunStatus::Infeasible;
      const auto start = Clock::now();
      if (point.budget > 0.0) {
        auto problem = BudgetedProblem::make(config.profile, point.groups, ensemble, point.budget,
                                             config.noise_power);
        try {
          if (method == "greedy")
            run.result = greedy_select(problem, options);
          else if (method == "exhaustive")
            run.result = exhaustive_select(problem, options);
          else if (method == "mgm")
            run.result = greedy_select(
                problem, mgm_oracle(config.mgm_randomizations, config.seed), options.threads);
          else
            run.result = greedy_select(problem, mrt_oracle(), options.threads);
          run.status = RunStatus::Ok;
        } catch (const InfeasibleError&) {
          run.status = RunStatus::Infeasible;
        } catch (const Error&) {
          run.status = RunStatus::Failed;
        }
      }
      run.seconds = seconds_since(start);
    }
  }
  return out;
}

void run_utilitymax(const ExperimentConfig& config, std::ostream& csv) {
  const auto runs = utilitymax_runs(config);
  csv << "sweep_value,budget,method,status,utility,worst_case_power,selection"
      << (config.timing ? ",runtime_s" : "") << "\n";
  for (const auto& run : runs) {
    csv << num(run.point.value) << ',' << num(run.point.budget) << ',' << run.method << ','
        << to_string(run.status) << ',';
    if (run.status == RunStatus::Ok)
      csv << num(run.result.utility) << ',' << num(run.result.worst_case_power) << ','
          << selection_label(run.result.selection);
    else
      csv << "0,,";
    if (config.timing) csv << ',' << num(run.seconds);
    csv << "\n";
  }
}

std::vector<SpecialCaseRow> special_case_rows(int layers) {
  std::map<std::pair<std::vector<int>, std::vector<int>>, SpecialCaseRow> rows;
  auto add = [&](std::vector<int> users, std::vector<int> r, bool layer_table) {
    auto& row = rows[{users, r}];
    row.users = users;
    row.selection = LayerSelection{r};
    row.layer_table = row.layer_table || layer_table;
    row.quality_table = row.quality_table || !layer_table;
  };
  const int L = layers;
  for (int a = 2; a <= L; ++a) add({1, 1}, {a, 1}, true);
  for (int a = 3; a <= L; ++a) add({1, 1}, {a, 2}, true);
  for (int a = 2; a <= L; ++a) add({1, 2}, {a, 1}, true);
  for (int a = 1; a <= L; ++a) add({1}, {a}, true);
  for (int a = 1; a <= std::min(L, 2); ++a) add({2}, {a}, true);
  add({3}, {1}, true);

  for (int a = 1; a <= L; ++a)
    for (int b = 1; b < a; ++b) {
      add({1, 1}, {a, b}, false);
      add({1, 2}, {a, b}, false);
    }
  for (int u = 1; u <= 3; ++u)
    for (int a = 1; a <= L; ++a) add({u}, {a}, false);

  std::vector<SpecialCaseRow> out;
  for (auto& [key, row] : rows) out.push_back(row);
  return out;
}

// ---------------------------------------------------------------------------
// verify

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

void VerifyReport::write(std::ostream& out) const {
  out << "layercast verify seed=" << seed << "\n";
  int passed_count = 0;
  for (const auto& c : checks) {
    passed_count += c.passed;
    char line[256];
    std::snprintf(line, sizeof line, "%s %-28s cases=%-4d worst=%.2e limit=%.1e",
                  c.passed ? "PASS" : "FAIL", c.name.c_str(), c.cases, c.worst, c.limit);
    out << line;
    if (!c.detail.empty()) out << "  " << c.detail;
    out << "\n";
  }
  out << (passed() ? "PASS" : "FAIL") << " " << passed_count << "/" << checks.size()
      << " checks\n";
}

namespace {

// Collects one check: each case reports a measured value against the limit,
// or an error message.
class CheckBuilder {
 public:
  CheckBuilder(std::string name, double limit) {
    out_.name = std::move(name);
    out_.limit = limit;
    out_.passed = true;
  }

  void measure(double value, const std::string& where) {
    ++out_.cases;
    if (std::isnan(value)) value = std::numeric_limits<double>::infinity();
    out_.worst = std::max(out_.worst, value);
    if (!(value <= out_.limit)) fail(where + ": " + num(value));
  }

  void fail(const std::string& why) {
    if (out_.passed) out_.detail = why;
    out_.passed = false;
  }

  template <class F>
  void run(const std::string& where, F&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      ++out_.cases;
      fail(where + ": " + e.what());
    }
  }

  CheckOutcome done() { return std::move(out_); }

 private:
  CheckOutcome out_;
};

CVector draw_channel(std::mt19937_64& rng, int n, double gain = 1.0) {
  std::normal_distribution<double> nd(0.0, std::sqrt(gain / 2.0));
  CVector h(n);
  for (int i = 0; i < n; ++i) h[i] = {nd(rng), nd(rng)};
  return h;
}

ProblemInstance draw_instance(std::mt19937_64& rng, const GroupConfig& groups,
                              const VideoProfile& profile, int antennas) {
  const auto ens = sample_channels(groups, antennas, 1, rng());
  return ProblemInstance::make(profile, groups, ens.states[0]);
}

VideoProfile draw_profile(std::mt19937_64& rng, int layers, double lo, double hi) {
  std::uniform_real_distribution<double> rate(lo, hi);
  VideoProfile p;
  double f = 0.0;
  for (int l = 0; l < layers; ++l) {
    p.rates.push_back(rate(rng));
    f += 1.0;
    p.utilities.push_back(f);
  }
  return p;
}

int draw_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double rel(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

CheckOutcome check_embedding(std::mt19937_64& rng) {
  CheckBuilder c("embedding_spectrum", 1e-10);
  for (int k = 0; k < 10; ++k) {
    const int n = draw_int(rng, 2, 6);
    CMatrix a(n, n);
    for (int j = 0; j < n; ++j) a.col(j) = draw_channel(rng, n);
    a = (a + a.adjoint()).eval();
    c.run("case " + std::to_string(k), [&] {
      Eigen::SelfAdjointEigenSolver<CMatrix> ce(a);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> re(sdp::hermitian_embedding(a));
      double err = 0.0;
      for (int i = 0; i < n; ++i)
        err = std::max({err, std::abs(re.eigenvalues()[2 * i] - ce.eigenvalues()[i]),
                        std::abs(re.eigenvalues()[2 * i + 1] - ce.eigenvalues()[i])});
      c.measure(err / (1.0 + a.norm()), "case " + std::to_string(k));
    });
  }
  return c.done();
}

CheckOutcome check_single_user(std::mt19937_64& rng) {
  CheckBuilder c("single_user_closed_form", 1e-6);
  const int ns[] = {2, 4, 8};
  for (int k = 0; k < 12; ++k) {
    const int n = ns[k % 3];
    const auto profile = draw_profile(rng, 1 + k % 3, 0.5, 4.0);
    ChannelState state;
    state.h = {{draw_channel(rng, n)}};
    const auto inst = ProblemInstance::make(profile, GroupConfig{{1}, {1.0}, 2.0}, state);
    double prod = 1.0;
    for (double r : profile.rates) prod *= 1.0 + sinr_threshold(r);
    const double expected = (prod - 1.0) / state.h[0][0].squaredNorm();
    const LayerSelection sel{{profile.layer_count()}};
    for (auto scheme : {SchemeKind::LayerBased, SchemeKind::QualityBased}) {
      const std::string where = "case " + std::to_string(k) + " " + to_string(scheme);
      c.run(where, [&] {
        c.measure(std::abs(power_min(inst, sel, scheme).power - expected) / expected, where);
      });
    }
  }
  return c.done();
}

CheckOutcome check_relaxation_equality(std::mt19937_64& rng) {
  CheckBuilder c("relaxation_scheme_equality", 1e-5);
  for (int k = 0; k < 8; ++k) {
    const int g = draw_int(rng, 2, 3);
    const int n = k % 2 ? 8 : 4;
    const int layers = 3;
    GroupConfig groups = uniform_groups(g, 1, 2.0);
    LayerSelection sel;
    for (int i = 0; i < g; ++i) {
      groups.users[i] = draw_int(rng, 1, 3);
      sel.r.push_back(draw_int(rng, 1, layers));
    }
    const auto profile = draw_profile(rng, layers, 0.5, 2.0);
    const auto inst = draw_instance(rng, groups, profile, n);
    const std::string where = "case " + std::to_string(k) + " r=" + selection_label(sel);
    c.run(where, [&] {
      const double lb = solve_sdr(build_sdr(inst, sel, SchemeKind::LayerBased),
                                  SchemeKind::LayerBased)
                            .objective();
      const double qb = solve_sdr(build_sdr(inst, sel, SchemeKind::QualityBased),
                                  SchemeKind::QualityBased)
                            .objective();
      c.measure(rel(lb, qb), where);
    });
  }
  return c.done();
}

CheckOutcome check_special_cases(std::mt19937_64& rng) {
  CheckBuilder c("special_case_optimality", 1e-5);
  const int layers = 3;
  for (const auto& row : special_case_rows(layers)) {
    GroupConfig groups = uniform_groups(static_cast<int>(row.users.size()), 1, 2.0);
    groups.users = row.users;
    const auto profile = draw_profile(rng, layers, 0.5, 2.0);
    const auto inst = draw_instance(rng, groups, profile, draw_int(rng, 2, 6));
    std::ostringstream label;
    label << "U=" << selection_label(LayerSelection{row.users})
          << " r=" << selection_label(row.selection);
    c.run(label.str(), [&] {
      const auto qb = power_min(inst, row.selection, SchemeKind::QualityBased);
      const auto lb = power_min(inst, row.selection, SchemeKind::LayerBased);
      double worst = rel(qb.power, qb.sdr_bound) + qb.rank_one_residual;
      if (row.layer_table) worst = std::max(worst, rel(lb.power, lb.sdr_bound) + lb.rank_one_residual);
      worst = std::max(worst, rel(lb.power, qb.power));
      c.measure(worst, label.str());
    });
  }
  return c.done();
}

CheckOutcome check_general_case(std::mt19937_64& rng) {
  CheckBuilder c("general_case_feasibility", 1e-4);
  const auto groups = uniform_groups(3, 3, 2.0);
  const auto profile = VideoProfile::uniform(5, 2.0);
  const LayerSelection sel{{5, 3, 1}};
  for (int k = 0; k < 2; ++k) {
    const auto inst = draw_instance(rng, groups, profile, 12);
    for (auto scheme : {SchemeKind::LayerBased, SchemeKind::QualityBased}) {
      const std::string where = "case " + std::to_string(k) + " " + to_string(scheme);
      c.run(where, [&] {
        const auto r = power_min(inst, sel, scheme);
        if (!check_feasible(inst, sel, scheme, r.beamformers, 1e-6).feasible)
          c.fail(where + ": SINR targets missed");
        if (r.power < r.sdr_bound * (1.0 - 1e-6)) c.fail(where + ": power below its bound");
        c.measure(r.rank_one_residual, where);
      });
    }
  }
  return c.done();
}

CheckOutcome check_constructions(std::mt19937_64& rng) {
  CheckBuilder c("construction_round_trips", 1e-10);
  const auto profile = VideoProfile::kendo().truncated(4);
  for (int k = 0; k < 6; ++k) {
    GroupConfig groups = uniform_groups(3, 1, 2.0);
    LayerSelection sel;
    for (int g = 0; g < 3; ++g) {
      groups.users[g] = draw_int(rng, 1, 2);
      sel.r.push_back(draw_int(rng, 1, 4));
    }
    const auto inst = draw_instance(rng, groups, profile, 6);
    const auto plan = build_plan(sel, profile);
    const std::string where = "case " + std::to_string(k) + " r=" + selection_label(sel);
    c.run(where, [&] {
      const auto lb_problem = build_sdr(inst, sel, SchemeKind::LayerBased);
      const auto qb_problem = build_sdr(inst, sel, SchemeKind::QualityBased);
      const auto lb_sdr = solve_sdr(lb_problem, SchemeKind::LayerBased);
      const auto qb_sdr = solve_sdr(qb_problem, SchemeKind::QualityBased);
      const auto to_qb = construct_qb_sdr_from_lb_sdr(inst, sel, plan, lb_sdr);
      const auto to_lb = construct_lb_sdr_from_qb_sdr(inst, sel, plan, qb_sdr);
      if (sdr_violation(qb_problem, to_qb) > 1e-7 || sdr_violation(lb_problem, to_lb) > 1e-7)
        c.fail(where + ": mapped relaxation point is infeasible");
      const auto qb = power_min(inst, sel, SchemeKind::QualityBased);
      const auto lb = construct_lb_from_qb(inst, sel, plan, qb.beamformers);
      if (!check_feasible(inst, sel, SchemeKind::LayerBased, lb, 1e-9).feasible)
        c.fail(where + ": mapped beamformers miss a target");
      c.measure(std::max({std::abs(to_qb.objective() - lb_sdr.objective()) / lb_sdr.objective(),
                          std::abs(to_lb.objective() - qb_sdr.objective()) / qb_sdr.objective(),
                          std::abs(lb.power() - qb.beamformers.power()) / qb.beamformers.power()}),
                where);
    });
  }
  return c.done();
}

CheckOutcome check_monotonicity(std::mt19937_64& rng, int threads) {
  CheckBuilder c("relaxation_monotonicity", 1e-8);
  const auto profile = VideoProfile::kendo().truncated(3);
  SelectionOptions opts;
  opts.power.sdp.tolerance = 1e-12;
  opts.threads = threads;
  for (int e = 0; e < 3; ++e) {
    const auto groups = uniform_groups(2, draw_int(rng, 1, 2), 2.0);
    auto ens = sample_channels(groups, 4, 3, rng());
    const auto problem = BudgetedProblem::make(profile, groups, ens, 1.0);
    for (int k = 0; k < 4; ++k) {
      LayerSelection hi, lo;
      for (int g = 0; g < 2; ++g) {
        hi.r.push_back(draw_int(rng, 1, 3));
        lo.r.push_back(draw_int(rng, 1, hi.r.back()));
      }
      const std::string where = selection_label(hi) + " vs " + selection_label(lo);
      c.run(where, [&] {
        const double p_hi = worst_case_sdr_power(problem, hi, opts);
        const double p_lo = worst_case_sdr_power(problem, lo, opts);
        c.measure(std::max(0.0, p_lo - p_hi), where);
      });
    }
  }
  return c.done();
}

CheckOutcome check_selection(std::mt19937_64& rng, int threads) {
  CheckBuilder c("greedy_within_exhaustive", 0.0);
  const auto profile = VideoProfile::kendo().truncated(3);
  const auto groups = uniform_groups(2, 1, 2.0);
  SelectionOptions opts;
  opts.threads = threads;
  for (int k = 0; k < 2; ++k) {
    auto ens = sample_channels(groups, 4, 3, rng());
    const double budget = from_db(k ? 25.0 : 15.0);
    const auto problem = BudgetedProblem::make(profile, groups, ens, budget);
    const std::string where = "case " + std::to_string(k);
    c.run(where, [&] {
      const auto ex = exhaustive_select(problem, opts);
      const auto gr = greedy_select(problem, opts);
      if (gr.worst_case_power > budget) c.fail(where + ": greedy exceeds the budget");
      c.measure(std::max(0.0, gr.utility - ex.utility), where);
    });
  }
  return c.done();
}

CheckOutcome check_serialization(std::mt19937_64& rng) {
  CheckBuilder c("serialization_round_trip", 0.0);
  for (int k = 0; k < 3; ++k) {
    const auto groups = uniform_groups(2, 2, 2.0);
    const auto inst = draw_instance(rng, groups, VideoProfile::kendo(), 3);
    c.run("case " + std::to_string(k), [&] {
      const Json j = inst;
      const auto back = Json::parse(j.dump()).get<ProblemInstance>();
      double err = 0.0;
      for (int g = 0; g < 2; ++g)
        for (int u = 0; u < 2; ++u)
          err = std::max(err, (back.channel.h[g][u] - inst.channel.h[g][u]).norm());
      if (back.profile.rates != inst.profile.rates || back.groups.users != inst.groups.users)
        c.fail("case " + std::to_string(k) + ": fields differ");
      c.measure(err, "case " + std::to_string(k));
    });
  }
  return c.done();
}

}  // namespace

VerifyReport verify(std::uint64_t seed, int threads) {
  VerifyReport report;
  report.seed = seed;
  // Each suite draws from its own stream so adding a case to one leaves the
  // others unchanged.
  auto stream = [&](std::uint64_t k) { return std::mt19937_64(mix(seed, k)); };
  auto r1 = stream(1), r2 = stream(2), r3 = stream(3), r4 = stream(4), r5 = stream(5),
       r6 = stream(6), r7 = stream(7), r8 = stream(8), r9 = stream(9);
  report.checks.push_back(check_embedding(r1));
  report.checks.push_back(check_single_user(r2));
  report.checks.push_back(check_relaxation_equality(r3));
  report.checks.push_back(check_special_cases(r4));
  report.checks.push_back(check_general_case(r5));
  report.checks.push_back(check_constructions(r6));
  report.checks.push_back(check_monotonicity(r7, threads));
  report.checks.push_back(check_selection(r8, threads));
  report.checks.push_back(check_serialization(r9));
  return report;
}

void dump_sdp(const ExperimentConfig& config, const std::string& scheme, std::ostream& out) {
  config.validate();
  const auto point = sweep_point(config, config.sweep_values.front());
  const auto ensemble = sample_channels(point.groups, point.antennas, 1, config.seed);
  const auto inst = make_instance(config, point, ensemble.states[0]);
  LayerSelection sel = point.selection;
  if (config.kind == StudyKind::UtilityMax)
    sel.r.assign(point.groups.group_count(), config.profile.layer_count());
  sdp::write_sparse(out, build_sdr(inst, sel, scheme_from_string(scheme)));
}

}  // namespace layercast
