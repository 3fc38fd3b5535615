// SPDX-License-Identifier: Apache-2.0
// Command-line front end for the power-minimization and utility studies.

#include "layercast/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace layercast;

namespace {

struct Common {
  std::string config_path;
  std::string preset_name;
  std::optional<std::uint64_t> seed;
  std::optional<int> ensemble_size;
  std::optional<int> threads;
  std::string out;
  bool paper_scale = false;
  bool timing = false;
};

void add_common(CLI::App* cmd, Common& c, bool study) {
  cmd->add_option("--config", c.config_path, "JSON experiment file")->check(CLI::ExistingFile);
  cmd->add_option("--preset", c.preset_name, "figure preset name");
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--out", c.out, "output file (default: stdout)");
  cmd->add_option("--threads", c.threads, "worker threads, 0 = all cores");
  if (study) {
    cmd->add_option("--ensemble-size", c.ensemble_size, "channel states per point");
    cmd->add_flag("--paper-scale", c.paper_scale, "full-size ensembles and sweeps");
    cmd->add_flag("--timing", c.timing, "add wall-clock columns");
  }
}

ExperimentConfig resolve(const Common& c) {
  if (!c.config_path.empty() && !c.preset_name.empty())
    throw std::invalid_argument("give either --config or --preset, not both");
  if (c.config_path.empty() && c.preset_name.empty())
    throw std::invalid_argument("one of --config or --preset is required");
  ExperimentConfig cfg =
      c.config_path.empty() ? preset(c.preset_name, c.paper_scale) : load_config(c.config_path);
  if (c.paper_scale && !c.config_path.empty()) cfg.paper_scale = true;
  if (c.seed) cfg.seed = *c.seed;
  if (c.ensemble_size) cfg.ensemble_size = *c.ensemble_size;
  if (c.threads) cfg.threads = *c.threads;
  cfg.timing = c.timing;
  cfg.validate();
  return cfg;
}

// Writes to --out only once the whole result exists, so a failed run never
// leaves a truncated file behind.
int emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + c.out + "'");
  f << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layered-video multicast beamforming experiments"};
  app.require_subcommand(1);

  Common pm, um, vf, dump;
  auto* powermin = app.add_subcommand("powermin", "mean power per sweep point and method");
  add_common(powermin, pm, true);
  auto* utilitymax = app.add_subcommand("utilitymax", "layer selection under a power budget");
  add_common(utilitymax, um, true);

  auto* verify_cmd = app.add_subcommand("verify", "run the invariant suite");
  verify_cmd->add_option("--seed", vf.seed, "random seed (default 42)");
  verify_cmd->add_option("--out", vf.out, "report file (default: stdout)");
  verify_cmd->add_option("--threads", vf.threads, "worker threads, 0 = all cores");

  std::string scheme = "qb";
  auto* dump_cmd = app.add_subcommand("dump-sdp", "write one relaxation in sparse text form");
  add_common(dump_cmd, dump, false);
  dump_cmd->add_option("--scheme", scheme, "lb or qb")->check(CLI::IsMember({"lb", "qb"}));

  auto* presets = app.add_subcommand("presets", "list preset names");

  CLI11_PARSE(app, argc, argv);

  try {
    std::ostringstream out;
    if (powermin->parsed()) {
      auto cfg = resolve(pm);
      if (cfg.kind != StudyKind::PowerMin)
        throw std::invalid_argument("'" + cfg.name + "' is a utilitymax study");
      run_powermin(cfg, out);
      return emit(pm, out.str());
    }
    if (utilitymax->parsed()) {
      auto cfg = resolve(um);
      if (cfg.kind != StudyKind::UtilityMax)
        throw std::invalid_argument("'" + cfg.name + "' is a powermin study");
      run_utilitymax(cfg, out);
      return emit(um, out.str());
    }
    if (verify_cmd->parsed()) {
      const auto report = verify(vf.seed.value_or(42), vf.threads.value_or(0));
      report.write(out);
      emit(vf, out.str());
      return report.passed() ? 0 : 1;
    }
    if (dump_cmd->parsed()) {
      dump_sdp(resolve(dump), scheme, out);
      return emit(dump, out.str());
    }
    if (presets->parsed()) {
      for (const auto& name : preset_names()) std::cout << name << "\n";
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
