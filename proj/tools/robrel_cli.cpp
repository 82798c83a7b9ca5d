// Command-line front end: parses system/observation documents, runs the
// reliability pipeline, and writes CSV results.
//
// Exit codes: 0 success, 2 validation error, 3 numerical failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "robrel/bounds.hpp"
#include "robrel/io.hpp"
#include "robrel/oracle.hpp"
#include "robrel/structure.hpp"

using namespace robrel;

namespace {

struct GridOptions {
  double t_max = -1.0;  // < 0: use the default horizon heuristic
  int t_points = 512;
};

void add_grid_options(CLI::App* cmd, GridOptions& grid) {
  cmd->add_option("--t-max", grid.t_max, "Upper end of the time grid (default: heuristic)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--t-points", grid.t_points, "Number of grid points")
      ->check(CLI::Range(2, 1000000));
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty())
    std::fputs(content.c_str(), stdout);
  else
    write_file(out_path, content);
}

ParsedSystem load_system(const std::string& path) {
  return parse_system_doc(read_file(path));
}

std::vector<ObservationSet> load_observations(const std::string& data_path,
                                              const SystemModel& model) {
  if (data_path.empty()) return no_observations(model);
  return parse_observations_doc(read_file(data_path), model);
}

std::vector<double> grid_for(const GridOptions& grid, const std::vector<BoxInputs>& inputs) {
  double t_now = 0.0;
  for (const auto& in : inputs) t_now = std::max(t_now, in.obs.t_now);
  const double t_max = grid.t_max >= 0.0 ? grid.t_max : default_horizon(inputs);
  if (t_max <= t_now)
    throw ValidationError("--t-max must exceed the observation horizon " +
                          std::to_string(t_now));
  return make_time_grid(t_now, t_max, grid.t_points);
}

std::vector<std::string> type_names(const SystemModel& model) {
  std::vector<std::string> names;
  for (const auto& d : model.types()) names.push_back(d.name);
  return names;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust system reliability bounds from survival signatures"};
  app.require_subcommand(1);

  std::string system_path, data_path, out_path, type_name, scenario_path, scale = "elapsed";
  GridOptions grid;
  bool normalize = false;
  double elicit_beta = 0.0, mean_lo = 0.0, mean_hi = 0.0, sim_t = 0.0;
  std::size_t sim_samples = 1000000;
  std::uint64_t sim_seed = 0;

  auto* sig_cmd = app.add_subcommand("signature", "Export the survival signature as CSV");
  sig_cmd->add_option("system", system_path, "System document")->required();
  sig_cmd->add_option("--out", out_path, "Output file (default: stdout)");

  auto* coh_cmd = app.add_subcommand("coherence", "Check that the structure is coherent");
  coh_cmd->add_option("system", system_path, "System document")->required();

  auto* bounds_cmd = app.add_subcommand("bounds", "Lower/upper system reliability curve");
  bounds_cmd->add_option("system", system_path, "System document")->required();
  bounds_cmd->add_option("--data", data_path, "Observations document");
  add_grid_options(bounds_cmd, grid);
  bounds_cmd->add_flag("--normalize", normalize, "Divide by reliability at t_now");
  bounds_cmd->add_option("--out", out_path, "Output file (default: stdout)");

  auto* comp_cmd =
      app.add_subcommand("component-bounds", "Predictive reliability envelope for one type");
  comp_cmd->add_option("system", system_path, "System document")->required();
  comp_cmd->add_option("--type", type_name, "Component type name")->required();
  comp_cmd->add_option("--data", data_path, "Observations document");
  add_grid_options(comp_cmd, grid);
  comp_cmd->add_option("--out", out_path, "Output file (default: stdout)");

  auto* imp_cmd = app.add_subcommand("imprecision", "Upper-minus-lower reliability width");
  imp_cmd->add_option("system", system_path, "System document")->required();
  imp_cmd->add_option("--data", data_path, "Observations document");
  imp_cmd->add_option("--scale", scale, "Time scale: elapsed or prospective")
      ->check(CLI::IsMember({"elapsed", "prospective"}));
  add_grid_options(imp_cmd, grid);
  imp_cmd->add_flag("--normalize", normalize, "Divide by reliability at t_now");
  imp_cmd->add_option("--out", out_path, "Output file (default: stdout)");

  auto* eli_cmd = app.add_subcommand("elicit", "Mean-lifetime bounds to a y0 interval");
  eli_cmd->add_option("--beta", elicit_beta, "Weibull shape")->required();
  eli_cmd->add_option("--mean-lo", mean_lo, "Lower mean lifetime")->required();
  eli_cmd->add_option("--mean-hi", mean_hi, "Upper mean lifetime")->required();

  auto* what_cmd = app.add_subcommand("what-if", "Posterior bounds under hypothetical data");
  what_cmd->add_option("system", system_path, "System document")->required();
  what_cmd->add_option("--scenario", scenario_path, "Hypothetical observations document")
      ->required();
  add_grid_options(what_cmd, grid);
  what_cmd->add_flag("--normalize", normalize, "Divide by reliability at t_now");
  what_cmd->add_option("--out", out_path, "Output file (default: stdout)");

  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo check at box-center parameters");
  sim_cmd->add_option("system", system_path, "System document")->required();
  sim_cmd->add_option("--data", data_path, "Observations document");
  sim_cmd->add_option("--t", sim_t, "Evaluation time")->required();
  sim_cmd->add_option("--samples", sim_samples, "Number of samples");
  sim_cmd->add_option("--seed", sim_seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sig_cmd->parsed()) {
      const ParsedSystem sys = load_system(system_path);
      emit(out_path, signature_csv(compute_survival_signature(sys.model)));
    } else if (coh_cmd->parsed()) {
      const ParsedSystem sys = load_system(system_path);
      const CoherenceReport report = check_coherence(sys.model);
      if (!report.coherent) {
        std::string detail = "component " + std::to_string(report.counterexample->component) +
                             " working hurts in state ";
        for (auto b : report.counterexample->state.bits) detail += b ? '1' : '0';
        std::fprintf(stderr, "structure is not coherent: %s\n", detail.c_str());
        return 2;
      }
      std::printf("coherent: %d components, %zu types\n", sys.model.component_count(),
                  sys.model.types().size());
    } else if (bounds_cmd->parsed() || what_cmd->parsed()) {
      const std::string& data = what_cmd->parsed() ? scenario_path : data_path;
      const ParsedSystem sys = load_system(system_path);
      const auto obs = load_observations(data, sys.model);
      const auto inputs = make_box_inputs(sys, obs);
      const auto sig = compute_survival_signature(sys.model);
      const auto curve =
          reliability_bounds_curve(sig, inputs, grid_for(grid, inputs), normalize);
      emit(out_path, bounds_csv(curve, type_names(sys.model)));
    } else if (comp_cmd->parsed()) {
      const ParsedSystem sys = load_system(system_path);
      const int k = sys.model.type_index(type_name);
      const auto obs = load_observations(data_path, sys.model);
      const auto inputs = make_box_inputs(sys, obs);
      const auto curve = component_predictive_bounds(inputs[k].shape, inputs[k].box,
                                                     &inputs[k].obs, grid_for(grid, inputs));
      emit(out_path, bounds_csv(curve, {type_name}));
    } else if (imp_cmd->parsed()) {
      const ParsedSystem sys = load_system(system_path);
      const auto obs = load_observations(data_path, sys.model);
      const auto inputs = make_box_inputs(sys, obs);
      const auto sig = compute_survival_signature(sys.model);
      const auto curve =
          reliability_bounds_curve(sig, inputs, grid_for(grid, inputs), normalize);
      const TimeScale ts =
          scale == "prospective" ? TimeScale::Prospective : TimeScale::Elapsed;
      emit(out_path, imprecision_csv(imprecision_curve(curve, ts)));
    } else if (eli_cmd->parsed()) {
      const WeibullShape beta(elicit_beta);
      if (!(0.0 < mean_lo && mean_lo <= mean_hi))
        throw ValidationError("need 0 < --mean-lo <= --mean-hi");
      std::printf("y0_lo=%s\ny0_hi=%s\n",
                  format_number(scale_from_mean_lifetime(beta, mean_lo)).c_str(),
                  format_number(scale_from_mean_lifetime(beta, mean_hi)).c_str());
    } else if (sim_cmd->parsed()) {
      const ParsedSystem sys = load_system(system_path);
      const auto obs = load_observations(data_path, sys.model);
      std::vector<ComponentInputs> pts;
      for (std::size_t k = 0; k < sys.boxes.size(); ++k) {
        const auto& b = sys.boxes[k];
        pts.push_back({WeibullShape(sys.model.types()[k].shape),
                       PriorParams(0.5 * (b.n0_lo + b.n0_hi), 0.5 * (b.y0_lo + b.y0_hi)),
                       obs[k]});
      }
      const auto sig = compute_survival_signature(sys.model);
      const McEstimate est = mc_system_reliability(sig, pts, sim_t, {sim_samples, sim_seed});
      const double exact = system_reliability_point(sig, pts, sim_t);
      std::printf("estimate=%s\nstd_error=%s\nexact=%s\nsamples=%zu\nseed=%llu\n",
                  format_number(est.value).c_str(), format_number(est.std_error).c_str(),
                  format_number(exact).c_str(), est.samples,
                  static_cast<unsigned long long>(est.seed));
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
  return 0;
}
