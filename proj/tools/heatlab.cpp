#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "heatlab/experiment.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) heatlab::config_error("cannot read config " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heatlab: heat-equation experiments"};
  std::string experiment, config_path, grid, data, reference, times, norm, attractor, out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> tolerances;
  app.add_option("experiment", experiment, "conserve | rates | dipole | scaling | mixing | spectrum | entropy | "
                                           "tails | front | smoothing | counterexample");
  app.add_option("--config", config_path, "JSON config file; flags override its values");
  app.add_option("--grid", grid, "dim=1,L=40,n=4096 (any subset)");
  app.add_option("--data", data, "initial data, e.g. gaussian:center=1 or box:lo=-1,hi=1");
  app.add_option("--reference", reference, "second datum for mixing");
  app.add_option("--times", times, "geometric:lo:hi:count or t1,t2,...");
  app.add_option("--norm", norm, "sup | l1 | l1w | l2mu | l<p>, comma separated");
  app.add_option("--attractor", attractor, "rates only: gaussian or corrector:<k>");
  app.add_option("--out", out, "directory for CSV series and summary.json");
  app.add_option("--seed", seed, "seed for randomized data");
  app.add_option("--tol", tolerances, "override a declared tolerance, name=value (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  using namespace heatlab;
  std::string name = experiment;
  try {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : parse_config_text(read_file(config_path));
    if (!experiment.empty()) {
      if (!cfg.experiment.empty() && cfg.experiment != experiment)
        config_error("config names experiment '" + cfg.experiment + "' but '" + experiment + "' was requested");
      cfg.experiment = experiment;
    }
    name = cfg.experiment;
    if (!grid.empty()) {
      const GridOverride g = parse_grid_flag(grid);
      if (g.dim) cfg.grid.dim = g.dim;
      if (g.half_width) cfg.grid.half_width = g.half_width;
      if (g.points) cfg.grid.points = g.points;
    }
    if (!data.empty()) cfg.data = data;
    if (!reference.empty()) cfg.reference = reference;
    if (!times.empty()) cfg.times = parse_times_flag(times);
    if (!norm.empty()) cfg.norms = detail::split(norm, ',');
    if (!attractor.empty()) cfg.attractor = attractor;
    if (!out.empty()) cfg.out = out;
    if (seed) cfg.seed = *seed;
    for (const std::string& t : tolerances) {
      const auto eq = t.find('=');
      if (eq == std::string::npos) config_error("--tol expects name=value, got '" + t + "'");
      cfg.tolerances[t.substr(0, eq)] = detail::parse_config_number(t.substr(eq + 1), "tolerance");
    }

    const RunReport report = run(cfg);
    for (const Check& c : report.checks)
      if (!c.pass)
        std::cerr << "check failed: " << c.name << " = " << format_double(c.value) << " (needs " << c.relation << " "
                  << format_double(c.limit) << ")\n";
    std::cout << to_json(report).dump(2) << std::endl;
    return report.exit_code();
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    std::cerr << "heatlab: " << e.what() << "\n";
    std::cout << error_report(name, e.kind(), e.what(), code).dump(2) << std::endl;
    return code;
  }
}
