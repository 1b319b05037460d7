#pragma once

// Named experiments behind the command-line tool. A run takes a validated
// ExperimentConfig, computes its series, and judges them against the
// tolerances the experiment declares (defaults can be overridden by name).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "heatlab/asymptotics.hpp"
#include "heatlab/decay.hpp"
#include "heatlab/diagnostics.hpp"
#include "heatlab/hermite.hpp"
#include "heatlab/renormalized.hpp"
#include "heatlab/report_io.hpp"
#include "heatlab/semigroup.hpp"

namespace heatlab {

using json = nlohmann::ordered_json;

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"conserve", "rates",   "dipole", "scaling", "mixing",         "spectrum",
                                              "entropy",  "tails",   "front",  "smoothing", "counterexample"};
  return names;
}

[[noreturn]] inline void config_error(const std::string& what) { fail(ErrorKind::ConfigInvalid, what); }

// ---- config pieces --------------------------------------------------------

struct GridOverride {
  std::optional<int> dim;
  std::optional<double> half_width;
  std::optional<std::size_t> points;
};

/// "name" or "name:key=value,key=value".
struct DataSpec {
  std::string name;
  std::map<std::string, double> params;

  double get(const std::string& key, double fallback) const {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
};

struct TimesSpec {
  std::vector<double> values;
  std::string text;  // as given, echoed in the report
};

struct ExperimentConfig {
  std::string experiment;
  GridOverride grid;
  std::optional<std::string> data;
  std::optional<std::string> reference;  // second datum for `mixing`
  std::optional<TimesSpec> times;
  std::vector<std::string> norms;
  std::optional<std::string> attractor;  // `rates` only
  std::optional<std::string> out;
  std::uint64_t seed = 0;
  std::map<std::string, double> tolerances;
};

namespace detail {

inline double parse_config_number(const std::string& s, const std::string& what) {
  try {
    return parse_double(s);
  } catch (const Error&) {
    config_error(what + ": '" + s + "' is not a number");
  }
}

}  // namespace detail

inline GridOverride parse_grid_flag(const std::string& text) {
  GridOverride g;
  for (const std::string& item : detail::split(text, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) config_error("grid entry '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    const double v = detail::parse_config_number(item.substr(eq + 1), "grid " + key);
    if (key == "dim") {
      g.dim = static_cast<int>(v);
    } else if (key == "L") {
      g.half_width = v;
    } else if (key == "n") {
      if (v < 0 || v != std::floor(v)) config_error("grid n must be a whole number");
      g.points = static_cast<std::size_t>(v);
    } else {
      config_error("unknown grid key '" + key + "' (expected dim, L, n)");
    }
  }
  return g;
}

inline DataSpec parse_data_flag(const std::string& text) {
  DataSpec d;
  const auto colon = text.find(':');
  d.name = text.substr(0, colon);
  if (d.name.empty()) config_error("empty data spec");
  if (colon == std::string::npos) return d;
  for (const std::string& item : detail::split(std::string_view(text).substr(colon + 1), ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) config_error("data entry '" + item + "' is not key=value");
    d.params[item.substr(0, eq)] = detail::parse_config_number(item.substr(eq + 1), "data " + item.substr(0, eq));
  }
  return d;
}

/// "geometric:lo:hi:count", "list:t1,t2,..." or plain "t1,t2,...".
inline TimesSpec parse_times_flag(const std::string& text) {
  TimesSpec out{{}, text};
  if (text.rfind("geometric:", 0) == 0) {
    const auto parts = detail::split(text, ':');
    if (parts.size() != 4) config_error("times '" + text + "' should be geometric:lo:hi:count");
    const double lo = detail::parse_config_number(parts[1], "times lo");
    const double hi = detail::parse_config_number(parts[2], "times hi");
    const double count = detail::parse_config_number(parts[3], "times count");
    if (!(lo > 0.0 && hi > lo && count >= 2 && count == std::floor(count) && count <= 10000))
      config_error("geometric times need 0 < lo < hi and a whole count >= 2");
    out.values = geometric_times(lo, hi, static_cast<std::size_t>(count));
    return out;
  }
  const std::string body = text.rfind("list:", 0) == 0 ? text.substr(5) : text;
  for (const std::string& item : detail::split(body, ','))
    out.values.push_back(detail::parse_config_number(item, "time"));
  return out;
}

/// Reads a JSON config document; unknown keys are rejected.
inline ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) config_error("config must be a JSON object");
  ExperimentConfig c;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "experiment") {
        c.experiment = value.get<std::string>();
      } else if (key == "grid") {
        if (value.is_string()) {
          c.grid = parse_grid_flag(value.get<std::string>());
        } else {
          if (!value.is_object()) config_error("grid must be an object or a string");
          for (const auto& [gk, gv] : value.items()) {
            if (gk == "dim") c.grid.dim = gv.get<int>();
            else if (gk == "L") c.grid.half_width = gv.get<double>();
            else if (gk == "n") c.grid.points = gv.get<std::size_t>();
            else config_error("unknown grid key '" + gk + "'");
          }
        }
      } else if (key == "data") {
        c.data = value.get<std::string>();
      } else if (key == "reference") {
        c.reference = value.get<std::string>();
      } else if (key == "times") {
        if (value.is_string()) {
          c.times = parse_times_flag(value.get<std::string>());
        } else {
          TimesSpec t;
          t.values = value.get<std::vector<double>>();
          t.text = value.dump();
          c.times = t;
        }
      } else if (key == "norm") {
        c.norms = value.is_string() ? detail::split(value.get<std::string>(), ',') : value.get<std::vector<std::string>>();
      } else if (key == "attractor") {
        c.attractor = value.get<std::string>();
      } else if (key == "out") {
        c.out = value.get<std::string>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "tolerances") {
        if (!value.is_object()) config_error("tolerances must be an object");
        for (const auto& [tk, tv] : value.items()) c.tolerances[tk] = tv.get<double>();
      } else {
        config_error("unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    config_error(std::string("config value has the wrong type: ") + e.what());
  }
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

// ---- report ---------------------------------------------------------------

struct Check {
  std::string name;
  double value = 0.0;
  std::string relation;  // "<=" or ">="
  double limit = 0.0;
  bool pass = false;
};

struct FitRecord {
  std::string name;
  RateFit fit;
  std::optional<double> expected;
};

struct SeriesOutput {
  std::string name;  // file name inside the output directory
  std::string csv;
  std::optional<std::string> path;
};

struct Stage {
  std::string name;
  double seconds = 0.0;
};

struct RunReport {
  json config;
  std::vector<SeriesOutput> series;
  std::vector<FitRecord> fits;
  std::vector<Check> checks;
  std::vector<Stage> stages;

  bool passed() const {
    for (const Check& c : checks)
      if (!c.pass) return false;
    return true;
  }
  int exit_code() const { return passed() ? 0 : 1; }
};

inline json to_json(const RateFit& f) {
  return {{"slope", f.slope},         {"slope_stderr", f.slope_stderr}, {"intercept", f.intercept},
          {"r_squared", f.r_squared}, {"n_points", f.n_points},         {"dropped", f.dropped}};
}

inline json to_json(const RunReport& r) {
  json out;
  out["schema"] = kReportSchema;
  out["experiment"] = r.config.value("experiment", "");
  out["config"] = r.config;
  out["series"] = json::array();
  for (const auto& s : r.series)
    out["series"].push_back({{"name", s.name}, {"path", s.path ? json(*s.path) : json(nullptr)}});
  out["fits"] = json::array();
  for (const auto& f : r.fits) {
    json j = to_json(f.fit);
    j["name"] = f.name;
    if (f.expected) j["expected_slope"] = *f.expected;
    out["fits"].push_back(j);
  }
  out["checks"] = json::array();
  for (const auto& c : r.checks)
    out["checks"].push_back(
        {{"name", c.name}, {"value", c.value}, {"relation", c.relation}, {"limit", c.limit}, {"pass", c.pass}});
  out["stages"] = json::array();
  for (const auto& s : r.stages) out["stages"].push_back({{"name", s.name}, {"seconds", s.seconds}});
  out["passed"] = r.passed();
  out["exit_code"] = r.exit_code();
  return out;
}

inline json error_report(const std::string& experiment, ErrorKind kind, const std::string& message, int code) {
  return {{"schema", kReportSchema},
          {"experiment", experiment},
          {"error", {{"kind", std::string(to_string(kind))}, {"message", message}}},
          {"passed", false},
          {"exit_code", code}};
}

/// 2 for bad configuration or arguments, 3 for numerical guards.
inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::TailEscape:
    case ErrorKind::RescaledArgumentOffGrid:
    case ErrorKind::OverflowInInverseGaussWeight:
    case ErrorKind::NonFiniteSample:
    case ErrorKind::GridTooSmall:
    case ErrorKind::NoSignChangeOnGrid:
    case ErrorKind::NonPositiveField:
    case ErrorKind::NegativeDensity:
    case ErrorKind::ZeroErrorEntry:
    case ErrorKind::EvaluationPastBlowUp:
    case ErrorKind::MassMismatch:
    case ErrorKind::GridMismatch:
    case ErrorKind::DiffusivityMismatch:
      return 3;
    default:
      return 2;
  }
}

// ---- experiment plumbing --------------------------------------------------

namespace detail {

struct GridDefaults {
  double half_width_1d, half_width_2d;
  std::size_t n_1d, n_2d;
};

struct ExperimentDef {
  std::string data;
  std::string times;  // empty when the experiment takes no times
  std::vector<std::string> norms;
  GridDefaults grid;
  std::set<int> dims;
  std::size_t min_times = 1;
  std::map<std::string, double> tolerances;
  std::set<std::string> data_kinds;
};

inline const ExperimentDef& definition(const std::string& name) {
  static const std::map<std::string, ExperimentDef> defs{
      {"conserve",
       {"mixture", "geometric:0.1:10:12", {}, {40, 40, 4096, 256}, {1, 2}, 3,
        {{"mass_drift", 1e-8}, {"first_moment_drift", 1e-7}, {"second_moment_slope", 1e-3}},
        {"gaussian", "box", "mixture", "dirac", "exponential", "powertail"}}},
      {"rates",
       {"gaussian:center=1", "geometric:4:256:8", {"sup"}, {320, 320, 4096, 512}, {1, 2}, 3,
        {{"slope_tol", NAN}, {"expected_slope", NAN}},
        {"gaussian", "box", "mixture", "dirac", "exponential", "powertail"}}},
      {"dipole",
       {"box:lo=0.5,hi=1.5", "geometric:4:256:8", {"l1", "l1w"}, {320, 320, 4096, 4096}, {1}, 3,
        {{"slope_tol", 0.1}, {"mass_slope_tol", 0.02}, {"neumann_drift", 1e-8}},
        {"gaussian", "box", "mixture"}}},
      {"scaling",
       {"box", "1,4,16,64", {}, {40, 40, 1024, 256}, {1, 2}, 2,
        {{"route_agreement", 1e-10}},
        {"gaussian", "box", "mixture", "dirac", "exponential", "powertail"}}},
      {"mixing",
       {"box", "geometric:1:64:7", {}, {120, 60, 2048, 256}, {1, 2}, 3,
        {{"monotonicity", 1e-12}, {"decay_ratio", 0.1}},
        {"gaussian", "box", "mixture", "dirac", "exponential", "powertail"}}},
      {"spectrum",
       {"hermite:order=6,trials=20", "", {}, {10, 8, 1024, 256}, {1, 2}, 1,
        {{"orthogonality", 1e-8}, {"eigen_residual", 1e-5}, {"poincare_extremal", 1e-6}, {"poincare_gap", 1e-8}},
        {"hermite"}}},
      {"entropy",
       {"mixture:sep=2", "0.25,0.5,1,1.5,2", {}, {10, 10, 1024, 1024}, {1}, 1,
        {{"entropy_decay", 1e-2}, {"entropy_floor", 1e-12}, {"logsob_gap", 1e-8}, {"ck_gap", 1e-8},
         {"rate_gap", 0.02}},
        {"gaussian", "mixture"}}},
      {"tails",
       {"box", "1", {}, {40, 40, 4096, 4096}, {1}, 1,
        {{"bracket_slack", 1e-9}, {"tail_slope", 0.01}, {"anchor", 1e-3}},
        {"box", "exponential"}}},
      {"front",
       {"front:eps=0.1,sep=1", "1,2,4", {}, {40, 40, 4096, 4096}, {1}, 2,
        {{"front_spacings", 1.0}, {"slope_rel", 0.03}},
        {"front"}}},
      {"smoothing",
       {"box", "geometric:0.1:100:8", {"l1", "l2"}, {200, 200, 4096, 512}, {1, 2}, 1,
        {{"bound_slack", 1e-6}},
        {"gaussian", "box", "mixture", "dirac", "exponential", "powertail"}}},
      {"counterexample",
       {"counterexample:terms=3,exponent=0.5", "", {}, {40, 40, 4096, 256}, {1}, 1,
        {{"witness_slack", 0.0}},
        {"counterexample"}}},
  };
  const auto it = defs.find(name);
  if (it == defs.end()) config_error("unknown experiment '" + name + "'");
  return it->second;
}

inline const std::map<std::string, std::set<std::string>>& data_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"gaussian", {"mass", "center", "center_y", "shift", "start", "jitter"}},
      {"box", {"lo", "hi", "mass", "jitter"}},
      {"mixture", {"sep", "weight", "start", "jitter"}},
      {"dirac", {"mass", "center", "center_y"}},
      {"exponential", {"rate"}},
      {"powertail", {"exponent", "amplitude", "jitter"}},
      {"front", {"eps", "sep"}},
      {"counterexample", {"terms", "exponent"}},
      {"hermite", {"order", "trials"}},
  };
  return keys;
}

}  // namespace detail

/// Config with every default filled in; what `run` actually executes.
struct ResolvedConfig {
  std::string experiment;
  GridSpec grid;
  DataSpec data;
  std::optional<DataSpec> reference;
  std::vector<double> times;
  std::string times_text;
  std::vector<NormKind> norms;
  std::string attractor;
  std::optional<std::filesystem::path> out;
  std::uint64_t seed = 0;
  std::map<std::string, double> tolerances;

  double tol(const std::string& name) const { return tolerances.at(name); }
};

inline json to_json(const ResolvedConfig& c) {
  json params = json::object();
  for (const auto& [k, v] : c.data.params) params[k] = v;
  json j{{"experiment", c.experiment},
         {"grid", {{"dim", c.grid.dim}, {"L", c.grid.half_width}, {"n", c.grid.points_per_axis}}},
         {"data", {{"kind", c.data.name}, {"params", params}}}};
  if (c.reference) {
    json rp = json::object();
    for (const auto& [k, v] : c.reference->params) rp[k] = v;
    j["reference"] = {{"kind", c.reference->name}, {"params", rp}};
  }
  j["times"] = c.times;
  json norms = json::array();
  for (const NormKind& k : c.norms) norms.push_back(norm_name(k));
  j["norm"] = norms;
  if (!c.attractor.empty()) j["attractor"] = c.attractor;
  j["out"] = c.out ? json(c.out->string()) : json(nullptr);
  j["seed"] = c.seed;
  json tol = json::object();
  for (const auto& [k, v] : c.tolerances)
    if (std::isfinite(v)) tol[k] = v;
  j["tolerances"] = tol;
  return j;
}

namespace detail {

inline void require_writable_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) config_error("output directory " + dir.string() + " is not usable");
  const auto probe = dir / ".heatlab-write-probe";
  {
    std::ofstream f(probe);
    if (!f) config_error("output directory " + dir.string() + " is not writable");
  }
  std::filesystem::remove(probe, ec);
}

inline DataSpec checked_data(const std::string& text, const ExperimentDef& def, const std::string& experiment) {
  const DataSpec d = parse_data_flag(text);
  if (!def.data_kinds.count(d.name)) config_error("data kind '" + d.name + "' is not available to " + experiment);
  const auto& allowed = data_keys().at(d.name);
  for (const auto& [k, v] : d.params) {
    if (!allowed.count(k)) config_error("data kind '" + d.name + "' has no parameter '" + k + "'");
    if (!std::isfinite(v)) config_error("data parameter '" + k + "' is not finite");
  }
  return d;
}

}  // namespace detail

/// Fills defaults and checks everything that can be checked before running.
inline ResolvedConfig resolve(const ExperimentConfig& c) {
  if (c.experiment.empty()) config_error("no experiment named");
  const detail::ExperimentDef& def = detail::definition(c.experiment);
  ResolvedConfig r;
  r.experiment = c.experiment;

  const int dim = c.grid.dim.value_or(1);
  if (!def.dims.count(dim)) config_error(c.experiment + " does not run in dimension " + std::to_string(dim));
  const double L = c.grid.half_width.value_or(dim == 1 ? def.grid.half_width_1d : def.grid.half_width_2d);
  const std::size_t n = c.grid.points.value_or(dim == 1 ? def.grid.n_1d : def.grid.n_2d);
  try {
    r.grid = make_grid(dim, L, n);
  } catch (const Error& e) {
    config_error(std::string("grid: ") + e.what());
  }

  r.data = detail::checked_data(c.data.value_or(def.data), def, c.experiment);
  if (c.reference) {
    if (c.experiment != "mixing") config_error("'reference' only applies to mixing");
    r.reference = detail::checked_data(*c.reference, def, c.experiment);
  }
  if (r.data.name == "exponential" && dim != 1) config_error("exponential data is one-dimensional");

  if (!def.times.empty()) {
    const TimesSpec t = c.times.value_or(parse_times_flag(def.times));
    r.times = t.values;
    r.times_text = t.text;
    if (r.times.size() < def.min_times)
      config_error(c.experiment + " needs at least " + std::to_string(def.min_times) + " times, got " +
                   std::to_string(r.times.size()));
    for (std::size_t i = 0; i < r.times.size(); ++i) {
      if (!(r.times[i] > 0.0) || !std::isfinite(r.times[i])) config_error("times must be positive and finite");
      if (i > 0 && !(r.times[i] > r.times[i - 1])) config_error("times must increase strictly");
    }
  } else if (c.times) {
    config_error(c.experiment + " takes no times");
  }

  const std::vector<std::string> norm_names = c.norms.empty() ? def.norms : c.norms;
  if (def.norms.empty() && !c.norms.empty()) config_error(c.experiment + " takes no norm");
  for (const std::string& name : norm_names) {
    NormKind k;
    try {
      k = parse_norm(name);
    } catch (const Error&) {
      config_error("unknown norm '" + name + "' (expected sup, l1, l1w, l2mu or l<p>)");
    }
    if (c.experiment == "dipole" && name != "l1" && name != "l1w" && name != "sup")
      config_error("dipole errors are measured in l1, l1w or sup");
    if (c.experiment == "rates" && !std::holds_alternative<Lp>(k) && !std::holds_alternative<WeightedL1>(k))
      config_error("rates are measured in l<p>, sup or l1w");
    if (c.experiment == "smoothing" && (!std::holds_alternative<Lp>(k) || std::isinf(std::get<Lp>(k).p)))
      config_error("smoothing takes finite l<p> norms");
    r.norms.push_back(k);
  }

  if (c.attractor) {
    if (c.experiment != "rates") config_error("'attractor' only applies to rates");
    r.attractor = *c.attractor;
  } else if (c.experiment == "rates") {
    r.attractor = "gaussian";
  }
  if (!r.attractor.empty() && r.attractor != "gaussian") {
    if (r.attractor.rfind("corrector:", 0) != 0) config_error("attractor must be gaussian or corrector:<k>");
    const double k = detail::parse_config_number(r.attractor.substr(10), "corrector order");
    if (!(k >= 0 && k == std::floor(k) && k <= kMaxDerivativeOrder - 4))
      config_error("corrector order must be a whole number in 0.." + std::to_string(kMaxDerivativeOrder - 4));
  }

  r.tolerances = def.tolerances;
  for (const auto& [k, v] : c.tolerances) {
    if (!r.tolerances.count(k)) config_error(c.experiment + " declares no tolerance '" + k + "'");
    if (!std::isfinite(v)) config_error("tolerance '" + k + "' is not finite");
    r.tolerances[k] = v;
  }
  if (c.out) {
    r.out = *c.out;
    detail::require_writable_dir(*r.out);
  }
  r.seed = c.seed;
  return r;
}

namespace detail {

/// Multiplicative noise (1 + jitter U(-1, 1)) from the run seed, rescaled to
/// keep the discrete mass of the unperturbed data.
inline InitialData jittered(const InitialData& data, const GridSpec& g, double jitter, std::uint64_t seed) {
  Field f = realize(data, g);
  const double mass = quadrature(f);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(f.values().begin(), f.values().end());
  for (double& x : v) x *= 1.0 + jitter * u(rng);
  Field noisy(g, std::move(v), 0.0);
  const double noisy_mass = quadrature(noisy);
  if (std::abs(noisy_mass) > kMassEps) noisy = (mass / noisy_mass) * noisy;
  return GridSamples{noisy};
}

inline InitialData base_data(const DataSpec& d, const GridSpec& g) {
  if (d.name == "gaussian")
    return Catalog{GaussianSolution{d.get("mass", 1.0), {d.get("center", 0.0), d.get("center_y", 0.0), 0.0},
                                    d.get("shift", 0.0)},
                   d.get("start", 1.0)};
  if (d.name == "box") return Box{d.get("lo", -1.0), d.get("hi", 1.0), d.get("mass", 1.0)};
  if (d.name == "mixture") {
    const double half = 0.5 * d.get("sep", 4.0), w = d.get("weight", 0.5), start = d.get("start", 1.0);
    require(w >= 0.0 && w <= 1.0, ErrorKind::InvalidArgument, "mixture weight must lie in [0, 1]");
    const Field a = realize(Catalog{GaussianSolution{w, {-half, 0, 0}, 0.0}, start}, g);
    const Field b = realize(Catalog{GaussianSolution{1.0 - w, {half, 0, 0}, 0.0}, start}, g);
    return GridSamples{a + b};
  }
  if (d.name == "dirac")
    return PointMasses{{{Point{d.get("center", 0.0), d.get("center_y", 0.0), 0.0}, d.get("mass", 1.0)}}};
  if (d.name == "exponential") return OneSidedExponential{d.get("rate", 1.0)};
  if (d.name == "powertail") return PowerTail{d.get("exponent", 1.0), d.get("amplitude", 1.0)};
  fail(ErrorKind::InvalidArgument, "data kind '" + d.name + "' does not describe initial data");
}

inline InitialData build_data(const DataSpec& d, const GridSpec& g, std::uint64_t seed) {
  const InitialData data = base_data(d, g);
  const double jitter = d.get("jitter", 0.0);
  if (jitter != 0.0) {
    require(jitter > 0.0 && jitter < 1.0, ErrorKind::InvalidArgument, "jitter must lie in (0, 1)");
    return jittered(data, g, jitter, seed);
  }
  return data;
}

/// Densities for the Fokker-Planck frame: stationary Gaussians moved to
/// `center`, or an even-weighted pair of them `sep` apart.
inline Field build_density(const DataSpec& d, const GridSpec& g) {
  const auto bump = [&](double c) {
    return sample(g, [c](const Point& x) { return stationary_gaussian({x[0] - c, 0, 0}, 1); });
  };
  if (d.name == "gaussian") {
    for (const auto& [k, v] : d.params)
      require(k == "center", ErrorKind::InvalidArgument, "entropy densities take only 'center'");
    return bump(d.get("center", 0.0));
  }
  for (const auto& [k, v] : d.params)
    require(k == "sep" || k == "weight", ErrorKind::InvalidArgument, "entropy mixtures take only 'sep' and 'weight'");
  const double half = 0.5 * d.get("sep", 2.0), w = d.get("weight", 0.5);
  require(w > 0.0 && w < 1.0, ErrorKind::InvalidArgument, "mixture weight must lie in (0, 1)");
  return w * bump(-half) + (1.0 - w) * bump(half);
}

class Runner {
 public:
  explicit Runner(const ResolvedConfig& c) : cfg_(c) {}

  RunReport& report() { return report_; }

  void check_le(const std::string& name, double value, double limit) {
    report_.checks.push_back({name, value, "<=", limit, value <= limit});
  }
  void check_ge(const std::string& name, double value, double limit) {
    report_.checks.push_back({name, value, ">=", limit, value >= limit});
  }
  void fit(const std::string& name, const RateFit& f, std::optional<double> expected = std::nullopt) {
    report_.fits.push_back({name, f, expected});
  }
  template <class Series>
  void emit(const std::string& file, const Series& s) {
    report_.series.push_back({file, to_csv(s), std::nullopt});
  }

  template <class Body>
  auto stage(const std::string& name, Body&& body) {
    const auto start = std::chrono::steady_clock::now();
    auto finish = [&] {
      report_.stages.push_back(
          {name, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
    };
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      finish();
    } else {
      auto result = body();
      finish();
      return result;
    }
  }

  const ResolvedConfig& cfg() const { return cfg_; }

 private:
  const ResolvedConfig& cfg_;
  RunReport report_;
};

inline double log_slope(const std::vector<double>& t, const std::vector<double>& y) {
  std::vector<double> lt, ly;
  for (std::size_t i = 0; i < t.size(); ++i) {
    lt.push_back(std::log(t[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_line(lt, ly).slope;
}

// ---- the experiments ------------------------------------------------------

inline void run_conserve(Runner& r) {
  const ResolvedConfig& c = r.cfg();
  const Field u0 = realize(build_data(c.data, c.grid, c.seed), c.grid);
  std::vector<Field> series;
  r.stage("evolve", [&] {
    for (double t : c.times) series.push_back(evolve(u0, t));
  });
  const ConservationReport rep = conservation_report(series);
  Table table{{"t", "mass", "first_moment", "second_moment"}, {}};
  for (const Field& u : series) {
    const MomentReport m = moments(u);
    table.add({u.time(), m.mass, m.first_moment[0], m.second_moment});
  }
  r.emit("conserve_moments.csv", table);
  const double mass = quadrature(u0);
  r.check_le("mass_drift", rep.mass_drift, c.tol("mass_drift"));
  r.check_le("first_moment_drift", rep.first_moment_drift, c.tol("first_moment_drift"));
  const double expected = 2.0 * c.grid.dim * mass;
  r.check_le("second_moment_slope", std::abs(rep.second_moment_slope / expected - 1.0), c.tol("second_moment_slope"));
}

/// Slope predicted for the error against the corrector of order `order`:
/// -j/2 where j is the lowest order above `order` with a nonzero moment
/// (one half less in L^1(|x| dx), which carries no renormalization).
inline std::optional<double> predicted_rate(const Field& u0, int order, const NormKind& kind) {
  const int top = std::min(order + 4, kMaxDerivativeOrder);
  const MomentTable m = moment_table(u0, top);
  const double scale = norm(u0, kL1);
  for (int j = order + 1; j <= top; ++j)
    for (const MultiIndex& a : multi_indices(u0.grid().dim, j)) {
      if (a.total() != j) continue;
      if (std::abs(m.at(a)) > 1e-9 * scale) {
        const double p = -0.5 * j;
        return std::holds_alternative<WeightedL1>(kind) ? p + 0.5 : p;
      }
    }
  return std::nullopt;
}

inline void run_rates(Runner& r) {
  const ResolvedConfig& c = r.cfg();
  const InitialData data = build_data(c.data, c.grid, c.seed);
  const Field u0 = realize(data, c.grid);
  const int order = c.attractor == "gaussian" ? -1 : std::stoi(c.attractor.substr(10));
  const AttractorSpec attractor = order < 0 ? AttractorSpec{GaussianAttractor{quadrature(u0)}}
                                            : AttractorSpec{Corrector{moment_table(u0, order)}};
  const int effective = std::max(order, 0);
  const double tol = std::isnan(c.tol("slope_tol")) ? (effective == 0 ? 0.05 : 0.1) : c.tol("slope_tol");
  for (const NormKind& kind : c.norms) {
    const std::string name = norm_name(kind);
    const ErrorSeries s =
        r.stage("error_" + name, [&] { return attractor_error(GridSamples{u0}, c.grid, attractor, kind, c.times); });
    r.emit("rates_error_" + name + ".csv", s);
    const RateFit f = fit_rate(s);
    std::optional<double> expected = std::isnan(c.tol("expected_slope")) ? predicted_rate(u0, effective, kind)
                                                                         : std::optional(c.tol("expected_slope"));
    if (!expected) config_error("no nonzero moment to predict the rate from; set tolerances.expected_slope");
    r.fit(name, f, expected);
    r.check_le(name + "_slope", std::abs(f.slope - *expected), tol);
  }
}

inline void run_dipole(Runner& r) {
  const ResolvedConfig& c = r.cfg();
  const InitialData data = build_data(c.data, c.grid, c.seed);
  for (const NormKind& kind : c.norms) {
    const std::string name = norm_name(kind);
    const ErrorSeries s = r.stage("dipole_" + name, [&] { return dipole_error(data, c.grid, c.times, kind); });
    r.emit("dipole_error_" + name + ".csv", s);
    const RateFit f = fit_rate(s);
    // the theorem's rates are bounds: t^{-1} in L^1 and sup, t^{-1/2} in L^1(|x| dx)
    const double bound = std::holds_alternative<WeightedL1>(kind) ? -0.5 : -1.0;
    r.fit(name, f, bound);
    r.check_le(name + "_slope", f.slope, bound + c.tol("slope_tol"));
    if (std::holds_alternative<Lp>(kind)) {
      // alternative sup normalization t^{(N+1)/2} = t, reported without a check
      ErrorSeries alt = s;
      for (std::size_t i = 0; i < alt.times.size(); ++i) alt.renormalized[i] = alt.raw[i] * alt.times[i];
      if (std::isinf(std::get<Lp>(kind).p)) r.fit(name + "_t1", fit_rate(alt));
    }
  }
  const std::vector<double> dirichlet =
      r.stage("halfline_mass", [&] { return halfline_mass_series(data, BoundaryKind::HalfLineDirichlet, c.grid, c.times); });
  const std::vector<double> neumann =
      r.stage("neumann_mass", [&] { return halfline_mass_series(data, BoundaryKind::HalfLineNeumann, c.grid, c.times); });
  Table table{{"t", "dirichlet_mass", "neumann_mass"}, {}};
  for (std::size_t i = 0; i < c.times.size(); ++i) table.add({c.times[i], dirichlet[i], neumann[i]});
  r.emit("dipole_halfline_mass.csv", table);
  r.check_le("halfline_mass_slope", std::abs(log_slope(c.times, dirichlet) + 0.5), c.tol("mass_slope_tol"));
  const double m0 = quadrature(realize(data, c.grid));
  double drift = 0.0;
  for (double m : neumann) drift = std::max(drift, std::abs(m - m0));
  r.check_le("neumann_mass_drift", drift, c.tol("neumann_drift"));
}

inline void run_scaling(Runner& r) {
  const ResolvedConfig& c = r.cfg();
  std::vector<double> ks;
  for (double t : c.times) ks.push_back(std::sqrt(t));
  const std::size_t n_target = c.grid.dim == 1 ? 128 : 64;
  const GridSpec target = make_grid(c.grid.dim, c.grid.half_width / ks.back(), n_target);
  const std::vector<ScalingRow> rows = r.stage(
      "rescale", [&] { return scaling_experiment(build_data(c.data, c.grid, c.seed), c.grid, ks, target); });
  Table table{{"k", "t", "sup_distance", "l1_distance", "renormalized_sup", "renormalized_l1"}, {}};
  double agreement = 0.0;
  double worst_step = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ScalingRow& row = rows[i];
    table.add({row.k, row.k * row.k, row.sup_distance, row.l1_distance, row.renormalized_sup, row.renormalized_l1});
    agreement = std::max({agreement, std::abs(row.sup_distance - row.renormalized_sup),
                          std::abs(row.l1_distance - row.renormalized_l1)});
    if (i > 0) worst_step = std::max(worst_step, row.sup_distance - rows[i - 1].sup_distance);
  }
  r.emit("scaling.csv", table);
  r.check_le("route_agreement", agreement, c.tol("route_agreement"));
  // strictly decreasing: every step must be negative
  r.report().checks.push_back({"sup_distance_decreasing", worst_step, "<", 0.0, worst_step < 0.0});
}

inline void run_mixing(Runner& r) {
  const ResolvedConfig& c = r.cfg();
  const InitialData u = build_data(c.data, c.grid, c.seed);
  const double mass = quadrature(realize(u, c.grid));
  const InitialData v = c.reference ? build_data(*c.reference, c.grid, c.seed + 1)
                                    : InitialData{Catalog{GaussianSolution{mass, {}, 0.0}, 1.0}};
  const ErrorSeries s = r.stage("evolve", [&] { return mixing_error(u, v, c.grid, c.times); });
  r.emit("mixing_error_l1.csv", s);
  double increase = 0.0;
  for (std::size_t i = 1; i < s.raw.size(); ++i) increase = std::max(increase, s.raw[i] - s.raw[i - 1]);
  r.check_le("l1_monotone", increase, c.tol("monotonicity") * std::max(s.raw.front(), 1e-300));
  r.check_le("l1_decay_ratio", s.raw.back() / s.raw.front(), c.tol("decay_ratio"));
}

inline void run_spectrum(Runner& r) {
  const ResolvedConfig& c = r.cfg();
  const GridSpec& g = c.grid;
  const int order = static_cast<int>(c.data.get("order", 6));
  const int trials = static_cast<int>(c.data.get("trials", 20));
  require(order >= 0 && order <= kMaxDerivativeOrder, ErrorKind::InvalidArgument,
          "order must lie in 0.." + std::to_string(kMaxDerivativeOrder));
  require(trials >= 0, ErrorKind::InvalidArgument, "trials must be >= 0");
  require_inverse_gauss_safe(g);

  const auto alphas = multi_indices(g.dim, order);
  std::vector<Field> modes;
  for (const auto& a : alphas) modes.push_back(hermite_field(a, g));
  std::vector<double> ortho(order + 1, 0.0), resid(order + 1, 0.0), mismatch(order + 1, 0.0);
  r.stage("modes", [&] {
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      const int k = alphas[i].total();
      for (std::size_t j = 0; j <= i; ++j) {
        const double expected = i == j ? factorial(alphas[i]) : 0.0;
        const double err = std::abs(mu_inner(modes[i], modes[j]) - expected) / (i == j ? expected : 1.0);
        ortho[k] = std::max(ortho[k], err);
      }
      const Field res = ou_operator(modes[i]) + static_cast<double>(k) * modes[i];
      resid[k] = std::max(resid[k], interior_sup(res, kStencilRing) / norm(modes[i], kSup));
    }
    for (int k = 0; k <= order; ++k) mismatch[k] = rodrigues_1d(k) == hermite_1d(k) ? 0.0 : 1.0;
  });
  Table table{{"order", "orthogonality", "eigen_residual", "rodrigues_mismatch"}, {}};
  for (int k = 0; k <= order; ++k) table.add({static_cast<double>(k), ortho[k], resid[k], mismatch[k]});
  r.emit("spectrum.csv", table);
  r.check_le("orthogonality", *std::max_element(ortho.begin(), ortho.end()), c.tol("orthogonality"));
  r.check_le("eigen_residual", *std::max_element(resid.begin(), resid.end()), c.tol("eigen_residual"));
  r.check_le("rodrigues_mismatches", std::accumulate(mismatch.begin(), mismatch.end(), 0.0), 0.0);

  // Gaussian Poincare: extremal w = x_1, then random polynomials of degree 4
  const Field x1 = sample(g, [](const Point& x) { return x[0]; });
  r.check_le("poincare_extremal", std::abs(gaussian_poincare_gap(x1)), c.tol("poincare_extremal"));
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> coef(0.0, 1.0);
  double worst = std::numeric_limits<double>::infinity();
  Table gaps{{"trial", "poincare_gap"}, {}};
  for (int trial = 0; trial < trials; ++trial) {
    std::array<std::array<double, 5>, 2> a{};
    for (auto& axis : a)
      for (double& v : axis) v = coef(rng);
    const Field w = sample(g, [&](const Point& x) {
      double s = 0.0;
      for (int ax = 0; ax < g.dim; ++ax) {
        const double y = x[ax];
        s += a[ax][0] + y * (a[ax][1] + y * (a[ax][2] + y * (a[ax][3] + y * a[ax][4])));
      }
      return s;
    });
    const double gap = gaussian_poincare_gap(w);
    gaps.add({static_cast<double>(trial), gap});
    worst = std::min(worst, gap);
  }
  r.emit("spectrum_poincare.csv", gaps);
  if (trials > 0) r.check_ge("poincare_gap", worst, -c.tol("poincare_gap"));
}

inline void run_entropy(Runner& r) {
  const ResolvedConfig& c = r.cfg();
  const Field v0 = build_density(c.data, c.grid);
  const double e0 = entropy(v0);
  const EntropySeries s = r.stage("flow", [&] { return entropy_decay_series(v0, c.times); });
  r.emit("entropy.csv", s);

  double excess = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    const double bound = e0 * std::exp(-2.0 * s.times[i]);
    excess = std::max(excess, s.E[i] - bound * (1.0 + c.tol("entropy_decay")) - c.tol("entropy_floor"));
  }
  r.check_le("entropy_exponential_decay", excess, 0.0);

  double logsob = logsob_gap(v0), ck = ck_gap(v0);
  r.stage("inequalities", [&] {
    for (double t : c.times) {
      const Field v = fp_evolve(v0, t);
      logsob = std::min(logsob, logsob_gap(v));
      ck = std::min(ck, ck_gap(v));
    }
  });
  r.check_ge("logsob_gap", logsob, -c.tol("logsob_gap"));
  r.check_ge("ck_gap", ck, -c.tol("ck_gap"));

  if (e0 > c.tol("entropy_floor")) {
    double gap = 0.0;
    r.stage("rate", [&] {
      for (double t : c.times)
        if (t >= 1e-3) gap = std::max(gap, entropy_rate_check(v0, t).relative_gap);
    });
    r.check_le("entropy_rate_gap", gap, c.tol("rate_gap"));
  }
}

inline void run_tails(Runner& r) {
  const ResolvedConfig& c = r.cfg();
  const GridSpec& g = c.grid;
  const InitialData data = build_data(c.data, g, c.seed);
  const Field u0 = realize(data, g);
  if (c.data.name == "exponential") {
    const double rate = c.data.get("rate", 1.0);
    const Solution u(u0);
    Table table{{"t", "slope", "anchor"}, {}};
    double slope_err = 0.0, anchor_err = 0.0;
    for (double t : c.times) {
      const Field ut = r.stage("evolve", [&] { return evolve(u0, t, {Method::Direct, 1e-10}); });
      const double lo = 2.0 * rate * t + 8.0, hi = lo + 15.0;
      const RateFit f = tail_log_slope(ut, lo, hi);
      // e^{rate x} u(x, t) -> e^{rate^2 t} far out
      const double x = 20.0;
      const double anchor = std::exp(rate * x) * u({x, 0, 0}, t);
      table.add({t, f.slope, anchor});
      slope_err = std::max(slope_err, std::abs(f.slope - rate));
      anchor_err = std::max(anchor_err, std::abs(anchor - std::exp(rate * rate * t)));
    }
    r.emit("tails_exponential.csv", table);
    r.check_le("tail_slope", slope_err, c.tol("tail_slope"));
    r.check_le("far_value", anchor_err, c.tol("anchor"));
    return;
  }
  const double lo = c.data.get("lo", -1.0), hi = c.data.get("hi", 1.0), mass = c.data.get("mass", 1.0);
  const Point center{0.5 * (lo + hi), 0.0, 0.0};
  Table table{{"t", "radius", "value", "lower", "upper"}, {}};
  double worst = 0.0;
  for (double t : c.times) {
    const Field u = r.stage("evolve", [&] { return evolve(u0, t, {Method::Direct, 1e-10}); });
    const TailProfile p = tail_profile(u, mass, center, 0.5 * (hi - lo), 5.0 * std::sqrt(t), 15.0 * std::sqrt(t));
    for (std::size_t i = 0; i < p.radius.size(); ++i) table.add({t, p.radius[i], p.value[i], p.lower[i], p.upper[i]});
    worst = std::max(worst, p.worst_violation);
  }
  r.emit("tails.csv", table);
  r.check_le("bracket_violation", worst, c.tol("bracket_slack"));
}

inline void run_front(Runner& r) {
  const ResolvedConfig& c = r.cfg();
  const double eps = c.data.get("eps", 0.1), sep = c.data.get("sep", 1.0);
  require(sep > 0.0, ErrorKind::InvalidArgument, "separation must be positive");
  const std::vector<double> front = r.stage("evolve", [&] { return sign_change_front(eps, sep, c.times, c.grid); });
  Table table{{"t", "front", "closed_form"}, {}};
  double worst = 0.0;
  for (std::size_t i = 0; i < front.size(); ++i) {
    const double exact = front_closed_form(eps, sep, c.times[i]);
    table.add({c.times[i], front[i], exact});
    worst = std::max(worst, std::abs(front[i] - exact));
  }
  r.emit("front.csv", table);
  r.check_le("front_offset_spacings", worst / c.grid.spacing, c.tol("front_spacings"));
  const LineFit f = fit_line(c.times, front);
  const double predicted = 2.0 * std::log(1.0 / eps) / sep;
  const double gap = predicted != 0.0 ? std::abs(f.slope / predicted - 1.0) : std::abs(f.slope);
  r.fit("front_speed", {f.slope, f.intercept, f.slope_stderr, f.r_squared, f.n_points, 0}, predicted);
  r.check_le("front_slope", gap, c.tol("slope_rel"));
}

inline void run_smoothing(Runner& r) {
  const ResolvedConfig& c = r.cfg();
  const Field u0 = realize(build_data(c.data, c.grid, c.seed), c.grid);
  const int dim = c.grid.dim;
  std::vector<Field> series;
  r.stage("evolve", [&] {
    for (double t : c.times) series.push_back(evolve(u0, t));
  });
  Table table{{"t", "p", "ratio", "bound"}, {}};
  for (const NormKind& kind : c.norms) {
    const double p = std::get<Lp>(kind).p;
    // Young's inequality with the exact L^{p'} norm of the kernel
    const double conj = p == 1.0 ? std::numeric_limits<double>::infinity() : p / (p - 1.0);
    const double bound =
        std::pow(4.0 * kPi, -0.5 * dim / p) * (std::isinf(conj) ? 1.0 : std::pow(conj, -0.5 * dim / conj));
    const double base = norm(u0, kind);
    double worst = 0.0;
    for (const Field& u : series) {
      const double ratio = std::pow(u.time(), 0.5 * dim / p) * norm(u, kSup) / base;
      table.add({u.time(), p, ratio, bound});
      worst = std::max(worst, ratio / bound);
    }
    r.check_le("smoothing_" + norm_name(kind), worst, 1.0 + c.tol("bound_slack"));
  }
  r.emit("smoothing.csv", table);
}

inline void run_counterexample(Runner& r) {
  const ResolvedConfig& c = r.cfg();
  const int terms = static_cast<int>(c.data.get("terms", 3));
  const double exponent = c.data.get("exponent", 0.5);
  require(exponent > 0.0, ErrorKind::InvalidArgument, "rate exponent must be positive");
  const auto phi = [exponent](double t) { return std::pow(t, -exponent); };
  const Counterexample ce = build_counterexample(phi, terms);
  Table table{{"n", "t", "radius", "mass", "lhs", "closed_form", "rhs"}, {}};
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t n = 1; n <= ce.times.size(); ++n) {
    const WitnessCheck w = counterexample_witness(ce, phi, n, c.grid.dim);
    table.add({static_cast<double>(n), ce.times[n - 1], ce.radii[n - 1], ce.masses[n - 1], w.lhs, w.closed_form,
               w.rhs});
    worst = std::max(worst, w.rhs - w.lhs);
  }
  r.emit("counterexample.csv", table);
  r.check_le("witness", worst, c.tol("witness_slack"));
}

}  // namespace detail

/// Runs the experiment and, when an output directory is set, writes every
/// series plus summary.json into it.
inline RunReport run(const ResolvedConfig& c) {
  static const std::map<std::string, void (*)(detail::Runner&)> table{
      {"conserve", detail::run_conserve}, {"rates", detail::run_rates},
      {"dipole", detail::run_dipole},     {"scaling", detail::run_scaling},
      {"mixing", detail::run_mixing},     {"spectrum", detail::run_spectrum},
      {"entropy", detail::run_entropy},   {"tails", detail::run_tails},
      {"front", detail::run_front},       {"smoothing", detail::run_smoothing},
      {"counterexample", detail::run_counterexample},
  };
  detail::Runner runner(c);
  runner.stage("total", [&] { table.at(c.experiment)(runner); });
  RunReport report = std::move(runner.report());
  report.config = to_json(c);
  if (c.out) {
    const auto start = std::chrono::steady_clock::now();
    for (SeriesOutput& s : report.series) {
      const auto path = *c.out / s.name;
      write_text_file(path, s.csv);
      s.path = path.string();
    }
    report.stages.push_back({"write", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
    write_text_file(*c.out / "summary.json", to_json(report).dump(2) + "\n");
  }
  return report;
}

inline RunReport run(const ExperimentConfig& c) { return run(resolve(c)); }

}  // namespace heatlab
