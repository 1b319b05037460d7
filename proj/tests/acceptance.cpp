// Acceptance run: one PASS/FAIL line per criterion, each followed by the
// measured values behind it. Exit status is nonzero when any line fails.

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "heatlab/asymptotics.hpp"
#include "heatlab/decay.hpp"
#include "heatlab/diagnostics.hpp"
#include "heatlab/hermite.hpp"
#include "heatlab/renormalized.hpp"
#include "heatlab/semigroup.hpp"

using namespace heatlab;

namespace {

struct Item {
  std::string label;
  double value;
  std::string want;
  bool pass;
};

class Criterion {
 public:
  Criterion(int id, std::string title) : id_(id), title_(std::move(title)) {}

  void within(const std::string& label, double value, double target, double tol) {
    std::ostringstream want;
    want << target << " +- " << tol;
    items_.push_back({label, value, want.str(), std::abs(value - target) <= tol});
  }
  void at_most(const std::string& label, double value, double limit) {
    items_.push_back({label, value, "<= " + fmt(limit), value <= limit});
  }
  void at_least(const std::string& label, double value, double limit) {
    items_.push_back({label, value, ">= " + fmt(limit), value >= limit});
  }
  void holds(const std::string& label, bool ok) { items_.push_back({label, ok ? 1.0 : 0.0, "true", ok}); }

  bool report() const {
    bool ok = !items_.empty();
    for (const Item& i : items_) ok = ok && i.pass;
    std::printf("%s  %2d  %s\n", ok ? "PASS" : "FAIL", id_, title_.c_str());
    for (const Item& i : items_)
      std::printf("        %-4s %-50s %-14s want %s\n", i.pass ? "ok" : "MISS", i.label.c_str(), fmt(i.value).c_str(),
                  i.want.c_str());
    std::fflush(stdout);
    return ok;
  }

 private:
  static std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
  }
  int id_;
  std::string title_;
  std::vector<Item> items_;
};

const GridSpec& rates_grid() {
  static const GridSpec g = make_grid(1, 320.0, 4096);
  return g;
}

double log_slope(const std::vector<double>& t, const std::vector<double>& y) {
  std::vector<double> lt, ly;
  for (std::size_t i = 0; i < t.size(); ++i) {
    lt.push_back(std::log(t[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_line(lt, ly).slope;
}

double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Field mixture(const GridSpec& g) {
  return realize(Catalog{GaussianSolution{0.5, {-2.0, 0, 0}, 0.0}, 1.0}, g) +
         realize(Catalog{GaussianSolution{0.5, {2.0, 0, 0}, 0.0}, 1.0}, g);
}

Field stationary_at(const GridSpec& g, double h) {
  return sample(g, [h](const Point& x) { return stationary_gaussian({x[0] - h, 0, 0}, 1); });
}

const InitialData kShifted = Catalog{GaussianSolution{1.0, {1.0, 0, 0}, 0.0}, 1.0};
const InitialData kTimeShifted = Catalog{GaussianSolution{}, 1.0};

// ---- criteria -------------------------------------------------------------

bool check_conservation() {
  Criterion c(1, "Conservation: mass, first moment, second-moment slope 2N (1D and 2D)");
  const std::vector<double> times = geometric_times(0.1, 10.0, 12);
  for (int dim : {1, 2}) {
    const GridSpec g = dim == 1 ? make_grid(1, 40.0, 4096) : make_grid(2, 40.0, 256);
    const Field u0 = mixture(g);
    std::vector<Field> series;
    for (double t : times) series.push_back(evolve(u0, t));
    const ConservationReport r = conservation_report(series);
    const std::string d = std::to_string(dim) + "D ";
    c.at_most(d + "mass drift", r.mass_drift, 1e-8);
    c.at_most(d + "first-moment drift", r.first_moment_drift, 1e-7);
    c.within(d + "second-moment slope / 2N", r.second_moment_slope / (2.0 * dim), 1.0, 1e-3);
  }
  return c.report();
}

bool check_main_convergence() {
  Criterion c(2, "Main convergence for box data: renormalized errors fall, L2 interpolation");
  const GridSpec g = make_grid(1, 160.0, 4096);
  const InitialData box = Box{-1.0, 1.0, 1.0};
  const std::vector<double> times = geometric_times(4.0, 64.0, 5);
  const ErrorSeries sup = attractor_error(box, g, GaussianAttractor{1.0}, kSup, times);
  const ErrorSeries l1 = attractor_error(box, g, GaussianAttractor{1.0}, kL1, times);
  const ErrorSeries l2 = attractor_error(box, g, GaussianAttractor{1.0}, kL2, times);
  c.at_most("sup error(64) / sup error(4)", sup.renormalized.back() / sup.renormalized.front(), 0.1);
  double worst_step = -INFINITY, worst_gap = -INFINITY;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i > 0) worst_step = std::max(worst_step, l1.raw[i] - l1.raw[i - 1]);
    worst_gap = std::max(worst_gap, l2.raw[i] - std::sqrt(l1.raw[i] * sup.raw[i]));
  }
  c.holds("L1 error strictly decreasing", worst_step < 0.0);
  c.at_most("max ||e||_2 - (||e||_1 ||e||_inf)^(1/2)", worst_gap, 1e-9);
  return c.report();
}

bool check_first_moment_rate() {
  Criterion c(3, "First-moment rate: shifted Gaussian h=1 over [4, 256]");
  for (const NormKind& k : {kSup, kL1})
    c.within(norm_name(k) + " slope", fit_rate(attractor_error(kShifted, rates_grid(), GaussianAttractor{1.0}, k,
                                                                default_rate_times()))
                                          .slope,
             -0.5, 0.05);
  return c.report();
}

bool check_second_moment_rate() {
  Criterion c(4, "Second-moment rate: time shift t0=1 and first-moment corrector");
  for (const NormKind& k : {kSup, kL1})
    c.within("time-shifted " + norm_name(k) + " slope",
             fit_rate(attractor_error(kTimeShifted, rates_grid(), GaussianAttractor{1.0}, k, default_rate_times()))
                 .slope,
             -1.0, 0.05);
  const MomentTable m1 = moment_table(realize(kShifted, rates_grid()), 1);
  for (const NormKind& k : {kSup, kL1})
    c.within("corrected shifted " + norm_name(k) + " slope",
             fit_rate(attractor_error(kShifted, rates_grid(), Corrector{m1}, k, default_rate_times())).slope, -1.0,
             0.1);
  return c.report();
}

bool check_weighted_rate() {
  Criterion c(5, "Weighted-norm rate: corrected error in L1(|x|dx)");
  const MomentTable m1 = moment_table(realize(kShifted, rates_grid()), 1);
  c.within("l1w slope",
           fit_rate(attractor_error(kShifted, rates_grid(), Corrector{m1}, WeightedL1{}, default_rate_times())).slope,
           -0.5, 0.1);
  return c.report();
}

bool check_higher_corrector() {
  Criterion c(6, "Higher corrector: k=2 on the shifted Gaussian");
  const MomentTable m2 = moment_table(realize(kShifted, rates_grid()), 2);
  c.within("sup slope",
           fit_rate(attractor_error(kShifted, rates_grid(), Corrector{m2}, kSup, default_rate_times())).slope, -1.5,
           0.1);
  return c.report();
}

bool check_scaling() {
  Criterion c(7, "Scaling method: T_k u at t=1 against M G_1, k in {1,2,4,8}");
  const GridSpec g = make_grid(1, 40.0, 1024);
  const GridSpec target = make_grid(1, 5.0, 128);
  const std::vector<ScalingRow> rows = scaling_experiment(Box{-1.0, 1.0, 1.0}, g, {1.0, 2.0, 4.0, 8.0}, target);
  double worst_step = -INFINITY, agreement = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) worst_step = std::max(worst_step, rows[i].sup_distance - rows[i - 1].sup_distance);
    agreement = std::max(agreement, std::abs(rows[i].sup_distance - rows[i].renormalized_sup));
  }
  c.holds("sup distance strictly decreasing", worst_step < 0.0);
  c.at_most("max |distance - renormalized error at k^2|", agreement, 1e-10);
  return c.report();
}

bool check_counterexample() {
  Criterion c(8, "Counterexample for phi(t) = t^(-1/2), n <= 3");
  const auto phi = [](double t) { return 1.0 / std::sqrt(t); };
  const Counterexample ce = build_counterexample(phi, 3);
  for (std::size_t n = 1; n <= 3; ++n) {
    const WitnessCheck w = counterexample_witness(ce, phi, n);
    c.at_least("witness lhs - n phi(t_n), n=" + std::to_string(n), w.lhs - w.rhs, 0.0);
  }
  return c.report();
}

bool check_tail_bounds() {
  Criterion c(9, "Tails: box bracket on |x| in [5, 15], exponential far value");
  const GridSpec g = make_grid(1, 40.0, 4096);
  const Field u = evolve(realize(Box{-1.0, 1.0, 1.0}, g), 1.0, {Method::Direct});
  const TailProfile p = tail_profile(u, 1.0, Point{}, 1.0, 5.0, 15.0);
  c.holds("-log(u/M) inside the bracket", p.inside);
  const GridSpec ge = make_grid(1, 60.0, 8192);
  const Solution ue(realize(OneSidedExponential{1.0}, ge));
  c.at_most("|e^20 u(20, 1) - e|", std::abs(std::exp(20.0) * ue({20.0, 0, 0}, 1.0) - std::exp(1.0)), 1e-3);
  return c.report();
}

bool check_front() {
  Criterion c(10, "Sign-change front: 1/2 + 2t log(1/eps)");
  const GridSpec g = make_grid(1, 40.0, 4096);
  const std::vector<double> times{1.0, 2.0, 4.0};
  for (double eps : {std::exp(-1.0), 0.1}) {
    const std::vector<double> r = sign_change_front(eps, 1.0, times, g);
    double worst = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i)
      worst = std::max(worst, std::abs(r[i] - front_closed_form(eps, 1.0, times[i])));
    char label[64];
    std::snprintf(label, sizeof label, "eps=%.4g max offset / spacing", eps);
    c.at_most(label, worst / g.spacing, 1.0);
    std::snprintf(label, sizeof label, "eps=%.4g slope / 2 log(1/eps)", eps);
    c.within(label, fit_line(times, r).slope / (2.0 * std::log(1.0 / eps)), 1.0, 0.03);
  }
  return c.report();
}

bool check_dipole() {
  Criterion c(11, "Dipole on the half-line: error rates, mass decay, Neumann mass");
  const InitialData bump = Box{0.5, 1.5, 1.0};
  const std::vector<double> times = default_rate_times();
  c.within("L1 dipole-error slope", fit_rate(dipole_error(bump, rates_grid(), times, kL1)).slope, -1.0, 0.1);
  c.within("half-line mass slope",
           log_slope(times, halfline_mass_series(bump, BoundaryKind::HalfLineDirichlet, rates_grid(), times)), -0.5,
           0.02);
  c.within("weighted-L1 dipole-error slope", fit_rate(dipole_error(bump, rates_grid(), times, WeightedL1{})).slope,
           -0.5, 0.1);
  double drift = 0.0;
  for (double m : halfline_mass_series(bump, BoundaryKind::HalfLineNeumann, rates_grid(), times))
    drift = std::max(drift, std::abs(m - 1.0));
  c.at_most("Neumann mass drift", drift, 1e-8);
  return c.report();
}

bool check_ou_spectrum() {
  Criterion c(12, "OU spectrum: Hermite orthogonality, eigen residuals, Rodrigues");
  const GridSpec g = make_grid(2, 10.0, 200);
  const auto alphas = multi_indices(2, 6);
  std::vector<Field> modes;
  for (const auto& a : alphas) modes.push_back(hermite_field(a, g));
  double off = 0.0;
  for (std::size_t i = 0; i < alphas.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) off = std::max(off, std::abs(mu_inner(modes[i], modes[j])));
  c.at_most("max off-diagonal <H_a, H_b>_mu, |a| <= 6", off, 1e-8);

  const GridSpec ge = make_grid(2, 8.0, 256);
  double residual = 0.0;
  for (const auto& a : alphas) {
    const Field h = hermite_field(a, ge);
    residual = std::max(residual, interior_sup(ou_operator(h) + static_cast<double>(a.total()) * h, kStencilRing) /
                                      norm(h, kSup));
  }
  c.at_most("max relative eigen residual", residual, 1e-5);
  bool same = true;
  for (int k = 0; k <= 6; ++k) same = same && rodrigues_1d(k) == hermite_1d(k);
  c.holds("Rodrigues == recursion, k <= 6", same);
  return c.report();
}

bool check_ou_decay() {
  Criterion c(13, "OU decay of w0 = 1 + x and the Gaussian Poincare inequality");
  const GridSpec g = make_grid(1, 10.0, 1024);
  const Field w0 = sample(g, [](const Point& x) { return 1.0 + x[0]; });
  const std::vector<double> times{0.5, 1.0, 1.5, 2.0};
  const EntropySeries pde = ou_decay_series(w0, times, Evolution::PDE);
  const EntropySeries spec = ou_decay_series(w0, times, Evolution::Spectral);
  double pde_gap = 0.0, spec_gap = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double exact = std::exp(-2.0 * times[i]);
    pde_gap = std::max(pde_gap, std::abs(pde.F[i] / exact - 1.0));
    spec_gap = std::max(spec_gap, std::abs(spec.F[i] / exact - 1.0));
  }
  c.at_most("PDE pipeline |F / e^(-2t) - 1|", pde_gap, 1e-2);
  c.at_most("spectral pipeline |F / e^(-2t) - 1|", spec_gap, 1e-10);
  c.at_most("|Poincare gap| for w = x", std::abs(gaussian_poincare_gap(sample(g, [](const Point& x) { return x[0]; }))),
            1e-6);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> coef(0.0, 1.0);
  double worst = INFINITY;
  for (int trial = 0; trial < 20; ++trial) {
    const double a0 = coef(rng), a1 = coef(rng), a2 = coef(rng), a3 = coef(rng), a4 = coef(rng);
    const Field w = sample(g, [&](const Point& x) {
      const double y = x[0];
      return a0 + y * (a1 + y * (a2 + y * (a3 + y * a4)));
    });
    worst = std::min(worst, gaussian_poincare_gap(w));
  }
  c.at_least("min Poincare gap, 20 random quartics", worst, -1e-8);
  return c.report();
}

bool check_entropy() {
  Criterion c(14, "Entropy: log-Sobolev, Csiszar-Kullback, shifted Gaussian, two-bump flow");
  const GridSpec g = make_grid(1, 10.0, 1024);
  const std::vector<Field> catalog{
      stationary_at(g, 0.3),
      stationary_at(g, -2.0),
      0.5 * stationary_at(g, 1.0) + 0.5 * stationary_at(g, -1.0),
      sample(g, [](const Point& x) { return gaussian(x, 0.2, 1); }),
      sample(g, [](const Point& x) { return gaussian(x, 1.0, 1, 1.0, {0.5, 0, 0}); }),
  };
  double ls = INFINITY, ck = INFINITY;
  for (const Field& v : catalog) {
    ls = std::min(ls, logsob_gap(v));
    ck = std::min(ck, ck_gap(v));
  }
  c.at_least("min logsob gap on the catalog", ls, -1e-8);
  c.at_least("min ck gap on the catalog", ck, -1e-8);

  const Field shifted = stationary_at(g, 1.0);
  c.at_most("|I/2 - E| at h=1", std::abs(0.5 * fisher(shifted) - entropy(shifted)), 1e-6);
  c.within("E at h=1", entropy(shifted), 0.5, 1e-6);

  const Field v0 = 0.5 * stationary_at(g, 1.0) + 0.5 * stationary_at(g, -1.0);
  const double e0 = entropy(v0);
  const std::vector<double> times{0.25, 0.5, 1.0, 1.5, 2.0};
  const EntropySeries s = entropy_decay_series(v0, times);
  double excess = -INFINITY;
  for (std::size_t i = 0; i < times.size(); ++i)
    excess = std::max(excess, s.E[i] / (e0 * std::exp(-2.0 * times[i])) - (1.0 + 1e-2));
  c.at_most("max E(t) / (E(0) e^(-2t)) - 1.01", excess, 0.0);
  double gap = 0.0;
  for (double t : {0.25, 1.0}) gap = std::max(gap, entropy_rate_check(v0, t).relative_gap);
  c.at_most("max |dE/dt + I| / I", gap, 0.02);
  return c.report();
}

bool check_cross_pipeline() {
  Criterion c(15, "Cross-pipeline: spectral vs transformed PDE, frame round trip");
  const GridSpec g = make_grid(1, 10.0, 1024);
  const Field w0 = sample(g, [](const Point& x) { return 1.0 + 0.3 * x[0] + 0.2 * (x[0] * x[0] - 1.0); });
  const HermiteCoeffs coeffs = expand(w0, 6);
  double worst = 0.0;
  for (double t : {0.0, 0.5, 1.0, 1.5, 2.0}) {
    const Field pde = ou_evolve(w0, t);
    const Field spectral = reconstruct(spectral_evolve(coeffs, t), g);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (std::abs(g.coord(i)) <= 4.0) worst = std::max(worst, std::abs(pde[i] - spectral[i]));
  }
  c.at_most("sup on |x| <= 4, t in [0, 2]", worst, 1e-3);

  const GridSpec gr = make_grid(1, 20.0, 1024);
  const Field u = sample(gr, [](const Point& y) { return (1.0 + 0.3 * y[0]) * std::exp(-y[0] * y[0] / 3.0); }, 0.8,
                         Diffusivity::Half);
  RenormFrame f{Frame::Physical, u};
  for (Frame next : {Frame::FokkerPlanck, Frame::OrnsteinUhlenbeck, Frame::Hamiltonian, Frame::Physical})
    f = convert(f, next);
  c.at_most("frame round-trip error", max_abs_diff(f.field, u), 1e-10);
  return c.report();
}

bool check_solver_consistency() {
  Criterion c(16, "Solver self-consistency: Direct vs FFT, semigroup law, smoothing");
  const GridSpec g = make_grid(1, 20.0, 512);
  const Field box = realize(Box{-1.0, 2.0, 1.0}, g);
  double gap = 0.0;
  for (double t : {0.01, 0.5, 3.0}) gap = std::max(gap, max_abs_diff(evolve(box, t), evolve(box, t, {Method::Direct})));
  c.at_most("sup |Direct - FFT|", gap, 1e-10);

  // Single-step quadrature tolerance: distance of one step from the exact
  // evolution of the indicator the discrete box represents.
  const GridSpec gs = make_grid(1, 40.0, 2048);
  const Field u0 = realize(Box{-1.0, 1.0, 1.0}, gs);
  double first = INFINITY, last = -INFINITY, height = 0.0;
  for (std::size_t i = 0; i < gs.size(); ++i)
    if (u0[i] > 0.0) {
      first = std::min(first, gs.coord(i) - 0.5 * gs.spacing);
      last = std::max(last, gs.coord(i) + 0.5 * gs.spacing);
      height = u0[i];
    }
  const auto exact = [&](double t) {
    return sample(gs, [&](const Point& x) {
      const double s = std::sqrt(4.0 * t);
      return 0.5 * height * (std::erf((x[0] - first) / s) - std::erf((x[0] - last) / s));
    });
  };
  double worst_ratio = 0.0;
  for (double s : {0.5, 1.0, 2.0})
    for (double t : {0.5, 1.0, 2.0}) {
      const double tol = std::max({max_abs_diff(evolve(u0, s), exact(s)), max_abs_diff(evolve(u0, t), exact(t)),
                                   max_abs_diff(evolve(u0, s + t), exact(s + t))});
      const double law = max_abs_diff(evolve(evolve(u0, s), t), evolve(u0, s + t));
      worst_ratio = std::max(worst_ratio, law / (2.0 * tol));
    }
  c.at_most("semigroup-law error / (2 x single-step tolerance)", worst_ratio, 1.0);

  const GridSpec gw = make_grid(1, 200.0, 4096);
  const Field data = realize(Box{-1.0, 1.0, 1.0}, gw);
  for (double p : {1.0, 2.0}) {
    const double conj = p == 1.0 ? INFINITY : p / (p - 1.0);
    const double bound = std::pow(4.0 * kPi, -0.5 / p) * (std::isinf(conj) ? 1.0 : std::pow(conj, -0.5 / conj));
    double worst = 0.0;
    for (double t : geometric_times(0.1, 100.0, 8))
      worst = std::max(worst, std::pow(t, 0.5 / p) * norm(evolve(data, t), kSup) / norm(data, Lp{p}));
    c.at_most("max smoothing ratio / Young constant, p=" + std::to_string(static_cast<int>(p)), worst / bound,
              1.0 + 1e-6);
  }
  return c.report();
}

}  // namespace

int main() {
  const std::vector<std::function<bool()>> criteria{
      check_conservation,   check_main_convergence, check_first_moment_rate,  check_second_moment_rate,
      check_weighted_rate,  check_higher_corrector, check_scaling,            check_counterexample,
      check_tail_bounds,    check_front,            check_dipole,             check_ou_spectrum,
      check_ou_decay,       check_entropy,          check_cross_pipeline,     check_solver_consistency,
  };
  int failed = 0;
  for (const auto& run : criteria) {
    try {
      if (!run()) ++failed;
    } catch (const Error& e) {
      std::printf("FAIL  raised %s\n", e.what());
      ++failed;
    }
  }
  std::printf("\n%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
