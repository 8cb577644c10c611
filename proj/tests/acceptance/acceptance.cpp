// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance          run every criterion
//   acceptance 3 7      run the listed criteria
// Exit status is nonzero if any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "formctl/app.hpp"
#include "formctl/error.hpp"

using namespace formctl;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path config_path(const std::string& name) {
  return fs::path(FORMCTL_SOURCE_DIR) / "configs" / (name + ".toml");
}

// ---------------------------------------------------------------------------
// Linear closed-loop cases shared by criteria 1, 2 and 9.

struct LinearCase {
  double e, len, s_star;
  bool certified = false;
  DecayCertificate cert;
  TimeSeries series;
  double runtime = 0.0;
};

std::vector<LinearCase>& linear_cases() {
  static std::vector<LinearCase> cases = [] {
    std::vector<LinearCase> out;
    for (double e : {1.0, 9200.0}) {
      for (double len : {1.0, 7.5}) {
        for (double c : {0.0, 0.05, 0.2}) {
          LinearCase lc{e, len, c * std::sqrt(e) / len};
          const HyperbolicSystem sys = build_system(e, lc.s_star);
          const MaterialParams p(e, len, 1.0);
          const GainPair g = synthesize_gains(sys, p);
          lc.cert = check_conditions(sys, p, g, std::abs(lc.s_star));
          if (!lc.cert.valid()) {
            lc.cert = search_mu_hat(sys, p, g, default_mu_hat_max(sys, p, g), 1000);
          }
          lc.certified = lc.cert.valid();
          if (lc.certified) {
            const auto t0 = Clock::now();
            const FeedbackController ctrl(p, DesiredState::from_inward_speeds(0.0, len, 0.0, 0.0),
                                          g, lc.s_star);
            const Grid grid(len, 256);
            const WeightProfile w(lc.cert.mu_hat, sys.wave_speed(), len);
            const RiemannFields r0 = riemann_fields_from(
                sys, grid, [](double) { return 0.0; },
                [&](double x) { return cosine_hump(x, 0.5 * len, 0.4 * len); });
            SolverConfig cfg;
            cfg.cfl = 0.9;
            cfg.t_end = 12.0 / lc.cert.mu;
            cfg.record_every = 1;
            lc.series = run_linear(sys, ctrl, w, grid, r0, cfg);
            lc.runtime = seconds_since(t0);
          }
          out.push_back(std::move(lc));
        }
      }
    }
    return out;
  }();
  return cases;
}

Outcome criterion1() {
  int n_cert = 0;
  double worst = 0.0, slowest = 0.0;
  bool ok = true;
  for (const LinearCase& c : linear_cases()) {
    if (!c.certified) continue;
    ++n_cert;
    const double l0 = c.series.records.front().lyapunov;
    for (const TimeRecord& r : c.series.records) {
      const double ratio = r.lyapunov / (l0 * std::exp(-c.cert.mu * r.t));
      worst = std::max(worst, ratio);
      if (r.lyapunov > 1.001 * l0 * std::exp(-c.cert.mu * r.t)) ok = false;
    }
    ok = ok && !c.series.failed && c.runtime < 10.0;
    slowest = std::max(slowest, c.runtime);
  }
  ok = ok && n_cert >= 5;
  return {ok, fmt("%d certified cases (S* = 0 has no certificate), max L/(L0 e^{-mu t}) = %.6f, "
                  "slowest case %.2f s",
                  n_cert, worst, slowest)};
}

Outcome criterion2() {
  int n_cert = 0;
  double worst = INFINITY;
  bool ok = true;
  for (const LinearCase& c : linear_cases()) {
    if (!c.certified) continue;
    ++n_cert;
    const double rate = fit_decay_rate(c.series);
    worst = std::min(worst, rate / c.cert.mu);
    if (rate < 0.99 * c.cert.mu) ok = false;
  }
  return {ok && n_cert >= 5,
          fmt("%d cases, min fitted/certified rate = %.4f (needs >= 0.99)", n_cert, worst)};
}

Outcome criterion3() {
  double worst = INFINITY;
  int violations = 0;
  for (double e : {1.0, 9200.0}) {
    for (int i = 0; i < 20; ++i) {
      const double s_star = -10.0 + 20.0 * i / 19.0;
      for (int j = 0; j < 20; ++j) {
        const double mu_hat = 30.0 * j / 19.0;
        const HyperbolicSystem sys = build_system(e, s_star);
        const double gap = decay_rate(sys, 1.0, mu_hat) - decay_rate_lower_bound(sys, mu_hat);
        worst = std::min(worst, gap);
        if (gap < -1e-8) ++violations;
      }
    }
  }
  return {violations == 0,
          fmt("2 x 20 x 20 (S*, mu_hat) points, min(mu - (mu_hat - 2|S*|)) = %.3e", worst)};
}

Outcome criterion4() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> loge(-2.0, 5.0), src(-1e3, 1e3);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double e = std::pow(10.0, loge(rng));
    const double s_star = src(rng);
    const HyperbolicSystem s = build_system(e, s_star);
    const double scale_b = std::abs(s_star) > 0 ? std::abs(s_star) : 1.0;
    Mat2 ones{{1.0, 1.0, 1.0, 1.0}};
    worst = std::max({worst, (s.t() * s.t_inv() - Mat2::identity()).max_abs(),
                      (s.t_inv() * s.a() * s.t() - s.lambda()).max_abs() / e,
                      (s.b() - (0.5 * s_star) * ones).max_abs() / scale_b,
                      (s.t_inv() * s.s() * s.t() - s.b()).max_abs() / scale_b});
  }
  return {worst <= 1e-12, fmt("100 random (E, S*), max relative residual %.3e", worst)};
}

Outcome criterion5() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> loge(-2.0, 4.5), u01(0.0, 1.0);
  std::normal_distribution<double> nd;
  int violations = 0;
  double tightest = INFINITY;
  for (int k = 0; k < 1000; ++k) {
    const double e = std::pow(10.0, loge(rng));
    const double len = 0.5 + 7.0 * u01(rng);
    const HyperbolicSystem sys = build_system(e, 1.0);
    const double mu_hat = 10.0 * u01(rng) * sys.wave_speed() / len;
    const WeightProfile w(mu_hat, sys.wave_speed(), len);
    const int n = 4 + k % 125;
    const Grid grid(len, n);
    PerturbationFields u{std::vector<double>(n), std::vector<double>(n)};
    RiemannFields r = RiemannFields::zeros(n);
    for (int i = 0; i < n; ++i) {
      u.delta_v[i] = nd(rng);
      u.delta_sigma[i] = nd(rng) * sys.wave_speed() * std::exp(2.0 * nd(rng));
      const RiemannState ri = to_riemann(sys, {u.delta_v[i], u.delta_sigma[i]});
      r.plus[i] = ri.r_plus;
      r.minus[i] = ri.r_minus;
    }
    const double c = norm_equivalence_constant(sys, w);
    const double norm2 = grid_norm_squared(grid, u);
    const double lyap = lyapunov_functional(w, grid, r);
    tightest = std::min({tightest, lyap / (c * norm2), norm2 / (c * lyap)});
    if (!(c > 0.0 && c * norm2 <= lyap && lyap <= norm2 / c)) ++violations;
  }
  return {violations == 0,
          fmt("1000 random states, %d violations, tightest side ratio %.4f", violations, tightest)};
}

double scalar_norton_rk4(double sigma, double e, const NortonLaw& n, double t, long steps) {
  auto f = [&](double s) { return -e * n.plastic_strain_rate(s); };
  const double h = t / steps;
  for (long k = 0; k < steps; ++k) {
    const double k1 = f(sigma), k2 = f(sigma + 0.5 * h * k1), k3 = f(sigma + 0.5 * h * k2),
                 k4 = f(sigma + h * k3);
    sigma += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return sigma;
}

Outcome criterion6() {
  const auto levels =
      refine_transport(9200.0, 7.5, {64, 128, 256}, 0.3 * 7.5 / std::sqrt(9200.0), 0.5,
                       RefinementProfile::kBump);
  bool ok = true;
  std::string ratios;
  for (std::size_t k = 1; k < levels.size(); ++k) {
    ok = ok && levels[k].ratio >= 1.8 && levels[k].ratio <= 2.2;
    ratios += fmt("%s%.3f", k > 1 ? ", " : "", levels[k].ratio);
  }

  // Relaxation substep against a scalar ODE oracle at dt/100.
  const NortonLaw norton{146.0, 5.0, 5.0};
  const ViscoplasticLaw law = norton_law(146.0, 5.0, 5.0);
  const double e = 9200.0;
  const double dt = 0.5 * (7.5 / 200) / std::sqrt(e);
  double worst = 0.0;
  for (double s0 : {20.0, 146.0, 180.0, 300.0}) {
    const double h = 0.5 * dt;
    const LocalPoint p = relax_point(law, e, {s0, 0.0, {}}, h);
    const double oracle = scalar_norton_rk4(s0, e, norton, h, 100);
    worst = std::max(worst, std::abs(p.stress - oracle) / std::abs(oracle));
  }
  ok = ok && worst <= 1e-6;
  return {ok, fmt("error ratios 64->128->256: %s; relaxation vs RK4(dt/100) max rel %.2e",
                  ratios.c_str(), worst)};
}

// ---------------------------------------------------------------------------
// Forming runs (criteria 7, 8).

struct FormingRun {
  RunResult result;
  double runtime = 0.0;
  double sigma_star = 0.0;
  double area = 0.0;
  double wave_speed = 0.0;
  double length = 0.0;
};

FormingRun forming_run(double e_override) {
  RunConfig c = RunConfig::load(config_path("nonlinear-1150C"));
  if (e_override > 0.0) c = c.with_override("material.E", e_override);
  const auto t0 = Clock::now();
  const Scenario s = build_scenario(c);
  FormingRun run{simulate(s)};
  run.runtime = seconds_since(t0);
  run.sigma_star = c.desired.sigma_star;
  run.area = c.material.area;
  run.wave_speed = s.params.wave_speed();
  run.length = c.material.length;
  return run;
}

const FormingRun& base_forming_run() {
  static const FormingRun run = forming_run(0.0);
  return run;
}

Outcome criterion7() {
  const FormingRun& run = base_forming_run();
  const auto& recs = run.result.series.records;
  if (run.result.series.failed || recs.empty()) {
    return {false, "run failed: " + run.result.series.failure};
  }
  const double target = run.sigma_star * run.area;
  const bool a = recs.front().v_left > 1.5;

  // Transient: two wave round trips through the bar.
  const double t_transient = 4.0 * run.length / run.wave_speed;
  bool monotone = true;
  double prev = INFINITY;
  for (const TimeRecord& r : recs) {
    if (r.t < t_transient) continue;
    const double gap = std::abs(r.force - target);
    if (gap > prev * (1.0 + 1e-9) + 1e-9) monotone = false;
    prev = gap;
  }
  const double final_force = recs.back().force;
  const bool b = monotone && std::abs(final_force - target) <= 0.005 * target;
  const double v_end = recs.back().v_left;
  const bool c = std::abs(v_end - 1.5) <= 0.05;
  return {a && b && c && run.runtime < 60.0,
          fmt("(a) initial command %.4f mm/s; (b) force %s after t = %.3f s, final %.2f N vs "
              "%.2f N; (c) final speed %.5f mm/s; %.2f s",
              recs.front().v_left, monotone ? "monotone" : "NOT monotone", t_transient,
              final_force, target, v_end, run.runtime)};
}

Outcome criterion8() {
  const FormingRun& base = base_forming_run();
  const FormingRun stiff = forming_run(10000.0);
  if (base.result.series.failed || stiff.result.series.failed) return {false, "run failed"};
  const double s1 = base.result.series.records.back().sigma_left;
  const double s2 = stiff.result.series.records.back().sigma_left;
  const auto t1 = settling_time_99(base.result.series, base.sigma_star);
  const auto t2 = settling_time_99(stiff.result.series, stiff.sigma_star);
  if (!t1 || !t2) return {false, "stress did not settle within 99% of sigma*"};
  const double stress_change = std::abs(s2 - s1) / s1;
  const double time_change = std::abs(*t2 - *t1) / *t1;
  const bool ok = stress_change <= 0.005 && time_change >= 0.05;
  return {ok, fmt("E 9200 -> 10000 MPa: converged stress change %.4f%% (<= 0.5%%), "
                  "99%% settling time %.4f -> %.4f s, change %.2f%% (needs >= 5%%)",
                  100 * stress_change, *t1, *t2, 100 * time_change)};
}

Outcome criterion9() {
  nlohmann::json report = nlohmann::json::array();
  bool ok = true;
  int coth_decays = 0, n_cert = 0;
  for (const LinearCase& c : linear_cases()) {
    if (!c.certified) continue;
    ++n_cert;
    const bool riemann_ok = !c.series.failed && lyapunov_nonincreasing(c.series);
    ok = ok && riemann_ok;

    // Same case under the coth closed form.
    const HyperbolicSystem sys = build_system(c.e, c.s_star);
    const MaterialParams p(c.e, c.len, 1.0);
    const FeedbackController coth(p, DesiredState::from_inward_speeds(0.0, c.len, 0.0, 0.0),
                                  c.cert.gains, c.s_star, LawVariant::kCothClosedForm);
    const GainPair eq = equivalent_reflection_gains(coth);
    const Grid grid(c.len, 256);
    const RiemannFields r0 = riemann_fields_from(
        sys, grid, [](double) { return 0.0; },
        [&](double x) { return cosine_hump(x, 0.5 * c.len, 0.4 * c.len); });
    SolverConfig cfg;
    cfg.cfl = 0.9;
    cfg.t_end = 12.0 / c.cert.mu;
    cfg.record_every = 50;
    const TimeSeries ts =
        run_linear(sys, coth, WeightProfile(c.cert.mu_hat, sys.wave_speed(), c.len), grid, r0, cfg);
    const bool coth_ok = !ts.failed && lyapunov_nonincreasing(ts) &&
                         ts.records.back().lyapunov < ts.records.front().lyapunov;
    coth_decays += coth_ok;
    report.push_back({{"E", c.e},
                      {"L", c.len},
                      {"S_star", c.s_star},
                      {"mu", c.cert.mu},
                      {"riemann_gain", {{"K", c.cert.gains.k0}, {"nonincreasing", riemann_ok}}},
                      {"coth_closed_form",
                       {{"equivalent_K0", eq.k0},
                        {"equivalent_K1", eq.k1},
                        {"status", ts.failed ? "failed" : "ok"},
                        {"decays", coth_ok},
                        {"final_ratio", ts.records.back().lyapunov / ts.records.front().lyapunov}}}});
  }
  std::ofstream("acceptance_variants.json") << report.dump(2) << '\n';
  return {ok && n_cert >= 5,
          fmt("riemann-gain non-increasing on %d/%d cases; coth-closed-form decays on %d/%d "
              "(recorded in acceptance_variants.json)",
              ok ? n_cert : 0, n_cert, coth_decays, n_cert)};
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> run_shipped_configs(const fs::path& dir) {
  fs::remove_all(dir);
  const char* names[] = {"linear-certify", "linear-decay", "nonlinear-1150C", "nonlinear-1200C"};
  using Cmd = int (*)(const RunConfig&, std::ostream*);
  const Cmd cmds[] = {cmd_certify, cmd_simulate, cmd_sweep, cmd_refine};
  for (const char* name : names) {
    ConfigTable t = ConfigTable::load(config_path(name));
    t.set("output.dir", dir.string());
    const RunConfig c = RunConfig::from_table(t);
    for (Cmd cmd : cmds) cmd(c, nullptr);
  }
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    out[entry.path().filename().string()] = file_bytes(entry.path());
  }
  return out;
}

// Same output directory both times, since the config echo includes it.
Outcome criterion10() {
  const fs::path dir = fs::temp_directory_path() / "formctl_acceptance_determinism";
  const auto first = run_shipped_configs(dir);
  const auto second = run_shipped_configs(dir);
  int differing = 0;
  for (const auto& [name, bytes] : first) {
    const auto it = second.find(name);
    if (it == second.end() || it->second != bytes) ++differing;
  }
  return {!first.empty() && differing == 0 && first.size() == second.size(),
          fmt("4 shipped configs x 4 subcommands run twice: %zu files, %d differ", first.size(),
              differing)};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Outcome()>>> list = {
      {"certified exponential decay", criterion1},
      {"fitted decay rate vs certificate", criterion2},
      {"decay rate lower bound", criterion3},
      {"transform identities", criterion4},
      {"norm equivalence sandwich", criterion5},
      {"scheme convergence and relaxation oracle", criterion6},
      {"forming run at 1150C", criterion7},
      {"elastic modulus sensitivity", criterion8},
      {"feedback law variants", criterion9},
      {"determinism", criterion10},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty()) {
    for (int k = 1; k <= static_cast<int>(criteria().size()); ++k) selected.push_back(k);
  }
  int failed = 0;
  for (int k : selected) {
    if (k < 1 || k > static_cast<int>(criteria().size())) {
      std::fprintf(stderr, "unknown criterion %d\n", k);
      return 2;
    }
    const auto& [name, run] = criteria()[k - 1];
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    failed += !o.pass;
    std::printf("%s  criterion %2d  %-42s %s\n", o.pass ? "PASS" : "FAIL", k, name.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
