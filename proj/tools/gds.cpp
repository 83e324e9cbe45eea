// gds: command-line driver for the sandpile, obstacle and balayage experiments.
//
// Exit codes: 0 ok, 1 invariant violation or failed check, 2 usage or input error.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gds/balayage.hpp"
#include "gds/energy.hpp"
#include "gds/errors.hpp"
#include "gds/grid_io.hpp"
#include "gds/kernels.hpp"
#include "gds/obstacle.hpp"
#include "gds/sandpile.hpp"
#include "gds/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gds;

namespace {

using Clock = std::chrono::steady_clock;

struct RunConfig {
  std::string subcommand;
  std::string scenario_path;
  std::string preset;
  std::string manifest_path;
  std::optional<double> xi, R, stop_tol;
  std::optional<std::string> schedule;
  std::optional<std::uint64_t> seed;
  bool audit = false;
  bool deterministic = true;
  std::string out = "out";
};

// Resolved inputs of one invocation, echoed in manifest.json.
struct Resolved {
  Scenario scenario;
  double xi = 0.0;
  double R = 0.0;
  double stop_tol = 0.0;
  bool audit = false;
  bool deterministic = true;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CheckFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Scenario preset_scenario(const std::string& name) {
  if (name == "five_site") return five_site_scenario();
  if (name == "ball_fill") return ball_fill_scenario(2, std::numbers::pi / 4.0, 1.0, 2.0, {0.125, 0.0625, 0.03125});
  if (name == "annulus_sphere_3d") return annulus_sphere_scenario(3, 0.05, 0.5, {2, 3, 4, 6}, 0.125);
  if (name == "annulus_sphere_2d") return annulus_sphere_scenario(2, 0.05, 0.5, {2, 3, 4, 6}, 0.125);
  throw UsageError("unknown preset '" + name + "'");
}

Resolved resolve(const RunConfig& cfg) {
  const int sources = !cfg.scenario_path.empty() + !cfg.preset.empty() + !cfg.manifest_path.empty();
  if (sources != 1) throw UsageError("give exactly one of --scenario, --preset, --manifest");

  Resolved r;
  json resolved_in;
  if (!cfg.manifest_path.empty()) {
    std::ifstream in(cfg.manifest_path);
    if (!in) throw UsageError("cannot open manifest '" + cfg.manifest_path + "'");
    json m;
    try {
      m = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError("malformed manifest: " + std::string(e.what()));
    }
    if (!m.contains("scenario") || !m.contains("resolved")) throw UsageError("manifest lacks scenario/resolved");
    if (m.value("subcommand", cfg.subcommand) != cfg.subcommand) {
      throw UsageError("manifest was written by '" + m.at("subcommand").get<std::string>() + "'");
    }
    r.scenario = scenario_from_json(m.at("scenario"));
    resolved_in = m.at("resolved");
  } else if (!cfg.preset.empty()) {
    r.scenario = preset_scenario(cfg.preset);
  } else {
    r.scenario = load_scenario(cfg.scenario_path);
  }

  Scenario& s = r.scenario;
  if (!resolved_in.is_null()) {
    s.seed = resolved_in.at("seed").get<std::uint64_t>();
    s.schedule = parse_schedule(resolved_in.at("schedule").get<std::string>());
    r.xi = resolved_in.at("xi").get<double>();
    r.R = resolved_in.at("R").get<double>();
    r.stop_tol = resolved_in.at("stop_tol").get<double>();
    r.audit = resolved_in.at("audit").get<bool>();
    r.deterministic = resolved_in.at("deterministic").get<bool>();
  } else {
    r.xi = s.xi_sequence.front();
    r.R = s.R;
    r.stop_tol = s.stop_tol;
    r.audit = cfg.audit;
    r.deterministic = cfg.deterministic;
  }
  if (cfg.seed) s.seed = *cfg.seed;
  if (cfg.schedule) {
    try {
      s.schedule = parse_schedule(*cfg.schedule);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
  }
  if (cfg.xi) {
    if (!(*cfg.xi > 0.0)) throw UsageError("--xi must be positive");
    r.xi = *cfg.xi;
  }
  if (cfg.R) {
    if (!(*cfg.R > 0.0)) throw UsageError("--R must be positive");
    r.R = *cfg.R;
  }
  if (cfg.stop_tol) {
    if (!(*cfg.stop_tol >= 0.0)) throw UsageError("--stop-tol must be nonnegative");
    r.stop_tol = *cfg.stop_tol;
  }
  if (cfg.audit) r.audit = true;
  if (!cfg.deterministic) r.deterministic = false;
  return r;
}

json manifest(const std::string& sub, const Resolved& r) {
  return json{{"version", GDS_VERSION},
              {"subcommand", sub},
              {"scenario", r.scenario.document},
              {"resolved",
               {{"xi", r.xi},
                {"R", r.R},
                {"xi_sequence", r.scenario.xi_sequence},
                {"R_list", r.scenario.R_list},
                {"stop_tol", r.stop_tol},
                {"schedule", to_string(r.scenario.schedule)},
                {"seed", r.scenario.seed},
                {"audit", r.audit},
                {"deterministic", r.deterministic}}}};
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  out << j.dump(2) << "\n";
  if (!out) throw Error("cannot write " + p.string());
}

void write_grid(const fs::path& p, const LatticeWindow& w, std::span<const double> v) {
  write_grid_csv(p.string(), w, v);
}

Execution exec_of(const Resolved& r) { return r.deterministic ? Execution::kSerial : Execution::kParallel; }

GdsOptions gds_options(const Resolved& r) {
  GdsOptions o;
  o.R = r.R;
  o.schedule = r.scenario.schedule;
  o.seed = r.scenario.seed;
  o.stop_tol = r.stop_tol;
  o.require_admissible = r.scenario.require_admissible;
  o.audit = r.audit;
  return o;
}

double boundary_mass(const GdsResult& run, double R) {
  const ConfiningBall ball(run.nu.window(), R);
  double b = 0.0;
  for (std::size_t i = 0; i < run.nu.size(); ++i)
    if (ball.on_boundary(i)) b += positive_part(run.nu[i]);
  return run.nu.window().cell_volume() * b;
}

json run_summary(const Resolved& r, const MassConfig& sigma, const GdsResult& run) {
  const auto [p, n] = mass_totals(sigma);
  const double vol = sigma.window().cell_volume();
  return json{{"scenario", r.scenario.name},
              {"d", r.scenario.d},
              {"xi", r.xi},
              {"R", r.R},
              {"schedule", to_string(r.scenario.schedule)},
              {"sites", sigma.size()},
              {"rounds", run.rounds},
              {"topplings", run.topplings},
              {"stop_tol", run.stop_tol},
              {"stop_residual", run.stop_residual},
              {"mass_sigma", vol * total(sigma)},
              {"mass_nu", vol * total(run.nu)},
              {"m_plus", vol * p},
              {"m_minus", vol * n},
              {"boundary_mass", boundary_mass(run, r.R)},
              {"max_u", max_abs(run.u.values())}};
}

void write_diagnostics(const fs::path& p, const GdsResult& run) {
  std::ofstream out(p);
  out << "round,residual,m_plus,m_minus,q,total_emitted\n";
  for (const RoundStats& s : run.diagnostics) {
    out << s.round << ',' << format_double(s.residual) << ',' << format_double(s.m_plus) << ','
        << format_double(s.m_minus) << ',' << format_double(s.q) << ',' << format_double(s.total_emitted) << '\n';
  }
}

// ---------------------------------------------------------------------------

json cmd_run(const Resolved& r, const fs::path& out) {
  const MassConfig sigma = discretize_scenario(r.scenario, r.xi, r.R);
  const GdsResult run = run_gds(sigma, gds_options(r));
  write_grid(out / "nu.csv", run.nu.window(), run.nu.values());
  write_grid(out / "u.csv", run.u.window(), run.u.values());
  write_diagnostics(out / "diagnostics.csv", run);
  if (r.audit) {
    std::ofstream t(out / "trace.csv");
    t << "step,site,emitted\n";
    long k = 0;
    for (const Toppling& tp : run.trace) t << ++k << ',' << tp.site << ',' << format_double(tp.emitted) << '\n';
  }
  return run_summary(r, sigma, run);
}

json cmd_obstacle(const Resolved& r, const fs::path& out) {
  const MassConfig sigma = discretize_scenario(r.scenario, r.xi, r.R);
  const GreenKernel kernel = kernel_for_window(sigma.window());
  ObstacleOptions o;
  o.R = r.R;
  o.red_black = !r.deterministic;
  o.require_admissible = r.scenario.require_admissible;
  const ObstacleSolution sol = solve_obstacle(sigma, kernel, o);
  const auto& w = sigma.window();
  write_grid(out / "v.csv", w, sol.v.values());
  write_grid(out / "u.csv", w, sol.u.values());
  write_grid(out / "nu.csv", w, sol.nu.values());
  const ComplementarityReport c = complementarity_report(sol, r.R);
  return json{{"scenario", r.scenario.name},
              {"d", r.scenario.d},
              {"xi", r.xi},
              {"R", r.R},
              {"iterations", sol.iterations},
              {"residual", sol.residual},
              {"tol", sol.tol},
              {"omega", sol.omega},
              {"complementarity",
               {{"u_min", c.u_min},
                {"u_outside_max_abs", c.u_outside_max_abs},
                {"nu_pos_max_inside", c.nu_pos_max_inside},
                {"compl_max", c.compl_max}}},
              {"subharmonicity_violation", subharmonicity_violation(sol.v, r.R)}};
}

json cmd_energy_audit(const Resolved& r, const fs::path& out) {
  const MassConfig sigma = discretize_scenario(r.scenario, r.xi, r.R);
  GdsOptions o = gds_options(r);
  o.audit = true;
  const GdsResult run = run_gds(sigma, o);
  const GreenKernel kernel = kernel_for_window(sigma.window());
  const EnergyAudit a = audit_run(run, sigma, kernel);
  MinimizerOptions mo;
  mo.R = r.R;
  mo.seed = r.scenario.seed;
  const MinimizerReport m = verify_minimizer(sigma, run.nu, kernel, mo);

  std::ofstream e(out / "energy.csv");
  e << "step,energy\n";
  for (std::size_t k = 0; k < a.energy_series.size(); ++k) {
    e << a.checkpoint_steps[k] << ',' << format_double(a.energy_series[k]) << '\n';
  }
  const double scale = std::abs(m.e_sigma_minus_nu);
  const bool min_ok = m.max_violation <= 1e-8 * scale && m.min_first_order >= -1e-8 * m.first_order_scale;
  json j{{"scenario", r.scenario.name},
         {"d", r.scenario.d},
         {"xi", r.xi},
         {"R", r.R},
         {"e0", a.e0},
         {"n_topplings", a.n_topplings},
         {"drops_checked", a.drops_checked},
         {"drops_unresolved", a.drops_unresolved},
         {"max_drop_err", a.max_drop_err},
         {"max_checkpoint_err", a.max_checkpoint_err},
         {"max_identity_err", std::max(a.max_drop_err, a.max_checkpoint_err)},
         {"e_sigma_minus_nu_direct", a.e_sigma_minus_nu_direct},
         {"e_sigma_minus_nu_series", a.e_sigma_minus_nu_series},
         {"series_err", a.series_err},
         {"minimizer_trials", m.trials_run},
         {"max_min_violation", m.max_violation},
         {"min_first_order", m.min_first_order},
         {"first_order_scale", m.first_order_scale},
         {"passed", a.passed && min_ok}};
  if (!(a.passed && min_ok)) {
    write_json(out / "summary.json", j);
    throw CheckFailed("energy audit failed");
  }
  return j;
}

json cmd_scaling(const Resolved& r, const fs::path& out, json& timing) {
  ScalingOptions o;
  o.stop_tol = r.stop_tol;
  o.schedule = r.scenario.schedule;
  o.log = [](const std::string& m) { std::cerr << m << "\n"; };
  const ConvergenceReport rep = scaling_study(r.scenario, standard_test_functions(r.scenario.d), o);

  std::ofstream c(out / "convergence.csv");
  c << "xi,sites,rounds,topplings";
  for (const auto& n : rep.test_functions) c << ",pairing_" << n;
  c << ",potential_error,odometer_error,sandwich_eps,boundary_mass,mass_error\n";
  json rows = json::array();
  for (const ConvergenceRow& row : rep.rows) {
    c << format_double(row.xi) << ',' << row.sites << ',' << row.rounds << ',' << row.topplings;
    for (double e : row.pairing_errors) c << ',' << format_double(e);
    c << ',' << format_double(row.potential_error) << ',' << format_double(row.odometer_error) << ','
      << format_double(row.sandwich_eps) << ',' << format_double(row.boundary_mass) << ','
      << format_double(row.mass_error) << '\n';
    timing["seconds"].push_back({{"xi", row.xi}, {"seconds", row.seconds}});
    json jr{{"xi", row.xi},
            {"pairing_errors", row.pairing_errors},
            {"potential_error", row.potential_error},
            {"odometer_error", row.odometer_error},
            {"boundary_mass", row.boundary_mass},
            {"mass_error", row.mass_error}};
    jr["sandwich_eps"] = std::isnan(row.sandwich_eps) ? json(nullptr) : json(row.sandwich_eps);
    rows.push_back(jr);
  }
  json mono = json::object();
  for (const auto& [name, ok] : rep.monotone) mono[name] = ok;
  return json{{"scenario", rep.scenario},
              {"reference", rep.reference},
              {"test_functions", rep.test_functions},
              {"rows", rows},
              {"monotone", mono},
              {"all_monotone", rep.all_monotone}};
}

json cmd_boundary_mass(const Resolved& r, const fs::path& out, json& timing) {
  std::vector<double> radii = r.scenario.R_list;
  if (radii.empty()) radii = {r.R};
  const BoundaryMassReport rep = boundary_mass_study(r.scenario, radii, r.xi, r.stop_tol,
                                                     [](const std::string& m) { std::cerr << m << "\n"; });
  std::ofstream c(out / "boundary_mass.csv");
  c << "R,boundary_mass,interior_residual,rounds,topplings\n";
  json rows = json::array();
  for (const BoundaryMassRow& row : rep.rows) {
    c << format_double(row.R) << ',' << format_double(row.boundary_mass) << ','
      << format_double(row.interior_residual) << ',' << row.rounds << ',' << row.topplings << '\n';
    rows.push_back({{"R", row.R}, {"boundary_mass", row.boundary_mass}, {"interior_residual", row.interior_residual}});
    timing["seconds"].push_back({{"R", row.R}, {"seconds", row.seconds}});
  }
  return json{{"scenario", r.scenario.name},
              {"d", rep.d},
              {"xi", rep.xi},
              {"m_plus", rep.m_plus},
              {"m_minus", rep.m_minus},
              {"admissible", rep.admissible},
              {"m_inf", rep.m_inf ? json(*rep.m_inf) : json(nullptr)},
              {"rows", rows},
              {"strictly_decreasing", rep.strictly_decreasing},
              {"certified_decreasing", rep.certified_decreasing}};
}

json cmd_validate(const Resolved& r, const fs::path& out) {
  const MassConfig sigma = discretize_scenario(r.scenario, r.xi, r.R);
  GdsOptions go = gds_options(r);
  go.stop_tol = r.stop_tol > 0.0 ? r.stop_tol : 1e-12 * std::max(1.0, max_abs(sigma.values()));
  const GdsResult run = run_gds(sigma, go);
  ObstacleOptions oo;
  oo.R = r.R;
  oo.red_black = !r.deterministic;
  oo.require_admissible = r.scenario.require_admissible;
  const ObstacleSolution sol = solve_obstacle(sigma, kernel_for_window(sigma.window()), oo);
  double dnu = 0.0, du = 0.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    dnu = std::max(dnu, std::abs(run.nu[i] - sol.nu[i]));
    du = std::max(du, std::abs(run.u[i] - sol.u[i]));
  }
  const double smax = max_abs(sigma.values()), umax = max_abs(run.u.values());
  const bool ok = dnu <= 1e-6 * smax && du <= 1e-6 * std::max(umax, 1e-300);
  write_grid(out / "nu.csv", run.nu.window(), run.nu.values());
  write_grid(out / "nu_obstacle.csv", sol.nu.window(), sol.nu.values());
  std::cout << "max discrepancy: nu " << format_double(dnu) << " u " << format_double(du) << "\n";
  json j{{"scenario", r.scenario.name},
         {"d", r.scenario.d},
         {"xi", r.xi},
         {"R", r.R},
         {"nu_discrepancy", dnu},
         {"u_discrepancy", du},
         {"max_abs_sigma", smax},
         {"max_u", umax},
         {"obstacle_iterations", sol.iterations},
         {"passed", ok}};
  if (!ok) {
    write_json(out / "summary.json", j);
    throw CheckFailed("engines disagree beyond 1e-6");
  }
  return j;
}

int dispatch(const RunConfig& cfg) {
  const Resolved r = resolve(cfg);
  const fs::path out = cfg.out;
  fs::create_directories(out);
  write_json(out / "manifest.json", manifest(cfg.subcommand, r));
  const auto t0 = Clock::now();
  json timing = {{"seconds", json::array()}};
  json summary;
  if (cfg.subcommand == "run") {
    summary = cmd_run(r, out);
  } else if (cfg.subcommand == "obstacle") {
    summary = cmd_obstacle(r, out);
  } else if (cfg.subcommand == "energy-audit") {
    summary = cmd_energy_audit(r, out);
  } else if (cfg.subcommand == "scaling") {
    summary = cmd_scaling(r, out, timing);
  } else if (cfg.subcommand == "boundary-mass") {
    summary = cmd_boundary_mass(r, out, timing);
  } else {
    summary = cmd_validate(r, out);
  }
  timing["total"] = std::chrono::duration<double>(Clock::now() - t0).count();
  timing["threads"] = kernels::thread_count();
  write_json(out / "summary.json", summary);
  write_json(out / "timing.json", timing);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* t = std::getenv("GDS_THREADS")) {
    const int n = std::atoi(t);
    if (n < 1) {
      std::cerr << "GDS_THREADS must be a positive integer\n";
      return 2;
    }
    kernels::set_thread_count(n);
  }

  CLI::App app{"generalized divisible sandpile and partial balayage experiments"};
  app.set_version_flag("--version", GDS_VERSION);
  app.require_subcommand(1);
  RunConfig cfg;

  const std::pair<const char*, const char*> subs[] = {
      {"run", "run the sandpile and write nu, u and per-round diagnostics"},
      {"obstacle", "solve the obstacle problem for the same configuration"},
      {"energy-audit", "audited run: energy identities and minimizer check"},
      {"scaling", "grid-refinement study over the scenario's xi_sequence"},
      {"boundary-mass", "boundary mass M_R over the scenario's R_list"},
      {"validate", "run toppling and obstacle engines and compare"}};
  for (const auto& [name, help] : subs) {
    CLI::App* s = app.add_subcommand(name, help);
    s->add_option("--scenario", cfg.scenario_path, "scenario JSON file")->check(CLI::ExistingFile);
    s->add_option("--preset", cfg.preset, "five_site, ball_fill, annulus_sphere_3d, annulus_sphere_2d");
    s->add_option("--manifest", cfg.manifest_path, "rerun from a manifest.json")->check(CLI::ExistingFile);
    s->add_option("--xi", cfg.xi, "lattice spacing");
    s->add_option("--R", cfg.R, "confining radius");
    s->add_option("--stop-tol", cfg.stop_tol, "stopping tolerance (0: engine default)");
    s->add_option("--schedule", cfg.schedule, "sweep, queue, random, red_black");
    s->add_option("--seed", cfg.seed, "root seed");
    s->add_flag("--audit", cfg.audit, "record every toppling");
    s->add_flag("--deterministic,!--no-deterministic", cfg.deterministic,
                "serial kernels with a fixed summation order (default on)");
    s->add_option("--out", cfg.out, "output directory")->capture_default_str();
    s->callback([&cfg, s]() { cfg.subcommand = s->get_name(); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return dispatch(cfg);
  } catch (const UsageError& e) {
    std::cerr << "gds: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "gds: " << e.what() << "\n";
    return 2;
  } catch (const CheckFailed& e) {
    std::cerr << "gds: " << e.what() << "\n";
    return 1;
  } catch (const InvariantViolation& e) {
    std::cerr << "gds: invariant violated: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "gds: " << e.what() << "\n";
    return 1;
  }
}
