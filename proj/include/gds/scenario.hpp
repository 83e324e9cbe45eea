#pragma once

// Declarative scenarios: a continuous source sigma = mu - lambda built from
// atoms, constant densities on simple sets and sphere layers, plus the run
// parameters. Stored as JSON; see scenarios/README.md for the grammar.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gds/lattice.hpp"
#include "gds/sandpile.hpp"

namespace gds {

enum class ReferenceKind { kNone, kBallFill, kAnnulusSphere };

/// Closed-form reference attached to a scenario.
///   ball_fill:      sigma = mass * delta_0 - chi_{B(0, r0)}
///   annulus_sphere: sigma = t * (surface measure of the unit sphere) - chi_{B(0, rho)}
struct Reference {
  ReferenceKind kind = ReferenceKind::kNone;
  double mass = 0.0;
  double r0 = 0.0;
  double t = 0.0;
  double rho = 0.0;
};

const char* to_string(ReferenceKind k);

struct Scenario {
  std::string name;
  int d = 2;
  double R = 0.0;
  SourceTerm source;  ///< mu
  SourceTerm lambda;  ///< background density, subtracted from mu
  std::vector<double> xi_sequence;
  std::vector<double> R_list;
  std::uint64_t seed = 1;
  double stop_tol = 0.0;  ///< <= 0: engine default
  Schedule schedule = Schedule::kSweep;
  bool require_admissible = true;
  Reference reference;
  nlohmann::json document;  ///< the validated input, echoed in manifests
};

/// Parses and validates a scenario file. Errors carry "<path>:<line>:" context.
Scenario load_scenario(const std::string& path);
/// Same, from text; `origin` names the source in error messages.
Scenario parse_scenario(const std::string& text, const std::string& origin = "<scenario>");
/// Validates a parsed document (no line context).
Scenario scenario_from_json(const nlohmann::json& doc);

/// sigma = mu - lambda as a single source term.
SourceTerm sigma_source(const Scenario& s);

/// Window for_ball(d, xi, R) with sigma discretized on it.
MassConfig discretize_scenario(const Scenario& s, double xi, double R, int quadrature_points = 4);
/// Discretized lambda on the same window.
MassConfig discretize_lambda(const Scenario& s, double xi, double R, int quadrature_points = 4);

// Presets.
Scenario five_site_scenario();
Scenario ball_fill_scenario(int d, double mass, double r0, double R, std::vector<double> xi_sequence);
Scenario annulus_sphere_scenario(int d, double t, double rho, std::vector<double> R_list, double xi);

}  // namespace gds
