#include "gds/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace gds {

using nlohmann::json;

namespace {

// Raised while validating; `where` is a JSON path used to find the line.
struct FieldError {
  std::string where;
  std::string message;
};

[[noreturn]] void fail(std::string where, std::string message) {
  throw FieldError{std::move(where), std::move(message)};
}

double number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) fail(where, "missing key '" + key + "'");
  if (!j.at(key).is_number()) fail(where, "'" + key + "' must be a number");
  const double v = j.at(key).get<double>();
  if (!std::isfinite(v)) fail(where, "'" + key + "' must be finite");
  return v;
}

double number_or(const json& j, const std::string& key, double fallback, const std::string& where) {
  return j.contains(key) ? number(j, key, where) : fallback;
}

Point point(const json& j, const std::string& key, int d, const std::string& where, bool optional = false) {
  Point p{};
  if (!j.contains(key)) {
    if (optional) return p;
    fail(where, "missing key '" + key + "'");
  }
  const json& a = j.at(key);
  if (!a.is_array() || static_cast<int>(a.size()) != d) {
    fail(where, "'" + key + "' must be an array of " + std::to_string(d) + " numbers");
  }
  for (int i = 0; i < d; ++i) {
    if (!a[static_cast<std::size_t>(i)].is_number()) fail(where, "'" + key + "' must hold numbers");
    p[i] = a[static_cast<std::size_t>(i)].get<double>();
  }
  return p;
}

void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) fail(where, "unknown key '" + k + "'");
  }
}

double norm(const Point& p, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += p[i] * p[i];
  return std::sqrt(s);
}

// Farthest distance from the origin reached by a source item.
double reach(const ContinuousSet& set) {
  const int d = set.dim();
  return std::visit(
      [d](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return norm(s.center, d) + s.radius;
        } else if constexpr (std::is_same_v<T, Annulus>) {
          return norm(s.center, d) + s.outer;
        } else if constexpr (std::is_same_v<T, Box>) {
          double r2 = 0.0;
          for (int i = 0; i < d; ++i) r2 += std::max(s.lo[i] * s.lo[i], s.hi[i] * s.hi[i]);
          return std::sqrt(r2);
        } else {
          double r = 0.0;
          for (const Ball& b : s.balls) r = std::max(r, norm(b.center, d) + b.radius);
          return r;
        }
      },
      set.shape());
}

void parse_items(const json& arr, int d, double R, const std::string& key, SourceTerm& out) {
  if (!arr.is_array()) fail(key, "'" + key + "' must be an array");
  for (std::size_t n = 0; n < arr.size(); ++n) {
    const std::string where = key + "[" + std::to_string(n) + "]";
    const json& it = arr[n];
    if (!it.is_object() || !it.contains("type") || !it.at("type").is_string()) {
      fail(where, "each item needs a string 'type'");
    }
    const std::string type = it.at("type").get<std::string>();
    if (type == "atom") {
      only_keys(it, {"type", "at", "mass"}, where);
      AtomTerm a{point(it, "at", d, where), number(it, "mass", where)};
      if (!(norm(a.at, d) < R)) fail(where, "atom lies outside B(0,R)");
      out.atoms.push_back(a);
    } else if (type == "density") {
      only_keys(it, {"type", "shape", "center", "radius", "inner", "outer", "lo", "hi", "value"}, where);
      if (!it.contains("shape") || !it.at("shape").is_string()) fail(where, "density needs a string 'shape'");
      const std::string shape = it.at("shape").get<std::string>();
      const double value = number(it, "value", where);
      ContinuousSet::Shape s;
      if (shape == "ball") {
        const double r = number(it, "radius", where);
        if (!(r > 0.0)) fail(where, "radius must be positive");
        s = Ball{point(it, "center", d, where, true), r};
      } else if (shape == "annulus") {
        const double a = number(it, "inner", where), b = number(it, "outer", where);
        if (!(a >= 0.0 && b > a)) fail(where, "annulus needs 0 <= inner < outer");
        s = Annulus{point(it, "center", d, where, true), a, b};
      } else if (shape == "box") {
        Box b{point(it, "lo", d, where), point(it, "hi", d, where)};
        for (int i = 0; i < d; ++i) {
          if (!(b.hi[i] > b.lo[i])) fail(where, "box needs lo < hi on every axis");
        }
        s = b;
      } else {
        fail(where, "unknown shape '" + shape + "'");
      }
      ContinuousSet set(d, s);
      if (!(reach(set) < R)) fail(where, "density support leaves B(0,R)");
      const double vol = set.volume();
      out.densities.push_back(DensityTerm{set, [value](const Point&) { return value; }, value * vol});
    } else if (type == "sphere_layer") {
      only_keys(it, {"type", "center", "radius", "t"}, where);
      SphereLayerTerm l{point(it, "center", d, where, true), number_or(it, "radius", 1.0, where), number(it, "t", where)};
      if (!(l.radius > 0.0)) fail(where, "radius must be positive");
      if (!(norm(l.center, d) + l.radius < R)) fail(where, "sphere layer leaves B(0,R)");
      out.layers.push_back(l);
    } else {
      fail(where, "unknown item type '" + type + "'");
    }
  }
}

std::vector<double> positive_list(const json& j, const std::string& key) {
  if (!j.at(key).is_array() || j.at(key).empty()) fail(key, "'" + key + "' must be a nonempty array");
  std::vector<double> v;
  for (const auto& x : j.at(key)) {
    if (!x.is_number() || !(x.get<double>() > 0.0)) fail(key, "'" + key + "' entries must be positive numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

Scenario from_json(const json& doc) {
  if (!doc.is_object()) fail("", "scenario must be a JSON object");
  only_keys(doc,
            {"name", "d", "R", "R_list", "xi", "xi_sequence", "seed", "stop_tol", "schedule", "require_admissible",
             "source", "lambda", "reference"},
            "");
  Scenario s;
  s.document = doc;
  s.name = doc.value("name", std::string("scenario"));
  if (!doc.contains("d") || !doc.at("d").is_number_integer()) fail("d", "missing integer key 'd'");
  s.d = doc.at("d").get<int>();
  if (s.d != 2 && s.d != 3) fail("d", "d must be 2 or 3");
  if (doc.contains("R_list")) {
    s.R_list = positive_list(doc, "R_list");
    for (std::size_t i = 1; i < s.R_list.size(); ++i) {
      if (!(s.R_list[i] > s.R_list[i - 1])) fail("R_list", "R_list must be increasing");
    }
  }
  if (doc.contains("R")) {
    s.R = number(doc, "R", "R");
  } else if (!s.R_list.empty()) {
    s.R = s.R_list.front();
  } else {
    fail("", "missing key 'R'");
  }
  if (!(s.R > 0.0)) fail("R", "R must be positive");
  if (doc.contains("xi_sequence")) {
    s.xi_sequence = positive_list(doc, "xi_sequence");
    for (std::size_t i = 1; i < s.xi_sequence.size(); ++i) {
      if (!(s.xi_sequence[i] < s.xi_sequence[i - 1])) fail("xi_sequence", "xi_sequence must be decreasing");
    }
  }
  if (doc.contains("xi")) {
    const double xi = number(doc, "xi", "xi");
    if (!(xi > 0.0)) fail("xi", "xi must be positive");
    if (s.xi_sequence.empty()) s.xi_sequence = {xi};
  }
  if (s.xi_sequence.empty()) fail("", "missing key 'xi' or 'xi_sequence'");
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) fail("seed", "seed must be a nonnegative integer");
    s.seed = doc.at("seed").get<std::uint64_t>();
  }
  s.stop_tol = number_or(doc, "stop_tol", 0.0, "stop_tol");
  if (doc.contains("schedule")) {
    if (!doc.at("schedule").is_string()) fail("schedule", "schedule must be a string");
    try {
      s.schedule = parse_schedule(doc.at("schedule").get<std::string>());
    } catch (const InvalidArgument& e) {
      fail("schedule", e.what());
    }
  }
  if (doc.contains("require_admissible")) {
    if (!doc.at("require_admissible").is_boolean()) fail("require_admissible", "must be true or false");
    s.require_admissible = doc.at("require_admissible").get<bool>();
  }
  const double r_support = s.R_list.empty() ? s.R : s.R_list.front();
  if (!doc.contains("source")) fail("", "missing key 'source'");
  parse_items(doc.at("source"), s.d, r_support, "source", s.source);
  if (doc.contains("lambda")) parse_items(doc.at("lambda"), s.d, r_support, "lambda", s.lambda);

  if (doc.contains("reference")) {
    const json& r = doc.at("reference");
    if (!r.is_object() || !r.contains("kind") || !r.at("kind").is_string()) {
      fail("reference", "reference needs a string 'kind'");
    }
    const std::string kind = r.at("kind").get<std::string>();
    if (kind == "ball_fill") {
      only_keys(r, {"kind", "mass", "r0"}, "reference");
      s.reference = {ReferenceKind::kBallFill, number(r, "mass", "reference"), number(r, "r0", "reference"), 0.0, 0.0};
      if (!(s.reference.mass > 0.0 && s.reference.r0 > 0.0)) fail("reference", "mass and r0 must be positive");
    } else if (kind == "annulus_sphere") {
      only_keys(r, {"kind", "t", "rho"}, "reference");
      s.reference = {ReferenceKind::kAnnulusSphere, 0.0, 0.0, number(r, "t", "reference"), number(r, "rho", "reference")};
      if (!(s.reference.t > 0.0 && s.reference.rho > 0.0 && s.reference.rho < 1.0)) {
        fail("reference", "annulus_sphere needs t > 0 and 0 < rho < 1");
      }
    } else if (kind != "none") {
      fail("reference", "unknown reference kind '" + kind + "'");
    }
  }

  if (s.require_admissible) {
    if (const auto m = analytic_masses(sigma_source(s), s.d)) {
      if (m->first > m->second * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg.precision(10);
        msg << "inadmissible: positive mass " << m->first << " exceeds negative mass " << m->second;
        fail("source", msg.str());
      }
    }
  }
  return s;
}

int line_of(const std::string& text, std::size_t pos) {
  int line = 1;
  for (std::size_t i = 0; i < pos && i < text.size(); ++i) line += text[i] == '\n';
  return line;
}

// Line of a path like "source[2]" or "R" in the raw text (1 when not found).
int locate(const std::string& text, const std::string& where) {
  if (where.empty()) return 1;
  const std::size_t br = where.find('[');
  const std::string key = where.substr(0, br);
  const std::size_t at = text.find("\"" + key + "\"");
  if (at == std::string::npos) return 1;
  if (br == std::string::npos) return line_of(text, at);
  const std::size_t want = std::stoul(where.substr(br + 1));
  std::size_t i = text.find('[', at);
  if (i == std::string::npos) return line_of(text, at);
  int depth = 0;
  std::size_t count = 0;
  bool in_str = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (in_str) {
      if (c == '\\') ++i;
      else if (c == '"') in_str = false;
      continue;
    }
    if (c == '"') {
      in_str = true;
    } else if (c == '[' || c == '{') {
      if (depth == 1 && c == '{') {
        if (count == want) return line_of(text, i);
        ++count;
      }
      ++depth;
    } else if (c == ']' || c == '}') {
      if (--depth == 0) break;
    }
  }
  return line_of(text, at);
}

json preset_document(const std::string& name, int d, double R) {
  return json{{"name", name}, {"d", d}, {"R", R}};
}

json vec(std::initializer_list<double> v) { return json(std::vector<double>(v)); }

json origin(int d) { return json(std::vector<double>(static_cast<std::size_t>(d), 0.0)); }

}  // namespace

const char* to_string(ReferenceKind k) {
  switch (k) {
    case ReferenceKind::kNone: return "none";
    case ReferenceKind::kBallFill: return "ball_fill";
    case ReferenceKind::kAnnulusSphere: return "annulus_sphere";
  }
  return "?";
}

Scenario scenario_from_json(const json& doc) {
  try {
    return from_json(doc);
  } catch (const FieldError& e) {
    throw InvalidArgument((e.where.empty() ? std::string() : e.where + ": ") + e.message);
  }
}

Scenario parse_scenario(const std::string& text, const std::string& origin_name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t pos = e.byte > 0 ? e.byte - 1 : 0;
    throw InvalidArgument(origin_name + ":" + std::to_string(line_of(text, pos)) + ": malformed JSON: " + e.what());
  }
  try {
    return from_json(doc);
  } catch (const FieldError& e) {
    throw InvalidArgument(origin_name + ":" + std::to_string(locate(text, e.where)) + ": " +
                          (e.where.empty() ? std::string() : e.where + ": ") + e.message);
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

SourceTerm sigma_source(const Scenario& s) {
  SourceTerm t = s.source;
  for (AtomTerm a : s.lambda.atoms) {
    a.mass = -a.mass;
    t.atoms.push_back(a);
  }
  for (const DensityTerm& dt : s.lambda.densities) {
    auto f = dt.value;
    t.densities.push_back(DensityTerm{dt.support, [f](const Point& x) { return -f(x); },
                                      dt.analytic_mass ? std::optional<double>(-*dt.analytic_mass) : std::nullopt});
  }
  for (SphereLayerTerm l : s.lambda.layers) {
    l.t = -l.t;
    t.layers.push_back(l);
  }
  return t;
}

MassConfig discretize_scenario(const Scenario& s, double xi, double R, int q) {
  DiscretizeOptions opt;
  opt.quadrature_points = q;
  opt.seed = s.seed;
  return discretize(sigma_source(s), LatticeWindow::for_ball(s.d, xi, R), opt);
}

MassConfig discretize_lambda(const Scenario& s, double xi, double R, int q) {
  DiscretizeOptions opt;
  opt.quadrature_points = q;
  opt.seed = s.seed;
  return discretize(s.lambda, LatticeWindow::for_ball(s.d, xi, R), opt);
}

Scenario five_site_scenario() {
  json doc = preset_document("five_site", 2, 2.5);
  doc["xi"] = 1.0;
  doc["stop_tol"] = 1e-12;
  json src = json::array({json{{"type", "atom"}, {"at", vec({0, 0})}, {"mass", 1.0}}});
  for (auto p : {vec({1, 0}), vec({-1, 0}), vec({0, 1}), vec({0, -1})}) {
    src.push_back(json{{"type", "atom"}, {"at", p}, {"mass", -1.0}});
  }
  doc["source"] = src;
  return scenario_from_json(doc);
}

Scenario ball_fill_scenario(int d, double mass, double r0, double R, std::vector<double> xi_sequence) {
  json doc = preset_document("ball_fill", d, R);
  doc["xi_sequence"] = xi_sequence;
  doc["source"] = json::array({json{{"type", "atom"}, {"at", origin(d)}, {"mass", mass}},
                               json{{"type", "density"}, {"shape", "ball"}, {"radius", r0}, {"value", -1.0}}});
  doc["reference"] = json{{"kind", "ball_fill"}, {"mass", mass}, {"r0", r0}};
  return scenario_from_json(doc);
}

Scenario annulus_sphere_scenario(int d, double t, double rho, std::vector<double> R_list, double xi) {
  json doc = preset_document("annulus_sphere", d, R_list.front());
  doc["R_list"] = R_list;
  doc["xi"] = xi;
  doc["require_admissible"] = false;
  doc["source"] = json::array({json{{"type", "sphere_layer"}, {"radius", 1.0}, {"t", t}},
                               json{{"type", "density"}, {"shape", "ball"}, {"radius", rho}, {"value", -1.0}}});
  doc["reference"] = json{{"kind", "annulus_sphere"}, {"t", t}, {"rho", rho}};
  return scenario_from_json(doc);
}

}  // namespace gds
