#include "gds/grid_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace gds {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string join_site(const Site& k, int d) {
  std::string s;
  for (int a = 0; a < d; ++a) {
    if (a) s += ',';
    s += std::to_string(k[a]);
  }
  return s;
}

Site parse_site(const std::string& text, int d) {
  Site k{};
  std::stringstream ss(text);
  std::string item;
  int a = 0;
  while (std::getline(ss, item, ',')) {
    if (a >= d) throw InvalidArgument("grid csv: too many coordinates in '" + text + "'");
    k[a++] = std::stoi(item);
  }
  if (a != d) throw InvalidArgument("grid csv: expected " + std::to_string(d) + " coordinates");
  return k;
}

}  // namespace

void write_grid_csv(std::ostream& out, const LatticeWindow& w, std::span<const double> values,
                    const std::string& header_prefix) {
  if (values.size() != w.size()) throw InvalidArgument("grid csv: value count mismatch");
  const int d = w.dim();
  out << "# " << header_prefix << "d=" << d << " xi=" << format_double(w.xi())
      << " lo=" << join_site(w.lo(), d) << " hi=" << join_site(w.hi(), d) << '\n';
  const int row = w.extent(d - 1);
  const std::size_t block = static_cast<std::size_t>(row) * w.extent(d - 2);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0 && i % block == 0) out << '\n';
    out << format_double(values[i]);
    out << ((i + 1) % row == 0 ? '\n' : ',');
  }
}

void write_grid_csv(const std::string& path, const LatticeWindow& window,
                    std::span<const double> values, const std::string& header_prefix) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  write_grid_csv(f, window, values, header_prefix);
}

GridCsv read_grid_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("# ", 0) != 0) {
    throw InvalidArgument("grid csv: missing '# d=...' header");
  }
  std::stringstream hs(header.substr(2));
  std::string tok, prefix;
  int d = 0;
  double xi = 0.0;
  std::string lo_text, hi_text;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) {
      prefix = tok;
      continue;
    }
    const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "d") d = std::stoi(val);
    else if (key == "xi") xi = std::stod(val);
    else if (key == "lo") lo_text = val;
    else if (key == "hi") hi_text = val;
  }
  if (d == 0 || lo_text.empty() || hi_text.empty()) throw InvalidArgument("grid csv: incomplete header");
  LatticeWindow w(d, xi, parse_site(lo_text, d), parse_site(hi_text, d));

  std::vector<double> values;
  values.reserve(w.size());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) values.push_back(std::stod(cell));
  }
  if (values.size() != w.size()) {
    throw InvalidArgument("grid csv: expected " + std::to_string(w.size()) + " values, read " +
                          std::to_string(values.size()));
  }
  return {w, std::move(values), prefix};
}

GridCsv read_grid_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open '" + path + "'");
  return read_grid_csv(f);
}

}  // namespace gds
