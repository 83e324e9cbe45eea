#pragma once

// Grid CSV: a header line
//   # d=<d> xi=<xi> lo=<k1,...,kd> hi=<k1,...,kd>
// then the values in row-major order (last axis fastest), one line per index
// of the second-to-last axis. For d=3 each index of the first axis is a block
// and blocks are separated by a blank line. Values use %.17g.

#include <iosfwd>
#include <string>

#include "gds/lattice.hpp"

namespace gds {

/// Writes `values` in Grid CSV. `header_prefix` is inserted after "# " (kernel
/// tables use "kernel ").
void write_grid_csv(std::ostream& out, const LatticeWindow& window, std::span<const double> values,
                    const std::string& header_prefix = "");
void write_grid_csv(const std::string& path, const LatticeWindow& window,
                    std::span<const double> values, const std::string& header_prefix = "");

struct GridCsv {
  LatticeWindow window;
  std::vector<double> values;
  std::string prefix;  ///< leading word of the header, e.g. "kernel" or empty
};

GridCsv read_grid_csv(std::istream& in);
GridCsv read_grid_csv(const std::string& path);

std::string format_double(double v);

}  // namespace gds
