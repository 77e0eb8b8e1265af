#pragma once

#include <ostream>
#include <vector>

#include "specband/potential.hpp"

namespace specband {

// Recurrence coefficients r_l, s_l (l = 0..l_max) of the orthonormal polynomials
// for the weight exp(-n V / g).
struct RecurrenceTable {
  Potential potential;
  int n = 0;
  std::vector<double> r;
  std::vector<double> s;
  double L = 0.0;
  size_t node_count = 0;
  // log of the integral of exp(-n V / g) over the real line
  double log_mass = 0.0;

  double g() const { return potential.g(); }
  int l_max() const { return static_cast<int>(r.size()) - 1; }

  void write_csv(std::ostream& os) const {
    os.precision(17);
    os << "# potential=" << potential.describe() << " g=" << g() << " n=" << n << " L=" << L
       << " nodes=" << node_count << "\n";
    os << "l,r,s\n";
    for (size_t l = 0; l < r.size(); ++l) os << l << "," << r[l] << "," << s[l] << "\n";
  }
};

}  // namespace specband
