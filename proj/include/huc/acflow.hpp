#pragma once

#include "huc/symmat.hpp"

namespace huc {

// Quadratic forms over stacked Cartesian bus voltages (e_1..e_nb, f_1..f_nb)
// located at offset `off` inside a block. With series admittance g + jb of
// line (i,j), the power flowing from bus i into the line is
//   P_ij = g(e_i^2+f_i^2) - g(e_i e_j + f_i f_j) - b(f_i e_j - e_i f_j)
//   Q_ij = -b(e_i^2+f_i^2) + b(e_i e_j + f_i f_j) - g(f_i e_j - e_i f_j)
// Both are accumulated into `m` scaled by `scale` (buses 0-based).

void add_active_flow(SymMatrix& m, int nb, int off, int i, int j, double g,
                     double b, double scale);
void add_reactive_flow(SymMatrix& m, int nb, int off, int i, int j, double g,
                       double b, double scale);

// |V_i|^2 = e_i^2 + f_i^2
void add_voltage_square(SymMatrix& m, int nb, int off, int i, double scale);

}  // namespace huc
