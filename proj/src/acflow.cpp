#include "huc/acflow.hpp"

namespace huc {

void add_active_flow(SymMatrix& m, int nb, int off, int i, int j, double g,
                     double b, double scale) {
  const int ei = off + i, fi = off + nb + i;
  const int ej = off + j, fj = off + nb + j;
  m.add(ei, ei, g * scale);
  m.add(fi, fi, g * scale);
  m.add(ei, ej, -0.5 * g * scale);
  m.add(fi, fj, -0.5 * g * scale);
  m.add(fi, ej, -0.5 * b * scale);
  m.add(ei, fj, 0.5 * b * scale);
}

void add_reactive_flow(SymMatrix& m, int nb, int off, int i, int j, double g,
                       double b, double scale) {
  const int ei = off + i, fi = off + nb + i;
  const int ej = off + j, fj = off + nb + j;
  m.add(ei, ei, -b * scale);
  m.add(fi, fi, -b * scale);
  m.add(ei, ej, 0.5 * b * scale);
  m.add(fi, fj, 0.5 * b * scale);
  m.add(fi, ej, -0.5 * g * scale);
  m.add(ei, fj, 0.5 * g * scale);
}

void add_voltage_square(SymMatrix& m, int nb, int off, int i, double scale) {
  m.add(off + i, off + i, scale);
  m.add(off + nb + i, off + nb + i, scale);
}

}  // namespace huc
