#pragma once

#include <string>

namespace huc {

// Synthetic instance generator. Deterministic for a given spec (seeded);
// sizes follow the bundled presets but every knob is adjustable.
struct FixtureSpec {
  std::string name = "fixture";
  int buses = 3;
  int plants = 2;
  int horizon = 4;
  int configs = 2;       // per plant
  int extra_chords = 1;  // tree edges plus this many cycle-forming chords
  unsigned seed = 1;
  // pushes part of the demand toward configuration-range boundaries, which
  // leaves fractional commitments in the relaxation
  double boundary_push = 0.0;
};

struct FixtureFiles {
  std::string network_text;
  std::string hydro_text;
};

FixtureFiles gen_fixture(const FixtureSpec& spec);

// "small", "medium", "large" (the bundled trio)
FixtureSpec fixture_preset(const std::string& name);

// Writes <dir>/<name>.net and <dir>/<name>.hyd, returns the two paths.
std::pair<std::string, std::string> write_fixture(const FixtureSpec& spec,
                                                  const std::string& dir);

}  // namespace huc
