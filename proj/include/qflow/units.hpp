#pragma once

#include <cmath>

namespace qflow::units {

// Internal unit system: hbar = 1, flux quantum Phi0 = 2*pi (so Phi0/2pi = 1
// and a Josephson term is -E_J cos(phi)). Cooper-pair charge 2e = 1.
inline constexpr double hbar = 1.0;
inline constexpr double phi0 = 2.0 * M_PI;
inline constexpr double e_charge = 0.5;  // electron charge, 2e = 1

// SI values used when normalizing an "units si" netlist. The flux quantum
// is derived from hbar and e so the internal commutator stays exactly 1.
inline constexpr double si_hbar = 1.054571817e-34;
inline constexpr double si_e = 1.602176634e-19;
inline constexpr double si_phi0 = M_PI * si_hbar / si_e;  // h / 2e

}  // namespace qflow::units
