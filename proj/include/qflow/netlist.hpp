#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "qflow/potential.hpp"

namespace qflow {

struct CapacitorBr {
    double c;
};

struct InductorBr {
    PotentialSpec spec;
    std::string loop;  // external-flux loop id, empty if none
};

struct JosephsonBr {
    double ej;
    double cint;  // intrinsic capacitance, 0 = absent
    std::string loop;
};

// Four-terminal element across the node pairs (n_plus, n_minus) and
// (nb_plus, nb_minus), gyration conductance g.
struct GyratorBr {
    double g;
    int nb_plus;
    int nb_minus;
};

struct FluxTagBr {
    std::string loop;
    double phi;  // reduced phase (radians)
};

struct Branch {
    std::variant<CapacitorBr, InductorBr, JosephsonBr, GyratorBr, FluxTagBr> kind;
    int n_plus = 0;
    int n_minus = 0;
};

enum class UnitSystem { Reduced, SI };

struct Netlist {
    int node_count = 1;  // nodes 0..node_count-1, ground = 0
    std::vector<Branch> branches;
    UnitSystem units = UnitSystem::Reduced;

    // SI -> internal normalization record (1.0 for reduced input)
    double energy_unit = 1.0;  // joules per internal energy unit
    double time_unit = 1.0;

    std::map<std::string, double> loop_flux;  // loop id -> reduced phase

    double loop_phase(const std::string& id) const;
};

// Text format, one element per line ('#' comments):
//   units si|reduced
//   gnd <node>
//   C   <n+> <n-> <farads>
//   L   <n+> <n-> <henries> [loop=<id>]
//   JJ  <n+> <n-> EJ=<joules> Cint=<farads> [loop=<id>]
//   NL  <n+> <n-> <variant> key=val... [loop=<id>]
//   GYR <na+> <na-> <nb+> <nb-> G=<siemens>
//   FLUX loop=<id> phi=<webers>
// All values are converted to reduced units (hbar = 1, Phi0 = 2*pi) at
// parse time.
Netlist parse_netlist(const std::string& text);

// Canonical reduced-units form; parse_netlist(serialize_netlist(n)) == n.
std::string serialize_netlist(const Netlist& net);

bool operator==(const Netlist& a, const Netlist& b);

}  // namespace qflow
