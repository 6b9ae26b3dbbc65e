#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>

#include "qflow/boflow.hpp"
#include "qflow/potential.hpp"
#include "qflow/spectral.hpp"

namespace qflow::nonrecip {

struct GyratorShunt {
    double g;  // gyration conductance, nonzero
    // exactly one of the two is set
    std::optional<double> capacitor;        // linear C
    std::optional<PotentialSpec> inductor;  // flux-controlled energy f(phi)
};

struct TellegenEquivalent {
    enum class Kind { Inductor, Capacitor } kind;
    double value;  // L_eff = C/G^2 or C_eff = L G^2
};

// Classical replacement rule for linear shunts only.
TellegenEquivalent tellegen_equiv(const GyratorShunt& shunt);

// Gyrator terminated by a monotone capacitor with energy g(v): the network
// at the primary port acquires the potential
//   W(phi1) = w g'^-1(w) - g(g'^-1(w)),  w = Q2 - G phi1,
// with Q2 a conserved parameter. A linear capacitance C enters as
// Quadratic{1/C} (energy C v^2/2).
struct CapReduced {
    double g_conductance;
    double q2;
    bool linear;
    double l_eff;  // C/G^2 when linear
    std::function<double(double)> added_potential;
};
CapReduced gyrator_cap_reduce(const PotentialSpec& cap_energy, double G, double q2);

// Constrained reduction of the purely inductively terminated gyrator: an
// effective kinetic term coeff * |phidot|^exponent.
struct IndReduced {
    double exponent;
    double coefficient;
    double c_eff;  // L G^2 for the quadratic case, else 0
};
IndReduced gyrator_ind_reduce(const PotentialSpec& f, double G);

// Regularized flow of the LC resonator gyrator-coupled to a nonlinear
// resonator: H = (Q1 + G phi2)^2/2C1 + Q2^2/2C2 + phi1^2/2L1 + f(phi2).
// The fast ground energy as a function of Q1 is an effective kinetic term
// for the slow mode.
enum class GyratorFlowVerdict { Type1, Type2, TypeL, NoLimit };
const char* gyrator_verdict_name(GyratorFlowVerdict v);

struct GyratorFlowResult {
    Eigen::VectorXd c2s;      // descending
    Eigen::VectorXd q1;       // probe charges
    Eigen::MatrixXd e_fast;   // E0(q1) - E0(0), one row per C2
    Eigen::VectorXd c_eff;    // 1/(2 * fitted curvature)
    Eigen::VectorXd slow_freq;  // 1/sqrt(L1 c_eff)
    GyratorFlowVerdict verdict = GyratorFlowVerdict::NoLimit;
    double freq_extrapolated = 0.0;
    double freq_bare = 0.0;    // 1/sqrt(L1 C1)
    double freq_typeL = 0.0;   // 1/sqrt(L1 (C1 + Lfrak G^2)), when classifiable
};
GyratorFlowResult gyrator_bo_flow(const PotentialSpec& f, double L1, double C1, double G,
                                  const Eigen::VectorXd& c2s, int jobs = 1);

// Flux-representation matrix of -E_J1 cos(2 pi phi/Phi0) - E_J2 cos(2 pi
// Q/(G Phi0)) on a periodic window; the charge cosine is a symmetric shift
// stencil and must land on an integer number of grid steps.
struct AlmostMathieu {
    Eigen::MatrixXd H;
    spectral::Grid1D grid;
    double shift;  // flux translation realizing the charge cosine
    int shift_steps;
    bool gkp;  // G at pi hbar / Phi0^2 within 1e-9 relative
};
AlmostMathieu almost_mathieu_build(double ej1, double ej2, double G, const spectral::Grid1D& grid);

// One-port network: shunt capacitance plus an inductive branch.
struct OnePort {
    double cap;
    PotentialSpec ind;
};

struct TransformerResult {
    double turns_ratio;  // n = G2/G1
    bool c_dependent;    // singular mode: reduced dynamics depend on c
    double reduced_mass;               // n^2 C1 + C2
    std::function<double(double)> reduced_potential;  // U1(n x + c) + U2(x)
    // regular mode only:
    double conservation_residual = 0.0;  // max |U_fast change| along (1,-n)/sqrt(1+n^2)
};
// mode: regular_cap > 0 runs the regularized three-variable check with a
// capacitance on the joining node; <= 0 is the singular reduction.
TransformerResult transformer_reduce(double g1, double g2, const OnePort& net1,
                                     const OnePort& net2, double c, double regular_cap);

}  // namespace qflow::nonrecip
