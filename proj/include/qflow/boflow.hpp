#pragma once

#include <Eigen/Dense>

#include "qflow/potential.hpp"
#include "qflow/spectral.hpp"

namespace qflow::boflow {

enum class InductorTag { Type1a, Type1b, Type2, TypeL, Unclassified };

struct InductorClass {
    InductorTag tag = InductorTag::Unclassified;
    double gamma = 0.0;  // growth witness for type 1/2
    double Lfrak = 0.0;  // linear part for type L
};

const char* tag_name(InductorTag tag);

// Rule-based tail classification; Tabulated input is rejected.
InductorClass classify(const PotentialSpec& spec);

// omega'_r = 1/sqrt(L C'), Phi_ZPF = (L/C')^(1/4), eps = sqrt(L)/Phi_ZPF
struct FastScales {
    double omega_r;
    double phi_zpf;
    double epsilon;

    static FastScales from(double L, double cprime);
    double lambda(int q) const;  // eps^(1/q)
};

enum class FixedPoint { OpenCircuit, ShortCircuit, LinearInductor, NoLimit };

const char* fixed_point_name(FixedPoint fp);

struct BoCurve {
    Eigen::VectorXd phi;
    Eigen::VectorXd ubo;      // E_{phi,0} - E_{0,0}
    double e_ref = 0.0;       // E_{0,0}
    double min_fast_gap = 0.0;
};

// Born-Oppenheimer potential of the series combination: fast Hamiltonian
// Q_c^2/2C' + (phi - phi_c)^2/2L + U(phi_c), ground energy per phi.
BoCurve bo_potential(double L, const PotentialSpec& spec, double cprime,
                     const Eigen::VectorXd& phi_grid, int jobs = 1);

struct FlowResult {
    Eigen::VectorXd cprimes;  // descending (flowing toward zero)
    Eigen::VectorXd phi;
    Eigen::MatrixXd ubo;      // one row per cprime
    Eigen::VectorXd min_fast_gap;
    Eigen::VectorXd dist_open, dist_short, dist_linear;  // sup-norm distances
    FixedPoint verdict = FixedPoint::NoLimit;
    double Lfrak = 0.0;
    double extrapolated_distance = 0.0;
    bool class_consistent = true;  // verdict vs classify(spec)
};

// Sweep C' over >= 4 decades and certify the trend toward one of the fixed
// points {0, phi^2/2L, phi^2/2(L+Lfrak)}. The verdict window is the last
// `verdict_decades` decades of the sweep (3 by default).
FlowResult flow_sweep(double L, const PotentialSpec& spec, const Eigen::VectorXd& cprimes,
                      const Eigen::VectorXd& phi_grid, int jobs = 1, double verdict_decades = 3.0);

struct PathologicalResult {
    Eigen::VectorXd masses;   // descending
    Eigen::VectorXd e0_x0;    // fast ground energy at x = 0
    Eigen::VectorXd xs;       // slow samples (B-O potential columns)
    Eigen::MatrixXd ubo;      // rows: mass, cols: xs
    double scaling_ratio_worst = 0.0;  // worst |E0(1e-8 m)/E0(m)/1e4 - 1| over pairs
    int scaling_pairs = 0;
    double logper_residual = 0.0;      // rms residual of the period-8 fit at max |x|
    double logper_amplitude = 0.0;
    FixedPoint verdict = FixedPoint::NoLimit;
};

// Multi-scale study of the self-similar inductor embedded with coupling
// (y-x)^2/10; masses must span at least two factor-1e8 scaling periods.
PathologicalResult pathological_study(const Eigen::VectorXd& masses, const Eigen::VectorXd& xs,
                                      int jobs = 1);

struct AsymmetricResult {
    Eigen::VectorXd cprimes;  // descending
    Eigen::VectorXd c1, c2;   // fit U_BO = c1 phi + c2 phi^2 per cprime
    Eigen::VectorXd phi_zpf;
    Eigen::VectorXd phi_m, delta_phi;  // minimum position / ground-state width
    double c1_extrapolated = 0.0;
    double c1_predicted = 0.0;  // a b / 2
};

// Piecewise-linear asymmetric inductor study; C_slow is the shunting
// capacitance used for the width estimate.
AsymmetricResult asymmetric_study(double a, double b, double L, const Eigen::VectorXd& cprimes,
                                  const Eigen::VectorXd& phi_grid, double c_slow = 1.0,
                                  int jobs = 1);

// Lower bound r_n = 1/(2a + (3n+2)b + 1) on the radius of convergence of
// the perturbation series, with a = alpha^gamma M + L^(gamma/2) beta (A'+2B')
// and b = 2 L^(gamma/2) beta B'.
double radius_bound_from_ab(double a, double b, int n);
double radius_bound(double phi, double alpha, int n, double L, double gamma, double beta, double M,
                    double Ap, double Bp);

}  // namespace qflow::boflow
