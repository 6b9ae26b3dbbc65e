#pragma once

#include <Eigen/Dense>
#include <functional>

namespace qflow::snail {

// Capacitively shunted two-junction loop threaded by the reduced external
// flux Phi, with capacitance ratios k_i = C_i/C and charging energy
// E_C = e^2/2C. Symmetric operation means k2 = k3 and E_J2 = E_J3.
struct SnailParams {
    double ej1, ej2, ej3;
    double k1, k2, k3;
    double ec;
    double Phi = 0.0;       // radians
    double nu1 = 0.0, nu2 = 0.0;  // offset charges

    bool symmetric() const { return k2 == k3 && ej2 == ej3; }
    void validate() const;
};

// Variables after the Cholesky-derived shear x = A^T phi, p = A^-1 n:
// H = 4 E_C (d1 p1^2 + d2 p2^2) + U(x1, x2), with x1 = phi1 preserved.
struct SnailFrame {
    Eigen::Matrix2d A;
    double d1, d2;
    std::function<double(double, double)> potential;
};
SnailFrame transform_and_assemble(const SnailParams& p);

struct SinglePhase {
    Eigen::VectorXd x1;
    Eigen::VectorXd u_cl;     // -E_J1 cos x1 - 2 E_J2 cos((x1+Phi)/2)
    Eigen::VectorXd u_ho;     // + sqrt(2 E_C E_J2 cos((x1+Phi)/2) / k2)
    double ej2_renormalized;  // E_J2 (1 - sqrt(E_C / 2 k2 E_J2) / 2)
    std::vector<bool> valid;  // |x1 + Phi| < pi per sample
    bool harmonic_meaningful; // E_C / k2 E_J2 < 1
};
SinglePhase single_phase(const SnailParams& p, const Eigen::VectorXd& x1_grid);

struct SmallCapResult {
    Eigen::VectorXd x1;
    Eigen::VectorXd ubo;            // charge-basis B-O potential, zeroed at x1 = 0
    double sup_dev_from_bare;       // sup |ubo - E_J1 (1 - cos x1)|
    double d1ec;                    // effective charging energy d1 E_C
    double d1ec_parallel_estimate;  // (1/E_C + 1/E_C1)^-1
};
SmallCapResult small_cap_limit(const SnailParams& p, const Eigen::VectorXd& x1_grid, int M = 32);

struct Comparison {
    Eigen::VectorXd x1;
    Eigen::VectorXd u_cl, u_ho, u_charge, u_2d;  // all zeroed at the first valid sample
    std::vector<bool> valid;
    bool harmonic_improves;   // |u_ho - u_2d| < |u_cl - u_2d| at every valid sample
    double charge_vs_2d_rel;  // sup relative deviation charge basis vs 2d fast solve
    Eigen::VectorXd fast_gap; // E1 - E0 of the fast problem per x1
};
// Classical / harmonic / charge-basis approximations against the fast
// spectrum solved on a periodic x2 grid.
Comparison validate_2d(const SnailParams& p, const Eigen::VectorXd& x1_samples, int n2 = 128);

}  // namespace qflow::snail
