#pragma once

#include <Eigen/Dense>
#include <optional>
#include <variant>
#include <vector>

#include "qflow/lagrangian.hpp"

namespace qflow::diracberg {

// Orthogonal basis splitting ker C from its image, with the kernel block of
// the vector-potential matrix rotated so its antisymmetric part carries the
// nonzero couplings d in the (a,b) corner.
struct ReducedBasis {
    Eigen::MatrixXd B;    // m x m orthogonal, B^T C B = diag(C', 0_k)
    Eigen::MatrixXd D;    // m x m orthogonal, identity on the image block
    Eigen::MatrixXd F;    // gauge matrix used to zero the lower-left block
    Eigen::VectorXd d;    // l nonzero couplings
    int n = 0, k = 0, l = 0, j = 0;
};

struct KernelSplit {
    Eigen::MatrixXd B;   // m x m orthogonal
    Eigen::MatrixXd Cp;  // n x n diagonal positive
    int n = 0, k = 0;
};
KernelSplit kernel_split(const Eigen::MatrixXd& C);

struct YoulaBlock {
    Eigen::MatrixXd D;    // k x k orthogonal
    Eigen::MatrixXd App;  // k x k, d in the (a,b) block, D^T Lambda D = (App - App^T)/2
    Eigen::VectorXd d;
    int l = 0, j = 0;
};
YoulaBlock youla_block(const Eigen::MatrixXd& lambda);

// Adds the total-derivative gauge F + F^T that zeroes the lower-left block
// and puts the kernel block into its one-sided form. Returns (A_fixed, F).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> gauge_fix(const Eigen::MatrixXd& A_sym, int n,
                                                      const YoulaBlock& yb);

// phi''_b = d^-1 Q''_a
struct MomentumSubstitution {
    Eigen::VectorXd d;
};

// All real roots of the Euler-Lagrange equation for one kernel flux, per
// sample of the one remaining coordinate it couples to.
struct SolvedFlux {
    int var_index;   // transformed coordinate index
    int slow_index;  // transformed coordinate the roots are parametrized by, -1 if none
    Eigen::VectorXd samples;
    std::vector<std::vector<double>> roots;      // per sample, ascending
    std::vector<std::vector<double>> residuals;  // |EL| at each root
};

// v . phidot = 0 in the original node basis, integrating to
// phi_a = ratio * phi_b + c with an undetermined constant c.
struct VelocityConstraint {
    Eigen::VectorXd node_coeffs;
    int var_a = -1, var_b = -1;  // original node indices (1-based fluxes), -1 if not a pure pair
    double ratio = 0.0;
};

using ConstraintRecord = std::variant<MomentumSubstitution, SolvedFlux, VelocityConstraint>;

struct ReducedHamiltonian {
    ReducedBasis basis;
    Eigen::MatrixXd Cp_inv;                  // n x n
    Eigen::MatrixXd Ap;                      // n x n antisymmetric
    Eigen::MatrixXd Aa, Ab, Ac;              // n x l, n x l, n x j
    std::vector<PotentialTerm> terms;        // weights over transformed coordinates
    std::vector<ConstraintRecord> constraints;
    std::vector<std::string> labels;         // surviving variables, n + l entries
    int dof = 0;                             // n + l
    bool branched = false;
    Eigen::VectorXd probe_grid;              // slow-variable samples used for branch counts
    std::vector<int> branch_counts;          // per probe sample (empty if not probed)

    // Potential energy with the kernel fluxes substituted: x' (n), phi''_a
    // (l), Q''_a (l), and an explicit choice of solved-flux branch values.
    double potential_on_branch(const Eigen::VectorXd& xp, const Eigen::VectorXd& phia,
                               const Eigen::VectorXd& qa,
                               const std::vector<double>& phic) const;
};

// Dense sign-change scan plus bisection for every kernel flux appearing in
// the potential; velocity constraints for those that only couple through
// the A_c block (transformer pattern). Throws for patterns outside the
// implemented constraint classes. Pass window_halfwidth_hint <= 0 to derive
// the scan window from the derivative bounds.
std::vector<ConstraintRecord> solve_constraints(const std::vector<PotentialTerm>& terms,
                                                const ReducedBasis& basis,
                                                const Eigen::MatrixXd& Ac,
                                                double window_halfwidth_hint,
                                                const Eigen::VectorXd& probe_grid);

// Full pipeline: kernel split -> Youla block -> gauge fix -> momentum
// substitution -> constraint solving -> final Hamiltonian.
ReducedHamiltonian reduce(const CircuitLagrangian& lag);

// U_eff branches of the series combination (L in series with the inductor
// described by spec), per phi: all constraint roots, energies ascending.
struct BranchTable {
    Eigen::VectorXd phi;
    std::vector<std::vector<double>> phic;      // roots per phi
    std::vector<std::vector<double>> energy;    // U_eff per root, ascending
    std::vector<std::vector<double>> residual;  // |EL| per root
    bool branched = false;
};
BranchTable effective_potential_branches(double L, const PotentialSpec& spec,
                                         const Eigen::VectorXd& phi_grid);

// All real roots of phi = phi_c + L U'(phi_c) for a single phi.
std::vector<double> constraint_roots(double L, const PotentialSpec& spec, double phi,
                                     double window_halfwidth = 0.0);

// Classical evolution of the Dirac-bracket system
//   ydot = p / (m [1 + beta cos y]),  pdot = -beta sin y,
// fixed-step RK4. Aborts with `hit_singular` if the trajectory approaches
// the surface 1 + beta cos y = 0.
struct Trajectory {
    Eigen::VectorXd t, y, p, energy;
    bool hit_singular = false;
};
Trajectory dirac_dynamics(double beta, double mass, double y0, double p0, double T, double dt);

}  // namespace qflow::diracberg
