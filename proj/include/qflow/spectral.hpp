#pragma once

#include <Eigen/Dense>
#include <functional>

namespace qflow::spectral {

enum class Boundary { Dirichlet, Periodic };

struct Grid1D {
    double min = -1.0;
    double max = 1.0;
    int n = 64;  // unknowns (interior points for Dirichlet)
    Boundary boundary = Boundary::Dirichlet;

    double spacing() const {
        return boundary == Boundary::Dirichlet ? (max - min) / (n + 1) : (max - min) / n;
    }
    double point(int i) const {
        return boundary == Boundary::Dirichlet ? min + (i + 1) * spacing() : min + i * spacing();
    }
    Grid1D refined(int factor) const { return {min, max, n * factor, boundary}; }
};

struct EigenResult {
    Eigen::VectorXd values;    // ascending, K entries
    Eigen::MatrixXd vectors;   // n x K, orthonormal (grid l2)
    Eigen::VectorXd residuals; // ||H psi - E psi|| / ||psi|| per pair
    Grid1D grid;
    double e0_drift = 0.0;     // |E0(2N) - E0(N)| from the doubling check
    double e0_extrapolated = 0.0;
    double v_min = 0.0;        // potential minimum over the grid
    double wall_amplitude = 0.0;  // max |psi| at the box edge / max |psi| (Dirichlet)

    double fast_gap() const { return values.size() > 1 ? values[1] - values[0] : 0.0; }
};

// Lowest K eigenpairs of a symmetric tridiagonal matrix by Sturm-sequence
// bisection plus inverse iteration.
struct TridiagEigen {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};
TridiagEigen tridiag_lowest(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag, int K);

// Lowest K eigenpairs of H = -(1/2 mass) d^2/dphi^2 + V(phi) on the grid.
// Central differences; the grid is solved at n and 2n and the run fails if
// the ground energy moves by more than 1e-6 relative (auto-refines first).
EigenResult ground_state_1d(const std::function<double(double)>& potential, double mass,
                            const Grid1D& grid, int K);

// Lowest K eigenpairs of H = -d1 d^2/dx1^2 - d2 d^2/dx2^2 + V(x1,x2) via a
// Lanczos iteration with full reorthogonalization. Grids up to 256x256.
EigenResult ground_state_2d(double d1, double d2,
                            const std::function<double(double, double)>& potential,
                            const Grid1D& grid1, const Grid1D& grid2, int K,
                            Eigen::MatrixXd* vectors_out = nullptr);

// Ground energy of the truncated plane-wave (charge) basis for the junction
// chain: diagonal 4 E_C d2 (nu2+n)^2 - E_J1 cos(x1), first off-diagonals of
// magnitude E_J2 |cos((x1+Phi)/2)|, n = -M..M. The truncation is accepted
// once growing M by 8 moves the result by less than 1e-8.
double charge_basis_ground(double ej1, double ej2, double Phi, double nu2, double d2, double ec,
                           double x1, int M);

// Adaptive single-variable solve: Dirichlet box [-halfwidth, halfwidth],
// widened by 1.5x (up to 6 times) until the ground-state tail at the walls
// is below 1e-8.
EigenResult solve_1dof(const std::function<double(double)>& potential, double mass,
                       double halfwidth, int K, int n0 = 512);

// Generic symmetric-operator Lanczos used by ground_state_2d; exposed for
// operators assembled elsewhere (e.g. shift stencils).
struct LinearOperator {
    int dim;
    std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> apply;
};
TridiagEigen lanczos_lowest(const LinearOperator& op, const Eigen::VectorXd& seed, int K,
                            double tol, int basis_cap = 180, int max_restarts = 60);

}  // namespace qflow::spectral
