#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "qflow/netlist.hpp"
#include "qflow/potential.hpp"

namespace qflow {

// One inductive energy contribution U(w . phi + offset) on node fluxes.
struct PotentialTerm {
    PotentialSpec spec;
    Eigen::VectorXd weights;  // signed incidence row, length m
    double offset = 0.0;      // external flux (reduced phase)
};

// Matrix form L = 1/2 phidot^T C phidot + phidot^T A phi - U(phi) over the
// m = node_count-1 non-ground fluxes, A in symmetric gauge.
struct CircuitLagrangian {
    Eigen::MatrixXd C;
    Eigen::MatrixXd A;
    std::vector<PotentialTerm> terms;
    std::vector<std::string> labels;

    int dim() const { return static_cast<int>(C.rows()); }
    double potential(const Eigen::VectorXd& phi) const;
    Eigen::VectorXd potential_grad(const Eigen::VectorXd& phi) const;
};

// H = 1/2 (Q - A phi)^T C^-1 (Q - A phi) + U(phi)
struct RegularHamiltonian {
    Eigen::MatrixXd Cinv;
    Eigen::MatrixXd A;
    std::vector<PotentialTerm> terms;
    std::vector<std::string> labels;

    double energy(const Eigen::VectorXd& phi, const Eigen::VectorXd& q) const;
};

CircuitLagrangian assemble(const Netlist& net);

// C -> C + eps * (projector onto ker C); nodes in the image are untouched.
CircuitLagrangian regularize(const CircuitLagrangian& lag, double eps);

// Requires cond(C) < 1e12; otherwise directs the caller to regularize() or
// to the constrained reduction.
RegularHamiltonian legendre_regular(const CircuitLagrangian& lag);

// Normal-mode angular frequencies of an all-linear reciprocal circuit
// (every term Quadratic, A = 0, C positive definite), ascending.
Eigen::VectorXd normal_mode_frequencies(const CircuitLagrangian& lag);

// Classical acceleration C phidd = (A^T - A) phidot - grad U; C invertible.
Eigen::VectorXd classical_accel(const CircuitLagrangian& lag, const Eigen::VectorXd& phi,
                                const Eigen::VectorXd& phidot);

}  // namespace qflow
