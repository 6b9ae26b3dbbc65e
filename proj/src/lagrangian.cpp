#include "qflow/lagrangian.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "qflow/errors.hpp"

namespace qflow {

double CircuitLagrangian::potential(const Eigen::VectorXd& phi) const {
    double u = 0.0;
    for (const auto& t : terms) u += t.spec.value(t.weights.dot(phi) + t.offset);
    return u;
}

Eigen::VectorXd CircuitLagrangian::potential_grad(const Eigen::VectorXd& phi) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
    for (const auto& t : terms) g += t.weights * t.spec.deriv(t.weights.dot(phi) + t.offset);
    return g;
}

double RegularHamiltonian::energy(const Eigen::VectorXd& phi, const Eigen::VectorXd& q) const {
    const Eigen::VectorXd shifted = q - A * phi;
    double u = 0.0;
    for (const auto& t : terms) u += t.spec.value(t.weights.dot(phi) + t.offset);
    return 0.5 * shifted.dot(Cinv * shifted) + u;
}

CircuitLagrangian assemble(const Netlist& net) {
    const int m = net.node_count - 1;
    CircuitLagrangian lag;
    lag.C = Eigen::MatrixXd::Zero(m, m);
    lag.A = Eigen::MatrixXd::Zero(m, m);
    for (int i = 1; i <= m; ++i) lag.labels.push_back("phi" + std::to_string(i));

    auto incidence = [m](int p, int q) {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
        if (p > 0) w[p - 1] += 1.0;
        if (q > 0) w[q - 1] -= 1.0;
        return w;
    };

    for (const auto& br : net.branches) {
        if (const auto* c = std::get_if<CapacitorBr>(&br.kind)) {
            const Eigen::VectorXd w = incidence(br.n_plus, br.n_minus);
            lag.C += c->c * w * w.transpose();
        } else if (const auto* ind = std::get_if<InductorBr>(&br.kind)) {
            const double off = ind->loop.empty() ? 0.0 : net.loop_phase(ind->loop);
            lag.terms.push_back({ind->spec, incidence(br.n_plus, br.n_minus), off});
        } else if (const auto* jj = std::get_if<JosephsonBr>(&br.kind)) {
            const Eigen::VectorXd w = incidence(br.n_plus, br.n_minus);
            const double off = jj->loop.empty() ? 0.0 : net.loop_phase(jj->loop);
            lag.terms.push_back({PotentialSpec(Cosine{jj->ej, off}), w, 0.0});
            if (jj->cint > 0.0) lag.C += jj->cint * w * w.transpose();
        } else if (const auto* gy = std::get_if<GyratorBr>(&br.kind)) {
            const Eigen::VectorXd u = incidence(br.n_plus, br.n_minus);
            const Eigen::VectorXd v = incidence(gy->nb_plus, gy->nb_minus);
            lag.A += 0.5 * gy->g * (u * v.transpose() - v * u.transpose());
        }
    }
    return lag;
}

namespace {

constexpr double kCondLimit = 1e12;

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigk(const Eigen::MatrixXd& C) {
    if ((C - C.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, C.cwiseAbs().maxCoeff())) {
        throw domain_error("capacitance matrix must be symmetric");
    }
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(C);
}

}  // namespace

CircuitLagrangian regularize(const CircuitLagrangian& lag, double eps) {
    if (!(eps > 0.0)) throw domain_error("regularize: eps must be positive");
    auto es = eigk(lag.C);
    const double cut = std::numeric_limits<double>::epsilon() * std::max(lag.C.trace(), 0.0);
    CircuitLagrangian out = lag;
    for (int i = 0; i < lag.dim(); ++i) {
        if (es.eigenvalues()[i] <= cut) {
            const Eigen::VectorXd v = es.eigenvectors().col(i);
            out.C += eps * v * v.transpose();
        }
    }
    return out;
}

RegularHamiltonian legendre_regular(const CircuitLagrangian& lag) {
    auto es = eigk(lag.C);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > kCondLimit) {
        throw domain_error(
            "legendre_regular: capacitance matrix is numerically singular; "
            "regularize() it or hand the circuit to the constrained reduction");
    }
    RegularHamiltonian h;
    h.Cinv = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
             es.eigenvectors().transpose();
    h.A = lag.A;
    h.terms = lag.terms;
    h.labels = lag.labels;
    return h;
}

Eigen::VectorXd normal_mode_frequencies(const CircuitLagrangian& lag) {
    if (lag.A.cwiseAbs().maxCoeff() > 0.0) {
        throw domain_error("normal_mode_frequencies: reciprocal circuits only");
    }
    const int m = lag.dim();
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m, m);
    for (const auto& t : lag.terms) {
        const auto* q = std::get_if<Quadratic>(&t.spec.node());
        if (!q) throw domain_error("normal_mode_frequencies: all-linear circuits only");
        K += t.weights * t.weights.transpose() / q->L;
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(K, lag.C);
    Eigen::VectorXd w2 = ges.eigenvalues();
    for (int i = 0; i < m; ++i) w2[i] = std::sqrt(std::max(w2[i], 0.0));
    std::sort(w2.data(), w2.data() + m);
    return w2;
}

Eigen::VectorXd classical_accel(const CircuitLagrangian& lag, const Eigen::VectorXd& phi,
                                const Eigen::VectorXd& phidot) {
    const Eigen::VectorXd rhs = (lag.A.transpose() - lag.A) * phidot - lag.potential_grad(phi);
    return lag.C.ldlt().solve(rhs);
}

}  // namespace qflow
