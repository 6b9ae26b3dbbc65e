#include "qflow/diracberg.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "qflow/errors.hpp"

namespace qflow::diracberg {

namespace {

constexpr int kScanSamples = 4096;

// all sign-change roots of g on [-w, w], bisection + Newton polish
std::vector<double> scan_roots(const std::function<double(double)>& g, double w) {
    std::vector<double> roots;
    const int n = kScanSamples;
    double xprev = -w, gprev = g(xprev);
    for (int i = 1; i <= n; ++i) {
        const double x = -w + 2.0 * w * i / n;
        const double gx = g(x);
        if (gprev == 0.0) {
            roots.push_back(xprev);
        } else if (gprev * gx < 0.0) {
            double a = xprev, b = x, ga = gprev;
            for (int it = 0; it < 80 && (b - a) > 1e-15 * w; ++it) {
                const double mid = 0.5 * (a + b);
                const double gm = g(mid);
                if (ga * gm <= 0.0) b = mid;
                else a = mid, ga = gm;
            }
            double r = 0.5 * (a + b);
            for (int it = 0; it < 4; ++it) {
                const double h = std::max(1e-7 * w, 1e-9);
                const double dg = (g(r + h) - g(r - h)) / (2.0 * h);
                if (dg == 0.0) break;
                const double step = g(r) / dg;
                if (!std::isfinite(step) || std::abs(step) > (b - a) + h) break;
                r -= step;
            }
            if (r >= -w && r <= w) roots.push_back(r);
        }
        xprev = x;
        gprev = gx;
    }
    std::sort(roots.begin(), roots.end());
    std::vector<double> out;
    for (double r : roots) {
        if (out.empty() || r - out.back() > 1e-9 * std::max(1.0, w)) out.push_back(r);
    }
    return out;
}

// effective series inductance of the quadratic content on a coordinate
double quadratic_scale(const std::vector<PotentialTerm>& terms, int idx) {
    double invL = 0.0;
    for (const auto& t : terms) {
        if (const auto* q = std::get_if<Quadratic>(&t.spec.node())) {
            const double w = t.weights[idx];
            invL += w * w / q->L;
        }
    }
    return invL > 0.0 ? 1.0 / invL : 1.0;
}

double bounded_deriv_scale(const std::vector<PotentialTerm>& terms, int idx, double range) {
    double s = 0.0;
    for (const auto& t : terms) {
        if (std::get_if<Quadratic>(&t.spec.node())) continue;
        const double w = std::abs(t.weights[idx]);
        if (w > 0.0) s += w * t.spec.deriv_bound(w * range + std::abs(t.offset));
    }
    return s;
}

}  // namespace

KernelSplit kernel_split(const Eigen::MatrixXd& C) {
    if ((C - C.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, C.cwiseAbs().maxCoeff())) {
        throw domain_error("kernel_split: capacitance matrix must be symmetric");
    }
    const int m = static_cast<int>(C.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    const double cut = std::numeric_limits<double>::epsilon() * std::max(C.trace(), 1e-300);
    KernelSplit ks;
    ks.k = 0;
    for (int i = 0; i < m; ++i)
        if (es.eigenvalues()[i] <= cut) ++ks.k;
    ks.n = m - ks.k;
    ks.B.resize(m, m);
    Eigen::VectorXd cp(ks.n);
    int at = 0;
    for (int i = m - 1; i >= 0; --i) {  // image first, largest eigenvalue leading
        if (es.eigenvalues()[i] > cut) {
            cp[at] = es.eigenvalues()[i];
            ks.B.col(at++) = es.eigenvectors().col(i);
        }
    }
    for (int i = 0; i < m; ++i) {
        if (es.eigenvalues()[i] <= cut) ks.B.col(at++) = es.eigenvectors().col(i);
    }
    ks.Cp = cp.asDiagonal();
    return ks;
}

YoulaBlock youla_block(const Eigen::MatrixXd& lambda) {
    const int k = static_cast<int>(lambda.rows());
    YoulaBlock yb;
    if (k == 0) {
        yb.D.resize(0, 0);
        yb.App.resize(0, 0);
        yb.d.resize(0);
        return yb;
    }
    const double scale = std::max(lambda.cwiseAbs().maxCoeff(), 1e-300);
    if ((lambda + lambda.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1.0)) {
        throw domain_error("youla_block: matrix must be antisymmetric");
    }
    const Eigen::MatrixXd S = lambda * lambda;  // eigenvalues -(lambda_i/2)^2
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    const double zero_cut = 1e-12 * std::max(scale * scale, 1e-300);

    std::vector<Eigen::VectorXd> ua, ub, uc;
    std::vector<double> couplings;
    int i = 0;
    while (i < k) {
        const double ev = es.eigenvalues()[i];
        if (ev > -zero_cut) {
            uc.push_back(es.eigenvectors().col(i));
            ++i;
            continue;
        }
        int ic = i;
        while (ic < k && std::abs(es.eigenvalues()[ic] - ev) <= 1e-10 * std::max(std::abs(ev), 1.0))
            ++ic;
        const double sigma = std::sqrt(-ev);
        std::vector<Eigen::VectorXd> used;
        for (int c = i; c < ic; ++c) {
            Eigen::VectorXd u = es.eigenvectors().col(c);
            for (const auto& w : used) u -= w.dot(u) * w;
            const double nrm = u.norm();
            if (nrm < 1e-8) continue;  // partner of an already-claimed vector
            u /= nrm;
            Eigen::VectorXd v = -(lambda * u) / sigma;
            used.push_back(u);
            used.push_back(v);
            ua.push_back(u);
            ub.push_back(v);
            couplings.push_back(2.0 * sigma);
        }
        i = ic;
    }
    yb.l = static_cast<int>(ua.size());
    yb.j = k - 2 * yb.l;
    yb.d.resize(yb.l);
    yb.D.resize(k, k);
    for (int c = 0; c < yb.l; ++c) {
        yb.d[c] = couplings[c];
        yb.D.col(c) = ua[c];
        yb.D.col(yb.l + c) = ub[c];
    }
    for (int c = 0; c < yb.j; ++c) yb.D.col(2 * yb.l + c) = uc[c];
    yb.App = Eigen::MatrixXd::Zero(k, k);
    for (int c = 0; c < yb.l; ++c) yb.App(c, yb.l + c) = yb.d[c];

    const Eigen::MatrixXd target = 0.5 * (yb.App - yb.App.transpose());
    if ((yb.D.transpose() * lambda * yb.D - target).cwiseAbs().maxCoeff() >
        1e-10 * std::max(scale, 1.0)) {
        throw convergence_error("youla_block: canonical form check failed");
    }
    return yb;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> gauge_fix(const Eigen::MatrixXd& A_any, int n,
                                                      const YoulaBlock& yb) {
    const int m = static_cast<int>(A_any.rows());
    const int k = m - n;
    const Eigen::MatrixXd S = 0.5 * (A_any - A_any.transpose());
    Eigen::MatrixXd fixed = Eigen::MatrixXd::Zero(m, m);
    fixed.topLeftCorner(n, n) = S.topLeftCorner(n, n);
    fixed.topRightCorner(n, k) = 2.0 * S.topRightCorner(n, k);
    fixed.bottomRightCorner(k, k) = yb.App;
    const Eigen::MatrixXd F = 0.5 * (fixed - A_any);
    if ((F - F.transpose()).cwiseAbs().maxCoeff() >
        1e-10 * std::max(1.0, A_any.cwiseAbs().maxCoeff())) {
        throw domain_error("gauge_fix: kernel block inconsistent with the supplied normal form");
    }
    return {fixed, F};
}

std::vector<ConstraintRecord> solve_constraints(const std::vector<PotentialTerm>& terms,
                                                const ReducedBasis& basis,
                                                const Eigen::MatrixXd& Ac,
                                                double window_halfwidth_hint,
                                                const Eigen::VectorXd& probe_grid) {
    const int n = basis.n, l = basis.l, j = basis.j;
    const int m = n + basis.k;
    std::vector<ConstraintRecord> records;
    if (l > 0) records.emplace_back(MomentumSubstitution{basis.d});

    double wscale = 0.0;
    for (const auto& t : terms) wscale = std::max(wscale, t.weights.cwiseAbs().maxCoeff());
    const double wtol = 1e-12 * std::max(1.0, wscale);

    for (int c = 0; c < j; ++c) {
        const int idx = n + 2 * l + c;
        bool appears = false;
        for (const auto& t : terms)
            if (std::abs(t.weights[idx]) > wtol) appears = true;

        const bool ac_coupled = Ac.cols() > c && n > 0 && Ac.col(c).cwiseAbs().maxCoeff() > 1e-14;

        if (!appears) {
            if (!ac_coupled) {
                throw domain_error(
                    "solve_constraints: kernel flux neither appears in the potential nor couples "
                    "through the vector potential; unresolvable constraint");
            }
            // transformer pattern: EL reduces to (A_c col)^T xdot' = 0
            VelocityConstraint vc;
            Eigen::VectorXd cvec = Eigen::VectorXd::Zero(m);
            cvec.head(n) = Ac.col(c);
            vc.node_coeffs = basis.B * basis.D * cvec;
            const double nm = vc.node_coeffs.cwiseAbs().maxCoeff();
            std::vector<int> nz;
            for (int v = 0; v < m; ++v)
                if (std::abs(vc.node_coeffs[v]) > 1e-10 * nm) nz.push_back(v);
            if (nz.size() == 2) {
                vc.var_a = nz[0] + 1;
                vc.var_b = nz[1] + 1;
                vc.ratio = -vc.node_coeffs[nz[1]] / vc.node_coeffs[nz[0]];
            }
            records.emplace_back(std::move(vc));
            continue;
        }

        if (ac_coupled) {
            throw domain_error(
                "solve_constraints: kernel flux appears in the potential and couples through the "
                "vector potential; outside the implemented constraint classes");
        }

        // parametrized by at most one remaining coordinate
        int slow = -1;
        for (const auto& t : terms) {
            if (std::abs(t.weights[idx]) <= wtol) continue;
            for (int v = 0; v < m; ++v) {
                if (v == idx || std::abs(t.weights[v]) <= wtol) continue;
                if (slow >= 0 && slow != v) {
                    throw domain_error(
                        "solve_constraints: kernel flux couples to several remaining coordinates; "
                        "outside the implemented constraint classes");
                }
                slow = v;
            }
        }

        SolvedFlux sf;
        sf.var_index = idx;
        sf.slow_index = slow;
        sf.samples = (slow >= 0) ? probe_grid : Eigen::VectorXd::Zero(1);
        const double Lq = quadratic_scale(terms, idx);
        for (int s = 0; s < sf.samples.size(); ++s) {
            const double sval = sf.samples[s];
            Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
            if (slow >= 0) x[slow] = sval;
            auto g = [&](double pc) {
                x[idx] = pc;
                double acc = 0.0;
                for (const auto& t : terms) {
                    const double w = t.weights[idx];
                    if (w == 0.0) continue;
                    acc += w * t.spec.deriv(t.weights.dot(x) + t.offset);
                }
                return acc;
            };
            double w = window_halfwidth_hint;
            if (w <= 0.0) {
                const double beta_like = Lq * bounded_deriv_scale(terms, idx, std::abs(sval) + 10.0);
                w = std::abs(sval) + 10.0 * (1.0 + beta_like);
            }
            auto roots = scan_roots(g, w);
            std::vector<double> res;
            for (double r : roots) res.push_back(std::abs(g(r)));
            sf.roots.push_back(std::move(roots));
            sf.residuals.push_back(std::move(res));
        }
        records.emplace_back(std::move(sf));
    }
    return records;
}

double ReducedHamiltonian::potential_on_branch(const Eigen::VectorXd& xp,
                                               const Eigen::VectorXd& phia,
                                               const Eigen::VectorXd& qa,
                                               const std::vector<double>& phic) const {
    const int n = basis.n, l = basis.l, j = basis.j;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n + basis.k);
    y.head(n) = xp;
    for (int i = 0; i < l; ++i) {
        y[n + i] = phia[i];
        y[n + l + i] = qa[i] / basis.d[i];
    }
    for (int i = 0; i < j; ++i) y[n + 2 * l + i] = phic[i];
    double u = 0.0;
    for (const auto& t : terms) u += t.spec.value(t.weights.dot(y) + t.offset);
    return u;
}

ReducedHamiltonian reduce(const CircuitLagrangian& lag) {
    const int m = lag.dim();
    KernelSplit ks = kernel_split(lag.C);
    const int n = ks.n, k = ks.k;

    ReducedHamiltonian red;
    red.basis.B = ks.B;
    red.basis.n = n;
    red.basis.k = k;

    const Eigen::MatrixXd A1 = ks.B.transpose() * lag.A * ks.B;
    YoulaBlock yb = youla_block(A1.bottomRightCorner(k, k));
    red.basis.l = yb.l;
    red.basis.j = yb.j;
    red.basis.d = yb.d;

    Eigen::MatrixXd D = Eigen::MatrixXd::Identity(m, m);
    if (k > 0) D.bottomRightCorner(k, k) = yb.D;
    red.basis.D = D;

    const Eigen::MatrixXd A2 = D.transpose() * A1 * D;
    auto [Afix, F] = gauge_fix(A2, n, yb);
    red.basis.F = F;

    const int l = yb.l, j = yb.j;
    red.Cp_inv = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) red.Cp_inv(i, i) = 1.0 / ks.Cp(i, i);
    red.Ap = Afix.topLeftCorner(n, n);
    red.Aa = Afix.block(0, n, n, l);
    red.Ab = Afix.block(0, n + l, n, l);
    red.Ac = Afix.block(0, n + 2 * l, n, j);

    const Eigen::MatrixXd T = ks.B * D;  // phi = T y
    red.terms.reserve(lag.terms.size());
    for (const auto& t : lag.terms) {
        red.terms.push_back({t.spec, T.transpose() * t.weights, t.offset});
    }

    for (int i = 0; i < n; ++i) red.labels.push_back("x" + std::to_string(i + 1));
    for (int i = 0; i < l; ++i) red.labels.push_back("a" + std::to_string(i + 1));
    red.dof = n + l;

    const Eigen::VectorXd probe = Eigen::VectorXd::LinSpaced(33, -2.0 * M_PI, 2.0 * M_PI);
    red.constraints = solve_constraints(red.terms, red.basis, red.Ac, 0.0, probe);

    for (const auto& r : red.constraints) {
        if (const auto* sf = std::get_if<SolvedFlux>(&r)) {
            if (sf->slow_index >= 0 && red.probe_grid.size() == 0) {
                red.probe_grid = sf->samples;
                red.branch_counts.resize(sf->samples.size());
                for (std::size_t s = 0; s < sf->roots.size(); ++s) {
                    red.branch_counts[s] = static_cast<int>(sf->roots[s].size());
                    if (sf->roots[s].size() > 1) red.branched = true;
                }
            } else if (sf->slow_index < 0) {
                for (const auto& rr : sf->roots)
                    if (rr.size() > 1) red.branched = true;
            }
        }
    }
    return red;
}

std::vector<double> constraint_roots(double L, const PotentialSpec& spec, double phi,
                                     double window_halfwidth) {
    if (!(L > 0.0)) throw domain_error("constraint_roots: L must be positive");
    double w = window_halfwidth;
    if (w <= 0.0) {
        const double beta_like = L * spec.deriv_bound(std::abs(phi) + 10.0);
        w = std::abs(phi) + 10.0 * (1.0 + beta_like);
    }
    auto g = [&](double pc) { return (pc - phi) / L + spec.deriv(pc); };
    return scan_roots(g, w);
}

BranchTable effective_potential_branches(double L, const PotentialSpec& spec,
                                         const Eigen::VectorXd& phi_grid) {
    BranchTable bt;
    bt.phi = phi_grid;
    bt.phic.resize(phi_grid.size());
    bt.energy.resize(phi_grid.size());
    bt.residual.resize(phi_grid.size());
    for (int i = 0; i < phi_grid.size(); ++i) {
        const double phi = phi_grid[i];
        auto roots = constraint_roots(L, spec, phi);
        std::vector<std::pair<double, double>> branches;
        for (double r : roots) {
            branches.emplace_back((phi - r) * (phi - r) / (2.0 * L) + spec.value(r), r);
        }
        std::sort(branches.begin(), branches.end());
        for (const auto& [e, r] : branches) {
            bt.energy[i].push_back(e);
            bt.phic[i].push_back(r);
            bt.residual[i].push_back(std::abs((r - phi) / L + spec.deriv(r)));
        }
        if (branches.size() > 1) bt.branched = true;
    }
    return bt;
}

Trajectory dirac_dynamics(double beta, double mass, double y0, double p0, double T, double dt) {
    if (!(mass > 0.0) || !(dt > 0.0) || !(T > 0.0)) {
        throw domain_error("dirac_dynamics: mass, T, dt must be positive");
    }
    const auto denom = [&](double y) { return 1.0 + beta * std::cos(y); };
    if (std::abs(denom(y0)) < 1e-9 * (1.0 + std::abs(beta))) {
        throw domain_error("dirac_dynamics: initial point lies on the singular surface");
    }
    const auto energy = [&](double y, double p) {
        const double s = std::sin(y);
        return p * p / (2.0 * mass) + 0.5 * beta * beta * s * s - beta * std::cos(y);
    };

    const int steps = static_cast<int>(std::llround(T / dt));
    Trajectory tr;
    tr.t.resize(steps + 1);
    tr.y.resize(steps + 1);
    tr.p.resize(steps + 1);
    tr.energy.resize(steps + 1);
    tr.t[0] = 0.0;
    tr.y[0] = y0;
    tr.p[0] = p0;
    tr.energy[0] = energy(y0, p0);

    const double guard = 1e-6 * (1.0 + std::abs(beta));
    double y = y0, p = p0;
    int done = 0;
    for (int i = 0; i < steps; ++i) {
        auto fy = [&](double yy, double pp) { return pp / (mass * denom(yy)); };
        auto fp = [&](double yy) { return -beta * std::sin(yy); };

        const double sign0 = denom(y);
        const double k1y = fy(y, p), k1p = fp(y);
        const double k2y = fy(y + 0.5 * dt * k1y, p + 0.5 * dt * k1p), k2p = fp(y + 0.5 * dt * k1y);
        const double k3y = fy(y + 0.5 * dt * k2y, p + 0.5 * dt * k2p), k3p = fp(y + 0.5 * dt * k2y);
        const double k4y = fy(y + dt * k3y, p + dt * k3p), k4p = fp(y + dt * k3y);
        const double ynew = y + dt / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
        const double pnew = p + dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);

        if (std::abs(denom(ynew)) < guard || denom(ynew) * sign0 < 0.0) {
            tr.hit_singular = true;
            break;
        }
        y = ynew;
        p = pnew;
        ++done;
        tr.t[done] = done * dt;
        tr.y[done] = y;
        tr.p[done] = p;
        tr.energy[done] = energy(y, p);
    }
    tr.t.conservativeResize(done + 1);
    tr.y.conservativeResize(done + 1);
    tr.p.conservativeResize(done + 1);
    tr.energy.conservativeResize(done + 1);
    return tr;
}

}  // namespace qflow::diracberg
