#include "qflow/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "qflow/errors.hpp"

namespace qflow::spectral {

namespace {

// eigenvalues of T strictly below x (Sturm sequence count)
int sturm_count(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double x) {
    const int n = static_cast<int>(a.size());
    int count = 0;
    double q = a[0] - x;
    if (q < 0) ++count;
    for (int i = 1; i < n; ++i) {
        const double bb = b[i - 1] * b[i - 1];
        double denom = q;
        if (denom == 0.0) denom = 1e-300;
        q = a[i] - x - bb / denom;
        if (q < 0) ++count;
    }
    return count;
}

// one inverse-iteration linear solve (T - sigma I) v = rhs, tridiagonal LU
// with partial pivoting (dgttrf/dgtts2 scheme)
void tridiag_solve_shifted(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double sigma,
                           Eigen::VectorXd& v) {
    const int n = static_cast<int>(a.size());
    Eigen::VectorXd d = a.array() - sigma;
    Eigen::VectorXd dl = b, du = b, du2 = Eigen::VectorXd::Zero(std::max(n - 2, 0));
    std::vector<char> piv(std::max(n - 1, 0), 0);

    for (int i = 0; i < n - 1; ++i) {
        if (std::abs(d[i]) >= std::abs(dl[i])) {
            piv[i] = 0;
            if (d[i] == 0.0) d[i] = 1e-300;
            const double fact = dl[i] / d[i];
            dl[i] = fact;
            d[i + 1] -= fact * du[i];
            if (i < n - 2) du2[i] = 0.0;
        } else {
            piv[i] = 1;
            const double fact = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = fact;
            const double tmp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = tmp - fact * d[i + 1];
            if (i < n - 2) {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du[i + 1];
            }
        }
    }
    if (d[n - 1] == 0.0) d[n - 1] = 1e-300;

    Eigen::VectorXd rhs = v;
    for (int i = 0; i < n - 1; ++i) {
        if (piv[i] == 0) {
            rhs[i + 1] -= dl[i] * rhs[i];
        } else {
            const double tmp = rhs[i];
            rhs[i] = rhs[i + 1];
            rhs[i + 1] = tmp - dl[i] * rhs[i];
        }
    }
    v[n - 1] = rhs[n - 1] / d[n - 1];
    if (n > 1) v[n - 2] = (rhs[n - 2] - du[n - 2] * v[n - 1]) / d[n - 2];
    for (int i = n - 3; i >= 0; --i) {
        v[i] = (rhs[i] - du[i] * v[i + 1] - du2[i] * v[i + 2]) / d[i];
    }
}

double tridiag_residual(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double lambda,
                        const Eigen::VectorXd& v, Eigen::VectorXd& work) {
    const int n = static_cast<int>(a.size());
    work.resize(n);
    for (int i = 0; i < n; ++i) {
        double s = (a[i] - lambda) * v[i];
        if (i > 0) s += b[i - 1] * v[i - 1];
        if (i < n - 1) s += b[i] * v[i + 1];
        work[i] = s;
    }
    return work.norm();
}

// (A - sigma) x = rhs for the cyclic tridiagonal A (corner coupling c),
// Sherman-Morrison on top of the pivoted tridiagonal solve
void cyclic_solve_shifted(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double corner,
                          double sigma, Eigen::VectorXd& v) {
    const int n = static_cast<int>(a.size());
    double gamma = -(a[0] - sigma);
    const double floor_ = 1e-8 * (std::abs(a[0]) + std::abs(sigma) + 1.0);
    if (std::abs(gamma) < floor_) gamma = -floor_;
    Eigen::VectorXd amod = a;
    amod[0] -= gamma;
    amod[n - 1] -= corner * corner / gamma;
    Eigen::VectorXd y = v;
    tridiag_solve_shifted(amod, b, sigma, y);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    u[0] = gamma;
    u[n - 1] = corner;
    Eigen::VectorXd z = u;
    tridiag_solve_shifted(amod, b, sigma, z);
    const double frac = (y[0] + corner * y[n - 1] / gamma) / (1.0 + z[0] + corner * z[n - 1] / gamma);
    v = y - frac * z;
}

double cyclic_residual(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double corner,
                       double lambda, const Eigen::VectorXd& v, Eigen::VectorXd& work) {
    const int n = static_cast<int>(a.size());
    work.resize(n);
    for (int i = 0; i < n; ++i) {
        double s = (a[i] - lambda) * v[i];
        if (i > 0) s += b[i - 1] * v[i - 1];
        if (i < n - 1) s += b[i] * v[i + 1];
        work[i] = s;
    }
    work[0] += corner * v[n - 1];
    work[n - 1] += corner * v[0];
    return work.norm();
}

// eigenvalues of the cyclic tridiagonal strictly below x: Sturm count of
// the leading (n-1) tridiagonal block plus the sign of the bordered Schur
// complement (the last row couples to its neighbour and the corner)
int cyclic_count(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, double corner, double x) {
    const int n = static_cast<int>(diag.size());
    const int m = n - 1;
    int count = 0;
    double q = diag[0] - x;
    if (q < 0) ++count;
    for (int i = 1; i < m; ++i) {
        double denom = q;
        if (denom == 0.0) denom = 1e-300;
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if (q < 0) ++count;
    }
    // Schur scalar: (a_{n-1} - x) - w^T (T - x)^{-1} w with w supported on
    // the first and last entries of the leading block
    Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
    w[0] = corner;
    w[m - 1] = off[n - 2];
    Eigen::VectorXd sol = w;
    tridiag_solve_shifted(diag.head(m), off.head(m - 1), x, sol);
    const double s = (diag[n - 1] - x) - w.dot(sol);
    if (s < 0) ++count;
    return count;
}

// lowest K eigenpairs of the cyclic tridiagonal by bisection on the
// bordered inertia count plus fixed-shift inverse iteration
TridiagEigen cyclic_lowest(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, double corner,
                           int K) {
    const int n = static_cast<int>(diag.size());
    double lo = diag[0], hi = diag[0];
    for (int i = 0; i < n; ++i) {
        double r = std::abs(corner) * (i == 0 || i == n - 1 ? 1.0 : 0.0);
        if (i > 0) r += std::abs(off[i - 1]);
        if (i < n - 1) r += std::abs(off[i]);
        lo = std::min(lo, diag[i] - r);
        hi = std::max(hi, diag[i] + r);
    }
    const double scale = std::max({std::abs(lo), std::abs(hi), 1e-300});

    TridiagEigen out;
    out.values.resize(K);
    out.vectors.resize(n, K);
    Eigen::VectorXd work;

    for (int k = 0; k < K; ++k) {
        double a = lo, b = hi;
        for (int iter = 0; iter < 200 && (b - a) > 1e-14 * scale; ++iter) {
            const double mid = 0.5 * (a + b);
            if (cyclic_count(diag, off, corner, mid) >= k + 1) b = mid;
            else a = mid;
        }
        const double lambda = 0.5 * (a + b);

        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = 1.0 / (1.0 + (i * (2 * k + 1)) % 13);
        for (int j = 0; j < k; ++j) v -= out.vectors.col(j).dot(v) * out.vectors.col(j);
        v.normalize();

        const double shift = lambda + 1e-11 * scale;
        double best_res = std::numeric_limits<double>::infinity();
        double best_val = lambda;
        Eigen::VectorXd best_v = v;
        for (int it = 0; it < 10; ++it) {
            cyclic_solve_shifted(diag, off, corner, shift, v);
            for (int j = 0; j < k; ++j) v -= out.vectors.col(j).dot(v) * out.vectors.col(j);
            const double nrm = v.norm();
            if (nrm == 0.0 || !std::isfinite(nrm)) {
                for (int i = 0; i < n; ++i) v[i] = 1.0 / (1.0 + (i * 7 + it) % 17);
                v.normalize();
                continue;
            }
            v /= nrm;
            cyclic_residual(diag, off, corner, 0.0, v, work);
            const double rayleigh = v.dot(work);
            const double res = cyclic_residual(diag, off, corner, rayleigh, v, work);
            if (res < best_res && std::abs(rayleigh - lambda) < 1e-7 * scale) {
                best_res = res;
                best_val = rayleigh;
                best_v = v;
            }
            if (res < 2e-14 * scale) break;
        }
        if (best_res > 1e-7 * scale) {
            throw convergence_error("cyclic_lowest: inverse iteration did not converge (residual " +
                                    std::to_string(best_res) + ")");
        }
        out.values[k] = best_val;
        out.vectors.col(k) = best_v;
    }
    for (int k = 1; k < K; ++k) {
        if (out.values[k] < out.values[k - 1]) out.values[k] = out.values[k - 1];
    }
    return out;
}

}  // namespace

TridiagEigen tridiag_lowest(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag, int K) {
    const int n = static_cast<int>(diag.size());
    if (n < 1 || offdiag.size() != n - 1) throw domain_error("tridiag_lowest: inconsistent sizes");
    K = std::min(K, n);

    double lo = diag[0], hi = diag[0];
    for (int i = 0; i < n; ++i) {
        double r = 0.0;
        if (i > 0) r += std::abs(offdiag[i - 1]);
        if (i < n - 1) r += std::abs(offdiag[i]);
        lo = std::min(lo, diag[i] - r);
        hi = std::max(hi, diag[i] + r);
    }
    const double scale = std::max({std::abs(lo), std::abs(hi), 1e-300});

    TridiagEigen out;
    out.values.resize(K);
    out.vectors.resize(n, K);

    for (int k = 0; k < K; ++k) {
        double a = lo, b = hi;
        // smallest x with count(x) >= k+1
        for (int iter = 0; iter < 200 && (b - a) > 1e-15 * scale; ++iter) {
            const double mid = 0.5 * (a + b);
            if (sturm_count(diag, offdiag, mid) >= k + 1) b = mid;
            else a = mid;
        }
        const double lambda = 0.5 * (a + b);
        out.values[k] = lambda;

        // inverse iteration with a slightly displaced shift
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = 1.0 / (1.0 + i % 7);  // deterministic seed
        v.normalize();
        Eigen::VectorXd work;
        auto orthogonalize = [&](Eigen::VectorXd& u) {
            for (int j = 0; j < k; ++j) {
                if (std::abs(out.values[j] - lambda) < 1e-6 * scale) {
                    u -= out.vectors.col(j).dot(u) * out.vectors.col(j);
                }
            }
        };
        double res = 0.0;
        double shift = lambda + 1e-11 * scale;
        for (int it = 0; it < 8; ++it) {
            tridiag_solve_shifted(diag, offdiag, shift, v);
            orthogonalize(v);
            const double nrm = v.norm();
            if (nrm == 0.0) {
                for (int i = 0; i < n; ++i) v[i] = 1.0 / (1.0 + (i * 31 + it) % 11);
                v.normalize();
                continue;
            }
            v /= nrm;
            res = tridiag_residual(diag, offdiag, lambda, v, work);
            if (res < 1e-12 * scale) break;
        }
        // Rayleigh-quotient polish toward the eps*||T|| floor
        Eigen::VectorXd tv;
        tridiag_residual(diag, offdiag, 0.0, v, tv);
        double rayleigh = v.dot(tv);
        double best_res = tridiag_residual(diag, offdiag, rayleigh, v, work);
        Eigen::VectorXd best_v = v;
        double best_val = rayleigh;
        for (int it = 0; it < 3 && best_res > 1e-15 * scale; ++it) {
            tridiag_solve_shifted(diag, offdiag, rayleigh + 1e-14 * scale, v);
            orthogonalize(v);
            const double nrm = v.norm();
            if (nrm == 0.0) break;
            v /= nrm;
            tridiag_residual(diag, offdiag, 0.0, v, tv);
            rayleigh = v.dot(tv);
            const double r = tridiag_residual(diag, offdiag, rayleigh, v, work);
            if (r < best_res) {
                best_res = r;
                best_v = v;
                best_val = rayleigh;
            } else {
                break;
            }
        }
        if (best_res > 1e-7 * scale) {
            throw convergence_error("tridiag_lowest: inverse iteration did not converge (residual " +
                                    std::to_string(best_res) + ")");
        }
        if (std::abs(best_val - lambda) < 1e-8 * scale) out.values[k] = best_val;
        out.vectors.col(k) = best_v;
    }
    // enforce ascending order (bisection already gives it; keep it exact)
    for (int k = 1; k < K; ++k) {
        if (out.values[k] < out.values[k - 1]) out.values[k] = out.values[k - 1];
    }
    return out;
}

namespace {

EigenResult solve_1d_once(const std::function<double(double)>& potential, double mass,
                          const Grid1D& grid, int K) {
    const int n = grid.n;
    const double h = grid.spacing();
    const double kin = 1.0 / (2.0 * mass * h * h);

    if (grid.boundary == Boundary::Dirichlet) {
        Eigen::VectorXd diag(n), off(n - 1);
        double vmin = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            const double v = potential(grid.point(i));
            if (!std::isfinite(v)) throw domain_error("ground_state_1d: potential not finite on grid");
            vmin = std::min(vmin, v);
            diag[i] = 2.0 * kin + v;
        }
        off.setConstant(-kin);
        TridiagEigen te = tridiag_lowest(diag, off, K);
        EigenResult res;
        res.values = te.values;
        res.vectors = te.vectors;
        res.v_min = vmin;
        res.grid = grid;
        res.residuals.resize(K);
        Eigen::VectorXd work;
        for (int k = 0; k < K; ++k)
            res.residuals[k] = tridiag_residual(diag, off, te.values[k], te.vectors.col(k), work);
        double wall = 0.0;
        for (int k = 0; k < K; ++k) {
            const double m = te.vectors.col(k).cwiseAbs().maxCoeff();
            wall = std::max(wall, std::max(std::abs(te.vectors(0, k)), std::abs(te.vectors(n - 1, k))) / m);
        }
        res.wall_amplitude = wall;
        return res;
    }

    // periodic: check window periodicity, then a Lanczos solve on the
    // wrapped stencil
    const double w = grid.max - grid.min;
    double vscale = 1.0;
    for (int i = 0; i < 8; ++i) {
        const double x = grid.min + w * i / 8.0;
        vscale = std::max(vscale, std::abs(potential(x)));
    }
    for (int i = 0; i < 8; ++i) {
        const double x = grid.min + w * i / 8.0;
        if (std::abs(potential(x) - potential(x + w)) > 1e-9 * vscale) {
            throw domain_error("ground_state_1d: potential is not periodic on the window");
        }
    }
    Eigen::VectorXd diag(n), off(n - 1);
    double vmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double v = potential(grid.point(i));
        if (!std::isfinite(v)) throw domain_error("ground_state_1d: potential not finite on grid");
        vmin = std::min(vmin, v);
        diag[i] = 2.0 * kin + v;
    }
    off.setConstant(-kin);
    TridiagEigen te = cyclic_lowest(diag, off, -kin, K);
    EigenResult res;
    res.grid = grid;
    res.values = te.values;
    res.vectors = te.vectors;
    res.v_min = vmin;
    res.residuals.resize(K);
    Eigen::VectorXd work;
    for (int k = 0; k < K; ++k) {
        res.residuals[k] = cyclic_residual(diag, off, -kin, te.values[k], te.vectors.col(k), work);
    }
    res.wall_amplitude = 0.0;
    return res;
}

}  // namespace

EigenResult ground_state_1d(const std::function<double(double)>& potential, double mass,
                            const Grid1D& grid, int K) {
    if (!(mass > 0.0)) throw domain_error("ground_state_1d: mass must be positive");
    if (grid.n < 64) throw domain_error("ground_state_1d: need at least 64 grid points");
    if (!(grid.max > grid.min)) throw domain_error("ground_state_1d: empty flux window");
    if (K < 1) throw domain_error("ground_state_1d: K must be >= 1");

    Grid1D g = grid;
    EigenResult coarse = solve_1d_once(potential, mass, g, K);
    for (int attempt = 0; attempt < 12; ++attempt) {
        const Grid1D fine = g.refined(2);
        if (fine.n > (1 << 17)) throw convergence_error("ground_state_1d: grid-resolution failure");
        EigenResult fined = solve_1d_once(potential, mass, fine, K);
        const double drift = std::abs(fined.values[0] - coarse.values[0]);
        // ground energy measured from the potential floor; |E0| alone is a
        // meaningless yardstick near its zero crossings
        const double scale =
            std::max({std::abs(fined.values[0]), fined.values[0] - fined.v_min, 1e-12});
        if (drift < 1e-6 * scale) {
            fined.e0_drift = drift;
            const double r = coarse.grid.spacing() / fined.grid.spacing();
            fined.e0_extrapolated =
                fined.values[0] + (fined.values[0] - coarse.values[0]) / (r * r - 1.0);
            return fined;
        }
        g = fine;
        coarse = std::move(fined);
    }
    throw convergence_error("ground_state_1d: grid-resolution failure (doubling does not settle)");
}

EigenResult solve_1dof(const std::function<double(double)>& potential, double mass,
                       double halfwidth, int K, int n0) {
    double w = halfwidth;
    int n = std::max(n0, 64);
    for (int attempt = 0;; ++attempt) {
        EigenResult res = ground_state_1d(potential, mass, {-w, w, n, Boundary::Dirichlet}, K);
        if (res.wall_amplitude < 1e-8) return res;
        if (attempt >= 6) throw convergence_error("solve_1dof: ground-state tail does not fit the box");
        w *= 1.5;
        n = std::min(static_cast<int>(std::ceil(n * 1.5)), 1 << 15);
    }
}

TridiagEigen lanczos_lowest(const LinearOperator& op, const Eigen::VectorXd& seed, int K,
                            double tol, int basis_cap, int max_restarts) {
    const int dim = op.dim;
    basis_cap = std::min(basis_cap, dim);
    std::vector<Eigen::VectorXd> locked;      // converged eigenvectors
    std::vector<double> locked_vals;
    Eigen::VectorXd start = seed;
    std::mt19937 rng(424243);
    std::normal_distribution<double> gauss;
    auto scramble = [&](Eigen::VectorXd& u) {
        for (int i = 0; i < dim; ++i) u[i] = gauss(rng);
    };

    for (int restart = 0; restart <= max_restarts; ++restart) {
        // project out converged directions
        for (const auto& u : locked) start -= u.dot(start) * u;
        double nrm = start.norm();
        if (nrm < 1e-14) {
            scramble(start);
            for (const auto& u : locked) start -= u.dot(start) * u;
            nrm = start.norm();
        }
        start /= nrm;

        std::vector<Eigen::VectorXd> basis;
        basis.push_back(start);
        std::vector<double> alpha, beta;
        Eigen::VectorXd w(dim);

        int m = 0;
        bool converged_here = false;
        for (m = 0; m < basis_cap; ++m) {
            op.apply(basis[m], w);
            for (const auto& u : locked) w -= u.dot(w) * u;
            if (m > 0) w -= beta[m - 1] * basis[m - 1];
            const double a = basis[m].dot(w);
            alpha.push_back(a);
            w -= a * basis[m];
            // full reorthogonalization, twice
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& u : basis) w -= u.dot(w) * u;
            const double b = w.norm();

            const int nb = m + 1;
            if (b < 1e-13 || nb == basis_cap || (nb >= 12 && nb % 8 == 0)) {
                Eigen::VectorXd ad(nb), bd(std::max(nb - 1, 0));
                for (int i = 0; i < nb; ++i) ad[i] = alpha[i];
                for (int i = 0; i + 1 < nb; ++i) bd[i] = beta[i];
                TridiagEigen ritz = tridiag_lowest(ad, bd, 1);
                const double resid = (nb > 0) ? std::abs(b * ritz.vectors(nb - 1, 0)) : 0.0;
                if (resid < tol || b < 1e-13) {
                    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
                    for (int i = 0; i < nb; ++i) v += ritz.vectors(i, 0) * basis[i];
                    v.normalize();
                    locked.push_back(v);
                    locked_vals.push_back(ritz.values[0]);
                    converged_here = true;
                    break;
                }
                if (nb == basis_cap) {
                    // thick restart seed: best Ritz vector
                    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
                    for (int i = 0; i < nb; ++i) v += ritz.vectors(i, 0) * basis[i];
                    start = v;
                    break;
                }
            }
            if (b < 1e-13) break;
            beta.push_back(b);
            basis.push_back(w / b);
        }
        if (converged_here) {
            if (static_cast<int>(locked.size()) >= K) break;
            // hunt for the next eigenpair; a scrambled seed avoids getting
            // trapped in a symmetry sector of the original seed
            start = seed;
            Eigen::VectorXd noise(dim);
            scramble(noise);
            start += 0.5 * noise / std::max(noise.norm(), 1e-300) * start.norm();
        }
    }
    if (static_cast<int>(locked.size()) < K) {
        throw convergence_error("lanczos_lowest: Krylov stagnation (wanted " + std::to_string(K) +
                                " pairs, converged " + std::to_string(locked.size()) + ")");
    }
    // sort ascending
    std::vector<int> idx(locked.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return locked_vals[a] < locked_vals[b]; });
    TridiagEigen out;
    out.values.resize(K);
    out.vectors.resize(dim, K);
    for (int k = 0; k < K; ++k) {
        out.values[k] = locked_vals[idx[k]];
        out.vectors.col(k) = locked[idx[k]];
    }
    return out;
}

namespace {

EigenResult solve_2d_once(double d1, double d2,
                          const std::function<double(double, double)>& potential,
                          const Grid1D& grid1, const Grid1D& grid2, int K,
                          Eigen::MatrixXd* vectors_out) {
    const int n1 = grid1.n, n2 = grid2.n;
    const int dim = n1 * n2;
    const double h1 = grid1.spacing(), h2 = grid2.spacing();
    const double k1 = d1 / (h1 * h1), k2 = d2 / (h2 * h2);
    const bool p1 = grid1.boundary == Boundary::Periodic;
    const bool p2 = grid2.boundary == Boundary::Periodic;

    Eigen::VectorXd V(dim);
    double vmin = std::numeric_limits<double>::infinity();
    int argmin = 0;
    for (int i = 0; i < n1; ++i) {
        for (int j = 0; j < n2; ++j) {
            const double v = potential(grid1.point(i), grid2.point(j));
            if (!std::isfinite(v)) throw domain_error("ground_state_2d: potential not finite on grid");
            V[i * n2 + j] = v;
            if (v < vmin) vmin = v, argmin = i * n2 + j;
        }
    }

    LinearOperator op;
    op.dim = dim;
    op.apply = [&, n1, n2, k1, k2, p1, p2](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
        y.resize(dim);
        for (int i = 0; i < n1; ++i) {
            const int im = (i > 0) ? i - 1 : (p1 ? n1 - 1 : -1);
            const int ip = (i < n1 - 1) ? i + 1 : (p1 ? 0 : -1);
            for (int j = 0; j < n2; ++j) {
                const int jm = (j > 0) ? j - 1 : (p2 ? n2 - 1 : -1);
                const int jp = (j < n2 - 1) ? j + 1 : (p2 ? 0 : -1);
                const int at = i * n2 + j;
                double s = (2.0 * k1 + 2.0 * k2 + V[at]) * x[at];
                if (im >= 0) s -= k1 * x[im * n2 + j];
                if (ip >= 0) s -= k1 * x[ip * n2 + j];
                if (jm >= 0) s -= k2 * x[i * n2 + jm];
                if (jp >= 0) s -= k2 * x[i * n2 + jp];
                y[at] = s;
            }
        }
    };

    // Gaussian seed centred on the potential minimum
    Eigen::VectorXd seed(dim);
    const int ci = argmin / n2, cj = argmin % n2;
    const double s1 = std::max(4.0, n1 / 8.0), s2 = std::max(4.0, n2 / 8.0);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j)
            seed[i * n2 + j] = std::exp(-0.5 * ((i - ci) * (i - ci) / (s1 * s1) + (j - cj) * (j - cj) / (s2 * s2)));
    seed.normalize();

    TridiagEigen te;
    double tol = 1e-10;
    // absolute residual target, relaxed with the energy scale
    for (;;) {
        try {
            te = lanczos_lowest(op, seed, K, tol);
            break;
        } catch (const convergence_error&) {
            tol *= 10.0;
            if (tol > 1e-7) throw;
        }
    }

    EigenResult res;
    res.grid = grid1;
    res.values = te.values;
    res.residuals.resize(K);
    Eigen::VectorXd w(dim);
    for (int k = 0; k < K; ++k) {
        op.apply(te.vectors.col(k), w);
        res.residuals[k] = (w - te.values[k] * te.vectors.col(k)).norm();
        const double limit = 1e-8 * std::max(1.0, std::abs(te.values[k]));
        if (res.residuals[k] > limit) {
            throw convergence_error("ground_state_2d: residual " + std::to_string(res.residuals[k]) +
                                    " above contract");
        }
    }
    if (vectors_out) *vectors_out = te.vectors;
    return res;
}

}  // namespace

EigenResult ground_state_2d(double d1, double d2,
                            const std::function<double(double, double)>& potential,
                            const Grid1D& grid1, const Grid1D& grid2, int K,
                            Eigen::MatrixXd* vectors_out) {
    if (!(d1 > 0.0) || !(d2 > 0.0)) throw domain_error("ground_state_2d: kinetic coefficients must be positive");
    if (grid1.n > 256 || grid2.n > 256) throw domain_error("ground_state_2d: grids limited to 256 points per axis");

    // half-resolution companion solve drives a Richardson estimate of the
    // continuum ground energy
    Grid1D c1 = grid1, c2 = grid2;
    c1.n = std::max(grid1.n / 2, 24);
    c2.n = std::max(grid2.n / 2, 24);
    const EigenResult coarse = solve_2d_once(d1, d2, potential, c1, c2, 1, nullptr);
    EigenResult fine = solve_2d_once(d1, d2, potential, grid1, grid2, K, vectors_out);
    fine.e0_drift = std::abs(fine.values[0] - coarse.values[0]);
    const double r = std::sqrt((c1.spacing() / grid1.spacing()) * (c2.spacing() / grid2.spacing()));
    fine.e0_extrapolated = fine.values[0] + (fine.values[0] - coarse.values[0]) / (r * r - 1.0);
    return fine;
}

double charge_basis_ground(double ej1, double ej2, double Phi, double nu2, double d2, double ec,
                           double x1, int M) {
    if (M < 8) throw domain_error("charge_basis_ground: truncation M must be >= 8");
    auto solve = [&](int m) {
        const int n = 2 * m + 1;
        Eigen::VectorXd diag(n), off(n - 1);
        for (int k = 0; k < n; ++k) {
            const double nn = nu2 + (k - m);
            diag[k] = 4.0 * ec * d2 * nn * nn - ej1 * std::cos(x1);
        }
        // |U_{n,n+1}| = E_J2 |cos((x1+Phi)/2)| for the symmetric chain; a
        // diagonal phase rotation makes the matrix real symmetric.
        off.setConstant(-ej2 * std::abs(std::cos(0.5 * (x1 + Phi))));
        return tridiag_lowest(diag, off, 1).values[0];
    };
    double prev = solve(M);
    for (int m = M + 8; m <= 1024; m += 8) {
        const double cur = solve(m);
        if (std::abs(cur - prev) < 1e-8) return cur;
        prev = cur;
    }
    throw convergence_error("charge_basis_ground: truncation non-convergence");
}

}  // namespace qflow::spectral
