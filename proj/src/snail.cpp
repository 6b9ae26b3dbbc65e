#include "qflow/snail.hpp"

#include <cmath>

#include "qflow/errors.hpp"
#include "qflow/spectral.hpp"

namespace qflow::snail {

void SnailParams::validate() const {
    for (double v : {ej1, ej2, ej3, ec}) {
        if (!(v > 0.0)) throw domain_error("snail: energies must be positive");
    }
    for (double v : {k1, k2, k3}) {
        if (!(v > 0.0)) throw domain_error("snail: capacitance ratios must be positive");
    }
    if (!std::isfinite(Phi)) throw domain_error("snail: external flux must be finite");
}

SnailFrame transform_and_assemble(const SnailParams& p) {
    p.validate();
    SnailFrame f;
    f.A << 1.0, -p.k3 / (p.k2 + p.k3), 0.0, 1.0;
    f.d1 = (p.k2 + p.k3) / (p.k2 + p.k3 + p.k1 * p.k2 + p.k2 * p.k3 + p.k3 * p.k1);
    f.d2 = 1.0 / (p.k2 + p.k3);
    const double r2 = p.k3 / (p.k2 + p.k3);
    const double r3 = p.k2 / (p.k2 + p.k3);
    f.potential = [p, r2, r3](double x1, double x2) {
        return -p.ej1 * std::cos(x1) - p.ej2 * std::cos(r2 * x1 + x2) -
               p.ej3 * std::cos(r3 * x1 - x2 + p.Phi);
    };
    return f;
}

SinglePhase single_phase(const SnailParams& p, const Eigen::VectorXd& x1_grid) {
    p.validate();
    if (!p.symmetric()) throw domain_error("single_phase: symmetric operation (k2 = k3, EJ2 = EJ3) required");
    SinglePhase sp;
    sp.x1 = x1_grid;
    sp.u_cl.resize(x1_grid.size());
    sp.u_ho.resize(x1_grid.size());
    sp.valid.resize(x1_grid.size());
    const double ratio = p.ec / (p.k2 * p.ej2);
    sp.harmonic_meaningful = ratio < 1.0;
    sp.ej2_renormalized = p.ej2 * (1.0 - 0.5 * std::sqrt(0.5 * ratio));
    for (int i = 0; i < x1_grid.size(); ++i) {
        const double x1 = x1_grid[i];
        const double c = std::cos(0.5 * (x1 + p.Phi));
        sp.u_cl[i] = -p.ej1 * std::cos(x1) - 2.0 * p.ej2 * c;
        sp.valid[i] = std::abs(x1 + p.Phi) < M_PI;
        sp.u_ho[i] = sp.u_cl[i];
        if (sp.harmonic_meaningful && sp.valid[i] && c > 0.0) {
            sp.u_ho[i] += std::sqrt(2.0 * p.ec * p.ej2 * c / p.k2);
        }
    }
    return sp;
}

SmallCapResult small_cap_limit(const SnailParams& p, const Eigen::VectorXd& x1_grid, int M) {
    p.validate();
    if (p.nu2 != 0.0) throw domain_error("small_cap_limit: offset-charge sector nu2 = 0 only");
    SmallCapResult r;
    r.x1 = x1_grid;
    r.ubo.resize(x1_grid.size());
    const SnailFrame f = transform_and_assemble(p);
    const double e00 = spectral::charge_basis_ground(p.ej1, p.ej2, p.Phi, p.nu2, f.d2, p.ec, 0.0, M);
    double sup = 0.0;
    for (int i = 0; i < x1_grid.size(); ++i) {
        const double e = spectral::charge_basis_ground(p.ej1, p.ej2, p.Phi, p.nu2, f.d2, p.ec,
                                                       x1_grid[i], M);
        r.ubo[i] = e - e00;
        sup = std::max(sup, std::abs(r.ubo[i] - p.ej1 * (1.0 - std::cos(x1_grid[i]))));
    }
    r.sup_dev_from_bare = sup;
    r.d1ec = f.d1 * p.ec;
    const double ec1 = p.ec / p.k1;  // charging energy of the shunt junction capacitance
    r.d1ec_parallel_estimate = 1.0 / (1.0 / p.ec + 1.0 / ec1);
    return r;
}

Comparison validate_2d(const SnailParams& p, const Eigen::VectorXd& x1_samples, int n2) {
    p.validate();
    if (!p.symmetric()) throw domain_error("validate_2d: symmetric operation required");
    const SnailFrame f = transform_and_assemble(p);
    const SinglePhase sp = single_phase(p, x1_samples);

    Comparison cmp;
    cmp.x1 = x1_samples;
    cmp.valid = sp.valid;
    const int n = static_cast<int>(x1_samples.size());
    cmp.u_cl.resize(n);
    cmp.u_ho.resize(n);
    cmp.u_charge.resize(n);
    cmp.u_2d.resize(n);
    cmp.fast_gap.resize(n);

    // exact fast spectrum per x1: periodic grid in x2 (nu2 = 0 torus sector)
    auto fast_exact = [&](double x1) {
        spectral::Grid1D g2{0.0, 2.0 * M_PI, n2, spectral::Boundary::Periodic};
        auto v = [&, x1](double x2) { return f.potential(x1, x2); };
        return spectral::ground_state_1d(v, 1.0 / (8.0 * p.ec * f.d2), g2, 2);
    };

    Eigen::VectorXd e2d(n), echg(n);
    for (int i = 0; i < n; ++i) {
        const auto res = fast_exact(x1_samples[i]);
        e2d[i] = res.e0_extrapolated;
        cmp.fast_gap[i] = res.fast_gap();
        echg[i] = spectral::charge_basis_ground(p.ej1, p.ej2, p.Phi, p.nu2, f.d2, p.ec,
                                                x1_samples[i], 32);
    }

    // common zero at the first valid sample
    int ref = 0;
    for (int i = 0; i < n; ++i)
        if (cmp.valid[i]) {
            ref = i;
            break;
        }
    for (int i = 0; i < n; ++i) {
        cmp.u_cl[i] = sp.u_cl[i] - sp.u_cl[ref];
        cmp.u_ho[i] = sp.u_ho[i] - sp.u_ho[ref];
        cmp.u_charge[i] = echg[i] - echg[ref];
        cmp.u_2d[i] = e2d[i] - e2d[ref];
    }

    cmp.harmonic_improves = true;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!cmp.valid[i] || i == ref) continue;
        if (std::abs(cmp.u_ho[i] - cmp.u_2d[i]) >= std::abs(cmp.u_cl[i] - cmp.u_2d[i])) {
            cmp.harmonic_improves = false;
        }
        const double scale = std::max(std::abs(cmp.u_2d[i]), 1e-12);
        worst = std::max(worst, std::abs(cmp.u_charge[i] - cmp.u_2d[i]) / scale);
    }
    cmp.charge_vs_2d_rel = worst;
    return cmp;
}

}  // namespace qflow::snail
