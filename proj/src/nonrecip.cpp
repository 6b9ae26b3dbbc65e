#include "qflow/nonrecip.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "qflow/errors.hpp"
#include "qflow/sweeputil.hpp"
#include "qflow/units.hpp"

namespace qflow::nonrecip {

const char* gyrator_verdict_name(GyratorFlowVerdict v) {
    switch (v) {
        case GyratorFlowVerdict::Type1: return "type-1";
        case GyratorFlowVerdict::Type2: return "type-2";
        case GyratorFlowVerdict::TypeL: return "type-L";
        default: return "NoLimit";
    }
}

TellegenEquivalent tellegen_equiv(const GyratorShunt& shunt) {
    if (shunt.g == 0.0) throw domain_error("tellegen_equiv: gyration conductance must be nonzero");
    const double g2 = shunt.g * shunt.g;
    if (shunt.capacitor) {
        if (!(*shunt.capacitor > 0.0)) throw domain_error("tellegen_equiv: capacitance must be positive");
        return {TellegenEquivalent::Kind::Inductor, *shunt.capacitor / g2};
    }
    if (shunt.inductor) {
        if (const auto* q = std::get_if<Quadratic>(&shunt.inductor->node())) {
            return {TellegenEquivalent::Kind::Capacitor, q->L * g2};
        }
        throw domain_error("tellegen_equiv: the classical replacement rule covers linear shunts only");
    }
    throw domain_error("tellegen_equiv: empty shunt");
}

namespace {

// strictly monotone derivative check by sampling
void require_monotone_deriv(const PotentialSpec& spec, double range, const char* who) {
    double prev = spec.deriv(-range);
    for (int i = 1; i <= 256; ++i) {
        const double x = -range + 2.0 * range * i / 256.0;
        const double d = spec.deriv(x);
        if (d < prev - 1e-12 * (1.0 + std::abs(prev))) {
            throw domain_error(std::string(who) + ": element characteristic is not monotone");
        }
        prev = d;
    }
}

// invert g'(v) = w for monotone increasing g'
double invert_deriv(const PotentialSpec& spec, double w) {
    double lo = -1.0, hi = 1.0;
    for (int it = 0; it < 200 && spec.deriv(lo) > w; ++it) lo *= 2.0;
    for (int it = 0; it < 200 && spec.deriv(hi) < w; ++it) hi *= 2.0;
    for (int it = 0; it < 200 && (hi - lo) > 1e-15 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (spec.deriv(mid) < w) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

CapReduced gyrator_cap_reduce(const PotentialSpec& cap_energy, double G, double q2) {
    if (G == 0.0) throw domain_error("gyrator_cap_reduce: gyration conductance must be nonzero");
    CapReduced out;
    out.g_conductance = G;
    out.q2 = q2;
    if (const auto* q = std::get_if<Quadratic>(&cap_energy.node())) {
        // Quadratic{1/C} encodes the linear energy g(v) = C v^2 / 2
        const double C = 1.0 / q->L;
        out.linear = true;
        out.l_eff = C / (G * G);
        const double leff = out.l_eff;
        out.added_potential = [leff, G, q2](double phi1) {
            const double s = phi1 - q2 / G;
            return s * s / (2.0 * leff);
        };
        return out;
    }
    require_monotone_deriv(cap_energy, 64.0, "gyrator_cap_reduce");
    out.linear = false;
    out.l_eff = 0.0;
    PotentialSpec g = cap_energy;
    out.added_potential = [g, G, q2](double phi1) {
        const double w = q2 - G * phi1;
        const double v = invert_deriv(g, w);
        return w * v - g.value(v);
    };
    return out;
}

IndReduced gyrator_ind_reduce(const PotentialSpec& f, double G) {
    if (G == 0.0) throw domain_error("gyrator_ind_reduce: gyration conductance must be nonzero");
    IndReduced out{};
    if (const auto* q = std::get_if<Quadratic>(&f.node())) {
        out.exponent = 2.0;
        out.c_eff = q->L * G * G;
        out.coefficient = 0.5 * out.c_eff;
        return out;
    }
    if (const auto* p = std::get_if<PowerLaw>(&f.node())) {
        if (p->gamma > 1.0) {
            const double gamma = p->gamma;
            out.exponent = gamma / (gamma - 1.0);
            out.coefficient = (gamma - 1.0) * std::pow(std::abs(G), out.exponent) /
                              (gamma * std::pow(p->beta * gamma, 1.0 / (gamma - 1.0)));
            out.c_eff = (gamma == 2.0 && p->symmetric) ? G * G / (2.0 * p->beta) : 0.0;
            return out;
        }
    }
    throw domain_error("gyrator_ind_reduce: inductor characteristic is not invertible");
}

GyratorFlowResult gyrator_bo_flow(const PotentialSpec& f, double L1, double C1, double G,
                                  const Eigen::VectorXd& c2s, int jobs) {
    if (!(L1 > 0.0) || !(C1 > 0.0)) throw domain_error("gyrator_bo_flow: L1, C1 must be positive");
    if (G == 0.0) throw domain_error("gyrator_bo_flow: gyration conductance must be nonzero");
    const int nc = static_cast<int>(c2s.size());
    if (nc < 3) throw domain_error("gyrator_bo_flow: need a C2 sweep");
    for (int i = 1; i < nc; ++i)
        if (!(c2s[i] < c2s[i - 1])) throw domain_error("gyrator_bo_flow: C2 values must be strictly decreasing");

    GyratorFlowResult gr;
    gr.c2s = c2s;
    gr.q1 = Eigen::VectorXd::LinSpaced(9, -1.5, 1.5);
    gr.e_fast.resize(nc, gr.q1.size());
    gr.c_eff.resize(nc);
    gr.slow_freq.resize(nc);
    gr.freq_bare = 1.0 / std::sqrt(L1 * C1);

    // (Q1 + G phi2)^2 / 2C1 = (phi_eq - phi2)^2 / 2 L_eq with
    // L_eq = C1/G^2 and phi_eq = -Q1/G
    const double l_eq = C1 / (G * G);
    Eigen::VectorXd phi_eq(gr.q1.size());
    for (int i = 0; i < gr.q1.size(); ++i) phi_eq[i] = -gr.q1[i] / G;

    for (int c = 0; c < nc; ++c) {
        boflow::BoCurve curve = boflow::bo_potential(l_eq, f, c2s[c], phi_eq, jobs);
        gr.e_fast.row(c) = curve.ubo.transpose();
        // even fit e = c2 q^2 (+ c1 q to absorb asymmetric residue)
        Eigen::MatrixXd X(gr.q1.size(), 2);
        X.col(0) = gr.q1;
        X.col(1) = gr.q1.cwiseProduct(gr.q1);
        const Eigen::Vector2d fit = X.colPivHouseholderQr().solve(gr.e_fast.row(c).transpose());
        const double curv = std::max(fit[1], 1e-300);
        gr.c_eff[c] = 1.0 / (2.0 * curv);
        gr.slow_freq[c] = 1.0 / std::sqrt(L1 * gr.c_eff[c]);
    }

    const boflow::InductorClass cls = boflow::classify(f);
    if (cls.tag == boflow::InductorTag::TypeL) {
        gr.freq_typeL = 1.0 / std::sqrt(L1 * (C1 + cls.Lfrak * G * G));
    }

    // distances of the fast-energy curves to the candidate kinetic forms
    Eigen::VectorXd dopen(nc), dshort(nc), dlin(nc);
    double sshort = 0.0, slin = 0.0;
    for (int i = 0; i < gr.q1.size(); ++i) {
        sshort = std::max(sshort, gr.q1[i] * gr.q1[i] / (2.0 * C1));
        if (gr.freq_typeL > 0.0)
            slin = std::max(slin, gr.q1[i] * gr.q1[i] / (2.0 * (C1 + cls.Lfrak * G * G)));
    }
    for (int c = 0; c < nc; ++c) {
        double dop = 0.0, dsh = 0.0, dli = 0.0;
        for (int i = 0; i < gr.q1.size(); ++i) {
            const double q = gr.q1[i];
            const double e = gr.e_fast(c, i);
            dop = std::max(dop, std::abs(e));
            dsh = std::max(dsh, std::abs(e - q * q / (2.0 * C1)));
            if (gr.freq_typeL > 0.0)
                dli = std::max(dli, std::abs(e - q * q / (2.0 * (C1 + cls.Lfrak * G * G))));
        }
        dopen[c] = dop;
        dshort[c] = dsh;
        dlin[c] = gr.freq_typeL > 0.0 ? dli : std::numeric_limits<double>::infinity();
    }

    const int stride = [&] {
        const double dec = std::log10(c2s[0] / c2s[nc - 1]);
        return std::max(1, static_cast<int>(std::lround((nc - 1) / std::max(dec, 1.0))));
    }();
    int from = nc - 1;
    for (int i = 0; i < nc; ++i) {
        if (c2s[i] <= c2s[nc - 1] * 1e3 * (1.0 + 1e-9)) {
            from = i;
            break;
        }
    }
    auto passes = [&](const Eigen::VectorXd& d, double scale, double& extrap) {
        const Eigen::VectorXd clamped = d.cwiseMax(1e-7 * scale);
        extrap = std::max(aitken_extrapolate(d, stride), 0.0);
        return tail_decreasing(clamped, from, 1e-12 * scale) && extrap < 0.02 * scale;
    };
    double eo = 0, es = 0, el = 0;
    const bool po = passes(dopen, std::max(dopen[0], 1e-300), eo);
    const bool ps = passes(dshort, std::max(sshort, 1e-300), es);
    const bool pl = gr.freq_typeL > 0.0 && passes(dlin, std::max(slin, 1e-300), el);

    gr.freq_extrapolated = aitken_extrapolate(gr.slow_freq, stride);
    gr.verdict = GyratorFlowVerdict::NoLimit;
    double best = std::numeric_limits<double>::infinity();
    if (po && eo / std::max(dopen[0], 1e-300) < best) {
        gr.verdict = GyratorFlowVerdict::Type1;
        best = eo / std::max(dopen[0], 1e-300);
    }
    if (ps && es / std::max(sshort, 1e-300) < best) {
        gr.verdict = GyratorFlowVerdict::Type2;
        best = es / std::max(sshort, 1e-300);
    }
    if (pl && el / std::max(slin, 1e-300) < best) {
        gr.verdict = GyratorFlowVerdict::TypeL;
        best = el / std::max(slin, 1e-300);
    }
    return gr;
}

AlmostMathieu almost_mathieu_build(double ej1, double ej2, double G, const spectral::Grid1D& grid) {
    if (!(ej1 >= 0.0) || !(ej2 >= 0.0)) throw domain_error("almost_mathieu_build: energies must be >= 0");
    if (G == 0.0) throw domain_error("almost_mathieu_build: gyration conductance must be nonzero");
    if (grid.boundary != spectral::Boundary::Periodic) {
        throw domain_error("almost_mathieu_build: periodic flux window required");
    }
    const double w = grid.max - grid.min;
    const double h = grid.spacing();
    const double phi0 = units::phi0;

    const double cells = w / phi0;
    if (std::abs(cells - std::lround(cells)) > 1e-9 * cells) {
        throw domain_error("almost_mathieu_build: window must be an integer number of flux quanta");
    }
    AlmostMathieu am;
    am.grid = grid;
    am.shift = 2.0 * M_PI * units::hbar / (std::abs(G) * phi0);
    const double steps = am.shift / h;
    am.shift_steps = static_cast<int>(std::lround(steps));
    if (std::abs(steps - am.shift_steps) > 1e-9 * std::max(steps, 1.0) || am.shift_steps == 0) {
        const int suggest = static_cast<int>(std::lround(std::ceil(grid.n / steps) * steps));
        throw domain_error(
            "almost_mathieu_build: charge-cosine shift is not an integer number of grid steps; "
            "try n = " + std::to_string(suggest > 0 ? suggest : grid.n) + " on the same window");
    }
    const double gkp_g = M_PI * units::hbar / (phi0 * phi0);
    am.gkp = std::abs(std::abs(G) / gkp_g - 1.0) < 1e-9;

    const int n = grid.n;
    am.H = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        am.H(i, i) = -ej1 * std::cos(2.0 * M_PI * grid.point(i) / phi0);
        const int up = (i + am.shift_steps) % n;
        const int dn = ((i - am.shift_steps) % n + n) % n;
        am.H(i, up) += -0.5 * ej2;
        am.H(i, dn) += -0.5 * ej2;
    }
    return am;
}

TransformerResult transformer_reduce(double g1, double g2, const OnePort& net1, const OnePort& net2,
                                     double c, double regular_cap) {
    if (g1 == 0.0 || g2 == 0.0) throw domain_error("transformer_reduce: conductances must be nonzero");
    if (!(net1.cap > 0.0) || !(net2.cap > 0.0)) throw domain_error("transformer_reduce: port networks need capacitance");

    TransformerResult tr;
    const double n = g2 / g1;
    tr.turns_ratio = n;
    const bool lin1 = std::holds_alternative<Quadratic>(net1.ind.node());
    const bool lin2 = std::holds_alternative<Quadratic>(net2.ind.node());
    tr.c_dependent = !(lin1 && lin2);
    tr.reduced_mass = n * n * net1.cap + net2.cap;
    PotentialSpec u1 = net1.ind, u2 = net2.ind;
    tr.reduced_potential = [u1, u2, n, c](double x) { return u1.value(n * x + c) + u2.value(x); };

    if (regular_cap > 0.0) {
        // U_fast(phi) at fixed (phi1, phi2, Q1, Q2): quadratic in phi, so the
        // minimum over the fast flux is exact
        const double c1 = net1.cap, c2 = net2.cap;
        auto e_fast = [&](double phi1, double phi2, double q1, double q2) {
            const double a = 0.5 * (g1 * g1 / c1 + g2 * g2 / c2);
            const double b = -q1 * g1 / c1 + q2 * g2 / c2;
            const double c0 = 0.5 * (q1 * q1 / c1 + q2 * q2 / c2);
            return c0 - b * b / (4.0 * a) + u1.value(phi1) + u2.value(phi2);
        };
        std::mt19937 rng(20240917);
        std::uniform_real_distribution<double> uni(-2.0, 2.0);
        const double delta = 1e-4;
        const double inv = 1.0 / std::sqrt(1.0 + n * n);
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const double p1 = uni(rng), p2 = uni(rng), q1 = uni(rng), q2 = uni(rng);
            const double e0 = e_fast(p1, p2, q1, q2);
            const double e1 = e_fast(p1, p2, q1 + delta * inv, q2 - delta * n * inv);
            worst = std::max(worst, std::abs(e1 - e0));
        }
        tr.conservation_residual = worst;
    }
    return tr;
}

}  // namespace qflow::nonrecip
