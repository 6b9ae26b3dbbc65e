#include "qflow/boflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qflow/errors.hpp"
#include "qflow/sweeputil.hpp"

namespace qflow::boflow {

const char* tag_name(InductorTag tag) {
    switch (tag) {
        case InductorTag::Type1a: return "type-1a";
        case InductorTag::Type1b: return "type-1b";
        case InductorTag::Type2: return "type-2";
        case InductorTag::TypeL: return "type-L";
        default: return "unclassified";
    }
}

const char* fixed_point_name(FixedPoint fp) {
    switch (fp) {
        case FixedPoint::OpenCircuit: return "OpenCircuit";
        case FixedPoint::ShortCircuit: return "ShortCircuit";
        case FixedPoint::LinearInductor: return "LinearInductor";
        default: return "NoLimit";
    }
}

namespace {

// flattened member description for sums
struct Member {
    double growth;   // tail exponent: 0 bounded, 1 linear, gamma power laws, 2 quadratic
    bool symmetric;
    double invL;     // quadratic content
    bool handled;    // false for selfsimilar / type-2 / unknown combinations
    bool type2;
};

void flatten(const PotentialSpec& spec, std::vector<Member>& out) {
    struct V {
        std::vector<Member>& out;
        void operator()(const Quadratic& q) const { out.push_back({2.0, true, 1.0 / q.L, true, false}); }
        void operator()(const Cosine& c) const {
            out.push_back({0.0, std::abs(std::sin(c.offset)) < 1e-14, 0.0, true, false});
        }
        void operator()(const PowerLaw& p) const {
            if (p.symmetric && p.gamma == 2.0) {
                out.push_back({2.0, true, 2.0 * p.beta, true, false});
            } else if (p.symmetric && p.gamma > 2.0) {
                out.push_back({p.gamma, true, 0.0, true, true});
            } else {
                out.push_back({p.gamma, p.symmetric, 0.0, true, false});
            }
        }
        void operator()(const PiecewiseLinear& p) const { out.push_back({1.0, p.a == 0.0, 0.0, true, false}); }
        void operator()(const SelfSimilar&) const { out.push_back({0.0, true, 0.0, false, false}); }
        void operator()(const SumSpec& s) const {
            for (const auto& t : s.terms) flatten(t, out);
        }
        void operator()(const Tabulated&) const {
            throw domain_error("classify: tabulated potentials carry no tail information");
        }
    };
    std::visit(V{out}, spec.node());
}

}  // namespace

InductorClass classify(const PotentialSpec& spec) {
    std::vector<Member> members;
    flatten(spec, members);

    InductorClass out;
    double invL = 0.0;
    double growth = 0.0;
    bool all_sym = true;
    bool all_handled = true;
    int type2_count = 0;
    for (const auto& m : members) {
        if (!m.handled) all_handled = false;
        if (m.type2) ++type2_count;
        invL += m.invL;
        if (m.invL == 0.0 && !m.type2) {
            growth = std::max(growth, m.growth);
            all_sym = all_sym && m.symmetric;
        }
    }
    if (!all_handled) return out;  // Unclassified

    if (type2_count > 0) {
        // a single pure superlinear power law is type 2; mixtures are not decomposable here
        if (members.size() == 1) {
            out.tag = InductorTag::Type2;
            out.gamma = members[0].growth;
        }
        return out;
    }

    const bool has_quadratic = invL > 0.0;
    if (has_quadratic) {
        // nonquadratic remainder must be type 1
        const bool rem_type1 = (growth < 2.0 && (all_sym || growth < 1.0));
        if (rem_type1) {
            out.tag = InductorTag::TypeL;
            out.Lfrak = 1.0 / invL;
        }
        return out;
    }

    // bounded or sublinear content only
    if (std::holds_alternative<Cosine>(spec.node())) {
        out.tag = InductorTag::Type1b;
        out.gamma = 0.5;
        return out;
    }
    if (const auto* p = std::get_if<PiecewiseLinear>(&spec.node()); p && p->a != 0.0) {
        return out;  // the asymmetric piecewise-linear case stays unclassified
    }
    if (growth < 2.0 && all_sym) {
        out.tag = InductorTag::Type1a;
        out.gamma = std::max(growth, 0.5);
        return out;
    }
    if (growth < 1.0 && !all_sym) {
        out.tag = InductorTag::Type1b;
        out.gamma = std::max(growth, 0.5);
        return out;
    }
    return out;
}

FastScales FastScales::from(double L, double cprime) {
    if (!(L > 0.0) || !(cprime > 0.0)) throw domain_error("FastScales: L and C' must be positive");
    FastScales fs{};
    fs.omega_r = 1.0 / std::sqrt(L * cprime);
    fs.phi_zpf = std::pow(L / cprime, 0.25);
    fs.epsilon = std::sqrt(L) / fs.phi_zpf;
    return fs;
}

double FastScales::lambda(int q) const {
    if (q < 1) throw domain_error("FastScales: q must be >= 1");
    return std::pow(epsilon, 1.0 / q);
}

namespace {

// how far the classical minimum of (phi - pc)^2/2L + U(pc) can sit beyond
// |phi|; confining symmetric terms pull it inward and contribute nothing
double displacement_bound(double L, const PotentialSpec& spec, double maxphi) {
    struct V {
        double L, maxphi;
        double operator()(const Quadratic&) const { return 0.0; }
        double operator()(const Cosine& c) const { return L * c.ej; }
        double operator()(const PowerLaw& p) const {
            if (p.symmetric) return 0.0;
            const double at_phi = L * p.beta * p.gamma * std::pow(maxphi + 1.0, p.gamma - 1.0);
            const double fixed = p.gamma < 2.0
                                     ? std::pow(L * p.beta * p.gamma, 1.0 / (2.0 - p.gamma))
                                     : at_phi;
            return std::max(at_phi, fixed);
        }
        double operator()(const PiecewiseLinear& p) const { return L * p.b * (1.0 + p.a); }
        double operator()(const SelfSimilar&) const { return 0.0; }
        double operator()(const SumSpec& s) const {
            double d = 0.0;
            for (const auto& t : s.terms) d += std::visit(V{L, maxphi}, t.node());
            return d;
        }
        double operator()(const Tabulated& t) const {
            double m = 0.0;
            for (double sl : t.slope) m = std::max(m, std::abs(sl));
            return L * m;
        }
    };
    return std::visit(V{L, maxphi}, spec.node());
}

struct BoxPlan {
    double lo, hi;
    int n0;
};

BoxPlan plan_box(double L, const PotentialSpec& spec, double cprime, double maxphi) {
    const FastScales fs = FastScales::from(L, cprime);
    const double shift = displacement_bound(L, spec, maxphi);
    const double pad = 12.0 * fs.phi_zpf + shift + 4.0 * M_PI;
    BoxPlan plan;
    plan.lo = -maxphi - pad;
    plan.hi = maxphi + pad;

    // wavefunction width from the curvature at the classical minimum
    const double wscan = maxphi + 2.0 * shift + 10.0;
    double vbest = std::numeric_limits<double>::infinity(), cmin = 0.0;
    for (int i = 0; i <= 512; ++i) {
        const double x = -wscan + 2.0 * wscan * i / 512.0;
        const double v = x * x / (2.0 * L) + spec.value(x);
        if (v < vbest) vbest = v, cmin = x;
    }
    const double h0 = std::max(wscan / 512.0, 1e-3 * fs.phi_zpf);
    const double vpp = std::max((spec.value(cmin + h0) + spec.value(cmin - h0) - 2.0 * spec.value(cmin)) / (h0 * h0) + 1.0 / L,
                                0.2 / L);
    const double ell = std::min(std::pow(cprime * vpp, -0.25), fs.phi_zpf * 1.01);
    const double h = std::min(spec.feature_scale() / 6.0, ell / 64.0);
    plan.n0 = std::clamp(static_cast<int>(std::ceil((plan.hi - plan.lo) / h)), 64, 16384);
    return plan;
}

}  // namespace

BoCurve bo_potential(double L, const PotentialSpec& spec, double cprime,
                     const Eigen::VectorXd& phi_grid, int jobs) {
    if (!(L > 0.0) || !(cprime > 0.0)) throw domain_error("bo_potential: L and C' must be positive");
    if (phi_grid.size() == 0) throw domain_error("bo_potential: empty flux grid");

    const double maxphi = phi_grid.cwiseAbs().maxCoeff();
    BoxPlan plan = plan_box(L, spec, cprime, maxphi);

    const int nphi = static_cast<int>(phi_grid.size());
    std::vector<spectral::EigenResult> results(nphi);
    spectral::EigenResult ref;

    auto fast_solve = [&](double phi, const spectral::Grid1D& grid) {
        auto v = [&, phi](double pc) { return (phi - pc) * (phi - pc) / (2.0 * L) + spec.value(pc); };
        return spectral::ground_state_1d(v, cprime, grid, 2);
    };

    for (int attempt = 0;; ++attempt) {
        spectral::Grid1D grid{plan.lo, plan.hi, plan.n0, spectral::Boundary::Dirichlet};

        // settle the grid size on the reference solve so every phi shares it
        ref = fast_solve(0.0, grid);
        int settled = ref.grid.n / 2;
        for (int round = 0; round < 3 && settled != grid.n; ++round) {
            grid.n = settled;
            ref = fast_solve(0.0, grid);
            settled = ref.grid.n / 2;
        }

        double wall = ref.wall_amplitude;
        parallel_for(nphi, jobs, [&](int i) {
            results[i] = fast_solve(phi_grid[i], grid);
        });
        for (const auto& r : results) wall = std::max(wall, r.wall_amplitude);
        if (wall < 1e-8) break;
        if (attempt >= 6) {
            throw convergence_error("bo_potential: ground-state tail does not fit the box");
        }
        const double c = 0.5 * (plan.lo + plan.hi), half = 0.5 * (plan.hi - plan.lo) * 1.5;
        plan.lo = c - half;
        plan.hi = c + half;
        plan.n0 = std::min(static_cast<int>(std::ceil(plan.n0 * 1.5)), 16384);
    }

    BoCurve curve;
    curve.phi = phi_grid;
    curve.ubo.resize(nphi);
    curve.e_ref = ref.e0_extrapolated;
    curve.min_fast_gap = ref.fast_gap();
    for (int i = 0; i < nphi; ++i) {
        curve.ubo[i] = results[i].e0_extrapolated - ref.e0_extrapolated;
        curve.min_fast_gap = std::min(curve.min_fast_gap, results[i].fast_gap());
    }
    return curve;
}

namespace {

int points_per_decade(const Eigen::VectorXd& cprimes) {
    const int n = static_cast<int>(cprimes.size());
    if (n < 2) return 1;
    const double decades = std::log10(cprimes[0] / cprimes[n - 1]);
    if (decades <= 0.0) return 1;
    return std::max(1, static_cast<int>(std::lround((n - 1) / decades)));
}

int tail_start_index(const Eigen::VectorXd& cprimes, double decades) {
    const int n = static_cast<int>(cprimes.size());
    const double cutoff = cprimes[n - 1] * std::pow(10.0, decades);
    for (int i = 0; i < n; ++i) {
        if (cprimes[i] <= cutoff * (1.0 + 1e-9)) return i;
    }
    return n - 1;
}

struct CandidateVerdict {
    bool passes = false;
    double extrapolated = 0.0;
    double rel = std::numeric_limits<double>::infinity();
};

CandidateVerdict judge(const Eigen::VectorXd& dist, int from, int stride, double scale) {
    CandidateVerdict cv;
    // distances below the solver noise floor count as converged to zero
    const double floor_ = 1e-7 * scale;
    Eigen::VectorXd clamped = dist.cwiseMax(floor_);
    cv.extrapolated = std::max(aitken_extrapolate(dist, stride), 0.0);
    cv.rel = cv.extrapolated / std::max(scale, 1e-300);
    cv.passes = tail_decreasing(clamped, from, 1e-12 * scale) && cv.rel < 0.02;
    return cv;
}

}  // namespace

FlowResult flow_sweep(double L, const PotentialSpec& spec, const Eigen::VectorXd& cprimes,
                      const Eigen::VectorXd& phi_grid, int jobs, double verdict_decades) {
    const int nc = static_cast<int>(cprimes.size());
    if (nc < 2) throw domain_error("flow_sweep: need a C' sweep");
    for (int i = 1; i < nc; ++i)
        if (!(cprimes[i] < cprimes[i - 1])) throw domain_error("flow_sweep: C' values must be strictly decreasing");
    if (std::log10(cprimes[0] / cprimes[nc - 1]) < 4.0 - 1e-9) {
        throw domain_error("flow_sweep: sweep must span at least 4 decades");
    }

    FlowResult fr;
    fr.cprimes = cprimes;
    fr.phi = phi_grid;
    fr.ubo.resize(nc, phi_grid.size());
    fr.min_fast_gap.resize(nc);

    for (int c = 0; c < nc; ++c) {
        BoCurve curve = bo_potential(L, spec, cprimes[c], phi_grid, jobs);
        fr.ubo.row(c) = curve.ubo.transpose();
        fr.min_fast_gap[c] = curve.min_fast_gap;
    }

    const InductorClass cls = classify(spec);
    fr.Lfrak = cls.Lfrak;

    // sup-norm distances on the interior of the grid
    const double half = 0.5 * phi_grid.cwiseAbs().maxCoeff();
    std::vector<int> keep;
    for (int i = 0; i < phi_grid.size(); ++i)
        if (std::abs(phi_grid[i]) <= half + 1e-12) keep.push_back(i);

    auto sup_dist = [&](int c, auto&& target) {
        double d = 0.0;
        for (int i : keep) d = std::max(d, std::abs(fr.ubo(c, i) - target(phi_grid[i])));
        return d;
    };
    fr.dist_open.resize(nc);
    fr.dist_short.resize(nc);
    fr.dist_linear.resize(nc);
    double scale_short = 0.0, scale_linear = 0.0;
    for (int i : keep) scale_short = std::max(scale_short, phi_grid[i] * phi_grid[i] / (2.0 * L));
    for (int i : keep)
        scale_linear = std::max(scale_linear, phi_grid[i] * phi_grid[i] / (2.0 * (L + fr.Lfrak)));
    for (int c = 0; c < nc; ++c) {
        fr.dist_open[c] = sup_dist(c, [](double) { return 0.0; });
        fr.dist_short[c] = sup_dist(c, [&](double p) { return p * p / (2.0 * L); });
        fr.dist_linear[c] =
            fr.Lfrak > 0.0 ? sup_dist(c, [&](double p) { return p * p / (2.0 * (L + fr.Lfrak)); })
                           : std::numeric_limits<double>::infinity();
    }

    const int from = tail_start_index(cprimes, verdict_decades);
    const int stride = points_per_decade(cprimes);
    const double scale_open = std::max(fr.dist_open[0], 1e-300);

    CandidateVerdict open_v = judge(fr.dist_open, from, stride, scale_open);
    CandidateVerdict short_v = judge(fr.dist_short, from, stride, std::max(scale_short, 1e-300));
    CandidateVerdict lin_v;
    if (fr.Lfrak > 0.0) lin_v = judge(fr.dist_linear, from, stride, std::max(scale_linear, 1e-300));

    fr.verdict = FixedPoint::NoLimit;
    double best = std::numeric_limits<double>::infinity();
    if (open_v.passes && open_v.rel < best) {
        fr.verdict = FixedPoint::OpenCircuit;
        best = open_v.rel;
        fr.extrapolated_distance = open_v.extrapolated;
    }
    if (short_v.passes && short_v.rel < best) {
        fr.verdict = FixedPoint::ShortCircuit;
        best = short_v.rel;
        fr.extrapolated_distance = short_v.extrapolated;
    }
    if (lin_v.passes && lin_v.rel < best) {
        fr.verdict = FixedPoint::LinearInductor;
        best = lin_v.rel;
        fr.extrapolated_distance = lin_v.extrapolated;
    }

    FixedPoint expected = FixedPoint::NoLimit;
    switch (cls.tag) {
        case InductorTag::Type1a:
        case InductorTag::Type1b: expected = FixedPoint::OpenCircuit; break;
        case InductorTag::Type2: expected = FixedPoint::ShortCircuit; break;
        case InductorTag::TypeL: expected = FixedPoint::LinearInductor; break;
        default: break;
    }
    fr.class_consistent = (cls.tag == InductorTag::Unclassified) || (expected == fr.verdict);
    return fr;
}

PathologicalResult pathological_study(const Eigen::VectorXd& masses, const Eigen::VectorXd& xs,
                                      int jobs) {
    const int nm = static_cast<int>(masses.size());
    if (nm < 3) throw domain_error("pathological_study: need a mass sweep");
    for (int i = 1; i < nm; ++i)
        if (!(masses[i] < masses[i - 1])) throw domain_error("pathological_study: masses must be strictly decreasing");
    if (std::log10(masses[0] / masses[nm - 1]) < 16.0 - 1e-9) {
        throw domain_error("pathological_study: masses must span at least two factor-1e8 periods");
    }

    const double L = 5.0;  // coupling (y - x)^2 / 10
    const PotentialSpec spec((SelfSimilar()));

    PathologicalResult pr;
    pr.masses = masses;
    pr.xs = xs;
    pr.e0_x0.resize(nm);
    pr.ubo.resize(nm, xs.size());

    std::vector<BoCurve> curves(nm);
    parallel_for(nm, jobs, [&](int i) { curves[i] = bo_potential(L, spec, masses[i], xs, 1); });
    for (int i = 0; i < nm; ++i) {
        pr.e0_x0[i] = curves[i].e_ref;
        pr.ubo.row(i) = curves[i].ubo.transpose();
    }

    // exact self-similar rescaling: E0(1e-8 m) = 1e4 E0(m)
    pr.scaling_ratio_worst = 0.0;
    for (int i = 0; i < nm; ++i) {
        for (int j = i + 1; j < nm; ++j) {
            if (std::abs(masses[j] / masses[i] - 1e-8) < 1e-14) {
                const double ratio = pr.e0_x0[j] / pr.e0_x0[i];
                pr.scaling_ratio_worst = std::max(pr.scaling_ratio_worst, std::abs(ratio / 1e4 - 1.0));
                ++pr.scaling_pairs;
            }
        }
    }

    // period-8 fit of U_BO at the largest slow sample vs log10(1/m)
    int xcol = 0;
    for (int i = 0; i < xs.size(); ++i)
        if (std::abs(xs[i]) > std::abs(xs[xcol])) xcol = i;
    const int nharm = 4;
    Eigen::MatrixXd A(nm, 1 + 2 * nharm);
    Eigen::VectorXd y(nm);
    for (int i = 0; i < nm; ++i) {
        const double u = std::log10(1.0 / masses[i]);
        A(i, 0) = 1.0;
        for (int k = 1; k <= nharm; ++k) {
            A(i, 2 * k - 1) = std::cos(2.0 * M_PI * k * u / 8.0);
            A(i, 2 * k) = std::sin(2.0 * M_PI * k * u / 8.0);
        }
        y[i] = pr.ubo(i, xcol);
    }
    const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd fit = A * coef;
    pr.logper_residual = std::sqrt((y - fit).squaredNorm() / nm);
    pr.logper_amplitude = 0.5 * (fit.maxCoeff() - fit.minCoeff());

    // fixed-point distances over a full scaling period
    Eigen::VectorXd dopen(nm), dshort(nm);
    for (int i = 0; i < nm; ++i) {
        double do_ = 0.0, ds = 0.0;
        for (int j = 0; j < xs.size(); ++j) {
            do_ = std::max(do_, std::abs(pr.ubo(i, j)));
            ds = std::max(ds, std::abs(pr.ubo(i, j) - xs[j] * xs[j] / (2.0 * L)));
        }
        dopen[i] = do_;
        dshort[i] = ds;
    }
    const double window = std::min(8.0, std::log10(masses[0] / masses[nm - 1]));
    const int from = tail_start_index(masses, window);
    const int stride = points_per_decade(masses);
    double sshort = 0.0;
    for (int j = 0; j < xs.size(); ++j) sshort = std::max(sshort, xs[j] * xs[j] / (2.0 * L));
    CandidateVerdict open_v = judge(dopen, from, stride, std::max(dopen[0], 1e-300));
    CandidateVerdict short_v = judge(dshort, from, stride, std::max(sshort, 1e-300));
    pr.verdict = FixedPoint::NoLimit;
    if (open_v.passes) pr.verdict = FixedPoint::OpenCircuit;
    if (short_v.passes && short_v.rel < open_v.rel) pr.verdict = FixedPoint::ShortCircuit;
    return pr;
}

AsymmetricResult asymmetric_study(double a, double b, double L, const Eigen::VectorXd& cprimes,
                                  const Eigen::VectorXd& phi_grid, double c_slow, int jobs) {
    if (a < 0.0 || !(b > 0.0)) throw domain_error("asymmetric_study: need a >= 0, b > 0");
    const int nc = static_cast<int>(cprimes.size());
    if (nc < 3) throw domain_error("asymmetric_study: need a C' sweep");

    const PotentialSpec spec(PiecewiseLinear{a, b});
    AsymmetricResult ar;
    ar.cprimes = cprimes;
    ar.c1.resize(nc);
    ar.c2.resize(nc);
    ar.phi_zpf.resize(nc);
    ar.phi_m.resize(nc);
    ar.delta_phi.resize(nc);
    ar.c1_predicted = 0.5 * a * b;

    for (int c = 0; c < nc; ++c) {
        BoCurve curve = bo_potential(L, spec, cprimes[c], phi_grid, jobs);
        Eigen::MatrixXd X(phi_grid.size(), 2);
        X.col(0) = phi_grid;
        X.col(1) = phi_grid.cwiseProduct(phi_grid);
        const Eigen::Vector2d fit = X.colPivHouseholderQr().solve(curve.ubo);
        ar.c1[c] = fit[0];
        ar.c2[c] = fit[1];
        ar.phi_zpf[c] = FastScales::from(L, cprimes[c]).phi_zpf;
        if (fit[1] > 0.0) {
            ar.phi_m[c] = -fit[0] / (2.0 * fit[1]);
            ar.delta_phi[c] = 1.0 / std::sqrt(2.0 * std::sqrt(2.0 * fit[1] * c_slow));
        } else {
            ar.phi_m[c] = 0.0;
            ar.delta_phi[c] = 0.0;
        }
    }
    ar.c1_extrapolated = aitken_extrapolate(ar.c1, points_per_decade(cprimes));
    return ar;
}

double radius_bound_from_ab(double a, double b, int n) {
    if (!(a > 0.0) || !(b > 0.0) || n < 0) {
        throw domain_error("radius_bound: constants must be positive and n >= 0");
    }
    return 1.0 / (2.0 * a + (3.0 * n + 2.0) * b + 1.0);
}

double radius_bound(double phi, double alpha, int n, double L, double gamma, double beta, double M,
                    double Ap, double Bp) {
    for (double v : {phi, alpha, L, gamma, beta, M, Ap, Bp}) {
        if (!(v > 0.0)) throw domain_error("radius_bound: all constants must be positive");
    }
    if (!(gamma < 2.0)) throw domain_error("radius_bound: gamma must lie in (0, 2)");
    // |y|^gamma <= Bp y^2 + Ap must hold for all y
    const double peak = (1.0 - gamma / 2.0) * std::pow(gamma / (2.0 * Bp), gamma / (2.0 - gamma));
    if (Ap < peak * (1.0 - 1e-12)) {
        throw domain_error("radius_bound: (A', B') do not dominate |y|^gamma");
    }
    const double a = std::pow(alpha, gamma) * M + std::pow(L, gamma / 2.0) * beta * (Ap + 2.0 * Bp);
    const double b = 2.0 * std::pow(L, gamma / 2.0) * beta * Bp;
    return radius_bound_from_ab(a, b, n);
}

}  // namespace qflow::boflow
