#include "qflow/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "qflow/errors.hpp"

namespace qflow {

namespace {

void check_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw domain_error(std::string("potential: ") + name + " must be positive and finite");
    }
}

// Fritsch-Carlson slopes for a C1 monotonicity-preserving cubic.
std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> h(n - 1), delta(n - 1), d(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x[i + 1] - x[i];
        if (!(h[i] > 0.0)) throw domain_error("tabulated potential: flux grid must be strictly increasing");
        delta[i] = (y[i + 1] - y[i]) / h[i];
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            d[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    // one-sided endpoint formulas, clipped to preserve monotonicity
    auto endpoint = [](double h0, double h1, double d0, double d1) {
        double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (s * d0 <= 0.0) s = 0.0;
        else if (d0 * d1 <= 0.0 && std::abs(s) > 3.0 * std::abs(d0)) s = 3.0 * d0;
        return s;
    };
    if (n == 2) {
        d[0] = d[1] = delta[0];
    } else {
        d[0] = endpoint(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = endpoint(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    }
    return d;
}

std::pair<double, double> pchip_eval(const Tabulated& t, double x) {
    if (x < t.phi.front() || x > t.phi.back()) {
        throw domain_error("tabulated potential: evaluation outside the flux grid");
    }
    auto it = std::upper_bound(t.phi.begin(), t.phi.end(), x);
    std::size_t i = (it == t.phi.begin()) ? 0 : static_cast<std::size_t>(it - t.phi.begin()) - 1;
    if (i >= t.phi.size() - 1) i = t.phi.size() - 2;
    const double h = t.phi[i + 1] - t.phi[i];
    const double s = (x - t.phi[i]) / h;
    const double y0 = t.u[i], y1 = t.u[i + 1];
    const double d0 = t.slope[i] * h, d1 = t.slope[i + 1] * h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    const double v = h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1;
    const double dh00 = 6 * s * (s - 1);
    const double dh10 = (1 - s) * (1 - 3 * s);
    const double dh01 = -dh00;
    const double dh11 = s * (3 * s - 2);
    const double dv = (dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1) / h;
    return {v, dv};
}

// Piece index and local exponent bookkeeping for the self-similar form.
std::pair<double, double> self_similar_eval(double y) {
    if (y == 0.0) return {0.0, 0.0};
    const double ay = std::abs(y);
    const double s = std::log10(ay);
    const double k = std::floor(s / 2.0);
    const double frac = s - 2.0 * k;  // in [0, 2)
    const double n = k + 1.0;
    double u, du_dabs;
    if (frac <= 1.0) {
        // inner piece: 10^((3-4n+2s)^3) 10^(8n-7) y^-2
        const double g = 3.0 - 4.0 * n + 2.0 * s;
        u = std::pow(10.0, g * g * g + 8.0 * n - 7.0 - 2.0 * s);
        du_dabs = u * (6.0 * g * g - 2.0) / ay;
    } else {
        // quartic piece: 10^(-4n) y^4
        u = std::pow(10.0, -4.0 * n) * ay * ay * ay * ay;
        du_dabs = 4.0 * u / ay;
    }
    return {u, (y > 0 ? du_dabs : -du_dabs)};
}

struct EvalVisitor {
    double phi;

    std::pair<double, double> operator()(const Quadratic& q) const {
        return {phi * phi / (2.0 * q.L), phi / q.L};
    }
    std::pair<double, double> operator()(const Cosine& c) const {
        return {-c.ej * std::cos(phi + c.offset), c.ej * std::sin(phi + c.offset)};
    }
    std::pair<double, double> operator()(const PowerLaw& p) const {
        const double a = std::abs(phi);
        if (a == 0.0) return {0.0, 0.0};
        const double v = p.beta * std::pow(a, p.gamma);
        const double dv = p.beta * p.gamma * std::pow(a, p.gamma - 1.0);
        const double sg = (phi > 0 ? 1.0 : -1.0);
        if (p.symmetric) return {v, sg * dv};
        return {sg * v, dv};
    }
    std::pair<double, double> operator()(const PiecewiseLinear& p) const {
        if (phi == 0.0) return {0.0, p.a * p.b / 2.0};
        if (phi > 0.0) return {p.b * (1.0 + p.a) * phi, p.b * (1.0 + p.a)};
        return {-p.b * phi, -p.b};
    }
    std::pair<double, double> operator()(const SelfSimilar&) const { return self_similar_eval(phi); }
    std::pair<double, double> operator()(const SumSpec& s) const {
        double v = 0.0, dv = 0.0;
        for (const auto& t : s.terms) {
            auto [tv, tdv] = potential_eval(t, phi);
            v += tv;
            dv += tdv;
        }
        return {v, dv};
    }
    std::pair<double, double> operator()(const Tabulated& t) const { return pchip_eval(t, phi); }
};

}  // namespace

PotentialSpec::PotentialSpec(Quadratic q) : node_(q) { check_positive(q.L, "L"); }

PotentialSpec::PotentialSpec(Cosine c) : node_(c) {
    check_positive(c.ej, "E_J");
    if (!std::isfinite(c.offset)) throw domain_error("potential: cosine offset must be finite");
}

PotentialSpec::PotentialSpec(PowerLaw p) : node_(p) {
    check_positive(p.beta, "beta");
    check_positive(p.gamma, "gamma");
}

PotentialSpec::PotentialSpec(PiecewiseLinear p) : node_(p) {
    check_positive(p.b, "b");
    if (p.a < 0.0 || !std::isfinite(p.a)) throw domain_error("potential: a must be >= 0");
}

PotentialSpec::PotentialSpec(SelfSimilar s) : node_(s) {}

PotentialSpec::PotentialSpec(SumSpec s) : node_(std::move(s)) {
    if (std::get<SumSpec>(node_).terms.empty()) throw domain_error("potential: empty sum");
}

PotentialSpec::PotentialSpec(Tabulated t) : node_(std::move(t)) {}

PotentialSpec PotentialSpec::sum(std::vector<PotentialSpec> terms) {
    return PotentialSpec(SumSpec{std::move(terms)});
}

PotentialSpec PotentialSpec::tabulated(std::vector<double> phi, std::vector<double> u) {
    if (phi.size() != u.size() || phi.size() < 2) {
        throw domain_error("tabulated potential: need matching grids with >= 2 points");
    }
    Tabulated t{std::move(phi), std::move(u), {}};
    t.slope = pchip_slopes(t.phi, t.u);
    return PotentialSpec(std::move(t));
}

double PotentialSpec::value(double phi) const { return potential_eval(*this, phi).first; }
double PotentialSpec::deriv(double phi) const { return potential_eval(*this, phi).second; }

bool PotentialSpec::is_symmetric() const {
    struct V {
        bool operator()(const Quadratic&) const { return true; }
        bool operator()(const Cosine& c) const { return std::abs(std::sin(c.offset)) < 1e-14; }
        bool operator()(const PowerLaw& p) const { return p.symmetric; }
        bool operator()(const PiecewiseLinear& p) const { return p.a == 0.0; }
        bool operator()(const SelfSimilar&) const { return true; }
        bool operator()(const SumSpec& s) const {
            return std::all_of(s.terms.begin(), s.terms.end(),
                               [](const PotentialSpec& t) { return t.is_symmetric(); });
        }
        bool operator()(const Tabulated& t) const {
            const double lo = t.phi.front(), hi = t.phi.back();
            if (std::abs(lo + hi) > 1e-12 * (std::abs(lo) + std::abs(hi))) return false;
            Tabulated copy = t;
            for (int i = 0; i <= 32; ++i) {
                const double x = lo + (hi - lo) * i / 32.0;
                const double scale = 1.0 + std::abs(pchip_eval(copy, x).first);
                if (std::abs(pchip_eval(copy, x).first - pchip_eval(copy, -x).first) > 1e-9 * scale)
                    return false;
            }
            return true;
        }
    };
    return std::visit(V{}, node_);
}

double PotentialSpec::feature_scale() const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    struct V {
        double operator()(const Quadratic&) const { return inf_; }
        double operator()(const Cosine&) const { return 1.0; }
        double operator()(const PowerLaw&) const { return inf_; }
        double operator()(const PiecewiseLinear&) const { return inf_; }
        double operator()(const SelfSimilar&) const { return inf_; }
        double operator()(const SumSpec& s) const {
            double m = inf_;
            for (const auto& t : s.terms) m = std::min(m, t.feature_scale());
            return m;
        }
        double operator()(const Tabulated& t) const {
            double m = inf_;
            for (std::size_t i = 0; i + 1 < t.phi.size(); ++i) m = std::min(m, t.phi[i + 1] - t.phi[i]);
            return m;
        }
        double inf_;
    };
    return std::visit(V{inf}, node_);
}

double PotentialSpec::deriv_bound(double range) const {
    struct V {
        double r;
        double operator()(const Quadratic& q) const { return r / q.L; }
        double operator()(const Cosine& c) const { return c.ej; }
        double operator()(const PowerLaw& p) const {
            return p.beta * p.gamma * std::pow(std::max(r, 1e-300), p.gamma - 1.0);
        }
        double operator()(const PiecewiseLinear& p) const { return p.b * (1.0 + p.a); }
        double operator()(const SelfSimilar&) const {
            return self_similar_eval(std::max(r, 1.0)).first * 6.0 / std::max(r, 1.0);
        }
        double operator()(const SumSpec& s) const {
            double b = 0.0;
            for (const auto& t : s.terms) b += t.deriv_bound(r);
            return b;
        }
        double operator()(const Tabulated& t) const {
            double m = 0.0;
            for (double d : t.slope) m = std::max(m, std::abs(d));
            return m;
        }
    };
    return std::visit(V{range}, node_);
}

std::pair<double, double> potential_eval(const PotentialSpec& spec, double phi) {
    if (!std::isfinite(phi)) throw domain_error("potential_eval: flux must be finite");
    return std::visit(EvalVisitor{phi}, spec.node());
}

namespace {

using nlohmann::json;

json to_json_impl(const PotentialSpec& spec) {
    struct V {
        json operator()(const Quadratic& q) const { return {{"variant", "quadratic"}, {"L", q.L}}; }
        json operator()(const Cosine& c) const {
            return {{"variant", "cosine"}, {"ej", c.ej}, {"offset", c.offset}};
        }
        json operator()(const PowerLaw& p) const {
            return {{"variant", "powerlaw"}, {"beta", p.beta}, {"gamma", p.gamma},
                    {"symmetric", p.symmetric}};
        }
        json operator()(const PiecewiseLinear& p) const {
            return {{"variant", "pwlinear"}, {"a", p.a}, {"b", p.b}};
        }
        json operator()(const SelfSimilar&) const { return {{"variant", "selfsimilar"}}; }
        json operator()(const SumSpec& s) const {
            json terms = json::array();
            for (const auto& t : s.terms) terms.push_back(to_json_impl(t));
            return {{"variant", "sum"}, {"terms", terms}};
        }
        json operator()(const Tabulated& t) const {
            return {{"variant", "tabulated"}, {"phi", t.phi}, {"u", t.u}};
        }
    };
    return std::visit(V{}, spec.node());
}

PotentialSpec from_json_impl(const json& j) {
    const std::string variant = j.at("variant").get<std::string>();
    if (variant == "quadratic") return PotentialSpec(Quadratic{j.at("L").get<double>()});
    if (variant == "cosine")
        return PotentialSpec(Cosine{j.at("ej").get<double>(), j.value("offset", 0.0)});
    if (variant == "powerlaw")
        return PotentialSpec(PowerLaw{j.at("beta").get<double>(), j.at("gamma").get<double>(),
                                      j.value("symmetric", true)});
    if (variant == "pwlinear")
        return PotentialSpec(PiecewiseLinear{j.at("a").get<double>(), j.at("b").get<double>()});
    if (variant == "selfsimilar") return PotentialSpec(SelfSimilar{});
    if (variant == "sum") {
        std::vector<PotentialSpec> terms;
        for (const auto& t : j.at("terms")) terms.push_back(from_json_impl(t));
        return PotentialSpec::sum(std::move(terms));
    }
    if (variant == "tabulated")
        return PotentialSpec::tabulated(j.at("phi").get<std::vector<double>>(),
                                        j.at("u").get<std::vector<double>>());
    throw domain_error("unknown potential variant: " + variant);
}

}  // namespace

std::string potential_to_json(const PotentialSpec& spec) { return to_json_impl(spec).dump(); }

PotentialSpec potential_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw domain_error(std::string("potential JSON parse error: ") + e.what());
    }
    return from_json_impl(j);
}

}  // namespace qflow
