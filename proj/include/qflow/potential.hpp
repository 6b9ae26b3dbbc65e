#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace qflow {

class PotentialSpec;

// U(phi) = phi^2 / 2L
struct Quadratic {
    double L;
};

// U(phi) = -E_J cos(phi + offset)
struct Cosine {
    double ej;
    double offset = 0.0;
};

// symmetric:  U(phi) = beta |phi|^gamma
// asymmetric: U(phi) = sign(phi) beta |phi|^gamma
struct PowerLaw {
    double beta;
    double gamma;
    bool symmetric = true;
};

// U(phi) = b [1 + a Theta(phi)] |phi|
struct PiecewiseLinear {
    double a;
    double b;
};

// Fixed multi-scale form, self-similar under U(100 y) = 1e4 U(y):
//   U(y) = 10^((3-4n+2*log10|y|)^3) * 10^(8n-7) / y^2   for 1e(2n-2) <= |y| <= 1e(2n-1)
//   U(y) = 10^(-4n) y^4                                 for 1e(2n-1) <= |y| <= 1e(2n)
struct SelfSimilar {};

struct SumSpec {
    std::vector<PotentialSpec> terms;
};

// C1 monotone cubic interpolation inside [phi.front(), phi.back()];
// evaluation outside the grid is an error.
struct Tabulated {
    std::vector<double> phi;
    std::vector<double> u;
    std::vector<double> slope;  // Fritsch-Carlson endpoint slopes, filled on construction
};

class PotentialSpec {
  public:
    using Node = std::variant<Quadratic, Cosine, PowerLaw, PiecewiseLinear, SelfSimilar,
                              SumSpec, Tabulated>;

    PotentialSpec(Quadratic q);
    PotentialSpec(Cosine c);
    PotentialSpec(PowerLaw p);
    PotentialSpec(PiecewiseLinear p);
    PotentialSpec(SelfSimilar s);
    PotentialSpec(SumSpec s);
    PotentialSpec(Tabulated t);

    static PotentialSpec sum(std::vector<PotentialSpec> terms);
    static PotentialSpec tabulated(std::vector<double> phi, std::vector<double> u);

    double value(double phi) const;
    double deriv(double phi) const;

    // U(phi) = U(-phi) structurally (Tabulated is checked numerically).
    bool is_symmetric() const;

    // Smallest length scale over which U oscillates; +inf for smooth
    // monotone-tail variants. Used to pick grid resolutions.
    double feature_scale() const;

    // Bound on |U'| over |phi| <= range, for root-scan windows.
    double deriv_bound(double range) const;

    const Node& node() const { return node_; }

  private:
    Node node_;
};

// (U(phi), U'(phi)); Sum distributes linearly.
std::pair<double, double> potential_eval(const PotentialSpec& spec, double phi);

// JSON wire form, e.g. {"variant":"cosine","ej":1.0,"offset":0.0}.
std::string potential_to_json(const PotentialSpec& spec);
PotentialSpec potential_from_json(const std::string& text);

}  // namespace qflow
