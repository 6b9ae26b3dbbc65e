#include "qflow/netlist.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <sstream>

#include "qflow/errors.hpp"
#include "qflow/units.hpp"

namespace qflow {

namespace {

struct Token {
    std::string text;
    int col;  // 1-based
};

struct Line {
    int number;
    std::vector<Token> tokens;
};

[[noreturn]] void fail(int line, int col, const std::string& msg) {
    throw domain_error("netlist: line " + std::to_string(line) + ", col " + std::to_string(col) +
                       ": " + msg);
}

std::vector<Line> tokenize(const std::string& text) {
    std::vector<Line> lines;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        Line line{lineno, {}};
        std::size_t i = 0;
        while (i < raw.size()) {
            if (std::isspace(static_cast<unsigned char>(raw[i]))) {
                ++i;
                continue;
            }
            if (raw[i] == '#') break;
            std::size_t j = i;
            while (j < raw.size() && !std::isspace(static_cast<unsigned char>(raw[j]))) ++j;
            line.tokens.push_back({raw.substr(i, j - i), static_cast<int>(i) + 1});
            i = j;
        }
        if (!line.tokens.empty()) lines.push_back(std::move(line));
    }
    return lines;
}

double parse_number(const Token& t, int line) {
    char* end = nullptr;
    const double v = std::strtod(t.text.c_str(), &end);
    if (end != t.text.c_str() + t.text.size() || t.text.empty() || !std::isfinite(v)) {
        fail(line, t.col, "expected a number, got '" + t.text + "'");
    }
    return v;
}

int parse_node(const Token& t, int line) {
    for (char c : t.text)
        if (!std::isdigit(static_cast<unsigned char>(c))) fail(line, t.col, "expected a node index, got '" + t.text + "'");
    return std::stoi(t.text);
}

// key=value pairs after the positional tokens
struct KeyVals {
    std::map<std::string, Token> kv;
    int line;

    std::optional<std::string> raw(const std::string& key) const {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return it->second.text;
    }
    double number(const std::string& key) const {
        auto it = kv.find(key);
        if (it == kv.end()) fail(line, 1, "missing required key '" + key + "'");
        return parse_number(it->second, line);
    }
    std::optional<double> opt_number(const std::string& key) const {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return parse_number(it->second, line);
    }
};

KeyVals parse_keyvals(const std::vector<Token>& tokens, std::size_t from, int line) {
    KeyVals out{{}, line};
    for (std::size_t i = from; i < tokens.size(); ++i) {
        const auto& t = tokens[i];
        auto eq = t.text.find('=');
        if (eq == std::string::npos || eq == 0) fail(line, t.col, "expected key=value, got '" + t.text + "'");
        const std::string key = t.text.substr(0, eq);
        if (out.kv.count(key)) fail(line, t.col, "duplicate key '" + key + "'");
        out.kv.emplace(key, Token{t.text.substr(eq + 1), t.col});
    }
    return out;
}

struct Scales {
    double cap = 1.0;     // internal = SI * cap
    double ind = 1.0;
    double energy = 1.0;
    double conductance = 1.0;
    double flux_phase = 1.0;  // weber -> radians
    double energy_unit_J = 1.0;
    double time_unit_s = 1.0;
};

void check_positive_value(double v, int line, int col, const char* what) {
    if (!(v > 0.0)) fail(line, col, std::string("non-positive ") + what + " value");
}

PotentialSpec parse_nl_spec(const std::vector<Token>& tokens, int line, const Scales& s,
                            bool si_units) {
    const std::string& variant = tokens[3].text;
    KeyVals kv = parse_keyvals(tokens, 4, line);
    if (variant == "quadratic") {
        return PotentialSpec(Quadratic{kv.number("L") * s.ind});
    }
    if (variant == "cosine") {
        return PotentialSpec(Cosine{kv.number("EJ") * s.energy, kv.opt_number("offset").value_or(0.0)});
    }
    if (variant == "powerlaw") {
        const double gamma = kv.number("gamma");
        if (!(gamma > 0.0)) fail(line, tokens[3].col, "powerlaw needs gamma > 0");
        const double p0 = si_units ? units::si_phi0 / (2.0 * M_PI) : 1.0;
        const double beta = kv.number("beta") * s.energy * std::pow(p0, gamma);
        const bool symmetric = kv.opt_number("symmetric").value_or(1.0) != 0.0;
        return PotentialSpec(PowerLaw{beta, gamma, symmetric});
    }
    if (variant == "pwl") {
        const double b = kv.number("b") * s.energy * (si_units ? units::si_phi0 / (2.0 * M_PI) : 1.0);
        return PotentialSpec(PiecewiseLinear{kv.number("a"), b});
    }
    if (variant == "selfsimilar") {
        if (si_units) fail(line, tokens[3].col, "selfsimilar is defined in reduced units only");
        return PotentialSpec(SelfSimilar{});
    }
    if (variant == "linpluscos") {
        std::vector<PotentialSpec> terms;
        terms.emplace_back(Quadratic{kv.number("L") * s.ind});
        terms.emplace_back(Cosine{kv.number("EJ") * s.energy, kv.opt_number("offset").value_or(0.0)});
        return PotentialSpec::sum(std::move(terms));
    }
    if (variant == "spec") {
        if (si_units) fail(line, tokens[3].col, "inline JSON specs are reduced-units only");
        auto raw = kv.raw("json");
        if (!raw) fail(line, tokens[3].col, "variant 'spec' needs json=<compact-json>");
        return potential_from_json(*raw);
    }
    fail(line, tokens[3].col, "unknown inductor variant '" + variant + "'");
}

struct RawNetlist {
    std::vector<Line> element_lines;
    bool si = false;
    std::optional<int> ground;
};

}  // namespace

double Netlist::loop_phase(const std::string& id) const {
    auto it = loop_flux.find(id);
    if (it == loop_flux.end()) throw domain_error("netlist: unknown flux loop '" + id + "'");
    return it->second;
}

Netlist parse_netlist(const std::string& text) {
    const std::vector<Line> lines = tokenize(text);

    bool units_seen = false;
    bool si = false;
    std::optional<int> ground;
    int ground_line = 0;
    std::vector<const Line*> elements;

    for (const auto& line : lines) {
        const std::string& head = line.tokens[0].text;
        if (head == "units") {
            if (units_seen) fail(line.number, line.tokens[0].col, "duplicate units header");
            if (line.tokens.size() != 2) fail(line.number, line.tokens[0].col, "usage: units si|reduced");
            if (line.tokens[1].text == "si") si = true;
            else if (line.tokens[1].text == "reduced") si = false;
            else fail(line.number, line.tokens[1].col, "unit system must be 'si' or 'reduced'");
            units_seen = true;
        } else if (head == "gnd") {
            if (ground) fail(line.number, line.tokens[0].col, "duplicate ground redefinition (first on line " + std::to_string(ground_line) + ")");
            if (line.tokens.size() != 2) fail(line.number, line.tokens[0].col, "usage: gnd <node>");
            ground = parse_node(line.tokens[1], line.number);
            ground_line = line.number;
        } else {
            elements.push_back(&line);
        }
    }

    // First pass over SI values to pick the energy normalization: the
    // largest capacitance maps to 1 (falls back to the largest inductance,
    // then to 1 GHz) so that typical element values stay O(1).
    Scales sc;
    if (si) {
        const double q0 = 2.0 * units::si_e;
        const double p0 = units::si_phi0 / (2.0 * M_PI);
        double cmax = 0.0, lmax = 0.0;
        for (const Line* lp : elements) {
            const auto& t = lp->tokens;
            if (t[0].text == "C" && t.size() >= 4) cmax = std::max(cmax, parse_number(t[3], lp->number));
            if (t[0].text == "L" && t.size() >= 4) lmax = std::max(lmax, parse_number(t[3], lp->number));
            if (t[0].text == "JJ") {
                KeyVals kv = parse_keyvals(t, 3, lp->number);
                if (auto c = kv.opt_number("Cint")) cmax = std::max(cmax, *c);
            }
        }
        double energy_unit;
        if (cmax > 0.0) energy_unit = q0 * q0 / cmax;
        else if (lmax > 0.0) energy_unit = p0 * p0 / lmax;
        else energy_unit = units::si_hbar * 2.0 * M_PI * 1e9;
        sc.energy_unit_J = energy_unit;
        sc.time_unit_s = units::si_hbar / energy_unit;
        sc.energy = 1.0 / energy_unit;
        sc.cap = energy_unit / (q0 * q0);
        sc.ind = energy_unit / (p0 * p0);
        sc.conductance = p0 * p0 / units::si_hbar;
        sc.flux_phase = 1.0 / p0;
    }

    Netlist net;
    net.units = si ? UnitSystem::SI : UnitSystem::Reduced;
    net.energy_unit = sc.energy_unit_J;
    net.time_unit = sc.time_unit_s;

    int max_node = 0;
    std::vector<int> flux_tag_lines;
    for (const Line* lp : elements) {
        const auto& t = lp->tokens;
        const int ln = lp->number;
        const std::string& head = t[0].text;
        Branch br;

        auto need = [&](std::size_t n, const char* usage) {
            if (t.size() < n) fail(ln, t[0].col, std::string("usage: ") + usage);
        };

        if (head == "C") {
            need(4, "C <n+> <n-> <farads>");
            br.n_plus = parse_node(t[1], ln);
            br.n_minus = parse_node(t[2], ln);
            const double c = parse_number(t[3], ln) * sc.cap;
            check_positive_value(c, ln, t[3].col, "capacitance");
            br.kind = CapacitorBr{c};
        } else if (head == "L") {
            need(4, "L <n+> <n-> <henries> [loop=<id>]");
            br.n_plus = parse_node(t[1], ln);
            br.n_minus = parse_node(t[2], ln);
            const double l = parse_number(t[3], ln) * sc.ind;
            check_positive_value(l, ln, t[3].col, "inductance");
            KeyVals kv = parse_keyvals(t, 4, ln);
            br.kind = InductorBr{PotentialSpec(Quadratic{l}), kv.raw("loop").value_or("")};
        } else if (head == "JJ") {
            need(3, "JJ <n+> <n-> EJ=<joules> Cint=<farads>");
            br.n_plus = parse_node(t[1], ln);
            br.n_minus = parse_node(t[2], ln);
            KeyVals kv = parse_keyvals(t, 3, ln);
            const double ej = kv.number("EJ") * sc.energy;
            check_positive_value(ej, ln, t[0].col, "Josephson energy");
            const double cint = kv.opt_number("Cint").value_or(0.0) * sc.cap;
            if (cint < 0.0) fail(ln, t[0].col, "non-positive intrinsic capacitance value");
            br.kind = JosephsonBr{ej, cint, kv.raw("loop").value_or("")};
        } else if (head == "NL") {
            need(4, "NL <n+> <n-> <variant> key=val...");
            br.n_plus = parse_node(t[1], ln);
            br.n_minus = parse_node(t[2], ln);
            KeyVals kv = parse_keyvals(t, 4, ln);
            PotentialSpec spec = parse_nl_spec(t, ln, sc, si);
            br.kind = InductorBr{std::move(spec), kv.raw("loop").value_or("")};
        } else if (head == "GYR") {
            need(6, "GYR <na+> <na-> <nb+> <nb-> G=<siemens>");
            br.n_plus = parse_node(t[1], ln);
            br.n_minus = parse_node(t[2], ln);
            KeyVals kv = parse_keyvals(t, 5, ln);
            const double g = kv.number("G") * sc.conductance;
            if (g == 0.0) fail(ln, t[0].col, "non-positive gyration conductance value");
            br.kind = GyratorBr{g, parse_node(t[3], ln), parse_node(t[4], ln)};
        } else if (head == "FLUX") {
            KeyVals kv = parse_keyvals(t, 1, ln);
            auto loop = kv.raw("loop");
            if (!loop || loop->empty()) fail(ln, t[0].col, "FLUX needs loop=<id>");
            if (net.loop_flux.count(*loop)) fail(ln, t[0].col, "duplicate flux loop '" + *loop + "'");
            const double phase = kv.number("phi") * sc.flux_phase;
            net.loop_flux[*loop] = phase;
            br.kind = FluxTagBr{*loop, phase};
            net.branches.push_back(std::move(br));
            flux_tag_lines.push_back(ln);
            continue;
        } else {
            fail(ln, t[0].col, "unknown element '" + head + "'");
        }

        if (br.n_plus == br.n_minus) fail(ln, t[1].col, "branch endpoints must be distinct");
        max_node = std::max({max_node, br.n_plus, br.n_minus});
        if (const auto* g = std::get_if<GyratorBr>(&br.kind)) {
            if (g->nb_plus == g->nb_minus) fail(ln, t[3].col, "gyrator port endpoints must be distinct");
            max_node = std::max({max_node, g->nb_plus, g->nb_minus});
        }
        net.branches.push_back(std::move(br));
    }

    // ground remap: gnd <n> makes node n the reference (index 0)
    if (ground) {
        const int g = *ground;
        if (g > max_node) throw domain_error("netlist: ground node " + std::to_string(g) + " not present");
        auto remap = [g](int n) { return n == g ? 0 : (n < g ? n + 1 : n); };
        if (g != 0) {
            for (auto& br : net.branches) {
                if (std::holds_alternative<FluxTagBr>(br.kind)) continue;
                br.n_plus = remap(br.n_plus);
                br.n_minus = remap(br.n_minus);
                if (auto* gy = std::get_if<GyratorBr>(&br.kind)) {
                    gy->nb_plus = remap(gy->nb_plus);
                    gy->nb_minus = remap(gy->nb_minus);
                }
            }
        }
    }

    net.node_count = max_node + 1;

    // dense node indices and connectivity to ground
    std::vector<char> seen(net.node_count, 0);
    std::vector<int> parent(net.node_count);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
    for (const auto& br : net.branches) {
        if (std::holds_alternative<FluxTagBr>(br.kind)) continue;
        seen[br.n_plus] = seen[br.n_minus] = 1;
        unite(br.n_plus, br.n_minus);
        if (const auto* g = std::get_if<GyratorBr>(&br.kind)) {
            seen[g->nb_plus] = seen[g->nb_minus] = 1;
            unite(g->nb_plus, g->nb_minus);
            unite(br.n_plus, g->nb_plus);
        }
    }
    for (int n = 0; n < net.node_count; ++n) {
        if (!seen[n]) throw domain_error("netlist: dangling node " + std::to_string(n) + " (indices must be dense)");
        if (find(n) != find(0)) throw domain_error("netlist: node " + std::to_string(n) + " is not connected to ground");
    }

    // every referenced loop must be declared
    for (const auto& br : net.branches) {
        const std::string* loop = nullptr;
        if (const auto* i = std::get_if<InductorBr>(&br.kind)) loop = &i->loop;
        if (const auto* j = std::get_if<JosephsonBr>(&br.kind)) loop = &j->loop;
        if (loop && !loop->empty() && !net.loop_flux.count(*loop)) {
            throw domain_error("netlist: branch references undeclared flux loop '" + *loop + "'");
        }
    }
    return net;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void serialize_spec(std::ostringstream& out, const PotentialSpec& spec) {
    struct V {
        std::ostringstream& out;
        void operator()(const Quadratic& q) const { out << "quadratic L=" << fmt(q.L); }
        void operator()(const Cosine& c) const {
            out << "cosine EJ=" << fmt(c.ej);
            if (c.offset != 0.0) out << " offset=" << fmt(c.offset);
        }
        void operator()(const PowerLaw& p) const {
            out << "powerlaw beta=" << fmt(p.beta) << " gamma=" << fmt(p.gamma)
                << " symmetric=" << (p.symmetric ? 1 : 0);
        }
        void operator()(const PiecewiseLinear& p) const {
            out << "pwl a=" << fmt(p.a) << " b=" << fmt(p.b);
        }
        void operator()(const SelfSimilar&) const { out << "selfsimilar"; }
        void operator()(const SumSpec&) const {}
        void operator()(const Tabulated&) const {}
    };
    const auto& n = spec.node();
    if (std::holds_alternative<SumSpec>(n) || std::holds_alternative<Tabulated>(n)) {
        out << "spec json=" << potential_to_json(spec);
    } else {
        std::visit(V{out}, n);
    }
}

}  // namespace

std::string serialize_netlist(const Netlist& net) {
    std::ostringstream out;
    out << "units reduced\n";
    for (const auto& br : net.branches) {
        struct V {
            std::ostringstream& out;
            const Branch& br;
            void operator()(const CapacitorBr& c) const {
                out << "C " << br.n_plus << " " << br.n_minus << " " << fmt(c.c) << "\n";
            }
            void operator()(const InductorBr& i) const {
                out << "NL " << br.n_plus << " " << br.n_minus << " ";
                serialize_spec(out, i.spec);
                if (!i.loop.empty()) out << " loop=" << i.loop;
                out << "\n";
            }
            void operator()(const JosephsonBr& j) const {
                out << "JJ " << br.n_plus << " " << br.n_minus << " EJ=" << fmt(j.ej)
                    << " Cint=" << fmt(j.cint);
                if (!j.loop.empty()) out << " loop=" << j.loop;
                out << "\n";
            }
            void operator()(const GyratorBr& g) const {
                out << "GYR " << br.n_plus << " " << br.n_minus << " " << g.nb_plus << " "
                    << g.nb_minus << " G=" << fmt(g.g) << "\n";
            }
            void operator()(const FluxTagBr& f) const {
                out << "FLUX loop=" << f.loop << " phi=" << fmt(f.phi) << "\n";
            }
        };
        std::visit(V{out, br}, br.kind);
    }
    return out.str();
}

bool operator==(const Netlist& a, const Netlist& b) {
    if (a.node_count != b.node_count || a.branches.size() != b.branches.size()) return false;
    if (a.loop_flux != b.loop_flux) return false;
    for (std::size_t i = 0; i < a.branches.size(); ++i) {
        const auto& x = a.branches[i];
        const auto& y = b.branches[i];
        if (x.n_plus != y.n_plus || x.n_minus != y.n_minus) return false;
        if (x.kind.index() != y.kind.index()) return false;
        if (const auto* c = std::get_if<CapacitorBr>(&x.kind)) {
            if (c->c != std::get<CapacitorBr>(y.kind).c) return false;
        } else if (const auto* l = std::get_if<InductorBr>(&x.kind)) {
            const auto& m = std::get<InductorBr>(y.kind);
            if (l->loop != m.loop || potential_to_json(l->spec) != potential_to_json(m.spec)) return false;
        } else if (const auto* j = std::get_if<JosephsonBr>(&x.kind)) {
            const auto& m = std::get<JosephsonBr>(y.kind);
            if (j->ej != m.ej || j->cint != m.cint || j->loop != m.loop) return false;
        } else if (const auto* g = std::get_if<GyratorBr>(&x.kind)) {
            const auto& m = std::get<GyratorBr>(y.kind);
            if (g->g != m.g || g->nb_plus != m.nb_plus || g->nb_minus != m.nb_minus) return false;
        } else if (const auto* f = std::get_if<FluxTagBr>(&x.kind)) {
            const auto& m = std::get<FluxTagBr>(y.kind);
            if (f->loop != m.loop || f->phi != m.phi) return false;
        }
    }
    return true;
}

}  // namespace qflow
