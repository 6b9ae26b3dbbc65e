#include "qflow/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "qflow/boflow.hpp"
#include "qflow/diracberg.hpp"
#include "qflow/errors.hpp"
#include "qflow/lagrangian.hpp"
#include "qflow/netlist.hpp"
#include "qflow/nonrecip.hpp"
#include "qflow/snail.hpp"
#include "qflow/spectral.hpp"
#include "qflow/units.hpp"

namespace qflow::cli {

namespace {

using nlohmann::json;

constexpr const char* kSchemaVersion = "1";

std::string fmt12(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12e", v);
    return buf;
}

uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw domain_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// "a:b" or "a:b:n"; geometric spacing, descending
Eigen::VectorXd parse_log_range(const std::string& text, int default_ppd = 2) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() < 2 || parts.size() > 3) throw domain_error("malformed range '" + text + "' (want lo:hi[:n])");
    const double a = std::strtod(parts[0].c_str(), nullptr);
    const double b = std::strtod(parts[1].c_str(), nullptr);
    if (!(a > 0.0) || !(b > 0.0)) throw domain_error("log range endpoints must be positive: " + text);
    const double hi = std::max(a, b), lo = std::min(a, b);
    int n;
    if (parts.size() == 3) {
        n = std::atoi(parts[2].c_str());
    } else {
        n = static_cast<int>(std::lround(std::log10(hi / lo) * default_ppd)) + 1;
    }
    if (n < 2) throw domain_error("range needs at least 2 points: " + text);
    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i) {
        out[i] = hi * std::pow(lo / hi, static_cast<double>(i) / (n - 1));
    }
    return out;
}

Eigen::VectorXd parse_lin_range(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 3) throw domain_error("malformed range '" + text + "' (want lo:hi:n)");
    const double a = std::strtod(parts[0].c_str(), nullptr);
    const double b = std::strtod(parts[1].c_str(), nullptr);
    const int n = std::atoi(parts[2].c_str());
    if (n < 2) throw domain_error("range needs at least 2 points: " + text);
    return Eigen::VectorXd::LinSpaced(n, a, b);
}

Eigen::VectorXd parse_list(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) vals.push_back(std::strtod(item.c_str(), nullptr));
    if (vals.empty()) throw domain_error("empty list");
    return Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
}

struct OutputSet {
    std::filesystem::path dir;
    json sidecar;
    std::vector<std::string> files;

    explicit OutputSet(const std::string& out) : dir(out) {
        std::filesystem::create_directories(dir);
        sidecar["schema_version"] = kSchemaVersion;
    }
    std::string csv_path(const std::string& stem) const { return (dir / (stem + ".csv")).string(); }

    void write_csv(const std::string& stem, const std::vector<std::string>& cols,
                   const std::vector<std::vector<double>>& rows) {
        const std::string path = csv_path(stem);
        std::ofstream out(path, std::ios::binary);
        for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
        out << "\n";
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << fmt12(row[i]);
            out << "\n";
        }
        files.push_back(path);
        json meta;
        meta["file"] = path;
        meta["columns"] = cols;
        meta["rows"] = rows.size();
        sidecar["tables"].push_back(meta);
    }

    void finish(const std::string& stem, const std::string& command, const std::string& hash,
                double seconds) {
        sidecar["command"] = command;
        sidecar["config_hash"] = hash;
        sidecar["wall_seconds"] = seconds;
        sidecar["files"] = files;
        const std::string path = (dir / (stem + ".json")).string();
        std::ofstream out(path, std::ios::binary);
        out << sidecar.dump(2) << "\n";
        files.push_back(path);
    }
};

// spec JSON from a file path or inline text
PotentialSpec load_spec(const std::string& arg) {
    if (!arg.empty() && (arg.front() == '{' || arg.front() == '[')) return potential_from_json(arg);
    return potential_from_json(read_file(arg));
}

// the series circuit behind the flow studies: C shunting node 1, inductance
// L from 1 to 2, the probed inductor from 2 to ground
struct SeriesPattern {
    double cap = 0.0;
    double L = 0.0;
    PotentialSpec spec{Quadratic{1.0}};
    double cprime_nominal = 0.0;
};

SeriesPattern extract_series(const Netlist& net) {
    if (net.node_count != 3) {
        throw domain_error("expected the two-node series circuit (shunt C, series L, probed inductor)");
    }
    SeriesPattern sp;
    int series_plus = -1, series_minus = -1;
    bool have_series = false;
    for (const auto& br : net.branches) {
        const bool internal = br.n_plus != 0 && br.n_minus != 0;
        if (internal) {
            const auto* ind = std::get_if<InductorBr>(&br.kind);
            if (!ind || !std::holds_alternative<Quadratic>(ind->spec.node()) || have_series) {
                throw domain_error("the branch between the two nodes must be a single linear inductance");
            }
            sp.L = std::get<Quadratic>(ind->spec.node()).L;
            series_plus = br.n_plus;
            series_minus = br.n_minus;
            have_series = true;
        }
    }
    if (!have_series) throw domain_error("no series inductance between the two nodes");
    (void)series_plus;
    (void)series_minus;

    int fast_node = -1;
    bool have_spec = false;
    for (const auto& br : net.branches) {
        if (br.n_plus != 0 && br.n_minus != 0) continue;
        const int node = br.n_plus != 0 ? br.n_plus : br.n_minus;
        if (const auto* ind = std::get_if<InductorBr>(&br.kind)) {
            if (have_spec) throw domain_error("exactly one grounded inductor may be probed");
            sp.spec = ind->spec;
            fast_node = node;
            have_spec = true;
        } else if (const auto* jj = std::get_if<JosephsonBr>(&br.kind)) {
            if (have_spec) throw domain_error("exactly one grounded inductor may be probed");
            sp.spec = PotentialSpec(Cosine{jj->ej, jj->loop.empty() ? 0.0 : net.loop_phase(jj->loop)});
            sp.cprime_nominal = jj->cint;
            fast_node = node;
            have_spec = true;
        }
    }
    if (!have_spec) throw domain_error("no grounded inductor to probe");

    for (const auto& br : net.branches) {
        const auto* c = std::get_if<CapacitorBr>(&br.kind);
        if (!c) continue;
        if (br.n_plus != 0 && br.n_minus != 0) throw domain_error("capacitors must be grounded in this pattern");
        const int node = br.n_plus != 0 ? br.n_plus : br.n_minus;
        if (node == fast_node) sp.cprime_nominal += c->c;
        else sp.cap += c->c;
    }
    if (!(sp.cap > 0.0)) throw domain_error("the slow node needs a shunting capacitance");
    return sp;
}

int jobs_from_env(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("QFLOW_JOBS")) {
        const int j = std::atoi(env);
        if (j > 0) return j;
    }
    return 1;
}

}  // namespace

std::string config_hash(const std::vector<std::string>& parts) {
    std::string all;
    for (const auto& p : parts) {
        all += p;
        all += '\x1f';
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(all)));
    return buf;
}

namespace {

struct CommonOpts {
    std::string out = ".";
    int jobs = 0;
    bool dry_run = false;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--jobs", c.jobs, "sweep parallelism (default: QFLOW_JOBS or 1)");
    cmd->add_flag("--dry-run", c.dry_run, "validate inputs without computing");
}

}  // namespace

int run(const std::vector<std::string>& args, RunReport* report) {
    const auto t0 = std::chrono::steady_clock::now();
    RunReport local;
    RunReport& rep = report ? *report : local;
    {
        std::string echo = "qflow";
        for (const auto& a : args) echo += " " + a;
        rep.command_echo = echo;
    }
    auto finish = [&](int code) {
        rep.exit_code = code;
        rep.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return code;
    };

    CLI::App app{"quantization of nearly singular superconducting circuits"};
    app.require_subcommand(1);

    // reduce
    auto* cmd_reduce = app.add_subcommand("reduce", "constrained reduction of a netlist");
    std::string reduce_netlist;
    CommonOpts reduce_c;
    cmd_reduce->add_option("netlist", reduce_netlist, "netlist file")->required();
    add_common(cmd_reduce, reduce_c);

    // bo-sweep
    auto* cmd_bo = app.add_subcommand("bo-sweep", "Born-Oppenheimer flow sweep of a series circuit");
    std::string bo_netlist, bo_cprime = "1e0:1e-6", bo_phi = "-6.2831853:6.2831853:33";
    CommonOpts bo_c;
    cmd_bo->add_option("netlist", bo_netlist, "netlist file")->required();
    cmd_bo->add_option("--cprime", bo_cprime, "intrinsic-capacitance sweep lo:hi[:n]");
    cmd_bo->add_option("--phi", bo_phi, "flux grid lo:hi:n");
    add_common(cmd_bo, bo_c);

    // classify
    auto* cmd_classify = app.add_subcommand("classify", "tail classification of an inductor spec");
    std::string classify_spec;
    CommonOpts classify_c;
    cmd_classify->add_option("--spec", classify_spec, "potential spec (JSON file or inline)")->required();
    add_common(cmd_classify, classify_c);

    // kepler
    auto* cmd_kepler = app.add_subcommand("kepler", "branches of the series-junction constraint");
    double kepler_beta = 0.0, kepler_phi = 0.0, kepler_L = 1.0;
    std::string kepler_window;
    CommonOpts kepler_c;
    cmd_kepler->add_option("--beta", kepler_beta, "screening parameter")->required();
    cmd_kepler->add_option("--phi", kepler_phi, "slow flux (radians)")->required();
    cmd_kepler->add_option("--L", kepler_L, "series inductance (reduced)");
    cmd_kepler->add_option("--window", kepler_window, "scan window lo:hi (default automatic)");
    add_common(cmd_kepler, kepler_c);

    // snail
    auto* cmd_snail = app.add_subcommand("snail", "two-junction loop approximations");
    std::string snail_params, snail_mode = "cl", snail_x1 = "-2.5:2.5:21";
    int snail_M = 32;
    CommonOpts snail_c;
    cmd_snail->add_option("--params", snail_params, "parameter JSON (file or inline)")->required();
    cmd_snail->add_option("--mode", snail_mode, "cl|ho|charge|2d");
    cmd_snail->add_option("--x1", snail_x1, "slow-phase grid lo:hi:n");
    cmd_snail->add_option("--M", snail_M, "charge-basis truncation");
    add_common(cmd_snail, snail_c);

    // gyrator
    auto* cmd_gyr = app.add_subcommand("gyrator", "nonreciprocal reductions");
    std::string gyr_study, gyr_spec, gyr_c2 = "1e0:1e-6";
    double gyr_G = 1.0, gyr_L1 = 1.0, gyr_C1 = 1.0, gyr_q2 = 0.0, gyr_cap = 1.0;
    double gyr_g1 = 1.0, gyr_g2 = 2.0, gyr_cconst = 0.0, gyr_regcap = 0.0;
    double gyr_ej1 = 1.0, gyr_ej2 = 1.0;
    int gyr_n = 256, gyr_windows = 2;
    CommonOpts gyr_c;
    cmd_gyr->add_option("--study", gyr_study, "cap|ind|flow|mathieu|transformer")->required();
    cmd_gyr->add_option("--spec", gyr_spec, "inductor/capacitor spec JSON");
    cmd_gyr->add_option("--G", gyr_G, "gyration conductance");
    cmd_gyr->add_option("--L1", gyr_L1, "primary inductance");
    cmd_gyr->add_option("--C1", gyr_C1, "primary capacitance");
    cmd_gyr->add_option("--q2", gyr_q2, "conserved secondary charge");
    cmd_gyr->add_option("--cap", gyr_cap, "linear shunt capacitance");
    cmd_gyr->add_option("--c2", gyr_c2, "secondary capacitance sweep lo:hi[:n]");
    cmd_gyr->add_option("--g1", gyr_g1, "first cascade conductance");
    cmd_gyr->add_option("--g2", gyr_g2, "second cascade conductance");
    cmd_gyr->add_option("--const", gyr_cconst, "integration constant c");
    cmd_gyr->add_option("--regcap", gyr_regcap, "regularizing capacitance (transformer)");
    cmd_gyr->add_option("--ej1", gyr_ej1, "first Josephson energy");
    cmd_gyr->add_option("--ej2", gyr_ej2, "second Josephson energy");
    cmd_gyr->add_option("--n", gyr_n, "grid points (mathieu)");
    cmd_gyr->add_option("--windows", gyr_windows, "flux quanta in the window (mathieu)");
    add_common(cmd_gyr, gyr_c);

    // pathological
    auto* cmd_path = app.add_subcommand("pathological", "self-similar inductor study");
    std::string path_masses = "3.16e-6:3.16e-22:33", path_x = "2.5,5,10";
    CommonOpts path_c;
    cmd_path->add_option("--masses", path_masses, "mass sweep lo:hi[:n] (log spacing)");
    cmd_path->add_option("--x", path_x, "slow samples, comma separated");
    add_common(cmd_path, path_c);

    // asymmetric
    auto* cmd_asym = app.add_subcommand("asymmetric", "piecewise-linear asymmetric inductor study");
    double asym_a = 1.0, asym_b = 1.0, asym_L = 1.0, asym_cap = 1.0;
    std::string asym_cprime = "1e0:1e-6", asym_phi = "-6.2831853:6.2831853:33";
    CommonOpts asym_c;
    cmd_asym->add_option("--a", asym_a, "asymmetry")->required();
    cmd_asym->add_option("--b", asym_b, "slope")->required();
    cmd_asym->add_option("--L", asym_L, "series inductance");
    cmd_asym->add_option("--C", asym_cap, "slow shunting capacitance");
    cmd_asym->add_option("--cprime", asym_cprime, "sweep lo:hi[:n]");
    cmd_asym->add_option("--phi", asym_phi, "flux grid lo:hi:n");
    add_common(cmd_asym, asym_c);

    try {
        std::vector<std::string> argv_copy(args);
        std::reverse(argv_copy.begin(), argv_copy.end());
        app.parse(argv_copy);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return finish(0);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return finish(2);
    }

    try {
        if (cmd_reduce->parsed()) {
            const std::string text = read_file(reduce_netlist);
            rep.config_hash = config_hash({"reduce", text});
            Netlist net = parse_netlist(text);
            CircuitLagrangian lag = assemble(net);
            if (reduce_c.dry_run) {
                rep.tasks.emplace_back("validate", "ok");
                return finish(0);
            }
            diracberg::ReducedHamiltonian red = diracberg::reduce(lag);
            OutputSet out(reduce_c.out);

            std::vector<std::vector<double>> rows;
            double eff_L = 0.0;
            if (red.dof == 1 && red.basis.l == 0 && red.basis.j >= 0) {
                // curvature of the substituted potential at the origin
                auto u_of = [&](double x) {
                    Eigen::VectorXd xp = Eigen::VectorXd::Constant(1, x);
                    // lowest-energy branch per sample
                    auto recs = diracberg::solve_constraints(red.terms, red.basis, red.Ac, 0.0,
                                                             Eigen::VectorXd::Constant(1, x));
                    std::vector<double> phic;
                    for (const auto& r : recs) {
                        if (const auto* sf = std::get_if<diracberg::SolvedFlux>(&r)) {
                            double best = 0.0, beste = std::numeric_limits<double>::infinity();
                            for (double root : sf->roots[0]) {
                                std::vector<double> probe_row{root};
                                const double e = red.potential_on_branch(xp, {}, {}, probe_row);
                                if (e < beste) beste = e, best = root;
                            }
                            phic.push_back(best);
                        }
                    }
                    return red.potential_on_branch(xp, {}, {}, phic);
                };
                const double h = 0.5;
                const double upp = (u_of(h) - 2.0 * u_of(0.0) + u_of(-h)) / (h * h);
                if (upp > 0.0) eff_L = 1.0 / upp;
            }
            for (int i = 0; i < red.probe_grid.size(); ++i) {
                rows.push_back({red.probe_grid[i], static_cast<double>(red.branch_counts[i])});
            }
            if (rows.empty()) rows.push_back({0.0, 1.0});
            out.write_csv("reduce_branches", {"phi", "branch_count"}, rows);
            out.sidecar["dof"] = red.dof;
            out.sidecar["branched"] = red.branched;
            out.sidecar["labels"] = red.labels;
            if (eff_L > 0.0) out.sidecar["effective_L"] = eff_L;
            rep.tasks.emplace_back("reduce", "ok");
            out.finish("reduce", rep.command_echo, rep.config_hash,
                       std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            rep.output_files = out.files;
            return finish(0);
        }

        if (cmd_bo->parsed()) {
            const std::string text = read_file(bo_netlist);
            rep.config_hash = config_hash({"bo-sweep", text, bo_cprime, bo_phi});
            Netlist net = parse_netlist(text);
            SeriesPattern sp = extract_series(net);
            const Eigen::VectorXd cprimes = parse_log_range(bo_cprime);
            const Eigen::VectorXd phi = parse_lin_range(bo_phi);
            if (bo_c.dry_run) {
                rep.tasks.emplace_back("validate", "ok");
                return finish(0);
            }
            boflow::FlowResult fr =
                boflow::flow_sweep(sp.L, sp.spec, cprimes, phi, jobs_from_env(bo_c.jobs));
            OutputSet out(bo_c.out);
            std::vector<std::string> cols{"cprime", "sup_ubo", "dist_open", "dist_short",
                                          "dist_linear", "min_fast_gap"};
            for (int i = 0; i < phi.size(); ++i) cols.push_back("ubo_phi" + std::to_string(i));
            std::vector<std::vector<double>> rows;
            for (int c = 0; c < cprimes.size(); ++c) {
                std::vector<double> row{cprimes[c],
                                        fr.ubo.row(c).cwiseAbs().maxCoeff(),
                                        fr.dist_open[c],
                                        fr.dist_short[c],
                                        std::isfinite(fr.dist_linear[c]) ? fr.dist_linear[c] : -1.0,
                                        fr.min_fast_gap[c]};
                for (int i = 0; i < phi.size(); ++i) row.push_back(fr.ubo(c, i));
                rows.push_back(std::move(row));
            }
            out.write_csv("bo_sweep", cols, rows);
            out.sidecar["verdict"] = boflow::fixed_point_name(fr.verdict);
            out.sidecar["Lfrak"] = fr.Lfrak;
            out.sidecar["extrapolated_distance"] = fr.extrapolated_distance;
            out.sidecar["class_consistent"] = fr.class_consistent;
            out.sidecar["phi_grid"] = std::vector<double>(phi.data(), phi.data() + phi.size());
            rep.tasks.emplace_back("bo-sweep", "ok");
            out.finish("bo_sweep", rep.command_echo, rep.config_hash,
                       std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            rep.output_files = out.files;
            return finish(0);
        }

        if (cmd_classify->parsed()) {
            const std::string text =
                (!classify_spec.empty() && classify_spec.front() == '{') ? classify_spec : read_file(classify_spec);
            rep.config_hash = config_hash({"classify", text});
            PotentialSpec spec = potential_from_json(text);
            if (classify_c.dry_run) {
                rep.tasks.emplace_back("validate", "ok");
                return finish(0);
            }
            boflow::InductorClass cls = boflow::classify(spec);
            OutputSet out(classify_c.out);
            out.write_csv("classify", {"gamma", "Lfrak"}, {{cls.gamma, cls.Lfrak}});
            out.sidecar["tag"] = boflow::tag_name(cls.tag);
            std::cout << boflow::tag_name(cls.tag) << "\n";
            rep.tasks.emplace_back("classify", "ok");
            out.finish("classify", rep.command_echo, rep.config_hash,
                       std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            rep.output_files = out.files;
            return finish(0);
        }

        if (cmd_kepler->parsed()) {
            rep.config_hash = config_hash({"kepler", std::to_string(kepler_beta),
                                           std::to_string(kepler_phi), std::to_string(kepler_L),
                                           kepler_window});
            if (!(kepler_beta > 0.0)) throw domain_error("kepler: beta must be positive");
            if (kepler_c.dry_run) {
                rep.tasks.emplace_back("validate", "ok");
                return finish(0);
            }
            // beta = L E_J in reduced units; keep L fixed and set E_J
            const PotentialSpec spec((Cosine{kepler_beta / kepler_L}));
            double window = 0.0;
            if (!kepler_window.empty()) {
                const Eigen::VectorXd w = parse_lin_range(kepler_window + ":2");
                window = std::max(std::abs(w[0]), std::abs(w[1]));
            }
            const auto roots = diracberg::constraint_roots(kepler_L, spec, kepler_phi, window);
            OutputSet out(kepler_c.out);
            std::vector<std::vector<double>> rows;
            int index = 0;
            for (double r : roots) {
                const double ueff =
                    (kepler_phi - r) * (kepler_phi - r) / (2.0 * kepler_L) + spec.value(r);
                const double resid = std::abs((r - kepler_phi) / kepler_L + spec.deriv(r));
                rows.push_back({static_cast<double>(index++), r, ueff, resid});
            }
            out.write_csv("kepler_branches", {"branch", "phi_c", "u_eff", "residual"}, rows);
            out.sidecar["branch_count"] = rows.size();
            rep.tasks.emplace_back("kepler", "ok");
            out.finish("kepler", rep.command_echo, rep.config_hash,
                       std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            rep.output_files = out.files;
            return finish(0);
        }

        if (cmd_snail->parsed()) {
            const std::string text =
                (!snail_params.empty() && snail_params.front() == '{') ? snail_params : read_file(snail_params);
            rep.config_hash = config_hash({"snail", text, snail_mode, snail_x1, std::to_string(snail_M)});
            json j = json::parse(text);
            snail::SnailParams p{};
            p.ej1 = j.at("ej1");
            p.ej2 = j.at("ej2");
            p.ej3 = j.value("ej3", p.ej2);
            p.k1 = j.at("k1");
            p.k2 = j.at("k2");
            p.k3 = j.value("k3", p.k2);
            p.ec = j.at("ec");
            p.Phi = j.value("Phi", 0.0);
            p.nu1 = j.value("nu1", 0.0);
            p.nu2 = j.value("nu2", 0.0);
            p.validate();
            const Eigen::VectorXd x1 = parse_lin_range(snail_x1);
            if (snail_c.dry_run) {
                rep.tasks.emplace_back("validate", "ok");
                return finish(0);
            }
            OutputSet out(snail_c.out);
            if (snail_mode == "cl" || snail_mode == "ho") {
                snail::SinglePhase sp = snail::single_phase(p, x1);
                std::vector<std::vector<double>> rows;
                for (int i = 0; i < x1.size(); ++i) {
                    rows.push_back({x1[i], sp.u_cl[i], sp.u_ho[i], sp.valid[i] ? 1.0 : 0.0});
                }
                out.write_csv("snail_single_phase", {"x1", "u_cl", "u_ho", "valid"}, rows);
                out.sidecar["ej2_renormalized"] = sp.ej2_renormalized;
                out.sidecar["harmonic_meaningful"] = sp.harmonic_meaningful;
            } else if (snail_mode == "charge") {
                snail::SmallCapResult r = snail::small_cap_limit(p, x1, snail_M);
                std::vector<std::vector<double>> rows;
                for (int i = 0; i < x1.size(); ++i) rows.push_back({x1[i], r.ubo[i]});
                out.write_csv("snail_charge_basis", {"x1", "ubo"}, rows);
                out.sidecar["sup_dev_from_bare"] = r.sup_dev_from_bare;
                out.sidecar["d1ec"] = r.d1ec;
                out.sidecar["d1ec_parallel_estimate"] = r.d1ec_parallel_estimate;
            } else if (snail_mode == "2d") {
                snail::Comparison cmp = snail::validate_2d(p, x1);
                std::vector<std::vector<double>> rows;
                for (int i = 0; i < x1.size(); ++i) {
                    rows.push_back({x1[i], cmp.u_cl[i], cmp.u_ho[i], cmp.u_charge[i], cmp.u_2d[i],
                                    cmp.fast_gap[i], cmp.valid[i] ? 1.0 : 0.0});
                }
                out.write_csv("snail_validate",
                              {"x1", "u_cl", "u_ho", "u_charge", "u_2d", "fast_gap", "valid"}, rows);
                out.sidecar["harmonic_improves"] = cmp.harmonic_improves;
                out.sidecar["charge_vs_2d_rel"] = cmp.charge_vs_2d_rel;
            } else {
                throw domain_error("snail: unknown mode '" + snail_mode + "'");
            }
            rep.tasks.emplace_back("snail-" + snail_mode, "ok");
            out.finish("snail", rep.command_echo, rep.config_hash,
                       std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            rep.output_files = out.files;
            return finish(0);
        }

        if (cmd_gyr->parsed()) {
            rep.config_hash = config_hash({"gyrator", gyr_study, gyr_spec, gyr_c2,
                                           std::to_string(gyr_G), std::to_string(gyr_q2)});
            OutputSet out(gyr_c.out);
            if (gyr_study == "cap") {
                PotentialSpec cap_spec =
                    gyr_spec.empty() ? PotentialSpec(Quadratic{1.0 / gyr_cap}) : load_spec(gyr_spec);
                if (gyr_c.dry_run) {
                    rep.tasks.emplace_back("validate", "ok");
                    return finish(0);
                }
                nonrecip::CapReduced red = nonrecip::gyrator_cap_reduce(cap_spec, gyr_G, gyr_q2);
                std::vector<std::vector<double>> rows;
                for (int i = 0; i <= 64; ++i) {
                    const double x = -6.0 + 12.0 * i / 64.0;
                    rows.push_back({x, red.added_potential(x)});
                }
                out.write_csv("gyrator_cap", {"phi1", "added_potential"}, rows);
                out.sidecar["linear"] = red.linear;
                out.sidecar["l_eff"] = red.l_eff;
            } else if (gyr_study == "ind") {
                PotentialSpec f = gyr_spec.empty() ? PotentialSpec(Quadratic{gyr_L1}) : load_spec(gyr_spec);
                if (gyr_c.dry_run) {
                    rep.tasks.emplace_back("validate", "ok");
                    return finish(0);
                }
                nonrecip::IndReduced red = nonrecip::gyrator_ind_reduce(f, gyr_G);
                out.write_csv("gyrator_ind", {"exponent", "coefficient", "c_eff"},
                              {{red.exponent, red.coefficient, red.c_eff}});
            } else if (gyr_study == "flow") {
                PotentialSpec f = gyr_spec.empty() ? PotentialSpec(Cosine{1.0}) : load_spec(gyr_spec);
                const Eigen::VectorXd c2s = parse_log_range(gyr_c2);
                if (gyr_c.dry_run) {
                    rep.tasks.emplace_back("validate", "ok");
                    return finish(0);
                }
                nonrecip::GyratorFlowResult fr =
                    nonrecip::gyrator_bo_flow(f, gyr_L1, gyr_C1, gyr_G, c2s, jobs_from_env(gyr_c.jobs));
                std::vector<std::vector<double>> rows;
                for (int c = 0; c < c2s.size(); ++c) {
                    rows.push_back({c2s[c], fr.c_eff[c], fr.slow_freq[c]});
                }
                out.write_csv("gyrator_flow", {"c2", "c_eff", "slow_freq"}, rows);
                out.sidecar["verdict"] = nonrecip::gyrator_verdict_name(fr.verdict);
                out.sidecar["freq_extrapolated"] = fr.freq_extrapolated;
                out.sidecar["freq_bare"] = fr.freq_bare;
                out.sidecar["freq_typeL"] = fr.freq_typeL;
            } else if (gyr_study == "mathieu") {
                if (gyr_c.dry_run) {
                    rep.tasks.emplace_back("validate", "ok");
                    return finish(0);
                }
                spectral::Grid1D grid{0.0, gyr_windows * units::phi0, gyr_n,
                                      spectral::Boundary::Periodic};
                nonrecip::AlmostMathieu am =
                    nonrecip::almost_mathieu_build(gyr_ej1, gyr_ej2, gyr_G, grid);
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(am.H);
                std::vector<std::vector<double>> rows;
                for (int i = 0; i < std::min<int>(16, gyr_n); ++i)
                    rows.push_back({static_cast<double>(i), es.eigenvalues()[i]});
                out.write_csv("gyrator_mathieu", {"index", "eigenvalue"}, rows);
                out.sidecar["gkp"] = am.gkp;
                out.sidecar["shift_steps"] = am.shift_steps;
            } else if (gyr_study == "transformer") {
                nonrecip::OnePort net1{gyr_C1, gyr_ej1 > 0.0 ? PotentialSpec(Cosine{gyr_ej1})
                                                             : PotentialSpec(Quadratic{gyr_L1})};
                nonrecip::OnePort net2{gyr_cap, PotentialSpec(Quadratic{gyr_L1})};
                if (!gyr_spec.empty()) net2.ind = load_spec(gyr_spec);
                if (gyr_c.dry_run) {
                    rep.tasks.emplace_back("validate", "ok");
                    return finish(0);
                }
                nonrecip::TransformerResult tr = nonrecip::transformer_reduce(
                    gyr_g1, gyr_g2, net1, net2, gyr_cconst, gyr_regcap);
                out.write_csv("gyrator_transformer",
                              {"turns_ratio", "c_dependent", "conservation_residual"},
                              {{tr.turns_ratio, tr.c_dependent ? 1.0 : 0.0, tr.conservation_residual}});
            } else {
                throw domain_error("gyrator: unknown study '" + gyr_study + "'");
            }
            rep.tasks.emplace_back("gyrator-" + gyr_study, "ok");
            out.finish("gyrator", rep.command_echo, rep.config_hash,
                       std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            rep.output_files = out.files;
            return finish(0);
        }

        if (cmd_path->parsed()) {
            rep.config_hash = config_hash({"pathological", path_masses, path_x});
            const Eigen::VectorXd masses = parse_log_range(path_masses);
            const Eigen::VectorXd xs = parse_list(path_x);
            if (path_c.dry_run) {
                rep.tasks.emplace_back("validate", "ok");
                return finish(0);
            }
            boflow::PathologicalResult pr =
                boflow::pathological_study(masses, xs, jobs_from_env(path_c.jobs));
            OutputSet out(path_c.out);
            std::vector<std::string> cols{"mass", "e0_x0"};
            for (int i = 0; i < xs.size(); ++i) cols.push_back("ubo_x" + std::to_string(i));
            std::vector<std::vector<double>> rows;
            for (int i = 0; i < masses.size(); ++i) {
                std::vector<double> row{masses[i], pr.e0_x0[i]};
                for (int j = 0; j < xs.size(); ++j) row.push_back(pr.ubo(i, j));
                rows.push_back(std::move(row));
            }
            out.write_csv("pathological", cols, rows);
            out.sidecar["scaling_ratio_worst"] = pr.scaling_ratio_worst;
            out.sidecar["scaling_pairs"] = pr.scaling_pairs;
            out.sidecar["logper_residual"] = pr.logper_residual;
            out.sidecar["logper_amplitude"] = pr.logper_amplitude;
            out.sidecar["verdict"] = boflow::fixed_point_name(pr.verdict);
            rep.tasks.emplace_back("pathological", "ok");
            out.finish("pathological", rep.command_echo, rep.config_hash,
                       std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            rep.output_files = out.files;
            return finish(0);
        }

        if (cmd_asym->parsed()) {
            rep.config_hash = config_hash({"asymmetric", std::to_string(asym_a),
                                           std::to_string(asym_b), std::to_string(asym_L),
                                           asym_cprime, asym_phi});
            const Eigen::VectorXd cprimes = parse_log_range(asym_cprime);
            const Eigen::VectorXd phi = parse_lin_range(asym_phi);
            if (asym_c.dry_run) {
                rep.tasks.emplace_back("validate", "ok");
                return finish(0);
            }
            boflow::AsymmetricResult ar = boflow::asymmetric_study(
                asym_a, asym_b, asym_L, cprimes, phi, asym_cap, jobs_from_env(asym_c.jobs));
            OutputSet out(asym_c.out);
            std::vector<std::vector<double>> rows;
            for (int c = 0; c < cprimes.size(); ++c) {
                rows.push_back({cprimes[c], ar.c1[c], ar.c2[c], ar.phi_zpf[c], ar.phi_m[c],
                                ar.delta_phi[c]});
            }
            out.write_csv("asymmetric", {"cprime", "c1", "c2", "phi_zpf", "phi_m", "delta_phi"},
                          rows);
            out.sidecar["c1_extrapolated"] = ar.c1_extrapolated;
            out.sidecar["c1_predicted"] = ar.c1_predicted;
            rep.tasks.emplace_back("asymmetric", "ok");
            out.finish("asymmetric", rep.command_echo, rep.config_hash,
                       std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            rep.output_files = out.files;
            return finish(0);
        }

        throw domain_error("no subcommand given");
    } catch (const domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        rep.tasks.emplace_back("run", std::string("domain error: ") + e.what());
        return finish(2);
    } catch (const convergence_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        rep.tasks.emplace_back("run", std::string("convergence error: ") + e.what());
        return finish(3);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        rep.tasks.emplace_back("run", std::string("error: ") + e.what());
        return finish(2);
    }
}

}  // namespace qflow::cli
