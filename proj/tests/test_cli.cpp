#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "qflow/cli.hpp"

using namespace qflow;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

}  // namespace

TEST_CASE("kepler subcommand emits one row per branch") {
    TempDir dir("qflow_cli_kepler");
    cli::RunReport rep;
    const int code = cli::run({"kepler", "--beta", "2", "--phi", "3.14159", "--out", dir.str()}, &rep);
    CHECK(code == 0);
    CHECK_FALSE(rep.config_hash.empty());
    const std::string csv = slurp(dir.str() + "/kepler_branches.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 branches

    TempDir dir2("qflow_cli_kepler1");
    cli::run({"kepler", "--beta", "0.5", "--phi", "1.0", "--out", dir2.str()}, nullptr);
    const std::string csv2 = slurp(dir2.str() + "/kepler_branches.csv");
    CHECK(std::count(csv2.begin(), csv2.end(), '\n') == 2);  // header + 1 branch
}

TEST_CASE("reduce subcommand reports the effective inductance") {
    TempDir dir("qflow_cli_reduce");
    write_file(dir.path / "fig1a.net", "C 1 0 1.0\nL 1 2 1.0\nL 2 0 2.0\n");
    cli::RunReport rep;
    const int code = cli::run({"reduce", (dir.path / "fig1a.net").string(), "--out", dir.str()}, &rep);
    CHECK(code == 0);
    nlohmann::json sidecar = nlohmann::json::parse(slurp(dir.str() + "/reduce.json"));
    CHECK(sidecar.at("effective_L").get<double>() == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(sidecar.at("dof").get<int>() == 1);
}

TEST_CASE("classify subcommand") {
    TempDir dir("qflow_cli_classify");
    cli::RunReport rep;
    const int code =
        cli::run({"classify", "--spec", "{\"variant\":\"cosine\",\"ej\":1.0}", "--out", dir.str()}, &rep);
    CHECK(code == 0);
    CHECK(slurp(dir.str() + "/classify.json").find("type-1b") != std::string::npos);
}

TEST_CASE("identical invocations produce byte-identical CSV") {
    TempDir a("qflow_cli_det_a"), b("qflow_cli_det_b");
    cli::run({"kepler", "--beta", "1.7", "--phi", "2.0", "--out", a.str()}, nullptr);
    cli::run({"kepler", "--beta", "1.7", "--phi", "2.0", "--out", b.str()}, nullptr);
    CHECK(slurp(a.str() + "/kepler_branches.csv") == slurp(b.str() + "/kepler_branches.csv"));
}

TEST_CASE("dry runs validate without emitting files") {
    TempDir dir("qflow_cli_dry");
    write_file(dir.path / "net.net", "C 1 0 1.0\nL 1 2 1.0\nNL 2 0 cosine EJ=1\n");
    for (const std::vector<std::string>& args :
         {std::vector<std::string>{"reduce", (dir.path / "net.net").string(), "--dry-run"},
          {"bo-sweep", (dir.path / "net.net").string(), "--dry-run"},
          {"classify", "--spec", "{\"variant\":\"quadratic\",\"L\":1}", "--dry-run"},
          {"kepler", "--beta", "1", "--phi", "0", "--dry-run"},
          {"snail", "--params", "{\"ej1\":1,\"ej2\":1,\"k1\":0.1,\"k2\":0.1,\"ec\":1}", "--dry-run"},
          {"gyrator", "--study", "flow", "--dry-run"},
          {"pathological", "--dry-run"},
          {"asymmetric", "--a", "1", "--b", "1", "--dry-run"}}) {
        cli::RunReport rep;
        CHECK(cli::run(args, &rep) == 0);
        CHECK(rep.output_files.empty());
    }
}

TEST_CASE("errors map to exit codes") {
    CHECK(cli::run({"kepler", "--beta", "-1", "--phi", "0"}, nullptr) == 2);
    CHECK(cli::run({"nonsense"}, nullptr) == 2);
    CHECK(cli::run({"kepler", "--badflag", "1"}, nullptr) == 2);
    CHECK(cli::run({"classify", "--spec", "{\"variant\":\"nope\"}"}, nullptr) == 2);
    TempDir dir("qflow_cli_badnet");
    write_file(dir.path / "bad.net", "L 1 0 -2.0\n");
    CHECK(cli::run({"reduce", (dir.path / "bad.net").string()}, nullptr) == 2);
    // malformed range
    write_file(dir.path / "ok.net", "C 1 0 1.0\nL 1 2 1.0\nNL 2 0 cosine EJ=1\n");
    CHECK(cli::run({"bo-sweep", (dir.path / "ok.net").string(), "--cprime", "oops"}, nullptr) == 2);
}

TEST_CASE("config hash is deterministic and input-sensitive") {
    cli::RunReport a, b, c;
    cli::run({"kepler", "--beta", "1", "--phi", "0", "--dry-run"}, &a);
    cli::run({"kepler", "--beta", "1", "--phi", "0", "--dry-run"}, &b);
    cli::run({"kepler", "--beta", "2", "--phi", "0", "--dry-run"}, &c);
    CHECK(a.config_hash == b.config_hash);
    CHECK(a.config_hash != c.config_hash);
}
