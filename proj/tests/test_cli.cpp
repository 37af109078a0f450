#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "fungible/cli.hpp"
#include "fungible/io.hpp"
#include "fungible/model.hpp"

namespace fs = std::filesystem;
using namespace fungible;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("fungible_cli_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string write(const std::string& name, const std::string& text) const {
        std::ofstream(path / name) << text;
        return (path / name).string();
    }
};

}  // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(run({}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"fit", "--bogus"}).code == 2);
    CHECK(run({"fit", "--builtin", "Sigma1", "--n", "1"}).code == 2);
    const Run r = run({"fit", "--model", "/nonexistent.json", "--cov", "/nonexistent.csv", "--n", "20"});
    CHECK(r.code == 2);
    CHECK_FALSE(r.err.empty());
    CHECK(r.out.empty());
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("table-check on the embedded fixture") {
    const Run r = run({"table-check", "--fixture", "paper"});
    CHECK(r.code == 0);
    CHECK(r.out.find("8/8 widths consistent") != std::string::npos);
    CHECK(r.err.empty());
    const Run strict = run({"table-check", "--fixture", "paper", "--tolerance", "0.001"});
    CHECK(strict.code == 1);
}

TEST_CASE("fit from files prints estimates, F and RMSEA") {
    TempDir dir;
    const PopulationCondition c = builtin_condition("Sigma3");
    Matrix s = c.sigma_pop;
    s(1, 4) += 0.03;
    s(4, 1) += 0.03;
    const std::string model = dir.write("m.json", model_to_json(c.model));
    const std::string cov = dir.write("s.csv", covariance_to_csv(s));
    const Run r = run({"fit", "--model", model, "--cov", cov, "--n", "200"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("quantity,value\n", 0) == 0);
    CHECK(r.out.find("\nb_f2_f1,") != std::string::npos);
    CHECK(r.out.find("\nf_hat,") != std::string::npos);
    CHECK(r.out.find("\nrmsea,") != std::string::npos);
    CHECK(r.out.find("\nchisq,") != std::string::npos);

    const std::string start = dir.write("start.json", R"({"b_f2_f1": 0.4})");
    CHECK(run({"fit", "--model", model, "--cov", cov, "--n", "200", "--start", start}).code == 0);
}

TEST_CASE("domain failures exit with 1") {
    TempDir dir;
    const std::string model = dir.write("m.json", model_to_json(builtin_condition("Sigma1").model));
    const std::string cov = dir.write("bad.csv", "1,2,0,0,0,0\n2,1,0,0,0,0\n0,0,1,0,0,0\n0,0,0,1,0,0\n"
                                                 "0,0,0,0,1,0\n0,0,0,0,0,1\n");
    const Run r = run({"fit", "--model", model, "--cov", cov, "--n", "100"});
    CHECK(r.code == 1);
    CHECK(r.err.find("error:") == 0);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
    CHECK(run({"fit", "--model", model, "--cov", dir.write("s.csv", covariance_to_csv(
                                                               builtin_condition("Sigma1").sigma_pop)),
               "--n", "100", "--max-iter", "1"})
              .code == 1);
}

TEST_CASE("fpe and confset write CSV to --out only") {
    TempDir dir;
    const std::string pts = (dir.path / "points.csv").string();
    const Run r = run({"fpe", "--builtin", "Sigma4", "--epsilon", "0.03", "--n", "500", "--mode", "eps-tilde",
                       "--directions", "12", "--out", pts});
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    const std::string text = read_file(pts);
    CHECK(text.rfind("angle,r,theta_1,theta_2,f_value\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 13);

    const Run cs = run({"confset", "--builtin", "Sigma4", "--n", "500", "--method", "quadratic"});
    REQUIRE(cs.code == 0);
    CHECK(cs.out.find("confset,quadratic,b_f2_f1,b_z_f2,") != std::string::npos);

    const Run focal = run({"confset", "--builtin", "Sigma4", "--n", "500", "--focal", "l_x1,nope"});
    CHECK(focal.code == 2);
}

TEST_CASE("study output is determined by the seed") {
    TempDir dir;
    const std::string cfg = dir.write("design.json", R"({"conditions": ["Sigma4"], "sample_sizes": [400],
        "epsilons": [0, 0.05], "replications": 3, "directions": 24})");
    const std::string a = (dir.path / "a.csv").string();
    const std::string b = (dir.path / "b.csv").string();
    REQUIRE(run({"study", "--config", cfg, "--seed", "42", "--out", a}).code == 0);
    REQUIRE(run({"study", "--config", cfg, "--seed", "42", "--out", b, "--threads", "2"}).code == 0);
    CHECK(read_file(a) == read_file(b));
    const Run md = run({"study", "--config", cfg, "--seed", "42", "--format", "markdown", "--replications", "2"});
    REQUIRE(md.code == 0);
    CHECK(md.out.rfind("| Condition | N |", 0) == 0);

    const std::string checked = (dir.path / "check.txt").string();
    const Run tc = run({"table-check", "--input", a, "--out", checked});
    CHECK(tc.code == 1);  // a single sample size leaves nothing to compare
    CHECK(tc.out.empty());
}
