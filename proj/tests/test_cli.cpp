#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "urnflow/config.hpp"
#include "urnflow/svg.hpp"

using namespace urnflow;
namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int status = -1;
    std::string out;
};

CmdResult run_cli(const std::string& args) {
    std::string cmd = std::string(URNFLOW_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CmdResult r;
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    int rc = pclose(pipe);
    r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return r;
}

fs::path fresh_dir(const std::string& tag) {
    fs::path d = fs::temp_directory_path() /
                 ("urnflow_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

fs::path write_config(const fs::path& dir, const std::string& name,
                      const std::string& body) {
    fs::path p = dir / name;
    std::ofstream f(p, std::ios::binary);
    f << body;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("limits subcommand prints a bare covariance value") {
    auto r = run_cli("limits --theta 1 --pair rho_rho --tau 0.3 --t 0.7");
    CHECK(r.status == 0);
    CHECK(r.out == "0.3\n");
    auto rr = run_cli("limits --theta 0.5 --pair mu_mu --tau 0 --t 1");
    CHECK(rr.status == 0);
    CHECK(rr.out == "0\n");
}

TEST_CASE("invalid inputs exit 1 naming the offending field") {
    auto dir = fresh_dir("badcfg");
    auto missing = write_config(dir, "missing.json", "{\"model\":{}}\n");
    auto r = run_cli("--config " + missing.string() + " moments");
    CHECK(r.status == 1);
    CHECK(r.out.find("model.family") != std::string::npos);

    auto unknown = write_config(
        dir, "unknown.json",
        "{\"model\":{\"family\":\"power_law\",\"theta\":0.5},\"bogus_key\":1}\n");
    r = run_cli("--config " + unknown.string() + " moments");
    CHECK(r.status == 1);
    CHECK(r.out.find("bogus_key") != std::string::npos);

    r = run_cli("limits --theta 0.5 --pair nonsense --tau 0.1 --t 0.5");
    CHECK(r.status == 1);

    r = run_cli("--config " + (dir / "absent.json").string() + " moments");
    CHECK(r.status == 1);

    auto badjson = write_config(dir, "bad.json", "{not json");
    r = run_cli("--config " + badjson.string() + " moments");
    CHECK(r.status == 1);

    fs::remove_all(dir);
}

TEST_CASE("out-of-range ball budgets exit 2") {
    auto dir = fresh_dir("hugen");
    auto cfg = write_config(
        dir, "huge.json",
        "{\"model\":{\"family\":\"power_law\",\"theta\":0.5},"
        "\"mode\":\"discrete\",\"n_values\":[1e16],\"grid\":[1.0],"
        "\"replicates\":2,\"out_dir\":\"" + (dir / "out").string() + "\"}\n");
    auto r = run_cli("--config " + cfg.string() + " simulate");
    CHECK(r.status == 2);
    fs::remove_all(dir);
}

TEST_CASE("fclt runs are byte-identical across thread counts") {
    auto dir = fresh_dir("fclt");
    std::string base =
        "{\"model\":{\"family\":\"power_law\",\"theta\":0.5},"
        "\"mode\":\"poissonized\",\"n_values\":[500],\"grid\":[0.5,1.0],"
        "\"replicates\":120,\"seed\":3,\"head_size\":4096,\"plots\":false";
    auto cfg_a = write_config(dir, "a.json",
                              base + ",\"out_dir\":\"" + (dir / "a").string() +
                                  "\",\"threads\":1}\n");
    auto cfg_b = write_config(dir, "b.json",
                              base + ",\"out_dir\":\"" + (dir / "b").string() +
                                  "\",\"threads\":2}\n");
    auto ra = run_cli("--config " + cfg_a.string() + " fclt");
    auto rb = run_cli("--config " + cfg_b.string() + " fclt");
    INFO(ra.out);
    INFO(rb.out);
    REQUIRE(ra.status == 0);
    REQUIRE(rb.status == 0);

    std::string cov_a = slurp(dir / "a" / "cov_n500.csv");
    std::string cov_b = slurp(dir / "b" / "cov_n500.csv");
    REQUIRE(!cov_a.empty());
    CHECK(cov_a == cov_b);
    CHECK(cov_a.rfind("pair,tau,t,n,empirical,se,exact,limit,z,gap\n", 0) == 0);

    std::string gauss = slurp(dir / "a" / "gaussianity.csv");
    CHECK(!gauss.empty());

    std::string manifest = slurp(dir / "a" / "manifest.json");
    REQUIRE(!manifest.empty());
    auto j = nlohmann::json::parse(manifest);
    CHECK(j["tool_version"] == kToolVersion);
    CHECK(j.contains("config_hash"));
    CHECK(j.contains("started"));
    CHECK(j.contains("finished"));
    CHECK(j["seed"] == 3);
    CHECK(j["outputs"].is_array());
    CHECK(!j["outputs"].empty());

    fs::remove_all(dir);
}

TEST_CASE("weights, moments and simulate emit their artifact files") {
    auto dir = fresh_dir("artifacts");
    std::string cfg_body =
        "{\"model\":{\"family\":\"theta_one_log\",\"gamma\":2.0},"
        "\"mode\":\"discrete\",\"n_values\":[200],\"grid\":[0.5,1.0],"
        "\"replicates\":5,\"seed\":1,\"out_dir\":\"" + (dir / "o").string() +
        "\"}\n";
    auto cfg = write_config(dir, "c.json", cfg_body);

    auto r = run_cli("--config " + cfg.string() + " weights");
    REQUIRE(r.status == 0);
    CHECK(fs::exists(dir / "o" / "weights.csv"));
    CHECK(fs::exists(dir / "o" / "scales.csv"));

    r = run_cli("--config " + cfg.string() + " moments");
    REQUIRE(r.status == 0);
    std::string means = slurp(dir / "o" / "moments_means.csv");
    CHECK(means.rfind("component,", 0) == 0);
    CHECK(fs::exists(dir / "o" / "moments_cov.csv"));

    r = run_cli("--config " + cfg.string() + " simulate");
    REQUIRE(r.status == 0);
    std::string paths = slurp(dir / "o" / "paths.csv");
    CHECK(paths.rfind("mode,stream_id,t,balls", 0) == 0);
    // 5 replicates x 2 grid points plus the header line
    CHECK(std::count(paths.begin(), paths.end(), '\n') == 11);

    CHECK(fs::exists(dir / "o" / "manifest.json"));
    fs::remove_all(dir);
}

TEST_CASE("limits subcommand writes grids when given a full config") {
    auto dir = fresh_dir("limgrid");
    auto cfg = write_config(
        dir, "c.json",
        "{\"model\":{\"family\":\"power_law\",\"theta\":0.8},"
        "\"grid\":[0.5,1.0],\"out_dir\":\"" + (dir / "o").string() + "\"}\n");
    auto r = run_cli("--config " + cfg.string() + " limits");
    REQUIRE(r.status == 0);
    std::string cov = slurp(dir / "o" / "limit_cov.csv");
    CHECK(!cov.empty());
    CHECK(fs::exists(dir / "o" / "limit_psd.csv"));
    fs::remove_all(dir);
}

TEST_CASE("overrides update nested fields from the command line") {
    auto dir = fresh_dir("override");
    auto r = run_cli("--override model.family=power_law --override "
                     "model.theta=0.7 --override 'n_values=[100]' --override "
                     "replicates=5 --override 'grid=[1.0]' --override "
                     "'out_dir=" + (dir / "o").string() + "' simulate");
    INFO(r.out);
    REQUIRE(r.status == 0);
    CHECK(fs::exists(dir / "o" / "paths.csv"));

    auto bad = run_cli("--override model.theta=2.0 moments");
    CHECK(bad.status == 1);
    CHECK(bad.out.find("model.theta") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("run spec parsing applies defaults and validates fields") {
    auto j = nlohmann::json::parse(
        R"({"model":{"family":"power_law","theta":0.5}})");
    RunSpec spec = parse_run_spec(j);
    CHECK(spec.mode == SimMode::Poissonized);
    CHECK(spec.n_values == std::vector<double>{1.0e4});
    CHECK(spec.grid.size() == 10);
    CHECK(spec.replicates == 1000);
    CHECK(spec.seed == 1);
    CHECK(spec.threads == 0);
    CHECK(spec.head_size == (std::uint64_t(1) << 20));
    CHECK_FALSE(spec.plots);
    CHECK(spec.out_dir == "out");
    auto cfg = spec.experiment(1.0e4);
    CHECK(cfg.n == 1.0e4);
    CHECK(cfg.replicates == 1000);

    auto expect_field = [](const char* body, const std::string& field) {
        try {
            (void)parse_run_spec(nlohmann::json::parse(body));
            FAIL_CHECK("expected ConfigError for " << field);
        } catch (const ConfigError& e) {
            INFO(e.what());
            CHECK(e.field == field);
        }
    };
    expect_field(R"({"model":{}})", "model.family");
    expect_field(R"({"model":{"family":"power_law"}})", "model.theta");
    expect_field(R"({"model":{"family":"power_law","theta":1.5}})",
                 "model.theta");
    expect_field(R"({"model":{"family":"theta_one_log","gamma":0.5}})",
                 "model.gamma");
    expect_field(R"({"model":{"family":"martian"}})", "model.family");
    expect_field(
        R"({"model":{"family":"power_law","theta":0.5},"mode":"sideways"})",
        "mode");
    expect_field(
        R"({"model":{"family":"power_law","theta":0.5},"replicates":1})",
        "replicates");
    expect_field(
        R"({"model":{"family":"power_law","theta":0.5},"grid":[0.5,0.4]})",
        "grid");
    expect_field(
        R"({"model":{"family":"power_law","theta":0.5},"grid":[2.0]})",
        "grid[0]");
    expect_field(
        R"({"model":{"family":"power_law","theta":0.5},"n_values":[-5]})",
        "n_values[0]");
    expect_field(
        R"({"model":{"family":"power_law","theta":0.5},"head_size":4})",
        "head_size");
    expect_field(
        R"({"model":{"family":"power_law","theta":0.5},"wat":true})", "wat");
    expect_field(
        R"({"model":{"family":"power_law","theta":0.5,"extra":1}})",
        "model.extra");
    expect_field(R"([1,2,3])", "<root>");
}

TEST_CASE("config hash is canonical and sensitive to values") {
    auto a = nlohmann::json::parse(R"({"b":2,"a":{"y":1,"x":[1,2]}})");
    auto b = nlohmann::json::parse(R"({"a":{"x":[1,2],"y":1},"b":2})");
    auto c = nlohmann::json::parse(R"({"a":{"x":[1,2],"y":1},"b":3})");
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a) != config_hash(c));
    // FNV-1a offset basis: hash of the empty string
    CHECK(fnv1a("") == 14695981039346656037ull);
    CHECK(fnv1a("a") != fnv1a("b"));
}

TEST_CASE("manifest serialization and timestamps") {
    RunManifest m;
    m.tool_version = kToolVersion;
    m.config_hash = 0x1234abcd5678ef09ull;
    m.seed = 42;
    m.started = "2026-01-02T03:04:05Z";
    m.finished = "2026-01-02T03:04:06Z";
    m.outputs = {"a.csv", "b.csv"};
    auto j = manifest_json(m);
    CHECK(j["tool_version"] == "urnflow 1.0.0");
    CHECK(j["config_hash"] == "1234abcd5678ef09");
    CHECK(j["seed"] == 42);
    CHECK(j["outputs"].size() == 2);

    std::string ts = timestamp_utc();
    REQUIRE(ts.size() == 20);
    CHECK(ts[4] == '-');
    CHECK(ts[7] == '-');
    CHECK(ts[10] == 'T');
    CHECK(ts[13] == ':');
    CHECK(ts[16] == ':');
    CHECK(ts.back() == 'Z');
}

TEST_CASE("svg charts are well formed") {
    SvgSeries s1{"empirical", {1.0, 10.0, 100.0}, {0.5, 0.4, 0.3}};
    SvgSeries s2{"exact", {1.0, 10.0, 100.0}, {0.45, 0.35, 0.25}};
    std::ostringstream os;
    write_line_chart(os, "gap vs n", "n", "gap", {s1, s2}, true, false);
    std::string svg = os.str();
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("gap vs n") != std::string::npos);
    CHECK(svg.find("empirical") != std::string::npos);
    // degenerate input still yields a valid document
    std::ostringstream empty;
    write_line_chart(empty, "empty", "x", "y", {});
    CHECK(empty.str().rfind("<svg", 0) == 0);
}
