#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "urnflow/acceptance.hpp"
#include "urnflow/config.hpp"
#include "urnflow/harness.hpp"
#include "urnflow/limits.hpp"
#include "urnflow/moments.hpp"
#include "urnflow/svg.hpp"

namespace fs = std::filesystem;
using namespace urnflow;
using nlohmann::json;

namespace {

// shortest representation that parses back to the same double
std::string roundtrip(double v) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json default_config() {
    return json{{"model", {{"family", "power_law"}, {"theta", 0.5}}}};
}

// dotted-path override: "model.theta=0.8", "n_values.1=2000"; the value is
// parsed as JSON when possible and kept as a string otherwise
void apply_override(json& j, const std::string& kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("--override", "expected key=value, got '" + kv + "'");
    std::string path = kv.substr(0, eq), value = kv.substr(eq + 1);
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const std::exception&) {
        parsed = value;
    }
    json* node = &j;
    std::size_t pos = 0;
    while (true) {
        std::size_t dot = path.find('.', pos);
        std::string key = path.substr(pos, dot - pos);
        bool leaf = dot == std::string::npos;
        if (!key.empty() && key.find_first_not_of("0123456789") == std::string::npos &&
            node->is_array()) {
            std::size_t idx = std::stoul(key);
            if (idx >= node->size())
                throw ConfigError(path, "array index out of range");
            if (leaf) {
                (*node)[idx] = parsed;
                return;
            }
            node = &(*node)[idx];
        } else {
            if (leaf) {
                (*node)[key] = parsed;
                return;
            }
            if (!node->contains(key)) (*node)[key] = json::object();
            node = &(*node)[key];
        }
        pos = dot + 1;
    }
}

struct Artifacts {
    fs::path dir;
    std::vector<std::string> names;

    std::ofstream open(const std::string& name) {
        fs::create_directories(dir);
        names.push_back(name);
        return std::ofstream(dir / name, std::ios::binary);
    }
};

void write_manifest(const RunSpec& spec, Artifacts& art,
                    const std::string& started) {
    RunManifest m{kToolVersion, config_hash(spec.raw), spec.seed,
                  started,      timestamp_utc(),       art.names};
    fs::create_directories(art.dir);
    std::ofstream f(art.dir / "manifest.json", std::ios::binary);
    f << manifest_json(m).dump(2) << '\n';
}

int effective_threads(const RunSpec& spec) {
    if (spec.threads > 0) return spec.threads;
    if (const char* env = std::getenv("URNFLOW_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    return 0;  // harness picks hardware concurrency
}

// ---- subcommand bodies ------------------------------------------------------

void run_weights(const RunSpec& spec, Artifacts& art) {
    const WeightModel& w = spec.model;
    {
        std::ofstream f = art.open("weights.csv");
        f << "i,p_i,head_mass\n";
        std::vector<std::uint64_t> idx;
        std::uint64_t cap =
            w.is_finite() ? w.support_size() : std::uint64_t(1000000);
        for (std::uint64_t i = 1; i <= std::min<std::uint64_t>(cap, 64); ++i)
            idx.push_back(i);
        for (std::uint64_t i = 100; i <= cap; i *= 10) idx.push_back(i);
        for (std::uint64_t i : idx)
            f << i << ',' << num(w.prob(i)) << ',' << num(w.head_mass(i)) << '\n';
    }
    {
        std::ofstream f = art.open("scales.csv");
        f << "n,alpha,slowly_varying,lstar,beta,delta_n\n";
        for (double n : spec.n_values) {
            double sv = w.has_theta() ? w.slowly_varying(n) : std::nan("");
            double ls = w.family() == Family::ThetaOneLog ? w.lstar(n) : std::nan("");
            double be = w.has_theta() ? w.beta(n) : std::nan("");
            double dn =
                w.family() == Family::ThetaOneLog ? w.delta_n(n) : std::nan("");
            f << num(n) << ',' << w.alpha(n) << ',' << num(sv) << ',' << num(ls)
              << ',' << num(be) << ',' << num(dn) << '\n';
        }
    }
}

void run_moments(const RunSpec& spec, Artifacts& art) {
    const WeightModel& w = spec.model;
    {
        std::ofstream f = art.open("moments_means.csv");
        f << "component,t,n,poisson_mean,discrete_mean\n";
        const Component comps[3] = {Component::R, Component::U, Component::M};
        const char* cname[3] = {"R", "U", "M"};
        for (double n : spec.n_values)
            for (double t : spec.grid)
                for (int c = 0; c < 3; ++c) {
                    double s = n * t;
                    double tol = 1e-10 * (1.0 + s);
                    double pm = moments::poisson_mean(w, comps[c], s, 1, tol).value;
                    auto nd = static_cast<std::uint64_t>(snap_count(s));
                    double dm = moments::discrete_mean(w, comps[c], nd, tol).value;
                    f << cname[c] << ',' << num(t) << ',' << num(n) << ','
                      << num(pm) << ',' << num(dm) << '\n';
                }
    }
    {
        std::ofstream f = art.open("moments_cov.csv");
        f << "pair,tau,t,n,value,tail_bound\n";
        const CovPair pairs[9] = {CovPair::RR, CovPair::UU, CovPair::MM,
                                  CovPair::RU, CovPair::UR, CovPair::RM,
                                  CovPair::MR, CovPair::UM, CovPair::MU};
        for (double n : spec.n_values)
            for (std::size_t i = 0; i < spec.grid.size(); ++i)
                for (std::size_t j = i; j < spec.grid.size(); ++j)
                    for (CovPair p : pairs) {
                        double tau = n * spec.grid[i], t = n * spec.grid[j];
                        double tol = 1e-10 * (1.0 + t);
                        SeriesResult r =
                            moments::poisson_cov(w, p, tau, t, Route::Direct, tol);
                        f << moments::pair_name(p) << ',' << num(spec.grid[i])
                          << ',' << num(spec.grid[j]) << ',' << num(n) << ','
                          << num(r.value) << ',' << num(r.tail_bound) << '\n';
                    }
    }
}

// prints the single covariance value when all four point flags are given,
// otherwise writes the limit table plus scaling/PSD diagnostics
int run_limits(const RunSpec& spec, Artifacts& art, double theta,
               const std::string& pair, double tau, double t) {
    if (!pair.empty()) {
        LimitPair lp;
        try {
            lp = limits::parse_pair(pair);
        } catch (const std::exception& e) {
            throw ConfigError("--pair", e.what());
        }
        try {
            std::cout << roundtrip(limits::limit_cov(theta, lp, tau, t)) << '\n';
        } catch (const std::invalid_argument& e) {
            throw ConfigError("--theta/--tau/--t", e.what());
        }
        return 0;
    }
    if (!(spec.model.has_theta()))
        throw ConfigError("model.family", "limits needs a model with an index");
    double th = spec.model.theta();
    {
        std::ofstream f = art.open("limit_cov.csv");
        f << "pair,tau,t,value\n";
        for (LimitPair lp : limits::all_pairs())
            for (std::size_t i = 0; i < spec.grid.size(); ++i)
                for (std::size_t j = i; j < spec.grid.size(); ++j)
                    f << limits::pair_name(lp) << ',' << num(spec.grid[i]) << ','
                      << num(spec.grid[j]) << ','
                      << num(limits::limit_cov(th, lp, spec.grid[i], spec.grid[j]))
                      << '\n';
    }
    {
        LimitMatrixResult res = limits::limit_matrix(th, spec.grid);
        std::ofstream f = art.open("limit_psd.csv");
        f << "theta,min_eigenvalue,trace,psd\n";
        f << num(th) << ',' << num(res.min_eigenvalue) << ','
          << num(res.cov.trace()) << ',' << (res.psd ? 1 : 0) << '\n';
    }
    return 0;
}

void run_simulate(const RunSpec& spec, Artifacts& art) {
    std::ofstream f = art.open("paths.csv");
    UrnSampler sampler(spec.model, spec.model.is_finite()
                                       ? UrnSampler::kDefaultHeadSize
                                       : spec.head_size);
    bool header = true;
    for (double n : spec.n_values) {
        BallStream stream{spec.mode, n, spec.grid};
        for (std::size_t r = 0; r < spec.replicates; ++r) {
            RngStream rng(spec.seed, r);
            std::vector<PathSample> ps = simulate(sampler, stream, rng, r);
            write_path_csv(f, ps, header);
            header = false;
        }
    }
}

void run_fclt(const RunSpec& spec, Artifacts& art, int threads) {
    std::vector<double> max_gap;
    std::ofstream gauss = art.open("gaussianity.csv");
    gauss << "comp,t,n,mean,sd,skewness,excess_kurtosis,skew_band,kurt_band,"
             "mean_z,ok\n";
    std::ofstream coup;
    if (spec.mode == SimMode::Coupled) {
        coup = art.open("coupling.csv");
        coup << "n,q90_rho,q90_ups,q90_mu,q90_mtilde\n";
    }
    const char* comps[3] = {"rho", "ups", "mu"};
    for (double n : spec.n_values) {
        PathMatrix pm = run_experiment(spec.experiment(n));
        std::vector<CovCell> cells = covariance_cells(pm, spec.model);
        char name[64];
        std::snprintf(name, sizeof name, "cov_n%.0f.csv", n);
        std::ofstream f = art.open(name);
        write_cov_csv(f, cells, n);
        max_gap.push_back(summarize_cells(cells, 4.0).max_gap);
        for (int c = 0; c < 3 && pm.reps >= 100; ++c)
            for (std::size_t j = 0; j < pm.m; ++j) {
                MomentDiagnostics g = gaussianity(pm, c, j);
                double mean_z =
                    g.sd > 0 ? g.mean / (g.sd / std::sqrt(double(pm.reps))) : 0.0;
                gauss << comps[c] << ',' << num(pm.grid[j]) << ',' << num(n)
                      << ',' << num(g.mean) << ',' << num(g.sd) << ','
                      << num(g.skewness) << ',' << num(g.excess_kurtosis) << ','
                      << num(g.skew_limit) << ',' << num(g.kurt_limit) << ','
                      << num(mean_z) << ',' << (g.gaussian_ok ? 1 : 0) << '\n';
            }
        if (spec.mode == SimMode::Coupled) {
            CouplingSummary cs = coupling_distance(pm);
            coup << num(n) << ',' << num(cs.q90_rho) << ',' << num(cs.q90_ups)
                 << ',' << num(cs.q90_mu) << ',' << num(cs.q90_mtilde) << '\n';
        }
    }
    (void)threads;
    std::vector<LemmaRow> l21, l23;
    if (spec.model.has_theta()) {
        std::vector<double> ds{1e-4, 1e-3, 1e-2, 1e-1, 1.0};
        l21 = lemma_scan(spec.model, LemmaKind::L21, spec.n_values, ds);
        l23 = lemma_scan(spec.model, LemmaKind::L23, spec.n_values, ds);
        std::ofstream f = art.open("lemma_bounds.csv");
        f << "kind,n,delta,ratio\n";
        for (const LemmaRow& r : l21)
            f << "occupancy_growth," << num(r.n) << ',' << num(r.delta) << ','
              << num(r.ratio) << '\n';
        for (const LemmaRow& r : l23)
            f << "missing_mass_increment," << num(r.n) << ',' << num(r.delta)
              << ',' << num(r.ratio) << '\n';
    }
    if (spec.plots) {
        {
            SvgSeries s{"max gap", spec.n_values, max_gap};
            std::ofstream f = art.open("gap_vs_n.svg");
            write_line_chart(f, "max |empirical - limit| covariance gap", "n",
                             "max gap", {s}, true, true);
        }
        if (!l21.empty()) {
            std::map<double, SvgSeries> by_n;
            for (const LemmaRow& r : l21) {
                SvgSeries& s = by_n[r.n];
                if (s.label.empty()) s.label = "n=" + roundtrip(r.n);
                s.x.push_back(r.delta);
                s.y.push_back(r.ratio);
            }
            std::vector<SvgSeries> series;
            for (auto& [k, s] : by_n) series.push_back(std::move(s));
            std::ofstream f = art.open("ratio_vs_delta.svg");
            write_line_chart(f, "occupancy growth ratio", "delta",
                             "ratio / delta^(theta/2)", series, true, false);
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulation and numerical verification of occupancy FCLTs"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir, pair;
    std::uint64_t seed = 0;
    bool seed_set = false, out_set = false;
    int threads = -1;
    std::vector<std::string> overrides;
    double theta = 0.5, tau = 0.0, tval = 0.0;

    app.add_option("--config", config_path, "JSON config path");
    app.add_option("--out", out_dir, "output directory")
        ->each([&](const std::string&) { out_set = true; });
    app.add_option("--seed", seed, "rng seed")
        ->each([&](const std::string&) { seed_set = true; });
    app.add_option("--threads", threads, "worker count (0 = hardware)");
    app.add_option("--override", overrides,
                   "config override key=value (dotted path), repeatable");

    CLI::App* c_weights = app.add_subcommand("weights", "probe weight tables");
    CLI::App* c_moments = app.add_subcommand("moments", "mean and covariance tables");
    CLI::App* c_limits = app.add_subcommand("limits", "limiting covariance");
    c_limits->add_option("--theta", theta, "index in (0,1]");
    c_limits->add_option("--pair", pair, "component pair, e.g. rho_rho");
    c_limits->add_option("--tau", tau, "first time");
    c_limits->add_option("--t", tval, "second time");
    CLI::App* c_sim = app.add_subcommand("simulate", "dump simulated paths");
    CLI::App* c_fclt = app.add_subcommand("fclt", "full Monte Carlo harness");
    CLI::App* c_verify = app.add_subcommand("verify", "run the acceptance suite");

    CLI11_PARSE(app, argc, argv);

    try {
        json raw = config_path.empty() ? default_config() : [&] {
            return load_config(config_path).raw;
        }();
        for (const std::string& kv : overrides) apply_override(raw, kv);
        if (seed_set) raw["seed"] = seed;
        if (out_set) raw["out_dir"] = out_dir;
        RunSpec spec = parse_run_spec(raw);
        if (threads >= 0) spec.threads = threads;
        spec.threads = effective_threads(spec);

        std::string started = timestamp_utc();
        Artifacts art{fs::path(spec.out_dir), {}};
        int rc = 0;
        if (c_weights->parsed()) {
            run_weights(spec, art);
        } else if (c_moments->parsed()) {
            run_moments(spec, art);
        } else if (c_limits->parsed()) {
            rc = run_limits(spec, art, theta, pair, tau, tval);
        } else if (c_sim->parsed()) {
            run_simulate(spec, art);
        } else if (c_fclt->parsed()) {
            run_fclt(spec, art, spec.threads);
        } else if (c_verify->parsed()) {
            AcceptanceOptions opt{spec.out_dir, spec.seed, spec.threads,
                                  spec.plots};
            std::vector<CriterionResult> res = run_acceptance(opt, std::cout);
            for (const auto& entry : fs::directory_iterator(spec.out_dir))
                if (entry.is_regular_file() &&
                    entry.path().filename() != "manifest.json")
                    art.names.push_back(entry.path().filename().string());
            std::sort(art.names.begin(), art.names.end());
            if (!all_pass(res)) {
                for (const CriterionResult& r : res)
                    if (!r.pass)
                        std::cerr << "acceptance criterion " << r.id << " ("
                                  << r.name << ") failed: " << r.detail << '\n';
                rc = 3;
            }
        }
        write_manifest(spec, art, started);
        return rc;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const ToleranceError& e) {
        std::cerr << "numerical tolerance failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
