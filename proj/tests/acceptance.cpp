// Acceptance run: one PASS/FAIL line per criterion with the measured values and wall time.
//
// usage: acceptance <path-to-fnclust-cli> [--only 1,2,...] [--workdir DIR]

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fnclust/baselines/dtw.hpp"
#include "fnclust/dynsys/bvp.hpp"
#include "fnclust/dynsys/ode.hpp"
#include "fnclust/dynsys/toy.hpp"
#include "fnclust/memory.hpp"
#include "fnclust/experiments.hpp"
#include "fnclust/kuratowski.hpp"
#include "fnclust/report.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace fnclust;
namespace ex = fnclust::experiments;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

int g_failures = 0;

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

void report_line(int id, const std::string& name, const Outcome& o, double seconds, double limit) {
    const bool in_time = limit <= 0.0 || seconds < limit;
    const bool pass = o.pass && in_time;
    g_failures += !pass;
    const std::string budget = limit <= 0.0 ? "no limit" : fmt("limit %.0f s%s", limit, in_time ? "" : ", exceeded");
    std::printf("%s [%d] %s: %s; runtime %.1f s (%s)\n", pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), seconds,
                budget.c_str());
    std::fflush(stdout);
}

// ---------------------------------------------------------------------------
// Exact oracles

Outcome metric_oracles() {
    const auto r = oracle::metric_sweep(200, 17);
    return {r.worst <= 1e-12, fmt("%d random pairs, worst |library - brute force| = %.3g (tol 1e-12)", r.pairs, r.worst)};
}

Outcome gradient_check() {
    const auto r = oracle::gradient_sweep(20);
    return {r.worst_rel <= 1e-4, fmt("20 heads x 48 flag combinations, %zu coordinates, worst relative error %.3g (tol 1e-4)", r.coords,
                                     r.worst_rel)};
}

Outcome solver_oracles() {
    constexpr double pi = std::numbers::pi;
    const auto grid = dynsys::uniform_grid(0.0, 1.0, 101);
    auto rng = make_rng(4242);
    double bvp_err = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double k = uniform(rng, 0.5, 6.0);
        const auto u = dynsys::solve_linear_bvp(k, grid);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double exact = (std::sin(k * pi * grid[j]) - grid[j] * std::sin(k * pi)) / (k * pi * pi);
            bvp_err = std::max(bvp_err, std::abs(u[j] - exact));
        }
    }
    double bratu_err = 0.0;
    for (double lambda : {0.5, 1.0, 2.0}) {
        const auto u = dynsys::solve_bratu(lambda, grid);
        for (std::size_t j = 0; j < grid.size(); ++j) bratu_err = std::max(bratu_err, std::abs(u[j] - oracle::bratu_exact(lambda, grid[j])));
    }
    const dynsys::LotkaVolterraParams p;
    const dynsys::State u0 = (dynsys::State(2) << 10.0, 5.0).finished();
    const auto s = dynsys::integrate(dynsys::lotka_volterra(p), u0, 0.0, 25.0, 101);
    const double v0 = oracle::lv_invariant(p, u0[0], u0[1]);
    double drift = 0.0;
    for (Eigen::Index j = 0; j < s.states.cols(); ++j)
        drift = std::max(drift, std::abs(oracle::lv_invariant(p, s.states(0, j), s.states(1, j)) - v0) / std::abs(v0));
    const bool pass = bvp_err <= 1e-8 && bratu_err <= 1e-6 && drift <= 1e-6;
    return {pass, fmt("linear BVP max err %.3g (tol 1e-8, 20 k); Bratu max err %.3g (tol 1e-6); Lotka-Volterra drift %.3g (tol 1e-6)",
                      bvp_err, bratu_err, drift)};
}

Outcome frame_bounds() {
    const auto r = oracle::frame_bound_sweep(10, 31);
    return {r.worst_violation <= 1e-9 && r.cases == 20,
            fmt("%d cases (10 point sets x 2 kernels), worst bracket violation %.3g (tol 1e-9)", r.cases, r.worst_violation)};
}

Outcome fpr_convergence() {
    const auto toy = kuratowski::toy_problem();
    std::map<int, std::vector<double>> by_width;
    int diverged = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        kuratowski::FprOptions opt;
        opt.seed = seed;
        for (const auto& pt : kuratowski::fpr_curve(toy.geometry, toy.space, opt, 1)) {
            by_width[pt.width].push_back(pt.fpr);
            diverged += pt.diverged;
        }
    }
    std::string detail = "median FPR";
    std::vector<double> med;
    for (auto& [w, v] : by_width) {
        med.push_back(ex::median(v));
        detail += fmt(" w%d=%.3g", w, med.back());
    }
    bool monotone = diverged == 0;
    for (std::size_t i = 1; i < med.size(); ++i) monotone = monotone && med[i] <= med[i - 1];
    const bool pass = monotone && med.back() <= 0.01;
    return {pass, detail + fmt("; non-increasing %s; largest width <= 0.01 %s; eps = 0.05 x gap %.4f", monotone ? "yes" : "no",
                               med.back() <= 0.01 ? "yes" : "no", 0.05 * kuratowski::min_center_gap(toy.geometry, toy.space))};
}

// ---------------------------------------------------------------------------
// Desk-scale ODE-6 runs shared by several criteria

struct SeedRuns {
    double prep_seconds = 0.0;      // generation + res-64 registration
    double prep4_seconds = 0.0;     // res-4 registration
    ex::MethodResult sno1, sno0, kmeans, fpca, sno_res4;
};

struct DeskRuns {
    std::vector<SeedRuns> seeds;
    std::set<std::string> done;
};

ex::ExperimentSpec desk_spec() {
    ex::ExperimentSpec s;
    s.dataset = {"ode6", 100, 20, 16};
    s.registration.res = 64;
    s.encoder.kind = EncoderKind::rff;
    s.threads = 1;
    return s;
}

/// Runs the named pieces that have not run yet; returns the wall time spent.
double ensure(DeskRuns& d, const std::set<std::string>& need) {
    const auto t0 = Clock::now();
    std::set<std::string> todo;
    for (const auto& n : need)
        if (!d.done.contains(n)) todo.insert(n);
    if (todo.empty()) return 0.0;
    const auto spec = desk_spec();
    if (d.seeds.empty()) d.seeds.resize(5);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto& r = d.seeds[seed];
        auto tp = Clock::now();
        const Dataset ds = ex::generate(spec.dataset, seed, 1);
        const auto p = ex::prepare(ds, spec.registration, 1);
        r.prep_seconds = since(tp);
        if (todo.contains("sno1")) r.sno1 = ex::run_sno(spec, p, seed).result;
        if (todo.contains("sno0")) {
            auto s0 = spec;
            s0.train.alpha = 0.0;
            r.sno0 = ex::run_sno(s0, p, seed).result;
        }
        if (todo.contains("kmeans")) r.kmeans = ex::run_feature_kmeans(spec, p, seed);
        if (todo.contains("fpca")) r.fpca = ex::run_fpca(spec, p, seed);
        if (todo.contains("sno_res4")) {
            auto s4 = spec;
            s4.registration.res = 4;
            tp = Clock::now();
            const auto p4 = ex::prepare(ds, s4.registration, 1);
            r.prep4_seconds = since(tp);
            r.sno_res4 = ex::run_sno(s4, p4, seed).result;
        }
        std::fprintf(stderr, "  desk seed %llu done (%.0f s elapsed)\n", static_cast<unsigned long long>(seed), since(t0));
    }
    d.done.insert(todo.begin(), todo.end());
    return since(t0);
}

/// Wall time of every run a criterion depends on, including runs shared with other criteria.
double cost(const DeskRuns& d, const std::vector<std::string>& parts) {
    double t = 0.0;
    for (const auto& r : d.seeds) {
        t += r.prep_seconds;
        for (const auto& p : parts) {
            if (p == "sno1") t += r.sno1.seconds;
            if (p == "sno0") t += r.sno0.seconds;
            if (p == "kmeans") t += r.kmeans.seconds;
            if (p == "fpca") t += r.fpca.seconds;
            if (p == "sno_res4") t += r.sno_res4.seconds + r.prep4_seconds;
        }
    }
    return t;
}

template <class F>
std::vector<double> collect(const DeskRuns& d, F f) {
    std::vector<double> v;
    for (const auto& r : d.seeds) v.push_back(f(r));
    return v;
}

std::string list(const std::vector<double>& v) {
    std::string s;
    for (double x : v) s += (s.empty() ? "" : ",") + fmt("%.3f", x);
    return "[" + s + "]";
}

Outcome collapse_behavior(DeskRuns& d) {
    const auto share0 = collect(d, [](const SeedRuns& r) { return r.sno0.max_share; });
    const auto share1 = collect(d, [](const SeedRuns& r) { return r.sno1.max_share; });
    int collapsed0 = 0, collapsed1 = 0;
    for (double s : share0) collapsed0 += s >= ex::kCollapseShare;
    for (double s : share1) collapsed1 += s >= ex::kCollapseShare;
    return {collapsed0 >= 4 && collapsed1 == 0, fmt("alpha=0 max-share %s (%d/5 >= 0.95, need >= 4); alpha=1 max-share %s (%d collapsed, need 0)",
                                                    list(share0).c_str(), collapsed0, list(share1).c_str(), collapsed1)};
}

Outcome sno_vs_kmeans(DeskRuns& d) {
    const auto sno_ari = collect(d, [](const SeedRuns& r) { return r.sno1.scores.ari; });
    const auto km_ari = collect(d, [](const SeedRuns& r) { return r.kmeans.scores.ari; });
    const auto sno_acc = collect(d, [](const SeedRuns& r) { return r.sno1.scores.acc; });
    const double ms = ex::median(sno_ari), mk = ex::median(km_ari), ma = ex::median(sno_acc);
    return {ms >= mk + 0.05 && ma >= 0.60,
            fmt("median ARI SNO %.4f vs k-means %.4f (need margin >= 0.05, got %+.4f); median SNO ACC %.4f (need >= 0.60); SNO ARI %s, k-means ARI %s",
                ms, mk, ms - mk, ma, list(sno_ari).c_str(), list(km_ari).c_str())};
}

Outcome resolution_trend(DeskRuns& d) {
    const auto a64 = collect(d, [](const SeedRuns& r) { return r.sno1.scores.acc; });
    const auto a4 = collect(d, [](const SeedRuns& r) { return r.sno_res4.scores.acc; });
    const double m64 = ex::median(a64), m4 = ex::median(a4);
    return {m64 >= m4, fmt("median ACC res 64 %.4f vs res 4 %.4f; res 64 %s, res 4 %s", m64, m4, list(a64).c_str(), list(a4).c_str())};
}

Outcome functional_baselines(DeskRuns& d, double& dtw_seconds) {
    const auto t0 = Clock::now();
    std::vector<double> dtw_ari;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto ds = dynsys::sinusoid_families(20, {1.0, 5.0}, seed);
        std::vector<std::vector<double>> series;
        for (const auto& tr : ds.trajectories) series.push_back(tr.values);
        dtw_ari.push_back(ari(dtw_kmedoids(series, 2, seed).labels, ds.labels()));
    }
    dtw_seconds = since(t0);
    int dtw_perfect = 0;
    for (double a : dtw_ari) dtw_perfect += a == 1.0;
    const auto fpca = collect(d, [](const SeedRuns& r) { return r.fpca.scores.ari; });
    const auto sno = collect(d, [](const SeedRuns& r) { return r.sno1.scores.ari; });
    int below = 0;
    for (std::size_t i = 0; i < fpca.size(); ++i) below += fpca[i] < sno[i];
    return {dtw_perfect == 5 && below >= 4, fmt("DTW k-medoids ARI on sinusoid families %s; FPCA+k-means ARI %s below SNO ARI %s in %d/5 seeds (need >= 4)",
                                                list(dtw_ari).c_str(), list(fpca).c_str(), list(sno).c_str(), below)};
}

// ---------------------------------------------------------------------------
// Determinism through the command-line tool

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return out + "'";
}

int run(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

/// CSV text without the runtime_s column (wall-clock time is the only non-reproducible field).
std::string strip_runtime(const fs::path& p) {
    const auto d = report::read_csv(p.string());
    std::optional<std::size_t> skip;
    for (std::size_t i = 0; i < d.header.size(); ++i)
        if (d.header[i] == "runtime_s") skip = i;
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            if (!skip || i != *skip) out += cells[i] + ",";
        out += "\n";
    };
    line(d.header);
    for (const auto& r : d.rows) line(r);
    return out;
}

Outcome determinism(const std::string& cli, const fs::path& work) {
    const std::vector<std::string> commands{
        "gen ode6 --n 10 --seed 7 --out ode6.fncds --csv ode6.csv",
        "gen ode4 --n 5 --levels 5 --width 8 --seed 7 --out ode4.fncds",
        "render --data ode6.fncds --res 32 --out imgs.fncimg",
        "render --data ode4.fncds --res 16 --spectrogram --out spec.fncimg",
        "embed --images imgs.fncimg --encoder rff --dim 128 --seed 3 --out emb.fncemb",
        "embed --images imgs.fncimg --encoder frozen_mlp --dim 64 --seed 3 --out emb_mlp.fncemb",
        "train --data ode6.fncds --res 32 --dim 256 --epochs 3 --hidden 64,64 --seeds 0,1 --baseline kmeans,fpca,bspline,dtw --out train",
        "train --data ode6.fncds --res 32 --encoder external --embeddings emb.fncemb --epochs 2 --hidden 32 --seed 5 --out train_ext",
        "eval --checkpoint train/checkpoint_seed1.fnchead --data ode6.fncds --out eval.csv",
        "baseline --dataset ode4 --n 5 --levels 5 --width 8 --res 16 --dim 64 --seed 2 --out baseline",
        "ablate --data ode6.fncds --res 16 --dim 128 --epochs 2 --hidden 32 --seed 4 --out ablate",
        "sweep-res --data ode6.fncds --res-list 4,16 --dim 128 --epochs 2 --hidden 32 --seeds 0-1 --out sweep",
        "sensitivity --data ode6.fncds --alphas 0,1 --res 16 --dim 128 --epochs 2 --hidden 32 --seed 1 --out sens",
        "kuratowski frame-bounds --points random:7 --kernel laplacian:0.5 --seed 9 --out frame.csv",
        "kuratowski fpr --widths 4,16 --epochs 20 --n-train 300 --n-test 300 --seeds 0-1 --out fpr",
        "plot pca --embeddings emb.fncemb --data ode6.fncds --out pca.svg",
    };
    std::vector<std::string> failed_cmds;
    for (const char* tag : {"a", "b"}) {
        const auto dir = work / tag;
        fs::remove_all(dir);
        fs::create_directories(dir);
        for (const auto& c : commands) {
            if (run("cd " + shell_quote(dir.string()) + " && " + shell_quote(cli) + " --threads 1 " + c) != 0) failed_cmds.push_back(std::string(tag) + ": " + c.substr(0, c.find(' ', 5)));
        }
    }
    std::size_t files = 0, csv_files = 0;
    std::vector<std::string> differing;
    for (const auto& e : fs::recursive_directory_iterator(work / "a")) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), work / "a");
        const auto other = work / "b" / rel;
        ++files;
        bool same = fs::exists(other);
        if (same) {
            if (e.path().extension() == ".csv") {
                ++csv_files;
                same = strip_runtime(e.path()) == strip_runtime(other);
            } else {
                same = slurp(e.path()) == slurp(other);
            }
        }
        if (!same) differing.push_back(rel.string());
    }
    std::string detail = fmt("%zu commands run twice with --threads 1 in separate directories; %zu output files compared (%zu CSVs without runtime_s, rest byte-for-byte)",
                             commands.size(), files, csv_files);
    for (const auto& f : failed_cmds) detail += "; command failed: " + f;
    for (const auto& f : differing) detail += "; differs: " + f;
    if (differing.empty() && failed_cmds.empty()) detail += "; all identical";
    return {failed_cmds.empty() && differing.empty() && files > 0, detail};
}

}  // namespace

int main(int argc, char** argv) {
    fnclust::retain_freed_memory();
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <fnclust-cli> [--only 1,2,...] [--workdir DIR]\n", argv[0]);
        return 2;
    }
    const std::string cli = fs::absolute(argv[1]).string();
    std::set<int> only;
    fs::path work = fs::temp_directory_path() / "fnclust_acceptance";
    for (int i = 2; i + 1 < argc; i += 2) {
        const std::string flag = argv[i];
        if (flag == "--only") {
            std::stringstream ss(argv[i + 1]);
            for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
        } else if (flag == "--workdir") {
            work = fs::absolute(argv[i + 1]);
        }
    }
    auto want = [&](int id) { return only.empty() || only.contains(id); };

    auto timed = [](auto&& f) {
        const auto t0 = Clock::now();
        Outcome o = f();
        return std::pair{o, since(t0)};
    };

    if (want(1)) {
        auto [o, t] = timed(metric_oracles);
        report_line(1, "metric oracles", o, t, 5);
    }
    if (want(2)) {
        auto [o, t] = timed(gradient_check);
        report_line(2, "gradient finite differences", o, t, 30);
    }
    if (want(3)) {
        auto [o, t] = timed(solver_oracles);
        report_line(3, "solver oracles", o, t, 30);
    }
    if (want(4)) {
        auto [o, t] = timed(frame_bounds);
        report_line(4, "frame bounds", o, t, 10);
    }
    if (want(5)) {
        auto [o, t] = timed(fpr_convergence);
        report_line(5, "FPR convergence on the toy problem", o, t, 300);
    }

    DeskRuns desk;
    if (want(6)) {
        ensure(desk, {"sno1", "sno0"});
        report_line(6, "entropy term prevents collapse", collapse_behavior(desk), cost(desk, {"sno1", "sno0"}), 600);
    }
    if (want(7)) {
        ensure(desk, {"sno1", "kmeans"});
        report_line(7, "SNO vs k-means on identical features", sno_vs_kmeans(desk), cost(desk, {"sno1", "kmeans"}), 900);
    }
    if (want(8)) {
        ensure(desk, {"sno1", "sno_res4"});
        report_line(8, "resolution trend", resolution_trend(desk), cost(desk, {"sno1", "sno_res4"}), 1200);
    }
    if (want(9)) {
        ensure(desk, {"sno1", "fpca"});
        double dtw_seconds = 0.0;
        const auto o = functional_baselines(desk, dtw_seconds);
        report_line(9, "functional baselines", o, cost(desk, {"sno1", "fpca"}) + dtw_seconds, 600);
    }
    if (want(10)) {
        auto [o, t] = timed([&] { return determinism(cli, work); });
        report_line(10, "determinism", o, t, 0.0);
    }
    std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
