// fnclust command-line tool: dataset generation, rendering, embedding, training,
// evaluation, baselines, sweeps, kernel-space checks and plotting.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <json.hpp>

#include "fnclust/memory.hpp"
#include "fnclust/dynsys/dataset_io.hpp"
#include "fnclust/experiments.hpp"
#include "fnclust/kuratowski.hpp"
#include "fnclust/report.hpp"

namespace fs = std::filesystem;
using namespace fnclust;
using nlohmann::json;
using report::num;

namespace {

struct Global {
    int threads = default_threads();
    bool force = false;
    bool verbose = false;
};

Global g_opt;

// ---------------------------------------------------------------------------
// Small helpers

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

/// "0-4" or "0,2,5" (ranges may be mixed with lists: "0-2,7").
std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
    std::vector<std::uint64_t> out;
    for (const auto& part : split(s, ',')) {
        if (part.empty()) throw ParameterError("empty entry in seed list '" + s + "'");
        const auto dash = part.find('-');
        try {
            if (dash == std::string::npos) {
                out.push_back(std::stoull(part));
            } else {
                const auto a = std::stoull(part.substr(0, dash)), b = std::stoull(part.substr(dash + 1));
                if (b < a) throw ParameterError("descending seed range '" + part + "'");
                for (auto v = a; v <= b; ++v) out.push_back(v);
            }
        } catch (const std::logic_error&) {
            throw ParameterError("malformed seed list '" + s + "'");
        }
    }
    return out;
}

std::string seed_suffix(std::uint64_t seed) { return "_seed" + std::to_string(seed); }

/// Refuses to overwrite existing outputs unless --force was given.
void claim_outputs(const std::vector<std::string>& paths) {
    for (const auto& p : paths) {
        if (fs::exists(p) && !g_opt.force) throw Error("refusing to overwrite existing " + p + " (pass --force)");
        const auto parent = fs::path(p).parent_path();
        if (!parent.empty()) fs::create_directories(parent);
    }
}

std::string join_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void require_file(std::vector<std::string>& problems, const std::string& what, const std::string& path) {
    if (!path.empty() && !fs::is_regular_file(path)) problems.push_back(what + " '" + path + "' does not exist");
}

void throw_problems(const std::vector<std::string>& problems) {
    if (problems.empty()) return;
    std::string msg = "invalid configuration: " + problems.front();
    for (std::size_t i = 1; i < problems.size(); ++i) msg += "; " + problems[i];
    throw ParameterError(msg);
}

json encoder_json(const EncoderSpec& e) {
    json j{{"kind", encoder_name(e.kind)}, {"dim", e.dim}, {"seed", e.seed}, {"params", e.params}};
    if (!e.path.empty()) j["path"] = e.path;
    return j;
}

EncoderSpec encoder_from_json(const json& j) {
    EncoderSpec e;
    e.kind = parse_encoder_kind(j.at("kind").get<std::string>());
    e.dim = j.at("dim").get<int>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.params = j.at("params").get<std::map<std::string, double>>();
    e.path = j.value("path", std::string{});
    return e;
}

// ---------------------------------------------------------------------------
// Shared experiment options

struct ExperimentOptions {
    experiments::ExperimentSpec spec;
    std::string data;          // dataset file; generated per seed when empty
    std::string encoder = "rff";
    double bandwidth = 0.0;
    std::string reduction = "mean";
    std::optional<std::uint64_t> seed;
    std::string seeds;
    std::string out = "out";

    void add_to(CLI::App* app, bool with_training = true) {
        auto& s = spec;
        app->add_option("--data", data, "Dataset file (FNCDS1); generated per seed when omitted");
        app->add_option("--dataset", s.dataset.name, "Generator when --data is omitted: ode6 or ode4")->capture_default_str();
        app->add_option("--n", s.dataset.n, "Trajectories per subclass (ode6) or per level (ode4)")->capture_default_str();
        app->add_option("--levels", s.dataset.levels, "Complexity levels (ode4)")->capture_default_str();
        app->add_option("--width", s.dataset.width, "Neural field width (ode4)")->capture_default_str();
        app->add_option("--res", s.registration.res, "Image resolution")->capture_default_str();
        app->add_flag("--spectrogram", s.registration.spectrogram, "Register STFT magnitude images");
        app->add_option("--stft-window", s.registration.stft.window, "STFT window length")->capture_default_str();
        app->add_option("--stft-hop", s.registration.stft.hop, "STFT hop")->capture_default_str();
        app->add_option("--encoder", encoder, "pixels, rff, frozen_mlp or external")->capture_default_str();
        app->add_option("--dim", s.encoder.dim, "Feature dimension")->capture_default_str();
        app->add_option("--bandwidth", bandwidth, "RFF length scale (<= 0: median heuristic)")->capture_default_str();
        app->add_option("--embeddings", s.encoder.path, "FNCEMB1 file for the external encoder");
        app->add_option("--k", s.train.k, "Number of clusters")->capture_default_str();
        if (with_training) {
            app->add_option("--alpha", s.train.alpha, "Entropy weight")->capture_default_str();
            app->add_option("--epochs", s.train.epochs, "Training epochs")->capture_default_str();
            app->add_option("--batch", s.train.batch_size, "Batch size")->capture_default_str();
            app->add_option("--lr", s.train.lr0, "Initial learning rate")->capture_default_str();
            app->add_option("--hidden", s.train.hidden, "Hidden layer widths")->delimiter(',')->capture_default_str();
            app->add_option("--reduction", reduction, "Loss reduction: mean or sum")->capture_default_str();
            app->add_option("--crop-min", s.train.augment.crop_min, "Smallest crop fraction")->capture_default_str();
            app->add_option("--crop-max", s.train.augment.crop_max, "Largest crop fraction")->capture_default_str();
            app->add_option("--sigma-min", s.train.augment.sigma_min, "Smallest blur sigma")->capture_default_str();
            app->add_option("--sigma-max", s.train.augment.sigma_max, "Largest blur sigma")->capture_default_str();
            app->add_option("--gamma", s.gamma, "Membership threshold")->capture_default_str();
        }
        app->add_option("--seed", seed, "Seed (falls back to FNCLUST_SEED, then 0)")->envname("FNCLUST_SEED");
        app->add_option("--seeds", seeds, "Seed list such as 0-4 or 0,1,2 (overrides --seed)");
        app->add_option("--out", out, "Output directory")->capture_default_str();
    }

    std::vector<std::uint64_t> seed_list() const {
        if (!seeds.empty()) return parse_seed_list(seeds);
        return {seed.value_or(0)};
    }

    /// Resolves string options into the spec and collects every configuration problem.
    std::vector<std::string> finalize() {
        std::vector<std::string> problems;
        spec.threads = g_opt.threads;
        try {
            spec.encoder.kind = parse_encoder_kind(encoder);
        } catch (const ParameterError& e) {
            problems.emplace_back(e.what());
        }
        if (bandwidth > 0.0) spec.encoder.params["bandwidth"] = bandwidth;
        try {
            spec.train.loss_reduction = parse_reduction(reduction);
        } catch (const ParameterError& e) {
            problems.emplace_back(e.what());
        }
        for (auto& p : spec.train.problems()) problems.push_back(std::move(p));
        if (data.empty()) {
            if (spec.dataset.name != "ode6" && spec.dataset.name != "ode4")
                problems.push_back("unknown dataset '" + spec.dataset.name + "' (expected ode6 or ode4)");
            if (spec.dataset.n < 1) problems.emplace_back("n must be >= 1");
            if (spec.dataset.name == "ode4" && (spec.dataset.levels < 1 || spec.dataset.width < 1))
                problems.emplace_back("levels and width must be >= 1");
        }
        require_file(problems, "dataset file", data);
        if (spec.registration.res < 2) problems.emplace_back("res must be >= 2");
        if (spec.registration.stft.window < 2 || spec.registration.stft.hop < 1)
            problems.emplace_back("stft window must be >= 2 and hop >= 1");
        if (spec.encoder.dim < 1) problems.emplace_back("dim must be >= 1");
        if (spec.encoder.kind == EncoderKind::external && spec.encoder.path.empty())
            problems.emplace_back("external encoder requires --embeddings");
        require_file(problems, "embedding file", spec.encoder.path);
        if (!(spec.gamma > 0.0 && spec.gamma < 1.0)) problems.emplace_back("gamma must lie in (0, 1)");
        if (!seeds.empty()) {
            try {
                parse_seed_list(seeds);
            } catch (const ParameterError& e) {
                problems.emplace_back(e.what());
            }
        }
        return problems;
    }

    json config_json(const std::string& command) const {
        json j = experiments::to_json(spec);
        j["command"] = command;
        if (!data.empty()) j["data"] = data;
        return j;
    }

    Dataset dataset_for(std::uint64_t seed) const {
        if (!data.empty()) return load_dataset(data);
        return experiments::generate(spec.dataset, seed, spec.threads);
    }

    std::string dataset_label() const { return data.empty() ? spec.dataset.name : fs::path(data).stem().string(); }
};

const std::vector<std::string> kMetricColumns{"method", "dataset", "seed", "acc", "ari", "nmi", "runtime_s", "max_share", "collapse"};

std::vector<std::string> metric_cells(const experiments::MethodResult& r, const std::string& dataset) {
    return {r.method,         dataset,          std::to_string(r.seed), num(r.scores.acc), num(r.scores.ari), num(r.scores.nmi),
            num(r.seconds), num(r.max_share), r.collapsed ? "1" : "0"};
}

void print_result(const experiments::MethodResult& r) {
    std::printf("%-8s seed %-4llu acc %.4f  ari %.4f  nmi %.4f  max_share %.3f%s  (%.1fs)\n", r.method.c_str(),
                static_cast<unsigned long long>(r.seed), r.scores.acc, r.scores.ari, r.scores.nmi, r.max_share,
                r.collapsed ? "  COLLAPSE" : "", r.seconds);
    std::fflush(stdout);
}

experiments::SnoRun run_sno_logged(const experiments::ExperimentSpec& spec, const experiments::Prepared& p,
                                   std::uint64_t seed) {
    EpochCallback cb;
    if (g_opt.verbose)
        cb = [](const HeadParams&, EpochRecord& rec) {
            std::fprintf(stderr, "  epoch %3d lr %.2e loss %.4f (L_e %.4f L_con %.4f H %.4f) max_share %.3f\n", rec.epoch, rec.lr,
                         rec.loss.total, rec.loss.consistency, rec.loss.confidence, rec.loss.entropy, rec.max_share);
        };
    return experiments::run_sno(spec, p, seed, cb);
}

std::vector<std::string> parse_methods(const std::string& list) {
    std::vector<std::string> out;
    if (list.empty()) return out;
    static const std::set<std::string> valid{"kmeans", "fpca", "bspline", "dtw"};
    for (const auto& m : split(list, ','))
        if (!valid.contains(m)) throw ParameterError("unknown baseline '" + m + "' (valid: kmeans, fpca, bspline, dtw)");
        else out.push_back(m);
    return out;
}

/// Median/std per x of one y column, grouped by an x column.
report::Series grouped_series(const report::CsvData& d, const std::string& xcol, const std::string& ycol,
                              const std::string& name) {
    const auto xi = d.column(xcol), yi = d.column(ycol);
    std::map<double, std::vector<double>> groups;
    for (const auto& row : d.rows) groups[std::stod(row[xi])].push_back(std::stod(row[yi]));
    report::Series s{name, {}, {}, {}, {}};
    for (const auto& [x, ys] : groups) {
        const auto sm = report::summarize(ys);
        s.x.push_back(x);
        s.y.push_back(sm.median);
        s.lo.push_back(sm.median - sm.std);
        s.hi.push_back(sm.median + sm.std);
    }
    return s;
}

/// Median of one column over rows whose x column equals x.
double median_at(const report::CsvData& d, const std::string& xcol, double x, const std::string& ycol) {
    const auto xi = d.column(xcol), yi = d.column(ycol);
    std::vector<double> ys;
    for (const auto& row : d.rows)
        if (std::stod(row[xi]) == x) ys.push_back(std::stod(row[yi]));
    return report::summarize(ys).median;
}

// ---------------------------------------------------------------------------
// Commands

struct GenOptions {
    std::string name;
    int n = 100;
    int levels = 20;
    int width = 16;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string csv;
};

int cmd_gen(const GenOptions& o) {
    experiments::DatasetSpec d{o.name, o.n, o.levels, o.width};
    const auto seed = o.seed.value_or(0);
    std::vector<std::string> outs{o.out, sidecar_path(o.out)};
    if (!o.csv.empty()) outs.push_back(o.csv);
    claim_outputs(outs);
    const Dataset ds = experiments::generate(d, seed, g_opt.threads);
    save_dataset(ds, o.out);
    if (!o.csv.empty()) export_dataset_csv(ds, o.csv);
    std::size_t test = 0;
    for (const auto& t : ds.trajectories) test += t.split == Split::test;
    std::printf("wrote %zu trajectories (%d classes, %zu train, %zu test, grid %d) to %s\n", ds.size(), ds.num_classes(),
                ds.size() - test, test, ds.grid_size, o.out.c_str());
    return 0;
}

struct RenderOptions {
    std::string data;
    RegistrationSpec reg;
    std::string out;
    std::string pgm_dir;
    int pgm_count = 12;
};

int cmd_render(const RenderOptions& o) {
    std::vector<std::string> problems;
    require_file(problems, "dataset file", o.data);
    if (o.reg.res < 2) problems.emplace_back("res must be >= 2");
    throw_problems(problems);
    claim_outputs({o.out});
    const Dataset ds = load_dataset(o.data);
    const auto imgs = register_dataset(ds, o.reg, g_opt.threads);
    save_images(imgs, o.out);
    if (!o.pgm_dir.empty()) {
        fs::create_directories(o.pgm_dir);
        const auto n = std::min<std::size_t>(imgs.size(), static_cast<std::size_t>(std::max(o.pgm_count, 0)));
        for (std::size_t i = 0; i < n; ++i)
            save_pgm(imgs[i], join_path(o.pgm_dir, "img_" + std::to_string(imgs[i].source_id) + ".pgm"));
    }
    std::printf("wrote %zu %s images (%dx%d) to %s\n", imgs.size(), o.reg.spectrogram ? "spectrogram" : "trajectory", o.reg.res,
                o.reg.res, o.out.c_str());
    return 0;
}

struct EmbedOptions {
    std::string images;
    std::string encoder = "rff";
    int dim = 2048;
    double bandwidth = 0.0;
    std::optional<std::uint64_t> seed;
    std::string out;
};

int cmd_embed(const EmbedOptions& o) {
    std::vector<std::string> problems;
    require_file(problems, "image file", o.images);
    if (o.dim < 1) problems.emplace_back("dim must be >= 1");
    EncoderSpec spec;
    try {
        spec.kind = parse_encoder_kind(o.encoder);
        if (spec.kind == EncoderKind::external) problems.emplace_back("embed needs an image encoder (pixels, rff or frozen_mlp)");
    } catch (const ParameterError& e) {
        problems.emplace_back(e.what());
    }
    throw_problems(problems);
    claim_outputs({o.out});
    spec.dim = o.dim;
    spec.seed = o.seed.value_or(0);
    if (o.bandwidth > 0.0) spec.params["bandwidth"] = o.bandwidth;
    const auto imgs = load_images(o.images);
    const Encoder enc = make_encoder(spec, imgs);
    save_embeddings(source_ids(imgs), enc.encode_batch(imgs, g_opt.threads), o.out);
    std::printf("wrote %zu embeddings of dimension %d to %s\n", imgs.size(), enc.dim(), o.out.c_str());
    return 0;
}

struct TrainOptions {
    ExperimentOptions exp;
    std::string baselines;
};

int cmd_train(TrainOptions& o) {
    auto problems = o.exp.finalize();
    std::vector<std::string> methods;
    try {
        methods = parse_methods(o.baselines);
    } catch (const ParameterError& e) {
        problems.emplace_back(e.what());
    }
    throw_problems(problems);
    const auto seeds = o.exp.seed_list();
    const auto metrics_path = join_path(o.exp.out, "metrics.csv");
    std::vector<std::string> outs{metrics_path};
    for (auto s : seeds) {
        outs.push_back(join_path(o.exp.out, "checkpoint" + seed_suffix(s) + ".fnchead"));
        outs.push_back(join_path(o.exp.out, "predictions" + seed_suffix(s) + ".csv"));
    }
    claim_outputs(outs);
    const auto cfg = o.exp.config_json("train");
    const auto hash = experiments::config_hash(cfg);
    report::CsvTable metrics(kMetricColumns, hash);
    for (auto seed : seeds) {
        const Dataset ds = o.exp.dataset_for(seed);
        const auto p = experiments::prepare(ds, o.exp.spec.registration, o.exp.spec.threads);
        auto run = run_sno_logged(o.exp.spec, p, seed);
        print_result(run.result);
        metrics.add(metric_cells(run.result, o.exp.dataset_label()));

        Checkpoint ck;
        ck.params = run.params;
        ck.config = o.exp.spec.train;
        ck.config.seed = seed;
        ck.extra = {{"encoder", encoder_json(run.encoder)},
                    {"registration", cfg.at("registration")},
                    {"gamma", o.exp.spec.gamma},
                    {"config_hash", hash}};
        save_checkpoint(ck, join_path(o.exp.out, "checkpoint" + seed_suffix(seed) + ".fnchead"));

        report::CsvTable preds({"id", "truth", "pred"}, hash);
        for (std::size_t i = 0; i < p.test.size(); ++i)
            preds.add({std::to_string(p.test.trajectories[i].id), std::to_string(p.test.trajectories[i].class_label),
                       std::to_string(run.result.labels[i])});
        preds.save(join_path(o.exp.out, "predictions" + seed_suffix(seed) + ".csv"));

        for (const auto& m : methods) {
            const auto r = experiments::run_baseline(m, o.exp.spec, p, seed);
            print_result(r);
            metrics.add(metric_cells(r, o.exp.dataset_label()));
        }
    }
    metrics.save(metrics_path);
    std::printf("wrote %s\n", metrics_path.c_str());
    return 0;
}

struct EvalOptions {
    std::string predictions;
    std::string checkpoint;
    std::string data;
    std::string out = "eval.csv";
};

int cmd_eval(const EvalOptions& o) {
    std::vector<std::string> problems;
    if (o.predictions.empty() == o.checkpoint.empty()) problems.emplace_back("give exactly one of --predictions or --checkpoint");
    if (!o.checkpoint.empty() && o.data.empty()) problems.emplace_back("--checkpoint needs --data");
    require_file(problems, "predictions file", o.predictions);
    require_file(problems, "checkpoint file", o.checkpoint);
    require_file(problems, "dataset file", o.data);
    throw_problems(problems);
    claim_outputs({o.out});

    std::vector<int> truth, pred;
    std::string method, dataset, hash;
    std::uint64_t seed = 0;
    double share = 0.0;
    int k = 0;
    if (!o.predictions.empty()) {
        const auto d = report::read_csv(o.predictions);
        const auto ti = d.column("truth"), pi = d.column("pred");
        for (const auto& row : d.rows) {
            truth.push_back(std::stoi(row.at(ti)));
            pred.push_back(std::stoi(row.at(pi)));
        }
        method = "predictions";
        dataset = fs::path(o.predictions).stem().string();
        hash = experiments::config_hash(json{{"command", "eval"}, {"predictions", o.predictions}});
        for (int v : pred) k = std::max(k, v + 1);
    } else {
        const auto ck = load_checkpoint(o.checkpoint);
        const Dataset test = load_dataset(o.data).subset(Split::test);
        const auto& reg_j = ck.extra.at("registration");
        RegistrationSpec reg;
        reg.res = reg_j.at("res").get<int>();
        reg.spectrogram = reg_j.at("spectrogram").get<bool>();
        reg.stft.window = reg_j.at("stft_window").get<int>();
        reg.stft.hop = reg_j.at("stft_hop").get<int>();
        const auto imgs = register_dataset(test, reg, g_opt.threads);
        const Encoder enc(encoder_from_json(ck.extra.at("encoder")), reg.res * reg.res);
        const auto inf = infer(ck.params, imgs, enc, ck.extra.value("gamma", 0.5), g_opt.threads);
        truth = test.labels();
        pred = inf.labels;
        method = "sno";
        dataset = test.name;
        seed = ck.config.seed;
        k = ck.config.k;
        hash = ck.extra.value("config_hash", std::string{});
    }
    if (truth.empty()) throw ParameterError("no predictions to evaluate");
    share = experiments::detail::label_share(pred, k);
    experiments::MethodResult r;
    r.method = method;
    r.seed = seed;
    r.scores = score(pred, truth);
    r.max_share = share;
    r.collapsed = share >= experiments::kCollapseShare;
    report::CsvTable metrics(kMetricColumns, hash);
    metrics.add(metric_cells(r, dataset));
    metrics.save(o.out);
    print_result(r);
    return 0;
}

struct BaselineOptions {
    ExperimentOptions exp;
    std::string methods = "kmeans,fpca,bspline,dtw";
};

int cmd_baseline(BaselineOptions& o) {
    auto problems = o.exp.finalize();
    std::vector<std::string> methods;
    try {
        methods = parse_methods(o.methods);
        if (methods.empty()) problems.emplace_back("no baseline methods given");
    } catch (const ParameterError& e) {
        problems.emplace_back(e.what());
    }
    throw_problems(problems);
    const auto path = join_path(o.exp.out, "baselines.csv");
    claim_outputs({path});
    auto cfg = o.exp.config_json("baseline");
    cfg["methods"] = methods;
    report::CsvTable metrics(kMetricColumns, experiments::config_hash(cfg));
    for (auto seed : o.exp.seed_list()) {
        const auto p = experiments::prepare(o.exp.dataset_for(seed), o.exp.spec.registration, o.exp.spec.threads);
        for (const auto& m : methods) {
            const auto r = experiments::run_baseline(m, o.exp.spec, p, seed);
            print_result(r);
            metrics.add(metric_cells(r, o.exp.dataset_label()));
        }
    }
    metrics.save(path);
    std::printf("wrote %s\n", path.c_str());
    return 0;
}

const char* mark(bool on) { return on ? "on" : "off"; }

int cmd_ablate(ExperimentOptions& o) {
    throw_problems(o.finalize());
    const auto rows_path = join_path(o.out, "ablation.csv"), table_path = join_path(o.out, "ablation_table.csv");
    claim_outputs({rows_path, table_path});
    const auto hash = experiments::config_hash(o.config_json("ablate"));
    report::CsvTable rows({"dataset", "L_e", "L_con", "H", "seed", "acc", "ari", "nmi", "max_share", "status", "runtime_s"}, hash);
    const auto grid = experiments::ablation_grid();
    std::vector<std::vector<experiments::MethodResult>> per_combo(grid.size());
    for (auto seed : o.seed_list()) {
        const auto p = experiments::prepare(o.dataset_for(seed), o.spec.registration, o.spec.threads);
        for (std::size_t c = 0; c < grid.size(); ++c) {
            auto r = run_sno_logged(experiments::ablated(o.spec, grid[c]), p, seed).result;
            std::printf("L_e %-3s L_con %-3s H %-3s ", mark(grid[c][0]), mark(grid[c][1]), mark(grid[c][2]));
            print_result(r);
            rows.add({o.dataset_label(), mark(grid[c][0]), mark(grid[c][1]), mark(grid[c][2]), std::to_string(seed),
                      num(r.scores.acc), num(r.scores.ari), num(r.scores.nmi), num(r.max_share), r.collapsed ? "collapse" : "ok",
                      num(r.seconds)});
            per_combo[c].push_back(std::move(r));
        }
    }
    rows.save(rows_path);

    // One row per combination: medians, or "collapse" when most seeds collapsed.
    report::CsvTable table({"dataset", "L_e", "L_con", "H", "acc", "ari", "nmi"}, hash);
    std::printf("\n%-5s %-5s %-5s %-9s %-9s %-9s\n", "L_e", "L_con", "H", "ACC", "ARI", "NMI");
    for (std::size_t c = 0; c < grid.size(); ++c) {
        std::vector<double> acc, ari, nmi;
        std::size_t collapsed = 0;
        for (const auto& r : per_combo[c]) {
            acc.push_back(r.scores.acc);
            ari.push_back(r.scores.ari);
            nmi.push_back(r.scores.nmi);
            collapsed += r.collapsed;
        }
        std::vector<std::string> cells{o.dataset_label(), mark(grid[c][0]), mark(grid[c][1]), mark(grid[c][2])};
        if (2 * collapsed > per_combo[c].size()) {
            cells.insert(cells.end(), {"collapse", "collapse", "collapse"});
        } else {
            cells.insert(cells.end(), {num(experiments::median(acc)), num(experiments::median(ari)), num(experiments::median(nmi))});
        }
        std::printf("%-5s %-5s %-5s %-9.9s %-9.9s %-9.9s\n", cells[1].c_str(), cells[2].c_str(), cells[3].c_str(), cells[4].c_str(),
                    cells[5].c_str(), cells[6].c_str());
        table.add(std::move(cells));
    }
    table.save(table_path);
    std::printf("wrote %s and %s\n", rows_path.c_str(), table_path.c_str());
    return 0;
}

/// Shared body of sweep-res and sensitivity: one SNO run per (value, seed).
template <class Apply>
int sweep(ExperimentOptions& o, const std::string& command, const std::string& column, const std::vector<double>& values,
          bool log_x, Apply apply) {
    const auto csv_path = join_path(o.out, command + ".csv"), svg_path = join_path(o.out, command + ".svg");
    claim_outputs({csv_path, svg_path});
    auto cfg = o.config_json(command);
    cfg[column + "_values"] = values;
    const auto hash = experiments::config_hash(cfg);
    report::CsvTable rows({"method", "dataset", "seed", column, "acc", "ari", "nmi", "runtime_s", "max_share", "collapse"}, hash);
    for (auto seed : o.seed_list()) {
        const Dataset ds = o.dataset_for(seed);
        for (double v : values) {
            experiments::ExperimentSpec spec = o.spec;
            apply(spec, v);
            const auto p = experiments::prepare(ds, spec.registration, spec.threads);
            const auto r = run_sno_logged(spec, p, seed).result;
            std::printf("%s %-6s ", column.c_str(), num(v).c_str());
            print_result(r);
            rows.add({r.method, o.dataset_label(), std::to_string(seed), num(v), num(r.scores.acc), num(r.scores.ari),
                      num(r.scores.nmi), num(r.seconds), num(r.max_share), r.collapsed ? "1" : "0"});
        }
    }
    rows.save(csv_path);
    const auto data = report::read_csv(csv_path);
    std::vector<report::Series> series;
    for (const char* m : {"acc", "ari", "nmi"}) {
        std::string upper = m;
        for (auto& ch : upper) ch = static_cast<char>(std::toupper(ch));
        series.push_back(grouped_series(data, column, m, upper));
    }
    report::PlotOptions po;
    po.title = command == "sweep-res" ? "Clustering quality vs resolution" : "Clustering quality vs entropy weight";
    po.xlabel = column;
    po.ylabel = "median over seeds (band: +-1 std)";
    po.log_x = log_x;
    report::save_text(report::svg_plot(series, po), svg_path);
    std::printf("wrote %s and %s\n", csv_path.c_str(), svg_path.c_str());
    return 0;
}

int cmd_sweep_res(ExperimentOptions& o, const std::vector<int>& res_list) {
    auto problems = o.finalize();
    static const std::set<int> allowed{2, 4, 8, 16, 32, 64, 128, 224};
    if (res_list.size() < 2) problems.emplace_back("sweep-res needs at least two resolutions");
    for (int r : res_list)
        if (!allowed.contains(r)) problems.push_back("resolution " + std::to_string(r) + " not in {2,4,8,16,32,64,128,224}");
    throw_problems(problems);
    std::vector<double> values(res_list.begin(), res_list.end());
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    const int rc = sweep(o, "sweep-res", "res", values, true,
                         [](experiments::ExperimentSpec& s, double v) { s.registration.res = static_cast<int>(v); });
    const auto data = report::read_csv(join_path(o.out, "sweep-res.csv"));
    const double lo = median_at(data, "res", values.front(), "acc"), hi = median_at(data, "res", values.back(), "acc");
    std::printf("trend check: median ACC at res %s = %.4f %s median ACC at res %s = %.4f: %s\n", num(values.back()).c_str(), hi,
                hi >= lo ? ">=" : "<", num(values.front()).c_str(), lo, hi >= lo ? "PASS" : "FAIL");
    return rc;
}

int cmd_sensitivity(ExperimentOptions& o, const std::vector<double>& alphas) {
    auto problems = o.finalize();
    if (alphas.empty()) problems.emplace_back("sensitivity needs at least one alpha");
    for (double a : alphas)
        if (!(a >= 0.0)) problems.emplace_back("alpha values must be >= 0");
    throw_problems(problems);
    return sweep(o, "sensitivity", "alpha", alphas, false, [](experiments::ExperimentSpec& s, double v) { s.train.alpha = v; });
}

// --- kernel-space commands

struct KernelArg {
    kuratowski::KernelKind kind = kuratowski::KernelKind::gaussian;
    double length = 1.0;
};

KernelArg parse_kernel_arg(const std::string& s) {
    const auto colon = s.find(':');
    KernelArg k;
    k.kind = kuratowski::parse_kernel(s.substr(0, colon));
    if (colon != std::string::npos) {
        try {
            k.length = std::stod(s.substr(colon + 1));
        } catch (const std::logic_error&) {
            throw ParameterError("malformed kernel length in '" + s + "'");
        }
    }
    if (!(k.length > 0.0)) throw ParameterError("kernel length must be positive");
    return k;
}

Eigen::MatrixXd parse_points(const std::string& s, std::uint64_t seed) {
    if (s == "grid9") {
        Eigen::MatrixXd p(9, 2);
        for (int i = 0; i < 9; ++i) p.row(i) << i % 3, i / 3;
        return p;
    }
    if (s == "toy") return kuratowski::toy_problem().space.points;
    if (s.rfind("random:", 0) == 0) {
        int m = 0;
        try {
            m = std::stoi(s.substr(7));
        } catch (const std::logic_error&) {
        }
        if (m < 1) throw ParameterError("random point count must be >= 1");
        auto rng = make_rng(seed, {0x9017});
        Eigen::MatrixXd p(m, 2);
        for (int i = 0; i < m; ++i) p.row(i) << uniform(rng, 0.0, 3.0), uniform(rng, 0.0, 3.0);
        return p;
    }
    throw ParameterError("unknown point set '" + s + "' (valid: grid9, toy, random:M)");
}

struct FrameOptions {
    std::string points = "grid9";
    std::string kernel = "gaussian:1.0";
    int probes = 1000;
    std::optional<std::uint64_t> seed;
    std::string out = "frame_bounds.csv";
};

int cmd_frame_bounds(const FrameOptions& o) {
    const auto seed = o.seed.value_or(0);
    const auto k = parse_kernel_arg(o.kernel);
    const auto space = kuratowski::make_space(parse_points(o.points, seed), k.kind, k.length);
    claim_outputs({o.out});
    const auto fb = kuratowski::estimate_frame_bounds(space, o.probes, seed);
    const double lo = std::sqrt(std::max(fb.lambda_min, 0.0)), hi = std::sqrt(fb.lambda_max);
    const bool within = fb.c_low >= lo - 1e-9 && fb.c_high <= hi + 1e-9 && fb.c_low <= fb.c_high;
    const json cfg{{"command", "kuratowski frame-bounds"}, {"points", o.points}, {"kernel", kuratowski::kernel_name(k.kind)},
                   {"length", k.length}, {"probes", o.probes}};
    report::CsvTable t({"points", "kernel", "length", "m", "seed", "c_low", "c_high", "sqrt_lambda_min", "sqrt_lambda_max", "sampling",
                        "within_bracket"},
                       experiments::config_hash(cfg));
    t.add({o.points, kuratowski::kernel_name(k.kind), num(k.length), std::to_string(space.size()), std::to_string(seed), num(fb.c_low),
           num(fb.c_high), num(lo), num(hi), fb.sampling ? "1" : "0", within ? "1" : "0"});
    t.save(o.out);
    std::printf("points %s (M=%lld), kernel %s:%s\n", o.points.c_str(), static_cast<long long>(space.size()),
                kuratowski::kernel_name(k.kind), num(k.length).c_str());
    std::printf("c_low %.12g  c_high %.12g  bracket [%.12g, %.12g]  sampling %s  within %s\n", fb.c_low, fb.c_high, lo, hi,
                fb.sampling ? "yes" : "no", within ? "yes" : "no");
    return within ? 0 : 1;
}

struct FprCliOptions {
    kuratowski::FprOptions fpr;
    std::string seeds = "0-4";
    std::optional<std::uint64_t> seed;
    double gamma = 0.5;
    std::string out = "fpr";
};

int cmd_fpr(FprCliOptions& o) {
    std::vector<std::string> problems;
    if (o.fpr.widths.empty()) problems.emplace_back("no widths given");
    for (int w : o.fpr.widths)
        if (w < 1) problems.emplace_back("widths must be >= 1");
    if (o.fpr.epochs < 1 || o.fpr.batch_size < 1 || o.fpr.n_train < 1 || o.fpr.n_test < 1)
        problems.emplace_back("epochs, batch, n-train and n-test must be >= 1");
    if (!(o.gamma > 0.0 && o.gamma < 1.0)) problems.emplace_back("gamma must lie in (0, 1)");
    throw_problems(problems);
    const auto seeds = o.seed ? std::vector<std::uint64_t>{*o.seed} : parse_seed_list(o.seeds);
    const auto csv_path = join_path(o.out, "fpr.csv"), svg_path = join_path(o.out, "fpr.svg");
    claim_outputs({csv_path, svg_path});
    const auto toy = kuratowski::toy_problem(o.gamma);
    const json cfg{{"command", "kuratowski fpr"}, {"widths", o.fpr.widths}, {"epochs", o.fpr.epochs}, {"batch", o.fpr.batch_size},
                   {"lr", o.fpr.lr0}, {"hidden_layers", o.fpr.hidden_layers}, {"eps", o.fpr.margin_eps}, {"n_train", o.fpr.n_train},
                   {"n_test", o.fpr.n_test}, {"radius", o.fpr.probe_radius}, {"gamma", o.gamma}};
    report::CsvTable t({"width", "seed", "fpr", "fnr", "pairs", "train_loss", "diverged"}, experiments::config_hash(cfg));
    for (auto seed : seeds) {
        auto opt = o.fpr;
        opt.seed = seed;
        for (const auto& pt : kuratowski::fpr_curve(toy.geometry, toy.space, opt, g_opt.threads)) {
            std::printf("seed %-3llu width %-5d fpr %.6f fnr %.6f pairs %zu loss %.3e%s\n", static_cast<unsigned long long>(seed),
                        pt.width, pt.fpr, pt.fnr, pt.pairs, pt.train_loss, pt.diverged ? " DIVERGED" : "");
            t.add({std::to_string(pt.width), std::to_string(seed), num(pt.fpr), num(pt.fnr), std::to_string(pt.pairs), num(pt.train_loss),
                   pt.diverged ? "1" : "0"});
        }
    }
    t.save(csv_path);
    const auto data = report::read_csv(csv_path);
    auto s = grouped_series(data, "width", "fpr", "FPR");
    report::PlotOptions po;
    po.title = "False-positive rate vs head width";
    po.xlabel = "hidden width";
    po.ylabel = "FPR (median, band: +-1 std)";
    po.log_x = true;
    report::save_text(report::svg_plot({s}, po), svg_path);
    bool monotone = true;
    for (std::size_t i = 1; i < s.y.size(); ++i) monotone = monotone && s.y[i] <= s.y[i - 1];
    std::printf("median FPR by width:");
    for (std::size_t i = 0; i < s.x.size(); ++i) std::printf(" %s:%.6f", num(s.x[i]).c_str(), s.y[i]);
    std::printf("\nnon-increasing: %s\nwrote %s and %s\n", monotone ? "yes" : "no", csv_path.c_str(), svg_path.c_str());
    return 0;
}

// --- plot

struct PlotLineOptions {
    std::string csv;
    std::string x;
    std::vector<std::string> y;
    std::string title;
    bool log_x = false;
    std::string out;
};

int cmd_plot_line(const PlotLineOptions& o) {
    std::vector<std::string> problems;
    require_file(problems, "csv file", o.csv);
    throw_problems(problems);
    claim_outputs({o.out});
    const auto data = report::read_csv(o.csv);
    std::vector<report::Series> series;
    for (const auto& y : o.y) series.push_back(grouped_series(data, o.x, y, y));
    report::PlotOptions po;
    po.title = o.title.empty() ? fs::path(o.csv).filename().string() : o.title;
    po.xlabel = o.x;
    po.ylabel = "median (band: +-1 std)";
    po.log_x = o.log_x;
    report::save_text(report::svg_plot(series, po), o.out);
    std::printf("wrote %s\n", o.out.c_str());
    return 0;
}

struct PlotPcaOptions {
    std::string embeddings;
    std::string data;
    std::string predictions;
    std::string out;
};

int cmd_plot_pca(const PlotPcaOptions& o) {
    std::vector<std::string> problems;
    require_file(problems, "embedding file", o.embeddings);
    if (o.data.empty() == o.predictions.empty()) problems.emplace_back("give exactly one of --data or --predictions for colors");
    require_file(problems, "dataset file", o.data);
    require_file(problems, "predictions file", o.predictions);
    throw_problems(problems);
    claim_outputs({o.out});
    const auto table = load_embeddings(o.embeddings);
    std::vector<std::uint64_t> ids;
    std::vector<int> labels;
    if (!o.data.empty()) {
        for (const auto& t : load_dataset(o.data).trajectories)
            if (table.contains(t.id)) {
                ids.push_back(t.id);
                labels.push_back(t.class_label);
            }
    } else {
        const auto d = report::read_csv(o.predictions);
        const auto ii = d.column("id"), pi = d.column("pred");
        for (const auto& row : d.rows) {
            const auto id = std::stoull(row.at(ii));
            if (!table.contains(id)) continue;
            ids.push_back(id);
            labels.push_back(std::stoi(row.at(pi)));
        }
    }
    if (ids.size() < 2) throw ParameterError("fewer than two embeddings match the labels");
    Eigen::MatrixXd x(static_cast<Eigen::Index>(ids.size()), table.dim);
    for (std::size_t i = 0; i < ids.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = table.row(ids[i]).cast<double>().transpose();
    x.rowwise() -= x.colwise().mean();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
    const Eigen::Index nc = std::min<Eigen::Index>(2, svd.matrixV().cols());
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(x.rows(), 2);
    z.leftCols(nc) = x * svd.matrixV().leftCols(nc);
    std::map<int, report::Series> by_label;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto& s = by_label[labels[i]];
        s.name = "cluster " + std::to_string(labels[i]);
        s.x.push_back(z(static_cast<Eigen::Index>(i), 0));
        s.y.push_back(z(static_cast<Eigen::Index>(i), 1));
    }
    std::vector<report::Series> series;
    for (auto& [_, s] : by_label) series.push_back(std::move(s));
    report::PlotOptions po;
    po.title = "PCA projection of embeddings";
    po.xlabel = "PC1";
    po.ylabel = "PC2";
    po.lines = false;
    report::save_text(report::svg_plot(series, po), o.out);
    std::printf("wrote %s (%zu points)\n", o.out.c_str(), ids.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    fnclust::retain_freed_memory();
    CLI::App app{"fnclust: clustering of dynamical-system trajectories through frozen image features"};
    app.require_subcommand(1);
    app.set_config("--config", "", "INI file; [section] names match subcommands, flags override file values");
    app.add_option("--threads", g_opt.threads, "Worker threads (1 gives bitwise-reproducible runs)")->capture_default_str();
    app.add_flag("--force", g_opt.force, "Overwrite existing outputs");
    app.add_flag("-v,--verbose", g_opt.verbose, "Per-epoch training log on stderr");

    GenOptions gen;
    auto* c_gen = app.add_subcommand("gen", "Generate a dataset (ode6 or ode4)");
    c_gen->add_option("dataset", gen.name, "ode6 or ode4")->required()->check(CLI::IsMember({"ode6", "ode4"}));
    c_gen->add_option("--n", gen.n, "Trajectories per subclass (ode6) or per level (ode4)")->capture_default_str()->check(CLI::PositiveNumber);
    c_gen->add_option("--levels", gen.levels, "Complexity levels (ode4)")->capture_default_str()->check(CLI::PositiveNumber);
    c_gen->add_option("--width", gen.width, "Neural field width (ode4)")->capture_default_str()->check(CLI::PositiveNumber);
    c_gen->add_option("--seed", gen.seed, "Seed (falls back to FNCLUST_SEED, then 0)")->envname("FNCLUST_SEED");
    c_gen->add_option("--out", gen.out, "Output dataset file")->required();
    c_gen->add_option("--csv", gen.csv, "Also export one CSV row per trajectory");

    RenderOptions render;
    auto* c_render = app.add_subcommand("render", "Register a dataset as images (FNCIMG1)");
    c_render->add_option("--data", render.data, "Dataset file")->required();
    c_render->add_option("--res", render.reg.res, "Image resolution")->capture_default_str();
    c_render->add_flag("--spectrogram", render.reg.spectrogram, "STFT magnitude images");
    c_render->add_option("--stft-window", render.reg.stft.window, "STFT window length")->capture_default_str();
    c_render->add_option("--stft-hop", render.reg.stft.hop, "STFT hop")->capture_default_str();
    c_render->add_option("--out", render.out, "Output image file")->required();
    c_render->add_option("--pgm-dir", render.pgm_dir, "Also write the first images as PGM files here");
    c_render->add_option("--pgm-count", render.pgm_count, "Number of PGM previews")->capture_default_str();

    EmbedOptions embed;
    auto* c_embed = app.add_subcommand("embed", "Encode rendered images into an embedding file (FNCEMB1)");
    c_embed->add_option("--images", embed.images, "Image file")->required();
    c_embed->add_option("--encoder", embed.encoder, "pixels, rff or frozen_mlp")->capture_default_str();
    c_embed->add_option("--dim", embed.dim, "Feature dimension")->capture_default_str();
    c_embed->add_option("--bandwidth", embed.bandwidth, "RFF length scale (<= 0: median heuristic)")->capture_default_str();
    c_embed->add_option("--seed", embed.seed, "Seed (falls back to FNCLUST_SEED, then 0)")->envname("FNCLUST_SEED");
    c_embed->add_option("--out", embed.out, "Output embedding file")->required();

    TrainOptions train_o;
    auto* c_train = app.add_subcommand("train", "Train the cluster head; writes metrics, checkpoints and predictions");
    train_o.exp.add_to(c_train);
    c_train->add_option("--baseline", train_o.baselines, "Comma list of kmeans, fpca, bspline, dtw to run alongside");

    EvalOptions eval;
    auto* c_eval = app.add_subcommand("eval", "Score a checkpoint or a predictions CSV against the true labels");
    c_eval->add_option("--predictions", eval.predictions, "CSV with truth and pred columns");
    c_eval->add_option("--checkpoint", eval.checkpoint, "Checkpoint written by train");
    c_eval->add_option("--data", eval.data, "Dataset file (with --checkpoint); its test split is scored");
    c_eval->add_option("--out", eval.out, "Metrics CSV")->capture_default_str();

    BaselineOptions base;
    auto* c_base = app.add_subcommand("baseline", "Run baseline clusterers");
    base.exp.add_to(c_base, false);
    c_base->add_option("--methods", base.methods, "Comma list of kmeans, fpca, bspline, dtw")->capture_default_str();

    ExperimentOptions ablate;
    auto* c_ablate = app.add_subcommand("ablate", "All seven on/off combinations of the loss terms");
    ablate.add_to(c_ablate);

    ExperimentOptions sweep_o;
    std::vector<int> res_list;
    auto* c_sweep = app.add_subcommand("sweep-res", "Clustering quality across image resolutions");
    sweep_o.add_to(c_sweep);
    c_sweep->add_option("--res-list", res_list, "Resolutions, e.g. 4,64")->delimiter(',')->required();

    ExperimentOptions sens;
    std::vector<double> alphas{0.0, 0.25, 0.5, 1.0, 2.0};
    auto* c_sens = app.add_subcommand("sensitivity", "Clustering quality across entropy weights");
    sens.add_to(c_sens);
    c_sens->add_option("--alphas", alphas, "Entropy weights")->delimiter(',')->capture_default_str();

    auto* c_kur = app.add_subcommand("kuratowski", "Kernel-space frame bounds and membership FPR curves");
    c_kur->require_subcommand(1);
    FrameOptions frame;
    auto* c_frame = c_kur->add_subcommand("frame-bounds", "Empirical frame constants vs the Gram eigenvalue bracket");
    c_frame->add_option("--points", frame.points, "grid9, toy or random:M")->capture_default_str();
    c_frame->add_option("--kernel", frame.kernel, "kernel[:length], kernel in gaussian, laplacian")->capture_default_str();
    c_frame->add_option("--probes", frame.probes, "Random coefficient probes")->capture_default_str();
    c_frame->add_option("--seed", frame.seed, "Seed (falls back to FNCLUST_SEED, then 0)")->envname("FNCLUST_SEED");
    c_frame->add_option("--out", frame.out, "Output CSV")->capture_default_str();
    FprCliOptions fpr;
    auto* c_fpr = c_kur->add_subcommand("fpr", "False-positive rate of trained membership heads vs width");
    c_fpr->add_option("--widths", fpr.fpr.widths, "Hidden widths")->delimiter(',')->capture_default_str();
    c_fpr->add_option("--seeds", fpr.seeds, "Seed list")->capture_default_str();
    c_fpr->add_option("--seed", fpr.seed, "Single seed (overrides --seeds; falls back to FNCLUST_SEED)")->envname("FNCLUST_SEED");
    c_fpr->add_option("--epochs", fpr.fpr.epochs, "Training epochs")->capture_default_str();
    c_fpr->add_option("--batch", fpr.fpr.batch_size, "Batch size")->capture_default_str();
    c_fpr->add_option("--lr", fpr.fpr.lr0, "Initial learning rate")->capture_default_str();
    c_fpr->add_option("--hidden-layers", fpr.fpr.hidden_layers, "Hidden layers")->capture_default_str();
    c_fpr->add_option("--eps", fpr.fpr.margin_eps, "Margin exclusion (<= 0: 0.05 x min center gap)")->capture_default_str();
    c_fpr->add_option("--n-train", fpr.fpr.n_train, "Training probes")->capture_default_str();
    c_fpr->add_option("--n-test", fpr.fpr.n_test, "Test probes")->capture_default_str();
    c_fpr->add_option("--radius", fpr.fpr.probe_radius, "Probe box half-width")->capture_default_str();
    c_fpr->add_option("--gamma", fpr.gamma, "Membership threshold")->capture_default_str();
    c_fpr->add_option("--out", fpr.out, "Output directory")->capture_default_str();

    auto* c_plot = app.add_subcommand("plot", "SVG plots from CSV results or embeddings");
    c_plot->require_subcommand(1);
    PlotLineOptions pline;
    auto* c_line = c_plot->add_subcommand("line", "Median and std band of CSV columns grouped by an x column");
    c_line->add_option("--csv", pline.csv, "Input CSV")->required();
    c_line->add_option("--x", pline.x, "x column")->required();
    c_line->add_option("--y", pline.y, "y columns")->delimiter(',')->required();
    c_line->add_option("--title", pline.title, "Plot title");
    c_line->add_flag("--log-x", pline.log_x, "Logarithmic x axis");
    c_line->add_option("--out", pline.out, "Output SVG")->required();
    PlotPcaOptions ppca;
    auto* c_pca = c_plot->add_subcommand("pca", "2-D PCA scatter of embeddings colored by class or prediction");
    c_pca->add_option("--embeddings", ppca.embeddings, "Embedding file")->required();
    c_pca->add_option("--data", ppca.data, "Dataset file (colors by class)");
    c_pca->add_option("--predictions", ppca.predictions, "Predictions CSV (colors by predicted cluster)");
    c_pca->add_option("--out", ppca.out, "Output SVG")->required();

    CLI11_PARSE(app, argc, argv);
    if (g_opt.threads <= 0) g_opt.threads = default_threads();

    try {
        if (c_gen->parsed()) return cmd_gen(gen);
        if (c_render->parsed()) return cmd_render(render);
        if (c_embed->parsed()) return cmd_embed(embed);
        if (c_train->parsed()) return cmd_train(train_o);
        if (c_eval->parsed()) return cmd_eval(eval);
        if (c_base->parsed()) return cmd_baseline(base);
        if (c_ablate->parsed()) return cmd_ablate(ablate);
        if (c_sweep->parsed()) return cmd_sweep_res(sweep_o, res_list);
        if (c_sens->parsed()) return cmd_sensitivity(sens, alphas);
        if (c_frame->parsed()) return cmd_frame_bounds(frame);
        if (c_fpr->parsed()) return cmd_fpr(fpr);
        if (c_line->parsed()) return cmd_plot_line(pline);
        if (c_pca->parsed()) return cmd_plot_pca(ppca);
    } catch (const ParameterError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
