// Command-line front end.  Links only against the C API.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ipcamo/ipcamo.h"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitContract = 1;
constexpr int kExitUsage = 2;

// Thrown for configuration and usage problems (exit 2).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown for failed contracts (exit 1).
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(ipc_status s, const std::string& what) {
    if (s == IPC_OK) return;
    const std::string msg = what + ": " + ipc_status_string(s) + ": " + ipc_last_error();
    switch (s) {
    case IPC_ERR_INVALID_ARGUMENT:
    case IPC_ERR_IO:
    case IPC_ERR_NOT_FOUND:
    case IPC_ERR_PARSE:
        throw UsageError(msg);
    default:
        throw ContractError(msg);
    }
}

// Owning wrappers for the opaque handles.
template <typename T, void (*Free)(T*)>
struct Handle {
    T* p = nullptr;
    Handle() = default;
    explicit Handle(T* x) : p(x) {}
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    Handle(Handle&& o) noexcept : p(o.p) { o.p = nullptr; }
    Handle& operator=(Handle&& o) noexcept {
        std::swap(p, o.p);
        return *this;
    }
    ~Handle() {
        if (p) Free(p);
    }
    T* get() const { return p; }
};
using Graph = Handle<ipc_graph, ipc_graph_free>;
using Model = Handle<ipc_model, ipc_model_free>;
using Netlist = Handle<ipc_netlist, ipc_netlist_free>;
using DatasetH = Handle<ipc_dataset, ipc_dataset_free>;

std::string take(char* s) {
    std::string out = s ? s : "";
    ipc_string_free(s);
    return out;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw UsageError("cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string fixed(double v, int digits) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// Artifacts written during a run, recorded in manifest.json.
class Run {
public:
    Run(std::string command, fs::path out) : command_(std::move(command)), out_(std::move(out)) {
        fs::create_directories(out_);
    }

    const fs::path& dir() const { return out_; }

    void write(const fs::path& rel, const std::string& content) {
        const fs::path p = out_ / rel;
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        std::ofstream o(p, std::ios::binary);
        if (!o) throw UsageError("cannot write " + p.string());
        o << content;
        artifacts_.push_back({{"path", rel.generic_string()}, {"bytes", content.size()}, {"fnv1a64", hex(fnv1a(content))}});
    }

    void finish(const json& config, const json& summary, int status) {
        json m;
        m["tool"] = "ipcamo";
        m["version"] = ipc_version();
        m["command"] = command_;
        m["status"] = status;
        m["config"] = config;
        m["summary"] = summary;
        m["artifacts"] = artifacts_;
        std::ofstream o(out_ / "manifest.json", std::ios::binary);
        o << m.dump(1) << "\n";
    }

private:
    std::string command_;
    fs::path out_;
    json artifacts_ = json::array();
};

// ---- configuration ---------------------------------------------------------

struct Options {
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::vector<double> p;
    std::vector<double> th;
    std::optional<double> budget;
    std::string checkpoint;
    std::string bench;
    std::string dataset;
    std::string f;
    std::string a;
    std::string netlist;
    std::optional<double> ll_area;
    std::string gnn_label;
    bool random_baselines = false;
};

json load_config(const Options& o) {
    json cfg = json::object();
    if (!o.config_path.empty()) {
        try {
            cfg = json::parse(read_file(o.config_path));
        } catch (const json::exception& e) {
            throw UsageError(o.config_path + ": " + e.what());
        }
        if (!cfg.is_object()) throw UsageError(o.config_path + ": top level must be an object");
    }
    // flags win over the file
    if (!o.out.empty()) cfg["out"] = o.out;
    if (o.seed) cfg["seed"] = *o.seed;
    if (!o.p.empty()) cfg["camouflage"]["p"] = o.p;
    if (!o.th.empty()) cfg["camouflage"]["th"] = o.th;
    if (o.budget) cfg["attack"]["seconds"] = *o.budget;
    if (!o.checkpoint.empty()) cfg["checkpoint"] = o.checkpoint;
    if (!o.bench.empty()) cfg["bench_dir"] = o.bench;
    if (!o.dataset.empty()) cfg["dataset_dir"] = o.dataset;
    if (!o.f.empty() || !o.a.empty()) {
        cfg["camouflage"]["pairs"] = json::array({json{{"name", "pair"}, {"f", o.f}, {"a", o.a}}});
    }
    if (!o.f.empty()) cfg["f"] = o.f;
    if (!o.netlist.empty()) cfg["netlist"] = o.netlist;
    if (o.ll_area) cfg["attack"]["ll_area"] = *o.ll_area;
    return cfg;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw UsageError(std::string("config key '") + key + "' has the wrong type");
    }
}

json section(const json& cfg, const char* key) {
    return cfg.contains(key) ? cfg.at(key) : json::object();
}

std::string require_key(const json& cfg, const char* key) {
    const std::string v = get_or<std::string>(cfg, key, "");
    if (v.empty()) throw UsageError(std::string("missing '") + key + "' (flag or config)");
    return v;
}

std::uint64_t seed_of(const json& cfg) { return get_or<std::uint64_t>(cfg, "seed", 0); }

fs::path out_dir(const json& cfg) { return require_key(cfg, "out"); }

// "file.aag" or "file.aag:output": the single-output cone used by the pipeline.
Graph load_circuit(const std::string& spec, std::size_t max_nodes) {
    std::string path = spec, output;
    const auto colon = spec.rfind(':');
    if (colon != std::string::npos && colon + 1 < spec.size() && !fs::exists(spec)) {
        path = spec.substr(0, colon);
        output = spec.substr(colon + 1);
    }
    ipc_graph* g = nullptr;
    check(ipc_graph_read_aiger(path.c_str(), &g), "reading " + path);
    Graph whole(g);
    if (output.empty()) {
        ipc_graph_info info{};
        check(ipc_graph_info_get(whole.get(), &info), "inspecting " + path);
        if (info.pos != 1) throw UsageError(path + " has " + std::to_string(info.pos) + " outputs; name one as file:output");
        output = take([&] {
            char* s = nullptr;
            check(ipc_graph_output_name(whole.get(), 0, &s), "output name");
            return s;
        }());
    }
    ipc_graph* cone = nullptr;
    const ipc_status s = ipc_graph_extract_cone(whole.get(), output.c_str(), max_nodes, 0, &cone);
    if (s == IPC_ERR_LIMIT) throw UsageError(spec + ": cone exceeds " + std::to_string(max_nodes) + " nodes");
    check(s, "extracting " + spec);
    return Graph(cone);
}

Model load_model(const json& cfg) {
    const std::string path = require_key(cfg, "checkpoint");
    ipc_model* m = nullptr;
    check(ipc_model_load(path.c_str(), &m), "loading checkpoint " + path);
    return Model(m);
}

Netlist load_netlist(const fs::path& p) {
    ipc_netlist* n = nullptr;
    check(ipc_netlist_from_json(read_file(p).c_str(), &n), "reading " + p.string());
    return Netlist(n);
}

struct LoadedDataset {
    std::vector<Graph> graphs;
    std::vector<std::string> ids;
    std::vector<bool> train;
};

LoadedDataset load_dataset(const json& cfg) {
    const fs::path dir = require_key(cfg, "dataset_dir");
    json manifest;
    try {
        manifest = json::parse(read_file(dir / "dataset.json"));
    } catch (const json::exception& e) {
        throw UsageError((dir / "dataset.json").string() + ": " + e.what());
    }
    LoadedDataset d;
    for (const auto& e : manifest.at("graphs")) {
        ipc_graph* g = nullptr;
        const fs::path file = dir / e.at("file").get<std::string>();
        check(ipc_graph_read_aiger(file.string().c_str(), &g), "reading " + file.string());
        d.graphs.emplace_back(g);
        d.ids.push_back(e.at("id").get<std::string>());
        d.train.push_back(e.at("split").get<std::string>() == "train");
    }
    return d;
}

std::vector<const ipc_graph*> pointers(const std::vector<Graph>& gs, const std::vector<bool>* mask, bool want) {
    std::vector<const ipc_graph*> out;
    for (std::size_t k = 0; k < gs.size(); ++k) {
        if (!mask || (*mask)[k] == want) out.push_back(gs[k].get());
    }
    return out;
}

const char* outcome_name(ipc_attack_outcome o) {
    switch (o) {
    case IPC_ATTACK_UNIQUE_KEY: return "unique-key";
    case IPC_ATTACK_TIMEOUT: return "budget-exceeded";
    case IPC_ATTACK_MEMORY_LIMIT: return "memory-limit";
    }
    return "?";
}

json attack_json(const ipc_attack_result& r) {
    return json{{"outcome", outcome_name(r.outcome)},
                {"iterations", r.iterations},
                {"key_bits", r.key_bits},
                {"seconds", r.seconds},
                {"conflicts", r.conflicts},
                {"key_equivalent", r.key_equivalent},
                {"area_ratio", r.area_ratio}};
}

// ---- subcommands ---------------------------------------------------------------

int cmd_dataset(const json& cfg) {
    const std::string bench = require_key(cfg, "bench_dir");
    const json ds = section(cfg, "dataset");
    ipc_dataset_options o;
    ipc_dataset_options_default(&o);
    o.max_nodes = get_or<std::size_t>(ds, "max_nodes", o.max_nodes);
    o.min_nodes = get_or<std::size_t>(ds, "min_nodes", o.min_nodes);
    const std::string mode = get_or<std::string>(ds, "cone_mode", "shared");
    if (mode != "shared" && mode != "tree") throw UsageError("cone_mode must be 'shared' or 'tree'");
    o.tree_mode = mode == "tree";
    o.train_fraction = get_or<double>(ds, "train_fraction", o.train_fraction);
    o.seed = get_or<std::uint64_t>(ds, "seed", seed_of(cfg));
    o.dedupe = get_or<bool>(ds, "dedupe", o.dedupe != 0);

    ipc_dataset* raw = nullptr;
    check(ipc_dataset_build(bench.c_str(), &o, &raw), "building dataset");
    DatasetH d(raw);
    Run run("dataset", out_dir(cfg));
    json manifest = json::parse(take([&] {
        char* s = nullptr;
        check(ipc_dataset_manifest(d.get(), &s), "dataset manifest");
        return s;
    }()));
    for (std::size_t k = 0; k < ipc_dataset_size(d.get()); ++k) {
        const ipc_graph* g = nullptr;
        check(ipc_dataset_entry(d.get(), k, nullptr, nullptr, &g), "dataset entry");
        char name[32];
        std::snprintf(name, sizeof name, "graphs/g%05zu.aag", k);
        char* text = nullptr;
        check(ipc_graph_to_aiger(g, &text), "writing graph");
        run.write(name, take(text));
        manifest["graphs"][k]["file"] = name;
    }
    run.write("dataset.json", manifest.dump(1) + "\n");
    run.finish(cfg, manifest["totals"], kExitOk);
    std::cout << "dataset: " << manifest["totals"]["graphs"] << " graphs (" << manifest["totals"]["train"]
              << " train, " << manifest["totals"]["test"] << " test) -> " << run.dir().string() << "\n";
    return kExitOk;
}

int cmd_train(const json& cfg) {
    const LoadedDataset d = load_dataset(cfg);
    const auto train = pointers(d.graphs, &d.train, true);
    const auto val = pointers(d.graphs, &d.train, false);
    if (train.empty()) throw UsageError("dataset has no training graphs");

    const json mc = section(cfg, "model");
    ipc_model_options mo;
    ipc_model_options_default(&mo);
    mo.hidden = get_or<std::size_t>(mc, "hidden", mo.hidden);
    mo.latent = get_or<std::size_t>(mc, "latent", mo.latent);
    mo.mlp_hidden = get_or<std::size_t>(mc, "mlp_hidden", mo.mlp_hidden);
    mo.pi_cap = get_or<std::size_t>(mc, "pi_cap", mo.pi_cap);
    const json tc = section(cfg, "train");
    ipc_train_options to;
    ipc_train_options_default(&to);
    to.epochs = get_or<std::size_t>(tc, "epochs", to.epochs);
    to.lr = get_or<double>(tc, "lr", to.lr);
    to.patience = get_or<std::size_t>(tc, "patience", to.patience);
    to.seed = get_or<std::uint64_t>(tc, "seed", seed_of(cfg));

    ipc_model* raw = nullptr;
    check(ipc_model_create(&mo, to.seed, &raw), "creating model");
    Model m(raw);
    ipc_train_summary sum{};
    char* history = nullptr;
    auto progress = [](const ipc_epoch* e, void*) {
        std::fprintf(stderr, "epoch %zu train %.6f val %.6f\n", e->epoch, e->train_loss, e->val_loss);
    };
    check(ipc_model_train(m.get(), train.data(), train.size(), val.data(), val.size(), &to, progress, nullptr, &sum,
                          &history),
          "training");
    const double th = get_or<double>(tc, "agreement_th", 0.5);
    double agreement = 0.0;
    check(ipc_model_agreement(m.get(), train.data(), train.size(), th, &agreement), "agreement");

    Run run("train", out_dir(cfg));
    run.write("history.csv", take(history));
    const fs::path ckpt = run.dir() / "model.ckpt";
    const json meta = {{"train_graphs", train.size()}, {"val_graphs", val.size()}, {"epochs_run", sum.epochs_run}};
    check(ipc_model_save(m.get(), ckpt.string().c_str(), meta.dump().c_str()), "saving checkpoint");
    const json summary = {{"checkpoint", "model.ckpt"},
                          {"checksum", take([&] {
                               char* s = nullptr;
                               check(ipc_model_checksum(m.get(), &s), "checksum");
                               return s;
                           }())},
                          {"epochs_run", sum.epochs_run},
                          {"best_epoch", sum.best_epoch},
                          {"best_val_loss", sum.best_val_loss},
                          {"first_train_loss", sum.first_train_loss},
                          {"last_train_loss", sum.last_train_loss},
                          {"early_stopped", static_cast<bool>(sum.early_stopped)},
                          {"train_agreement", agreement},
                          {"agreement_th", th}};
    run.write("summary.json", summary.dump(1) + "\n");
    run.finish(cfg, summary, kExitOk);
    std::cout << "train: " << sum.epochs_run << " epochs, best epoch " << sum.best_epoch << ", agreement "
              << agreement << " -> " << ckpt.string() << "\n";
    return kExitOk;
}

std::vector<double> grid(const json& cam, const char* key, std::vector<double> fallback) {
    const auto v = get_or<std::vector<double>>(cam, key, fallback);
    if (v.empty()) throw UsageError(std::string("empty ") + key + " list");
    return v;
}

int cmd_camouflage(const json& cfg) {
    const json cam = section(cfg, "camouflage");
    const auto ps = grid(cam, "p", {0.1, 0.3, 0.5, 0.7, 0.9});
    const auto ths = grid(cam, "th", {0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09});
    for (double p : ps) {
        if (!(p >= 0.0 && p <= 1.0)) throw UsageError("p values must lie in [0, 1]");
    }
    for (double t : ths) {
        if (!(t > 0.0 && t < 1.0)) throw UsageError("th values must lie in (0, 1)");
    }
    if (!cam.contains("pairs") || !cam["pairs"].is_array() || cam["pairs"].empty()) {
        throw UsageError("no (F, A) pairs: give --f and --a or camouflage.pairs in the config");
    }
    const std::size_t max_nodes = get_or<std::size_t>(cam, "max_nodes", 200);
    const std::uint64_t seed = get_or<std::uint64_t>(cam, "seed", seed_of(cfg));
    const Model m = load_model(cfg);
    Run run("camouflage", out_dir(cfg));
    json rows = json::array();
    int status = kExitOk;
    for (const auto& pair : cam["pairs"]) {
        const std::string name = get_or<std::string>(pair, "name", "pair");
        const Graph f = load_circuit(get_or<std::string>(pair, "f", ""), max_nodes);
        const Graph a = load_circuit(get_or<std::string>(pair, "a", ""), max_nodes);
        for (double p : ps) {
            for (double th : ths) {
                ipc_netlist* raw = nullptr;
                check(ipc_camouflage(f.get(), a.get(), m.get(), p, th, seed, &raw), "camouflage " + name);
                Netlist n(raw);
                const std::string file = "netlists/" + name + "_p" + fixed(p, 2) + "_th" + fixed(th, 2) + ".json";
                run.write(file, take([&] {
                    char* s = nullptr;
                    check(ipc_netlist_to_json(n.get(), &s), "serializing");
                    return s;
                }()));
                ipc_netlist_info info{};
                check(ipc_netlist_info_get(n.get(), &info), "netlist info");
                double area = 0.0;
                check(ipc_netlist_area_overhead(n.get(), f.get(), &area), "area");
                ipc_verify_result v{};
                check(ipc_verify(f.get(), n.get(), IPC_EQUIV_AUTO, 0.0, &v), "verify");
                if (!v.equal) status = kExitContract;
                rows.push_back({{"pair", name},
                                {"p", p},
                                {"th", th},
                                {"file", file},
                                {"placements", info.placements},
                                {"candidates", info.candidates},
                                {"key_bits", info.key_bits},
                                {"area_overhead", area},
                                {"equivalent", static_cast<bool>(v.equal)}});
            }
        }
    }
    const json summary = {{"netlists", rows.size()}, {"rows", rows}};
    run.write("summary.json", summary.dump(1) + "\n");
    run.finish(cfg, json{{"netlists", rows.size()}}, status);
    std::cout << "camouflage: " << rows.size() << " netlists -> " << run.dir().string() << "\n";
    if (status != kExitOk) std::cerr << "camouflage: equivalence failure, see summary.json\n";
    return status;
}

std::vector<fs::path> netlist_files(const std::string& spec) {
    std::vector<fs::path> files;
    if (fs::is_directory(spec)) {
        for (const auto& e : fs::recursive_directory_iterator(spec)) {
            if (e.is_regular_file() && e.path().extension() == ".json" && e.path().filename() != "manifest.json" &&
                e.path().filename() != "summary.json") {
                files.push_back(e.path());
            }
        }
        std::sort(files.begin(), files.end());
    } else if (fs::is_regular_file(spec)) {
        files.push_back(spec);
    }
    if (files.empty()) throw UsageError("no netlists at " + spec);
    return files;
}

int cmd_verify(const json& cfg) {
    const std::size_t max_nodes = get_or<std::size_t>(section(cfg, "camouflage"), "max_nodes", 200);
    const Graph f = load_circuit(require_key(cfg, "f"), max_nodes);
    const double seconds = get_or<double>(section(cfg, "verify"), "seconds", 0.0);
    Run run("verify", out_dir(cfg));
    json rows = json::array();
    int status = kExitOk;
    for (const fs::path& file : netlist_files(require_key(cfg, "netlist"))) {
        const Netlist n = load_netlist(file);
        ipc_verify_result v{};
        check(ipc_verify(f.get(), n.get(), IPC_EQUIV_AUTO, seconds, &v), "verify " + file.string());
        const bool ok = v.decided && v.equal && v.keyed_equal != 0;
        if (!ok) status = kExitContract;
        rows.push_back({{"netlist", file.string()},
                        {"decided", static_cast<bool>(v.decided)},
                        {"equivalent", static_cast<bool>(v.equal)},
                        {"method", v.used_truth_table ? "truth-table" : "miter"},
                        {"keyed_equivalent", v.keyed_equal}});
        std::cout << (ok ? "PASS " : "FAIL ") << file.string() << "\n";
    }
    const json summary = {{"checked", rows.size()}, {"all_equivalent", status == kExitOk}, {"rows", rows}};
    run.write("verify.json", summary.dump(1) + "\n");
    run.finish(cfg, json{{"checked", rows.size()}, {"all_equivalent", status == kExitOk}}, status);
    return status;
}

int cmd_attack(const json& cfg) {
    const json at = section(cfg, "attack");
    ipc_attack_options o;
    ipc_attack_options_default(&o);
    o.seconds = get_or<double>(at, "seconds", o.seconds);
    o.conflicts = get_or<std::uint64_t>(at, "conflicts", o.conflicts);
    o.memory_bytes = get_or<std::size_t>(at, "memory_bytes", o.memory_bytes);
    if (o.seconds < 0) throw UsageError("budget must be non-negative");

    Run run("attack", out_dir(cfg));
    json rows = json::array();
    const std::string f_spec = get_or<std::string>(cfg, "f", "");
    std::optional<Graph> f;
    if (!f_spec.empty()) f = load_circuit(f_spec, get_or<std::size_t>(section(cfg, "camouflage"), "max_nodes", 200));
    for (const fs::path& file : netlist_files(require_key(cfg, "netlist"))) {
        const Netlist n = load_netlist(file);
        ipc_attack_result r{};
        check(ipc_attack_netlist(n.get(), &o, &r), "attacking " + file.string());
        json row = attack_json(r);
        row["target"] = file.string();
        row["kind"] = "camouflage";
        std::cout << file.string() << ": " << outcome_name(r.outcome) << " after " << r.iterations
                  << " DIPs, " << r.seconds << " s\n";
        if (f) {
            // logic-locking baseline matched to this netlist's area (or a fixed ratio)
            const double ratio = get_or<double>(at, "ll_area", std::max(1.0, r.area_ratio));
            ipc_attack_result b{};
            check(ipc_attack_ll_baseline(f->get(), ratio, seed_of(cfg), &o, &b), "attacking LL baseline");
            row["ll_baseline"] = attack_json(b);
            std::cout << "  LL baseline at " << b.area_ratio << "x: " << outcome_name(b.outcome) << " after "
                      << b.iterations << " DIPs\n";
        }
        rows.push_back(row);
    }
    const json summary = {{"rows", rows}};
    run.write("attack.json", summary.dump(1) + "\n");
    run.finish(cfg, json{{"attacked", rows.size()}}, kExitOk);
    return kExitOk;
}

int cmd_eval(const json& cfg) {
    const json ev = section(cfg, "eval");
    Run run("eval", out_dir(cfg));
    json summary = json::object();

    if (cfg.contains("dataset_dir")) {
        const Model m = load_model(cfg);
        const LoadedDataset d = load_dataset(cfg);
        const std::string split = get_or<std::string>(ev, "split", "test");
        std::vector<const ipc_graph*> gs;
        if (split == "all") {
            gs = pointers(d.graphs, nullptr, true);
        } else if (split == "test" || split == "train") {
            gs = pointers(d.graphs, &d.train, split == "train");
        } else {
            throw UsageError("eval.split must be train, test or all");
        }
        const auto limit = get_or<std::size_t>(ev, "max_graphs", 0);
        if (limit && gs.size() > limit) gs.resize(limit);
        ipc_study_summary s{};
        char *pairs = nullptr, *bins = nullptr, *sj = nullptr;
        check(ipc_ged_lsd_study(gs.data(), gs.size(), m.get(), get_or<std::size_t>(ev, "bins", 20),
                                get_or<std::int64_t>(ev, "ged_timeout_ms", 10000), get_or<unsigned>(ev, "threads", 0),
                                &s, &pairs, &bins, &sj),
              "GED/LSD study");
        run.write("ged_lsd/pairs.csv", take(pairs));
        run.write("ged_lsd/bins.csv", take(bins));
        const std::string sjs = take(sj);
        run.write("ged_lsd/summary.json", sjs);
        summary["ged_lsd"] = json::parse(sjs);
        std::cout << "ged/lsd: " << s.valid << "/" << s.pairs << " valid pairs, r = "
                  << (s.r_defined ? std::to_string(s.r) : std::string("undefined")) << "\n";
    }

    if (cfg.contains("netlist")) {
        std::vector<Netlist> nets;
        std::vector<std::string> labels;
        for (const fs::path& file : netlist_files(cfg["netlist"].get<std::string>())) {
            nets.push_back(load_netlist(file));
            labels.push_back(get_or<std::string>(ev, "gnn_label", file.stem().string()));
        }
        std::vector<const ipc_netlist*> np;
        std::vector<const char*> lp;
        for (std::size_t k = 0; k < nets.size(); ++k) {
            np.push_back(nets[k].get());
            lp.push_back(labels[k].c_str());
        }
        const fs::path gnn = run.dir() / "gnn";
        check(ipc_export_gnn(np.data(), lp.data(), np.size(), gnn.string().c_str()), "GNN export");
        summary["gnn_export"] = {{"netlists", nets.size()}, {"dir", "gnn"}};
        std::cout << "gnn: exported " << nets.size() << " netlists\n";
    }

    if (get_or<bool>(ev, "random_baselines", false) || cfg.contains("random_area")) {
        const Graph f = load_circuit(require_key(cfg, "f"), 200);
        json rb = json::array();
        const double area = get_or<double>(ev, "random_area", get_or<double>(cfg, "random_area", 1.5));
        for (const auto& [label, mode, value] :
             std::vector<std::tuple<std::string, ipc_random_mode, double>>{{"rand5", IPC_RANDOM_FRACTION, 0.05},
                                                                          {"randam", IPC_RANDOM_MATCH_AREA, area}}) {
            ipc_netlist* raw = nullptr;
            check(ipc_random_insertion(f.get(), mode, value, seed_of(cfg), &raw), "random insertion " + label);
            Netlist n(raw);
            run.write("random/" + label + ".json", take([&] {
                char* s = nullptr;
                check(ipc_netlist_to_json(n.get(), &s), "serializing");
                return s;
            }()));
            ipc_netlist_info info{};
            check(ipc_netlist_info_get(n.get(), &info), "info");
            double ov = 0.0;
            check(ipc_netlist_area_overhead(n.get(), f.get(), &ov), "area");
            rb.push_back({{"baseline", label}, {"placements", info.placements}, {"area_overhead", ov}});
        }
        summary["random_baselines"] = rb;
    }

    if (summary.empty()) throw UsageError("eval needs --dataset with --checkpoint, --netlist, or random baselines");
    run.write("summary.json", summary.dump(1) + "\n");
    run.finish(cfg, summary, kExitOk);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Circuit camouflaging toolkit"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "JSON config file; flags override its keys")->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "run output directory");
        sub->add_option("--seed", o.seed, "seed for every random choice");
    };
    CLI::App* ds = app.add_subcommand("dataset", "extract PO cones and split them");
    common(ds);
    ds->add_option("--bench", o.bench, "directory of .aag benchmarks");

    CLI::App* tr = app.add_subcommand("train", "train the graph VAE");
    common(tr);
    tr->add_option("--dataset", o.dataset, "output directory of a dataset run");

    CLI::App* cam = app.add_subcommand("camouflage", "run the pipeline over a p x th grid");
    common(cam);
    cam->add_option("--checkpoint", o.checkpoint, "trained model");
    cam->add_option("--f", o.f, "functional circuit, file.aag[:output]");
    cam->add_option("--a", o.a, "appearance circuit, file.aag[:output]");
    cam->add_option("--p", o.p, "interpolation proportions")->delimiter(',');
    cam->add_option("--th", o.th, "filter thresholds")->delimiter(',');

    CLI::App* ver = app.add_subcommand("verify", "check camouflaged netlists against F");
    common(ver);
    ver->add_option("--f", o.f, "functional circuit, file.aag[:output]");
    ver->add_option("--netlist", o.netlist, "netlist file or directory");

    CLI::App* att = app.add_subcommand("attack", "DIP attack on keyized netlists");
    common(att);
    att->add_option("--netlist", o.netlist, "netlist file or directory");
    att->add_option("--budget", o.budget, "seconds per attack (0 = unlimited)");
    att->add_option("--f", o.f, "also attack an area-matched XOR/XNOR-locked copy of this circuit");
    att->add_option("--ll-area", o.ll_area, "fixed area ratio for the locking baseline");

    CLI::App* ev = app.add_subcommand("eval", "GED/LSD study, GNN export, random baselines");
    common(ev);
    ev->add_option("--checkpoint", o.checkpoint, "trained model");
    ev->add_option("--dataset", o.dataset, "output directory of a dataset run");
    ev->add_option("--netlist", o.netlist, "netlists to export for GNN tooling");
    ev->add_option("--f", o.f, "circuit for the random insertion baselines");
    ev->add_flag("--random-baselines", o.random_baselines, "emit Rand5% and RandAM netlists of --f");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        json cfg = load_config(o);
        if (o.random_baselines) cfg["eval"]["random_baselines"] = true;
        if (ds->parsed()) return cmd_dataset(cfg);
        if (tr->parsed()) return cmd_train(cfg);
        if (cam->parsed()) return cmd_camouflage(cfg);
        if (ver->parsed()) return cmd_verify(cfg);
        if (att->parsed()) return cmd_attack(cfg);
        if (ev->parsed()) return cmd_eval(cfg);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitContract;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitContract;
    }
    return kExitUsage;
}
