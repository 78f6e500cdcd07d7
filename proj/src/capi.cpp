#include "ipcamo/ipcamo.h"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "ipcamo/aiger.hpp"
#include "ipcamo/attack.hpp"
#include "ipcamo/camouflage.hpp"
#include "ipcamo/dataset.hpp"
#include "ipcamo/evaluation.hpp"
#include "ipcamo/ged.hpp"
#include "ipcamo/vae.hpp"
#include "json.hpp"

using namespace ipcamo;

struct ipc_graph {
    AigGraph g;
};
struct ipc_dataset {
    Dataset d;
    DatasetConfig cfg;
    std::vector<ipc_graph> graphs;
};
struct ipc_model {
    AigVae m;
};
struct ipc_netlist {
    CamouflagedNetlist c;
};

namespace {

thread_local std::string g_error;

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

ipc_status fail(ipc_status s, const std::string& msg) {
    g_error = msg;
    return s;
}

// Runs f, translating exceptions into status codes.
template <typename F>
ipc_status guarded(F&& f) {
    try {
        g_error.clear();
        f();
        return IPC_OK;
    } catch (const IoError& e) {
        return fail(IPC_ERR_IO, e.what());
    } catch (const ParseError& e) {
        return fail(IPC_ERR_PARSE, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(IPC_ERR_PARSE, e.what());
    } catch (const GraphError& e) {
        return fail(IPC_ERR_GRAPH, e.what());
    } catch (const CircuitError& e) {
        return fail(IPC_ERR_GRAPH, e.what());
    } catch (const std::out_of_range& e) {
        return fail(IPC_ERR_NOT_FOUND, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(IPC_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::logic_error& e) {
        return fail(IPC_ERR_CONTRACT, e.what());
    } catch (const std::runtime_error& e) {
        return fail(IPC_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(IPC_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(IPC_ERR_INTERNAL, "unknown exception");
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

void require_file(const char* path) {
    require(path != nullptr, "null path");
    if (!std::filesystem::is_regular_file(path)) throw IoError(std::string("no such file: ") + path);
}

char* dup_string(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

void put_string(char** out, const std::string& s) {
    if (out) *out = dup_string(s);
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::vector<AigGraph> graph_list(const ipc_graph* const* gs, std::size_t n) {
    require(gs != nullptr || n == 0, "null graph list");
    std::vector<AigGraph> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        require(gs[k] != nullptr, "null graph in list");
        out.push_back(gs[k]->g);
    }
    return out;
}

DipBudget budget_of(const ipc_attack_options* o) {
    ipc_attack_options d;
    ipc_attack_options_default(&d);
    if (!o) o = &d;
    DipBudget b;
    b.seconds = o->seconds;
    b.conflicts = o->conflicts;
    b.memory_bytes = o->memory_bytes;
    return b;
}

ipc_attack_outcome outcome_of(DipOutcome o) {
    switch (o) {
    case DipOutcome::UniqueKey: return IPC_ATTACK_UNIQUE_KEY;
    case DipOutcome::Timeout: return IPC_ATTACK_TIMEOUT;
    case DipOutcome::MemoryLimit: return IPC_ATTACK_MEMORY_LIMIT;
    }
    return IPC_ATTACK_TIMEOUT;
}

void fill_attack(const Circuit& keyed, const Circuit& reference, const DipResult& r, ipc_attack_result* out) {
    out->outcome = outcome_of(r.outcome);
    out->iterations = r.iterations();
    out->key_bits = keyed.keys().size();
    out->seconds = r.seconds;
    out->conflicts = r.stats.conflicts;
    out->key_equivalent = -1;
    if (r.outcome == DipOutcome::UniqueKey) {
        const EquivResult e = equivalence_check(reference, apply_key(keyed, r.key));
        out->key_equivalent = e.decided ? static_cast<int>(e.equal) : -1;
    }
}

}  // namespace

extern "C" {

const char* ipc_version(void) { return "1.0.0"; }

const char* ipc_status_string(ipc_status s) {
    switch (s) {
    case IPC_OK: return "ok";
    case IPC_ERR_INVALID_ARGUMENT: return "invalid argument";
    case IPC_ERR_IO: return "i/o error";
    case IPC_ERR_PARSE: return "parse error";
    case IPC_ERR_GRAPH: return "graph error";
    case IPC_ERR_NOT_FOUND: return "not found";
    case IPC_ERR_LIMIT: return "limit exceeded";
    case IPC_ERR_CONTRACT: return "contract violation";
    case IPC_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* ipc_last_error(void) { return g_error.c_str(); }

void ipc_string_free(char* s) { std::free(s); }

// ---- graphs ----

ipc_status ipc_graph_read_aiger(const char* path, ipc_graph** out) {
    return guarded([&] {
        require(out != nullptr, "null output");
        require_file(path);
        *out = new ipc_graph{read_aiger_file(path)};
    });
}

ipc_status ipc_graph_parse_aiger(const char* text, ipc_graph** out) {
    return guarded([&] {
        require(text && out, "null argument");
        *out = new ipc_graph{parse_aiger(text)};
    });
}

ipc_status ipc_graph_to_aiger(const ipc_graph* g, char** out) {
    return guarded([&] {
        require(g && out, "null argument");
        *out = dup_string(write_aiger(g->g));
    });
}

ipc_status ipc_graph_info_get(const ipc_graph* g, ipc_graph_info* out) {
    return guarded([&] {
        require(g && out, "null argument");
        out->nodes = g->g.size();
        out->pis = g->g.count(NodeType::PI);
        out->pos = g->g.count(NodeType::PO);
        out->ands = g->g.count(NodeType::AND);
        out->edges = g->g.edge_count();
        out->cells = cell_count(g->g);
        out->canonical = g->g.is_canonical();
        out->tree = g->g.is_tree();
    });
}

ipc_status ipc_graph_output_name(const ipc_graph* g, size_t k, char** out) {
    return guarded([&] {
        require(g && out, "null argument");
        const auto pos = g->g.pos();
        if (k >= pos.size()) throw std::out_of_range("output index out of range");
        *out = dup_string(g->g.node(pos[k]).name);
    });
}

ipc_status ipc_graph_extract_cone(const ipc_graph* g, const char* output, size_t max_nodes, int tree_mode,
                                  ipc_graph** out) {
    bool too_big = false;
    const ipc_status s = guarded([&] {
        require(g && output && out, "null argument");
        if (!g->g.find_po(output)) throw std::out_of_range(std::string("no output named ") + output);
        auto cone = extract_cone(g->g, output, max_nodes, tree_mode ? ConeMode::Tree : ConeMode::Shared);
        if (!cone) {
            too_big = true;
            return;
        }
        *out = new ipc_graph{std::move(*cone)};
    });
    if (s == IPC_OK && too_big) return fail(IPC_ERR_LIMIT, "cone exceeds the node limit");
    return s;
}

ipc_status ipc_graph_edit_distance(const ipc_graph* a, const ipc_graph* b, int64_t timeout_ms, size_t* distance,
                                   int* timed_out) {
    return guarded([&] {
        require(a && b && distance && timed_out, "null argument");
        require(timeout_ms > 0, "timeout must be positive");
        const GedResult r = graph_edit_distance(a->g, b->g, std::chrono::milliseconds(timeout_ms));
        *distance = r.distance;
        *timed_out = r.timed_out;
    });
}

void ipc_graph_free(ipc_graph* g) { delete g; }

// ---- dataset ----

void ipc_dataset_options_default(ipc_dataset_options* o) {
    if (!o) return;
    const DatasetConfig d;
    o->max_nodes = d.max_nodes;
    o->min_nodes = d.min_nodes;
    o->tree_mode = d.mode == ConeMode::Tree;
    o->train_fraction = d.train_fraction;
    o->seed = d.seed;
    o->dedupe = d.dedupe;
}

ipc_status ipc_dataset_build(const char* bench_dir, const ipc_dataset_options* o, ipc_dataset** out) {
    return guarded([&] {
        require(bench_dir && out, "null argument");
        if (!std::filesystem::is_directory(bench_dir)) throw IoError(std::string("no such directory: ") + bench_dir);
        ipc_dataset_options opt;
        ipc_dataset_options_default(&opt);
        if (o) opt = *o;
        auto ds = std::make_unique<ipc_dataset>();
        ds->cfg.max_nodes = opt.max_nodes ? opt.max_nodes : kDefaultMaxNodes;
        ds->cfg.min_nodes = opt.min_nodes;
        ds->cfg.mode = opt.tree_mode ? ConeMode::Tree : ConeMode::Shared;
        ds->cfg.train_fraction = opt.train_fraction;
        ds->cfg.seed = opt.seed;
        ds->cfg.dedupe = opt.dedupe != 0;
        ds->d = build_dataset(list_aag_files(bench_dir), ds->cfg);
        for (const auto& e : ds->d.entries) ds->graphs.push_back(ipc_graph{e.graph});
        *out = ds.release();
    });
}

size_t ipc_dataset_size(const ipc_dataset* d) { return d ? d->d.entries.size() : 0; }

ipc_status ipc_dataset_entry(const ipc_dataset* d, size_t k, const char** id, int* train, const ipc_graph** graph) {
    return guarded([&] {
        require(d != nullptr, "null dataset");
        if (k >= d->d.entries.size()) throw std::out_of_range("dataset index out of range");
        if (id) *id = d->d.entries[k].id.c_str();
        if (train) *train = d->d.entries[k].train;
        if (graph) *graph = &d->graphs[k];
    });
}

ipc_status ipc_dataset_manifest(const ipc_dataset* d, char** json) {
    return guarded([&] {
        require(d && json, "null argument");
        *json = dup_string(dataset_manifest_json(d->d, d->cfg));
    });
}

void ipc_dataset_free(ipc_dataset* d) { delete d; }

// ---- model ----

void ipc_model_options_default(ipc_model_options* o) {
    if (!o) return;
    const VaeConfig c;
    o->hidden = c.hidden;
    o->latent = c.latent;
    o->mlp_hidden = c.mlp_hidden;
    o->pi_cap = c.pi_cap;
}

void ipc_train_options_default(ipc_train_options* o) {
    if (!o) return;
    const TrainConfig c;
    o->epochs = c.epochs;
    o->lr = c.lr;
    o->patience = c.patience;
    o->seed = c.seed;
    o->alpha = c.weights.alpha;
    o->beta = c.weights.beta;
    o->gamma = c.weights.gamma;
    o->delta = c.weights.delta;
}

ipc_status ipc_model_create(const ipc_model_options* o, uint64_t seed, ipc_model** out) {
    return guarded([&] {
        require(out != nullptr, "null output");
        ipc_model_options opt;
        ipc_model_options_default(&opt);
        if (o) opt = *o;
        require(opt.hidden && opt.latent && opt.mlp_hidden && opt.pi_cap, "model dimensions must be positive");
        VaeConfig c;
        c.hidden = opt.hidden;
        c.latent = opt.latent;
        c.mlp_hidden = opt.mlp_hidden;
        c.pi_cap = opt.pi_cap;
        *out = new ipc_model{AigVae(c, seed)};
    });
}

ipc_status ipc_model_load(const char* path, ipc_model** out) {
    return guarded([&] {
        require(out != nullptr, "null output");
        require_file(path);
        *out = new ipc_model{AigVae::load(path)};
    });
}

ipc_status ipc_model_save(const ipc_model* m, const char* path, const char* metadata_json) {
    return guarded([&] {
        require(m && path, "null argument");
        m->m.save(path, metadata_json ? metadata_json : "{}");
    });
}

ipc_status ipc_model_checksum(const ipc_model* m, char** hex) {
    return guarded([&] {
        require(m && hex, "null argument");
        *hex = dup_string(hex64(m->m.checksum()));
    });
}

ipc_status ipc_model_config_json(const ipc_model* m, char** json) {
    return guarded([&] {
        require(m && json, "null argument");
        *json = dup_string(m->m.config().to_json());
    });
}

ipc_status ipc_model_train(ipc_model* m, const ipc_graph* const* train, size_t n_train, const ipc_graph* const* val,
                           size_t n_val, const ipc_train_options* o, ipc_epoch_callback cb, void* user,
                           ipc_train_summary* summary, char** history) {
    return guarded([&] {
        require(m != nullptr, "null model");
        require(n_train > 0, "empty training set");
        ipc_train_options opt;
        ipc_train_options_default(&opt);
        if (o) opt = *o;
        TrainConfig tc;
        tc.epochs = opt.epochs;
        tc.lr = opt.lr;
        tc.patience = opt.patience;
        tc.seed = opt.seed;
        tc.weights = LossWeights{opt.alpha, opt.beta, opt.gamma, opt.delta};
        std::function<void(const EpochRecord&)> hook;
        if (cb) {
            hook = [&](const EpochRecord& r) {
                const ipc_epoch e{r.epoch, r.train_loss, r.val_loss};
                cb(&e, user);
            };
        }
        const TrainResult r = train_vae(m->m, graph_list(train, n_train), graph_list(val, n_val), tc, hook);
        if (summary) {
            summary->epochs_run = r.history.size();
            summary->best_epoch = r.best_epoch;
            summary->best_val_loss = r.best_val_loss;
            summary->first_train_loss = r.history.empty() ? 0.0 : r.history.front().train_loss;
            summary->last_train_loss = r.history.empty() ? 0.0 : r.history.back().train_loss;
            summary->early_stopped = r.early_stopped;
        }
        put_string(history, history_csv(r));
    });
}

ipc_status ipc_model_agreement(const ipc_model* m, const ipc_graph* const* graphs, size_t n, double th, double* out) {
    return guarded([&] {
        require(m && out, "null argument");
        require(n > 0, "no graphs");
        *out = reconstruction_agreement(m->m, graph_list(graphs, n), th);
    });
}

void ipc_model_free(ipc_model* m) { delete m; }

// ---- camouflage ----

ipc_status ipc_camouflage(const ipc_graph* f, const ipc_graph* a, const ipc_model* m, double p, double th,
                          uint64_t seed, ipc_netlist** out) {
    return guarded([&] {
        require(f && a && m && out, "null argument");
        *out = new ipc_netlist{camouflage_pipeline(f->g, a->g, m->m, p, th, seed)};
    });
}

ipc_status ipc_random_insertion(const ipc_graph* f, ipc_random_mode mode, double value, uint64_t seed,
                                ipc_netlist** out) {
    return guarded([&] {
        require(f && out, "null argument");
        std::mt19937_64 rng(seed);
        const RandomInsertion ri =
            mode == IPC_RANDOM_MATCH_AREA ? RandomInsertion::match_area(value) : RandomInsertion::fraction(value);
        *out = new ipc_netlist{random_covert_insertion(f->g, ri, rng)};
    });
}

ipc_status ipc_netlist_to_json(const ipc_netlist* n, char** json) {
    return guarded([&] {
        require(n && json, "null argument");
        *json = dup_string(to_json(n->c));
    });
}

ipc_status ipc_netlist_from_json(const char* json, ipc_netlist** out) {
    return guarded([&] {
        require(json && out, "null argument");
        *out = new ipc_netlist{camouflaged_from_json(json)};
    });
}

ipc_status ipc_netlist_info_get(const ipc_netlist* n, ipc_netlist_info* out) {
    return guarded([&] {
        require(n && out, "null argument");
        const KeyedNetlist k = keyize_netlist(n->c.appearance_view, covert_cells(n->c));
        out->placements = n->c.placements.size();
        out->fix_steps = n->c.fix_log.size();
        out->warnings = n->c.warnings.size();
        out->appearance_gates = n->c.appearance_view.size();
        out->appearance_cells = appearance_cell_count(n->c);
        out->appearance_inputs = n->c.appearance_view.inputs().size();
        out->key_bits = k.key_count();
        out->candidates = k.elements.size();
        out->correct_key_known = k.correct_key_known;
    });
}

ipc_status ipc_netlist_area_overhead(const ipc_netlist* n, const ipc_graph* f, double* out) {
    return guarded([&] {
        require(n && f && out, "null argument");
        *out = area_overhead(n->c, f->g);
    });
}

ipc_status ipc_netlist_write_view(const ipc_netlist* n, ipc_view v, char** text) {
    return guarded([&] {
        require(n && text, "null argument");
        switch (v) {
        case IPC_VIEW_APPEARANCE: *text = dup_string(write_gates(n->c.appearance_view)); return;
        case IPC_VIEW_FUNCTIONAL: *text = dup_string(write_gates(functional_circuit(n->c))); return;
        case IPC_VIEW_KEYED:
            *text = dup_string(write_gates(keyize_netlist(n->c.appearance_view, covert_cells(n->c)).circuit));
            return;
        }
        throw std::invalid_argument("unknown view");
    });
}

void ipc_netlist_free(ipc_netlist* n) { delete n; }

// ---- verification and attacks ----

ipc_status ipc_verify(const ipc_graph* f, const ipc_netlist* n, ipc_equiv_mode mode, double seconds,
                      ipc_verify_result* out) {
    return guarded([&] {
        require(f && n && out, "null argument");
        require(seconds >= 0.0, "negative time budget");
        const EquivMode em = mode == IPC_EQUIV_TRUTH_TABLE ? EquivMode::TruthTable
                             : mode == IPC_EQUIV_MITER     ? EquivMode::Miter
                                                           : EquivMode::Auto;
        SatBudget b;
        b.seconds = seconds;
        const Circuit ref = circuit_from_aig(f->g);
        const Circuit fc = functional_circuit(n->c);
        const EquivResult r = equivalence_check(ref, fc, em, b);
        out->decided = r.decided;
        out->equal = r.equal;
        out->used_truth_table = r.used == EquivMode::TruthTable;
        const KeyedNetlist k = keyize_netlist(n->c.appearance_view, covert_cells(n->c));
        out->keyed_equal = -1;
        if (k.correct_key_known) {
            const EquivResult kr = equivalence_check(ref, apply_key(k.circuit, k.correct_key), em, b);
            if (kr.decided) out->keyed_equal = kr.equal;
        }
    });
}

void ipc_attack_options_default(ipc_attack_options* o) {
    if (!o) return;
    const DipBudget b;
    o->seconds = b.seconds;
    o->conflicts = b.conflicts;
    o->memory_bytes = b.memory_bytes;
}

ipc_status ipc_attack_netlist(const ipc_netlist* n, const ipc_attack_options* o, ipc_attack_result* out) {
    return guarded([&] {
        require(n && out, "null argument");
        const KeyedNetlist k = keyize_netlist(n->c.appearance_view, covert_cells(n->c));
        const Circuit oracle = functional_circuit(n->c);
        const DipResult r = dip_attack(k.circuit, circuit_oracle(oracle), budget_of(o));
        fill_attack(k.circuit, oracle, r, out);
        const double base = static_cast<double>(cell_count(n->c.functional_view));
        out->area_ratio = base > 0 ? static_cast<double>(appearance_cell_count(n->c)) / base : 0.0;
    });
}

ipc_status ipc_attack_ll_baseline(const ipc_graph* f, double area_ratio, uint64_t seed, const ipc_attack_options* o,
                                  ipc_attack_result* out) {
    return guarded([&] {
        require(f && out, "null argument");
        std::mt19937_64 rng(seed);
        const LockedBaseline ll = make_ll_baseline(f->g, area_ratio, rng);
        const Circuit oracle = circuit_from_aig(f->g);
        const DipResult r = dip_attack(ll.circuit, circuit_oracle(oracle), budget_of(o));
        fill_attack(ll.circuit, oracle, r, out);
        out->area_ratio = ll.area_ratio();
    });
}

// ---- evaluation ----

ipc_status ipc_ged_lsd_study(const ipc_graph* const* graphs, size_t n, const ipc_model* m, size_t bins,
                             int64_t timeout_ms, unsigned threads, ipc_study_summary* summary, char** pairs,
                             char** bin_stats, char** summary_js) {
    return guarded([&] {
        require(m != nullptr, "null model");
        require(timeout_ms > 0, "timeout must be positive");
        StudyConfig cfg;
        cfg.bins = bins ? bins : 20;
        cfg.ged_timeout = std::chrono::milliseconds(timeout_ms);
        cfg.threads = threads;
        const CorrelationReport r = ged_lsd_study(graph_list(graphs, n), m->m, cfg);
        if (summary) {
            summary->pairs = r.pairs.size();
            summary->valid = r.valid;
            summary->discarded = r.discarded;
            summary->r_defined = r.r.has_value();
            summary->r = r.r.value_or(0.0);
            summary->r_binned_defined = r.r_binned.has_value();
            summary->r_binned = r.r_binned.value_or(0.0);
        }
        put_string(pairs, pairs_csv(r));
        put_string(bin_stats, bins_csv(r));
        put_string(summary_js, summary_json(r));
    });
}

ipc_status ipc_export_gnn(const ipc_netlist* const* nets, const char* const* labels, size_t n, const char* dir) {
    return guarded([&] {
        require(dir != nullptr, "null directory");
        require((nets && labels) || n == 0, "null list");
        std::vector<LabeledNetlist> ls;
        for (size_t k = 0; k < n; ++k) {
            require(nets[k] != nullptr, "null netlist in list");
            ls.push_back(labeled_appearance(nets[k]->c, labels[k] ? labels[k] : ""));
        }
        export_gnn_dataset(ls, dir);
    });
}

}  // extern "C"
