#ifndef IPCAMO_H
#define IPCAMO_H

/* C interface to the ipcamo toolkit.  All objects are opaque handles owned by
 * the caller and released with the matching *_free function.  Functions return
 * an ipc_status; on failure ipc_last_error() describes the problem for the
 * calling thread.  Strings returned through char** are heap-allocated and must
 * be released with ipc_string_free. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define IPC_API __declspec(dllexport)
#else
#define IPC_API __attribute__((visibility("default")))
#endif

typedef enum ipc_status {
    IPC_OK = 0,
    IPC_ERR_INVALID_ARGUMENT = 1, /* null handle, value out of range */
    IPC_ERR_IO = 2,               /* file missing or unwritable */
    IPC_ERR_PARSE = 3,            /* malformed AIGER, JSON, checkpoint */
    IPC_ERR_GRAPH = 4,            /* graph violates a structural contract */
    IPC_ERR_NOT_FOUND = 5,        /* unknown output name, index out of range */
    IPC_ERR_LIMIT = 6,            /* size limit exceeded */
    IPC_ERR_CONTRACT = 7,         /* internal invariant violated */
    IPC_ERR_INTERNAL = 8
} ipc_status;

typedef struct ipc_graph ipc_graph;
typedef struct ipc_dataset ipc_dataset;
typedef struct ipc_model ipc_model;
typedef struct ipc_netlist ipc_netlist;

IPC_API const char* ipc_version(void);
IPC_API const char* ipc_status_string(ipc_status s);
IPC_API const char* ipc_last_error(void);
IPC_API void ipc_string_free(char* s);

/* ---- graphs ---------------------------------------------------------------- */

typedef struct ipc_graph_info {
    size_t nodes;
    size_t pis;
    size_t pos;
    size_t ands;
    size_t edges;
    size_t cells; /* AND gates plus one inverter per inverted edge */
    int canonical;
    int tree;
} ipc_graph_info;

IPC_API ipc_status ipc_graph_read_aiger(const char* path, ipc_graph** out);
IPC_API ipc_status ipc_graph_parse_aiger(const char* text, ipc_graph** out);
IPC_API ipc_status ipc_graph_to_aiger(const ipc_graph* g, char** out);
IPC_API ipc_status ipc_graph_info_get(const ipc_graph* g, ipc_graph_info* out);
IPC_API ipc_status ipc_graph_output_name(const ipc_graph* g, size_t k, char** out);
/* IPC_ERR_LIMIT when the cone has more than max_nodes nodes. */
IPC_API ipc_status ipc_graph_extract_cone(const ipc_graph* g, const char* output, size_t max_nodes, int tree_mode,
                                          ipc_graph** out);
IPC_API ipc_status ipc_graph_edit_distance(const ipc_graph* a, const ipc_graph* b, int64_t timeout_ms,
                                           size_t* distance, int* timed_out);
IPC_API void ipc_graph_free(ipc_graph* g);

/* ---- dataset ----------------------------------------------------------------- */

typedef struct ipc_dataset_options {
    size_t max_nodes; /* 0 selects the default of 200 */
    size_t min_nodes;
    int tree_mode;
    double train_fraction;
    uint64_t seed;
    int dedupe;
} ipc_dataset_options;

IPC_API void ipc_dataset_options_default(ipc_dataset_options* o);
/* Every *.aag file of bench_dir, sorted by name. */
IPC_API ipc_status ipc_dataset_build(const char* bench_dir, const ipc_dataset_options* o, ipc_dataset** out);
IPC_API size_t ipc_dataset_size(const ipc_dataset* d);
IPC_API ipc_status ipc_dataset_entry(const ipc_dataset* d, size_t k, const char** id, int* train,
                                     const ipc_graph** graph);
IPC_API ipc_status ipc_dataset_manifest(const ipc_dataset* d, char** json);
IPC_API void ipc_dataset_free(ipc_dataset* d);

/* ---- model --------------------------------------------------------------------- */

typedef struct ipc_model_options {
    size_t hidden;
    size_t latent;
    size_t mlp_hidden;
    size_t pi_cap;
} ipc_model_options;

typedef struct ipc_train_options {
    size_t epochs;
    double lr;
    size_t patience;
    uint64_t seed;
    double alpha, beta, gamma, delta;
} ipc_train_options;

typedef struct ipc_epoch {
    size_t epoch;
    double train_loss;
    double val_loss;
} ipc_epoch;

typedef void (*ipc_epoch_callback)(const ipc_epoch* e, void* user);

typedef struct ipc_train_summary {
    size_t epochs_run;
    size_t best_epoch;
    double best_val_loss;
    double first_train_loss;
    double last_train_loss;
    int early_stopped;
} ipc_train_summary;

IPC_API void ipc_model_options_default(ipc_model_options* o);
IPC_API void ipc_train_options_default(ipc_train_options* o);
IPC_API ipc_status ipc_model_create(const ipc_model_options* o, uint64_t seed, ipc_model** out);
IPC_API ipc_status ipc_model_load(const char* path, ipc_model** out);
IPC_API ipc_status ipc_model_save(const ipc_model* m, const char* path, const char* metadata_json);
IPC_API ipc_status ipc_model_checksum(const ipc_model* m, char** hex);
IPC_API ipc_status ipc_model_config_json(const ipc_model* m, char** json);
/* history_csv may be null. */
IPC_API ipc_status ipc_model_train(ipc_model* m, const ipc_graph* const* train, size_t n_train,
                                   const ipc_graph* const* val, size_t n_val, const ipc_train_options* o,
                                   ipc_epoch_callback cb, void* user, ipc_train_summary* summary,
                                   char** history_csv);
IPC_API ipc_status ipc_model_agreement(const ipc_model* m, const ipc_graph* const* graphs, size_t n, double th,
                                       double* out);
IPC_API void ipc_model_free(ipc_model* m);

/* ---- camouflage ------------------------------------------------------------------ */

typedef struct ipc_netlist_info {
    size_t placements;
    size_t fix_steps;
    size_t warnings;
    size_t appearance_gates;
    size_t appearance_cells;
    size_t appearance_inputs;
    size_t key_bits;     /* after keyization */
    size_t candidates;   /* keyed elements */
    int correct_key_known;
} ipc_netlist_info;

/* f and a must be single-output graphs; f canonical.  th in (0, 1), p in [0, 1]. */
IPC_API ipc_status ipc_camouflage(const ipc_graph* f, const ipc_graph* a, const ipc_model* m, double p, double th,
                                  uint64_t seed, ipc_netlist** out);

typedef enum ipc_random_mode { IPC_RANDOM_FRACTION = 0, IPC_RANDOM_MATCH_AREA = 1 } ipc_random_mode;
IPC_API ipc_status ipc_random_insertion(const ipc_graph* f, ipc_random_mode mode, double value, uint64_t seed,
                                        ipc_netlist** out);

IPC_API ipc_status ipc_netlist_to_json(const ipc_netlist* n, char** json);
IPC_API ipc_status ipc_netlist_from_json(const char* json, ipc_netlist** out);
IPC_API ipc_status ipc_netlist_info_get(const ipc_netlist* n, ipc_netlist_info* out);
IPC_API ipc_status ipc_netlist_area_overhead(const ipc_netlist* n, const ipc_graph* f, double* out);
/* Gate-list text of the appearance view, the functional view or the keyed netlist. */
typedef enum ipc_view { IPC_VIEW_APPEARANCE = 0, IPC_VIEW_FUNCTIONAL = 1, IPC_VIEW_KEYED = 2 } ipc_view;
IPC_API ipc_status ipc_netlist_write_view(const ipc_netlist* n, ipc_view v, char** text);
IPC_API void ipc_netlist_free(ipc_netlist* n);

/* ---- verification and attacks ----------------------------------------------------- */

typedef enum ipc_equiv_mode { IPC_EQUIV_AUTO = 0, IPC_EQUIV_TRUTH_TABLE = 1, IPC_EQUIV_MITER = 2 } ipc_equiv_mode;

typedef struct ipc_verify_result {
    int decided;
    int equal;
    int used_truth_table;
    int keyed_equal; /* correct key applied to the keyed netlist; -1 when unknown */
} ipc_verify_result;

/* Functional view of n against f; seconds = 0 means unlimited. */
IPC_API ipc_status ipc_verify(const ipc_graph* f, const ipc_netlist* n, ipc_equiv_mode mode, double seconds,
                              ipc_verify_result* out);

typedef enum ipc_attack_outcome {
    IPC_ATTACK_UNIQUE_KEY = 0,
    IPC_ATTACK_TIMEOUT = 1,
    IPC_ATTACK_MEMORY_LIMIT = 2
} ipc_attack_outcome;

typedef struct ipc_attack_options {
    double seconds;     /* 0 = unlimited */
    uint64_t conflicts; /* 0 = unlimited */
    size_t memory_bytes;
} ipc_attack_options;

typedef struct ipc_attack_result {
    ipc_attack_outcome outcome;
    size_t iterations;
    size_t key_bits;
    double seconds;
    uint64_t conflicts;
    int key_equivalent; /* recovered key reproduces the oracle; -1 when not checked */
    double area_ratio;
} ipc_attack_result;

IPC_API void ipc_attack_options_default(ipc_attack_options* o);
/* DIP attack on the keyized appearance view with the functional view as oracle. */
IPC_API ipc_status ipc_attack_netlist(const ipc_netlist* n, const ipc_attack_options* o, ipc_attack_result* out);
/* XOR/XNOR locking of f at the given area ratio, then the same attack. */
IPC_API ipc_status ipc_attack_ll_baseline(const ipc_graph* f, double area_ratio, uint64_t seed,
                                          const ipc_attack_options* o, ipc_attack_result* out);

/* ---- evaluation ----------------------------------------------------------------- */

typedef struct ipc_study_summary {
    size_t pairs;
    size_t valid;
    size_t discarded;
    int r_defined;
    double r;
    int r_binned_defined;
    double r_binned;
} ipc_study_summary;

/* Any of the char** outputs may be null. */
IPC_API ipc_status ipc_ged_lsd_study(const ipc_graph* const* graphs, size_t n, const ipc_model* m, size_t bins,
                                     int64_t timeout_ms, unsigned threads, ipc_study_summary* summary,
                                     char** pairs_csv, char** bins_csv, char** summary_json);
IPC_API ipc_status ipc_export_gnn(const ipc_netlist* const* nets, const char* const* labels, size_t n,
                                  const char* dir);

#ifdef __cplusplus
}
#endif

#endif
