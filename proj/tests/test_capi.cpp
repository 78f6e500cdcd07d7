// Exercises the shared library through the C header only.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>

#include "ipcamo/ipcamo.h"

namespace {

// y = a XOR b as an AIG
const char* kXor =
    "aag 5 2 0 1 3\n2\n4\n11\n6 2 5\n8 3 4\n10 7 9\ni0 a\ni1 b\no0 y\n";

std::string take(char* s) {
    std::string r = s ? s : "";
    ipc_string_free(s);
    return r;
}

std::string bench(const char* name) { return std::string(IPCAMO_SOURCE_DIR) + "/benchmarks/" + name; }

}  // namespace

TEST_CASE("status strings and version") {
    CHECK(std::strlen(ipc_version()) > 0);
    CHECK(std::string(ipc_status_string(IPC_OK)).size() > 0);
    CHECK(std::string(ipc_status_string(IPC_ERR_PARSE)) != ipc_status_string(IPC_OK));
}

TEST_CASE("null handles are rejected with an error message") {
    ipc_graph_info info;
    CHECK(ipc_graph_info_get(nullptr, &info) == IPC_ERR_INVALID_ARGUMENT);
    CHECK(std::strlen(ipc_last_error()) > 0);
    ipc_graph_free(nullptr);
    ipc_model_free(nullptr);
    ipc_netlist_free(nullptr);
    ipc_dataset_free(nullptr);
}

TEST_CASE("parse, inspect and round-trip an AIGER graph") {
    ipc_graph* g = nullptr;
    REQUIRE(ipc_graph_parse_aiger(kXor, &g) == IPC_OK);
    ipc_graph_info info;
    REQUIRE(ipc_graph_info_get(g, &info) == IPC_OK);
    CHECK(info.pis == 2);
    CHECK(info.pos == 1);
    CHECK(info.ands == 3);
    CHECK(info.canonical == 1);

    char* text = nullptr;
    REQUIRE(ipc_graph_to_aiger(g, &text) == IPC_OK);
    ipc_graph* back = nullptr;
    REQUIRE(ipc_graph_parse_aiger(text, &back) == IPC_OK);
    ipc_string_free(text);
    size_t d = 99;
    int timed_out = 1;
    REQUIRE(ipc_graph_edit_distance(g, back, 1000, &d, &timed_out) == IPC_OK);
    CHECK(d == 0);
    CHECK(timed_out == 0);
    CHECK(take([&] {
              char* s = nullptr;
              ipc_graph_output_name(g, 0, &s);
              return s;
          }()) == "y");
    char* s = nullptr;
    CHECK(ipc_graph_output_name(g, 5, &s) == IPC_ERR_NOT_FOUND);
    ipc_graph_free(back);
    ipc_graph_free(g);
}

TEST_CASE("malformed input maps to parse and io errors") {
    ipc_graph* g = nullptr;
    CHECK(ipc_graph_parse_aiger("aag x\n", &g) == IPC_ERR_PARSE);
    CHECK(g == nullptr);
    CHECK(ipc_graph_read_aiger("/nonexistent/file.aag", &g) == IPC_ERR_IO);
    ipc_model* m = nullptr;
    CHECK(ipc_model_load("/nonexistent/model.ckpt", &m) != IPC_OK);
}

TEST_CASE("cone extraction respects the node limit") {
    ipc_graph* whole = nullptr;
    REQUIRE(ipc_graph_read_aiger(bench("i2c.aag").c_str(), &whole) == IPC_OK);
    ipc_graph* cone = nullptr;
    REQUIRE(ipc_graph_extract_cone(whole, "po061", 200, 0, &cone) == IPC_OK);
    ipc_graph_info info;
    REQUIRE(ipc_graph_info_get(cone, &info) == IPC_OK);
    CHECK(info.nodes == 53);
    ipc_graph* small = nullptr;
    CHECK(ipc_graph_extract_cone(whole, "po061", 10, 0, &small) == IPC_ERR_LIMIT);
    CHECK(ipc_graph_extract_cone(whole, "no_such_output", 200, 0, &small) == IPC_ERR_NOT_FOUND);
    ipc_graph_free(cone);
    ipc_graph_free(whole);
}

TEST_CASE("model, camouflage, verify and attack end to end") {
    ipc_graph* f = nullptr;
    ipc_graph* a = nullptr;
    REQUIRE(ipc_graph_parse_aiger(kXor, &f) == IPC_OK);
    REQUIRE(ipc_graph_parse_aiger("aag 3 2 0 1 1\n2\n4\n6\n6 2 4\ni0 a\ni1 b\no0 y\n", &a) == IPC_OK);

    ipc_model_options mo;
    ipc_model_options_default(&mo);
    mo.hidden = mo.latent = mo.mlp_hidden = 8;
    mo.pi_cap = 8;
    ipc_model* m = nullptr;
    REQUIRE(ipc_model_create(&mo, 3, &m) == IPC_OK);

    ipc_train_options to;
    ipc_train_options_default(&to);
    to.epochs = 2;
    const ipc_graph* train[] = {f, a};
    ipc_train_summary sum;
    char* csv = nullptr;
    int calls = 0;
    REQUIRE(ipc_model_train(
                m, train, 2, train, 2, &to, [](const ipc_epoch*, void* u) { ++*static_cast<int*>(u); }, &calls, &sum,
                &csv) == IPC_OK);
    CHECK(calls == 2);
    CHECK(sum.epochs_run == 2);
    CHECK(take(csv).find("epoch") == 0);

    const std::string path = (std::filesystem::temp_directory_path() / "ipcamo_capi_test.ckpt").string();
    REQUIRE(ipc_model_save(m, path.c_str(), "{}") == IPC_OK);
    ipc_model* loaded = nullptr;
    REQUIRE(ipc_model_load(path.c_str(), &loaded) == IPC_OK);
    char* c1 = nullptr;
    char* c2 = nullptr;
    ipc_model_checksum(m, &c1);
    ipc_model_checksum(loaded, &c2);
    CHECK(take(c1) == take(c2));
    std::remove(path.c_str());

    ipc_netlist* n = nullptr;
    REQUIRE(ipc_camouflage(f, a, loaded, 0.5, 0.5, 1, &n) == IPC_OK);
    ipc_verify_result vr;
    REQUIRE(ipc_verify(f, n, IPC_EQUIV_AUTO, 0, &vr) == IPC_OK);
    CHECK(vr.decided == 1);
    CHECK(vr.equal == 1);
    CHECK(vr.used_truth_table == 1);

    ipc_netlist_info info;
    REQUIRE(ipc_netlist_info_get(n, &info) == IPC_OK);
    CHECK(info.key_bits == 2 * info.candidates);

    char* js = nullptr;
    REQUIRE(ipc_netlist_to_json(n, &js) == IPC_OK);
    const std::string first = take(js);
    ipc_netlist* again = nullptr;
    REQUIRE(ipc_netlist_from_json(first.c_str(), &again) == IPC_OK);
    REQUIRE(ipc_netlist_to_json(again, &js) == IPC_OK);
    CHECK(take(js) == first);

    ipc_attack_options ao;
    ipc_attack_options_default(&ao);
    ao.seconds = 30;
    ipc_attack_result ar;
    REQUIRE(ipc_attack_netlist(n, &ao, &ar) == IPC_OK);
    CHECK(ar.outcome == IPC_ATTACK_UNIQUE_KEY);
    CHECK(ar.key_bits == info.key_bits);
    REQUIRE(ipc_attack_ll_baseline(f, 1.5, 4, &ao, &ar) == IPC_OK);
    CHECK(ar.outcome == IPC_ATTACK_UNIQUE_KEY);
    CHECK(ar.area_ratio >= 1.5);

    ipc_netlist* bad = nullptr;
    CHECK(ipc_camouflage(f, a, loaded, 0.5, 1.5, 1, &bad) == IPC_ERR_INVALID_ARGUMENT);
    CHECK(bad == nullptr);

    ipc_netlist_free(again);
    ipc_netlist_free(n);
    ipc_model_free(loaded);
    ipc_model_free(m);
    ipc_graph_free(a);
    ipc_graph_free(f);
}
