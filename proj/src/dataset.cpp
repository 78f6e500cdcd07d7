#include "ipcamo/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "ipcamo/aiger.hpp"
#include "ipcamo/tensors.hpp"
#include "json.hpp"

namespace ipcamo {

std::vector<AigGraph> Dataset::split(bool train) const {
    std::vector<AigGraph> out;
    for (const DatasetEntry& e : entries) {
        if (e.train == train) out.push_back(e.graph);
    }
    return out;
}

std::size_t Dataset::total_nodes() const {
    std::size_t n = 0;
    for (const DatasetEntry& e : entries) n += e.graph.size();
    return n;
}

namespace {

// Structure key independent of names: the tensor triple flattened to text.
std::string structure_key(const AigGraph& g) {
    const TensorTriple t = to_tensors(g);
    std::string k = std::to_string(t.size()) + ":";
    for (double v : t.type.data) k += v != 0.0 ? '1' : '0';
    for (std::size_t i = 0; i < t.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            k += static_cast<char>('0' + (t.conn(i, j) != 0.0) + 2 * (t.inv(i, j) != 0.0));
        }
    }
    return k;
}

}  // namespace

Dataset build_dataset(const std::vector<std::string>& aag_files, const DatasetConfig& cfg) {
    if (aag_files.empty()) throw std::invalid_argument("no benchmark files given");
    if (!(cfg.train_fraction >= 0.0 && cfg.train_fraction <= 1.0)) {
        throw std::invalid_argument("train fraction must lie in [0, 1]");
    }
    Dataset d;
    std::set<std::string> seen;
    for (const std::string& path : aag_files) {
        const AigGraph g = read_aiger_file(path);
        const std::string stem = std::filesystem::path(path).stem().string();
        for (std::size_t po : g.pos()) {
            const std::string& name = g.node(po).name;
            auto cone = extract_cone(g, name, cfg.max_nodes, cfg.mode);
            if (!cone || cone->size() < cfg.min_nodes) {
                ++d.rejected_size;
                continue;
            }
            if (cfg.dedupe && !seen.insert(structure_key(*cone)).second) {
                ++d.rejected_duplicate;
                continue;
            }
            d.entries.push_back(DatasetEntry{stem + ":" + name, path, name, std::move(*cone), false});
        }
    }
    std::vector<std::size_t> order(d.entries.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(cfg.seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(cfg.train_fraction * static_cast<double>(order.size())));
    for (std::size_t k = 0; k < n_train; ++k) d.entries[order[k]].train = true;
    return d;
}

std::vector<std::string> list_aag_files(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw std::invalid_argument("not a directory: " + dir);
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".aag") files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::invalid_argument("no .aag files in " + dir);
    return files;
}

std::string dataset_manifest_json(const Dataset& d, const DatasetConfig& cfg) {
    nlohmann::ordered_json j;
    j["format"] = "ipcamo-dataset";
    j["version"] = 1;
    j["config"] = {{"max_nodes", cfg.max_nodes},
                   {"min_nodes", cfg.min_nodes},
                   {"cone_mode", cfg.mode == ConeMode::Tree ? "tree" : "shared"},
                   {"train_fraction", cfg.train_fraction},
                   {"seed", cfg.seed},
                   {"dedupe", cfg.dedupe}};
    std::size_t n_train = 0, nodes_train = 0;
    auto graphs = nlohmann::ordered_json::array();
    for (const DatasetEntry& e : d.entries) {
        graphs.push_back({{"id", e.id}, {"source", e.source}, {"output", e.output}, {"nodes", e.graph.size()},
                          {"split", e.train ? "train" : "test"}});
        if (e.train) {
            ++n_train;
            nodes_train += e.graph.size();
        }
    }
    j["totals"] = {{"graphs", d.entries.size()},
                   {"train", n_train},
                   {"test", d.entries.size() - n_train},
                   {"nodes", d.total_nodes()},
                   {"nodes_train", nodes_train},
                   {"nodes_test", d.total_nodes() - nodes_train},
                   {"rejected_size", d.rejected_size},
                   {"rejected_duplicate", d.rejected_duplicate}};
    j["graphs"] = std::move(graphs);
    return j.dump(1) + "\n";
}

}  // namespace ipcamo
