#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ipcamo/aig.hpp"

namespace ipcamo {

struct DatasetConfig {
    std::size_t max_nodes = kDefaultMaxNodes;
    std::size_t min_nodes = 3;
    ConeMode mode = ConeMode::Shared;
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    bool dedupe = true;  // drop cones whose tensors equal an earlier cone's
};

struct DatasetEntry {
    std::string id;  // "<file stem>:<output>"
    std::string source;
    std::string output;
    AigGraph graph;
    bool train = false;
};

struct Dataset {
    std::vector<DatasetEntry> entries;
    std::size_t rejected_size = 0;
    std::size_t rejected_duplicate = 0;

    std::vector<AigGraph> split(bool train) const;
    std::size_t total_nodes() const;
};

// Every PO cone of every file, filtered by size, deduplicated, then split with
// a seeded shuffle.  Files are processed in the given order.
Dataset build_dataset(const std::vector<std::string>& aag_files, const DatasetConfig& cfg);

// *.aag files of a directory, sorted by name.  Throws std::invalid_argument if none.
std::vector<std::string> list_aag_files(const std::string& dir);

std::string dataset_manifest_json(const Dataset& d, const DatasetConfig& cfg);

}  // namespace ipcamo
