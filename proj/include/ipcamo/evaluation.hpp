#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ipcamo/aig.hpp"
#include "ipcamo/camouflage.hpp"
#include "ipcamo/circuit.hpp"
#include "ipcamo/matrix.hpp"

namespace ipcamo {

class AigVae;

// Euclidean distance; throws std::invalid_argument on shape mismatch.
double latent_distance(const Matrix& z1, const Matrix& z2);

// nullopt when fewer than two points or either variance is zero.  Throws on
// length mismatch.
std::optional<double> pearson_r(const std::vector<double>& xs, const std::vector<double>& ys);

struct PairRecord {
    std::size_t id1 = 0;
    std::size_t id2 = 0;
    double lsd = 0.0;
    std::optional<double> ged;  // nullopt on timeout
};

struct BinStat {
    std::size_t index = 0;
    double lo = 0.0;
    double hi = 0.0;
    double mean_lsd = 0.0;
    double mean_ged = 0.0;
    double std_ged = 0.0;  // population standard deviation
    std::size_t count = 0;
};

struct CorrelationReport {
    std::vector<PairRecord> pairs;
    std::size_t valid = 0;
    std::size_t discarded = 0;
    std::optional<double> r;         // over raw valid pairs
    std::optional<double> r_binned;  // over non-empty bin means
    std::vector<BinStat> bins;
};

// Equal-width bins over the observed LSD range of the valid pairs.  The last
// bin is closed on the right.
std::vector<BinStat> bin_pairs(const std::vector<PairRecord>& pairs, std::size_t bins);

CorrelationReport summarize_pairs(std::vector<PairRecord> pairs, std::size_t bins = 20);

struct StudyConfig {
    std::size_t bins = 20;
    std::chrono::milliseconds ged_timeout{10000};
    unsigned threads = 0;  // 0 = hardware concurrency
};

// All unordered pairs; LSD from mean codes, exact GED with a per-pair timeout.
// Throws std::invalid_argument for fewer than two graphs.
CorrelationReport ged_lsd_study(const std::vector<AigGraph>& graphs, const AigVae& model,
                                const StudyConfig& cfg = {});

std::string pairs_csv(const CorrelationReport& r);
std::string bins_csv(const CorrelationReport& r);
std::string summary_json(const CorrelationReport& r);

// ---- random covert insertion baselines --------------------------------------

struct RandomInsertion {
    enum class Mode { Fraction, MatchArea } mode = Mode::Fraction;
    double value = 0.05;  // fraction of cells, or target area ratio

    static RandomInsertion fraction(double f) { return {Mode::Fraction, f}; }
    static RandomInsertion match_area(double ratio) { return {Mode::MatchArea, ratio}; }
};

// Placement count for a fraction: round(fraction * cells), at least one on a
// non-empty circuit when fraction > 0.
std::size_t rand_fraction_count(std::size_t cells, double fraction);

// Covert cells at uniformly drawn legal sites of F: existing edges become UT
// cells of matching polarity, absent pairs receive FI or FB constants.
// Throws std::invalid_argument when a match-area target cannot be reached.
CamouflagedNetlist random_covert_insertion(const AigGraph& f, const RandomInsertion& mode, std::mt19937_64& rng);

// ---- GNN export ---------------------------------------------------------------

struct LabeledNetlist {
    std::string label;                     // circuit family, also the graph label
    Circuit netlist;                       // appearance view
    std::vector<std::string> node_labels;  // per gate; empty means "plain" everywhere
};

// Appearance view with covert cells labeled "covert" and all other gates "plain".
LabeledNetlist labeled_appearance(const CamouflagedNetlist& c, std::string label);

// Writes nodes.csv, edges.csv, labels.csv and README.txt into `dir`.  Throws
// std::invalid_argument for an unlabeled netlist.
void export_gnn_dataset(const std::vector<LabeledNetlist>& nets, const std::string& dir);
std::vector<LabeledNetlist> import_gnn_dataset(const std::string& dir);

}  // namespace ipcamo
