#pragma once

#include <random>
#include <string>

#include "ipcamo/aig.hpp"

namespace testutil {

inline std::string source_path(const std::string& rel) {
    return std::string(IPCAMO_SOURCE_DIR) + "/" + rel;
}

// Random canonical single-PO AIG.  Fanins pick distinct earlier non-PO nodes.
inline ipcamo::AigGraph random_aig(std::mt19937_64& rng, std::size_t n_pi, std::size_t n_and) {
    using namespace ipcamo;
    AigGraph g;
    for (std::size_t i = 0; i < n_pi; ++i) g.add_pi("x" + std::to_string(i));
    std::bernoulli_distribution coin(0.5);
    for (std::size_t k = 0; k < n_and; ++k) {
        const std::size_t n = g.size();
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::size_t a = pick(rng), b = pick(rng);
        if (n > 1) {
            while (b == a) b = pick(rng);
        }
        g.add_and(Fanin{a, coin(rng)}, Fanin{b, coin(rng)});
    }
    g.add_po(Fanin{g.size() - 1, coin(rng)}, "y");
    return g;
}

// Half adder sum (XOR) and full adder sum as single-PO AIGs.
inline ipcamo::AigGraph xor2() {
    using namespace ipcamo;
    AigGraph g;
    const auto a = g.add_pi("a");
    const auto b = g.add_pi("b");
    const auto n1 = g.add_and({a, false}, {b, true});
    const auto n2 = g.add_and({a, true}, {b, false});
    const auto o = g.add_and({n1, true}, {n2, true});
    g.add_po({o, true}, "s");
    return g;
}

inline ipcamo::AigGraph xor3() {
    using namespace ipcamo;
    AigGraph g;
    const auto a = g.add_pi("a");
    const auto b = g.add_pi("b");
    const auto c = g.add_pi("cin");
    const auto n1 = g.add_and({a, false}, {b, true});
    const auto n2 = g.add_and({a, true}, {b, false});
    const auto x = g.add_and({n1, true}, {n2, true});  // xnor(a, b)
    const auto m1 = g.add_and({x, true}, {c, true});
    const auto m2 = g.add_and({x, false}, {c, false});
    const auto o = g.add_and({m1, true}, {m2, true});
    g.add_po({o, true}, "s");
    return g;
}

}  // namespace testutil
