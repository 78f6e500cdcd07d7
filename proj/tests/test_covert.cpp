#include "doctest.h"
#include "ipcamo/covert.hpp"

using namespace ipcamo;

namespace {

const CovertKind kKinds[] = {CovertKind::FI, CovertKind::FB, CovertKind::UT_A, CovertKind::UT_B};
const CovertMode kModes[] = {CovertMode::Normal, CovertMode::Const1, CovertMode::Const0};

// Expected behaviour per kind/mode, written out independently of gate_function.
int expected(CovertKind k, CovertMode m, bool x) {
    if (m == CovertMode::Const1) return 1;
    if (m == CovertMode::Const0) return 0;
    if (k == CovertKind::UT_A) return x ? 1 : 0;
    if (k == CovertKind::UT_B) return x ? 0 : 1;
    return -1;  // illegal
}

}  // namespace

TEST_CASE("covert gates: exhaustive semantics over kinds, modes and arities") {
    for (CovertKind k : kKinds) {
        for (CovertMode m : kModes) {
            for (std::size_t dummies = 0; dummies <= 2; ++dummies) {
                const std::size_t nets = 1 + dummies;
                CovertInstance inst{k, m, std::size_t{0}, {}, nets};
                for (std::size_t d = 1; d <= dummies; ++d) inst.dummy_inputs.push_back(d);
                for (unsigned row = 0; row < (1u << nets); ++row) {
                    std::vector<bool> v(nets + 1);
                    for (std::size_t b = 0; b < nets; ++b) v[b] = (row >> b) & 1u;
                    const int want = expected(k, m, v[0]);
                    if (want < 0) {
                        CHECK_FALSE(is_legal(k, m));
                        CHECK_THROWS_AS(gate_function(inst, v), CovertError);
                    } else {
                        CHECK(is_legal(k, m));
                        CHECK(gate_function(inst, v) == (want == 1));
                    }
                }
            }
        }
    }
}

TEST_CASE("covert gates: constant modes ignore every input") {
    for (CovertKind k : kKinds) {
        for (CovertMode m : {CovertMode::Const1, CovertMode::Const0}) {
            CovertInstance inst{k, m, std::nullopt, {0, 1, 2}, 3};
            bool first = gate_function(inst, {false, false, false});
            for (unsigned row = 1; row < 8; ++row) {
                CHECK(gate_function(inst, {bool(row & 1), bool(row & 2), bool(row & 4)}) == first);
            }
        }
    }
    CovertInstance ut{CovertKind::UT_A, CovertMode::Normal, std::nullopt, {}, 0};
    CHECK_THROWS_AS(gate_function(ut, {true}), CovertError);
}

TEST_CASE("covert gates: appearance descriptors and names") {
    CHECK(gate_appearance(CovertKind::FI) == Appearance{CellKind::Inv, 1, 1, 1});
    CHECK(gate_appearance(CovertKind::FB) == Appearance{CellKind::Inv, 1, 2, 2});
    CHECK(gate_appearance(CovertKind::UT_A) == Appearance{CellKind::Nand, 2, 1, 1});
    CHECK(gate_appearance(CovertKind::UT_B) == Appearance{CellKind::Nand, 2, 1, 1});
    for (CovertKind k : kKinds) CHECK(covert_kind_from_string(to_string(k)) == k);
    for (CovertMode m : kModes) CHECK(covert_mode_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(covert_kind_from_string("XOR"), CovertError);
}

TEST_CASE("keyed model: every covert instance is reproduced by its correct key") {
    for (CovertKind k : kKinds) {
        for (CovertMode m : kModes) {
            if (!is_legal(k, m)) continue;
            const KeyCode key = correct_key(k, m);
            const KeyedClass c = keyed_class(k);
            for (unsigned row = 0; row < 4; ++row) {
                const bool a = row & 1, b = row & 2;
                CovertInstance inst{k, m, std::size_t{0}, {1}, 2};
                CHECK(keyed_eval(c, key.k1, key.k0, a, b) == gate_function(inst, {a, b}));
            }
        }
    }
    // genuine inverters and inverter pairs keep their plain behaviour under 00
    for (unsigned a = 0; a < 2; ++a) {
        CHECK(keyed_eval(KeyedClass::Inv, false, false, a) == !a);
        CHECK(keyed_eval(KeyedClass::Buf, false, false, a) == bool(a));
    }
    CHECK_THROWS_AS(genuine_key(KeyedClass::Nand), CovertError);
    // each class reaches both constants
    for (KeyedClass c : {KeyedClass::Inv, KeyedClass::Buf, KeyedClass::Nand}) {
        CHECK(keyed_eval(c, true, false, false) == true);
        CHECK(keyed_eval(c, false, true, true) == false);
    }
}
