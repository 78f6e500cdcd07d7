#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ipcamo {

enum class CovertKind { FI, FB, UT_A, UT_B };
enum class CovertMode { Normal, Const1, Const0 };

const char* to_string(CovertKind k);
const char* to_string(CovertMode m);
CovertKind covert_kind_from_string(const std::string& s);
CovertMode covert_mode_from_string(const std::string& s);

class CovertError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// FI and FB are constant cells; UT_A and UT_B also admit Normal.
bool is_legal(CovertKind k, CovertMode m);

struct CovertInstance {
    CovertKind kind = CovertKind::FI;
    CovertMode mode = CovertMode::Const1;
    std::optional<std::size_t> real_input;
    std::vector<std::size_t> dummy_inputs;
    std::size_t output = 0;
};

// `nets` holds the value of every net id referenced by the instance.
// Normal UT_A buffers the real input, Normal UT_B inverts it.  Dummy inputs
// never matter.  Throws CovertError for an illegal kind/mode pair or a
// missing real input.
bool gate_function(const CovertInstance& inst, const std::vector<bool>& nets);

enum class CellKind { Inv, Nand };

struct Appearance {
    CellKind cell = CellKind::Inv;
    std::size_t arity = 1;
    std::size_t chain = 1;  // cells in series
    std::size_t cells = 1;  // area units

    friend bool operator==(const Appearance&, const Appearance&) = default;
};

// FI: one inverter.  FB: two chained inverters.  UT_A/UT_B: one 2-input NAND.
Appearance gate_appearance(CovertKind k);

// Attack model: every inverter, inverter pair and 2-input NAND in the
// appearance view becomes a 2-key-bit element.  Key codes are written k1k0.
//   Inv : 00 inverter, 01 const0, 10 const1, 11 const1
//   Buf : 00 buffer,   01 const0, 10 const1, 11 const1
//   Nand: 00 buffer of pin a, 01 const0, 10 const1, 11 inverter of pin a
// Pin a of a NAND-looking cell is the net the rendered cell lists first.
enum class KeyedClass { Inv, Buf, Nand };

const char* to_string(KeyedClass c);

bool keyed_eval(KeyedClass c, bool k1, bool k0, bool a, bool b = false);

struct KeyCode {
    bool k1 = false;
    bool k0 = false;
    friend bool operator==(const KeyCode&, const KeyCode&) = default;
};

// Key that makes the keyed element of a covert cell reproduce its function.
KeyCode correct_key(CovertKind k, CovertMode m);
// Key for a genuine cell of the given class (its ordinary behavior).
KeyCode genuine_key(KeyedClass c);

KeyedClass keyed_class(CovertKind k);

}  // namespace ipcamo
