#include "ipcamo/covert.hpp"

namespace ipcamo {

const char* to_string(CovertKind k) {
    switch (k) {
    case CovertKind::FI: return "FI";
    case CovertKind::FB: return "FB";
    case CovertKind::UT_A: return "UT_A";
    case CovertKind::UT_B: return "UT_B";
    }
    return "?";
}

const char* to_string(CovertMode m) {
    switch (m) {
    case CovertMode::Normal: return "NORMAL";
    case CovertMode::Const1: return "CONST1";
    case CovertMode::Const0: return "CONST0";
    }
    return "?";
}

const char* to_string(KeyedClass c) {
    switch (c) {
    case KeyedClass::Inv: return "INV";
    case KeyedClass::Buf: return "BUF";
    case KeyedClass::Nand: return "NAND";
    }
    return "?";
}

CovertKind covert_kind_from_string(const std::string& s) {
    for (CovertKind k : {CovertKind::FI, CovertKind::FB, CovertKind::UT_A, CovertKind::UT_B}) {
        if (s == to_string(k)) return k;
    }
    throw CovertError("unknown covert kind '" + s + "'");
}

CovertMode covert_mode_from_string(const std::string& s) {
    for (CovertMode m : {CovertMode::Normal, CovertMode::Const1, CovertMode::Const0}) {
        if (s == to_string(m)) return m;
    }
    throw CovertError("unknown covert mode '" + s + "'");
}

bool is_legal(CovertKind k, CovertMode m) {
    if (k == CovertKind::FI || k == CovertKind::FB) return m != CovertMode::Normal;
    return true;
}

bool gate_function(const CovertInstance& inst, const std::vector<bool>& nets) {
    if (!is_legal(inst.kind, inst.mode)) {
        throw CovertError(std::string(to_string(inst.kind)) + " cannot run in " + to_string(inst.mode) + " mode");
    }
    switch (inst.mode) {
    case CovertMode::Const1: return true;
    case CovertMode::Const0: return false;
    case CovertMode::Normal: break;
    }
    if (!inst.real_input || *inst.real_input >= nets.size()) throw CovertError("UT in NORMAL mode needs its real input");
    const bool x = nets[*inst.real_input];
    return inst.kind == CovertKind::UT_A ? x : !x;
}

Appearance gate_appearance(CovertKind k) {
    switch (k) {
    case CovertKind::FI: return Appearance{CellKind::Inv, 1, 1, 1};
    case CovertKind::FB: return Appearance{CellKind::Inv, 1, 2, 2};
    case CovertKind::UT_A:
    case CovertKind::UT_B: return Appearance{CellKind::Nand, 2, 1, 1};
    }
    return {};
}

bool keyed_eval(KeyedClass c, bool k1, bool k0, bool a, bool /*b*/) {
    if (k1 && !k0) return true;
    if (!k1 && k0) return false;
    if (!k1 && !k0) return c == KeyedClass::Inv ? !a : a;
    // 11
    return c == KeyedClass::Nand ? !a : true;
}

KeyCode correct_key(CovertKind k, CovertMode m) {
    switch (m) {
    case CovertMode::Const1: return KeyCode{true, false};
    case CovertMode::Const0: return KeyCode{false, true};
    case CovertMode::Normal: break;
    }
    if (k == CovertKind::UT_A) return KeyCode{false, false};
    if (k == CovertKind::UT_B) return KeyCode{true, true};
    throw CovertError(std::string(to_string(k)) + " has no NORMAL mode");
}

KeyCode genuine_key(KeyedClass c) {
    if (c == KeyedClass::Nand) throw CovertError("the keyed NAND element has no plain NAND behavior");
    return KeyCode{false, false};
}

KeyedClass keyed_class(CovertKind k) {
    switch (k) {
    case CovertKind::FI: return KeyedClass::Inv;
    case CovertKind::FB: return KeyedClass::Buf;
    default: return KeyedClass::Nand;
    }
}

}  // namespace ipcamo
