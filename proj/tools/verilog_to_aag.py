#!/usr/bin/env python3
"""Convert flat gate-level Verilog (ISCAS/EPFL style primitives) to ASCII AIGER.

Supported statements: input/output/wire declarations, primitive gate instances
(and, nand, or, nor, xor, xnor, not, buf) and `assign lhs = rhs;` where rhs is a
net, `~net`, `1'b0` or `1'b1`.  Multi-input gates become balanced AND trees;
XOR/XNOR use the usual three-AND form.  Structural hashing is applied.
"""
import argparse
import re
import sys

GATES = {"and", "nand", "or", "nor", "xor", "xnor", "not", "buf"}


def strip_comments(text):
    text = re.sub(r"/\*.*?\*/", "", text, flags=re.S)
    return re.sub(r"//[^\n]*", "", text)


class Aig:
    def __init__(self):
        self.inputs = []
        self.ands = []  # (lhs, rhs0, rhs1)
        self.strash = {}
        self.next_var = 1

    def new_input(self):
        lit = 2 * self.next_var
        self.next_var += 1
        self.inputs.append(lit)
        return lit

    def land(self, a, b):
        if a == 0 or b == 0 or a == (b ^ 1):
            return 0
        if a == 1:
            return b
        if b == 1 or a == b:
            return a
        if a < b:
            a, b = b, a
        key = (a, b)
        if key in self.strash:
            return self.strash[key]
        lit = 2 * self.next_var
        self.next_var += 1
        self.ands.append((lit, a, b))
        self.strash[key] = lit
        return lit

    def land_n(self, lits):
        lits = list(lits)
        while len(lits) > 1:
            nxt = [self.land(lits[i], lits[i + 1]) for i in range(0, len(lits) - 1, 2)]
            if len(lits) % 2:
                nxt.append(lits[-1])
            lits = nxt
        return lits[0] if lits else 1

    def lxor(self, a, b):
        return self.land(self.land(a, b ^ 1) ^ 1, self.land(a ^ 1, b) ^ 1) ^ 1


def convert(text):
    text = strip_comments(text)
    body = text[text.index(";") + 1:]
    stmts = [s.strip() for s in body.split(";") if s.strip()]
    inputs, outputs, drivers = [], [], {}
    for s in stmts:
        s = " ".join(s.split())
        head = s.split(" ", 1)[0]
        if head in ("input", "output"):
            names = [n.strip() for n in s[len(head):].split(",") if n.strip()]
            (inputs if head == "input" else outputs).extend(names)
        elif head in ("wire", "endmodule"):
            continue
        elif head == "assign":
            m = re.match(r"assign (\S+) = (\S+)$", s)
            if not m:
                raise ValueError("unsupported assign: " + s)
            rhs = m.group(2)
            if rhs in ("1'b0", "1'b1"):
                drivers[m.group(1)] = ("const", [rhs[-1]])
            elif rhs.startswith("~"):
                drivers[m.group(1)] = ("not", [rhs[1:]])
            else:
                drivers[m.group(1)] = ("buf", [rhs])
        elif head in GATES:
            m = re.match(r"\S+ (?:\S+ )?\((.*)\)$", s)
            pins = [p.strip() for p in m.group(1).split(",")]
            drivers[pins[0]] = (head, pins[1:])
        elif head == "endmodule":
            continue
        else:
            raise ValueError("unsupported statement: " + s)

    aig = Aig()
    lit_of = {}
    for name in inputs:
        lit_of[name] = aig.new_input()

    sys.setrecursionlimit(1000000)

    def lit(net):
        if net in lit_of:
            return lit_of[net]
        kind, args = drivers[net]
        if kind == "const":
            value = 1 if args[0] == "1" else 0
        else:
            ins = [lit(a) for a in args]
            if kind == "buf":
                value = ins[0]
            elif kind == "not":
                value = ins[0] ^ 1
            elif kind in ("and", "nand"):
                value = aig.land_n(ins) ^ (kind == "nand")
            elif kind in ("or", "nor"):
                value = aig.land_n([x ^ 1 for x in ins]) ^ (kind == "or")
            else:
                value = ins[0]
                for x in ins[1:]:
                    value = aig.lxor(value, x)
                value ^= kind == "xnor"
        lit_of[net] = value
        return value

    out_lits = [lit(o) for o in outputs]
    lines = ["aag %d %d 0 %d %d" % (aig.next_var - 1, len(inputs), len(outputs), len(aig.ands))]
    lines += [str(l) for l in aig.inputs]
    lines += [str(l) for l in out_lits]
    lines += ["%d %d %d" % a for a in aig.ands]
    lines += ["i%d %s" % (i, n) for i, n in enumerate(inputs)]
    lines += ["o%d %s" % (i, n) for i, n in enumerate(outputs)]
    return "\n".join(lines) + "\n"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("verilog")
    ap.add_argument("-o", "--output", default="-")
    args = ap.parse_args()
    with open(args.verilog) as f:
        out = convert(f.read())
    if args.output == "-":
        sys.stdout.write(out)
    else:
        with open(args.output, "w") as f:
            f.write(out)


if __name__ == "__main__":
    main()
