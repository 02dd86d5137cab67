#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Writes the structured fixture netlists under fixtures/.

Every circuit is built from plain gates so the structure (reconvergent
fanout, XOR trees, carry chains) resembles classic combinational
benchmarks. Output is deterministic.
"""

import os
import random
import sys


class Net:
    def __init__(self, name):
        self.name = name
        self.inputs = []
        self.outputs = []
        self.gates = []
        self.count = 0

    def fresh(self, prefix="n"):
        self.count += 1
        return f"{prefix}{self.count}"

    def inp(self, name):
        self.inputs.append(name)
        return name

    def out(self, name):
        self.outputs.append(name)

    def g(self, kind, *ins, name=None):
        name = name or self.fresh()
        self.gates.append((name, kind, ins))
        return name

    def text(self):
        lines = [f"# {self.name}"]
        lines += [f"INPUT({i})" for i in self.inputs]
        lines += [f"OUTPUT({o})" for o in self.outputs]
        lines += [f"{n} = {k}({', '.join(ins)})" for n, k, ins in self.gates]
        return "\n".join(lines) + "\n"


def full_adder(c, a, b, cin):
    # nand-only full adder, heavy reconvergence
    t1 = c.g("NAND", a, b)
    t2 = c.g("NAND", a, t1)
    t3 = c.g("NAND", b, t1)
    s1 = c.g("NAND", t2, t3)
    t4 = c.g("NAND", s1, cin)
    t5 = c.g("NAND", s1, t4)
    t6 = c.g("NAND", cin, t4)
    s = c.g("NAND", t5, t6)
    cout = c.g("NAND", t4, t1)
    return s, cout


def half_adder(c, a, b):
    return c.g("XOR", a, b), c.g("AND", a, b)


def ripple_adder(n):
    c = Net(f"add{n}")
    a = [c.inp(f"a{i}") for i in range(n)]
    b = [c.inp(f"b{i}") for i in range(n)]
    carry = c.inp("cin")
    for i in range(n):
        s, carry = full_adder(c, a[i], b[i], carry)
        c.out(s)
    c.out(carry)
    return c


def array_multiplier(n):
    c = Net(f"mult{n}")
    a = [c.inp(f"a{i}") for i in range(n)]
    b = [c.inp(f"b{i}") for i in range(n)]
    pp = [[c.g("AND", a[i], b[j]) for i in range(n)] for j in range(n)]
    row = pp[0]
    c.out(row[0])
    acc = row[1:]
    for j in range(1, n):
        nxt = []
        carry = None
        for i in range(n):
            x = pp[j][i]
            y = acc[i] if i < len(acc) else None
            if y is None and carry is None:
                nxt.append(x)
            elif y is None:
                s, carry = half_adder(c, x, carry)
                nxt.append(s)
            elif carry is None:
                s, carry = half_adder(c, x, y)
                nxt.append(s)
            else:
                s, carry = full_adder(c, x, y, carry)
                nxt.append(s)
        if carry is not None:
            nxt.append(carry)
        c.out(nxt[0])
        acc = nxt[1:]
    for s in acc:
        c.out(s)
    return c


def comparator(n):
    c = Net(f"cmp{n}")
    a = [c.inp(f"a{i}") for i in range(n)]
    b = [c.inp(f"b{i}") for i in range(n)]
    eq = [c.g("XNOR", a[i], b[i]) for i in range(n)]
    gt = [c.g("AND", a[i], c.g("NOT", b[i])) for i in range(n)]
    lt = [c.g("AND", b[i], c.g("NOT", a[i])) for i in range(n)]
    g_terms, l_terms = [], []
    for i in reversed(range(n)):
        higher = [eq[k] for k in range(i + 1, n)]
        g_terms.append(c.g("AND", gt[i], *higher) if higher else gt[i])
        l_terms.append(c.g("AND", lt[i], *higher) if higher else lt[i])
    c.out(c.g("OR", *g_terms, name="gt"))
    c.out(c.g("OR", *l_terms, name="lt"))
    c.out(c.g("AND", *eq, name="eq"))
    return c


def hamming_ecc(data_bits):
    # single-error-correcting checker: syndrome then correction, like c499
    c = Net(f"ecc{data_bits}")
    d = [c.inp(f"d{i}") for i in range(data_bits)]
    parity_count = 0
    while (1 << parity_count) < data_bits + parity_count + 1:
        parity_count += 1
    p = [c.inp(f"p{i}") for i in range(parity_count)]
    positions = [k for k in range(1, data_bits + parity_count + 1) if k & (k - 1)]
    syn = []
    for j in range(parity_count):
        members = [d[i] for i, pos in enumerate(positions) if pos >> j & 1]
        acc = p[j]
        for m in members:
            acc = c.g("XOR", acc, m)
        syn.append(acc)
    nsyn = [c.g("NOT", s) for s in syn]
    for i, pos in enumerate(positions):
        lits = [syn[j] if pos >> j & 1 else nsyn[j] for j in range(parity_count)]
        hit = c.g("AND", *lits)
        c.out(c.g("XOR", d[i], hit, name=f"o{i}"))
    return c


def alu(n):
    # and / or / xor / add selected by two control bits
    c = Net(f"alu{n}")
    a = [c.inp(f"a{i}") for i in range(n)]
    b = [c.inp(f"b{i}") for i in range(n)]
    s0, s1 = c.inp("s0"), c.inp("s1")
    ns0, ns1 = c.g("NOT", s0), c.g("NOT", s1)
    sel = [c.g("AND", ns1, ns0), c.g("AND", ns1, s0), c.g("AND", s1, ns0), c.g("AND", s1, s0)]
    carry = c.g("AND", s1, s0)
    for i in range(n):
        f_and = c.g("AND", a[i], b[i])
        f_or = c.g("OR", a[i], b[i])
        f_xor = c.g("XOR", a[i], b[i])
        s, carry = full_adder(c, a[i], b[i], carry)
        terms = [c.g("AND", sel[k], f) for k, f in enumerate([f_and, f_or, f_xor, s])]
        c.out(c.g("OR", *terms, name=f"f{i}"))
    c.out(c.g("AND", carry, sel[3], name="cout"))
    zero = c.g("NOR", *[o for o in c.outputs])
    c.out(zero)
    return c


def mux_tree(select_bits):
    c = Net(f"mux{1 << select_bits}")
    data = [c.inp(f"d{i}") for i in range(1 << select_bits)]
    sel = [c.inp(f"s{i}") for i in range(select_bits)]
    nsel = [c.g("NOT", s) for s in sel]
    # full decoder, then AND-OR, plus an enable-gated parity of the data
    terms = []
    for k in range(1 << select_bits):
        lits = [sel[j] if k >> j & 1 else nsel[j] for j in range(select_bits)]
        terms.append(c.g("AND", data[k], *lits))
    y = c.g("OR", *terms, name="y")
    c.out(y)
    par = data[0]
    for x in data[1:]:
        par = c.g("XOR", par, x)
    c.out(c.g("XOR", par, y, name="chk"))
    return c


def cla_adder(n):
    c = Net(f"cla{n}")
    a = [c.inp(f"a{i}") for i in range(n)]
    b = [c.inp(f"b{i}") for i in range(n)]
    cin = c.inp("cin")
    g = [c.g("AND", a[i], b[i]) for i in range(n)]
    p = [c.g("XOR", a[i], b[i]) for i in range(n)]
    carries = [cin]
    for i in range(n):
        terms = [g[i]]
        for j in range(i - 1, -1, -1):
            terms.append(c.g("AND", g[j], *p[j + 1 : i + 1]))
        terms.append(c.g("AND", cin, *p[: i + 1]))
        carries.append(c.g("OR", *terms))
    for i in range(n):
        c.out(c.g("XOR", p[i], carries[i], name=f"s{i}"))
    c.out(carries[n])
    return c


def priority_encoder(n_req):
    c = Net(f"prio{n_req}")
    req = [c.inp(f"r{i}") for i in range(n_req)]
    bits = max(1, (n_req - 1).bit_length())
    grant = []
    for i in range(n_req):
        higher = [c.g("NOT", req[k]) for k in range(i + 1, n_req)]
        grant.append(c.g("AND", req[i], *higher) if higher else req[i])
    for bit in range(bits):
        members = [grant[i] for i in range(n_req) if i >> bit & 1]
        c.out(c.g("OR", *members, name=f"e{bit}"))
    c.out(c.g("OR", *req, name="valid"))
    return c


def random_logic(name, seed, n_in, n_gates):
    rnd = random.Random(seed)
    c = Net(name)
    pool = [c.inp(f"i{k}") for k in range(n_in)]
    used = set()
    kinds = ["AND", "NAND", "OR", "NOR", "XOR", "NOT", "AND", "NAND", "OR", "NOR"]
    for k in range(n_gates):
        kind = rnd.choice(kinds)
        arity = 1 if kind == "NOT" else (3 if kind != "XOR" and rnd.random() < 0.2 else 2)
        window = pool[-24:] if rnd.random() < 0.7 else pool
        if k < n_in:
            # every input feeds the first layer
            ins = [pool[k]] + rnd.sample([x for x in window if x != pool[k]], arity - 1)
        else:
            ins = rnd.sample(window, min(arity, len(window)))
        used.update(ins)
        pool.append(c.g(kind, *ins))
    for k, n in enumerate(pool[n_in:]):
        if n not in used or k % 10 == 9:
            c.out(n)
    return c


FIXTURES = [
    ripple_adder(8),
    array_multiplier(4),
    comparator(8),
    hamming_ecc(16),
    alu(4),
    mux_tree(4),
    cla_adder(6),
    priority_encoder(12),
    random_logic("rnd1", 1, 16, 120),
    random_logic("rnd2", 2, 20, 160),
]


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "fixtures")
    os.makedirs(out, exist_ok=True)
    for c in FIXTURES:
        with open(os.path.join(out, c.name + ".bench"), "w") as f:
            f.write(c.text())


if __name__ == "__main__":
    main()
