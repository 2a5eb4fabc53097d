"""Enumerator oracle O_F at the semantic level.

Indices run over 1..k.  The index space is the concatenation of one block
per interaction; inside a block, i - offset - 1 splits into i_low (row of the
lookup table) and i_high (row of the J selector list).

``raw_apply`` performs the ladder steps for one index.  An index is valid
when the raw steps succeed, it is the smallest index reaching the same
output state, and the full matrix element is nonzero.
"""

from __future__ import annotations

import bisect
from collections import Counter
from dataclasses import dataclass, field

from .fock import FockState, Mode
from .tables import build_lookup_table, j_count, j_rank, j_rows

ZERO_TOL = 1e-15


@dataclass
class Block:
    x: object
    number: int
    offset: int
    jrows: list
    table: object
    a: int

    @property
    def n_j(self):
        return len(self.jrows)

    @property
    def size(self):
        return self.n_j * self.a


class ModelIndex:
    """Per-model precomputation: J lists, lookup tables and offsets."""

    def __init__(self, spec):
        self.spec = spec
        self.cutoffs = spec.cutoffs
        self.diagonal = spec.pure_diagonal()
        self.blocks = []
        off = 0
        for number, x in enumerate(spec.interactions):
            table = build_lookup_table(x, spec.cutoffs)
            rows = j_rows(x, spec.cutoffs.register_count)
            blk = Block(x, number, off, rows, table, table.a)
            self.blocks.append(blk)
            off += blk.size
        self.k = 1 if self.diagonal else off

    def locate(self, i):
        if not 1 <= i <= self.k or self.diagonal:
            return None
        for blk in self.blocks:
            if blk.offset < i <= blk.offset + blk.size:
                local = i - blk.offset - 1
                return blk, local % blk.a, local // blk.a
        return None


_INDEX = {}


def model_index(spec):
    hit = _INDEX.get(id(spec))
    if hit is not None and hit[0] is spec:
        return hit[1]
    idx = ModelIndex(spec)
    _INDEX[id(spec)] = (spec, idx)
    return idx


def index_space_size(interaction, cutoffs):
    """(#J values) * a for one interaction, counted without listing rows."""
    from .tables import table_stats
    a = table_stats(interaction, cutoffs)[1]
    return j_count(interaction, cutoffs.register_count) * a


@dataclass
class EnumTrace:
    i: int
    interaction: object = None
    i_low: int = None
    i_high: int = None
    J: tuple = ()
    n_in: list = field(default_factory=list)
    Q: tuple = None
    A: tuple = None
    E: list = field(default_factory=list)
    positions: list = field(default_factory=list)
    w_in: list = field(default_factory=list)
    w_out: list = field(default_factory=list)
    parity_in: list = field(default_factory=list)
    parity_out: list = field(default_factory=list)
    flag: int = 0
    reason: str = ''

    @property
    def sign(self):
        return -1 if (sum(self.parity_in) + sum(self.parity_out)) % 2 else 1

    def fail(self, reason):
        self.flag = self.i or 1
        self.reason = reason
        return None, self


def _key(particle, momentum):
    return (particle.label_key, momentum)


def _parity(regs, pos, particle):
    if not particle.fermionic:
        return 0
    total = 0
    for r in regs[:pos]:
        if r is not None and r[0].fermionic and r[0].species_id == particle.species_id:
            total += r[2]
    return total


def raw_apply(idx, F, i):
    """Ladder steps for index i; returns (F' or None, trace)."""
    trace = EnumTrace(i)
    loc = idx.locate(i)
    if loc is None:
        return trace.fail('index outside the index space')
    blk, il, ih = loc
    x = blk.x
    trace.interaction, trace.i_low, trace.i_high = x, il, ih
    J = blk.jrows[ih]
    trace.J = J
    I = idx.cutoffs.register_count
    regs = [[m.particle, m.momentum, m.occupancy] for m in F.modes]
    regs += [None] * (I - len(regs))
    h, g = x.h, x.g
    trace.n_in = [None] * h
    trace.w_in = [None] * h
    trace.parity_in = [0] * h
    for s in reversed(range(h)):
        leg = x.incoming[s]
        p = J[s] - 1
        r = regs[p]
        if r is None:
            return trace.fail(f'register {J[s]} is empty for incoming leg {leg.symbol}')
        if r[0] != leg.particle:
            return trace.fail(f'register {J[s]} holds {r[0].handle}, leg {leg.symbol} needs {leg.particle.handle}')
        trace.n_in[s] = r[1]
        trace.w_in[s] = r[2]
        trace.parity_in[s] = _parity(regs, p, leg.particle)
        r[2] -= 1
        if r[2] == 0:
            regs[p] = None
            trace.E.append(J[s])
    modes = [r for r in regs if r is not None]
    dims = idx.cutoffs.dims
    Q = tuple(sum(n[j] for n in trace.n_in) for j in range(dims)) if h else (0,) * dims
    trace.Q = Q
    row = blk.table.lookup(Q, il)
    if row is None:
        return trace.fail(f'no table row for Q={Q}, i_low={il}')
    trace.A = row
    trace.w_out = [None] * g
    trace.positions = [None] * g
    trace.parity_out = [0] * g
    W = idx.cutoffs.occupancy_cap
    for s in reversed(range(g)):
        leg = x.outgoing[s]
        n = row[s]
        keys = [_key(r[0], r[1]) for r in modes]
        k = _key(leg.particle, n)
        pos = bisect.bisect_left(keys, k)
        if pos < len(keys) and keys[pos] == k:
            if leg.particle.fermionic:
                return trace.fail(f'fermionic mode {leg.particle.handle}{n} already occupied')
            modes[pos][2] += 1
            if modes[pos][2] > W:
                return trace.fail(f'occupancy above W={W}')
        else:
            if len(modes) >= I:
                return trace.fail(f'more than I={I} occupied modes')
            modes.insert(pos, [leg.particle, n, 1])
        trace.positions[s] = pos
        trace.w_out[s] = modes[pos][2]
        trace.parity_out[s] = _parity(modes, pos, leg.particle)
    G = FockState(tuple(Mode(p, n, w) for p, n, w in modes))
    return G, trace


# canonical index

def _diff(F, G):
    cf = Counter({(m.particle, m.momentum): m.occupancy for m in F.modes})
    cg = Counter({(m.particle, m.momentum): m.occupancy for m in G.modes})
    return cf, cg, cf - cg, cg - cf


def _admissible(x, cf, R, D):
    """Spectator count per particle type, or None if x cannot map F to G."""
    in_t = Counter(leg.particle for leg in x.incoming)
    out_t = Counter(leg.particle for leg in x.outgoing)
    r_t = Counter()
    d_t = Counter()
    for (p, _), c in R.items():
        r_t[p] += c
    for (p, _), c in D.items():
        d_t[p] += c
    spect = {}
    for t in set(in_t) | set(out_t) | set(r_t) | set(d_t):
        c = in_t[t] - r_t[t]
        if c < 0 or c != out_t[t] - d_t[t]:
            return None
        avail = sum(cf[key] - R[key] for key in cf if key[0] == t)
        if c > avail:
            return None
        spect[t] = c
    return spect


def _selector(x, F, annihilated):
    """J tuple for a multiset {mode key: count} of annihilated modes."""
    pos_of = {(m.particle, m.momentum): p + 1 for p, m in enumerate(F.modes)}
    per_type = {}
    for key in sorted(annihilated, key=lambda k: pos_of[k]):
        per_type.setdefault(key[0], []).extend([pos_of[key]] * annihilated[key])
    J = []
    used = Counter()
    for leg in x.incoming:
        t = leg.particle
        J.append(per_type[t][used[t]])
        used[t] += 1
    return tuple(J), per_type


def _outgoing(x, created):
    per_type = {}
    for key in sorted(created, key=lambda k: _key(*k), reverse=True):
        per_type.setdefault(key[0], []).extend([key[1]] * created[key])
    A = []
    used = Counter()
    for leg in x.outgoing:
        t = leg.particle
        A.append(per_type[t][used[t]])
        used[t] += 1
    return tuple(A)


def _spectator_choices(F, cf, R, spect, greedy):
    """Yield {mode key: count} spectator multisets; greedy yields only the
    one taking the lowest register positions."""
    keys = [(m.particle, m.momentum) for m in F.modes]
    avail = [cf[k] - R[k] for k in keys]
    need = dict(spect)

    def rec(pos, chosen):
        if pos == len(keys):
            if all(v == 0 for v in need.values()):
                yield dict(chosen)
            return
        t = keys[pos][0]
        left = need.get(t, 0)
        top = min(avail[pos], left)
        options = [top] if greedy else range(top, -1, -1)
        for take in options:
            if take:
                chosen[keys[pos]] = take
            need[t] = left - take
            yield from rec(pos + 1, chosen)
            need[t] = left
            chosen.pop(keys[pos], None)
            if greedy:
                return

    yield from rec(0, {})


def transition_indices(idx, F, G, greedy=False):
    """Indices i (with their interaction block) whose raw steps could map F
    to G, one per spectator choice.  With ``greedy`` only the first
    admissible interaction and its lowest-position choice are returned."""
    if len(G.modes) > idx.cutoffs.register_count:
        return
    cf, cg, R, D = _diff(F, G)
    for blk in idx.blocks:
        if blk.a == 0:
            continue
        spect = _admissible(blk.x, cf, R, D)
        if spect is None:
            continue
        for C in _spectator_choices(F, cf, R, spect, greedy):
            ann = Counter(R) + Counter(C)
            cre = Counter(D) + Counter(C)
            J, _ = _selector(blk.x, F, ann)
            A = _outgoing(blk.x, cre)
            dims = idx.cutoffs.dims
            Q = tuple(sum(n[j] for n in (k[1] for k in ann.elements())) for j in range(dims))
            il = blk.table.index_of(Q, A)
            if il is None:
                continue
            ih = j_rank(J, blk.x, idx.cutoffs.register_count)
            yield blk, blk.offset + ih * blk.a + il + 1
        if greedy:
            return


def canonical_index(idx, F, G):
    """Smallest index whose raw steps map F to G; 0 when there is none."""
    if idx.diagonal:
        return 1 if F == G else 0
    for _, i in transition_indices(idx, F, G, greedy=True):
        return i
    return 0


def enumerate_semantic(spec, F, i):
    """(F', a_flag, trace): a_flag is 0 for a valid index, else i."""
    from .matrix_element import matrix_element
    idx = model_index(spec)
    if idx.diagonal:
        trace = EnumTrace(i, reason='diagonal copy')
        if i != 1:
            trace.flag = i
            trace.reason = 'index outside the index space'
            return F, i, trace
        return F, 0, trace
    G, trace = raw_apply(idx, F, i)
    if G is None:
        return F, i, trace
    if canonical_index(idx, F, G) != i:
        trace.fail('another index reaches the same state first')
        return F, i, trace
    if abs(matrix_element(spec, F, G).value) < ZERO_TOL:
        trace.fail('matrix element is zero')
        return F, i, trace
    return G, 0, trace


def connected_states(spec, F):
    """[(F', trace)] for every F' with a nonzero entry, each reached by its
    canonical index, in index order."""
    from .matrix_element import matrix_element
    idx = model_index(spec)
    if idx.diagonal:
        return [(F, EnumTrace(1, reason='diagonal copy'))]
    seen = set()
    out = []
    for i in range(1, idx.k + 1):
        G, trace = raw_apply(idx, F, i)
        if G is None or G in seen:
            continue
        seen.add(G)
        if abs(matrix_element(spec, F, G).value) >= ZERO_TOL:
            out.append((G, trace))
    return out


def exact_sparsity(spec, F):
    return len(connected_states(spec, F))
