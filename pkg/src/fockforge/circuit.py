"""Reversible log-local circuit for the enumerator oracle.

Registers are named integers.  Every operation changes only its target
registers, as a function of registers it reads but does not write, through
an invertible action (xor, add/sub, swap of register pairs, or the exchange
0 <-> v).  That makes each operation a permutation of the register values,
and the inverse circuit is the reversed list of inverse operations.

Layout of the oracle (F: input modes, i: index, O: output modes, W: work
copy of F):

  A. step 1  decode i into interaction, i_low, i_high and the selector J
     step 2  annihilate the J registers of W, recording n, w, parity and
             emptied positions, then move emptied registers to the end
     step 3  total momentum Q and the lookup-table sweep
     step 4  create the outgoing modes in W (match, or insert with a swap
             cascade), recording w' and parity
     then    compute the canonical index of (F, W) and flag i if it differs
  B. copy W into O when the flag is clear, F otherwise
  C. undo A
  D. compute the canonical index of (F, O), swap the i register between that
     value and 0, and undo the index computation

Long classical sweeps (selector rows, table cells) are kept as lazy blocks
whose length is known without building the operations.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .fock import BitLayout, DecodeError, FockState, Mode, clog2
from .tables import grid, grid_size, j_count, table_stats

KINDS = ('compare', 'add/sub', 'swap', 'copy', 'controlled-set', 'rotate-placeholder')
STEPS = ('step1', 'step2', 'step3', 'step4', 'uncompute')


class CircuitError(RuntimeError):
    pass


@dataclass
class Op:
    kind: str
    step: str
    targets: tuple
    reads: tuple
    action: str = 'xor'
    value: object = None
    control: object = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CircuitError(f'unknown operation kind {self.kind!r}')
        clash = set(self.targets) & set(self.reads)
        if clash:
            raise CircuitError(f'operation writes registers it reads: {sorted(clash)}')
        if self.action == 'swap' and len(self.targets) % 2:
            raise CircuitError('swap needs paired targets')


@dataclass
class Sweep:
    """A run of ``size`` operations produced on demand by ``factory``."""
    kind: str
    step: str
    size: int
    factory: object


@dataclass
class Reverse:
    """The inverse of a list of items."""
    items: list


class _View:
    __slots__ = ('_state', '_allowed')

    def __init__(self, state, allowed):
        self._state = state
        self._allowed = allowed

    def __getitem__(self, name):
        if name not in self._allowed:
            raise CircuitError(f'operation reads undeclared register {name!r}')
        return self._state.get(name, 0)


def _apply(op, state, inverse):
    view = _View(state, frozenset(op.reads))
    if op.control is not None and not op.control(view):
        return
    if op.action == 'swap':
        half = len(op.targets) // 2
        for a, b in zip(op.targets[:half], op.targets[half:]):
            state[a], state[b] = state.get(b, 0), state.get(a, 0)
        return
    value = op.value(view) if callable(op.value) else op.value
    if op.action == 'exchange':
        t = op.targets[0]
        cur = state.get(t, 0)
        if value:
            if cur == value:
                state[t] = 0
            elif cur == 0:
                state[t] = value
        return
    if not isinstance(value, tuple):
        value = (value,) * len(op.targets)
    if len(value) != len(op.targets):
        raise CircuitError('value arity does not match targets')
    action = op.action
    if inverse and action in ('add', 'sub'):
        action = 'sub' if action == 'add' else 'add'
    for t, v in zip(op.targets, value):
        cur = state.get(t, 0)
        if action == 'xor':
            state[t] = cur ^ v
        elif action == 'add':
            state[t] = cur + v
        elif action == 'sub':
            state[t] = cur - v
        else:
            raise CircuitError(f'unknown action {action!r}')


def _run(items, state, inverse):
    seq = reversed(items) if inverse else items
    for item in seq:
        if isinstance(item, Op):
            _apply(item, state, inverse)
        elif isinstance(item, Sweep):
            ops = list(item.factory())
            if len(ops) != item.size:
                raise CircuitError(f'sweep promised {item.size} operations, built {len(ops)}')
            _run(ops, state, inverse)
        elif isinstance(item, Reverse):
            _run(item.items, state, not inverse)
        else:
            raise CircuitError(f'not a circuit item: {item!r}')


@dataclass
class GateTally:
    per_step: dict = field(default_factory=lambda: {s: 0 for s in STEPS})
    per_kind: dict = field(default_factory=lambda: {k: 0 for k in KINDS})

    @property
    def total(self):
        return sum(self.per_step.values())

    def add(self, step, kind, n=1):
        self.per_step[step] += n
        self.per_kind[kind] += n

    def row(self):
        return {f'{s}_ops' if s != 'uncompute' else 'uncompute_ops': self.per_step[s] for s in STEPS}


def tally_items(items, tally=None, override=None):
    tally = tally or GateTally()
    for item in items:
        if isinstance(item, Op):
            tally.add(override or item.step, item.kind)
        elif isinstance(item, Sweep):
            tally.add(override or item.step, item.kind, item.size)
        else:
            tally_items(item.items, tally, 'uncompute')
    return tally


def count_materialized(items):
    """Operation count with every sweep expanded (for checking sizes)."""
    n = 0
    for item in items:
        if isinstance(item, Op):
            n += 1
        elif isinstance(item, Sweep):
            n += sum(1 for _ in item.factory())
        else:
            n += count_materialized(item.items)
    return n


@dataclass
class Circuit:
    spec: object
    layout: object
    items: list
    io: frozenset
    flag_width: int
    phases: dict = field(default_factory=dict)

    def tally(self):
        return tally_items(self.items)

    def ops(self):
        """Every operation in execution order, sweeps and reversals expanded."""
        out = []

        def walk(items, inverse):
            seq = reversed(items) if inverse else items
            for item in seq:
                if isinstance(item, Op):
                    out.append(item)
                elif isinstance(item, Sweep):
                    sub = list(item.factory())
                    out.extend(reversed(sub) if inverse else sub)
                else:
                    walk(item.items, not inverse)

        walk(self.items, False)
        return out


def R(*name):
    return name


# register loading

def mode_fields(tag, j, dims):
    return [(tag, j, 'q')] + [(tag, j, 'n', d) for d in range(dims)] + [(tag, j, 'w')]


def load_state(state, tag, F, layout, dims, registers):
    if len(F.modes) > registers:
        raise CircuitError(f'{len(F.modes)} modes do not fit in {registers} registers')
    for j, m in enumerate(F.modes):
        state[(tag, j, 'q')] = layout.label_code(m.particle)
        for d in range(dims):
            state[(tag, j, 'n', d)] = m.momentum[d]
        state[(tag, j, 'w')] = m.occupancy


def read_state(snapshot, tag, layout, dims, registers):
    """Decode a register file; raises DecodeError for non-canonical data."""
    modes = []
    ended = False
    for j in range(registers):
        q = snapshot.get((tag, j, 'q'), 0)
        n = tuple(snapshot.get((tag, j, 'n', d), 0) for d in range(dims))
        w = snapshot.get((tag, j, 'w'), 0)
        if w == 0:
            if q or any(n):
                raise DecodeError(f'register {j} has zero occupancy but nonzero fields')
            ended = True
            continue
        if ended or w < 0 or not 0 <= q < len(layout.particles):
            raise DecodeError(f'register {j} is not a canonical mode')
        modes.append(Mode(layout.particles[q], n, w))
    for a, b in zip(modes, modes[1:]):
        if not a.key < b.key:
            raise DecodeError('modes out of order')
    return FockState(tuple(modes))


# builder

class _Builder:
    def __init__(self, spec, materialize):
        from .enumerator import model_index
        self.spec = spec
        self.cut = spec.cutoffs
        self.I = self.cut.register_count
        self.dims = self.cut.dims
        self.Wcap = self.cut.occupancy_cap
        self.layout = BitLayout.build(self.cut, spec.particle_types())
        self.codes = list(range(len(self.layout.particles)))
        self.hmax = spec.h
        self.gmax = spec.g
        self.step = 'step1'
        self.items = []
        self._model_index = model_index
        self.flag_checks = 0
        # per interaction: number, offset, a, n_j, ranges, n_rows
        self.blocks = []
        off = 0
        for number, x in enumerate(spec.interactions):
            ranges, a, n_rows, _ = table_stats(x, self.cut)
            n_j = j_count(x, self.I)
            self.blocks.append(dict(x=x, number=number, off=off, a=a, n_j=n_j,
                                    ranges=ranges, n_rows=n_rows))
            off += n_j * a
        self.k = off

    # emission helpers

    def op(self, kind, targets, reads, action='xor', value=None, control=None):
        op = Op(kind, self.step, tuple(targets), tuple(reads), action, value, control)
        self.items.append(op)
        if targets and targets[0] == ('flag',) and action == 'add':
            self.flag_checks += 1
        return op

    def sweep(self, kind, size, factory):
        self.items.append(Sweep(kind, self.step, size, factory))

    def code(self, particle):
        return self.layout.label_code(particle)

    def fermionic(self, code):
        return self.layout.particles[code].fermionic

    def same_group(self, c1, c2):
        p1, p2 = self.layout.particles[c1], self.layout.particles[c2]
        return p1.fermionic and p2.fermionic and p1.species_id == p2.species_id

    def key(self, code, momentum):
        return (code,) + tuple(momentum)

    def F(self, tag, j, f, d=None):
        return (tag, j, f) if d is None else (tag, j, 'n', d)

    def n_regs(self, tag, j):
        return [(tag, j, 'n', d) for d in range(self.dims)]

    def fields(self, tag, j):
        return mode_fields(tag, j, self.dims)

    # phase A

    def step1(self):
        self.step = 'step1'
        i, sel, ilo, ihi = R('i'), R('sel'), R('ilo'), R('ihi')
        live = [b for b in self.blocks if b['n_j'] * b['a'] > 0]
        for b in live:
            lo, hi = b['off'], b['off'] + b['n_j'] * b['a']
            self.op('compare', [sel], [i], value=b['number'] + 1,
                    control=lambda v, lo=lo, hi=hi: lo < v[i] <= hi)
        self.op('add/sub', [R('flag')], [sel], action='add', value=1,
                control=lambda v: v[sel] == 0)
        for b in live:
            num, off, a = b['number'] + 1, b['off'], b['a']
            self.op('add/sub', [ilo, ihi], [i, sel], action='add',
                    value=lambda v, off=off, a=a: ((v[i] - off - 1) % a, (v[i] - off - 1) // a),
                    control=lambda v, num=num: v[sel] == num)
        tin = [R('tin', s) for s in range(self.hmax)]
        tout = [R('tout', s) for s in range(self.gmax)]
        for b in live:
            x, num = b['x'], b['number'] + 1
            vals = tuple([self.code(l.particle) + 1 for l in x.incoming] + [0] * (self.hmax - x.h)
                         + [self.code(l.particle) + 1 for l in x.outgoing] + [0] * (self.gmax - x.g))
            if tin + tout:
                self.op('controlled-set', tin + tout, [sel], value=vals,
                        control=lambda v, num=num: v[sel] == num)
        for b in live:
            x, num = b['x'], b['number'] + 1
            if x.h == 0:
                continue
            targets = [R('J', s) for s in range(x.h)]

            def rows(b=b, x=x, num=num, targets=targets):
                blk = self._model_index(self.spec).blocks[b['number']]
                for r, J in enumerate(blk.jrows):
                    yield Op('controlled-set', 'step1', tuple(targets), (sel, ihi), 'xor', tuple(J),
                             lambda v, r=r: v[sel] == num and v[ihi] == r)

            self.sweep('controlled-set', b['n_j'], rows)

    def step2(self):
        self.step = 'step2'
        I, flag = self.I, R('flag')
        for j in range(I):
            self.op('copy', self.fields('W', j), self.fields('F', j),
                    value=lambda v, j=j: tuple(v[r] for r in self.fields('F', j)))
        order = list(reversed(range(self.hmax)))
        for s in order:
            Js, tin, win, par, E = R('J', s), R('tin', s), R('win', s), R('par', s), R('E', s)
            nin = [R('nin', s, d) for d in range(self.dims)]
            for p in range(I):
                Wq, Ww, Wn = ('W', p, 'q'), ('W', p, 'w'), self.n_regs('W', p)
                hit = lambda v, p=p, Js=Js, tin=tin: v[tin] != 0 and v[Js] == p + 1
                self.op('copy', nin + [win], [Js, tin] + Wn + [Ww],
                        value=lambda v, Wn=Wn, Ww=Ww: tuple(v[r] for r in Wn) + (v[Ww],),
                        control=hit)
                self.op('compare', [flag], [Js, tin, Wq, Ww], action='add', value=1,
                        control=lambda v, hit=hit, Wq=Wq, Ww=Ww, tin=tin:
                        hit(v) and (v[Ww] <= 0 or v[Wq] != v[tin] - 1))
                self.op('add/sub', [par], [Js, tin, Wq, Ww], action='add',
                        value=lambda v, Ww=Ww: v[Ww],
                        control=lambda v, p=p, Js=Js, tin=tin, Wq=Wq, Ww=Ww:
                        v[tin] != 0 and p < v[Js] - 1 and v[Ww] > 0
                        and self.same_group(v[tin] - 1, v[Wq]))
                ok = lambda v, hit=hit, Wq=Wq, tin=tin, win=win: hit(v) and v[Wq] == v[tin] - 1 and v[win] > 0
                self.op('add/sub', [Ww], [Js, tin, Wq, win], action='sub', value=1, control=ok)
                self.op('compare', [E], [Js, tin, Wq, win], value=p + 1,
                        control=lambda v, ok=ok, win=win: ok(v) and v[win] == 1)
                self.op('controlled-set', [Wq] + Wn, [E, tin] + nin,
                        value=lambda v, tin=tin, nin=nin: (v[tin] - 1,) + tuple(v[r] for r in nin),
                        control=lambda v, p=p, E=E: v[E] == p + 1)
        # shift emptied registers to the end, correcting later positions
        done = []
        for s in order:
            Es, Rs = R('E', s), R('Rm', s)
            self.op('copy', [Rs], [Es], value=lambda v, Es=Es: v[Es])
            for t in done:
                Et = R('E', t)
                self.op('add/sub', [Rs], [Es, Et], action='sub', value=1,
                        control=lambda v, Es=Es, Et=Et: 0 < v[Et] < v[Es])
            done.append(s)
        for s in order:
            Rs = R('Rm', s)
            for p in range(I - 1):
                self.op('swap', self.fields('W', p) + self.fields('W', p + 1), [Rs], action='swap',
                        control=lambda v, p=p, Rs=Rs: v[Rs] != 0 and p >= v[Rs] - 1)

    def step3(self):
        self.step = 'step3'
        Q = [R('Q', d) for d in range(self.dims)]
        sel, ilo, flag = R('sel'), R('ilo'), R('flag')
        for s in range(self.hmax):
            tin = R('tin', s)
            nin = [R('nin', s, d) for d in range(self.dims)]
            self.op('add/sub', Q, [tin] + nin, action='add',
                    value=lambda v, nin=nin: tuple(v[r] for r in nin),
                    control=lambda v, tin=tin: v[tin] != 0)
        for b in self.blocks:
            if b['n_j'] * b['a'] == 0:
                continue
            num, ranges, a, x = b['number'] + 1, b['ranges'], b['a'], b['x']
            self.op('compare', [flag], [sel] + Q, action='add', value=1,
                    control=lambda v, num=num, ranges=ranges: v[sel] == num and not all(
                        lo <= v[q] <= hi for q, (lo, hi) in zip(Q, ranges)))
            targets = [R('A', s, d) for s in range(x.g) for d in range(self.dims)]

            def cells(b=b, num=num, ranges=ranges, a=a, targets=targets):
                blk = self._model_index(self.spec).blocks[b['number']]
                for Qc in grid(ranges):
                    rows = blk.table.rows.get(Qc, [])
                    for il in range(a):
                        ctrl = (lambda v, Qc=Qc, il=il: v[sel] == num and v[ilo] == il
                                and tuple(v[q] for q in Q) == Qc)
                        if il < len(rows):
                            flat = tuple(c for n in rows[il] for c in n)
                            if targets:
                                yield Op('controlled-set', 'step3', tuple(targets), (sel, ilo, *Q),
                                         'xor', flat, ctrl)
                            else:
                                yield Op('controlled-set', 'step3', (R('hit'),), (sel, ilo, *Q),
                                         'xor', 0, ctrl)
                        else:
                            yield Op('controlled-set', 'step3', (flag,), (sel, ilo, *Q), 'add', 1, ctrl)

            self.flag_checks += 1
            self.sweep('controlled-set', grid_size(ranges) * a, cells)

    def step4(self):
        self.step = 'step4'
        I, flag, Wcap = self.I, R('flag'), self.Wcap
        for s in reversed(range(self.gmax)):
            tout, M, P, cap = R('tout', s), R('M', s), R('P', s), R('cap', s)
            wout, pout = R('wout', s), R('pout', s)
            A = [R('A', s, d) for d in range(self.dims)]
            for p in range(I):
                Wq, Ww, Wn = ('W', p, 'q'), ('W', p, 'w'), self.n_regs('W', p)
                self.op('compare', [M], [tout, Wq, Ww] + Wn + A, value=p + 1,
                        control=lambda v, Wq=Wq, Ww=Ww, Wn=Wn, A=A, tout=tout:
                        v[tout] != 0 and v[Ww] > 0 and v[Wq] == v[tout] - 1
                        and all(v[a] == v[n] for a, n in zip(A, Wn)))
            self.op('compare', [flag], [tout, M], action='add', value=1,
                    control=lambda v, tout=tout, M=M: v[tout] != 0 and v[M] != 0
                    and self.fermionic(v[tout] - 1))
            boson_hit = (lambda v, p, tout=tout, M=M: v[tout] != 0 and v[M] == p + 1
                         and not self.fermionic(v[tout] - 1))
            for p in range(I):
                Ww = ('W', p, 'w')
                self.op('add/sub', [Ww], [tout, M], action='add', value=1,
                        control=lambda v, p=p, bh=boson_hit: bh(v, p))
                self.op('compare', [flag], [tout, M, Ww], action='add', value=1,
                        control=lambda v, p=p, bh=boson_hit, Ww=Ww: bh(v, p) and v[Ww] > Wcap)
                self.op('copy', [wout], [tout, M, Ww], value=lambda v, Ww=Ww: v[Ww],
                        control=lambda v, p=p, bh=boson_hit: bh(v, p))
            new = lambda v, tout=tout, M=M: v[tout] != 0 and v[M] == 0
            for p in range(I):
                Wq, Ww, Wn = ('W', p, 'q'), ('W', p, 'w'), self.n_regs('W', p)
                self.op('add/sub', [P], [tout, M, Wq, Ww] + Wn + A, action='add', value=1,
                        control=lambda v, new=new, Wq=Wq, Ww=Ww, Wn=Wn, A=A, tout=tout:
                        new(v) and v[Ww] > 0 and self.key(v[Wq], [v[n] for n in Wn])
                        < self.key(v[tout] - 1, [v[a] for a in A]))
            last = ('W', I - 1, 'w')
            self.op('compare', [cap], [tout, M, last], value=1,
                    control=lambda v, new=new: new(v) and v[last] != 0)
            self.op('compare', [flag], [cap], action='add', value=1,
                    control=lambda v, cap=cap: v[cap] == 1)
            go = lambda v, new=new, cap=cap: new(v) and v[cap] == 0
            for j in reversed(range(I - 1)):
                self.op('swap', self.fields('W', j) + self.fields('W', j + 1), [tout, M, cap, P],
                        action='swap', control=lambda v, j=j, go=go, P=P: go(v) and j >= v[P])
            for p in range(I):
                self.op('controlled-set', self.fields('W', p), [tout, M, cap, P] + A,
                        value=lambda v, tout=tout, A=A: (v[tout] - 1,) + tuple(v[a] for a in A) + (1,),
                        control=lambda v, p=p, go=go, P=P: go(v) and v[P] == p)
            self.op('controlled-set', [wout], [tout, M, cap], value=1, control=go)
            for p in range(I):
                Wq, Ww = ('W', p, 'q'), ('W', p, 'w')
                self.op('add/sub', [pout], [tout, M, P, cap, Wq, Ww], action='add',
                        value=lambda v, Ww=Ww: v[Ww],
                        control=lambda v, p=p, tout=tout, M=M, P=P, cap=cap, Wq=Wq, Ww=Ww:
                        v[tout] != 0 and v[Ww] > 0 and self.same_group(v[tout] - 1, v[Wq])
                        and ((v[M] != 0 and p < v[M] - 1) or (v[M] == 0 and v[cap] == 0 and p < v[P])))

    # canonical index of (F, G)

    def index_of_pair(self, G):
        self.step = 'uncompute'
        I, dims, hmax, gmax = self.I, self.dims, self.hmax, self.gmax
        codes = self.codes
        Fw = lambda p: ('F', p, 'w')  # noqa: E731
        Fq = lambda p: ('F', p, 'q')  # noqa: E731
        Gw = lambda q: (G, q, 'w')  # noqa: E731
        Gq = lambda q: (G, q, 'q')  # noqa: E731
        window = lambda p: range(max(0, p - hmax), min(I, p + gmax + 1))  # noqa: E731
        mb = lambda p, q: R('mb', p, q)  # noqa: E731
        for p in range(I):
            for q in window(p):
                fa, ga = self.fields('F', p), self.fields(G, q)
                self.op('compare', [mb(p, q)], fa + ga, value=1,
                        control=lambda v, fa=fa, ga=ga: v[fa[-1]] > 0 and v[ga[-1]] > 0
                        and all(v[a] == v[b] for a, b in zip(fa[:-1], ga[:-1])))
        for p in range(I):
            for q in window(p):
                self.op('add/sub', [R('gw', p)], [mb(p, q), Gw(q)], action='add',
                        value=lambda v, q=q: v[Gw(q)], control=lambda v, p=p, q=q: v[mb(p, q)] == 1)
            self.op('copy', [R('rm', p)], [Fw(p), R('gw', p)],
                    value=lambda v, p=p: max(v[Fw(p)] - v[R('gw', p)], 0))
            self.op('copy', [R('av', p)], [Fw(p), R('gw', p)],
                    value=lambda v, p=p: min(v[Fw(p)], v[R('gw', p)]))
        for q in range(I):
            for p in range(max(0, q - gmax), min(I, q + hmax + 1)):
                self.op('add/sub', [R('fw', q)], [mb(p, q), Fw(p)], action='add',
                        value=lambda v, p=p: v[Fw(p)], control=lambda v, p=p, q=q: v[mb(p, q)] == 1)
            self.op('copy', [R('ad', q)], [Gw(q), R('fw', q)],
                    value=lambda v, q=q: max(v[Gw(q)] - v[R('fw', q)], 0))
        for c in codes:
            for p in range(I):
                for name, src in (('rc', 'rm'), ('avc', 'av')):
                    self.op('add/sub', [R(name, c)], [Fq(p), Fw(p), R(src, p)], action='add',
                            value=lambda v, p=p, src=src: v[R(src, p)],
                            control=lambda v, p=p, c=c: v[Fw(p)] > 0 and v[Fq(p)] == c)
            for q in range(I):
                self.op('add/sub', [R('dc', c)], [Gq(q), Gw(q), R('ad', q)], action='add',
                        value=lambda v, q=q: v[R('ad', q)],
                        control=lambda v, q=q, c=c: v[Gw(q)] > 0 and v[Gq(q)] == c)
        counts = [R(n, c) for n in ('rc', 'dc', 'avc') for c in codes]
        sel2 = R('sel2')
        live = [b for b in self.blocks if b['n_j'] * b['a'] > 0]
        prev = None
        for b in live:
            x, num = b['x'], b['number']
            in_t = Counter(self.code(l.particle) for l in x.incoming)
            out_t = Counter(self.code(l.particle) for l in x.outgoing)

            def admissible(v, in_t=in_t, out_t=out_t):
                for c in codes:
                    sp = in_t[c] - v[R('rc', c)]
                    if sp < 0 or sp != out_t[c] - v[R('dc', c)] or sp > v[R('avc', c)]:
                        return False
                return True

            self.op('compare', [R('adm', num)], counts, value=1, control=admissible)
            if prev is None:
                self.op('compare', [sel2], [R('adm', num)], value=num + 1,
                        control=lambda v, num=num: v[R('adm', num)] == 1)
            else:
                self.op('compare', [R('pre', num)], [R('pre', prev), R('adm', prev)], value=1,
                        control=lambda v, prev=prev: v[R('pre', prev)] == 1 or v[R('adm', prev)] == 1)
                self.op('compare', [sel2], [R('adm', num), R('pre', num)], value=num + 1,
                        control=lambda v, num=num: v[R('adm', num)] == 1 and v[R('pre', num)] == 0)
            prev = num
        cs = [R('cs', c) for c in codes]
        tin2 = [R('tin2', s) for s in range(hmax)]
        rk2 = [R('rk2', s) for s in range(hmax)]
        tout2 = [R('tout2', s) for s in range(gmax)]
        rko2 = [R('rko2', s) for s in range(gmax)]
        for b in live:
            x, num = b['x'], b['number']
            in_t = Counter(self.code(l.particle) for l in x.incoming)
            self.op('controlled-set', cs, [sel2] + [R('rc', c) for c in codes],
                    value=lambda v, in_t=in_t: tuple(in_t[c] - v[R('rc', c)] for c in codes),
                    control=lambda v, num=num: v[sel2] == num + 1)
            consts = []
            for legs, width in ((x.incoming, hmax), (x.outgoing, gmax)):
                seen = Counter()
                types, ranks = [], []
                for l in legs:
                    c = self.code(l.particle)
                    types.append(c + 1)
                    ranks.append(seen[c])
                    seen[c] += 1
                pad = [0] * (width - len(legs))
                consts.append((types + pad, ranks + pad))
            vals = tuple(consts[0][0] + consts[0][1] + consts[1][0] + consts[1][1])
            if vals:
                self.op('controlled-set', tin2 + rk2 + tout2 + rko2, [sel2], value=vals,
                        control=lambda v, num=num: v[sel2] == num + 1)
        for p in range(I):
            if p > 0:
                self.op('copy', [R('cum', p)], [R('cum', p - 1), R('sp', p - 1), Fq(p - 1), Fq(p)],
                        value=lambda v, p=p: v[R('cum', p - 1)] + v[R('sp', p - 1)]
                        if v[Fq(p - 1)] == v[Fq(p)] else 0)
            self.op('copy', [R('sp', p)], [sel2, Fq(p), Fw(p), R('av', p), R('cum', p)] + cs,
                    value=lambda v, p=p: max(0, min(v[R('av', p)], v[R('cs', v[Fq(p)])] - v[R('cum', p)]))
                    if 0 <= v[Fq(p)] < len(codes) else 0,
                    control=lambda v, p=p: v[sel2] != 0 and v[Fw(p)] > 0)
            self.op('copy', [R('an', p)], [R('rm', p), R('sp', p)],
                    value=lambda v, p=p: v[R('rm', p)] + v[R('sp', p)])
            reads = [R('an', p)] + ([R('ca', p - 1), Fq(p - 1), Fq(p)] if p > 0 else [])
            self.op('copy', [R('ca', p)], reads,
                    value=lambda v, p=p: v[R('an', p)] + (v[R('ca', p - 1)]
                                                         if p > 0 and v[Fq(p - 1)] == v[Fq(p)] else 0))
        for q in range(I):
            for p in range(max(0, q - gmax), min(I, q + hmax + 1)):
                self.op('add/sub', [R('cr', q)], [mb(p, q), R('sp', p)], action='add',
                        value=lambda v, p=p: v[R('sp', p)], control=lambda v, p=p, q=q: v[mb(p, q)] == 1)
            self.op('add/sub', [R('cr', q)], [R('ad', q)], action='add', value=lambda v, q=q: v[R('ad', q)])
        for q in reversed(range(I)):
            reads = [R('cr', q)] + ([R('cc', q + 1), Gq(q), Gq(q + 1)] if q + 1 < I else [])
            self.op('copy', [R('cc', q)], reads,
                    value=lambda v, q=q: v[R('cr', q)] + (v[R('cc', q + 1)]
                                                         if q + 1 < I and v[Gq(q)] == v[Gq(q + 1)] else 0))
        for s in range(hmax):
            J2 = R('J2', s)
            for p in range(I):
                self.op('add/sub', [J2], [tin2[s], rk2[s], Fq(p), Fw(p), R('ca', p)], action='add', value=1,
                        control=lambda v, s=s, p=p: v[tin2[s]] != 0 and v[Fw(p)] > 0 and (
                            v[Fq(p)] < v[tin2[s]] - 1
                            or (v[Fq(p)] == v[tin2[s]] - 1 and v[R('ca', p)] <= v[rk2[s]])))
            self.op('add/sub', [J2], [tin2[s]], action='add', value=1,
                    control=lambda v, s=s: v[tin2[s]] != 0)
        for s in range(gmax):
            A2 = [R('A2', s, d) for d in range(dims)]
            for q in range(I):
                Gn = self.n_regs(G, q)
                self.op('copy', A2, [tout2[s], rko2[s], Gq(q), Gw(q), R('cc', q), R('cr', q)] + Gn,
                        value=lambda v, Gn=Gn: tuple(v[n] for n in Gn),
                        control=lambda v, s=s, q=q: v[tout2[s]] != 0 and v[Gw(q)] > 0
                        and v[Gq(q)] == v[tout2[s]] - 1
                        and v[R('cc', q)] - v[R('cr', q)] <= v[rko2[s]] < v[R('cc', q)])
        Q2 = [R('Q2', d) for d in range(dims)]
        for p in range(I):
            Fn = self.n_regs('F', p)
            self.op('add/sub', Q2, [R('an', p)] + Fn, action='add',
                    value=lambda v, p=p, Fn=Fn: tuple(v[R('an', p)] * v[n] for n in Fn),
                    control=lambda v, p=p: v[R('an', p)] != 0)
        ih2, il2 = R('ih2'), R('il2')
        for b in live:
            x, num = b['x'], b['number'] + 1
            J2 = [R('J2', s) for s in range(x.h)]

            def jrows(b=b, num=num, J2=J2):
                blk = self._model_index(self.spec).blocks[b['number']]
                for r, J in enumerate(blk.jrows):
                    yield Op('controlled-set', 'uncompute', (ih2,), (sel2, *J2), 'xor', r,
                             lambda v, J=J: v[sel2] == num and tuple(v[j] for j in J2) == J)

            self.sweep('controlled-set', b['n_j'], jrows)
            A2 = [R('A2', s, d) for s in range(x.g) for d in range(dims)]

            def rows(b=b, num=num, A2=A2):
                blk = self._model_index(self.spec).blocks[b['number']]
                for Qc in sorted(blk.table.rows):
                    for il, row in enumerate(blk.table.rows[Qc]):
                        flat = tuple(c for n in row for c in n)
                        yield Op('controlled-set', 'uncompute', (il2,), (sel2, *Q2, *A2), 'xor', il,
                                 lambda v, Qc=Qc, flat=flat: v[sel2] == num
                                 and tuple(v[q] for q in Q2) == Qc
                                 and tuple(v[a] for a in A2) == flat)

            self.sweep('controlled-set', b['n_rows'], rows)
        everything = [r for j in range(I) for r in self.fields('F', j) + self.fields(G, j)]
        self.op('rotate-placeholder', [R('nz')], [sel2] + everything, value=1,
                control=lambda v, G=G: v[sel2] != 0 and self.nonzero(v, G))
        for b in live:
            num, off, a = b['number'] + 1, b['off'], b['a']
            self.op('add/sub', [R('istar')], [sel2, R('nz'), ih2, il2], action='add',
                    value=lambda v, off=off, a=a: off + v[ih2] * a + v[il2] + 1,
                    control=lambda v, num=num: v[sel2] == num and v[R('nz')] == 1)

    def nonzero(self, v, G):
        """Stand-in for the O_H arithmetic: is <G|H|F> nonzero?"""
        from .matrix_element import matrix_element
        snap = {}
        for j in range(self.I):
            for r in self.fields('F', j) + self.fields(G, j):
                snap[r] = v[r]
        try:
            F = read_state(snap, 'F', self.layout, self.dims, self.I)
            Gs = read_state(snap, G, self.layout, self.dims, self.I)
        except DecodeError:
            return False
        return matrix_element(self.spec, F, Gs).value != 0

    def build(self):
        if self.spec.pure_diagonal():
            self.step = 'step4'
            for j in range(self.I):
                self.op('copy', self.fields('O', j), self.fields('F', j),
                        value=lambda v, j=j: tuple(v[r] for r in self.fields('F', j)))
            self.op('swap', [R('i')], [], action='exchange', value=1)
            return self.items, {}
        phases = {}
        self.step1()
        self.step2()
        self.step3()
        self.step4()
        self.index_of_pair('W')
        self.op('compare', [R('flag')], [R('istar'), R('i')], action='add', value=1,
                control=lambda v: v[R('istar')] != v[R('i')])
        phase_a = self.items
        self.items = []
        self.step = 'uncompute'
        flag = R('flag')
        for j in range(self.I):
            self.op('copy', self.fields('O', j), [flag] + self.fields('W', j),
                    value=lambda v, j=j: tuple(v[r] for r in self.fields('W', j)),
                    control=lambda v: v[flag] == 0)
            self.op('copy', self.fields('O', j), [flag] + self.fields('F', j),
                    value=lambda v, j=j: tuple(v[r] for r in self.fields('F', j)),
                    control=lambda v: v[flag] != 0)
        phase_b = self.items
        self.items = []
        self.index_of_pair('O')
        idx_d = self.items
        self.items = []
        self.op('swap', [R('i')], [R('istar')], action='exchange', value=lambda v: v[R('istar')])
        exchange = self.items
        items = phase_a + phase_b + [Reverse(phase_a)] + idx_d + exchange + [Reverse(idx_d)]
        phases.update(A=phase_a, B=phase_b, D=idx_d)
        return items, phases


def circuit_build(spec):
    b = _Builder(spec, materialize=True)
    items, phases = b.build()
    io = set()
    for j in range(b.I):
        io.update(mode_fields('F', j, b.dims))
        io.update(mode_fields('O', j, b.dims))
    io.add(R('i'))
    width = clog2(b.flag_checks + 2)
    return Circuit(spec, b.layout, items, frozenset(io), width, phases)


def gate_count(spec, cutoffs=None):
    """Tally of the oracle circuit, from sweep lengths alone."""
    if cutoffs is not None:
        spec = spec.replace(cutoffs=cutoffs)
    b = _Builder(spec, materialize=False)
    items, _ = b.build()
    return tally_items(items)


def initial_snapshot(circuit, F, i):
    c = circuit.spec.cutoffs
    state = {}
    load_state(state, 'F', F, circuit.layout, c.dims, c.register_count)
    state[R('i')] = i
    return state


def circuit_execute(circuit, F, i, inverse=False, snapshot=None):
    state = dict(snapshot) if snapshot is not None else initial_snapshot(circuit, F, i)
    _run(circuit.items, state, inverse)
    return state


def read_output(circuit, snapshot):
    """(F, F', a_flag) from the I/O registers."""
    c = circuit.spec.cutoffs
    F = read_state(snapshot, 'F', circuit.layout, c.dims, c.register_count)
    G = read_state(snapshot, 'O', circuit.layout, c.dims, c.register_count)
    return F, G, snapshot.get(R('i'), 0)


def dirty_ancillas(circuit, snapshot):
    return {r: v for r, v in snapshot.items() if v != 0 and r not in circuit.io}
