"""Compact Fock states.

A state stores only its occupied modes.  Each mode is a (particle, momentum,
occupancy) triple, and modes are kept sorted by particle label first and by
momentum second.  A fixed number ``I`` of mode registers holds the state;
registers past the last occupied mode are all zeros.

The functions here are:

`canonicalize(modes)`
    sort a bag of modes into a `FockState`, rejecting duplicates and empty modes.

`validate(state, cutoffs)`
    list every invariant the state violates under the given cutoffs.

`qubits_total(cutoffs, label_bits)` / `qubits_direct(cutoffs, q_values)`
    qubit counts of the compact and of the one-register-per-mode encodings.

`encode(state, layout)` / `decode(bits, layout)`
    pack a state into an integer bitstring and back.
"""

from __future__ import annotations

import itertools as it
import json
import math
import re
from dataclasses import dataclass, field

BOSON = 'boson'
FERMION = 'fermion'
ANTIFERMION = 'antifermion'
STATISTICS = (BOSON, FERMION, ANTIFERMION)

LIGHT_FRONT = 'light_front'
EQUAL_TIME = 'equal_time'


class FockError(ValueError):
    pass


class DuplicateModeError(FockError):
    pass


class ZeroOccupancyError(FockError):
    pass


class DecodeError(FockError):
    pass


def clog2(x):
    """Ceiling of log2 for positive integers (0 for x = 1)."""
    if x < 1:
        raise ValueError(f'clog2 of {x}')
    return (x - 1).bit_length()


@dataclass(frozen=True)
class ParticleType:
    """A particle label.  Two types are the same particle when their
    species id and extra quantum numbers agree; ``name`` is only a handle
    for printing and parsing."""

    species_id: int
    statistics: str = BOSON
    extra_qnums: tuple = ()
    name: str = field(default='', compare=False)

    def __post_init__(self):
        if self.statistics not in STATISTICS:
            raise FockError(f'unknown statistics {self.statistics!r}')
        object.__setattr__(self, 'extra_qnums', tuple(self.extra_qnums))

    @property
    def label_key(self):
        return (self.species_id, self.extra_qnums)

    @property
    def fermionic(self):
        return self.statistics != BOSON

    @property
    def handle(self):
        return self.name or str(self.species_id)


@dataclass(frozen=True)
class Cutoffs:
    """Momentum window per dimension, occupancy cap W and register count I.

    For light-front cutoffs the first axis is the longitudinal one and its
    upper end is the harmonic resolution K.
    """

    per_dim: tuple
    occupancy_cap: int
    register_count: int
    quantization: str = LIGHT_FRONT

    def __post_init__(self):
        per_dim = tuple((int(lo), int(hi)) for lo, hi in self.per_dim)
        object.__setattr__(self, 'per_dim', per_dim)
        if not per_dim:
            raise FockError('cutoffs need at least one dimension')
        for lo, hi in per_dim:
            if lo > hi:
                raise FockError(f'empty momentum window ({lo}, {hi})')
        if self.occupancy_cap < 1:
            raise FockError('occupancy cap must be at least 1')
        if self.register_count < 1:
            raise FockError('register count must be at least 1')
        if self.quantization not in (LIGHT_FRONT, EQUAL_TIME):
            raise FockError(f'unknown quantization {self.quantization!r}')
        if self.quantization == LIGHT_FRONT and per_dim[0][0] < 1:
            raise FockError('light-front longitudinal momenta start at 1 or above')

    @classmethod
    def light_front(cls, K, transverse=(), register_count=None,
                    occupancy_cap=None, lambda_min=1, n_types=1):
        per_dim = ((lambda_min, K),) + tuple(transverse)
        if register_count is None:
            if len(per_dim) == 1:
                register_count = max(lf_register_bound(K),
                                     greedy_mode_bound(K, n_types, lambda_min))
            else:
                register_count = K
        return cls(per_dim, occupancy_cap or K, register_count, LIGHT_FRONT)

    @classmethod
    def equal_time(cls, cutoff, occupancy_cap, register_count, dims=1):
        if isinstance(cutoff, int):
            per_dim = ((-cutoff, cutoff),) * dims
        else:
            per_dim = tuple(cutoff)
        return cls(per_dim, occupancy_cap, register_count, EQUAL_TIME)

    @property
    def dims(self):
        return len(self.per_dim)

    @property
    def K(self):
        if self.quantization != LIGHT_FRONT:
            return None
        return self.per_dim[0][1]

    @property
    def light_front_q(self):
        return self.quantization == LIGHT_FRONT

    def range_sizes(self):
        return tuple(hi - lo + 1 for lo, hi in self.per_dim)

    def momenta(self):
        """All in-cutoff momentum tuples in lexicographic order."""
        return list(it.product(*(range(lo, hi + 1) for lo, hi in self.per_dim)))

    def contains(self, momentum):
        if len(momentum) != self.dims:
            return False
        return all(lo <= n <= hi for n, (lo, hi) in zip(momentum, self.per_dim))

    def with_registers(self, register_count):
        return Cutoffs(self.per_dim, self.occupancy_cap, register_count,
                       self.quantization)


@dataclass(frozen=True)
class Mode:
    particle: ParticleType
    momentum: tuple
    occupancy: int = 1

    def __post_init__(self):
        momentum = self.momentum
        if isinstance(momentum, int):
            momentum = (momentum,)
        object.__setattr__(self, 'momentum', tuple(int(n) for n in momentum))

    @property
    def key(self):
        return (self.particle.label_key, self.momentum)

    def __str__(self):
        n = self.momentum
        ns = str(n[0]) if len(n) == 1 else '[' + ','.join(map(str, n)) + ']'
        return f'({self.particle.handle},{ns},{self.occupancy})'


@dataclass(frozen=True)
class FockState:
    modes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, 'modes', tuple(self.modes))

    def __len__(self):
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    def __str__(self):
        return ''.join(str(m) for m in self.modes) or '()'

    def occupancy(self, particle, momentum):
        key = (particle.label_key, tuple(momentum))
        for m in self.modes:
            if m.key == key:
                return m.occupancy
        return 0

    def particle_count(self):
        return sum(m.occupancy for m in self.modes)


def canonicalize(modes):
    """Sort modes into canonical order."""
    modes = list(modes)
    seen = set()
    for m in modes:
        if m.occupancy < 1:
            raise ZeroOccupancyError(f'mode {m} has occupancy {m.occupancy}')
        if m.key in seen:
            raise DuplicateModeError(f'mode {m.particle.handle}{m.momentum} appears twice')
        seen.add(m.key)
    return FockState(tuple(sorted(modes, key=lambda m: m.key)))


def validate(state, cutoffs):
    """Return a list of human-readable violations; empty means valid.

    Checked: ordering, per-mode cutoffs, occupancy caps and the register
    count.  Total momentum is left to the sector enumeration."""
    problems = []
    prev = None
    for pos, m in enumerate(state.modes):
        if prev is not None and not prev < m.key:
            problems.append(f'ordering: register {pos} is not after register {pos - 1}')
        prev = m.key
        if not cutoffs.contains(m.momentum):
            problems.append(f'cutoff: momentum {m.momentum} at register {pos}')
        if m.occupancy < 1:
            problems.append(f'occupancy: register {pos} stores occupancy {m.occupancy}')
        if m.occupancy > cutoffs.occupancy_cap:
            problems.append(f'occupancy cap: {m.occupancy} > {cutoffs.occupancy_cap} at register {pos}')
        if m.particle.fermionic and m.occupancy > 1:
            problems.append(f'fermionic cap: occupancy {m.occupancy} at register {pos}')
    if len(state.modes) > cutoffs.register_count:
        problems.append(f'register count: {len(state.modes)} modes > I = {cutoffs.register_count}')
    # a total momentum of exactly K is a property of the sector, not of one state
    return problems


def total_momentum(state, dims=None):
    if state.modes:
        dims = len(state.modes[0].momentum)
    dims = dims or 1
    total = [0] * dims
    for m in state.modes:
        for j, n in enumerate(m.momentum):
            total[j] += m.occupancy * n
    return tuple(total)


# qubit counts

def qubits_total(cutoffs, label_bits):
    """Qubits of the compact encoding, using ceil(log2 W) occupancy bits."""
    per_mode = label_bits + clog2(cutoffs.occupancy_cap)
    per_mode += sum(clog2(size) for size in cutoffs.range_sizes())
    return cutoffs.register_count * per_mode


def qubits_direct(cutoffs, q_values):
    """Qubits of the direct encoding: one occupancy register per mode."""
    sizes = cutoffs.range_sizes()
    if cutoffs.light_front_q:
        K = cutoffs.K
        return K * math.prod(sizes[1:]) * q_values * clog2(K)
    return q_values * math.prod(sizes) * clog2(cutoffs.occupancy_cap)


def lf_qubits_1d(K, label_bits):
    """Closed form of the compact count for one-dimensional light-front runs."""
    return lf_register_bound(K) * (label_bits + 2 * clog2(K))


def lf_register_bound(K):
    """ceil(sqrt(2K)): enough registers for one species at resolution K."""
    return math.isqrt(2 * K - 1) + 1 if K > 0 else 0


def greedy_mode_bound(K, copies, lambda_min=1):
    """Largest number of distinct occupied modes fitting in total momentum K
    when every longitudinal value is available ``copies`` times."""
    count, total, n = 0, 0, lambda_min
    while True:
        for _ in range(copies):
            if total + n > K:
                return count
            total += n
            count += 1
        n += 1


def max_occupied_modes(cutoffs, K=None):
    lo = cutoffs.per_dim[0][0]
    if lo <= 0:
        raise FockError('no monotonic axis: the first momentum window must start above 0')
    if K is None:
        K = cutoffs.K
    return K // lo


# bit layout

@dataclass(frozen=True)
class BitLayout:
    """Field widths of one mode register and of the whole register file.

    Register fields, from the least significant bit: label code, one
    momentum offset per dimension, occupancy.  An all-zero register is
    unused.
    """

    particles: tuple
    offsets: tuple
    bits_label: int
    bits_momentum: tuple
    bits_occupancy: int
    registers: int
    reported_occupancy_bits: int = 0

    @classmethod
    def build(cls, cutoffs, particles):
        particles = tuple(sorted(set(particles), key=lambda p: p.label_key))
        return cls(
            particles=particles,
            offsets=tuple(lo for lo, _ in cutoffs.per_dim),
            bits_label=max(1, clog2(max(1, len(particles)))),
            bits_momentum=tuple(clog2(s) for s in cutoffs.range_sizes()),
            bits_occupancy=clog2(cutoffs.occupancy_cap + 1),
            registers=cutoffs.register_count,
            reported_occupancy_bits=clog2(cutoffs.occupancy_cap),
        )

    @property
    def bits_per_mode(self):
        return self.bits_label + sum(self.bits_momentum) + self.bits_occupancy

    @property
    def bits_total(self):
        return self.registers * self.bits_per_mode

    def label_code(self, particle):
        for code, p in enumerate(self.particles):
            if p.label_key == particle.label_key:
                return code
        raise FockError(f'particle {particle.handle} is not in the layout')

    def describe(self):
        return {
            'registers': self.registers,
            'bits_label': self.bits_label,
            'bits_momentum': list(self.bits_momentum),
            'momentum_offsets': list(self.offsets),
            'bits_occupancy': self.bits_occupancy,
            'reported_occupancy_bits': self.reported_occupancy_bits,
            'bits_per_mode': self.bits_per_mode,
            'bits_total': self.bits_total,
            'labels': [[p.species_id, p.statistics, list(p.extra_qnums), p.name]
                       for p in self.particles],
        }

    @classmethod
    def from_description(cls, desc):
        particles = tuple(ParticleType(s, st, tuple(q), name)
                          for s, st, q, name in desc['labels'])
        return cls(particles, tuple(desc['momentum_offsets']), desc['bits_label'],
                   tuple(desc['bits_momentum']), desc['bits_occupancy'],
                   desc['registers'], desc.get('reported_occupancy_bits', 0))


def _fields(layout):
    widths = [layout.bits_label, *layout.bits_momentum, layout.bits_occupancy]
    return widths


def encode(state, layout):
    if len(state.modes) > layout.registers:
        raise FockError(f'{len(state.modes)} modes do not fit in {layout.registers} registers')
    bits = 0
    shift = 0
    widths = _fields(layout)
    for pos in range(layout.registers):
        if pos < len(state.modes):
            m = state.modes[pos]
            values = [layout.label_code(m.particle)]
            values += [n - lo for n, lo in zip(m.momentum, layout.offsets)]
            values.append(m.occupancy)
        else:
            values = [0] * len(widths)
        for v, w in zip(values, widths):
            if v < 0 or v >= (1 << w):
                raise FockError(f'value {v} does not fit in {w} bits')
            bits |= v << shift
            shift += w
    return bits


def decode(bits, layout):
    widths = _fields(layout)
    modes = []
    ended = False
    shift = 0
    for pos in range(layout.registers):
        values = []
        for w in widths:
            values.append((bits >> shift) & ((1 << w) - 1))
            shift += w
        label, *offs, occ = values
        if occ == 0:
            if any(values):
                raise DecodeError(f'register {pos} has zero occupancy but nonzero fields')
            ended = True
            continue
        if ended:
            raise DecodeError(f'register {pos} is occupied after an unused register')
        if label >= len(layout.particles):
            raise DecodeError(f'register {pos} has unknown label code {label}')
        particle = layout.particles[label]
        momentum = tuple(o + lo for o, lo in zip(offs, layout.offsets))
        modes.append(Mode(particle, momentum, occ))
    if bits >> shift:
        raise DecodeError('bitstring is longer than the layout')
    for a, b in zip(modes, modes[1:]):
        if not a.key < b.key:
            raise DecodeError('modes are not in canonical order')
    for m in modes:
        if m.particle.fermionic and m.occupancy > 1:
            raise DecodeError(f'fermionic mode {m} has occupancy above 1')
    return FockState(tuple(modes))


def to_hex(bits, layout):
    nbytes = max(1, (layout.bits_total + 7) // 8)
    return bits.to_bytes(nbytes, 'little').hex()


def from_hex(text):
    return int.from_bytes(bytes.fromhex(text.strip()), 'little')


def dump_layout(layout):
    return json.dumps(layout.describe(), sort_keys=True)


def load_layout(text):
    return BitLayout.from_description(json.loads(text))


# literals such as "(b,1,3)(b,2,1)" or "(f,[1,-2],1)"

_MODE_RE = re.compile(r'\(\s*([A-Za-z_][\w]*|\d+)\s*,\s*(\[[^\]]*\]|-?\d+)\s*,\s*(\d+)\s*\)')


def parse_state(text, particles):
    """Parse a state literal.  ``particles`` maps handles to types; a bare
    integer handle is looked up by species id."""
    text = text.strip()
    if text in ('', '()', 'vacuum'):
        return FockState(())
    by_id = {}
    for p in particles.values():
        by_id.setdefault(str(p.species_id), p)
    modes = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        match = _MODE_RE.match(text, pos)
        if not match:
            raise FockError(f'cannot read a mode at column {pos + 1} of {text!r}')
        handle, mom, occ = match.groups()
        if handle in particles:
            particle = particles[handle]
        elif handle in by_id:
            particle = by_id[handle]
        else:
            raise FockError(f'unknown particle {handle!r}')
        if mom.startswith('['):
            momentum = tuple(int(x) for x in mom[1:-1].split(',') if x.strip())
        else:
            momentum = (int(mom),)
        modes.append(Mode(particle, momentum, int(occ)))
        pos = match.end()
    return canonicalize(modes)
