"""Matrix-element oracle O_H.

The value of one enumerator trace is

    sign * sqrt(prod w' * prod w) * sum over distinct relabelings of
    identical legs of (fermionic permutation sign * beta)

and the entry <F'|H|F> is the sum of trace values over every interaction
and every spectator choice that maps F to F'.  All arithmetic is on the
O(f) leg values of each trace.
"""

from __future__ import annotations

import itertools as it
import math
from dataclasses import dataclass, field

from .enumerator import ZERO_TOL, model_index, raw_apply, transition_indices
from .expr import DomainError, PoleError
from .tables import leg_groups


@dataclass
class MatrixElement:
    value: float
    count: int = 0
    terms: list = field(default_factory=list)   # (interaction name, i, value)
    note: str = ''


def occupation_factor(trace):
    prod = 1
    for w in trace.w_out:
        prod *= w
    for w in trace.w_in:
        prod *= w
    return math.sqrt(prod)


def fermion_parity(trace):
    return trace.sign


def _perm_sign(perm):
    sign = 1
    for a in range(len(perm)):
        for b in range(a + 1, len(perm)):
            if perm[a] > perm[b]:
                sign = -sign
    return sign


def _relabelings(legs, momenta):
    """Distinct momentum tuples obtained by permuting identical legs, with
    the sign picked up by reordering fermionic operators."""
    particles = [leg.particle for leg in legs]
    per_group = []
    for grp in leg_groups(particles):
        seen = {}
        for perm in it.permutations(range(len(grp))):
            moved = tuple(momenta[grp[p]] for p in perm)
            if moved not in seen:
                sign = _perm_sign(perm) if particles[grp[0]].fermionic else 1
                seen[moved] = sign
        per_group.append((grp, list(seen.items())))
    for combo in it.product(*(opts for _, opts in per_group)):
        out = list(momenta)
        sign = 1
        for (grp, _), (moved, s) in zip(per_group, combo):
            for pos, n in zip(grp, moved):
                out[pos] = n
            sign *= s
        yield tuple(out), sign


def beta_sum(spec, x, out_momenta, in_momenta):
    total = []
    for out, s_out in _relabelings(x.outgoing, out_momenta):
        for inn, s_in in _relabelings(x.incoming, in_momenta):
            try:
                b = spec.beta(x, out, inn)
            except (PoleError, DomainError):
                continue
            total.append(s_out * s_in * b)
    return math.fsum(total)


def trace_value(spec, trace):
    x = trace.interaction
    return (trace.sign * occupation_factor(trace)
            * beta_sum(spec, x, tuple(trace.A), tuple(trace.n_in)))


def _diagonal_value(spec, F):
    terms = []
    for x in spec.interactions:
        for m in F.modes:
            if m.particle == x.incoming[0].particle:
                try:
                    b = spec.beta(x, (m.momentum,), (m.momentum,))
                except (PoleError, DomainError):
                    continue
                terms.append(b * m.occupancy)
    return math.fsum(terms)


def matrix_element(spec, F, G):
    """<G|H|F> from enumerator traces."""
    idx = model_index(spec)
    if idx.diagonal:
        if F != G:
            return MatrixElement(0.0, note='not connected')
        v = _diagonal_value(spec, F)
        return MatrixElement(v if abs(v) >= ZERO_TOL else 0.0, len(F.modes))
    me = MatrixElement(0.0)
    parts = []
    for blk, i in transition_indices(idx, F, G):
        H, trace = raw_apply(idx, F, i)
        if H != G:
            continue
        v = trace_value(spec, trace)
        parts.append(v)
        me.terms.append((blk.x.name, i, v))
    me.count = len(parts)
    total = math.fsum(parts)
    me.value = total if abs(total) >= ZERO_TOL else 0.0
    if not parts:
        me.note = 'not connected'
    return me
