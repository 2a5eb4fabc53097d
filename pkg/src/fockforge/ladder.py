"""Brute-force ladder-operator algebra on occupation dictionaries.

This is the reference the oracles are checked against: it applies every
momentum assignment of every interaction to a state, one ladder operator at
a time, and never looks at lookup tables or register indices.
"""

from __future__ import annotations

import itertools as it
import math
from collections import defaultdict

from .expr import DomainError, PoleError
from .fock import FockState, Mode, canonicalize


def canonical_order(particle, momentum):
    return (particle.label_key, momentum)


def _sign(occ, particle, momentum, order_key):
    """(-1)^(number of same-species fermions ordered before the mode)."""
    if not particle.fermionic:
        return 1
    here = order_key(particle, momentum)
    before = 0
    for (p, n), w in occ.items():
        if p.fermionic and p.species_id == particle.species_id and order_key(p, n) < here:
            before += w
    return -1 if before % 2 else 1


def annihilate(occ, particle, momentum, order_key=canonical_order):
    w = occ.get((particle, momentum), 0)
    if w == 0:
        return 0.0, None
    sign = _sign(occ, particle, momentum, order_key)
    new = dict(occ)
    if w == 1:
        del new[(particle, momentum)]
    else:
        new[(particle, momentum)] = w - 1
    return sign * math.sqrt(w), new


def create(occ, particle, momentum, cap, order_key=canonical_order):
    w = occ.get((particle, momentum), 0) + 1
    if particle.fermionic and w > 1:
        return 0.0, None
    if w > cap:
        return 0.0, None
    sign = _sign(occ, particle, momentum, order_key)
    new = dict(occ)
    new[(particle, momentum)] = w
    return sign * math.sqrt(w), new


def to_occ(state):
    return {(m.particle, m.momentum): m.occupancy for m in state.modes}


def from_occ(occ):
    return canonicalize(Mode(p, n, w) for (p, n), w in occ.items())


def _out_assignments(n_legs, total, momenta):
    """Ordered tuples of in-cutoff momenta summing to ``total``."""
    if n_legs == 0:
        if all(t == 0 for t in total):
            yield ()
        return
    allowed = set(momenta)
    for head in it.product(momenta, repeat=n_legs - 1):
        last = tuple(t - sum(n[j] for n in head) for j, t in enumerate(total))
        if last in allowed:
            yield head + (last,)


def apply_interaction(spec, x, state, order_key=canonical_order):
    """x|state> as {FockState: amplitude}, truncated to the cutoffs."""
    cut = spec.cutoffs
    momenta = cut.momenta()
    result = defaultdict(float)
    start = to_occ(state)

    def beta(out, inn):
        try:
            return spec.beta(x, out, inn)
        except (PoleError, DomainError):
            return 0.0

    def annihilate_from(s, occ, coef, in_moms):
        if s < 0:
            total = tuple(sum(n[j] for n in in_moms) for j in range(cut.dims))
            for out in _out_assignments(x.g, total, momenta):
                create_into(x.g - 1, occ, coef, out, tuple(in_moms))
            return
        particle = x.incoming[s].particle
        for (p, n) in list(occ):
            if p != particle:
                continue
            c, new = annihilate(occ, p, n, order_key)
            if new is not None:
                in_moms[s] = n
                annihilate_from(s - 1, new, coef * c, in_moms)
        in_moms[s] = None

    def create_into(s, occ, coef, out, inn):
        if s < 0:
            if len(occ) > cut.register_count:
                return
            b = beta(out, inn)
            if b:
                result[from_occ(occ)] += b * coef
            return
        c, new = create(occ, x.outgoing[s].particle, out[s], cut.occupancy_cap, order_key)
        if new is not None:
            create_into(s - 1, new, coef * c, out, inn)

    annihilate_from(x.h - 1, start, 1.0, [None] * x.h)
    return dict(result)


def apply_hamiltonian(spec, state, order_key=canonical_order):
    total = defaultdict(float)
    for x in spec.interactions:
        for out, amp in apply_interaction(spec, x, state, order_key).items():
            total[out] += amp
    return dict(total)


def matrix_element_bruteforce(spec, F, G, order_key=canonical_order):
    """<G|H|F> by direct ladder algebra."""
    return apply_hamiltonian(spec, F, order_key).get(G, 0.0)


def vacuum():
    return FockState(())
