"""Desk-scale dense layer: sector bases, dense Hamiltonians and norms."""

from __future__ import annotations

import os

import numpy as np

from .fock import BitLayout, FockState, Mode, encode
from .ladder import apply_hamiltonian, canonical_order

DEFAULT_SECTOR_CAP = 20000


class SectorCapExceeded(RuntimeError):
    pass


def sector_cap():
    return int(os.environ.get('FOCKFORGE_SECTOR_CAP', DEFAULT_SECTOR_CAP))


def enumerate_sector(cutoffs, particles, total=None, cap=None):
    """Every valid state in a sector, ordered by its encoded bitstring.

    ``total`` fixes the total momentum per dimension (None entries are
    free).  Light-front sectors default to total longitudinal momentum K.
    """
    cap = sector_cap() if cap is None else cap
    particles = sorted(set(particles), key=lambda p: p.label_key)
    dims = cutoffs.dims
    if total is None and cutoffs.light_front_q:
        total = (cutoffs.K,) + (None,) * (dims - 1)
    if total is None:
        total = (None,) * dims
    slots = [(p, n) for p in particles for n in cutoffs.momenta()]
    slots.sort(key=lambda s: (s[0].label_key, s[1]))
    I, W = cutoffs.register_count, cutoffs.occupancy_cap
    lf = cutoffs.light_front_q
    out = []

    def rec(pos, modes, mom):
        if lf and mom[0] > cutoffs.K:
            return
        if pos == len(slots):
            if all(t is None or t == m for t, m in zip(total, mom)):
                out.append(FockState(tuple(modes)))
                if len(out) > cap:
                    raise SectorCapExceeded(f'sector has more than {cap} states')
            return
        p, n = slots[pos]
        rec(pos + 1, modes, mom)
        if len(modes) >= I:
            return
        top = 1 if p.fermionic else W
        for w in range(1, top + 1):
            new = [a + w * b for a, b in zip(mom, n)]
            if lf and new[0] > cutoffs.K:
                break
            modes.append(Mode(p, n, w))
            rec(pos + 1, modes, new)
            modes.pop()

    rec(0, [], [0] * dims)
    layout = BitLayout.build(cutoffs, particles)
    out.sort(key=lambda s: encode(s, layout))
    return out


def build_dense(spec, basis, order_key=canonical_order):
    """H[x, y] = <basis[x]|H|basis[y]> by brute-force ladder algebra."""
    pos = {s: j for j, s in enumerate(basis)}
    H = np.zeros((len(basis), len(basis)))
    for y, F in enumerate(basis):
        for G, amp in apply_hamiltonian(spec, F, order_key).items():
            x = pos.get(G)
            if x is not None:
                H[x, y] += amp
    return H


def norms(H):
    """(max entry magnitude, max absolute row sum, row sums)."""
    H = np.asarray(H)
    if H.size == 0:
        return 0.0, 0.0, np.zeros(0)
    sigma = np.abs(H).sum(axis=1)
    return float(np.abs(H).max()), float(sigma.max()), sigma
