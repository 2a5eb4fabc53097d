"""Walk isometry T on Fock states, built from the two oracles.

A column of T is stored sparsely as {(a, b, idx, c, e): amplitude}, where a
and b are Fock states, idx is the index register, c the rotation qubit and
e the extra qubit that the walk swap exchanges with c.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .dense import build_dense, norms
from .enumerator import enumerate_semantic, model_index
from .matrix_element import matrix_element

AMPLITUDE_SLACK = 1e-12


class WalkError(ValueError):
    pass


@dataclass
class WalkIsometry:
    r: float
    k: int
    norm1: float
    basis: list
    columns: list        # one dict per basis state

    def gram(self):
        n = len(self.columns)
        G = np.zeros((n, n), dtype=complex)
        for x, cx in enumerate(self.columns):
            for y, cy in enumerate(self.columns):
                G[x, y] = sum(v.conjugate() * cy.get(key, 0) for key, v in cx.items())
        return G

    def isometry_deviation(self):
        G = self.gram()
        return float(np.abs(G - np.eye(len(G))).max()) if len(G) else 0.0

    def flag_branch(self, x):
        return {key: v for key, v in self.columns[x].items() if key[3] == 1}


def choose_r(H, k):
    Hmax, norm1, _ = norms(H)
    if Hmax == 0:
        return 1.0
    return min(1.0, norm1 / (k * Hmax))


def build_T(spec, basis, r=None, H=None):
    """Columns |F>|phi_F> from a uniform index superposition, the enumerator
    and a rotation driven by the matrix element."""
    idx = model_index(spec)
    k = idx.k
    if H is None:
        H = build_dense(spec, basis)
    _, norm1, _ = norms(H)
    if r is None:
        r = choose_r(H, k)
    if not 0 < r <= 1:
        raise WalkError(f'r={r} is outside (0, 1]')
    columns = []
    for F in basis:
        col = {}
        for i in range(1, k + 1):
            Fp, a, _ = enumerate_semantic(spec, F, i)
            h = matrix_element(spec, F, Fp).value if a == 0 else 0.0
            x = k * r * abs(h) / norm1 if norm1 else 0.0
            if x > 1 + AMPLITUDE_SLACK:
                raise WalkError(f'r={r} gives rotation weight {x:.6g} > 1 for {F} -> {Fp}')
            s = 1 / math.sqrt(k)
            top = s * cmath.sqrt(k * r * h / norm1) if h else 0.0
            # 1/sqrt(k) * sqrt(1 - x), written so the cancellation near x = 1
            # rounds the same way as the closed form
            bottom = math.sqrt(max(0.0, 1 / k - r * abs(h) / norm1)) if norm1 else s
            if top:
                col[(F, Fp, a, 0, 0)] = col.get((F, Fp, a, 0, 0), 0) + top
            if bottom:
                col[(F, Fp, a, 1, 0)] = col.get((F, Fp, a, 1, 0), 0) + bottom
        columns.append(col)
    return WalkIsometry(r, k, norm1, list(basis), columns)


def zeta_closed_form(T, spec, x):
    """Flag-branch amplitudes per index: sqrt(1/k - r|<F'_i|H|F>|/||H||_1)."""
    F = T.basis[x]
    out = {}
    for i in range(1, T.k + 1):
        Fp, a, _ = enumerate_semantic(spec, F, i)
        h = matrix_element(spec, F, Fp).value if a == 0 else 0.0
        amp = math.sqrt(max(0.0, 1 / T.k - T.r * abs(h) / T.norm1)) if T.norm1 else math.sqrt(1 / T.k)
        if amp:
            key = (F, Fp, a, 1, 0)
            out[key] = out.get(key, 0) + amp
    return out


def swap_S(col):
    """Swap registers a and b, and the rotation qubit with the extra one."""
    return {(b, a, i, e, c): v for (a, b, i, c, e), v in col.items()}


def overlap(T, x, y):
    bra = T.columns[x]
    ket = swap_S(T.columns[y])
    return sum(v.conjugate() * ket.get(key, 0) for key, v in bra.items())


def verify_walk_overlap(T, H):
    """max |<F,phi_F|S|F',phi_F'> - r H[F,F'] / ||H||_1|."""
    n = len(T.basis)
    worst = 0.0
    for x in range(n):
        for y in range(n):
            want = T.r * H[x, y] / T.norm1 if T.norm1 else 0.0
            worst = max(worst, abs(overlap(T, x, y) - want))
    return worst
