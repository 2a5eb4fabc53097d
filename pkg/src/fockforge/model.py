"""Interactions and models.

An interaction is one ladder monomial family

    beta(n_1..n_f) a+_{q_1}(n_1) .. a+_{q_g}(n_g) a_{q_g+1}(n_g+1) .. a_{q_f}(n_f)

summed over every in-cutoff momentum assignment with sum(out) == sum(in).
Operators act right to left, so the last incoming leg annihilates first.
"""

from __future__ import annotations

import itertools as it
import math
import random
from dataclasses import dataclass, field

from .expr import DomainError, PoleError, default_functions, evaluate, free_symbols
from .fock import ANTIFERMION, BOSON, FERMION, Cutoffs, ParticleType


class ModelError(ValueError):
    pass


STANDARD_PARTICLES = {
    'b': ParticleType(0, BOSON, name='b'),
    'f': ParticleType(1, FERMION, name='f'),
    'fbar': ParticleType(2, ANTIFERMION, name='fbar'),
}


@dataclass(frozen=True)
class Leg:
    symbol: str
    particle: ParticleType


@dataclass(frozen=True)
class Interaction:
    name: str
    outgoing: tuple
    incoming: tuple
    coeff: object

    def __post_init__(self):
        object.__setattr__(self, 'outgoing', tuple(self.outgoing))
        object.__setattr__(self, 'incoming', tuple(self.incoming))
        names = [leg.symbol for leg in self.legs]
        if len(set(names)) != len(names):
            raise ModelError(f'interaction {self.name}: repeated leg symbol')

    @property
    def legs(self):
        return self.outgoing + self.incoming

    @property
    def f(self):
        return len(self.outgoing) + len(self.incoming)

    @property
    def g(self):
        return len(self.outgoing)

    @property
    def h(self):
        return len(self.incoming)

    def signature(self):
        return (tuple(leg.particle for leg in self.outgoing),
                tuple(leg.particle for leg in self.incoming))

    def conjugate(self):
        """Adjoint monomial: creators and annihilators swap and reverse."""
        return Interaction(self.name + '^dag', tuple(reversed(self.incoming)),
                           tuple(reversed(self.outgoing)), self.coeff)

    def is_diagonal_one_body(self):
        return (self.g == 1 and self.h == 1
                and self.outgoing[0].particle == self.incoming[0].particle)


@dataclass(frozen=True)
class ModelSpec:
    name: str
    particles: dict
    interactions: tuple
    cutoffs: Cutoffs
    params: dict
    functions: dict = field(default_factory=default_functions, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'interactions', tuple(self.interactions))
        object.__setattr__(self, 'params', dict(self.params))
        object.__setattr__(self, 'particles', dict(self.particles))

    @property
    def h(self):
        return max((x.h for x in self.interactions), default=0)

    @property
    def g(self):
        return max((x.g for x in self.interactions), default=0)

    @property
    def f(self):
        return max((x.f for x in self.interactions), default=0)

    def particle_types(self):
        return sorted(set(self.particles.values()), key=lambda p: p.label_key)

    def pure_diagonal(self):
        """True when every interaction is a one-body number-type term."""
        return bool(self.interactions) and all(
            x.is_diagonal_one_body() for x in self.interactions)

    def window(self):
        return self.cutoffs.per_dim[0]

    def replace(self, cutoffs=None, params=None, interactions=None, name=None):
        merged = dict(self.params)
        merged.update(params or {})
        return ModelSpec(name or self.name, self.particles,
                         self.interactions if interactions is None else interactions,
                         cutoffs or self.cutoffs, merged, self.functions)

    def beta(self, interaction, out_momenta, in_momenta):
        """Coefficient of ``interaction`` at the given leg momenta.  Leg
        symbols bind to the first momentum component."""
        env = {}
        for leg, n in zip(interaction.outgoing, out_momenta):
            env[leg.symbol] = n[0]
        for leg, n in zip(interaction.incoming, in_momenta):
            env[leg.symbol] = n[0]
        return evaluate(interaction.coeff, env, self.params, self.window(),
                        self.functions)


def eval_coeff(expr, leg_momenta, params, cutoffs, functions=None):
    """Evaluate a coefficient with ``leg_momenta`` mapping leg symbols to
    integers (or momentum tuples)."""
    env = {k: (v[0] if isinstance(v, tuple) else v) for k, v in leg_momenta.items()}
    return evaluate(expr, env, params, cutoffs.per_dim[0], functions)


def unbound_symbols(interaction, params, functions=None):
    """Symbols in the coefficient that are neither legs, params nor constants."""
    from .expr import CONSTANTS
    known = {leg.symbol for leg in interaction.legs} | set(params) | set(CONSTANTS)
    return free_symbols(interaction.coeff) - known


# Hermitian closure

def _fermion_sign(order, particles):
    """Sign of permuting operators into ``order``; only same-species
    fermionic operators anticommute."""
    sign = 1
    for a in range(len(order)):
        pa = particles[order[a]]
        if not pa.fermionic:
            continue
        for b in range(a + 1, len(order)):
            pb = particles[order[b]]
            if pb.fermionic and pb.species_id == pa.species_id and order[a] > order[b]:
                sign = -sign
    return sign


def _type_bijections(src, dst):
    """All maps pos_in_dst -> pos_in_src that preserve particle types."""
    if sorted(p.label_key for p in src) != sorted(p.label_key for p in dst):
        return
    for perm in it.permutations(range(len(src))):
        if all(src[perm[j]] == dst[j] for j in range(len(dst))):
            yield perm


def _assignments(cutoffs, n_out, n_in, samples=400, seed=0):
    moms = cutoffs.momenta()
    total = len(moms) ** (n_out + n_in)
    dims = cutoffs.dims

    def conserving(a):
        out = [sum(n[j] for n in a[:n_out]) for j in range(dims)]
        inn = [sum(n[j] for n in a[n_out:]) for j in range(dims)]
        return out == inn

    if total <= 50000:
        return [a for a in it.product(moms, repeat=n_out + n_in) if conserving(a)]
    rng = random.Random(seed)
    found = []
    for _ in range(samples * 20):
        a = [rng.choice(moms) for _ in range(n_out + n_in - 1)]
        # the last leg is fixed by conservation
        s_out = [sum(n[j] for n in a[:n_out]) for j in range(dims)]
        s_in = [sum(n[j] for n in a[n_out:]) for j in range(dims)]
        if n_in:
            last = tuple(o - i for o, i in zip(s_out, s_in))
        else:
            last = tuple(i - o for o, i in zip(s_out, s_in))
        if cutoffs.contains(last):
            found.append(tuple(a) + (last,))
        if len(found) >= samples:
            break
    return found


def _safe_beta(spec, x, out, inn):
    # pole assignments carry no weight
    try:
        return spec.beta(x, out, inn)
    except (PoleError, DomainError):
        return 0.0


def _matches(spec, x, y, samples):
    """Does ``y`` equal the adjoint of ``x`` for some leg relabeling?"""
    cx = x.conjugate()
    bij_out = list(_type_bijections([l.particle for l in cx.outgoing],
                                    [l.particle for l in y.outgoing]))
    bij_in = list(_type_bijections([l.particle for l in cx.incoming],
                                   [l.particle for l in y.incoming]))
    if not bij_out and y.outgoing or not bij_in and y.incoming:
        return False
    bij_out = bij_out or [()]
    bij_in = bij_in or [()]
    for po in bij_out:
        for pi in bij_in:
            sign = (_fermion_sign(po, [l.particle for l in cx.outgoing])
                    * _fermion_sign(pi, [l.particle for l in cx.incoming]))
            ok = True
            for a in samples:
                out_x, in_x = a[:x.g], a[x.g:]
                # legs of the adjoint carry x's momenta in reversed blocks
                c_out = tuple(reversed(in_x))
                c_in = tuple(reversed(out_x))
                y_out = tuple(c_out[po[j]] for j in range(len(po)))
                y_in = tuple(c_in[pi[j]] for j in range(len(pi)))
                bx = _safe_beta(spec, x, out_x, in_x)
                by = _safe_beta(spec, y, y_out, y_in)
                if not math.isclose(sign * by, bx, rel_tol=1e-12, abs_tol=1e-14):
                    ok = False
                    break
            if ok:
                return True
    return False


def hermitian_defects(spec):
    """Names of interactions whose adjoint is missing from the model."""
    missing = []
    for x in spec.interactions:
        samples = _assignments(spec.cutoffs, x.g, x.h)
        cx = x.conjugate()
        key = lambda s: (sorted(p.label_key for p in s[0]), sorted(p.label_key for p in s[1]))  # noqa: E731
        want = key(cx.signature())
        if not any(key(y.signature()) == want and _matches(spec, x, y, samples)
                   for y in spec.interactions):
            missing.append(x.name)
    return missing
