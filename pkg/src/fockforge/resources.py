"""Closed-form resource estimates.

Big-O expressions are evaluated with unit constants and natural logs, so
every figure here is an estimate rather than a bound with constants.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .fock import qubits_direct, qubits_total
from .tables import multichoose


class ResourceDomainError(ValueError):
    pass


def sparsity_bound_interaction(I, f, g, cutoffs):
    """Incoming picks (I multichoose f-g) times outgoing momentum choices with
    one leg fixed by conservation."""
    if f < g:
        raise ValueError('f must be at least g')
    out = 1
    for size in cutoffs.range_sizes():
        out *= size ** max(g - 1, 0)
    return multichoose(I, f - g) * out


def sparsity_bound(spec_or_I, f=None, g=None, d=None, cutoffs=None):
    """Bound on connected states.  Given a model, the per-interaction bounds
    are summed; otherwise a single (I, f, g) interaction is assumed."""
    if f is None:
        spec = spec_or_I
        c = spec.cutoffs
        return sum(sparsity_bound_interaction(c.register_count, x.f, x.g, c)
                   for x in spec.interactions)
    if d is not None and cutoffs is not None and d != cutoffs.dims:
        raise ValueError(f'd={d} does not match the cutoffs ({cutoffs.dims} dims)')
    return sparsity_bound_interaction(spec_or_I, f, g, cutoffs)


def _loglog_term(x):
    if x <= 1:
        raise ResourceDomainError(f'log argument {x} must exceed 1')
    ll = math.log(math.log(x))
    if ll <= 0:
        raise ResourceDomainError(f'ln(ln({x:g})) = {ll:g} is not positive')
    return math.log(x) / ll


def tau(k, Hmax, t):
    return k * Hmax * t


def query_count_static(k, Hmax, t, eps):
    """tau + ln(1/eps)/ln(ln(1/eps))."""
    if not 0 < eps < 1:
        raise ResourceDomainError('eps must lie in (0, 1)')
    if min(k, Hmax, t) < 0:
        raise ResourceDomainError('k, H_max and t must be nonnegative')
    return tau(k, Hmax, t) + _loglog_term(1 / eps)


def query_count_timedep(tau_value, eps):
    """tau * ln(tau/eps)/ln(ln(tau/eps))."""
    if not 0 < eps < 1:
        raise ResourceDomainError('eps must lie in (0, 1)')
    if tau_value <= 0:
        raise ResourceDomainError('tau must be positive')
    return tau_value * _loglog_term(tau_value / eps)


def log_local_factor(I, h, g, d, Lam):
    return I ** h + Lam ** (d * g)


def total_log_local(tau_value, eps, I, h, g, d, Lam, time_dependent=False):
    """Queries times the per-query cost I^h + Lambda^(dg)."""
    if time_dependent:
        q = query_count_timedep(tau_value, eps)
    else:
        if not 0 < eps < 1:
            raise ResourceDomainError('eps must lie in (0, 1)')
        q = tau_value + _loglog_term(1 / eps)
    return q * log_local_factor(I, h, g, d, Lam)


def qubit_comparison(cutoffs, n_types, label_bits=None):
    """(compact, direct) qubit counts."""
    if label_bits is None:
        label_bits = max(1, math.ceil(math.log2(n_types))) if n_types > 1 else 1
    return qubits_total(cutoffs, label_bits), qubits_direct(cutoffs, n_types)


@dataclass
class ResourceReport:
    model: str
    I: int
    W: int
    Lam: int
    d: int
    f: int
    g: int
    h: int
    t: float
    eps: float
    Hmax: float
    qubits_compact: int
    qubits_direct: int
    sparsity_bound: int
    k_index: int
    tau: float
    queries: float
    total_log_local_ops: float
    time_dependent: bool = False

    def rows(self):
        return list(asdict(self).items())


def estimate(spec, t, eps, Hmax=None, time_dependent=False, k=None):
    """ResourceReport for a model at its cutoffs.  k defaults to the sparsity
    bound; Hmax defaults to 1 when not supplied."""
    from .enumerator import index_space_size
    c = spec.cutoffs
    Hmax = 1.0 if Hmax is None else Hmax
    bound = sparsity_bound(spec)
    k_index = sum(index_space_size(x, c) for x in spec.interactions)
    k = bound if k is None else k
    tv = tau(k, Hmax, t)
    queries = query_count_timedep(tv, eps) if time_dependent else query_count_static(k, Hmax, t, eps)
    Lam = max(max(abs(lo), abs(hi)) for lo, hi in c.per_dim)
    n_types = len(spec.particle_types())
    compact, direct = qubit_comparison(c, n_types)
    return ResourceReport(
        model=spec.name, I=c.register_count, W=c.occupancy_cap, Lam=Lam, d=c.dims,
        f=max(x.f for x in spec.interactions), g=spec.g, h=spec.h, t=t, eps=eps, Hmax=Hmax,
        qubits_compact=compact, qubits_direct=direct, sparsity_bound=bound, k_index=k_index,
        tau=tv, queries=queries,
        total_log_local_ops=queries * log_local_factor(c.register_count, spec.h, spec.g, c.dims, Lam),
        time_dependent=time_dependent)
