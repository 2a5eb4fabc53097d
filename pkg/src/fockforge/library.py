"""Built-in models, written in the model text format and parsed on demand."""

from __future__ import annotations

import math

from .fock import Cutoffs
from .modelfile import parse_model

_PARTICLES = {
    'b': 'particle b statistics=boson species=0',
    'f': 'particle f statistics=fermion species=1',
    'fbar': 'particle fbar statistics=antifermion species=2',
}


def _header(name, cutoff_line, params, particles):
    lines = [f'model {name}', cutoff_line]
    lines += [f'param {k} = {v!r}' for k, v in sorted(params.items())]
    lines += [_PARTICLES[p] for p in particles]
    return lines


def _lf(K=4):
    return f'cutoffs light_front K={K}'


def _et(lam=1, I=4, W=3):
    return f'cutoffs equal_time Lambda={lam} I={I} W={W}'


def _free_boson_lf():
    return _header('free-boson-lf', _lf(), {'m_B': 1.0}, ['b']) + [
        'interaction free_b: out(n:b) in(np:b) coeff = m_B^2 / n',
    ]


def _free_fermion_lf():
    return _header('free-fermion-lf', _lf(), {'m_F': 1.0}, ['f', 'fbar']) + [
        'interaction free_f: out(n:f) in(np:f) coeff = m_F^2 / n',
        'interaction free_fbar: out(n:fbar) in(np:fbar) coeff = m_F^2 / n',
    ]


def _free_boson_et():
    return _header('free-boson-et', _et(), {'m': 1.0}, ['b']) + [
        'interaction free_b: out(n:b) in(np:b) coeff = 1 / omega(n)',
    ]


def _free_fermion_et():
    return _header('free-fermion-et', _et(), {'m': 1.0}, ['f', 'fbar']) + [
        'interaction free_f: out(n:f) in(np:f) coeff = 1 / omega(n)',
        'interaction free_fbar: out(n:fbar) in(np:fbar) coeff = 1 / omega(n)',
    ]


def _phi4_lf():
    return _header('phi4-lf', _lf(), {'lambda': 1.0, 'm': 1.0}, ['b']) + [
        'interaction free: out(n:b) in(np:b) '
        'coeff = (m^2 + lambda / (8 * pi) * sum(q, 1 / q)) / n',
        'interaction scatter: out(k:b, l:b) in(m:b, n:b) '
        'coeff = lambda / (16 * pi * sqrt(k * l * m * n))',
        'interaction merge: out(k:b) in(l:b, m:b, n:b) '
        'coeff = lambda / (24 * pi * sqrt(k * l * m * n))',
        'interaction split: out(l:b, m:b, n:b) in(k:b) '
        'coeff = lambda / (24 * pi * sqrt(k * l * m * n))',
    ]


def _phi4_et():
    w4 = 'sqrt(16 * omega(k) * omega(l) * omega(f) * omega(p))'
    return _header('phi4-et', _et(), {'lambda': 1.0, 'm': 1.0}, ['b']) + [
        'interaction free: out(n:b) in(np:b) coeff = 1 / omega(n)',
        f'interaction create4: out(p:b, k:b, l:b, f:b) in() coeff = lambda / 24 / {w4}',
        f'interaction annihilate4: out() in(p:b, k:b, l:b, f:b) coeff = lambda / 24 / {w4}',
        f'interaction merge: out(f:b) in(p:b, k:b, l:b) coeff = 4 * lambda / 24 / {w4}',
        f'interaction split: out(k:b, l:b, f:b) in(p:b) coeff = 4 * lambda / 24 / {w4}',
        f'interaction scatter: out(l:b, f:b) in(p:b, k:b) coeff = 6 * lambda / 24 / {w4}',
        'interaction pair_annihilate: out() in(k:b, l:b) '
        'coeff = sum(p, 6 * lambda / 24 / sqrt(16 * omega(k) * omega(l) * omega(p) * omega(p)))',
        'interaction pair_create: out(k:b, l:b) in() '
        'coeff = sum(p, 6 * lambda / 24 / sqrt(16 * omega(k) * omega(l) * omega(p) * omega(p)))',
    ]


def _yukawa_lf():
    v = '2 * g * m_F / ((k + l) * sqrt(l))'
    v3 = '2 * g * m_F / ((k - m) * sqrt(m))'
    s1 = 'g^2 / ((m - k) * sqrt(m * n))'
    s2 = '2 * g^2 / ((k - n) * sqrt(m * n))'
    f1 = 'g^2 / ((k + l) * sqrt(l * m))'
    f3 = '2 * g^2 / ((k - n) * sqrt(l * n))'
    return _header('yukawa-lf', _lf(), {'g': 1.0, 'm_F': 1.0}, ['b', 'f', 'fbar']) + [
        # vertex
        f'interaction v_f_emit: out(k:f, l:b) in(m:f) coeff = {v}',
        f'interaction v_f_absorb: out(m:f) in(k:f, l:b) coeff = {v}',
        f'interaction v_fbar_emit: out(k:fbar, l:b) in(m:fbar) coeff = {v}',
        f'interaction v_fbar_absorb: out(m:fbar) in(k:fbar, l:b) coeff = {v}',
        f'interaction v_pair_fuse: out(m:b) in(k:f, l:fbar) coeff = {v3}',
        f'interaction v_pair_split: out(l:fbar, k:f) in(m:b) coeff = {v3}',
        # seagull
        f'interaction s_pair_to_bb: out(m:b, n:b) in(k:fbar, l:f) coeff = {s1}',
        f'interaction s_bb_to_pair: out(l:f, k:fbar) in(n:b, m:b) coeff = {s1}',
        f'interaction s_f_scatter: out(k:f, m:b) in(l:f, n:b) coeff = {s2}',
        f'interaction s_fbar_scatter: out(k:fbar, m:b) in(l:fbar, n:b) coeff = {s2}',
        # fork
        f'interaction fk_f_emit2: out(k:f, l:b, m:b) in(n:f) coeff = {f1}',
        f'interaction fk_f_absorb2: out(n:f) in(k:f, m:b, l:b) coeff = {f1}',
        f'interaction fk_fbar_emit2: out(k:fbar, l:b, m:b) in(n:fbar) coeff = {f1}',
        f'interaction fk_fbar_absorb2: out(n:fbar) in(k:fbar, m:b, l:b) coeff = {f1}',
        f'interaction fk_pair_emit: out(k:f, m:fbar, l:b) in(n:b) coeff = {f3}',
        f'interaction fk_pair_absorb: out(n:b) in(m:fbar, k:f, l:b) coeff = {f3}',
    ]


def _yukawa_et():
    w3 = 'sqrt(8 * omega(k, m_F) * omega(p, m_B) * omega(l, m_F))'
    return _header('yukawa-et', _et(), {'m_B': 1.0, 'm_F': 1.0}, ['b', 'f', 'fbar']) + [
        f'interaction ff_absorb: out(l:f) in(k:f, p:b) coeff = ubar_u(l, k) / {w3}',
        f'interaction pair_from_b: out(l:f, k:fbar) in(p:b) coeff = ubar_v(l, k) / {w3}',
        f'interaction pair_b_annihilate: out() in(l:fbar, k:f, p:b) coeff = vbar_u(l, k) / {w3}',
        f'interaction aa_absorb: out(k:fbar) in(l:fbar, p:b) coeff = -vbar_v(l, k) / {w3}',
        f'interaction ff_emit: out(l:f, p:b) in(k:f) coeff = ubar_u(l, k) / {w3}',
        f'interaction pair_b_create: out(l:f, k:fbar, p:b) in() coeff = ubar_v(l, k) / {w3}',
        f'interaction pair_to_b: out(p:b) in(l:fbar, k:f) coeff = vbar_u(l, k) / {w3}',
        f'interaction aa_emit: out(k:fbar, p:b) in(l:fbar) coeff = -vbar_v(l, k) / {w3}',
    ]


def _number_operator():
    return _header('number-operator', _lf(), {}, ['b']) + [
        'interaction number: out(n:b) in(np:b) coeff = 1',
    ]


def _boson_fusion():
    return _header('boson-fusion', _lf(5), {}, ['b']) + [
        'interaction fuse: out(n:b) in(k:b, l:b) coeff = 1',
        'interaction split: out(k:b, l:b) in(n:b) coeff = 1',
    ]


BUILTINS = {
    'free-boson-lf': _free_boson_lf,
    'free-fermion-lf': _free_fermion_lf,
    'free-boson-et': _free_boson_et,
    'free-fermion-et': _free_fermion_et,
    'phi4-lf': _phi4_lf,
    'phi4-et': _phi4_et,
    'yukawa-lf': _yukawa_lf,
    'yukawa-et': _yukawa_et,
    'number-operator': _number_operator,
    'boson-fusion': _boson_fusion,
}

PHYSICS_BUILTINS = tuple(list(BUILTINS)[:8])


def builtin_text(name):
    if name not in BUILTINS:
        raise KeyError(f'unknown builtin {name!r}; choose from {", ".join(BUILTINS)}')
    return '\n'.join(BUILTINS[name]()) + '\n'


def builtin(name, cutoffs=None, params=None, functions=None):
    spec = parse_model(builtin_text(name), check_hermitian=False, functions=functions)
    return spec.replace(cutoffs=cutoffs, params=params)


def is_equal_time(name):
    return name.endswith('-et')


def resolution_cutoffs(name, K, n_types=None):
    """Cutoffs used when a model is run at resolution K.  Equal-time models
    use the window [-L, L] with L = ceil(K/2) - 1, I = K registers and W = K."""
    spec = builtin(name)
    if is_equal_time(name):
        lam = max(0, math.ceil(K / 2) - 1)
        return Cutoffs.equal_time(lam, K, K)
    n_types = n_types or len(spec.particle_types())
    return Cutoffs.light_front(K, n_types=n_types)
