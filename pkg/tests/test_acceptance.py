"""Acceptance gate: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` or ``python tests/test_acceptance.py``.
"""

import math
import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from fockforge.circuit import (circuit_build, circuit_execute, dirty_ancillas, gate_count,  # noqa: E402
                               initial_snapshot, read_output)
from fockforge.cli import cutoffs_at, fit_slope  # noqa: E402
from fockforge.dense import build_dense, enumerate_sector  # noqa: E402
from fockforge.enumerator import (connected_states, enumerate_semantic, exact_sparsity,  # noqa: E402
                                  model_index)
from fockforge.fock import (Cutoffs, lf_qubits_1d, max_occupied_modes, parse_state,  # noqa: E402
                            qubits_total)
from fockforge.library import BUILTINS, builtin, is_equal_time, resolution_cutoffs  # noqa: E402
from fockforge.matrix_element import matrix_element, occupation_factor  # noqa: E402
from fockforge.model import STANDARD_PARTICLES  # noqa: E402
from fockforge.modelfile import ParseError, parse_model, print_model  # noqa: E402
from fockforge.resources import sparsity_bound  # noqa: E402
from fockforge.tables import build_lookup_table, j_rank  # noqa: E402
from fockforge.walk import build_T, verify_walk_overlap  # noqa: E402

from test_model import MALFORMED  # noqa: E402

K_GRID = [8, 16, 32, 64, 128]


def S(text):
    return parse_state(text, STANDARD_PARTICLES)


def lf(name, K):
    spec = builtin(name, cutoffs=resolution_cutoffs(name, K))
    return spec, enumerate_sector(spec.cutoffs, spec.particle_types())


def et_sectors(name, Ks):
    """Equal-time sectors with window L = ceil(K/2) - 1, the builtin's own I
    and W, and zero total momentum."""
    base = builtin(name).cutoffs
    for lam in sorted({max(0, math.ceil(K / 2) - 1) for K in Ks}):
        spec = builtin(name, cutoffs=Cutoffs.equal_time(lam, base.occupancy_cap, base.register_count))
        yield lam, spec, enumerate_sector(spec.cutoffs, spec.particle_types(), total=(0,))


def oracle_dense(spec, basis):
    pos = {F: n for n, F in enumerate(basis)}
    H = np.zeros((len(basis), len(basis)))
    for y, F in enumerate(basis):
        for G, _ in connected_states(spec, F):
            H[pos[G], y] = matrix_element(spec, F, G).value
    return H


# criteria: each returns (ok, detail)

def lookup_table():
    x = parse_model('model t\ncutoffs light_front K=5\nparticle b statistics=boson\n'
                    'interaction split: out(k:b, l:b) in(n:b) coeff = 1\n',
                    check_hermitian=False).interactions[0]
    got = build_lookup_table(x, Cutoffs.light_front(5)).as_dict()
    want = {(2, 0): (1, 1), (3, 0): (2, 1), (4, 0): (3, 1),
            (4, 1): (2, 2), (5, 0): (4, 1), (5, 1): (3, 2)}
    return got == want, f'{len(got)} rows'


def occupation_micro_example():
    spec = builtin('boson-fusion')
    blk = next(b for b in model_index(spec).blocks if b.x.name == 'fuse')
    i = blk.offset + j_rank((1, 1), blk.x, spec.cutoffs.register_count) * blk.a + 1
    F = S('(b,1,5)')
    G, a, trace = enumerate_semantic(spec, F, i)
    w = occupation_factor(trace)
    ok = a == 0 and G == S('(b,1,3)(b,2,1)') and abs(w - math.sqrt(20)) <= 1e-12
    return ok, f'factor {w!r}, output {G}'


EQUIV = [('phi4-lf', K) for K in range(2, 7)] + [('yukawa-lf', K) for K in range(2, 5)]


def oracle_equivalence():
    worst = 0.0
    pattern = True
    for name, K in EQUIV:
        spec, basis = lf(name, K)
        H = build_dense(spec, basis)
        O = oracle_dense(spec, basis)
        pattern &= bool(np.array_equal(np.abs(H) >= 1e-15, O != 0))
        worst = max(worst, float(np.abs(H - O).max(initial=0)))
    return pattern and worst <= 1e-12, f'max |diff| {worst:.2e}, patterns equal: {pattern}'


def hermiticity():
    worst = 0.0
    n = 0
    for name in BUILTINS:
        if is_equal_time(name):
            for _, spec, basis in et_sectors(name, range(2, 7)):
                H = build_dense(spec, basis)
                worst = max(worst, float(np.abs(H - H.T).max(initial=0)))
                n += 1
        else:
            Ks = range(2, 5) if name == 'yukawa-lf' else range(2, 7)
            for K in Ks:
                spec, basis = lf(name, K)
                H = build_dense(spec, basis)
                worst = max(worst, float(np.abs(H - H.T).max(initial=0)))
                n += 1
    return worst <= 1e-12, f'{n} sectors, max |H - H^T| {worst:.2e}'


def reversibility():
    checks = 0
    bad = []
    for K in range(1, 5):
        spec = builtin('phi4-lf', cutoffs=resolution_cutoffs('phi4-lf', K))
        c = circuit_build(spec)
        k = model_index(spec).k
        # every state with total momentum up to K, vacuum included
        basis = enumerate_sector(spec.cutoffs, spec.particle_types(), total=(None,))
        for F in basis:
            for i in range(1, k + 3):
                G, a, _ = enumerate_semantic(spec, F, i)
                snap = circuit_execute(c, F, i)
                out = read_output(c, snap)
                back = circuit_execute(c, None, None, inverse=True, snapshot=snap)
                start = {r: v for r, v in initial_snapshot(c, F, i).items() if v}
                ok = (out == (F, G, a) and not dirty_ancillas(c, snap)
                      and {r: v for r, v in back.items() if v} == start
                      and (a == 0 or out == (F, F, i)))
                checks += 1
                if not ok:
                    bad.append((K, str(F), i))
    return not bad, f'{checks} (F, i) pairs, {len(bad)} failures {bad[:3]}'


def _slopes(name):
    spec = builtin(name)
    pts = [(K, gate_count(spec, cutoffs_at(spec, K)).total) for K in K_GRID]
    return fit_slope(pts).slope, fit_slope(pts, window=0.4).slope


def _slope_check(bands):
    ok = True
    parts = []
    for name, (lo, hi) in bands.items():
        s3, s2 = _slopes(name)
        ok &= lo <= s3 <= hi
        parts.append(f'{name} {s3:.3f} in [{lo}, {hi}] (top-2 fit {s2:.3f})')
    return ok, '; '.join(parts)


def phi4_slopes():
    return _slope_check({'phi4-lf': (2.7, 3.3), 'phi4-et': (3.6, 4.4)})


def yukawa_slopes():
    return _slope_check({'yukawa-lf': (2.7, 3.3), 'yukawa-et': (2.7, 3.3)})


def walk_layer():
    worst_iso = worst_ov = 0.0
    for name in ('number-operator', 'phi4-lf'):
        for K in (1, 2, 3):
            spec, basis = lf(name, K)
            H = build_dense(spec, basis)
            T = build_T(spec, basis, H=H)
            worst_iso = max(worst_iso, T.isometry_deviation())
            worst_ov = max(worst_ov, verify_walk_overlap(T, H))
    ok = worst_iso <= 1e-10 and worst_ov <= 1e-10
    return ok, f'isometry {worst_iso:.2e}, overlap {worst_ov:.2e}'


def qubit_formulas():
    ok = True
    for K in range(2, 33):
        c = Cutoffs.light_front(K, register_count=math.ceil(math.sqrt(2 * K)))
        ok &= qubits_total(c, 1) == lf_qubits_1d(K, 1)
        ok &= qubits_total(c, 2) == lf_qubits_1d(K, 2)
    for K in range(1, 33):
        for lo in range(1, 6):
            if lo <= K:
                ok &= max_occupied_modes(Cutoffs.light_front(K, lambda_min=lo), K) == K // lo
    ok &= max_occupied_modes(Cutoffs.light_front(5), 5) == 5
    return ok, 'K = 2..32, lower cutoffs 1..5'


def sparsity_bounds():
    n = 0
    worst = None
    for name in BUILTINS:
        if is_equal_time(name):
            sectors = [(spec, basis) for _, spec, basis in et_sectors(name, range(1, 7))]
        else:
            sectors = [lf(name, K) for K in range(1, 7)]
        for spec, basis in sectors:
            bound = sparsity_bound(spec)
            for F in basis:
                s = exact_sparsity(spec, F)
                n += 1
                if s > bound:
                    worst = (name, str(F), s, bound)
    return worst is None, f'{n} states checked' + (f', violation {worst}' if worst else '')


def parser_gate():
    fixed = all(print_model(parse_model(print_model(builtin(n)), check_hermitian=False))
                == print_model(builtin(n)) for n in BUILTINS)
    positioned = 0
    for _, text, line, _, _ in MALFORMED:
        try:
            parse_model(text)
        except ParseError as err:
            positioned += err.line == line and err.column >= 1
    ok = fixed and positioned >= 20 and positioned == len(MALFORMED)
    return ok, f'round trip {fixed}, {positioned}/{len(MALFORMED)} positioned errors'


CRITERIA = [
    ('lookup-table reproduction', lookup_table, 1),
    ('matrix-element micro-example', occupation_micro_example, 1),
    ('oracle equivalence', oracle_equivalence, 120),
    ('hermiticity', hermiticity, 120),
    ('reversibility', reversibility, 120),
    ('light-front and equal-time phi4 slopes', phi4_slopes, 60),
    ('yukawa slopes', yukawa_slopes, 60),
    ('walk layer', walk_layer, 60),
    ('qubit formulas', qubit_formulas, 1),
    ('sparsity bound', sparsity_bounds, 60),
    ('parser', parser_gate, 1),
]


def evaluate(name, fn, limit):
    t = time.perf_counter()
    ok, detail = fn()
    dt = time.perf_counter() - t
    ok = ok and dt < limit
    line = f'{"PASS" if ok else "FAIL"} {name}: {detail} [{dt:.2f}s, limit {limit}s]'
    return ok, line


@pytest.mark.parametrize('name,fn,limit', CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(name, fn, limit, capsys):
    ok, line = evaluate(name, fn, limit)
    with capsys.disabled():
        print('\n' + line)
    assert ok, line


if __name__ == '__main__':
    results = [evaluate(*c) for c in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
