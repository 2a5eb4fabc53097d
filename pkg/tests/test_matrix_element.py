import math

import numpy as np
import pytest

import fockforge.dense as dense_mod
from fockforge.dense import build_dense
from fockforge.enumerator import connected_states, enumerate_semantic, model_index
from fockforge.fock import FockState, parse_state
from fockforge.ladder import matrix_element_bruteforce
from fockforge.library import builtin
from fockforge.matrix_element import matrix_element, occupation_factor
from fockforge.model import STANDARD_PARTICLES
from fockforge.tables import j_rank

from conftest import et_sector, lf_sector


def S(text):
    return parse_state(text, STANDARD_PARTICLES)


def oracle_dense(spec, basis):
    pos = {F: n for n, F in enumerate(basis)}
    H = np.zeros((len(basis), len(basis)))
    for y, F in enumerate(basis):
        for G, _ in connected_states(spec, F):
            H[pos[G], y] = matrix_element(spec, F, G).value
    return H


def test_fusion_occupation_factor():
    spec = builtin('boson-fusion')
    idx = model_index(spec)
    blk = next(b for b in idx.blocks if b.x.name == 'fuse')
    i = blk.offset + j_rank((1, 1), blk.x, spec.cutoffs.register_count) * blk.a + 1
    F = S('(b,1,5)')
    G, a, trace = enumerate_semantic(spec, F, i)
    assert a == 0
    assert occupation_factor(trace) == pytest.approx(math.sqrt(20), abs=1e-12)
    me = matrix_element(spec, F, G)
    assert me.value == pytest.approx(math.sqrt(20), abs=1e-12)
    assert matrix_element_bruteforce(spec, F, G) == pytest.approx(math.sqrt(20), abs=1e-12)


def test_free_boson_diagonal():
    spec = builtin('free-boson-lf')
    F = S('(b,2,2)')
    assert matrix_element(spec, F, F).value == pytest.approx(1.0, abs=1e-15)


def test_free_boson_dense_is_diagonal():
    spec, basis = lf_sector('free-boson-lf', 3)
    H = build_dense(spec, basis)
    want = [sum(m.occupancy / m.momentum[0] for m in F.modes) for F in basis]
    assert np.allclose(H, np.diag(want), atol=1e-15)


def test_number_operator_counts_particles():
    spec, basis = lf_sector('number-operator', 5)
    H = oracle_dense(spec, basis)
    assert np.array_equal(H, np.diag([F.particle_count() for F in basis]))
    vac = FockState(())
    assert matrix_element(spec, vac, vac).value == 0
    assert matrix_element_bruteforce(spec, vac, vac) == 0


def test_unconnected_pair_is_zero():
    spec = builtin('phi4-lf')
    me = matrix_element(spec, S('(b,4,1)'), S('(b,1,1)'))
    assert me.value == 0 and me.note == 'not connected'


LF_SECTORS = [('phi4-lf', K) for K in range(2, 7)] + [('yukawa-lf', K) for K in range(2, 5)]
OTHER_LF = [('free-boson-lf', 4), ('free-fermion-lf', 4), ('boson-fusion', 5), ('number-operator', 4)]
ET_SECTORS = [('phi4-et', 1), ('yukawa-et', 1), ('free-boson-et', 1), ('free-fermion-et', 1)]


@pytest.mark.parametrize('name,K', LF_SECTORS + OTHER_LF)
def test_oracles_match_brute_force(name, K):
    spec, basis = lf_sector(name, K)
    H = build_dense(spec, basis)
    O = oracle_dense(spec, basis)
    assert np.array_equal(np.abs(H) >= 1e-15, O != 0)
    assert np.abs(H - O).max(initial=0) <= 1e-12


@pytest.mark.parametrize('name,lam', ET_SECTORS)
def test_oracles_match_brute_force_equal_time(name, lam):
    spec, basis = et_sector(name, lam, W=2, I=3)
    H = build_dense(spec, basis)
    O = oracle_dense(spec, basis)
    assert np.abs(H - O).max(initial=0) <= 1e-12
    assert np.abs(H - H.T).max(initial=0) <= 1e-12


@pytest.mark.parametrize('name,K', LF_SECTORS + OTHER_LF)
def test_hermitian(name, K):
    spec, basis = lf_sector(name, K)
    H = build_dense(spec, basis)
    assert np.abs(H - H.T).max(initial=0) <= 1e-12


def _reversed_momentum_order(particle, momentum):
    return (particle.label_key, tuple(-c for c in momentum))


@pytest.mark.parametrize('name,K', [('yukawa-lf', 3), ('yukawa-lf', 4), ('free-fermion-lf', 5)])
def test_mode_order_only_flips_signs(name, K):
    spec, basis = lf_sector(name, K)
    H = build_dense(spec, basis)
    H2 = build_dense(spec, basis, order_key=_reversed_momentum_order)
    assert np.allclose(np.abs(H), np.abs(H2), atol=1e-12)
    assert np.allclose(np.linalg.eigvalsh(H), np.linalg.eigvalsh(H2), atol=1e-10)
    assert np.allclose(np.linalg.eigvalsh(H), np.linalg.eigvalsh(oracle_dense(spec, basis)), atol=1e-10)


def test_yukawa_has_fermion_signs():
    spec, basis = lf_sector('yukawa-lf', 4)
    H = build_dense(spec, basis)
    assert (H < -1e-12).any()


def test_value_path_does_not_touch_the_basis(monkeypatch):
    def boom(*a, **k):
        raise AssertionError('basis enumeration in the value path')
    monkeypatch.setattr(dense_mod, 'enumerate_sector', boom)
    monkeypatch.setattr(dense_mod, 'build_dense', boom)
    spec = builtin('yukawa-lf')
    F = S('(b,1,1)(f,3,1)')
    for G, _ in connected_states(spec, F):
        assert matrix_element(spec, F, G).value != 0
