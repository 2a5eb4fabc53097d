import math

import numpy as np
import pytest

from fockforge.dense import SectorCapExceeded, build_dense, enumerate_sector, norms
from fockforge.enumerator import model_index
from fockforge.fock import Cutoffs, parse_state
from fockforge.model import STANDARD_PARTICLES
from fockforge.walk import (WalkError, build_T, choose_r, overlap, swap_S, verify_walk_overlap,
                            zeta_closed_form)

from conftest import lf_sector


def boson_basis(K):
    return enumerate_sector(Cutoffs.light_front(K), [STANDARD_PARTICLES['b']])


def test_sector_examples():
    want = {parse_state(t, STANDARD_PARTICLES) for t in ['(b,3,1)', '(b,1,1)(b,2,1)', '(b,1,3)']}
    assert set(boson_basis(3)) == want and len(boson_basis(3)) == 3
    assert len(boson_basis(1)) == 1
    assert len(boson_basis(6)) == 11


def test_sector_cap():
    with pytest.raises(SectorCapExceeded):
        enumerate_sector(Cutoffs.light_front(8), [STANDARD_PARTICLES['b']], cap=10)


def test_norm_examples():
    assert norms(np.zeros((3, 3)))[:2] == (0.0, 0.0)
    hmax, n1, sigma = norms(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert (hmax, n1, list(sigma)) == (1.0, 1.0, [1.0, 1.0])
    spec, basis = lf_sector('free-boson-lf', 3)
    H = build_dense(spec, basis)
    assert norms(H)[0] == np.diag(H).max()


def test_choose_r_examples():
    D = np.diag([1.0, 3.0, 2.0])
    assert choose_r(D, 1) == min(1.0, 3.0 / 3.0)
    E = np.ones((4, 4))
    r = choose_r(E, 8)
    assert 8 * r * 1.0 / 4.0 == pytest.approx(1.0, abs=1e-15)
    assert choose_r(np.zeros((2, 2)), 5) == 1.0


WALK_CASES = [('number-operator', 3), ('phi4-lf', 2), ('phi4-lf', 3), ('free-boson-lf', 3),
              ('boson-fusion', 3), ('phi4-lf', 4)]


@pytest.mark.parametrize('name,K', WALK_CASES)
def test_isometry_and_overlap(name, K):
    spec, basis = lf_sector(name, K)
    H = build_dense(spec, basis)
    T = build_T(spec, basis, H=H)
    assert T.isometry_deviation() <= 1e-10
    assert verify_walk_overlap(T, H) <= 1e-10


@pytest.mark.parametrize('name,K', WALK_CASES)
def test_column_structure(name, K):
    spec, basis = lf_sector(name, K)
    H = build_dense(spec, basis)
    T = build_T(spec, basis, H=H)
    _, n1, sigma = norms(H)
    for y, F in enumerate(basis):
        col = T.columns[y]
        assert sum(abs(v) ** 2 for v in col.values()) == pytest.approx(1.0, abs=1e-12)
        for x, G in enumerate(basis):
            if H[x, y] != 0:
                assert col[(F, G, 0, 0, 0)] == pytest.approx(math.sqrt(T.r * H[x, y] / n1), abs=1e-12)
        flag = T.flag_branch(y)
        weight = math.sqrt(sum(abs(v) ** 2 for v in flag.values()))
        assert weight == pytest.approx(math.sqrt(max(0.0, 1 - T.r * sigma[y] / n1)), abs=1e-12)
        zeta = zeta_closed_form(T, spec, y)
        assert set(zeta) == set(flag)
        assert all(abs(zeta[key] - flag[key]) <= 1e-12 for key in zeta)
        # flag branch is orthogonal to every unflagged component of every column
        for other in T.columns:
            unflagged = {key: v for key, v in other.items() if key[3] == 0}
            dot = sum(v.conjugate() * unflagged.get(key, 0) for key, v in flag.items())
            assert abs(dot) <= 1e-14


def test_zero_hamiltonian_has_no_overlaps():
    spec, basis = lf_sector('free-boson-lf', 3)
    spec = spec.replace(params={'m_B': 0.0})
    H = build_dense(spec, basis)
    assert not H.any()
    T = build_T(spec, basis, H=H)
    assert T.r == 1.0
    assert T.isometry_deviation() <= 1e-12
    assert zeta_closed_form(T, spec, 0) == T.flag_branch(0)
    for x in range(len(basis)):
        for y in range(len(basis)):
            if x != y:
                assert overlap(T, x, y) == 0


def test_r_that_overweights_a_rotation_is_rejected():
    spec, basis = lf_sector('phi4-lf', 3)
    H = build_dense(spec, basis)
    with pytest.raises(WalkError):
        build_T(spec, basis, r=1.0 + 1e-9 if choose_r(H, model_index(spec).k) == 1 else 1.0, H=H)
    with pytest.raises(WalkError):
        build_T(spec, basis, r=0.0, H=H)


def test_swap_is_an_involution():
    spec, basis = lf_sector('phi4-lf', 3)
    T = build_T(spec, basis)
    for col in T.columns:
        assert swap_S(swap_S(col)) == col


def test_signed_hamiltonian_keeps_isometry():
    # negative entries still give an isometry; the overlap identity needs H >= 0
    spec, basis = lf_sector('yukawa-lf', 3)
    H = build_dense(spec, basis)
    assert (H < 0).any()
    T = build_T(spec, basis, H=H)
    assert T.isometry_deviation() <= 1e-10
