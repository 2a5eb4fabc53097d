import pytest
from hypothesis import given, settings, strategies as st

from fockforge.circuit import (STEPS, CircuitError, Op, Sweep, _run, circuit_build,
                               circuit_execute, count_materialized, dirty_ancillas, gate_count,
                               initial_snapshot, read_output)
from fockforge.dense import enumerate_sector
from fockforge.enumerator import enumerate_semantic, model_index
from fockforge.library import builtin, resolution_cutoffs
from fockforge.tables import table_stats

from conftest import et_sector, lf_sector


def nonzero(snap):
    return {r: v for r, v in snap.items() if v}


def check_all(spec, basis, inverse=True):
    c = circuit_build(spec)
    k = model_index(spec).k
    n = 0
    for F in basis:
        for i in range(1, k + 3):
            G, a, _ = enumerate_semantic(spec, F, i)
            snap = circuit_execute(c, F, i)
            assert read_output(c, snap) == (F, G, a), (F, i)
            assert dirty_ancillas(c, snap) == {}
            if inverse:
                back = circuit_execute(c, None, None, inverse=True, snapshot=snap)
                assert nonzero(back) == nonzero(initial_snapshot(c, F, i))
            n += 1
    return n


@pytest.mark.parametrize('name,K', [('phi4-lf', 2), ('phi4-lf', 3), ('boson-fusion', 3),
                                    ('free-fermion-lf', 3), ('number-operator', 3),
                                    ('yukawa-lf', 2)])
def test_circuit_matches_semantic_oracle(name, K):
    spec, basis = lf_sector(name, K)
    assert check_all(spec, basis) > 0


def test_circuit_on_states_below_the_resolution():
    spec = builtin('phi4-lf', cutoffs=resolution_cutoffs('phi4-lf', 3))
    basis = enumerate_sector(spec.cutoffs, spec.particle_types(), total=(None,))
    assert len(basis) > 3
    check_all(spec, basis)


def test_circuit_equal_time():
    spec, basis = et_sector('phi4-et', 1, W=2, I=2)
    check_all(spec, basis)


_ys, _yb = lf_sector('yukawa-lf', 3)
_yc = circuit_build(_ys)
_yk = model_index(_ys).k


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(_yb), st.integers(1, _yk + 2))
def test_circuit_sample_yukawa(F, i):
    G, a, _ = enumerate_semantic(_ys, F, i)
    snap = circuit_execute(_yc, F, i)
    assert read_output(_yc, snap) == (F, G, a)
    assert dirty_ancillas(_yc, snap) == {}
    back = circuit_execute(_yc, None, None, inverse=True, snapshot=snap)
    assert nonzero(back) == nonzero(initial_snapshot(_yc, F, i))


@pytest.mark.parametrize('name,K', [('phi4-lf', 4), ('yukawa-lf', 3), ('phi4-et', 4),
                                    ('yukawa-et', 4), ('number-operator', 4)])
def test_lazy_count_equals_materialized(name, K):
    spec = builtin(name, cutoffs=resolution_cutoffs(name, K))
    c = circuit_build(spec)
    lazy = gate_count(spec)
    assert lazy.total == count_materialized(c.items) == len(c.ops())
    assert lazy == c.tally()
    assert sum(lazy.per_kind.values()) == lazy.total


def test_number_operator_is_a_single_copy_layer():
    spec = builtin('number-operator')
    t = circuit_build(spec).tally()
    I = spec.cutoffs.register_count
    assert t.per_kind['copy'] == I
    assert t.total == I + 1      # plus the index exchange
    assert t.per_step['step1'] == t.per_step['step2'] == t.per_step['step3'] == 0


@pytest.mark.parametrize('name', ['phi4-lf', 'yukawa-lf', 'phi4-et', 'yukawa-et'])
@pytest.mark.parametrize('K', [4, 8, 16, 32])
def test_step_costs_follow_their_bounds(name, K):
    spec = builtin(name, cutoffs=resolution_cutoffs(name, K))
    c = spec.cutoffs
    I = c.register_count
    per_op = max(x.f for x in spec.interactions) + 1
    t = gate_count(spec)
    assert t.per_step['step1'] <= per_op * sum(I ** x.h for x in spec.interactions)
    assert t.per_step['step3'] <= per_op * sum(table_stats(x, c)[2] for x in spec.interactions)
    assert set(t.per_step) == set(STEPS)


def test_op_cannot_write_what_it_reads():
    with pytest.raises(CircuitError):
        Op('copy', 'step1', (('a',),), (('a',),))
    with pytest.raises(CircuitError):
        Op('teleport', 'step1', (('a',),), ())


def test_undeclared_read_is_rejected():
    op = Op('add/sub', 'step1', (('a',),), (), action='add', value=lambda v: v[('b',)])
    with pytest.raises(CircuitError):
        _run([op], {('b',): 1}, False)


def test_sweep_size_is_checked():
    sw = Sweep('copy', 'step1', 2, lambda: [Op('copy', 'step1', (('a',),), (), value=1)])
    with pytest.raises(CircuitError):
        _run([sw], {}, False)


def test_add_inverts_to_sub():
    op = Op('add/sub', 'step1', (('a',),), (('b',),), action='add', value=lambda v: v[('b',)])
    state = {('b',): 5}
    _run([op], state, False)
    assert state[('a',)] == 5
    _run([op], state, True)
    assert state[('a',)] == 0
