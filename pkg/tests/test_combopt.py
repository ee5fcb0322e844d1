import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_objective
from qite.combopt import (
    QuboInstance,
    brute_force_minima,
    empirical_shot_success,
    parse_qubo,
    qubo_to_hamiltonian,
    run_combinatorial,
    shot_success,
    success_bound,
    success_probability,
    threshold_time,
)
from qite.errors import DomainError, ParseError, ResourceError
from qite.ite_exact import exact_evolve
from qite.pauli import to_dense
from qite.spectral import eigendecompose
from qite.state import basis_state, equal_superposition

XOR = QuboInstance.from_dicts(2, {0: 1.0, 1: 1.0}, {(0, 1): -2.0})


def random_qubo(rng, n):
    lin = rng.uniform(-1, 1, n)
    quad = np.triu(rng.uniform(-1, 1, (n, n)), 1)
    return QuboInstance(n, lin, quad)


def test_xor_encoding():
    h = qubo_to_hamiltonian(XOR)
    assert [(t.coefficient, str(t.string)) for t in h.terms] == [(0.5, "II"), (-0.5, "ZZ")]
    np.testing.assert_allclose(to_dense(h), np.diag([0, 1, 1, 0]))
    spec = eigendecompose(h)
    assert spec.ground_multiplicity == 2 and spec.gap == pytest.approx(1.0)
    assert brute_force_minima(XOR) == (["00", "11"], 0.0)


def test_zero_objective_is_identity_multiple():
    q = QuboInstance(2, np.zeros(2), np.zeros((2, 2)))
    h = qubo_to_hamiltonian(q)
    assert [(t.coefficient, str(t.string)) for t in h.terms] == [(0.0, "II")]
    assert eigendecompose(h).identity_multiple


def test_single_variable():
    q = QuboInstance.from_dicts(1, {0: 1.0})
    h = qubo_to_hamiltonian(q)
    assert [(t.coefficient, str(t.string)) for t in h.terms] == [(0.5, "I"), (-0.5, "Z")]
    assert brute_force_minima(q) == (["0"], 0.0)


def test_constant_objective_all_minima():
    q = QuboInstance(3, np.zeros(3), np.zeros((3, 3)), offset=2.5)
    minima, val = brute_force_minima(q)
    assert len(minima) == 8 and val == 2.5


def test_diagonal_and_lower_triangle_folded():
    q = QuboInstance(2, [0.0, 0.0], [[1.0, 0.0], [3.0, 2.0]])
    np.testing.assert_allclose(q.linear, [1.0, 2.0])
    np.testing.assert_allclose(q.quadratic, [[0.0, 3.0], [0.0, 0.0]])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 10))
def test_encoding_exact_against_brute_force(seed, n):
    q = random_qubo(np.random.default_rng(seed), n)
    diag = qubo_to_hamiltonian(q).diagonal()
    for k in range(2**n):
        bits = format(k, f"0{n}b")
        ref = brute_force_objective(q.linear, q.quadratic, bits)
        assert diag[k] == pytest.approx(ref, abs=1e-10)
        assert q.objective(bits) == pytest.approx(ref, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
def test_mu_matches_brute_force(seed, n):
    r = np.random.default_rng(seed)
    # integer weights make degenerate minima common
    q = QuboInstance(n, r.integers(-2, 3, n).astype(float), np.triu(r.integers(-2, 3, (n, n)), 1).astype(float))
    minima, _ = brute_force_minima(q)
    spec = eigendecompose(qubo_to_hamiltonian(q))
    assert spec.ground_multiplicity == len(minima)


def test_brute_force_cap():
    q = QuboInstance(21, np.zeros(21), np.zeros((21, 21)))
    with pytest.raises(ResourceError):
        brute_force_minima(q)


def test_success_probability_examples():
    assert success_probability(equal_superposition(2), ["00", "11"]) == pytest.approx(0.5)
    assert success_probability(basis_state(2, "11"), ["00", "11"]) == 1.0
    _, psi = exact_evolve(equal_superposition(2), qubo_to_hamiltonian(XOR), 1.0, samples=1)
    assert success_probability(psi, ["00", "11"]) == pytest.approx(1 / (1 + math.exp(-2)), abs=1e-12)


def test_success_bound_examples():
    assert success_bound(2, 2, 1.0, 1.0) == pytest.approx(1 / (1 + 2 * math.exp(-2)))
    assert success_bound(2, 2, 1.0, 1.0) == pytest.approx(0.7870, abs=1e-4)
    assert success_bound(3, 2, 1.0, 0.0) == pytest.approx(1 / (1 + 8 / 2))
    assert success_bound(3, 2, 1.0, 1e3) == 1.0
    np.testing.assert_allclose(success_bound(2, 1, 1.0, np.array([0.0, 1.0])), [0.2, 1 / (1 + 4 * math.exp(-2))])


def test_success_bound_domain():
    for args in [(2, 0, 1.0, 1.0), (2, 1, 0.0, 1.0), (2, 1, 1.0, -1.0)]:
        with pytest.raises(DomainError):
            success_bound(*args)


def test_threshold_time_examples():
    assert threshold_time(4, 2, 1.0, 0.5) == pytest.approx(1.0397, abs=1e-3)
    r = 2 * 2.0**-4
    assert threshold_time(4, 2, 1.0, r / (1 + r)) == pytest.approx(0.0, abs=1e-15)
    assert threshold_time(8, 2, 1.0, 0.7) - threshold_time(4, 2, 1.0, 0.7) == pytest.approx(4 * math.log(2) / 2)
    with pytest.raises(DomainError):
        threshold_time(4, 2, 1.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(q=st.integers(1, 30), mu=st.integers(1, 8), gap=st.floats(0.01, 10), eps=st.floats(0.01, 0.99))
def test_threshold_time_solves_bound(q, mu, gap, eps):
    t = threshold_time(q, mu, gap, eps)
    if t > 0:
        assert success_bound(q, mu, gap, t) == pytest.approx(eps, abs=1e-12)
    else:
        assert success_bound(q, mu, gap, 0.0) >= eps - 1e-12


def test_shot_success_examples():
    assert shot_success(0.1, 30) == pytest.approx(0.9576, abs=1e-4)
    assert shot_success(1.0, 7) == 1.0
    assert shot_success(1 / 10**5, 10**5) == pytest.approx(1 - math.exp(-1), abs=1e-5)
    with pytest.raises(DomainError):
        shot_success(0.5, 0)
    with pytest.raises(DomainError):
        shot_success(1.5, 3)


def test_parse_qubo_roundtrip():
    q = parse_qubo("# xor\nlin 0 1\nlin 1 1\nquad 0 1 -2  # coupling\n")
    assert q.n == 2
    np.testing.assert_allclose(q.objective_values(), XOR.objective_values())


@pytest.mark.parametrize(
    "text,line",
    [("lin 0 1\nfoo 1 2\n", 2), ("lin 0 1\nquad 1 0 2\n", 2), ("lin x 1\n", 1), ("lin 0 nan\n", 1)],
)
def test_parse_qubo_errors_name_line(text, line):
    with pytest.raises(ParseError) as err:
        parse_qubo(text)
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


def test_run_xor_exact():
    rep = run_combinatorial(XOR, 0.5, 1, seed=1, repeats=200)
    assert rep.t == pytest.approx(threshold_time(2, 2, 1.0, 0.5))
    assert rep.t == pytest.approx(0.3466, abs=1e-4)
    assert rep.p_measured == pytest.approx(1 / (1 + math.exp(-2 * rep.t)), abs=1e-12)
    assert rep.p_measured >= 0.5
    assert rep.p_bound == pytest.approx(0.5, abs=1e-12)
    assert rep.bound_ok and rep.trace_bound_ok and rep.within_5sigma
    assert rep.minima == ["00", "11"] and rep.mu == 2


def test_single_shot_on_certain_state():
    assert empirical_shot_success(basis_state(2, "00"), ["00"], 1, seed=5, repeats=50) == 1.0


@pytest.mark.parametrize("backend", ["trotter", "varqite"])
def test_run_xor_approximate_backends(backend):
    rep = run_combinatorial(XOR, 0.5, 3, seed=2, backend=backend, repeats=100, delta=0.05)
    assert rep.p_measured >= 0.5
    assert rep.within_5sigma


def test_report_json_contains_seed():
    import json

    rep = run_combinatorial(XOR, 0.5, 1, seed=11, repeats=10)
    doc = json.loads(rep.to_json(command="qubo"))
    assert doc["seed"] == 11 and doc["command"] == "qubo"
