import numpy as np
import pytest
from hypothesis import given, strategies as st

from qgraph import NumericalError, parse_graph_file
from qgraph.asymptotics import (
    exp_sum_coefficients,
    exp_sum_fit,
    leading_coefficient_recursive,
    lemma_bounds,
    normalized_delta,
    remainder_size,
    sandwich_constants,
)
from qgraph.randgraph import random_a_graph
from qgraph.roots import complex_zeros


def test_interval_coefficients(graphs):
    ex = exp_sum_coefficients(graphs["interval_dd"])
    assert ex.N == 2
    assert ex.coefficients.keys() == {-1.0, 1.0}
    assert ex.coefficient(1.0) == pytest.approx(1, abs=1e-12)
    assert ex.coefficient(-1.0) == pytest.approx(-1, abs=1e-12)


def test_loop_coefficients(graphs):
    ex = exp_sum_coefficients(graphs["loop"])
    assert ex.N == 1
    assert ex.coefficient(0.0) == pytest.approx(2, abs=1e-12)
    assert ex.coefficient(1.0) == pytest.approx(-1, abs=1e-12)
    assert ex.coefficient(-1.0) == pytest.approx(-1, abs=1e-12)


def test_bare_rays():
    k = parse_graph_file("vertex v boundary_K\nray r v support 0 potential zero\n")
    d = parse_graph_file("vertex v boundary_D\nray r v support 0 potential zero\n")
    assert exp_sum_coefficients(k).coefficients == {0.0: pytest.approx(-0.5)}
    assert exp_sum_coefficients(d).coefficients == {0.0: pytest.approx(1.0)}


def test_expansion_reproduces_free_determinant(graphs):
    g = graphs["lasso"].zero_potential()
    ex = exp_sum_coefficients(g)
    # at q = 0 the expansion is exact up to the finitely many negative powers of rho
    rho = 8 * (np.linspace(4, 8, 9) + 1j)
    err = np.abs(normalized_delta(g, rho) - ex.evaluate(rho)) * np.exp(-rho.imag * g.total_length)
    assert np.max(err) < 0.1


def test_fit_agrees_with_exact(graphs):
    for name in ("interval_dd", "loop"):
        ex = exp_sum_coefficients(graphs[name])
        fit = exp_sum_fit(graphs[name])
        for l, b in ex.coefficients.items():
            assert fit.coefficient(l) == pytest.approx(b, abs=1e-6)


def test_fit_refuses_when_ill_conditioned():
    g = parse_graph_file("vertex a boundary_D\nvertex b internal\nvertex c boundary_D\n"
                         "edge e1 a b length 1 potential zero\nedge e2 b c length 1.0000001 potential zero\n")
    with pytest.raises(NumericalError, match="ill-conditioned"):
        exp_sum_fit(g)


@given(st.integers(0, 10_000))
def test_leading_coefficient_nonzero_and_real(seed):
    g = random_a_graph(np.random.default_rng(seed), max_edges=6)
    ex = exp_sum_coefficients(g)
    assert abs(ex.leading) > 1e-6
    assert ex.diagnostics["max_imag"] < 1e-8
    assert ex.diagnostics["max_positive_power"] < 1e-8


@given(st.integers(0, 10_000))
def test_coefficients_do_not_depend_on_potential(seed):
    g = random_a_graph(np.random.default_rng(seed), max_edges=5)
    a = exp_sum_coefficients(g).coefficients
    b = exp_sum_coefficients(g.zero_potential()).coefficients
    assert a == b


def star(legs, kinds):
    lines = ["vertex c internal"] + [f"vertex x{k} {kind}" for k, kind in enumerate(kinds)]
    lines += [f"edge e{k} c x{k} length {L} potential zero" for k, L in enumerate(legs)]
    return parse_graph_file("\n".join(lines) + "\n")


def test_three_star_recursion_by_hand():
    g = star([1.0, 1.3, 0.7], ["boundary_D", "boundary_K", "boundary_D"])
    # one-edge pieces: leg with D end has B = 1 (K at c) and 1 when split (D at c) ... read them off
    legs = [star([L], [k]) for L, k in zip([1.0, 1.3, 0.7], ["boundary_D", "boundary_K", "boundary_D"])]
    from qgraph.surgery import split_vertex
    B = [exp_sum_coefficients(h).leading for h in legs]
    Bs = [exp_sum_coefficients(split_vertex(h, "c").graph).leading for h in legs]
    want = B[0] * Bs[1] * Bs[2] + B[1] * Bs[0] * Bs[2] + B[2] * Bs[0] * Bs[1]
    assert leading_coefficient_recursive(g).value == pytest.approx(want, rel=1e-12)
    assert exp_sum_coefficients(g).leading == pytest.approx(want, rel=1e-6)


@given(st.integers(0, 10_000))
def test_recursion_matches_and_sign_law(seed):
    g = random_a_graph(np.random.default_rng(seed), max_edges=6)
    rec = leading_coefficient_recursive(g)
    assert rec.value == pytest.approx(exp_sum_coefficients(g).leading, rel=1e-6)
    assert all(r < 0 for r in rec.ratios)


def test_remainder_decays_like_inverse_rho(graphs):
    g = graphs["loop_ray_root"]
    ex = exp_sum_coefficients(g)
    r1, r2 = remainder_size(g, 8, ex), remainder_size(g, 16, ex)
    assert r1 / r2 >= 1.8


def test_complex_zero_finder_on_polynomial():
    roots = [1.2 + 0.3j, 2.7 - 0.1j, 2.75 - 0.1j]
    f = lambda z: np.prod([z - r for r in roots], axis=0)
    found = complex_zeros(f, 0, 4, -1.125, 1.125, cell=0.25)
    assert sum(m for _, m in found) == 3
    for r in roots:
        assert min(abs(z - r) for z, _ in found) < 1e-3


def test_sandwich_and_lemma_bounds(graphs):
    g = graphs["loop_ray_root"]
    s = sandwich_constants(g)
    assert s["C1_drift"] <= 4 and s["C2_drift"] <= 4
    rho = np.linspace(-6, 6, 25) + 1j * np.linspace(0.0, 2, 25)
    rho = rho[rho != 0]
    D, lo1, lo2 = lemma_bounds(g, "r", rho)
    assert np.all(D >= lo1 * (1 - 1e-9)) and np.all(D >= lo2 * (1 - 1e-9))


@given(st.integers(0, 10_000))
def test_fit_matches_exact_extraction(seed):
    g = random_a_graph(np.random.default_rng(seed), max_edges=4)
    try:
        fit = exp_sum_fit(g)
    except NumericalError:
        return
    ex = exp_sum_coefficients(g)
    assert fit.diagnostics["max_imag"] < 1e-8
    for l, b in ex.coefficients.items():
        assert fit.coefficient(l, 1e-9) == pytest.approx(b, abs=1e-6)
