import cmath
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarm_opt.analysis import (
    assemble,
    b_cubic_roots,
    build_A,
    build_Ac,
    build_B,
    build_E,
    build_W,
    check_rank_lemma,
    check_theorem_hypotheses,
    eigen_semisimple,
    h1_supremum,
    is_discrete_semistable,
    is_paracontracting,
    kernel_basis,
    multiplicities,
    numeric_rank,
    predicted_spectrum_A,
    predicted_spectrum_B,
    random_switching,
    recurring_schedule,
    semiobservable_family_check,
    simulate_switched,
    spectral_report,
    subspace_residual,
    verify_spectrum_containment,
)
from swarm_opt.graph import build_graph, erdos_renyi, is_strongly_connected, laplacian
from swarm_opt.objectives import get_objective
from swarm_opt.swarm import CoeffSample, SwarmState, mco_step

K2 = laplacian(build_graph("complete", 2))
K3 = laplacian(build_graph("complete", 3))
ROT90 = np.array([[0.0, -1.0], [1.0, 0.0]])
# real root of z^3 + 2 z^2 + z + 1, from a 30-digit secant solve
CUBIC_ROOT = -1.75487766624669276


def strongly_connected(q, rng, directed=True):
    while True:
        g = erdos_renyi(q, 0.6, rng, directed=directed)
        if is_strongly_connected(g):
            return g


def random_instance(rng, case=None):
    n = int(rng.integers(1, 3))
    q = int(rng.integers(2, 5))
    L = laplacian(strongly_connected(q, rng, bool(rng.integers(2))))
    eta, mu, kappa, h = 1.0 - rng.random(4)  # (0, 1]
    case = int(rng.integers(3)) if case is None else case
    if case == 0:
        mu = kappa = 0.0
    elif case == 2:
        kappa = 0.0
    return assemble(int(rng.integers(1, q + 1)), CoeffSample(eta, mu, kappa, h), L, n)


# --- block matrices ---------------------------------------------------------

def test_selector_examples():
    assert build_E(1, 1, 2).tolist() == [[1.0, 0.0]]
    assert build_W(1, 1, 2).tolist() == [[1.0, 0.0], [1.0, 0.0]]
    w = np.array([3.0, 5.0])
    assert (build_W(2, 1, 2) @ w).tolist() == [5.0, 5.0]


@pytest.mark.parametrize("j,n,q", [(j, n, q) for q in range(2, 5) for n in (1, 2) for j in range(1, q + 1)])
def test_selector_identities(j, n, q):
    W, E = build_W(j, n, q), build_E(j, n, q)
    ones = np.kron(np.ones((q, 1)), np.eye(n))
    assert np.abs(W @ W - W).max() < 1e-12
    assert np.abs(E @ ones - np.eye(n)).max() < 1e-12
    assert numeric_rank(W - np.eye(n * q)) == n * q - n
    assert np.abs(W @ ones - ones).max() < 1e-12


def test_selector_errors():
    for args in [(0, 1, 2), (3, 1, 2), (1, 1, 1)]:
        with pytest.raises(ValueError):
            build_E(*args)


def test_matrix_shapes_and_patterns():
    c = CoeffSample(0.2, 0.3, 0.5, 0.7)
    assert build_A(1, c, K2, 1).shape == (5, 5)
    zero = CoeffSample(0.0, 0.0, 0.0, 1.0)
    A = build_A(1, zero, K2, 1)
    expect = np.zeros((5, 5))
    expect[0, 2] = expect[1, 3] = 1.0
    assert np.array_equal(A, expect)
    A = build_A(1, CoeffSample(0.0, 0.0, 1.0), K2, 1)
    assert A[-1].tolist() == [1.0, 0.0, 0.0, 0.0, -1.0]
    Ac = build_Ac(c, K3, 2)
    assert not Ac[6:].any() and Ac[:6].any()
    B = build_B(2, c, K2, 1)
    assert B[-1].tolist() == [0.0, 1.0, 0.0, 0.0, -1.0]
    assert np.array_equal(B[2:4], c.h * build_A(2, c, K2, 1)[2:4])


def test_non_laplacian_rejected():
    with pytest.raises(ValueError):
        build_A(1, CoeffSample(0.1, 0.1, 0.1), np.eye(2), 1)


# --- rank and kernels -------------------------------------------------------

def test_rank_examples():
    assert numeric_rank(np.eye(3)) == 3 and kernel_basis(np.eye(3)).shape == (3, 0)
    assert numeric_rank(np.zeros((2, 2))) == 0 and kernel_basis(np.zeros((2, 2))).shape == (2, 2)
    K = kernel_basis(K3)
    assert numeric_rank(K3) == 2 and K.shape == (3, 1)
    assert np.allclose(np.abs(K.ravel()), 1 / np.sqrt(3))


def test_rank_lemma_examples():
    v = check_rank_lemma(assemble(1, CoeffSample(0.2, 0.3, 0.5), K2, 1))
    assert v.case == "ii" and v.rank == 4 and v.ok
    K = kernel_basis(assemble(1, CoeffSample(0.2, 0.3, 0.5), K2, 1).A).ravel()
    assert np.allclose(K / K[0], [1, 1, 0, 0, 1])
    v = check_rank_lemma(assemble(1, CoeffSample(0.4, 0.0, 0.0), K3, 1))
    assert v.case == "i" and v.rank == 3 and v.ok
    v = check_rank_lemma(assemble(1, CoeffSample(0.4, 0.7, 0.0), K3, 1))
    assert v.case == "iii" and v.rank == 5 and v.ok


def test_rank_lemma_flags_ambiguous_coefficients():
    v = check_rank_lemma(assemble(1, CoeffSample(0.4, 0.3, 1e-12), K3, 1))
    assert v.indeterminate and not v.ok


def test_rank_and_kernel_lemmas_randomized():
    rng = np.random.default_rng(2024)
    for t in range(150):
        sm = random_instance(rng, case=t % 3)
        v = check_rank_lemma(sm)
        assert v.rank_ok, (t, v)
        assert v.kernel_residual < 1e-9
        assert v.kernel_structure_ok is not False


def test_spectral_report_invariant():
    sm = assemble(2, CoeffSample(0.2, 0.3, 0.5, 0.4), K3, 2)
    rep = spectral_report(sm.a_family())
    assert rep.rank + rep.kernel_dim == sm.side
    assert rep.zero_semisimple is True
    assert len(rep.to_dict()["eigenvalues"]) == sm.side


# --- semisimplicity ---------------------------------------------------------

def test_semisimple_examples():
    assert eigen_semisimple(np.diag([0.0, 0.0, 1.0]), 0.0)
    assert not eigen_semisimple(np.array([[0.0, 1.0], [0.0, 0.0]]), 0.0)
    sm = assemble(1, CoeffSample(0.2, 0.3, 0.4, 0.1), K2, 1)
    assert eigen_semisimple(sm.a_family(), 0.0)
    with pytest.raises(ValueError):
        eigen_semisimple(np.eye(2), 0.0)


def test_multiplicities_of_jordan_block():
    J = np.diag([2.0, 2.0, 2.0, 5.0]) + np.diag([1.0, 1.0, 0.0], 1)
    assert multiplicities(J, 2.0) == (3, 1)


def test_zero_semisimple_iff_kappa_positive():
    rng = np.random.default_rng(7)
    for t in range(100):
        sm = random_instance(rng)
        assert eigen_semisimple(sm.a_family(), 0.0) == (sm.coeffs.kappa > 1e-9)


# --- spectra ----------------------------------------------------------------

def test_double_root_when_discriminant_vanishes():
    cand = predicted_spectrum_A(CoeffSample(0.3, 0.2, 1.0, 1.0), K2)
    assert np.sum(np.abs(cand - (-1.0)) < 1e-15) >= 2


def test_b_cubic_real_root():
    roots = b_cubic_roots(CoeffSample(0.0, 0.0, 1.0, 1.0))
    real = roots[np.abs(roots.imag) < 1e-12].real
    assert abs(real[0] - CUBIC_ROOT) < 1e-10


def test_kappa_zero_candidates():
    c = CoeffSample(0.2, 0.3, 0.0, 0.5)
    cand = predicted_spectrum_A(c, K2)
    s = 2.0
    graph = [(-s * (c.eta + c.mu * c.h) + sgn * cmath.sqrt((s * (c.eta + c.mu * c.h)) ** 2 - 4 * s * c.mu)) / 2
             for sgn in (1, -1)]
    rest = [z for z in cand if abs(z) > 1e-15]
    assert sorted(rest, key=lambda z: (z.real, z.imag)) == pytest.approx(
        sorted(graph, key=lambda z: (z.real, z.imag)), abs=1e-15)


def test_empty_graph_branch_for_zero_laplacian():
    c = CoeffSample(0.2, 0.3, 0.5, 0.5)
    cand = predicted_spectrum_A(c, np.zeros((3, 3)))
    assert len(cand) == 6  # 0, -kappa and two quadratic pairs


def test_containment_randomized_both_families():
    rng = np.random.default_rng(99)
    for t in range(100):
        sm = random_instance(rng)
        c, L = sm.coeffs, sm.L
        assert verify_spectrum_containment(sm.a_family(), predicted_spectrum_A(c, L), 1e-8), t
        assert verify_spectrum_containment(sm.b_family(), predicted_spectrum_B(c, L), 1e-8), t


def test_containment_examples_on_k3():
    rng = np.random.default_rng(5)
    eta, mu, kappa, h = 1.0 - rng.random(4)
    c = CoeffSample(eta, mu, kappa, h)
    sm = assemble(1, c, K3, 1)
    assert verify_spectrum_containment(sm.a_family(), predicted_spectrum_A(c, K3))
    assert verify_spectrum_containment(sm.b_family(), predicted_spectrum_B(c, K3))
    shifted = sm.a_family() + 0.5 * np.eye(sm.side)
    assert not verify_spectrum_containment(shifted, predicted_spectrum_A(c, K3))


def test_verbatim_b_set_misses_an_eigenvalue():
    c = CoeffSample(0.2, 0.3, 0.5, 0.8)
    sm = assemble(1, c, K3, 1)
    eig = np.linalg.eigvals(sm.b_family())
    assert np.min(np.abs(eig + c.h**2 * c.kappa)) < 1e-10
    assert not verify_spectrum_containment(sm.b_family(), predicted_spectrum_B(c, K3, verbatim=True))


def test_marginal_pair_only_for_disconnected_graphs():
    c = CoeffSample(0.2, 0.3, 0.5, 0.8)
    roots = [complex(-c.kappa * c.h / 2, s * np.sqrt(4 * c.kappa - (c.kappa * c.h) ** 2) / 2) for s in (1, -1)]
    edgeless = np.zeros((3, 3))
    eig = np.linalg.eigvals(assemble(1, c, edgeless, 1).a_family())
    assert all(np.min(np.abs(eig - r)) < 1e-8 for r in roots)
    eig = np.linalg.eigvals(assemble(1, c, K3, 1).a_family())
    assert all(np.min(np.abs(eig - r)) > 1e-3 for r in roots)


# --- semistability / paracontraction ----------------------------------------

def test_semistable_examples():
    assert is_discrete_semistable(np.eye(3))
    assert is_discrete_semistable(np.diag([1.0, 0.5]))
    assert not is_discrete_semistable(ROT90)
    assert not is_discrete_semistable(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert not is_discrete_semistable(np.diag([1.1, 0.5]))


def test_paracontraction_examples():
    assert is_paracontracting(np.diag([1.0, 0.5]))
    assert not is_paracontracting(ROT90)
    assert not is_paracontracting(np.eye(2))


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_symmetric_semistable_is_paracontracting(k, seed):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(k, k)))
    ones = int(rng.integers(0, k))
    r = np.concatenate([np.ones(ones), rng.uniform(-1, 1, k - ones)])
    assert is_paracontracting(Q @ np.diag(r) @ Q.T)


def test_semiobservability_examples():
    A = np.diag([1.0, 0.5, 0.0])
    assert semiobservable_family_check([A], np.eye(3), A)
    assert not semiobservable_family_check([np.eye(3)], np.eye(3), A)
    P1, P2 = np.diag([1.0, 1.0, 0.0]), np.diag([1.0, 0.0, 0.0])
    # fixed spaces span{e1, e2} and span{e1}; their intersection is span{e1}
    assert semiobservable_family_check([P1, P2], np.eye(3), A)
    assert not semiobservable_family_check([P1], np.eye(3), A)
    with pytest.raises(ValueError):
        semiobservable_family_check([np.eye(2)], np.eye(3), A)
    with pytest.raises(ValueError):
        semiobservable_family_check([A], np.eye(2), A)


def test_subspace_residual_dimension_mismatch():
    assert subspace_residual(np.eye(3)[:, :1], np.eye(3)[:, :2]) == float("inf")


# --- hypotheses -------------------------------------------------------------

def test_kappa_zero_reports_failure():
    v = check_theorem_hypotheses(CoeffSample(0.2, 0.3, 0.0, 0.1), K2, 1, j=1)
    assert not v.zero_semisimple and not v.semistable_A and not v.passed


def _bound_from_eigensolve(c):
    eig = np.linalg.eigvals(assemble(1, c, K2, 1).a_family())
    eig = eig[np.abs(eig) > 1e-9]
    return np.min(-2 * eig.real / np.abs(eig) ** 2)


def test_step_bound_matches_eigensolve():
    c = CoeffSample(0.2, 0.3, 0.5, 0.1)
    v = check_theorem_hypotheses(c, K2, 1, j=1)
    assert v.h_dagger_A == pytest.approx(_bound_from_eigensolve(c), rel=1e-9)
    assert v.H1


@pytest.mark.parametrize("h", [0.01, 0.1, 0.2, 0.3, 0.4])
def test_h1_passes_below_bound(h):
    c = CoeffSample(0.2, 0.3, 0.5, h)
    v = check_theorem_hypotheses(c, K2, 1, j=1)
    assert h < v.h_dagger_A and v.H1


def test_h1_fails_at_twice_the_bound():
    # the bound moves with h, so the threshold is the self-consistent one
    c = CoeffSample(0.2, 0.3, 0.5, 0.1)
    hs = h1_supremum(c, K2)
    assert 1.5 < hs < 2.0
    assert check_theorem_hypotheses(replace(c, h=0.5 * hs), K2, 1, j=1).H1
    v = check_theorem_hypotheses(replace(c, h=2 * hs), K2, 1, j=1)
    assert not v.H1 and not v.passed


def test_verdict_reports_every_condition():
    v = check_theorem_hypotheses(CoeffSample(0.2, 0.3, 0.5, 0.1), K3, 1)
    d = v.to_dict()
    assert {"H1", "H2", "H3", "H4", "passed", "h_dagger_A", "offenders"} <= set(d)
    assert d["passed"] == (v.H1 and v.H2 and v.H3 and v.H4)
    assert v.norm_A > 1 and v.norm_B > 1


# --- switched simulation ----------------------------------------------------

OMEGA = [CoeffSample(0.2, 0.3, 0.5, 0.3), CoeffSample(0.1, 0.2, 0.8, 0.25),
         CoeffSample(0.3, 0.1, 0.6, 0.3), CoeffSample(0.15, 0.25, 0.4, 0.35)]


def test_kernel_state_is_fixed():
    c = 1.7
    Z0 = np.array([c, c, c, 0.0, 0.0, 0.0, c])
    res = simulate_switched(random_switching(OMEGA, K3, 0), Z0, 1, max_iters=50)
    assert res.status == "converged" and np.allclose(res.Z, Z0, atol=1e-14)
    assert res.in_consensus_kernel()


def test_random_switching_converges_to_consensus():
    rng = np.random.default_rng(3)
    for s in range(10):
        res = simulate_switched(random_switching(OMEGA, K3, s), rng.normal(size=7), 1)
        assert res.x_spread < 1e-8 and res.v_norm < 1e-8


def test_switching_schedule_is_pure():
    sched = random_switching(OMEGA, K3, 5)
    assert [sched(k)[2:] for k in range(20)] == [sched(k)[2:] for k in range(20)]


def test_recurring_schedule_inserts_entry():
    fixed = (OMEGA[0], K3, 1, "smooth")
    sched = recurring_schedule(random_switching(OMEGA, K3, 1), fixed, 4)
    assert sched(3) is fixed and sched(7) is fixed
    res = simulate_switched(sched, np.arange(7.0), 1)
    assert res.status == "converged"
    with pytest.raises(ValueError):
        recurring_schedule(sched, fixed, 0)


def test_unstable_schedule_reports_status():
    big = CoeffSample(0.9, 0.9, 0.9, 3.0)
    res = simulate_switched([(big, K3, 1, "smooth")], np.arange(7.0), 1, max_iters=2000)
    assert res.status in ("diverged", "max_iters", "converged")
    assert res.status == "diverged"


def test_simulation_input_checks():
    with pytest.raises(ValueError):
        simulate_switched([(OMEGA[0], K3, 1, "smooth")], np.zeros(5), 1)
    with pytest.raises(ValueError):
        simulate_switched([(OMEGA[0], K3, 1, "sideways")], np.zeros(7), 1)


def test_trajectory_recording():
    res = simulate_switched([(OMEGA[0], K3, 2, "overwrite")], np.arange(7.0), 1, max_iters=5, record=True)
    assert len(res.trajectory) == res.iterations + 1


# --- bridge to the optimizer -------------------------------------------------

def test_mco_step_matches_switched_matrix():
    rng = np.random.default_rng(123)
    for t in range(100):
        n, q = int(rng.integers(1, 4)), int(rng.integers(2, 6))
        g = erdos_renyi(q, 0.5, rng, directed=bool(rng.integers(2)))
        h = 1.0 if t % 2 == 0 else float(rng.uniform(0.05, 1.0))
        c = CoeffSample(*rng.random(3), h=h)
        obj = get_objective("sphere", n)
        x, v, p = rng.normal(size=(q, n)), rng.normal(size=(q, n)), rng.normal(size=n)
        state = SwarmState(0, x, v, np.zeros(q), x.copy(), np.zeros(q), p, 0.0, p, 0.0, 0)
        j = int(rng.integers(1, q + 1))
        Z1 = assemble(j, c, laplacian(g), n).a_update() @ state.stacked()
        new = mco_step(state, c, g, obj)
        nq = n * q
        assert np.abs(Z1[:nq] - new.x.ravel()).max() < 1e-12
        assert np.abs(Z1[nq:2 * nq] - new.v.ravel()).max() < 1e-12
        assert np.abs(Z1[2 * nq:] - (p + h * c.kappa * (x[j - 1] - p))).max() < 1e-12
