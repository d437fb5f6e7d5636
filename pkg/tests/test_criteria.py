import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from sepcrit import criteria as C
from sepcrit.linalg import partial_transpose
from sepcrit.maps import partial_time_reversal, spin_flip_V
from sepcrit.states import (
    DensityMatrix,
    bell_diagonal,
    divincenzo,
    max_entangled,
    random_density,
    random_product,
    random_separable,
    singlet,
    so3_invariant_4x4,
)

SPIN = spin_flip_V(4)


def _mixed(dims):
    d = int(np.prod(dims))
    return DensityMatrix(np.eye(d) / d, dims)


# --- report mechanics ---------------------------------------------------------

def test_report_fields_and_json():
    r = C.entropic_criterion(_mixed((2, 2)), math.inf)
    assert r.margin == pytest.approx(r.lhs - r.rhs)
    d = json.loads(r.to_json())
    assert d["alpha"] == "inf"
    assert set(d) == {"name", "alpha", "lhs", "rhs", "margin", "satisfied", "assumption_ok", "tol"}


@pytest.mark.parametrize("name", sorted(C.REGISTRY))
def test_every_report_serializes(name):
    if name in ("fact1", "fact1_special", "lew"):
        rho, u = random_density((2, 2), np.random.default_rng(5)), None
    else:
        rho, u = so3_invariant_4x4((0.2, 0.5, 0.25)), SPIN
    alpha = None if name in C.ALPHA_FREE else (1 if name == "fact4_4k1" else 3)
    d = json.loads(C.evaluate(name, rho, alpha, "A", u).to_json())
    assert isinstance(d["satisfied"], bool)
    assert d["assumption_ok"] is None or isinstance(d["assumption_ok"], bool)


def test_satisfied_iff_margin_above_minus_tol():
    r = C._report("x", 2, 1.0, 1.0 + 5e-10, 1.0, 1e-9)
    assert r.satisfied and r.tol == 1e-9
    r = C._report("x", 2, 1.0, 1.0 + 2e-9, 1.0, 1e-9)
    assert not r.satisfied
    # tolerance shrinks with small magnitudes but never grows
    assert C._report("x", 2, 0.0, 0.0, 1e-3, 1e-9).tol == pytest.approx(1e-12)
    assert C._report("x", 2, 0.0, 0.0, 50.0, 1e-9).tol == 1e-9


# --- q terms, entropies -------------------------------------------------------

@pytest.mark.parametrize("d", [2, 4, 6])
def test_q_term_max_entangled(d):
    assert C.q_term(max_entangled(d), (1, 1)) == pytest.approx(-1 / d, abs=1e-12)
    # odd tau count: (-1/d)^r / d^(sum k - r) with r = 1 block; (1,3): Tr P (P^tau)^3 = -1/d^3
    assert C.q_term(max_entangled(d), (1, 3)) == pytest.approx(-1 / d**3, abs=1e-12)


def test_q_term_positivity(rng):
    for _ in range(30):
        rho = random_density((2, 2), rng)
        assert C.q_term(rho, (1, 2)) >= -1e-14
        assert C.q_term(rho, (1, 1, 1, 1)) >= -1e-14
        sep = random_separable((2, 4), seed=rng)
        assert C.q_term(sep, (1, 1)) >= -1e-14
        assert C.q_term(sep, (1, 1), "B") >= -1e-14
    with pytest.raises(ValueError):
        C.q_term(singlet(), (0, 0))
    with pytest.raises(ValueError):
        C.q_term(singlet(), (1, 2, 1))


def test_renyi_and_tsallis():
    for d in (2, 3, 5):
        rho = DensityMatrix(np.eye(d) / d, (d,))
        for a in (0, 0.5, 1, 2, 3.5, math.inf):
            assert C.renyi(rho, a) == pytest.approx(math.log(d))
    pure = singlet()
    for a in (0, 0.5, 1, 2, math.inf):
        assert C.renyi(pure, a) == pytest.approx(0.0, abs=1e-12)
    assert C.tsallis([0.25] * 4, 2) == pytest.approx(0.75)
    assert C.tsallis([0.5, 0.5], 1) == pytest.approx(math.log(2))
    with pytest.raises(ValueError):
        C.renyi(pure, -1)


# --- entropic, PPT, reduction, Breuer ------------------------------------------

def test_entropic_examples(rng):
    r = C.entropic_criterion(singlet(), 2)
    assert (r.lhs, r.rhs) == pytest.approx((0.5, 1.0))
    assert not r.satisfied
    r = C.entropic_criterion(_mixed((2, 2)), math.inf)
    assert (r.lhs, r.rhs) == pytest.approx((0.5, 0.25))
    assert r.satisfied
    for _ in range(10):
        sep = random_separable((2, 3), seed=rng)
        for a in (0.5, 1, 2, 3, math.inf):
            assert C.entropic_criterion(sep, a, "A").satisfied
            assert C.entropic_criterion(sep, a, "B").satisfied
    assert not C.entropic_criterion(singlet(), 0.5).satisfied
    assert not C.entropic_criterion(singlet(), 1).satisfied


def test_ppt_reduction_breuer_examples(rng):
    s = singlet()
    assert C.ppt_criterion(s).lhs == pytest.approx(-0.5)
    assert not C.ppt_criterion(s).satisfied
    assert not C.reduction_criterion(s).satisfied
    # on qubits the Breuer map vanishes, so the criterion reduces to 0 >= 0
    assert C.breuer_operator_criterion(s).lhs == pytest.approx(0.0, abs=1e-14)
    assert not C.breuer_operator_criterion(so3_invariant_4x4((1, 0, 0)), "A", SPIN).satisfied
    for _ in range(10):
        sep = random_separable((4, 4), seed=rng)
        assert C.ppt_criterion(sep).satisfied
        assert C.reduction_criterion(sep, "A").satisfied and C.reduction_criterion(sep, "B").satisfied
        assert C.breuer_operator_criterion(sep, "A").satisfied
        assert C.breuer_operator_criterion(sep, "B", SPIN).satisfied
    with pytest.raises(Exception):
        C.breuer_operator_criterion(random_density((2, 3), rng), "A")


def test_breuer_region_monotone_on_so3_slice():
    # along rays toward the maximally mixed state the Breuer-satisfied set is an interval
    for q in np.linspace(0, 0.9, 7):
        flags = [C.breuer_operator_criterion(so3_invariant_4x4((0, q, r)), "A", SPIN).satisfied for r in np.linspace(0, 1 - q, 25)]
        switches = sum(a != b for a, b in zip(flags, flags[1:]))
        assert switches <= 2


# --- Fact 1 family --------------------------------------------------------------

def test_fact1_examples():
    s = singlet()
    r = C.fact1(s, 3)
    assert (r.lhs, r.rhs) == pytest.approx((0.25, 1.25))
    assert not r.satisfied
    edge = DensityMatrix(np.kron(np.diag([1.0, 0.0]), np.eye(3) / 3), (2, 3))
    r = C.fact1(edge, 2)
    assert r.satisfied and r.margin == pytest.approx(0.0, abs=1e-15)
    mixed = DensityMatrix(np.kron(np.eye(2) / 2, np.eye(3) / 3), (2, 3))
    assert C.fact1(mixed, 2).margin == pytest.approx(1 / 3 - 1 / 6)
    with pytest.raises(Exception):
        C.fact1(random_density((3, 2), 1), 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**31 - 1))
def test_fact1_alpha2_is_entropic(d, seed):
    rho = random_density((2, d), seed)
    assert C.fact1(rho, 2).rhs == pytest.approx(C.entropic_criterion(rho, 2, "B").rhs, abs=1e-12)


def test_fact1_binomial_cross_check(rng):
    # for 2 x d states rho and rho^tau_A commute whenever rho commutes with I (x) rho_B
    for bc in [(0.3, 0.2), (0.6, 0.1), (0.05, 0.9)]:
        rho = divincenzo(bc)
        for a in range(1, 9):
            assert C.fact1(rho, a).rhs == pytest.approx(C.fact1_binomial_rhs(rho, a), abs=1e-12)


def test_fact1_special(rng):
    s = singlet()
    r = C.fact1_special(s, 3)
    assert (r.lhs, r.rhs) == pytest.approx((0.25, 1.25))
    assert not r.satisfied
    for _ in range(20):
        sep = random_separable((2, 3), seed=rng)
        for a in (3, 4, 5):
            assert C.fact1_special(sep, a).satisfied
        rho = random_density((2, 3), rng)
        assert C.fact1_special(rho, 4).rhs >= np.trace(np.linalg.matrix_power(rho.mat, 4)).real - 1e-14
    with pytest.raises(ValueError):
        C.fact1_special(s, 6)


def test_fact1_special_alpha3_oracle(rng):
    # direct products, no helper functions
    rho = random_density((2, 2), rng)
    m = rho.mat
    t = partial_time_reversal(rho, "A")
    rhs = np.trace(m @ m @ m).real + np.trace(m @ t @ t).real
    assert C.fact1_special(rho, 3).rhs == pytest.approx(rhs, abs=1e-14)


# --- Facts 2 and 3 ----------------------------------------------------------------

def test_fact2_examples(rng):
    rho = random_density((2, 4), rng)
    r1 = C.fact2(rho, 1, "A")
    assert r1.lhs == pytest.approx(1.0) and r1.margin == pytest.approx(0.0, abs=1e-12)
    r2 = C.fact2(rho, 2, "A")
    tau = partial_time_reversal(rho, "B")
    expected = np.trace(rho.marginal("A") @ rho.marginal("A")).real - np.trace(rho.mat @ rho.mat).real - np.trace(rho.mat @ tau).real
    assert r2.margin == pytest.approx(expected, abs=1e-14)
    p0 = so3_invariant_4x4((1, 0, 0))
    for a in range(2, 7):
        assert not C.fact2(p0, a, "A", SPIN).satisfied
        assert not C.fact2_module(p0, a, "A", SPIN).satisfied


def test_fact2_module_is_stronger_on_so3_grid():
    for p in (0.0, 0.2):
        for q in np.linspace(0, 1 - p, 9):
            for r in np.linspace(0, 1 - p - q, 7):
                rho = so3_invariant_4x4((p, q, r))
                for a in (2, 3, 5):
                    assert C.fact2_module(rho, a, "A", SPIN).margin <= C.fact2(rho, a, "A", SPIN).margin + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(2, 2), (4, 2), (2, 4), (4, 4)]), st.sampled_from(["A", "B"]), st.integers(0, 2**31 - 1))
def test_fact3_alpha2_equals_entropic(dims, side, seed):
    rho = random_density(dims, seed)
    if dims[1 - "AB".index(side)] % 2:
        return
    assert C.fact3(rho, 2, side).margin == pytest.approx(C.entropic_criterion(rho, 2, side).margin, abs=1e-12)


def test_fact3_records_assumption(rng):
    assert C.fact3(divincenzo((0.2, 0.3)), 3, "A").assumption_ok
    assert not C.fact3(random_density((2, 2), rng), 3, "A").assumption_ok


def test_fact3_regions_nested_on_so3_grid():
    for p in (0.0, 0.2):
        for q in np.linspace(0, 1 - p, 11):
            for r in np.linspace(0, 1 - p - q, 11):
                rho = so3_invariant_4x4((p, q, r))
                if C.fact3(rho, 8, "A", SPIN).satisfied:
                    assert C.fact3(rho, 5, "A", SPIN).satisfied
                if C.fact3(rho, 5, "A", SPIN).satisfied:
                    assert C.entropic_criterion(rho, 5).satisfied


def test_joint_spectrum():
    rho = so3_invariant_4x4((0.1, 0.2, 0.3))
    tau = partial_time_reversal(rho, "B", SPIN)
    lam, mu, res = C.joint_spectrum(rho.mat, tau)
    assert res < 1e-12
    assert_allclose(np.sort(lam), np.linalg.eigvalsh(rho.mat), atol=1e-12)
    assert_allclose(np.sort(mu), np.linalg.eigvalsh(tau), atol=1e-12)
    # a non-commuting pair leaves a visible residual
    x = np.diag([1.0, 2.0])
    y = np.array([[0, 1.0], [1.0, 0]])
    assert C.joint_spectrum(x, y)[2] > 0.1


def test_fact3_limit_oracle_and_convergence():
    # oracle: sorted-eigenvalue matching through the known SO(3) block structure
    for pqr in [(0.1, 0.2, 0.3), (0.0, 0.5, 0.1), (0.4, 0.1, 0.1)]:
        rho = so3_invariant_4x4(pqr)
        tau = partial_time_reversal(rho, "B", SPIN)
        lim = C.fact3_limit(rho, "A", SPIN)
        assert lim.assumption_ok
        bound = max(abs(np.linalg.eigvalsh(rho.mat + tau)).max(), abs(np.linalg.eigvalsh(rho.mat - tau)).max())
        # restricted to the support of rho the bound can only shrink
        assert lim.rhs <= bound + 1e-12
        assert lim.lhs == pytest.approx(0.25)
        # p-th root of the finite-alpha rhs tends to the limit rhs
        a = 301
        r = C.fact3(rho, a, "A", SPIN).rhs
        assert r ** (1 / (a - 1)) == pytest.approx(lim.rhs, rel=0.05)


def test_fact2_module_limit_matches_fact3_limit():
    for q in np.linspace(0, 1, 9):
        for r in np.linspace(0, 1 - q, 5):
            rho = so3_invariant_4x4((0.2 * (1 - q - r), q, r)) if q + r <= 1 else None
            if rho is None:
                continue
            assert C.fact2_module_limit(rho, "A", SPIN).rhs == pytest.approx(C.fact3_limit(rho, "A", SPIN).rhs, abs=1e-12)


# --- Fact 4 family -------------------------------------------------------------------

def test_fact4_examples(rng):
    rho = random_density((2, 2), rng)
    r = C.fact4_4k1(rho, 0)
    assert r.alpha == 1 and r.margin == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        C.fact4(rho, 4)
    with pytest.raises(ValueError):
        C.fact4_4k1(rho, -1)
    so3 = so3_invariant_4x4((0.2, 0.3, 0.1))
    assert C.fact4(so3, 5, "A", SPIN).rhs == pytest.approx(C.fact4_4k1(so3, 1, "A", SPIN).rhs, rel=1e-12)


def test_fact4_against_joint_spectrum():
    rho = so3_invariant_4x4((0.15, 0.25, 0.35))
    tau = partial_time_reversal(rho, "B", SPIN)
    lam, mu, _ = C.joint_spectrum(rho.mat, tau)
    for a in (3, 5, 7, 17):
        oracle = 2 ** (a - 1) * np.sum(lam ** ((a + 1) // 2) * mu ** ((a - 1) // 2))
        assert C.fact4(rho, a, "A", SPIN).rhs == pytest.approx(oracle, rel=1e-10, abs=1e-15)
    assert C.fact4_limit(rho, "A", SPIN).rhs == pytest.approx(2 * math.sqrt(np.max(np.abs(lam * mu))))


def test_fact4_limit_weaker_than_fact3_limit_on_grid():
    for p in (0.0, 0.2):
        for q in np.linspace(0, 1 - p, 13):
            for r in np.linspace(0, 1 - p - q, 9):
                rho = so3_invariant_4x4((p, q, r))
                if not C.fact4_limit(rho, "A", SPIN).satisfied:
                    assert not C.fact3_limit(rho, "A", SPIN).satisfied


def test_sigma_general(rng):
    for d in (2, 4):
        for a in (1, 3, 5):
            r = C.sigma_general(_mixed((d, d)), a, "A")
            assert r.rhs == pytest.approx((1 / d**2) ** (a - 1))
            assert r.lhs == pytest.approx(d * (1 / d) ** a)
    for _ in range(10):
        assert C.sigma_general(random_product((2, 4), rng), 3, "A").satisfied
    for q in np.linspace(0, 1, 6):
        rho = so3_invariant_4x4((0.1, q * 0.9, 0.0))
        assert C.sigma_general(rho, 5, "A", SPIN).rhs <= C.fact4(rho, 5, "A", SPIN).rhs + 1e-14
    with pytest.raises(ValueError):
        C.sigma_general(singlet(), 2)


# --- operator criteria ----------------------------------------------------------------

def test_operator_power_alpha1_is_breuer(rng):
    for _ in range(10):
        rho = random_density((4, 4), rng)
        assert C.operator_power(rho, 1, "A").lhs == pytest.approx(C.breuer_operator_criterion(rho, "A").lhs, abs=1e-12)


def test_oddcut_binomial_cross_check():
    for pqr in [(0.1, 0.2, 0.3), (0.3, 0.3, 0.3)]:
        rho = so3_invariant_4x4(pqr)
        big = np.kron(rho.marginal("A"), np.eye(4))
        for a in (2, 3, 6):
            rhs_op = np.linalg.matrix_power(big, a) - C.oddcut_operator(rho, a, "A", SPIN)
            assert_allclose(rhs_op, C.oddcut_binomial_operator(rho, a, "A", SPIN), atol=1e-13)


def test_operator_criteria_on_commuting_separable(rng):
    for _ in range(10):
        sep = random_separable((4, 4), seed=rng, mixed_marginal="A")
        for a in (1, 2, 3, 6):
            assert C.operator_power(sep, a, "A").satisfied
            assert C.operator_oddcut(sep, a, "A").satisfied


# --- quadratic and Guhne-Lewenstein ----------------------------------------------------

def test_quadratic(rng):
    r = C.quadratic_criterion(singlet())
    assert r.lhs == pytest.approx(-0.5) and not r.satisfied
    for _ in range(20):
        assert C.quadratic_criterion(random_separable((2, 4), seed=rng), "A").satisfied
        assert C.quadratic_criterion(random_separable((4, 2), seed=rng), "B").satisfied
    # any unitary works for the transpose-based form
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    sep = random_separable((2, 3), seed=rng)
    assert C.quadratic_criterion(sep, "A", q).satisfied


def test_guhne_lewenstein():
    r = C.guhne_lewenstein(_mixed((2, 2)), 2)
    assert (r.lhs, r.rhs) == pytest.approx((0.75, 0.5))
    assert r.satisfied
    r = C.guhne_lewenstein(singlet(), 2)
    assert r.lhs == pytest.approx(0.0) and not r.satisfied
    # octahedron vertices are separable and sit on the boundary
    assert C.guhne_lewenstein(bell_diagonal((1, 0, 0)), 3).margin == pytest.approx(0.0, abs=1e-12)


def test_evaluate_registry():
    s = singlet()
    assert C.evaluate("ppt", s).name == "ppt"
    assert C.evaluate("fact4", s).alpha == 3
    assert C.evaluate("fact1_special", s).alpha == 3
    assert C.evaluate("fact4_4k1", s).alpha == 5  # default k=1 reports the exponent 4k+1
    with pytest.raises(KeyError):
        C.evaluate("nope", s)
