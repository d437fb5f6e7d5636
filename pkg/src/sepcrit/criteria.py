"""Separability criteria built from power traces, the partial time reversal, and operator orderings.

Conventions shared by every bipartite criterion here: ``side`` names the
subsystem whose reduced state appears on the left-hand side, and the partial
time reversal (or transpose) acts on the *other* factor. A report is
satisfied when ``margin >= -tol``; ``tol`` is the base tolerance scaled down
by the natural magnitude of the compared quantities (never scaled up).
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .linalg import (
    DimensionError,
    commutator_fro,
    eigvalsh,
    mat_abs,
    mat_pow_int,
    min_eig,
    operator_norm,
    partial_trace,
    partial_transpose,
    subsystem_index,
)
from .maps import canonical_V, partial_time_reversal
from .states import BELL_BASIS, DensityMatrix

DEFAULT_TOL = 1e-9
ASSUMPTION_TOL = 1e-8
LAMBDA_THRESHOLD = 1e-12
# fixed irrational mixing weight used to split degeneracies of a commuting pair
_GENERIC_C = 1 / math.sqrt(7)


@dataclass(frozen=True)
class CriterionReport:
    name: str
    alpha: object  # int, float, math.inf, or None
    lhs: float
    rhs: float
    margin: float
    satisfied: bool
    assumption_ok: Optional[bool]
    tol: float

    def to_dict(self) -> dict:
        d = asdict(self)
        if isinstance(self.alpha, float) and math.isinf(self.alpha):
            d["alpha"] = "inf"
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _report(name, alpha, lhs, rhs, scale, tol, assumption_ok=None) -> CriterionReport:
    lhs, rhs = float(lhs), float(rhs)
    margin = lhs - rhs
    eff = tol * min(1.0, abs(float(scale)))
    if assumption_ok is not None:
        assumption_ok = bool(assumption_ok)
    return CriterionReport(name, alpha, lhs, rhs, margin, bool(margin >= -eff), assumption_ok, eff)


def _ctx(rho: DensityMatrix, side, u):
    """(matrix, dims, index of lhs side, index of the time-reversed side, tau(rho))."""
    if len(rho.dims) != 2:
        raise DimensionError("bipartite state required")
    k = subsystem_index(side)
    other = 1 - k
    d_other = rho.dims[other]
    if d_other % 2:
        raise DimensionError(f"the time-reversed factor has odd dimension {d_other}")
    U = u if u is not None else canonical_V(d_other)
    tau = partial_time_reversal(rho.mat, other, U, rho.dims)
    return rho.mat, rho.dims, k, other, tau


def _lift(marg: np.ndarray, dims, k: int) -> np.ndarray:
    """Reduced operator on factor k embedded as X (x) I."""
    dA, dB = dims
    return np.kron(marg, np.eye(dB)) if k == 0 else np.kron(np.eye(dA), marg)


def _commutes(a, b) -> bool:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return True
    return commutator_fro(a, b) <= ASSUMPTION_TOL * na * nb


def _tr_real(x) -> float:
    return float(np.real(np.trace(x)))


def _power_trace(m: np.ndarray, alpha) -> float:
    """Tr m^alpha for PSD m via its spectrum (tiny negative eigenvalues clipped)."""
    w = np.clip(eigvalsh(m), 0.0, None)
    if alpha == 0:
        return float(np.count_nonzero(w > 1e-10))
    return float(np.sum(w**alpha))


# --- scalar helpers -----------------------------------------------------------

def q_term(rho: DensityMatrix, exponents: Sequence[int], subsystem="A", u=None) -> float:
    """Tr[rho^l1 (rho^tau)^k1 rho^l2 (rho^tau)^k2 ...] with tau on ``subsystem``.

    The trace is real whenever the word equals its reversal up to cyclic
    shifts; otherwise a significant imaginary part raises ValueError.
    """
    exps = [int(e) for e in exponents]
    if len(exps) % 2 or any(e < 0 for e in exps) or not any(exps):
        raise ValueError(f"bad exponent list {exponents}")
    k = subsystem_index(subsystem)
    tau = partial_time_reversal(rho.mat, k, u, rho.dims)
    prod = np.eye(rho.dim, dtype=complex)
    for i, e in enumerate(exps):
        if e:
            prod = prod @ mat_pow_int(rho.mat if i % 2 == 0 else tau, e)
    t = np.trace(prod)
    if abs(t.imag) > 1e-8 * max(1.0, abs(t)):
        raise ValueError(f"trace has imaginary part {t.imag:.3g}; the word is not reversal-symmetric")
    return float(t.real)


def renyi(rho, alpha: float) -> float:
    m = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    w = np.clip(eigvalsh(m), 0.0, None)
    if math.isinf(alpha):
        return -math.log(float(w.max()))
    if alpha == 0:
        return math.log(np.count_nonzero(w > 1e-10))
    if alpha == 1:
        w = w[w > 0]
        return float(-np.sum(w * np.log(w)))
    return math.log(float(np.sum(w**alpha))) / (1 - alpha)


def tsallis(probs, alpha: float) -> float:
    p = np.asarray(probs, dtype=float)
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if alpha == 1:
        p = p[p > 0]
        return float(-np.sum(p * np.log(p)))
    return float((1 - np.sum(p**alpha)) / (alpha - 1))


# --- entropic family ----------------------------------------------------------

def entropic_criterion(rho: DensityMatrix, alpha=2, side="A", tol: float = DEFAULT_TOL) -> CriterionReport:
    """Tr rho_side^alpha >= Tr rho^alpha (alpha > 1), norms at alpha = inf, reversed for alpha < 1."""
    marg = rho.marginal(side)
    if math.isinf(alpha):
        lhs, rhs = operator_norm(marg), operator_norm(rho.mat)
    elif alpha == 1:
        # von Neumann: S(rho) >= S(rho_side)
        lhs, rhs = renyi(rho, 1), renyi(marg, 1)
    elif alpha > 1:
        lhs, rhs = _power_trace(marg, alpha), _power_trace(rho.mat, alpha)
    else:
        lhs, rhs = _power_trace(rho.mat, alpha), _power_trace(marg, alpha)
    return _report("entropic", alpha, lhs, rhs, max(abs(lhs), abs(rhs)), tol)


def ppt_criterion(rho: DensityMatrix, tol: float = DEFAULT_TOL) -> CriterionReport:
    lhs = min_eig(partial_transpose(rho.mat, rho.dims, 1))
    return _report("ppt", None, lhs, 0.0, 1.0, tol)


def reduction_criterion(rho: DensityMatrix, side="A", tol: float = DEFAULT_TOL) -> CriterionReport:
    k = subsystem_index(side)
    big = _lift(rho.marginal(k), rho.dims, k)
    lhs = min_eig(big - rho.mat)
    return _report("reduction", None, lhs, 0.0, operator_norm(big), tol)


def breuer_operator_criterion(rho: DensityMatrix, side="A", u=None, tol: float = DEFAULT_TOL) -> CriterionReport:
    m, dims, k, _, tau = _ctx(rho, side, u)
    big = _lift(rho.marginal(k), dims, k)
    lhs = min_eig(big - m - tau)
    return _report("breuer", None, lhs, 0.0, operator_norm(big), tol)


def quadratic_criterion(rho: DensityMatrix, side="A", u=None, tol: float = DEFAULT_TOL) -> CriterionReport:
    """Tr(rho rho^tau) >= 0 with tau on the factor opposite ``side``.

    ``u`` may be any unitary on that factor (the statement needs only
    positivity of rho^tau on separable states, which holds for every U).
    """
    m, dims = rho.mat, rho.dims
    other = 1 - subsystem_index(side)
    if u is None:
        tau = _ctx(rho, side, None)[4]
    else:
        U = getattr(u, "u", u)
        L = np.kron(U, np.eye(dims[1])) if other == 0 else np.kron(np.eye(dims[0]), U)
        tau = L @ partial_transpose(m, dims, other) @ L.conj().T
    lhs = float(np.real(np.einsum("ij,ji->", m, tau)))
    return _report("quadratic", 2, lhs, 0.0, _tr_real(m @ m), tol)


def guhne_lewenstein(rho: DensityMatrix, alpha=2, tol: float = DEFAULT_TOL) -> CriterionReport:
    """Tsallis entropy of the Bell-basis outcomes against (1 - 2^(1-alpha)) / (alpha - 1)."""
    if rho.dims != (2, 2):
        raise DimensionError("two-qubit state required")
    p = np.array([np.real(v.conj() @ rho.mat @ v) for v in BELL_BASIS])
    p = np.clip(p, 0.0, None)
    lhs = tsallis(p, alpha)
    rhs = math.log(2) if alpha == 1 else (1 - 2 ** (1 - alpha)) / (alpha - 1)
    return _report("lew", alpha, lhs, rhs, max(abs(lhs), abs(rhs)), tol)


# --- Facts 1-3 -----------------------------------------------------------------

def _symmetric_rhs(m, tau, alpha: int) -> float:
    """1/2 [Tr m (m+tau)^(alpha-1) + Tr m (m-tau)^(alpha-1)]."""
    plus = mat_pow_int(m + tau, alpha - 1)
    minus = mat_pow_int(m - tau, alpha - 1)
    return 0.5 * (_tr_real(m @ plus) + _tr_real(m @ minus))


def _check_int_alpha(alpha, lo=1):
    if int(alpha) != alpha or alpha < lo:
        raise ValueError(f"alpha must be an integer >= {lo}, got {alpha}")
    return int(alpha)


def fact3(rho: DensityMatrix, alpha: int, side="A", u=None, tol: float = DEFAULT_TOL) -> CriterionReport:
    """Tr rho_X^a >= 1/2 [Tr rho (rho+tau)^(a-1) + Tr rho (rho-tau)^(a-1)], given [rho, rho_X (x) I] = 0."""
    alpha = _check_int_alpha(alpha)
    m, dims, k, _, tau = _ctx(rho, side, u)
    marg = rho.marginal(k)
    lhs = _tr_real(mat_pow_int(marg, alpha))
    rhs = _symmetric_rhs(m, tau, alpha)
    ok = _commutes(m, _lift(marg, dims, k))
    return _report("fact3", alpha, lhs, rhs, max(abs(lhs), abs(rhs)), tol, ok)


def fact1(rho: DensityMatrix, alpha: int, u=None, tol: float = DEFAULT_TOL) -> CriterionReport:
    """Qubit-qudit form: Tr rho_B^a against the even-power part of rho (rho + rho^tau_A)^(a-1)."""
    if len(rho.dims) != 2 or rho.dims[0] != 2:
        raise DimensionError(f"fact1 needs a 2 x d state, got dims {rho.dims}")
    r = fact3(rho, alpha, "B", u, tol)
    return CriterionReport("fact1", *tuple(asdict(r).values())[1:])


def fact1_binomial_rhs(rho: DensityMatrix, alpha: int, u=None) -> float:
    """sum_k C(a-1, 2k) Tr rho^(a-2k) (rho^tau_A)^(2k); equals the fact1 rhs when rho and rho^tau commute."""
    alpha = _check_int_alpha(alpha)
    tau = partial_time_reversal(rho.mat, 0, u, rho.dims)
    total = 0.0
    for k in range(0, (alpha - 1) // 2 + 1):
        total += math.comb(alpha - 1, 2 * k) * _tr_real(mat_pow_int(rho.mat, alpha - 2 * k) @ mat_pow_int(tau, 2 * k))
    return total


def fact1_special(rho: DensityMatrix, alpha: int, u=None, tol: float = DEFAULT_TOL) -> CriterionReport:
    """Unconditional 2 x d inequalities for alpha in {3, 4, 5} (only terms with even tau-count kept)."""
    if len(rho.dims) != 2 or rho.dims[0] != 2:
        raise DimensionError(f"fact1_special needs a 2 x d state, got dims {rho.dims}")
    if alpha not in (3, 4, 5):
        raise ValueError("alpha must be 3, 4 or 5")
    q = lambda *e: q_term(rho, e, 0, u)
    if alpha == 3:
        rhs = q(3, 0) + q(1, 2)
    elif alpha == 4:
        rhs = q(4, 0) + 2 * q(2, 2) + q(1, 1, 1, 1)
    else:
        rhs = q(5, 0) + 3 * q(3, 2) + 3 * q(2, 1, 1, 1) + q(1, 4)
    lhs = _tr_real(mat_pow_int(rho.marginal(1), alpha))
    return _report("fact1_special", alpha, lhs, rhs, max(abs(lhs), abs(rhs)), tol)


def _fact2_impl(name, rho, alpha, side, u, tol, module: bool) -> CriterionReport:
    alpha = _check_int_alpha(alpha)
    m, dims, k, _, tau = _ctx(rho, side, u)
    marg = rho.marginal(k)
    t = mat_abs(tau) if module else tau
    lhs = _tr_real(mat_pow_int(marg, alpha))
    rhs = _tr_real(m @ mat_pow_int(m + t, alpha - 1))
    ok = _commutes(m, _lift(marg, dims, k))
    return _report(name, alpha, lhs, rhs, max(abs(lhs), abs(rhs)), tol, ok)


def fact2(rho: DensityMatrix, alpha: int, side="A", u=None, tol: float = DEFAULT_TOL) -> CriterionReport:
    """Tr rho_X^a >= Tr rho (rho + rho^tau)^(a-1), given [rho, rho_X (x) I] = 0."""
    return _fact2_impl("fact2", rho, alpha, side, u, tol, False)


def fact2_module(rho: DensityMatrix, alpha: int, side="A", u=None, tol: float = DEFAULT_TOL) -> CriterionReport:
    """As fact2 with rho^tau replaced by |rho^tau|."""
    return _fact2_impl("fact2_module", rho, alpha, side, u, tol, True)


def joint_spectrum(a: np.ndarray, b: np.ndarray):
    """Eigenvalue pairs (lambda_i, mu_i) of two commuting Hermitian matrices and the residual.

    The residual is max(||a - V diag(lambda) V^+||, ||b - V diag(mu) V^+||) in
    Frobenius norm; it is small only if the pair really commutes.
    """
    _, v = np.linalg.eigh(a + _GENERIC_C * b)
    lam = np.real(np.einsum("ji,jk,ki->i", v.conj(), a, v))
    mu = np.real(np.einsum("ji,jk,ki->i", v.conj(), b, v))
    res = max(
        np.linalg.norm(a - (v * lam) @ v.conj().T),
        np.linalg.norm(b - (v * mu) @ v.conj().T),
    )
    return lam, mu, float(res)


def _limit_impl(name, rho, side, u, tol) -> CriterionReport:
    m, dims, k, _, tau = _ctx(rho, side, u)
    marg = rho.marginal(k)
    lam, mu, res = joint_spectrum(m, tau)
    keep = lam > LAMBDA_THRESHOLD
    rhs = float(np.max(lam[keep] + np.abs(mu[keep]))) if np.any(keep) else 0.0
    lhs = operator_norm(marg)
    ok = _commutes(m, _lift(marg, dims, k)) and res <= ASSUMPTION_TOL * max(1.0, np.linalg.norm(m))
    return _report(name, math.inf, lhs, rhs, max(abs(lhs), abs(rhs)), tol, ok)


def fact3_limit(rho: DensityMatrix, side="A", u=None, tol: float = DEFAULT_TOL) -> CriterionReport:
    """alpha -> inf of fact3: ||rho_X|| >= max over lambda_i > 0 of max(|lambda_i + mu_i|, |lambda_i - mu_i|).

    (lambda_i, mu_i) run over a joint eigenbasis of rho and rho^tau.
    """
    return _limit_impl("fact3_limit", rho, side, u, tol)


def fact2_module_limit(rho: DensityMatrix, side="A", u=None, tol: float = DEFAULT_TOL) -> CriterionReport:
    """alpha -> inf of fact2_module: ||rho_X|| >= max over lambda_i > 0 of lambda_i + |mu_i|."""
    return _limit_impl("fact2_module_limit", rho, side, u, tol)


# --- Fact 4 family ------------------------------------------------------------

def _check_odd(alpha) -> int:
    alpha = _check_int_alpha(alpha)
    if alpha % 2 == 0:
        raise ValueError(f"alpha must be odd, got {alpha}")
    return alpha


def _fact4_impl(name, rho, alpha, side, u, tol) -> CriterionReport:
    m, dims, k, _, tau = _ctx(rho, side, u)
    marg = rho.marginal(k)
    lhs = _tr_real(mat_pow_int(marg, alpha))
    prod = mat_pow_int(m, (alpha + 1) // 2) @ mat_pow_int(tau, (alpha - 1) // 2)
    rhs = 2.0 ** (alpha - 1) * _tr_real(prod)
    ok = _commutes(m, tau)
    return _report(name, alpha, lhs, rhs, max(abs(lhs), abs(rhs)), tol, ok)


def fact4(rho: DensityMatrix, alpha: int, side="A", u=None, tol: float = DEFAULT_TOL) -> CriterionReport:
    """Tr rho_X^a >= 2^(a-1) Tr rho^((a+1)/2) (rho^tau)^((a-1)/2) for odd a, given [rho, rho^tau] = 0."""
    return _fact4_impl("fact4", rho, _check_odd(alpha), side, u, tol)


def fact4_4k1(rho: DensityMatrix, k: int, side="A", u=None, tol: float = DEFAULT_TOL) -> CriterionReport:
    """The alpha = 4k+1 case: Tr rho_X^(4k+1) >= 2^(4k) Tr rho^(2k+1) (rho^tau)^(2k)."""
    if int(k) != k or k < 0:
        raise ValueError("k must be a nonnegative integer")
    return _fact4_impl("fact4_4k1", rho, 4 * int(k) + 1, side, u, tol)


def fact4_limit(rho: DensityMatrix, side="A", u=None, tol: float = DEFAULT_TOL) -> CriterionReport:
    """||rho_X|| >= 2 sqrt(||rho rho^tau||)."""
    m, dims, k, _, tau = _ctx(rho, side, u)
    lhs = operator_norm(rho.marginal(k))
    rhs = 2 * math.sqrt(float(np.linalg.norm(m @ tau, 2)))
    return _report("fact4_limit", math.inf, lhs, rhs, max(abs(lhs), abs(rhs)), tol, _commutes(m, tau))


def sigma_general(rho: DensityMatrix, alpha: int, side="A", u=None, tol: float = DEFAULT_TOL) -> CriterionReport:
    """Commutation-free bound: rhs = sum_i s_i^((a-1)/2) l_i^((a+1)/2).

    s are the singular values of rho^tau ascending, l the eigenvalues of rho
    descending (opposite orderings pair the largest with the smallest).
    """
    alpha = _check_odd(alpha)
    m, dims, k, _, tau = _ctx(rho, side, u)
    s = np.sort(np.abs(eigvalsh(tau)))
    lam = np.sort(np.clip(eigvalsh(m), 0.0, None))[::-1]
    rhs = float(np.sum(s ** ((alpha - 1) // 2) * lam ** ((alpha + 1) // 2)))
    lhs = _tr_real(mat_pow_int(rho.marginal(k), alpha))
    return _report("sigma_general", alpha, lhs, rhs, max(abs(lhs), abs(rhs)), tol)


# --- operator inequalities ----------------------------------------------------

def operator_power(rho: DensityMatrix, alpha: int, side="A", u=None, tol: float = DEFAULT_TOL) -> CriterionReport:
    """(rho_X (x) I)^a - (rho + rho^tau)^a >= 0, given [rho, rho_X (x) I] = 0."""
    alpha = _check_int_alpha(alpha)
    m, dims, k, _, tau = _ctx(rho, side, u)
    big = _lift(rho.marginal(k), dims, k)
    lhs_op = mat_pow_int(big, alpha)
    lhs = min_eig(lhs_op - mat_pow_int(m + tau, alpha))
    return _report("operator_power", alpha, lhs, 0.0, operator_norm(lhs_op), tol, _commutes(m, big))


def oddcut_operator(rho: DensityMatrix, alpha: int, side="A", u=None) -> np.ndarray:
    """(rho_X (x) I)^a - 1/2 [(rho + rho^tau)^a + (rho - rho^tau)^a]."""
    m, dims, k, _, tau = _ctx(rho, side, u)
    big = _lift(rho.marginal(k), dims, k)
    return mat_pow_int(big, alpha) - 0.5 * (mat_pow_int(m + tau, alpha) + mat_pow_int(m - tau, alpha))


def operator_oddcut(rho: DensityMatrix, alpha: int, side="A", u=None, tol: float = DEFAULT_TOL) -> CriterionReport:
    """Operator inequality with the odd powers of rho^tau removed, given [rho, rho_X (x) I] = 0."""
    alpha = _check_int_alpha(alpha)
    m, dims, k, _, _ = _ctx(rho, side, u)
    big = _lift(rho.marginal(k), dims, k)
    lhs = min_eig(oddcut_operator(rho, alpha, side, u))
    return _report("oddcut", alpha, lhs, 0.0, operator_norm(big) ** alpha, tol, _commutes(m, big))


def oddcut_binomial_operator(rho: DensityMatrix, alpha: int, side="A", u=None) -> np.ndarray:
    """sum_k C(a, 2k) rho^(a-2k) (rho^tau)^(2k); equals the oddcut rhs operator when rho, rho^tau commute."""
    m, dims, k, _, tau = _ctx(rho, side, u)
    out = np.zeros_like(m)
    for j in range(alpha // 2 + 1):
        out = out + math.comb(alpha, 2 * j) * mat_pow_int(m, alpha - 2 * j) @ mat_pow_int(tau, 2 * j)
    return out


# --- registry -----------------------------------------------------------------

def _wrap(fn, takes_alpha=True, takes_side=True, takes_u=True):
    def call(rho, alpha=None, side="A", u=None, tol=DEFAULT_TOL):
        kw = {"tol": tol}
        if takes_side:
            kw["side"] = side
        if takes_u:
            kw["u"] = u
        if takes_alpha:
            return fn(rho, alpha, **kw)
        return fn(rho, **kw)

    return call


REGISTRY: dict[str, Callable[..., CriterionReport]] = {
    "entropic": _wrap(entropic_criterion, takes_u=False),
    "ppt": _wrap(ppt_criterion, takes_alpha=False, takes_side=False, takes_u=False),
    "reduction": _wrap(reduction_criterion, takes_alpha=False, takes_u=False),
    "breuer": _wrap(breuer_operator_criterion, takes_alpha=False),
    "quadratic": _wrap(quadratic_criterion, takes_alpha=False),
    "lew": _wrap(guhne_lewenstein, takes_side=False, takes_u=False),
    "fact1": _wrap(fact1, takes_side=False),
    "fact1_special": _wrap(fact1_special, takes_side=False),
    "fact2": _wrap(fact2),
    "fact2_module": _wrap(fact2_module),
    "fact2_module_limit": _wrap(fact2_module_limit, takes_alpha=False),
    "fact3": _wrap(fact3),
    "fact3_limit": _wrap(fact3_limit, takes_alpha=False),
    "fact4": _wrap(fact4),
    "fact4_4k1": _wrap(fact4_4k1),
    "fact4_limit": _wrap(fact4_limit, takes_alpha=False),
    "sigma_general": _wrap(sigma_general),
    "operator_power": _wrap(operator_power),
    "oddcut": _wrap(operator_oddcut),
}

# criteria whose number does not depend on alpha
ALPHA_FREE = {"ppt", "reduction", "breuer", "quadratic", "fact3_limit", "fact2_module_limit", "fact4_limit"}


def evaluate(name: str, rho: DensityMatrix, alpha=None, side="A", u=None, tol: float = DEFAULT_TOL) -> CriterionReport:
    if name not in REGISTRY:
        raise KeyError(f"unknown criterion {name!r}; known: {sorted(REGISTRY)}")
    if name not in ALPHA_FREE and alpha is None:
        alpha = 2 if name not in ("fact4", "sigma_general") else 3
        if name == "fact4_4k1":
            alpha = 1
        if name == "fact1_special":
            alpha = 3
    return REGISTRY[name](rho, alpha, side, u, tol)
