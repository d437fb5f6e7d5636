"""State families used throughout: Bell-diagonal, DiVincenzo, SO(3)-invariant, random."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .linalg import HERM_TOL, as_matrix, check_dims, kron_all, partial_trace, subsystem_index

STATE_TOL = 1e-10


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, trace-one, PSD matrix tagged with its tensor factor dimensions."""

    mat: np.ndarray
    dims: tuple

    def __post_init__(self):
        m = as_matrix(self.mat)
        dims = check_dims(m, self.dims)
        if np.max(np.abs(m - m.conj().T)) > HERM_TOL:
            raise InvalidStateError("not Hermitian")
        if abs(np.trace(m) - 1) > STATE_TOL:
            raise InvalidStateError(f"trace {np.trace(m).real:.3g} != 1")
        if np.linalg.eigvalsh(m)[0] < -STATE_TOL:
            raise InvalidStateError("not positive semidefinite")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def marginal(self, side) -> np.ndarray:
        return partial_trace(self.mat, self.dims, side)

    def to_json(self) -> str:
        return state_to_json(self)


def _as_state(rho, dims=None) -> DensityMatrix:
    if isinstance(rho, DensityMatrix):
        return rho
    m = as_matrix(rho)
    if dims is None:
        raise ValueError("dims are required for a bare matrix")
    return DensityMatrix(m, tuple(dims))


def state_to_json(rho: DensityMatrix) -> str:
    return json.dumps({"dims": list(rho.dims), "re": rho.mat.real.tolist(), "im": rho.mat.imag.tolist()})


def state_from_json(text: str) -> DensityMatrix:
    d = json.loads(text)
    m = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d.get("im", np.zeros_like(d["re"])), dtype=float)
    return DensityMatrix(m, tuple(d["dims"]))


# --- Pauli and Bell ---------------------------------------------------------

SIGMA = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

_s = 1 / math.sqrt(2)
PSI_PLUS = np.array([0, _s, _s, 0], dtype=complex)
PSI_MINUS = np.array([0, _s, -_s, 0], dtype=complex)
PHI_PLUS = np.array([_s, 0, 0, _s], dtype=complex)
PHI_MINUS = np.array([_s, 0, 0, -_s], dtype=complex)
# order used by bell_mixture and the Bell-basis measurement
BELL_BASIS = (PSI_PLUS, PSI_MINUS, PHI_PLUS, PHI_MINUS)


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def pure_state(v, dims) -> DensityMatrix:
    v = np.asarray(v, dtype=complex)
    return DensityMatrix(projector(v / np.linalg.norm(v)), tuple(dims))


def singlet() -> DensityMatrix:
    return DensityMatrix(projector(PSI_MINUS), (2, 2))


class BellDiagonalParams(NamedTuple):
    t1: float
    t2: float
    t3: float

    def bell_weights(self) -> np.ndarray:
        """Weights on (psi+, psi-, phi+, phi-); the state is valid iff all are >= 0."""
        t = np.array(self, dtype=float)
        return 0.25 * (1 + np.array([_SIGNATURE[k] @ t for k in range(4)]))

    def is_valid(self, tol: float = 1e-12) -> bool:
        return bool(np.all(self.bell_weights() >= -tol))


# <sigma_i (x) sigma_i> for psi+, psi-, phi+, phi-
_SIGNATURE = np.array([[1, 1, -1], [-1, -1, -1], [1, -1, 1], [-1, 1, 1]], dtype=float)


class DivParams(NamedTuple):
    b: float
    c: float

    def is_valid(self, tol: float = 1e-12) -> bool:
        return self.b >= -tol and self.c >= -tol and self.b + self.c <= 1 + tol


class So3Params(NamedTuple):
    p: float
    q: float
    r: float

    def is_valid(self, tol: float = 1e-12) -> bool:
        return min(self.p, self.q, self.r) >= -tol and self.p + self.q + self.r <= 1 + tol


def _clip_state(m: np.ndarray, dims) -> DensityMatrix:
    return DensityMatrix((m + m.conj().T) / 2, dims)


def bell_diagonal(params) -> DensityMatrix:
    t = BellDiagonalParams(*params)
    if not t.is_valid():
        raise InvalidStateError(f"{tuple(t)} lies outside the tetrahedron")
    m = np.eye(4, dtype=complex)
    for i in range(3):
        m = m + t[i] * np.kron(SIGMA[i + 1], SIGMA[i + 1])
    return _clip_state(m / 4, (2, 2))


def bell_mixture(p: float, q: float, r: float) -> DensityMatrix:
    w = np.array([p, q, r, 1 - p - q - r])
    if np.any(w < -1e-12):
        raise InvalidStateError(f"weights {w} are not a distribution")
    m = sum(wk * projector(v) for wk, v in zip(w, BELL_BASIS))
    return _clip_state(m, (2, 2))


def bell_mixture_to_t(p: float, q: float, r: float) -> BellDiagonalParams:
    w = np.array([p, q, r, 1 - p - q - r])
    return BellDiagonalParams(*(w @ _SIGNATURE))


def max_entangled(d: int) -> DensityMatrix:
    if d < 2:
        raise ValueError("d must be at least 2")
    v = np.zeros(d * d, dtype=complex)
    v[[i * d + i for i in range(d)]] = 1 / math.sqrt(d)
    return DensityMatrix(projector(v), (d, d))


def divincenzo(params) -> DensityMatrix:
    b, c = DivParams(*params)
    if not DivParams(b, c).is_valid():
        raise InvalidStateError(f"(b, c) = ({b}, {c}) is not a state")
    a = (1 - b - c) / 2
    m = a * (projector([1, 0, 0, 0]) + projector([0, 0, 0, 1]))
    m = m + b * projector(PSI_MINUS) + c * projector(PSI_PLUS)
    return _clip_state(m, (2, 2))


# --- angular momentum -------------------------------------------------------

def _twice(j) -> int:
    t = float(j) * 2
    if abs(t - round(t)) > 1e-9:
        raise ValueError(f"{j} is not a half-integer")
    return int(round(t))


def clebsch_gordan(j1, m1, j2, m2, J, M) -> float:
    """<j1 m1; j2 m2 | J M> in the Condon-Shortley convention (Racah's formula)."""
    tj1, tm1, tj2, tm2, tJ, tM = (_twice(x) for x in (j1, m1, j2, m2, J, M))
    if min(tj1, tj2, tJ) < 0:
        raise ValueError("negative angular momentum")
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tJ, tM)):
        if abs(tm) > tj or (tj - tm) % 2:
            raise ValueError(f"projection {tm / 2} incompatible with j = {tj / 2}")
    if not (abs(tj1 - tj2) <= tJ <= tj1 + tj2) or (tj1 + tj2 + tJ) % 2:
        raise ValueError("triangle rule violated")
    if tM != tm1 + tm2:
        return 0.0
    f = math.factorial
    # all the combinations below are integers once the doubled values are halved
    a = (tj1 + tj2 - tJ) // 2
    b = (tj1 - tm1) // 2
    c = (tj2 + tm2) // 2
    e = (tJ - tj2 + tm1) // 2
    g = (tJ - tj1 - tm2) // 2
    pref = Fraction(
        (tJ + 1) * f((tJ + tj1 - tj2) // 2) * f((tJ - tj1 + tj2) // 2) * f(a),
        f((tj1 + tj2 + tJ) // 2 + 1),
    )
    pref *= (
        f((tJ + tM) // 2) * f((tJ - tM) // 2) * f((tj1 - tm1) // 2) * f((tj1 + tm1) // 2)
        * f((tj2 - tm2) // 2) * f((tj2 + tm2) // 2)
    )
    total = Fraction(0)
    for k in range(max(0, -e, -g), min(a, b, c) + 1):
        total += Fraction((-1) ** k, f(k) * f(a - k) * f(b - k) * f(c - k) * f(e + k) * f(g + k))
    if total == 0:
        return 0.0
    sign = 1.0 if total > 0 else -1.0
    return sign * math.sqrt(pref * total * total)


@lru_cache(maxsize=None)
def _projector_cached(tj1: int, tj2: int, tJ: int) -> np.ndarray:
    d1, d2 = tj1 + 1, tj2 + 1
    p = np.zeros((d1 * d2, d1 * d2))
    # basis index k <-> m = j - k (descending m)
    for tM in range(-tJ, tJ + 1, 2):
        v = np.zeros(d1 * d2)
        for k1 in range(d1):
            tm1 = tj1 - 2 * k1
            tm2 = tM - tm1
            if abs(tm2) > tj2:
                continue
            k2 = (tj2 - tm2) // 2
            v[k1 * d2 + k2] = clebsch_gordan(tj1 / 2, tm1 / 2, tj2 / 2, tm2 / 2, tJ / 2, tM / 2)
        p += np.outer(v, v)
    p.setflags(write=False)
    return p


def angular_momentum_projector(j1, j2, J, normalized: bool = True) -> np.ndarray:
    """Projector onto total spin J in spin-j1 (x) spin-j2; trace 1 when normalized.

    Local basis vectors are ordered by descending magnetic number, m = j, j-1, ..., -j.
    """
    tj1, tj2, tJ = _twice(j1), _twice(j2), _twice(J)
    if not (abs(tj1 - tj2) <= tJ <= tj1 + tj2) or (tj1 + tj2 + tJ) % 2:
        raise ValueError("triangle rule violated")
    p = _projector_cached(tj1, tj2, tJ).astype(complex)
    return p / (tJ + 1) if normalized else p


def so3_projectors() -> list:
    """Normalized P_0..P_3 for two spin-3/2 particles."""
    return [angular_momentum_projector(1.5, 1.5, J) for J in range(4)]


def so3_invariant_4x4(params) -> DensityMatrix:
    p, q, r = So3Params(*params)
    if not So3Params(p, q, r).is_valid():
        raise InvalidStateError(f"(p, q, r) = ({p}, {q}, {r}) is not a state")
    P = so3_projectors()
    m = p * P[0] + q * P[1] + r * P[2] + (1 - p - q - r) * P[3]
    return _clip_state(m, (4, 4))


def so3_twirl(rho) -> DensityMatrix:
    """Project a 4x4 state onto the SO(3)-invariant family (separability preserving)."""
    m = rho.mat if isinstance(rho, DensityMatrix) else as_matrix(rho)
    w = [float(np.real(np.trace(angular_momentum_projector(1.5, 1.5, J, normalized=False) @ m))) for J in range(4)]
    return so3_invariant_4x4(w[:3])


# --- random states ----------------------------------------------------------

def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _ginibre(rng, d, k) -> np.ndarray:
    return rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))


def random_density(dims, seed=None, rank: int | None = None) -> DensityMatrix:
    rng = _rng(seed)
    dims = tuple(dims)
    d = math.prod(dims)
    g = _ginibre(rng, d, d if rank is None else rank)
    m = g @ g.conj().T
    return _clip_state(m / np.trace(m).real, dims)


def random_unitary(d: int, seed=None) -> np.ndarray:
    q, r = np.linalg.qr(_ginibre(_rng(seed), d, d))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def weyl_operators(d: int) -> list:
    """The d^2 clock-and-shift unitaries; averaging conjugations by them is fully depolarizing."""
    omega = np.exp(2j * np.pi / d)
    shift = np.roll(np.eye(d), 1, axis=0)
    clock = np.diag(omega ** np.arange(d))
    return [np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b) for a in range(d) for b in range(d)]


def random_separable(dims, n_terms: int | None = None, seed=None, mixed_marginal=None) -> DensityMatrix:
    """Convex mixture of random product states.

    With ``mixed_marginal`` set to a side, each term is spread over local
    unitaries that act as a Weyl twirl on that side and random unitaries on
    the other, so the result stays separable but has a maximally mixed
    marginal on the chosen side.
    """
    rng = _rng(seed)
    dA, dB = dims
    n_terms = n_terms or 4 * dA * dB
    w = rng.dirichlet(np.ones(n_terms))
    m = np.zeros((dA * dB, dA * dB), dtype=complex)
    for wi in w:
        ra = random_density((dA,), rng, rank=int(rng.integers(1, dA + 1))).mat
        rb = random_density((dB,), rng, rank=int(rng.integers(1, dB + 1))).mat
        m += wi * np.kron(ra, rb)
    if mixed_marginal is not None:
        side = subsystem_index(mixed_marginal)
        d_twirl, d_other = (dA, dB) if side == 0 else (dB, dA)
        ops = weyl_operators(d_twirl)
        acc = np.zeros_like(m)
        for W in ops:
            U = random_unitary(d_other, rng)
            L = np.kron(W, U) if side == 0 else np.kron(U, W)
            acc += L @ m @ L.conj().T
        m = acc / len(ops)
    return _clip_state(m, (dA, dB))


def random_product(dims, seed=None) -> DensityMatrix:
    rng = _rng(seed)
    return _clip_state(kron_all([random_density((d,), rng).mat for d in dims]), tuple(dims))
