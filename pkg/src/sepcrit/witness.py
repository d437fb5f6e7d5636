"""Multi-copy witnesses assembled from map tableaux.

A tableau is a list of rows (mu_i, [Theta_i1, ..., Theta_ia]). The scalar
inequality it encodes is sum_i mu_i Tr prod_j Theta_ij(rho) >= 0, and the
witness is sum_i mu_i (x)_j Theta_ij^dagger applied to the symmetrized cyclic
swap on alpha copies.
"""
from __future__ import annotations

import json
import math
import string
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import DimensionError, as_matrix, subsystem_index
from .maps import (
    OperatorMap,
    canonical_V,
    compose_maps,
    identity_map,
    local_map,
    partial_trace_map,
    scale_map,
    sum_maps,
    tensor_identity_map,
    time_reversal_map,
)
from .states import DensityMatrix

HERMITIAN_TOL = 1e-9


def _cycle_perm(d: int, n: int) -> np.ndarray:
    """For each basis index of the input, the index of its image under the cyclic swap."""
    t = np.arange(d**n).reshape((d,) * n)
    # |i1 i2 ... in> -> |i2 ... in i1>
    return np.moveaxis(t, -1, 0).ravel()


def swap_n(d: int, n: int) -> np.ndarray:
    """Cyclic permutation of n copies normalized so that Tr(V r1 (x) ... (x) rn) = Tr(r1 r2 ... rn)."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if d < 1:
        raise ValueError("d must be positive")
    D = d**n
    v = np.zeros((D, D))
    v[_cycle_perm(d, n), np.arange(D)] = 1.0
    return v


def symmetrized_swap(d: int, n: int) -> np.ndarray:
    v = swap_n(d, n)
    return 0.5 * (v + v.T)


@dataclass
class MapTableau:
    mu: list
    theta: list  # rows of OperatorMap, each of length alpha
    source: str = ""

    def __post_init__(self):
        if len(self.mu) != len(self.theta) or not self.theta:
            raise ValueError("mu and theta must be nonempty and of equal length")
        alpha = len(self.theta[0])
        if alpha < 1 or any(len(row) != alpha for row in self.theta):
            raise ValueError("every row needs the same number of maps")
        d_in = self.theta[0][0].in_dim
        for row in self.theta:
            if any(m.in_dim != d_in for m in row):
                raise DimensionError("all maps must act on the single-copy space")
            if len({m.out_dim for m in row}) != 1:
                raise DimensionError("maps in a row must share an output dimension for the product to exist")

    @property
    def copies(self) -> int:
        return len(self.theta[0])

    @property
    def single_dim(self) -> int:
        return self.theta[0][0].in_dim

    def scalar(self, rho) -> float:
        """sum_i mu_i Tr prod_j Theta_ij(rho), the direct (non-witness) value."""
        m = rho.mat if isinstance(rho, DensityMatrix) else as_matrix(rho)
        total = 0.0 + 0.0j
        for mu, row in zip(self.mu, self.theta):
            prod = None
            for th in row:
                x = th(m)
                prod = x if prod is None else prod @ x
            total += mu * np.trace(prod)
        return float(total.real)

    def operator(self, rho) -> np.ndarray:
        """sum_i mu_i prod_j Theta_ij(rho), the operator the operator inequalities constrain."""
        m = rho.mat if isinstance(rho, DensityMatrix) else as_matrix(rho)
        total = None
        for mu, row in zip(self.mu, self.theta):
            prod = None
            for th in row:
                x = th(m)
                prod = x if prod is None else prod @ x
            total = mu * prod if total is None else total + mu * prod
        return total


@dataclass
class MultiCopyWitness:
    op: np.ndarray
    copies: int
    per_copy_dims: tuple
    source: str = ""

    def to_json(self) -> str:
        return json.dumps(
            {
                "dims": [int(np.prod(self.per_copy_dims))] * self.copies,
                "re": self.op.real.tolist(),
                "im": self.op.imag.tolist(),
                "source": self.source,
                "copies": self.copies,
                "per_copy_dims": list(self.per_copy_dims),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "MultiCopyWitness":
        d = json.loads(text)
        op = np.asarray(d["re"]) + 1j * np.asarray(d["im"])
        return cls(op, int(d["copies"]), tuple(d["per_copy_dims"]), d.get("source", ""))


def apply_slotwise(op: np.ndarray, maps: Sequence[OperatorMap], slot_dims: Sequence[int]) -> np.ndarray:
    """Apply maps[j] to tensor slot j of an operator on (x)_j C^{slot_dims[j]}."""
    n = len(maps)
    dims = list(slot_dims)
    t = np.asarray(op, dtype=complex).reshape(dims + dims)
    for j, m in enumerate(maps):
        if m.in_dim != dims[j]:
            raise DimensionError(f"slot {j}: map expects {m.in_dim}, slot has {dims[j]}")
        t = np.moveaxis(t, (j, n + j), (-2, -1))
        t = m.apply(t)
        dims[j] = m.out_dim
        t = np.moveaxis(t, (-2, -1), (j, n + j))
    D = math.prod(dims)
    return t.reshape(D, D)


def build_witness(tableau: MapTableau, per_copy_dims=None) -> MultiCopyWitness:
    alpha = tableau.copies
    d_in = tableau.single_dim
    W = np.zeros((d_in**alpha, d_in**alpha), dtype=complex)
    for mu, row in zip(tableau.mu, tableau.theta):
        d_out = row[0].out_dim
        vt = symmetrized_swap(d_out, alpha) if alpha > 1 else np.eye(d_out)
        W += mu * apply_slotwise(vt, [m.adjoint() for m in row], [d_out] * alpha)
    if np.max(np.abs(W - W.conj().T), initial=0.0) > HERMITIAN_TOL * max(1.0, np.max(np.abs(W))):
        raise ValueError("assembled witness is not Hermitian; check that the maps preserve Hermiticity")
    W = 0.5 * (W + W.conj().T)
    return MultiCopyWitness(W, alpha, tuple(per_copy_dims or (d_in,)), tableau.source)


def evaluate_witness(w: MultiCopyWitness, rho) -> float:
    """Tr(W rho^(x)alpha), contracted copy by copy without forming rho^(x)alpha."""
    m = rho.mat if isinstance(rho, DensityMatrix) else as_matrix(rho)
    d = m.shape[0]
    n = w.copies
    if w.op.shape != (d**n, d**n):
        raise DimensionError(f"witness acts on {w.op.shape}, state side {d} with {n} copies")
    t = w.op.reshape((d,) * (2 * n))
    letters = string.ascii_letters
    rows, cols = letters[:n], letters[n : 2 * n]
    spec = rows + cols + "," + ",".join(cols[j] + rows[j] for j in range(n)) + "->"
    val = complex(np.einsum(spec, t, *([m] * n), optimize=True))
    if abs(val.imag) > HERMITIAN_TOL * max(1.0, abs(val)):
        raise ValueError(f"witness value has imaginary part {val.imag:.3g}")
    return float(val.real)


# --- multiplication map -------------------------------------------------------

def multiplication_map(n: int, d: int) -> OperatorMap:
    """Linear map with A1 (x) ... (x) An -> A1 A2 ... An, and its dual."""
    if n < 1:
        raise ValueError("n must be positive")
    if n == 1:
        return identity_map(d)
    D = d**n
    letters = string.ascii_letters
    # X[r1..rn, c1..cn] with r1 = k, c_j = r_{j+1}, c_n = m
    idx = letters[: n + 1]  # k, i1, ..., i_{n-1}, m
    rows = idx[0] + idx[1:n]
    cols = idx[1:n] + idx[n]
    spec_apply = "..." + rows + cols + "->..." + idx[0] + idx[n]
    shift = swap_n(d, n)  # sends |x1 x2 .. xn> to |x2 .. xn x1>

    def apply(x):
        lead = x.shape[:-2]
        t = x.reshape(lead + (d,) * (2 * n))
        return np.einsum(spec_apply, t)

    def dual(y):
        # Tr(Y Lambda(X)) = Tr(Z X) with Z = shift (Y (x) I ... I)
        eye = np.eye(d ** (n - 1))
        z = np.einsum("...ab,ij->...aibj", y, eye).reshape(y.shape[:-2] + (D, D))
        return shift @ z

    return OperatorMap(f"mult{n}", apply, dual, D, d)


def _operator_sum_map(tableau: MapTableau) -> OperatorMap:
    """Theta^(alpha) = mult o sum_i mu_i (x)_j Theta_ij, as a map on the alpha-copy space."""
    alpha = tableau.copies
    d_in = tableau.single_dim
    d_out = tableau.theta[0][0].out_dim
    if any(row[0].out_dim != d_out for row in tableau.theta):
        raise DimensionError("operator tableaux need a common output dimension")
    mult = multiplication_map(alpha, d_out)

    def apply(x):
        return sum(mu * mult.apply(apply_slotwise(x, row, [d_in] * alpha)) for mu, row in zip(tableau.mu, tableau.theta))

    def dual(y):
        z = mult.dual(y)
        return sum(mu * apply_slotwise(z, [m.adjoint() for m in row], [d_out] * alpha) for mu, row in zip(tableau.mu, tableau.theta))

    return OperatorMap("Theta", apply, dual, d_in**alpha, d_out)


def witness_from_vector(tableau: MapTableau, psi) -> MultiCopyWitness:
    """Hermitian part of Theta^(alpha)^dagger(|psi><psi|)."""
    psi = np.asarray(psi, dtype=complex).ravel()
    if abs(np.linalg.norm(psi) - 1) > 1e-10:
        raise ValueError("psi must be a unit vector")
    W = _operator_sum_map(tableau).dual(np.outer(psi, psi.conj()))
    W = 0.5 * (W + W.conj().T)
    return MultiCopyWitness(W, tableau.copies, (tableau.single_dim,), tableau.source + ":psi")


# --- tableaux for the criteria --------------------------------------------------

def _u_for(dims, other, u):
    return u if u is not None else canonical_V(dims[other])


def _pieces(dims, side, u):
    dims = tuple(dims)
    k = subsystem_index(side)
    other = 1 - k
    D = dims[0] * dims[1]
    ident = identity_map(D)
    tau = local_map(time_reversal_map(_u_for(dims, other, u)), dims, other)
    ptr = partial_trace_map(dims, k)
    return D, ident, tau, ptr, k


def entropic_tableau(dims, alpha: int, side="A") -> MapTableau:
    dims = tuple(dims)
    k = subsystem_index(side)
    ptr = partial_trace_map(dims, k)
    ident = identity_map(dims[0] * dims[1])
    return MapTableau([1.0, -1.0], [[ptr] * alpha, [ident] * alpha], f"entropic@{alpha}")


def fact3_tableau(dims, alpha: int, side="A", u=None) -> MapTableau:
    D, ident, tau, ptr, _ = _pieces(dims, side, u)
    plus, minus = ident + tau, ident - tau
    rows = [[ptr] * alpha, [ident] + [plus] * (alpha - 1), [ident] + [minus] * (alpha - 1)]
    return MapTableau([1.0, -0.5, -0.5], rows, f"fact3@{alpha}")


def fact1_tableau(d: int, alpha: int, u=None) -> MapTableau:
    t = fact3_tableau((2, d), alpha, "B", u)
    t.source = f"fact1@{alpha}"
    return t


def fact2_tableau(dims, alpha: int, side="A", u=None) -> MapTableau:
    D, ident, tau, ptr, _ = _pieces(dims, side, u)
    return MapTableau([1.0, -1.0], [[ptr] * alpha, [ident] + [ident + tau] * (alpha - 1)], f"fact2@{alpha}")


def fact4_tableau(dims, alpha: int, side="A", u=None) -> MapTableau:
    if alpha % 2 == 0 or alpha < 1:
        raise ValueError("fact4 needs odd alpha")
    D, ident, tau, ptr, _ = _pieces(dims, side, u)
    h = (alpha + 1) // 2
    rows = [[ptr] * alpha, [ident] * h + [tau] * (alpha - h)]
    return MapTableau([1.0, -(2.0 ** (alpha - 1))], rows, f"fact4@{alpha}")


def quadratic_tableau(dims, side="A", u=None) -> MapTableau:
    D, ident, tau, _, _ = _pieces(dims, side, u)
    return MapTableau([1.0], [[ident, tau]], "quadratic")


def _lifted_marginal(dims, k) -> OperatorMap:
    return compose_maps(tensor_identity_map(dims, k), partial_trace_map(dims, k))


def oddcut_tableau(dims, alpha: int, side="A", u=None) -> MapTableau:
    """Rows giving (rho_X (x) I)^a - 1/2 (rho + tau)^a - 1/2 (rho - tau)^a as an operator."""
    D, ident, tau, _, k = _pieces(dims, side, u)
    lift = _lifted_marginal(tuple(dims), k)
    rows = [[lift] * alpha, [ident + tau] * alpha, [ident - tau] * alpha]
    return MapTableau([1.0, -0.5, -0.5], rows, f"oddcut@{alpha}")


def operator_power_tableau(dims, alpha: int, side="A", u=None) -> MapTableau:
    D, ident, tau, _, k = _pieces(dims, side, u)
    lift = _lifted_marginal(tuple(dims), k)
    return MapTableau([1.0, -1.0], [[lift] * alpha, [ident + tau] * alpha], f"operator_power@{alpha}")


TABLEAUX = {
    "entropic": lambda dims, alpha, side="A", u=None: entropic_tableau(dims, alpha, side),
    "fact2": fact2_tableau,
    "fact3": fact3_tableau,
    "fact4": fact4_tableau,
    "quadratic": lambda dims, alpha=2, side="A", u=None: quadratic_tableau(dims, side, u),
    "oddcut": oddcut_tableau,
    "operator_power": operator_power_tableau,
}
