"""Partial time reversal, reduction and Breuer-Hall maps, and maps carrying explicit duals.

Every map acts on the last two axes of its argument, so a stack of matrices
can be pushed through in one call. That is what lets local maps act on a
single tensor slot of a large operator without loops.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .linalg import DimensionError, as_matrix, partial_transpose, subsystem_index
from .states import SIGMA, DensityMatrix

UNITARY_TOL = 1e-10


def _T(x: np.ndarray) -> np.ndarray:
    return np.swapaxes(x, -1, -2)


def _tr(x: np.ndarray) -> np.ndarray:
    return np.trace(x, axis1=-2, axis2=-1)


def _eye_like(x: np.ndarray, d: int) -> np.ndarray:
    return np.eye(d, dtype=complex) * np.ones(x.shape[:-2] + (1, 1))


@dataclass(frozen=True, eq=False)
class AntisymmetricUnitary:
    u: np.ndarray

    def __post_init__(self):
        u = as_matrix(self.u)
        d = u.shape[0]
        if u.shape != (d, d) or d % 2:
            raise DimensionError(f"antisymmetric unitary needs even square shape, got {u.shape}")
        if np.linalg.norm(u.T + u) > UNITARY_TOL:
            raise ValueError("matrix is not antisymmetric")
        if np.linalg.norm(u.conj().T @ u - np.eye(d)) > UNITARY_TOL:
            raise ValueError("matrix is not unitary")
        u = u.copy()
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @property
    def d(self) -> int:
        return self.u.shape[0]


def canonical_V(d: int) -> AntisymmetricUnitary:
    """Anti-diagonal with +1 in the upper half of the rows and -1 in the lower half."""
    if d < 2 or d % 2:
        raise ValueError(f"d must be even and >= 2, got {d}")
    v = np.zeros((d, d), dtype=complex)
    for k in range(d):
        v[k, d - 1 - k] = 1 if k < d // 2 else -1
    return AntisymmetricUnitary(v)


def spin_flip_V(d: int) -> AntisymmetricUnitary:
    """Anti-diagonal with alternating signs (+1, -1, +1, ...): the spin time-reversal.

    For spin (d-1)/2 in the descending-m basis this is the unitary part of
    time reversal, so it commutes with collective rotations. For d=2 it equals
    canonical_V(2).
    """
    if d < 2 or d % 2:
        raise ValueError(f"d must be even and >= 2, got {d}")
    v = np.zeros((d, d), dtype=complex)
    for k in range(d):
        v[k, d - 1 - k] = (-1) ** k
    return AntisymmetricUnitary(v)


def _umat(u) -> np.ndarray:
    return u.u if isinstance(u, AntisymmetricUnitary) else as_matrix(u)


def time_reversal(x, u) -> np.ndarray:
    """U X^T U^dagger."""
    U = _umat(u)
    x = np.asarray(x, dtype=complex)
    if x.shape[-1] != U.shape[0]:
        raise DimensionError(f"matrix side {x.shape[-1]} does not match U of side {U.shape[0]}")
    return U @ _T(x) @ U.conj().T


def _bipartite(rho, dims):
    if isinstance(rho, DensityMatrix):
        return rho.mat, rho.dims
    if dims is None:
        raise ValueError("dims are required for a bare matrix")
    return as_matrix(rho), tuple(dims)


def partial_time_reversal(rho, subsystem, u=None, dims=None) -> np.ndarray:
    """Apply tau^U on one factor of a bipartite operator; U defaults to canonical_V."""
    m, dims = _bipartite(rho, dims)
    if len(dims) != 2:
        raise DimensionError("partial time reversal needs a bipartite operator")
    k = subsystem_index(subsystem)
    d = dims[k]
    if d % 2:
        raise DimensionError(f"subsystem {subsystem} has odd dimension {d}")
    U = _umat(u) if u is not None else canonical_V(d).u
    if U.shape[0] != d:
        raise DimensionError(f"U has side {U.shape[0]}, subsystem has dimension {d}")
    L = np.kron(U, np.eye(dims[1])) if k == 0 else np.kron(np.eye(dims[0]), U)
    return L @ partial_transpose(m, dims, k) @ L.conj().T


def reduction_map(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    d = a.shape[-1]
    return _tr(a)[..., None, None] * _eye_like(a, d) - a


def breuer_hall(a, u, sign: int = -1) -> np.ndarray:
    """(Tr A) I - A + sign * U A^T U^dagger; sign=-1 is the positive Breuer-Hall map."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return reduction_map(a) + sign * time_reversal(a, u)


def multiqubit_reflection(rho, reflected: Sequence[int], n: int | None = None) -> np.ndarray:
    """Apply sigma_y (.)^Gamma sigma_y on each listed qubit (1-based indices)."""
    if isinstance(rho, DensityMatrix):
        m, dims = rho.mat, rho.dims
        if any(d != 2 for d in dims):
            raise DimensionError("multiqubit reflection needs qubit factors")
        n = len(dims)
    else:
        m = as_matrix(rho)
        n = n or int(round(math.log2(m.shape[0])))
        if 2**n != m.shape[0]:
            raise DimensionError("matrix side is not a power of two")
    idx = sorted(set(int(i) for i in reflected))
    if any(i < 1 or i > n for i in idx):
        raise ValueError(f"reflection indices {idx} out of range 1..{n}")
    if not idx:
        return m.copy()
    out = partial_transpose(m, (2,) * n, [i - 1 for i in idx])
    L = np.eye(1)
    for k in range(1, n + 1):
        L = np.kron(L, SIGMA[2] if k in idx else np.eye(2))
    return L @ out @ L.conj().T


# --- maps with duals ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OperatorMap:
    """Linear map from in_dim x in_dim to out_dim x out_dim matrices, with its dual."""

    name: str
    apply: Callable[[np.ndarray], np.ndarray]
    dual: Callable[[np.ndarray], np.ndarray]
    in_dim: int
    out_dim: int

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        if x.shape[-1] != self.in_dim:
            raise DimensionError(f"{self.name}: input side {x.shape[-1]} != {self.in_dim}")
        return self.apply(x)

    def adjoint(self) -> "OperatorMap":
        return OperatorMap(f"dual({self.name})", self.dual, self.apply, self.out_dim, self.in_dim)

    def __add__(self, other: "OperatorMap") -> "OperatorMap":
        return sum_maps(self, other)

    def __sub__(self, other: "OperatorMap") -> "OperatorMap":
        return sum_maps(self, scale_map(-1.0, other))

    def __rmul__(self, c: float) -> "OperatorMap":
        return scale_map(c, self)

    def __matmul__(self, other: "OperatorMap") -> "OperatorMap":
        return compose_maps(self, other)


def identity_map(d: int) -> OperatorMap:
    f = lambda x: x
    return OperatorMap("id", f, f, d, d)


def transpose_map(d: int) -> OperatorMap:
    return OperatorMap("T", _T, _T, d, d)


def time_reversal_map(u) -> OperatorMap:
    U = _umat(u)
    d = U.shape[0]
    # Tr[X U Y^T U^+] = Tr[(U^T X^T conj(U)) Y]; equals tau^U itself when U^T = -U
    return OperatorMap(
        "tau",
        lambda x: U @ _T(x) @ U.conj().T,
        lambda x: U.T @ _T(x) @ U.conj(),
        d,
        d,
    )


def reduction_operator_map(d: int) -> OperatorMap:
    return OperatorMap("reduction", reduction_map, reduction_map, d, d)


def breuer_hall_map(u, sign: int = -1) -> OperatorMap:
    U = _umat(u)
    d = U.shape[0]
    return OperatorMap(
        f"breuer_hall{'+' if sign > 0 else '-'}",
        reduction_operator_map(d).apply,
        reduction_operator_map(d).dual,
        d,
        d,
    ) + scale_map(float(sign), time_reversal_map(U))


def _ptrace_last(x: np.ndarray, dims, keep: int) -> np.ndarray:
    dA, dB = dims
    t = x.reshape(x.shape[:-2] + (dA, dB, dA, dB))
    if keep == 0:
        return np.einsum("...ajbj->...ab", t)
    return np.einsum("...jajb->...ab", t)


def _embed(x: np.ndarray, dims, keep: int) -> np.ndarray:
    dA, dB = dims
    if keep == 0:
        out = x[..., :, None, :, None] * np.eye(dB)[None, :, None, :]
    else:
        out = np.eye(dA)[:, None, :, None] * x[..., None, :, None, :]
    return out.reshape(x.shape[:-2] + (dA * dB, dA * dB))


def partial_trace_map(dims, keep="A") -> OperatorMap:
    """Trace out the other factor; the dual tensors the identity back on."""
    dims = tuple(dims)
    k = subsystem_index(keep)
    name = "Tr_B" if k == 0 else "Tr_A"
    return OperatorMap(name, lambda x: _ptrace_last(x, dims, k), lambda y: _embed(y, dims, k), dims[0] * dims[1], dims[k])


def tensor_identity_map(dims, keep="A") -> OperatorMap:
    """X -> X (x) I on the other factor; the dual of partial_trace_map."""
    return partial_trace_map(dims, keep).adjoint()


def local_map(theta: OperatorMap, dims, subsystem) -> OperatorMap:
    """Lift a map on one factor to the bipartite space (identity on the other factor)."""
    dims = tuple(dims)
    k = subsystem_index(subsystem)
    if theta.in_dim != dims[k] or theta.out_dim != dims[k]:
        raise DimensionError("local map must preserve the factor dimension")

    def on_b(f):
        def g(x):
            dA, dB = dims
            lead = x.shape[:-2]
            n = len(lead)
            t = x.reshape(lead + (dA, dB, dA, dB))
            t = np.moveaxis(t, (n, n + 2), (0, 1))
            t = np.moveaxis(f(t), (0, 1), (n, n + 2))
            return t.reshape(x.shape)

        return g

    def on_a(f):
        def g(x):
            dA, dB = dims
            lead = x.shape[:-2]
            n = len(lead)
            t = x.reshape(lead + (dA, dB, dA, dB))
            t = np.moveaxis(t, (n + 1, n + 3, n, n + 2), (0, 1, -2, -1))
            t = np.moveaxis(f(t), (0, 1, -2, -1), (n + 1, n + 3, n, n + 2))
            return t.reshape(x.shape)

        return g

    wrap = on_b if k == 1 else on_a
    name = f"{theta.name}_{'AB'[k]}"
    return OperatorMap(name, wrap(theta.apply), wrap(theta.dual), dims[0] * dims[1], dims[0] * dims[1])


def sum_maps(*maps: OperatorMap) -> OperatorMap:
    if not maps:
        raise ValueError("empty sum")
    i, o = maps[0].in_dim, maps[0].out_dim
    if any(m.in_dim != i or m.out_dim != o for m in maps):
        raise DimensionError("summands have different dimensions")
    return OperatorMap(
        "+".join(m.name for m in maps),
        lambda x: sum(m.apply(x) for m in maps),
        lambda y: sum(m.dual(y) for m in maps),
        i,
        o,
    )


def scale_map(c: float, m: OperatorMap) -> OperatorMap:
    return OperatorMap(f"{c:g}*{m.name}", lambda x: c * m.apply(x), lambda y: np.conj(c) * m.dual(y), m.in_dim, m.out_dim)


def compose_maps(outer: OperatorMap, inner: OperatorMap) -> OperatorMap:
    """outer after inner; the dual runs in reverse order."""
    if inner.out_dim != outer.in_dim:
        raise DimensionError(f"cannot compose {outer.name} after {inner.name}: {inner.out_dim} != {outer.in_dim}")
    return OperatorMap(
        f"{outer.name}.{inner.name}",
        lambda x: outer.apply(inner.apply(x)),
        lambda y: inner.dual(outer.dual(y)),
        inner.in_dim,
        outer.out_dim,
    )


def make_map(kind: str, *, d: int | None = None, dims=None, u=None, sign: int = -1, keep="A", subsystem=None, maps=(), c: float = 1.0) -> OperatorMap:
    """Construct a map by name; ``subsystem`` lifts a single-factor map onto ``dims``."""
    if kind in ("sum", "compose", "scale"):
        if kind == "sum":
            return sum_maps(*maps)
        if kind == "compose":
            return compose_maps(*maps)
        return scale_map(c, maps[0])
    if kind in ("partial_trace", "partial_trace_B"):
        return partial_trace_map(dims, keep)
    if kind == "tensor_identity":
        return tensor_identity_map(dims, keep)
    if subsystem is not None:
        d = tuple(dims)[subsystem_index(subsystem)]
    elif d is None and u is not None:
        d = _umat(u).shape[0]
    elif d is None and dims is not None:
        d = int(np.prod(dims))
    builders = {
        "identity": lambda: identity_map(d),
        "transpose": lambda: transpose_map(d),
        "time_reversal": lambda: time_reversal_map(u if u is not None else canonical_V(d)),
        "reduction": lambda: reduction_operator_map(d),
        "breuer_hall": lambda: breuer_hall_map(u if u is not None else canonical_V(d), sign),
    }
    if kind not in builders:
        raise ValueError(f"unknown map kind {kind!r}")
    m = builders[kind]()
    return local_map(m, dims, subsystem) if subsystem is not None else m
