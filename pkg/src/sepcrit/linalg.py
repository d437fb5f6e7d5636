"""Dense complex matrix kernel: tensor products, partial operations, Hermitian spectra."""
from __future__ import annotations

import math
from typing import NamedTuple, Sequence, Union

import numpy as np

HERM_TOL = 1e-10

Subsystem = Union[int, str]


class DimensionError(ValueError):
    pass


class NotHermitianError(ValueError):
    pass


class EigenSystem(NamedTuple):
    values: np.ndarray  # ascending, real
    vectors: np.ndarray  # orthonormal columns


def as_matrix(x) -> np.ndarray:
    m = np.asarray(x, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-d array, got shape {m.shape}")
    return m


def subsystem_index(s: Subsystem) -> int:
    """Map 'A'/'B' (or an integer) to a factor index."""
    if isinstance(s, str):
        key = s.upper()
        if key not in ("A", "B"):
            raise ValueError(f"unknown subsystem {s!r}")
        return 0 if key == "A" else 1
    return int(s)


def check_dims(x: np.ndarray, dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise DimensionError(f"invalid dims {dims}")
    total = math.prod(dims)
    if x.shape != (total, total):
        raise DimensionError(f"matrix shape {x.shape} does not match dims {dims}")
    return dims


def is_hermitian(x, tol: float = HERM_TOL) -> bool:
    m = np.asarray(x)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def require_hermitian(x, tol: float = HERM_TOL) -> np.ndarray:
    m = as_matrix(x)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"matrix is not square: {m.shape}")
    if not is_hermitian(m, tol):
        raise NotHermitianError("matrix is not Hermitian within tolerance")
    return m


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(mats) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def partial_trace(x, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every factor not listed in ``keep`` (an index, 'A'/'B', or a list)."""
    x = as_matrix(x)
    dims = check_dims(x, dims)
    n = len(dims)
    if isinstance(keep, (int, str, np.integer)):
        keep = [keep]
    keep = sorted({subsystem_index(k) for k in keep})
    if any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"keep={keep} out of range for {n} factors")
    t = x.reshape(dims + dims)
    # trace factors from the highest index down so axis numbers stay valid
    m = n
    for k in reversed(range(n)):
        if k in keep:
            continue
        t = np.trace(t, axis1=k, axis2=k + m)
        m -= 1
    side = math.prod(dims[k] for k in keep)
    return t.reshape(side, side)


def partial_transpose(x, dims: Sequence[int], subsystem) -> np.ndarray:
    x = as_matrix(x)
    dims = check_dims(x, dims)
    n = len(dims)
    subs = [subsystem] if isinstance(subsystem, (int, str, np.integer)) else list(subsystem)
    axes = list(range(2 * n))
    for s in subs:
        k = subsystem_index(s)
        if k < 0 or k >= n:
            raise DimensionError(f"subsystem {s} out of range for {n} factors")
        axes[k], axes[k + n] = axes[k + n], axes[k]
    return x.reshape(dims + dims).transpose(axes).reshape(x.shape)


def hermitian_eig(h) -> EigenSystem:
    h = require_hermitian(h)
    w, v = np.linalg.eigh(h)
    return EigenSystem(w, v)


def eigvalsh(h) -> np.ndarray:
    return np.linalg.eigvalsh(require_hermitian(h))


def mat_pow_int(x, k: int) -> np.ndarray:
    """x**k by repeated squaring; never goes through the spectrum."""
    x = as_matrix(x)
    if k < 0:
        raise ValueError("negative power")
    return np.linalg.matrix_power(x, int(k))


def mat_abs(h) -> np.ndarray:
    w, v = hermitian_eig(h)
    return (v * np.abs(w)) @ v.conj().T


def mat_func(h, f) -> np.ndarray:
    """Apply a scalar function to the spectrum of a Hermitian matrix."""
    w, v = hermitian_eig(h)
    return (v * f(w)) @ v.conj().T


def operator_norm(h) -> float:
    w = eigvalsh(h)
    return float(np.max(np.abs(w)))


def min_eig(h) -> float:
    return float(eigvalsh(h)[0])


def commutator_fro(a, b) -> float:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise DimensionError(f"incompatible shapes {a.shape}, {b.shape}")
    return float(np.linalg.norm(a @ b - b @ a))


def trace_product(a, b) -> complex:
    """Tr(ab) without forming the product."""
    return complex(np.einsum("ij,ji->", a, b))
