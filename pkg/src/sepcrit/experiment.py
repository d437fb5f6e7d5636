"""Two-copy coalescence/anticoalescence statistics for n-qubit states.

The two-copy space is laid out as (A1 ... An, A'1 ... A'n); pairs (Aj, A'j)
are brought together by an explicit permutation. Outcome s_j = 0 means the
pair was found in the symmetric subspace, s_j = 1 in the antisymmetric one.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .linalg import DimensionError, as_matrix, kron_all
from .maps import multiqubit_reflection
from .states import DensityMatrix
from .witness import MultiCopyWitness

SWAP2 = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def pair_projectors():
    """(P0, P1): projectors on the symmetric and antisymmetric two-qubit subspaces."""
    eye = np.eye(4, dtype=complex)
    return 0.5 * (eye + SWAP2), 0.5 * (eye - SWAP2)


@dataclass
class OutcomeTable:
    n: int
    probs: np.ndarray  # index = s1 s2 ... sn read as a binary number, s1 most significant

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.shape != (2**self.n,):
            raise ValueError(f"need {2 ** self.n} probabilities, got {self.probs.shape}")
        if np.any(self.probs < -1e-12) or abs(self.probs.sum() - 1) > 1e-10:
            raise ValueError("not a probability distribution")

    def p(self, *s: int) -> float:
        return float(self.probs[int("".join(str(int(b)) for b in s), 2)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"s{i}" for i in range(1, self.n + 1)] + ["prob"])
        for k, s in enumerate(itertools.product((0, 1), repeat=self.n)):
            w.writerow(list(s) + [repr(float(self.probs[k]))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "OutcomeTable":
        rows = list(csv.reader(io.StringIO(text)))
        n = len(rows[0]) - 1
        probs = np.zeros(2**n)
        for r in rows[1:]:
            probs[int("".join(r[:n]), 2)] = float(r[n])
        return cls(n, probs)


def reflection_set(indices: Iterable[int], n: int) -> tuple:
    idx = tuple(int(i) for i in indices)
    if list(idx) != sorted(set(idx)):
        raise ValueError(f"reflection indices must be strictly increasing: {idx}")
    if any(i < 1 or i > n for i in idx):
        raise ValueError(f"reflection indices {idx} out of range 1..{n}")
    return idx


def _qubits(rho) -> tuple[np.ndarray, int]:
    if isinstance(rho, DensityMatrix):
        if any(d != 2 for d in rho.dims):
            raise DimensionError("qubit state required")
        return rho.mat, len(rho.dims)
    m = as_matrix(rho)
    n = int(round(math.log2(m.shape[0])))
    if 2**n != m.shape[0]:
        raise DimensionError("matrix side is not a power of two")
    return m, n


def _pairing_perm(n: int) -> list:
    """Axis order taking (A1..An, A'1..A'n) to (A1, A'1, ..., An, A'n)."""
    return [x for j in range(n) for x in (j, n + j)]


def _to_paired(op: np.ndarray, n: int) -> np.ndarray:
    perm = _pairing_perm(n)
    t = op.reshape((2,) * (4 * n))
    return t.transpose(perm + [2 * n + p for p in perm]).reshape(op.shape)


def _from_paired(op: np.ndarray, n: int) -> np.ndarray:
    inv = list(np.argsort(_pairing_perm(n)))
    t = op.reshape((2,) * (4 * n))
    return t.transpose(inv + [2 * n + p for p in inv]).reshape(op.shape)


def joint_probabilities(rho) -> OutcomeTable:
    m, n = _qubits(rho)
    two = _to_paired(np.kron(m, m), n)
    P = pair_projectors()
    # diagonal blocks of two copies, pair by pair: p(s) = Tr (x)_j P^{s_j} two
    probs = np.zeros(2**n)
    for k, s in enumerate(itertools.product((0, 1), repeat=n)):
        probs[k] = np.real(np.trace(kron_all([P[b] for b in s]) @ two))
    probs[(probs < 0) & (probs >= -1e-12)] = 0.0
    return OutcomeTable(n, probs)


def signed_sum(table: OutcomeTable, reflected: Sequence[int]) -> float:
    """The probability combination with s_i = 1 fixed on reflected qubits and sign (-1)^(sum of the rest)."""
    idx = reflection_set(reflected, table.n)
    total = 0.0
    for k, s in enumerate(itertools.product((0, 1), repeat=table.n)):
        if any(s[i - 1] != 1 for i in idx):
            continue
        sign = (-1) ** sum(s[i] for i in range(table.n) if (i + 1) not in idx)
        total += sign * table.probs[k]
    return float(total)


def signed_sum_terms(n: int, reflected: Sequence[int]) -> list:
    """[(sign, outcome string)] entering signed_sum, in lexicographic order."""
    idx = reflection_set(reflected, n)
    out = []
    for s in itertools.product((0, 1), repeat=n):
        if all(s[i - 1] == 1 for i in idx):
            out.append(((-1) ** sum(s[i] for i in range(n) if (i + 1) not in idx), s))
    return out


def mean_from_probs(table: OutcomeTable, reflected: Sequence[int]) -> float:
    """Tr(rho rho^{tau_I'}) from outcome statistics: 2^|I'| times the signed sum."""
    return 2 ** len(reflection_set(reflected, table.n)) * signed_sum(table, reflected)


def two_copy_observable(n: int, reflected: Sequence[int]) -> MultiCopyWitness:
    """Swap on unreflected pairs, I - swap (= 2 P1) on reflected ones; mean Tr(rho rho^{tau_I'})."""
    idx = reflection_set(reflected, n)
    eye = np.eye(4, dtype=complex)
    paired = kron_all([eye - SWAP2 if (j + 1) in idx else SWAP2 for j in range(n)])
    return MultiCopyWitness(_from_paired(paired, n), 2, (2,) * n, f"two_copy{list(idx)}")


def reflected_overlap(rho, reflected: Sequence[int]) -> float:
    """Tr(rho rho^{tau_I'}) computed directly from the reflection map."""
    m, n = _qubits(rho)
    t = multiqubit_reflection(m, reflection_set(reflected, n), n)
    return float(np.real(np.einsum("ij,ji->", m, t)))


def shot_sample(table: OutcomeTable, shots: int, seed=None) -> OutcomeTable:
    if shots < 1:
        raise ValueError("shots must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    p = np.clip(table.probs, 0.0, None)
    counts = rng.multinomial(shots, p / p.sum())
    return OutcomeTable(table.n, counts / shots)


def signed_sum_sigma(table: OutcomeTable, reflected: Sequence[int], shots: int) -> float:
    """Standard deviation of signed_sum estimated from `shots` multinomial samples."""
    idx = reflection_set(reflected, table.n)
    coef = np.zeros(2**table.n)
    for k, s in enumerate(itertools.product((0, 1), repeat=table.n)):
        if all(s[i - 1] == 1 for i in idx):
            coef[k] = (-1) ** sum(s[i] for i in range(table.n) if (i + 1) not in idx)
    p = table.probs
    var = (coef**2 @ p - (coef @ p) ** 2) / shots
    return math.sqrt(max(var, 0.0))
