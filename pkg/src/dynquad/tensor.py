"""Dense complex operators on tensor powers of V = C^n.

Legs are labelled ``1..N``. A multi-index ``(i_1, ..., i_N)`` is flattened
row-major, so leg 1 is the most significant digit and ``kron(X, Y)`` acts as
``X`` on leg 1 and ``Y`` on leg 2. Every module in the package relies on this
ordering.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

DTYPE = np.complex128
RCOND_FLOOR = 1e-10


class TensorShapeError(ValueError):
    """Operands do not share local dimension and leg count."""


class LegError(ValueError):
    """A leg label or leg list is malformed."""


class SingularOperatorError(np.linalg.LinAlgError):
    """Inversion refused because the reciprocal condition number is too small."""

    def __init__(self, rcond: float, floor: float):
        self.rcond = rcond
        self.floor = floor
        super().__init__(f"operator is singular to tolerance: rcond~{rcond:.3e} < {floor:.1e}")


@dataclass(frozen=True, eq=False)
class TensorOperator:
    """Square complex matrix acting on ``(C^n)^{⊗legs}``.

    Instances are immutable: the wrapped array is flagged read-only.
    """

    n: int
    legs: int
    data: np.ndarray

    def __post_init__(self):
        if self.n < 1 or self.legs < 0:
            raise TensorShapeError(f"bad shape parameters n={self.n}, legs={self.legs}")
        data = np.asarray(self.data, dtype=DTYPE)
        side = self.n**self.legs
        if data.shape != (side, side):
            raise TensorShapeError(
                f"data has shape {data.shape}, expected ({side}, {side}) for n={self.n}, legs={self.legs}"
            )
        if data.flags.writeable:
            data = data.copy()
            data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def _wrap(cls, n: int, legs: int, arr: np.ndarray) -> "TensorOperator":
        # trusted fast path for freshly computed arrays: no validation, no copy
        arr.setflags(write=False)
        obj = object.__new__(cls)
        object.__setattr__(obj, "n", n)
        object.__setattr__(obj, "legs", legs)
        object.__setattr__(obj, "data", arr)
        return obj

    @classmethod
    def identity(cls, n: int, legs: int = 1) -> "TensorOperator":
        return cls(n, legs, np.eye(n**legs, dtype=DTYPE))

    @classmethod
    def zeros(cls, n: int, legs: int = 1) -> "TensorOperator":
        return cls(n, legs, np.zeros((n**legs, n**legs), dtype=DTYPE))

    @property
    def dim(self) -> int:
        return self.n**self.legs

    @property
    def shape(self):
        return (self.n, self.legs)

    def _check(self, other: "TensorOperator"):
        if not isinstance(other, TensorOperator):
            return NotImplemented
        if (self.n, self.legs) != (other.n, other.legs):
            raise TensorShapeError(f"shape mismatch: (n, legs)={self.shape} vs {other.shape}")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return TensorOperator._wrap(self.n, self.legs, self.data + other.data)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return TensorOperator._wrap(self.n, self.legs, self.data - other.data)

    def __neg__(self):
        return TensorOperator._wrap(self.n, self.legs, -self.data)

    def __mul__(self, scalar):
        if isinstance(scalar, TensorOperator) or not np.isscalar(scalar):
            return NotImplemented
        return TensorOperator._wrap(self.n, self.legs, scalar * self.data)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __matmul__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return TensorOperator._wrap(self.n, self.legs, self.data @ other.data)

    def kron(self, other: "TensorOperator") -> "TensorOperator":
        """Tensor product, ``self`` on the leading legs."""
        if self.n != other.n:
            raise TensorShapeError(f"local dimensions differ: {self.n} vs {other.n}")
        return TensorOperator._wrap(self.n, self.legs + other.legs, np.kron(self.data, other.data))

    @property
    def T(self) -> "TensorOperator":
        return TensorOperator._wrap(self.n, self.legs, self.data.T)

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def __repr__(self):
        return f"TensorOperator(n={self.n}, legs={self.legs})"


def elementary(n: int, i: int, j: int) -> TensorOperator:
    """Matrix unit ``E_ij`` on one leg (1-based indices)."""
    if not (1 <= i <= n and 1 <= j <= n):
        raise IndexError(f"E_{i}{j} out of range for n={n}")
    m = np.zeros((n, n), dtype=DTYPE)
    m[i - 1, j - 1] = 1.0
    return TensorOperator(n, 1, m)


def projector(n: int, k: int) -> TensorOperator:
    return elementary(n, k, k)


def _check_legs(support: Sequence[int], ambient: int) -> tuple[int, ...]:
    support = tuple(int(s) for s in support)
    if len(set(support)) != len(support):
        raise LegError(f"duplicate legs in {support}")
    for s in support:
        if not 1 <= s <= ambient:
            raise LegError(f"leg {s} outside 1..{ambient}")
    return support


def embed(x: TensorOperator, support: Iterable[int], ambient: int) -> TensorOperator:
    """Place ``x`` on the listed ambient legs (in order), identity elsewhere.

    ``embed(X, [1, 3], 3)`` is ``X_{13}`` in the usual subscript notation.
    """
    support = _check_legs(support, ambient)
    if len(support) != x.legs:
        raise LegError(f"operator has {x.legs} legs but support lists {len(support)}")
    n = x.n
    if support == tuple(range(1, ambient + 1)):
        return x
    rest = [leg for leg in range(1, ambient + 1) if leg not in support]
    full = np.kron(x.data, np.eye(n ** len(rest), dtype=DTYPE))
    order = list(support) + rest
    perm = [order.index(p) for p in range(1, ambient + 1)]
    t = full.reshape((n,) * (2 * ambient)).transpose(perm + [ambient + p for p in perm])
    return TensorOperator._wrap(n, ambient, t.reshape(n**ambient, n**ambient))


def partial_transpose(x: TensorOperator, leg: int) -> TensorOperator:
    """Exchange row and column indices of one leg."""
    if not 1 <= leg <= x.legs:
        raise LegError(f"leg {leg} outside 1..{x.legs}")
    N, n = x.legs, x.n
    t = x.data.reshape((n,) * (2 * N)).swapaxes(leg - 1, N + leg - 1)
    return TensorOperator._wrap(n, N, np.ascontiguousarray(t.reshape(x.dim, x.dim)))


def permute_legs(x: TensorOperator, perm: Sequence[int]) -> TensorOperator:
    """Move leg ``i`` of ``x`` to position ``perm[i-1]``.

    Equivalent to conjugating by the unitary that permutes tensor factors;
    for two legs ``permute_legs(X, (2, 1))`` is ``X^π``, i.e. ``X_{21}``.
    """
    N, n = x.legs, x.n
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(1, N + 1)):
        raise LegError(f"{perm} is not a permutation of 1..{N}")
    src = [0] * N
    for i, dst in enumerate(perm):
        src[dst - 1] = i
    t = x.data.reshape((n,) * (2 * N)).transpose(src + [N + s for s in src])
    return TensorOperator._wrap(n, N, np.ascontiguousarray(t.reshape(x.dim, x.dim)))


def swap(x: TensorOperator) -> TensorOperator:
    """``X_{12} -> X_{21}`` for a two-leg operator."""
    if x.legs != 2:
        raise LegError("swap needs a two-leg operator")
    return permute_legs(x, (2, 1))


def _lu(a: np.ndarray):
    # exact singularity is reported through the condition estimate instead
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        return sla.lu_factor(a, check_finite=False)


def rcond_estimate(x: TensorOperator) -> float:
    lu, _ = _lu(x.data)
    anorm = np.linalg.norm(x.data, 1)
    rcond, _ = lapack.zgecon(lu, anorm, norm="1")
    return float(rcond)


def invert(x: TensorOperator, rcond_floor: float = RCOND_FLOOR) -> TensorOperator:
    """Inverse via LU with partial pivoting.

    Raises
    ------
    SingularOperatorError
        If the LAPACK 1-norm reciprocal condition estimate is below ``rcond_floor``.
    """
    if not np.all(np.isfinite(x.data)):
        raise SingularOperatorError(0.0, rcond_floor)
    lu, piv = _lu(x.data)
    anorm = np.linalg.norm(x.data, 1)
    rcond, _ = lapack.zgecon(lu, anorm, norm="1")
    if not rcond >= rcond_floor:
        raise SingularOperatorError(float(rcond), rcond_floor)
    inv = sla.lu_solve((lu, piv), np.eye(x.dim, dtype=DTYPE), check_finite=False)
    return TensorOperator._wrap(x.n, x.legs, inv)


def rel_residual(x: TensorOperator, y: TensorOperator) -> float:
    """``||x - y||_F / max(1, ||x||_F, ||y||_F)``."""
    if not isinstance(x, TensorOperator) or not isinstance(y, TensorOperator):
        raise TypeError("rel_residual expects TensorOperator arguments")
    if (x.n, x.legs) != (y.n, y.legs):
        raise TensorShapeError(f"shape mismatch: {x.shape} vs {y.shape}")
    nx, ny = np.linalg.norm(x.data), np.linalg.norm(y.data)
    return float(np.linalg.norm(x.data - y.data) / max(1.0, nx, ny))


def casimir(n: int) -> TensorOperator:
    """``C = sum_ij E_ij ⊗ E_ji``, the leg-swap operator on V⊗V."""
    c = np.zeros((n * n, n * n), dtype=DTYPE)
    for i in range(n):
        for j in range(n):
            c[i * n + j, j * n + i] = 1.0
    return TensorOperator(n, 2, c)


def commutator(x: TensorOperator, y: TensorOperator) -> TensorOperator:
    return x @ y - y @ x


def cartan(n: int, k: int, legs: Sequence[int], ambient: int) -> TensorOperator:
    """Sum of ``E_kk`` placed on each listed leg: the Cartan generator ``h_k``."""
    p = projector(n, k)
    out = TensorOperator.zeros(n, ambient)
    for leg in legs:
        out = out + embed(p, [leg], ambient)
    return out
