"""λ-dependent operators and dynamical shifts.

The Cartan generators are ``h_k = E_kk`` in the defining representation, so a
shifted argument ``f(λ + γ h_ℓ)`` on leg ``ℓ`` is the finite projector sum

    sum_k  f(λ + γ e_k) ⊗ P_k^{(ℓ)}

and no series ever needs truncating. Shift legs must be disjoint from the
support legs, which makes the placement of the projectors immaterial.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .tensor import (
    DTYPE,
    LegError,
    TensorOperator,
    commutator,
    embed,
    projector,
    rel_residual,
)

DEFAULT_MIN_SEP = 0.05
DEFAULT_GAMMA = 0.3

WEIGHT_MODES = ("leg1-zero", "leg2-zero", "total-zero")

Base = Callable[[np.ndarray, complex], "np.ndarray | TensorOperator"]


class PoleProximityError(ValueError):
    """An evaluator was asked for a value too close to one of its poles."""


def check_denominator(value: complex, min_sep: float, what: str = "denominator") -> complex:
    if abs(value) < min_sep:
        raise PoleProximityError(f"{what} |{value:.4g}| below min separation {min_sep}")
    return value


def as_lambda(lam, n: int) -> np.ndarray:
    lam = np.asarray(lam, dtype=DTYPE).reshape(-1)
    if lam.shape != (n,):
        raise ValueError(f"λ must have length {n}, got {lam.shape[0]}")
    return lam


@dataclass(frozen=True)
class DynamicalOperator:
    """Evaluator ``λ -> TensorOperator`` on a fixed list of support legs.

    ``base(λ, γ)`` returns the operator on ``len(support)`` legs; it may also
    depend on γ (the structure matrices do). ``shifts`` is a tuple of
    ``(leg, multiplicity)`` pairs standing for the argument
    ``λ + γ Σ multiplicity·h_leg``.
    """

    n: int
    gamma: complex
    support: tuple[int, ...]
    base: Base = field(repr=False)
    shifts: tuple[tuple[int, int], ...] = ()
    name: str = ""

    def __post_init__(self):
        support = tuple(int(s) for s in self.support)
        if len(set(support)) != len(support) or any(s < 1 for s in support):
            raise LegError(f"bad support {support}")
        object.__setattr__(self, "support", support)
        for leg, _ in self.shifts:
            if leg in support:
                raise LegError(f"shift leg {leg} lies inside support {support}")

    @property
    def legs(self) -> tuple[int, ...]:
        return self.support + tuple(leg for leg, _ in self.shifts)

    def local(self, lam) -> TensorOperator:
        """Base operator at ``λ`` on its own ``len(support)`` legs, no shifts."""
        out = self.base(as_lambda(lam, self.n), self.gamma)
        if isinstance(out, TensorOperator):
            return out
        return TensorOperator(self.n, len(self.support), out)

    def on(self, *support: int) -> "DynamicalOperator":
        """Relocate the operator onto other ambient legs (shifts are dropped)."""
        if len(support) == 1 and not isinstance(support[0], int):
            support = tuple(support[0])
        if len(support) != len(self.support):
            raise LegError(f"{self.name or 'operator'} needs {len(self.support)} legs, got {support}")
        return replace(self, support=tuple(support), shifts=())

    def shift(self, leg: int, multiplicity: int = 1) -> "DynamicalOperator":
        """Append ``λ -> λ + multiplicity·γ h_leg``; repeated legs accumulate."""
        if leg in self.support:
            raise LegError(f"cannot shift by h_{leg}: leg {leg} is in support {self.support}")
        merged = dict(self.shifts)
        merged[leg] = merged.get(leg, 0) + multiplicity
        shifts = tuple((k, m) for k, m in merged.items() if m != 0)
        return replace(self, shifts=shifts)

    def unshifted(self) -> "DynamicalOperator":
        return replace(self, shifts=())

    def with_gamma(self, gamma: complex) -> "DynamicalOperator":
        return replace(self, gamma=gamma)

    def evaluate(self, lam, ambient: int | None = None) -> TensorOperator:
        lam = as_lambda(lam, self.n)
        needed = max(self.legs)
        if ambient is None:
            ambient = needed
        if ambient < needed:
            raise LegError(f"ambient {ambient} too small for legs {self.legs}")
        if not self.shifts:
            return embed(self.local(lam), self.support, ambient)

        n = self.n
        k = len(self.support)
        t = len(self.shifts)
        dk, dt = n**k, n**t
        block = np.zeros((dk, dt, dk, dt), dtype=DTYPE)
        for idx, ks in enumerate(itertools.product(range(n), repeat=t)):
            arg = lam.copy()
            for (_, mult), kk in zip(self.shifts, ks):
                arg[kk] += mult * self.gamma
            block[:, idx, :, idx] = self.local(arg).data
        local = TensorOperator._wrap(n, k + t, block.reshape(dk * dt, dk * dt))
        return embed(local, self.legs, ambient)


def constant(x: TensorOperator, gamma: complex = DEFAULT_GAMMA, support: Sequence[int] | None = None,
             name: str = "") -> DynamicalOperator:
    """λ-independent dynamical operator."""
    support = tuple(support) if support is not None else tuple(range(1, x.legs + 1))
    return DynamicalOperator(x.n, gamma, support, lambda lam, g: x, name=name)


def weight_residual(d: DynamicalOperator, mode: str, lam) -> float:
    """Largest zero-weight violation ``max_i ||[h_i, d(λ)]||``.

    ``leg1-zero`` tests ``[E_ii ⊗ 1, d]``, ``leg2-zero`` tests ``[1 ⊗ E_ii, d]``
    and ``total-zero`` tests ``[E_ii ⊗ 1 + 1 ⊗ E_ii, d]``.
    """
    if len(d.support) != 2:
        raise LegError("weight_residual needs a two-leg operator")
    if mode not in WEIGHT_MODES:
        raise ValueError(f"mode must be one of {WEIGHT_MODES}")
    x = d.local(lam)
    n = d.n
    zero = TensorOperator.zeros(n, 2)
    worst = 0.0
    for i in range(1, n + 1):
        p = projector(n, i)
        h1 = embed(p, [1], 2)
        h2 = embed(p, [2], 2)
        h = {"leg1-zero": h1, "leg2-zero": h2, "total-zero": h1 + h2}[mode]
        worst = max(worst, rel_residual(commutator(h, x), zero))
    return worst


def is_admissible(lam, gamma: complex, gamma_tilde: complex | None = None,
                  min_sep: float = DEFAULT_MIN_SEP, depth: int = 3) -> bool:
    """All ``|λ_i - λ_j + mγ + m'γ̃| >= min_sep``, ``|m| <= depth``, ``|m'| <= 2``."""
    lam = np.asarray(lam)
    n = lam.shape[0]
    gt = 0.0 if gamma_tilde is None else gamma_tilde
    mt_range = range(-2, 3) if gamma_tilde is not None else (0,)
    diffs = [lam[i] - lam[j] for i in range(n) for j in range(i + 1, n)]
    for diff in diffs:
        for m in range(-depth, depth + 1):
            for mt in mt_range:
                if abs(diff + m * gamma + mt * gt) < min_sep:
                    return False
    return True


def sample_lambda(rng: np.random.Generator, n: int, gamma: complex = DEFAULT_GAMMA,
                  gamma_tilde: complex | None = None, min_sep: float = DEFAULT_MIN_SEP,
                  depth: int = 3, max_tries: int = 100_000) -> np.ndarray:
    """Uniform λ in ``[-1, 1]^n`` by rejection on :func:`is_admissible`."""
    for _ in range(max_tries):
        lam = rng.uniform(-1.0, 1.0, size=n)
        if is_admissible(lam, gamma, gamma_tilde, min_sep, depth):
            return lam
    raise RuntimeError(f"no admissible λ found in {max_tries} draws (n={n}, γ={gamma}, δ={min_sep})")
