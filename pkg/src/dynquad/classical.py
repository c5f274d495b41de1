"""Classical r-matrix quadruples and the γ → 0 limit of the quantum relations."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algebra import StructureSet, quartet_residuals
from .dynamical import (
    DEFAULT_MIN_SEP,
    DynamicalOperator,
    PoleProximityError,
    as_lambda,
    check_denominator,
    is_admissible,
)
from .tensor import DTYPE, TensorOperator, casimir, commutator, embed, projector, rel_residual, swap

NAMES = ("a", "b", "c", "d")


class ConvergenceError(RuntimeError):
    pass


class InsufficientDataError(ValueError):
    pass


Matrices = Callable[[np.ndarray], dict]
Partials = Callable[[np.ndarray, int], dict]


@dataclass(frozen=True)
class ClassicalRSet:
    """``(a, b, c, d)`` as functions of the position (or dynamical) variables.

    ``values(q)`` and ``partials(q, k)`` return dicts keyed by ``"a".."d"``
    holding two-leg :class:`TensorOperator` values; ``k`` is 1-based.
    """

    n: int
    values: Matrices = field(repr=False)
    partials: Partials = field(repr=False)
    role: str = "position"
    name: str = ""

    def matrices(self, q) -> dict:
        return self.values(as_lambda(q, self.n))

    def partial(self, q, k: int) -> dict:
        if not 1 <= k <= self.n:
            raise IndexError(f"∂_{k} out of range for n={self.n}")
        return self.partials(as_lambda(q, self.n), k)


def zero_set(n: int) -> ClassicalRSet:
    z = TensorOperator.zeros(n, 2)
    return ClassicalRSet(n, lambda q: dict.fromkeys(NAMES, z), lambda q, k: dict.fromkeys(NAMES, z), name="zero")


# Each pattern maps (i, j) to a two-leg matrix; a "family" is Σ_{i≠j} f(q_ij) pattern(i, j).

def _e2(n, i, j, k, l):
    m = np.zeros((n * n, n * n), dtype=DTYPE)
    m[i * n + k, j * n + l] = 1.0
    return m


def _family(n: int, q: np.ndarray, f, pattern, min_sep: float, fprime=None, k: int | None = None) -> np.ndarray:
    out = np.zeros((n * n, n * n), dtype=DTYPE)
    for i, j in itertools.permutations(range(n), 2):
        x = check_denominator(q[i] - q[j], min_sep, f"q_{i + 1}{j + 1}")
        if k is None:
            out += f(x) * pattern(i, j)
        else:
            chain = (i == k) - (j == k)
            if chain:
                out += chain * fprime(x) * pattern(i, j)
    return out


def _coth(x):
    return np.cosh(x) / np.sinh(x)


def _dcoth(x):
    return 1.0 - _coth(x) ** 2


def _csch(x):
    return 1.0 / np.sinh(x)


def _dcsch(x):
    return -np.cosh(x) / np.sinh(x) ** 2


def _wrap_all(n, mats: dict) -> dict:
    return {k: TensorOperator(n, 2, v) for k, v in mats.items()}


def _swap_arr(n, m):
    return swap(TensorOperator(n, 2, m)).data


def rs_hyperbolic(n: int, include_casimir: bool = True, min_sep: float = DEFAULT_MIN_SEP) -> ClassicalRSet:
    """Hyperbolic RS r-matrix quadruple.

    ``a = −u − s + s^π + w − C``, ``b = −s^π − w``, ``c = −s + w``,
    ``d = −u − w − C`` with
    ``u = −Σ coth(q_ij) E_ij⊗E_ji``, ``s = Σ csch(q_ij) E_ij⊗E_jj``,
    ``w = Σ coth(q_ij) E_ii⊗E_jj``. ``include_casimir=False`` drops the
    ``−C`` terms (used as a negative control).
    """
    if n < 2:
        raise ValueError("rs_hyperbolic needs n >= 2")
    cas = casimir(n).data if include_casimir else np.zeros((n * n, n * n), dtype=DTYPE)

    def pu(i, j):
        return -_e2(n, i, j, j, i)

    def ps(i, j):
        return _e2(n, i, j, j, j)

    def pw(i, j):
        return _e2(n, i, i, j, j)

    def combine(u, s, w, c):
        sp = _swap_arr(n, s)
        return _wrap_all(n, {"a": -u - s + sp + w - c, "b": -sp - w, "c": -s + w, "d": -u - w - c})

    def values(q):
        u = _family(n, q, _coth, pu, min_sep)
        s = _family(n, q, _csch, ps, min_sep)
        w = _family(n, q, _coth, pw, min_sep)
        return combine(u, s, w, cas)

    def partials(q, k):
        kk = k - 1
        u = _family(n, q, _coth, pu, min_sep, _dcoth, kk)
        s = _family(n, q, _csch, ps, min_sep, _dcsch, kk)
        w = _family(n, q, _coth, pw, min_sep, _dcoth, kk)
        return combine(u, s, w, np.zeros_like(cas))

    name = "rs-hyperbolic" if include_casimir else "rs-hyperbolic(no Casimir)"
    return ClassicalRSet(n, values, partials, "position", name)


def rs_rational_classical(n: int, min_sep: float = DEFAULT_MIN_SEP,
                          flipped_b_term: tuple[int, int] | None = None) -> ClassicalRSet:
    """First-order coefficients in γ of the rational RS structure matrices.

    ``a = Σ (1/λ_ij)(E_ii − E_ij)⊗(E_jj − E_ji)``, ``b = Σ (1/λ_ij) E_jj⊗(E_ii − E_ij)``,
    ``c = b^π``, ``d = Σ (1/λ_ij)(E_ij⊗E_ji − E_ii⊗E_jj)``.

    ``flipped_b_term=(i, j)`` (1-based) flips the sign of that single term of
    ``b`` and rebuilds ``c``; it exists only to produce a broken set.
    """
    if n < 2:
        raise ValueError("rs_rational_classical needs n >= 2")
    flip = None if flipped_b_term is None else (flipped_b_term[0] - 1, flipped_b_term[1] - 1)

    def inv(x):
        return 1.0 / x

    def dinv(x):
        return -1.0 / x**2

    def pa(i, j):
        return (_e2(n, i, i, j, j) - _e2(n, i, i, j, i) - _e2(n, i, j, j, j) + _e2(n, i, j, j, i))

    def pb(i, j):
        sign = -1.0 if (i, j) == flip else 1.0
        return sign * (_e2(n, j, j, i, i) - _e2(n, j, j, i, j))

    def pd(i, j):
        return _e2(n, i, j, j, i) - _e2(n, i, i, j, j)

    def build(q, k=None):
        kw = {} if k is None else {"fprime": dinv, "k": k - 1}
        a = _family(n, q, inv, pa, min_sep, **kw)
        b = _family(n, q, inv, pb, min_sep, **kw)
        d = _family(n, q, inv, pd, min_sep, **kw)
        return _wrap_all(n, {"a": a, "b": b, "c": _swap_arr(n, b), "d": d})

    name = "rs-rational-classical" if flip is None else f"rs-rational-classical(b term {flipped_b_term} flipped)"
    return ClassicalRSet(n, build, build, "dynamical", name)


# ---------------------------------------------------------------- checks


@dataclass
class ConstraintFit:
    alpha_a: complex
    alpha_d: complex
    residual_a: float
    residual_d: float
    residual_bc: float

    @property
    def alphas_agree(self) -> bool:
        return abs(self.alpha_a - self.alpha_d) <= 1e-10 * max(1.0, abs(self.alpha_a))

    @property
    def residuals(self) -> tuple[float, float, float]:
        return self.residual_a, self.residual_d, self.residual_bc


def _fit_casimir(x: TensorOperator, cas: TensorOperator) -> tuple[complex, float]:
    alpha = complex(np.vdot(cas.data, x.data) / np.vdot(cas.data, cas.data))
    return alpha, rel_residual(x, alpha * cas)


def constraint_residuals(r: ClassicalRSet, q) -> ConstraintFit:
    """Least-squares fit of ``a + a^π`` and ``d + d^π`` to ``αC``, plus ``b^π`` vs ``c``."""
    m = r.matrices(q)
    cas = casimir(r.n)
    alpha_a, res_a = _fit_casimir(m["a"] + swap(m["a"]), cas)
    alpha_d, res_d = _fit_casimir(m["d"] + swap(m["d"]), cas)
    return ConstraintFit(alpha_a, alpha_d, res_a, res_d, rel_residual(swap(m["b"]), m["c"]))


def _normalized(terms: Sequence[TensorOperator]) -> float:
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    scale = max(t.norm() for t in terms)
    if scale == 0.0:
        return 0.0
    return total.norm() / scale


class _Placed:
    """Values and Cartan-weighted partials placed on ``V^⊗3``."""

    def __init__(self, r: ClassicalRSet, q):
        self.n = r.n
        self.m = r.matrices(q)
        self.dm = [r.partial(q, k) for k in range(1, r.n + 1)]
        self._cache = {}

    def __call__(self, name: str, i: int, j: int) -> TensorOperator:
        key = (name, i, j)
        if key not in self._cache:
            self._cache[key] = embed(self.m[name], [i, j], 3)
        return self._cache[key]

    def dyn(self, name: str, i: int, j: int, spectator: int) -> TensorOperator:
        """``Σ_k h_k^{(spectator)} ∂_k name_{ij}``."""
        out = TensorOperator.zeros(self.n, 3)
        for k in range(self.n):
            out = out + embed(projector(self.n, k + 1), [spectator], 3) @ embed(self.dm[k][name], [i, j], 3)
        return out


def classical_quartet_residuals(r: ClassicalRSet, q) -> tuple[float, float, float, float]:
    """Normalized residuals of the four classical quadratic YB equations.

    Each is ``||Σ terms|| / max ||term||`` with the commutator and
    derivative summands:

    (i)   ``[a12,a13] + [a12,a23] + [a13,a23]``
    (ii)  ``[d12,d13] + [d12,d23] + [d13,d23] + Σh^(1)∂d23 − Σh^(2)∂d13 + Σh^(3)∂d12``
    (iii) ``[d12,b13] + [d12,b23] + [b13,b23] + Σh^(1)∂b23 − Σh^(2)∂b13``
    (iv)  ``[a12,c13] + [a12,c23] + [c13,c23] − Σh^(3)∂a12``
    """
    p = _Placed(r, q)
    cm = commutator
    r1 = _normalized([cm(p("a", 1, 2), p("a", 1, 3)), cm(p("a", 1, 2), p("a", 2, 3)), cm(p("a", 1, 3), p("a", 2, 3))])
    r2 = _normalized([
        cm(p("d", 1, 2), p("d", 1, 3)), cm(p("d", 1, 2), p("d", 2, 3)), cm(p("d", 1, 3), p("d", 2, 3)),
        p.dyn("d", 2, 3, 1), -p.dyn("d", 1, 3, 2), p.dyn("d", 1, 2, 3),
    ])
    r3 = _normalized([
        cm(p("d", 1, 2), p("b", 1, 3)), cm(p("d", 1, 2), p("b", 2, 3)), cm(p("b", 1, 3), p("b", 2, 3)),
        p.dyn("b", 2, 3, 1), -p.dyn("b", 1, 3, 2),
    ])
    r4 = _normalized([
        cm(p("a", 1, 2), p("c", 1, 3)), cm(p("a", 1, 2), p("c", 2, 3)), cm(p("c", 1, 3), p("c", 2, 3)),
        -p.dyn("a", 1, 2, 3),
    ])
    return r1, r2, r3, r4


def pb_form_iii_residual(r: ClassicalRSet, q) -> float:
    """Variant of equation (iii) with ``[d12, d23]`` in place of ``[d12, b23]``.

    Reported alongside the main quartet only; the two printed forms of this
    line disagree and this one is not used for pass/fail.
    """
    p = _Placed(r, q)
    cm = commutator
    return _normalized([
        cm(p("d", 1, 2), p("b", 1, 3)), cm(p("d", 1, 2), p("d", 2, 3)), cm(p("b", 1, 3), p("b", 2, 3)),
        p.dyn("b", 2, 3, 1), -p.dyn("b", 1, 3, 2),
    ])


def cm_r_matrix(r: ClassicalRSet, q) -> tuple[TensorOperator, float]:
    """``r = a − c`` together with its residual against ``d − b``."""
    m = r.matrices(q)
    left = m["a"] - m["c"]
    return left, rel_residual(left, m["d"] - m["b"])


def fd_partial(r: ClassicalRSet, q, k: int, step: float = 1e-5) -> dict:
    q = as_lambda(q, r.n)
    qp, qm = q.copy(), q.copy()
    qp[k - 1] += step
    qm[k - 1] -= step
    mp, mm = r.matrices(qp), r.matrices(qm)
    return {x: (mp[x] - mm[x]) / (2 * step) for x in NAMES}


def partials_residual(r: ClassicalRSet, q, step: float = 1e-5) -> float:
    """Largest ``rel_residual`` between analytic and central-difference partials."""
    worst = 0.0
    for k in range(1, r.n + 1):
        exact = r.partial(q, k)
        approx = fd_partial(r, q, k, step)
        for x in NAMES:
            worst = max(worst, rel_residual(exact[x], approx[x]))
    return worst


# ----------------------------------------------------------- γ → 0 limit

DEFAULT_LO_GRID = (1e-3, 5e-4, 2.5e-4)
DEFAULT_SLOPE_GRID = (1e-1, 3e-2, 1e-2, 3e-3)
RESIDUAL_FLOOR = 1e-13


def leading_order(d: DynamicalOperator, grid: Sequence[float] = DEFAULT_LO_GRID,
                  tol: float = 1e-5, refinements: int = 4) -> Callable:
    """Evaluator ``λ -> lim_{γ→0} (M(γ) − 1)/γ`` by Richardson extrapolation.

    The difference quotients are extrapolated polynomially to ``γ = 0``. The
    last two diagonal entries of the Neville table are the successive
    estimates; if they differ by more than ``tol`` the grid is scaled by 1/4
    and the extrapolation repeated, at most ``refinements`` times, before
    :class:`ConvergenceError` is raised.
    """
    grid = [float(g) for g in grid]
    if len(grid) < 2:
        raise ValueError("need at least two grid points")
    one = TensorOperator.identity(d.n, len(d.support))

    def extrapolate(lam, pts):
        prev = [(d.with_gamma(g).local(lam) - one) / g for g in pts]
        diagonal = [prev[0]]
        for level in range(1, len(pts)):
            prev = [
                (pts[i] * prev[i + 1] - pts[i + level] * prev[i]) / (pts[i] - pts[i + level])
                for i in range(len(prev) - 1)
            ]
            diagonal.append(prev[0])
        return diagonal[-1], rel_residual(diagonal[-1], diagonal[-2])

    def evaluate(lam) -> TensorOperator:
        pts = list(grid)
        for _ in range(refinements + 1):
            value, spread = extrapolate(lam, pts)
            if spread <= tol:
                return value
            pts = [g / 4 for g in pts]
        raise ConvergenceError(
            f"leading order not converged at λ={np.round(lam, 4)}: "
            f"successive estimates differ by {spread:.2e} after {refinements} refinements"
        )

    return evaluate


def truncated_set(r: ClassicalRSet, gamma: complex) -> StructureSet:
    """Quantum structure matrices ``1 + γ·x`` for ``x`` in ``(a, b, c, d)``."""
    n = r.n
    one = TensorOperator.identity(n, 2)

    def make(name):
        return DynamicalOperator(n, gamma, (1, 2), lambda lam, g: one + g * r.matrices(lam)[name], name=f"1+γ{name}")

    return StructureSet(n, gamma, *(make(x) for x in NAMES), name=f"truncated[{r.name}]")


def sample_for_grid(rng: np.random.Generator, n: int, grid: Sequence[float] = DEFAULT_SLOPE_GRID,
                    min_sep: float = DEFAULT_MIN_SEP, max_tries: int = 100_000) -> np.ndarray:
    """Uniform λ in ``[-1, 1]^n`` admissible at every γ of ``grid``."""
    for _ in range(max_tries):
        lam = rng.uniform(-1.0, 1.0, size=n)
        if all(is_admissible(lam, g, None, min_sep) for g in grid):
            return lam
    raise RuntimeError(f"no λ admissible on grid {tuple(grid)} in {max_tries} draws")


@dataclass
class SlopeFit:
    grid: tuple[float, ...]
    residuals: list[tuple[float, ...]]
    slopes: list[float | None]
    status: list[str]

    def as_dict(self) -> dict:
        return {"grid": list(self.grid), "residuals": [list(r) for r in self.residuals],
                "slopes": self.slopes, "status": self.status}


def scaling_slope(r: ClassicalRSet, lam, grid: Sequence[float] = DEFAULT_SLOPE_GRID,
                  floor: float = RESIDUAL_FLOOR, min_sep: float = DEFAULT_MIN_SEP) -> SlopeFit:
    """Log–log slopes of the quantum quartet residuals of ``1 + γ·r``.

    An equation whose residuals all sit below ``floor`` is reported as
    ``"at floor"`` (satisfied exactly by the truncation); otherwise at least
    three residuals above the floor are needed for a fit.
    """
    grid = tuple(float(g) for g in grid)
    lam = as_lambda(lam, r.n)
    bad = [g for g in grid if not is_admissible(lam.real, g, None, min_sep)]
    if bad:
        raise PoleProximityError(f"λ={np.round(lam.real, 4)} is not admissible at grid γ={bad}")
    table = [quartet_residuals(truncated_set(r, g), lam) for g in grid]
    slopes, status = [], []
    for eq in range(4):
        pts = [(g, row[eq]) for g, row in zip(grid, table) if row[eq] > floor]
        if not pts:
            slopes.append(None)
            status.append("at floor")
            continue
        if len(pts) < 3:
            raise InsufficientDataError(f"equation {eq + 1}: only {len(pts)} residuals above floor {floor}")
        x = np.log([p[0] for p in pts])
        y = np.log([p[1] for p in pts])
        slopes.append(float(np.polyfit(x, y, 1)[0]))
        status.append("fit")
    return SlopeFit(grid, table, slopes, status)
