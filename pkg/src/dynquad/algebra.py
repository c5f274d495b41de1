"""Structure-matrix quadruples, the rational RS instance, and relation checkers.

A :class:`StructureSet` holds ``A, B, C, D`` as two-leg dynamical operators.
Every checker returns :func:`~dynquad.tensor.rel_residual` values of LHS
against RHS so tolerances are scale-free.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .dynamical import (
    DEFAULT_MIN_SEP,
    DynamicalOperator,
    as_lambda,
    check_denominator,
    constant,
)
from .tensor import (
    DTYPE,
    TensorOperator,
    embed,
    invert,
    partial_transpose,
    rel_residual,
    swap,
)

LAX_VARIANTS = ("as-printed", "index-swapped", "transposed")


class DimensionGuardError(ValueError):
    """Requested check would exceed the dense-dimension budget."""


class CalibrationError(RuntimeError):
    def __init__(self, message: str, table: list[dict]):
        super().__init__(message)
        self.table = table


@dataclass(frozen=True)
class StructureSet:
    n: int
    gamma: complex
    A: DynamicalOperator
    B: DynamicalOperator
    C: DynamicalOperator
    D: DynamicalOperator
    name: str = ""

    def __post_init__(self):
        for op in (self.A, self.B, self.C, self.D):
            if op.n != self.n or op.gamma != self.gamma or len(op.support) != 2:
                raise ValueError(f"structure matrix {op.name!r} does not match (n={self.n}, γ={self.gamma})")

    def with_gamma(self, gamma: complex) -> "StructureSet":
        return replace(
            self,
            gamma=gamma,
            A=self.A.with_gamma(gamma),
            B=self.B.with_gamma(gamma),
            C=self.C.with_gamma(gamma),
            D=self.D.with_gamma(gamma),
        )


def identity_set(n: int, gamma: complex = 0.3) -> StructureSet:
    one = TensorOperator.identity(n, 2)
    ops = [constant(one, gamma, name=x) for x in "ABCD"]
    return StructureSet(n, gamma, *ops, name="identity")


def _unit(n: int, i: int, j: int, k: int, l: int) -> tuple[int, int]:
    """(row, col) of ``E_ij ⊗ E_kl`` in the flattened two-leg basis (0-based)."""
    return i * n + k, j * n + l


def _rs_A(n: int, min_sep: float):
    def base(lam, g):
        m = np.eye(n * n, dtype=DTYPE)
        for i, j in itertools.permutations(range(n), 2):
            coef = g / check_denominator(lam[i] - lam[j], min_sep, f"λ_{i + 1}{j + 1}")
            # (E_ii - E_ij) ⊗ (E_jj - E_ji)
            for (a, b, s1), (c, d, s2) in itertools.product(((i, i, 1), (i, j, -1)), ((j, j, 1), (j, i, -1))):
                m[_unit(n, a, b, c, d)] += coef * s1 * s2
        return m

    return base


def _rs_B(n: int, min_sep: float):
    def base(lam, g):
        m = np.eye(n * n, dtype=DTYPE)
        for i, j in itertools.permutations(range(n), 2):
            coef = g / check_denominator(lam[i] - lam[j] - g, min_sep, f"λ_{i + 1}{j + 1}-γ")
            # E_jj ⊗ (E_ii - E_ij)
            m[_unit(n, j, j, i, i)] += coef
            m[_unit(n, j, j, i, j)] -= coef
        return m

    return base


def _rs_D(n: int, min_sep: float):
    def base(lam, g):
        m = np.eye(n * n, dtype=DTYPE)
        for i, j in itertools.permutations(range(n), 2):
            coef = g / check_denominator(lam[i] - lam[j], min_sep, f"λ_{i + 1}{j + 1}")
            m[_unit(n, i, i, j, j)] -= coef
            m[_unit(n, i, j, j, i)] += coef
        return m

    return base


def rs_rational(n: int, gamma: complex = 0.3, min_sep: float = DEFAULT_MIN_SEP) -> StructureSet:
    """Rational Ruijsenaars–Schneider structure matrices.

    ``A = 1 + Σ_{i≠j} γ/λ_ij (E_ii − E_ij) ⊗ (E_jj − E_ji)``,
    ``B = 1 + Σ_{i≠j} γ/(λ_ij − γ) E_jj ⊗ (E_ii − E_ij)``, ``C = B^π`` and
    ``D = 1 − Σ_{i≠j} γ/λ_ij E_ii ⊗ E_jj + Σ_{i≠j} γ/λ_ij E_ij ⊗ E_ji``.

    ``γ = 0`` is accepted and gives four identities (the nondynamical limit).
    """
    if n < 2:
        raise ValueError("rs_rational needs n >= 2")
    b = _rs_B(n, min_sep)

    def c(lam, g):
        return swap(TensorOperator(n, 2, b(lam, g)))

    ops = [
        DynamicalOperator(n, gamma, (1, 2), _rs_A(n, min_sep), name="A"),
        DynamicalOperator(n, gamma, (1, 2), b, name="B"),
        DynamicalOperator(n, gamma, (1, 2), c, name="C"),
        DynamicalOperator(n, gamma, (1, 2), _rs_D(n, min_sep), name="D"),
    ]
    return StructureSet(n, gamma, *ops, name="rs-rational")


def perturb_b(s: StructureSet, eps: float, rng: np.random.Generator) -> StructureSet:
    """Add ``eps·X`` to ``B`` with ``X`` random, unit norm, commuting with ``h ⊗ 1``.

    ``C`` is rebuilt as ``B^π`` so the flip condition keeps holding.
    """
    n = s.n
    x = np.zeros((n * n, n * n), dtype=DTYPE)
    for j in range(n):
        block = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        e = np.zeros((n, n))
        e[j, j] = 1.0
        x += np.kron(e, block)
    x /= np.linalg.norm(x)
    x_op = TensorOperator(n, 2, x)
    b0 = s.B

    def b(lam, g):
        return b0.with_gamma(g).local(lam) + eps * x_op

    def c(lam, g):
        return swap(b(lam, g))

    return replace(
        s,
        B=DynamicalOperator(n, s.gamma, (1, 2), b, name="B~"),
        C=DynamicalOperator(n, s.gamma, (1, 2), c, name="C~"),
        name=f"{s.name}+εX(ε={eps:g})",
    )


# ---------------------------------------------------------------- Lax matrices


@dataclass(frozen=True)
class LaxRep:
    """Representation ``T`` on one auxiliary leg and ``len(quantum_weights)`` quantum legs.

    ``quantum_weights[m]`` is the multiplicity with which ``h`` acts on quantum
    leg ``m``: ``+1`` for the defining representation, ``-1`` for its dual.
    The evaluator returns an operator whose leg 1 is auxiliary.
    """

    n: int
    evaluator: Callable[[np.ndarray], TensorOperator] = field(repr=False)
    quantum_weights: tuple[int, ...] = ()
    name: str = ""

    @property
    def quantum_legs(self) -> int:
        return len(self.quantum_weights)

    @property
    def d_q(self) -> int:
        return self.n**self.quantum_legs

    def evaluate(self, lam) -> TensorOperator:
        out = self.evaluator(as_lambda(lam, self.n))
        if not isinstance(out, TensorOperator):
            out = TensorOperator(self.n, 1 + self.quantum_legs, out)
        return out

    def weights(self) -> np.ndarray:
        """Cartan weight in ``Z^n`` of each quantum basis vector, shape ``(d_q, n)``."""
        out = np.zeros((self.d_q, self.n), dtype=int)
        for idx, ks in enumerate(itertools.product(range(self.n), repeat=self.quantum_legs)):
            for mult, k in zip(self.quantum_weights, ks):
                out[idx, k] += mult
        return out

    def operator(self, gamma: complex, support: Sequence[int]) -> DynamicalOperator:
        """View as a dynamical operator on ``support = (aux, q_1, ..., q_m)``."""
        return DynamicalOperator(self.n, gamma, tuple(support), lambda lam, g: self.evaluate(lam), name=self.name)


def identity_lax(n: int) -> LaxRep:
    one = TensorOperator.identity(n, 1)
    return LaxRep(n, lambda lam: one, (), name="identity")


def rs_scalar_lax(n: int, gamma_tilde: complex, variant: str = "as-printed",
                  min_sep: float = DEFAULT_MIN_SEP) -> LaxRep:
    """Scalar RS Lax matrix.

    ``as-printed``: ``T_ij = Π_{a≠i}(λ_aj + γ̃) / Π_{a≠j} λ_aj``.
    ``index-swapped``: ``T_ij = Π_{a≠j}(λ_ai + γ̃) / Π_{a≠i} λ_ai``.
    ``transposed``: transpose of ``as-printed``.
    """
    if n < 2:
        raise ValueError("rs_scalar_lax needs n >= 2")
    if variant not in LAX_VARIANTS:
        raise ValueError(f"variant must be one of {LAX_VARIANTS}")

    def printed(lam):
        t = np.empty((n, n), dtype=DTYPE)
        for i in range(n):
            for j in range(n):
                num = np.prod([lam[a] - lam[j] + gamma_tilde for a in range(n) if a != i])
                den = np.prod([check_denominator(lam[a] - lam[j], min_sep, f"λ_{a + 1}{j + 1}")
                               for a in range(n) if a != j])
                t[i, j] = num / den
        return t

    if variant == "as-printed":
        f = printed
    elif variant == "index-swapped":
        def f(lam):
            t = np.empty((n, n), dtype=DTYPE)
            for i in range(n):
                for j in range(n):
                    num = np.prod([lam[a] - lam[i] + gamma_tilde for a in range(n) if a != j])
                    den = np.prod([check_denominator(lam[a] - lam[i], min_sep, f"λ_{a + 1}{i + 1}")
                                   for a in range(n) if a != i])
                    t[i, j] = num / den
            return t
    else:
        def f(lam):
            return printed(lam).T

    return LaxRep(n, lambda lam: TensorOperator(n, 1, f(lam)), (), name=f"rs-scalar[{variant}, γ̃={gamma_tilde:g}]")


# ------------------------------------------------------------------ checkers


def flip_residuals(s: StructureSet, lam) -> tuple[float, float, float]:
    """``(C vs B^π, A^π A vs 1, D^π D vs 1)``."""
    a, b, c, d = (op.local(lam) for op in (s.A, s.B, s.C, s.D))
    one = TensorOperator.identity(s.n, 2)
    return (
        rel_residual(c, swap(b)),
        rel_residual(swap(a) @ a, one),
        rel_residual(swap(d) @ d, one),
    )


def _ev(op: DynamicalOperator, lam, ambient: int) -> TensorOperator:
    return op.evaluate(lam, ambient)


def quartet_residuals(s: StructureSet, lam, suppress_shifts: bool = False) -> tuple[float, float, float, float]:
    """Residuals of the four dynamical Yang–Baxter-type relations on ``V^⊗3``.

    (i)   ``A12 A13 A23 = A23 A13 A12``
    (ii)  ``D12(λ+γh3) D13 D23(λ+γh1) = D23 D13(λ+γh2) D12``
    (iii) ``D12 B13 B23(λ+γh1) = B23 B13(λ+γh2) D12``
    (iv)  ``A12 C13 C23 = C23 C13 A12(λ+γh3)``

    With ``suppress_shifts`` every shift is dropped (a non-vacuity control).
    """
    def sh(op, leg):
        return op if suppress_shifts else op.shift(leg)

    def e(op):
        return op.evaluate(lam, 3)

    A, B, C, D = s.A, s.B, s.C, s.D
    r1 = rel_residual(e(A.on(1, 2)) @ e(A.on(1, 3)) @ e(A.on(2, 3)),
                      e(A.on(2, 3)) @ e(A.on(1, 3)) @ e(A.on(1, 2)))
    r2 = rel_residual(e(sh(D.on(1, 2), 3)) @ e(D.on(1, 3)) @ e(sh(D.on(2, 3), 1)),
                      e(D.on(2, 3)) @ e(sh(D.on(1, 3), 2)) @ e(D.on(1, 2)))
    r3 = rel_residual(e(D.on(1, 2)) @ e(B.on(1, 3)) @ e(sh(B.on(2, 3), 1)),
                      e(B.on(2, 3)) @ e(sh(B.on(1, 3), 2)) @ e(D.on(1, 2)))
    r4 = rel_residual(e(A.on(1, 2)) @ e(C.on(1, 3)) @ e(C.on(2, 3)),
                      e(C.on(2, 3)) @ e(C.on(1, 3)) @ e(sh(A.on(1, 2), 3)))
    return r1, r2, r3, r4


def big_R(s: StructureSet) -> DynamicalOperator:
    """Four-leg exchange matrix on legs ordered ``(1, 1', 2, 2')``.

    ``R = (C_{12'}^{t_2'})^{-1} (D_{1'2'}^{t_1' t_2'})^{-1} A_{12} B_{1'2}^{t_1'}``,
    transposing before inverting.
    """
    n = s.n

    def base(lam, g):
        c = invert(partial_transpose(s.C.with_gamma(g).local(lam), 2))
        d = invert(partial_transpose(partial_transpose(s.D.with_gamma(g).local(lam), 1), 2))
        a = s.A.with_gamma(g).local(lam)
        b = partial_transpose(s.B.with_gamma(g).local(lam), 1)
        return embed(c, [1, 4], 4) @ embed(d, [2, 4], 4) @ embed(a, [1, 3], 4) @ embed(b, [2, 3], 4)

    return DynamicalOperator(n, s.gamma, (1, 2, 3, 4), base, name="R")


def gyb_residual(s: StructureSet, lam, max_n: int = 3) -> float:
    """Dynamical Yang–Baxter residual for :func:`big_R` on ``(1,1',2,2',3,3')``.

    ``R_{11',22'}(λ+γh_3') R_{11',33'} R_{22',33'}(λ+γh_1')``
    against ``R_{22',33'} R_{11',33'}(λ+γh_2') R_{11',22'}``.
    """
    if s.n > max_n:
        raise DimensionGuardError(f"gYB check at n={s.n} needs dimension {s.n ** 6}; limit n <= {max_n}")
    R = big_R(s)
    r12, r13, r23 = R.on(1, 2, 3, 4), R.on(1, 2, 5, 6), R.on(3, 4, 5, 6)

    def e(op):
        return op.evaluate(lam, 6)

    lhs = e(r12.shift(6)) @ e(r13) @ e(r23.shift(2))
    rhs = e(r23) @ e(r13.shift(4)) @ e(r12)
    return rel_residual(lhs, rhs)


def _vec_residual(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.linalg.norm(x - y) / max(1.0, np.linalg.norm(x), np.linalg.norm(y)))


def bivector_residual(s: StructureSet, t: LaxRep, lam) -> float:
    """Exchange relation restated on bivectors ``t = Σ T_ij e_i ⊗ e_j``.

    Compares ``R (t_{11'} ⊗ t_{22'}(λ+γh_1'))`` with ``t_{22'} ⊗ t_{11'}(λ+γh_2')``
    in the leg order ``(1, 1', 2, 2')``. Scalar representations only.
    """
    if t.quantum_legs:
        raise ValueError("bivector form needs a scalar representation")
    n, g = s.n, s.gamma
    lam = as_lambda(lam, n)
    vec = t.evaluate(lam).data.reshape(-1)
    v = np.zeros(n**4, dtype=DTYPE)
    w = np.zeros(n**4, dtype=DTYPE)
    for k in range(n):
        shifted = lam.copy()
        shifted[k] += g
        vk = t.evaluate(shifted).data.reshape(-1)
        proj = np.zeros(n, dtype=DTYPE)
        proj[k] = 1.0
        pvec = (vec.reshape(n, n) * proj[None, :]).reshape(-1)  # P_k on the primed leg
        v += np.kron(pvec, vk)
        w += np.kron(vk, pvec)
    lhs = big_R(s).local(lam).data @ v
    return _vec_residual(lhs, w)


def exchange_residual(s: StructureSet, t: LaxRep, lam) -> float:
    """``A12 T1 B12 T2(λ+γh1)`` against ``T2 C12 T1(λ+γh2) D12`` on ``V⊗V⊗H_q``."""
    if t.n != s.n:
        raise ValueError("representation and structure set differ in n")
    m = t.quantum_legs
    q = tuple(range(3, 3 + m))
    ambient = 2 + m
    t1 = t.operator(s.gamma, (1,) + q)
    t2 = t.operator(s.gamma, (2,) + q)

    def e(op):
        return op.evaluate(lam, ambient)

    lhs = e(s.A.on(1, 2)) @ e(t1) @ e(s.B.on(1, 2)) @ e(t2.shift(1))
    rhs = e(t2) @ e(s.C.on(1, 2)) @ e(t1.shift(2)) @ e(s.D.on(1, 2))
    return rel_residual(lhs, rhs)


def appendix_residual(s: StructureSet, lam) -> float:
    """Three-matrix B/D/C exchange on legs ``(1', 2, 3')``.

    ``B_{1'2}^{t_1'}(λ+γh_3') (D_{1'3'}^{t_1' t_3'})^{-1} (C_{23'}^{t_3'}(λ+γh_1'))^{-1}``
    against ``(C_{23'}^{t_3'})^{-1} (D_{1'3'}^{t_1' t_3'})^{-1} B_{1'2}^{t_1'}``.
    """
    def e(op):
        return op.evaluate(lam, 3)

    b = s.B.on(1, 2)
    c = s.C.on(2, 3)
    d_inv = invert(partial_transpose(partial_transpose(e(s.D.on(1, 3)), 1), 3))
    lhs = partial_transpose(e(b.shift(3)), 1) @ d_inv @ invert(partial_transpose(e(c.shift(1)), 3))
    rhs = invert(partial_transpose(e(c), 3)) @ d_inv @ partial_transpose(e(b), 1)
    return rel_residual(lhs, rhs)


# ---------------------------------------------------------------- calibration


@dataclass
class CalibrationRecord:
    table: list[dict]
    best: dict
    tol: float

    @property
    def variant(self) -> str:
        return self.best["variant"]

    @property
    def gamma_tilde(self) -> complex:
        return self.best["gamma_tilde"]

    def lax(self, n: int, min_sep: float = DEFAULT_MIN_SEP) -> LaxRep:
        return rs_scalar_lax(n, self.gamma_tilde, self.variant, min_sep)

    def as_dict(self) -> dict:
        def clean(row):
            return {k: (_jsonable(v)) for k, v in row.items()}

        return {"tol": self.tol, "best": clean(self.best), "table": [clean(r) for r in self.table]}


def _jsonable(v):
    if isinstance(v, complex) or isinstance(v, np.complexfloating):
        return float(v.real) if v.imag == 0 else [float(v.real), float(v.imag)]
    if isinstance(v, np.floating):
        return float(v)
    return v


def calibrate_lax(s: StructureSet, samples: Sequence, tol: float = 1e-9,
                  min_sep: float = DEFAULT_MIN_SEP) -> CalibrationRecord:
    """Exhaustive search over the printed Lax variants × ``γ̃ ∈ {γ, −γ}``.

    Candidates whose median exchange residual is at most ``tol`` are treated
    as tied and the first one in family order wins. The ``γ̃ = 0`` row
    (``T = 1``) is recorded for reference but never selected.
    """
    if len(samples) < 20:
        raise ValueError("calibrate_lax needs at least 20 samples")
    g = s.gamma
    table = []
    for variant in LAX_VARIANTS:
        for sign, gt in (("+", g), ("-", -g)):
            t = rs_scalar_lax(s.n, gt, variant, min_sep)
            res = [exchange_residual(s, t, lam) for lam in samples]
            table.append({"variant": variant, "sign": sign, "gamma_tilde": gt,
                          "median": float(np.median(res)), "max": float(np.max(res)), "eligible": True})
    t0 = rs_scalar_lax(s.n, 0.0, "as-printed", min_sep)
    res0 = [exchange_residual(s, t0, lam) for lam in samples]
    table.append({"variant": "as-printed", "sign": "0", "gamma_tilde": 0.0,
                  "median": float(np.median(res0)), "max": float(np.max(res0)), "eligible": False})

    eligible = [row for row in table if row["eligible"]]
    passing = [row for row in eligible if row["median"] <= tol]
    if not passing:
        raise CalibrationError(f"no Lax candidate reaches median exchange residual <= {tol}", table)
    return CalibrationRecord(table=table, best=passing[0], tol=tol)
