"""LR exchange algebras and the two coproduct-type fusions.

A pair ``(L, R)`` lives on (auxiliary leg, quantum leg q'). Type-1 pairs obey

    A12 L1 L2 = L2 L1 A12
    R1 B12 L2(λ+γh1) = L2 B12 R1
    D12 R1 R2(λ+γh1) = R2 R1(λ+γh2) D12

and fuse as ``T_{1,qq'} = L T R``. Type-2 pairs carry the extra unindexed
shift ``λ+γh`` on their own quantum leg (in A, B and D respectively) and fuse
as ``L T(λ+γh_q') R``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import DimensionGuardError, LaxRep, StructureSet
from .dynamical import DynamicalOperator
from .tensor import DTYPE, TensorOperator, invert, partial_transpose, rel_residual

KINDS = ("type1", "type2")
FORMS = ("plain", "contragredient", "contragredient-printed")
MAX_AMBIENT_DIM = 4096


@dataclass(frozen=True)
class LRPair:
    """``L``, ``R`` on legs (1 = auxiliary, 2 = quantum).

    ``weight`` is the multiplicity of ``h`` on the quantum leg: ``+1`` for the
    defining representation, ``-1`` for the dual one carried by contragredient
    forms.
    """

    kind: str
    L: DynamicalOperator
    R: DynamicalOperator
    weight: int = 1
    form: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.L.n != self.R.n or self.L.gamma != self.R.gamma:
            raise ValueError("L and R must share n and γ")

    @property
    def n(self) -> int:
        return self.L.n

    @property
    def gamma(self) -> complex:
        return self.L.gamma


def identity_pair(n: int, gamma: complex = 0.3, kind: str = "type1") -> LRPair:
    one = TensorOperator.identity(n, 2)
    op = DynamicalOperator(n, gamma, (1, 2), lambda lam, g: one, name="1")
    return LRPair(kind, op, op, 1, "identity")


def _shifted_down(op: DynamicalOperator, lam, g, projector_left: bool) -> TensorOperator:
    """``Σ_k op(λ − γ e_k)`` with ``P_k`` on leg 2, placed left or right of it."""
    n = op.n
    out = np.zeros((n * n, n * n), dtype=DTYPE)
    for k in range(n):
        arg = np.array(lam, dtype=DTYPE)
        arg[k] -= g
        m = op.with_gamma(g).local(arg).data
        p = np.zeros(n)
        p[k] = 1.0
        diag = np.tile(p, n)  # 1 ⊗ P_k
        out += diag[:, None] * m if projector_left else m * diag[None, :]
    return TensorOperator._wrap(n, 2, out)


def canonical_lr(s: StructureSet, kind: str, form: str = "plain") -> LRPair:
    """LR pairs built from the structure matrices themselves (quantum space = V).

    type1/plain: ``(A, B)``; type1/contragredient: ``((A^{-1})^{t2}, (B^{t2})^{-1})``;
    type2/plain: ``(C, D)``.

    type2/contragredient acts on the dual space, where ``h`` has weight ``-e_k``;
    the matrices are evaluated at ``λ − γh_2``:
    ``L = (C(λ−γh_2)^{t2})^{-1}`` and ``R = ((Σ_k P_k^{(2)} D(λ−γe_k))^{t2})^{-1}``.
    ``contragredient-printed`` keeps ``((C^{t2})^{-1}, (D^{-1})^{t2})`` with
    defining weights; it does not satisfy the type-2 relations and is kept as
    a diagnostic.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}")
    n, gamma = s.n, s.gamma

    def op(base, name):
        return DynamicalOperator(n, gamma, (1, 2), base, name=name)

    if form == "plain":
        if kind == "type1":
            return LRPair(kind, s.A, s.B, 1, form)
        return LRPair(kind, s.C, s.D, 1, form)

    if kind == "type1":
        if form == "contragredient-printed":
            raise ValueError("contragredient-printed exists for type2 only")
        L = op(lambda lam, g: partial_transpose(invert(s.A.with_gamma(g).local(lam)), 2), "(A^-1)^t2")
        R = op(lambda lam, g: invert(partial_transpose(s.B.with_gamma(g).local(lam), 2)), "(B^t2)^-1")
        return LRPair(kind, L, R, -1, form)

    if form == "contragredient-printed":
        L = op(lambda lam, g: invert(partial_transpose(s.C.with_gamma(g).local(lam), 2)), "(C^t2)^-1")
        R = op(lambda lam, g: partial_transpose(invert(s.D.with_gamma(g).local(lam)), 2), "(D^-1)^t2")
        return LRPair(kind, L, R, 1, form)

    L = op(lambda lam, g: invert(partial_transpose(_shifted_down(s.C, lam, g, False), 2)), "(C(λ-γh)^t2)^-1")
    R = op(lambda lam, g: invert(partial_transpose(_shifted_down(s.D, lam, g, True), 2)), "((P D(λ-γh))^t2)^-1")
    return LRPair(kind, L, R, -1, form)


def lr_residuals(s: StructureSet, p: LRPair, lam, relations: str | None = None) -> tuple[float, float, float]:
    """Residuals of the three LR relations on ``V1 ⊗ V2 ⊗ H_q'``.

    ``relations`` selects which algebra to test against (defaults to the
    pair's own kind); a mismatch is how the cross-type control is run.
    """
    kind = relations or p.kind
    if kind not in KINDS:
        raise ValueError(f"relations must be one of {KINDS}")

    def hq(op):
        return op.shift(3, p.weight) if kind == "type2" else op

    def e(op):
        return op.evaluate(lam, 3)

    A, B, D = s.A.on(1, 2), s.B.on(1, 2), s.D.on(1, 2)
    L1, L2 = p.L.on(1, 3), p.L.on(2, 3)
    R1, R2 = p.R.on(1, 3), p.R.on(2, 3)
    r1 = rel_residual(e(A) @ e(L1) @ e(L2), e(L2) @ e(L1) @ e(hq(A)))
    r2 = rel_residual(e(R1) @ e(B) @ e(L2.shift(1)), e(L2) @ e(hq(B)) @ e(R1))
    r3 = rel_residual(e(hq(D)) @ e(R1) @ e(R2.shift(1)), e(R2) @ e(R1.shift(2)) @ e(D))
    return r1, r2, r3


def fuse(t: LaxRep, p: LRPair) -> LaxRep:
    """Grow the quantum space: ``L T R`` (type1) or ``L T(λ+γh_q') R`` (type2)."""
    if t.n != p.n:
        raise ValueError(f"dimension mismatch: representation n={t.n}, pair n={p.n}")
    m = t.quantum_legs
    new_leg = m + 2
    ambient = m + 2
    inner = t.operator(p.gamma, tuple(range(1, m + 2)))
    if p.kind == "type2":
        inner = inner.shift(new_leg, p.weight)
    L = p.L.on(1, new_leg)
    R = p.R.on(1, new_leg)

    def evaluator(lam):
        return L.evaluate(lam, ambient) @ inner.evaluate(lam, ambient) @ R.evaluate(lam, ambient)

    return LaxRep(t.n, evaluator, t.quantum_weights + (p.weight,), name=f"{t.name}*{p.kind}/{p.form}")


def chain(t0: LaxRep, pairs, max_dim: int = MAX_AMBIENT_DIM) -> LaxRep:
    """Left fold of :func:`fuse` over ``pairs`` (a spin-chain-like monodromy)."""
    pairs = list(pairs)
    legs = t0.quantum_legs + len(pairs)
    ambient_dim = t0.n ** (2 + legs)
    if ambient_dim > max_dim:
        raise DimensionGuardError(f"chain needs exchange dimension {ambient_dim} > {max_dim}")
    t = t0
    for p in pairs:
        t = fuse(t, p)
    return t
