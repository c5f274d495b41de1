import numpy as np
import pytest

from dynquad.algebra import DimensionGuardError, exchange_residual, identity_set, rs_rational, rs_scalar_lax
from dynquad.dynamical import sample_lambda
from dynquad.fusion import canonical_lr, chain, fuse, identity_pair, lr_residuals
from dynquad.tensor import TensorOperator, rel_residual

PAIRS = [("type1", "plain"), ("type1", "contragredient"), ("type2", "plain"), ("type2", "contragredient")]


def samples(n, count, seed=0, depth=3):
    rng = np.random.default_rng(seed)
    return [sample_lambda(rng, n, 0.3, 0.3, depth=depth) for _ in range(count)]


@pytest.mark.parametrize("form", ["plain", "contragredient"])
@pytest.mark.parametrize("kind", ["type1", "type2"])
def test_identity_set_pairs_are_identity(kind, form):
    p = canonical_lr(identity_set(2), kind, form)
    lam = [0.2, -0.4]
    one = TensorOperator.identity(2, 2)
    assert rel_residual(p.L.local(lam), one) == 0.0 and rel_residual(p.R.local(lam), one) == 0.0
    assert lr_residuals(identity_set(2), p, lam) == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("kind,form", PAIRS)
@pytest.mark.parametrize("n", [2, 3])
def test_canonical_pairs_satisfy_relations(n, kind, form):
    s = rs_rational(n, 0.3)
    p = canonical_lr(s, kind, form)
    for lam in samples(n, 10, seed=n):
        assert max(lr_residuals(s, p, lam)) <= 1e-10


def test_contragredient_weight_is_dual():
    s = rs_rational(2, 0.3)
    assert canonical_lr(s, "type1", "contragredient").weight == -1
    assert canonical_lr(s, "type2", "contragredient").weight == -1
    assert canonical_lr(s, "type1", "plain").weight == 1


def test_printed_type2_contragredient_fails():
    s = rs_rational(2, 0.3)
    p = canonical_lr(s, "type2", "contragredient-printed")
    assert max(lr_residuals(s, p, samples(2, 1)[0])) > 1e-2


def test_printed_form_only_for_type2():
    with pytest.raises(ValueError):
        canonical_lr(rs_rational(2), "type1", "contragredient-printed")


@pytest.mark.parametrize("pair,relations", [(("type1", "plain"), "type2"), (("type2", "plain"), "type1")])
def test_cross_type_control(pair, relations):
    s = rs_rational(2, 0.3)
    p = canonical_lr(s, *pair)
    worst = min(max(lr_residuals(s, p, lam, relations=relations)) for lam in samples(2, 10))
    assert worst >= 1e-3


def test_pairs_tend_to_identity():
    lam = samples(2, 1)[0]
    one = TensorOperator.identity(2, 2)
    for kind, form in PAIRS:
        devs = []
        for g in (1e-2, 1e-3):
            p = canonical_lr(rs_rational(2, g), kind, form)
            devs.append(max(rel_residual(p.L.local(lam), one), rel_residual(p.R.local(lam), one)))
        assert devs[1] < devs[0] / 5 and devs[1] < 1e-1


def test_fuse_with_identity_pair_copies_T():
    t = rs_scalar_lax(2, 0.3)
    lam = [0.6, -0.1]
    fused = fuse(t, identity_pair(2, 0.3))
    assert fused.quantum_weights == (1,)
    assert rel_residual(fused.evaluate(lam), t.evaluate(lam).kron(TensorOperator.identity(2, 1))) < 1e-15


@pytest.mark.parametrize("kind,form", PAIRS)
def test_fused_exchange(kind, form):
    s = rs_rational(2, 0.3)
    t = fuse(rs_scalar_lax(2, 0.3), canonical_lr(s, kind, form))
    for lam in samples(2, 10, seed=5):
        assert exchange_residual(s, t, lam) <= 1e-9


def test_printed_contragredient_breaks_fused_exchange():
    s = rs_rational(2, 0.3)
    t = fuse(rs_scalar_lax(2, 0.3), canonical_lr(s, "type2", "contragredient-printed"))
    assert exchange_residual(s, t, samples(2, 1)[0]) > 1e-3


def test_chain_empty():
    t = rs_scalar_lax(2, 0.3)
    assert chain(t, []) is t


@pytest.mark.parametrize("spec", [
    [("type1", "plain"), ("type2", "plain")],
    [("type1", "plain")] * 3,
    [("type2", "contragredient"), ("type1", "contragredient"), ("type2", "plain")],
])
def test_chain_exchange_n2(spec):
    s = rs_rational(2, 0.3)
    t = chain(rs_scalar_lax(2, 0.3), [canonical_lr(s, *kf) for kf in spec])
    assert t.quantum_legs == len(spec)
    for lam in samples(2, 5, seed=6, depth=2 + len(spec)):
        assert exchange_residual(s, t, lam) <= 1e-8


def test_chain_n3_length2():
    s = rs_rational(3, 0.3)
    t = chain(rs_scalar_lax(3, 0.3), [canonical_lr(s, "type2", "contragredient"), canonical_lr(s, "type1", "plain")])
    for lam in samples(3, 3, seed=7, depth=4):
        assert exchange_residual(s, t, lam) <= 1e-8


def test_chain_weights_track_forms():
    s = rs_rational(2, 0.3)
    t = chain(rs_scalar_lax(2, 0.3), [canonical_lr(s, "type1", "plain"), canonical_lr(s, "type2", "contragredient")])
    assert t.quantum_weights == (1, -1)
    assert t.d_q == 4


def test_chain_dimension_guard():
    s = rs_rational(3, 0.3)
    with pytest.raises(DimensionGuardError):
        chain(rs_scalar_lax(3, 0.3), [canonical_lr(s, "type1", "plain")] * 6)


def test_fuse_dimension_mismatch():
    with pytest.raises(ValueError):
        fuse(rs_scalar_lax(2, 0.3), canonical_lr(rs_rational(3), "type1", "plain"))
