"""Operator core: apply, face classification, assumptions, presets, rescaling."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kimura.errors import DerivativeUnavailable, NotClean
from kimura.geometry import CornerBox, Point, Simplex
from kimura.operator import (
    KimuraOperator,
    PolyField,
    PolynomialFunction,
    SmoothFunction,
    make_preset,
    model1d,
    product_operator,
    remark_counterexample,
    sample_domain,
    wright_fisher,
    PRESET_NAMES,
)


# ---------------------------------------------------------------------------
# apply on hand-computed cases
# ---------------------------------------------------------------------------


def test_apply_1d_model_on_quadratic():
    # L u = x u'' + b u'  on  u = x²:  L u = 2x + 2bx
    L = model1d(0.7)
    u = PolynomialFunction([(1.0, (2,), ())], n=1)
    p = Point([0.3])
    assert L.apply(u, p, allow_fd=False) == pytest.approx(2 * 0.3 + 2 * 0.7 * 0.3)


def test_apply_wright_fisher_on_quadratic():
    # The preset carries the conventional ½:  L u = ½x(1-x) u'', so u = x²
    # gives x(1-x).
    W = wright_fisher(1, np.array([0.0, 0.0]))
    u = PolynomialFunction([(1.0, (2,), ())], n=1)
    assert W.apply(u, Point([0.25]), allow_fd=False) == pytest.approx(0.25 * 0.75)


def test_apply_mixed_terms_2d():
    # b=(1, 2) constant drift, unit leads: L(x₁x₂) = x₂ + 2x₁ (+ a-term 0)
    L = KimuraOperator(dom=CornerBox(2, 0), b=(1.0, 2.0))
    u = PolynomialFunction([(1.0, (1, 1), ())], n=2)
    p = Point([0.2, 0.5])
    assert L.apply(u, p, allow_fd=False) == pytest.approx(0.5 + 2 * 0.2)


def test_apply_finite_difference_fallback():
    L = model1d(0.4)
    u = SmoothFunction(lambda p: float(np.sin(p.x[0])))
    p = Point([0.5])
    exact = 0.5 * (-np.sin(0.5)) + 0.4 * np.cos(0.5)
    assert L.apply(u, p) == pytest.approx(exact, abs=1e-6)
    with pytest.raises(DerivativeUnavailable):
        L.apply(u, p, allow_fd=False)


# ---------------------------------------------------------------------------
# face classification / cleanness
# ---------------------------------------------------------------------------


def test_model1d_tangent_vs_transverse():
    assert model1d(0.0).classify_faces().tangent == frozenset({1})
    fc = model1d(0.5).classify_faces()
    assert fc.transverse == frozenset({1})
    assert fc.beta0 == pytest.approx(0.5)


def test_wright_fisher_is_clean(wf):
    fc = wf.classify_faces()
    assert fc.tangent == frozenset({1, 2})
    assert fc.transverse == frozenset()


def test_product_operator_combines_classifications():
    P = product_operator(model1d(0.0), model1d(0.5))
    fc = P.classify_faces()
    assert fc.tangent == frozenset({1})
    assert fc.transverse == frozenset({2})


def test_counterexample_is_not_clean():
    C = remark_counterexample()
    with pytest.raises(NotClean) as err:
        C.classify_faces()
    assert err.value.witnesses, "a cleanness violation must carry witnesses"
    pt, wt = err.value.witnesses[0]
    assert isinstance(pt, Point)
    assert np.isfinite(wt)


# ---------------------------------------------------------------------------
# assumption report
# ---------------------------------------------------------------------------


def test_check_assumptions_wright_fisher(wf):
    rep = wf.check_assumptions(samples=256)
    assert rep.nonneg_ok
    assert not rep.violations
    # The simplex chart splits ½x(1-x)∂² as x·½(ℓ) + x²·(-½) (a-term), whose
    # reduced form is identically zero: the marginal presentation documented
    # on the report.  A strictly elliptic interior still classifies cleanly.
    assert rep.lambda_estimate == 0.0
    assert not rep.elliptic_ok


def test_check_assumptions_elliptic_box_preset():
    rep = model1d(0.5).check_assumptions(samples=128)
    assert rep.nonneg_ok
    assert rep.elliptic_ok
    assert rep.lambda_estimate > 0


def test_check_assumptions_flags_negative_drift():
    L = model1d(-0.2)
    rep = L.check_assumptions(samples=128)
    assert not rep.nonneg_ok
    assert rep.violations


# ---------------------------------------------------------------------------
# presets registry
# ---------------------------------------------------------------------------


def test_preset_registry_round_trip():
    for name in PRESET_NAMES:
        assert isinstance(name, str)
    L = make_preset("model1d", b=0.3, radius=2.0)
    assert L.preset.name == "model1d"
    assert L.dom.radius == 2.0


def test_make_preset_unknown_name():
    with pytest.raises(ValueError):
        make_preset("not-a-preset")


# ---------------------------------------------------------------------------
# rescaling identity (exact, scalar λ)
# ---------------------------------------------------------------------------


def _poly_operator():
    """A 2-corner, 1-tangential operator with genuinely varying coefficients."""
    n, m = 2, 1
    b = (
        PolyField(((0.5, (0, 0), (0,)), (0.25, (1, 0), (0,))), n, m),
        PolyField(((0.75, (0, 0), (0,)), (0.5, (0, 1), (0,))), n, m),
    )
    a12 = PolyField(((0.1, (0, 0), (0,)),), n, m)
    a = ((PolyField(((0.3, (0, 0), (0,)),), n, m), a12), (a12, PolyField(((0.2, (0, 0), (0,)),), n, m)))
    c = ((PolyField(((0.15, (0, 0), (0,)),), n, m),), (PolyField(((0.05, (1, 0), (0,)),), n, m),))
    d = ((PolyField(((1.0, (0, 0), (0,)), (0.5, (1, 0), (0,))), n, m),),)
    e = (PolyField(((0.2, (0, 0), (1,)),), n, m),)
    lead = (
        PolyField(((1.0, (0, 0), (0,)), (0.5, (0, 1), (0,))), n, m),
        PolyField(((1.5, (0, 0), (0,)),), n, m),
    )
    return KimuraOperator(dom=CornerBox(n, m, 1.0), b=b, a=a, c=c, d=d, e=e, lead=lead)


@pytest.mark.parametrize("lam", [1.0, 0.5, 0.25])
def test_rescale_identity_on_polynomials(lam):
    L = _poly_operator()
    Lp = L.rescale(lam)
    u = PolynomialFunction(
        [(0.7, (2, 0), (0,)), (0.3, (1, 1), (1,)), (-0.2, (0, 0), (2,))], n=2, m=1
    )
    v = u.rescaled_input(lam)
    xs, ys = sample_domain(L.dom, 32, seed=5)
    for x, y in zip(xs, ys):
        zp = Point(x, y)
        z = Point(lam * x, np.sqrt(lam) * y)
        lhs = lam * L.apply(u, z, allow_fd=False)
        rhs = Lp.apply(v, zp, allow_fd=False)
        assert lhs == pytest.approx(rhs, abs=1e-12)


def test_rescale_rejects_simplex_and_bad_lambda(wf):
    with pytest.raises(Exception):
        wf.rescale(0.5)
    with pytest.raises(ValueError):
        model1d(0.0).rescale(1.5)


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------


@given(
    b=st.floats(0.0, 2.0),
    x=st.floats(0.01, 0.99),
    coef=st.floats(-2.0, 2.0),
)
@settings(max_examples=60, deadline=None)
def test_apply_is_linear_in_u(b, x, coef):
    L = model1d(b)
    u = PolynomialFunction([(1.0, (2,), ()), (0.5, (1,), ())], n=1)
    w = PolynomialFunction(
        [(coef * 1.0, (2,), ()), (coef * 0.5, (1,), ())], n=1
    )
    p = Point([x])
    assert L.apply(w, p, allow_fd=False) == pytest.approx(
        coef * L.apply(u, p, allow_fd=False), rel=1e-9, abs=1e-12
    )
