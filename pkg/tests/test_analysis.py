import csv
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cwlab.analysis import (
    characteristic_roots,
    convergents,
    ingham_ratio,
    ingham_threshold,
    modal_infimum,
    paper_h1_bound,
    random_state,
    scan,
    stability_criterion,
    trace_integral,
    transfer_closed_form,
    transfer_numeric_bvp,
    vertical_line_sup,
    weak_modes,
    write_scan_csv,
)
from cwlab.errors import BelowInghamTime, CoincidentRoots, InvalidParams
from cwlab.models import ModalState, ModelConfig, adjoint_frequencies, adjoint_trace

from oracles import trace_energy_quadrature

# characteristic roots -----------------------------------------------------


def test_roots_dirichlet_beta_zero():
    r1, r2 = characteristic_roots("dirichlet", 0.0, 1.0)
    assert (r1, r2) == pytest.approx((1.0, -1.0))


def test_roots_dirichlet_plugin():
    r1, r2 = characteristic_roots("dirichlet", 3.0, 2.0)
    assert r1 == pytest.approx(3 + np.sqrt(13), rel=1e-14)
    assert r2 == pytest.approx(3 - np.sqrt(13), rel=1e-14)
    assert (r1.real, r2.real) == pytest.approx((6.6056, -0.6056), abs=5e-5)


def test_roots_mixed_double_root():
    with pytest.raises(CoincidentRoots):
        characteristic_roots("mixed", 0.0, 1j)


def test_roots_dirichlet_zero_lambda():
    with pytest.raises(InvalidParams):
        characteristic_roots("dirichlet", 0.5, 0.0)


@given(
    kind=st.sampled_from(["dirichlet", "mixed"]),
    beta=st.floats(0.0, 0.99),
    re=st.floats(0.1, 5.0),
    im=st.floats(-60.0, 60.0),
)
def test_roots_vieta(kind, beta, re, im):
    lam = complex(re, im)
    r1, r2 = characteristic_roots(kind, beta, lam)
    shift = 0.0 if kind == "dirichlet" else 1.0
    prod = -(lam**2) - shift
    assert abs(r1 * r2 - prod) <= 1e-12 * max(abs(prod), abs(r1) * abs(r2))
    assert abs(r1 + r2 - beta * lam) <= 1e-12 * (abs(r1) + abs(r2))


# transfer functions -------------------------------------------------------


def test_dirichlet_beta_zero_value():
    cfg = ModelConfig("dirichlet", 0.0, 0.5, 8)
    s = transfer_closed_form(cfg, 2.0)
    expected = np.sinh(-1) * np.sinh(1) / (2 * np.sinh(2))
    assert s.H1 == pytest.approx(expected, rel=1e-14)
    assert s.H1.real == pytest.approx(-0.190399, abs=5e-7)
    b = transfer_numeric_bvp(cfg, 2.0)
    assert b.H1 == pytest.approx(expected, rel=1e-10)


def test_mixed_closed_form_matches_bvp_point():
    cfg = ModelConfig("mixed", 0.5, 0.3, 8)
    a, b = transfer_closed_form(cfg, 1.0), transfer_numeric_bvp(cfg, 1.0)
    assert abs(a.H - b.H) <= 1e-6 * (1 + abs(b.H))


@pytest.mark.parametrize(
    "kind, beta, lam, xi",
    [("dirichlet", 0.3, 1 + 2j, 0.4), ("mixed", 0.4, 0.5, 0.25)],
)
def test_mutual_oracle_points(kind, beta, lam, xi):
    cfg = ModelConfig(kind, beta, xi, 8)
    a, b = transfer_closed_form(cfg, lam), transfer_numeric_bvp(cfg, lam)
    for x, y in ((a.H1, b.H1), (a.H2, b.H2), (a.H, b.H)):
        assert abs(x - y) <= 1e-6 * abs(y)


def test_reflection_symmetry_beta_zero():
    for lam in (0.7 + 3j, 2.0, 1.5 - 11j):
        a = transfer_closed_form(ModelConfig("dirichlet", 0.0, 0.3, 4), lam)
        b = transfer_closed_form(ModelConfig("dirichlet", 0.0, 0.7, 4), lam)
        assert a.H == pytest.approx(b.H, rel=1e-13)


def test_bvp_linear_in_jump():
    cfg = ModelConfig("mixed", 0.6, 0.35, 4)
    a, b = transfer_numeric_bvp(cfg, 0.8 + 4j, 1.0), transfer_numeric_bvp(cfg, 0.8 + 4j, 2.0)
    assert a.H == pytest.approx(b.H, rel=1e-12)
    with pytest.raises(InvalidParams):
        transfer_numeric_bvp(cfg, 1.0, 0.0)


def test_transfer_requires_right_half_plane():
    cfg = ModelConfig("mixed", 0.5, 0.3, 4)
    for fn in (transfer_closed_form, transfer_numeric_bvp):
        with pytest.raises(InvalidParams):
            fn(cfg, -1.0 + 2j)


def test_closed_form_no_overflow_far_out():
    cfg = ModelConfig("mixed", 0.5, 0.3, 4)
    for lam in (900.0 + 5j, 1e-3 + 800j, 400 - 400j):
        s = transfer_closed_form(cfg, lam)
        assert np.isfinite(s.H)
    s = transfer_closed_form(ModelConfig("dirichlet", 0.5, 0.3, 4), 800.0)
    assert np.isfinite(s.H)


@given(
    kind=st.sampled_from(["dirichlet", "mixed"]),
    beta=st.floats(0.0, 0.95),
    xi=st.floats(0.05, 0.95),
    re=st.floats(0.5, 3.0),
    im=st.floats(-50.0, 50.0),
)
def test_closed_form_matches_bvp_property(kind, beta, xi, re, im):
    cfg = ModelConfig(kind, beta, xi, 4)
    a = transfer_closed_form(cfg, complex(re, im))
    b = transfer_numeric_bvp(cfg, complex(re, im))
    assert abs(a.H - b.H) <= 1e-6 * (1 + abs(b.H))
    assert abs(a.H1 - b.H1) <= 1e-6 * (1 + abs(b.H1))
    assert abs(a.H2 - b.H2) <= 1e-6 * (1 + abs(b.H2))


# vertical-line scans ------------------------------------------------------


def test_paper_bound_beta_zero():
    cfg = ModelConfig("dirichlet", 0.0, 0.5, 4)
    assert paper_h1_bound(cfg, 1.0) == pytest.approx(0.5 * np.cosh(1) ** 2 / np.sinh(2), rel=1e-14)
    assert paper_h1_bound(cfg, 1.0) == pytest.approx(0.3283, abs=5e-5)


def test_paper_bound_mixed_plugin():
    cfg = ModelConfig("mixed", 0.3, 0.4, 4)
    g, b, xi, s = 0.7, 0.3, 0.4, np.sqrt(4.09)
    a = g * (b + s)
    direct = np.cosh(a * (xi - 1)) * np.cosh(a) * np.exp(a * xi) / (np.sinh(a) * np.sinh(g * (s - b))) / s
    assert paper_h1_bound(cfg, g) == pytest.approx(direct, rel=1e-13)


def test_vertical_line_below_bound():
    cfg = ModelConfig("dirichlet", 0.0, 0.5, 4)
    res = vertical_line_sup(cfg, 1.0, 40.0, 4001)
    assert res.re_lambda == 2.0
    assert res.sup_H1 <= res.paper_bound * (1 + 1e-9)
    assert res.argmax_H1.real == 2.0


def test_vertical_line_nested_refinement():
    cfg = ModelConfig("mixed", 0.4, 0.3, 4)
    sups = [vertical_line_sup(cfg, 0.5, 30.0, n).sup_H for n in (101, 201, 401, 801)]
    assert all(a <= b for a, b in zip(sups, sups[1:]))


def test_vertical_line_dirichlet_recorded():
    res = vertical_line_sup(ModelConfig("dirichlet", 0.3, 0.3, 4), 1.0, 200.0, 2001)
    assert np.isfinite(res.sup_H) and np.isfinite(res.paper_bound)


def test_vertical_line_arguments():
    cfg = ModelConfig("mixed", 0.4, 0.3, 4)
    with pytest.raises(InvalidParams):
        vertical_line_sup(cfg, 1.0, 10.0, 50)
    with pytest.raises(InvalidParams):
        vertical_line_sup(cfg, 0.0, 10.0, 200)


def test_scan_csv(tmp_path, monkeypatch):
    cfg = ModelConfig("mixed", 0.4, 0.3, 4)
    lams = [1 + 1j, 2 - 3j]
    monkeypatch.setenv("CWL_THREADS", "3")
    samples = scan(cfg, lams)
    monkeypatch.setenv("CWL_THREADS", "1")
    assert [s.H for s in samples] == [s.H for s in scan(cfg, lams)]
    path = tmp_path / "scan.csv"
    write_scan_csv(samples, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["re_lambda", "im_lambda", "abs_H", "abs_H1", "abs_H2", "method"]
    assert [r[5] for r in rows[1:]] == ["closed_form"] * 2 + ["numeric_bvp"] * 2
    assert float(rows[2][1]) == -3.0


# Ingham functionals -------------------------------------------------------


def test_thresholds():
    assert ingham_threshold(ModelConfig("dirichlet", 0.0, 0.3, 4)) == pytest.approx(2.0)
    assert ingham_threshold(ModelConfig("mixed", 0.0, 0.3, 4)) == pytest.approx(2.0)
    cfg = ModelConfig("mixed", 0.5, 0.3, 4)
    assert ingham_threshold(cfg) == pytest.approx(4.25 / (0.5 + np.sqrt(4.25)))


def test_below_threshold_rejected():
    cfg = ModelConfig("dirichlet", 0.0, 0.3, 4)
    st_ = adjoint_frequencies(cfg, 2)
    with pytest.raises(BelowInghamTime):
        ingham_ratio(cfg, st_, 2.0)


@pytest.mark.parametrize("kind", ["dirichlet", "mixed"])
def test_single_mode_ratio_is_T(kind):
    cfg = ModelConfig(kind, 0.5, 0.3, 6)
    full = adjoint_frequencies(cfg, 3)
    one = ModalState(full.n[-1:], full.branch[-1:], full.lam[-1:], [0.7 - 0.2j])
    T = 3.3
    res = ingham_ratio(cfg, one, T)
    assert res.ratio == pytest.approx(T, rel=1e-12)


@pytest.mark.parametrize("kind", ["dirichlet", "mixed"])
def test_closed_form_integral_matches_quadrature(kind):
    cfg = ModelConfig(kind, 0.5, 0.3, 8)
    rng = np.random.default_rng(4)
    T = 1.5 * ingham_threshold(cfg)
    for _ in range(10):
        state = random_state(cfg, rng, 6)
        exact = trace_integral(cfg, state, T)
        quad = trace_energy_quadrature(lambda t, cfg=cfg, state=state: adjoint_trace(cfg, state, t), T)
        assert exact == pytest.approx(quad, rel=1e-8)


def test_ratio_brackets_stable_between_batches():
    cfg = ModelConfig("mixed", 0.5, 0.3, 20)
    T = 1.5 * ingham_threshold(cfg)
    rng = np.random.default_rng(2024)
    brackets = []
    for _ in range(2):
        r = np.array([ingham_ratio(cfg, random_state(cfg, rng), T).ratio for _ in range(50)])
        assert np.all(np.isfinite(r)) and np.all(r > 0)
        brackets.append((r.min(), r.max()))
    (lo1, hi1), (lo2, hi2) = brackets
    assert abs(lo1 - lo2) <= 0.2 * lo1
    assert abs(hi1 - hi2) <= 0.2 * hi1


def test_modal_infimum_examples():
    inf, n = modal_infimum(ModelConfig("mixed", 0.5, 0.5, 4), 10)
    assert inf == pytest.approx(0.0, abs=1e-15) and n == 1
    inf, n = modal_infimum(ModelConfig("mixed", 0.5, 1 / 3, 4), 50)
    assert inf == pytest.approx(0.5, abs=1e-12) and n == 1
    inf, n = modal_infimum(ModelConfig("dirichlet", 0.0, 0.5, 4), 10)
    assert inf == pytest.approx(0.0, abs=1e-15) and n == 2


def test_modal_infimum_nonincreasing():
    cfg = ModelConfig("dirichlet", 0.37, 0.2718, 4)
    vals = [modal_infimum(cfg, n)[0] for n in range(1, 200)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_weak_modes_pick_invisible_modes():
    cfg = ModelConfig("dirichlet", 0.5, 1 / 3, 20)
    np.testing.assert_array_equal(weak_modes(cfg, 3), [12, 15, 18])


# criterion ----------------------------------------------------------------


def test_convergents_of_rational():
    assert list(convergents(Fraction(7, 16))) == [(0, 1), (1, 2), (3, 7), (7, 16)]


@pytest.mark.parametrize(
    "xi, p, q, rule",
    [(1 / 3, 1, 3, True), (2 / 3, 2, 3, False), (3 / 4, 3, 4, True), (0.3333333333, 1, 3, True)],
)
def test_criterion_rationals(xi, p, q, rule):
    v = stability_criterion(xi)
    assert v.rational and (v.p, v.q) == (p, q)
    assert v.paper_rule is rule
    assert v.N_scan == 10 * q


def test_criterion_irrational_default():
    v = stability_criterion(np.sqrt(2) - 0.5)
    assert not v.rational and not v.paper_rule
    assert v.p is None and v.q is None
    assert v.modal_infimum > 0


def test_criterion_tight_tolerance_finds_large_denominator():
    # with a 10⁶ denominator cap a double close to sqrt(2) - 1/2 is matched to 1e-12
    v = stability_criterion(np.sqrt(2) - 0.5, 10**6, 1e-12)
    assert v.rational and v.q > 10**5


def test_criterion_reports_modal_infimum():
    half = stability_criterion(0.5)
    assert half.paper_rule and half.modal_infimum == pytest.approx(0.0, abs=1e-15)
    third = stability_criterion(1 / 3)
    assert third.modal_infimum == pytest.approx(0.5, abs=1e-12) and third.argmin_n == 1
    d = third.to_dict()
    assert set(d) == {"xi", "rational", "p", "q", "paper_rule", "modal_infimum", "argmin_n"}


@given(p=st.integers(1, 200), q=st.integers(2, 200))
def test_criterion_coprime(p, q):
    if p >= q:
        return
    v = stability_criterion(p / q)
    assert v.rational
    assert Fraction(v.p, v.q) == Fraction(p, q)
    assert np.gcd(v.p, v.q) == 1
    assert v.paper_rule == (v.p % 2 == 1)


def test_criterion_arguments():
    with pytest.raises(InvalidParams):
        stability_criterion(1.0)
    with pytest.raises(InvalidParams):
        stability_criterion(0.5, denom_cap=1)
    with pytest.raises(InvalidParams):
        stability_criterion(0.5, tol=0.0)
