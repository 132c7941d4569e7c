import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polylab.exceptions import DomainError
from polylab.lemmafn import (
    EXTENDED_GRID,
    FIGURE1_GRID,
    INV_SQRT2,
    LEMMA2_REGION,
    SCAN_HEADER,
    GridSpec,
    ScanCell,
    dm_dx,
    f_prime,
    gamma_qs,
    grad_h,
    h_nonpositivity_scan,
    h_qs,
    h_region,
    l_qs,
    lemma2_grid,
    m_critical_surface,
    m_qs,
    m_unique_critical_check,
    n_qs,
    write_scan_csv,
)
from polylab.twoqubit import FRange, f_qs

T = np.linspace(0.001, 0.999, 999)


def theta_xi(t):
    root = np.sqrt(1 - t * t)
    return 1 + root, 1 - root


def dn_dt_closed(t, q, s):
    th, xi = theta_xi(t)
    a = th**q + xi**q
    d1 = th ** (q - 1) - xi ** (q - 1)
    omega = q * s * a ** (s - 2) / (t * (1 - t * t))
    return omega * (
        t * t * a * d1 / np.sqrt(1 - t * t)
        + q * (1 - s) * t * t * d1**2
        - (q - 1) * t * t * a * (th ** (q - 2) + xi ** (q - 2))
    )


in_domain_qs = st.tuples(st.floats(1.01, 1.99), st.floats(0, 1)).map(
    lambda p: (p[0], max(p[1], -p[0] ** 2 + 4 * p[0] - 3) + 1e-9)
).filter(lambda p: p[1] <= 1)


# -- h and its gradient ---------------------------------------------------------------


def test_h_vanishes_on_axes():
    for q, s in [(1.5, 0.9), (1, 1), (2, 1)]:
        for v in np.linspace(0, 1, 11):
            assert h_qs(0.0, v, q, s) == 0.0
            assert h_qs(v, 0.0, q, s) == 0.0


def test_h_example_and_composition():
    value = h_qs(0.6, 0.6, 1.5, 0.9)
    ref = f_qs(math.hypot(0.6, 0.6), 1.5, 0.9) - 2 * f_qs(0.6, 1.5, 0.9)
    assert value == pytest.approx(ref, abs=1e-15)
    assert value <= 0


@given(st.floats(0, 1), st.floats(0, 1), in_domain_qs)
def test_h_symmetric(x, y, qs):
    if x * x + y * y > 1:
        return
    q, s = qs
    assert h_qs(x, y, q, s) == h_qs(y, x, q, s)


def test_h_rejects_outside_d():
    with pytest.raises(DomainError):
        h_qs(0.8, 0.8, 1.5, 0.9)
    with pytest.raises(DomainError):
        h_qs(-0.1, 0.2, 1.5, 0.9)
    with pytest.raises(DomainError):
        h_qs(0.3, 0.3, 0.5, 0.9)


def test_grad_symmetric_point():
    gx, gy = grad_h(0.4, 0.4, 1.5, 0.8)
    assert gx == gy


@pytest.mark.parametrize("q, s", [(1.5, 0.8), (1.2, 0.7), (1.0, 1.0), (1.7, 0.0), (2.0, 1.0), (2.5, 0.9)])
def test_grad_matches_finite_differences(q, s):
    rng = np.random.default_rng(5)
    step = 1e-5
    count = 0
    while count < 100:
        x, y = rng.uniform(0.02, 0.98, size=2)
        if x * x + y * y > 0.96:
            continue
        fx = (h_qs(x + step, y, q, s) - h_qs(x - step, y, q, s)) / (2 * step)
        fy = (h_qs(x, y + step, q, s) - h_qs(x, y - step, q, s)) / (2 * step)
        gx, gy = grad_h(x, y, q, s)
        assert abs(gx - fx) < 1e-6 and abs(gy - fy) < 1e-6
        count += 1


def test_grad_at_spec_point():
    step = 1e-5
    fx = (h_qs(0.3 + step, 0.4, 1.5, 0.8) - h_qs(0.3 - step, 0.4, 1.5, 0.8)) / (2 * step)
    assert grad_h(0.3, 0.4, 1.5, 0.8)[0] == pytest.approx(fx, abs=1e-6)


def test_grad_factorization():
    # components are Gamma x (n(x) - n(r))
    q, s, x, y = 1.5, 0.8, 0.3, 0.4
    g = gamma_qs(q, s)
    r = math.hypot(x, y)
    gx, gy = grad_h(x, y, q, s)
    assert gx == pytest.approx(g * x * (n_qs(x, q, s) - n_qs(r, q, s)), abs=1e-13)
    assert gy == pytest.approx(g * y * (n_qs(y, q, s) - n_qs(r, q, s)), abs=1e-13)


def test_grad_needs_interior():
    with pytest.raises(DomainError):
        grad_h(0.0, 0.5, 1.5, 0.8)
    with pytest.raises(DomainError):
        grad_h(0.6, 0.8, 1.5, 0.8)


@pytest.mark.parametrize("q, s", [(1.5, 0.9), (1.0, 0.5), (2.0, 0.0), (1.3, 1.0)])
def test_f_prime_matches_finite_differences(q, s):
    step = 1e-6
    t = np.linspace(0.05, 0.95, 19)
    fd = (f_qs(t + step, q, s) - f_qs(t - step, q, s)) / (2 * step)
    assert np.max(np.abs(f_prime(t, q, s) - fd)) < 1e-7


# -- n and its derivative --------------------------------------------------------------


def test_n_examples():
    # decreasing in t: n(0.5) = 1.4168959..., n(0.6) = 1.3769509...
    assert n_qs(0.5, 1.5, 0.9) > n_qs(0.6, 1.5, 0.9) > 0
    assert n_qs(0.5, 1.5, 0.9) == pytest.approx(1.4168959148620997, abs=1e-14)
    with pytest.raises(DomainError):
        n_qs(1.0, 1.5, 0.9)
    with pytest.raises(DomainError):
        gamma_qs(1.0, 0.5)


def test_n_strictly_decreasing_on_lemma2_grid():
    # strict monotonicity is what rules out interior critical points of h;
    # the direction matches h <= 0 (f(sqrt u) concave in u)
    for q, s in lemma2_grid(12):
        if q in (1.0, 2.0):
            continue
        assert np.all(np.diff(n_qs(T, q, s)) < 0)


def test_n_constant_at_two_one():
    v = n_qs(T, 2.0, 1.0)
    assert np.allclose(v, v[0], atol=1e-12)


@pytest.mark.parametrize("q, s", [(1.5, 0.9), (1.2, 0.5), (1.8, 0.97), (1.5, 0.75)])
def test_dn_dt_closed_form(q, s):
    step = 1e-6
    t = np.linspace(0.02, 0.98, 49)
    fd = (n_qs(t + step, q, s) - n_qs(t - step, q, s)) / (2 * step)
    assert np.allclose(dn_dt_closed(t, q, s), fd, rtol=1e-6, atol=1e-8)
    assert np.all(dn_dt_closed(t, q, s) < 0)


def test_dn_dt_changes_sign_outside_domain():
    # (1.8, 0.7) lies below -q^2 + 4q - 3 = 0.96
    d = dn_dt_closed(np.linspace(0.02, 0.98, 49), 1.8, 0.7)
    assert d.min() < 0 < d.max()


# -- identities used in the monotonicity argument ------------------------------------


def test_theta_xi_relations():
    th, xi = theta_xi(T)
    assert np.allclose(th + xi, 2, atol=1e-15)
    assert np.allclose(th * xi, T * T, atol=1e-15)
    assert np.allclose(th - xi, 2 * np.sqrt(1 - T * T), atol=1e-15)


@pytest.mark.parametrize("q", [1.1, 1.5, 1.9, 2.5])
def test_squared_identity_has_factor_minus_four(q):
    th, xi = theta_xi(T)
    lhs = (th ** (q - 1) - xi ** (q - 1)) ** 2 - (th**q + xi**q) * (th ** (q - 2) + xi ** (q - 2))
    assert np.allclose(lhs, -4 * T ** (2 * q - 4), rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("q", [1.1, 1.5, 1.9])
def test_bracket_relation(q):
    th, xi = theta_xi(T)
    root = np.sqrt(1 - T * T)
    lhs = (th ** (q - 1) - xi ** (q - 1)) / root - 2 * (th ** (q - 2) + xi ** (q - 2))
    rhs = T * T * (th ** (q - 3) - xi ** (q - 3)) / root
    assert np.allclose(lhs, rhs, rtol=1e-7, atol=1e-9)


@pytest.mark.parametrize("alpha", [0.0, 0.3, 0.7, 1.0, 2.0, 3.0, 5.0])
def test_difference_lower_bound(alpha):
    th, xi = theta_xi(T)
    assert np.all(th**alpha - xi**alpha >= 2 * alpha * np.sqrt(1 - T * T) - 1e-12)


@pytest.mark.parametrize("alpha", [-2.0, -0.5, 0.0, 1.0, 1.5, 3.0])
def test_sum_lower_bound(alpha):
    th, xi = theta_xi(T)
    assert np.all(th**alpha + xi**alpha >= 2 - 1e-12)


def test_lower_bounds_fail_outside_their_ranges():
    th, xi = theta_xi(np.array([0.5]))
    assert th[0] ** -1 - xi[0] ** -1 < 2 * -1 * math.sqrt(0.75)
    assert th[0] ** 0.5 + xi[0] ** 0.5 < 2


# -- m and l ---------------------------------------------------------------------


def test_m_endpoints_vanish():
    for q, s in [(1.5, 0.9), (1.2, 0.4), (2.0, 1.0), (2.5, 0.2)]:
        assert m_qs(0.0, q, s) == pytest.approx(0, abs=1e-14)
        assert m_qs(1.0, q, s) == pytest.approx(0, abs=1e-14)


def test_m_examples():
    assert m_qs(INV_SQRT2, 1.5, 1.0) <= 0
    assert np.sign(l_qs(0.4, 1.7, 0.9)) == np.sign(m_qs(0.4, 1.7, 0.9))


def test_l_is_h_on_circle():
    for q, s in [(1.5, 0.9), (1.8, 0.7), (2.5, 1.0)]:
        for x in np.linspace(0.05, 0.95, 7):
            y = math.sqrt(1 - x * x)
            assert l_qs(x, q, s) == pytest.approx(h_qs(x, y, q, s), abs=1e-12)


def test_l_sign_matches_m_on_grid():
    x = np.linspace(0, 1, 101)
    for q in np.linspace(1.05, 2.5, 8):
        for s in np.linspace(0.05, 1, 8):
            assert np.all(np.sign(l_qs(x, q, s)) == np.sign(m_qs(x, q, s)))


def test_l_singular():
    with pytest.raises(DomainError):
        l_qs(0.5, 1.0, 0.5)
    with pytest.raises(DomainError):
        l_qs(0.5, 1.5, 0.0)


@pytest.mark.parametrize("q, s", [(1.5, 0.9), (1.999, 1.0), (1.2, 0.4)])
def test_dm_dx_matches_finite_differences(q, s):
    step = 1e-6
    x = np.linspace(0.05, 0.95, 19)
    fd = (m_qs(x + step, q, s) - m_qs(x - step, q, s)) / (2 * step)
    assert np.allclose(dm_dx(x, q, s), fd, atol=1e-7)
    assert abs(dm_dx(INV_SQRT2, q, s)) < 1e-9


@pytest.mark.parametrize("q, s", [(1.5, 0.9), (1.999, 1.0)])
def test_unique_critical_point(q, s):
    check = m_unique_critical_check(q, s)
    assert check.unique
    assert check.points[0] == pytest.approx(INV_SQRT2, abs=1e-9)


# -- scans ------------------------------------------------------------------------


def test_grid_spec_validation_and_round_trip():
    with pytest.raises(ValueError):
        GridSpec((2, 1, 5))
    with pytest.raises(ValueError):
        GridSpec(s_range=(0, 1, 1))
    with pytest.raises(ValueError):
        GridSpec(s_range=(1, 1, 2))
    with pytest.raises(ValueError):
        GridSpec.from_dict({"bogus": 1})
    assert GridSpec((1.5, 1.5, 1), (0.75, 0.75, 1)).nodes() == [(1.5, 0.75)]
    g = GridSpec((1, 2, 3), (0, 1, 4), x_steps=10, domain_mode=LEMMA2_REGION)
    assert GridSpec.from_dict(g.to_dict()) == g
    assert all(FRange(q, s).valid_lemma2 for q, s in g.nodes())


def test_grid_node_order():
    nodes = GridSpec((1, 2, 3), (0, 1, 2)).nodes()
    assert nodes == [(1.0, 0.0), (1.0, 1.0), (1.5, 0.0), (1.5, 1.0), (2.0, 0.0), (2.0, 1.0)]


def test_lemma2_grid_all_in_domain():
    nodes = lemma2_grid(50)
    assert len(nodes) == 2500
    assert all(FRange(q, s).valid_lemma2 for q, s in nodes)


def test_h_scan_examples():
    res = h_nonpositivity_scan(1.5, 0.9, 400)
    assert res.max_value <= 1e-12
    assert h_nonpositivity_scan(1.0, 1.0, 400).max_value <= 1e-12
    # x = 0 row is exactly zero, so the max is at least 0
    assert res.max_value >= 0.0


def test_h_scan_on_coarse_lemma2_grid():
    worst = max(h_nonpositivity_scan(q, s, 100).max_value for q, s in lemma2_grid(15))
    assert worst <= 1e-12


def test_h_scan_positive_outside_domain():
    assert h_nonpositivity_scan(1.1, 0.0, 100).max_value > 0 or h_nonpositivity_scan(2.5, 0.1, 100).max_value > 0


def test_m_surface_figure_box():
    cells = m_critical_surface(FIGURE1_GRID)
    assert len(cells) == 2500
    inside = [c.value for c in cells if c.in_domain]
    assert inside and max(inside) <= 1e-12
    one_one = [c for c in cells if c.q == 1.0 and c.s == 1.0][0]
    assert one_one.value == pytest.approx(0, abs=1e-14)


def test_m_surface_contrast_in_extended_box():
    cells = m_critical_surface(EXTENDED_GRID)
    assert any(c.value > 0 for c in cells if not c.in_domain)


def test_threads_preserve_order():
    grid = GridSpec((1, 2, 6), (0, 1, 6), x_steps=30)
    assert m_critical_surface(grid, threads=3) == m_critical_surface(grid)
    assert h_region(grid, threads=3) == h_region(grid)


def test_scan_csv_format(tmp_path):
    cells = [ScanCell(1.5, 0.9, 0.1, 0.2, -1 / 3, True), ScanCell(2.5, 0.1, 0.0, 0.0, 0.0, False)]
    path = tmp_path / "scan.csv"
    write_scan_csv(cells, path)
    rows = list(csv.reader(path.open()))
    assert tuple(rows[0]) == SCAN_HEADER == ("q", "s", "x", "y", "value", "in_domain")
    assert rows[1] == ["1.5", "0.90000000000000002", "0.10000000000000001", "0.20000000000000001",
                       "-0.33333333333333331", "1"]
    assert rows[2][-1] == "0"
    assert float(rows[1][4]) == -1 / 3
