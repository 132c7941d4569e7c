import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polylab.entropy import QSParams, unified_entropy
from polylab.exceptions import DimensionError, DomainError
from polylab.qstate import (
    Bipartition,
    DensityMatrix,
    PureState,
    basis_state,
    bell,
    fidelity_root_sum,
    make_rng,
    maximally_mixed,
    partial_trace,
    random_mixed,
    w_state,
    werner,
)
from polylab.twoqubit import (
    FRange,
    calE,
    coa_analytic,
    concurrence_pure,
    concurrence_wootters,
    e21_pure,
    f_qs,
    spin_flip,
    ue_2q_analytic,
    ueoa_lower_bound,
    wootters_spectrum,
)

from conftest import assert_close, haar_states, mixed_states

IN_DOMAIN = [(1, 1), (1, 0.25), (1.2, 1), (1.5, 0.75), (1.5, 0.9), (2, 1), (2, 0.5), (2.5, 1), (3, 1), (1.7, 0.1)]


def _binary_h(p):
    return -p * math.log(p) - (1 - p) * math.log(1 - p) if 0 < p < 1 else 0.0


# -- spin flip ------------------------------------------------------------------


def test_spin_flip_examples():
    flipped = spin_flip(basis_state([0, 0]).density())
    assert_close(flipped.matrix, basis_state([1, 1]).density().matrix, 1e-15)
    assert_close(spin_flip(maximally_mixed(2)).matrix, np.eye(4) / 4, 1e-15)


def test_spin_flip_involution():
    for rho in mixed_states(2, 3, 20, 1):
        assert_close(spin_flip(spin_flip(rho)).matrix, rho.matrix, 1e-12)


def test_spin_flip_requires_two_qubits():
    with pytest.raises(DimensionError):
        spin_flip(maximally_mixed(1))


# -- concurrence -------------------------------------------------------------------


def test_concurrence_pure_examples():
    assert concurrence_pure(bell()) == pytest.approx(1, abs=1e-12)
    assert concurrence_pure(basis_state([0, 1])) == 0.0
    w = concurrence_pure(w_state(3), Bipartition.of((0, 1, 2), {0}))
    assert w == pytest.approx(math.sqrt(8 / 9), abs=1e-12)


def test_concurrence_pure_matches_marginal_eigenvalues():
    # single-qubit side: C = 2 sqrt(l0 l1)
    for psi in haar_states(3, 20, 2):
        lam = partial_trace(psi, {1}).spectrum
        cut = Bipartition.of(psi.labels, {1})
        assert concurrence_pure(psi, cut) == pytest.approx(2 * math.sqrt(lam[0] * lam[1]), abs=1e-10)


def test_wootters_examples():
    assert concurrence_wootters(bell().density()) == pytest.approx(1, abs=1e-12)
    assert concurrence_wootters(maximally_mixed(2)) == 0.0
    assert concurrence_wootters(werner(0.9)) == pytest.approx(0.85, abs=1e-12)


@pytest.mark.parametrize("p", np.linspace(0, 1, 21))
def test_werner_closed_form(p):
    assert concurrence_wootters(werner(p)) == pytest.approx(max(0.0, (3 * p - 1) / 2), abs=1e-12)


def test_wootters_matches_concurrence_pure():
    for psi in haar_states(2, 50, 3):
        assert concurrence_wootters(psi.density()) == pytest.approx(concurrence_pure(psi), abs=1e-10)


def test_wootters_spectrum_against_eigenvalue_oracle():
    # oracle: square roots of the eigenvalues of rho rho~
    for rho in mixed_states(2, 4, 20, 4):
        ev = np.linalg.eigvals(rho.matrix @ spin_flip(rho).matrix)
        ref = np.sort(np.sqrt(np.clip(ev.real, 0, None)))[::-1]
        assert_close(wootters_spectrum(rho), ref, 1e-8)


def test_wootters_spectrum_rank_deficiency_is_exact():
    for rank in (1, 2, 3):
        for rho in mixed_states(2, rank, 5, 40 + rank):
            assert np.all(wootters_spectrum(rho)[rank:] == 0.0)


def test_coa_examples():
    assert coa_analytic(bell().density()) == pytest.approx(1, abs=1e-12)
    for psi in haar_states(2, 20, 5):
        assert coa_analytic(psi.density()) == pytest.approx(concurrence_pure(psi), abs=1e-10)


def test_coa_equals_fidelity_with_spin_flip():
    for rho in mixed_states(2, 4, 20, 6):
        assert coa_analytic(rho) == pytest.approx(fidelity_root_sum(rho, spin_flip(rho)), abs=1e-10)


@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_coa_dominates_concurrence(seed, rank):
    rho = random_mixed(2, rank, make_rng(seed))
    c, ca = concurrence_wootters(rho), coa_analytic(rho)
    assert 0 <= c <= ca + 1e-15 <= 1 + 1e-15


# -- FRange --------------------------------------------------------------------


@pytest.mark.parametrize(
    "q, s, functional, lemma2",
    [
        (1, 1, True, True),
        (2, 1, True, True),
        (1.5, 0.75, True, True),
        (1.5, 0.5, True, False),  # below -q^2 + 4q - 3 = 0.75
        (3, 1, True, False),
        (3.5, 1, False, False),
        (0.9, 0.5, False, False),
        (2, 1.01, False, False),
        (1, 0, True, True),
        (2, 0, True, False),
    ],
)
def test_frange_flags(q, s, functional, lemma2):
    r = FRange(q, s)
    assert r.valid_functional is functional
    assert r.valid_lemma2 is lemma2


def test_frange_is_exact_at_boundary():
    # q s = 3 exactly is allowed; the next float up is not
    assert FRange(3.0, 1.0).valid_functional
    assert not FRange(3.0, np.nextafter(1.0, 2.0)).valid_functional
    assert FRange(1.5, 0.75).valid_lemma2
    assert not FRange(1.5, np.nextafter(0.75, 0.0)).valid_lemma2


def test_frange_errors_name_the_constraint():
    with pytest.raises(DomainError, match="q >= 1"):
        FRange(0.5, 0.5).require_functional()
    with pytest.raises(DomainError, match="q\\*s <= 3"):
        FRange(3.5, 1).require_functional()
    with pytest.raises(DomainError, match="-q\\^2"):
        FRange(1.5, 0.5).require_lemma2()


def test_frange_accepts_q_just_below_one():
    FRange(1 - 5e-8, 0.5).require_functional()


# -- f_qs and calE ------------------------------------------------------------------


def test_f_zero_is_exactly_zero():
    for q, s in IN_DOMAIN:
        assert f_qs(0.0, q, s) == 0.0


def test_f_21_is_half_square():
    x = np.linspace(0, 1, 1001)
    assert_close(f_qs(x, 2, 1), x**2 / 2, 1e-12)
    for v in (0.3, 0.7, 1.0):
        assert f_qs(v, 2, 1) == pytest.approx(v * v / 2, abs=1e-15)


def test_calE_examples():
    assert calE(0.0) == 0.0
    assert calE(1.0) == pytest.approx(math.log(2), abs=1e-12)
    # H((1 - 1/sqrt2) / 2) = 0.600876 bits
    assert calE(2**-0.5) == pytest.approx(_binary_h((1 - 2**-0.5) / 2), abs=1e-15)
    assert calE(2**-0.5) == pytest.approx(0.600876 * math.log(2), abs=1e-6)


def test_calE_matches_binary_entropy_oracle():
    for x in np.linspace(0, 1, 101):
        ref = _binary_h((1 - math.sqrt(1 - x * x)) / 2)
        assert calE(x) == pytest.approx(ref, abs=1e-14)


@pytest.mark.parametrize("s", [0.0, 0.25, 1.0])
def test_f_limit_is_calE(s):
    x = np.linspace(0, 1, 1001)
    assert_close(f_qs(x, 1.0, s), calE(x), 1e-9)
    assert_close(f_qs(x, 1 + 2e-7, s), calE(x), 1e-5)


def test_f_rejects_bad_arguments():
    with pytest.raises(DomainError):
        f_qs(1.2, 2, 1)
    with pytest.raises(DomainError):
        f_qs(-0.1, 2, 1)
    with pytest.raises(DomainError):
        f_qs(0.5, 4, 1)


def test_f_vector_and_scalar():
    assert isinstance(f_qs(0.5, 2, 1), float)
    assert f_qs(np.array([0.5, 1.0]), 2, 1).shape == (2,)


@pytest.mark.parametrize("q, s", IN_DOMAIN)
def test_f_monotone_and_convex(q, s):
    x = np.linspace(0, 1, 1001)
    y = f_qs(x, q, s)
    assert np.all(np.diff(y) >= -1e-14)
    assert np.all(np.diff(y, 2) >= -1e-12)


@pytest.mark.parametrize("q, s", IN_DOMAIN)
def test_functional_relation_on_pure_states(q, s):
    params = QSParams(q, s)
    for psi in haar_states(2, 30, 7):
        marginal = unified_entropy(partial_trace(psi, {0}), params)
        assert f_qs(concurrence_pure(psi), q, s) == pytest.approx(marginal, abs=1e-9)


def test_saturation_cap():
    for psi in haar_states(2, 30, 8):
        c = concurrence_pure(psi)
        for q, s in IN_DOMAIN:
            assert f_qs(c, q, s) <= f_qs(1.0, q, s) + 1e-15


def test_e_half_two_is_concurrence():
    params = QSParams(0.5, 2)
    for psi in haar_states(2, 200, 9):
        value = unified_entropy(partial_trace(psi, {0}), params)
        assert value == pytest.approx(concurrence_pure(psi), abs=1e-10)


# -- derived quantities ------------------------------------------------------------


def test_ue_2q_examples():
    assert ue_2q_analytic(bell().density(), 2, 1) == pytest.approx(0.5, abs=1e-12)
    assert ue_2q_analytic(maximally_mixed(2), 1.5, 0.9) == 0.0
    psi = haar_states(2, 1, 10)[0]
    ref = unified_entropy(partial_trace(psi, {0}), QSParams(1.5, 0.9))
    assert ue_2q_analytic(psi.density(), 1.5, 0.9) == pytest.approx(ref, abs=1e-9)


def test_ue_2q_requires_domain():
    with pytest.raises(DomainError):
        ue_2q_analytic(bell().density(), 0.5, 1)


def test_ueoa_lower_bound_examples():
    assert ueoa_lower_bound(bell().density(), 1.5, 0.8) == pytest.approx(f_qs(1.0, 1.5, 0.8), abs=1e-12)
    for psi in haar_states(2, 10, 11):
        ref = unified_entropy(partial_trace(psi, {0}), QSParams(1.5, 0.8))
        assert ueoa_lower_bound(psi.density(), 1.5, 0.8) == pytest.approx(ref, abs=1e-9)


def test_e21_examples():
    assert e21_pure(bell()) == pytest.approx(0.5, abs=1e-15)
    assert e21_pure(basis_state([0, 0])) == 0.0
    psi = PureState([math.sqrt(0.9), 0, 0, math.sqrt(0.1)])
    assert e21_pure(psi) == pytest.approx(0.18, abs=1e-15)
    assert concurrence_pure(psi) == pytest.approx(0.6, abs=1e-15)


def test_e21_is_half_tangle():
    for psi in haar_states(2, 20, 12):
        assert e21_pure(psi) == pytest.approx(concurrence_pure(psi) ** 2 / 2, abs=1e-12)


def test_mixed_state_with_labels_passes_through():
    rho = DensityMatrix(werner(0.7).matrix, ("a", "b"))
    assert concurrence_wootters(rho) == pytest.approx(0.55, abs=1e-12)
