import math

import hypothesis.strategies as st
import mpmath as mp
import numpy as np
import pytest
from hypothesis import given

from guesshelp import (
    Alphabet,
    AlphabetMismatchError,
    CondPmf,
    InvalidDistributionError,
    JointPmf,
    ParameterDomainError,
    Pmf,
    UndefinedConditionalError,
    compose,
    condition,
    conditional_mutual_information,
    entropy,
    joint_kl,
    kl_divergence,
    marginalize,
    mutual_information,
    renyi_entropy,
)

mp.mp.dps = 40

A2 = Alphabet.of_size(2)
A3 = Alphabet.of_size(3)
A4 = Alphabet.of_size(4)


def mp_entropy(probs):
    return float(-mp.fsum(mp.mpf(repr(p)) * mp.log(mp.mpf(repr(p)), 2)
                          for p in probs if p > 0))


def pmf_strategy(min_size=2, max_size=8):
    return st.integers(min_size, max_size).flatmap(
        lambda k: st.lists(st.floats(1e-6, 1.0), min_size=k, max_size=k)
    ).map(lambda v: Pmf.from_values(np.asarray(v) / np.sum(v)))


# ---------------------------------------------------------------------------
# construction and validation
# ---------------------------------------------------------------------------

def test_alphabet_rejects_duplicates():
    with pytest.raises(Exception):
        Alphabet(("a", "a"))


def test_pmf_rejects_bad_sum():
    with pytest.raises(InvalidDistributionError):
        Pmf(A2, [0.6, 0.6])


def test_pmf_rejects_negative_beyond_floor():
    with pytest.raises(InvalidDistributionError):
        Pmf(A2, [1.1, -0.1])


def test_pmf_clamps_tiny_negative_and_renormalizes():
    p = Pmf(A2, [1.0 + 5e-13, -5e-15])
    assert p.probs[1] == 0.0
    assert p.probs.sum() == 1.0


def test_pmf_is_immutable():
    p = Pmf.uniform(A2)
    with pytest.raises(ValueError):
        p.probs[0] = 0.9


def test_cond_pmf_rows_validated():
    with pytest.raises(InvalidDistributionError):
        CondPmf(A2, A2, [[0.5, 0.5], [0.7, 0.7]])


# ---------------------------------------------------------------------------
# entropy
# ---------------------------------------------------------------------------

def test_entropy_uniform_four():
    assert entropy(Pmf.uniform(A4)) == pytest.approx(2.0, abs=1e-12)


def test_entropy_point_mass():
    assert entropy(Pmf.point_mass(A4, 2)) == 0.0


def test_entropy_bernoulli_quarter():
    val = entropy(Pmf(A2, [0.75, 0.25]))
    assert val == pytest.approx(mp_entropy([0.75, 0.25]), abs=1e-12)
    assert round(val, 6) == 0.811278


@given(pmf_strategy())
def test_entropy_bounds(p):
    h = entropy(p)
    assert 0.0 <= h <= math.log2(p.alphabet.size) + 1e-12


# ---------------------------------------------------------------------------
# Renyi entropy
# ---------------------------------------------------------------------------

def test_renyi_uniform_any_order():
    for alpha in (0.25, 0.5, 2.0, 4.0):
        assert renyi_entropy(Pmf.uniform(A4), alpha) == pytest.approx(2.0, abs=1e-12)


def test_renyi_half_bernoulli_quarter():
    expected = float(2 * mp.log(mp.sqrt(mp.mpf("0.25")) + mp.sqrt(mp.mpf("0.75")), 2))
    assert renyi_entropy(Pmf(A2, [0.75, 0.25]), 0.5) == pytest.approx(expected, abs=1e-12)


def test_renyi_continuity_at_one():
    p = Pmf(A2, [0.75, 0.25])
    h = entropy(p)
    assert abs(renyi_entropy(p, 1.0 + 1e-7) - h) < 1e-6
    assert abs(renyi_entropy(p, 1.0 - 1e-7) - h) < 1e-6


def test_renyi_rejects_nonpositive_order():
    with pytest.raises(ParameterDomainError):
        renyi_entropy(Pmf.uniform(A2), 0.0)
    with pytest.raises(ParameterDomainError):
        renyi_entropy(Pmf.uniform(A2), -1.0)


@given(pmf_strategy())
def test_renyi_nonincreasing_in_order(p):
    grid = [0.25, 0.5, 1.0, 2.0, 4.0]
    values = [renyi_entropy(p, a) for a in grid]
    for lo, hi in zip(values[1:], values[:-1]):
        assert lo <= hi + 1e-10


# ---------------------------------------------------------------------------
# relative entropy
# ---------------------------------------------------------------------------

def test_kl_identical_is_zero():
    p = Pmf(A3, [0.2, 0.5, 0.3])
    assert kl_divergence(p, p) == 0.0


def test_kl_support_violation_is_infinite():
    assert kl_divergence(Pmf(A2, [1.0, 0.0]), Pmf(A2, [0.0, 1.0])) == math.inf


def test_kl_bernoulli_values():
    val = kl_divergence(Pmf(A2, [0.5, 0.5]), Pmf(A2, [0.75, 0.25]))
    expected = float(mp.mpf("0.5") * mp.log(mp.mpf("0.5") / mp.mpf("0.25"), 2)
                     + mp.mpf("0.5") * mp.log(mp.mpf("0.5") / mp.mpf("0.75"), 2))
    assert val == pytest.approx(expected, abs=1e-12)
    assert round(val, 6) == 0.207519


def test_kl_alphabet_mismatch():
    with pytest.raises(AlphabetMismatchError):
        kl_divergence(Pmf.uniform(A2), Pmf.uniform(A3))


@given(pmf_strategy(2, 6), st.integers(0, 2 ** 30))
def test_kl_nonnegative_zero_iff_equal(p, salt):
    rng = np.random.default_rng(salt)
    q = Pmf.from_values(rng.dirichlet(np.ones(p.alphabet.size)), p.alphabet)
    d = kl_divergence(q, p)
    assert d >= 0.0
    if np.max(np.abs(q.probs - p.probs)) < 1e-12:
        assert d < 1e-9
    if d == 0.0:
        assert np.max(np.abs(q.probs - p.probs)) < 1e-7


# ---------------------------------------------------------------------------
# mutual information
# ---------------------------------------------------------------------------

def test_mutual_information_product_is_zero():
    j = JointPmf(A2, A3, np.outer([0.4, 0.6], [0.2, 0.3, 0.5]))
    assert mutual_information(j) == pytest.approx(0.0, abs=1e-12)


def test_mutual_information_identity_coupling():
    j = JointPmf(A2, A2, [[0.5, 0.0], [0.0, 0.5]])
    assert mutual_information(j) == pytest.approx(1.0, abs=1e-12)


def test_mutual_information_symmetric_crossover():
    eps = 0.11
    j = JointPmf(A2, A2, [[(1 - eps) / 2, eps / 2], [eps / 2, (1 - eps) / 2]])
    h2 = -(eps * math.log2(eps) + (1 - eps) * math.log2(1 - eps))
    assert mutual_information(j) == pytest.approx(1.0 - h2, abs=1e-12)


@given(st.integers(0, 2 ** 30))
def test_mutual_information_equals_joint_kl_to_product(salt):
    rng = np.random.default_rng(salt)
    m = rng.dirichlet(np.ones(6)).reshape(2, 3)
    j = JointPmf(A2, A3, m)
    prod = JointPmf(A2, A3, np.outer(m.sum(axis=1), m.sum(axis=0)))
    assert mutual_information(j) == pytest.approx(joint_kl(j, prod), abs=1e-10)


def test_conditional_mi_single_symbol_reduces():
    j = JointPmf(A2, A2, [[0.4, 0.1], [0.2, 0.3]])
    single = Pmf.uniform(Alphabet.of_size(1, "u"))
    assert conditional_mutual_information(single, [j]) == pytest.approx(
        mutual_information(j), abs=1e-12
    )


def test_conditional_mi_weighted_average(rng):
    js = [JointPmf(A2, A2, rng.dirichlet(np.ones(4)).reshape(2, 2)) for _ in range(3)]
    w = Pmf.from_values([0.5, 0.3, 0.2], Alphabet.of_size(3, "u"))
    expected = sum(wv * mutual_information(j) for wv, j in zip(w.probs, js))
    assert conditional_mutual_information(w, js) == pytest.approx(expected, abs=1e-12)


# ---------------------------------------------------------------------------
# compose / marginalize / condition
# ---------------------------------------------------------------------------

def test_compose_identity_kernel_diagonal():
    j = compose(Pmf.uniform(A2), CondPmf.identity(A2))
    assert np.allclose(j.probs, [[0.5, 0.0], [0.0, 0.5]])


def test_marginalize_recovers_input():
    p = Pmf(A2, [0.3, 0.7])
    k = CondPmf(A2, A3, [[0.2, 0.5, 0.3], [0.6, 0.1, 0.3]])
    j = compose(p, k)
    assert np.allclose(marginalize(j, 1).probs, p.probs)
    # conditioning recovers the kernel on the support of p
    for y in range(2):
        assert np.allclose(condition(j, y).probs, k.rows[y])


def test_condition_deterministic_coupling():
    j = JointPmf(A2, A2, [[0.5, 0.0], [0.0, 0.5]])
    out = condition(j, 0)
    assert np.allclose(out.probs, [1.0, 0.0])


def test_condition_zero_probability_raises():
    j = JointPmf(A2, A2, [[0.5, 0.5], [0.0, 0.0]])
    with pytest.raises(UndefinedConditionalError):
        condition(j, 1)
