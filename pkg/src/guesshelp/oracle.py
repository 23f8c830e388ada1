"""Exact evaluation of the guessing problem at tiny blocklengths.

Everything here is exhaustive or exactly bounded: sequences are enumerated,
helper tables are enumerated (or locally searched with the result flagged
inexact), guessing orders are enumerated up to the permutation cap or built
greedily as a certified upper bound.  This module is the ground-truth
companion to the asymptotic solver: no approximation enters without an
``exact`` flag saying so.

Sequences over an alphabet of size K are indexed lexicographically: index
sum_i x_i * K^(n-1-i), i.e. the first letter is the most significant digit.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .prob import Pmf, ProbabilityError, entropy
from .ratedist import DistortionSpec
from .exponents import ProblemSpec, SolverOptions, compute_exponent

STATE_SPACE_CAP = 10 ** 6
EXHAUSTIVE_ORDER_CAP = 8          # candidate count; 8! = 40320 permutations
EXHAUSTIVE_HELPER_CAP = 10 ** 5   # helper table count M ** |Y|^n


class ResourceCapError(ProbabilityError):
    """An oracle computation exceeds its exhaustive-search size cap."""


@dataclass(frozen=True, eq=False)
class FiniteNInstance:
    """A blocklength-n instance with M helper messages."""

    spec: ProblemSpec
    n: int
    message_count: int

    def __post_init__(self):
        if self.n < 1:
            raise ProbabilityError("blocklength must be >= 1")
        if self.message_count < 1:
            raise ProbabilityError("message count must be >= 1")
        nx = self.spec.x_alphabet.size
        ny = self.spec.y_alphabet.size
        if (nx ** self.n) * (ny ** self.n) > STATE_SPACE_CAP:
            raise ResourceCapError(
                f"|X|^n * |Y|^n = {(nx ** self.n) * (ny ** self.n)} exceeds the "
                f"cap {STATE_SPACE_CAP}"
            )


@dataclass(frozen=True, eq=False)
class Helper:
    """Total map from observation-sequence index to a message."""

    table: tuple

    def message(self, y_index):
        return self.table[y_index]


@dataclass(frozen=True, eq=False)
class GuessOrder:
    """Ordered reconstruction-sequence indexes guessed for one message.

    No index repeats, and the listed prefix covers every source sequence.
    """

    guesses: tuple


@dataclass(frozen=True, eq=False)
class OracleResult:
    moment: float
    normalized_exponent: float
    best_helper: Helper
    best_orders: tuple        # GuessOrder per message
    exact: bool


# ---------------------------------------------------------------------------
# sequence enumeration helpers
# ---------------------------------------------------------------------------

def _sequences(alphabet_size, n):
    return list(itertools.product(range(alphabet_size), repeat=n))


def _pair_distortion_table(spec: ProblemSpec, n):
    """Average per-letter distortion for every (x-seq, xhat-seq) pair."""
    d = spec.distortion.matrix
    nx = spec.x_alphabet.size
    nxh = spec.distortion.reconstruction_alphabet.size
    x_seqs = _sequences(nx, n)
    xh_seqs = _sequences(nxh, n)
    table = np.zeros((len(x_seqs), len(xh_seqs)))
    for i, xs in enumerate(x_seqs):
        for j, hs in enumerate(xh_seqs):
            table[i, j] = sum(d[a, b] for a, b in zip(xs, hs)) / n
    return table


def _joint_power(spec: ProblemSpec, n):
    """P^{(n)}(x-seq, y-seq) as a (|X|^n, |Y|^n) array via Kronecker powers."""
    m = spec.p_xy.probs
    out = np.array([[1.0]])
    for _ in range(n):
        out = np.kron(out, m)
    return out


def covers(x_seq, xhat_seq, spec: ProblemSpec, n):
    """Whether a reconstruction sequence meets the per-letter budget for a
    source sequence (boundary inclusive within 1e-12)."""
    if len(x_seq) != n or len(xhat_seq) != n:
        raise ProbabilityError("sequence length does not match the blocklength")
    d = spec.distortion.matrix
    xa = spec.x_alphabet
    ha = spec.distortion.reconstruction_alphabet
    total = sum(d[xa.index(a), ha.index(b)] for a, b in zip(x_seq, xhat_seq))
    return total / n <= spec.distortion.budget + 1e-12


# ---------------------------------------------------------------------------
# optimal guessing orders
# ---------------------------------------------------------------------------

def _order_moment_exhaustive(weights, cover, rho):
    """Exact minimum of sum_x w(x) * (first covering position)^rho over all
    candidate orders; ties between orders resolved toward the
    lexicographically first permutation."""
    n_cand = cover.shape[1]
    # group source sequences by their coverage mask (bitmask over candidates)
    mask_weight = {}
    for i, w in enumerate(weights):
        bits = 0
        col = cover[i]
        for j in range(n_cand):
            if col[j]:
                bits |= 1 << j
        if bits == 0:
            raise ProbabilityError("uncovered source sequence; coverability violated")
        if w > 0.0:
            mask_weight[bits] = mask_weight.get(bits, 0.0) + float(w)
    pow_cache = [(k + 1) ** rho for k in range(n_cand)]
    best = math.inf
    best_perm = None
    for perm in itertools.permutations(range(n_cand)):
        pos = [0] * n_cand
        for rank, cand in enumerate(perm):
            pos[cand] = rank
        total = 0.0
        for bits, w in mask_weight.items():
            first = n_cand
            b = bits
            while b:
                j = (b & -b).bit_length() - 1
                if pos[j] < first:
                    first = pos[j]
                b &= b - 1
            total += w * pow_cache[first]
            if total >= best:
                break
        if total < best:
            best = total
            best_perm = perm
    return best, list(best_perm)


def _order_moment_greedy(weights, cover, rho):
    """Greedy order: each guess covers the largest remaining weight (ties by
    candidate index).  Upper-bounds the exhaustive optimum."""
    n_src, n_cand = cover.shape
    remaining = np.asarray(weights, dtype=float).copy()
    alive = remaining > 0.0
    uncovered_any = np.ones(n_src, dtype=bool)
    order = []
    used = np.zeros(n_cand, dtype=bool)
    moment = 0.0
    step = 0
    while True:
        gains = cover[alive & uncovered_any].astype(float).T @ remaining[alive & uncovered_any] \
            if np.any(alive & uncovered_any) else np.zeros(n_cand)
        gains[used] = -1.0
        j = int(np.argmax(gains))
        if gains[j] <= 0.0:
            # weighted mass exhausted; extend by coverage counts for the
            # remaining (zero-weight) sequences, ties by index
            counts = cover[uncovered_any].sum(axis=0).astype(float)
            counts[used] = -1.0
            j = int(np.argmax(counts))
            if counts[j] <= 0.0:
                break
        used[j] = True
        order.append(j)
        step += 1
        newly = uncovered_any & cover[:, j]
        moment += float(remaining[newly & alive].sum()) * (step ** rho)
        uncovered_any &= ~cover[:, j]
        if not np.any(uncovered_any):
            break
    if np.any(uncovered_any):
        raise ProbabilityError("greedy order failed to cover every sequence")
    return moment, order


def optimal_order_moment(posterior: Pmf, spec: ProblemSpec, n, rho, mode="exhaustive"):
    """Least rho-th moment of the guess count against a fixed source law.

    ``posterior`` lives on the length-n source sequences (lexicographic
    order).  Exhaustive mode enumerates every candidate permutation and is
    exact; greedy mode returns an upper bound.  Result is a dict with keys
    ``moment``, ``order`` (a GuessOrder), and ``exact``.
    """
    nx = spec.x_alphabet.size
    if posterior.alphabet.size != nx ** n:
        raise ProbabilityError("posterior must live on length-n source sequences")
    cover_tab = _pair_distortion_table(spec, n) <= spec.distortion.budget + 1e-12
    return _order_moment_raw(posterior.probs, cover_tab, rho, mode)


def _order_moment_raw(weights, cover_tab, rho, mode):
    n_cand = cover_tab.shape[1]
    if mode == "exhaustive":
        if n_cand > EXHAUSTIVE_ORDER_CAP:
            raise ResourceCapError(
                f"{n_cand} candidates exceed the exhaustive-order cap "
                f"{EXHAUSTIVE_ORDER_CAP}"
            )
        moment, order = _order_moment_exhaustive(weights, cover_tab, rho)
        exact = True
    elif mode == "greedy":
        moment, order = _order_moment_greedy(weights, cover_tab, rho)
        exact = False
    else:
        raise ProbabilityError(f"unknown order mode {mode!r}")
    return {"moment": moment, "order": GuessOrder(tuple(order)), "exact": exact}


# ---------------------------------------------------------------------------
# helper search
# ---------------------------------------------------------------------------

def best_helper_moment(instance: FiniteNInstance, helper_mode="exhaustive",
                       order_mode="exhaustive", restarts=64, seed=0):
    """Least rho-th moment over helper tables and guessing orders.

    Exhaustive helper mode enumerates all M^{|Y|^n} tables (subject to the
    cap); random-restart mode does seeded local descent over tables and
    flags the result inexact.  Per-message orders are optimized by
    ``order_mode``.
    """
    spec = instance.spec
    n = instance.n
    m_count = instance.message_count
    ny_seqs = spec.y_alphabet.size ** n
    joint = _joint_power(spec, n)            # (|X|^n, |Y|^n)
    cover_tab = _pair_distortion_table(spec, n) <= spec.distortion.budget + 1e-12
    rho = spec.rho

    group_cache = {}

    def group_moment(y_indices):
        key = 0
        for y in y_indices:
            key |= 1 << y
        hit = group_cache.get(key)
        if hit is not None:
            return hit
        w = joint[:, list(y_indices)].sum(axis=1)
        if w.sum() <= 0.0:
            out = (0.0, GuessOrder(tuple()))
        else:
            res = _order_moment_raw(w, cover_tab, rho, order_mode)
            out = (res["moment"], res["order"])
        group_cache[key] = out
        return out

    def table_moment(table):
        groups = [[] for _ in range(m_count)]
        for y, m in enumerate(table):
            groups[m].append(y)
        total = 0.0
        orders = []
        for g in groups:
            if g:
                mom, order = group_moment(tuple(g))
                total += mom
                orders.append(order)
            else:
                orders.append(GuessOrder(tuple()))
        return total, tuple(orders)

    order_exact = order_mode == "exhaustive"

    if helper_mode == "exhaustive":
        n_tables = m_count ** ny_seqs
        if n_tables > EXHAUSTIVE_HELPER_CAP:
            raise ResourceCapError(
                f"{n_tables} helper tables exceed the exhaustive cap "
                f"{EXHAUSTIVE_HELPER_CAP}"
            )
        best = None
        for table in itertools.product(range(m_count), repeat=ny_seqs):
            total, orders = table_moment(table)
            if best is None or total < best[0] - 1e-15:
                best = (total, table, orders)
        moment, table, orders = best
        exact = order_exact
    elif helper_mode == "random-restart":
        rng = np.random.default_rng(seed)
        best = None
        for _ in range(restarts):
            table = list(rng.integers(0, m_count, size=ny_seqs))
            total, orders = table_moment(tuple(table))
            improved = True
            while improved:
                improved = False
                for y in range(ny_seqs):
                    current = table[y]
                    for m in range(m_count):
                        if m == current:
                            continue
                        table[y] = m
                        trial, trial_orders = table_moment(tuple(table))
                        if trial < total - 1e-15:
                            total, orders = trial, trial_orders
                            current = m
                            improved = True
                        else:
                            table[y] = current
            if best is None or total < best[0] - 1e-15:
                best = (total, tuple(table), orders)
        moment, table, orders = best
        exact = False
    else:
        raise ProbabilityError(f"unknown helper mode {helper_mode!r}")

    return OracleResult(
        moment=moment,
        normalized_exponent=max(0.0, math.log2(moment) / n),
        best_helper=Helper(tuple(table)),
        best_orders=orders,
        exact=exact,
    )


# ---------------------------------------------------------------------------
# entropy bound on guess positions
# ---------------------------------------------------------------------------

def reverse_wyner_check(p: Pmf):
    """Check E[log2 f(X)] >= H(X) - log2(ln |X| + 3/2) at the minimizing
    bijection (descending-probability ranks, ties by symbol index)."""
    probs = p.probs
    order = sorted(range(len(probs)), key=lambda i: (-probs[i], i))
    lhs = 0.0
    for rank, i in enumerate(order, start=1):
        if probs[i] > 0.0:
            lhs += float(probs[i]) * math.log2(rank)
    rhs = entropy(p) - math.log2(math.log(p.alphabet.size) + 1.5)
    return {"lhs": lhs, "rhs": rhs, "holds": lhs >= rhs - 1e-12}


# ---------------------------------------------------------------------------
# trend table
# ---------------------------------------------------------------------------

def default_message_rule(rate):
    """Messages available at blocklength n for a helper of the given rate:
    floor(2^{nR}), but at least one message."""
    def rule(n):
        return max(1, int(math.floor(2.0 ** (n * rate))))
    return rule


def exponent_trend_report(spec: ProblemSpec, n_list, m_rule=None,
                          opts: SolverOptions = SolverOptions()):
    """Exact (or flagged-inexact) normalized exponents for each blocklength,
    next to the asymptotic solver's value.

    Returns a dict with ``rows`` (n, messages, moment, normalized_exponent,
    exact) and ``asymptotic_exponent``.  No convergence claim is made: the
    finite-blocklength values carry polynomial slack.
    """
    if m_rule is None:
        m_rule = default_message_rule(spec.rate)
    rows = []
    for n in n_list:
        m_count = m_rule(n)
        inst = FiniteNInstance(spec, n, m_count)
        ny_seqs = spec.y_alphabet.size ** n
        nxh_seqs = spec.distortion.reconstruction_alphabet.size ** n
        helper_mode = (
            "exhaustive" if m_count ** ny_seqs <= EXHAUSTIVE_HELPER_CAP
            else "random-restart"
        )
        order_mode = "exhaustive" if nxh_seqs <= EXHAUSTIVE_ORDER_CAP else "greedy"
        res = best_helper_moment(inst, helper_mode, order_mode, seed=opts.seed)
        rows.append({
            "n": n,
            "messages": m_count,
            "moment": res.moment,
            "normalized_exponent": res.normalized_exponent,
            "exact": res.exact,
        })
    asym = compute_exponent(spec, opts)
    return {"rows": rows, "asymptotic_exponent": asym.value}
