"""Guessing-moment growth exponents with rate-limited side-information help.

The central quantity is a three-level variational program over an auxiliary
finite label U (alphabet size fixed to |Y| + 1): an outer supremum over a
tilted observation law Q_Y, an infimum over description channels Q_{U|Y}
whose mutual information with Y stays within the helper rate, and an inner
supremum over source tilts Q_{X|YU}.  The payoff is the conditional
rate-distortion term minus the relative-entropy cost of the tilt.

Solver strategy.  For a fixed Q_Y the middle infimum is a convex program
over mixtures (Q_U, Q_{Y|U}) subject to a barycenter constraint and an
entropy-moment constraint, so it is solved globally on a discretization: a
grid of candidate conditional laws ("atoms"), a grid of distortion slopes
turning the conditional R-D term into linear cuts, and one small linear
program per outer iterate.  The LP solution is then condensed to |Y| + 1
atoms (the objective is convex along constraint-preserving mass shifts, so
support reduction never increases it) and refined by local search in the
description-channel coordinates with hard feasibility (projection back to
the rate constraint, never a penalty).  The outer supremum runs multistart
derivative-free search over Q_Y.  Reported values are always re-certified
by evaluating the exact objective on the final configuration.

The direct-help and no-help special cases collapse levels of the program
and are implemented as separate, lighter searches over the same primitives.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .optim import golden_max, nelder_mead_min
from .prob import (
    Alphabet,
    CondPmf,
    JointPmf,
    Pmf,
    ProbabilityError,
    binary_entropy,
    compose,
    entropy,
    entropy_vec,
    kl_divergence,
    kl_vec,
    mutual_information,
    renyi_entropy,
)
from .ratedist import (
    DistortionSpec,
    conditional_rd,
    flat_allocation_rate,
    per_symbol_rates,
    rd_function,
)

NEG_INF = float("-inf")


# ---------------------------------------------------------------------------
# problem statement and result containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """One exponent computation: source law, fidelity criterion, moment
    order, and helper rate.

    Symbols whose X- or Y-marginal is zero are pruned at construction so
    both marginals are strictly positive afterwards.
    """

    p_xy: JointPmf          # rows indexed by X, columns by Y
    distortion: DistortionSpec
    rho: float
    rate: float

    def __post_init__(self):
        if not self.rho > 0.0:
            raise ProbabilityError(f"moment order rho must be positive, got {self.rho}")
        if not self.rate >= 0.0:
            raise ProbabilityError(f"helper rate must be >= 0, got {self.rate}")
        joint = self.p_xy
        if joint.row_alphabet != self.distortion.source_alphabet:
            raise ProbabilityError("source alphabet of p_xy and distortion disagree")
        px = joint.probs.sum(axis=1)
        py = joint.probs.sum(axis=0)
        keep_x = np.where(px > 0.0)[0]
        keep_y = np.where(py > 0.0)[0]
        if len(keep_x) < joint.row_alphabet.size or len(keep_y) < joint.col_alphabet.size:
            sub_x = Alphabet(tuple(joint.row_alphabet.symbols[i] for i in keep_x))
            sub_y = Alphabet(tuple(joint.col_alphabet.symbols[i] for i in keep_y))
            joint = JointPmf(sub_x, sub_y, joint.probs[np.ix_(keep_x, keep_y)])
            object.__setattr__(self, "p_xy", joint)
            object.__setattr__(
                self, "distortion", self.distortion.restrict_sources(keep_x)
            )
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "rate", float(self.rate))

    @property
    def x_alphabet(self):
        return self.p_xy.row_alphabet

    @property
    def y_alphabet(self):
        return self.p_xy.col_alphabet

    def p_x(self):
        return self.p_xy.row_marginal()

    def p_y(self):
        return self.p_xy.col_marginal()

    def p_x_given_y(self):
        """Matrix (ny, nx): conditional source law per observation symbol."""
        py = self.p_xy.probs.sum(axis=0)
        return (self.p_xy.probs / py[None, :]).T.copy()

    def with_params(self, *, budget=None, rho=None, rate=None):
        dist = self.distortion
        if budget is not None:
            dist = DistortionSpec(
                dist.source_alphabet, dist.reconstruction_alphabet, dist.matrix, budget
            )
        return ProblemSpec(
            self.p_xy,
            dist,
            self.rho if rho is None else rho,
            self.rate if rate is None else rate,
        )


@dataclass(frozen=True)
class SolverOptions:
    """Knobs surfaced through the CLI.

    ``starts`` counts the outer multistart seeds (structured starts at the
    source's observation marginal and at the uniform law, the rest Dirichlet).
    ``grid_mode`` switches to the deterministic grid-exhaustive verification
    solver (binary alphabets only), used to generate golden values and to
    bound multistart optimism.
    """

    starts: int = 32
    seed: int = 0
    max_evaluations: int = 400_000
    tolerance: float = 1e-9
    grid_mode: bool = False
    grid_step: float = 0.02
    threads: int = 1


@dataclass(frozen=True, eq=False)
class AuxConfiguration:
    """A full candidate for the variational program.

    ``q_x_given_yu`` rows are indexed by (y, u) pairs in y-major order.
    The auxiliary alphabet always has exactly |Y| + 1 symbols.
    """

    u_alphabet: Alphabet
    q_y: Pmf
    q_u_given_y: CondPmf
    q_x_given_yu: CondPmf

    def __post_init__(self):
        ny = self.q_y.alphabet.size
        if self.u_alphabet.size != ny + 1:
            raise ProbabilityError(
                f"auxiliary alphabet must have {ny + 1} symbols, got {self.u_alphabet.size}"
            )
        if self.q_u_given_y.given_alphabet != self.q_y.alphabet:
            raise ProbabilityError("q_u_given_y must be indexed by the Y alphabet")
        if self.q_u_given_y.target_alphabet != self.u_alphabet:
            raise ProbabilityError("q_u_given_y must map into the auxiliary alphabet")
        expected = Alphabet.pairs(self.q_y.alphabet, self.u_alphabet)
        if self.q_x_given_yu.given_alphabet != expected:
            raise ProbabilityError("q_x_given_yu rows must be indexed by (y, u) pairs")

    def joint_yu(self):
        return compose(self.q_y, self.q_u_given_y)

    def q_u(self):
        return self.joint_yu().col_marginal()

    def q_y_given_u(self):
        """Rows (u, y); rows for zero-mass u are uniform placeholders."""
        j = self.joint_yu().probs
        qu = j.sum(axis=0)
        ny, nu = j.shape
        rows = np.full((nu, ny), 1.0 / ny)
        for u in range(nu):
            if qu[u] > 0.0:
                rows[u] = j[:, u] / qu[u]
        return CondPmf(self.u_alphabet, self.q_y.alphabet, rows)

    def q_x_given_u(self):
        """Rows (u, x) of the induced conditional source; uniform for
        zero-mass u."""
        ny = self.q_y.alphabet.size
        nu = self.u_alphabet.size
        nx = self.q_x_given_yu.target_alphabet.size
        j = self.joint_yu().probs
        qu = j.sum(axis=0)
        rows = np.full((nu, nx), 1.0 / nx)
        for u in range(nu):
            if qu[u] <= 0.0:
                continue
            acc = np.zeros(nx)
            for y in range(ny):
                acc += j[y, u] * self.q_x_given_yu.rows[y * nu + u]
            rows[u] = acc / qu[u]
        return CondPmf(self.u_alphabet, self.q_x_given_yu.target_alphabet, rows)

    def mutual_info_yu(self):
        return mutual_information(self.joint_yu())


@dataclass(frozen=True)
class ObjectiveBreakdown:
    """Both evaluation routes of the exponent objective at one configuration.

    ``value`` is the direct route (full relative entropy against the product
    reference plus the joint-budget conditional R-D term).  ``psi_value``
    re-evaluates it as an average over auxiliary symbols with the same R-D
    value apportioned by the achieving kernel; the two agree up to float
    noise.  ``flat_rd_gap`` is the diagnostic gap between the per-symbol
    full-budget R-D average and the joint-budget conditional R-D (how uneven
    the optimal distortion allocation is)."""

    value: float
    rd_term: float
    kl_term: float
    psi_value: float
    flat_rd_gap: float
    mutual_info_yu: float


@dataclass(frozen=True)
class SolverStats:
    starts: int
    evaluations: int
    spread_across_starts: float
    middle_spread: float = 0.0
    converged: bool = True


@dataclass(frozen=True, eq=False)
class ExponentResult:
    """Best exponent found, its certificate configuration, and diagnostics.

    ``value`` always equals ``rho * objective_breakdown.rd_term -
    objective_breakdown.kl_term`` for the returned configuration, so the
    result can be re-checked independently."""

    value: float
    achieving: AuxConfiguration
    objective_breakdown: dict
    mutual_info_yu: float
    solver_stats: SolverStats


# ---------------------------------------------------------------------------
# canonical objective (certification route; used by every reported value)
# ---------------------------------------------------------------------------

def objective_breakdown(spec: ProblemSpec, cfg: AuxConfiguration):
    """Evaluate the exponent objective exactly at one configuration.

    Returns an :class:`ObjectiveBreakdown`; ``value`` is ``-inf`` exactly
    when the configuration tilts mass outside the support of the source law.
    """
    if cfg.q_y.alphabet != spec.y_alphabet:
        raise ProbabilityError("configuration Y alphabet does not match the spec")
    if cfg.q_x_given_yu.target_alphabet != spec.x_alphabet:
        raise ProbabilityError("configuration X alphabet does not match the spec")
    ny = spec.y_alphabet.size
    nu = cfg.u_alphabet.size
    nx = spec.x_alphabet.size
    qy = cfg.q_y.probs
    quy = cfg.q_u_given_y.rows          # (ny, nu)
    a = cfg.q_x_given_yu.rows           # (ny*nu, nx)
    pxy = spec.p_xy.probs               # (nx, ny)

    mi_yu = cfg.mutual_info_yu()

    # direct route: D(Q_XYU || P_XY Q_{U|Y}) summed over the joint support
    kl_term = 0.0
    finite = True
    for y in range(ny):
        if qy[y] <= 0.0:
            continue
        for u in range(nu):
            w = qy[y] * quy[y, u]
            if w <= 0.0:
                continue
            row = a[y * nu + u]
            for x in range(nx):
                q = w * row[x]
                if q <= 0.0:
                    continue
                ref = pxy[x, y] * quy[y, u]
                if ref <= 0.0:
                    finite = False
                    break
                kl_term += q * math.log2(q / ref)
            if not finite:
                break
        if not finite:
            break

    if not finite:
        return ObjectiveBreakdown(NEG_INF, 0.0, math.inf, NEG_INF, 0.0, mi_yu)

    qu = cfg.q_u()
    qxu = cfg.q_x_given_u()
    rd = conditional_rd(qu, qxu, spec.distortion)
    value = spec.rho * rd.rate - kl_term

    # decomposed route: average over auxiliary symbols of the per-symbol
    # payoff, with the R-D value apportioned by the achieving kernel
    rd_parts = per_symbol_rates(qu, qxu, spec.distortion, rd)
    h_qy = entropy_vec(qy)
    joint_yu = cfg.joint_yu().probs
    psi_value = 0.0
    for u in range(nu):
        pu = float(qu.probs[u])
        if pu <= 0.0:
            continue
        w_u = joint_yu[:, u] / pu
        kl_u = 0.0
        for y in range(ny):
            if w_u[y] <= 0.0:
                continue
            row = a[y * nu + u]
            for x in range(nx):
                q = w_u[y] * row[x]
                if q <= 0.0:
                    continue
                kl_u += q * math.log2(q / pxy[x, y])
        psi = spec.rho * rd_parts[u] + h_qy - entropy_vec(w_u) - kl_u
        psi_value += pu * psi

    flat_gap = flat_allocation_rate(qu, qxu, spec.distortion) - rd.rate
    return ObjectiveBreakdown(value, rd.rate, kl_term, psi_value, flat_gap, mi_yu)


def objective(spec: ProblemSpec, cfg: AuxConfiguration):
    """Exponent objective in bits at one configuration (direct route)."""
    return objective_breakdown(spec, cfg).value


# ---------------------------------------------------------------------------
# closed special quantities
# ---------------------------------------------------------------------------

def arikan_bounds(p_x: Pmf, rho):
    """Sandwich on the optimal lossless guessing moment of a single draw.

    ``upper`` is ``2**(rho * H_{1/(1+rho)})``; ``lower`` divides it by
    ``(1 + log2 |alphabet|)**rho``.  The optimal moment always lies between
    the two.
    """
    if not rho > 0.0:
        raise ProbabilityError(f"moment order rho must be positive, got {rho}")
    h = renyi_entropy(p_x, 1.0 / (1.0 + rho))
    upper = 2.0 ** (rho * h)
    lower = upper / (1.0 + math.log2(p_x.alphabet.size)) ** rho
    return {"lower": lower, "upper": upper}


# ---------------------------------------------------------------------------
# fast evaluation cores
#
# Sources are plain float vectors here.  ``L(lam, q)`` is the fixed-slope
# value min_W [I(q, W) + lam * E d] in bits; the conditional R-D with a
# joint budget is its concave dual max_lam [sum_u p_u L(lam, q_u) - lam D].
# ---------------------------------------------------------------------------

def _kl_bernoulli(a, p):
    out = 0.0
    if a > 0.0:
        if p <= 0.0:
            return math.inf
        out += a * math.log2(a / p)
    if a < 1.0:
        if p >= 1.0:
            return math.inf
        out += (1.0 - a) * math.log2((1.0 - a) / (1.0 - p))
    return max(0.0, out)


class _BinaryHammingCore:
    """Closed forms for a binary source/reconstruction pair under Hamming
    distortion; sources are represented by the probability of symbol 1."""

    is_binary = True

    def __init__(self, slope_cap):
        self.slope_cap = slope_cap

    @staticmethod
    def as_scalar(q_vec):
        return float(q_vec[1])

    def L(self, lam, q, warm_key=None):
        m = q if q <= 0.5 else 1.0 - q
        if m <= 0.0:
            return 0.0
        d_lam = 1.0 / (1.0 + 2.0 ** lam)
        if d_lam >= m:
            return lam * m
        return binary_entropy(q) - binary_entropy(d_lam) + lam * d_lam

    def L_slope(self, lam, q):
        """d/dq of L at fixed slope (one-sided value at kinks)."""
        m = q if q <= 0.5 else 1.0 - q
        d_lam = 1.0 / (1.0 + 2.0 ** lam)
        if m <= 0.0:
            return (lam + 80.0) if q <= 0.5 else -(lam + 80.0)
        if d_lam >= m:
            return lam if q <= 0.5 else -lam
        return math.log2((1.0 - q) / q)

    def crd_exact(self, ps, qs, budget):
        """Joint-budget conditional R-D of a finite mixture: (rate, slope)."""
        ms = [q if q <= 0.5 else 1.0 - q for q in qs]
        d_max = sum(p * m for p, m in zip(ps, ms))
        if budget >= d_max - 1e-15:
            return 0.0, 0.0
        if budget <= 0.0:
            rate = sum(p * binary_entropy(q) for p, q in zip(ps, qs))
            return rate, math.inf
        # one slope for every subproblem: distortion t, capped per symbol
        order = sorted(range(len(ms)), key=lambda i: ms[i])
        below = 0.0       # sum p*m over symbols already at their cap
        active = sum(ps)  # mass of symbols still following the common level
        t_star = None
        prev = 0.0
        for i in order:
            t_candidate = (budget - below) / active if active > 0.0 else prev
            if t_candidate <= ms[i]:
                t_star = t_candidate
                break
            below += ps[i] * ms[i]
            active -= ps[i]
            prev = ms[i]
        if t_star is None:
            t_star = prev
        rate = 0.0
        for p, q, m in zip(ps, qs, ms):
            if m > t_star:
                rate += p * (binary_entropy(q) - binary_entropy(t_star))
        slope = math.log2((1.0 - t_star) / t_star) if 0.0 < t_star < 1.0 else math.inf
        return max(0.0, rate), slope

    def rd_single(self, q, budget):
        m = q if q <= 0.5 else 1.0 - q
        if budget >= m:
            return 0.0
        return binary_entropy(q) - binary_entropy(budget)


class _HammingCore:
    """Exact fixed-slope Lagrangian values for Hamming distortion over any
    alphabet size, via the active-set form of the optimal test channel.

    With z = 2**(-lam), the optimal output marginal keeps the most likely
    source symbols active, r(x) = q(x)/(1-z*S) - z/(1-z), and the Lagrangian
    value is L(lam, q) = -sum_x q(x) log2(Z_x) with Z_x = r(x)(1-z) + z.
    """

    is_binary = False

    def __init__(self, k, slope_cap):
        self.k = k
        self.slope_cap = slope_cap

    def _partition(self, lam, q):
        """Per-symbol normalizers Z_x of the optimal test channel."""
        k = self.k
        if lam <= 0.0:
            return np.full(k, 1.0)
        z = 2.0 ** (-lam)
        order = np.argsort(-q, kind="stable")
        qs = q[order]
        tail = 1.0 - np.cumsum(qs)
        zx = np.full(k, z)
        for count in range(k, 0, -1):
            q_in = max(0.0, tail[count - 1])
            s = (count + q_in * (1.0 - z) / z) / (1.0 - z + count * z)
            thr = z * (1.0 - z * s) / (1.0 - z)
            if qs[count - 1] > thr and (count == k or qs[count] <= thr + 1e-18):
                denom = 1.0 - z * s
                for i in range(count):
                    zx[order[i]] = qs[i] * (1.0 - z) / denom
                break
        return zx

    def L(self, lam, q_vec, warm_key=None, with_kernel=False):
        q = np.asarray(q_vec, dtype=float)
        zx = self._partition(lam, q)
        mask = q > 0.0
        val = -float(np.sum(q[mask] * np.log2(zx[mask])))
        return max(0.0, val)

    def L_gradient(self, lam, q_vec, warm_key=None):
        q = np.asarray(q_vec, dtype=float)
        return -np.log2(self._partition(lam, q))

    def crd_exact(self, ps, qs, budget):
        live = [(p, np.asarray(q, dtype=float)) for p, q in zip(ps, qs) if p > 0.0]
        if not live:
            return 0.0, 0.0
        d_max = sum(p * (1.0 - q.max()) for p, q in live)
        if budget >= d_max - 1e-15:
            return 0.0, 0.0
        if budget <= 0.0:
            rate = sum(p * entropy_vec(q) for p, q in live)
            return rate, math.inf

        def dual(lam):
            return sum(p * self.L(lam, q) for p, q in live) - lam * budget

        lam_star, val = golden_max(dual, 0.0, self.slope_cap, xtol=1e-9)
        return max(0.0, val), lam_star

    def rd_single(self, q_vec, budget):
        rate, _ = self.crd_exact([1.0], [q_vec], budget)
        return rate


class _GenericCore:
    """Fixed-slope Lagrangian values by alternating minimization for an
    arbitrary finite distortion matrix; warm-started across nearby calls."""

    is_binary = False

    def __init__(self, d_matrix, slope_cap):
        self.d = np.asarray(d_matrix, dtype=float)
        self.slope_cap = slope_cap
        self._warm = {}

    def L(self, lam, q_vec, warm_key=None, with_kernel=False):
        q = np.asarray(q_vec, dtype=float)
        r0 = self._warm.get(warm_key)
        rate, dist, kernel, r = _ba_fixed_slope(q, self.d, lam, r0)
        if warm_key is not None:
            self._warm[warm_key] = r
        val = rate + lam * dist
        if with_kernel:
            return val, kernel
        return val

    def L_gradient(self, lam, q_vec, warm_key=None):
        """Envelope gradient of L with respect to the source vector."""
        q = np.asarray(q_vec, dtype=float)
        _, _, w, r = _ba_fixed_slope(q, self.d, lam, self._warm.get(warm_key))
        safe_r = np.maximum(r, 1e-300)
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.where(w > 0.0, np.log2(np.maximum(w, 1e-300)) - np.log2(safe_r)[None, :], 0.0)
        return np.sum(w * (logs + lam * self.d), axis=1)

    def crd_exact(self, ps, qs, budget):
        live = [(p, np.asarray(q, dtype=float)) for p, q in zip(ps, qs) if p > 0.0]
        if not live:
            return 0.0, 0.0
        d = self.d
        d_max = sum(p * float((q @ d).min()) for p, q in live)
        if budget >= d_max - 1e-15:
            return 0.0, 0.0
        if budget <= 0.0:
            rate = 0.0
            for p, q in live:
                r0, _, _, _ = _ba_zero_budget(q, d)
                rate += p * r0
            return rate, math.inf

        def dual(lam):
            return sum(
                p * self.L(lam, q, warm_key=("crd", i))
                for i, (p, q) in enumerate(live)
            ) - lam * budget

        lam_star, val = golden_max(dual, 0.0, self.slope_cap, xtol=1e-6)
        return max(0.0, val), lam_star

    def rd_single(self, q_vec, budget):
        rate, _ = self.crd_exact([1.0], [q_vec], budget)
        return rate


def _ba_fixed_slope(q, d, lam, r_init=None):
    """One fixed-slope alternating minimization; returns
    (rate, distortion, kernel, output marginal)."""
    nx, nxh = d.shape
    active = q > 0.0
    qa = q[active]
    da = d[active, :]
    weight = np.exp2(-lam * da)
    dead = weight.sum(axis=1) <= 0.0
    if np.any(dead):
        # underflow across a whole row: keep only its cheapest reconstruction
        for i in np.where(dead)[0]:
            weight[i, int(np.argmin(da[i]))] = 1.0
    if r_init is None:
        r = np.full(nxh, 1.0 / nxh)
    else:
        r = np.maximum(r_init, 1e-12)
        r = r / r.sum()
    rate = 0.0
    dist = 0.0
    w = None
    for _ in range(2000):
        part = weight @ r
        slack = float(np.max((qa / part) @ weight))
        lower = -float(qa @ np.log2(np.maximum(part, 1e-300))) - math.log2(max(slack, 1.0))
        w = weight * r[None, :] / part[:, None]
        r_new = qa @ w
        r_new = np.maximum(r_new, 1e-300)
        r_new /= r_new.sum()
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.where(w > 0.0, np.log2(np.maximum(w, 1e-300)) - np.log2(r_new)[None, :], 0.0)
        rate = float(np.sum(qa[:, None] * w * logs))
        dist = float(np.sum(qa[:, None] * w * da))
        r = r_new
        if rate + lam * dist - lower < 1e-11:
            break
    full = np.tile(r, (nx, 1))
    full[active, :] = w
    return max(0.0, rate), dist, full, r


def _ba_zero_budget(q, d):
    """Minimum mutual information over kernels confined to zero-distortion
    entries (the exact zero-budget rate)."""
    nx, nxh = d.shape
    mask = d <= 0.0
    active = q > 0.0
    qa = q[active]
    ma = mask[active, :].astype(float)
    r = np.full(nxh, 1.0 / nxh)
    rate = 0.0
    w = None
    for _ in range(2000):
        part = ma @ r
        slack = float(np.max((qa / np.maximum(part, 1e-300)) @ ma))
        lower = -float(qa @ np.log2(np.maximum(part, 1e-300))) - math.log2(max(slack, 1.0))
        w = ma * r[None, :] / part[:, None]
        r_new = qa @ w
        r_new = np.maximum(r_new, 1e-300)
        r_new /= r_new.sum()
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.where(w > 0.0, np.log2(np.maximum(w, 1e-300)) - np.log2(r_new)[None, :], 0.0)
        rate = float(np.sum(qa[:, None] * w * logs))
        r = r_new
        if rate - lower < 1e-11:
            break
    full = np.tile(r, (nx, 1))
    full[active, :] = w
    return max(0.0, rate), 0.0, full, r


def _make_core(dspec: DistortionSpec):
    d = dspec.matrix
    k = d.shape[0]
    is_hamming = d.shape == (k, k) and np.array_equal(d, 1.0 - np.eye(k))
    if is_hamming and k == 2:
        return _BinaryHammingCore(dspec.slope_cap)
    if is_hamming:
        return _HammingCore(k, dspec.slope_cap)
    return _GenericCore(d, dspec.slope_cap)


# ---------------------------------------------------------------------------
# per-atom payoff profiles
#
# An atom is a candidate conditional observation law w = Q_{Y|U=u}.  Its
# payoff at slope lam is the inner supremum over the source tilt rows:
#     g(w, lam) = sup_a [ rho * L(lam, q(w, a)) - sum_y w(y) D(a_y || P_{X|Y=y}) ]
# with q(w, a) = sum_y w(y) a_y, rows a_y confined to supp(P_{X|Y=y}).
# The payoff is concave in the rows, so for a binary source the stationarity
# condition reduces to a shared log-odds shift found by scalar bisection.
# ---------------------------------------------------------------------------

class _InnerSolverBinary:
    def __init__(self, core, p_rows, rho):
        self.core = core
        self.p1 = [float(p[1]) for p in p_rows]   # P(x=1 | y)
        self.rho = rho
        self.free = [0.0 < p < 1.0 for p in self.p1]

    def solve(self, lam, w):
        p1, free, rho, core = self.p1, self.free, self.rho, self.core
        ny = len(p1)
        fixed_mass = sum(w[y] * p1[y] for y in range(ny) if not free[y])
        free_idx = [y for y in range(ny) if free[y] and w[y] > 0.0]
        if not free_idx:
            a = list(p1)
            q = fixed_mass + sum(w[y] * p1[y] for y in range(ny) if free[y] and w[y] > 0.0)
            val = rho * core.L(lam, q)
            return val, a, q
        log_odds = [math.log2(p1[y] / (1.0 - p1[y])) for y in free_idx]

        def a_of(s, i):
            z = log_odds[i] + s
            if z > 500.0:
                return 1.0
            e = 2.0 ** z
            return e / (1.0 + e)

        def q_of(s):
            return fixed_mass + sum(
                w[y] * a_of(s, i) for i, y in enumerate(free_idx)
            )

        span = rho * (core.slope_cap + 64.0) + 64.0
        lo, hi = -span, span
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            drive = rho * core.L_slope(lam, max(min(q_of(mid), 1.0), 0.0)) - mid
            if drive > 0.0:
                lo = mid
            else:
                hi = mid
        s = 0.5 * (lo + hi)
        a = list(p1)
        for i, y in enumerate(free_idx):
            a[y] = a_of(s, i)
        q = max(min(q_of(s), 1.0), 0.0)
        val = rho * core.L(lam, q)
        for y in range(ny):
            if w[y] > 0.0 and free[y]:
                val -= w[y] * _kl_bernoulli(a[y], p1[y])
        return val, a, q


class _InnerSolverGeneric:
    """Inner supremum over source-tilt rows for a general source alphabet;
    concave, solved by warm-started local search over row logits."""

    def __init__(self, core, p_rows, rho):
        self.core = core
        self.p_rows = [np.asarray(p, dtype=float) for p in p_rows]
        self.rho = rho
        self.supports = [np.where(p > 0.0)[0] for p in self.p_rows]
        self._warm = {}

    def solve(self, lam, w, warm_key=None):
        rho, core = self.rho, self.core
        ny = len(self.p_rows)
        nx = self.p_rows[0].shape[0]
        free_rows = [
            y for y in range(ny) if w[y] > 0.0 and self.supports[y].size > 1
        ]
        base = np.zeros(nx)
        for y in range(ny):
            if w[y] > 0.0 and y not in free_rows:
                base += w[y] * self.p_rows[y]

        def build(theta):
            rows = [self.p_rows[y].copy() for y in range(ny)]
            q = base.copy()
            k = 0
            for y in free_rows:
                sup = self.supports[y]
                logits = np.zeros(sup.size)
                logits[1:] = theta[k:k + sup.size - 1]
                k += sup.size - 1
                ex = np.exp(logits - logits.max())
                row = np.zeros(nx)
                row[sup] = ex / ex.sum()
                rows[y] = row
                q += w[y] * row
            return rows, q

        def value(theta):
            rows, q = build(theta)
            val = rho * core.L(lam, q, warm_key=warm_key)
            for y in free_rows:
                val -= w[y] * kl_vec(rows[y], self.p_rows[y])
            return val

        dims = sum(self.supports[y].size - 1 for y in free_rows)
        if dims == 0:
            rows, q = build(np.zeros(0))
            return value(np.zeros(0)), rows, q
        theta0 = self._warm.get(warm_key)
        if theta0 is None or len(theta0) != dims:
            theta0 = [0.0] * dims
        best_theta, neg, _ = nelder_mead_min(
            lambda t: -value(t), theta0, step=0.4, ftol=1e-11, max_fev=60 * dims + 120
        )
        if warm_key is not None:
            self._warm[warm_key] = list(best_theta)
        rows, q = build(np.asarray(best_theta))
        return -neg, rows, q


# ---------------------------------------------------------------------------
# the measure-space middle problem
# ---------------------------------------------------------------------------

def _simplex_grid(dim, steps):
    """All compositions of ``steps`` into ``dim`` parts, as probability
    vectors (deterministic order)."""
    out = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            out.append(prefix + [remaining])
            return
        for k in range(remaining + 1):
            rec(prefix + [k], remaining - k, slots - 1)

    rec([], steps, dim)
    return [np.array(v, dtype=float) / steps for v in out]


class _MiddleProblem:
    """Discretized convex middle layer for one problem instance.

    Atoms are candidate conditional observation laws; slopes turn the R-D
    term into linear cuts; for each outer iterate the infimum over mixtures
    is one linear program.  Exact payoffs (continuous slope, exact inner
    rows) are used for condensation, polish, and certification.
    """

    def __init__(self, spec, core, inner, atoms, lam_grid, counter):
        self.spec = spec
        self.core = core
        self.inner = inner
        self.rho = spec.rho
        self.budget = spec.distortion.budget
        self.atoms = atoms                      # list of np vectors over Y
        self.lam_grid = lam_grid
        self.counter = counter
        self.h_atoms = np.array([entropy_vec(w) for w in atoms])
        self.G = None

    # -- payoff table ------------------------------------------------------

    def build_table(self):
        K, J = len(self.atoms), len(self.lam_grid)
        G = np.empty((K, J))
        for k, w in enumerate(self.atoms):
            for j, lam in enumerate(self.lam_grid):
                G[k, j] = self._g(w, lam, warm_key=("atom", k))[0]
        self.G = G
        self.counter.add(K * J)

    def _g(self, w, lam, warm_key=None):
        if self.inner is None:      # reduced mode: atoms are source laws
            if self.core.is_binary:
                return self.rho * self.core.L(lam, float(w[1])), None, float(w[1])
            return self.rho * self.core.L(lam, w, warm_key=warm_key), None, w
        if self.core.is_binary:
            val, rows, q = self.inner.solve(lam, w)
        else:
            val, rows, q = self.inner.solve(lam, w, warm_key=warm_key)
        return val, rows, q

    def atom_column(self, w):
        return np.array([
            self._g(w, lam, warm_key=None)[0] for lam in self.lam_grid
        ])

    # -- LP over mixtures ----------------------------------------------------

    def lp_solve(self, qy, rate):
        """Global infimum over the discretized mixture set; returns
        (value_without_offset, masses, atom list)."""
        atoms = self.atoms + [qy]
        h = np.concatenate([self.h_atoms, [entropy_vec(qy)]])
        G = np.vstack([self.G, self.atom_column(qy)[None, :]])
        K, J = G.shape
        ny = qy.shape[0]
        self.counter.add(J + 1)

        # variables: masses m_0..m_{K-1}, epigraph variable t
        c = np.zeros(K + 1)
        c[-1] = 1.0
        A_ub = np.zeros((J + 1, K + 1))
        b_ub = np.zeros(J + 1)
        for j in range(J):
            A_ub[j, :K] = G[:, j]
            A_ub[j, -1] = -1.0
            b_ub[j] = self.rho * self.lam_grid[j] * self.budget
        A_ub[J, :K] = -h
        b_ub[J] = -(entropy_vec(qy) - rate)
        A_eq = np.zeros((ny, K + 1))
        A_eq[0, :K] = 1.0
        b_eq = np.zeros(ny)
        b_eq[0] = 1.0
        for y in range(ny - 1):
            A_eq[1 + y, :K] = [w[y] for w in atoms]
            b_eq[1 + y] = qy[y]
        bounds = [(0.0, None)] * K + [(None, None)]
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=bounds, method="highs")
        if not res.success:
            # degenerate marginal constraints; the point mass at qy is
            # always feasible, fall back to it
            masses = np.zeros(K)
            masses[-1] = 1.0
            val = self.phi_exact([1.0], [qy])[0]
            return val, [1.0], [qy]
        m = res.x[:K]
        keep = np.where(m > 1e-11)[0]
        masses = m[keep]
        masses = masses / masses.sum()
        return float(res.x[-1]), list(masses), [atoms[i] for i in keep]

    # -- exact payoff of a finite mixture ------------------------------------

    def phi_exact(self, ps, ws):
        """Exact middle payoff (continuous slope, exact inner rows) of a
        mixture; returns (value, slope, per-atom inner rows, per-atom q).

        The per-atom row lists are aligned with the *input* atoms; entries
        for (near) zero-mass atoms are the untilted conditional source rows.
        """
        self.counter.add(1)
        ps = [float(p) for p in ps]
        ws = [np.asarray(w, dtype=float) for w in ws]
        live_idx = [i for i, p in enumerate(ps) if p > 1e-15]
        rho = self.rho
        if self.inner is None:
            qs_all = [self._source_of(w) for w in ws]
            rate, slope = self.core.crd_exact(
                [ps[i] for i in live_idx], [qs_all[i] for i in live_idx], self.budget
            )
            return rho * rate, slope, [None] * len(ps), qs_all

        base_rows = self._baseline_rows()
        rows_list = [list(base_rows) for _ in ps]
        qs = [self._mix(w, rows_list[i]) for i, w in enumerate(ws)]

        def payoff(rows_by_atom, sources):
            rate, slope = self.core.crd_exact(
                [ps[i] for i in live_idx], [sources[i] for i in live_idx], self.budget
            )
            cost = sum(
                ps[i] * self._inner_kl(ws[i], rows_by_atom[i]) for i in live_idx
            )
            return rho * rate - cost, slope

        # baseline: untilted rows (zero divergence cost, payoff >= 0 terms)
        best, lam = payoff(rows_list, qs)
        best_rows, best_qs = [list(r) for r in rows_list], list(qs)
        if not math.isfinite(lam):
            lam = self.core.slope_cap
        # alternate: per-atom inner rows at the current slope, then the exact
        # joint-budget slope for the induced sources; keep the best sweep
        for _ in range(30):
            trial_rows = [None] * len(ps)
            trial_qs = list(qs)
            for i in live_idx:
                _, rows, q = self._g(ws[i], lam)
                trial_rows[i] = rows
                trial_qs[i] = q
            for i in range(len(ps)):
                if trial_rows[i] is None:
                    trial_rows[i] = list(base_rows)
            val, slope = payoff(trial_rows, trial_qs)
            if val > best + 1e-12:
                best, best_rows, best_qs = val, trial_rows, trial_qs
                lam = slope if math.isfinite(slope) else self.core.slope_cap
            else:
                break
        return best, lam, best_rows, best_qs

    def _baseline_rows(self):
        if self.core.is_binary:
            return list(self.inner.p1)
        return [row.copy() for row in self.inner.p_rows]

    def _mix(self, w, rows):
        if self.core.is_binary:
            return float(sum(w[y] * rows[y] for y in range(len(w))))
        acc = np.zeros_like(rows[0])
        for y in range(len(w)):
            acc += w[y] * rows[y]
        return acc

    def _source_of(self, w):
        if self.core.is_binary:
            return float(w[1])
        return np.asarray(w, dtype=float)

    def _inner_kl(self, w, rows):
        if rows is None:
            return 0.0
        total = 0.0
        if self.core.is_binary:
            for y in range(len(w)):
                if w[y] > 0.0:
                    total += w[y] * _kl_bernoulli(rows[y], self.inner.p1[y])
        else:
            for y in range(len(w)):
                if w[y] > 0.0:
                    total += w[y] * kl_vec(rows[y], self.inner.p_rows[y])
        return total

    # -- support condensation -------------------------------------------------

    def condense(self, ps, ws, target):
        """Reduce mixture support to ``target`` atoms without increasing the
        exact payoff or disturbing the barycenter / entropy moments."""
        ps = [float(p) for p in ps]
        ws = [np.asarray(w, dtype=float) for w in ws]
        while len(ps) > target:
            ny = ws[0].shape[0]
            rows = [np.ones(len(ps))]
            for y in range(ny - 1):
                rows.append(np.array([w[y] for w in ws]))
            rows.append(np.array([entropy_vec(w) for w in ws]))
            A = np.vstack(rows)
            _, s, vt = np.linalg.svd(A)
            null = vt[-1]
            if np.linalg.norm(A @ null) > 1e-8 * max(1.0, np.linalg.norm(null)):
                # no usable null direction: merge the two closest atoms
                i, j = self._closest_pair(ws)
                total = ps[i] + ps[j]
                ws[i] = (ps[i] * ws[i] + ps[j] * ws[j]) / total
                ps[i] = total
                del ps[j], ws[j]
                continue
            steps = []
            for sign in (1.0, -1.0):
                z = sign * null
                tmax = math.inf
                for p, dz in zip(ps, z):
                    if dz < -1e-15:
                        tmax = min(tmax, -p / dz)
                if math.isfinite(tmax):
                    steps.append((tmax, z))
            if not steps:
                i, j = self._closest_pair(ws)
                total = ps[i] + ps[j]
                ws[i] = (ps[i] * ws[i] + ps[j] * ws[j]) / total
                ps[i] = total
                del ps[j], ws[j]
                continue
            candidates = []
            for tmax, z in steps:
                trial = [max(0.0, p + tmax * dz) for p, dz in zip(ps, z)]
                val = self.phi_exact(trial, ws)[0]
                candidates.append((val, trial))
            candidates.sort(key=lambda t: t[0])
            _, new_ps = candidates[0]
            keep = [i for i, p in enumerate(new_ps) if p > 1e-12]
            ps = [new_ps[i] for i in keep]
            ws = [ws[i] for i in keep]
            total = sum(ps)
            ps = [p / total for p in ps]
        return ps, ws

    @staticmethod
    def _closest_pair(ws):
        best = (0, 1)
        best_d = math.inf
        for i in range(len(ws)):
            for j in range(i + 1, len(ws)):
                d = float(np.sum((ws[i] - ws[j]) ** 2))
                if d < best_d:
                    best_d = d
                    best = (i, j)
        return best


# ---------------------------------------------------------------------------
# feasibility retraction for the description channel
# ---------------------------------------------------------------------------

def _retract_rate(q_uy, qy, rate, tol=1e-12):
    """Project a description channel onto the rate constraint by mixing
    toward its own output marginal (mutual information is convex along that
    path and vanishes at the endpoint)."""
    def mi_of(mat):
        joint = qy[:, None] * mat
        return max(0.0, kl_vec(joint.ravel(), np.outer(qy, joint.sum(axis=0)).ravel()))

    if mi_of(q_uy) <= rate + tol:
        return q_uy
    marg = (qy[:, None] * q_uy).sum(axis=0)
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        trial = (1.0 - mid) * q_uy + mid * marg[None, :]
        if mi_of(trial) <= rate:
            hi = mid
        else:
            lo = mid
    return (1.0 - hi) * q_uy + hi * marg[None, :]


# ---------------------------------------------------------------------------
# configuration assembly and certification
# ---------------------------------------------------------------------------

def _assemble_configuration(spec, qy, ps, ws, rows_list):
    """Build an AuxConfiguration from mixture atoms (padded to |Y|+1)."""
    ny = spec.y_alphabet.size
    nx = spec.x_alphabet.size
    nu = ny + 1
    u_alphabet = Alphabet.of_size(nu, prefix="u")
    p_x_given_y = spec.p_x_given_y()

    ps = list(ps)
    ws = [np.asarray(w, dtype=float) for w in ws]
    rows_list = list(rows_list)
    while len(ps) < nu:
        ps.append(0.0)
        ws.append(np.full(ny, 1.0 / ny))
        rows_list.append(None)
    ps = ps[:nu]
    ws = ws[:nu]
    rows_list = rows_list[:nu]
    total = sum(ps)
    ps = [p / total for p in ps]

    q_uy = np.zeros((ny, nu))
    for y in range(ny):
        if qy[y] <= 0.0:
            q_uy[y, :] = 1.0 / nu
            continue
        for u in range(nu):
            q_uy[y, u] = ps[u] * ws[u][y] / qy[y]
        s = q_uy[y, :].sum()
        if s <= 0.0:
            q_uy[y, :] = 1.0 / nu
        else:
            q_uy[y, :] /= s
    q_uy = _retract_rate(q_uy, qy, spec.rate)

    a = np.zeros((ny * nu, nx))
    for y in range(ny):
        for u in range(nu):
            rows = rows_list[u]
            if rows is None:
                a[y * nu + u] = p_x_given_y[y]
            elif isinstance(rows, list) and rows and isinstance(rows[0], float):
                a1 = min(max(rows[y], 0.0), 1.0)
                a[y * nu + u] = [1.0 - a1, a1]
            else:
                a[y * nu + u] = np.asarray(rows[y], dtype=float)

    return AuxConfiguration(
        u_alphabet,
        Pmf(spec.y_alphabet, qy),
        CondPmf(spec.y_alphabet, u_alphabet, q_uy),
        CondPmf(Alphabet.pairs(spec.y_alphabet, u_alphabet), spec.x_alphabet, a),
    )


def _mixture_from_channel(qy, q_uy):
    """Masses and conditional observation laws induced by a channel."""
    joint = qy[:, None] * q_uy
    pu = joint.sum(axis=0)
    ps, ws = [], []
    for u in range(q_uy.shape[1]):
        if pu[u] <= 1e-14:
            continue
        ps.append(float(pu[u]))
        ws.append(joint[:, u] / pu[u])
    return ps, ws


# ---------------------------------------------------------------------------
# the full solver
# ---------------------------------------------------------------------------

class _Counter:
    __slots__ = ("n",)

    def __init__(self):
        self.n = 0

    def add(self, k=1):
        self.n += k


_TABLE_CACHE = {}
_TABLE_CACHE_LIMIT = 12


def _lambda_grid(core, n_points):
    cap = core.slope_cap
    if isinstance(core, _BinaryHammingCore):
        levels = np.geomspace(1e-7, 0.5, n_points - 2)
        lams = [math.log2((1.0 - t) / t) for t in levels]
        grid = sorted(set([0.0] + lams + [cap]))
    else:
        grid = sorted(set([0.0] + list(np.geomspace(max(cap * 1e-6, 1e-6), cap, n_points - 1))))
    return [g for g in grid if g <= cap + 1e-12]


def _binary_atoms(n_points, extremes=True):
    pts = np.linspace(0.0, 1.0, n_points)
    if not extremes:
        pts = pts[1:-1]
    return [np.array([1.0 - t, t]) for t in pts]


def _full_middle_problem(spec, opts, counter):
    ny = spec.y_alphabet.size
    core = _make_core(spec.distortion)
    p_rows = [spec.p_x_given_y()[y] for y in range(ny)]
    if core.is_binary:
        inner = _InnerSolverBinary(core, p_rows, spec.rho)
    else:
        inner = _InnerSolverGeneric(core, p_rows, spec.rho)

    if opts.grid_mode:
        steps = max(2, round(1.0 / opts.grid_step))
        lam_points = 96
    else:
        steps = 64 if ny == 2 else 12
        lam_points = 48
    if ny == 2:
        atoms = _binary_atoms(steps + 1)
    else:
        atoms = _simplex_grid(ny, steps)

    key = (
        spec.p_xy.probs.tobytes(),
        spec.distortion.matrix.tobytes(),
        spec.rho,
        steps,
        lam_points,
        "full",
    )
    cached = _TABLE_CACHE.get(key)
    mid = _MiddleProblem(spec, core, inner, atoms, _lambda_grid(core, lam_points), counter)
    if cached is not None:
        mid.G = cached
    else:
        mid.build_table()
        if len(_TABLE_CACHE) >= _TABLE_CACHE_LIMIT:
            _TABLE_CACHE.pop(next(iter(_TABLE_CACHE)))
        _TABLE_CACHE[key] = mid.G
    return mid


def _outer_points(spec, opts, rng):
    """Deterministic outer grid plus the multistart seed points."""
    ny = spec.y_alphabet.size
    py = spec.p_y().probs
    seeds = [py.copy(), np.full(ny, 1.0 / ny)]
    while len(seeds) < max(2, opts.starts):
        seeds.append(rng.dirichlet(np.ones(ny)))
    if ny == 2:
        grid = [np.array([1.0 - t, t]) for t in np.linspace(0.02, 0.98, 33)]
    else:
        grid = _simplex_grid(ny, 8)
        grid = [np.maximum(g, 1e-9) for g in grid]
        grid = [g / g.sum() for g in grid]
    return seeds, grid


def _middle_value_lp(mid, spec, qy):
    val, ps, ws = mid.lp_solve(qy, spec.rate)
    offset = kl_vec(qy, spec.p_y().probs)
    return val - offset, ps, ws


def _polish_middle(mid, spec, qy, ps, ws):
    """Local refinement of the description channel at a fixed outer law."""
    ny = spec.y_alphabet.size
    nu = ny + 1
    while len(ps) < nu:
        ps = list(ps) + [0.0]
        ws = list(ws) + [qy.copy()]
    ps = np.maximum(np.asarray(ps[:nu], dtype=float), 1e-9)
    ps = ps / ps.sum()
    ws = [np.asarray(w, dtype=float) for w in ws[:nu]]

    q_uy0 = np.zeros((ny, nu))
    for y in range(ny):
        for u in range(nu):
            q_uy0[y, u] = ps[u] * ws[u][y] / max(qy[y], 1e-12)
        s = q_uy0[y].sum()
        q_uy0[y] = q_uy0[y] / s if s > 0 else np.full(nu, 1.0 / nu)

    def channel_of(theta):
        logits = np.asarray(theta, dtype=float).reshape(ny, nu - 1)
        mat = np.zeros((ny, nu))
        for y in range(ny):
            z = np.concatenate([[0.0], logits[y]])
            z -= z.max()
            e = np.exp(z)
            mat[y] = e / e.sum()
        return _retract_rate(mat, qy, spec.rate)

    def middle_of(theta):
        mat = channel_of(theta)
        ps2, ws2 = _mixture_from_channel(qy, mat)
        return mid.phi_exact(ps2, ws2)[0]

    theta0 = []
    for y in range(ny):
        base = np.log(np.maximum(q_uy0[y], 1e-12))
        theta0.extend((base[1:] - base[0]).tolist())
    theta_best, val, _ = nelder_mead_min(
        middle_of, theta0, step=0.5, ftol=1e-11, max_fev=90 * len(theta0) + 120
    )
    mat = channel_of(theta_best)
    ps2, ws2 = _mixture_from_channel(qy, mat)
    return val, ps2, ws2


def _certified_candidates(mid, spec, qy, lp_ps, lp_ws):
    """Certified middle-layer candidates at one outer law; returns a list of
    (value, configuration) sorted ascending (the middle layer is an inf)."""
    ny = spec.y_alphabet.size
    nu = ny + 1
    out = []

    def certify(ps, ws):
        pairs = [(float(p), np.asarray(w, dtype=float)) for p, w in zip(ps, ws) if p > 1e-14]
        ps2 = [p for p, _ in pairs]
        ws2 = [w for _, w in pairs]
        _, _, rows_list, _ = mid.phi_exact(ps2, ws2)
        cfg = _assemble_configuration(spec, qy, ps2, ws2, rows_list)
        bd = objective_breakdown(spec, cfg)
        return bd.value, cfg, bd

    # LP solution condensed to the auxiliary cardinality, then polished
    ps, ws = mid.condense(lp_ps, lp_ws, nu)
    out.append(certify(ps, ws))
    pol_val, ps2, ws2 = _polish_middle(mid, spec, qy, ps, ws)
    out.append(certify(ps2, ws2))

    # structured candidates: useless description, lossless description
    out.append(certify([1.0], [qy.copy()]))
    if entropy_vec(qy) <= spec.rate + 1e-12:
        vertex_ps = [float(qy[y]) for y in range(ny)]
        vertex_ws = [np.eye(ny)[y] for y in range(ny)]
        out.append(certify(vertex_ps, vertex_ws))

    out.sort(key=lambda t: t[0])
    return out


def compute_exponent(spec: ProblemSpec, opts: SolverOptions = SolverOptions()):
    """Best guessing-moment exponent for a helper of the spec's rate.

    Runs the discretized middle infimum inside a multistart outer search,
    certifies the final configuration through :func:`objective_breakdown`,
    and reports multistart spreads so near-nonconvergence is visible.
    Deterministic for a fixed seed.
    """
    ny = spec.y_alphabet.size
    nx = spec.x_alphabet.size
    if opts.grid_mode and (ny != 2 or nx != 2):
        raise ProbabilityError("grid-exhaustive mode supports binary alphabets only")
    counter = _Counter()
    rng = np.random.default_rng(opts.seed)
    mid = _full_middle_problem(spec, opts, counter)

    def outer_value(qy):
        qy = np.maximum(np.asarray(qy, dtype=float), 1e-9)
        qy = qy / qy.sum()
        counter.add()
        return _middle_value_lp(mid, spec, qy)[0]

    seeds, grid = _outer_points(spec, opts, rng)
    py = spec.p_y().probs
    grid.append(py.copy())
    converged = True

    evaluated = []
    for g in grid:
        evaluated.append((outer_value(g), g))

    start_values = []
    if not opts.grid_mode:

        def run_start(s):
            local = _Counter()

            def local_value(qy):
                qy = np.maximum(np.asarray(qy, dtype=float), 1e-9)
                qy = qy / qy.sum()
                local.add()
                return _middle_value_lp(mid, spec, qy)[0]

            if ny == 2:
                theta, neg, _ = nelder_mead_min(
                    lambda th: -local_value([1.0 - _clip01(th[0]), _clip01(th[0])]),
                    [float(s[1])], step=0.08, ftol=1e-10, max_fev=36,
                )
                point = np.array([1.0 - _clip01(theta[0]), _clip01(theta[0])])
            else:
                base = np.log(np.maximum(s, 1e-9))
                theta, neg, _ = nelder_mead_min(
                    lambda th: -local_value(_softmax_full(th, ny)),
                    (base[1:] - base[0]).tolist(), step=0.4, ftol=1e-10, max_fev=30,
                )
                point = _softmax_full(theta, ny)
            return -neg, point, local.n

        budget_left = [s for s in seeds if True]
        if opts.threads > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=opts.threads) as pool:
                results = list(pool.map(run_start, budget_left))
            for val, point, used in results:
                counter.add(used)
                start_values.append(val)
                evaluated.append((val, point))
            if counter.n > opts.max_evaluations:
                converged = False
        else:
            for s in budget_left:
                if counter.n > opts.max_evaluations:
                    converged = False
                    break
                val, point, used = run_start(s)
                counter.add(used)
                start_values.append(val)
                evaluated.append((val, point))

    evaluated.sort(key=lambda t: -t[0])
    top = []
    for v, g in evaluated:
        if all(np.max(np.abs(g - t)) > 1e-4 for t in top):
            top.append(g)
        if len(top) >= 3:
            break

    if ny == 2:
        # refine the best bracket deterministically
        t_best = float(top[0][1])
        lo, hi = max(0.0, t_best - 0.04), min(1.0, t_best + 0.04)
        t_ref, _ = golden_max(
            lambda t: outer_value([1.0 - _clip01(t), _clip01(t)]), lo, hi, xtol=1e-8
        )
        refined = np.array([1.0 - _clip01(t_ref), _clip01(t_ref)])
        if all(np.max(np.abs(refined - t)) > 1e-6 for t in top):
            top.insert(0, refined)

    # the untilted observation law always competes (its payoff is never
    # negative, which anchors the reported value at zero or above)
    if all(np.max(np.abs(py - t)) > 1e-9 for t in top):
        top.append(py.copy())

    best = None
    middle_spread = 0.0
    for qy in top:
        qy = np.maximum(qy, 1e-9)
        qy = qy / qy.sum()
        _, lp_ps, lp_ws = _middle_value_lp(mid, spec, qy)
        cands = _certified_candidates(mid, spec, qy, lp_ps, lp_ws)
        val, cfg, bd = cands[0]
        spread_here = cands[-1][0] - cands[0][0] if len(cands) > 1 else 0.0
        if best is None or val > best[0]:
            best = (val, cfg, bd)
            middle_spread = spread_here

    value, cfg, bd = best
    spread = (max(start_values) - min(start_values)) if len(start_values) > 1 else 0.0
    stats = SolverStats(
        starts=0 if opts.grid_mode else opts.starts,
        evaluations=counter.n,
        spread_across_starts=float(spread),
        middle_spread=float(middle_spread),
        converged=converged,
    )
    return ExponentResult(
        value=float(value),
        achieving=cfg,
        objective_breakdown={"rd_term": float(bd.rd_term), "kl_term": float(bd.kl_term)},
        mutual_info_yu=float(bd.mutual_info_yu),
        solver_stats=stats,
    )


def _clip01(t):
    return min(max(float(t), 1e-9), 1.0 - 1e-9)


def _softmax_full(theta, n):
    z = np.concatenate([[0.0], np.asarray(theta, dtype=float)])
    z -= z.max()
    e = np.exp(z)
    return e / e.sum()


# ---------------------------------------------------------------------------
# reduced solvers: direct help and no help
# ---------------------------------------------------------------------------

def _reduced_middle_problem(p_x, dspec, rho, counter, atom_steps=None, lam_points=48):
    nx = p_x.alphabet.size
    core = _make_core(dspec)
    if atom_steps is None:
        atom_steps = 64 if nx == 2 else 12
    if nx == 2:
        atoms = _binary_atoms(atom_steps + 1)
    else:
        atoms = _simplex_grid(nx, atom_steps)
    shadow = ProblemSpec(
        JointPmf(p_x.alphabet, p_x.alphabet,
                 np.diag(p_x.probs) + 0.0),
        dspec, rho, 0.0,
    )
    return _MiddleProblem(shadow, core, None, atoms, _lambda_grid(core, lam_points), counter)


def direct_help_exponent(p_x: Pmf, distortion: DistortionSpec, rho, rate,
                         opts: SolverOptions = SolverOptions()):
    """Exponent when the helper observes the source itself.

    The observation equals the source, the inner tilt collapses, and the
    relative-entropy cost reduces to D(Q_X || P_X); what remains is a supremum
    over source tilts of an infimum over description channels.
    """
    if np.any(p_x.probs <= 0.0):
        raise ProbabilityError("direct-help exponent needs a strictly positive source law")
    counter = _Counter()
    mid = _reduced_middle_problem(p_x, distortion, rho, counter)
    mid_key = (
        p_x.probs.tobytes(), distortion.matrix.tobytes(), rho,
        len(mid.atoms), len(mid.lam_grid), "reduced",
    )
    cached = _TABLE_CACHE.get(mid_key)
    if cached is not None:
        mid.G = cached
    else:
        mid.build_table()
        if len(_TABLE_CACHE) >= _TABLE_CACHE_LIMIT:
            _TABLE_CACHE.pop(next(iter(_TABLE_CACHE)))
        _TABLE_CACHE[mid_key] = mid.G
    nx = p_x.alphabet.size
    px = p_x.probs

    def middle_at(qx):
        qx = np.maximum(np.asarray(qx, dtype=float), 1e-9)
        qx = qx / qx.sum()
        val, ps, ws = mid.lp_solve(qx, rate)
        return val - kl_vec(qx, px), qx, ps, ws

    if nx == 2:
        grid = [np.array([1.0 - t, t]) for t in np.linspace(0.02, 0.98, 49)]
    else:
        grid = [g for g in _simplex_grid(nx, 10)]
        grid = [np.maximum(g, 1e-9) for g in grid]
        grid = [g / g.sum() for g in grid]
    grid.append(px.copy())
    scored = [middle_at(g) for g in grid]
    scored.sort(key=lambda t: -t[0])

    if nx == 2:
        t_best = float(scored[0][1][1])
        t_ref, _ = golden_max(
            lambda t: middle_at([1.0 - _clip01(t), _clip01(t)])[0],
            max(0.0, t_best - 0.05), min(1.0, t_best + 0.05), xtol=1e-9,
        )
        scored.insert(0, middle_at([1.0 - _clip01(t_ref), _clip01(t_ref)]))
    else:
        base = np.log(np.maximum(scored[0][1], 1e-9))
        theta, _, _ = nelder_mead_min(
            lambda th: -middle_at(_softmax_full(th, nx))[0],
            (base[1:] - base[0]).tolist(), step=0.3, ftol=1e-11, max_fev=60 * nx,
        )
        scored.insert(0, middle_at(_softmax_full(theta, nx)))

    finalists = scored[:3]
    if all(np.max(np.abs(px - entry[1])) > 1e-9 for entry in finalists):
        finalists.append(middle_at(px))

    best = -math.inf
    for _, qx, ps, ws in finalists:
        ps_c, ws_c = mid.condense(ps, ws, nx + 1)
        val_c = _certify_reduced(p_x, distortion, rho, qx, ps_c, ws_c)
        val_p, ps_p, ws_p = _polish_reduced(mid, qx, rate, ps_c, ws_c)
        val_pc = _certify_reduced(p_x, distortion, rho, qx, ps_p, ws_p)
        val_deg = _certify_reduced(p_x, distortion, rho, qx, [1.0], [qx])
        best = max(best, min(val_c, val_pc, val_deg))
    return best


def _polish_reduced(mid, qx, rate, ps, ws):
    nx = qx.shape[0]
    nu = nx + 1
    ps = list(ps)
    ws = [np.asarray(w, dtype=float) for w in ws]
    while len(ps) < nu:
        ps.append(0.0)
        ws.append(qx.copy())
    ps = np.maximum(np.asarray(ps[:nu]), 1e-9)
    ps = ps / ps.sum()
    ws = ws[:nu]
    q_ux0 = np.zeros((nx, nu))
    for x in range(nx):
        for u in range(nu):
            q_ux0[x, u] = ps[u] * ws[u][x] / max(qx[x], 1e-12)
        s = q_ux0[x].sum()
        q_ux0[x] = q_ux0[x] / s if s > 0 else np.full(nu, 1.0 / nu)

    def value_of(theta):
        logits = np.asarray(theta, dtype=float).reshape(nx, nu - 1)
        mat = np.zeros((nx, nu))
        for x in range(nx):
            z = np.concatenate([[0.0], logits[x]])
            z -= z.max()
            e = np.exp(z)
            mat[x] = e / e.sum()
        mat = _retract_rate(mat, qx, rate)
        ps2, ws2 = _mixture_from_channel(qx, mat)
        return mid.phi_exact(ps2, ws2)[0], ps2, ws2

    theta0 = []
    for x in range(nx):
        base = np.log(np.maximum(q_ux0[x], 1e-12))
        theta0.extend((base[1:] - base[0]).tolist())
    theta, val, _ = nelder_mead_min(
        lambda th: value_of(th)[0], theta0, step=0.5, ftol=1e-11,
        max_fev=90 * len(theta0) + 120,
    )
    _, ps2, ws2 = value_of(theta)
    return val, ps2, ws2


def _certify_reduced(p_x, dspec, rho, qx, ps, ws):
    """Exact value of a direct-help candidate through the canonical
    conditional R-D solver."""
    live = [(p, w) for p, w in zip(ps, ws) if p > 1e-14]
    u_alpha = Alphabet.of_size(len(live), prefix="u")
    qu = Pmf(u_alpha, np.array([p for p, _ in live]))
    rows = np.vstack([w for _, w in live])
    cond = CondPmf(u_alpha, p_x.alphabet, rows)
    rd = conditional_rd(qu, cond, dspec)
    return rho * rd.rate - kl_vec(qx, p_x.probs)


def no_help_exponent(p_x: Pmf, distortion: DistortionSpec, rho,
                     opts: SolverOptions = SolverOptions()):
    """Exponent with no helper at all: a single supremum over source tilts
    of the R-D payoff minus the relative-entropy cost."""
    if np.any(p_x.probs <= 0.0):
        raise ProbabilityError("no-help exponent needs a strictly positive source law")
    core = _make_core(distortion)
    px = p_x.probs
    nx = px.shape[0]
    budget = distortion.budget

    def payoff(q):
        q = np.maximum(np.asarray(q, dtype=float), 0.0)
        s = q.sum()
        if s <= 0.0:
            return -math.inf
        q = q / s
        if core.is_binary:
            rate = core.rd_single(float(q[1]), budget)
        else:
            rate = core.rd_single(q, budget)
        return rho * rate - kl_vec(q, px)

    # structured starts: the source law itself, uniform, and the lossless
    # optimizer (exponential tilt of order 1/(1+rho))
    gibbs = px ** (1.0 / (1.0 + rho))
    gibbs = gibbs / gibbs.sum()
    candidates = [px.copy(), np.full(nx, 1.0 / nx), gibbs]

    if nx == 2:
        t_best, _ = golden_max(
            lambda t: payoff([1.0 - t, t]), 1e-9, 1.0 - 1e-9, xtol=1e-11
        )
        candidates.append(np.array([1.0 - t_best, t_best]))
        for t in np.linspace(0.02, 0.98, 25):
            candidates.append(np.array([1.0 - t, t]))
    else:
        candidates.extend(
            g / g.sum() for g in (np.maximum(v, 1e-9) for v in _simplex_grid(nx, 12))
        )

    scored = sorted(candidates, key=payoff, reverse=True)[:3]
    best_q, best_val = None, -math.inf
    for q0 in scored:
        base = np.log(np.maximum(q0, 1e-12))
        theta, neg, _ = nelder_mead_min(
            lambda th: -payoff(_softmax_full(th, nx)),
            (base[1:] - base[0]).tolist(), step=0.25, ftol=1e-13, max_fev=160 * nx,
        )
        if -neg > best_val:
            best_val = -neg
            best_q = _softmax_full(theta, nx)

    q_star = Pmf(p_x.alphabet, best_q)
    certified = rho * rd_function(q_star, distortion).rate - kl_divergence(q_star, p_x)
    certified_at_source = rho * rd_function(p_x, distortion).rate
    return max(certified, certified_at_source)


# ---------------------------------------------------------------------------
# independent reference: helper that reveals the observation losslessly
# ---------------------------------------------------------------------------

def identity_helper_exponent(spec: ProblemSpec):
    """Exponent with the description channel pinned to the identity (the
    helper spends enough rate to reveal its observation).  Used as an
    independent reference for the high-rate regime."""
    counter = _Counter()
    mid = _full_middle_problem(spec, SolverOptions(), counter)
    ny = spec.y_alphabet.size

    def value_at(qy):
        qy = np.maximum(np.asarray(qy, dtype=float), 1e-9)
        qy = qy / qy.sum()
        ps = [float(qy[y]) for y in range(ny)]
        ws = [np.eye(ny)[y] for y in range(ny)]
        val = mid.phi_exact(ps, ws)[0]
        return val - kl_vec(qy, spec.p_y().probs)

    if ny == 2:
        grid_best = max(
            (value_at([1.0 - t, t]), t) for t in np.linspace(0.02, 0.98, 33)
        )
        t_ref, v = golden_max(
            lambda t: value_at([1.0 - _clip01(t), _clip01(t)]),
            max(0.0, grid_best[1] - 0.05), min(1.0, grid_best[1] + 0.05), xtol=1e-9,
        )
        return max(grid_best[0], v)
    best = -math.inf
    for g in _simplex_grid(ny, 10):
        g = np.maximum(g, 1e-9)
        best = max(best, value_at(g / g.sum()))
    return best
