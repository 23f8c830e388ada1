"""Rate-distortion solvers for finite sources.

``rd_function`` computes the classical rate-distortion function R(D) of a
single source by alternating minimization at a fixed distortion slope,
wrapped in a bisection on the slope until the target budget is met.
``conditional_rd`` solves the conditional variant: one reconstruction kernel
per conditioning symbol, a single distortion budget taken jointly over the
source and the conditioning variable, and one slope shared by every
subproblem (the allocation across symbols is the lower convex envelope one).

Slopes are in bits per distortion unit.  A budget of exactly zero bypasses
the slope search: the kernel is restricted to zero-distortion entries and
the alternating minimization runs with that support mask, which for
Hamming-like distortions reduces to the entropy of the coverable source.
"""

import math
from dataclasses import dataclass

import numpy as np

from .prob import (
    Alphabet,
    CondPmf,
    Pmf,
    JointPmf,
    ProbabilityError,
    entropy_vec,
    mutual_information,
)

SLOPE_NUMERATOR = 40.0        # slope cap is 40 / (smallest positive distortion)
INNER_RATE_TOL = 1e-10        # fixed-slope loop: stop when the rate moves less
INNER_GAP_TOL = 1e-11         # certified duality-gap stop for the inner loop
INNER_MAX_ITER = 2000
BUDGET_TOL = 1e-9             # bisection: stop when |achieved - target| is below
MAX_BISECTIONS = 200


class DistortionInfeasibleError(ProbabilityError):
    """Some source symbol has no reconstruction within the budget."""


@dataclass(frozen=True, eq=False)
class DistortionSpec:
    """Distortion matrix d(x, xhat) >= 0 together with a budget D.

    Construction enforces coverability: every source symbol must admit at
    least one reconstruction with distortion at most D, which guarantees a
    finite guessing strategy at every blocklength.
    """

    source_alphabet: Alphabet
    reconstruction_alphabet: Alphabet
    matrix: np.ndarray
    budget: float

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float).copy()
        if m.shape != (self.source_alphabet.size, self.reconstruction_alphabet.size):
            raise ProbabilityError(
                f"distortion matrix shape {m.shape} does not match alphabets"
            )
        if np.any(np.isnan(m)) or np.any(m < 0.0):
            raise ProbabilityError("distortion entries must be nonnegative reals")
        if not self.budget >= 0.0:
            raise ProbabilityError(f"distortion budget must be >= 0, got {self.budget}")
        uncovered = np.where(m.min(axis=1) > self.budget)[0]
        if uncovered.size:
            x = self.source_alphabet.symbols[int(uncovered[0])]
            raise DistortionInfeasibleError(
                f"symbol {x!r} has no reconstruction within budget {self.budget}"
            )
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "budget", float(self.budget))

    @property
    def min_positive(self):
        pos = self.matrix[self.matrix > 0.0]
        return float(pos.min()) if pos.size else None

    @property
    def slope_cap(self):
        mp = self.min_positive
        return SLOPE_NUMERATOR / mp if mp is not None else 0.0

    def restrict_sources(self, keep_indices):
        """Spec over a subset of source symbols (used when pruning)."""
        keep = list(keep_indices)
        sub = Alphabet(tuple(self.source_alphabet.symbols[i] for i in keep))
        return DistortionSpec(
            sub, self.reconstruction_alphabet, self.matrix[keep, :], self.budget
        )

    @staticmethod
    def hamming(alphabet, budget):
        k = alphabet.size
        return DistortionSpec(alphabet, alphabet, 1.0 - np.eye(k), budget)


@dataclass(frozen=True, eq=False)
class RdResult:
    """Outcome of a rate-distortion minimization.

    ``achieving_kernel`` reproduces ``rate`` through (conditional) mutual
    information and meets ``achieved_distortion`` exactly; the latter never
    exceeds the budget by more than 1e-9.
    """

    rate: float
    achieving_kernel: CondPmf
    achieved_distortion: float
    slope: float
    iterations: int


# ---------------------------------------------------------------------------
# fixed-slope alternating minimization
# ---------------------------------------------------------------------------

def _fixed_slope_minimize(q, d, lam, w_init=None):
    """Minimize I(X; Xhat) + lam * E[d] over kernels for a single source.

    Returns (rate_bits, distortion, kernel, iterations).  ``q`` entries of
    zero are ignored; their kernel rows are filled with the output marginal.
    Stops on a certified duality gap: for any output marginal r, the value
    -sum_x q(x) log2(sum_xh r(xh) 2^(-lam d)) lower-bounds the optimum,
    while the induced kernel upper-bounds it.
    """
    nx, nxh = d.shape
    active = q > 0.0
    qa = q[active]
    da = d[active, :]
    weight = np.exp2(-lam * da)  # (na, nxh)
    dead = weight.sum(axis=1) <= 0.0
    if np.any(dead):
        # underflow across a whole row: keep only its cheapest reconstruction
        for i in np.where(dead)[0]:
            weight[i, int(np.argmin(da[i]))] = 1.0
    if w_init is not None:
        r = qa @ w_init[active, :]
        r = np.maximum(r, 1e-300)
        r /= r.sum()
    else:
        r = np.full(nxh, 1.0 / nxh)
    rate = 0.0
    dist = 0.0
    iters = 0
    w = None
    for iters in range(1, INNER_MAX_ITER + 1):
        part = weight @ r                      # per-source normalizers Z_x
        slack = float(np.max((qa / part) @ weight))
        lower = -float(qa @ np.log2(np.maximum(part, 1e-300))) - math.log2(max(slack, 1.0))
        w = weight * r[None, :] / part[:, None]
        r_new = qa @ w
        r_new = np.maximum(r_new, 1e-300)
        r_new /= r_new.sum()
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(w > 0.0, np.log2(np.maximum(w, 1e-300)) - np.log2(r_new)[None, :], 0.0)
        rate = float(np.sum(qa[:, None] * w * ratio))
        dist = float(np.sum(qa[:, None] * w * da))
        r = r_new
        if rate + lam * dist - lower < INNER_GAP_TOL:
            break
    full = np.tile(r, (nx, 1))
    full[active, :] = w
    return max(0.0, rate), dist, full, iters


def _zero_budget_kernel(q, d):
    """Minimize I over kernels supported on zero-distortion entries.

    Exact for budget 0; for Hamming-like distortions (one zero per row) the
    kernel is deterministic and the rate is the entropy of the covered source.
    """
    nx, nxh = d.shape
    mask = (d <= 0.0)
    active = q > 0.0
    if np.any(active & ~mask.any(axis=1)):
        raise DistortionInfeasibleError("no zero-distortion reconstruction available")
    qa = q[active]
    ma = mask[active, :].astype(float)
    r = np.full(nxh, 1.0 / nxh)
    rate = 0.0
    iters = 0
    w = None
    for iters in range(1, INNER_MAX_ITER + 1):
        part = ma @ r
        slack = float(np.max((qa / np.maximum(part, 1e-300)) @ ma))
        lower = -float(qa @ np.log2(np.maximum(part, 1e-300))) - math.log2(max(slack, 1.0))
        w = ma * r[None, :] / part[:, None]
        r_new = qa @ w
        r_new = np.maximum(r_new, 1e-300)
        r_new /= r_new.sum()
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(w > 0.0, np.log2(np.maximum(w, 1e-300)) - np.log2(r_new)[None, :], 0.0)
        rate = float(np.sum(qa[:, None] * w * ratio))
        r = r_new
        if rate - lower < INNER_GAP_TOL:
            break
    full = np.tile(r, (nx, 1))
    full[active, :] = w
    return max(0.0, rate), 0.0, full, iters


def _constant_guess_kernel(q_list, p_list, d):
    """Best zero-rate solution: one reconstruction column per subproblem."""
    nxh = d.shape[1]
    kernels = []
    dist = 0.0
    for q, p in zip(q_list, p_list):
        col_cost = q @ d
        j = int(np.argmin(col_cost))
        k = np.zeros((d.shape[0], nxh))
        k[:, j] = 1.0
        kernels.append(k)
        dist += p * float(col_cost[j])
    return kernels, dist


def _mi_of_kernel(q, w):
    """Mutual information in bits between a source q and kernel w."""
    r = q @ w
    out = 0.0
    for i in range(len(q)):
        if q[i] <= 0.0:
            continue
        row = w[i]
        m = row > 0.0
        out += q[i] * float(np.sum(row[m] * (np.log2(row[m]) - np.log2(np.maximum(r[m], 1e-300)))))
    return max(0.0, out)


def _dist_of_kernel(q, w, d):
    return float(np.sum(q[:, None] * w * d))


def _common_slope_solve(q_list, p_list, spec, budget):
    """Shared-slope solve of the (possibly conditional) R-D problem.

    Minimizes sum_u p_u I_u subject to sum_u p_u E_u[d] <= budget by
    bisecting one slope common to all subproblems.  Returns
    (rate, kernels, distortion, slope, iterations).
    """
    d = spec.matrix
    n_sub = len(q_list)

    kernels0, d_max = _constant_guess_kernel(q_list, p_list, d)
    if budget >= d_max - 1e-15:
        return 0.0, kernels0, d_max, 0.0, 0

    if budget <= 0.0:
        rate = 0.0
        kernels = []
        iters = 0
        for q, p in zip(q_list, p_list):
            r_u, _, w_u, it = _zero_budget_kernel(q, d)
            rate += p * r_u
            kernels.append(w_u)
            iters += it
        return rate, kernels, 0.0, math.inf, iters

    def solve_at(lam, warm):
        kernels, rates, dists, iters = [], 0.0, 0.0, 0
        for i, (q, p) in enumerate(zip(q_list, p_list)):
            w0 = warm[i] if warm is not None else None
            r_u, d_u, w_u, it = _fixed_slope_minimize(q, d, lam, w0)
            kernels.append(w_u)
            rates += p * r_u
            dists += p * d_u
            iters += it
        return rates, dists, kernels, iters

    lam_lo, lam_hi = 0.0, spec.slope_cap
    total_iters = 0
    rate_lo, dist_lo, k_lo, it = solve_at(lam_lo, None)
    total_iters += it
    rate_hi, dist_hi, k_hi, it = solve_at(lam_hi, None)
    total_iters += it
    if dist_hi > budget:
        # budget below what the slope cap reaches; fall back to zero-distortion
        rate, kernels, _, _, it = _common_slope_solve(q_list, p_list, spec, 0.0)
        return rate, kernels, 0.0, math.inf, total_iters + it

    best = (rate_hi, k_hi, dist_hi, lam_hi)
    for _ in range(MAX_BISECTIONS):
        lam = 0.5 * (lam_lo + lam_hi)
        rate, dist, kernels, it = solve_at(lam, k_hi)
        total_iters += it
        if dist <= budget:
            lam_hi, rate_hi, dist_hi, k_hi = lam, rate, dist, kernels
            best = (rate, kernels, dist, lam)
            if budget - dist < BUDGET_TOL or rate <= 0.0:
                return best[0], best[1], best[2], best[3], total_iters
        else:
            lam_lo, rate_lo, dist_lo, k_lo = lam, rate, dist, kernels
        if lam_hi - lam_lo < 1e-13 * max(1.0, spec.slope_cap):
            break

    # Bracket collapsed with a residual distortion gap (flat stretch of the
    # R-D curve).  Mix the feasible and infeasible endpoint kernels so the
    # budget is met exactly; both minimize the same Lagrangian in the limit,
    # so the mixture is optimal as well.
    if dist_lo > dist_hi + 1e-15:
        theta = (budget - dist_hi) / (dist_lo - dist_hi)
        theta = min(max(theta, 0.0), 1.0)
        kernels = [theta * wl + (1.0 - theta) * wh for wl, wh in zip(k_lo, k_hi)]
        rate = sum(
            p * _mi_of_kernel(q, w) for q, p, w in zip(q_list, p_list, kernels)
        )
        dist = sum(
            p * _dist_of_kernel(q, w, spec.matrix)
            for q, p, w in zip(q_list, p_list, kernels)
        )
        if dist <= budget + BUDGET_TOL:
            return max(0.0, rate), kernels, dist, 0.5 * (lam_lo + lam_hi), total_iters
    return best[0], best[1], best[2], best[3], total_iters


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def distortion_of(source, kernel: CondPmf, spec: DistortionSpec):
    """Exact expected distortion of a reconstruction kernel.

    ``source`` is either a Pmf over the source alphabet (kernel rows indexed
    by source symbols) or a pair ``(q_u, q_x_given_u)`` (kernel rows indexed
    by (u, x) pairs, u-major).
    """
    d = spec.matrix
    if isinstance(source, Pmf):
        if kernel.rows.shape != d.shape:
            raise ProbabilityError("kernel shape does not match distortion matrix")
        return float(np.sum(source.probs[:, None] * kernel.rows * d))
    q_u, q_x_given_u = source
    nu = q_u.alphabet.size
    nx = d.shape[0]
    if kernel.rows.shape[0] != nu * nx:
        raise ProbabilityError("conditional kernel must have one row per (u, x) pair")
    total = 0.0
    for ui in range(nu):
        block = kernel.rows[ui * nx:(ui + 1) * nx, :]
        total += float(q_u.probs[ui]) * float(
            np.sum(q_x_given_u.rows[ui][:, None] * block * d)
        )
    return total


def rd_function(q_x: Pmf, spec: DistortionSpec):
    """Rate-distortion function of a single source at the spec's budget."""
    if q_x.alphabet != spec.source_alphabet:
        raise ProbabilityError("source PMF alphabet does not match distortion spec")
    rate, kernels, dist, slope, iters = _common_slope_solve(
        [q_x.probs], [1.0], spec, spec.budget
    )
    kernel = CondPmf(spec.source_alphabet, spec.reconstruction_alphabet, kernels[0])
    return RdResult(rate, kernel, dist, slope, iters)


def conditional_rd(q_u: Pmf, q_x_given_u: CondPmf, spec: DistortionSpec):
    """Conditional rate-distortion function with a joint distortion budget.

    The reconstruction kernel may depend on both the source symbol and the
    conditioning symbol; the budget constrains the expectation over both.
    One slope is shared across conditioning symbols, so the distortion
    allocation is the one a common Lagrange multiplier induces.
    """
    if q_x_given_u.given_alphabet != q_u.alphabet:
        raise ProbabilityError("conditional source rows must be indexed by q_u's alphabet")
    if q_x_given_u.target_alphabet != spec.source_alphabet:
        raise ProbabilityError("conditional source alphabet does not match distortion spec")
    p_list = [float(p) for p in q_u.probs]
    q_list = [q_x_given_u.rows[i] for i in range(q_u.alphabet.size)]
    # zero-mass symbols contribute nothing; solve them at zero rate
    rate, kernels, dist, slope, iters = _common_slope_solve(
        [q for q, p in zip(q_list, p_list)],
        p_list,
        spec,
        spec.budget,
    )
    pair_alphabet = Alphabet.pairs(q_u.alphabet, spec.source_alphabet)
    stacked = np.vstack(kernels)
    kernel = CondPmf(pair_alphabet, spec.reconstruction_alphabet, stacked)
    return RdResult(rate, kernel, dist, slope, iters)


def per_symbol_rates(q_u: Pmf, q_x_given_u: CondPmf, spec: DistortionSpec, result: RdResult):
    """Apportion a conditional R-D rate: per-symbol mutual informations of the
    achieving kernel (weighted sum reproduces ``result.rate``)."""
    nx = spec.source_alphabet.size
    out = []
    for ui in range(q_u.alphabet.size):
        block = result.achieving_kernel.rows[ui * nx:(ui + 1) * nx, :]
        out.append(_mi_of_kernel(q_x_given_u.rows[ui], block))
    return out


def flat_allocation_rate(q_u: Pmf, q_x_given_u: CondPmf, spec: DistortionSpec):
    """Probability-weighted sum of per-symbol R-D rates, each at the full
    budget.  Upper-bounds the joint-budget conditional R-D; the gap is a
    useful diagnostic for how uneven the optimal allocation is."""
    total = 0.0
    for ui in range(q_u.alphabet.size):
        p = float(q_u.probs[ui])
        if p <= 0.0:
            continue
        row = Pmf(spec.source_alphabet, q_x_given_u.rows[ui])
        total += p * rd_function(row, spec).rate
    return total
