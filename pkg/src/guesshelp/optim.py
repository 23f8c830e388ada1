"""Small derivative-free optimizers used by the exponent solvers.

Both routines are deterministic: fixed iteration rules, no randomness, no
wall-clock dependence, so solver outputs are reproducible bit for bit.
"""

import math

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
INVPHI2 = (3.0 - math.sqrt(5.0)) / 2.0


def golden_max(f, lo, hi, xtol=1e-10, max_iter=200):
    """Golden-section maximization of a unimodal function on [lo, hi].

    Returns (x_best, f_best).  For concave f this converges to the global
    maximizer; for merely unimodal f it finds the mode of the bracket.
    """
    a, b = float(lo), float(hi)
    h = b - a
    if h <= xtol:
        m = 0.5 * (a + b)
        return m, f(m)
    c = a + INVPHI2 * h
    d = a + INVPHI * h
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if h <= xtol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            h = b - a
            c = a + INVPHI2 * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + INVPHI * h
            fd = f(d)
    if fc >= fd:
        return c, fc
    return d, fd


def nelder_mead_min(f, x0, step=0.25, ftol=1e-11, max_fev=400):
    """Plain Nelder-Mead minimization without restarts.

    ``x0`` is a sequence of floats; ``step`` (scalar or sequence) sets the
    initial simplex size.  Returns (x_best, f_best, n_evals).
    """
    n = len(x0)
    x0 = [float(v) for v in x0]
    if n == 0:
        return x0, f(x0), 1
    steps = [step] * n if isinstance(step, (int, float)) else [float(s) for s in step]
    simplex = [list(x0)]
    for i in range(n):
        pt = list(x0)
        pt[i] += steps[i] if steps[i] != 0.0 else 0.1
        simplex.append(pt)
    fvals = [f(p) for p in simplex]
    nfev = n + 1

    def order():
        idx = sorted(range(n + 1), key=lambda i: fvals[i])
        return [simplex[i] for i in idx], [fvals[i] for i in idx]

    while nfev < max_fev:
        simplex, fvals = order()
        if abs(fvals[-1] - fvals[0]) <= ftol * (abs(fvals[0]) + ftol):
            break
        centroid = [sum(p[i] for p in simplex[:-1]) / n for i in range(n)]
        worst = simplex[-1]
        refl = [centroid[i] + (centroid[i] - worst[i]) for i in range(n)]
        fr = f(refl)
        nfev += 1
        if fr < fvals[0]:
            exp = [centroid[i] + 2.0 * (centroid[i] - worst[i]) for i in range(n)]
            fe = f(exp)
            nfev += 1
            if fe < fr:
                simplex[-1], fvals[-1] = exp, fe
            else:
                simplex[-1], fvals[-1] = refl, fr
        elif fr < fvals[-2]:
            simplex[-1], fvals[-1] = refl, fr
        else:
            contr = [centroid[i] + 0.5 * (worst[i] - centroid[i]) for i in range(n)]
            fc = f(contr)
            nfev += 1
            if fc < fvals[-1]:
                simplex[-1], fvals[-1] = contr, fc
            else:
                best = simplex[0]
                for j in range(1, n + 1):
                    simplex[j] = [0.5 * (simplex[j][i] + best[i]) for i in range(n)]
                    fvals[j] = f(simplex[j])
                nfev += n
    simplex, fvals = order()
    return simplex[0], fvals[0], nfev
