"""Discrete probability kernel: alphabets, PMFs, joint and conditional PMFs,
and the information measures built on them.

Conventions used throughout the package:

- All logarithms are base 2; entropies, divergences, and rates are in bits.
- ``0 * log(0) = 0`` and ``0 * log(0/p) = 0``.
- Relative entropy is ``+inf`` exactly when the first argument puts mass
  where the second has none (no large-sentinel substitutes).
- Probability vectors are validated to sum to 1 within ``SUM_TOL`` and then
  renormalized exactly; tiny negative entries (down to ``NEG_FLOOR``) are
  clamped to 0 before validation.

All types are immutable after construction and all operations are pure
functions, so everything here is safe to share across threads.
"""

import math
from dataclasses import dataclass, field

import numpy as np

SUM_TOL = 1e-12
NEG_FLOOR = -1e-14

LOG2 = math.log(2.0)


class ProbabilityError(ValueError):
    """Base error for invalid probabilistic objects or arguments."""


class AlphabetMismatchError(ProbabilityError):
    """Operands are defined over incompatible alphabets or shapes."""


class InvalidDistributionError(ProbabilityError):
    """Entries are negative beyond tolerance or do not sum to one."""


class UndefinedConditionalError(ProbabilityError):
    """Conditioning on an event of probability zero."""


class ParameterDomainError(ProbabilityError):
    """A scalar parameter lies outside its admissible domain."""


def _clean_probs(values, what):
    arr = np.asarray(values, dtype=float).copy()
    if np.any(np.isnan(arr)):
        raise InvalidDistributionError(f"{what}: NaN entry")
    bad = arr < NEG_FLOOR
    if np.any(bad):
        i = int(np.argmax(bad))
        raise InvalidDistributionError(
            f"{what}: negative entry {arr.flat[i] if arr.ndim == 1 else arr[np.unravel_index(i, arr.shape)]}"
        )
    arr[(arr < 0.0)] = 0.0
    total = float(arr.sum())
    if abs(total - 1.0) > SUM_TOL:
        raise InvalidDistributionError(f"{what}: entries sum to {total!r}, not 1")
    arr /= total
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Alphabet:
    """Finite ordered alphabet; symbol index is a stable bijection [0, size)."""

    symbols: tuple

    def __post_init__(self):
        syms = tuple(self.symbols)
        if len(syms) == 0:
            raise ProbabilityError("alphabet must contain at least one symbol")
        if len(set(syms)) != len(syms):
            raise ProbabilityError("alphabet symbols must be distinct")
        object.__setattr__(self, "symbols", syms)

    @property
    def size(self):
        return len(self.symbols)

    def index(self, symbol):
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise ProbabilityError(f"symbol {symbol!r} not in alphabet") from None

    def __len__(self):
        return len(self.symbols)

    def __eq__(self, other):
        return isinstance(other, Alphabet) and self.symbols == other.symbols

    def __hash__(self):
        return hash(self.symbols)

    @staticmethod
    def of_size(k, prefix=""):
        """Alphabet with symbols ``prefix0 .. prefix{k-1}`` (ints when no prefix)."""
        if prefix:
            return Alphabet(tuple(f"{prefix}{i}" for i in range(k)))
        return Alphabet(tuple(range(k)))

    @staticmethod
    def pairs(first, second):
        """Product alphabet with tuples (a, b), first-major order."""
        return Alphabet(tuple((a, b) for a in first.symbols for b in second.symbols))


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probability vector over an :class:`Alphabet`."""

    alphabet: Alphabet
    probs: np.ndarray

    def __post_init__(self):
        arr = _clean_probs(self.probs, "Pmf")
        if arr.ndim != 1 or arr.shape[0] != self.alphabet.size:
            raise AlphabetMismatchError(
                f"Pmf length {arr.shape} does not match alphabet size {self.alphabet.size}"
            )
        object.__setattr__(self, "probs", arr)

    def prob(self, symbol):
        return float(self.probs[self.alphabet.index(symbol)])

    def support(self):
        return tuple(s for s, p in zip(self.alphabet.symbols, self.probs) if p > 0.0)

    @staticmethod
    def uniform(alphabet):
        k = alphabet.size
        return Pmf(alphabet, np.full(k, 1.0 / k))

    @staticmethod
    def point_mass(alphabet, symbol):
        v = np.zeros(alphabet.size)
        v[alphabet.index(symbol)] = 1.0
        return Pmf(alphabet, v)

    @staticmethod
    def from_values(values, alphabet=None):
        values = np.asarray(values, dtype=float)
        if alphabet is None:
            alphabet = Alphabet.of_size(values.shape[0])
        return Pmf(alphabet, values)


@dataclass(frozen=True, eq=False)
class JointPmf:
    """Joint probability matrix; rows index the first variable."""

    row_alphabet: Alphabet
    col_alphabet: Alphabet
    probs: np.ndarray

    def __post_init__(self):
        arr = _clean_probs(self.probs, "JointPmf")
        if arr.shape != (self.row_alphabet.size, self.col_alphabet.size):
            raise AlphabetMismatchError(
                f"JointPmf shape {arr.shape} does not match alphabets "
                f"({self.row_alphabet.size}, {self.col_alphabet.size})"
            )
        object.__setattr__(self, "probs", arr)

    def row_marginal(self):
        return Pmf(self.row_alphabet, self.probs.sum(axis=1))

    def col_marginal(self):
        return Pmf(self.col_alphabet, self.probs.sum(axis=0))

    def transpose(self):
        return JointPmf(self.col_alphabet, self.row_alphabet, self.probs.T.copy())


@dataclass(frozen=True, eq=False)
class CondPmf:
    """Row-stochastic conditional PMF: one Pmf over ``target_alphabet`` per
    symbol of ``given_alphabet``."""

    given_alphabet: Alphabet
    target_alphabet: Alphabet
    rows: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.rows, dtype=float)
        if arr.shape != (self.given_alphabet.size, self.target_alphabet.size):
            raise AlphabetMismatchError(
                f"CondPmf shape {arr.shape} does not match alphabets "
                f"({self.given_alphabet.size}, {self.target_alphabet.size})"
            )
        cleaned = np.vstack([
            _clean_probs(arr[i], f"CondPmf row {i}") for i in range(arr.shape[0])
        ])
        cleaned.flags.writeable = False
        object.__setattr__(self, "rows", cleaned)

    def row(self, symbol):
        return Pmf(self.target_alphabet, self.rows[self.given_alphabet.index(symbol)])

    @staticmethod
    def identity(alphabet):
        return CondPmf(alphabet, alphabet, np.eye(alphabet.size))

    @staticmethod
    def constant(given_alphabet, target_pmf):
        rows = np.tile(target_pmf.probs, (given_alphabet.size, 1))
        return CondPmf(given_alphabet, target_pmf.alphabet, rows)


# ---------------------------------------------------------------------------
# scalar helpers (used heavily by the solvers; plain floats in, floats out)
# ---------------------------------------------------------------------------

def xlog2x(x):
    return 0.0 if x <= 0.0 else x * math.log2(x)


def binary_entropy(p):
    """h2(p) in bits."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log2(p) + (1.0 - p) * math.log2(1.0 - p))


def entropy_vec(probs):
    probs = np.asarray(probs, dtype=float)
    pos = probs[probs > 0.0]
    if pos.size == 0:
        return 0.0
    return float(max(0.0, -np.sum(pos * np.log2(pos))))


def kl_vec(q, p):
    """KL divergence in bits between raw nonnegative vectors of equal length."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    mask = q > 0.0
    if np.any(p[mask] <= 0.0):
        return math.inf
    val = float(np.sum(q[mask] * (np.log2(q[mask]) - np.log2(p[mask]))))
    return max(0.0, val)


# ---------------------------------------------------------------------------
# information measures on the typed objects
# ---------------------------------------------------------------------------

def entropy(p: Pmf):
    """Shannon entropy of ``p`` in bits; lies in [0, log2 |alphabet|]."""
    return entropy_vec(p.probs)


def renyi_entropy(p: Pmf, alpha):
    """Renyi entropy of order ``alpha`` in bits.

    ``alpha`` must be positive; ``alpha == 1`` returns the Shannon entropy.
    Nonincreasing in ``alpha``.
    """
    if not alpha > 0.0:
        raise ParameterDomainError(f"Renyi order must be positive, got {alpha}")
    if alpha == 1.0:
        return entropy(p)
    pos = p.probs[p.probs > 0.0]
    total = float(np.sum(pos ** alpha))
    return math.log2(total) / (1.0 - alpha)


def kl_divergence(q: Pmf, p: Pmf):
    """Relative entropy D(q || p) in bits; ``+inf`` iff supp(q) ⊄ supp(p)."""
    if q.alphabet != p.alphabet:
        raise AlphabetMismatchError("kl_divergence needs a common alphabet")
    return kl_vec(q.probs, p.probs)


def joint_kl(q: JointPmf, p: JointPmf):
    """Relative entropy between joint PMFs on the same product alphabet."""
    if q.row_alphabet != p.row_alphabet or q.col_alphabet != p.col_alphabet:
        raise AlphabetMismatchError("joint_kl needs common row/col alphabets")
    return kl_vec(q.probs.ravel(), p.probs.ravel())


def mutual_information(j: JointPmf):
    """I(row; col) in bits; zero iff the joint factorizes."""
    pr = j.probs.sum(axis=1)
    pc = j.probs.sum(axis=0)
    return max(0.0, kl_vec(j.probs.ravel(), np.outer(pr, pc).ravel()))


def conditional_mutual_information(q_u: Pmf, per_u_joints):
    """Average of per-symbol mutual informations, weighted by ``q_u``.

    ``per_u_joints`` is indexed by the alphabet of ``q_u``; entries with zero
    weight may be ``None``.
    """
    if len(per_u_joints) != q_u.alphabet.size:
        raise AlphabetMismatchError(
            f"expected {q_u.alphabet.size} joints, got {len(per_u_joints)}"
        )
    total = 0.0
    for w, joint in zip(q_u.probs, per_u_joints):
        if w <= 0.0:
            continue
        if joint is None:
            raise AlphabetMismatchError("missing joint for a symbol of positive mass")
        total += float(w) * mutual_information(joint)
    return total


# ---------------------------------------------------------------------------
# structural operations
# ---------------------------------------------------------------------------

def compose(p: Pmf, k: CondPmf):
    """Joint PMF with probabilities p(w) * k(v | w)."""
    if p.alphabet != k.given_alphabet:
        raise AlphabetMismatchError("compose: Pmf alphabet must match kernel input")
    return JointPmf(p.alphabet, k.target_alphabet, p.probs[:, None] * k.rows)


def marginalize(j: JointPmf, axis):
    """Sum out ``axis`` (0 = rows variable, 1 = columns variable)."""
    if axis == 0:
        return j.col_marginal()
    if axis == 1:
        return j.row_marginal()
    raise ParameterDomainError(f"axis must be 0 or 1, got {axis}")


def condition(j: JointPmf, row_symbol):
    """Distribution of the column variable given ``row_symbol``.

    Raises :class:`UndefinedConditionalError` when the row has zero mass;
    there is no silent division.
    """
    i = j.row_alphabet.index(row_symbol)
    mass = float(j.probs[i].sum())
    if mass <= 0.0:
        raise UndefinedConditionalError(
            f"cannot condition on zero-probability symbol {row_symbol!r}"
        )
    return Pmf(j.col_alphabet, j.probs[i] / mass)
