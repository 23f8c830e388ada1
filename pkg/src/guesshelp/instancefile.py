"""Flat key-value instance files.

One problem instance per file.  Keys are assignments ``key = tokens``;
matrices are row-major flat arrays whose shape is fixed by the alphabet
keys; ``#`` starts a comment.  Example::

    x_alphabet    = 0 1
    y_alphabet    = 0 1
    xhat_alphabet = 0 1
    p_xy          = 0.45 0.05 0.05 0.45
    distortion    = 0 1 1 0
    D   = 0.05
    rho = 1.0
    R   = 0.3

Every structural error is reported with its position (line for syntax,
row/column for matrix entries) before any computation starts.
"""

from dataclasses import dataclass

import numpy as np

from .prob import Alphabet, JointPmf, ProbabilityError
from .ratedist import DistortionSpec
from .exponents import ProblemSpec

REQUIRED_KEYS = (
    "x_alphabet", "y_alphabet", "xhat_alphabet",
    "p_xy", "distortion", "D", "rho", "R",
)


class InstanceFormatError(ProbabilityError):
    """Malformed instance file; the message carries coordinates."""


@dataclass(frozen=True)
class InstanceFile:
    x_alphabet: tuple
    y_alphabet: tuple
    xhat_alphabet: tuple
    p_xy: tuple          # row-major, |X| * |Y|
    distortion: tuple    # row-major, |X| * |Xhat|
    D: float
    rho: float
    R: float

    def to_problem_spec(self):
        nx, ny, nxh = len(self.x_alphabet), len(self.y_alphabet), len(self.xhat_alphabet)
        ax = Alphabet(self.x_alphabet)
        ay = Alphabet(self.y_alphabet)
        ah = Alphabet(self.xhat_alphabet)
        joint = JointPmf(ax, ay, np.asarray(self.p_xy).reshape(nx, ny))
        dist = DistortionSpec(ax, ah, np.asarray(self.distortion).reshape(nx, nxh), self.D)
        return ProblemSpec(joint, dist, self.rho, self.R)

    def dump(self):
        """Canonical serialization; parsing it back yields an equal instance."""
        lines = [
            "x_alphabet = " + " ".join(self.x_alphabet),
            "y_alphabet = " + " ".join(self.y_alphabet),
            "xhat_alphabet = " + " ".join(self.xhat_alphabet),
            "p_xy = " + " ".join(repr(v) for v in self.p_xy),
            "distortion = " + " ".join(repr(v) for v in self.distortion),
            "D = " + repr(self.D),
            "rho = " + repr(self.rho),
            "R = " + repr(self.R),
        ]
        return "\n".join(lines) + "\n"


def _parse_float(token, key, index, line_no):
    try:
        return float(token)
    except ValueError:
        raise InstanceFormatError(
            f"line {line_no}: key {key!r} entry {index} is not a number: {token!r}"
        ) from None


def parse_instance_text(text):
    """Parse instance-file text into an :class:`InstanceFile`."""
    raw = {}
    lines = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise InstanceFormatError(f"line {line_no}: expected 'key = values'")
        key, _, rest = body.partition("=")
        key = key.strip()
        tokens = rest.split()
        if key not in REQUIRED_KEYS:
            raise InstanceFormatError(f"line {line_no}: unknown key {key!r}")
        if key in raw:
            raise InstanceFormatError(f"line {line_no}: duplicate key {key!r}")
        if not tokens:
            raise InstanceFormatError(f"line {line_no}: key {key!r} has no values")
        raw[key] = tokens
        lines[key] = line_no

    missing = [k for k in REQUIRED_KEYS if k not in raw]
    if missing:
        raise InstanceFormatError(f"missing keys: {', '.join(missing)}")

    x_alpha = tuple(raw["x_alphabet"])
    y_alpha = tuple(raw["y_alphabet"])
    xh_alpha = tuple(raw["xhat_alphabet"])
    for name, alpha in (("x_alphabet", x_alpha), ("y_alphabet", y_alpha),
                        ("xhat_alphabet", xh_alpha)):
        if len(set(alpha)) != len(alpha):
            raise InstanceFormatError(
                f"line {lines[name]}: {name} has repeated symbols"
            )

    def matrix(key, n_rows, n_cols, nonneg_name):
        tokens = raw[key]
        line_no = lines[key]
        if len(tokens) != n_rows * n_cols:
            raise InstanceFormatError(
                f"line {line_no}: key {key!r} needs {n_rows}x{n_cols} = "
                f"{n_rows * n_cols} entries, got {len(tokens)}"
            )
        values = []
        for idx, tok in enumerate(tokens):
            v = _parse_float(tok, key, idx, line_no)
            if v < 0.0:
                r, c = divmod(idx, n_cols)
                raise InstanceFormatError(
                    f"line {line_no}: {nonneg_name} entry at row {r}, column {c} "
                    f"is negative ({v!r})"
                )
            values.append(v)
        return tuple(values)

    p_xy = matrix("p_xy", len(x_alpha), len(y_alpha), "p_xy")
    total = sum(p_xy)
    if abs(total - 1.0) > 1e-9:
        raise InstanceFormatError(
            f"line {lines['p_xy']}: p_xy entries sum to {total!r}, expected 1"
        )
    dist = matrix("distortion", len(x_alpha), len(xh_alpha), "distortion")

    def scalar(key):
        tokens = raw[key]
        if len(tokens) != 1:
            raise InstanceFormatError(
                f"line {lines[key]}: key {key!r} must be a single number"
            )
        return _parse_float(tokens[0], key, 0, lines[key])

    d_budget = scalar("D")
    rho = scalar("rho")
    rate = scalar("R")
    if d_budget < 0.0:
        raise InstanceFormatError(f"line {lines['D']}: D must be >= 0")
    if rho <= 0.0:
        raise InstanceFormatError(f"line {lines['rho']}: rho must be > 0")
    if rate < 0.0:
        raise InstanceFormatError(f"line {lines['R']}: R must be >= 0")

    # coverability reported with the offending row before any computation
    ncols = len(xh_alpha)
    for r in range(len(x_alpha)):
        row = dist[r * ncols:(r + 1) * ncols]
        if min(row) > d_budget:
            raise InstanceFormatError(
                f"line {lines['distortion']}: source symbol at row {r} has no "
                f"reconstruction within budget D = {d_budget!r}"
            )

    return InstanceFile(x_alpha, y_alpha, xh_alpha, p_xy, dist, d_budget, rho, rate)


def load_instance(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InstanceFormatError(f"cannot read instance file {path}: {exc}") from None
    return parse_instance_text(text)
