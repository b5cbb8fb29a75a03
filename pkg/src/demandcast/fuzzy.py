"""Membership partitions and fuzzy arithmetic for the rule layer.

A membership partition attaches a small set of membership functions (MFs)
to one variable. Fuzzification turns a real value into per-MF membership
degrees; defuzzification reduces degrees back to a real value by a
center-of-gravity over the MF centers. The normalized fuzzy difference

    D(a, b) = sum(|a - b|) / sum(a + b)

is the distance used between fuzzy vectors throughout the evolving
network, together with the two scalar activations ``satlin`` and
``radbas``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateError, ShapeError

MF_KINDS = ("gaussian", "triangular")


def satlin(x):
    """Saturated linear activation: clamp to [0, 1]."""
    return np.clip(x, 0.0, 1.0)


def radbas(x):
    """Radial basis activation exp(-x^2)."""
    x = np.asarray(x, dtype=float)
    out = np.exp(-x * x)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MembershipPartition:
    """MF set for one variable: ascending centers with per-MF widths.

    For gaussian MFs the width is the standard deviation; for triangular
    MFs it is the half-base (membership reaches zero one width away from
    the center).
    """

    variable_name: str
    kind: str
    centers: np.ndarray
    widths: np.ndarray

    def __post_init__(self):
        if self.kind not in MF_KINDS:
            raise ConfigError(f"unknown MF kind {self.kind!r}")
        centers = np.asarray(self.centers, dtype=float)
        widths = np.asarray(self.widths, dtype=float)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "widths", widths)
        if centers.ndim != 1 or centers.size < 2:
            raise ConfigError("partition needs at least 2 centers")
        if widths.shape != centers.shape:
            raise ConfigError("widths must match centers in length")
        if not np.all(np.diff(centers) > 0):
            raise ConfigError(
                f"centers of {self.variable_name!r} must be strictly ascending"
            )
        if not np.all(widths > 0):
            raise ConfigError(f"widths of {self.variable_name!r} must be positive")

    @property
    def size(self) -> int:
        return int(self.centers.size)

    @property
    def lo(self) -> float:
        return float(self.centers[0])

    @property
    def hi(self) -> float:
        return float(self.centers[-1])


def build_partition(lo, hi, n, kind="gaussian", name="x") -> MembershipPartition:
    """Evenly spaced partition of [lo, hi] with ``n`` membership functions.

    Gaussian widths are half the center spacing, so adjacent MFs overlap
    substantially and every in-range value keeps a strictly positive
    degree. Triangular widths equal the spacing (adjacent MFs cross at
    one half).
    """
    if n < 2:
        raise ConfigError(f"partition needs n >= 2 MFs, got {n}")
    if not hi > lo:
        raise ConfigError(f"partition range is empty: [{lo}, {hi}]")
    centers = np.linspace(lo, hi, n)
    spacing = (hi - lo) / (n - 1)
    width = spacing / 2.0 if kind == "gaussian" else spacing
    return MembershipPartition(name, kind, centers, np.full(n, width))


def mf_labels(n: int) -> tuple:
    """Linguistic labels for an n-MF partition, LOW through HIGH."""
    named = {
        2: ("LOW", "HIGH"),
        3: ("LOW", "MEDIUM", "HIGH"),
        4: ("LOW", "MEDIUM-LOW", "MEDIUM-HIGH", "HIGH"),
        5: ("LOW", "MEDIUM-LOW", "MEDIUM", "MEDIUM-HIGH", "HIGH"),
    }
    if n in named:
        return named[n]
    return tuple(f"MF{i + 1}" for i in range(n))


def fuzzify(x, partition: MembershipPartition) -> np.ndarray:
    """Membership degrees of a scalar under one partition.

    The value is clamped to the partition range first, so out-of-range
    queries (a test-period heat wave, say) degrade gracefully instead of
    failing.
    """
    x = min(max(float(x), partition.lo), partition.hi)
    c = partition.centers
    w = partition.widths
    if partition.kind == "gaussian":
        return np.exp(-((x - c) ** 2) / (2.0 * w * w))
    return np.maximum(0.0, 1.0 - np.abs(x - c) / w)


def defuzzify(degrees, partition: MembershipPartition) -> float:
    """Center-of-gravity over MF centers weighted by degree."""
    d = np.asarray(degrees, dtype=float)
    if d.shape != partition.centers.shape:
        raise ShapeError(
            f"degree vector has length {d.size}, partition has {partition.size} MFs"
        )
    total = d.sum()
    if total <= 0.0:
        raise DegenerateError(
            f"all-zero membership for {partition.variable_name!r}: nothing to defuzzify"
        )
    return float((d * partition.centers).sum() / total)


@dataclass
class FuzzyVector:
    """Concatenated membership degrees for several variables.

    ``segments`` records the per-variable MF counts so the flat degree
    array can be sliced back per variable.
    """

    degrees: np.ndarray
    segments: tuple = field(default=())

    def __post_init__(self):
        self.degrees = np.asarray(self.degrees, dtype=float)
        self.segments = tuple(int(s) for s in self.segments)
        if self.segments and sum(self.segments) != self.degrees.size:
            raise ShapeError(
                f"segments {self.segments} do not add up to {self.degrees.size} degrees"
            )

    def __len__(self):
        return self.degrees.size

    def segment(self, i: int) -> np.ndarray:
        """View of the degrees belonging to variable ``i``."""
        start = sum(self.segments[:i])
        return self.degrees[start : start + self.segments[i]]


def fuzzify_vector(values, partitions) -> FuzzyVector:
    """Fuzzify one value per partition into a single concatenated vector."""
    values = np.asarray(values, dtype=float)
    if values.size != len(partitions):
        raise ShapeError(
            f"{values.size} values for {len(partitions)} partitions"
        )
    parts = [fuzzify(v, p) for v, p in zip(values, partitions)]
    return FuzzyVector(np.concatenate(parts), tuple(p.size for p in partitions))


def defuzzify_vector(fv: FuzzyVector, partitions) -> np.ndarray:
    """Defuzzify each segment of a fuzzy vector back to real values."""
    if len(fv.segments) != len(partitions):
        raise ShapeError(
            f"{len(fv.segments)} segments for {len(partitions)} partitions"
        )
    return np.array(
        [defuzzify(fv.segment(i), p) for i, p in enumerate(partitions)]
    )


def _degrees(v) -> np.ndarray:
    if isinstance(v, FuzzyVector):
        return v.degrees
    return np.asarray(v, dtype=float)


def fuzzy_difference(a, b) -> float:
    """Normalized fuzzy difference sum(|a-b|) / sum(a+b), in [0, 1]."""
    da = _degrees(a)
    db = _degrees(b)
    if da.shape != db.shape:
        raise ShapeError(f"fuzzy vectors differ in length: {da.size} vs {db.size}")
    denom = float(da.sum() + db.sum())
    if denom <= 0.0:
        raise DegenerateError("fuzzy difference of two all-zero vectors is undefined")
    return float(np.abs(da - db).sum() / denom)
