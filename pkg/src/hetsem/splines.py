"""Clamped uniform cubic B-spline basis.

Every varying edge effect in the model is a linear combination of the K
basis functions built here. The knot vector is clamped (first and last knot
repeated 4 times) with equally spaced interior knots, so the basis forms a
partition of unity on [domain_lo, domain_hi] and boundary values are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, OutOfDomainError

CUBIC_ORDER = 4  # polynomial order (degree 3 + 1)


@dataclass(frozen=True)
class BasisSpec:
    """Immutable description of one cubic B-spline basis.

    Attributes:
        basis_count: number of basis functions K (>= 4).
        domain_lo, domain_hi: closed evaluation interval.
        knot_vector: K + 4 nondecreasing knots, clamped at both ends.
    """

    basis_count: int
    domain_lo: float
    domain_hi: float
    knot_vector: np.ndarray = field(repr=False)

    def __post_init__(self):
        kv = np.asarray(self.knot_vector, dtype=float)
        if kv.shape != (self.basis_count + CUBIC_ORDER,):
            raise InvalidArgumentError(
                f"knot vector must have {self.basis_count + CUBIC_ORDER} entries, "
                f"got {kv.shape}"
            )
        if np.any(np.diff(kv) < 0):
            raise InvalidArgumentError("knot vector must be nondecreasing")
        object.__setattr__(self, "knot_vector", kv)

    @property
    def segment_count(self) -> int:
        return self.basis_count - CUBIC_ORDER + 1


def build_basis(basis_count: int, domain_lo: float, domain_hi: float) -> BasisSpec:
    """Construct a clamped uniform cubic basis with `basis_count` functions.

    Raises InvalidArgumentError if basis_count < 4 or the domain is degenerate.
    """
    if basis_count < CUBIC_ORDER:
        raise InvalidArgumentError(f"basis_count must be >= 4, got {basis_count}")
    if not (np.isfinite(domain_lo) and np.isfinite(domain_hi)):
        raise InvalidArgumentError("domain bounds must be finite")
    if not domain_lo < domain_hi:
        raise InvalidArgumentError(
            f"need domain_lo < domain_hi, got [{domain_lo}, {domain_hi}]"
        )
    # basis_count - 3 spans => basis_count - 4 interior knots, equally spaced
    breakpoints = np.linspace(domain_lo, domain_hi, basis_count - CUBIC_ORDER + 2)
    knots = np.concatenate([
        np.full(CUBIC_ORDER - 1, domain_lo),
        breakpoints,
        np.full(CUBIC_ORDER - 1, domain_hi),
    ])
    return BasisSpec(basis_count, float(domain_lo), float(domain_hi), knots)


def _clamp_or_raise(spec: BasisSpec, z: np.ndarray, strict: bool) -> np.ndarray:
    lo, hi = spec.domain_lo, spec.domain_hi
    if strict:
        bad = (z < lo) | (z > hi)
        if np.any(bad):
            offender = float(np.asarray(z).reshape(-1)[np.flatnonzero(bad)[0]])
            raise OutOfDomainError(
                f"covariate value {offender} outside domain [{lo}, {hi}]"
            )
        return z
    return np.clip(z, lo, hi)


def evaluate_basis(spec: BasisSpec, z: float, strict: bool = False) -> np.ndarray:
    """Evaluate all K basis functions at a single point via Cox-de Boor.

    Out-of-domain z is clamped to the domain unless strict=True, in which
    case OutOfDomainError is raised. At most 4 entries of the result are
    nonzero and the entries sum to 1.
    """
    return basis_matrix(spec, np.array([z], dtype=float), strict=strict)[0]


def basis_matrix(spec: BasisSpec, z: np.ndarray, strict: bool = False) -> np.ndarray:
    """Evaluate the basis at many points; returns an (n, K) design matrix."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        z = z.reshape(-1)
    z = _clamp_or_raise(spec, z, strict)
    t = spec.knot_vector
    K = spec.basis_count
    n = z.size
    out = np.zeros((n, K))

    # Locate the knot span for each point: t[span] <= z < t[span+1], with the
    # right end of the domain folded into the last nonempty span.
    span = np.searchsorted(t, z, side="right") - 1
    last = K - 1  # index of the last nonempty span [t[K-1], t[K])
    span = np.clip(span, CUBIC_ORDER - 1, last)

    # Iterative Cox-de Boor: N holds the degree-d nonzero basis values.
    # Column c stores left[c+1] = z - t[span-c] and right[c+1] = t[span+1+c] - z.
    N = np.ones((n, 1))
    for d in range(1, CUBIC_ORDER):
        left = z[:, None] - t[span[:, None] - np.arange(d)[None, :]]
        right = t[span[:, None] + 1 + np.arange(d)[None, :]] - z[:, None]
        N_new = np.zeros((n, d + 1))
        saved = np.zeros(n)
        for r in range(d):
            denom = right[:, r] + left[:, d - 1 - r]
            # repeated knots give empty spans; their terms are defined as 0
            with np.errstate(invalid="ignore", divide="ignore"):
                temp = np.where(denom > 0, N[:, r] / np.where(denom > 0, denom, 1.0), 0.0)
            N_new[:, r] = saved + right[:, r] * temp
            saved = left[:, d - 1 - r] * temp
        N_new[:, d] = saved
        N = N_new

    rows = np.repeat(np.arange(n), CUBIC_ORDER)
    cols = (span[:, None] - (CUBIC_ORDER - 1) + np.arange(CUBIC_ORDER)[None, :]).ravel()
    out[rows, cols] = N.ravel()
    return out


def rescale_to_unit(z: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Map covariate values from [lo, hi] onto the canonical [0, 1] domain."""
    if not hi > lo:
        raise InvalidArgumentError(
            f"degenerate covariate range [{lo}, {hi}]; need hi > lo"
        )
    return (np.asarray(z, dtype=float) - lo) / (hi - lo)
