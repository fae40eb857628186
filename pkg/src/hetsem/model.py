"""Domain types and conditional log-likelihood of the covariate-varying SEM.

The observation model is x = B(z) x + eps with eps ~ N(0, S), so the
conditional density of one row is |det(I - B(z))| * N((I - B(z)) x | 0, S).
The absolute determinant makes the change of variables valid for cyclic
graphs, where det(I - B) may be negative.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import (
    InvalidArgumentError,
    NearSingularError,
    NonFiniteDataError,
    NotPositiveDefiniteError,
)
from .splines import BasisSpec, basis_matrix, evaluate_basis

SINGULARITY_FLOOR = 1e-12
LOG_2PI = math.log(2.0 * math.pi)

# |off-diagonal correlation| above which a bidirected edge is reported
BIDIRECTED_REPORT_THRESHOLD = 0.1

_ROW_CHUNK = 256  # fixed chunk size keeps reductions thread-count independent


@dataclass(frozen=True)
class EdgeIndicators:
    """Binary adjacency for directed edges: r[j, l] = 1 means l -> j."""

    r: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r)
        if r.ndim != 2 or r.shape[0] != r.shape[1] or r.shape[0] < 2:
            raise InvalidArgumentError(f"edge matrix must be square with p >= 2, got {r.shape}")
        if not np.isin(r, (0, 1)).all():
            raise InvalidArgumentError("edge indicators must be 0 or 1")
        if np.any(np.diag(r) != 0):
            raise InvalidArgumentError("self-loops are not allowed (nonzero diagonal)")
        object.__setattr__(self, "r", r.astype(np.int8))

    @classmethod
    def empty(cls, p: int) -> "EdgeIndicators":
        return cls(np.zeros((p, p), dtype=np.int8))

    @property
    def p(self) -> int:
        return self.r.shape[0]

    def edge_count(self) -> int:
        return int(self.r.sum())

    def parents(self, j: int) -> list[int]:
        return [int(l) for l in np.flatnonzero(self.r[j])]

    def edges(self) -> list[tuple[int, int]]:
        """Edges as (source, target) pairs, 0-based."""
        tgt, src = np.nonzero(self.r)
        return list(zip(src.tolist(), tgt.tolist()))


@dataclass(frozen=True)
class SplineCoefficients:
    """p x p x K tensor; beta[j, l] are the basis coefficients of b_jl."""

    beta: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.beta, dtype=float)
        if b.ndim != 3 or b.shape[0] != b.shape[1]:
            raise InvalidArgumentError(f"coefficients must have shape (p, p, K), got {b.shape}")
        diag = b[np.arange(b.shape[0]), np.arange(b.shape[0]), :]
        if np.any(diag != 0):
            raise InvalidArgumentError("diagonal coefficient vectors must be zero")
        object.__setattr__(self, "beta", b)

    @classmethod
    def zeros(cls, p: int, basis_count: int) -> "SplineCoefficients":
        return cls(np.zeros((p, p, basis_count)))

    @property
    def p(self) -> int:
        return self.beta.shape[0]

    @property
    def basis_count(self) -> int:
        return self.beta.shape[2]

    def consistent_with(self, edges: EdgeIndicators, atol: float = 0.0) -> bool:
        """True when beta[j, l] vanishes exactly where r[j, l] = 0."""
        norms = np.abs(self.beta).sum(axis=2)
        inactive = edges.r == 0
        return bool(np.all(norms[inactive] <= atol))


@dataclass(frozen=True)
class NoiseCovariance:
    """Symmetric positive-definite noise covariance S."""

    S: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise InvalidArgumentError(f"covariance must be square, got {S.shape}")
        if not np.allclose(S, S.T, atol=1e-12, rtol=0.0):
            raise NotPositiveDefiniteError("covariance is not symmetric within 1e-12")
        S = 0.5 * (S + S.T)
        try:
            np.linalg.cholesky(S)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError("covariance is not positive definite") from exc
        object.__setattr__(self, "S", S)

    @classmethod
    def identity(cls, p: int) -> "NoiseCovariance":
        return cls(np.eye(p))

    @property
    def p(self) -> int:
        return self.S.shape[0]

    def correlation(self) -> np.ndarray:
        d = np.sqrt(np.diag(self.S))
        return self.S / np.outer(d, d)


@dataclass(frozen=True)
class Dataset:
    """Observations X (n x p) with a scalar exogenous covariate per row."""

    X: np.ndarray
    z: np.ndarray
    columns: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        z = np.asarray(self.z, dtype=float).reshape(-1)
        if X.ndim != 2 or X.shape[0] < 1:
            raise InvalidArgumentError(f"X must be a nonempty 2-d matrix, got shape {X.shape}")
        if z.shape[0] != X.shape[0]:
            raise InvalidArgumentError(
                f"covariate length {z.shape[0]} does not match n = {X.shape[0]}"
            )
        if not np.isfinite(X).all():
            raise NonFiniteDataError("X contains non-finite entries")
        if not np.isfinite(z).all():
            raise NonFiniteDataError("covariate contains non-finite entries")
        if self.columns is not None and len(self.columns) != X.shape[1]:
            raise InvalidArgumentError("column name count does not match X")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "z", z)
        if self.columns is not None:
            object.__setattr__(self, "columns", tuple(self.columns))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class MixedGraph:
    """Directed edges (source, target) plus bidirected confounding pairs."""

    p: int
    directed_edges: tuple[tuple[int, int], ...]
    bidirected_edges: tuple[tuple[int, int], ...] = ()

    @classmethod
    def from_parameters(
        cls,
        edges: EdgeIndicators,
        noise: NoiseCovariance | None = None,
        corr_threshold: float = BIDIRECTED_REPORT_THRESHOLD,
    ) -> "MixedGraph":
        bidirected: list[tuple[int, int]] = []
        if noise is not None:
            corr = noise.correlation()
            for a in range(edges.p):
                for b in range(a + 1, edges.p):
                    if abs(corr[a, b]) > corr_threshold:
                        bidirected.append((a, b))
        return cls(edges.p, tuple(edges.edges()), tuple(bidirected))

    def parents(self, j: int) -> list[int]:
        return sorted(src for src, tgt in self.directed_edges if tgt == j)

    def bidirected_component(self, j: int) -> set[int]:
        """Nodes reachable from j through bidirected edges only."""
        adj: dict[int, set[int]] = {k: set() for k in range(self.p)}
        for a, b in self.bidirected_edges:
            adj[a].add(b)
            adj[b].add(a)
        seen, stack = {j}, [j]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        seen.discard(j)
        return seen


def effect_at(
    coeffs: SplineCoefficients,
    spec: BasisSpec,
    j: int,
    l: int,
    z: float,
    strict: bool = False,
) -> float:
    """Effect of X_l on X_j at covariate value z: phi(z) . beta[j, l]."""
    p = coeffs.p
    if not (0 <= j < p and 0 <= l < p):
        raise InvalidArgumentError(f"indices ({j}, {l}) out of range for p = {p}")
    if j == l:
        raise InvalidArgumentError("self-effects are identically zero; j must differ from l")
    return float(coeffs.beta[j, l] @ evaluate_basis(spec, z, strict=strict))


def assemble_B(
    coeffs: SplineCoefficients, spec: BasisSpec, z: float, strict: bool = False
) -> np.ndarray:
    """Effect matrix B(z) with entries b_jl(z) and zero diagonal."""
    phi = evaluate_basis(spec, z, strict=strict)
    return coeffs.beta @ phi


def assemble_B_stack(
    coeffs: SplineCoefficients, spec: BasisSpec, z: np.ndarray, strict: bool = False
) -> np.ndarray:
    """B(z_i) for every row, stacked into an (n, p, p) array."""
    Phi = basis_matrix(spec, z, strict=strict)
    return np.einsum("jlk,nk->njl", coeffs.beta, Phi)


def row_log_likelihood(
    x: np.ndarray,
    z: float,
    coeffs: SplineCoefficients,
    spec: BasisSpec,
    noise: NoiseCovariance,
) -> float:
    """log |det(I - B(z))| + log N((I - B(z)) x | 0, S) for one observation."""
    data = Dataset(np.asarray(x, dtype=float).reshape(1, -1), np.array([z]))
    return float(_per_row_log_likelihood(data, coeffs, spec, noise)[0])


def _per_row_log_likelihood(
    data: Dataset,
    coeffs: SplineCoefficients,
    spec: BasisSpec,
    noise: NoiseCovariance,
) -> np.ndarray:
    if coeffs.p != data.p or noise.p != data.p:
        raise InvalidArgumentError("dimension mismatch between data and parameters")
    B = assemble_B_stack(coeffs, spec, data.z)
    A = np.eye(data.p)[None, :, :] - B
    _, logabsdet = np.linalg.slogdet(A)
    if np.any(logabsdet <= math.log(SINGULARITY_FLOOR)) or not np.isfinite(logabsdet).all():
        row = int(np.flatnonzero(~(logabsdet > math.log(SINGULARITY_FLOOR)))[0])
        raise NearSingularError(
            f"|det(I - B(z))| <= {SINGULARITY_FLOOR} at row {row}", row=row
        )
    E = np.einsum("njl,nl->nj", A, data.X)
    L = np.linalg.cholesky(noise.S)
    half_logdet_S = float(np.log(np.diag(L)).sum())
    Y = solve_triangular(L, E.T, lower=True).T
    quad = np.einsum("nj,nj->n", Y, Y)
    return logabsdet - 0.5 * data.p * LOG_2PI - half_logdet_S - 0.5 * quad


def dataset_log_likelihood(
    data: Dataset,
    coeffs: SplineCoefficients,
    spec: BasisSpec,
    noise: NoiseCovariance,
    threads: int = 1,
) -> float:
    """Sum of row log-likelihoods over the dataset.

    Rows are evaluated in fixed chunks of 256; with threads > 1 the chunks
    are computed by a thread pool but assembled and summed in row order, so
    the result is bit-identical for any worker count. Raises
    NearSingularError (with the offending row index) instead of returning a
    -inf float.
    """
    n = data.n
    starts = list(range(0, n, _ROW_CHUNK))

    def one_chunk(s: int) -> np.ndarray:
        sl = slice(s, min(s + _ROW_CHUNK, n))
        chunk = Dataset(data.X[sl], data.z[sl])
        try:
            return _per_row_log_likelihood(chunk, coeffs, spec, noise)
        except NearSingularError as exc:
            raise NearSingularError(
                f"|det(I - B(z))| <= {SINGULARITY_FLOOR} at row {s + (exc.row or 0)}",
                row=s + (exc.row or 0),
            ) from None

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one_chunk, starts))
    else:
        parts = [one_chunk(s) for s in starts]
    return float(np.sum(np.concatenate(parts)))
