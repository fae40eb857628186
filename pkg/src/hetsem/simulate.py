"""Synthetic data generation with ground truth.

Scenarios mirror the benchmark protocol this package is built to reproduce:
directed graphs drawn as Erdos-Renyi with edge probability 1/p, effect
curves drawn from a small pool of named functions of the covariate, noise
either correlated Gaussian (confounded) or independent, and observations
solved from x = (I - B(z))^-1 eps row by row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.sparse import csr_matrix

from .errors import InvalidArgumentError, RetryCapExceededError
from .model import Dataset, EdgeIndicators, NoiseCovariance

SCENARIOS = (
    "cyclic-confounded",
    "acyclic-confounded",
    "cyclic-unconfounded",
    "misspec1",
)

GRAPH_MODES = ("any", "acyclic", "disjoint_cycles")

#: named effect curves assignable to edges
EFFECT_POOL: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "linear": lambda z: 0.8 * z,
    "cosine": lambda z: 0.9 * np.cos(np.pi * z),
    "tanh": lambda z: 0.9 * np.tanh(np.pi * z),
    "sine": lambda z: 0.5 * np.sin(np.pi * z),
}

#: labels drawn for randomly generated graphs
DEFAULT_EFFECT_POOL = ("linear", "cosine", "tanh")

#: common integral of |b(z)| over [-1, 1] for the quadratic curvature family
QUADRATIC_FAMILY_INTEGRAL = 1.6

_PD_RETRY_CAP = 1000
_GRAPH_RETRY_CAP = 10_000
_ROW_RETRY_CAP = 100


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    p: int
    n: int
    seed: int
    edge_prob: float | None = None  # defaults to 1/p
    curvature: float = 1.0  # misspec1 only
    noise: str = "gaussian"

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise InvalidArgumentError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.p < 2:
            raise InvalidArgumentError("need p >= 2")
        if self.n < 1:
            raise InvalidArgumentError("need n >= 1")
        ep = self.edge_prob
        if ep is not None and not (0.0 < ep <= 1.0):
            raise InvalidArgumentError(f"edge_prob must be in (0, 1], got {ep}")
        if self.noise not in ("gaussian", "uniform"):
            raise InvalidArgumentError(f"noise must be 'gaussian' or 'uniform', got {self.noise!r}")
        if self.curvature < 0:
            raise InvalidArgumentError("curvature must be >= 0")

    @property
    def effective_edge_prob(self) -> float:
        return self.edge_prob if self.edge_prob is not None else 1.0 / self.p


@dataclass(frozen=True)
class GroundTruth:
    """Generating graph, per-edge effect functions, and noise covariance.

    For the hidden-confounder scenario the tensors cover all nodes including
    hidden ones; `hidden` lists their 0-based indices and `observed_edges()`
    restricts the adjacency to the visible block.
    """

    edges: EdgeIndicators
    effect_labels: dict[tuple[int, int], str]  # (target j, source l) -> name
    noise: NoiseCovariance
    noise_kind: str = "gaussian"
    scenario: str = "cyclic-confounded"
    curvature: float | None = None
    hidden: tuple[int, ...] = ()
    shrink_factor: float = 1.0
    metadata: dict = field(default_factory=dict)

    @property
    def p_total(self) -> int:
        return self.edges.p

    @property
    def observed(self) -> list[int]:
        return [k for k in range(self.p_total) if k not in self.hidden]

    def observed_edges(self) -> EdgeIndicators:
        obs = self.observed
        return EdgeIndicators(self.edges.r[np.ix_(obs, obs)])

    def effect_value(self, j: int, l: int, z: np.ndarray) -> np.ndarray:
        label = self.effect_labels.get((j, l))
        if label is None:
            return np.zeros_like(np.asarray(z, dtype=float))
        if label.startswith("quadratic:"):
            return quadratic_effect(float(label.split(":", 1)[1]))(z)
        return EFFECT_POOL[label](np.asarray(z, dtype=float))

    def effect_stack(self, z: np.ndarray) -> np.ndarray:
        """B(z_i) under the true effect functions, stacked to (n, p, p)."""
        z = np.asarray(z, dtype=float)
        p = self.p_total
        B = np.zeros((z.size, p, p))
        for (j, l), _ in self.effect_labels.items():
            B[:, j, l] = self.effect_value(j, l, z)
        return B


def _has_cycle(r: np.ndarray) -> bool:
    """Kahn-style peeling; True when a directed cycle exists (r[j, l]: l -> j)."""
    indeg = r.sum(axis=1)
    r = r.copy()
    queue = [int(j) for j in np.flatnonzero(indeg == 0)]
    removed = 0
    while queue:
        j = queue.pop()
        removed += 1
        children = np.flatnonzero(r[:, j])
        r[:, j] = 0
        for c in children:
            if r[c].sum() == 0:
                queue.append(int(c))
    return removed < r.shape[0]


def _cycles_are_disjoint(r: np.ndarray) -> bool:
    """True iff every strongly connected component is a bare directed cycle."""
    p = r.shape[0]
    graph = csr_matrix(r.T)  # csgraph wants row -> col edges; r[j, l] is l -> j
    n_comp, labels = connected_components(graph, directed=True, connection="strong")
    for comp in range(n_comp):
        members = np.flatnonzero(labels == comp)
        if members.size < 2:
            continue
        sub = r[np.ix_(members, members)]
        if np.any(sub.sum(axis=0) != 1) or np.any(sub.sum(axis=1) != 1):
            return False
    return True


def random_graph(
    p: int,
    edge_prob: float,
    mode: str = "any",
    rng: np.random.Generator | None = None,
) -> EdgeIndicators:
    """Erdos-Renyi directed graph over ordered pairs.

    `acyclic` samples a strictly lower-triangular pattern and hides the
    ordering behind a random node permutation. `disjoint_cycles` rejection-
    samples until no two directed cycles share a node.
    """
    if mode not in GRAPH_MODES:
        raise InvalidArgumentError(f"unknown graph mode {mode!r}; choose from {GRAPH_MODES}")
    if not (0.0 <= edge_prob <= 1.0):
        raise InvalidArgumentError(f"edge_prob must be in [0, 1], got {edge_prob}")
    if rng is None:
        rng = np.random.default_rng()

    if mode == "acyclic":
        r = np.zeros((p, p), dtype=np.int8)
        lower = np.tril_indices(p, k=-1)
        r[lower] = rng.random(len(lower[0])) < edge_prob
        perm = rng.permutation(p)
        return EdgeIndicators(r[np.ix_(perm, perm)])

    for _ in range(_GRAPH_RETRY_CAP):
        r = (rng.random((p, p)) < edge_prob).astype(np.int8)
        np.fill_diagonal(r, 0)
        if mode == "any" or _cycles_are_disjoint(r):
            return EdgeIndicators(r)
    raise RetryCapExceededError(
        f"no disjoint-cycle graph found in {_GRAPH_RETRY_CAP} draws "
        f"(p={p}, edge_prob={edge_prob})"
    )


def random_effects(
    edges: EdgeIndicators,
    pool: tuple[str, ...] = DEFAULT_EFFECT_POOL,
    rng: np.random.Generator | None = None,
) -> dict[tuple[int, int], str]:
    """Assign each directed edge a uniformly drawn effect label from the pool."""
    if not pool:
        raise InvalidArgumentError("effect pool must be non-empty")
    unknown = [name for name in pool if name not in EFFECT_POOL]
    if unknown:
        raise InvalidArgumentError(f"unknown effect names: {unknown}")
    if rng is None:
        rng = np.random.default_rng()
    labels = {}
    for src, tgt in edges.edges():
        labels[(tgt, src)] = pool[int(rng.integers(len(pool)))]
    return labels


def random_covariance(
    p: int,
    confounded: bool,
    rng: np.random.Generator | None = None,
) -> tuple[NoiseCovariance, float]:
    """Unit-diagonal covariance with U(-1, 1) off-diagonals, resampled until PD.

    After the retry cap the off-diagonals are shrunk by 0.9 per extra round;
    the applied cumulative shrink factor is returned alongside the matrix.
    """
    if p < 1:
        raise InvalidArgumentError("need p >= 1")
    if rng is None:
        rng = np.random.default_rng()
    if not confounded:
        return NoiseCovariance.identity(p), 1.0

    iu = np.triu_indices(p, k=1)
    m = len(iu[0])
    batch = 500
    shrink = 1.0
    while shrink >= 1e-3:
        tried = 0
        while tried < _PD_RETRY_CAP:
            nb = min(batch, _PD_RETRY_CAP - tried)
            off = rng.uniform(-1.0, 1.0, size=(nb, m)) * shrink
            mats = np.broadcast_to(np.eye(p), (nb, p, p)).copy()
            mats[:, iu[0], iu[1]] = off
            mats[:, iu[1], iu[0]] = off
            smallest = np.linalg.eigvalsh(mats)[:, 0]
            ok = np.flatnonzero(smallest > 1e-10)
            if ok.size:
                return NoiseCovariance(mats[int(ok[0])]), shrink
            tried += nb
        shrink *= 0.9
    raise RetryCapExceededError(f"no PD covariance found for p={p}")


def quadratic_effect(curvature: float) -> Callable[[np.ndarray], np.ndarray]:
    """One-parameter quadratic effect family with a fixed |b| integral.

    b_c(z) = T (1 + c z^2) / (2 + 2c/3) on [-1, 1], where T is the family
    integral; the curve is positive, its integral of |b| equals T for every
    curvature c, and c = 0 degenerates to the constant T/2 (homogeneous data).
    """
    if curvature < 0:
        raise InvalidArgumentError("curvature must be >= 0")
    T = QUADRATIC_FAMILY_INTEGRAL
    norm = 2.0 + 2.0 * curvature / 3.0

    def b(z):
        z = np.asarray(z, dtype=float)
        return T * (1.0 + curvature * z * z) / norm

    return b


def misspec1_effects(curvature: float) -> Callable[[np.ndarray], np.ndarray]:
    """Effect curve used on every edge of the hidden-confounder scenario."""
    return quadratic_effect(curvature)


def _misspec1_truth(config: ScenarioConfig) -> GroundTruth:
    # two observed nodes with a true edge 1 -> 2, one hidden confounder
    # feeding both; all effects share the quadratic curvature curve
    r = np.zeros((3, 3), dtype=np.int8)
    r[1, 0] = 1  # x1 -> x2
    r[0, 2] = 1  # h -> x1
    r[1, 2] = 1  # h -> x2
    label = f"quadratic:{float(config.curvature)}"
    labels = {(1, 0): label, (0, 2): label, (1, 2): label}
    return GroundTruth(
        edges=EdgeIndicators(r),
        effect_labels=labels,
        noise=NoiseCovariance.identity(3),
        noise_kind="uniform",
        scenario=config.scenario,
        curvature=config.curvature,
        hidden=(2,),
        metadata={"seed": config.seed, "n": config.n},
    )


BIVARIATE_KINDS = ("none", "single", "cycle")


def bivariate_fixture(kind: str, noise_corr: float = 0.5) -> GroundTruth:
    """Two-node testbed: no edge, one edge 1 -> 2, or a 2-cycle.

    Active effects are 0.5 sin(pi z); noise variances are 1 with the given
    correlation, so the two nodes are always confounded.
    """
    if kind not in BIVARIATE_KINDS:
        raise InvalidArgumentError(f"kind must be one of {BIVARIATE_KINDS}")
    r = np.zeros((2, 2), dtype=np.int8)
    labels: dict[tuple[int, int], str] = {}
    if kind in ("single", "cycle"):
        r[1, 0] = 1
        labels[(1, 0)] = "sine"
    if kind == "cycle":
        r[0, 1] = 1
        labels[(0, 1)] = "sine"
    S = np.array([[1.0, noise_corr], [noise_corr, 1.0]])
    return GroundTruth(
        edges=EdgeIndicators(r),
        effect_labels=labels,
        noise=NoiseCovariance(S),
        scenario="bivariate-" + kind,
        metadata={"kind": kind},
    )


def make_truth(config: ScenarioConfig, rng: np.random.Generator | None = None) -> GroundTruth:
    """Draw a ground truth for the configured scenario."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    if config.scenario == "misspec1":
        if config.noise != "uniform":
            raise InvalidArgumentError("misspec1 uses uniform noise")
        return _misspec1_truth(config)

    mode = "acyclic" if config.scenario == "acyclic-confounded" else "any"
    edges = random_graph(config.p, config.effective_edge_prob, mode=mode, rng=rng)
    labels = random_effects(edges, rng=rng)
    confounded = config.scenario != "cyclic-unconfounded"
    noise, shrink = random_covariance(config.p, confounded, rng=rng)
    return GroundTruth(
        edges=edges,
        effect_labels=labels,
        noise=noise,
        noise_kind=config.noise,
        scenario=config.scenario,
        shrink_factor=shrink,
        metadata={"seed": config.seed, "n": config.n, "edge_prob": config.effective_edge_prob},
    )


def sample_data(
    truth: GroundTruth,
    n: int,
    rng: np.random.Generator | None = None,
) -> Dataset:
    """Draw n observations: z ~ U(-1, 1), eps per the noise law, x solves the SEM.

    Rows whose (I - B(z)) is numerically singular get a fresh z (cap 100 per
    row); the covariate law puts zero mass on exact singularities, so this
    matches the model's support.
    """
    if rng is None:
        rng = np.random.default_rng()
    p = truth.p_total
    z = rng.uniform(-1.0, 1.0, size=n)
    if truth.noise_kind == "gaussian":
        L = np.linalg.cholesky(truth.noise.S)
        eps = rng.standard_normal((n, p)) @ L.T
    else:
        eps = rng.uniform(-1.0, 1.0, size=(n, p))

    X = np.empty((n, p))
    eye = np.eye(p)
    B = truth.effect_stack(z)
    for i in range(n):
        retries = 0
        while True:
            A = eye - B[i]
            sign, logdet = np.linalg.slogdet(A)
            if sign != 0 and logdet > math.log(1e-10):
                X[i] = np.linalg.solve(A, eps[i])
                break
            retries += 1
            if retries > _ROW_RETRY_CAP:
                raise RetryCapExceededError(f"row {i}: (I - B(z)) singular after {_ROW_RETRY_CAP} redraws")
            z[i] = rng.uniform(-1.0, 1.0)
            B[i] = truth.effect_stack(np.array([z[i]]))[0]

    columns = [f"x{k + 1}" for k in range(p)]
    for h in truth.hidden:
        columns[h] = f"h{h + 1}"
    return Dataset(X, z, columns=tuple(columns))


def observed_view(truth: GroundTruth, data: Dataset) -> Dataset:
    """Drop hidden-node columns, keeping observed column order."""
    obs = truth.observed
    cols = tuple(data.columns[k] for k in obs) if data.columns else None
    return Dataset(data.X[:, obs], data.z, columns=cols)


def generate(config: ScenarioConfig) -> tuple[GroundTruth, Dataset]:
    """Deterministic truth + dataset for a scenario config (full columns)."""
    rng = np.random.default_rng(config.seed)
    truth = make_truth(config, rng=rng)
    data = sample_data(truth, config.n, rng=rng)
    return truth, data
