import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from src.Errors import DegenerateClusterError, InfeasibleLayoutError, InvalidArgumentError

PI = math.pi
TWO_PI = 2.0 * math.pi

EQUISPACED = "equispaced"
UNIFORM_RANDOM = "uniform-random"
LAYOUTS = (EQUISPACED, UNIFORM_RANDOM)

DEFAULT_TAU_MIN = 0.05
DEFAULT_RETRIES = 10_000


def wrap_angle(x):
    """Reduce angles into (-pi, pi]."""
    x = np.asarray(x, dtype=float)
    reduced = np.mod(x + PI, TWO_PI) - PI
    reduced = np.where(reduced <= -PI, PI, reduced)
    # values already in range are returned untouched, small angles keep full precision
    inside = (x > -PI) & (x <= PI)
    reduced = np.where(inside, x, reduced)
    if reduced.ndim == 0:
        return float(reduced)
    return reduced


def wrap_difference(d):
    """Signed arc difference reduced into (-pi, pi]."""
    return wrap_angle(d)


def wrap_distance(x, y):
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidArgumentError(f"wrap_distance needs finite angles, got {x!r} and {y!r}")
    return np.abs(wrap_difference(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))


def as_seed_sequence(seed):
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _readonly(array):
    array = np.array(array, dtype=float)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class NodeSet:
    """Ordered nodes on the circle with an optional cluster partition.

    Indices in ``partition`` are 0-based. ``offsets`` holds, for every node, its
    distance along the arc from the first node of its cluster. Offsets are kept
    exactly, so clusters narrower than the floating-point spacing around their
    centre are still described faithfully.
    """

    angles: np.ndarray
    partition: Optional[Tuple[Tuple[int, ...], ...]] = None
    offsets: Optional[np.ndarray] = None

    def __post_init__(self):
        angles = np.atleast_1d(np.asarray(self.angles, dtype=float))
        if angles.ndim != 1 or angles.size == 0:
            raise InvalidArgumentError("a node set needs a non-empty one-dimensional list of angles")
        if not np.all(np.isfinite(angles)):
            raise InvalidArgumentError("node angles must be finite")
        object.__setattr__(self, "angles", _readonly(np.atleast_1d(wrap_angle(angles))))

        size = angles.size
        if self.partition is not None:
            partition = tuple(tuple(int(i) for i in block) for block in self.partition)
            seen = [i for block in partition for i in block]
            if any(len(block) == 0 for block in partition):
                raise InvalidArgumentError("partition blocks must be non-empty")
            if sorted(seen) != list(range(size)):
                raise InvalidArgumentError("partition blocks must be disjoint and cover every node")
            object.__setattr__(self, "partition", partition)

        if self.offsets is not None:
            if self.partition is None:
                raise InvalidArgumentError("offsets are only meaningful together with a partition")
            offsets = np.atleast_1d(np.asarray(self.offsets, dtype=float))
            if offsets.shape != (size,) or not np.all(np.isfinite(offsets)):
                raise InvalidArgumentError("offsets must be finite and match the number of nodes")
            for block in self.partition:
                if offsets[block[0]] != 0.0:
                    raise InvalidArgumentError("the first node of every cluster must have offset 0")
            object.__setattr__(self, "offsets", _readonly(offsets))

        if size > 1:
            distances = np.abs(self.differences())[np.triu_indices(size, 1)]
            if distances.min() <= 0.0:
                raise InvalidArgumentError("node angles must be pairwise distinct")

    @property
    def size(self):
        return int(self.angles.size)

    @property
    def blocks(self):
        if self.partition is None:
            return (tuple(range(self.size)),)
        return self.partition

    @property
    def num_clusters(self):
        return len(self.blocks)

    @property
    def multiplicities(self):
        return tuple(len(block) for block in self.blocks)

    def cluster_labels(self):
        labels = np.empty(self.size, dtype=int)
        for j, block in enumerate(self.blocks):
            labels[list(block)] = j
        return labels

    def anchor(self, j):
        return float(self.angles[self.blocks[j][0]])

    def local_offsets(self, j):
        block = list(self.blocks[j])
        if self.offsets is not None:
            return np.array(self.offsets[block])
        return np.atleast_1d(wrap_difference(self.angles[block] - self.angles[block[0]]))

    def node_offsets(self):
        """Per-node offset from the anchor of the node's own cluster."""
        result = np.empty(self.size)
        for j, block in enumerate(self.blocks):
            result[list(block)] = self.local_offsets(j)
        return result

    def node_anchors(self):
        result = np.empty(self.size)
        for j, block in enumerate(self.blocks):
            result[list(block)] = self.anchor(j)
        return result

    def cluster(self, j):
        block = list(self.blocks[j])
        return NodeSet(self.angles[block], partition=(tuple(range(len(block))),),
                       offsets=self.local_offsets(j))

    def differences(self):
        """Signed pairwise differences x_i - x_j, exact inside a cluster."""
        diffs = np.atleast_2d(wrap_difference(self.angles[:, None] - self.angles[None, :]))
        if self.partition is not None:
            offsets = self.node_offsets()
            labels = self.cluster_labels()
            same = labels[:, None] == labels[None, :]
            diffs = np.where(same, offsets[:, None] - offsets[None, :], diffs)
        return diffs


@dataclass(frozen=True)
class ClusterSpec:
    center: float
    h: float
    s: int
    tau: Optional[float] = None
    layout: str = EQUISPACED

    def __post_init__(self):
        if int(self.s) != self.s or self.s < 1:
            raise InvalidArgumentError(f"cluster size s must be a positive integer, got {self.s}")
        if not (math.isfinite(self.center) and math.isfinite(self.h)) or self.h < 0:
            raise InvalidArgumentError(f"cluster center and h must be finite with h >= 0, got {self.center}, {self.h}")
        if self.s >= 2 and self.h == 0:
            raise DegenerateClusterError(f"a cluster with s = {self.s} nodes needs h > 0")
        if self.tau is not None and not 0 < self.tau <= 1:
            raise InvalidArgumentError(f"tau must lie in (0, 1], got {self.tau}")
        if self.layout not in LAYOUTS:
            raise InvalidArgumentError(f"unknown layout '{self.layout}', expected one of {LAYOUTS}")


@dataclass(frozen=True)
class ClusterConfig:
    clusters: Tuple[ClusterSpec, ...]
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "clusters", tuple(self.clusters))
        if not self.clusters:
            raise InvalidArgumentError("a cluster configuration needs at least one cluster")
        if not (math.isfinite(self.theta) and self.theta > 0):
            raise InvalidArgumentError(f"theta must be positive, got {self.theta}")

    @property
    def multiplicities(self):
        return tuple(c.s for c in self.clusters)

    @property
    def size(self):
        return sum(self.multiplicities)


@dataclass(frozen=True)
class ClusterStats:
    h: Tuple[float, ...]
    tau: Tuple[Optional[float], ...]
    theta: float
    eta: float


def generate_cluster(center, h, s, layout=EQUISPACED, rng_seed=None,
                     tau_min=DEFAULT_TAU_MIN, max_retries=DEFAULT_RETRIES):
    if int(s) != s or s < 1:
        raise InvalidArgumentError(f"cluster size s must be a positive integer, got {s}")
    if s >= 2 and h <= 0:
        raise DegenerateClusterError(f"a cluster with s = {s} nodes needs h > 0")
    if h >= PI:
        raise InvalidArgumentError(f"cluster diameter must stay below pi, got {h}")
    if layout not in LAYOUTS:
        raise InvalidArgumentError(f"unknown layout '{layout}', expected one of {LAYOUTS}")

    if s == 1:
        start, offsets = center, np.zeros(1)
    elif layout == EQUISPACED:
        start = center - h / 2
        offsets = h * np.arange(s) / (s - 1)
    else:
        if (s - 1) * tau_min > 1:
            raise InfeasibleLayoutError(f"{s} nodes cannot keep a minimal ratio {tau_min} inside one arc")
        rng = np.random.default_rng(rng_seed)
        for _ in range(max_retries):
            sample = np.sort(rng.uniform(-h / 2, h / 2, size=s))
            if np.diff(sample).min() >= tau_min * h:
                break
        else:
            raise InfeasibleLayoutError(
                f"no layout with minimal ratio {tau_min} found after {max_retries} attempts")
        start = center + sample[0]
        offsets = sample - sample[0]

    angles = wrap_angle(start + offsets)
    return NodeSet(angles, partition=(tuple(range(s)),), offsets=offsets)


def generate_multi_cluster(config: ClusterConfig, rng_seed=None, tau_min=DEFAULT_TAU_MIN):
    total_arc = sum(c.h for c in config.clusters) + len(config.clusters) * config.theta
    if total_arc > TWO_PI * (1 + 1e-12):
        raise InfeasibleLayoutError(
            f"clusters need an arc of {total_arc:.6g} which exceeds the circle")

    seeds = as_seed_sequence(rng_seed).spawn(len(config.clusters))
    angles, offsets, partition = [], [], []
    for spec, seed in zip(config.clusters, seeds):
        tau = spec.tau if spec.tau is not None else tau_min
        cluster = generate_cluster(spec.center, spec.h, spec.s, spec.layout, seed, tau)
        start = len(angles)
        partition.append(tuple(range(start, start + spec.s)))
        angles.extend(cluster.angles)
        offsets.extend(cluster.offsets)

    try:
        nodes = NodeSet(np.array(angles), partition=tuple(partition), offsets=np.array(offsets))
    except InvalidArgumentError as e:
        raise InfeasibleLayoutError(f"generated clusters overlap: {e}") from e

    stats = measure_stats(nodes)
    if stats.theta < config.theta * (1 - 1e-12):
        raise InfeasibleLayoutError(
            f"cluster centers give separation {stats.theta:.6g} below the requested theta {config.theta:.6g}")
    return nodes


def measure_stats(nodes: NodeSet) -> ClusterStats:
    if nodes.partition is None:
        raise InvalidArgumentError("measuring cluster statistics needs a partition")

    distances = np.abs(nodes.differences())
    h, tau = [], []
    for block in nodes.blocks:
        if len(block) < 2:
            h.append(0.0)
            tau.append(None)
            continue
        inner = distances[np.ix_(block, block)][np.triu_indices(len(block), 1)]
        h.append(float(inner.max()))
        tau.append(float(inner.min() / inner.max()))

    labels = nodes.cluster_labels()
    cross = labels[:, None] != labels[None, :]
    theta = float(distances[cross].min()) if cross.any() else math.inf
    if nodes.size > 1:
        eta = float(distances[np.triu_indices(nodes.size, 1)].min())
    else:
        eta = math.inf
    return ClusterStats(h=tuple(h), tau=tuple(tau), theta=theta, eta=eta)


def concatenate(node_sets: Sequence[NodeSet]) -> NodeSet:
    """Join single-cluster node sets into one partitioned set, clusters in the given order."""
    angles, offsets, partition = [], [], []
    for nodes in node_sets:
        for j in range(nodes.num_clusters):
            block = list(nodes.blocks[j])
            start = len(angles)
            partition.append(tuple(range(start, start + len(block))))
            angles.extend(nodes.angles[block])
            offsets.extend(nodes.local_offsets(j))
    return NodeSet(np.array(angles), partition=tuple(partition), offsets=np.array(offsets))
