"""Hit-graph construction: truth cuts, 8x2 sectoring, segment candidates, labels.

Candidate segments join hits on adjacent barrel layers and must pass a
phi-slope cut (|dphi / dr| in rad/mm) and a z-intercept cut on the line
through both hits. Node features are (r, phi, z) scaled into [0, 1].
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DimensionError, DomainError, ParseError

N_PHI_SECTORS = 8
N_Z_SECTORS = 2
PHI_SECTOR_WIDTH = 2.0 * np.pi / N_PHI_SECTORS
R_SCALE = 1100.0
Z_SCALE = 1100.0


@dataclass(frozen=True)
class SelectionCuts:
    pt_min: float = 1.0
    phi_slope_max: float = 0.0006
    z0_max: float = 100.0
    eta_min: float = -5.0
    eta_max: float = 5.0

    def __post_init__(self):
        if self.pt_min < 0 or self.phi_slope_max <= 0 or self.z0_max <= 0:
            raise ConfigurationError("pt_min must be >= 0; phi_slope_max and z0_max > 0")
        if not self.eta_min < self.eta_max:
            raise ConfigurationError("eta range must be well ordered")


@dataclass
class SubGraph:
    node_features: np.ndarray        # (N, 3): r', phi', z' in [0, 1]
    edges: np.ndarray                # (E, 2): (inner node, outer node)
    labels: np.ndarray | None = None  # (E,) of {0, 1}
    event_id: int = 0
    phi_sector: int = 0
    z_sector: int = 0
    hit_id: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.node_features = np.asarray(self.node_features, dtype=np.float64).reshape(-1, 3)
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        feats = self.node_features
        if feats.size and (feats.min() < 0.0 or feats.max() > 1.0):
            raise DomainError("node features must lie in [0, 1]")
        if self.edges.size:
            if self.edges.min() < 0 or self.edges.max() >= len(feats):
                raise DimensionError("edge references a node that does not exist")
            r = feats[:, 0]
            if np.any(r[self.edges[:, 0]] >= r[self.edges[:, 1]]):
                raise DomainError("edges must run from smaller to larger r")
            if len({tuple(e) for e in self.edges.tolist()}) != len(self.edges):
                raise DomainError("duplicate edges")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (len(self.edges),):
                raise DimensionError("labels must align with edges")
            if np.any((self.labels != 0) & (self.labels != 1)):
                raise DomainError("labels must be 0 or 1")

    @property
    def n_nodes(self) -> int:
        return len(self.node_features)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def name(self) -> str:
        return f"evt{self.event_id:06d}_p{self.phi_sector}_z{self.z_sector}"


@dataclass
class BuildStats:
    """Tallies from building one or more events."""
    n_edges: int = 0
    n_true_edges: int = 0
    n_truth_segments: int = 0
    n_cross_sector_segments: int = 0
    n_zero_dr: int = 0

    @property
    def efficiency(self) -> float:
        return self.n_true_edges / self.n_truth_segments if self.n_truth_segments else float("nan")

    @property
    def purity(self) -> float:
        return self.n_true_edges / self.n_edges if self.n_edges else float("nan")

    def __iadd__(self, other):
        for name in self.__dataclass_fields__:
            setattr(self, name, getattr(self, name) + getattr(other, name))
        return self


def wrap_phi(dphi):
    """Wrap angle differences into (-pi, pi]."""
    wrapped = np.mod(np.asarray(dphi, dtype=np.float64) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(wrapped == -np.pi, np.pi, wrapped)


def apply_truth_cuts(event, cuts=SelectionCuts()):
    """Drop noise hits and hits of particles failing the pt / eta cuts."""
    good = (event.p_pt >= cuts.pt_min) & (event.p_eta >= cuts.eta_min) & (event.p_eta <= cuts.eta_max)
    return event.select_hits(np.isin(event.particle_id, event.p_id[good]))


def sector_index(phi, z):
    """(phi_sector, z_sector) per hit; bins are half-open [low, high)."""
    phi = np.asarray(phi, dtype=np.float64)
    phi_sec = np.floor((phi + np.pi) / PHI_SECTOR_WIDTH).astype(np.int64)
    phi_sec = np.clip(phi_sec, 0, N_PHI_SECTORS - 1)
    z_sec = (np.asarray(z) >= 0).astype(np.int64)
    return phi_sec, z_sec


def sector_low(phi_sector):
    return -np.pi + phi_sector * PHI_SECTOR_WIDTH


def split_sectors(event):
    """Return {(phi_sector, z_sector): Event} for all 16 sectors."""
    phi_sec, z_sec = sector_index(event.phi, event.z)
    return {(p, zs): event.select_hits((phi_sec == p) & (z_sec == zs))
            for p in range(N_PHI_SECTORS) for zs in range(N_Z_SECTORS)}


def normalize_features(r, phi, z, phi_sector):
    feats = np.column_stack([
        np.asarray(r) / R_SCALE,
        (np.asarray(phi) - sector_low(phi_sector)) / PHI_SECTOR_WIDTH,
        (np.asarray(z) + Z_SCALE) / (2.0 * Z_SCALE),
    ])
    return np.clip(feats, 0.0, 1.0)


def segment_params(r_a, phi_a, z_a, r_b, phi_b, z_b):
    """(phi_slope, z0) of the segment a -> b; dr must be nonzero."""
    dr = r_b - r_a
    phi_slope = wrap_phi(phi_b - phi_a) / dr
    z0 = z_a - r_a * (z_b - z_a) / dr
    return phi_slope, z0


def build_edges(sector_event, cuts=SelectionCuts(), phi_sector=0, z_sector=0, stats=None):
    """Unlabelled SubGraph of adjacent-layer segments passing the cuts."""
    ev = sector_event
    r, phi, z, layer = ev.r, ev.phi, ev.z, ev.layer
    edges = []
    for lay in np.unique(layer):
        inner = np.nonzero(layer == lay)[0]
        outer = np.nonzero(layer == lay + 1)[0]
        if not len(inner) or not len(outer):
            continue
        a, b = np.meshgrid(inner, outer, indexing="ij")
        a, b = a.ravel(), b.ravel()
        dr = r[b] - r[a]
        zero = dr == 0
        if stats is not None:
            stats.n_zero_dr += int(zero.sum())
        a, b, dr = a[~zero], b[~zero], dr[~zero]
        slope, z0 = segment_params(r[a], phi[a], z[a], r[b], phi[b], z[b])
        keep = (np.abs(slope) < cuts.phi_slope_max) & (np.abs(z0) < cuts.z0_max)
        a, b = a[keep], b[keep]
        # orient inner -> outer by radius
        flip = r[a] > r[b]
        edges.append(np.column_stack([np.where(flip, b, a), np.where(flip, a, b)]))
    edges = np.concatenate(edges) if edges else np.zeros((0, 2), dtype=np.int64)
    feats = normalize_features(r, phi, z, phi_sector)
    return SubGraph(feats, edges, None, ev.event_id, phi_sector, z_sector, hit_id=ev.hit_id.copy())


def truth_segments(event):
    """Set of (hit_index_a, hit_index_b): consecutive hits of a particle by r."""
    segs = set()
    r = event.r
    for pid in np.unique(event.particle_id):
        if pid == 0:
            continue
        idx = np.nonzero(event.particle_id == pid)[0]
        idx = idx[np.argsort(r[idx], kind="stable")]
        segs.update(zip(idx[:-1].tolist(), idx[1:].tolist()))
    return segs


def label_edges(subgraph, sector_event):
    truth = truth_segments(sector_event)
    labels = np.array([1 if (a, b) in truth else 0 for a, b in subgraph.edges.tolist()],
                      dtype=np.int64)
    return SubGraph(subgraph.node_features, subgraph.edges, labels, subgraph.event_id,
                    subgraph.phi_sector, subgraph.z_sector, hit_id=subgraph.hit_id)


def build_event_graphs(event, cuts=SelectionCuts()):
    """Full preprocessing of one event into 16 labelled SubGraphs plus stats.

    Efficiency counts truth segments whose hits share a sector; segments that
    straddle a sector boundary are tallied separately.
    """
    stats = BuildStats()
    cut = apply_truth_cuts(event, cuts)
    phi_sec, z_sec = sector_index(cut.phi, cut.z)
    for a, b in truth_segments(cut):
        if phi_sec[a] != phi_sec[b] or z_sec[a] != z_sec[b]:
            stats.n_cross_sector_segments += 1
    graphs = []
    for (p, zs), sector_event in split_sectors(cut).items():
        g = label_edges(build_edges(sector_event, cuts, p, zs, stats), sector_event)
        stats.n_edges += g.n_edges
        stats.n_true_edges += int(g.labels.sum())
        stats.n_truth_segments += len(truth_segments(sector_event))
        graphs.append(g)
    return graphs, stats


def save_subgraph(subgraph, path):
    """Flat text format; floats are written with repr() so reloading is bit-exact.

    Layout::

        # qgnn-subgraph v1
        <N> <E> <event_id> <phi_sector> <z_sector>
        N lines: r' phi' z'
        E lines: inner outer label
    """
    labels = subgraph.labels if subgraph.labels is not None else np.full(subgraph.n_edges, -1)
    lines = ["# qgnn-subgraph v1",
             f"{subgraph.n_nodes} {subgraph.n_edges} {subgraph.event_id} "
             f"{subgraph.phi_sector} {subgraph.z_sector}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in subgraph.node_features]
    lines += [f"{a} {b} {lab}" for (a, b), lab in zip(subgraph.edges.tolist(), labels.tolist())]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_subgraph(path):
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != "# qgnn-subgraph v1":
        raise ParseError(f"{path}:1: not a qgnn-subgraph v1 file")
    try:
        n, e, event_id, p, zs = (int(v) for v in lines[1].split())
        nodes = [[float(v) for v in lines[2 + i].split()] for i in range(n)]
        edge_rows = [[int(v) for v in lines[2 + n + j].split()] for j in range(e)]
    except (ValueError, IndexError) as exc:
        raise ParseError(f"{path}: malformed subgraph file ({exc})") from None
    if any(len(row) != 3 for row in nodes) or any(len(row) != 3 for row in edge_rows):
        raise ParseError(f"{path}: node rows need 3 values and edge rows 3 values")
    edges = np.array([row[:2] for row in edge_rows], dtype=np.int64).reshape(-1, 2)
    labels = np.array([row[2] for row in edge_rows], dtype=np.int64)
    if e and np.all(labels == -1):
        labels = None
    return SubGraph(np.array(nodes).reshape(-1, 3), edges, labels, event_id, p, zs)


def subgraph_filename(subgraph):
    return f"{subgraph.name}.sg"


def load_subgraphs(directory):
    return [load_subgraph(p) for p in sorted(Path(directory).glob("*.sg"))]


def random_subgraph(n_nodes=10, n_edges=12, seed=0):
    """Random labelled toy graph with both classes, for gradient checks."""
    rng = np.random.default_rng(seed)
    feats = rng.uniform(0.05, 0.95, (n_nodes, 3))
    feats[:, 0] = np.sort(rng.choice(np.linspace(0.05, 0.95, 4 * n_nodes), n_nodes,
                                     replace=False))
    pairs = [(i, j) for i in range(n_nodes) for j in range(i + 1, n_nodes)]
    if n_edges > len(pairs):
        raise ConfigurationError(f"{n_nodes} nodes allow at most {len(pairs)} edges")
    pick = rng.choice(len(pairs), n_edges, replace=False)
    edges = np.array([pairs[k] for k in sorted(pick)], dtype=np.int64).reshape(-1, 2)
    labels = rng.integers(0, 2, n_edges)
    if n_edges >= 2:
        labels[0], labels[1] = 1, 0
    return SubGraph(feats, edges, labels, event_id=seed)
