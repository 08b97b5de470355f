"""Hit and particle files, plus a synthetic barrel-detector event generator.

File schema (CSV, header required)::

    hits:      hit_id,x,y,z,layer,particle_id
    particles: particle_id,pt,eta,vz,charge

Lengths are in mm, momenta in GeV. ``particle_id == 0`` marks noise.
Events are stored column-wise as numpy arrays.
"""

import csv
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ParseError

LAYER_RADII = (32.0, 72.0, 116.0, 172.0, 260.0, 360.0, 500.0, 660.0, 820.0, 1020.0)
BARREL_HALF_LENGTH = 1100.0
B_FIELD = 2.0
SMEAR_SIGMA = 0.1
ETA_MAX_GEN = 1.2
VZ_SIGMA = 30.0

HIT_COLUMNS = ("hit_id", "x", "y", "z", "layer", "particle_id")
PARTICLE_COLUMNS = ("particle_id", "pt", "eta", "vz", "charge")
_INT_COLUMNS = {"hit_id", "layer", "particle_id", "charge"}


def _empty(dtype):
    return np.zeros(0, dtype=dtype)


@dataclass
class Event:
    event_id: int
    hit_id: np.ndarray = field(default_factory=lambda: _empty(np.int64))
    x: np.ndarray = field(default_factory=lambda: _empty(np.float64))
    y: np.ndarray = field(default_factory=lambda: _empty(np.float64))
    z: np.ndarray = field(default_factory=lambda: _empty(np.float64))
    layer: np.ndarray = field(default_factory=lambda: _empty(np.int64))
    particle_id: np.ndarray = field(default_factory=lambda: _empty(np.int64))
    # particle table
    p_id: np.ndarray = field(default_factory=lambda: _empty(np.int64))
    p_pt: np.ndarray = field(default_factory=lambda: _empty(np.float64))
    p_eta: np.ndarray = field(default_factory=lambda: _empty(np.float64))
    p_vz: np.ndarray = field(default_factory=lambda: _empty(np.float64))
    p_charge: np.ndarray = field(default_factory=lambda: _empty(np.int64))

    @property
    def n_hits(self) -> int:
        return len(self.hit_id)

    @property
    def n_particles(self) -> int:
        return len(self.p_id)

    @property
    def r(self) -> np.ndarray:
        return np.hypot(self.x, self.y)

    @property
    def phi(self) -> np.ndarray:
        return np.arctan2(self.y, self.x)

    def select_hits(self, mask) -> "Event":
        """Copy of the event keeping only hits where ``mask`` is true."""
        mask = np.asarray(mask, dtype=bool)
        return replace(self, hit_id=self.hit_id[mask], x=self.x[mask], y=self.y[mask],
                       z=self.z[mask], layer=self.layer[mask],
                       particle_id=self.particle_id[mask])

    def validate(self):
        unknown = set(self.particle_id[self.particle_id != 0].tolist()) - set(self.p_id.tolist())
        if unknown:
            raise ConfigurationError(f"hits reference unknown particles {sorted(unknown)[:5]}")
        if len(np.unique(self.p_id)) != len(self.p_id):
            raise ConfigurationError("particle ids must be unique within an event")


def _read_table(path, columns):
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}:1: missing header row") from None
        header = [h.strip() for h in header]
        missing = [c for c in columns if c not in header]
        if missing:
            raise ParseError(f"{path}:1: missing column(s) {', '.join(missing)}")
        index = {c: header.index(c) for c in columns}
        data = {c: [] for c in columns}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            for c in columns:
                cell = row[index[c]].strip()
                try:
                    data[c].append(int(cell) if c in _INT_COLUMNS else float(cell))
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: non-numeric value {cell!r} "
                                     f"in column {c}") from None
    return {c: np.array(v, dtype=np.int64 if c in _INT_COLUMNS else np.float64)
            for c, v in data.items()}


def load_event(hits_path, particles_path, event_id=None) -> Event:
    hits = _read_table(hits_path, HIT_COLUMNS)
    parts = _read_table(particles_path, PARTICLE_COLUMNS)
    if event_id is None:
        event_id = _event_id_from_name(hits_path)
    known = set(parts["particle_id"].tolist())
    for row, pid in enumerate(hits["particle_id"].tolist()):
        if pid != 0 and pid not in known:
            raise ParseError(f"{hits_path}:{row + 2}: unknown particle_id {pid}")
    return Event(event_id=event_id, hit_id=hits["hit_id"], x=hits["x"], y=hits["y"],
                 z=hits["z"], layer=hits["layer"], particle_id=hits["particle_id"],
                 p_id=parts["particle_id"], p_pt=parts["pt"], p_eta=parts["eta"],
                 p_vz=parts["vz"], p_charge=parts["charge"])


def _event_id_from_name(path):
    digits = "".join(ch for ch in Path(path).name.split("-")[0] if ch.isdigit())
    return int(digits) if digits else 0


def event_paths(directory, event_id):
    stem = Path(directory) / f"event{event_id:09d}"
    return Path(f"{stem}-hits.csv"), Path(f"{stem}-particles.csv")


def _fmt(value):
    return repr(float(value))


def write_event(event: Event, hits_path, particles_path):
    with open(hits_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HIT_COLUMNS)
        for row in zip(event.hit_id, event.x, event.y, event.z, event.layer, event.particle_id):
            w.writerow((int(row[0]), _fmt(row[1]), _fmt(row[2]), _fmt(row[3]),
                        int(row[4]), int(row[5])))
    with open(particles_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PARTICLE_COLUMNS)
        for row in zip(event.p_id, event.p_pt, event.p_eta, event.p_vz, event.p_charge):
            w.writerow((int(row[0]), _fmt(row[1]), _fmt(row[2]), _fmt(row[3]), int(row[4])))
    return Path(hits_path), Path(particles_path)


def write_events(events, directory):
    os.makedirs(directory, exist_ok=True)
    written = []
    for event in events:
        written.extend(write_event(event, *event_paths(directory, event.event_id)))
    return written


def load_events(directory):
    """Load every ``event*-hits.csv`` / ``-particles.csv`` pair, sorted by name."""
    events = []
    for hits_path in sorted(Path(directory).glob("event*-hits.csv")):
        parts_path = hits_path.with_name(hits_path.name.replace("-hits.csv", "-particles.csv"))
        if not parts_path.exists():
            raise ParseError(f"{parts_path}: particle file missing for {hits_path.name}")
        events.append(load_event(hits_path, parts_path))
    return events


def helix_layer_crossings(pt, eta, phi0, vz, charge, radii=LAYER_RADII,
                          half_length=BARREL_HALF_LENGTH, b_field=B_FIELD):
    """Ideal (unsmeared) crossings of a helix from the beamline with each layer.

    The transverse circle passes through the origin with radius
    ``R = 1000 pt / (0.3 B)`` mm; a chord of length r subtends arc length
    ``s = 2R asin(r / 2R)`` and z grows as ``s * sinh(eta)``.
    Returns (layer indices, r, phi, z) for layers the track reaches inside
    the barrel.
    """
    radius = 1000.0 * pt / (0.3 * b_field)
    radii = np.asarray(radii, dtype=np.float64)
    reach = radii <= 2.0 * radius
    half_turn = np.arcsin(np.clip(radii / (2.0 * radius), 0.0, 1.0))
    s = 2.0 * radius * half_turn
    z = vz + s * math.sinh(eta)
    phi = phi0 - charge * half_turn
    phi = np.arctan2(np.sin(phi), np.cos(phi))
    keep = reach & (np.abs(z) <= half_length)
    # a track that leaves the barrel does not come back
    if not keep.all():
        first_miss = int(np.argmin(keep))
        keep[first_miss:] = False
    layers = np.nonzero(keep)[0]
    return layers, radii[layers], phi[layers], z[layers]


def generate_event(n_tracks, pt_range=(1.0, 5.0), noise_fraction=0.0, seed=0, event_id=0,
                   radii=LAYER_RADII, half_length=BARREL_HALF_LENGTH, eta_max=ETA_MAX_GEN,
                   fixed=None) -> Event:
    """Generate one synthetic barrel event.

    ``fixed`` optionally pins per-track kinematics (keys among pt, eta, phi0,
    vz, charge) for geometry checks; the smearing still uses ``seed``.
    """
    if n_tracks < 1:
        raise ConfigurationError("n_tracks must be at least 1")
    pt_lo, pt_hi = map(float, pt_range)
    if not pt_lo <= pt_hi:
        raise ConfigurationError(f"empty pt range {pt_range}")
    if pt_lo < 0.1:
        raise ConfigurationError("pt range must start at 0.1 GeV or above")
    if not 0.0 <= noise_fraction < 1.0:
        raise ConfigurationError("noise_fraction must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    fixed = fixed or {}

    pt = rng.uniform(pt_lo, pt_hi, n_tracks)
    phi0 = rng.uniform(-np.pi, np.pi, n_tracks)
    eta = rng.uniform(-eta_max, eta_max, n_tracks)
    vz = rng.normal(0.0, VZ_SIGMA, n_tracks)
    charge = rng.choice(np.array([-1, 1]), n_tracks)
    for key, value in fixed.items():
        arr = {"pt": pt, "phi0": phi0, "eta": eta, "vz": vz, "charge": charge}[key]
        arr[:] = value

    cols = {k: [] for k in ("x", "y", "z", "layer", "pid")}
    for t in range(n_tracks):
        layers, r, phi, z = helix_layer_crossings(pt[t], eta[t], phi0[t], vz[t], charge[t],
                                                  radii=radii, half_length=half_length)
        # smear along the layer surface so r stays on the layer
        phi = phi + rng.normal(0.0, SMEAR_SIGMA, len(r)) / r
        z = z + rng.normal(0.0, SMEAR_SIGMA, len(r))
        cols["x"].append(r * np.cos(phi))
        cols["y"].append(r * np.sin(phi))
        cols["z"].append(z)
        cols["layer"].append(layers)
        cols["pid"].append(np.full(len(r), t + 1))

    n_track_hits = sum(len(a) for a in cols["x"])
    n_noise = math.ceil(noise_fraction * n_track_hits)
    if n_noise:
        radii_arr = np.asarray(radii, dtype=np.float64)
        layer = rng.integers(0, len(radii_arr), n_noise)
        phi = rng.uniform(-np.pi, np.pi, n_noise)
        cols["x"].append(radii_arr[layer] * np.cos(phi))
        cols["y"].append(radii_arr[layer] * np.sin(phi))
        cols["z"].append(rng.uniform(-half_length, half_length, n_noise))
        cols["layer"].append(layer)
        cols["pid"].append(np.zeros(n_noise, dtype=np.int64))

    def cat(key, dtype):
        return np.concatenate(cols[key]).astype(dtype) if cols[key] else _empty(dtype)

    n_hits = n_track_hits + n_noise
    return Event(event_id=event_id, hit_id=np.arange(1, n_hits + 1, dtype=np.int64),
                 x=cat("x", np.float64), y=cat("y", np.float64), z=cat("z", np.float64),
                 layer=cat("layer", np.int64), particle_id=cat("pid", np.int64),
                 p_id=np.arange(1, n_tracks + 1, dtype=np.int64), p_pt=pt, p_eta=eta,
                 p_vz=vz, p_charge=charge.astype(np.int64))


def generate_events(n_events, n_tracks, pt_range=(1.0, 5.0), noise_fraction=0.0, seed=0):
    """Independent events; event i draws from ``SeedSequence(seed).spawn``."""
    seqs = np.random.SeedSequence(seed).spawn(n_events)
    return [generate_event(n_tracks, pt_range, noise_fraction, seed=s, event_id=i)
            for i, s in enumerate(seqs)]
