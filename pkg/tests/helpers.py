"""Shared test fixtures that are plain functions, not pytest fixtures."""

import numpy as np

from qgnn import hitdata
from qgnn.graph import build_event_graphs


def make_event(rows, particles=((1, 2.0, 0.5),)):
    """rows: (r, phi, z, layer, particle_id); particles: (id, pt, eta)."""
    rows = np.array(rows, dtype=float).reshape(-1, 5)
    r, phi = rows[:, 0], rows[:, 1]
    pid, pt, eta = (np.array(c) for c in zip(*particles)) if particles else ([], [], [])
    return hitdata.Event(
        event_id=0, hit_id=np.arange(1, len(rows) + 1), x=r * np.cos(phi), y=r * np.sin(phi),
        z=rows[:, 2], layer=rows[:, 3].astype(int), particle_id=rows[:, 4].astype(int),
        p_id=np.asarray(pid, dtype=int), p_pt=np.asarray(pt, dtype=float),
        p_eta=np.asarray(eta, dtype=float), p_vz=np.zeros(len(pid)),
        p_charge=np.ones(len(pid), dtype=int))


def build_toy_dataset(n_events, n_tracks, seed=0, pt_range=(1.0, 5.0)):
    graphs = []
    for event in hitdata.generate_events(n_events, n_tracks, pt_range, 0.0, seed=seed):
        graphs.extend(build_event_graphs(event)[0])
    return graphs
