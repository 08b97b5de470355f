"""Quantum graph neural network for track segment classification.

Tree Tensor Network circuits, simulated on a dense statevector, act as the
edge and node networks of an iterative graph network that scores candidate
hit-to-hit segments in cylindrical detector sectors.
"""

__version__ = "0.1.0"
