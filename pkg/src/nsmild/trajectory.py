"""Time grids and velocity trajectories sampled on them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import SpectralVectorField


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing positive nodes ending at ``delta``.

    ``gamma`` records the grading used to build the nodes (1 for uniform).
    """

    nodes: np.ndarray
    gamma: float = 1.0

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float).ravel()
        if nodes.size == 0:
            raise ValueError("time grid needs at least one node")
        if not nodes[0] > 0:
            raise ValueError("time nodes must be positive")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("time nodes must be strictly increasing")
        if not self.gamma >= 1:
            raise ValueError(f"grading exponent must be >= 1, got {self.gamma}")
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def graded(cls, delta, count, gamma=1.0):
        """Nodes ``delta * (i/count)^gamma`` for ``i = 1..count``."""
        if not delta > 0:
            raise ValueError(f"delta must be positive, got {delta}")
        if count < 1:
            raise ValueError("need at least one node")
        i = np.arange(1, count + 1, dtype=float)
        nodes = delta * (i / count) ** gamma
        nodes[-1] = delta
        return cls(nodes, float(gamma))

    @property
    def delta(self):
        return float(self.nodes[-1])

    def __len__(self):
        return self.nodes.size

    def __eq__(self, other):
        if not isinstance(other, TimeGrid):
            return NotImplemented
        return self.gamma == other.gamma and np.array_equal(self.nodes, other.nodes)

    __hash__ = None

    def steps(self):
        """Cell lengths ``t_1 - 0, t_2 - t_1, ...``."""
        return np.diff(np.concatenate([[0.0], self.nodes]))

    def cell_edges(self, delta=None):
        """Edges of the dual cells: 0, midpoints between nodes, last node.

        With ``delta`` below the horizon the edges are clipped to ``delta``.
        """
        edges = np.concatenate([[0.0], 0.5 * (self.nodes[1:] + self.nodes[:-1]), [self.delta]])
        if delta is not None:
            edges = np.minimum(edges, delta)
        return edges


class Trajectory:
    """One velocity state per time node, stored as a stacked coefficient array.

    ``coeffs`` has shape ``(len(grid), ncomp, *domain.spectral_shape)``.
    """

    __slots__ = ("domain", "grid", "coeffs")

    def __init__(self, domain, grid, coeffs):
        coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
        if coeffs.shape[0] != len(grid):
            raise ValueError(
                f"{coeffs.shape[0]} states for a grid of {len(grid)} nodes"
            )
        if coeffs.shape[2:] != domain.spectral_shape:
            raise ValueError("state shape does not match domain")
        coeffs.flags.writeable = False
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("Trajectory is immutable")

    @classmethod
    def from_states(cls, grid, states):
        states = list(states)
        if not states:
            raise ValueError("empty trajectory")
        dom = states[0].domain
        if any(s.domain != dom for s in states):
            raise ValueError("states live on different domains")
        return cls(dom, grid, np.stack([s.coeffs for s in states]))

    @classmethod
    def zeros_like(cls, other):
        return cls(other.domain, other.grid, np.zeros_like(other.coeffs))

    @property
    def times(self):
        return self.grid.nodes

    @property
    def ncomp(self):
        return self.coeffs.shape[1]

    def __len__(self):
        return self.coeffs.shape[0]

    def state(self, i):
        return SpectralVectorField(self.domain, self.coeffs[i])

    def states(self):
        return [self.state(i) for i in range(len(self))]

    def with_coeffs(self, coeffs):
        return Trajectory(self.domain, self.grid, coeffs)

    def _check(self, other):
        if not isinstance(other, Trajectory):
            raise TypeError("expected a Trajectory")
        if other.domain != self.domain or other.grid != self.grid:
            raise ValueError("trajectories differ in domain or time grid")

    def __add__(self, other):
        self._check(other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def l2_norms(self):
        """Spectral L^2 norm of each state."""
        w = self.domain.mode_multiplicity
        c = self.coeffs
        e = (c.real**2 + c.imag**2).sum(axis=1) * w
        s = e.reshape(len(self), -1).sum(axis=1)
        return np.sqrt(s * self.domain.volume)

    def max_divergence_ratio(self):
        return max(s.divergence_ratio() for s in self.states())

    def __repr__(self):
        return (
            f"Trajectory(nodes={len(self)}, delta={self.grid.delta:g}, "
            f"domain={self.domain})"
        )
