"""Finite distributions of single-qubit states on the Bloch ball.

A single-qubit state is identified with its Bloch vector (x, y, z) of norm
at most 1; pure states sit on the unit sphere. A distribution here is a
finite weighted atom set. Everything downstream is driven by its first two
moments: the 3x3 second-moment matrix decides how far the distribution is
from a classical (two-point) one, and the diagonalizing rotation moves the
mean onto the +z axis, where the site basis used for truncation takes its
simplest form.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .util import as_rng

ATOM_NORM_TOL = 1e-12
WEIGHT_SUM_TOL = 1e-12
ROTATION_TOL = 1e-10

# Single-qubit Pauli matrices, indexed I, X, Y, Z.
SIGMA = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

_AXES = {"x": np.array([1.0, 0, 0]), "y": np.array([0, 1.0, 0]), "z": np.array([0, 0, 1.0])}


def check_bloch_vectors(vectors) -> np.ndarray:
    """Validate an (..., 3) array of Bloch vectors (norm <= 1 + tol)."""
    arr = np.asarray(vectors, dtype=float)
    if arr.shape[-1] != 3:
        raise ValueError(f"Bloch vectors must have 3 components, got shape {arr.shape}")
    norms2 = np.sum(arr * arr, axis=-1)
    if np.any(norms2 > 1.0 + 1e-12 + 2e-12):  # slack for the squared check
        raise ValueError(f"Bloch vector norm exceeds 1: max |a|^2 = {norms2.max():.15g}")
    return arr


def _as_axis(axis) -> np.ndarray:
    if isinstance(axis, str):
        try:
            return _AXES[axis.lower()].copy()
        except KeyError:
            raise ValueError(f"unknown axis name {axis!r}, expected 'x', 'y' or 'z'") from None
    a = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(a)
    if a.shape != (3,) or norm == 0:
        raise ValueError("axis must be 'x'/'y'/'z' or a nonzero 3-vector")
    return a / norm


@dataclass(frozen=True)
class Rotation:
    """A single-qubit rotation: 2x2 unitary ``u`` plus its 3x3 Bloch action ``r``.

    ``r`` acts on Bloch vectors the way conjugation by ``u`` acts on states:
    if rho has Bloch vector a, then u rho u^dag has Bloch vector r a.
    """

    u: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex)
        r = np.asarray(self.r, dtype=float)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "r", r)
        if u.shape != (2, 2) or r.shape != (3, 3):
            raise ValueError("Rotation needs a 2x2 unitary and a 3x3 matrix")
        if np.max(np.abs(u.conj().T @ u - np.eye(2))) > ROTATION_TOL:
            raise ValueError("u is not unitary")
        if np.max(np.abs(r.T @ r - np.eye(3))) > ROTATION_TOL:
            raise ValueError("r is not orthogonal")
        if abs(np.linalg.det(r) - 1.0) > ROTATION_TOL:
            raise ValueError("r must be a proper rotation (det +1)")
        if np.max(np.abs(r - _bloch_action(u))) > ROTATION_TOL:
            raise ValueError("r does not match the Bloch action of u")

    @staticmethod
    def identity() -> "Rotation":
        return Rotation(np.eye(2, dtype=complex), np.eye(3))

    @staticmethod
    def from_unitary(u) -> "Rotation":
        """Build the rotation induced by conjugation with the unitary ``u``."""
        u = np.asarray(u, dtype=complex)
        return Rotation(u, _bloch_action(u))

    def apply(self, vectors) -> np.ndarray:
        """Rotate one Bloch vector or an (..., 3) stack of them."""
        return np.asarray(vectors, dtype=float) @ self.r.T

    @property
    def is_identity(self) -> bool:
        return bool(np.max(np.abs(self.r - np.eye(3))) < 1e-14)


def _bloch_action(u: np.ndarray) -> np.ndarray:
    """3x3 matrix r with r[q, p] = tr(sigma_q u sigma_p u^dag) / 2."""
    r = np.empty((3, 3))
    for p in range(3):
        conj = u @ SIGMA[p + 1] @ u.conj().T
        for q in range(3):
            r[q, p] = np.trace(SIGMA[q + 1] @ conj).real / 2.0
    return r


class BlochDistribution:
    """A finite weighted set of Bloch vectors.

    Parameters
    ----------
    atoms : array-like, shape (k, 3)
        Bloch vectors, each of norm <= 1.
    weights : array-like, shape (k,)
        Nonnegative weights summing to 1.
    """

    def __init__(self, atoms, weights):
        atoms = check_bloch_vectors(np.atleast_2d(np.asarray(atoms, dtype=float)))
        weights = np.asarray(weights, dtype=float)
        if atoms.ndim != 2:
            raise ValueError("atoms must be a (k, 3) array")
        if weights.shape != (atoms.shape[0],) or atoms.shape[0] < 1:
            raise ValueError("atoms and weights must have equal length >= 1")
        if np.any(weights < -WEIGHT_SUM_TOL):
            raise ValueError("weights must be nonnegative")
        if abs(weights.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1 (got {weights.sum():.15g})")
        self.atoms = atoms.copy()
        self.weights = np.clip(weights, 0.0, None)
        self.atoms.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self) -> int:
        return self.atoms.shape[0]

    def __repr__(self) -> str:
        return f"BlochDistribution({len(self)} atoms, mean={np.round(self.mean(), 6)})"

    def mean(self) -> np.ndarray:
        """Weighted average Bloch vector."""
        return self.weights @ self.atoms

    def second_moment(self) -> np.ndarray:
        """3x3 matrix of mixed second moments sum_i w_i a_i a_i^T (symmetric PSD)."""
        return (self.atoms.T * self.weights) @ self.atoms

    def covariance(self) -> np.ndarray:
        """Second moment minus the outer product of the mean (symmetric PSD)."""
        mu = self.mean()
        return self.second_moment() - np.outer(mu, mu)

    def sample(self, rng=None, size: int | None = None) -> np.ndarray:
        """Draw atoms i.i.d. by weight; a (3,) vector, or (size, 3) if size given."""
        rng = as_rng(rng)
        idx = rng.choice(len(self), size=size, p=self.weights)
        return self.atoms[idx]

    def rotated(self, rotation: Rotation) -> "BlochDistribution":
        """Apply a Bloch rotation to every atom; weights are unchanged."""
        return BlochDistribution(rotation.apply(self.atoms), self.weights)

    def diagonalizing_rotation(self) -> Rotation:
        """Rotation taking the mean Bloch vector to (0, 0, |mean|).

        The returned unitary maps the average state to a diagonal matrix with
        its larger eigenvalue on the |0><0| component. A zero mean (or a mean
        already on the +z axis) yields the identity.
        """
        return rotation_to_z_axis(self.mean())

    def canonical(self) -> "BlochDistribution":
        """The distribution rotated so its mean lies on the +z axis."""
        rot = self.diagonalizing_rotation()
        return self if rot.is_identity else self.rotated(rot)


def rotation_to_z_axis(mean_vector) -> Rotation:
    """Proper rotation mapping ``mean_vector`` onto the +z axis.

    Uses the half-turn about the bisector of the mean direction and +z, a
    symmetric involution, so the same matrix also maps +z back onto the mean
    direction. Degenerate means (zero, or already on +-z) get the natural
    special cases.
    """
    mu = np.asarray(mean_vector, dtype=float)
    norm = np.linalg.norm(mu)
    if norm < 1e-14:
        return Rotation.identity()
    direction = mu / norm
    if direction[2] > 1.0 - 1e-14:
        return Rotation.identity()
    if direction[2] < -1.0 + 1e-14:
        axis = np.array([1.0, 0.0, 0.0])  # half-turn about x flips z
    else:
        axis = direction + np.array([0.0, 0.0, 1.0])
        axis /= np.linalg.norm(axis)
    u = -1j * (axis[0] * SIGMA[1] + axis[1] * SIGMA[2] + axis[2] * SIGMA[3])
    r = 2.0 * np.outer(axis, axis) - np.eye(3)
    return Rotation(u, r)


def spectral_norm(matrix) -> float:
    """Largest absolute eigenvalue of a real symmetric matrix."""
    m = np.asarray(matrix, dtype=float)
    if m.shape[0] != m.shape[1] or np.max(np.abs(m - m.T)) > 1e-9:
        raise ValueError("expected a symmetric matrix")
    return float(np.max(np.abs(np.linalg.eigvalsh(m))))


# ---------------------------------------------------------------------------
# Named constructors
# ---------------------------------------------------------------------------

def two_point(axis="z", eta: float = 0.0) -> BlochDistribution:
    """Uniform distribution on the antipodal pair +-(1 - eta) * axis."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    a = (1.0 - eta) * _as_axis(axis)
    return BlochDistribution([a, -a], [0.5, 0.5])


def bernoulli_axis(axis="z", p: float = 0.5, radius: float = 1.0) -> BlochDistribution:
    """Atom +radius*axis with probability p, -radius*axis otherwise."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if not 0.0 <= radius <= 1.0:
        raise ValueError("radius must lie in [0, 1]")
    a = radius * _as_axis(axis)
    return BlochDistribution([a, -a], [p, 1.0 - p])


def uniform_sphere(num_atoms: int = 512) -> BlochDistribution:
    """Fibonacci-lattice discretization of the uniform sphere distribution."""
    if num_atoms < 1:
        raise ValueError("num_atoms must be positive")
    i = np.arange(num_atoms)
    z = 1.0 - 2.0 * (i + 0.5) / num_atoms
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    atoms = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    return BlochDistribution(atoms, np.full(num_atoms, 1.0 / num_atoms))


def pauli_eigenstates() -> BlochDistribution:
    """Uniform distribution over the six single-qubit Pauli eigenstates."""
    atoms = np.vstack([np.eye(3), -np.eye(3)])
    return BlochDistribution(atoms, np.full(6, 1.0 / 6.0))


def random_distribution(
    rng=None,
    num_atoms: int | None = None,
    max_second_moment_norm: float | None = None,
    max_radius: float = 0.98,
) -> BlochDistribution:
    """Random atom distribution, optionally shrunk to a second-moment norm bound.

    Atoms are drawn uniformly in direction with radii up to ``max_radius``
    and weighted by a Dirichlet draw. Scaling every atom by g scales the
    second moment by g^2, so a norm bound is enforced exactly by shrinking.
    """
    rng = as_rng(rng)
    k = int(num_atoms) if num_atoms is not None else int(rng.integers(2, 9))
    directions = rng.normal(size=(k, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    atoms = directions * (max_radius * rng.uniform(0.1, 1.0, size=(k, 1)))
    weights = rng.dirichlet(np.ones(k))
    dist = BlochDistribution(atoms, weights)
    if max_second_moment_norm is not None:
        norm = spectral_norm(dist.second_moment())
        if norm > max_second_moment_norm:
            gain = math.sqrt(max_second_moment_norm / norm) * (1.0 - 1e-12)
            dist = BlochDistribution(atoms * gain, weights)
    return dist


# ---------------------------------------------------------------------------
# JSON schema
# ---------------------------------------------------------------------------
#
# {"type": "atoms", "atoms": [[x, y, z], ...], "weights": [...]}
# {"type": "two_point", "axis": "z" | [x, y, z], "eta": 0.2}
# {"type": "bernoulli_axis", "axis": ..., "p": 0.5, "radius": 0.8}
# {"type": "uniform_sphere", "num_atoms": 512}
# {"type": "pauli_eigenstates"}

def distribution_to_json(dist: BlochDistribution) -> dict:
    return {
        "type": "atoms",
        "atoms": dist.atoms.tolist(),
        "weights": dist.weights.tolist(),
    }


def distribution_from_json(spec) -> BlochDistribution:
    if isinstance(spec, str):
        spec = json.loads(spec)
    if not isinstance(spec, dict) or "type" not in spec:
        raise ValueError("distribution spec must be an object with a 'type' field")
    kind = spec["type"]
    known = {
        "atoms": {"atoms", "weights"},
        "two_point": {"axis", "eta"},
        "bernoulli_axis": {"axis", "p", "radius"},
        "uniform_sphere": {"num_atoms"},
        "pauli_eigenstates": set(),
    }
    if kind not in known:
        raise ValueError(f"unknown distribution type {kind!r}")
    extra = set(spec) - known[kind] - {"type"}
    if extra:
        raise ValueError(f"unknown fields for distribution type {kind!r}: {sorted(extra)}")
    if kind == "atoms":
        return BlochDistribution(spec["atoms"], spec["weights"])
    if kind == "two_point":
        return two_point(spec.get("axis", "z"), float(spec.get("eta", 0.0)))
    if kind == "bernoulli_axis":
        return bernoulli_axis(
            spec.get("axis", "z"), float(spec.get("p", 0.5)), float(spec.get("radius", 1.0))
        )
    if kind == "uniform_sphere":
        return uniform_sphere(int(spec.get("num_atoms", 512)))
    return pauli_eigenstates()
