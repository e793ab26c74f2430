"""Biased Fourier analysis of multilinear functions over product distributions.

Covers the commutative warm-up to the channel learner: centered product
bases over an interval distribution, degree truncation with its variance
certificate, exact majority level coefficients, the truncation blow-up scan
in the unbiased monomial basis, and random linear-code distributions on
which fixed-degree learners break down.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb, sqrt

import numpy as np

from .util import as_rng

ENUMERATION_GUARD = 10 ** 7


class MultilinearFunction:
    """Sparse multilinear function sum_S c_S prod_{i in S} x_i.

    Coefficients are keyed by subsets of range(n) (any iterable of distinct
    indices; stored as frozensets).
    """

    def __init__(self, n: int, coeffs: dict):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = n
        self.coeffs = {}
        for subset, c in coeffs.items():
            key = frozenset(subset)
            if key and (min(key) < 0 or max(key) >= n):
                raise ValueError(f"subset {sorted(key)} out of range for n={n}")
            if len(key) != len(tuple(subset)) and not isinstance(subset, frozenset):
                raise ValueError(f"subset {subset} has repeated indices")
            c = float(c)
            if c != 0.0:
                self.coeffs[key] = self.coeffs.get(key, 0.0) + c

    def __repr__(self) -> str:
        return f"MultilinearFunction(n={self.n}, {len(self.coeffs)} terms, degree {self.degree})"

    @property
    def degree(self) -> int:
        return max((len(s) for s in self.coeffs), default=0)

    def evaluate(self, points) -> np.ndarray:
        """Evaluate at an (m, n) array of points; returns (m,)."""
        x = np.atleast_2d(np.asarray(points, dtype=float))
        if x.shape[1] != self.n:
            raise ValueError(f"points must have {self.n} columns")
        out = np.zeros(x.shape[0])
        for subset, c in self.coeffs.items():
            if subset:
                out += c * np.prod(x[:, sorted(subset)], axis=1)
            else:
                out += c
        return out

    def __call__(self, points) -> np.ndarray:
        return self.evaluate(points)

    def l1_norm(self) -> float:
        return float(sum(abs(c) for c in self.coeffs.values()))

    def sup_norm_bounded(self, tol: float = 1e-9, samples: int = 10 ** 5, rng=None) -> bool:
        """Check |f| <= 1 + tol on hypercube vertices.

        Exhaustive for n <= 20, otherwise sampled at random vertices. The
        maximum of a multilinear function over the solid cube is attained at
        a vertex, so this bounds the whole domain.
        """
        if self.n <= 20:
            vals = self._vertex_values()
            return bool(np.max(np.abs(vals)) <= 1.0 + tol)
        rng = as_rng(rng)
        x = rng.choice([-1.0, 1.0], size=(samples, self.n))
        return bool(np.max(np.abs(self.evaluate(x))) <= 1.0 + tol)

    def _vertex_values(self) -> np.ndarray:
        """Values on all 2^n hypercube vertices (n <= 20)."""
        if self.n > 20:
            raise ValueError("exhaustive vertex evaluation limited to n <= 20")
        out = np.zeros(2 ** self.n)
        cols = None
        for subset, c in self.coeffs.items():
            term = np.ones(2 ** self.n)
            for i in sorted(subset):
                if cols is None:
                    cols = {}
                if i not in cols:
                    v = np.arange(2 ** self.n)
                    cols[i] = 1.0 - 2.0 * ((v >> i) & 1)
                term = term * cols[i]
            out += c * term
        return out


class IntervalDistribution:
    """Finite weighted distribution of points in [-1, 1].

    If ``eta`` is given, all atoms must lie in [-(1 - eta), 1 - eta].
    """

    def __init__(self, atoms, weights, eta: float | None = None):
        self.atoms = np.asarray(atoms, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        if self.atoms.ndim != 1 or self.atoms.shape != self.weights.shape or len(self.atoms) < 1:
            raise ValueError("atoms and weights must be equal-length 1-d arrays")
        if np.any(np.abs(self.atoms) > 1.0 + 1e-12):
            raise ValueError("atoms must lie in [-1, 1]")
        if np.any(self.weights < -1e-12) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        self.weights = np.clip(self.weights, 0.0, None)
        if eta is not None:
            if not 0.0 < eta <= 1.0:
                raise ValueError("eta must lie in (0, 1]")
            if np.any(np.abs(self.atoms) > 1.0 - eta + 1e-12):
                raise ValueError(f"atoms exceed the declared bound 1 - eta = {1 - eta}")
        self.eta = eta

    def __len__(self) -> int:
        return len(self.atoms)

    def mean(self) -> float:
        return float(self.weights @ self.atoms)

    def variance(self) -> float:
        mu = self.mean()
        return float(self.weights @ (self.atoms - mu) ** 2)

    def sample(self, rng=None, size=None) -> np.ndarray:
        rng = as_rng(rng)
        return rng.choice(self.atoms, size=size, p=self.weights)

    @staticmethod
    def uniform_pair(radius: float, eta: float | None = None) -> "IntervalDistribution":
        return IntervalDistribution([radius, -radius], [0.5, 0.5], eta=eta)


def biased_char(subset, point, mu: float, scale: float) -> float:
    """Centered product character prod_{i in S} (x_i - mu) / scale at one point."""
    if scale == 0.0:
        raise ValueError("scale must be nonzero")
    x = np.asarray(point, dtype=float)
    out = 1.0
    for i in subset:
        out *= (x[i] - mu) / scale
    return float(out)


def expand_psi(f: MultilinearFunction, mu: float) -> dict:
    """Coefficients of ``f`` over the centered hypercube basis with mean ``mu``.

    Substitutes x_i = sqrt(1 - mu^2) y_i + mu per variable, where y_i is the
    centered coordinate (x_i - mu) / sqrt(1 - mu^2).
    """
    if not abs(mu) < 1.0:
        raise ValueError("|mu| must be < 1")
    s = sqrt(1.0 - mu * mu)
    out: dict = {}
    for subset, c in f.coeffs.items():
        elems = sorted(subset)
        k = len(elems)
        for r in range(k + 1):
            for kept in combinations(elems, r):
                key = frozenset(kept)
                out[key] = out.get(key, 0.0) + c * (s ** r) * (mu ** (k - r))
    return {k: v for k, v in out.items() if v != 0.0}


def psi_to_monomial(n: int, psi_coeffs: dict, mu: float) -> MultilinearFunction:
    """Inverse of ``expand_psi``: map centered-basis coefficients back to monomials."""
    s = sqrt(1.0 - mu * mu)
    out: dict = {}
    for subset, c in psi_coeffs.items():
        elems = sorted(subset)
        k = len(elems)
        # prod (x_i - mu) / s = sum over kept subsets of x^kept * (-mu)^(k - r) / s^k
        for r in range(k + 1):
            for kept in combinations(elems, r):
                key = frozenset(kept)
                out[key] = out.get(key, 0.0) + c * ((-mu) ** (k - r)) / (s ** k)
    return MultilinearFunction(n, out)


def truncate_classical(f: MultilinearFunction, degree: int, mu: float) -> MultilinearFunction:
    """Keep the centered-basis terms of degree <= d, mapped back to monomials."""
    psi = expand_psi(f, mu)
    kept = {k: v for k, v in psi.items() if len(k) <= degree}
    return psi_to_monomial(f.n, kept, mu)


def truncation_error_classical(
    f: MultilinearFunction,
    dist: IntervalDistribution,
    degree: int,
    mc_samples: int | None = None,
    rng=None,
):
    """Exact mean squared truncation residual under the product distribution.

    The centered basis is taken at the distribution mean. Enumerates the k^n
    atom grid when feasible, else falls back to Monte-Carlo and returns
    (estimate, standard_error).
    """
    n, k = f.n, len(dist)
    mu = dist.mean()
    psi = expand_psi(f, mu)
    high = {s: c for s, c in psi.items() if len(s) > degree}
    if not high:
        return 0.0 if mc_samples is None else (0.0, 0.0)
    s = sqrt(1.0 - mu * mu)
    centered = (dist.atoms - mu) / s  # value table of the non-constant factor
    if k ** n <= ENUMERATION_GUARD and mc_samples is None:
        # Dense (2,)^n coefficient tensor, then mode products with (k, 2) tables.
        t = np.zeros((2,) * n)
        for subset, c in high.items():
            t[tuple(1 if i in subset else 0 for i in range(n))] = c
        table = np.column_stack([np.ones(k), centered])
        for _ in range(n):
            t = np.tensordot(t, table, axes=([0], [1]))
        err = t ** 2
        for _ in range(n):
            err = np.tensordot(err, dist.weights, axes=([0], [0]))
        return float(err)
    if mc_samples is None:
        raise ValueError(
            f"enumeration over {k}^{n} atom tuples exceeds the guard; pass mc_samples"
        )
    rng = as_rng(rng)
    idx = rng.choice(k, size=(mc_samples, n), p=dist.weights)
    y = centered[idx]
    vals = np.zeros(mc_samples)
    for subset, c in high.items():
        vals += c * np.prod(y[:, sorted(subset)], axis=1)
    sq = vals ** 2
    return float(sq.mean()), float(sq.std(ddof=1) / np.sqrt(mc_samples))


# ---------------------------------------------------------------------------
# Majority and the unbiased-truncation blow-up
# ---------------------------------------------------------------------------

def majority_levels(n: int) -> list:
    """Common coefficient of each degree level of the multilinear majority.

    Exact integer level sums over Hamming weights, divided by 2^n (a dyadic
    rational, so the float is exact for n <= 31). Even levels are zero by
    symmetry; entry k is the coefficient shared by every size-k subset.
    """
    if n % 2 == 0 or n < 1:
        raise ValueError("n must be odd")
    if n > 31:
        raise ValueError("n must be <= 31")
    out = []
    for k in range(n + 1):
        if k % 2 == 0:
            out.append(0.0)
            continue
        total = 0
        for j in range(n + 1):
            sign = 1 if n - 2 * j > 0 else -1
            inner = 0
            for i in range(max(0, j - (n - k)), min(k, j) + 1):
                inner += (-1) ** i * comb(k, i) * comb(n - k, j - i)
            total += sign * inner
        out.append(total / 2.0 ** n)
    return out


def majority_multilinear(n: int) -> MultilinearFunction:
    """The multilinear extension of the n-input majority function."""
    levels = majority_levels(n)
    coeffs = {}
    for k in range(1, n + 1, 2):
        if levels[k] == 0.0:
            continue
        for subset in combinations(range(n), k):
            coeffs[frozenset(subset)] = levels[k]
    return MultilinearFunction(n, coeffs)


def truncation_blowup_scan(n: int, delta: float, a: float, b: float, grid: int = 1001):
    """Scan |f_trunc(t, ..., t)| for majority truncated at degree floor(delta n).

    Truncation is in the plain monomial basis. Returns (t_star, max_abs) over
    a uniform grid of ``grid`` points in [a, b].
    """
    if not 0.0 < a < b < 1.0:
        raise ValueError("need 0 < a < b < 1")
    d = int(np.floor(delta * n))
    if d < 1:
        raise ValueError("delta * n must be >= 1")
    levels = majority_levels(n)
    t = np.linspace(a, b, grid)
    g = np.zeros_like(t)
    for k in range(0, min(d, n) + 1):
        if levels[k]:
            g += comb(n, k) * levels[k] * t ** k
    i = int(np.argmax(np.abs(g)))
    return float(t[i]), float(np.abs(g[i]))


def chebyshev_floor(degree: int) -> float:
    """Lower bound 2^(1-d) on the sup norm of any monic degree-d polynomial on [-1, 1]."""
    return 2.0 ** (1 - degree)


# ---------------------------------------------------------------------------
# Random bounded targets and code distributions
# ---------------------------------------------------------------------------

def random_bounded_multilinear(
    n: int, degree: int, num_terms: int, rng=None
) -> MultilinearFunction:
    """Random sparse multilinear function normalized to sup norm <= 1.

    Coefficients are Gaussian on random subsets of size <= degree and scaled
    by their total absolute sum, which bounds the function on the cube.
    """
    rng = as_rng(rng)
    coeffs: dict = {}
    for _ in range(num_terms):
        size = int(rng.integers(0, degree + 1))
        subset = frozenset(rng.choice(n, size=size, replace=False).tolist())
        coeffs[subset] = coeffs.get(subset, 0.0) + float(rng.normal())
    total = sum(abs(c) for c in coeffs.values())
    if total == 0.0:
        coeffs = {frozenset(): 0.5}
        total = 0.5
    return MultilinearFunction(n, {s: c / total for s, c in coeffs.items()})


class CodeSearchError(RuntimeError):
    pass


@dataclass
class CodeDistribution:
    """Uniform distribution over a scaled binary code with arbitrary labels.

    ``codewords`` are +-1 rows; atoms are the codewords scaled by (1 - eta),
    so the support sits strictly inside the cube. ``labels`` give one +-1
    target value per codeword.
    """

    codewords: np.ndarray
    eta: float
    labels: np.ndarray

    def __post_init__(self):
        self.codewords = np.asarray(self.codewords, dtype=float)
        self.labels = np.asarray(self.labels, dtype=float)
        if set(np.unique(self.codewords)) - {-1.0, 1.0}:
            raise ValueError("codewords must be +-1 valued")
        if self.labels.shape != (self.codewords.shape[0],):
            raise ValueError("one label per codeword required")

    @property
    def n(self) -> int:
        return self.codewords.shape[1]

    @property
    def atoms(self) -> np.ndarray:
        return (1.0 - self.eta) * self.codewords

    @property
    def weights(self) -> np.ndarray:
        m = len(self.codewords)
        return np.full(m, 1.0 / m)

    def sample(self, rng=None, size: int = 1):
        """Draw (points, labels) pairs uniformly over the codewords."""
        rng = as_rng(rng)
        idx = rng.integers(0, len(self.codewords), size=size)
        return self.atoms[idx], self.labels[idx]


def min_distance(codewords) -> int:
    """Exhaustive minimum pairwise Hamming distance of +-1 rows."""
    c = np.asarray(codewords)
    m = len(c)
    best = c.shape[1]
    for i in range(m):
        diff = np.sum(c[i] != c[i + 1:], axis=1) if i + 1 < m else []
        if len(diff):
            best = min(best, int(np.min(diff)))
    return best


def build_code_distribution(
    n: int,
    eta: float = 0.1,
    rng=None,
    rate: float = 0.1,
    distance_fraction: float = 0.25,
    max_tries: int = 1000,
) -> CodeDistribution:
    """Random linear code scaled into the cube, with i.i.d. +-1 labels.

    Rejection-samples binary generator matrices of dimension ~ rate * n until
    the exhaustively verified minimum distance reaches distance_fraction * n.
    """
    if n > 30:
        raise ValueError("n must be <= 30 (codewords are enumerated)")
    rng = as_rng(rng)
    dim = max(1, round(rate * n))
    target = int(np.ceil(distance_fraction * n))
    messages = np.array([[(v >> i) & 1 for i in range(dim)] for v in range(2 ** dim)])
    for _ in range(max_tries):
        gen = rng.integers(0, 2, size=(dim, n))
        bits = messages @ gen % 2
        words = 1.0 - 2.0 * bits
        if len(np.unique(bits, axis=0)) < 2 ** dim:
            continue
        if min_distance(words) < target:
            continue
        labels = rng.choice([-1.0, 1.0], size=len(words))
        return CodeDistribution(words, eta, labels)
    raise CodeSearchError(
        f"no rate-{rate} code of distance >= {target} found in {max_tries} tries"
    )
