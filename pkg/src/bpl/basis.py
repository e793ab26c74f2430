"""Distribution-adapted site basis, degree truncation, and spectral certificates.

For a site distribution with mean Bloch vector of length mu, the adapted
basis is {I, X~, Y~, Z~}: the rotated X and Y, plus the rotated Z recentered
and rescaled so that its expectation under the distribution vanishes,

    Z~ = (U^dag Z U - mu I) / sqrt(1 - mu^2).

The basis is not trace-orthogonal (I and Z~ overlap), so expansion cannot
project term by term; instead each site carries the dual frame of its four
basis matrices and coefficients come from contracting with the duals, which
is exact for any invertible site basis. Truncating a word tensor by degree
(number of non-identity letters) and measuring the residual variance under
the product distribution is what the certificates in this module bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .bloch import SIGMA, BlochDistribution, Rotation, spectral_norm
from .qsim import check_observable
from .util import as_rng

ENUMERATION_GUARD = 10 ** 7


class DegenerateDistributionError(ValueError):
    """Raised when |mean| = 1, where the recentered Z direction is undefined."""


class SiteBasis:
    """The {I, X~, Y~, Z~} basis adapted to one site distribution.

    Attributes
    ----------
    rotation : Rotation
        Takes the distribution mean onto the +z axis.
    mu : float
        Length of the mean Bloch vector, in [0, 1).
    ops : ndarray, shape (4, 2, 2)
        The four basis matrices, identity first.
    """

    def __init__(self, rotation: Rotation, mu: float):
        if not 0.0 <= mu < 1.0 - 1e-12:
            raise DegenerateDistributionError(
                f"site mean length {mu} leaves no room to normalize the z direction"
            )
        self.rotation = rotation
        self.mu = float(mu)
        u = rotation.u
        scale = sqrt(1.0 - self.mu ** 2)
        ud = u.conj().T
        z_rot = ud @ SIGMA[3] @ u
        self.ops = np.stack(
            [
                SIGMA[0],
                ud @ SIGMA[1] @ u,
                ud @ SIGMA[2] @ u,
                (z_rot - self.mu * SIGMA[0]) / scale,
            ]
        )
        self.scale = scale
        # Dual frame: contracting an operator entrywise with these extracts
        # coefficients. gram[p, q] = tr(ops_p ops_q) (all ops Hermitian).
        gram = np.einsum("pij,qji->pq", self.ops, self.ops).real
        self.duals = np.einsum("pq,qij->pij", np.linalg.inv(gram), self.ops.conj())

    @staticmethod
    def from_distribution(dist: BlochDistribution) -> "SiteBasis":
        rotation = dist.diagonalizing_rotation()
        return SiteBasis(rotation, float(np.linalg.norm(dist.mean())))

    @staticmethod
    def standard() -> "SiteBasis":
        """The plain Pauli basis (zero mean, identity rotation)."""
        return SiteBasis(Rotation.identity(), 0.0)

    def site_values(self, alphas) -> np.ndarray:
        """Expectations of (X~, Y~, Z~) on states with Bloch vectors ``alphas``.

        Accepts (..., 3) arrays in the standard frame and returns the same
        shape: the rotated coordinates with the z component recentered.
        """
        rotated = self.rotation.apply(alphas)
        out = np.array(rotated, dtype=float, copy=True)
        out[..., 2] = (rotated[..., 2] - self.mu) / self.scale
        return out

    def value_table(self, atoms) -> np.ndarray:
        """(k, 4) table of basis-function values at atoms, identity column first."""
        vals = self.site_values(atoms)
        return np.column_stack([np.ones(len(vals)), vals])


def build_site_basis(dist: BlochDistribution) -> SiteBasis:
    """Adapted basis for one site distribution; standard Paulis when mean is zero."""
    if spectral_norm(dist.second_moment()) >= 1.0 - 1e-12:
        raise DegenerateDistributionError(
            "distribution is (numerically) a two-point distribution; "
            "its second moment has unit spectral norm"
        )
    return SiteBasis.from_distribution(dist)


def _as_bases(bases, n: int | None) -> list:
    if isinstance(bases, SiteBasis):
        if n is None:
            raise ValueError("pass n when using one basis for every site")
        return [bases] * n
    bases = list(bases)
    if n is not None and len(bases) != n:
        raise ValueError("number of site bases does not match qubit count")
    return bases


class BasisExpansion:
    """Coefficients of an observable over words in per-site {I, X~, Y~, Z~} bases.

    ``coeffs`` is a dense real tensor of shape (4,) * n; letter 0 is the
    identity, and the degree of a word is its count of non-identity letters.
    """

    def __init__(self, bases, coeffs: np.ndarray):
        self.bases = list(bases)
        self.coeffs = np.asarray(coeffs, dtype=float)
        n = len(self.bases)
        if self.coeffs.shape != (4,) * n:
            raise ValueError("coefficient tensor shape must be (4,) * n")

    @property
    def n(self) -> int:
        return len(self.bases)

    def degree_tensor(self) -> np.ndarray:
        """Integer tensor holding each word's degree."""
        n = self.n
        deg = np.zeros((4,) * n, dtype=int)
        for axis in range(n):
            shape = [1] * n
            shape[axis] = 4
            deg = deg + (np.arange(4) != 0).astype(int).reshape(shape)
        return deg

    def truncated(self, degree: int, keep: str = "low") -> "BasisExpansion":
        """Copy with only words of degree <= d (``keep='low'``) or > d kept."""
        deg = self.degree_tensor()
        mask = deg <= degree if keep == "low" else deg > degree
        return BasisExpansion(self.bases, np.where(mask, self.coeffs, 0.0))

    def to_operator(self) -> np.ndarray:
        """Dense matrix sum_W coeff(W) * (op_W1 x ... x op_Wn)."""
        n = self.n
        t = self.coeffs.astype(complex)
        # Contract each word axis with that site's (4, 2, 2) operator stack; the
        # site's (row, col) axes are appended, giving (r1, c1, ..., rn, cn).
        for i in range(n):
            t = np.tensordot(t, self.bases[i].ops, axes=([0], [0]))
        order = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
        return t.transpose(order).reshape(2 ** n, 2 ** n)

    def items(self, tol: float = 0.0):
        """Yield (word, coefficient) for entries with |coefficient| > tol."""
        for word in np.ndindex(self.coeffs.shape):
            c = self.coeffs[word]
            if abs(c) > tol:
                yield word, float(c)

    def coefficient_block(self, sites) -> np.ndarray:
        """Vector of the 3^|S| coefficients with non-identity letters exactly on ``sites``."""
        index = []
        for i in range(self.n):
            index.append(slice(1, 4) if i in set(sites) else 0)
        block = self.coeffs[tuple(index)]
        return np.asarray(block, dtype=float).reshape(-1)


def expand(observable, bases, n: int | None = None) -> BasisExpansion:
    """Expand a Hermitian observable over per-site adapted bases.

    Coefficients come from contracting with the tensor product of per-site
    dual frames, which is exact for any invertible site basis; they are real
    for Hermitian input and reconstruct the observable via ``to_operator``.
    """
    o = check_observable(observable)
    dim = o.shape[0]
    nq = int(np.log2(dim))
    if 2 ** nq != dim:
        raise ValueError("observable dimension must be a power of 2")
    bases = _as_bases(bases, n if n is not None else nq)
    if len(bases) != nq:
        raise ValueError("observable dimension does not match number of site bases")
    t = o.reshape((2,) * (2 * nq))
    # Pair up (r_i, c_i) axes, then contract each with the site dual tensor.
    order = [axis for i in range(nq) for axis in (i, nq + i)]
    t = t.transpose(order)
    for i in range(nq):
        # leading axes (r_i, c_i); dual[p, r, c] contracts as sum dual[p,r,c] O[r,c,...]
        t = np.tensordot(bases[i].duals, t, axes=([1, 2], [0, 1]))
        t = np.moveaxis(t, 0, t.ndim - 1)
    coeffs = t
    max_imag = np.max(np.abs(coeffs.imag))
    if max_imag > 1e-8:
        raise ValueError(f"expansion produced non-real coefficients (max imag {max_imag:.2e})")
    return BasisExpansion(bases, coeffs.real)


def truncate(expansion: BasisExpansion, degree: int):
    """Degree-d truncation: (dense operator, retained expansion)."""
    if not 0 <= degree <= expansion.n:
        raise ValueError("degree must lie in [0, n]")
    low = expansion.truncated(degree, keep="low")
    return low.to_operator(), low


def truncation_error_exact(
    observable,
    degree: int,
    dist: BlochDistribution,
    bases=None,
    mc_samples: int | None = None,
    rng=None,
):
    """Mean squared residual of the degree-d truncation under the product distribution.

    Enumerates all k^n atom tuples exactly when k^n <= 10^7 (the sum is
    factorized over sites but is arithmetically the literal finite sum).
    Otherwise requires ``mc_samples`` and returns (estimate, standard_error).
    """
    o = check_observable(observable)
    n = int(np.log2(o.shape[0]))
    if bases is None:
        bases = build_site_basis(dist)
    bases = _as_bases(bases, n)
    expansion = expand(o, bases)
    high = expansion.truncated(degree, keep="high")
    k = len(dist)
    tables = [b.value_table(dist.atoms) for b in bases]
    if k ** n <= ENUMERATION_GUARD and mc_samples is None:
        # Residual value on every atom tuple: contract each word axis with the
        # (k, 4) table, leaving a (k,) * n tensor of function values.
        t = high.coeffs
        for i in range(n):
            t = np.tensordot(t, tables[i], axes=([0], [1]))
        err = t ** 2
        for _ in range(n):
            err = np.tensordot(err, dist.weights, axes=([0], [0]))
        return float(err)
    if mc_samples is None:
        raise ValueError(
            f"enumeration over {k}^{n} atom tuples exceeds the guard; "
            "pass mc_samples for a Monte-Carlo estimate"
        )
    rng = as_rng(rng)
    idx = rng.choice(k, size=(mc_samples, n), p=dist.weights)
    values = np.empty(mc_samples)
    # Evaluate the residual word sum per sample chunk, site by site; chunking
    # keeps the (chunk, 4^(n-1)) intermediate bounded.
    chunk = max(1, ENUMERATION_GUARD // max(4 ** (n - 1), 1))
    for start in range(0, mc_samples, chunk):
        stop = min(start + chunk, mc_samples)
        t = np.broadcast_to(high.coeffs, (stop - start,) + high.coeffs.shape)
        for i in range(n):
            site_vals = tables[i][idx[start:stop, i]]  # (m, 4)
            t = np.einsum("mp...,mp->m...", t, site_vals)
        values[start:stop] = np.asarray(t)
    sq = values ** 2
    est = float(sq.mean())
    stderr = float(sq.std(ddof=1) / np.sqrt(mc_samples))
    return est, stderr


# ---------------------------------------------------------------------------
# Moment matrices and spectral certificates
# ---------------------------------------------------------------------------

def mean_state_gram(mu: float) -> np.ndarray:
    """3x3 Hermitian matrix of tr(P Q rho_mean) over non-identity basis pairs.

    In the frame where the mean state is (I + mu Z) / 2 the matrix is
    [[1, i mu, 0], [-i mu, 1, 0], [0, 0, 1]].
    """
    if not abs(mu) < 1.0:
        raise ValueError("|mu| must be < 1")
    return np.array(
        [[1.0, 1j * mu, 0.0], [-1j * mu, 1.0, 0.0], [0.0, 0.0, 1.0]], dtype=complex
    )


def basis_second_moment(dist: BlochDistribution, basis: SiteBasis | None = None) -> np.ndarray:
    """3x3 second-moment matrix of the non-identity basis expectations under ``dist``."""
    if basis is None:
        basis = build_site_basis(dist)
    vals = basis.site_values(dist.atoms)
    return (vals.T * dist.weights) @ vals


def eta_prime(eta: float) -> float:
    """Effective per-degree decay rate implied by a spectral gap ``eta``.

    Strictly positive for eta in (0, 1]; the truncation error at degree d is
    bounded by (1 - eta_prime(eta)) ** d.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must lie in (0, 1]")
    branch = eta * (1.0 - sqrt(1.0 - eta / 2.0)) / (1.0 - eta / 2.0)
    return min(branch, eta / 2.0)


@dataclass(frozen=True)
class MinEigenvalueCheck:
    mu: float
    k: int
    lambda_min: float
    bound: float
    passed: bool


def verify_min_eigenvalue(mu: float, k: int) -> MinEigenvalueCheck:
    """Check the tensor-power eigenvalue floor for the 2x2 mean-state block.

    Builds [[1, i mu], [-i mu, 1]], forms the real part of its k-th tensor
    power, and compares the smallest eigenvalue against (1 - mu^2)^(k/2).
    """
    if not abs(mu) < 1.0:
        raise ValueError("|mu| must be < 1")
    if not 1 <= k <= 10:
        raise ValueError("k must lie in [1, 10] (matrix side 2^k)")
    block = np.array([[1.0, 1j * mu], [-1j * mu, 1.0]])
    power = block
    for _ in range(k - 1):
        power = np.kron(power, block)
    lam = float(np.min(np.linalg.eigvalsh(power.real)))
    bound = (1.0 - mu ** 2) ** (k / 2.0)
    return MinEigenvalueCheck(mu, k, lam, bound, lam >= bound - 1e-10)


@dataclass(frozen=True)
class SpectralCertificate:
    eta: float
    eta_prime: float
    norm_delta_sigma_delta: float
    passed: bool


def verify_scaled_covariance(dist: BlochDistribution, eta: float) -> SpectralCertificate:
    """Certify the scaled-covariance norm bound for a distribution with gap ``eta``.

    The distribution is rotated internally so its mean lies on the +z axis;
    with s = 1 - mu^2 the scaling is diag(s^-1/4, s^-1/4, s^-1/2). Requires
    the promised bound |second moment| <= 1 - eta to actually hold.
    """
    s_norm = spectral_norm(dist.second_moment())
    if s_norm > 1.0 - eta + 1e-10:
        raise ValueError(
            f"second moment norm {s_norm:.6g} exceeds the promised bound {1 - eta:.6g}"
        )
    canon = dist.canonical()
    mu = float(np.linalg.norm(canon.mean()))
    if mu >= 1.0 - 1e-12:
        raise DegenerateDistributionError("mean length 1: scaling diverges")
    s = 1.0 - mu ** 2
    delta = np.diag([s ** -0.25, s ** -0.25, s ** -0.5])
    scaled = delta @ canon.covariance() @ delta
    norm = spectral_norm(scaled)
    ep = eta_prime(eta)
    return SpectralCertificate(eta, ep, norm, norm <= 1.0 - ep + 1e-10)
