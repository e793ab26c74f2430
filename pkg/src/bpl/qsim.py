"""Dense n-qubit linear algebra: states, observables, channels, measurement.

Everything is an explicit complex matrix, which keeps every quantity exactly
computable at desk scale (n <= 10 by default). Product states are passed
around as (n, 3) arrays of single-site Bloch vectors, which is also the
classical description a learner receives.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .bloch import SIGMA, check_bloch_vectors
from .util import as_rng

# Dense-matrix size guard; raise it at your own memory's risk.
MAX_QUBITS = 10

PAULI_LETTERS = "IXYZ"
_LETTER_INDEX = {c: i for i, c in enumerate(PAULI_LETTERS)}


class DimensionMismatchError(ValueError):
    pass


def _check_qubit_count(n: int, max_qubits: int | None = None) -> None:
    bound = MAX_QUBITS if max_qubits is None else max_qubits
    if not 1 <= n <= bound:
        raise ValueError(f"qubit count {n} outside supported range [1, {bound}]")


def pauli_degree(word: str) -> int:
    """Number of non-identity letters in a Pauli word."""
    return sum(c != "I" for c in word)


def pauli_to_operator(word: str) -> np.ndarray:
    """Dense matrix of a Pauli word such as ``"XIZ"``."""
    if not word or any(c not in _LETTER_INDEX for c in word):
        raise ValueError(f"invalid Pauli word {word!r}")
    out = SIGMA[_LETTER_INDEX[word[0]]]
    for c in word[1:]:
        out = np.kron(out, SIGMA[_LETTER_INDEX[c]])
    return out


def site_density(alpha) -> np.ndarray:
    """2x2 density matrix (I + a . sigma) / 2 from a Bloch vector."""
    a = check_bloch_vectors(alpha)
    return 0.5 * (SIGMA[0] + a[0] * SIGMA[1] + a[1] * SIGMA[2] + a[2] * SIGMA[3])


def density(descriptions) -> np.ndarray:
    """Dense density matrix of the product state with the given (n, 3) description."""
    sites = check_bloch_vectors(np.atleast_2d(np.asarray(descriptions, dtype=float)))
    _check_qubit_count(sites.shape[0])
    rho = site_density(sites[0])
    for a in sites[1:]:
        rho = np.kron(rho, site_density(a))
    return rho


def operator_norm(matrix) -> float:
    """Spectral norm of a Hermitian matrix."""
    return float(np.max(np.abs(np.linalg.eigvalsh(matrix))))


def check_observable(matrix, bounded: bool = False, tol: float = 1e-10) -> np.ndarray:
    """Validate a Hermitian observable; optionally require operator norm <= 1."""
    o = np.asarray(matrix, dtype=complex)
    if o.ndim != 2 or o.shape[0] != o.shape[1]:
        raise ValueError("observable must be a square matrix")
    if np.max(np.abs(o - o.conj().T)) > tol:
        raise ValueError("observable must be Hermitian")
    if bounded and operator_norm(o) > 1.0 + 1e-9:
        raise ValueError("observable must have operator norm <= 1")
    return o


@dataclass
class KrausChannel:
    """A quantum channel given by its Kraus operators (trace preserving)."""

    n: int
    kraus: list = field(repr=False)

    def __post_init__(self):
        _check_qubit_count(self.n)
        dim = 2 ** self.n
        self.kraus = [np.asarray(k, dtype=complex) for k in self.kraus]
        if not self.kraus or any(k.shape != (dim, dim) for k in self.kraus):
            raise DimensionMismatchError(f"Kraus operators must be {dim}x{dim}")
        total = sum(k.conj().T @ k for k in self.kraus)
        if np.max(np.abs(total - np.eye(dim))) > 1e-8:
            raise ValueError("Kraus operators do not satisfy sum K^dag K = I")

    def apply(self, rho) -> np.ndarray:
        """Schroedinger action: sum_k K rho K^dag."""
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != self.kraus[0].shape:
            raise DimensionMismatchError("state dimension does not match channel")
        return sum(k @ rho @ k.conj().T for k in self.kraus)

    def heisenberg(self, observable) -> np.ndarray:
        """Dual action on observables: sum_k K^dag O K."""
        o = check_observable(observable)
        if o.shape != self.kraus[0].shape:
            raise DimensionMismatchError("observable dimension does not match channel")
        return sum(k.conj().T @ o @ k for k in self.kraus)

    @staticmethod
    def identity(n: int) -> "KrausChannel":
        return KrausChannel(n, [np.eye(2 ** n, dtype=complex)])

    @staticmethod
    def unitary(u) -> "KrausChannel":
        u = np.asarray(u, dtype=complex)
        n = int(np.log2(u.shape[0]))
        return KrausChannel(n, [u])

    @staticmethod
    def depolarizing(n: int, p: float) -> "KrausChannel":
        """Product of single-qubit depolarizing channels with strength p.

        Materializes 4^n Kraus operators, so it is limited to n <= 5.
        """
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if n > 5:
            raise ValueError("dense depolarizing channel supported only for n <= 5")
        site = [np.sqrt(1.0 - 3.0 * p / 4.0) * SIGMA[0]] + [
            np.sqrt(p) / 2.0 * SIGMA[i] for i in (1, 2, 3)
        ]
        ops = site
        for _ in range(n - 1):
            ops = [np.kron(a, b) for a in ops for b in site]
        return KrausChannel(n, ops)


def apply_channel(channel: KrausChannel, rho) -> np.ndarray:
    return channel.apply(rho)


def heisenberg_adjoint(channel: KrausChannel, observable) -> np.ndarray:
    return channel.heisenberg(observable)


def random_channel(n: int, num_kraus: int, rng=None, max_qubits: int | None = None) -> KrausChannel:
    """Random channel from jointly normalized complex Gaussian Kraus operators."""
    _check_qubit_count(n, max_qubits)
    if num_kraus < 1:
        raise ValueError("num_kraus must be >= 1")
    rng = as_rng(rng)
    dim = 2 ** n
    raw = [
        rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        for _ in range(num_kraus)
    ]
    total = sum(k.conj().T @ k for k in raw)
    vals, vecs = np.linalg.eigh(total)
    inv_sqrt = vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.conj().T
    return KrausChannel(n, [k @ inv_sqrt for k in raw])


# ---------------------------------------------------------------------------
# Expectations
# ---------------------------------------------------------------------------

def expectation(observable, descriptions) -> float:
    """tr(O rho) for the product state with the given description (dense path)."""
    o = np.asarray(observable, dtype=complex)
    sites = check_bloch_vectors(np.atleast_2d(np.asarray(descriptions, dtype=float)))
    n = sites.shape[0]
    if o.shape != (2 ** n, 2 ** n):
        raise DimensionMismatchError("observable dimension does not match state")
    # Contract site density matrices into O one qubit at a time (last site first);
    # trace over site k pairs axes (r_k, c_k) of O with (col, row) of rho_k.
    t = o.reshape((2,) * (2 * n))
    for i in range(n - 1, -1, -1):
        k = t.ndim // 2
        rho = site_density(sites[i])
        t = np.tensordot(t, rho, axes=([k - 1, 2 * k - 1], [1, 0]))
    return float(np.real(t))


def product_expectation(site_operators, descriptions) -> float:
    """tr((A_1 x ... x A_n) rho) via the per-site product formula."""
    sites = check_bloch_vectors(np.atleast_2d(np.asarray(descriptions, dtype=float)))
    ops = [np.asarray(a, dtype=complex) for a in site_operators]
    if len(ops) != sites.shape[0]:
        raise DimensionMismatchError("one site operator per qubit required")
    out = 1.0
    for a, alpha in zip(ops, sites):
        out *= np.trace(a @ site_density(alpha)).real
    return float(out)


def pauli_word_expectation(word: str, descriptions) -> float:
    """tr(P rho) for a Pauli word on a product state: a product of site terms."""
    sites = check_bloch_vectors(np.atleast_2d(np.asarray(descriptions, dtype=float)))
    if len(word) != sites.shape[0]:
        raise DimensionMismatchError("Pauli word length must equal qubit count")
    out = 1.0
    for c, alpha in zip(word, sites):
        if c == "I":
            continue
        out *= alpha[_LETTER_INDEX[c] - 1]
    return float(out)


# ---------------------------------------------------------------------------
# Measurement simulation
# ---------------------------------------------------------------------------

def estimate_label(channel: KrausChannel, observable, descriptions, shots: int, rng=None) -> float:
    """Two-outcome estimate of tr(O E[rho]) from ``shots`` repetitions.

    The measurement succeeds with probability (1 + tr(O E[rho])) / 2, which is
    a valid POVM for any observable of operator norm at most 1; the empirical
    frequency is rescaled back to [-1, 1], giving an unbiased estimator.
    """
    o = check_observable(observable, bounded=True)
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = as_rng(rng)
    value = exact_label(channel, o, descriptions)
    p = min(1.0, max(0.0, 0.5 * (1.0 + value)))
    wins = rng.binomial(shots, p)
    return 2.0 * wins / shots - 1.0


def exact_label(channel: KrausChannel, observable, descriptions) -> float:
    """Exact tr(O E[rho]) for a product input state."""
    rho_out = channel.apply(density(descriptions))
    return float(np.real(np.trace(np.asarray(observable, dtype=complex) @ rho_out)))


# The six single-qubit stabilizer states, indexed by (basis, outcome):
# basis 0 = X, 1 = Y, 2 = Z; outcome 0 -> +1 eigenstate, 1 -> -1 eigenstate.
_STABILIZER_VECS = {
    (0, 0): np.array([1, 1]) / np.sqrt(2),
    (0, 1): np.array([1, -1]) / np.sqrt(2),
    (1, 0): np.array([1, 1j]) / np.sqrt(2),
    (1, 1): np.array([1, -1j]) / np.sqrt(2),
    (2, 0): np.array([1, 0], dtype=complex),
    (2, 1): np.array([0, 1], dtype=complex),
}


def stabilizer_projector(basis: int, outcome: int) -> np.ndarray:
    v = _STABILIZER_VECS[(basis, outcome)]
    return np.outer(v, v.conj())


def shadow_estimate(rho_out, rng=None):
    """One randomized Pauli measurement of every qubit of ``rho_out``.

    Each qubit gets an independent uniformly random basis in {X, Y, Z} and a
    Born-rule outcome, sampled sequentially with exact conditional
    probabilities (projective collapse). Returns the outcome word as a list
    of (basis, outcome) pairs; ``shadow_estimator`` converts a word into the
    single-copy state estimate whose average converges to ``rho_out``.
    """
    rho = np.asarray(rho_out, dtype=complex)
    dim = rho.shape[0]
    n = int(np.log2(dim))
    if rho.shape != (dim, dim) or 2 ** n != dim:
        raise ValueError("rho_out must be a 2^n x 2^n matrix")
    if abs(np.trace(rho).real - 1.0) > 1e-8 or np.max(np.abs(rho - rho.conj().T)) > 1e-8:
        raise ValueError("rho_out must be a density matrix (Hermitian, trace 1)")
    if np.min(np.linalg.eigvalsh(rho)) < -1e-8:
        raise ValueError("rho_out must be positive semidefinite")
    rng = as_rng(rng)
    word = []
    for i in range(n):
        basis = int(rng.integers(3))
        proj_plus = _site_projector_full(n, i, basis, 0)
        p_plus = float(np.real(np.trace(proj_plus @ rho)))
        p_plus = min(1.0, max(0.0, p_plus))
        outcome = 0 if rng.random() < p_plus else 1
        proj = proj_plus if outcome == 0 else _site_projector_full(n, i, basis, 1)
        p = p_plus if outcome == 0 else 1.0 - p_plus
        rho = proj @ rho @ proj / max(p, 1e-300)
        word.append((basis, outcome))
    return word


def _site_projector_full(n: int, site: int, basis: int, outcome: int) -> np.ndarray:
    proj = stabilizer_projector(basis, outcome)
    out = np.eye(1, dtype=complex)
    for i in range(n):
        out = np.kron(out, proj if i == site else SIGMA[0])
    return out


def shadow_estimator(word) -> np.ndarray:
    """Single-copy state estimate: tensor product of 3|s><s| - I per site."""
    out = np.eye(1, dtype=complex)
    for basis, outcome in word:
        out = np.kron(out, 3.0 * stabilizer_projector(basis, outcome) - SIGMA[0])
    return out


# ---------------------------------------------------------------------------
# JSON formats
# ---------------------------------------------------------------------------
#
# Channel: {"n": 2, "kraus": [[[ [re, im], ... ] per row] per matrix]}
# Observable: {"pauli": "ZIZ"} or {"pauli": ["ZI", "IZ"], "coeff": [0.5, 0.5]}
#             or {"n": 1, "matrix": [[[re, im], ...], ...]}

def _complex_to_pairs(mat: np.ndarray):
    return [[[float(z.real), float(z.imag)] for z in row] for row in mat]


def _pairs_to_complex(rows) -> np.ndarray:
    return np.array([[complex(p[0], p[1]) for p in row] for row in rows])


def channel_to_json(channel: KrausChannel) -> dict:
    return {"n": channel.n, "kraus": [_complex_to_pairs(k) for k in channel.kraus]}


def channel_from_json(spec) -> KrausChannel:
    if isinstance(spec, str):
        spec = json.loads(spec)
    extra = set(spec) - {"n", "kraus"}
    if extra:
        raise ValueError(f"unknown fields in channel spec: {sorted(extra)}")
    return KrausChannel(int(spec["n"]), [_pairs_to_complex(k) for k in spec["kraus"]])


def observable_to_json(matrix) -> dict:
    m = np.asarray(matrix, dtype=complex)
    return {"n": int(np.log2(m.shape[0])), "matrix": _complex_to_pairs(m)}


def observable_from_json(spec, n: int | None = None) -> np.ndarray:
    if isinstance(spec, str):
        spec = json.loads(spec) if spec.strip().startswith("{") else {"pauli": spec}
    if "pauli" in spec:
        extra = set(spec) - {"pauli", "coeff"}
        if extra:
            raise ValueError(f"unknown fields in observable spec: {sorted(extra)}")
        words = spec["pauli"]
        if isinstance(words, str):
            words = [words]
        coeffs = spec.get("coeff", [1.0] * len(words))
        if len(coeffs) != len(words):
            raise ValueError("pauli words and coefficients must align")
        if n is not None and any(len(w) != n for w in words):
            raise ValueError("pauli word length does not match qubit count")
        out = sum(float(c) * pauli_to_operator(w) for w, c in zip(words, coeffs))
        return check_observable(out)
    extra = set(spec) - {"n", "matrix"}
    if extra:
        raise ValueError(f"unknown fields in observable spec: {sorted(extra)}")
    mat = _pairs_to_complex(spec["matrix"])
    if n is not None and mat.shape[0] != 2 ** n:
        raise ValueError("observable dimension does not match qubit count")
    return check_observable(mat)
