"""End-to-end learning pipelines: dataset generation, features, fits, reports.

The channel pipeline samples product states, queries the channel for noisy
labels, fits a low-degree linear model over products of site-basis
expectations, and reports exact test error by enumerating the input
distribution. The commutative pipeline does the same over interval product
distributions, with an optional direct coefficient-estimation fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product as iproduct

import numpy as np

from . import qsim
from .basis import SiteBasis, build_site_basis, eta_prime
from .bloch import BlochDistribution, Rotation, spectral_norm
from .classical import IntervalDistribution, MultilinearFunction
from .util import as_rng, iter_subsets

ENUMERATION_GUARD = 10 ** 7

DEFAULT_SAMPLE_CONSTANT = 10.0
DEFAULT_SHOT_CONSTANT = 1500.0
DEFAULT_MAX_SAMPLES = 50_000
DEFAULT_RIDGE = 1e-8


class RankDeficientError(np.linalg.LinAlgError):
    """Normal equations are singular; refit with ridge > 0."""


def required_degree(epsilon: float, rate: float) -> int:
    """Smallest d with (1 - rate)^d <= epsilon, i.e. ceil(log(1/eps)/log(1/(1-rate)))."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if not 0.0 < rate < 1.0:
        raise ValueError("rate must lie in (0, 1)")
    d = math.log(1.0 / epsilon) / math.log(1.0 / (1.0 - rate))
    return max(1, math.ceil(d - 1e-12))


def feature_index(n: int, degree: int, letters: int = 3) -> list:
    """Deterministic feature enumeration: (sites, letter assignment) pairs.

    Subsets ordered by size then lexicographically; letter tuples in product
    order. Entry 0 is the constant feature (empty subset).
    """
    out = []
    for subset in iter_subsets(n, degree):
        for assignment in iproduct(range(letters), repeat=len(subset)):
            out.append((subset, assignment))
    return out


def feature_matrix(site_values: np.ndarray, index: list) -> np.ndarray:
    """(m, F) matrix of products of per-site values.

    ``site_values`` has shape (m, n, L) with one value per site and letter.
    """
    m = site_values.shape[0]
    cols = np.empty((m, len(index)))
    for j, (subset, letters) in enumerate(index):
        col = np.ones(m)
        for i, p in zip(subset, letters):
            col = col * site_values[:, i, p]
        cols[:, j] = col
    return cols


def fit_least_squares(features, labels, ridge: float = 0.0) -> np.ndarray:
    """Ridge least squares via the normal equations with a symmetric solve.

    Raises RankDeficientError when ridge is 0 and the Gram matrix is
    singular. The returned solution satisfies the stationarity condition
    |X^T(Xw - y) + ridge w| <= 1e-8 |X^T y|.
    """
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ValueError("features must be (m, F) and labels (m,)")
    if ridge < 0.0:
        raise ValueError("ridge must be >= 0")
    gram = x.T @ x + ridge * np.eye(x.shape[1])
    rhs = x.T @ y
    try:
        low = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        if ridge == 0.0:
            raise RankDeficientError(
                "normal equations are singular with ridge = 0; pass ridge > 0"
            ) from None
        raise
    pivots = np.diag(low) ** 2
    if ridge == 0.0 and pivots.min() < 1e-12 * max(pivots.max(), 1e-300):
        raise RankDeficientError(
            "normal equations are (numerically) singular with ridge = 0; pass ridge > 0"
        )

    def solve(b):
        return np.linalg.solve(low.T, np.linalg.solve(low, b))

    w = solve(rhs)
    # Iterative refinement until the stationarity condition holds; tiny ridge
    # values leave the system ill-conditioned enough to need a few passes.
    tol = 1e-8 * max(np.linalg.norm(rhs), 1e-300)
    for _ in range(8):
        grad = rhs - gram @ w
        if np.linalg.norm(grad) <= tol:
            break
        w = w + solve(grad)
    return w


# ---------------------------------------------------------------------------
# Dataset generation
# ---------------------------------------------------------------------------

EXACT_SHOTS = "exact"


@dataclass
class TrainingSet:
    """Sampled product-state descriptions with (possibly noisy) labels."""

    descriptions: np.ndarray  # (m, n, 3)
    labels: np.ndarray  # (m,), values in [-1, 1]
    shots: int | str
    seed: int | None

    def __post_init__(self):
        self.descriptions = np.asarray(self.descriptions, dtype=float)
        self.labels = np.asarray(self.labels, dtype=float)
        if self.labels.shape != (self.descriptions.shape[0],):
            raise ValueError("one label per description required")
        if np.any(np.abs(self.labels) > 1.0 + 1e-12):
            raise ValueError("labels must lie in [-1, 1]")

    def __len__(self) -> int:
        return len(self.labels)


def generate_dataset(
    dist: BlochDistribution,
    channel: qsim.KrausChannel,
    observable,
    num_samples: int,
    shots: int | str = EXACT_SHOTS,
    rng=None,
    seed: int | None = None,
) -> TrainingSet:
    """Draw i.i.d. product states and label them through the channel.

    ``shots`` is either a positive integer (two-outcome measurement
    repetitions per sample) or "exact" for noiseless labels.
    """
    o = qsim.check_observable(observable, bounded=True)
    n = channel.n
    if seed is not None and rng is None:
        rng = as_rng(seed)
    rng = as_rng(rng)
    descriptions = dist.sample(rng, size=(num_samples, n)).reshape(num_samples, n, 3)
    evolved = channel.heisenberg(o)
    labels = np.empty(num_samples)
    for j in range(num_samples):
        value = qsim.expectation(evolved, descriptions[j])
        if shots == EXACT_SHOTS:
            labels[j] = value
        else:
            p = min(1.0, max(0.0, 0.5 * (1.0 + value)))
            labels[j] = 2.0 * rng.binomial(int(shots), p) / int(shots) - 1.0
    np.clip(labels, -1.0, 1.0, out=labels)
    return TrainingSet(descriptions, labels, shots, seed)


def estimate_second_moment_bound(descriptions, shrink: float | None = None):
    """Empirical per-site second moments and a plug-in spectral gap estimate.

    Returns (per-site (n, 3, 3) moment matrices, eta_hat) where eta_hat is
    1 minus the largest per-site spectral norm inflated by a concentration
    margin (default 4 / sqrt(m)).
    """
    descriptions = np.asarray(descriptions, dtype=float)
    if descriptions.ndim != 3 or descriptions.shape[0] < 2:
        raise ValueError("need at least 2 descriptions of shape (n, 3)")
    m = descriptions.shape[0]
    if shrink is None:
        shrink = 4.0 / math.sqrt(m)
    moments = np.einsum("mip,miq->ipq", descriptions, descriptions) / m
    worst = max(spectral_norm(s) for s in moments)
    eta_hat = max(1e-6, 1.0 - min(1.0, worst + shrink))
    return moments, eta_hat


# ---------------------------------------------------------------------------
# Hypotheses
# ---------------------------------------------------------------------------

@dataclass
class Hypothesis:
    """Learned low-degree predictor over site-basis feature products."""

    site_bases: list
    degree: int
    index: list = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.site_bases)

    def site_values(self, descriptions) -> np.ndarray:
        descriptions = np.asarray(descriptions, dtype=float)
        vals = np.empty(descriptions.shape)
        for i, b in enumerate(self.site_bases):
            vals[:, i, :] = b.site_values(descriptions[:, i, :])
        return vals

    def predict(self, descriptions) -> np.ndarray:
        """Predicted tr(O E[rho]) for (m, n, 3) classical descriptions."""
        descriptions = np.asarray(descriptions, dtype=float)
        single = descriptions.ndim == 2
        if single:
            descriptions = descriptions[None]
        feats = feature_matrix(self.site_values(descriptions), self.index)
        out = feats @ self.weights
        return float(out[0]) if single else out

    def as_operator(self) -> np.ndarray:
        """Dense observable H with predict(s) = tr(H rho_s); n <= 5 only."""
        if self.n > 5:
            raise ValueError("dense assembly supported for n <= 5")
        dim = 2 ** self.n
        out = np.zeros((dim, dim), dtype=complex)
        for (subset, letters), w in zip(self.index, self.weights):
            term = np.eye(1, dtype=complex)
            pos = dict(zip(subset, letters))
            for i in range(self.n):
                op = self.site_bases[i].ops[pos[i] + 1] if i in pos else np.eye(2)
                term = np.kron(term, op)
            out = out + w * term
        return out

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "sites": [
                {
                    "mu": b.mu,
                    "rotation": b.rotation.r.tolist(),
                    "unitary": [[[z.real, z.imag] for z in row] for row in b.rotation.u],
                }
                for b in self.site_bases
            ],
            "terms": [
                {"sites": list(subset), "letters": list(letters), "weight": float(w)}
                for (subset, letters), w in zip(self.index, self.weights)
            ],
        }

    @staticmethod
    def from_json(spec: dict) -> "Hypothesis":
        bases = []
        for site in spec["sites"]:
            u = np.array([[complex(p[0], p[1]) for p in row] for row in site["unitary"]])
            bases.append(SiteBasis(Rotation(u, np.array(site["rotation"])), site["mu"]))
        index = [(tuple(t["sites"]), tuple(t["letters"])) for t in spec["terms"]]
        weights = np.array([t["weight"] for t in spec["terms"]])
        return Hypothesis(bases, spec["degree"], index, weights)


@dataclass
class ClassicalHypothesis:
    """Low-degree predictor over centered coordinate products."""

    mu: np.ndarray  # per-coordinate center
    sigma: np.ndarray  # per-coordinate scale (0 marks an inactive coordinate)
    degree: int
    subsets: list = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def features(self, points) -> np.ndarray:
        x = np.atleast_2d(np.asarray(points, dtype=float))
        cols = np.empty((x.shape[0], len(self.subsets)))
        for j, subset in enumerate(self.subsets):
            col = np.ones(x.shape[0])
            for i in subset:
                col = col * (x[:, i] - self.mu[i]) / self.sigma[i]
            cols[:, j] = col
        return cols

    def predict(self, points) -> np.ndarray:
        x = np.asarray(points, dtype=float)
        single = x.ndim == 1
        out = self.features(x) @ self.weights
        return float(out[0]) if single else out

    def to_json(self) -> dict:
        return {
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
            "degree": self.degree,
            "terms": [
                {"sites": list(s), "weight": float(w)}
                for s, w in zip(self.subsets, self.weights)
            ],
        }


# ---------------------------------------------------------------------------
# Channel pipeline
# ---------------------------------------------------------------------------

@dataclass
class LearnReport:
    """Resolved hyperparameters and error metrics of one pipeline run."""

    n: int
    degree: int
    num_samples: int
    shots: int | str
    epsilon: float
    delta: float
    eta: float
    eta_prime: float
    ridge: float
    sample_constant: float
    seed: int | None
    train_mse: float
    test_mse: float
    test_mse_stderr: float | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "extra"}
        out.update(self.extra)
        return out


def _resolve_samples(n, degree, delta, sample_constant, max_samples):
    raw = sample_constant * (n ** degree) * math.log(1.0 / delta)
    return int(min(max(math.ceil(raw), 16), max_samples))


def _resolve_shots(shots, num_samples, epsilon, delta, shot_constant):
    if shots is not None:
        return shots
    raw = shot_constant * math.log(num_samples + 1.0 / epsilon ** 2 + 1.0 / delta)
    return int(max(math.ceil(raw), 1))


def learn_channel(
    dist: BlochDistribution,
    channel: qsim.KrausChannel,
    observable,
    epsilon: float,
    delta: float = 0.05,
    eta: float | str | None = None,
    degree: int | None = None,
    shots: int | str | None = None,
    sample_constant: float = DEFAULT_SAMPLE_CONSTANT,
    shot_constant: float = DEFAULT_SHOT_CONSTANT,
    max_samples: int = DEFAULT_MAX_SAMPLES,
    ridge: float = DEFAULT_RIDGE,
    seed: int | None = None,
    test_mc_samples: int = 20_000,
):
    """Learn the map from product-state descriptions to tr(O E[rho]).

    Chooses the truncation degree from the decay rate implied by ``eta``
    (a promised bound with |second moment| <= 1 - eta; pass "estimate" to
    plug in an empirical bound), draws the training set, fits by ridge
    least squares on degree-limited site-basis products, and evaluates the
    exact test error by enumeration (Monte-Carlo beyond the guard).

    Returns (Hypothesis, LearnReport).
    """
    o = qsim.check_observable(observable, bounded=True)
    n = channel.n
    rng = as_rng(seed)

    estimate_eta = eta in (None, "estimate")
    eta_value = None if estimate_eta else float(eta)
    if not estimate_eta:
        s_norm = spectral_norm(dist.second_moment())
        if s_norm > 1.0 - eta_value + 1e-9:
            raise ValueError(
                f"promised bound violated: |second moment| = {s_norm:.6g} > {1 - eta_value:.6g}"
            )

    # Degree and sample sizes need eta; when estimating, bootstrap from a
    # small pilot sample of descriptions (labels are not needed for this).
    if estimate_eta:
        pilot = dist.sample(rng, size=(2000, n)).reshape(2000, n, 3)
        _, eta_value = estimate_second_moment_bound(pilot)
    rate = eta_prime(eta_value)
    d = degree if degree is not None else min(n, required_degree(epsilon, rate))
    m = _resolve_samples(n, d, delta, sample_constant, max_samples)
    shots_resolved = _resolve_shots(shots, m, epsilon, delta, shot_constant)

    data = generate_dataset(dist, channel, o, m, shots_resolved, rng=rng, seed=seed)
    basis = build_site_basis(dist)
    bases = [basis] * n
    index = feature_index(n, d)
    site_vals = np.empty_like(data.descriptions)
    for i in range(n):
        site_vals[:, i, :] = basis.site_values(data.descriptions[:, i, :])
    feats = feature_matrix(site_vals, index)
    weights = fit_least_squares(feats, data.labels, ridge)
    hyp = Hypothesis(bases, d, index, weights)

    train_mse = float(np.mean((feats @ weights - data.labels) ** 2))
    test_mse, stderr = exact_test_mse(
        hyp, dist, channel, o, rng=rng, mc_samples=test_mc_samples
    )
    report = LearnReport(
        n=n,
        degree=d,
        num_samples=m,
        shots=shots_resolved,
        epsilon=epsilon,
        delta=delta,
        eta=eta_value,
        eta_prime=rate,
        ridge=ridge,
        sample_constant=sample_constant,
        seed=seed,
        train_mse=train_mse,
        test_mse=test_mse,
        test_mse_stderr=stderr,
        extra={"eta_estimated": estimate_eta, "num_features": len(index)},
    )
    return hyp, report


def exact_test_mse(
    hyp: Hypothesis,
    dist: BlochDistribution,
    channel: qsim.KrausChannel,
    observable,
    rng=None,
    mc_samples: int = 20_000,
):
    """Mean squared error of a hypothesis against exact channel labels.

    Enumerates all atom tuples of the product distribution when feasible
    (returns (mse, None)); otherwise Monte-Carlo (returns (mse, stderr)).
    """
    n = hyp.n
    k = len(dist)
    evolved = channel.heisenberg(qsim.check_observable(observable))
    if k ** n <= min(ENUMERATION_GUARD, 10 ** 5):
        grids = np.meshgrid(*[np.arange(k)] * n, indexing="ij")
        idx = np.stack([g.reshape(-1) for g in grids], axis=1)
        descriptions = dist.atoms[idx]  # (k^n, n, 3)
        truth = np.array([qsim.expectation(evolved, s) for s in descriptions])
        predictions = hyp.predict(descriptions)
        w = dist.weights
        weight = np.ones(len(idx))
        for i in range(n):
            weight = weight * w[idx[:, i]]
        return float(weight @ (truth - predictions) ** 2), None
    rng = as_rng(rng)
    descriptions = dist.sample(rng, size=(mc_samples, n)).reshape(mc_samples, n, 3)
    truth = np.array([qsim.expectation(evolved, s) for s in descriptions])
    sq = (truth - hyp.predict(descriptions)) ** 2
    return float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(mc_samples))


# ---------------------------------------------------------------------------
# Commutative pipeline
# ---------------------------------------------------------------------------

def classical_feature_subsets(n: int, degree: int, active=None) -> list:
    """Subsets of active coordinates up to the given size."""
    if active is None:
        active = range(n)
    active = sorted(active)
    out = []
    from itertools import combinations
    for size in range(degree + 1):
        out.extend(combinations(active, size))
    return out


def direct_coefficient_estimation(points, labels, subsets, mu, sigma):
    """Empirical centered-product coefficients and their standard errors.

    Estimates E[f(x) phi_S(x)] per subset from samples; valid as a fit
    exactly when the coordinates are independent so the characters are
    orthonormal.
    """
    x = np.asarray(points, dtype=float)
    y = np.asarray(labels, dtype=float)
    m = len(y)
    coeffs = np.empty(len(subsets))
    stderrs = np.empty(len(subsets))
    for j, subset in enumerate(subsets):
        col = np.ones(m)
        for i in subset:
            col = col * (x[:, i] - mu[i]) / sigma[i]
        prods = y * col
        coeffs[j] = prods.mean()
        stderrs[j] = prods.std(ddof=1) / math.sqrt(m)
    return coeffs, stderrs


def learn_classical(
    dist: IntervalDistribution,
    target,
    n: int,
    epsilon: float,
    delta: float = 0.05,
    eta: float | None = None,
    degree: int | None = None,
    fit: str = "regression",
    sample_constant: float = DEFAULT_SAMPLE_CONSTANT,
    max_samples: int = DEFAULT_MAX_SAMPLES,
    ridge: float = DEFAULT_RIDGE,
    seed: int | None = None,
    test_mc_samples: int = 20_000,
):
    """Learn a bounded multilinear target over a product interval distribution.

    ``target`` is a MultilinearFunction or any callable on (m, n) arrays.
    ``fit`` selects ridge regression or direct coefficient estimation; the
    latter is exactly the orthonormal-basis projection when the distribution
    is a true product. Returns (ClassicalHypothesis, LearnReport).
    """
    if eta is None:
        if dist.eta is not None:
            eta = dist.eta
        else:
            eta = max(1e-6, 1.0 - float(np.max(np.abs(dist.atoms))))
    f = target.evaluate if isinstance(target, MultilinearFunction) else target
    d = degree if degree is not None else min(n, required_degree(epsilon, eta))
    m = _resolve_samples(n, d, delta, sample_constant, max_samples)
    rng = as_rng(seed)

    x = dist.sample(rng, size=(m, n))
    y = np.asarray(f(x), dtype=float)
    mu = np.full(n, dist.mean())
    sigma = np.full(n, math.sqrt(dist.variance()))
    if np.any(sigma == 0.0):
        raise ValueError("distribution has zero variance; nothing to learn over")
    subsets = classical_feature_subsets(n, d)
    extra = {"fit": fit, "num_features": len(subsets)}
    if fit == "regression":
        hyp = ClassicalHypothesis(mu, sigma, d, subsets, np.zeros(len(subsets)))
        feats = hyp.features(x)
        hyp.weights = fit_least_squares(feats, y, ridge)
        train_mse = float(np.mean((feats @ hyp.weights - y) ** 2))
    elif fit == "direct":
        coeffs, stderrs = direct_coefficient_estimation(x, y, subsets, mu, sigma)
        hyp = ClassicalHypothesis(mu, sigma, d, subsets, coeffs)
        train_mse = float(np.mean((hyp.predict(x) - y) ** 2))
        extra["coefficient_stderrs"] = stderrs.tolist()
    else:
        raise ValueError("fit must be 'regression' or 'direct'")

    test_mse, stderr = exact_test_mse_classical(
        hyp, dist, f, n, rng=rng, mc_samples=test_mc_samples
    )
    report = LearnReport(
        n=n,
        degree=d,
        num_samples=m,
        shots=EXACT_SHOTS,
        epsilon=epsilon,
        delta=delta,
        eta=eta,
        eta_prime=eta,
        ridge=ridge if fit == "regression" else 0.0,
        sample_constant=sample_constant,
        seed=seed,
        train_mse=train_mse,
        test_mse=test_mse,
        test_mse_stderr=stderr,
        extra=extra,
    )
    return hyp, report


def demo_code_hardness(
    n: int = 20,
    degree: int = 3,
    eta: float = 0.1,
    seed: int | None = 0,
    num_samples: int = 20_000,
    test_mc_samples: int = 20_000,
):
    """Contrast one learner on a code-supported distribution vs a product one.

    The learner is direct coefficient estimation at the given degree, the fit
    that is provably correct over product distributions. On the uniform
    distribution over a scaled random linear code (non-product support,
    arbitrary +-1 labels) the characters lose their orthogonality and the
    same fit collapses; on a matched product distribution with a bounded
    low-degree target it succeeds. Returns (mse_code, mse_product).

    Regression is intentionally not used here: at desk scale the code has
    only 2^(rate n) codewords, so an unconstrained least-squares fit simply
    memorizes the support and shows nothing.
    """
    from .classical import build_code_distribution, random_bounded_multilinear

    rng = as_rng(seed)
    code = build_code_distribution(n, eta, rng)
    x, y = code.sample(rng, size=num_samples)
    mu = x.mean(axis=0)
    sigma = x.std(axis=0)
    active = np.flatnonzero(sigma > 1e-9)
    sigma_safe = np.where(sigma > 1e-9, sigma, 1.0)
    subsets = classical_feature_subsets(n, degree, active)
    coeffs, _ = direct_coefficient_estimation(x, y, subsets, mu, sigma_safe)
    hyp = ClassicalHypothesis(mu, sigma_safe, degree, subsets, coeffs)
    mse_code = float(code.weights @ (hyp.predict(code.atoms) - code.labels) ** 2)

    target = random_bounded_multilinear(n, degree, num_terms=4 * degree, rng=rng)
    product = IntervalDistribution.uniform_pair(1.0 - eta, eta=eta)
    _, report = learn_classical(
        product,
        target,
        n,
        epsilon=0.05,
        degree=degree,
        fit="direct",
        max_samples=num_samples,
        seed=int(rng.integers(2 ** 31)),
        test_mc_samples=test_mc_samples,
    )
    return mse_code, report.test_mse


def exact_test_mse_classical(
    hyp: ClassicalHypothesis,
    dist: IntervalDistribution,
    f,
    n: int,
    rng=None,
    mc_samples: int = 20_000,
):
    """MSE of a hypothesis against the target over the product distribution."""
    k = len(dist)
    if k ** n <= min(ENUMERATION_GUARD, 10 ** 6):
        grids = np.meshgrid(*[np.arange(k)] * n, indexing="ij")
        idx = np.stack([g.reshape(-1) for g in grids], axis=1)
        points = dist.atoms[idx]
        weight = np.ones(len(idx))
        for i in range(n):
            weight = weight * dist.weights[idx[:, i]]
        sq = (np.asarray(f(points)) - hyp.predict(points)) ** 2
        return float(weight @ sq), None
    rng = as_rng(rng)
    points = dist.sample(rng, size=(mc_samples, n))
    sq = (np.asarray(f(points)) - hyp.predict(points)) ** 2
    return float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(mc_samples))
