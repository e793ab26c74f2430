"""Config-driven command line for verification suites, learners, and demos.

Every command writes its CSV/JSON artifacts atomically (temp file plus
rename), prints a one-line summary, and exits nonzero with a machine
readable error JSON on stdout when anything fails. JSON reports embed the
fully resolved configuration and the library version, so replaying a report
with the same seed reproduces the artifact byte for byte.

Flag precedence is flags > config file > defaults. Unknown config fields
are rejected.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__, basis, bloch, classical, learner, qsim
from .util import as_rng, atomic_write_text, thread_map


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Config handling
# ---------------------------------------------------------------------------

def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _check_fields(cfg: dict, allowed: set, required: set, where: str) -> None:
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown fields in {where}: {sorted(unknown)}")
    missing = required - set(cfg)
    if missing:
        raise ConfigError(f"missing required fields in {where}: {sorted(missing)}")


def _positive(cfg, key, kind=float, lo=None, hi=None):
    v = cfg[key]
    try:
        v = kind(v)
    except (TypeError, ValueError):
        raise ConfigError(f"field {key!r} must be a {kind.__name__}") from None
    if lo is not None and v < lo or hi is not None and v > hi:
        raise ConfigError(f"field {key!r} out of range: {v}")
    return v


def _resolve_channel(spec, n: int) -> qsim.KrausChannel:
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("channel spec must be an object with a 'type' field")
    kind = spec["type"]
    allowed = {
        "identity": set(),
        "depolarizing": {"p"},
        "random": {"num_kraus", "seed"},
        "file": {"path"},
    }
    if kind not in allowed:
        raise ConfigError(f"unknown channel type {kind!r}")
    required = {"path"} if kind == "file" else set()
    _check_fields(spec, allowed[kind] | {"type"}, required, f"channel spec ({kind})")
    if kind == "identity":
        return qsim.KrausChannel.identity(n)
    if kind == "depolarizing":
        return qsim.KrausChannel.depolarizing(n, float(spec.get("p", 0.1)))
    if kind == "random":
        return qsim.random_channel(
            n, int(spec.get("num_kraus", 4)), as_rng(int(spec.get("seed", 0)))
        )
    with open(spec["path"]) as fh:
        return qsim.channel_from_json(json.load(fh))


def _resolve_observable(spec, n: int) -> np.ndarray:
    if isinstance(spec, str):
        spec = {"pauli": spec}
    if not isinstance(spec, dict):
        raise ConfigError("observable spec must be an object or a Pauli word")
    if spec.get("type") == "file":
        _check_fields(spec, {"type", "path"}, {"path"}, "observable spec (file)")
        with open(spec["path"]) as fh:
            return qsim.observable_from_json(json.load(fh), n=n)
    if spec.get("type") == "random_bounded":
        _check_fields(spec, {"type", "seed"}, set(), "observable spec (random_bounded)")
        rng = as_rng(int(spec.get("seed", 0)))
        dim = 2 ** n
        h = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        h = h + h.conj().T
        return h / qsim.operator_norm(h)
    return qsim.observable_from_json(spec, n=n)


def _resolve_bloch_distribution(spec) -> bloch.BlochDistribution:
    try:
        return bloch.distribution_from_json(spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _resolve_interval_distribution(spec) -> classical.IntervalDistribution:
    if not isinstance(spec, dict):
        raise ConfigError("distribution spec must be an object")
    if spec.get("type") == "uniform_pair":
        _check_fields(spec, {"type", "radius", "eta"}, {"radius"}, "distribution (uniform_pair)")
        return classical.IntervalDistribution.uniform_pair(
            float(spec["radius"]), eta=spec.get("eta")
        )
    _check_fields(spec, {"type", "atoms", "weights", "eta"}, {"atoms", "weights"}, "distribution")
    return classical.IntervalDistribution(spec["atoms"], spec["weights"], eta=spec.get("eta"))


def _resolve_classical_target(spec, n: int, rng) -> classical.MultilinearFunction:
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("target spec must be an object with a 'type' field")
    kind = spec["type"]
    if kind == "majority":
        _check_fields(spec, {"type"}, set(), "target (majority)")
        return classical.majority_multilinear(n)
    if kind == "random_bounded":
        _check_fields(spec, {"type", "degree", "terms", "seed"}, set(), "target (random_bounded)")
        target_rng = as_rng(int(spec["seed"])) if "seed" in spec else rng
        return classical.random_bounded_multilinear(
            n, int(spec.get("degree", 3)), int(spec.get("terms", 12)), target_rng
        )
    if kind == "terms":
        _check_fields(spec, {"type", "terms"}, {"terms"}, "target (terms)")
        coeffs = {}
        for term in spec["terms"]:
            coeffs[frozenset(term["sites"])] = float(term["coeff"])
        return classical.MultilinearFunction(n, coeffs)
    raise ConfigError(f"unknown target type {kind!r}")


# ---------------------------------------------------------------------------
# Artifact helpers
# ---------------------------------------------------------------------------

def _write_csv(path: str, header: list, rows: list) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_csv_cell(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _csv_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_report(path: str, payload: dict) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_verify(args) -> int:
    mu_grid = args.mu_grid if args.mu_grid else [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
    eta_list = args.eta_list if args.eta_list else [0.1, 0.3, 0.5]
    os.makedirs(args.out_dir, exist_ok=True)

    eig_rows = []
    for mu in mu_grid:
        for k in range(1, args.k_max + 1):
            c = basis.verify_min_eigenvalue(mu, k)
            eig_rows.append([mu, k, c.lambda_min, c.bound, c.passed])
    eig_path = os.path.join(args.out_dir, "min_eigenvalue.csv")
    _write_csv(eig_path, ["mu", "k", "lambda_min", "bound", "pass"], eig_rows)

    def one_trial(task):
        seed, eta = task
        dist = bloch.random_distribution(as_rng(seed), max_second_moment_norm=1.0 - eta)
        cert = basis.verify_scaled_covariance(dist, eta)
        return [seed, eta, cert.norm_delta_sigma_delta, cert.eta_prime, cert.passed]

    tasks = [
        (args.seed + i + trial * len(eta_list), eta)
        for trial in range(args.trials)
        for i, eta in enumerate(eta_list)
    ]
    cov_rows = thread_map(one_trial, tasks, args.threads)
    cov_path = os.path.join(args.out_dir, "scaled_covariance.csv")
    _write_csv(cov_path, ["seed", "eta", "norm", "eta_prime", "pass"], cov_rows)

    ok = all(r[-1] for r in eig_rows) and all(r[-1] for r in cov_rows)
    print(
        f"verify: {len(eig_rows)} eigenvalue rows, {len(cov_rows)} covariance rows, "
        f"all_pass={str(ok).lower()} -> {eig_path}, {cov_path}"
    )
    return 0 if ok else 1


def _cmd_learn_quantum(args) -> int:
    cfg = _load_config(args.config)
    allowed = {
        "n", "distribution", "channel", "observable", "epsilon", "delta", "eta",
        "degree", "shots", "sample_constant", "shot_constant", "max_samples",
        "ridge", "seed", "out", "hypothesis_out",
    }
    _check_fields(cfg, allowed, {"n", "distribution", "channel", "observable", "epsilon"}, "config")
    n = _positive(cfg, "n", int, 1, 10)
    if args.seed is not None:
        cfg["seed"] = args.seed
    dist = _resolve_bloch_distribution(cfg["distribution"])
    channel = _resolve_channel(cfg["channel"], n)
    observable = _resolve_observable(cfg["observable"], n)
    eta = cfg.get("eta", "estimate")
    shots = cfg.get("shots")
    if shots is not None and shots != "exact":
        shots = int(shots)
    hyp, report = learner.learn_channel(
        dist,
        channel,
        observable,
        epsilon=_positive(cfg, "epsilon", float, 1e-12, 1.0 - 1e-12),
        delta=float(cfg.get("delta", 0.05)),
        eta=eta,
        degree=cfg.get("degree"),
        shots=shots,
        sample_constant=float(cfg.get("sample_constant", learner.DEFAULT_SAMPLE_CONSTANT)),
        shot_constant=float(cfg.get("shot_constant", learner.DEFAULT_SHOT_CONSTANT)),
        max_samples=int(cfg.get("max_samples", learner.DEFAULT_MAX_SAMPLES)),
        ridge=float(cfg.get("ridge", learner.DEFAULT_RIDGE)),
        seed=cfg.get("seed"),
    )
    out = cfg.get("out", "learn_quantum_report.json")
    payload = {"version": __version__, "config": cfg, "report": report.to_json()}
    _write_report(out, payload)
    if cfg.get("hypothesis_out"):
        _write_report(
            cfg["hypothesis_out"],
            {"version": __version__, "config": cfg, "hypothesis": hyp.to_json()},
        )
    print(
        f"learn-quantum: n={n} d={report.degree} m={report.num_samples} "
        f"shots={report.shots} test_mse={report.test_mse:.3e} -> {out}"
    )
    return 0


def _cmd_learn_classical(args) -> int:
    cfg = _load_config(args.config)
    allowed = {
        "n", "distribution", "target", "epsilon", "delta", "eta", "degree", "fit",
        "sample_constant", "max_samples", "ridge", "seed", "out",
    }
    _check_fields(cfg, allowed, {"n", "distribution", "target", "epsilon"}, "config")
    n = _positive(cfg, "n", int, 1, 30)
    if args.seed is not None:
        cfg["seed"] = args.seed
    dist = _resolve_interval_distribution(cfg["distribution"])
    rng = as_rng(cfg.get("seed"))
    target = _resolve_classical_target(cfg["target"], n, rng)
    hyp, report = learner.learn_classical(
        dist,
        target,
        n,
        epsilon=_positive(cfg, "epsilon", float, 1e-12, 1.0 - 1e-12),
        delta=float(cfg.get("delta", 0.05)),
        eta=cfg.get("eta"),
        degree=cfg.get("degree"),
        fit=cfg.get("fit", "regression"),
        sample_constant=float(cfg.get("sample_constant", learner.DEFAULT_SAMPLE_CONSTANT)),
        max_samples=int(cfg.get("max_samples", learner.DEFAULT_MAX_SAMPLES)),
        ridge=float(cfg.get("ridge", learner.DEFAULT_RIDGE)),
        seed=cfg.get("seed"),
    )
    out = cfg.get("out", "learn_classical_report.json")
    payload = {"version": __version__, "config": cfg, "report": report.to_json()}
    _write_report(out, payload)
    print(
        f"learn-classical: n={n} d={report.degree} fit={cfg.get('fit', 'regression')} "
        f"test_mse={report.test_mse:.3e} -> {out}"
    )
    return 0


def _cmd_demo_majority(args) -> int:
    rows = []
    for n in args.n_list:
        if n % 2 == 0:
            raise ConfigError(f"majority needs odd n, got {n}")
        t_star, max_abs = classical.truncation_blowup_scan(
            n, args.delta, args.a, args.b, args.grid
        )
        rows.append([n, args.delta, t_star, max_abs])
    _write_csv(args.out, ["n", "delta", "t_star", "max_abs"], rows)
    print(
        "demo-majority: "
        + " ".join(f"n={r[0]}:max|f|={r[3]:.4g}" for r in rows)
        + f" -> {args.out}"
    )
    return 0


def _cmd_demo_code_lb(args) -> int:
    rows = []
    for i in range(args.seeds):
        seed = args.seed + i
        mse_code, mse_product = learner.demo_code_hardness(
            n=args.n, degree=args.degree, seed=seed, num_samples=args.samples
        )
        rows.append([args.n, args.degree, mse_code, mse_product, seed])
    _write_csv(
        args.out, ["n", "degree", "test_mse_code", "test_mse_product", "seed"], rows
    )
    worst_code = min(r[2] for r in rows)
    worst_prod = max(r[3] for r in rows)
    print(
        f"demo-code-lb: {args.seeds} seeds, min code mse={worst_code:.3g}, "
        f"max product mse={worst_prod:.3g} -> {args.out}"
    )
    return 0


def _cmd_decay_scan(args) -> int:
    cfg = _load_config(args.config)
    allowed = {"n", "distribution", "channel", "observable", "eta", "seed", "out"}
    _check_fields(cfg, allowed, {"n", "distribution", "observable"}, "config")
    n = _positive(cfg, "n", int, 1, 10)
    dist = _resolve_bloch_distribution(cfg["distribution"])
    observable = _resolve_observable(cfg["observable"], n)
    if "channel" in cfg:
        channel = _resolve_channel(cfg["channel"], n)
        observable = channel.heisenberg(observable)
    # The decay certificate applies to unit-norm observables; rescale so the
    # bound column is meaningful for whatever the config supplied.
    norm = qsim.operator_norm(observable)
    if norm > 1.0:
        observable = observable / norm
    eta = cfg.get("eta")
    if eta is None:
        eta = max(1e-9, 1.0 - bloch.spectral_norm(dist.second_moment()))
    rate = basis.eta_prime(eta)
    d_max = args.d_max if args.d_max is not None else n
    d_max = min(d_max, n)
    site = basis.build_site_basis(dist)

    def one_degree(d):
        err = basis.truncation_error_exact(observable, d, dist, bases=site)
        return [d, err, (1.0 - rate) ** d]

    rows = thread_map(one_degree, range(d_max + 1), args.threads)
    out = cfg.get("out", "decay_scan.csv")
    _write_csv(out, ["d", "exact_error", "bound"], rows)
    ok = all(r[1] <= r[2] + 1e-9 for r in rows)
    print(
        f"decay-scan: n={n} eta={eta:.4g} rows={len(rows)} "
        f"bound_holds={str(ok).lower()} -> {out}"
    )
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bpl",
        description="Verification suites, learning experiments and demos "
        "for low-degree channel prediction.",
    )
    parser.add_argument("--version", action="version", version=f"bpl {__version__}")
    parser.add_argument(
        "--threads",
        type=int,
        default=int(os.environ.get("BPL_THREADS", "1")),
        help="worker thread bound (env: BPL_THREADS)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the spectral certificate suites")
    p.add_argument("--mu-grid", type=float, nargs="*", default=None)
    p.add_argument("--k-max", type=int, default=8)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--eta-list", type=float, nargs="*", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="artifacts")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("learn-quantum", help="run the channel learning pipeline")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_learn_quantum)

    p = sub.add_parser("learn-classical", help="run the commutative learning pipeline")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_learn_classical)

    p = sub.add_parser("demo-majority", help="unbiased truncation blow-up scan")
    p.add_argument("--n-list", type=int, nargs="+", default=[15, 21, 25])
    p.add_argument("--delta", type=float, default=0.2)
    p.add_argument("--a", type=float, default=0.3)
    p.add_argument("--b", type=float, default=0.7)
    p.add_argument("--grid", type=int, default=1001)
    p.add_argument("--out", default="majority_blowup.csv")
    p.set_defaults(func=_cmd_demo_majority)

    p = sub.add_parser("demo-code-lb", help="code vs product distribution contrast")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--out", default="code_hardness.csv")
    p.set_defaults(func=_cmd_demo_code_lb)

    p = sub.add_parser("decay-scan", help="exact truncation error vs degree")
    p.add_argument("--config", required=True)
    p.add_argument("--d-max", type=int, default=None)
    p.set_defaults(func=_cmd_decay_scan)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 2


if __name__ == "__main__":
    sys.exit(main())
