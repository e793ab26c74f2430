"""Render figures from bpl CSV artifacts.

This layer recomputes nothing: every number in a figure comes straight from
the CSV. Each plot kind pins an exact column schema; mismatches are hard
errors, and a header-only CSV produces no output file. Rendering is
deterministic for fixed library versions (fixed figure geometry, fixed DPI,
no timestamps in the PNG metadata).
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

PLOT_KINDS = ("decay", "lemma-grid", "blowup", "hardness-bars")

SCHEMAS = {
    "decay": ["d", "exact_error", "bound"],
    "lemma-grid": ["mu", "k", "lambda_min", "bound", "pass"],
    "blowup": ["n", "delta", "t_star", "max_abs"],
    "hardness-bars": ["n", "degree", "test_mse_code", "test_mse_product", "seed"],
}

_SAVE_OPTS = {"dpi": 150, "metadata": {"Software": "bpl-plots"}}


class SchemaError(ValueError):
    """CSV columns or contents do not match the plot kind."""


@dataclass
class PlotSpec:
    """What to render: input CSV, plot kind, output path, label overrides."""

    csv_path: str
    kind: str
    out_path: str
    title: str | None = None
    xlabel: str | None = None
    ylabel: str | None = None

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise SchemaError(f"unknown plot kind {self.kind!r}; expected one of {PLOT_KINDS}")


def read_rows(csv_path: str, kind: str) -> list:
    """Load and schema-check the CSV, returning a list of per-row dicts."""
    if not os.path.exists(csv_path):
        raise FileNotFoundError(f"input CSV not found: {csv_path}")
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{csv_path} is empty") from None
        expected = SCHEMAS[kind]
        if header != expected:
            raise SchemaError(
                f"{csv_path} columns {header} do not match the {kind!r} schema {expected}"
            )
        rows = [dict(zip(header, row)) for row in reader if row]
    if not rows:
        raise SchemaError(f"{csv_path} has a header but no data rows")
    return rows


def _finish(fig, axis, spec: PlotSpec):
    if spec.title:
        axis.set_title(spec.title)
    if spec.xlabel:
        axis.set_xlabel(spec.xlabel)
    if spec.ylabel:
        axis.set_ylabel(spec.ylabel)
    fig.tight_layout()
    fig.savefig(spec.out_path, **_SAVE_OPTS)
    plt.close(fig)


def _render_decay(rows, spec: PlotSpec):
    d = [int(r["d"]) for r in rows]
    err = [float(r["exact_error"]) for r in rows]
    bound = [float(r["bound"]) for r in rows]
    fig, axis = plt.subplots(figsize=(6.0, 4.0))
    # Exact zeros cannot sit on a log axis; clip far below everything visible.
    floor = min([b for b in bound] + [e for e in err if e > 0], default=1e-16) * 1e-4
    axis.semilogy(d, [max(e, floor) for e in err], "o-", label="measured error")
    axis.semilogy(d, bound, "s--", label="certified bound")
    axis.set_xlabel("truncation degree")
    axis.set_ylabel("mean squared error")
    axis.legend()
    _finish(fig, axis, spec)


def _render_lemma_grid(rows, spec: PlotSpec):
    mu = [float(r["mu"]) for r in rows]
    k = [int(r["k"]) for r in rows]
    ok = [r["pass"].strip().lower() == "true" for r in rows]
    fig, axis = plt.subplots(figsize=(6.0, 4.0))
    good = [(m, kk) for m, kk, o in zip(mu, k, ok) if o]
    bad = [(m, kk) for m, kk, o in zip(mu, k, ok) if not o]
    if good:
        axis.scatter(*zip(*good), marker="s", s=60, color="#2a7e43", label="pass")
    if bad:
        axis.scatter(*zip(*bad), marker="x", s=60, color="#b33", label="fail")
    axis.set_xlabel("mean length")
    axis.set_ylabel("tensor power")
    axis.legend()
    _finish(fig, axis, spec)


def _render_blowup(rows, spec: PlotSpec):
    n = [int(r["n"]) for r in rows]
    value = [float(r["max_abs"]) for r in rows]
    fig, axis = plt.subplots(figsize=(6.0, 4.0))
    axis.semilogy(n, value, "o-")
    axis.set_xlabel("number of inputs")
    axis.set_ylabel("max |truncated value| on the scan segment")
    _finish(fig, axis, spec)


def _render_hardness(rows, spec: PlotSpec):
    seeds = [r["seed"] for r in rows]
    code = [float(r["test_mse_code"]) for r in rows]
    product = [float(r["test_mse_product"]) for r in rows]
    x = range(len(rows))
    width = 0.38
    fig, axis = plt.subplots(figsize=(6.0, 4.0))
    axis.bar([i - width / 2 for i in x], code, width, label="code support")
    axis.bar([i + width / 2 for i in x], product, width, label="product support")
    axis.set_yscale("log")
    axis.set_xticks(list(x), [f"seed {s}" for s in seeds])
    axis.set_ylabel("test mean squared error")
    axis.legend()
    _finish(fig, axis, spec)


_RENDERERS = {
    "decay": _render_decay,
    "lemma-grid": _render_lemma_grid,
    "blowup": _render_blowup,
    "hardness-bars": _render_hardness,
}


def render(spec: PlotSpec) -> str:
    """Render the figure described by ``spec``; returns the output path.

    The CSV is fully validated before any file is written, so a failed render
    never leaves an image behind.
    """
    rows = read_rows(spec.csv_path, spec.kind)
    out_dir = os.path.dirname(os.path.abspath(spec.out_path))
    os.makedirs(out_dir, exist_ok=True)
    _RENDERERS[spec.kind](rows, spec)
    return spec.out_path
