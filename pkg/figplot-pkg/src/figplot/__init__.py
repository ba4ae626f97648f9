"""Render experiment CSVs: the circ-vs-plus scatter and classification bars.

Input contract (scatter): the spn-run CSV with header
run,rounds,lambda_seed,estimator,flavor,delta_in_hex,p_best,neglog2_p,gap.
One dot per run: its best circ row (largest p_best over the input
differences), placed at x = neglog2_p and y = gap, shaded darker for
more rounds, with a horizontal reference line at zero.

Bar charts accept the classification CSVs
(class,uniformity,count / sbox,d,uniformity,op_count).
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__version__ = "0.1.0"

SCATTER_COLUMNS = (
    "run",
    "rounds",
    "lambda_seed",
    "estimator",
    "flavor",
    "delta_in_hex",
    "p_best",
    "neglog2_p",
    "gap",
)


class SchemaMismatchError(Exception):
    pass


class EmptyInputError(Exception):
    pass


@dataclass(frozen=True)
class PlotSpec:
    input_csv: str
    output_image: str
    kind: str = "fig1"  # fig1 | table-bars
    rounds_lo: int | None = None
    rounds_hi: int | None = None
    estimator: str = "montecarlo"


def _read_rows(path: str, required: tuple) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaMismatchError(f"missing columns: {', '.join(missing)}")
        return list(reader)


def select_scatter_points(spec: PlotSpec) -> list:
    """One (x, y, rounds) triple per run: the best circ record."""
    rows = _read_rows(spec.input_csv, SCATTER_COLUMNS)
    estimators = {r["estimator"] for r in rows}
    wanted = spec.estimator if spec.estimator in estimators else next(iter(sorted(estimators)), None)
    best: dict = {}
    for r in rows:
        if r["flavor"] != "circ" or r["estimator"] != wanted:
            continue
        rounds = int(r["rounds"])
        if spec.rounds_lo is not None and rounds < spec.rounds_lo:
            continue
        if spec.rounds_hi is not None and rounds > spec.rounds_hi:
            continue
        run = int(r["run"])
        cur = best.get(run)
        if cur is None or float(r["p_best"]) > cur[0]:
            best[run] = (float(r["p_best"]), float(r["neglog2_p"]), float(r["gap"]), rounds)
    if not best:
        raise EmptyInputError("no circ rows left after filtering")
    return [(x, y, rounds) for _, x, y, rounds in (best[k] for k in sorted(best))]


def build_fig1(spec: PlotSpec):
    points = select_scatter_points(spec)
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    rounds = [p[2] for p in points]
    lo, hi = min(rounds), max(rounds)
    # darker = more rounds; keep a positive floor so single-round data is visible
    shades = [0.25 + 0.75 * ((r - lo) / (hi - lo) if hi > lo else 1.0) for r in rounds]
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=120)
    ax.scatter(xs, ys, c=shades, cmap="Greys", vmin=0.0, vmax=1.0, edgecolors="black", linewidths=0.4, s=28)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("-log2 of best circ differential probability")
    ax.set_ylabel("gap (positive: circ beats plus)")
    ax.set_title("circ vs plus differentials across runs")
    return fig, points


def _read_bar_rows(path: str) -> tuple:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if header[:3] == ["class", "uniformity", "count"]:
            label_col, value_col = "class", "count"
        elif header[:4] == ["sbox", "d", "uniformity", "op_count"]:
            label_col, value_col = "sbox", "op_count"
        else:
            raise SchemaMismatchError(f"unrecognised bar-chart header: {header}")
        rows = list(reader)
    return rows, label_col, value_col


def build_table_bars(spec: PlotSpec):
    rows, label_col, value_col = _read_bar_rows(spec.input_csv)
    if not rows:
        raise EmptyInputError("no rows")
    labels = sorted({r[label_col] for r in rows})
    unis = sorted({int(r["uniformity"]) for r in rows})
    data = {lab: {u: 0 for u in unis} for lab in labels}
    for r in rows:
        data[r[label_col]][int(r["uniformity"])] += int(r[value_col])
    fig, ax = plt.subplots(figsize=(7.2, 4.2), dpi=120)
    width = 0.9 / len(labels)
    for i, lab in enumerate(labels):
        xs = [k + i * width for k in range(len(unis))]
        ax.bar(xs, [data[lab][u] for u in unis], width=width, label=lab)
    ax.set_xticks([k + 0.45 - width / 2 for k in range(len(unis))])
    ax.set_xticklabels([str(u) for u in unis])
    ax.set_xlabel("uniformity")
    ax.set_ylabel("count")
    if len(labels) <= 16:
        ax.legend(fontsize=6, ncol=4)
    return fig, data


def render(spec: PlotSpec) -> str:
    """Write the figure; schema problems abort before any file is touched."""
    if spec.kind == "fig1":
        fig, _ = build_fig1(spec)
    elif spec.kind == "table-bars":
        fig, _ = build_table_bars(spec)
    else:
        raise ValueError(f"unknown kind {spec.kind!r}")
    fig.savefig(spec.output_image, metadata={"Software": "figplot"})
    plt.close(fig)
    return spec.output_image


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="figplot", description=__doc__)
    p.add_argument("input_csv")
    p.add_argument("output_image")
    p.add_argument("--kind", choices=("fig1", "table-bars"), default="fig1")
    p.add_argument("--rounds", default=None, help="LO..HI filter")
    p.add_argument("--estimator", default="montecarlo")
    args = p.parse_args(argv)
    lo = hi = None
    if args.rounds:
        lo, hi = (int(v) for v in args.rounds.split(".."))
    spec = PlotSpec(args.input_csv, args.output_image, args.kind, lo, hi, args.estimator)
    try:
        render(spec)
    except (SchemaMismatchError, EmptyInputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
