"""Figure and table rendering from harness CSVs.

Four kinds, mirroring the evaluation outputs:

    throughput    blocks/s vs sample size, one series per bandwidth cap
    latency       mean commit latency vs sample size, same grouping
    inclusion     latency-round distribution, one series per input CSV
    egress-table  per-user per-round egress estimates as a text table

Every rendered figure gets a plain-text data sidecar (<out>.txt) holding
the exact series values, so downstream checks can diff numbers without
comparing image bytes.  Nothing here computes protocol values: this module
only groups and averages what the harness CSVs already contain.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

matplotlib.rcParams["svg.hashsalt"] = "sparsedag-plots"

RUN_SCHEMA = ("variant,n,f,D,lambda,scheme,bandwidth_bps,seed,rounds,"
              "throughput_bps,commit_latency_mean_ms,commit_latency_p50_ms,"
              "commit_latency_p95_ms,egress_metadata_bytes_per_round,"
              "egress_total_bytes_per_round,audit_ok")
INCLUSION_SCHEMA = "latency_rounds,count"
EGRESS_SCHEMA = "variant,scheme,n,lambda,egress_bytes_per_round"

KINDS = ("throughput", "latency", "inclusion", "egress-table")


class SchemaMismatch(ValueError):
    """Input columns do not match the documented harness CSV schema."""


class EmptyInput(ValueError):
    """A CSV parsed fine but contains no data rows."""


@dataclass
class FigureSpec:
    kind: str
    inputs: list[str]
    output: str
    labels: list[str] = field(default_factory=list)
    xlabel: str = ""
    ylabel: str = ""
    title: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise EmptyInput("no input CSVs")


def read_csv(path: str, schema: str) -> list[dict]:
    with open(path) as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines or lines[0] != schema:
        raise SchemaMismatch(
            f"{path}: expected header {schema!r}, got "
            f"{lines[0] if lines else '<empty file>'!r}")
    columns = schema.split(",")
    rows = [dict(zip(columns, line.split(","))) for line in lines[1:]]
    if not rows:
        raise EmptyInput(f"{path}: no data rows")
    for row in rows:
        if len(row) != len(columns):
            raise SchemaMismatch(f"{path}: ragged row {row}")
    return rows


def _mean(values: list[float]) -> float:
    return sum(values) / len(values)


def _group_runs(rows: list[dict], value_column: str):
    """-> {bandwidth: {"sparse": [(D, value)], "baseline": value}}

    Repetitions (same variant, D, bandwidth) are averaged; that is the only
    arithmetic applied to harness numbers.
    """
    buckets: dict[tuple, list[float]] = {}
    for row in rows:
        key = (int(row["bandwidth_bps"]), row["variant"], int(row["D"]))
        buckets.setdefault(key, []).append(float(row[value_column]))
    grouped: dict[int, dict] = {}
    for (bw, variant, d), values in sorted(buckets.items()):
        series = grouped.setdefault(bw, {"sparse": [], "baseline": None})
        if variant == "baseline":
            series["baseline"] = _mean(values)
        else:
            series["sparse"].append((d, _mean(values)))
    return grouped


def _bw_label(bw: int) -> str:
    if bw == 0:
        return "unlimited"
    if bw % 1_000_000 == 0:
        return f"{bw // 1_000_000} MB/s"
    return f"{bw} B/s"


def _write_sidecar(path: str, lines: list[str]) -> None:
    with open(path + ".txt", "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _save(fig, path: str) -> None:
    fig.savefig(path, metadata={"Date": None} if path.endswith(".svg") else None)
    plt.close(fig)


def render_runs_figure(spec: FigureSpec, value_column: str,
                       default_ylabel: str) -> str:
    rows = []
    for path in spec.inputs:
        rows.extend(read_csv(path, RUN_SCHEMA))
    grouped = _group_runs(rows, value_column)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    sidecar = [f"kind={spec.kind}", f"value={value_column}"]
    for bw, series in grouped.items():
        label = _bw_label(bw)
        points = sorted(series["sparse"])
        if points:
            ax.plot([d for d, _ in points], [v for _, v in points],
                    marker="o", label=f"sparse, {label}")
            for d, v in points:
                sidecar.append(f"bandwidth={bw} D={d} {value_column}={v:.6f}")
        if series["baseline"] is not None:
            ax.axhline(series["baseline"], linestyle="--", alpha=0.7,
                       label=f"baseline, {label}")
            sidecar.append(f"bandwidth={bw} D=baseline "
                           f"{value_column}={series['baseline']:.6f}")
    ax.set_xlabel(spec.xlabel or "sample size D")
    ax.set_ylabel(spec.ylabel or default_ylabel)
    if spec.title:
        ax.set_title(spec.title)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, spec.output)
    _write_sidecar(spec.output, sidecar)
    return spec.output


def render_inclusion_figure(spec: FigureSpec) -> str:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    sidecar = ["kind=inclusion"]
    labels = spec.labels or [os.path.splitext(os.path.basename(p))[0]
                             for p in spec.inputs]
    if len(labels) != len(spec.inputs):
        raise ValueError("one label per input CSV required")
    for path, label in zip(spec.inputs, labels):
        rows = read_csv(path, INCLUSION_SCHEMA)
        xs = [int(r["latency_rounds"]) for r in rows]
        ys = [int(r["count"]) for r in rows]
        ax.plot(xs, ys, marker="o", label=label)
        for x, y in zip(xs, ys):
            sidecar.append(f"series={label} latency_rounds={x} count={y}")
    ax.set_xlabel(spec.xlabel or "inclusion latency (rounds)")
    ax.set_ylabel(spec.ylabel or "vertices")
    ax.set_yscale("log")
    if spec.title:
        ax.set_title(spec.title)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, spec.output)
    _write_sidecar(spec.output, sidecar)
    return spec.output


def _format_bytes(value: float) -> str:
    for unit, scale in (("GB", 1e9), ("MB", 1e6), ("KB", 1e3)):
        if value >= scale:
            return f"{value / scale:.0f} {unit}"
    return f"{value:.0f} B"


def render_egress_table(spec: FigureSpec) -> str:
    rows = []
    for path in spec.inputs:
        rows.extend(read_csv(path, EGRESS_SCHEMA))
    schemes = []
    for row in rows:
        if row["scheme"] not in schemes:
            schemes.append(row["scheme"])
    by_key = {(r["variant"], r["scheme"]): float(r["egress_bytes_per_round"])
              for r in rows}
    n, lam = rows[0]["n"], rows[0]["lambda"]

    lines = [f"per-user per-round egress estimates (n={n}, lambda={lam})",
             f"{'scheme':<12} {'baseline':>12} {'sparse':>12}"]
    sidecar = ["kind=egress-table"]
    for scheme in schemes:
        base = by_key.get(("baseline", scheme))
        sparse = by_key.get(("sparse", scheme))
        lines.append(f"{scheme:<12} {_format_bytes(base):>12} "
                     f"{_format_bytes(sparse):>12}")
        sidecar.append(f"scheme={scheme} baseline={base:.0f} sparse={sparse:.0f}")
    with open(spec.output, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    _write_sidecar(spec.output, sidecar)
    return spec.output


def render(spec: FigureSpec) -> str:
    """Render one spec; returns the output path.  A sidecar with the exact
    plotted numbers lands next to it."""
    if spec.kind == "throughput":
        return render_runs_figure(spec, "throughput_bps", "throughput (blocks/s)")
    if spec.kind == "latency":
        return render_runs_figure(spec, "commit_latency_mean_ms",
                                  "mean commit latency (ms)")
    if spec.kind == "inclusion":
        return render_inclusion_figure(spec)
    return render_egress_table(spec)
