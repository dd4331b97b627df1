"""Figure rendering for crestwave outputs.

Five figure kinds from the documented file schemas:

  energies   E1, E2, E3, Ea, E curves vs t          (timeseries CSV)
  blowup     blow-up functional B(t)                 (timeseries CSV)
  pinch      crest gap d(t) with the d - v t line    (CSV, optional summary)
  interface  closed interface curve + crest markers  (checkpoint JSON)
  spectrum   |coefficient| vs mode of the velocity   (checkpoint JSON)

Rendering is read-only and deterministic: identical inputs and spec yield
byte-identical PNGs (fixed layout, no timestamps in the metadata).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("energies", "blowup", "pinch", "interface", "spectrum")

ENERGY_COLUMNS = ("E1", "E2", "E3", "Ea", "E")


class SchemaError(ValueError):
    """Input file does not match the documented CSV/JSON schema."""


@dataclass(frozen=True)
class FigureSpec:
    which: str
    out: str
    csv: str | None = None
    checkpoint: str | None = None
    summary: str | None = None
    logy: bool = False
    title: str = ""

    def __post_init__(self):
        if self.which not in KINDS:
            raise SchemaError(f"unknown figure kind {self.which!r}; expected one of {KINDS}")
        needs_csv = self.which in ("energies", "blowup", "pinch")
        if needs_csv and not self.csv:
            raise SchemaError(f"figure kind {self.which!r} needs a csv input")
        if not needs_csv and not self.checkpoint:
            raise SchemaError(f"figure kind {self.which!r} needs a checkpoint input")


def parse_spec(path: str) -> FigureSpec:
    """Flat "key = value" spec file, same format as the simulator configs."""
    keys: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SchemaError(f"{path}:{lineno}: expected 'key = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        keys[k] = v
    known = {"which", "out", "csv", "checkpoint", "summary", "logy", "title"}
    unknown = set(keys) - known
    if unknown:
        raise SchemaError(f"{path}: unknown keys {sorted(unknown)}")
    if "which" not in keys or "out" not in keys:
        raise SchemaError(f"{path}: 'which' and 'out' are required")
    return FigureSpec(
        which=keys["which"], out=keys["out"],
        csv=keys.get("csv"), checkpoint=keys.get("checkpoint"),
        summary=keys.get("summary"),
        logy=keys.get("logy", "0").lower() in ("1", "true", "yes"),
        title=keys.get("title", ""),
    )


# ----------------------------------------------------------------------
# Input schemas
# ----------------------------------------------------------------------

def load_timeseries(path: str) -> dict:
    """Timeseries CSV: header t,dt,E1,...,stop_reason; floats in data rows,
    stop_reason only on the last row."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        required = {"t", "E1", "E2", "E3", "Ea", "E", "blowup_B"}
        if not required.issubset(header):
            raise SchemaError(
                f"{path}: missing timeseries columns {sorted(required - set(header))}")
        if header[-1] != "stop_reason":
            raise SchemaError(f"{path}: last column must be stop_reason")
        cols: dict[str, list] = {h: [] for h in header[:-1]}
        stop_reason = ""
        for row in reader:
            if len(row) != len(header):
                raise SchemaError(f"{path}: ragged row {row!r}")
            for h, v in zip(header[:-1], row[:-1]):
                try:
                    cols[h].append(float(v))
                except ValueError as exc:
                    raise SchemaError(f"{path}: bad float {v!r} in column {h}") from exc
            if row[-1]:
                stop_reason = row[-1]
    data = {h: np.array(v) for h, v in cols.items()}
    data["stop_reason"] = stop_reason
    return data


def load_checkpoint(path: str) -> dict:
    data = json.loads(Path(path).read_text())
    if data.get("format") != "crestwave-checkpoint-1":
        raise SchemaError(f"{path}: not a crestwave checkpoint")
    for key in ("mode", "t", "n", "offset", "z_re", "z_im", "ztbar_re", "ztbar_im"):
        if key not in data:
            raise SchemaError(f"{path}: checkpoint missing {key!r}")
    n = int(data["n"])
    nodes = 2.0 * np.pi * (np.arange(n) + float(data["offset"])) / n
    out = {
        "mode": data["mode"],
        "t": float(data["t"]),
        "n": n,
        "nodes": nodes,
        "z": np.array(data["z_re"]) + 1j * np.array(data["z_im"]),
        "ztbar": np.array(data["ztbar_re"]) + 1j * np.array(data["ztbar_im"]),
        "label_pos": np.array(data.get("label_pos", [])),
    }
    if out["z"].shape != (n,) or out["ztbar"].shape != (n,):
        raise SchemaError(f"{path}: sample arrays do not match n = {n}")
    return out


def _interp(nodes: np.ndarray, values: np.ndarray, at: np.ndarray) -> np.ndarray:
    """Trigonometric interpolation of periodic samples at arbitrary points."""
    n = len(nodes)
    modes = np.rint(np.fft.fftfreq(n, d=1.0 / n)).astype(int)
    coeffs = np.fft.fft(values) / n * np.exp(-1j * modes * nodes[0])
    return np.exp(1j * np.outer(at, modes)) @ coeffs


# ----------------------------------------------------------------------
# Figures
# ----------------------------------------------------------------------

def _new_axes(title: str):
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=120)
    if title:
        ax.set_title(title)
    return fig, ax


def _fig_energies(spec: FigureSpec):
    data = load_timeseries(spec.csv)
    fig, ax = _new_axes(spec.title or "energy hierarchy")
    for name in ENERGY_COLUMNS:
        ax.plot(data["t"], data[name], label=name, linewidth=1.2)
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    if spec.logy and any(np.any(data[name] > 0) for name in ENERGY_COLUMNS):
        ax.set_yscale("log")
    ax.legend(loc="best", fontsize=8)
    return fig


def _fig_blowup(spec: FigureSpec):
    data = load_timeseries(spec.csv)
    fig, ax = _new_axes(spec.title or "blow-up functional")
    ax.plot(data["t"], data["blowup_B"], color="tab:red", linewidth=1.4)
    ax.set_xlabel("t")
    ax.set_ylabel("B(t)")
    if spec.logy and np.any(data["blowup_B"] > 0):
        ax.set_yscale("log")
    return fig


def _fig_pinch(spec: FigureSpec):
    data = load_timeseries(spec.csv)
    if "d_pinch" not in data:
        raise SchemaError(f"{spec.csv}: no d_pinch column; not a pinch run")
    t, d = data["t"], data["d_pinch"]
    if spec.summary:
        summary = json.loads(Path(spec.summary).read_text())
        d0, v = float(summary["d0"]), float(summary["v"])
    else:
        d0 = d[0]
        v = (d[0] - d[1]) / (t[1] - t[0]) if len(t) > 1 and t[1] > t[0] else 0.0
    fig, ax = _new_axes(spec.title or "crest gap")
    ax.plot(t, d, label="d(t)", color="tab:blue", linewidth=1.4)
    ax.plot(t, d0 - v * t, label="d - v t", color="tab:gray", linestyle="--", linewidth=1.0)
    ax.set_xlabel("t")
    ax.set_ylabel("crest separation")
    ax.legend(loc="best", fontsize=8)
    return fig


def _fig_interface(spec: FigureSpec):
    ck = load_checkpoint(spec.checkpoint)
    if ck["mode"] == "disc":
        z = ck["z"]
        closed = np.append(z, z[0])
    else:
        z = ck["nodes"] + ck["z"]
        closed = z
    fig, ax = _new_axes(spec.title or f"interface at t = {ck['t']:.4g}")
    ax.plot(closed.real, closed.imag, color="tab:blue", linewidth=1.0)
    if ck["label_pos"].size >= 2:
        marks = _interp(ck["nodes"], ck["z"], ck["label_pos"][:2])
        if ck["mode"] != "disc":
            marks = ck["label_pos"][:2] + marks
        ax.plot(marks.real, marks.imag, "o", color="tab:red", markersize=5,
                label="tracked crests")
        ax.legend(loc="best", fontsize=8)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    return fig


def _fig_spectrum(spec: FigureSpec):
    ck = load_checkpoint(spec.checkpoint)
    n = ck["n"]
    modes = np.rint(np.fft.fftfreq(n, d=1.0 / n)).astype(int)
    coeffs = np.abs(np.fft.fft(ck["ztbar"]) / n)
    order = np.argsort(modes)
    fig, ax = _new_axes(spec.title or f"velocity spectrum at t = {ck['t']:.4g}")
    floor = 1e-20
    ax.semilogy(modes[order], np.maximum(coeffs[order], floor),
                color="tab:purple", linewidth=0.9)
    ax.set_xlabel("mode m")
    ax.set_ylabel("|coefficient|")
    ax.set_ylim(bottom=1e-18)
    return fig


_RENDERERS = {
    "energies": _fig_energies,
    "blowup": _fig_blowup,
    "pinch": _fig_pinch,
    "interface": _fig_interface,
    "spectrum": _fig_spectrum,
}


def render(spec: FigureSpec) -> str:
    """Render one figure; returns the output path.  Deterministic: no
    timestamps are embedded and the layout is fixed."""
    fig = _RENDERERS[spec.which](spec)
    out = Path(spec.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="png", metadata={"Software": None})
    plt.close(fig)
    return str(out)
