import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from crestwave_plots.cli import main
from crestwave_plots.render import (
    FigureSpec,
    SchemaError,
    load_checkpoint,
    load_timeseries,
    parse_spec,
    render,
)

CSV_COLS = "t,dt,E1,E2,E3,Ea,E,Ecal,blowup_B,holo_residual"


def write_csv(path: Path, rows, with_pinch=False, stop="completed"):
    cols = CSV_COLS + (",d_pinch" if with_pinch else "") + ",stop_reason"
    lines = [cols]
    for i, r in enumerate(rows):
        tail = stop if i == len(rows) - 1 else ""
        lines.append(",".join(f"{v:.17g}" for v in r) + f",{tail}")
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def trivial_rows(nrow=6, with_pinch=False):
    rows = []
    for i in range(nrow):
        t = 0.1 * i
        base = [t, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        if with_pinch:
            base.append(4.0 - 0.2 * t)
        rows.append(base)
    return rows


def write_checkpoint(path: Path, n=64, mode="disc", labels=(0.0, np.pi)):
    nodes = 2 * np.pi * (np.arange(n) + 0.5) / n
    z = np.exp(1j * nodes)
    zt = -0.1 * np.exp(1j * nodes)
    payload = {
        "format": "crestwave-checkpoint-1",
        "mode": mode, "g": 0.0, "t": 0.25, "step": 10,
        "n": n, "offset": 0.5, "cutoff": n // 3, "cell_weight": 1.0,
        "z_re": list(z.real), "z_im": list(z.imag),
        "ztbar_re": list(zt.real), "ztbar_im": list(zt.imag),
        "label_alphas": list(labels), "label_pos": list(labels),
    }
    path.write_text(json.dumps(payload))
    return str(path)


class TestSchemas:
    def test_load_timeseries(self, tmp_path):
        p = write_csv(tmp_path / "a.csv", trivial_rows())
        data = load_timeseries(p)
        assert data["stop_reason"] == "completed"
        assert len(data["t"]) == 6

    def test_missing_columns(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("t,E1,stop_reason\n0,0,\n")
        with pytest.raises(SchemaError):
            load_timeseries(str(p))

    def test_checkpoint_schema(self, tmp_path):
        p = write_checkpoint(tmp_path / "ck.json")
        ck = load_checkpoint(p)
        assert ck["mode"] == "disc" and ck["n"] == 64

    def test_checkpoint_rejects_other_json(self, tmp_path):
        p = tmp_path / "x.json"
        p.write_text(json.dumps({"hello": 1}))
        with pytest.raises(SchemaError):
            load_checkpoint(str(p))

    def test_spec_validation(self, tmp_path):
        with pytest.raises(SchemaError):
            FigureSpec(which="nope", out="x.png")
        with pytest.raises(SchemaError):
            FigureSpec(which="energies", out="x.png")  # csv missing
        spec_file = tmp_path / "s.cfg"
        spec_file.write_text("which = blowup\nunknown = 3\nout = x.png\n")
        with pytest.raises(SchemaError):
            parse_spec(str(spec_file))


class TestRenderKinds:
    def test_trivial_energy_curves(self, tmp_path):
        csv = write_csv(tmp_path / "run.csv", trivial_rows())
        out = render(FigureSpec(which="energies", out=str(tmp_path / "e.png"), csv=csv))
        assert Path(out).stat().st_size > 0

    def test_blowup(self, tmp_path):
        csv = write_csv(tmp_path / "run.csv", trivial_rows())
        render(FigureSpec(which="blowup", out=str(tmp_path / "b.png"), csv=csv))
        assert (tmp_path / "b.png").exists()

    def test_pinch_two_lines(self, tmp_path):
        csv = write_csv(tmp_path / "p.csv", trivial_rows(with_pinch=True),
                        with_pinch=True, stop="resolution_lost")
        render(FigureSpec(which="pinch", out=str(tmp_path / "p.png"), csv=csv))
        assert (tmp_path / "p.png").exists()

    def test_pinch_requires_column(self, tmp_path):
        csv = write_csv(tmp_path / "np.csv", trivial_rows())
        with pytest.raises(SchemaError):
            render(FigureSpec(which="pinch", out=str(tmp_path / "x.png"), csv=csv))

    def test_interface_with_markers(self, tmp_path):
        ck = write_checkpoint(tmp_path / "ck.json")
        render(FigureSpec(which="interface", out=str(tmp_path / "i.png"), checkpoint=ck))
        assert (tmp_path / "i.png").exists()

    def test_spectrum(self, tmp_path):
        ck = write_checkpoint(tmp_path / "ck.json")
        render(FigureSpec(which="spectrum", out=str(tmp_path / "s.png"), checkpoint=ck))
        assert (tmp_path / "s.png").exists()

    def test_inputs_unmodified(self, tmp_path):
        csv = Path(write_csv(tmp_path / "run.csv", trivial_rows()))
        before = csv.read_bytes()
        render(FigureSpec(which="energies", out=str(tmp_path / "e.png"), csv=str(csv)))
        assert csv.read_bytes() == before


class TestDeterminism:
    def test_byte_identical_rerender(self, tmp_path):
        csv = write_csv(tmp_path / "run.csv", trivial_rows())
        ck = write_checkpoint(tmp_path / "ck.json")
        for which, kwargs in (
            ("energies", {"csv": csv}),
            ("blowup", {"csv": csv, "logy": True}),
            ("interface", {"checkpoint": ck}),
            ("spectrum", {"checkpoint": ck}),
        ):
            a = render(FigureSpec(which=which, out=str(tmp_path / "a.png"), **kwargs))
            b = render(FigureSpec(which=which, out=str(tmp_path / "b.png"), **kwargs))
            assert Path(a).read_bytes() == Path(b).read_bytes(), which


class TestCli:
    def test_spec_file_roundtrip(self, tmp_path):
        csv = write_csv(tmp_path / "run.csv", trivial_rows())
        spec = tmp_path / "fig.cfg"
        spec.write_text(f"which = energies\ncsv = {csv}\nout = {tmp_path/'o.png'}\nlogy = 0\n")
        assert main(["--spec", str(spec), "--quiet"]) == 0
        assert (tmp_path / "o.png").exists()

    def test_bad_spec_exit_code(self, tmp_path):
        spec = tmp_path / "fig.cfg"
        spec.write_text("which = energies\nout = x.png\n")  # csv missing
        assert main(["--spec", str(spec), "--quiet"]) == 2


@pytest.fixture(scope="module")
def run_outputs(tmp_path_factory):
    outdir = tmp_path_factory.mktemp("runs")
    cfg = outdir / "pinch.cfg"
    cfg.write_text(
        "mode = disc\ninit.kind = crest_pinch\ninit.nu = 0.3\ninit.eps = 0.1\n"
        "n_grid = 256\nt_final = 0.2\ndt_max = 0.02\noutput.every = 2\n"
        "output.path = pinchrun\ncheckpoint.every = 4\nlabels = 0.5\n")
    proc = subprocess.run(
        [sys.executable, "-m", "crestwave.cli", "simulate",
         "--config", str(cfg), "--out", str(outdir), "--quiet"],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    csv = outdir / "pinchrun.csv"
    ck = sorted(outdir.glob("pinchrun_ck*.json"))[0]
    return str(csv), str(ck)


class TestEndToEnd:
    """[SECONDARY] acceptance: render all five figure kinds from real
    simulator outputs, deterministically (byte-identical across runs)."""

    def test_all_five_kinds_deterministic(self, run_outputs, tmp_path):
        csv, ck = run_outputs
        specs = [
            FigureSpec(which="energies", out="", csv=csv, logy=True),
            FigureSpec(which="blowup", out="", csv=csv),
            FigureSpec(which="pinch", out="", csv=csv),
            FigureSpec(which="interface", out="", checkpoint=ck),
            FigureSpec(which="spectrum", out="", checkpoint=ck),
        ]
        all_ok = True
        for spec in specs:
            import dataclasses
            a = render(dataclasses.replace(spec, out=str(tmp_path / f"{spec.which}_a.png")))
            b = render(dataclasses.replace(spec, out=str(tmp_path / f"{spec.which}_b.png")))
            same = Path(a).read_bytes() == Path(b).read_bytes()
            all_ok &= same and Path(a).stat().st_size > 0
            print(f"[{'PASS' if same else 'FAIL'}] secondary figure {spec.which}: "
                  f"rendered, byte-identical across invocations: {same}")
        assert all_ok
