import csv
import io
import math
import struct

import pytest

from hallmhd.cli import main
from hallmhd.fields import VectorField, random_solenoidal
from hallmhd.io import (
    ConfigError,
    SnapshotError,
    format_float,
    initial_state,
    parse_config,
    read_snapshot,
    write_csv,
    write_snapshot,
)
from hallmhd.mhd import State, SystemSpec
from hallmhd.spectral import Grid

BASE = """\
[system]
name = A
nu = 0.1
eta = 0.1
epsilon = 1.0

[grid]
n = 16

[initial]
kind = random
seed = 7
band_limit = 3
amplitude_u = 0.5
amplitude_b = 0.5

[stepper]
dt = 0.01
t_end = {t_end}

[diagnostics]
criteria = grad_b3:4, j3:4
cadence = 1

[output]
directory = {out}
"""


def read_rows(path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.reader(lines))


def write_config(tmp_path, t_end=0.05, out="out", text=None):
    cfg = tmp_path / "run.ini"
    cfg.write_text(text if text is not None else BASE.format(t_end=t_end, out=out))
    return cfg


# ---------------------------------------------------------------------------
# snapshots


@pytest.mark.parametrize("dim,n,system", [(2, 16, "B"), (3, 8, "D")])
def test_snapshot_round_trip_bit_exact(tmp_path, dim, n, system):
    g = Grid(dim, n)
    s = State(random_solenoidal(g, 2, [1, 0], "u"), random_solenoidal(g, 2, [1, 1], "b"), t=0.125)
    spec = SystemSpec(system, nu=0.3, eta_h=0.2, eta_v=0.7, epsilon=0.9)
    path = tmp_path / "s.snap"
    write_snapshot(path, s, spec)
    s2, spec2 = read_snapshot(path)
    assert s2.t == s.t and spec2 == spec
    assert s2.u.coeffs.tobytes() == s.u.coeffs.tobytes()
    assert s2.b.coeffs.tobytes() == s.b.coeffs.tobytes()
    path2 = tmp_path / "s2.snap"
    write_snapshot(path2, s2, spec2)
    assert path.read_bytes() == path2.read_bytes()


def test_snapshot_truncated(tmp_path):
    g = Grid(2, 8)
    path = tmp_path / "s.snap"
    write_snapshot(path, State(VectorField.zeros(g, "u"), VectorField.zeros(g, "b")), SystemSpec("A"))
    data = path.read_bytes()
    for cut in (10, len(data) - 1):
        path.write_bytes(data[:cut])
        with pytest.raises(SnapshotError):
            read_snapshot(path)


def test_snapshot_bad_version_and_magic(tmp_path):
    g = Grid(2, 8)
    path = tmp_path / "s.snap"
    write_snapshot(path, State(VectorField.zeros(g, "u"), VectorField.zeros(g, "b")), SystemSpec("A"))
    data = bytearray(path.read_bytes())
    bad = bytearray(data)
    struct.pack_into("<I", bad, 8, 99)
    path.write_bytes(bytes(bad))
    with pytest.raises(SnapshotError, match="version"):
        read_snapshot(path)
    bad = bytearray(data)
    bad[:8] = b"NOTASNAP"
    path.write_bytes(bytes(bad))
    with pytest.raises(SnapshotError):
        read_snapshot(path)


# ---------------------------------------------------------------------------
# configuration


def test_config_parses(tmp_path):
    cfg = parse_config(BASE.format(t_end=1.0, out="o"), str(tmp_path / "x.ini"), env={})
    assert cfg.spec == SystemSpec("A", nu=0.1, eta=0.1, epsilon=1.0)
    assert cfg.grid == Grid(2, 16)
    assert [c.name for c in cfg.criteria] == ["grad_b3_L4_r4", "j3_L4_r4"]
    assert cfg.output == tmp_path / "o"


def test_output_dir_env_override(tmp_path):
    cfg = parse_config(BASE.format(t_end=1.0, out="o"), "x.ini", env={"HALLMHD_OUTPUT_DIR": str(tmp_path / "e")})
    assert cfg.output == tmp_path / "e"


@pytest.mark.parametrize(
    "old,new,line,needle",
    [
        ("dt = 0.01", "dt = -1", 18, "dt"),
        ("dt = 0.01", "dt = abc", 18, "cannot parse"),
        ("name = A", "name = Q", 2, "unknown system"),
        ("n = 16", "n = 15", 8, "n"),
        ("band_limit = 3", "band_limit = 6", 13, "band limit"),
        ("criteria = grad_b3:4, j3:4", "criteria = j3:4:3", 22, "exceeds 1"),
        ("cadence = 1", "cadence = 0", 23, "cadence"),
        ("eta = 0.1", "eta_h = 0.1", 4, "applies only"),
        ("epsilon = 1.0", "epsilon = 1.0\nbogus = 2", 6, "unknown key"),
    ],
)
def test_config_errors_are_line_anchored(old, new, line, needle):
    text = BASE.format(t_end=1.0, out="o").replace(old, new)
    with pytest.raises(ConfigError) as exc:
        parse_config(text, "cfg.ini", env={})
    msg = str(exc.value)
    assert msg.startswith(f"cfg.ini:{line}:"), msg
    assert needle in msg


def test_config_requires_eta_pair_for_c():
    text = BASE.format(t_end=1.0, out="o").replace("name = A", "name = C")
    with pytest.raises(ConfigError, match="eta"):
        parse_config(text, "cfg.ini", env={})


def test_config_missing_required_key():
    text = BASE.format(t_end=1.0, out="o").replace("t_end = 1.0\n", "")
    with pytest.raises(ConfigError, match="t_end: required"):
        parse_config(text, "cfg.ini", env={})


def test_initial_h1_normalization():
    text = BASE.format(t_end=1.0, out="o") + ""
    text = text.replace("amplitude_b = 0.5", "amplitude_b = 0.5\nnorm = h1")
    s, _ = initial_state(parse_config(text, "cfg.ini", env={}))
    for f in (s.u, s.b):
        assert math.sqrt(f.l2_norm() ** 2 + f.seminorm(1.0) ** 2) == pytest.approx(0.5, rel=1e-12)


# ---------------------------------------------------------------------------
# CSV


def test_format_float_17_digits():
    assert format_float(1.0) == "1.0000000000000000e+00"
    assert float(format_float(math.pi)) == math.pi


def test_write_csv_cells():
    buf = io.StringIO()
    write_csv(buf, ["a", "b", "c"], [[1, 0.5, True]], comment="hi")
    assert buf.getvalue() == "# hi\na,b,c\n1,5.0000000000000000e-01,true\n"


# ---------------------------------------------------------------------------
# cli


def test_run_writes_outputs(tmp_path):
    cfg = write_config(tmp_path, t_end=0.05)
    assert main(["run", "--config", str(cfg)]) == 0
    out = tmp_path / "out"
    assert sorted(p.name for p in out.iterdir()) == ["final.snap", "initial.snap", "timeseries.csv"]
    rows = read_rows(out / "timeseries.csv")
    header, body = rows[0], rows[1:]
    assert len(body) == 6 and body[-1][-1] == "completed"
    col = header.index("j3_L4_r4_integral")
    vals = [float(r[col]) for r in body]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    s, _ = read_snapshot(out / "final.snap")
    assert s.t == pytest.approx(0.05)


def test_run_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    for d in (a, b):
        assert main(["run", "--config", str(write_config(d, t_end=0.03))]) == 0
    assert (a / "out" / "timeseries.csv").read_bytes() == (b / "out" / "timeseries.csv").read_bytes()
    assert (a / "out" / "final.snap").read_bytes() == (b / "out" / "final.snap").read_bytes()


def test_run_t_end_zero_initial_only(tmp_path):
    cfg = write_config(tmp_path, t_end=0.0)
    assert main(["run", "--config", str(cfg)]) == 0
    out = tmp_path / "out"
    assert sorted(p.name for p in out.iterdir()) == ["initial.snap", "timeseries.csv"]
    body = read_rows(out / "timeseries.csv")[1:]
    assert len(body) == 1 and body[0][-1] == "completed"


def test_run_malformed_config_no_outputs(tmp_path, capsys):
    text = BASE.format(t_end=0.05, out="out").replace("dt = 0.01", "dt = 0")
    cfg = write_config(tmp_path, text=text)
    assert main(["run", "--config", str(cfg)]) == 1
    assert not (tmp_path / "out").exists()
    assert "run.ini:18:" in capsys.readouterr().err


def test_run_missing_config(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.ini")]) == 1


def test_run_step_limit_and_blowup_exit_codes(tmp_path):
    text = BASE.format(t_end=0.05, out="o1").replace("t_end", "max_steps = 2\nt_end")
    assert main(["run", "--config", str(write_config(tmp_path, text=text))]) == 4
    text = BASE.format(t_end=0.05, out="o2").replace("t_end", "blowup_guard = 1e-6\nt_end")
    assert main(["run", "--config", str(write_config(tmp_path, text=text))]) == 3
    assert (tmp_path / "o2" / "timeseries.csv").exists()


@pytest.mark.parametrize("suite", ["identities2d", "identities3d", "divcurl", "residuals"])
def test_verify_suites_pass(tmp_path, suite):
    out = tmp_path / "r.csv"
    assert main(["verify", "--suite", suite, "--trials", "2", "--seed", "1", "--out", str(out)]) == 0
    rows = read_rows(out)
    assert rows[0] == ["suite", "identity", "seed", "value", "normalizer", "tolerance", "pass"]
    assert rows[1:] and all(r[-1] == "true" for r in rows[1:])
    assert {int(r[2]) for r in rows[1:]} == {1, 2}


def test_verify_zero_trials_vacuous(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["verify", "--trials", "0", "--out", str(out)]) == 0
    assert len(read_rows(out)) == 1


def test_verify_identity_tags(tmp_path):
    out = tmp_path / "r.csv"
    main(["verify", "--suite", "identities2d", "--trials", "1", "--out", str(out)])
    tags = [r[1] for r in read_rows(out)[1:]]
    assert tags == ["est19", "est20", "est16_22", "est11", "hall_rewrite"]


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "--trials", "-1"],
        ["verify", "--suite", "nope"],
        ["verify", "--n", "6", "--suite", "identities2d", "--trials", "1"],
        ["frobnicate"],
        ["analyze", "--snapshot", "x"],
    ],
)
def test_usage_errors(argv, capsys):
    assert main(argv) == 2


def zero_snapshot(tmp_path, dim=2, n=16):
    g = Grid(dim, n)
    path = tmp_path / "zero.snap"
    write_snapshot(path, State(VectorField.zeros(g, "u"), VectorField.zeros(g, "b")), SystemSpec("A" if dim == 2 else "D"))
    return path


@pytest.mark.parametrize("what,dim", [("hall2d", 2), ("aux", 2), ("sample", 2), ("hall3d", 3)])
def test_analyze_zero_snapshot_all_zero(tmp_path, what, dim):
    snap = zero_snapshot(tmp_path, dim, 16 if dim == 2 else 8)
    out = tmp_path / "a.csv"
    assert main(["analyze", "--snapshot", str(snap), "--what", what, "--out", str(out)]) == 0
    body = read_rows(out)[1:]
    assert body
    assert all(float(v) == 0.0 for r in body for v in r[1:])


def test_analyze_hall2d_after_run(tmp_path):
    cfg = write_config(tmp_path, t_end=0.02)
    assert main(["run", "--config", str(cfg)]) == 0
    out = tmp_path / "h.csv"
    assert main(["analyze", "--snapshot", str(tmp_path / "out" / "final.snap"), "--what", "hall2d", "--out", str(out)]) == 0
    rows = read_rows(out)[1:]
    terms = [float(r[1]) for r in rows if r[0] != "sum"]
    total = next(float(r[1]) for r in rows if r[0] == "sum")
    direct = float(rows[0][2])
    assert len(terms) == 12
    assert abs(total - direct) <= 1e-9 * max(abs(t) for t in terms)
    assert abs(direct) > 0


def test_analyze_is_deterministic(tmp_path):
    g = Grid(2, 16)
    snap = tmp_path / "s.snap"
    s = State(random_solenoidal(g, 3, [4, 0], "u"), random_solenoidal(g, 3, [4, 1], "b"))
    write_snapshot(snap, s, SystemSpec("A"))
    outs = []
    for i in range(2):
        out = tmp_path / f"a{i}.csv"
        assert main(["analyze", "--snapshot", str(snap), "--what", "aux", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    rows = {r[0]: float(r[1]) for r in read_rows(tmp_path / "a0.csv")[1:]}
    assert rows["j3_reconstruction_error"] <= 1e-12


def test_analyze_bad_snapshot(tmp_path):
    snap = zero_snapshot(tmp_path)
    snap.write_bytes(snap.read_bytes()[:-8])
    assert main(["analyze", "--snapshot", str(snap), "--what", "sample"]) == 1
    assert main(["analyze", "--snapshot", str(tmp_path / "missing"), "--what", "sample"]) == 1


def test_analyze_dimension_mismatch(tmp_path):
    snap = zero_snapshot(tmp_path)
    assert main(["analyze", "--snapshot", str(snap), "--what", "hall3d"]) == 1


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "hallmhd", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("hallmhd")
