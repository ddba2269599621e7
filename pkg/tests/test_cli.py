"""Config parsing, checkpoint format, experiment execution, entry point."""

import math
import struct

import numpy as np
import pytest

from hallmhd.cli import (
    CSV_COLUMNS,
    CheckpointHeaderError,
    CheckpointSizeError,
    CheckpointVersionError,
    ConfigError,
    execute,
    initial_state,
    main,
    parse_config,
    read_checkpoint,
    verify,
    write_checkpoint,
)
from hallmhd.dynamics import State
from hallmhd.fields import make_grid, random_bandlimited

BASE_ENTRIES = {
    "grid.n": "16",
    "params.mu": "0.5",
    "params.gamma": "0.5",
    "params.dt": "0.01",
    "params.t_end": "0.1",
    "init.kind": "random",
    "init.amplitude": "0.4",
    "init.seed": "3",
    "init.kmax": "2",
    "output.sample_interval": "2",
}


def _config_text(**overrides):
    entries = dict(BASE_ENTRIES)
    entries.update({k.replace("__", "."): v for k, v in overrides.items()})
    lines = ["# minimal nonlinear run"]
    lines += [f"{k} = {v}" for k, v in entries.items() if v is not None]
    return "\n".join(lines) + "\n"


BASE_CONFIG = _config_text()


def test_parse_config_defaults():
    cfg = parse_config(BASE_CONFIG)
    assert cfg.grid_n == 16
    assert cfg.grid_length == pytest.approx(2 * math.pi)
    assert cfg.grid_dealias == pytest.approx(2 / 3)
    assert cfg.scheme == "if_rk4"
    assert cfg.mollifier_level is None
    assert cfg.hall_on
    assert cfg.mode == "run"
    assert cfg.deltas == (1e-2, 1e-4, 1e-6)
    assert cfg.checkpoint_interval == 0


@pytest.mark.parametrize(
    "overrides,fragment",
    [
        ({"bogus__key": "1"}, "unknown key"),
        ({"grid__n": "15"}, "even"),
        ({"grid__n": "banana"}, "int"),
        ({"params__mu": "-1"}, "must be > 0"),
        ({"params__scheme": "euler"}, "scheme"),
        ({"init__kind": "vortex"}, "init.kind"),
        ({"experiment__mode": "dance"}, "experiment.mode"),
        ({"grid__dealias": "2"}, r"\(0, 1\]"),
        ({"output__sample_interval": "0"}, "must be > 0"),
        ({"output__checkpoint_interval": "3"}, "multiple"),
    ],
)
def test_parse_config_errors(overrides, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(_config_text(**overrides))


def test_parse_config_syntax_and_duplicates():
    with pytest.raises(ConfigError, match="section.key"):
        parse_config(BASE_CONFIG + "no_equals_sign_here\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config(BASE_CONFIG + "params.mu = 0.7\n")


def test_parse_config_missing_required():
    with pytest.raises(ConfigError, match="missing required"):
        parse_config("grid.n = 16\n")


def test_initial_state_kinds():
    cfg = parse_config(BASE_CONFIG)
    g = make_grid(16)
    from dataclasses import replace

    for kind in ("zero", "shear_u", "shear_b", "random", "random_u", "random_b"):
        st = initial_state(replace(cfg, init_kind=kind), g)
        assert st.t == 0.0
    zu = initial_state(replace(cfg, init_kind="random_b"), g)
    assert np.max(np.abs(zu.u.c)) == 0.0


def test_checkpoint_roundtrip_bit_exact(tmp_path):
    g = make_grid(16)
    st = State(
        u=random_bandlimited(g, 1, 3, divergence_free=True),
        b=random_bandlimited(g, 2, 3),
        t=1.25,
    )
    path = tmp_path / "state.bin"
    write_checkpoint(st, path, mu=0.5, gamma=0.25)
    back, mu, gamma = read_checkpoint(path)
    assert (mu, gamma) == (0.5, 0.25)
    assert back.t == 1.25
    assert back.grid.n == 16
    assert np.array_equal(back.u.c, st.u.c)
    assert np.array_equal(back.b.c, st.b.c)
    # Writing the read state reproduces the file byte for byte.
    path2 = tmp_path / "state2.bin"
    write_checkpoint(back, path2, mu=mu, gamma=gamma)
    assert path.read_bytes() == path2.read_bytes()


def test_checkpoint_error_taxonomy(tmp_path):
    g = make_grid(8)
    st = State(u=random_bandlimited(g, 1, 2), b=random_bandlimited(g, 2, 2))
    path = tmp_path / "ok.bin"
    write_checkpoint(st, path, 1.0, 1.0)
    blob = path.read_bytes()

    bad_magic = tmp_path / "magic.bin"
    bad_magic.write_bytes(b"XXXX" + blob[4:])
    with pytest.raises(CheckpointHeaderError):
        read_checkpoint(bad_magic)

    bad_version = tmp_path / "version.bin"
    bad_version.write_bytes(blob[:4] + struct.pack("<I", 99) + blob[8:])
    with pytest.raises(CheckpointVersionError):
        read_checkpoint(bad_version)

    truncated = tmp_path / "short.bin"
    truncated.write_bytes(blob[:-100])
    with pytest.raises(CheckpointSizeError):
        read_checkpoint(truncated)
    tiny = tmp_path / "tiny.bin"
    tiny.write_bytes(blob[:10])
    with pytest.raises(CheckpointSizeError):
        read_checkpoint(tiny)


def _run_config(tmp_path, **overrides):
    overrides.setdefault("output__dir", str(tmp_path / "out"))
    return parse_config(_config_text(**overrides))


def test_execute_run_outputs(tmp_path):
    cfg = _run_config(tmp_path, output__checkpoint_interval="4")
    assert execute(cfg) == 0
    out = tmp_path / "out"
    csv = (out / "timeseries.csv").read_text().splitlines()
    assert csv[0] == ",".join(CSV_COLUMNS)
    assert len(csv) == 1 + 6  # t = 0 plus samples at steps 2,4,6,8,10
    first = csv[1].split(",")
    assert len(first) == len(CSV_COLUMNS)
    assert float(first[0]) == 0.0
    assert (out / "summary.txt").exists()
    assert (out / "plot_E.dat").exists()
    st, mu, gamma = read_checkpoint(out / "checkpoint_final.bin")
    assert st.t == pytest.approx(0.1)
    assert (out / "checkpoint_000000.bin").exists()
    summary = (out / "summary.txt").read_text()
    assert "status = ok" in summary
    assert "blowup_classification" in summary


def test_execute_rerun_byte_identical(tmp_path):
    cfg = _run_config(tmp_path)
    assert execute(cfg) == 0
    first = (tmp_path / "out" / "timeseries.csv").read_bytes()
    assert execute(cfg) == 0
    second = (tmp_path / "out" / "timeseries.csv").read_bytes()
    assert first == second


def test_execute_budget_mode(tmp_path):
    cfg = _run_config(tmp_path, experiment__mode="budget", output__sample_interval="1")
    assert execute(cfg) == 0
    summary = (tmp_path / "out" / "summary.txt").read_text()
    assert "budget_l0_max_residual" in summary


def test_execute_smalldata_mode(tmp_path):
    cfg = _run_config(tmp_path, experiment__mode="smalldata", init__amplitude="0.01")
    assert execute(cfg) == 0
    summary = (tmp_path / "out" / "summary.txt").read_text()
    assert "bound_satisfied = True" in summary


def test_execute_stability_mode(tmp_path):
    cfg = _run_config(
        tmp_path,
        experiment__mode="stability",
        experiment__deltas="1e-2,1e-4",
        init__kind="random_u",
    )
    assert execute(cfg) == 0
    rows = (tmp_path / "out" / "stability.csv").read_text().splitlines()
    assert rows[0].startswith("delta,")
    assert len(rows) == 3


def test_execute_mollifier_mode(tmp_path):
    cfg = _run_config(tmp_path, experiment__mode="mollifier", experiment__levels="2,4,8")
    assert execute(cfg) == 0
    rows = (tmp_path / "out" / "mollifier.csv").read_text().splitlines()
    assert rows[0] == "level,error"
    errs = [float(r.split(",")[1]) for r in rows[1:]]
    assert errs[0] >= errs[1] >= errs[2]


def test_execute_solver_failure_exit_code(tmp_path):
    text = (
        f"grid.n = 8\nparams.mu = 1e-3\nparams.gamma = 1e-3\n"
        f"params.dt = 1.0\nparams.t_end = 30\ninit.kind = random\n"
        f"init.amplitude = 1e5\ninit.kmax = 2\noutput.dir = {tmp_path / 'fail'}\n"
    )
    cfg = parse_config(text)
    with np.errstate(all="ignore"):
        code = execute(cfg)
    assert code == 2
    summary = (tmp_path / "fail" / "summary.txt").read_text()
    assert "solver_failure" in summary


def test_main_run_and_exit_codes(tmp_path, capsys):
    cfg_path = tmp_path / "good.cfg"
    cfg_path.write_text(BASE_CONFIG + f"output.dir = {tmp_path / 'o'}\n")
    assert main(["run", str(cfg_path)]) == 0

    bad = tmp_path / "bad.cfg"
    bad.write_text("grid.n = nope\n")
    assert main(["run", str(bad)]) == 1
    assert main(["run", str(tmp_path / "missing.cfg")]) == 1

    ckpt = tmp_path / "o" / "checkpoint_final.bin"
    assert main(["inspect", str(ckpt)]) == 0
    captured = capsys.readouterr()
    assert "n = 16" in captured.out
    assert main(["inspect", str(tmp_path / "nope.bin")]) == 1


def test_verify_passes():
    assert verify(n=16, seeds=2, quiet=True) == 0
