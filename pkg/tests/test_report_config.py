import numpy as np
import pytest

from nkakeya.config import load_config
from nkakeya.errors import ConfigError
from nkakeya.report import endpoint_svg_from_csv, fmt, loglog_svg, read_rows, write_rows


def test_fmt_shortest_round_trip():
    assert fmt(0.1) == "0.1"
    assert fmt(np.float64(1 / 3)) == repr(1 / 3)
    assert float(fmt(np.float64(2.0) ** -40)) == 2.0**-40
    assert fmt(None) == "" and fmt(True) == "true" and fmt(np.int64(7)) == "7"
    assert fmt([0.5, 2]) == "0.5 2.0"


def test_csv_round_trip(tmp_path):
    p = write_rows(tmp_path / "a.csv", ["x", "y"], [[1.5, "a,b"], [None, 2]])
    assert p.read_bytes() == b'x,y\n1.5,"a,b"\n,2\n'
    header, rows = read_rows(p)
    assert header == ["x", "y"] and rows[0]["y"] == "a,b"


def test_svg_is_deterministic_and_skips_bad_points():
    a = loglog_svg([0.25, 0.125, -1.0], [2.0, 2.2, 3.0], title="t", xlabel="x", ylabel="y")
    b = loglog_svg([0.25, 0.125], [2.0, 2.2], title="t", xlabel="x", ylabel="y")
    assert a == b
    assert a.startswith('<?xml version="1.0"') and a.count("<circle") == 2


def test_svg_from_csv_is_a_pure_function(tmp_path):
    write_rows(tmp_path / "e.csv", ["delta_achieved", "lb"], [[0.24, 2.0], [0.2, 2.2], [None, None]])
    one = endpoint_svg_from_csv(tmp_path / "e.csv", tmp_path / "1.svg").read_bytes()
    two = endpoint_svg_from_csv(tmp_path / "e.csv", tmp_path / "2.svg").read_bytes()
    assert one == two and one.count(b"<circle") == 2


def test_default_config():
    cfg = load_config()
    assert cfg.manifold.d == 2 and cfg.schedule == [0.25, 0.125] and cfg.seed == 7


def test_toml_config_and_overrides(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text(
        'seed = 3\nquad_n = 64\n[manifold]\npreset = "codim2"\n[endpoint]\nschedule = [0.5, 0.4]\nr_max = 32\n'
        "[box]\nradius = 0.2\n"
    )
    cfg = load_config(p, seed=9, out=tmp_path / "o")
    assert cfg.seed == 9 and cfg.quad_n == 64 and cfg.manifold.n == 2
    assert cfg.budget.r_max == 32 and cfg.box.radius == 0.2 and cfg.box.kind == "ball"
    assert cfg.schedule == [0.5, 0.4]


def test_explicit_manifold_table(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("[manifold]\nn = 1\nd = 2\nQ = [[[2.0]]]\n")
    assert load_config(p).manifold.Q[0, 0, 0] == 2.0


@pytest.mark.parametrize(
    "text",
    [
        "[endpoint]\nschedule = [0.1, 0.2]\n",
        "[endpoint]\nschedule = [1.5]\n",
        "quad_n = 4\n",
        "res = 1000000\n",
        '[manifold]\npreset = "torus"\n',
        "[manifold]\nn = 1\nd = 2\nQ = [[[1.0, 2.0]]]\n",
        "this is not toml",
    ],
)
def test_config_errors(tmp_path, text):
    p = tmp_path / "c.toml"
    p.write_text(text)
    with pytest.raises(ConfigError):
        load_config(p)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.toml")
