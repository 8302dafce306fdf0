import pytest

from capbraid import config as cfgmod
from capbraid.config import ConfigError, RunConfig

GOOD = """\
[surface]
kind = "torus"
size = 1.0

[hamiltonian]
expr = "0.05*sin(2*pi*x)*sin(2*pi*y)"

[flow]
seed_grid = 12
"""


def test_loads_and_round_trip():
    cfg = cfgmod.loads(GOOD)
    assert cfg.surface == "torus" and cfg.flow.seed_grid == 12
    again = cfgmod.loads(cfg.dumps())
    assert again == cfg
    assert again.digest() == cfg.digest()


def test_digest_ignores_threads_and_output():
    cfg = cfgmod.loads(GOOD)
    assert cfg.with_threads(4).digest() == cfg.digest()
    assert cfgmod.loads(GOOD + '\n[run]\nout = "elsewhere"\n').digest() == cfg.digest()
    assert cfgmod.loads(GOOD.replace("12", "13")).digest() != cfg.digest()


@pytest.mark.parametrize("name", cfgmod.SHIPPED)
def test_shipped_configs_load(name):
    cfg = cfgmod.shipped(name)
    assert cfg.name == name
    assert cfgmod.loads(cfg.dumps()) == cfg
    cfg.hamiltonian_spec()


def test_strict_profile_tightens_flow():
    cfg = cfgmod.loads(GOOD)
    strict = cfg.with_profile("strict")
    assert strict.flow.steps >= cfg.flow.steps
    assert strict.flow.newton_tol <= cfg.flow.newton_tol
    assert cfg.with_profile("default") is cfg
    with pytest.raises(ConfigError):
        cfg.with_profile("sloppy")


@pytest.mark.parametrize("text,line,col,fragment", [
    (GOOD + "foo = 3\n", 10, 1, "unknown key 'foo'"),
    (GOOD.replace("[flow]", "[flw]"), 8, 1, "unknown section"),
    (GOOD.replace("sin(2*pi*y)", "sin(2*pi*y"), 6, 1, "hamiltonian"),
    ("[surface]\nkind = \n", 2, None, ""),
    (GOOD.replace('"torus"', '"klein"'), 1, 1, "surface kind"),
])
def test_errors_carry_location(text, line, col, fragment):
    with pytest.raises(ConfigError) as info:
        cfgmod.loads(text, "bad.toml")
    err = info.value
    assert err.line == line
    if col is not None:
        assert err.column == col
    assert fragment in err.message
    d = err.to_dict()
    assert d["source"] == "bad.toml" and d["line"] == line


def test_sphere_tables_must_agree():
    text = '[surface]\nkind = "sphere"\n[hamiltonian]\nnorth = "x"\nsouth = "y"\n'
    with pytest.raises(ConfigError):
        cfgmod.loads(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        cfgmod.load(tmp_path / "nope.toml")


def test_invalid_values_rejected():
    with pytest.raises(ConfigError):
        RunConfig(size=-1.0)
    with pytest.raises(ConfigError):
        RunConfig(window=-1)
