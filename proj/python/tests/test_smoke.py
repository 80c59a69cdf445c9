import math

import pytest
import yaml

import lndev

FLAT = """\
task: check-identity
space: {builtin: flat-cartesian, n: 3}
fields:
  xi: {basis: coordinate, components: ["x0*x1", "sin(x2)", "1"]}
"""

JACOBI = """\
task: integrate
space: {builtin: sphere}
trajectory: {x0: [1.5707963267948966, 0], u0: [0, 1], s_range: [0, 1.5]}
deviation: {xi0: [0.001, 0], V0: [0, 0], condition: free-particles}
numerics: {step: 0.005, samples: 31}
"""


def checks(report):
    return {c["name"]: c for c in yaml.safe_load(report)["checks"]}


def test_names():
    assert "sphere" in lndev.builtin_names()
    assert lndev.task_names()[0] == "check-identity"


def test_check_identity_flat():
    r = lndev.run_scenario(FLAT, "check-identity")
    assert r["exit_code"] == 0
    assert checks(r["report"])["identity"]["residual"] < 1e-12


def test_sphere_jacobi_csv():
    r = lndev.run_scenario(JACOBI, "integrate")
    assert r["exit_code"] == 0
    rows = r["csv"].strip().split("\n")
    header = rows[0].split(",")
    assert header[0] == "s" and header[-1] == "res_firstintegral"
    i = header.index("xi_0")
    for row in rows[1:]:
        cols = [float(v) for v in row.split(",")]
        assert abs(cols[i] - 0.001 * math.cos(cols[0])) < 1e-7
    # same input, same bytes
    assert lndev.run_scenario(JACOBI, "integrate")["csv"] == r["csv"]


def test_classify_sphere_einstein():
    out = lndev.classify_builtin("sphere", a=2.0)
    e = out["properties"]["einstein"]
    assert e["holds"]
    for f in e["recovered"]:
        assert f[0] == pytest.approx(-0.25, abs=1e-8)
    assert out["expected"]["einstein"]


def test_compensation_tidal():
    cs = lndev.compensation_setup()
    text = (
        "space: {builtin: compensation}\n"
        f"trajectory: {{x0: {cs['point']}, u0: {cs['u']}}}\n"
        f"deviation: {{xi0: {cs['xi']}, V0: [0, 0]}}\n"
        "tidal: {expect_cancel: true}\n"
    )
    r = lndev.run_scenario(text, "tidal")
    assert r["exit_code"] == 0
    c = checks(r["report"])["tidal-sum"]
    assert float(c["residual"]) < 1e-6
    assert float(c["norms"][0]) >= 0.1


def test_errors():
    with pytest.raises(lndev.ParseError, match="metrik"):
        lndev.normalize_scenario("space:\n  builtin: sphere\n  metrik: 1\n")
    with pytest.raises(lndev.ParseError, match="fields.xi"):
        lndev.run_scenario("space: {builtin: sphere}\n", "check-identity")
    with pytest.raises(lndev.ContractError):
        lndev.classify_builtin("torus")
    with pytest.raises(TypeError):
        lndev.classify_builtin("sphere", radius=2.0)


def test_normalize_round_trip():
    once = lndev.normalize_scenario(FLAT)
    assert lndev.normalize_scenario(once) == once
    assert yaml.safe_load(once)["numerics"]["method"] == "rk4-fixed"


def test_format_double():
    assert lndev.format_double(0.1) == "0.10000000000000001"
    assert float(lndev.format_double(math.pi)) == math.pi
