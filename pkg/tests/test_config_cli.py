import csv
import json

import numpy as np
import pytest

from pitepde import config as C
from pitepde import experiments as ex
from pitepde.cli import main
from pitepde.statevector import load_statevector


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_config(tmp_path, text, name="c.json"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


SMALL = {
    "equation": {"d": 1, "n": 4, "a": 0.5, "v": [5.0], "initial": {"kind": "sine"}},
    "time": {"T": 0.01, "dtau": 0.001, "snapshots": [0.005]},
    "reference": {"kind": "analytic"},
    "output": {"N_f": 32},
}


# configuration

@pytest.mark.parametrize("name", sorted(C.PRESETS))
def test_presets_validate(name):
    cfg = C.preset(name)
    assert cfg.to_dict()


def test_defaults_fill_missing_blocks():
    cfg = C.from_dict({"time": {"T": 0.2}})
    assert cfg.time["dtau"] == 1e-3 and cfg.equation["n"] == 6
    assert cfg.pite_config().variant == "aapite"


def test_json_syntax_error_has_line():
    text = '{\n  "time": {\n    "T": 0.1,\n  }\n}\n'
    with pytest.raises(C.ConfigError) as err:
        C.loads(text, "bad.json")
    assert err.value.line == 4
    assert str(err.value).startswith("bad.json:4:")


def test_semantic_errors_point_at_key():
    text = '{\n  "equation": {\n    "d": 1,\n    "a": -2\n  }\n}\n'
    with pytest.raises(C.ConfigError) as err:
        C.loads(text, "c.json")
    assert err.value.line == 4 and "equation.a" in str(err.value)

    text = '{\n  "time": {"T": 0.1},\n  "pite": {\n    "variant": "magic"\n  }\n}\n'
    with pytest.raises(C.ConfigError) as err:
        C.loads(text, "c.json")
    assert err.value.line == 3 and "magic" in str(err.value)


def test_unknown_block_and_key():
    with pytest.raises(C.ConfigError, match="unknown block"):
        C.from_dict({"plots": {}})
    with pytest.raises(C.ConfigError, match="unknown key time.steps"):
        C.from_dict({"time": {"steps": 3}})


def test_cross_field_checks():
    with pytest.raises(C.ConfigError, match="analytic"):
        C.from_dict({"equation": {"potential": {"kind": "box1d"}}, "reference": {"kind": "analytic"}})
    with pytest.raises(C.ConfigError, match="N_f"):
        C.from_dict({"equation": {"n": 6}, "output": {"N_f": 48}})
    with pytest.raises(C.ConfigError, match="snapshots"):
        C.from_dict({"time": {"T": 0.1, "snapshots": [0.2]}})
    with pytest.raises(C.ConfigError, match="m0"):
        C.from_dict({"pite": {"variant": "apite"}})


def test_set_field():
    cfg = C.set_field(C.preset("advection_1d"), "time.dtau", 5e-4)
    assert cfg.time["dtau"] == 5e-4
    with pytest.raises(C.ConfigError):
        C.set_field(cfg, "time.nope", 1)
    with pytest.raises(C.ConfigError):
        C.set_field(cfg, "dtau", 1)


# command line

def test_solve_writes_outputs(tmp_path):
    cfg = write_config(tmp_path, json.dumps(dict(SMALL, output={"N_f": 32, "dump_states": True})))
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    prob = rows(out / "probability.csv")
    assert len(prob) == 11 and prob[0]["cumulative_prob"] == "1.0"
    assert float(prob[-1]["cumulative_prob"]) == pytest.approx(
        float(prob[-1]["step_prob"]) * float(prob[-2]["cumulative_prob"]), rel=1e-12)
    assert (out / "solution_t0p005.csv").exists() and (out / "solution_t0p01.csv").exists()
    kinds = {r["kind"] for r in rows(out / "metrics.csv")}
    assert kinds == {"l2_raw", "l2_normalized", "mse"}
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "solve" and "numpy" in manifest["versions"]
    assert manifest["config"]["time"]["T"] == 0.01
    st = load_statevector(out / "state_t0p01.psv")
    assert np.linalg.norm(st.amps) == pytest.approx(1.0)


def test_reference_flag_overrides(tmp_path):
    cfg = write_config(tmp_path, json.dumps(SMALL))
    out = tmp_path / "o"
    assert main(["solve", "--config", cfg, "--out", str(out), "--reference", "exact_pite"]) == 0
    refs = {r["reference"] for r in rows(out / "metrics.csv")}
    assert refs == {"exact_pite"}


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, '{\n  "time": {\n    "dtau": 0\n  }\n}\n', "bad.json")
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "bad.json:3:" in capsys.readouterr().err
    assert main(["solve", "--out", str(tmp_path / "o")]) == 2
    assert main(["solve", "--config", str(tmp_path / "missing.json")]) == 2


def test_numerical_abort_exit_code(tmp_path, capsys):
    data = {"equation": {"n": 4, "potential": {"kind": "box1d", "height": 10.0}},
            "time": {"T": 0.01, "dtau": 0.001},
            "reference": {"kind": "fdm", "fdm_n": 8, "fdm_dtau": 0.001, "scheme": "FE"},
            "output": {"N_f": 16}}
    cfg = write_config(tmp_path, json.dumps(data))
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 3
    assert "forward Euler" in capsys.readouterr().err


@pytest.mark.filterwarnings("ignore:snapshot")
def test_sweep(tmp_path):
    cfg = write_config(tmp_path, json.dumps(SMALL))
    out = tmp_path / "s"
    assert main(["sweep", "--config", cfg, "--out", str(out), "--threads", "2",
                 "--sweep", "time.dtau=0.002,0.001,0.0005"]) == 0
    agg = rows(out / "metrics.csv")
    assert {r["run"] for r in agg} == {"run_000", "run_001", "run_002"}
    assert {r["value"] for r in agg} == {"0.002", "0.001", "0.0005"}
    for i in range(3):
        assert (out / f"run_{i:03d}" / "manifest.json").exists()
    assert main(["sweep", "--config", cfg, "--out", str(out), "--sweep", "time.dtau"]) == 2


@pytest.mark.filterwarnings("ignore:snapshot")
def test_compare_rows_and_determinism(tmp_path):
    cfg = write_config(tmp_path, json.dumps(dict(SMALL, compare={"apite": {"dtau": 5e-4}})))
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["compare", "--config", cfg, "--out", str(a)]) == 0
    assert main(["compare", "--config", cfg, "--out", str(b)]) == 0
    assert (a / "metrics.csv").read_bytes() == (b / "metrics.csv").read_bytes()
    got = rows(a / "metrics.csv")
    assert {r["method"] for r in got} == set(ex.COMPARE_METHODS)
    final = {r["method"]: r for r in got if r["t"] == "0.01"}
    assert final["analytic"]["l2_raw"] == "0.0"
    assert final["hhl"]["success_prob"] == ""
    assert float(final["apite"]["success_prob"]) < float(final["aapite"]["success_prob"])
    assert main(["compare", "--config", cfg, "--out", str(a), "--methods", "aapite,qpe"]) == 2


def test_decompose(tmp_path):
    cfg = write_config(tmp_path, json.dumps(SMALL))
    out = tmp_path / "d"
    assert main(["decompose", "--config", cfg, "--out", str(out),
                 "--dtaus", "0.002,0.001,0.0005", "--ns", "3,4"]) == 0
    got = rows(out / "metrics.csv")
    assert {r["series"] for r in got} == {"discretization", "trotter", "approximation"}
    # a single kinetic factor has no splitting error
    trotter = [float(r["value"]) for r in got if r["series"] == "trotter" and r["kind"] != "slope"]
    assert max(trotter) < 1e-12
    slopes = [r for r in got if r["kind"] == "slope"]
    assert [r["series"] for r in slopes] == ["approximation"]


def test_system_command(tmp_path):
    data = {"system": {"model": "burgers", "n": 3, "dtau": 0.04, "T": 0.2, "snapshots": [0.08]}}
    cfg = write_config(tmp_path, json.dumps(data))
    out = tmp_path / "y"
    assert main(["system", "--config", cfg, "--out", str(out)]) == 0
    assert len(rows(out / "probability.csv")) == 6
    assert (out / "solution_t0p08_u1.csv").exists() and (out / "solution_t0p2_u2.csv").exists()
    cfg = write_config(tmp_path, json.dumps(SMALL), "nosys.json")
    assert main(["system", "--config", cfg, "--out", str(out)]) == 2


def test_funcs_table(tmp_path):
    out = tmp_path / "f"
    assert main(["funcs", "--ymax", "1", "--points", "200", "--out", str(out)]) == 0
    got = rows(out / "funcs.csv")
    assert len(got) == 200
    assert list(got[0]) == ["y", "exa", "hhl", "aap", "aap2", "aap4", "oap_0.9"]
    last = got[-1]
    assert float(last["y"]) == 1.0
    assert float(last["exa"]) == pytest.approx(np.exp(-1.0))
    assert float(last["hhl"]) == pytest.approx(0.5)
    assert float(last["aap"]) == pytest.approx(np.cos(np.sqrt(2.0)))
    assert main(["funcs", "--points", "1", "--out", str(out)]) == 2


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "pitepde", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "solve" in res.stdout
