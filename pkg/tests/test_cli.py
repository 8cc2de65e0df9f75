import json
import math
import os
import subprocess
import sys
from pathlib import Path

import pytest

from respondyn.cli import parse_field, parse_map
from respondyn.errors import SpecParseError
from respondyn.maps import CircleMap, LogisticMap, TentMap

DATA = Path(__file__).parent / "data"


def invoke(args, env_extra=None):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run([sys.executable, "-m", "respondyn.cli", *args],
                          capture_output=True, text=True, env=env)


class TestSpecParsing:
    def test_maps(self):
        assert parse_map("tent:a=1") == TentMap(a=1.0)
        assert parse_map("tent:a=0.5,t=0.25") == TentMap(a=0.5, t=0.25)
        assert parse_map("logistic:t=4") == LogisticMap(t=4.0)
        mp = parse_map("circle:d=2,sin=0.05,0.01,cos=0.02")
        assert mp == CircleMap(degree=2, sin_amps=(0.05, 0.01), cos_amps=(0.02,))

    def test_fields(self):
        f = parse_field("poly:0.5,0.5")
        assert f.kind == "poly" and f.coeffs == (0.5, 0.5)
        g = parse_field("trig:sin=1,cos=0.5,0.25")
        assert g.sin_amps == (1.0,) and g.cos_amps == (0.5, 0.25)

    @pytest.mark.parametrize("bad", [
        "tent:t=0.5", "tent:a=1,q=2", "logistic:a=1", "circle:sin=1",
        "circle:d=2.5", "poly:", "spiral:r=1", "trig:amp=1", "tent:a=abc",
    ])
    def test_bad_specs_raise(self, bad):
        with pytest.raises(SpecParseError):
            (parse_map if bad.split(":")[0] in ("tent", "logistic", "circle", "spiral")
             else parse_field)(bad)


class TestExitCodes:
    def test_success(self):
        assert invoke(["density", "--map", "tent:a=1", "--n", "8"]).returncode == 0

    def test_precondition(self):
        res = invoke(["density", "--map", "tent:a=0"])
        assert res.returncode == 1
        assert "precondition" in res.stderr

    def test_numeric(self):
        res = invoke(["decompose", "--map", "tent:a=0.41421356237309515", "--n", "16"])
        assert res.returncode == 2
        assert "numeric" in res.stderr

    def test_usage_unknown_subcommand(self):
        assert invoke(["frobnicate"]).returncode == 64

    def test_usage_unknown_flag(self):
        assert invoke(["density", "--map", "tent:a=1", "--frob"]).returncode == 64

    def test_bad_spec_reports_token(self):
        res = invoke(["density", "--map", "tent:a=xyz"])
        assert res.returncode == 65
        assert "xyz" in res.stderr


class TestOutputs:
    def test_density_full_tent_csv(self, tmp_path):
        out = tmp_path / "d.csv"
        res = invoke(["density", "--map", "tent:a=1", "--method", "ulam",
                      "--n", "64", "--out", str(out)])
        assert res.returncode == 0
        lines = out.read_text().split("\n")
        assert lines[0] == "index,value"
        values = [float(line.split(",")[1]) for line in lines[1:] if line]
        assert max(abs(v - 0.5) for v in values) <= 1e-10

    def test_respond_circle_resolvent(self):
        res = invoke(["respond", "--map", "circle:d=2", "--field", "trig:sin=1",
                      "--obs", "trig:cos=1", "--n", "64", "--terms", "12"])
        assert res.returncode == 0
        payload = json.loads(res.stdout)
        assert abs(payload["resolvent"] + math.pi) <= 1e-9
        assert set(payload) >= {"fd", "resolvent", "ruelle_partials",
                                "tail_bound", "converged"}

    def test_horizontality_value_and_tail(self):
        res = invoke(["horizontality", "--map", "tent:a=1", "--field",
                      "poly:0.5,0.5", "--terms", "60"])
        payload = json.loads(res.stdout)
        assert payload["value"] == 1.0
        assert payload["tail_bound"] < 1e-17

    def test_sigma_csv(self):
        res = invoke(["sigma", "--map", "tent:a=1", "--obs", "poly:0,1",
                      "--terms", "5"])
        assert res.stdout.splitlines()[0] == "j,coefficient"
        assert res.stdout.splitlines()[1] == "0,1.0"

    def test_scan_csv_and_sidecar(self, tmp_path):
        out = tmp_path / "scan.csv"
        res = invoke(["holder", "--map", "logistic:t=4", "--steps", "4",
                      "--orbit-len", "10000", "--seeds", "16", "--out", str(out)])
        assert res.returncode == 0
        header = out.read_text().split("\n")[0]
        assert header == "t,delta,stderr,resolution,accepted"
        sidecar = json.loads((tmp_path / "scan.json").read_text())
        assert {"beta", "beta_ci_lo", "beta_ci_hi", "log_coeff"} <= set(sidecar)

    def test_csv_uses_lf_and_comma(self, tmp_path):
        out = tmp_path / "d.csv"
        invoke(["density", "--map", "tent:a=1", "--n", "4", "--out", str(out)])
        raw = out.read_bytes()
        assert b"\r" not in raw
        assert raw.startswith(b"index,value\n")

    def test_fourier_density_csv_columns(self):
        res = invoke(["density", "--map", "circle:d=2", "--n", "8"])
        lines = res.stdout.splitlines()
        assert lines[0] == "index,re,im"
        assert lines[1].startswith("-8,")

    def test_ruelle_report(self):
        res = invoke(["ruelle", "--map", "circle:d=2", "--field", "trig:sin=1",
                      "--obs", "trig:cos=1", "--n", "32", "--terms", "6"])
        payload = json.loads(res.stdout)
        assert len(payload["ruelle_partials"]) == 7
        assert abs(payload["ruelle_partials"][-1] + math.pi) <= 1e-9

    def test_susceptibility_csv(self):
        res = invoke(["susceptibility", "--map", "circle:d=2", "--field",
                      "trig:sin=1", "--obs", "trig:cos=1", "--n", "32",
                      "--terms", "4"])
        lines = res.stdout.splitlines()
        assert lines[0] == "j,coefficient"
        assert float(lines[1].split(",")[1]) == pytest.approx(-math.pi, abs=1e-10)

    def test_tce_outputs_with_sidecar(self, tmp_path):
        out = tmp_path / "alpha.csv"
        res = invoke(["tce", "--map", "tent:a=0.41421356237309515", "--field",
                      "poly:1", "--terms", "40", "--out", str(out)])
        assert res.returncode == 0
        assert out.read_text().splitlines()[0] == "x,alpha"
        side = json.loads((tmp_path / "alpha.json").read_text())
        assert side["residual_norm"] <= 1e-4
        assert side["warning"] is None

    def test_decompose_json(self):
        res = invoke(["decompose", "--map", "tent:a=1", "--n", "512"])
        payload = json.loads(res.stdout)
        locs = sorted(j["location"] for j in payload["jumps"])
        assert locs == [-1.0, 1.0]

    def test_modulus_circle_control(self, tmp_path):
        out = tmp_path / "mod.csv"
        res = invoke(["modulus", "--map", "circle:d=2", "--field", "trig:sin=1",
                      "--k-min", "6", "--k-max", "9", "--n", "48",
                      "--out", str(out)])
        assert res.returncode == 0
        sidecar = json.loads((tmp_path / "mod.json").read_text())
        assert 0.9 <= sidecar["beta"] <= 1.1

    def test_orbit_json(self):
        res = invoke(["orbit", "--map", "logistic:t=4", "--terms", "12"])
        payload = json.loads(res.stdout)
        assert payload["postcritical"][:3] == [1.0, 0.0, 0.0]
        assert payload["markov"] == {"preperiod": 2, "period": 1, "multiplier": 4.0}

    def test_log_env_writes_stderr_only(self, tmp_path):
        cfgout = tmp_path / "d.csv"
        quiet = invoke(["respond", "--map", "tent:a=0.41421356237309515",
                        "--field", "poly:1", "--obs", "poly:0,1", "--n", "1024",
                        "--terms", "48", "--out", str(cfgout)])
        noisy = invoke(["respond", "--map", "tent:a=0.41421356237309515",
                        "--field", "poly:1", "--obs", "poly:0,1", "--n", "1024",
                        "--terms", "48", "--out", str(cfgout)],
                       env_extra={"RESPONDYN_LOG": "debug"})
        assert quiet.returncode == noisy.returncode == 0
        assert quiet.stdout == noisy.stdout  # diagnostics never touch stdout


class TestHelpSnapshot:
    def test_main_help_snapshot(self):
        res = invoke(["--help"])
        assert res.stdout == (DATA / "help_main.txt").read_text()

    def test_density_help_snapshot(self):
        res = invoke(["density", "--help"])
        assert res.stdout == (DATA / "help_density.txt").read_text()

    def test_all_flags_listed(self):
        text = invoke(["modulus", "--help"]).stdout
        for flag in ("--map", "--field", "--obs", "--method", "--n", "--terms",
                     "--steps", "--seed", "--seeds", "--orbit-len", "--k-min",
                     "--k-max", "--t0", "--threads", "--config", "--out"):
            assert flag in text


class TestConfig:
    def test_config_file_with_flag_precedence(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"map": "tent:a=1", "n": 8}))
        res = invoke(["density", "--config", str(cfg), "--n", "4", "--dump-config"])
        payload = json.loads(res.stdout)
        assert payload["map"] == "tent:a=1"
        assert payload["n"] == 4  # flag wins

    def test_canonical_roundtrip(self, tmp_path):
        first = invoke(["density", "--map", "tent:a=1", "--n", "16",
                        "--dump-config"]).stdout
        cfg = tmp_path / "cfg.json"
        cfg.write_text(first)
        second = invoke(["density", "--config", str(cfg), "--dump-config"]).stdout
        assert first == second


class TestDeterminism:
    def test_byte_identical_across_threads_and_reruns(self, tmp_path):
        args = ["holder", "--map", "logistic:t=4", "--steps", "3",
                "--orbit-len", "20000", "--seeds", "16", "--seed", "77"]
        outputs = []
        for run_id, threads in (("a", "1"), ("b", "2"), ("c", "1")):
            out = tmp_path / f"h{run_id}.csv"
            res = invoke(args + ["--threads", threads, "--out", str(out)])
            assert res.returncode == 0
            outputs.append(out.read_bytes() + (tmp_path / f"h{run_id}.json").read_bytes())
        assert outputs[0] == outputs[1] == outputs[2]

    def test_density_reproducible(self, tmp_path):
        blobs = []
        for name in ("x", "y"):
            out = tmp_path / f"{name}.csv"
            invoke(["density", "--map", "circle:d=2,sin=0.05", "--n", "32",
                    "--out", str(out)])
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1]
