import json
import math

import numpy as np
import pytest

from polariton_casimir.cli import (
    ConfigError,
    _build_coupling,
    load_config,
    main,
    run_validate,
)


def read_rows(path):
    lines = open(path).read().splitlines()
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    return header, rows


class TestEpsilonVerb:
    def test_benchmark_row_values(self, tmp_path):
        out = tmp_path / "eps.csv"
        rc = main(["epsilon", "--alpha", "1.0", "--points", "5",
                   "--sweep-from", "1.0", "--sweep-to", "100.0",
                   "--out", str(out), "--no-plot"])
        assert rc == 0
        header, rows = read_rows(out)
        assert header == ["omega", "re_eps_minus_1", "im_eps", "status"]
        # omega = 1 row: eps = i, so (re-1, im) = (-1, 1)
        assert float(rows[0][0]) == pytest.approx(1.0)
        assert float(rows[0][1]) == pytest.approx(-1.0, abs=1e-12)
        assert float(rows[0][2]) == pytest.approx(1.0, abs=1e-12)
        # omega = 100: response has died off
        assert abs(float(rows[-1][1])) < 1e-3
        assert abs(float(rows[-1][2])) < 1e-3

    def test_alpha_zero_all_zero(self, tmp_path):
        out = tmp_path / "eps0.csv"
        rc = main(["epsilon", "--alpha", "0.0", "--points", "4",
                   "--out", str(out), "--no-plot"])
        assert rc == 0
        _, rows = read_rows(out)
        for r in rows:
            assert float(r[1]) == 0.0 and float(r[2]) == 0.0


class TestEnergyVerb:
    def test_vacuum_column_and_roundtrip(self, tmp_path):
        out = tmp_path / "en.csv"
        argv = ["energy", "--model", "d", "--points", "3", "--sweep-from",
                "1.0", "--sweep-to", "4.0", "--out", str(out), "--no-plot"]
        assert main(argv) == 0
        header, rows = read_rows(out)
        assert header[:3] == ["a", "e_vacuum", "e1_d"]
        assert float(rows[0][1]) == pytest.approx(-0.130900, abs=1e-6)
        first = open(out).read()
        assert main(argv) == 0
        assert open(out).read() == first  # byte-identical rerun

    def test_threads_do_not_change_bytes(self, tmp_path):
        out1 = tmp_path / "t1.csv"
        out2 = tmp_path / "t2.csv"
        base = ["energy", "--model", "d", "--points", "4", "--sweep-from",
                "1.0", "--sweep-to", "8.0", "--no-plot"]
        assert main(base + ["--out", str(out1), "--threads", "1"]) == 0
        assert main(base + ["--out", str(out2), "--threads", "4"]) == 0
        assert open(out1).read() == open(out2).read()

    def test_plot_written(self, tmp_path):
        out = tmp_path / "ep.csv"
        assert main(["energy", "--model", "d", "--points", "2",
                     "--sweep-from", "1.0", "--sweep-to", "2.0",
                     "--out", str(out)]) == 0
        assert (tmp_path / "ep.png").exists()

    def test_json_format(self, tmp_path):
        out = tmp_path / "en.json"
        assert main(["energy", "--model", "d", "--points", "2",
                     "--sweep-from", "1.0", "--sweep-to", "2.0",
                     "--format", "json", "--out", str(out),
                     "--no-plot"]) == 0
        doc = json.loads(open(out).read())
        assert doc["columns"][0] == "a"
        assert len(doc["rows"]) == 2


class TestForceAndCompare:
    def test_force_columns(self, tmp_path):
        out = tmp_path / "f.csv"
        assert main(["force", "--model", "d", "--points", "2",
                     "--sweep-from", "2.0", "--sweep-to", "4.0",
                     "--out", str(out), "--no-plot"]) == 0
        header, rows = read_rows(out)
        assert header[:2] == ["a", "f_d"]
        assert all(r[-1] == "ok" for r in rows)

    def test_compare_difference_column(self, tmp_path):
        out = tmp_path / "c.csv"
        assert main(["compare", "--points", "2", "--sweep-from", "4.0",
                     "--sweep-to", "8.0", "--out", str(out),
                     "--no-plot"]) == 0
        header, rows = read_rows(out)
        i = header.index("difference")
        for r in rows:
            d = float(r[header.index("e1_d")])
            h = float(r[header.index("e1_hb")])
            assert float(r[i]) == pytest.approx(h - d, rel=1e-12)
            assert abs(h) > abs(d)


class TestConfigHandling:
    def test_config_file_with_flag_override(self, tmp_path):
        cfgfile = tmp_path / "run.json"
        cfgfile.write_text(json.dumps({
            "model": "d",
            "params": {"alpha": 0.5},
            "sweep": {"from": 1.0, "to": 2.0, "points": 2,
                      "spacing": "linear"},
            "quad": {"rel_tol": 1e-7},
        }))

        class Args:
            config = str(cfgfile)
            model = None
            a = None
            alpha = 0.25  # overrides file
            points = None
            out = None
            rel_tol = None
            threads = None
            sweep_from = None
            sweep_to = None
            spacing = None
            format = None
            no_plot = True

        cfg = load_config(str(cfgfile), Args())
        assert cfg.params.alpha == 0.25
        assert cfg.quad.rel_tol == 1e-7
        assert cfg.model == "d"

    def test_bad_config_exit_code(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["energy", "--config", str(bad), "--no-plot"]) == 2

    def test_bad_model_value(self, tmp_path):
        cfgfile = tmp_path / "m.json"
        cfgfile.write_text(json.dumps({"model": "bogus"}))
        assert main(["energy", "--config", str(cfgfile), "--no-plot"]) == 2

    def test_hb_with_custom_coupling_rejected(self, tmp_path):
        cfgfile = tmp_path / "c.json"
        cfgfile.write_text(json.dumps({
            "model": "hb",
            "coupling": {"kind": "lorentzian", "amplitude": 0.5},
            "sweep": {"from": 1.0, "to": 2.0, "points": 2},
        }))
        assert main(["energy", "--config", str(cfgfile), "--no-plot"]) == 2

    def test_env_threads(self, monkeypatch, tmp_path):
        monkeypatch.setenv("POLARITON_CASIMIR_THREADS", "3")

        class Args:
            config = None
            model = "d"
            a = None
            alpha = None
            points = None
            out = None
            rel_tol = None
            threads = None
            sweep_from = None
            sweep_to = None
            spacing = None
            format = None
            no_plot = True

        cfg = load_config(None, Args())
        assert cfg.threads == 3

    def test_composite_coupling_config(self):
        eff, counterterm = _build_coupling({
            "kind": "composite",
            "components": [
                {"type": "ydot", "kind": "lorentzian", "amplitude": 0.4},
                {"type": "ydot", "kind": "lorentzian", "amplitude": 0.6},
            ]})
        w = np.geomspace(0.1, 10, 8)
        assert np.allclose(eff(w), 1.0 / (w**2 + 1), rtol=1e-12)
        assert counterterm == 0.0

    def test_unknown_coupling_kind(self):
        with pytest.raises(ConfigError):
            _build_coupling({"kind": "mystery"})


class TestValidate:
    def test_validate_passes_on_defaults(self, capsys):
        from polariton_casimir.cli import RunConfig
        rc = run_validate(RunConfig())
        assert rc == 0


class TestAlphaSweep:
    def test_energy_alpha_sweep(self, tmp_path):
        cfgfile = tmp_path / "al.json"
        cfgfile.write_text(json.dumps({
            "model": "d",
            "params": {"a": 2.0},
            "sweep": {"variable": "alpha", "from": 0.5, "to": 1.0,
                      "points": 2, "spacing": "linear"},
        }))
        out = tmp_path / "al.csv"
        assert main(["energy", "--config", str(cfgfile), "--out", str(out),
                     "--no-plot"]) == 0
        header, rows = read_rows(out)
        assert header[0] == "alpha"
        e_half = float(rows[0][header.index("e1_d")])
        e_one = float(rows[1][header.index("e1_d")])
        # stronger coupling binds more
        assert abs(e_one) > abs(e_half)


class TestRowErrorHandling:
    def test_out_of_range_separation_marks_row(self, tmp_path):
        # a below the per-mode table range: row flagged, exit code 3
        out = tmp_path / "small.csv"
        rc = main(["energy", "--model", "hb", "--points", "2",
                   "--sweep-from", "0.2", "--sweep-to", "0.5",
                   "--alpha", "1.0", "--out", str(out), "--no-plot"])
        assert rc == 3
        header, rows = read_rows(out)
        assert all(r[-1] == "error" for r in rows)
