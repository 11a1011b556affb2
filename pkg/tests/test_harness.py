import io
import math
import xml.etree.ElementTree as ET

import pytest

from ccest.harness import cli, config, presets, sweep
from ccest.harness.plot import curves_from_rows, plot_csv, svg_chart

TINY = {
    "system.K": 32, "system.L": 4, "system.delta_K": 4,
    "channel.path_counts": (2, 2), "channel.path_powers_db": (0.0, -10.0),
    "pilots.count": 16, "estimator.bases": ("dft",), "estimator.solvers": ("omp", "cosamp"),
    "sweep.values": (10.0, 20.0), "sweep.trials": 2,
}


def tiny(**kw):
    vals = dict(TINY)
    vals.update({k.replace("__", "."): v for k, v in kw.items()})
    return config.ExperimentConfig(vals)


class TestConfig:
    def test_defaults_and_derived(self):
        c = config.ExperimentConfig()
        assert c.K == 256 and c.N == 320 and c.delay_span == 64

    def test_parse(self):
        c = config.parse("system.K = 64  # comment\nsweep.values = (1.0, 2.0)\npreset.name = 'a#b'\n")
        assert c.K == 64 and c["sweep.values"] == (1.0, 2.0) and c["preset.name"] == "a#b"

    @pytest.mark.parametrize("text", [
        "system.Q = 3", "system.K = 64\nsystem.K = 32", "system.K 64", "system.K = [1,",
        "system.L = 3", "system.K = 30", "sweep.values = (2.0, 1.0)", "estimator.bases = ('foo',)",
        "sweep.axis = 'time'", "sweep.values = ()", "system.K = True",
    ])
    def test_rejects(self, text):
        with pytest.raises(config.ConfigError):
            config.parse(text)

    def test_text_round_trip(self):
        c = presets.get("fig5-desk")
        assert config.parse(c.to_text()).items() == c.items()

    def test_load_missing(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            config.load(tmp_path / "none.cfg")


class TestPresets:
    @pytest.mark.parametrize("name", sorted(presets.PRESETS))
    def test_valid(self, name):
        c = presets.get(name)
        assert c["preset.name"] == name and c["output.path"] == f"{name}.csv"

    def test_fig4_pilot_grid(self):
        assert presets.get("fig4-desk")["sweep.values"] == (64, 128, 256, 512)

    def test_fig5_report_rounds(self):
        assert presets.get("fig5-desk")["dd.report_rounds"] == (0, 1, 2, 3, 5, 9)

    def test_unknown(self):
        with pytest.raises(KeyError):
            presets.get("fig9")


class TestSweep:
    def test_noise_free_all_pilots_exact(self):
        c = tiny(system__delta_K=1, channel__nu_max_k=0.0, channel__diffuse_db=200.0,
                 sweep__axis="num_pilots", sweep__values=(128,), sweep__snr_db=math.inf,
                 estimator__solvers=("omp",), solver__sparsity=128, pilots__count=128)
        table = sweep.run_sweep(c)
        assert table.aborted == 0
        assert all(r.mse_db <= -80 for r in table.rows)

    def test_rows_and_order(self):
        table = sweep.run_sweep(tiny())
        assert len(table.rows) == 2 * 2 * 2
        keys = [(r.axis_index, r.trial, r.solver) for r in table.rows]
        assert keys == sorted(keys, key=lambda k: (k[0], k[1], ("omp", "cosamp").index(k[2])))
        curves = table.curves()
        assert set(curves) == {("diagonal", "dft", "omp"), ("diagonal", "dft", "cosamp")}
        assert [p["axis_value"] for p in curves[("diagonal", "dft", "omp")]] == [10.0, 20.0]

    def test_deterministic_across_workers(self):
        a = sweep.csv_text(sweep.run_sweep(tiny(), workers=1))
        b = sweep.csv_text(sweep.run_sweep(tiny(), workers=2))
        assert a == b
        assert a != sweep.csv_text(sweep.run_sweep(tiny(sweep__seed=2)))

    def test_seconds_blank_unless_timing(self):
        text = sweep.csv_text(sweep.run_sweep(tiny(sweep__trials=1, sweep__values=(10.0,))))
        assert text.splitlines()[1].split(",")[11] == ""
        timed = sweep.run_sweep(tiny(sweep__trials=1, sweep__values=(10.0,), output__timing=True))
        assert all(r.seconds >= 0 for r in timed.rows)

    def test_csv(self, tmp_path):
        table = sweep.run_sweep(tiny(sweep__trials=1, sweep__values=(10.0,), estimator__solvers=("omp",)))
        text = sweep.csv_text(table)
        assert len(text.splitlines()) == 2
        assert text.splitlines()[0] == ",".join(sweep.CSV_HEADER)
        p = sweep.emit_csv(table, tmp_path / "x.csv")
        rows = sweep.read_csv(p)
        assert rows[0]["basis"] == "dft" and float(rows[0]["mse_db"]) == pytest.approx(table.rows[0].mse_db)

    def test_empty_table(self):
        with pytest.raises(ValueError):
            sweep.csv_text(sweep.ResultTable([]))

    def test_bad_header(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            sweep.read_csv(p)

    def test_abort_threshold(self, monkeypatch):
        def boom(*a, **k):
            raise RuntimeError("synthetic failure")
        monkeypatch.setattr(sweep, "run_trial", boom)
        with pytest.raises(sweep.SweepError):
            sweep.run_sweep(tiny())

    def test_dd_rows(self):
        c = tiny(estimator__kind="dd", estimator__bases=("combined",), estimator__solvers=("omp",),
                 system__delta_K=1, pilots__placement="full", sweep__axis="nu_max_k",
                 sweep__values=(0.1,), sweep__trials=1, dd__max_rounds=2, dd__report_rounds=(0, 1, 2))
        rows = sweep.run_sweep(c).rows
        assert [r.estimator for r in rows] == ["dd_R0", "dd_R1", "dd_R2"]
        assert all(0 <= r.ber <= 1 for r in rows)


class TestPlot:
    ROWS = [
        {"estimator": "diagonal", "basis": "dft", "solver": "omp", "axis_value": "1", "mse_db": "-10", "ber": "0.1"},
        {"estimator": "diagonal", "basis": "dft", "solver": "omp", "axis_value": "1", "mse_db": "-20", "ber": "0.3"},
        {"estimator": "diagonal", "basis": "dft", "solver": "omp", "axis_value": "2", "mse_db": "-30", "ber": "0"},
    ]

    def test_aggregation(self):
        c = curves_from_rows(self.ROWS)["diagonal/dft/omp"]
        assert c[0][1] == pytest.approx(10 * math.log10((0.1 + 0.01) / 2))
        assert curves_from_rows(self.ROWS, "ber")["diagonal/dft/omp"][0][1] == pytest.approx(0.2)

    def test_svg_parses(self):
        root = ET.fromstring(svg_chart(curves_from_rows(self.ROWS, "ber"), "x", "BER", log_y=True))
        assert root.tag.endswith("svg")
        assert len(root.findall("{http://www.w3.org/2000/svg}polyline")) == 1

    def test_empty(self):
        with pytest.raises(ValueError):
            svg_chart({}, "x", "y")

    def test_plot_csv(self, tmp_path):
        table = sweep.run_sweep(tiny())
        src = sweep.emit_csv(table, tmp_path / "r.csv")
        out = plot_csv(src, tmp_path / "r.svg")
        ET.parse(out)


class TestCLI:
    def run(self, argv):
        buf = io.StringIO()
        return cli.main(argv, out=buf), buf.getvalue()

    def test_no_command(self, capsys):
        code, _ = self.run([])
        assert code == 2
        assert capsys.readouterr().err.startswith("error: kind=UsageError message=\"")

    def test_bad_seed(self, capsys):
        code, _ = self.run(["preset", "--name", "fig3-desk", "--seed", "-1"])
        assert code == 2

    def test_missing_config(self, tmp_path, capsys):
        code, _ = self.run(["run", "--config", str(tmp_path / "nope.cfg")])
        assert code == 2
        assert "kind=FileNotFoundError" in capsys.readouterr().err

    def test_bad_config(self, tmp_path, capsys):
        p = tmp_path / "bad.cfg"
        p.write_text("system.Q = 1\n")
        code, _ = self.run(["run", "--config", str(p)])
        err = capsys.readouterr().err
        assert code == 2 and "kind=ConfigError" in err and err.count("\n") == 1

    def test_run_and_plot(self, tmp_path):
        cfgfile = tmp_path / "t.cfg"
        cfgfile.write_text(tiny().to_text())
        out = tmp_path / "t.csv"
        code, text = self.run(["run", "--config", str(cfgfile), "--out", str(out), "--seed", "5"])
        assert code == 0 and "rows=8" in text
        rows = sweep.read_csv(out)
        assert {r["seed"] for r in rows} == {"5"}
        code, _ = self.run(["plot", "--in", str(out), "--out", str(tmp_path / "t.svg"), "--metric", "ber"])
        assert code == 0
        ET.parse(tmp_path / "t.svg")

    def test_plot_empty_csv(self, tmp_path, capsys):
        p = tmp_path / "e.csv"
        p.write_text(",".join(sweep.CSV_HEADER) + "\n")
        code, _ = self.run(["plot", "--in", str(p), "--out", str(tmp_path / "e.svg")])
        assert code == 1 and "kind=ValueError" in capsys.readouterr().err

    def test_dump(self):
        code, text = self.run(["preset", "--name", "fig4-desk", "--trials", "3", "--dump"])
        assert code == 0
        c = config.parse(text)
        assert c["sweep.trials"] == 3 and c["preset.name"] == "fig4-desk"

    def test_diag(self, tmp_path):
        cfgfile = tmp_path / "d.cfg"
        cfgfile.write_text(tiny(estimator__bases=("dft", "combined")).to_text())
        code, text = self.run(["diag", "--config", str(cfgfile)])
        lines = text.splitlines()
        assert code == 0 and lines[0] == "J=4 D=8 pilots=16 S=6"  # ceil(16 / (2 log10 32))
        assert lines[1].startswith("basis=dft coherence=1 pilot_count_bound=")
        assert lines[2].startswith("basis=combined") and "coherence=n/a" in lines[2]

    def test_diag_both_sources(self, tmp_path, capsys):
        code, _ = self.run(["diag", "--config", "x", "--preset", "fig3-desk"])
        assert code == 2
