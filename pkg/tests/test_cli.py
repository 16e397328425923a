import json

import numpy as np
import pandas as pd
import pytest

from rhem.cli import main


def run(args):
    return main([str(a) for a in args])


@pytest.fixture()
def history_files(tmp_path):
    out = tmp_path / "sim"
    code = run(["simulate", "--study", "study1", "--lambda0", "0.25", "--reps", "2",
                "--seed", "7", "--out-dir", out])
    assert code == 0
    return out


class TestSimulate:
    def test_writes_histories_and_metadata(self, history_files):
        files = sorted(p.name for p in history_files.iterdir())
        assert files == [
            "actors_rep000.csv",
            "actors_rep001.csv",
            "history_rep000.csv",
            "history_rep001.csv",
            "simulate_metadata.json",
        ]
        meta = json.loads((history_files / "simulate_metadata.json").read_text())
        assert meta["seed"] == 7 and meta["reps"] == 2

    def test_zero_reps_warns_and_exits_zero(self, tmp_path, capsys):
        code = run(["simulate", "--study", "study1", "--reps", "0", "--seed", "1",
                    "--out-dir", tmp_path / "empty"])
        assert code == 0
        assert "nothing to simulate" in capsys.readouterr().err
        assert not (tmp_path / "empty").exists()

    def test_missing_seed_exits_nonzero(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            run(["simulate", "--study", "study1", "--reps", "1", "--out-dir", tmp_path])
        assert err.value.code == 2

    def test_reproducible_bytes(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run(["simulate", "--study", "study2", "--reps", "1", "--seed", "3",
                        "--out-dir", out]) == 0
        assert (a / "history_rep000.csv").read_bytes() == (b / "history_rep000.csv").read_bytes()

    def test_custom_model_requires_actors(self, tmp_path):
        spec = tmp_path / "model.json"
        spec.write_text(json.dumps({"baseline": 0.1}))
        code = run(["simulate", "--model", spec, "--reps", "1", "--seed", "1",
                    "--out-dir", tmp_path])
        assert code == 2

    def test_custom_model_runs(self, tmp_path):
        spec = tmp_path / "model.json"
        spec.write_text(json.dumps({
            "baseline": 0.05,
            "linear_terms": [["girl_alter", 0.9]],
        }))
        actors = tmp_path / "actors.csv"
        actors.write_text(
            "id,gender,age,class_id\n" + "\n".join(
                f"a{i},{'female' if i % 2 else 'male'},15.0,c1" for i in range(6)
            ) + "\n"
        )
        code = run(["simulate", "--model", spec, "--actors", actors, "--reps", "1",
                    "--seed", "5", "--horizon", "4", "--out-dir", tmp_path / "out"])
        assert code == 0


class TestPanel:
    def test_unit_waves_offsets_zero(self, history_files, tmp_path):
        out = tmp_path / "panel.csv"
        code = run(["panel", "--history", history_files / "history_rep000.csv",
                    "--waves", "0,1,2,3,4,5,6", "--out", out])
        assert code == 0
        frame = pd.read_csv(out)
        assert (frame["offset"] == 0).all()
        assert len(frame) == 504 * 6

    def test_month_grid_offsets(self, tmp_path):
        hist = tmp_path / "h.csv"
        hist.write_text("time,senders,receiver\n0.5,a,b\n3.0,b;c,d\n")
        out = tmp_path / "panel.csv"
        code = run(["panel", "--history", hist, "--waves", "0,2,8,20,32",
                    "--specs", "rd", "--out", out])
        assert code == 0
        frame = pd.read_csv(out)
        per_wave = frame.groupby("wave")["offset"].first().to_numpy()
        assert np.allclose(per_wave, np.log([2, 6, 12, 12]))

    def test_malformed_history_exits_2(self, tmp_path):
        hist = tmp_path / "h.csv"
        hist.write_text("time,senders,receiver\nxx,a,b\n")
        code = run(["panel", "--history", hist, "--waves", "0,1"])
        assert code == 2

    def test_stats_export_columns(self, tmp_path):
        hist = tmp_path / "h.csv"
        hist.write_text("time,senders,receiver\n0.5,a,b\n1.5,a,c\n")
        out = tmp_path / "stats.csv"
        code = run(["stats", "--history", hist, "--waves", "0,1,2",
                    "--specs", "rd,rec", "--out", out])
        assert code == 0
        frame = pd.read_csv(out)
        assert list(frame.columns) == ["wave", "senders", "receiver", "rd", "rec"]


class TestFit:
    def _panel(self, tmp_path, all_zero=False):
        rng = np.random.default_rng(4)
        n = 400
        x = rng.uniform(0, 1, n)
        y = np.zeros(n) if all_zero else (rng.poisson(np.exp(-1 + 0.8 * x)) > 0).astype(int)
        frame = pd.DataFrame({
            "wave": 1, "senders": "a", "receiver": "b",
            "y": y, "offset": 0.0, "x": x,
        })
        path = tmp_path / "panel.csv"
        frame.to_csv(path, index=False)
        return path

    def _spec(self, tmp_path, family):
        path = tmp_path / f"spec_{family}.json"
        path.write_text(json.dumps({
            "family": family,
            "terms": [{"type": "linear", "covariate": "x"}],
        }))
        return path

    def test_families_agree(self, tmp_path):
        panel = self._panel(tmp_path)
        coefs = {}
        for family in ("binomial_cloglog", "censored_poisson"):
            out = tmp_path / family
            code = run(["fit", "--panel", panel, "--model", self._spec(tmp_path, family),
                        "--out-dir", out])
            assert code == 0
            payload = json.loads((out / "fit.json").read_text())
            coefs[family] = payload["coefficients"]["x"]
        assert coefs["binomial_cloglog"] == pytest.approx(
            coefs["censored_poisson"], rel=1e-6
        )

    def test_all_zero_panel_exits_3(self, tmp_path):
        panel = self._panel(tmp_path, all_zero=True)
        code = run(["fit", "--panel", panel, "--model",
                    self._spec(tmp_path, "binomial_cloglog"), "--out-dir", tmp_path])
        assert code == 3

    def test_smooth_curve_artifact(self, tmp_path, history_files):
        panel_path = tmp_path / "panel.csv"
        code = run(["panel", "--history", history_files / "history_rep000.csv",
                    "--waves", "0,1,2,3,4,5,6", "--specs", "rd", "--out", panel_path])
        assert code == 0
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({
            "family": "binomial_cloglog",
            "terms": [{"type": "smooth", "covariate": "rd", "num_basis": 6, "degree": 2}],
        }))
        out = tmp_path / "fitout"
        code = run(["fit", "--panel", panel_path, "--model", spec, "--out-dir", out])
        assert code == 0
        assert (out / "fit_smooth_rd.csv").exists()


class TestStudy:
    def test_single_replicate_summary(self, tmp_path):
        out = tmp_path / "study"
        code = run(["study", "--name", "study2", "--reps", "1", "--seed", "5",
                    "--out-dir", out])
        assert code == 0
        summary = pd.read_csv(out / "study2_summary.csv")
        assert set(summary["strategy"]) == {"past", "current", "average"}
        assert summary["iqr"].isna().all()  # single replicate: no IQR
        estimates = pd.read_csv(out / "study2_estimates.csv")
        assert len(estimates) == 1
