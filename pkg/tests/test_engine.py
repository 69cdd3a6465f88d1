import numpy as np
import pytest

from paralab.engine import (ConfigError, config_from_dict, load_config,
                            render_csv, run, run_suite)


def make(experiment="geometry", **sections):
    d = {"experiment": {"name": experiment}}
    d.update(sections)
    return d


def test_unknown_experiment_rejected():
    with pytest.raises(ConfigError, match="unknown experiment"):
        config_from_dict(make("mystery"))


def test_missing_name_rejected():
    with pytest.raises(ConfigError):
        config_from_dict({"scene": {"kind": "circle"}})


def test_criterion_range_checked():
    with pytest.raises(ConfigError):
        config_from_dict({"experiment": {"name": "acceptance",
                                         "criterion": "11"}})
    with pytest.raises(ConfigError):
        config_from_dict({"experiment": {"name": "acceptance",
                                         "criterion": "abc"}})


def test_emit_choice_checked():
    with pytest.raises(ConfigError):
        config_from_dict(make("geometry", output={"emit": "xml"}))


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "gone.ini"))


def test_run_geometry_report_shape():
    cfg = config_from_dict(make("geometry", scene={"kind": "circle",
                                                   "n": "16"}))
    rep = run(cfg)
    assert rep["schema_version"] == 1
    assert rep["experiment"] == "geometry"
    assert rep["passed"]
    assert rep["wall_time_s"] > 0
    assert rep["series_columns"][0] == "doubling_constant"
    names = [c["name"] for c in rep["checks"]]
    assert "max skew residual" in names
    # recorded rows carry no pass verdict
    rec = [c for c in rep["checks"] if c["passed"] is None]
    assert rec


def test_render_csv_uses_float_repr():
    rep = {"series_columns": ["i", "x"],
           "series_rows": [[0, 0.1], [1, 1.0 / 3.0]]}
    body = render_csv(rep)
    assert body == "i,x\n0,0.1\n1,%r\n" % (1.0 / 3.0)


def test_run_suite_missing_dir(tmp_path):
    with pytest.raises(ConfigError):
        run_suite(str(tmp_path / "nowhere"))


def test_propagate_window_checked():
    cfg = config_from_dict(make("propagate",
                                scene={"kind": "circle", "n": "32"},
                                params={"s": "0.4", "p": "2.0"}))
    with pytest.raises(ConfigError, match="s > d/p"):
        run(cfg)


def test_smoothing_window_via_engine():
    cfg = config_from_dict(make("smoothing",
                                scene={"kind": "circle", "n": "32"},
                                params={"s": "1.2"}))
    with pytest.raises(ConfigError, match=r"s must lie in \(d/p, 1\)"):
        run(cfg)
