import json

import numpy as np
import pytest

from pcone.errors import ScenarioError
from pcone.util.config import ScenarioConfig
from pcone.util.fileio import dump, load
from pcone.util.registry import Registry
from pcone.util.timing import AverageMeter


def test_dump_converts_numpy(tmp_path):
    obj = {"a": np.float64(1.5), "b": np.arange(3), 4: (1, 2)}
    text = dump(obj, file_format="json")
    assert json.loads(text) == {"a": 1.5, "b": [0, 1, 2], "4": [1, 2]}
    path = tmp_path / "out.yaml"
    dump(obj, str(path))
    assert load(str(path)) == {"a": 1.5, "b": [0, 1, 2], "4": [1, 2]}
    with pytest.raises(TypeError):
        load(str(tmp_path / "out.toml"))


def test_base_inheritance_and_delete(tmp_path):
    (tmp_path / "base.yaml").write_text("grid:\n  n_cells: 10\n  length: 2.0\nk: 1.0\n")
    (tmp_path / "child.yaml").write_text("_base_: base.yaml\ngrid:\n  n_cells: 20\n")
    (tmp_path / "other.yaml").write_text("_base_: base.yaml\ngrid:\n  _delete_: true\n  n_cells: 5\n")
    child = ScenarioConfig.fromfile(str(tmp_path / "child.yaml"))
    assert child.grid.n_cells == 20
    assert child.grid.length == 2.0
    assert child.k == 1.0
    other = ScenarioConfig.fromfile(str(tmp_path / "other.yaml"))
    assert other.to_dict()["grid"] == {"n_cells": 5}
    assert "scenario = " in child.pretty_text
    assert child.filename == str(tmp_path / "child.yaml")
    child.dump(str(tmp_path / "resolved.json"))
    assert load(str(tmp_path / "resolved.json")) == {"grid": {"n_cells": 20, "length": 2.0}, "k": 1.0}


def test_bad_scenario_files(tmp_path):
    (tmp_path / "list.yaml").write_text("- 1\n- 2\n")
    with pytest.raises(ScenarioError):
        ScenarioConfig.fromfile(str(tmp_path / "list.yaml"))
    (tmp_path / "s.txt").write_text("k: 1\n")
    with pytest.raises(ScenarioError):
        ScenarioConfig.fromfile(str(tmp_path / "s.txt"))
    with pytest.raises(FileNotFoundError):
        ScenarioConfig.fromfile(str(tmp_path / "missing.yaml"))


def test_merge_from_dict():
    cfg = ScenarioConfig(dict(grid=dict(n_cells=100), k=1.0))
    cfg.merge_from_dict({"grid.n_cells": 400, "moduli.rho": 2.0})
    assert cfg.grid.n_cells == 400
    assert cfg.moduli.rho == 2.0
    assert cfg.k == 1.0


def test_registry():
    reg = Registry("things")

    @reg.register_with_name(module_name="double")
    def double(x):
        return 2 * x

    assert "double" in reg
    assert reg.build("double", 4) == 8
    with pytest.raises(KeyError):
        reg.register(double, module_name="double")


def test_average_meter():
    meter = AverageMeter("m")
    for v in (1.0, 3.0, 2.0):
        meter.update(v)
    assert meter.max == 3.0
    assert meter.avg == pytest.approx(2.0)
