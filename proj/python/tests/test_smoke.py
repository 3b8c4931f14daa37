# Copyright 2026 The nnpmp Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json

import numpy as np
import pytest

import nnpmp


def test_version():
    assert nnpmp.__version__ == "0.1.0"


def test_martian_closed_form_and_fbs():
    cf = nnpmp.martian_closed_form()
    assert cf["states"] == [3, 6, 12, 24, 48, 48]
    assert cf["objective"] == 48.0
    res = nnpmp.solve_martian()
    assert res["converged"]
    assert res["controls"] == [1, 1, 1, 1, 0]
    assert res["objective"] == 48.0


def test_oracle():
    res = nnpmp.oracle("martian")
    assert res["exhaustive"]
    assert res["objective"] == 48.0


def test_secant():
    assert nnpmp.secant_update(1.0, 2.0, 4.0, 2.0, 3.0) == 1.5
    with pytest.raises(ArithmeticError):
        nnpmp.secant_update(1.0, 2.0, 4.0, 4.0, 3.0)


def test_battery_surrogate_round_trip(tmp_path):
    net, report = nnpmp.fit_surrogate("battery", overrides=["train.epochs=50"])
    assert net.layer_sizes == [1, 10, 1]
    assert report["epochs_run"] == 50
    path = tmp_path / "model.json"
    net.save(path)
    again = nnpmp.Network.load(path)
    x = np.array([0.3])
    assert np.array_equal(net.forward(x), again.forward(x))
    assert net.input_jacobian(x).shape == (1, 1)

    shot = nnpmp.shoot_battery(net)
    assert abs(shot["states"][-1] - 3.0) <= 0.05
    assert len(shot["controls"]) == 24


def test_shoot_battery_analytic():
    shot = nnpmp.shoot_battery()
    assert shot["terminal_error"] <= 0.05
    assert shot["objective"] < 0.0


def test_validation_errors():
    with pytest.raises(ValueError):
        nnpmp.fit_surrogate("rocket")
    with pytest.raises(ValueError):
        nnpmp.run("solve", "martian", ["pmp.no_such_key=1"])


def test_run_writes_artifacts(tmp_path):
    reports = nnpmp.run("oracle", "martian", out=tmp_path)
    assert reports[0]["method"] == "oracle"
    assert reports[0]["objective"] == 48.0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["mode"] == "oracle"
    assert (tmp_path / "manifest.json").exists()
