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

"""Neural-surrogate optimal control via Pontryagin's principle.

Thin Python layer over the C++ core. Dynamics default to the analytic
models; pass a trained ``Network`` to plan on the surrogate instead.
"""

import json

from ._core import (
    ConvergenceError,
    Network,
    NumericalError,
    ValidationError,
    __version__,
    baseline,
    fit_surrogate,
    martian_closed_form,
    oracle,
    secant_update,
    shoot_battery,
    solve_martian,
)
from ._core import run as _run

__all__ = [
    "ConvergenceError",
    "Network",
    "NumericalError",
    "ValidationError",
    "__version__",
    "baseline",
    "fit_surrogate",
    "martian_closed_form",
    "oracle",
    "run",
    "secant_update",
    "shoot_battery",
    "solve_martian",
]


def run(mode, problem, overrides=(), seed=None, out=None):
    """Run a command-line mode (train, solve, shoot, landscape, oracle,
    compare) and return its reports as a list of dicts. Artifacts go to
    ``out`` (default ``out``)."""
    return json.loads(_run(mode, problem, list(overrides), seed, None if out is None else str(out)))
