# Copyright 2026 The Poietic Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Collective canvas sessions: simulate, audit, replay and serve.

Thin Python layer over the C++ core. Structured results are returned as
plain dicts and lists.
"""

from __future__ import annotations

import json
import os
from typing import Iterable, Mapping, Optional, Sequence, Tuple, Union

from . import _core
from ._core import ClientView, PoieticError, Service

__all__ = [
    "ClientView",
    "PoieticError",
    "Run",
    "Service",
    "audit",
    "classify_ess",
    "exit_code",
    "replay",
    "run_scenario",
    "service_code",
    "tertile_means",
    "protocol_version",
]

protocol_version: int = _core.protocol_version

_Scenario = Union[str, Mapping, os.PathLike]
_Log = Union[bytes, str, os.PathLike]

_EXIT_CODES = {"legitimate": 0, "illegitimate": 2, "insufficient_data": 3}


def _scenario_text(scenario: _Scenario) -> str:
    if isinstance(scenario, Mapping):
        return json.dumps(scenario)
    if isinstance(scenario, os.PathLike) or (isinstance(scenario, str) and not scenario.lstrip().startswith("{")):
        with open(scenario, encoding="utf-8") as f:
            return f.read()
    return scenario


def _log_bytes(log: _Log) -> bytes:
    if isinstance(log, bytes):
        return log
    with open(log, "rb") as f:
        return f.read()


class Run:
    """Result of one simulated run."""

    def __init__(self, raw: "_core.Run"):
        self._raw = raw

    @property
    def verdict(self) -> str:
        return self._raw.verdict

    @property
    def closure_score(self) -> Optional[float]:
        return self._raw.closure_score

    @property
    def alienated(self) -> list:
        return list(self._raw.alienated)

    @property
    def report(self) -> dict:
        return json.loads(self._raw.report_json())

    @property
    def metrics(self) -> dict:
        return json.loads(self._raw.metrics_json())

    def log_bytes(self) -> bytes:
        return self._raw.log_bytes()

    def ess_points(self) -> list:
        return list(self._raw.ess_points())

    def emit(self, out_dir: Union[str, os.PathLike]) -> None:
        """Writes the log, CSV tables, metrics and report into ``out_dir``."""
        self._raw.emit(os.fspath(out_dir))


def run_scenario(scenario: _Scenario, seed: Optional[int] = None) -> Run:
    """Runs a scenario given as a dict, JSON text or a file path."""
    return Run(_core.run_scenario(_scenario_text(scenario), seed))


def audit(
    log: _Log,
    window: int = 50,
    epsilon: float = 0.05,
    theta: float = 0.99,
    admission_window: int = 5,
) -> dict:
    """Audits a session log (bytes or path) and returns the legitimacy report."""
    report, _ = _core.audit_log(_log_bytes(log), window, epsilon, theta, admission_window)
    return json.loads(report)


def exit_code(verdict: str) -> int:
    """Process exit status the CLI uses for ``verdict``."""
    return _EXIT_CODES[verdict]


def replay(log: _Log) -> dict:
    """Reconstructs a session from its log bytes and summarizes it."""
    return json.loads(_core.replay_log(_log_bytes(log)))


def _qy(points: Iterable[Sequence[float]]) -> list:
    out = []
    for p in points:
        if len(p) == 3:
            p = p[1:]
        out.append((float(p[0]), float(p[1])))
    return out


def classify_ess(points: Iterable[Sequence[float]]) -> str:
    """``"S"``, ``"Z"`` or ``"indeterminate"`` for (q, y) or (agent, q, y) points."""
    return _core.classify_ess(_qy(points))


def tertile_means(points: Iterable[Sequence[float]]) -> Tuple[float, float, float]:
    return _core.tertile_means(_qy(points))


def service_code(config: _Scenario) -> str:
    """Session code (hex) a service started from ``config`` will require."""
    return _core.service_code(_scenario_text(config))
