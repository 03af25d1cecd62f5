from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import pytest

from ldes_viability.synthetic import analytic_toy


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def make_toy_dir(root: Path, horizon: int = 24, profile_rows: int | None = None,
                 config: str | None = None, state: str = "TX") -> Path:
    """Gas unit, solar unit with profile, one battery; ``profile_rows`` truncates the profile."""
    root.mkdir(parents=True, exist_ok=True)
    write_csv(root / "load.csv", ["hour", "load_mw"], [(h, 80 + 10 * np.sin(h / 4)) for h in range(horizon)])
    write_csv(
        root / "generators.csv",
        ["id", "ba", "state", "technology", "capacity_mw", "variable_cost_per_mwh", "fuel_price",
         "heat_rate", "fom_per_kw_yr", "ramp_frac_per_h", "kind", "max_invest_mw", "invest_cost_per_kw_yr"],
        [
            ["gas1", "BA1", state, "gas", "120", "5", "3", "7", "20", "0.5", "existing", "", ""],
            ["sol1", "BA1", state, "solar", "100", "0", "", "", "15", "", "existing", "", "30"],
        ],
    )
    write_csv(
        root / "storages.csv",
        ["id", "state", "kind", "duration_h", "power_mw", "rte", "fom_per_kw_yr", "invest_cost_per_kw_yr"],
        [["bat1", state, "sdes_existing", "2", "20", "0.85", "10", "70"]],
    )
    n = horizon if profile_rows is None else profile_rows
    write_csv(root / "profiles.csv", ["asset_id", "hour", "cf"],
              [("sol1", h, round(max(0.0, np.sin(np.pi * ((h % 24) - 6) / 12)), 4)) for h in range(n)])
    if config is not None:
        (root / "config.ini").write_text(config, encoding="utf-8")
    return root


@pytest.fixture
def toy_dir(tmp_path) -> Path:
    return make_toy_dir(tmp_path / "toy")


@pytest.fixture(scope="session")
def toy_spec():
    return analytic_toy()


# acceptance reporting: one PASS/FAIL line per criterion label
_criteria: dict[str, bool] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or rep.skipped:
        return
    if rep.when == "call" or rep.failed:
        label = mark.args[0]
        _criteria[label] = _criteria.get(label, True) and rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_criteria):
        terminalreporter.write_line(f"{'PASS' if _criteria[label] else 'FAIL'}  {label}")
