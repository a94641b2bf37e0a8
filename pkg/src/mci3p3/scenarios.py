"""Scenario and trial-config files: parsing, validation, rendering, fixtures.

A scenario document is JSON with a header (name, target rate, interval
margins, dosages) and the true toxicity matrix: ``combo[i-1][j-1]`` for the
combination block plus optional single-agent margins, which are required
whenever outcomes must be generated for the ladder stage.  The seven
standard scenarios ship as fixtures ``sc1`` .. ``sc7``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .core import DoseCombo, DoseGrid, EquivalenceInterval
from .models import PriorSpec, SamplerConfig
from .trial import TrialConfig


class ParseError(ValueError):
    """Malformed scenario or config document."""


@dataclass(frozen=True)
class Scenario:
    name: str
    grid: DoseGrid
    ei: EquivalenceInterval
    combo_tox: tuple[tuple[float, ...], ...]
    agent_a_tox: tuple[float, ...] | None
    agent_b_tox: tuple[float, ...] | None

    @property
    def has_margins(self) -> bool:
        return self.agent_a_tox is not None and self.agent_b_tox is not None

    def tox_at(self, d: DoseCombo) -> float:
        if d.i >= 1 and d.j >= 1:
            return self.combo_tox[d.i - 1][d.j - 1]
        if d.j == 0:
            if self.agent_a_tox is None:
                raise ParseError(f"scenario {self.name} has no drug-A margin")
            return self.agent_a_tox[d.i - 1]
        if self.agent_b_tox is None:
            raise ParseError(f"scenario {self.name} has no drug-B margin")
        return self.agent_b_tox[d.j - 1]

    def true_mtdcs(self) -> list[DoseCombo]:
        """Combo DCs whose true toxicity falls inside the interval."""
        return [d for d in self.grid.combo_dcs() if self.ei.contains(self.tox_at(d))]


def _require_keys(doc: dict, allowed: set[str], where: str) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise ParseError(f"{where}: unknown keys {sorted(unknown)}")


def _prob_row(values, where: str, count: int | None = None) -> tuple[float, ...]:
    try:
        row = tuple(float(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: not a number row: {exc}") from exc
    if count is not None and len(row) != count:
        raise ParseError(f"{where}: expected {count} entries, got {len(row)}")
    for v in row:
        if not 0.0 < v < 1.0:
            raise ParseError(f"{where}: probability {v} outside (0,1)")
    return row


def parse_scenario(doc: dict) -> Scenario:
    allowed = {"name", "p_t", "eps1", "eps2", "dosage_a", "dosage_b", "tox"}
    _require_keys(doc, allowed, "scenario")
    for key in ("name", "p_t", "dosage_a", "dosage_b", "tox"):
        if key not in doc:
            raise ParseError(f"scenario: missing {key!r}")
    ei = EquivalenceInterval(doc["p_t"], doc.get("eps1", 0.05), doc.get("eps2", 0.05))
    try:
        grid = DoseGrid(doc["dosage_a"], doc["dosage_b"])
    except ValueError as exc:
        raise ParseError(f"scenario dosages: {exc}") from exc
    tox = doc["tox"]
    _require_keys(tox, {"combo", "agent_a", "agent_b"}, "scenario.tox")
    combo = tox.get("combo")
    if not isinstance(combo, list) or len(combo) != grid.n_a:
        raise ParseError(f"scenario.tox.combo: need {grid.n_a} rows")
    combo_rows = tuple(
        _prob_row(row, f"scenario.tox.combo[{k}]", grid.n_b)
        for k, row in enumerate(combo)
    )
    agent_a = tox.get("agent_a")
    agent_b = tox.get("agent_b")
    if (agent_a is None) != (agent_b is None):
        raise ParseError("scenario.tox: both margins or neither")
    if agent_a is not None:
        agent_a = _prob_row(agent_a, "scenario.tox.agent_a", grid.n_a)
        agent_b = _prob_row(agent_b, "scenario.tox.agent_b", grid.n_b)
    return Scenario(
        name=str(doc["name"]),
        grid=grid,
        ei=ei,
        combo_tox=combo_rows,
        agent_a_tox=agent_a,
        agent_b_tox=agent_b,
    )


def render_scenario(s: Scenario) -> dict:
    doc = {
        "name": s.name,
        "p_t": float(s.ei.p_t),
        "eps1": float(s.ei.eps1),
        "eps2": float(s.ei.eps2),
        "dosage_a": list(s.grid.dosage_a),
        "dosage_b": list(s.grid.dosage_b),
        "tox": {"combo": [list(row) for row in s.combo_tox]},
    }
    if s.agent_a_tox is not None:
        doc["tox"]["agent_a"] = list(s.agent_a_tox)
        doc["tox"]["agent_b"] = list(s.agent_b_tox)
    return doc


FIXTURE_NAMES = tuple(f"sc{k}" for k in range(1, 8))


def load_scenario(name_or_path: str) -> Scenario:
    """Load a named fixture (``sc1`` .. ``sc7``) or a scenario file path."""
    if name_or_path in FIXTURE_NAMES:
        ref = resources.files("mci3p3").joinpath(f"fixtures/{name_or_path}.json")
        doc = json.loads(ref.read_text())
    else:
        p = Path(name_or_path)
        if not p.exists():
            raise ParseError(
                f"unknown scenario {name_or_path!r}: not a fixture "
                f"({', '.join(FIXTURE_NAMES)}) and not a file"
            )
        doc = json.loads(p.read_text())
    return parse_scenario(doc)


# -- trial config ------------------------------------------------------------

_CONFIG_KEYS = {
    "dosage_a",
    "dosage_b",
    "p_t",
    "eps1",
    "eps2",
    "cohort_size",
    "max_total_n",
    "design_variant",
    "monitor_eta",
    "sr1_eta",
    "eps",
    "prior",
    "sampler",
    "seed",
    "stage1_enabled",
    "starting_dcs",
    "multiple_mtdc",
}
_PRIOR_KEYS = {
    "intercept_mean",
    "intercept_var",
    "slope_location",
    "slope_var",
    "outer_mean",
    "outer_var",
}
_SAMPLER_KEYS = {"iters", "burnin", "thin", "init_step"}


def parse_config(doc: dict, grid: DoseGrid | None = None) -> TrialConfig:
    """Validated TrialConfig from a JSON document; unknown keys are rejected.

    ``grid`` supplies the lattice when the document omits dosages (the
    simulator passes the scenario's grid).  A document with neither falls
    back to index dosages on a 4 x 5 lattice.
    """
    _require_keys(doc, _CONFIG_KEYS, "config")
    if "dosage_a" in doc or "dosage_b" in doc:
        if not ("dosage_a" in doc and "dosage_b" in doc):
            raise ParseError("config: dosage_a and dosage_b come together")
        try:
            grid = DoseGrid(doc["dosage_a"], doc["dosage_b"])
        except ValueError as exc:
            raise ParseError(f"config dosages: {exc}") from exc
    elif grid is None:
        grid = DoseGrid.from_levels(4, 5)
    ei = EquivalenceInterval(
        doc.get("p_t", 0.3), doc.get("eps1", 0.05), doc.get("eps2", 0.05)
    )
    prior_doc = doc.get("prior", {})
    _require_keys(prior_doc, _PRIOR_KEYS, "config.prior")
    sampler_doc = doc.get("sampler", {})
    _require_keys(sampler_doc, _SAMPLER_KEYS, "config.sampler")
    starting = doc.get("starting_dcs")
    if starting is not None:
        starting = tuple(DoseCombo(int(i), int(j)) for i, j in starting)
    try:
        return TrialConfig(
            grid=grid,
            ei=ei,
            cohort_size=int(doc.get("cohort_size", 3)),
            max_total_n=int(doc.get("max_total_n", 96)),
            design_variant=str(doc.get("design_variant", "two-stage")),
            monitor_eta=float(doc.get("monitor_eta", 0.4)),
            sr1_eta=float(doc.get("sr1_eta", 0.95)),
            eps=float(doc.get("eps", 1e-6)),
            prior=PriorSpec(**prior_doc),
            sampler=SamplerConfig(**sampler_doc),
            seed=int(doc.get("seed", 0)),
            stage1_enabled=bool(doc.get("stage1_enabled", True)),
            starting_dcs=starting,
            multiple_mtdc=bool(doc.get("multiple_mtdc", False)),
        )
    except ValueError as exc:
        raise ParseError(f"config: {exc}") from exc


def config_for_scenario(scenario: Scenario, doc: dict | None = None) -> TrialConfig:
    """Trial config wired to a scenario's grid and interval."""
    doc = dict(doc or {})
    cfg = parse_config(doc, grid=scenario.grid)
    if "p_t" not in doc and "eps1" not in doc and "eps2" not in doc:
        cfg = replace(cfg, ei=scenario.ei)
    if cfg.stage1_enabled and not scenario.has_margins:
        raise ParseError(
            f"scenario {scenario.name} lacks single-agent margins required "
            "for the ladder stage"
        )
    return cfg
