"""JSON configuration documents for designs, timing and simulation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import jsonschema

from .design import AnalysisPlan, BoundaryTable, Design, DesignSpec
from .monitoring import TrialCourse, UpdatedAnalysisPlan
from .timing import TrialModel


class ConfigError(ValueError):
    """Configuration failed schema or semantic validation."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))


_PROB = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
_POS = {"type": "number", "exclusiveMinimum": 0}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["design", "enrollment", "survival"],
    "properties": {
        "design": {
            "type": "object",
            "additionalProperties": False,
            "required": ["alpha_one_sided", "power", "hr_alternative", "analyses"],
            "properties": {
                "alpha_one_sided": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
                "power": _PROB,
                "hr_alternative": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "allocation_ratio": _POS,
                "spending": {"enum": ["LanDeMetsOBF"]},
                "binding_futility": {"type": "boolean"},
                "max_events": {"type": "integer", "minimum": 1},
                "compensate_futility": {"type": "boolean"},
                "analyses": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["label", "information_fraction"],
                        "properties": {
                            "label": {"type": "string", "minLength": 1},
                            "information_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                            "efficacy": {"type": "boolean"},
                            "futility_hr": _POS,
                        },
                    },
                },
            },
        },
        "enrollment": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rate_per_month": _POS,
                "n_total": {"type": "integer", "minimum": 1},
                "piecewise": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["rate_per_month", "duration_months"],
                        "properties": {"rate_per_month": {"type": "number", "minimum": 0},
                                       "duration_months": _POS},
                    },
                },
            },
            "oneOf": [
                {"required": ["rate_per_month", "n_total"], "not": {"required": ["piecewise"]}},
                {"required": ["piecewise"], "not": {"required": ["rate_per_month"]}},
            ],
        },
        "survival": {
            "type": "object",
            "additionalProperties": False,
            "required": ["median_control_months", "median_experimental_months"],
            "properties": {"median_control_months": _POS, "median_experimental_months": _POS},
        },
        "dropout": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"annual_rate": {"type": "number", "minimum": 0, "exclusiveMaximum": 1}},
        },
        "updated_analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "label": {"type": "string", "minLength": 1},
                "target_events": {"type": "integer", "minimum": 1},
                "min_followup_months": _POS,
            },
        },
        "reporting": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "first_patient_in_date": {"type": "string", "format": "date"},
                "ssd_lag_weeks": {"type": "number", "minimum": 0},
                "two_sided_presentation": {"type": "boolean"},
                "endpoint": {"type": "string"},
            },
        },
    },
}


@dataclass(frozen=True)
class TrialConfig:
    spec: DesignSpec
    model: TrialModel
    max_events: int | None = None
    compensate_futility: bool = False
    updated: UpdatedAnalysisPlan = UpdatedAnalysisPlan()
    first_patient_in: date | None = None
    ssd_lag_weeks: float = 6.0
    two_sided_presentation: bool = True
    endpoint: str = "overall survival"

    def design(self, table: BoundaryTable | None = None) -> Design:
        """Design with the configured or calibrated maximum event count.

        A ``table`` read back from a design CSV is used verbatim.
        """
        if table is not None:
            return Design(self.spec, table)
        return Design.from_spec(self.spec, self.max_events, self.compensate_futility)

    def new_course(self, table: BoundaryTable | None = None) -> TrialCourse:
        return TrialCourse(self.spec, self.design(table).table, updated=self.updated, endpoint=self.endpoint,
                           first_patient_in=self.first_patient_in)


def parse_config(doc: Mapping[str, Any]) -> TrialConfig:
    """Validate a configuration document and build the domain objects.

    Raises:
        ConfigError: With one line per problem found.
    """
    validator = jsonschema.Draft202012Validator(SCHEMA, format_checker=jsonschema.FormatChecker())
    problems = [
        f"{'/'.join(str(p) for p in err.absolute_path) or '<root>'}: {err.message}"
        for err in sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    ]
    if problems:
        raise ConfigError(problems)
    d = doc["design"]
    try:
        spec = DesignSpec(
            alpha_one_sided=d["alpha_one_sided"],
            power_target=d["power"],
            hr_alternative=d["hr_alternative"],
            allocation_ratio=float(d.get("allocation_ratio", 1.0)),
            spending_family=d.get("spending", "LanDeMetsOBF"),
            binding_futility=d.get("binding_futility", False),
            analyses=tuple(
                AnalysisPlan(a["label"], a["information_fraction"], a.get("efficacy", False), a.get("futility_hr"))
                for a in d["analyses"]
            ),
        )
        e = doc["enrollment"]
        if "piecewise" in e:
            rates = [p["rate_per_month"] for p in e["piecewise"]]
            durations = [p["duration_months"] for p in e["piecewise"]]
        else:
            rates = [e["rate_per_month"]]
            durations = [e["n_total"] / e["rate_per_month"]]
        s = doc["survival"]
        model = TrialModel(
            tuple(rates), tuple(durations),
            median_survival_control=s["median_control_months"],
            median_survival_experimental=s["median_experimental_months"],
            annual_dropout_rate=doc.get("dropout", {}).get("annual_rate", 0.0),
            allocation_ratio=spec.allocation_ratio,
        )
        if "piecewise" in e and "n_total" in e and abs(model.n_total - e["n_total"]) > 1e-6:
            raise ValueError(f"enrollment: piecewise schedule recruits {model.n_total:g}, not n_total={e['n_total']}")
    except ValueError as exc:
        raise ConfigError([str(exc)]) from None
    u = doc.get("updated_analysis", {})
    rep = doc.get("reporting", {})
    fpi = rep.get("first_patient_in_date")
    return TrialConfig(
        spec=spec,
        model=model,
        max_events=d.get("max_events"),
        compensate_futility=d.get("compensate_futility", False),
        updated=UpdatedAnalysisPlan(u.get("label", "Updated"), u.get("target_events"), u.get("min_followup_months")),
        first_patient_in=date.fromisoformat(fpi) if fpi else None,
        ssd_lag_weeks=float(rep.get("ssd_lag_weeks", 6.0)),
        two_sided_presentation=rep.get("two_sided_presentation", True),
        endpoint=rep.get("endpoint", "overall survival"),
    )


def load_config(path: str | Path) -> TrialConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"not valid JSON: {exc}"]) from None
    return parse_config(doc)


def hypothetical_document() -> dict[str, Any]:
    """The worked example trial as a configuration document."""
    text = resources.files("seqtrial").joinpath("data/hypothetical_trial.json").read_text()
    return json.loads(text)


def hypothetical_config() -> TrialConfig:
    return parse_config(hypothetical_document())
