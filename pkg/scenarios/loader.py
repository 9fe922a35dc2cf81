"""
Scenario text: parsing, validation and canonical serialization.

The format is flat INI with one section per module. Parsing reports every
violation at once as 'section.field: message'.
"""

import configparser
import hashlib
import logging
import os
from dataclasses import fields, replace
from pathlib import Path
from typing import Dict, List, Union

from core.exceptions import ScenarioValidationError
from .scenario import (
    CollisionSection,
    GeometrySection,
    InitialDataSection,
    OutputSection,
    Scenario,
    ScenarioSection,
    VelocitySection,
    VerifySection,
)
from solver.config import SolverConfig
from velocity.grid import WeightSpec
from .serializers import SECTION_SERIALIZERS, ScenarioSerializer, cross_field_violations

logger = logging.getLogger(__name__)

SECTION_TYPES = {
    "scenario": ScenarioSection,
    "geometry": GeometrySection,
    "velocity": VelocitySection,
    "collision": CollisionSection,
    "weight": WeightSpec,
    "solver": SolverConfig,
    "initial_data": InitialDataSection,
    "output": OutputSection,
    "verify": VerifySection,
}


def _read_source(source: Union[str, Path]) -> str:
    if isinstance(source, Path):
        return source.read_text()
    if "\n" not in source and "[" not in source and os.path.isfile(source):
        return Path(source).read_text()
    return source


def _flatten_errors(errors, prefix: str = "") -> List[str]:
    flat = []
    if isinstance(errors, dict):
        for key, value in errors.items():
            if key == "non_field_errors":
                flat.extend(_flatten_errors(value, prefix))
            else:
                flat.extend(_flatten_errors(value, f"{prefix}.{key}" if prefix else str(key)))
    elif isinstance(errors, list):
        for item in errors:
            if isinstance(item, (dict, list)):
                flat.extend(_flatten_errors(item, prefix))
            elif prefix:
                flat.append(f"{prefix}: {item}")
            else:
                flat.append(str(item))
    else:
        flat.append(f"{prefix}: {errors}" if prefix else str(errors))
    return flat


def _coerce(section_type, values: Dict) -> object:
    names = {f.name for f in fields(section_type)}
    kwargs = {}
    for key, value in values.items():
        if key not in names:
            continue
        kwargs[key] = tuple(value) if isinstance(value, list) else value
    return section_type(**kwargs)


def parse_scenario(source: Union[str, Path]) -> Scenario:
    """
    Parse and validate scenario text (or a path to it).

    Raises:
        ScenarioValidationError: with every violation found
    """
    text = _read_source(source)
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ScenarioValidationError([f"syntax: {str(e).splitlines()[0]}"])

    violations: List[str] = []
    raw = {}
    for section in parser.sections():
        if section not in SECTION_SERIALIZERS:
            violations.append(f"{section}: unknown section")
            continue
        known = set(SECTION_SERIALIZERS[section]().fields.keys())
        for key in parser[section]:
            if key not in known:
                violations.append(f"{section}.{key}: unknown key")
        raw[section] = {key: value for key, value in parser[section].items() if key in known}
    data = {section: raw.get(section, {}) for section in SECTION_SERIALIZERS}

    serializer = ScenarioSerializer(data=data)
    if not serializer.is_valid():
        violations.extend(_flatten_errors(serializer.errors))
        # sections that validated alone can still break cross-section rules
        standalone = {}
        for section, serializer_class in SECTION_SERIALIZERS.items():
            single = serializer_class(data=data[section])
            if single.is_valid():
                standalone[section] = single.validated_data
        for problem in cross_field_violations(standalone):
            if problem not in violations:
                violations.append(problem)
    if violations:
        logger.warning(f"Scenario rejected with {len(violations)} violations", extra={"violations": violations})
        raise ScenarioValidationError(violations)

    validated = serializer.validated_data
    sections = {name: _coerce(SECTION_TYPES[name], validated.get(name, {})) for name in SECTION_TYPES}
    return Scenario(**sections)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ", ".join(_format_value(item) for item in value)
    return str(value)


def serialize_scenario(scenario: Scenario) -> str:
    """Canonical INI text with every field written; parse_scenario inverts it exactly."""
    lines = []
    for name, section_type in SECTION_TYPES.items():
        section = getattr(scenario, name)
        lines.append(f"[{name}]")
        for f in fields(section_type):
            value = getattr(section, f.name)
            if value is None:
                continue
            lines.append(f"{f.name} = {_format_value(value)}")
        lines.append("")
    return "\n".join(lines)


def config_hash(scenario: Scenario) -> str:
    return hashlib.sha256(serialize_scenario(scenario).encode("utf-8")).hexdigest()


def with_overrides(scenario: Scenario, seed=None, threads=None, directory=None) -> Scenario:
    """Apply cli overrides; unset values keep the scenario's own."""
    if seed is not None:
        scenario = replace(scenario, scenario=replace(scenario.scenario, seed=int(seed)))
    if threads is not None:
        scenario = replace(scenario, solver=replace(scenario.solver, threads=int(threads)))
    if directory is not None:
        scenario = replace(scenario, output=replace(scenario.output, directory=str(directory)))
    return scenario
