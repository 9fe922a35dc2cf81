"""
Tests for scenario parsing and serialization.

Tests cover:
- Minimal scenarios and defaults
- Range and cross-section validation, all violations at once
- Canonical serialization round trip and config hash
- cli overrides
- Shipped fixture files
"""

from dataclasses import FrozenInstanceError
from pathlib import Path

import pytest
from django.conf import settings

from core.exceptions import ScenarioValidationError
from scenarios.loader import config_hash, parse_scenario, serialize_scenario, with_overrides
from scenarios.scenario import Scenario
from scenarios.tests.factories import DESK_SCENARIO

MINIMAL = """
[scenario]
name = minimal

[geometry]
shape = slab

[initial_data]
recipe = equilibrium
"""

FIXTURES = sorted((Path(settings.BASE_DIR) / "scenarios" / "fixtures").glob("*.ini"))


def _violations(text):
    with pytest.raises(ScenarioValidationError) as exc_info:
        parse_scenario(text)
    return exc_info.value.violations


class TestParseScenario:
    """Tests for parse_scenario"""

    def test_minimal_scenario_uses_defaults(self):
        """Omitted sections take their defaults"""
        scenario = parse_scenario(MINIMAL)

        assert scenario.scenario.name == "minimal"
        assert scenario.scenario.seed == 0
        assert scenario.velocity.radius == 6.0
        assert scenario.solver.picard_tol == 1e-10
        assert scenario.weight.varpi == 1.0 / 64.0
        assert scenario.verify.checks == ()

    def test_desk_scenario(self):
        """List fields and section values are typed"""
        scenario = parse_scenario(DESK_SCENARIO)

        assert scenario.verify.checks == ("l2_growth", "R_lower_bound")
        assert scenario.verify.k_list == (1, 2, 4)
        assert scenario.verify.T0_list == (0.5,)
        assert scenario.velocity_grid().size == 125
        assert scenario.kernel().quadrature.size == 8

    def test_parse_from_path(self, tmp_path):
        """A path to an INI file is read"""
        path = tmp_path / "minimal.ini"
        path.write_text(MINIMAL)

        assert parse_scenario(path) == parse_scenario(str(path)) == parse_scenario(MINIMAL)

    def test_varpi_above_theorem_cap(self):
        """varpi = 0.05 breaks theorem mode"""
        violations = _violations(MINIMAL + "\n[weight]\nvarpi = 0.05\n")

        assert any(v.startswith("weight.varpi") for v in violations)

    def test_varpi_allowed_outside_theorem_mode(self):
        """The small-amplitude range accepts larger varpi"""
        text = MINIMAL.replace("name = minimal", "name = minimal\ntheorem_mode = false") + "\n[weight]\nvarpi = 0.05\n"

        assert parse_scenario(text).weight.varpi == 0.05

    def test_kappa_out_of_range(self):
        """kappa must lie in [0, 1]"""
        violations = _violations(MINIMAL + "\n[collision]\nkappa = 1.5\n")

        assert any(v.startswith("collision.kappa") for v in violations)

    def test_picard_tol_must_be_positive(self):
        """picard_tol = 0 is rejected"""
        violations = _violations(MINIMAL + "\n[solver]\npicard_tol = 0\n")

        assert "solver.picard_tol: must be > 0" in violations

    def test_all_violations_reported(self):
        """Independent problems are reported together"""
        text = MINIMAL + "\n[collision]\nkappa = 1.5\n\n[solver]\npicard_tol = 0\nn_cells = 1\n"

        violations = _violations(text)

        assert any(v.startswith("collision.kappa") for v in violations)
        assert any(v.startswith("solver.picard_tol") for v in violations)
        assert any(v.startswith("solver.n_cells") for v in violations)

    def test_cross_rules_reported_with_field_errors(self):
        """Cross-section rules still run when another section fails"""
        text = (
            MINIMAL.replace("shape = slab", "shape = unit_ball")
            + "\n[collision]\nkappa = 1.5\n"
        )

        violations = _violations(text)

        assert any(v.startswith("geometry.shape") for v in violations)
        assert any(v.startswith("collision.kappa") for v in violations)

    def test_unknown_keys_and_sections(self):
        """Typos are violations, not silently ignored"""
        violations = _violations(MINIMAL + "\n[solver]\npicard_tolerance = 1e-8\n\n[plots]\nstyle = dark\n")

        assert "solver.picard_tolerance: unknown key" in violations
        assert "plots: unknown section" in violations

    def test_unknown_recipe_and_check(self):
        """Recipe and check names are validated against their registries"""
        text = MINIMAL.replace("recipe = equilibrium", "recipe = shock") + "\n[verify]\nchecks = l2_growth, magic\n"

        violations = _violations(text)

        assert any(v.startswith("initial_data.recipe") for v in violations)
        assert any(v.startswith("verify.checks") for v in violations)

    def test_missing_required_section(self):
        """A scenario without geometry is rejected"""
        violations = _violations("[scenario]\nname = x\n\n[initial_data]\nrecipe = equilibrium\n")

        assert any(v.startswith("geometry.shape") for v in violations)

    def test_syntax_error(self):
        """Malformed INI text is a config error"""
        with pytest.raises(ScenarioValidationError) as exc_info:
            parse_scenario("[scenario\nname = x\n")

        assert exc_info.value.error_code == "config_error"
        assert exc_info.value.violations[0].startswith("syntax")

    def test_vacuum_hole_must_fit(self):
        """The hole must be narrower than the slab"""
        text = MINIMAL.replace("recipe = equilibrium", "recipe = vacuum_hole\nhole_half_width = 1.2")

        violations = _violations(text)

        assert "initial_data.hole_half_width: must be smaller than geometry.half_width" in violations

    @pytest.mark.parametrize("path", FIXTURES, ids=lambda p: p.stem)
    def test_shipped_fixtures_parse(self, path):
        """Every shipped scenario is valid"""
        scenario = parse_scenario(path)

        assert scenario.scenario.name == path.stem


class TestSerializeScenario:
    """Tests for serialize_scenario, config_hash and with_overrides"""

    def test_round_trip(self):
        """Parsing the canonical text gives the same scenario"""
        scenario = parse_scenario(DESK_SCENARIO)

        assert parse_scenario(serialize_scenario(scenario)) == scenario

    def test_default_round_trip(self):
        """The all-defaults scenario also round-trips"""
        scenario = parse_scenario(MINIMAL)

        assert parse_scenario(serialize_scenario(scenario)) == scenario
        assert serialize_scenario(scenario) == serialize_scenario(parse_scenario(serialize_scenario(scenario)))

    def test_hash_ignores_formatting(self):
        """Comments and key order do not change the hash"""
        reordered = MINIMAL.replace("name = minimal", "# comment\nname = minimal")

        assert config_hash(parse_scenario(MINIMAL)) == config_hash(parse_scenario(reordered))

    def test_hash_tracks_values(self):
        """Different values give different hashes"""
        other = MINIMAL.replace("name = minimal", "name = minimal\nseed = 1")

        assert config_hash(parse_scenario(MINIMAL)) != config_hash(parse_scenario(other))
        assert len(config_hash(parse_scenario(MINIMAL))) == 64

    def test_overrides(self):
        """Seed, threads and directory overrides replace only what is given"""
        scenario = parse_scenario(DESK_SCENARIO)

        changed = with_overrides(scenario, seed=11, threads=2, directory="/tmp/out")
        untouched = with_overrides(scenario)

        assert changed.scenario.seed == 11
        assert changed.solver.threads == 2
        assert changed.output.directory == "/tmp/out"
        assert changed.solver.T_end == scenario.solver.T_end
        assert untouched == scenario

    def test_scenario_defaults_are_frozen(self):
        """Scenario objects are immutable values"""
        scenario = Scenario()

        with pytest.raises(FrozenInstanceError):
            scenario.scenario.seed = 5
