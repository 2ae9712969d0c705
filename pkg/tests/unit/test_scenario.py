"""Unit tests for scenario parsing, validation, hashing and initial data."""

import numpy as np
import pandas as pd
import pytest

from basis import make_basis
from errors import ConfigError, UnsupportedMode
from scenario import (
    ScenarioError,
    build_basis,
    check_compatibility,
    config_hash,
    effective_defaults,
    fit_tabulated_field,
    initial_coefficients,
    load_scenario,
    parse_scenario,
    validate_scenario,
)

PLATE_SCENARIO = """\
name: plate-small
model:
  variant: plate-I
  params:
    length_x: 1.0
    length_y: 1.0
    thickness: 0.05
    youngs_modulus: 1.0
    poisson_ratio: 0.3
basis:
  modes_x: 3
  modes_y: 3
integrator:
  dt: 0.5
  t_final: 2.0
  scheme: explicit-rk4-reduced
  mode: reduced
"""


class TestParsing:
    """Test YAML parsing and schema validation."""

    def test_valid_beam_scenario(self, beam_scenario_text):
        config = parse_scenario(beam_scenario_text)
        assert config.name == "beam-small"
        assert config.model.spec.is_beam
        assert config.integrator.scheme == "implicit-midpoint-projected"
        assert config.output.snapshot_times == [0.2]

    def test_zero_dt_names_field_and_line(self, beam_scenario_text):
        text = beam_scenario_text.replace("dt: 0.02", "dt: 0.0")
        with pytest.raises(ScenarioError) as info:
            parse_scenario(text)
        problem = info.value.problems[0]
        assert problem["field"] == "integrator.dt"
        assert problem["line"] == 14
        assert "integrator.dt" in str(info.value)

    def test_unknown_key_is_rejected(self, beam_scenario_text):
        text = beam_scenario_text.replace("  t_final: 0.4", "  t_final: 0.4\n  tolerance: 1e-3")
        with pytest.raises(ScenarioError) as info:
            parse_scenario(text)
        assert info.value.problems[0]["field"] == "integrator.tolerance"
        assert info.value.problems[0]["line"] == 16

    def test_physical_parameters_are_checked(self, beam_scenario_text):
        text = beam_scenario_text.replace("stiffness: 1.0", "stiffness: -1.0")
        with pytest.raises(ScenarioError) as info:
            parse_scenario(text)
        assert info.value.problems[0]["field"].startswith("model")

    def test_yaml_syntax_error_reports_line(self):
        with pytest.raises(ScenarioError, match="line"):
            parse_scenario("model:\n  variant: [beam-eta2\n")

    def test_top_level_must_be_mapping(self):
        with pytest.raises(ScenarioError):
            parse_scenario("- 1\n- 2\n")

    def test_scenario_error_is_config_error(self):
        assert issubclass(ScenarioError, ConfigError)

    def test_plate_needs_modes_y(self):
        text = PLATE_SCENARIO.replace("  modes_y: 3\n", "")
        with pytest.raises(ScenarioError, match="modes_y"):
            parse_scenario(text)

    def test_probe_outside_domain(self, beam_scenario_text):
        with pytest.raises(ScenarioError, match="outside"):
            parse_scenario(beam_scenario_text.replace("[[0.5]]", "[[1.5]]"))

    def test_snapshot_after_final_time(self, beam_scenario_text):
        with pytest.raises(ScenarioError, match="t_final"):
            parse_scenario(beam_scenario_text.replace("[0.2]", "[0.9]"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError, match="Cannot read"):
            load_scenario(tmp_path / "absent.yaml")


class TestCompatibility:
    """Test scheme and mode combinations."""

    def test_plate_i_reduced_rk4_is_unsupported(self):
        with pytest.raises(UnsupportedMode):
            check_compatibility(parse_scenario(PLATE_SCENARIO))

    def test_rk4_requires_reduced_mode(self, beam_scenario_text):
        text = beam_scenario_text.replace("  t_final: 0.4", "  t_final: 0.4\n  scheme: explicit-rk4-reduced")
        with pytest.raises(UnsupportedMode):
            check_compatibility(parse_scenario(text))

    def test_validate_surfaces_unsupported_mode(self, write_scenario):
        with pytest.raises(UnsupportedMode):
            validate_scenario(write_scenario(PLATE_SCENARIO))

    def test_model_iii_validates_with_verb_note(self, write_scenario):
        """Test integrator settings on Model III pass validation but are flagged."""
        summary = validate_scenario(write_scenario(PLATE_SCENARIO.replace("plate-I", "plate-III")))
        assert len(summary.notes) == 1
        assert "static and modes verbs only" in summary.notes[0]
        assert "note: plate-III supports the static and modes verbs only" in summary.render()

    def test_beam_has_no_verb_notes(self, write_scenario, beam_scenario_text):
        summary = validate_scenario(write_scenario(beam_scenario_text))
        assert summary.notes == []
        assert "note:" not in summary.render()


class TestHashAndDefaults:
    """Test the canonical config hash and the effective defaults listing."""

    def test_hash_ignores_formatting(self, beam_scenario_text):
        reformatted = "# comment\n" + beam_scenario_text.replace("dt: 0.02", "dt: 2.0e-2")
        assert config_hash(parse_scenario(beam_scenario_text)) == config_hash(parse_scenario(reformatted))

    def test_hash_counts_explicit_defaults_as_equal(self, beam_scenario_text):
        explicit = beam_scenario_text.replace("  t_final: 0.4", "  t_final: 0.4\n  mode: multiplier")
        assert config_hash(parse_scenario(beam_scenario_text)) == config_hash(parse_scenario(explicit))

    def test_hash_changes_with_values(self, beam_scenario_text):
        changed = beam_scenario_text.replace("dt: 0.02", "dt: 0.01")
        assert config_hash(parse_scenario(beam_scenario_text)) != config_hash(parse_scenario(changed))
        assert len(config_hash(parse_scenario(changed))) == 64

    def test_defaults_list_unset_keys(self, beam_scenario_text):
        defaults = effective_defaults(parse_scenario(beam_scenario_text))
        assert 'integrator.scheme = "implicit-midpoint-projected"' in defaults
        assert "basis.modes_y = null" in defaults
        assert any(entry.startswith("load = ") for entry in defaults)
        assert not any(entry.startswith("integrator.dt") for entry in defaults)

    def test_validate_renders_summary(self, write_scenario, beam_scenario_text):
        summary = validate_scenario(write_scenario(beam_scenario_text))
        text = summary.render()
        assert text.startswith("valid\n")
        assert f"hash: {summary.config_hash}" in text


class TestInitialData:
    """Test modal initial coefficients and tabulated fields."""

    def test_tip_measure_sets_tip_deflection(self, beam_scenario_text):
        config = parse_scenario(beam_scenario_text)
        basis = build_basis(config)
        c0, cdot0 = initial_coefficients(config, basis)
        assert float(basis.evaluate(c0, [1.0])[0]) == pytest.approx(0.01, rel=1e-12)
        assert not np.any(c0[1:]) and not np.any(cdot0)

    def test_coefficient_measure(self, beam_scenario_text):
        text = beam_scenario_text.replace("  amplitude: 0.01", "  amplitude: 0.01\n  measure: coefficient")
        config = parse_scenario(text)
        c0, _ = initial_coefficients(config, build_basis(config))
        assert c0[0] == 0.01

    def test_zero_initial_data(self, beam_scenario_text):
        text = beam_scenario_text.replace("kind: mode", "kind: zero")
        config = parse_scenario(text)
        c0, cdot0 = initial_coefficients(config, build_basis(config))
        assert not np.any(c0) and not np.any(cdot0)

    def test_tabulated_field_fit(self, tmp_path, beam_eta2, rng):
        basis = make_basis(beam_eta2, 4)
        c = 0.01 * rng.standard_normal(4)
        cdot = 0.1 * rng.standard_normal(4)
        x = np.linspace(0.0, 1.0, 25)
        path = tmp_path / "w.csv"
        pd.DataFrame({"x": x, "w0": basis.evaluate(c, x), "w1": basis.evaluate(cdot, x)}).to_csv(path, index=False)
        c0, cdot0 = fit_tabulated_field(path, basis)
        assert np.allclose(c0, c, atol=1e-10)
        assert np.allclose(cdot0, cdot, atol=1e-10)

    def test_tabulated_field_needs_columns_and_samples(self, tmp_path, beam_eta2):
        basis = make_basis(beam_eta2, 4)
        path = tmp_path / "bad.csv"
        pd.DataFrame({"x": [0.0, 0.5], "w": [0.0, 0.1]}).to_csv(path, index=False)
        with pytest.raises(ScenarioError, match="missing columns"):
            fit_tabulated_field(path, basis)
        pd.DataFrame({"x": [0.0, 0.5], "w0": [0.0, 0.1]}).to_csv(path, index=False)
        with pytest.raises(ScenarioError, match="cannot determine"):
            fit_tabulated_field(path, basis)

    def test_field_file_resolves_relative_to_scenario(self, tmp_path, beam_scenario_text, beam_eta2):
        x = np.linspace(0.0, 1.0, 20)
        pd.DataFrame({"x": x, "w0": 0.01 * x**2}).to_csv(tmp_path / "field.csv", index=False)
        text = beam_scenario_text.replace(
            "  kind: mode\n  mode: 1\n  amplitude: 0.01\n", "  kind: field\n  file: field.csv\n")
        path = tmp_path / "scenario.yaml"
        path.write_text(text, encoding="utf-8")
        config = load_scenario(path)
        assert config.initial.file == tmp_path / "field.csv"
        c0, _ = initial_coefficients(config, build_basis(config))
        assert np.any(c0)
