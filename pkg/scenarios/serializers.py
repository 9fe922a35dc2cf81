from rest_framework import serializers

from geometry.domains import list_available_domains
from solver.config import MODES
from solver.initial_data import RECIPE_REGISTRY
from .models import SimulationRun
from .scenario import KNOWN_CHECKS

THEOREM_VARPI_CAP = 1.0 / 64.0


class CommaSeparatedListField(serializers.ListField):
    """List field that also accepts the INI form 'a, b, c'."""

    def to_internal_value(self, data):
        if isinstance(data, str):
            data = [item.strip() for item in data.split(",") if item.strip()]
        return super().to_internal_value(data)


class ScenarioSectionSerializer(serializers.Serializer):
    name = serializers.CharField(max_length=200)
    seed = serializers.IntegerField(required=False, min_value=0)
    theorem_mode = serializers.BooleanField(required=False)
    march = serializers.BooleanField(required=False)


class GeometrySectionSerializer(serializers.Serializer):
    shape = serializers.CharField()
    half_width = serializers.FloatField(required=False)

    def validate_shape(self, value):
        value = value.lower().strip()
        if value not in list_available_domains():
            raise serializers.ValidationError(
                f"unknown shape '{value}'; available: {', '.join(list_available_domains())}"
            )
        return value

    def validate_half_width(self, value):
        if not value > 0.0:
            raise serializers.ValidationError("must be > 0")
        return value


class VelocitySectionSerializer(serializers.Serializer):
    radius = serializers.FloatField(required=False)
    spacing = serializers.FloatField(required=False)

    def validate_radius(self, value):
        if not value > 0.0:
            raise serializers.ValidationError("must be > 0")
        return value

    def validate_spacing(self, value):
        if not value > 0.0:
            raise serializers.ValidationError("must be > 0")
        return value

    def validate(self, attrs):
        radius = attrs.get("radius", 6.0)
        if attrs.get("spacing", 0.75) > radius:
            raise serializers.ValidationError({"spacing": "must not exceed radius"})
        return attrs


class CollisionSectionSerializer(serializers.Serializer):
    kappa = serializers.FloatField(required=False, min_value=0.0, max_value=1.0)
    b0 = serializers.FloatField(required=False)
    n_polar = serializers.IntegerField(required=False, min_value=1)
    n_azimuth = serializers.IntegerField(required=False, min_value=1)

    def validate_b0(self, value):
        if not value > 0.0:
            raise serializers.ValidationError("must be > 0")
        return value


class WeightSectionSerializer(serializers.Serializer):
    rho = serializers.FloatField(required=False)
    beta = serializers.FloatField(required=False, min_value=2.5)
    varpi = serializers.FloatField(required=False, min_value=0.0, max_value=0.25)

    def validate_rho(self, value):
        if not value > 1.0:
            raise serializers.ValidationError("must be > 1")
        return value


class SolverSectionSerializer(serializers.Serializer):
    dt = serializers.FloatField(required=False, allow_null=True)
    picard_tol = serializers.FloatField(required=False)
    picard_max_iters = serializers.IntegerField(required=False, min_value=1)
    C_hat_rho = serializers.FloatField(required=False)
    delta_target = serializers.FloatField(required=False)
    M0_cap = serializers.FloatField(required=False)
    T_end = serializers.FloatField(required=False)
    conservation_projection = serializers.BooleanField(required=False)
    n_cells = serializers.IntegerField(required=False, min_value=2)
    mode = serializers.ChoiceField(choices=MODES, required=False)
    gain_renormalization = serializers.BooleanField(required=False)
    lattice_wall_constant = serializers.BooleanField(required=False)
    max_halvings = serializers.IntegerField(required=False, min_value=0)
    threads = serializers.IntegerField(required=False, min_value=1)

    def _positive(self, value):
        if value is not None and not value > 0.0:
            raise serializers.ValidationError("must be > 0")
        return value

    validate_dt = _positive
    validate_picard_tol = _positive
    validate_C_hat_rho = _positive
    validate_delta_target = _positive
    validate_M0_cap = _positive
    validate_T_end = _positive


class InitialDataSectionSerializer(serializers.Serializer):
    recipe = serializers.CharField()
    factor = serializers.FloatField(required=False, min_value=0.0)
    amplitude = serializers.FloatField(required=False, min_value=0.0)
    hole_half_width = serializers.FloatField(required=False)

    def validate_recipe(self, value):
        if value not in RECIPE_REGISTRY:
            raise serializers.ValidationError(
                f"unknown recipe '{value}'; available: {', '.join(RECIPE_REGISTRY.keys())}"
            )
        return value

    def validate(self, attrs):
        if attrs.get("recipe") == "large_amplitude" and attrs.get("amplitude", 0.1) > 1.0:
            raise serializers.ValidationError({"amplitude": "large_amplitude needs amplitude <= 1"})
        return attrs


class OutputSectionSerializer(serializers.Serializer):
    interval = serializers.FloatField(required=False, min_value=0.0)
    directory = serializers.CharField(required=False, allow_blank=True)


class VerifySectionSerializer(serializers.Serializer):
    checks = CommaSeparatedListField(child=serializers.CharField(), required=False)
    sample_count = serializers.IntegerField(required=False, min_value=1)
    n_samples = serializers.IntegerField(required=False, min_value=1)
    shards = serializers.IntegerField(required=False, min_value=1)
    T0 = serializers.FloatField(required=False)
    T0_list = CommaSeparatedListField(child=serializers.FloatField(), required=False)
    k_list = CommaSeparatedListField(child=serializers.IntegerField(min_value=1), required=False, allow_empty=False)
    epsilon = serializers.FloatField(required=False, min_value=0.0, max_value=1.0)
    c_tilde = serializers.FloatField(required=False)
    C4 = serializers.FloatField(required=False)
    ratio_floor = serializers.FloatField(required=False)
    gauss_threshold = serializers.FloatField(required=False)
    fit_window_start = serializers.FloatField(required=False, min_value=0.0)
    fit_window_end = serializers.FloatField(required=False)
    drift_bound = serializers.FloatField(required=False, min_value=0.0)
    refine = serializers.BooleanField(required=False)
    nullspace_tol = serializers.FloatField(required=False, min_value=0.0)
    l2_safety = serializers.FloatField(required=False, min_value=1.0)
    density_time = serializers.FloatField(required=False, min_value=0.0)
    amplitudes = CommaSeparatedListField(
        child=serializers.FloatField(min_value=0.0), required=False, allow_empty=False
    )

    def validate_checks(self, value):
        unknown = [name for name in value if name not in KNOWN_CHECKS]
        if unknown:
            raise serializers.ValidationError(
                f"unknown checks {', '.join(unknown)}; available: {', '.join(KNOWN_CHECKS)}"
            )
        return value

    def validate_T0(self, value):
        if not value > 0.0:
            raise serializers.ValidationError("must be > 0")
        return value

    def validate(self, attrs):
        start = attrs.get("fit_window_start", 0.2)
        end = attrs.get("fit_window_end", 1.0)
        if not end > start:
            raise serializers.ValidationError({"fit_window_end": "must exceed fit_window_start"})
        return attrs


SECTION_SERIALIZERS = {
    "scenario": ScenarioSectionSerializer,
    "geometry": GeometrySectionSerializer,
    "velocity": VelocitySectionSerializer,
    "collision": CollisionSectionSerializer,
    "weight": WeightSectionSerializer,
    "solver": SolverSectionSerializer,
    "initial_data": InitialDataSectionSerializer,
    "output": OutputSectionSerializer,
    "verify": VerifySectionSerializer,
}


def cross_field_violations(sections: dict) -> list:
    """
    Rules spanning sections, checked on whichever sections validated on their own.
    Returns 'section.field: message' strings.
    """
    problems = []
    scenario = sections.get("scenario")
    weight = sections.get("weight")
    geometry = sections.get("geometry")
    initial = sections.get("initial_data")

    if scenario is not None and weight is not None:
        if scenario.get("theorem_mode", True) and weight.get("varpi", THEOREM_VARPI_CAP) > THEOREM_VARPI_CAP:
            problems.append(
                f"weight.varpi: must be <= 1/64 ({THEOREM_VARPI_CAP}) in theorem mode, got {weight['varpi']}"
            )
    if scenario is not None and geometry is not None:
        if scenario.get("march", True) and geometry.get("shape") != "slab":
            problems.append(
                f"geometry.shape: the march runs on the slab only; set scenario.march = false for {geometry.get('shape')}"
            )
    if geometry is not None and initial is not None:
        hole = initial.get("hole_half_width", 0.3)
        if initial.get("recipe") == "vacuum_hole" and not hole < geometry.get("half_width", 1.0):
            problems.append("initial_data.hole_half_width: must be smaller than geometry.half_width")
    return problems


class ScenarioSerializer(serializers.Serializer):
    """
    Validates a whole scenario, one nested serializer per INI section.
    Cross-section rules run in validate().
    """

    scenario = ScenarioSectionSerializer()
    geometry = GeometrySectionSerializer()
    velocity = VelocitySectionSerializer(required=False)
    collision = CollisionSectionSerializer(required=False)
    weight = WeightSectionSerializer(required=False)
    solver = SolverSectionSerializer(required=False)
    initial_data = InitialDataSectionSerializer()
    output = OutputSectionSerializer(required=False)
    verify = VerifySectionSerializer(required=False)

    def validate(self, attrs):
        problems = cross_field_violations(attrs)
        if problems:
            raise serializers.ValidationError(problems)
        return attrs


class SimulationRunSerializer(serializers.ModelSerializer):
    """
    Serializer for stored runs.
    Includes scenario name, config hash, seed, status, exit code and manifest.
    """

    class Meta:
        model = SimulationRun
        fields = [
            "id",
            "name",
            "config_hash",
            "seed",
            "command",
            "status",
            "exit_code",
            "output_dir",
            "started_at",
            "finished_at",
            "manifest",
            "scenario_text",
        ]
        read_only_fields = fields
