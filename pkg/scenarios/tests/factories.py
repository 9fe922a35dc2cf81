"""
factory-boy factories and the desk scenario shared by the app tests.
"""

import factory

from scenarios.models import SimulationRun
from verify.models import CheckReport

# 125 velocity nodes and 4 cells; a full run takes well under a second
DESK_SCENARIO = """
[scenario]
name = desk
seed = 3

[geometry]
shape = slab
half_width = 1.0

[velocity]
radius = 2.0
spacing = 1.0

[collision]
n_polar = 2
n_azimuth = 4

[solver]
T_end = 0.02
n_cells = 4

[initial_data]
recipe = equilibrium

[verify]
checks = l2_growth, R_lower_bound
sample_count = 2
n_samples = 50
shards = 1
k_list = 1, 2, 4
T0_list = 0.5
"""


class SimulationRunFactory(factory.django.DjangoModelFactory):
    class Meta:
        model = SimulationRun

    name = factory.Sequence(lambda n: f"scenario-{n}")
    scenario_text = DESK_SCENARIO
    config_hash = factory.Sequence(lambda n: f"{n:064x}")
    seed = 3
    command = "run"
    status = "passed"
    exit_code = 0


class CheckReportFactory(factory.django.DjangoModelFactory):
    class Meta:
        model = CheckReport

    run = factory.SubFactory(SimulationRunFactory)
    check_name = "l2_growth"
    passed = True
    seed = 3
    report = factory.LazyAttribute(lambda o: {"check": o.check_name, "passed": o.passed})
