from inhomwalk.config.loader import (
    ConstraintSpec,
    OutputSpec,
    ProbQuery,
    SampleQuery,
    ScenarioConfig,
    family_from_mapping,
    load_law_file,
    load_scenario_config,
)

__all__ = [
    "ConstraintSpec",
    "OutputSpec",
    "ProbQuery",
    "SampleQuery",
    "ScenarioConfig",
    "family_from_mapping",
    "load_law_file",
    "load_scenario_config",
]
