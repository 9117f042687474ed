from .config import (ATTACKS, DEFENSES, SCENARIOS, SCHEMA_VERSION, AttackSpec,
                     DefenseSpec, ExperimentConfig, load_config, parse_config)
from .results import CSV_HEADER, ResultTable, Row, compare, format_comparison
from .runner import ScenarioBundle, Workspace, run
from .seeds import stage_rng, stage_seed
