from .config import Command, RunConfig, parse_config, parse_gas
from .runner import RunResult, run

__all__ = ["Command", "RunConfig", "RunResult", "parse_config", "parse_gas", "run"]
