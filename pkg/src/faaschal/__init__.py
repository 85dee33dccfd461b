"""FaaSChal: choreographies for serverless functions, compiled to local code and APP policies."""

from importlib import resources

from .app import AppScript, Block, UnreachableService, emit_app, parse_app, synthesize
from .checker import chain_locations, check
from .deployment import generate_trace, parse_cluster, parse_deployment, parse_trace
from .locality import LocalitySet, extract
from .parser import parse
from .printer import pretty
from .projection import emit_unit, project
from .simulator import FirstFit, SeededRandom, simulate
from .syntax import ChorSyntaxError, Diagnostic

__version__ = "0.1.0"

__all__ = [
    "AppScript",
    "Block",
    "ChorSyntaxError",
    "Diagnostic",
    "FirstFit",
    "LocalitySet",
    "SeededRandom",
    "UnreachableService",
    "chain_locations",
    "check",
    "data_file",
    "emit_app",
    "emit_unit",
    "extract",
    "generate_trace",
    "parse",
    "parse_app",
    "parse_cluster",
    "parse_deployment",
    "parse_trace",
    "pretty",
    "project",
    "simulate",
    "synthesize",
]


def data_file(name: str) -> str:
    """Text of a bundled example input (``training.chor``, ``training.dep``, ...)."""
    return resources.files(__package__).joinpath("data", name).read_text(encoding="utf-8")
