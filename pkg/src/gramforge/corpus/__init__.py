"""Bundled grammars and constraint files."""

from importlib import resources
from pathlib import Path

GRAMMARS = ("expr", "csv", "xml", "minic")


def corpus_path(name: str) -> Path:
    """Path of a bundled file; ``name`` may omit the ``.gbnf`` suffix."""
    if "." not in name:
        name += ".gbnf"
    p = Path(str(resources.files(__name__).joinpath(name)))
    if not p.exists():
        raise FileNotFoundError(f"no bundled corpus file {name!r}")
    return p


def constraints_path(grammar: str) -> Path:
    return corpus_path(f"{grammar}_constraints.toml")
