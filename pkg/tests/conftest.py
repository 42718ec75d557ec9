import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))
sys.setrecursionlimit(max(sys.getrecursionlimit(), 8000))  # what generation raises it to anyway

from gramforge import load_dynamic, load_graph, load_static, parse_grammar  # noqa: E402
from gramforge.graph import compile_grammar  # noqa: E402
from gramforge.sampling import ScriptedSampler  # noqa: E402

CORPUS = ("expr", "csv", "xml", "minic")


def graph_of(text: str):
    return compile_grammar(parse_grammar(text))


@pytest.fixture(scope="session")
def graphs():
    return {name: load_graph(name) for name in CORPUS}


@pytest.fixture(scope="session")
def static(graphs):
    return {name: load_static(g) for name, g in graphs.items()}


@pytest.fixture(scope="session")
def dynamic(graphs):
    return {name: load_dynamic(g) for name, g in graphs.items()}


@pytest.fixture(params=["static", "dynamic"])
def backend_kind(request):
    return request.param


@pytest.fixture
def expr(backend_kind, static, dynamic):
    return (static if backend_kind == "static" else dynamic)["expr"]


@pytest.fixture
def csv(backend_kind, static, dynamic):
    return (static if backend_kind == "static" else dynamic)["csv"]


def scripted(backend, choices, node_id=None, generators=()):
    """Build a tree from an exact choice script; the script must be used up."""
    s = ScriptedSampler(choices)
    tree = backend.generate(s, generators, node_id)
    assert s.exhausted, f"unused choices {s.choices[s.pos:]}"
    return tree


# Choice scripts over the expr grammar.  Order: <expr> alternation, then
# <number> alternation, <non_zero> pick, <digit>* count, per digit its pick.
EXPR_0 = [1, 0]
EXPR_12_PLUS_3 = [0, 1, 0, 1, 1, 1, 1, 1, 2, 0]
EXPR_1_PLUS_2 = [0, 1, 0, 0, 1, 1, 1, 0]
EXPR_3 = [1, 1, 2, 0]

# csv: header record "1;2\n" and no further records.
CSV_1_2 = [
    1,  # <csv_string_list>: field ";" list
    0, 0, 1, 7, 0,  # <raw_field> simple, no spaces, one char "1", no spaces
    0,  # <csv_string_list>: single field
    0, 0, 1, 8, 0,  # "2"
    0,  # no further records
]


# Lines recorded by the acceptance suite, echoed in the terminal summary.
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
