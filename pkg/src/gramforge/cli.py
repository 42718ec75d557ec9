"""Command-line interface: ``gramforge <command> ...``.

Exit status is 0 on success, 1 for usage errors and 2 for runtime errors
(bad grammar, unsatisfiable depth, failing constraint, missing file).
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__, load_graph
from .dynamic import load_dynamic
from .generation import DepthLimiter, GenerationError, flattener_for
from .grammar import GrammarError, validate_reachability
from .sampling import RandomSampler

__all__ = ["main", "build_parser"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _duration(text: str) -> float:
    """Seconds from ``"30"``, ``"30s"``, ``"2m"`` or ``"500ms"``."""
    t = text.strip().lower()
    for suffix, scale in (("ms", 1e-3), ("s", 1.0), ("m", 60.0), ("h", 3600.0)):
        if t.endswith(suffix):
            t, mult = t[:-len(suffix)], scale
            break
    else:
        mult = 1.0
    try:
        value = float(t) * mult
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a duration: {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("duration must be positive")
    return value


def _op_list(text: str) -> list[str]:
    from .bench import OPS
    ops = [o.strip() for o in text.split(",") if o.strip()]
    bad = [o for o in ops if o not in OPS]
    if bad or not ops:
        raise argparse.ArgumentTypeError(f"unknown operation(s) {bad}; choose from {', '.join(OPS)}")
    return ops


def _input_files(items) -> list[Path]:
    out: list[Path] = []
    for item in items:
        p = Path(item)
        if p.is_dir():
            out.extend(sorted(f for f in p.iterdir() if f.is_file()))
        elif p.exists():
            out.append(p)
        else:
            raise FileNotFoundError(f"no such input: {item}")
    return out


def _backend(graph, kind: str):
    if kind == "dynamic":
        return load_dynamic(graph)
    from .static import load_static
    return load_static(graph)


def _seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(63)
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def _gen_chunk(job):
    grammar, kind, seed, lo, hi, max_depth, flatten = job
    graph = load_graph(grammar)
    backend = _backend(graph, kind)
    gens = [flattener_for(graph, r) for r in flatten]
    if max_depth is not None:
        gens.append(DepthLimiter(max_depth))
    out = []
    for i in range(lo, hi):
        ctx = backend.engine(RandomSampler([seed, i]), gens)
        out.append(backend.serialize(ctx.generate()))
    return out


def cmd_generate(args) -> int:
    graph = load_graph(args.grammar)
    for w in validate_reachability(graph.ast):
        print(f"warning: {w}", file=sys.stderr)
    seed = _seed(args)
    jobs = max(1, args.jobs)
    n = args.count
    bounds = [(n * j // jobs, n * (j + 1) // jobs) for j in range(jobs)]
    work = [(args.grammar, args.backend, seed, lo, hi, args.max_depth, tuple(args.flatten or ()))
            for lo, hi in bounds if hi > lo]
    if jobs == 1:
        chunks = [_gen_chunk(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            chunks = list(ex.map(_gen_chunk, work))
    outputs = [b for c in chunks for b in c]
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        for i, b in enumerate(outputs):
            (d / f"{i:06d}.txt").write_bytes(b)
    else:
        sep = args.separator.encode().decode("unicode_escape").encode("latin-1")
        w = sys.stdout.buffer
        for b in outputs:
            w.write(b + sep)
        w.flush()
    return 0


def cmd_transpile(args) -> int:
    from .codegen import dump_manifest, emit_module
    graph = load_graph(args.grammar)
    out = Path(args.output or ".")
    if out.suffix != ".py":  # a directory
        out.mkdir(parents=True, exist_ok=True)
        out = out / f"{graph.name}_types.py"
    out.write_text(emit_module(graph))
    manifest = Path(args.manifest) if args.manifest else out.with_suffix(".json")
    manifest.write_text(dump_manifest(graph))
    print(f"wrote {out} and {manifest}", file=sys.stderr)
    return 0


def cmd_solve(args) -> int:
    from .evolution import fandango_ga, load_constraint_file, nsga2
    from .corpus import constraints_path
    graph = load_graph(args.grammar)
    cpath = args.constraints or args.constraints_pos
    spec = load_constraint_file(Path(cpath) if cpath else constraints_path(graph.name))
    seed = _seed(args)
    stats = open(args.stats, "w") if args.stats else None
    kw = dict(population=args.population, iterations=args.iterations, candidates=args.candidates,
              time_budget=args.time_budget,
              seed=seed, max_depth=args.max_depth if args.max_depth is not None else spec.max_depth,
              flatten=list(args.flatten or spec.flatten), stats=stats,
              stop_when_satisfied=not args.keep_going)
    try:
        if args.algorithm == "nsga2":
            result = nsga2(_backend(graph, args.backend), spec.constraints, dedup=args.dedup, **kw)
        else:
            result = fandango_ga(_backend(graph, args.backend), spec.constraints, elites=args.elites, **kw)
    finally:
        if stats:
            stats.close()
    sols = list(result.solutions)
    print(f"generations: {result.generations}  elapsed: {result.elapsed:.2f}s  "
          f"satisfying in population: {sum(i.satisfied for i in result.population)}/{len(result.population)}  "
          f"distinct solutions: {len(sols)}", file=sys.stderr)
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        for i, b in enumerate(sols):
            (d / f"{i:06d}.txt").write_bytes(b)
    else:
        w = sys.stdout.buffer
        for b in sols[:args.show]:
            w.write(b + b"\n")
        w.flush()
    return 0


def cmd_coverage(args) -> int:
    from .coverage import KPathTracker
    from .parsing import ParseError, Parser
    graph = load_graph(args.grammar)
    parser = Parser(graph)
    tracker = KPathTracker(graph, args.k)
    rejected = 0
    for f in _input_files(args.inputs):
        data = f.read_bytes()
        try:
            tree = parser.parse(data)
        except ParseError as exc:
            rejected += 1
            print(f"{f}: {exc}", file=sys.stderr)
            continue
        tracker.add(tree)
    rep = tracker.report()
    if args.json:
        print(json.dumps({"k": rep.k, "covered": len(rep.covered), "total": len(rep.total),
                          "coverage": rep.coverage, "rejected": rejected,
                          "by_length": {str(n): list(v) for n, v in rep.by_length().items()}}))
    else:
        print(f"{args.k}-path coverage: {len(rep.covered)}/{len(rep.total)} = {rep.coverage:.4f}")
        for n, (c, t) in rep.by_length().items():
            print(f"  length {n}: {c}/{t}")
        if rejected:
            print(f"  {rejected} input(s) rejected by the grammar")
    return 0


def cmd_bench(args) -> int:
    from .bench import SingularDesign, fit_model, run_bench, write_jsonl
    graph = load_graph(args.grammar)
    seed = _seed(args)
    backends = ["static", "dynamic"] if args.backend == "both" else [args.backend]
    ops = args.ops or ["generate", "mutate", "crossover"]
    constraints = None
    if "check" in ops:
        from .corpus import constraints_path
        from .evolution import load_constraint_file
        cpath = Path(args.constraints) if args.constraints else constraints_path(graph.name)
        constraints = load_constraint_file(cpath).constraints
    out = open(args.output, "w") if args.output else None
    try:
        for kind in backends:
            backend = _backend(graph, kind)
            for op in ops:
                ms = run_bench(backend, op, args.budget, seed=seed, max_depth=args.max_depth,
                               constraints=constraints)
                if out:
                    write_jsonl(out, ms, grammar=graph.name, backend=kind)
                try:
                    model = fit_model(ms)
                except SingularDesign as exc:
                    print(f"{graph.name} {kind} {op}: {exc}; {exc.fallback:.1f} ns per node  samples={len(ms)}")
                    continue
                coefs = "  ".join(f"{n}={c:.1f}" for n, c in zip(model.names, model.coef))
                print(f"{graph.name} {kind} {op}: {coefs}  R2={model.r2:.3f}  samples={model.samples}")
    finally:
        if out:
            out.close()
    return 0


def cmd_report(args) -> int:
    from .bench import format_report, read_jsonl
    rows = []
    for f in args.files:
        with open(f) as fh:
            rows += read_jsonl(fh)
    print(format_report(rows))
    return 0


def cmd_graph(args) -> int:
    from .graph import to_dot
    graph = load_graph(args.grammar)
    if args.dot:
        sys.stdout.write(to_dot(graph))
        return 0
    md = graph.min_depths
    for n in graph.nodes:
        kids = ", ".join(f"{e.dst}{'*' if e.indirect else ''}" for e in graph.child_edges(n.id))
        print(f"{n.id:>4} {n.kind.value:<8} {n.rule:<20} {n.describe():<12} min_depth={md[n.id]}  -> [{kids}]")
    print(f"{len(graph.nodes)} nodes, {len(graph.edges)} edges, {len(graph.indirect_edges)} indirect (*)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gramforge", description="Grammar-based test input generation and evolution.")
    p.add_argument("--version", action="version", version=f"gramforge {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p.set_defaults(_sub=sub.choices)

    def common(sp, seed=True, backend=True, depth=True):
        sp.add_argument("grammar", help="grammar file (.gbnf) or bundled name: expr, csv, xml, minic")
        if backend:
            sp.add_argument("--backend", choices=["static", "dynamic"], default="static")
        if seed:
            sp.add_argument("--seed", type=int, help="random seed (printed to stderr when omitted)")
        if depth:
            sp.add_argument("--max-depth", type=int, help="maximum tree height")
            sp.add_argument("--flatten", action="append", metavar="RULE",
                            help="sample the alternatives reachable from RULE uniformly (repeatable)")

    sp = sub.add_parser("generate", help="generate random inputs")
    common(sp)
    sp.add_argument("-n", "--count", type=int, default=1)
    sp.add_argument("--jobs", type=int, default=1, help="worker processes")
    sp.add_argument("--out-dir", "--out", dest="out", help="directory to write one file per input")
    sp.add_argument("--separator", default="\\n", help="separator between inputs on stdout")
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("transpile", help="write the generated node-type module")
    common(sp, seed=False, backend=False, depth=False)
    sp.add_argument("-o", "--output", help="output directory, or a .py file path (default: .)")
    sp.add_argument("--manifest", help="output manifest .json (default: next to the module)")
    sp.set_defaults(func=cmd_transpile)

    sp = sub.add_parser("solve", help="evolve inputs that satisfy constraints")
    common(sp)
    sp.add_argument("constraints_pos", nargs="?", metavar="constraints",
                    help="constraint file (.toml/.json); default: the bundled one for the grammar")
    sp.add_argument("--constraints", help="constraint file (same as the positional argument)")
    sp.add_argument("--algo", "--algorithm", dest="algorithm", choices=["nsga2", "fandango", "ga"],
                    default="nsga2", help="fandango (alias ga) is the single-objective elitist loop")
    sp.add_argument("-p", "--population", type=int, default=100)
    sp.add_argument("-e", "--elites", type=int, help="elites kept per generation (fandango only)")
    sp.add_argument("-c", "--candidates", type=int, help="children bred per generation")
    sp.add_argument("-i", "--iterations", type=int, default=200)
    sp.add_argument("--time-budget", type=_duration, help="wall-clock limit, e.g. 10s")
    sp.add_argument("--dedup", action="store_true", help="keep one individual per distinct input")
    sp.add_argument("--keep-going", action="store_true", help="continue after the population is satisfied")
    sp.add_argument("--stats", help="write per-generation JSON lines here")
    sp.add_argument("--out-dir", "--out", dest="out", help="directory to write every distinct solution")
    sp.add_argument("--show", type=int, default=10, help="solutions to print when --out is not given")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("coverage", help="k-path coverage of input files")
    common(sp, seed=False, backend=False, depth=False)
    sp.add_argument("inputs", nargs="+", help="input files or directories of input files")
    sp.add_argument("-k", "--k", type=int, default=2)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_coverage)

    sp = sub.add_parser("bench", help="time generate/mutate/crossover and fit cost models")
    common(sp, backend=False, depth=False)
    sp.add_argument("--backend", choices=["static", "dynamic", "both"], default="both")
    sp.add_argument("--max-depth", type=int)
    sp.add_argument("--ops", type=_op_list, help="comma-separated: generate,check,mutate,crossover "
                    "(default: all but check)")
    sp.add_argument("--constraints", help="constraint file for check (default: bundled)")
    sp.add_argument("--budget", type=_duration, default=30.0, help="time per operation, e.g. 30s")
    sp.add_argument("--json", "-o", "--output", dest="output", help="write measurements as JSON lines")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("report", help="fit and tabulate cost models from bench JSON lines")
    sp.add_argument("files", nargs="+")
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("graph", help="show the grammar graph")
    common(sp, seed=False, backend=False, depth=False)
    sp.add_argument("--dot", action="store_true", help="Graphviz output")
    sp.set_defaults(func=cmd_graph)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    if extra:
        args._sub[args.command].error(f"unrecognized arguments: {' '.join(extra)}")
    try:
        return args.func(args)
    except (GrammarError, GenerationError, FileNotFoundError, KeyError, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"gramforge: error: {msg}", file=sys.stderr)
        return 2
    except Exception as exc:
        from .evolution import ConstraintError
        if isinstance(exc, ConstraintError):
            print(f"gramforge: error: {exc}", file=sys.stderr)
            return 2
        raise


if __name__ == "__main__":
    sys.exit(main())
