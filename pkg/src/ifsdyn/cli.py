"""Command-line entry point: ``ifsdyn <command> [options]``.

Settings come from built-in defaults, then an optional ``--config`` file,
then flags. ``--dump-config`` prints the merged configuration and exits.

Exit codes: 0 success, 1 I/O error, 2 configuration or precondition error,
3 no convergence within the iteration budget.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import replace
from pathlib import Path

from . import plotting
from .attractor import (
    TENT_CHAIN_KINDS,
    global_attractor,
    h_invariance_defect,
    tent_hyperchain,
    verify_hyperchain,
    verify_trapping,
)
from .catalog import default_grid, named_region, tent_landmarks
from .chaingraph import chain_graph, connectivity, inventory_csv, node_edges, recurrent_set, to_dot
from .chaosgame import FAMILIES, OrbitConfig, bifurcation_sweep, random_orbit
from .config import COMMANDS, RunConfig, dump, parse
from .errors import ConfigurationError, IfsError
from .grid import GridSet, GridSpec, grid_header, read_set, write_pgm, write_rle
from .maps import Domain
from .parallel import set_threads
from .transition import build_graph

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_NONCONVERGED = 0, 1, 2, 3
CATALOG_PARAMS = ("s", "s2", "mu", "mu2", "time")


class NotConverged(Exception):
    pass


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("common")
    g.add_argument("--config", help="INI file with [run] and per-command sections")
    g.add_argument("--dump-config", action="store_true", help="print the merged configuration and exit")
    g.add_argument("--system", help="catalog system name, or 'custom' (needs a [custom] section)")
    g.add_argument("--res", type=int, help="cells per axis")
    g.add_argument("--eta", type=float, help="chain enlargement radius")
    g.add_argument("--seed", type=int)
    g.add_argument("--threads", type=int, help="worker threads (0: machine parallelism)")
    g.add_argument("--out", help="output directory")
    g.add_argument("--support", "--trap", dest="support",
                   help="domain | disc | q<eps> | attractor | file:<path>")
    for name in CATALOG_PARAMS:
        g.add_argument(f"--{name}", type=float, help=f"system parameter {name}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ifsdyn", description="Qualitative dynamics of IFSs on grids.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("attractor", help="global attractor from a trapping region")
    _common(p)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--tol", type=float, help="stopping distance (0: one cell diameter)")

    p = sub.add_parser("chaingraph", help="chain-recurrent nodes and their graph")
    _common(p)
    p.add_argument("--view", choices=("closure", "reduction"))
    p.add_argument("--explicit", choices=("auto", "yes", "no"))

    p = sub.add_parser("hutchinson", help="fixed-point defects and hyperspace chains")
    _common(p)
    p.add_argument("--panel", help="tent2 | attractor | none")
    p.add_argument("--chains", help="comma-separated chain kinds, or 'none'")
    p.add_argument("--epsilons", help="comma-separated chain epsilons")

    p = sub.add_parser("bifurcation", help="orbit-tail sweep of a 1D family")
    _common(p)
    p.add_argument("--family", choices=sorted(FAMILIES))
    p.add_argument("--range", nargs=2, type=float, metavar=("LO", "HI"))
    p.add_argument("--steps", type=int)
    p.add_argument("--second", type=float)
    p.add_argument("--start", type=float)
    p.add_argument("--total", type=int)
    p.add_argument("--burn", type=int)
    p.add_argument("--bins", type=int)

    p = sub.add_parser("chaosgame", help="cells visited by a random orbit")
    _common(p)
    p.add_argument("--start", type=float, nargs="+")
    p.add_argument("--total", type=int)
    p.add_argument("--burn", type=int)

    p = sub.add_parser("verify-trap", help="forward invariance and absorption of a region")
    _common(p)
    p.add_argument("--budget", type=int)
    return parser


def _pick(**kw):
    return {k: v for k, v in kw.items() if v is not None}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    if args.config:
        cfg = parse(Path(args.config).read_text())
    top = _pick(system=args.system, res=args.res, eta=args.eta, seed=args.seed,
                threads=args.threads, out=args.out, support=args.support)
    cfg = replace(cfg, command=args.command, **top)
    cfg = cfg.with_params(**{k: getattr(args, k) for k in CATALOG_PARAMS})
    cmd = args.command
    if cmd == "attractor":
        cfg = replace(cfg, attractor=replace(cfg.attractor, **_pick(max_iters=args.max_iters, tol=args.tol)))
    elif cmd == "chaingraph":
        cfg = replace(cfg, chaingraph=replace(cfg.chaingraph, **_pick(view=args.view, explicit=args.explicit)))
    elif cmd == "hutchinson":
        upd = _pick(panel=args.panel)
        if args.chains is not None:
            upd["chains"] = () if args.chains == "none" else tuple(c.strip() for c in args.chains.split(","))
        if args.epsilons is not None:
            try:
                upd["epsilons"] = tuple(float(e) for e in args.epsilons.split(","))
            except ValueError:
                raise ConfigurationError(f"bad --epsilons {args.epsilons!r}") from None
        cfg = replace(cfg, hutchinson=replace(cfg.hutchinson, **upd))
    elif cmd == "bifurcation":
        upd = _pick(family=args.family, steps=args.steps, second=args.second, start=args.start,
                    total=args.total, burn=args.burn, bins=args.bins)
        if args.range is not None:
            upd["lo"], upd["hi"] = args.range
        cfg = replace(cfg, bifurcation=replace(cfg.bifurcation, **upd))
    elif cmd == "chaosgame":
        upd = _pick(total=args.total, burn=args.burn)
        if args.start is not None:
            upd["start"] = tuple(args.start)
        cfg = replace(cfg, chaosgame=replace(cfg.chaosgame, **upd))
    elif cmd == "verify-trap":
        cfg = replace(cfg, trap=replace(cfg.trap, **_pick(budget=args.budget)))
    return cfg


# ---------------------------------------------------------------------------
# Shared pieces
# ---------------------------------------------------------------------------


def resolve_support(cfg: RunConfig, ifs, grid: GridSpec) -> GridSet:
    name = cfg.support
    if name.startswith("file:"):
        s = read_set(name[5:])
        if s.grid != grid:
            raise ConfigurationError(f"support file {name[5:]} uses a different grid")
        return s
    if name == "attractor":
        res = global_attractor(ifs, GridSet.full(grid), max_iters=cfg.attractor.max_iters)
        return res.cells
    return named_region(name, grid)


def _write(path: Path, text: str) -> None:
    path.write_text(text)


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _span_text(s: GridSet) -> str:
    lo, hi = s.span()
    return " ".join(f"[{float(a)!r}, {float(b)!r}]" for a, b in zip(lo, hi))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_attractor(cfg: RunConfig) -> int:
    ifs = cfg.build_system()
    grid = default_grid(ifs, cfg.res)
    q = resolve_support(cfg, ifs, grid)
    opts = cfg.attractor
    res = global_attractor(ifs, q, tol=opts.tol or None, max_iters=opts.max_iters, patience=opts.patience)
    out = _out_dir(cfg)
    write_pgm(res.cells, out / "attractor.pgm")
    write_rle(res.cells, out / "attractor.rle")
    defect = h_invariance_defect(ifs, res.cells)
    lines = [
        f"system {ifs.name}",
        f"grid {grid_header(grid)}",
        f"support {cfg.support} cells {len(q)}",
        f"iterations {res.iterations}",
        f"converged {str(res.converged).lower()}",
        f"cells {len(res.cells)}",
        f"span {_span_text(res.cells)}",
        f"defect {defect!r}",
        f"defect_cells {defect / grid.cell_diameter!r}",
    ]
    lines += [f"trace {n} {d!r}" for n, d in enumerate(res.trace, start=1)]
    _write(out / "report.txt", "\n".join(lines) + "\n")
    plotting.plot_set(res.cells, out / "attractor.png", f"{ifs.name}: attractor, {len(res.cells)} cells")
    if res.trace:
        plotting.plot_trace(res.trace, out / "trace.png", grid.cell_diameter)
    print("\n".join(lines[:9]))
    if not res.converged:
        raise NotConverged(f"no fixed point within {opts.max_iters} iterations")
    return EXIT_OK


def cmd_chaingraph(cfg: RunConfig) -> int:
    ifs = cfg.build_system()
    grid = default_grid(ifs, cfg.res)
    support = resolve_support(cfg, ifs, grid)
    explicit = {"auto": None, "yes": True, "no": False}.get(cfg.chaingraph.explicit)
    if cfg.chaingraph.explicit not in ("auto", "yes", "no"):
        raise ConfigurationError("chaingraph.explicit must be auto, yes or no")
    view = cfg.chaingraph.view
    if view not in ("closure", "reduction"):
        raise ConfigurationError("chaingraph.view must be closure or reduction")
    tg = build_graph(ifs, grid, support, eta=cfg.eta, explicit=explicit)
    cg = chain_graph(tg)
    out = _out_dir(cfg)
    _write(out / "nodes.csv", inventory_csv(cg))
    _write(out / "graph.dot", to_dot(cg, "strong", view))
    _write(out / "graph_weak.dot", to_dot(cg, "weak", view))
    write_pgm(recurrent_set(cg, "weak"), out / "recurrent.pgm")
    write_pgm(recurrent_set(cg, "strong"), out / "recurrent_strong.pgm")
    lines = [f"system {ifs.name}", f"grid {grid_header(grid)}", f"eta {cfg.eta!r}",
             f"support {cfg.support} cells {len(support)}", f"components {cg.ncomponents}"]
    for which in ("strong", "weak"):
        ids = cg.nodes(which)
        lines.append(f"{which}_nodes {len(ids)}")
        lines.append(f"{which}_edges " + " ".join(f"{a}->{b}" for a, b in node_edges(cg, which, view)))
        if ids:
            conn = connectivity(cg, which)
            fams = " | ".join(",".join(map(str, f)) for f in conn.families)
            lines.append(f"{which}_connected {str(conn.connected).lower()} families {fams}")
    _write(out / "report.txt", "\n".join(lines) + "\n")
    plotting.plot_nodes(cg, out / "nodes.png", "weak")
    print("\n".join(lines))
    return EXIT_OK


def _tent_panel(ifs, grid: GridSpec) -> list[tuple[str, GridSet]]:
    if ifs.name != "tent2":
        raise ConfigurationError("the tent2 panel needs --system tent2")
    marks = tent_landmarks(ifs.params["s"], ifs.params["s2"])
    zero = GridSet.from_points(grid, 0.0)
    a_set = GridSet.interval(grid, marks["ell"], marks["c1"])
    return [
        ("zero", zero),
        ("A", a_set),
        ("zero_and_A", zero | a_set),
        ("interval_0_c1", GridSet.interval(grid, 0.0, marks["c1"])),
    ]


def cmd_hutchinson(cfg: RunConfig) -> int:
    ifs = cfg.build_system()
    grid = default_grid(ifs, cfg.res)
    opts = cfg.hutchinson
    if opts.panel == "tent2":
        panel = _tent_panel(ifs, grid)
    elif opts.panel == "attractor":
        panel = [("attractor", global_attractor(ifs, resolve_support(cfg, ifs, grid)).cells)]
    elif opts.panel == "none":
        panel = []
    else:
        raise ConfigurationError(f"unknown panel {opts.panel!r}; expected tent2, attractor or none")
    for kind in opts.chains:
        if kind not in TENT_CHAIN_KINDS:
            raise ConfigurationError(f"unknown chain {kind!r}; known: {', '.join(TENT_CHAIN_KINDS)}")
    if opts.chains and ifs.name != "tent2":
        raise ConfigurationError("canned chains are defined for the tent2 system")
    out = _out_dir(cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["set", "cells", "defect", "defect_cells"])
    for label, s in panel:
        d = h_invariance_defect(ifs, s)
        w.writerow([label, len(s), repr(d), repr(d / grid.cell_diameter)])
    _write(out / "defects.csv", buf.getvalue())
    report = []
    for kind in opts.chains:
        for eps in opts.epsilons:
            chain = tent_hyperchain(ifs.params["s"], ifs.params["s2"], kind, eps, grid)
            report += verify_hyperchain(ifs, chain).lines()
    _write(out / "chains_report.txt", "\n".join(report) + ("\n" if report else ""))
    print(buf.getvalue(), end="")
    print("\n".join(line for line in report if line.startswith(("chain", "verified"))))
    return EXIT_OK


def cmd_bifurcation(cfg: RunConfig) -> int:
    o = cfg.bifurcation
    bins = GridSpec(Domain.interval(0, 1), (o.bins,))
    run = OrbitConfig(o.start, total=o.total, burn=o.burn, seed=cfg.seed)
    second = o.second if FAMILIES.get(o.family, ("", 0, 1))[2] == 2 else None
    sweep = bifurcation_sweep(o.family, (o.lo, o.hi), o.steps, run, bins, second=second, threshold=o.threshold)
    out = _out_dir(cfg)
    _write(out / "sweep.csv", sweep.to_csv())
    sweep.write_pgm(out / "sweep.pgm")
    plotting.plot_sweep(sweep, out / "sweep.png")
    print(f"family {o.family} params {len(sweep.params)} occupied {int(sweep.occupied.sum())}")
    return EXIT_OK


def cmd_chaosgame(cfg: RunConfig) -> int:
    ifs = cfg.build_system()
    grid = default_grid(ifs, cfg.res)
    o = cfg.chaosgame
    start = o.start if o.start else tuple(ifs.domain.center())
    run = OrbitConfig(start if len(start) > 1 else start[0], total=o.total, burn=o.burn, seed=cfg.seed)
    res = random_orbit(ifs, run, grid)
    out = _out_dir(cfg)
    write_pgm(res.cells, out / "orbit.pgm")
    write_rle(res.cells, out / "orbit.rle")
    lines = [f"system {ifs.name}", f"grid {grid_header(grid)}", f"seed {cfg.seed}",
             f"iterations {res.iterations}", f"escaped {str(res.escaped).lower()}", f"cells {len(res.cells)}"]
    _write(out / "report.txt", "\n".join(lines) + "\n")
    plotting.plot_set(res.cells, out / "orbit.png", f"{ifs.name}: orbit tail, seed {cfg.seed}")
    print("\n".join(lines))
    return EXIT_OK


def cmd_verify_trap(cfg: RunConfig) -> int:
    ifs = cfg.build_system()
    grid = default_grid(ifs, cfg.res)
    q = resolve_support(cfg, ifs, grid)
    rep = verify_trapping(ifs, q, budget=cfg.trap.budget)
    out = _out_dir(cfg)
    lines = [f"system {ifs.name}", f"region {cfg.support} cells {len(q)}", *rep.lines()]
    _write(out / "trap_report.txt", "\n".join(lines) + "\n")
    print("\n".join(lines))
    if not rep.forward_invariant:
        print(f"error: region is not forward invariant ({len(rep.escape_cells)} cells escape)", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


HANDLERS = {
    "attractor": cmd_attractor,
    "chaingraph": cmd_chaingraph,
    "hutchinson": cmd_hutchinson,
    "bifurcation": cmd_bifurcation,
    "chaosgame": cmd_chaosgame,
    "verify-trap": cmd_verify_trap,
}
assert set(HANDLERS) == set(COMMANDS)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.dump_config:
            sys.stdout.write(dump(cfg))
            return EXIT_OK
        set_threads(cfg.threads or None)
        return HANDLERS[cfg.command](cfg)
    except NotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (IfsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
