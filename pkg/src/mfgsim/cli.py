"""Command-line entry point.

Exit codes: 0 success, 1 diagnostics reported, 2 usage error, 3 internal
error. Diagnostics go to stderr; data goes to stdout or to the paths named
by ``--out``/``--report``/``--trace``.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
from dataclasses import replace
from pathlib import Path

from . import library
from .abstraction import abstract_entity, coordinate_modes, project_view, refine_entity
from .dsl import ParseResult, Workspace, parse_file, print_workspace
from .errors import MfgsimError
from .lattice import build_conceptual_lattice
from .manufacturing import (
    compare_modes,
    estimate_transfer_capacity,
    instantiate,
    simulate,
    with_fleet,
)
from .ontology import verify_model

_DURATION_RE = re.compile(r"(\d+)(us|ms|s|m|h)\Z")
_DURATION_US = {"us": 1, "ms": 1000, "s": 1_000_000, "m": 60_000_000, "h": 3_600_000_000}


def _duration(text: str) -> int:
    m = _DURATION_RE.match(text)
    if not m:
        raise argparse.ArgumentTypeError(
            f"bad duration {text!r}; use an integer with a us/ms/s/m/h suffix"
        )
    return int(m.group(1)) * _DURATION_US[m.group(2)]


def _seed_range(text: str) -> tuple[int, int]:
    m = re.match(r"(\d+)\.\.(\d+)\Z", text)
    if not m:
        raise argparse.ArgumentTypeError(f"bad seed range {text!r}; use A..B")
    a, b = int(m.group(1)), int(m.group(2))
    if b < a:
        raise argparse.ArgumentTypeError("seed range must not be empty")
    return a, b


class _Abort(Exception):
    def __init__(self, code: int):
        self.code = code


def _load(path: str, err) -> tuple[Workspace, ParseResult]:
    result = parse_file(path)
    if result.workspace is None:
        for d in result.diagnostics:
            err(d.render())
        raise _Abort(1)
    return result.workspace, result


def _pick_model(ws: Workspace, name: str | None, err):
    if name is not None:
        if name not in ws.models:
            err(f"no model named {name!r}; available: {sorted(ws.models)}")
            raise _Abort(1)
        return ws.models[name]
    if len(ws.models) == 1:
        return next(iter(ws.models.values()))
    err(f"workspace has several models {sorted(ws.models)}; pass --model")
    raise _Abort(1)


def _pick_ontology(ws: Workspace, name: str | None, err):
    if name is not None:
        if name not in ws.ontologies:
            err(f"no ontology named {name!r}; available: {sorted(ws.ontologies)}")
            raise _Abort(1)
        return ws.ontologies[name]
    if len(ws.ontologies) == 1:
        return next(iter(ws.ontologies.values()))
    err(f"workspace has several ontologies {sorted(ws.ontologies)}; pass --ontology")
    raise _Abort(1)


def _emit(text: str, out_path: str | None, out):
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        out(text, end="")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mfgsim",
        description="order-sorted information modeling and manufacturing simulation",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("check", help="parse a workspace and run well-formedness checks")
    sp.add_argument("file")

    sp = sub.add_parser("verify", help="verify a model against an ontology")
    sp.add_argument("file")
    sp.add_argument("--ontology")
    sp.add_argument("--model")

    sp = sub.add_parser("lattice", help="build the conceptual lattice of a model")
    sp.add_argument("file")
    sp.add_argument("--out", choices=["dot", "text"], default="text")
    sp.add_argument("--model")

    sp = sub.add_parser("abstract", help="abstract a model through a sort map")
    sp.add_argument("file")
    sp.add_argument("--map", required=True, dest="map_name")
    sp.add_argument("--out", dest="out_path")
    sp.add_argument("--model")

    sp = sub.add_parser("refine", help="refine a model through a sort map and expansion")
    sp.add_argument("file")
    sp.add_argument("--map", required=True, dest="map_name")
    sp.add_argument("--expansion", required=True)
    sp.add_argument("--out", dest="out_path")
    sp.add_argument("--model")

    sp = sub.add_parser("view", help="project a model through a view sort set")
    sp.add_argument("file")
    sp.add_argument("--sortset", required=True)
    sp.add_argument("--out", dest="out_path")
    sp.add_argument("--model")

    sp = sub.add_parser("coordinate", help="coordinate abstract and detailed models")
    sp.add_argument("abstract_file")
    sp.add_argument("detailed_file")
    sp.add_argument("--mapping", required=True)

    sp = sub.add_parser("estimate", help="estimate transfer capacity for a scenario")
    sp.add_argument("file")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--ontology")

    sp = sub.add_parser("simulate", help="run a scenario")
    sp.add_argument("file")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--mode", choices=["abstract", "detailed"])
    sp.add_argument("--seed", type=int)
    sp.add_argument("--seeds", type=_seed_range)
    sp.add_argument("--horizon", type=_duration)
    sp.add_argument("--report")
    sp.add_argument("--trace")
    sp.add_argument("--ontology")

    sp = sub.add_parser("compare", help="compare abstract estimate with detailed run")
    sp.add_argument("file")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--threshold", type=float, default=0.10)
    sp.add_argument("--ontology")

    sp = sub.add_parser("lib", help="versioned model library")
    lib_sub = sp.add_subparsers(dest="lib_command", required=True)
    q = lib_sub.add_parser("add")
    q.add_argument("payload_file")
    q.add_argument("--root", default=os.environ.get("MFGSIM_LIB_ROOT"))
    q.add_argument("--kind", required=True, choices=library.KINDS)
    q.add_argument("--name", required=True)
    q = lib_sub.add_parser("get")
    q.add_argument("--root", default=os.environ.get("MFGSIM_LIB_ROOT"))
    q.add_argument("--kind", required=True, choices=library.KINDS)
    q.add_argument("--name", required=True)
    q.add_argument("--version", type=int)
    q.add_argument("--out", dest="out_path")
    q = lib_sub.add_parser("list")
    q.add_argument("--root", default=os.environ.get("MFGSIM_LIB_ROOT"))
    q.add_argument("--kind", choices=library.KINDS)
    return p


def _suffixed(path: str, seed: int) -> str:
    p = Path(path)
    return str(p.with_name(f"{p.stem}.seed{seed}{p.suffix}"))


def _cmd_simulate(args, out, err) -> int:
    ws, _ = _load(args.file, err)
    config = ws.scenario(args.scenario)
    if args.mode:
        config = replace(config, mode=args.mode)
    if args.horizon:
        config = replace(config, horizon_us=args.horizon)
    profile = _pick_ontology(ws, args.ontology, err)
    scenario = instantiate(ws.model(config.model), profile, config)
    if args.seeds:
        seeds = list(range(args.seeds[0], args.seeds[1] + 1))
    else:
        seeds = [args.seed if args.seed is not None else config.seed]
    for seed in seeds:
        report = simulate(scenario, engine_seed=seed)
        many = len(seeds) > 1
        report_path = _suffixed(args.report, seed) if (args.report and many) else args.report
        trace_path = _suffixed(args.trace, seed) if (args.trace and many) else args.trace
        _emit(report.to_csv(), report_path, out)
        if trace_path:
            Path(trace_path).write_text(report.trace_jsonl(), encoding="utf-8")
    return 0


def _cmd_compare(args, out, err) -> int:
    ws, _ = _load(args.file, err)
    config = ws.scenario(args.scenario)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    profile = _pick_ontology(ws, args.ontology, err)
    model = ws.model(config.model)
    abstract = instantiate(model, profile, replace(config, mode="abstract"))
    estimate = estimate_transfer_capacity(abstract)
    detailed = instantiate(model, profile, replace(config, mode="detailed"))
    fleet = max(1, estimate.required_agvs)
    report = simulate(with_fleet(detailed, fleet), engine_seed=config.seed)
    comparison = compare_modes(estimate, report, threshold=args.threshold)
    out(comparison.render(), end="")
    return 0


def _dispatch(args, out, err) -> int:
    if args.command == "check":
        ws, result = _load(args.file, err)
        bad = False
        for name in sorted(result.model_reports):
            for d in result.model_reports[name].diagnostics:
                err(f"{args.file}: model {name}: {d.render()}")
                bad = True
        return 1 if bad else 0

    if args.command == "verify":
        ws, _ = _load(args.file, err)
        model = _pick_model(ws, args.model, err)
        ontology = _pick_ontology(ws, args.ontology, err)
        report = verify_model(model, ontology)
        for v in report.violations:
            err(v.render())
        return 0 if report.ok else 1

    if args.command == "lattice":
        ws, _ = _load(args.file, err)
        model = _pick_model(ws, args.model, err)
        lattice = build_conceptual_lattice(model)
        out(lattice.to_dot() if args.out == "dot" else lattice.render(), end="")
        return 0

    if args.command == "abstract":
        ws, _ = _load(args.file, err)
        model = _pick_model(ws, args.model, err)
        if args.map_name not in ws.sort_maps:
            err(f"no sort map named {args.map_name!r}")
            return 1
        sort_map = ws.sort_maps[args.map_name]
        sort_set = ws.sort_system.sort_set(sort_map.sort_set)
        entities = {}
        for name in model.entities:
            entities[name] = abstract_entity(model.entities[name], sort_map, sort_set)
        new_model = replace(model, entities=entities)
        new_ws = replace(ws, models={**ws.models, model.name: new_model})
        _emit(print_workspace(new_ws), args.out_path, out)
        return 0

    if args.command == "refine":
        ws, _ = _load(args.file, err)
        model = _pick_model(ws, args.model, err)
        for flag, table in (("map", ws.sort_maps), ("expansion", ws.expansions)):
            name = args.map_name if flag == "map" else args.expansion
            if name not in table:
                err(f"no {flag} named {name!r}")
                return 1
        sort_map = ws.sort_maps[args.map_name]
        expansion = ws.expansions[args.expansion]
        sort_set = ws.sort_system.sort_set(sort_map.sort_set)
        entities = {}
        for name in model.entities:
            slice_ = {attr: attrs for (ent, attr), attrs in expansion.items.items()
                      if ent == name}
            entities[name] = refine_entity(model.entities[name], sort_map, slice_, sort_set)
        new_model = replace(model, entities=entities)
        new_ws = replace(ws, models={**ws.models, model.name: new_model})
        _emit(print_workspace(new_ws), args.out_path, out)
        return 0

    if args.command == "view":
        ws, _ = _load(args.file, err)
        model = _pick_model(ws, args.model, err)
        projected = project_view(model, args.sortset)
        new_ws = replace(ws, models={**ws.models, model.name: projected})
        _emit(print_workspace(new_ws), args.out_path, out)
        return 0

    if args.command == "coordinate":
        abs_ws, _ = _load(args.abstract_file, err)
        det_ws, _ = _load(args.detailed_file, err)
        mapping = abs_ws.mode_mappings.get(args.mapping) or det_ws.mode_mappings.get(args.mapping)
        if mapping is None:
            err(f"no mode mapping named {args.mapping!r} in either file")
            return 1
        report = coordinate_modes(abs_ws.model(mapping.abstract_model),
                                  det_ws.model(mapping.detailed_model), mapping)
        for d in report.diagnostics:
            err(d.render())
        return 0 if report.ok else 1

    if args.command == "estimate":
        ws, _ = _load(args.file, err)
        config = ws.scenario(args.scenario)
        profile = _pick_ontology(ws, args.ontology, err)
        scenario = instantiate(ws.model(config.model), profile,
                               replace(config, mode="abstract"))
        estimate = estimate_transfer_capacity(scenario)
        out(f"required_agvs,{estimate.required_agvs}")
        out(f"utilization,{float(estimate.utilization):.6f}")
        out(f"implied_throughput_per_hour,{float(estimate.implied_throughput_per_hour):.6f}")
        for (o, d) in sorted(estimate.busy_us):
            rate = float(estimate.demand_per_hour[(o, d)])
            out(f"pair,{o}->{d},demand_per_hour={rate:.4f},busy_us={estimate.busy_us[(o, d)]}")
        return 0

    if args.command == "simulate":
        return _cmd_simulate(args, out, err)

    if args.command == "compare":
        return _cmd_compare(args, out, err)

    if args.command == "lib":
        if not args.root:
            err("no library root; pass --root or set MFGSIM_LIB_ROOT")
            return 2
        if args.lib_command == "add":
            payload = Path(args.payload_file).read_text(encoding="utf-8")
            item = library.store(args.root, args.kind, args.name, payload)
            out(f"{item.kind},{item.name},{item.version},{item.content_hash}")
            return 0
        if args.lib_command == "get":
            item = library.load(args.root, args.kind, args.name, args.version)
            _emit(item.payload, args.out_path, out)
            return 0
        for row in library.catalog(args.root, args.kind):
            out(f"{row.kind},{row.name},{row.version},{row.content_hash}")
        return 0

    raise AssertionError(f"unhandled command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    def out(*a, **kw):
        print(*a, **kw, file=sys.stdout)

    def err(*a, **kw):
        print(*a, **kw, file=sys.stderr)

    try:
        return _dispatch(args, out, err)
    except _Abort as exc:
        return exc.code
    except MfgsimError as exc:
        err(f"error: {exc}")
        return 1
    except OSError as exc:
        err(f"error: {exc}")
        return 1
    except Exception as exc:  # pragma: no cover - internal failure path
        err(f"internal error: {type(exc).__name__}: {exc}")
        return 3


if __name__ == "__main__":
    sys.exit(main())
