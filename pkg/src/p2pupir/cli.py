"""``p2pupir`` command line.

Exit status: 0 success or pass, 1 verification failure, 2 input error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path

from . import adversaries, designs, protocols, stats
from .designs import DesignError, SetSystem
from .fixtures import FIXTURES, get_fixture
from .protocols import ProtocolError, ProtocolSpec, Workload

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _atomic_write(path: str, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _config_hash(args: argparse.Namespace, design: SetSystem | None) -> str:
    skip = {"out", "pretty", "func"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    if design is not None:
        cfg["design_content"] = design.to_dict()
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _load_design(args) -> SetSystem:
    if getattr(args, "design", None) and getattr(args, "fixture", None):
        raise InputError("give either --design or --fixture, not both")
    if getattr(args, "design", None):
        return designs.load_design(args.design)
    if getattr(args, "fixture", None):
        return get_fixture(args.fixture)
    raise InputError("a design is required (--design FILE or --fixture NAME)")


def _spec(args) -> ProtocolSpec:
    if not args.protocol:
        raise InputError("--protocol is required")
    return ProtocolSpec(args.protocol, args.p, args.p_hop)


def _split(text: str | None) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()] if text else []


def _space(design: SetSystem, text: str) -> int:
    text = text.strip()
    if text.isdigit():
        return design.block_index(int(text))
    return design.block_index(_split(text))


def _render(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        lines = []
        for k, v in obj.items():
            nested = isinstance(v, dict) or (isinstance(v, list) and not all(
                isinstance(x, (int, float, str)) for x in v))
            if nested and v:
                lines.append(f"{pad}{k}:")
                lines.append(_render(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {json.dumps(v) if isinstance(v, list) else v}")
        return "\n".join(lines)
    if isinstance(obj, list):
        return "\n".join(_render(x, indent) if isinstance(x, (dict, list)) else f"{pad}- {x}" for x in obj)
    return f"{pad}{obj}"


def _emit(args, report: dict) -> None:
    text = _render(report) + "\n" if args.pretty else json.dumps(report, indent=1, default=float) + "\n"
    if getattr(args, "out", None):
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def _workload(args) -> tuple[Workload, int | None]:
    if getattr(args, "workload", None):
        data = json.loads(Path(args.workload).read_text())
        return Workload.from_dict(data), data.get("seed")
    if not args.queries:
        raise InputError("--queries or --workload is required")
    return Workload(args.queries), None


def _seed(args, fallback=None) -> int:
    seed = args.seed if args.seed is not None else fallback
    if seed is None:
        raise InputError("a seed is required (--seed or the workload file's 'seed')")
    return int(seed)


# -- commands -----------------------------------------------------------------

def cmd_verify_design(args) -> int:
    d = _load_design(args)
    prof = designs.profile(d)
    report = {"design": d.name, **prof.to_dict(), "config_hash": _config_hash(args, d)}
    _emit(args, report)
    return EXIT_OK


def cmd_run(args) -> int:
    d = _load_design(args)
    workload, wseed = _workload(args)
    seed = _seed(args, wseed)
    spec = _spec(args)
    trace = protocols.run_workload(spec, d, workload, seed)
    lines = list(protocols.trace_lines(trace, redact=args.redact))
    header = json.loads(lines[0])
    header["config_hash"] = _config_hash(args, d)
    lines[0] = json.dumps(header)
    text = "\n".join(lines) + "\n"
    if args.out:
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _read_trace(path: str, design: SetSystem) -> protocols.Trace:
    with open(path) as f:
        return protocols.trace_from_lines(f, design)


def _candidates(design: SetSystem, cs: adversaries.CandidateSet) -> dict:
    return {
        "candidates": design.labels(cs.candidates),
        "steps": [{"observation": [design.points[x] if i == len(st.observation) - 1 else x
                                   for i, x in enumerate(st.observation)],
                   "possible": design.labels(st.possible),
                   "eliminated": design.labels(st.eliminated),
                   "remaining": design.labels(st.remaining)} for st in cs.derivation],
    }


def cmd_attack(args) -> int:
    d = _load_design(args)
    report = {"design": d.name, "attack": args.kind, "config_hash": _config_hash(args, d)}
    if args.trace:
        trace = _read_trace(args.trace, d)
        report.update(seed=trace.seed, protocol=trace.spec.kind.value)
        report["groups"] = _attack_trace(args, d, trace)
        report["sound"] = all(g.get("sound", True) for g in report["groups"])
        _emit(args, report)
        return EXIT_OK if report["sound"] else EXIT_FAIL
    kind = protocols.Kind.parse(args.protocol) if args.protocol else None
    if kind is None:
        raise InputError("--protocol is required without --trace")
    report["protocol"] = kind.value
    proxies = _split(args.proxies)
    if args.kind == "db-intersection":
        cs = adversaries.db_intersection_attack(d, kind, proxies)
    else:
        spaces = [_space(d, s) for s in (args.spaces or "").split(";") if s.strip()]
        if len(spaces) != len(proxies):
            raise InputError("--spaces and --proxies must have the same length")
        cs = adversaries.coalition_candidates(d, kind, list(zip(spaces, proxies)), _split(args.coalition))
    report.update(_candidates(d, cs))
    _emit(args, report)
    return EXIT_OK


def _attack_trace(args, d: SetSystem, trace: protocols.Trace) -> list[dict]:
    kind = trace.spec.kind
    out = []
    if args.kind == "db-intersection":
        view = protocols.db_view(trace)
        groups: dict[int, list[int]] = {}
        for g, p in zip(view.link_group.tolist(), view.proxy.tolist()):
            groups.setdefault(g, []).append(p)
        for g, proxies in groups.items():
            cs = adversaries.db_intersection_attack(d, kind, proxies)
            truth = int(trace.source[trace.link_group == g][0])
            out.append({"link_group": g, **_candidates(d, cs), "source": d.points[truth],
                        "sound": truth in cs})
        return out
    if trace.spec.hop is not None:
        raise InputError("the coalition attack assumes the source belongs to every posted space; "
                         "traces with query hops break that premise")
    coalition = _split(args.coalition)
    members = d.pts(coalition)
    view = protocols.coalition_view(trace, coalition)
    groups = {}
    for q, hop, sp, p, g in view.rows():
        # members pool what they know, including which queries are their own
        if int(trace.source[q]) not in members:
            groups.setdefault(g, []).append((sp, p))
    for g, obs in groups.items():
        truth = int(trace.source[trace.link_group == g][0])
        try:
            cs = adversaries.coalition_candidates(d, kind, obs, coalition)
            out.append({"link_group": g, **_candidates(d, cs), "source": d.points[truth],
                        "sound": truth in cs})
        except adversaries.InconsistentObservations as e:
            out.append({"link_group": g, "error": str(e), "source": d.points[truth], "sound": False})
    return out


def cmd_anonymity(args) -> int:
    d = _load_design(args)
    spec = _spec(args)
    rep = adversaries.measure_anonymity(d, spec.kind, args.rho, args.c)
    report = rep.to_dict(d) | {"config_hash": _config_hash(args, d)}
    report["replayed_kappa"] = adversaries.replay_witness(d, rep)
    _emit(args, report)
    return EXIT_OK


def cmd_posterior(args) -> int:
    d = _load_design(args)
    h = _space(d, args.space)
    report = {"design": d.name, "observer": args.observer, "memory_space": h,
              "proxy": args.proxy, "config_hash": _config_hash(args, d)}
    if args.trace:
        trace = _read_trace(args.trace, d)
    else:
        workload, wseed = _workload(args)
        trace = protocols.run_workload(_spec(args), d, workload, _seed(args, wseed))
    report.update(protocol=trace.spec.kind.value, seed=trace.seed)
    theory = adversaries.theoretical_posterior(d, trace.spec.kind, h, args.proxy, args.observer)
    report["theoretical"] = {d.points[i]: str(p) for i, p in theory.probabilities.items()}
    est = stats.estimate_observer_posterior(trace, args.observer, h, args.proxy, z=args.z)
    report["empirical"] = {lbl: int(c) / est.n_conditioned
                           for lbl, c in zip(est.table.row_labels, est.table.counts[:, 0])}
    report["n_conditioned"] = est.n_conditioned
    report["verdict"] = {k: v for k, v in est.verdict.to_dict().items() if k != "cells"}
    _emit(args, report)
    return EXIT_OK if est.verdict.passed else EXIT_FAIL


def cmd_membership(args) -> int:
    d = _load_design(args)
    if bool(args.add) == bool(args.remove):
        raise InputError("give exactly one of --add USER or --remove USER")
    if args.add:
        new, touched = designs.add_user(d, args.add)
        report = {"action": "add", "user": args.add, "joined": touched}
    else:
        new, touched = designs.remove_user(d, args.remove)
        report = {"action": "remove", "user": args.remove, "rekey": touched}
    prof = designs.profile(new)
    report.update(design=d.name, covering=prof.flags.covering, description=prof.describe(),
                  new_design=new.to_dict(), config_hash=_config_hash(args, d))
    if args.design_out:
        _atomic_write(args.design_out, json.dumps(new.to_dict(), indent=1) + "\n")
    _emit(args, report)
    return EXIT_OK


def cmd_verify_anonymity(args) -> int:
    d = _load_design(args)
    spec = _spec(args)
    seed = _seed(args)
    verdict = stats.verify_db_anonymity(d, spec, args.queries, seed, args.z)
    report = {"design": d.name, "protocol": spec.kind.value, "seed": seed, "queries": args.queries,
              "config_hash": _config_hash(args, d)}
    report.update({k: v for k, v in verdict.to_dict().items() if k != "cells"})
    report["failures"] = verdict.failures()
    _emit(args, report)
    return EXIT_OK if verdict.passed else EXIT_FAIL


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="p2pupir", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, protocol=False, seed=False):
        p.add_argument("--design", help="design file (JSON)")
        p.add_argument("--fixture", help=f"built-in design: {', '.join(FIXTURES)}")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--pretty", action="store_true", help="human-readable output")
        if protocol:
            p.add_argument("--protocol", help="DBWM, DBWMS, PD_BIBD_V1/V2, PD_COVER_V1/V2")
            p.add_argument("--p", type=float, help="DBWMS self-forwarding probability")
            p.add_argument("--p-hop", type=float, dest="p_hop", help="query-hop forwarding probability")
        if seed:
            p.add_argument("--seed", type=int)
            p.add_argument("--queries", type=int)
            p.add_argument("--workload", help="workload file (JSON)")
        return p

    p = common(sub.add_parser("verify-design", help="profile a design"))
    p.set_defaults(func=cmd_verify_design)

    p = common(sub.add_parser("run", help="simulate a workload and write a trace"), True, True)
    p.add_argument("--redact", action="store_true", help="emit only the database's view")
    p.set_defaults(func=cmd_run)

    p = common(sub.add_parser("attack", help="intersection attacks"), True)
    p.add_argument("--kind", choices=["db-intersection", "coalition"], default="db-intersection")
    p.add_argument("--trace", help="trace file from 'run'")
    p.add_argument("--proxies", help="comma-separated proxies")
    p.add_argument("--spaces", help="';'-separated memory spaces (index or comma-separated members)")
    p.add_argument("--coalition", help="comma-separated coalition members")
    p.set_defaults(func=cmd_attack)

    p = common(sub.add_parser("anonymity", help="brute-force (rho, c, kappa)-anonymity"), True)
    p.add_argument("--rho", type=int, required=True)
    p.add_argument("--c", type=int, required=True)
    p.set_defaults(func=cmd_anonymity)

    p = common(sub.add_parser("posterior", help="theoretical and empirical observer posterior"), True, True)
    p.add_argument("--trace", help="trace file from 'run'")
    p.add_argument("--observer", required=True)
    p.add_argument("--space", required=True)
    p.add_argument("--proxy", required=True)
    p.add_argument("--z", type=float, default=4.0)
    p.set_defaults(func=cmd_posterior)

    p = common(sub.add_parser("membership", help="add or remove a user"))
    p.add_argument("--add")
    p.add_argument("--remove")
    p.add_argument("--design-out", help="write the new design file here")
    p.set_defaults(func=cmd_membership)

    p = common(sub.add_parser("verify-anonymity", help="Pr[S|P] uniformity check"), True, True)
    p.add_argument("--z", type=float, default=4.0)
    p.set_defaults(func=cmd_verify_anonymity)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, DesignError, ProtocolError, stats.InsufficientSamples,
            adversaries.InconsistentObservations, ValueError, OSError) as e:
        print(f"p2pupir {args.command}: error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
