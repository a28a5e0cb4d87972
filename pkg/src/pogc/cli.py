"""``pogc`` command line: derive, simulate, check, reduce.

Exit codes: 0 success, 1 usage / IO / syntax, 2 model diagnostics.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

import numpy as np
import sympy as sp

from . import casestudies, render
from .randnet import random_sp_netlist
from .errors import NetlistSyntaxError, PogError
from .netlist import parse_netlist
from .pogir import build_scheme, check_loop_signs, detect_algebraic_loops, flip_sign
from .reduce import apply_congruent, eliminate_degenerate_state, load_transform, resize_inputs
from .sim import SimConfig, simulate, trajectory_csv
from .statespace import assemble_direct, extract_state_space, load_model, model_to_dict
from .topology import build_sp_chain

EMITS = ("matrices", "dot", "latex", "steps", "sections", "json")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _assignment(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def _params(pairs) -> dict[str, float]:
    out = {}
    for k, v in pairs or []:
        try:
            out[k] = float(v)
        except ValueError:
            raise UsageError(f"--param {k}: not a number: {v!r}") from None
    return out


def resolve_path(text: str) -> Path:
    """Existing path, else a bundled fixture named by ``fixtures/<name>`` or its stem."""
    p = Path(text)
    if p.exists():
        return p
    name = p.name
    for candidate in (name, name + ".pog", name + ".json"):
        bundled = casestudies.FIXTURE_DIR / candidate
        if bundled.exists():
            return bundled
    stem = p.stem
    if stem in casestudies.NETLISTS or stem in casestudies.MODELS:
        return casestudies.fixture_path(stem)
    raise FileNotFoundError(f"{text}: no such file")


def _read_text(path: Path) -> str:
    try:
        return path.read_text()
    except OSError as exc:
        raise FileNotFoundError(f"{path}: {exc.strerror}") from exc


def load_scheme(path: Path, params=None):
    from . import check_valid

    net = check_valid(parse_netlist(_read_text(path)))
    scheme = build_scheme(build_sp_chain(net))
    return scheme, extract_state_space(scheme, params or None)


def load_any(path: Path, params=None):
    """(scheme or None, model) from a netlist or model JSON."""
    if path.suffix == ".json":
        model = load_model(path)
        return None, model.with_params(params) if params else model
    return load_scheme(path, params)


def _write(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -------------------------------------------------------------------- commands

def cmd_derive(args) -> int:
    scheme, model = load_scheme(resolve_path(args.netlist), _params(args.param))
    emits = args.emit or ["matrices"]
    chunks = []
    for kind in emits:
        if kind == "matrices":
            chunks.append(render.matrices_text(model))
        elif kind == "dot":
            chunks.append(render.render_dot(scheme))
        elif kind == "latex":
            chunks.append(render.latex(model))
        elif kind == "steps":
            chunks.append(render.steps_text(scheme))
        elif kind == "sections":
            chunks.append(render.sections_text(scheme))
        elif kind == "json":
            chunks.append(json.dumps(render.export_report(model, scheme), indent=2) + "\n")
    for note in scheme.notes:
        print(f"note: {note}", file=sys.stderr)
    _write("".join(chunks), args.out)
    return 0


def _signals(model, pairs) -> dict:
    out = {}
    for k, v in pairs or []:
        if k in model.input_labels:
            out[k] = v
            continue
        hits = [lab for lab in model.input_labels if lab.split("_", 1)[-1] == k]
        if len(hits) != 1:
            raise UsageError(f"--signal {k}: unknown input; inputs are {', '.join(model.input_labels)}")
        out[hits[0]] = v
    return out


def _x0(model, text):
    if text is None:
        return None
    x = np.zeros(model.n) if model.x0 is None else np.asarray(model.x0, dtype=float).copy()
    try:
        if "=" in text:
            for part in text.split(","):
                k, v = _assignment(part)
                x[model.state_labels.index(k)] = float(v)
        else:
            vals = [float(v) for v in text.split(",") if v.strip()]
            if len(vals) != model.n:
                raise UsageError(f"--x0 needs {model.n} values, got {len(vals)}")
            x[:] = vals
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise UsageError(f"--x0: {exc}") from None
    return x


def cmd_simulate(args) -> int:
    _, model = load_any(resolve_path(args.model), _params(args.param))
    try:
        cfg = SimConfig(t_end=args.t_end, dt=args.dt, method=args.method)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    tr = simulate(model, _signals(model, args.signal), _x0(model, args.x0), cfg)
    tr = tr.decimate(args.every)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            trajectory_csv(tr, fh)
    else:
        sys.stdout.write(trajectory_csv(tr))
    if args.plot_script:
        if not args.out:
            raise UsageError("--plot-script needs --out for the CSV it reads")
        Path(args.plot_script).write_text(render.plot_script(args.out, model.n))
    if args.plot:
        try:
            render.plot_trajectory(tr, args.plot)
        except RuntimeError as exc:
            raise UsageError(str(exc)) from None
    final = ", ".join(f"{lab}={v:.6g}" for lab, v in zip(tr.state_labels, tr.final()))
    print(f"t={tr.times[-1]:.6g}: {final}", file=sys.stderr)
    return 0


def _check_one(scheme, model, out) -> bool:
    ok = True
    rep = check_loop_signs(scheme)
    for cyc in rep.violations:
        print(f"loop parity: even number of minus signs along {' -> '.join(cyc)}", file=out)
        ok = False
    loops = detect_algebraic_loops(scheme)
    for cyc in loops:
        print(f"algebraic loop: {' -> '.join(cyc)}", file=out)
        ok = False
    if not model.psd_check():
        print("energy matrix L is not symmetric positive semidefinite", file=out)
        ok = False
    oracle = assemble_direct(scheme.chain)
    if oracle.state_labels != model.state_labels or not all(
            (oracle.symbolic[k] - model.symbolic[k]).applyfunc(sp.cancel).is_zero_matrix for k in "LABCD"):
        print("scheme matrices differ from the direct-assembly oracle", file=out)
        ok = False
    return ok


def cmd_check(args) -> int:
    if args.netlist is None:
        if args.seed is None:
            raise UsageError("check needs a netlist or --seed")
        return _check_random(args)
    from . import check_valid

    path = resolve_path(args.netlist)
    net = check_valid(parse_netlist(_read_text(path)))
    scheme = build_scheme(build_sp_chain(net))
    for spec in args.flip_sign or []:
        try:
            node_id, idx = spec.split(":")
            flip_sign(scheme, node_id, int(idx))
        except (ValueError, StopIteration, IndexError):
            raise UsageError(f"--flip-sign {spec}: expected SN<k>:<input index>") from None
    model = extract_state_space(scheme)
    for note in scheme.notes:
        print(f"note: {note}")
    if _check_one(scheme, model, sys.stdout):
        print(f"{path.name}: ok")
        return 0
    return 2


def _check_random(args) -> int:
    rng = random.Random(args.seed)
    done = failed = skipped = 0
    while done < args.count:
        text = random_sp_netlist(rng)
        try:
            scheme = build_scheme(build_sp_chain(parse_netlist(text)))
            model = extract_state_space(scheme)
        except PogError:
            skipped += 1
            continue
        done += 1
        if not _check_one(scheme, model, sys.stdout):
            failed += 1
            print(text)
    print(f"{done} random netlists checked, {failed} failed, {skipped} rejected by derivation")
    return 2 if failed else 0


def cmd_reduce(args) -> int:
    scheme, model = load_any(resolve_path(args.model), _params(args.param))
    if bool(args.eliminate) == bool(args.transform):
        raise UsageError("reduce needs exactly one of --eliminate or --transform")
    if args.eliminate:
        tr, red = eliminate_degenerate_state(model, args.eliminate, args.limit)
    else:
        tr = resize_inputs(load_transform(args.transform), model.m)
        red = apply_congruent(model, tr, t=args.time)
    data = model_to_dict(red)
    if tr.symbolic is not None:
        data["transform"] = {k: [[str(v) for v in row] for row in tr.symbolic[k].tolist()] for k in ("T", "T_u")}
    else:
        data["transform"] = {"T": tr.T_at(args.time).tolist(), "T_u": np.asarray(tr.T_u).tolist()}
    _write(json.dumps(data, indent=2) + "\n", args.out)
    return 0


# ----------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pogc", description="Power-Oriented Graphs compiler and simulator.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("derive", help="netlist to POG scheme and state-space model")
    d.add_argument("netlist")
    d.add_argument("--emit", action="append", choices=EMITS)
    d.add_argument("--out")
    d.add_argument("--param", action="append", type=_assignment, metavar="NAME=VALUE")
    d.set_defaults(func=cmd_derive)

    s = sub.add_parser("simulate", help="fixed-step simulation to CSV")
    s.add_argument("model", help="netlist (.pog) or model JSON")
    s.add_argument("--t-end", type=_positive, required=True)
    s.add_argument("--dt", type=_positive, default=1e-5)
    s.add_argument("--method", choices=("rk4", "trap"), default="rk4")
    s.add_argument("--param", action="append", type=_assignment, metavar="NAME=VALUE")
    s.add_argument("--signal", action="append", type=_assignment, metavar="INPUT=SPEC")
    s.add_argument("--x0", help="comma list or label=value pairs")
    s.add_argument("--every", type=int, default=1, help="keep every k-th sample")
    s.add_argument("--out")
    s.add_argument("--plot", metavar="PNG", help="save a plot (needs matplotlib)")
    s.add_argument("--plot-script", metavar="PY", help="write a matplotlib script for the CSV")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("check", help="loop parity, algebraic loops, PSD and oracle checks")
    c.add_argument("netlist", nargs="?")
    c.add_argument("--flip-sign", action="append", metavar="SN:IDX")
    c.add_argument("--seed", type=int)
    c.add_argument("--count", type=int, default=100)
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("reduce", help="congruent transformation or degenerate-state elimination")
    r.add_argument("model", help="model JSON or netlist")
    r.add_argument("--eliminate", metavar="STATE")
    r.add_argument("--limit", choices=("zero", "inf"), default="zero")
    r.add_argument("--transform", metavar="JSON")
    r.add_argument("--time", type=float, default=0.0, help="evaluation time for time-variant transforms")
    r.add_argument("--param", action="append", type=_assignment, metavar="NAME=VALUE")
    r.add_argument("--out")
    r.set_defaults(func=cmd_reduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"pogc: error: {exc}", file=sys.stderr)
        return 1
    except NetlistSyntaxError as exc:
        detail = f" (expected {exc.expected})" if exc.expected else ""
        src = getattr(args, "netlist", None) or args.model
        print(f"{src}:{exc.line}:{exc.column}: {exc.code}: {exc.message}{detail}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"pogc: {exc}", file=sys.stderr)
        return 1
    except PogError as exc:
        src = getattr(args, "netlist", None) or getattr(args, "model", "")
        anchor = f"{src}:{exc.line}" if exc.line else str(src)
        print(f"{anchor}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
