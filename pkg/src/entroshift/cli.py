"""Command line entry point: ``entroshift <command> --scenario FILE``.

Exit codes: 0 when every certificate passes, 1 when one fails, 2 when the
scenario or model cannot be loaded.
"""

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import report
from .checks import lemma_checks
from .classical import ClassicalSolution, MonotoneLipschitzFn, oleinik_modulus
from .flux import FluxEntropyModel, ModelInvalidError
from .fronts import TentTest, evolve, kruzhkov_residual
from .pipeline import RefinementError, build_psi, certify_monotone_decay

SCHEMA = 1
ADMISSIBILITY_TOL = 1e-12


class ScenarioError(ValueError):
    pass


def _positive(d, key, default=None):
    val = d.get(key, default)
    if val is None:
        raise ScenarioError(f"missing field {key!r}")
    try:
        val = float(val)
    except (TypeError, ValueError):
        raise ScenarioError(f"field {key!r} must be a number") from None
    if not val > 0:
        raise ScenarioError(f"field {key!r} must be positive, got {val}")
    return val


def _numbers(d, key):
    try:
        out = [float(v) for v in d[key]]
    except KeyError:
        raise ScenarioError(f"missing field {key!r}") from None
    except (TypeError, ValueError):
        raise ScenarioError(f"field {key!r} must be a list of numbers") from None
    return out


def _flux_or_entropy(val):
    if isinstance(val, str):
        return val
    if isinstance(val, list) and all(isinstance(c, (int, float)) for c in val):
        return [float(c) for c in val]
    raise ScenarioError(f"expected a name or a coefficient list, got {val!r}")


def resolve_path(path):
    """A file path, or the name of a bundled scenario."""
    p = Path(path)
    if p.exists():
        return p
    bundled = resources.files("entroshift") / "scenarios" / p.name
    if bundled.is_file():
        return Path(str(bundled))
    raise ScenarioError(f"scenario file not found: {path}")


def load_scenario(path):
    path = resolve_path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a JSON object")
    if raw.get("schema") != SCHEMA:
        raise ScenarioError(f"unsupported schema {raw.get('schema')!r}, expected {SCHEMA}")
    m = raw.get("model", {})
    sc = {
        "name": str(raw.get("name", path.stem)),
        "flux": _flux_or_entropy(m.get("flux", "burgers")),
        "entropy": _flux_or_entropy(m.get("entropy", "square")),
        "B": _positive(m, "B", 1.0),
        "T": _positive(raw, "T"),
        "R": _positive(raw, "R", 1.0),
        "eps": _positive(raw, "eps", 1e-2),
        "seed": int(raw.get("seed", 0)),
        "nonentropic_allowed": bool(raw.get("nonentropic_allowed", False)),
        "delta": None if raw.get("delta") is None else _positive(raw, "delta"),
    }
    data = raw.get("data")
    if not isinstance(data, dict):
        raise ScenarioError("missing object 'data'")
    kind = data.get("kind")
    if kind == "steps":
        pos, states = _numbers(data, "positions"), _numbers(data, "states")
        if len(states) != len(pos) + 1:
            raise ScenarioError("steps data needs one more state than positions")
        if any(b <= a for a, b in zip(pos[:-1], pos[1:])):
            raise ScenarioError("step positions must be strictly increasing")
        sc["data"] = {"kind": kind, "positions": pos, "states": states}
    elif kind == "breakpoints":
        xs, vs = _numbers(data, "xs"), _numbers(data, "vs")
        if len(xs) != len(vs) or len(xs) < 2 or any(b <= a for a, b in zip(xs[:-1], xs[1:])):
            raise ScenarioError("breakpoints need matching, strictly increasing xs")
        cells = int(data.get("cells", 64))
        if cells < 1:
            raise ScenarioError("cells must be at least 1")
        sc["data"] = {"kind": kind, "xs": xs, "vs": vs, "cells": cells}
    else:
        raise ScenarioError(f"unknown data kind {kind!r}")
    values = sc["data"].get("states", sc["data"].get("vs"))
    if max(abs(v) for v in values) > sc["B"]:
        raise ScenarioError(f"data exceed the declared bound B = {sc['B']:g}")
    dc = raw.get("decay_check")
    if dc is not None:
        ub = dc.get("ubar", {})
        sc["decay_check"] = {
            "xs": _numbers(ub, "xs"), "vs": _numbers(ub, "vs"),
            "interval": _numbers(dc, "interval"), "times": _numbers(dc, "times"),
            "speeds": _numbers(dc, "speeds") if "speeds" in dc else [0.0, 0.0],
        }
    return sc


def make_model(sc):
    return FluxEntropyModel.from_spec(sc["flux"], sc["entropy"], sc["B"])


def step_arrays(sc):
    """Step data; breakpoint data are replaced by their cell averages."""
    d = sc["data"]
    if d["kind"] == "steps":
        return d["states"], d["positions"]
    xs, vs, n = np.array(d["xs"]), np.array(d["vs"]), d["cells"]
    edges = np.linspace(xs[0], xs[-1], n + 1)
    fine = np.linspace(0.0, 1.0, 33)
    avg = [float(np.mean(np.interp(a + (b - a) * fine, xs, vs)))
           for a, b in zip(edges[:-1], edges[1:])]
    states = [float(vs[0])] + avg + [float(vs[-1])]
    return states, list(edges)


def make_solution(model, sc):
    states, positions = step_arrays(sc)
    return evolve(model, states, positions, sc["T"], delta=sc["delta"],
                  nonentropic_allowed=sc["nonentropic_allowed"])


def admissibility_diagnostics(model, u):
    """Fronts whose entropy production is positive (fan steps excluded)."""
    bad = []
    for k, lam, fan in u.admissibility():
        if not fan and lam > ADMISSIBILITY_TOL:
            bad.append({"front": int(k), "x0": float(u.x0[k]), "t0": float(u.t0[k]),
                        "left": float(u.left[k]), "right": float(u.right[k]),
                        "Lambda": float(lam)})
    return bad


def kruzhkov_checks(u, bad):
    """Kruzhkov residual at k = 0 on a tent around each flagged front."""
    out = []
    for d in bad:
        k = d["front"]
        tc = 0.5 * (u.t0[k] + min(u.t1[k], u.horizon))
        rt = 0.5 * (min(u.t1[k], u.horizon) - u.t0[k])
        xc = u.x0[k] + u.speed[k] * (tc - u.t0[k])
        out.append({"front": k, "k": 0.0,
                    "residual": float(kruzhkov_residual(u, 0.0, TentTest(xc, 1.0, tc, rt)))})
    return out


def decay_check(model, u, sc):
    dc = sc["decay_check"]
    ubar = ClassicalSolution(model, MonotoneLipschitzFn(dc["xs"], dc["vs"]))
    return certify_monotone_decay(model, u, ubar, dc["interval"], dc["times"], dc["speeds"])


def _out_dir(args, sc):
    out = Path(args.out) if args.out else Path("entroshift_out") / sc["name"]
    out.mkdir(parents=True, exist_ok=True)
    return out


def _psi_block(model, u, sc, out, figures=True):
    res = build_psi(model, u, sc["T"], sc["R"], sc["eps"])
    report.write_psi(out, model, u, res, figures=figures)
    return res


def cmd_run(args, sc):
    model = make_model(sc)
    u = make_solution(model, sc)
    out = _out_dir(args, sc)
    report.write_fronts(out, u)
    summary = {"scenario": sc["name"], "model": model.name, "T": sc["T"], "seed": sc["seed"],
               "n_fronts": int(u.n_records), "sup_norm": float(u.sup_norm)}
    ok = True
    bad = admissibility_diagnostics(model, u)
    summary["admissibility"] = {"violations": bad, "kruzhkov": kruzhkov_checks(u, bad)}
    for d in bad:
        print(f"front {d['front']} ({d['left']:g} -> {d['right']:g}) at x = {d['x0']:g}: "
              f"Lambda = {d['Lambda']:+.10g} > 0")
    ok &= not bad
    if "decay_check" in sc:
        dec = decay_check(model, u, sc)
        summary["decay_check"] = {k: dec[k] for k in ("times", "raw", "corrected",
                                                      "max_increase", "flagged")}
        if dec["flagged"]:
            print(f"relative entropy increases by up to {dec['max_increase']:.6g}")
        ok &= not dec["flagged"]
    if not bad:
        res = _psi_block(model, u, sc, out)
        summary["psi"] = report.psi_summary(res)
        for name, passed in sorted(res.certificates.items()):
            print(f"{name}: {'pass' if passed else 'FAIL'}")
        ok &= res.passed
    else:
        report.plot_fronts(out / "fronts.png", u)
    summary["passed"] = bool(ok)
    report.write_json(out / "summary.json", summary)
    print(f"{sc['name']}: {'PASS' if ok else 'FAIL'} -> {out}")
    return 0 if ok else 1


def cmd_build_psi(args, sc):
    model = make_model(sc)
    u = make_solution(model, sc)
    out = _out_dir(args, sc)
    res = _psi_block(model, u, sc, out)
    report.write_json(out / "psi.json", report.psi_summary(res))
    for name, passed in sorted(res.certificates.items()):
        print(f"{name}: {'pass' if passed else 'FAIL'}")
    return 0 if res.passed else 1


def cmd_verify_condition_e(args, sc):
    model = make_model(sc)
    bound = 1.0 / float(np.min(model.ddA(np.linspace(-model.B, model.B, 10_001))
                               * np.ones(10_001)))
    out = _out_dir(args, sc)
    d = sc["data"]
    rows = []
    if d["kind"] == "breakpoints" and np.all(np.diff(d["vs"]) >= 0):
        sol = ClassicalSolution(model, MonotoneLipschitzFn(d["xs"], d["vs"]))
        grid = np.linspace(-sc["R"], sc["R"], 2001)
        for t in (0.5 * sc["T"], sc["T"], 2.0 * sc["T"]):
            rows.append(("classical", t, oleinik_modulus(sol, t, grid)))
    else:
        res = build_psi(model, make_solution(model, sc), sc["T"], sc["R"], sc["eps"])
        rows.append(("psi", sc["T"], res.oleinik_modulus))
    report.write_csv(out / "condition_e.csv", ["source", "t", "modulus", "bound"],
                     [r + (bound,) for r in rows])
    ok = all(m <= bound * (1 + 1e-6) for _, _, m in rows)
    for src, t, m in rows:
        print(f"{src} t={t:g}: modulus {m:.10g} <= {bound:.10g}: {'pass' if m <= bound * (1 + 1e-6) else 'FAIL'}")
    return 0 if ok else 1


def cmd_export_fronts(args, sc):
    model = make_model(sc)
    u = make_solution(model, sc)
    out = _out_dir(args, sc)
    path = report.write_fronts(out, u)
    report.plot_fronts(out / "fronts.png", u)
    print(path)
    return 0


def _model_args(a):
    def parse(s):
        return s if "," not in s else [float(c) for c in s.split(",")]
    return FluxEntropyModel.from_spec(parse(a.flux), parse(a.entropy), a.B)


def cmd_check_lemmas(args):
    if args.samples < 1:
        raise ScenarioError("--samples must be at least 1")
    if args.scenario:
        model = make_model(load_scenario(args.scenario))
    else:
        model = _model_args(args)
    rep = lemma_checks(model, samples=args.samples, seed=args.seed)
    payload = {"model": model.name, "samples": args.samples, "seed": args.seed,
               "results": {k: {"passed": v[0], "total": v[1]} for k, v in rep.items()}}
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        report.write_json(Path(args.out) / "lemmas.json", payload)
    for k, (p, n) in rep.items():
        print(f"{k}: {p}/{n}")
    return 0 if all(p == n for p, n in rep.values()) else 1


def build_parser():
    p = argparse.ArgumentParser(prog="entroshift", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run", "build-psi", "verify-condition-e", "export-fronts"):
        s = sub.add_parser(name)
        s.add_argument("--scenario", required=True)
        s.add_argument("--out")
        s.add_argument("--seed", type=int)
        s.add_argument("--eps", type=float)
    s = sub.add_parser("check-lemmas")
    s.add_argument("--scenario")
    s.add_argument("--flux", default="burgers", help="name or ascending coefficients a0,a1,...")
    s.add_argument("--entropy", default="square")
    s.add_argument("--B", type=float, default=2.0)
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    return p


COMMANDS = {"run": cmd_run, "build-psi": cmd_build_psi,
            "verify-condition-e": cmd_verify_condition_e, "export-fronts": cmd_export_fronts}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "check-lemmas":
            return cmd_check_lemmas(args)
        sc = load_scenario(args.scenario)
        if args.eps is not None:
            if not args.eps > 0:
                raise ScenarioError("--eps must be positive")
            sc["eps"] = args.eps
        if args.seed is not None:
            sc["seed"] = args.seed
        return COMMANDS[args.command](args, sc)
    except (ScenarioError, ModelInvalidError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RefinementError as exc:
        print(f"refinement failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
