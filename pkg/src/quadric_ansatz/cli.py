"""Command-line front end.

Exit codes: 0 ok, 1 a tolerance check failed, 2 the input could not be parsed,
3 invalid initial data, 4 inadmissible family parameters, 5 the quadric
correspondence does not apply (sign condition or angle condition).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .dhym import ThetaSystem
from .equations import (
    DetectKind,
    HessianCoefficients,
    RecursiveSpec,
    classify,
    detect_recursive,
    equation_from_json,
    recursive_spec_from,
)
from .errors import (
    AngleMismatch,
    AnsatzError,
    DomainBoundary,
    InvalidInput,
    InvalidStart,
    NotApplicable,
    SingularField,
    Underdetermined,
)
from .families import ClosedFormFamily, Domain, family_from_dict
from .nonrec3 import NonRec3Case, describe, detect3
from .ode import SystemState, Termination, integrate, merge_two_sided, predict_termination, write_csv
from .slag import (
    check_angle,
    continue_joyce,
    graph_map,
    joyce_map,
    joyce_residual,
    slag_residual,
    write_point_cloud,
)
from .verify import Grid, constant_solution_sampler, hessian_residual, lyz_residual

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_PARSE = 2
EXIT_INIT = 3
EXIT_INADMISSIBLE = 4
EXIT_NOT_APPLICABLE = 5


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    threads: int = 1
    rtol: float = 1e-10
    atol: float = 1e-12
    out: Path = Path(".")

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise CliError(EXIT_PARSE, "tolerances must be positive")
        if self.threads < 1:
            raise CliError(EXIT_PARSE, "--threads must be at least 1")


def fmt(x) -> str:
    """17 significant digits, enough to round-trip binary64."""
    if x is None:
        return "none"
    if isinstance(x, complex):
        return f"{x.real:.17g}{x.imag:+.17g}i"
    return f"{float(x):.17g}"


def pretty_angle(theta: float) -> str:
    """theta as a small rational multiple of π when it is one (e.g. 'π/2')."""
    frac = Fraction(theta / math.pi).limit_denominator(12)
    if abs(float(frac) * math.pi - theta) > 1e-12 or frac == 0:
        return fmt(theta)
    num, den = frac.numerator, frac.denominator
    head = {1: "", -1: "−"}.get(num, f"{num}")
    return f"{head}π" + (f"/{den}" if den != 1 else "")


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise CliError(EXIT_PARSE, f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_PARSE, f"{path}: malformed JSON ({exc})") from None


def _dump(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o).__name__)


def _equation(obj) -> tuple[HessianCoefficients, RecursiveSpec | None]:
    record = obj.get("equation", obj) if isinstance(obj, dict) else obj
    try:
        return equation_from_json(record)
    except (InvalidInput, TypeError, ValueError, KeyError) as exc:
        raise CliError(EXIT_PARSE, f"bad equation record: {exc}") from None


def _family(obj) -> tuple[ClosedFormFamily, bool]:
    record = obj.get("family", obj) if isinstance(obj, dict) else obj
    try:
        fam = family_from_dict(record)
    except (InvalidInput, TypeError, ValueError, KeyError) as exc:
        raise CliError(EXIT_PARSE, f"bad family record: {exc}") from None
    except DomainBoundary as exc:
        raise CliError(EXIT_INADMISSIBLE, str(exc)) from None
    return fam, bool(record.get("entire", False))


def _inner_range(dom: Domain, lo: float, hi: float, margin: float = 0.05) -> tuple[float, float]:
    """[lo, hi] intersected with the domain, pulled in from finite domain ends."""
    a, b = max(lo, dom.lo), min(hi, dom.hi)
    width = b - a
    if math.isfinite(dom.lo) and a == dom.lo:
        a += margin * width
    if math.isfinite(dom.hi) and b == dom.hi:
        b -= margin * width
    if not a < b:
        raise CliError(EXIT_INADMISSIBLE, f"the requested s-range misses the domain {dom.to_dict()}")
    return a, b


def _grid(n: int, obj: dict, cfg: RunConfig, dom: Domain | None = None) -> Grid:
    spec = dict(obj.get("grid") or {})
    spec.setdefault("seed", cfg.seed)
    try:
        grid = Grid.from_dict(n, spec)
    except (InvalidInput, TypeError, ValueError) as exc:
        raise CliError(EXIT_PARSE, f"bad grid: {exc}") from None
    if dom is not None:
        lo, hi = _inner_range(dom, *grid.s_range)
        grid = Grid(n, grid.x_range, (lo, hi), grid.count, grid.s_count, grid.mc_points, grid.seed)
    return grid


# ---------------------------------------------------------------------- classify
def classification(h: HessianCoefficients, spec: RecursiveSpec | None) -> dict:
    """Verdict record for an equation (shared by the classify command and tests)."""
    if h.n == 3:
        routed = detect3(h)
        if isinstance(routed, NonRec3Case):
            return {"recursive": False, "n": 3, "case": routed.kind.value, "a": routed.a,
                    "text": describe(routed)}
    if spec is None:
        try:
            det = detect_recursive(h)
        except Underdetermined:
            return {"recursive": None, "n": h.n, "text": "n=1: every equation is trivially recursive"}
        if det.kind is DetectKind.NOT_RECURSIVE:
            return {"recursive": False, "n": h.n, "residual": det.residual,
                    "text": f"not recursive (residual {fmt(det.residual)})"}
        a0, a1 = det.a0, det.a1
        if det.kind is DetectKind.FAMILY:
            # prefer the dHYM representative when it is admissible
            probe = recursive_spec_from(h, 1.0, 0.0)
            from .equations import build_recursive
            if np.allclose(build_recursive(probe).f_coeffs, h.f_coeffs, rtol=1e-12, atol=1e-12):
                a0, a1 = 1.0, 0.0
        spec = recursive_spec_from(h, a0, a1)
        kind = "family" if det.kind is DetectKind.FAMILY else "unique"
    else:
        kind = "given"
    fac = classify(spec)
    case_no = {"DistinctRoots": 1, "RepeatedNonzeroRoot": 2, "RepeatedZeroRoot": 3}[fac.case.value]
    r1, r2 = fac.roots
    roots = _roots_text(r1, r2)
    head = "recursive family" if kind == "family" or (kind == "given" and h.n == 2) else "recursive"
    text = f"{head}, representative ({_num(spec.a0)},{_num(spec.a1)}); Case {case_no} roots {roots}"
    return {
        "recursive": True, "n": h.n, "a0": spec.a0, "a1": spec.a1, "detection": kind,
        "case": fac.case.value, "case_number": case_no, "roots": [[r1.real, r1.imag], [r2.real, r2.imag]],
        "factored": {"A": [fac.A.real, fac.A.imag], "B": [fac.B.real, fac.B.imag], "u": fac.u,
                     "conjugate": fac.conjugate},
        "text": text,
    }


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else fmt(x)


def _roots_text(r1: complex, r2: complex) -> str:
    if r1.imag != 0.0 and r1.real == 0.0 and abs(r1.imag) == abs(r2.imag):
        mag = abs(r1.imag)
        return "±i" if mag == 1.0 else f"±{fmt(mag)}i"
    if r1 == r2:
        return f"{fmt(r1.real)} (double)"
    return ", ".join(fmt(r.real) if r.imag == 0 else fmt(r) for r in (r1, r2))


def cmd_classify(args, cfg: RunConfig) -> int:
    h, spec = _equation(_load_json(args.file))
    rec = classification(h, spec)
    print(rec["text"])
    _dump(cfg.out / "classify.json", rec)
    return EXIT_OK


# ---------------------------------------------------------------------- solve
def _state(obj: dict) -> SystemState:
    init = obj.get("init")
    if not isinstance(init, dict):
        raise CliError(EXIT_INIT, "missing 'init' record")
    try:
        p = np.asarray(init["p"], dtype=float)
        if "R" in init:
            R = np.asarray(init["R"], dtype=float)
        elif "dp" in init:
            dp = np.asarray(init["dp"], dtype=float)
            if np.any(dp == 0.0):
                raise InvalidInput("p' has a zero entry")
            R = 1.0 / dp
        else:
            raise InvalidInput("init needs 'R' or 'dp'")
        return SystemState(float(init.get("s", 0.0)), p, R, float(init.get("r", 0.0)),
                           float(init.get("rprime", 0.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(EXIT_INIT, f"invalid init: {exc}") from None


def cmd_solve(args, cfg: RunConfig) -> int:
    obj = _load_json(args.file)
    h, spec = _equation(obj)
    st = _state(obj)
    lo, hi = args.range if args.range else obj.get("s_range", [st.s - 1.0, st.s + 1.0])
    lo, hi = float(lo), float(hi)
    if not lo <= st.s <= hi:
        raise CliError(EXIT_INIT, f"s_range [{fmt(lo)}, {fmt(hi)}] does not contain the seed s = {fmt(st.s)}")
    if st.n != h.n:
        raise CliError(EXIT_INIT, f"init has n={st.n}, equation has n={h.n}")
    s_eval = None
    if args.samples:
        s_eval = np.linspace(lo, hi, args.samples)
    opts = dict(rtol=cfg.rtol, atol=cfg.atol, max_step=args.max_step)
    try:
        if lo == hi:
            summary = {"termination": Termination.REACHED_END.value, "s_star": None, "samples": 0,
                       "backward": None, "invariant_drift": {}}
            header = _traj_header(h.n, spec)
            write_csv(cfg.out / "trajectory.csv", header, np.empty((0, len(header))))
            _dump(cfg.out / "summary.json", summary)
            print("empty range: no samples")
            return EXIT_OK
        back = integrate(h, st, lo, s_eval=None if s_eval is None else s_eval[s_eval <= st.s], **opts)
        fwd = integrate(h, st, hi, s_eval=None if s_eval is None else s_eval[s_eval >= st.s], **opts)
    except (InvalidInput, SingularField, InvalidStart) as exc:
        raise CliError(EXIT_INIT, f"invalid init: {exc}") from None
    traj = merge_two_sided(back, fwd) if s_eval is None else _join(back, fwd, st.s)
    summary = {
        "termination": fwd.termination.value,
        "s_star": fwd.s_star,
        "backward": {"termination": back.termination.value, "s_star": back.s_star},
        "samples": len(traj),
        "invariant_drift": traj.invariant_drift(spec),
    }
    if spec is not None:
        summary["predicted"] = _predictions(spec, h, st)
    traj.to_csv(cfg.out / "trajectory.csv", spec)
    _dump(cfg.out / "summary.json", summary)
    print(f"forward: {summary['termination']} s* = {fmt(fwd.s_star)}")
    print(f"backward: {back.termination.value} s* = {fmt(back.s_star)}")
    for key, val in summary["invariant_drift"].items():
        print(f"drift {key} = {fmt(val)}")
    return EXIT_OK


def _traj_header(n, spec):
    header = ["s"] + [f"p{i + 1}" for i in range(n)] + [f"R{i + 1}" for i in range(n)]
    header += ["r", "rprime", "rpp", "F", "kappa"]
    if spec is not None:
        header += [f"xi{i + 1}" for i in range(n)]
    return header


def _join(back, fwd, s0):
    from .ode.integrate import Trajectory

    s = np.concatenate([back.s[::-1], fwd.s])
    keep = np.concatenate([[True], np.diff(s) > 0])
    cat = lambda a, b: np.concatenate([a[::-1], b])[keep]
    return Trajectory(fwd.n, s[keep], cat(back.y, fwd.y), cat(back.rpp, fwd.rpp), cat(back.F, fwd.F),
                      cat(back.G, fwd.G), fwd.termination, fwd.s_star, fwd.message)


def _predictions(spec, h, st) -> dict:
    out = {}
    for name, d in (("forward", 1), ("backward", -1)):
        try:
            pred = predict_termination(spec, st, d, h)
            out[name] = {"s_star": st.s + pred.s_star if math.isfinite(pred.s_star) else None,
                         "cause": pred.cause}
        except (AnsatzError, ValueError, ArithmeticError) as exc:
            out[name] = {"s_star": None, "cause": f"unavailable: {exc}"}
    return out


# ---------------------------------------------------------------------- family
def _sample_rows(fam: ClosedFormFamily, s: np.ndarray):
    smp = fam.sample(s)
    F, Fp = fam.f_theta(s)
    n = fam.n
    header = ["s"] + [f"p{i + 1}" for i in range(n)] + [f"dp{i + 1}" for i in range(n)]
    header += [f"q{i + 1}" for i in range(n)] + ["r", "rprime", "rpp", "F_theta", "F_perp"]
    data = np.hstack([s[:, None], smp.p, smp.dp, smp.q, smp.r[:, None], smp.dr[:, None],
                      smp.d2r[:, None], F[:, None], Fp[:, None]])
    return header, data


def cmd_family(args, cfg: RunConfig) -> int:
    obj = _load_json(args.file)
    fam, entire = _family(obj)
    violations = fam.violations(entire)
    if violations:
        for v in violations:
            print(f"inadmissible: {v}", file=sys.stderr)
        raise CliError(EXIT_INADMISSIBLE, "; ".join(violations))
    dom = fam.domain()
    grid = _grid(fam.n, obj, cfg, dom)
    tol = float(obj.get("tolerance", args.tol))
    s = np.linspace(grid.s_range[0], grid.s_range[1], args.samples)
    header, data = _sample_rows(fam, s)
    write_csv(cfg.out / "samples.csv", header, data)
    report = lyz_residual(fam.theta, fam.sample, grid, threads=cfg.threads)
    rec = report.to_dict()
    rec.update({"family": fam.to_dict(), "domain": dom.to_dict(), "tolerance": tol,
                "entire_requested": entire, "passed": report.scaled_max <= tol})
    _dump(cfg.out / "report.json", rec)
    print(f"domain = ({fmt(dom.lo)}, {fmt(dom.hi)})")
    print(f"scaled_max = {fmt(report.scaled_max)}")
    print(f"phase in [{fmt(report.phase_min)}, {fmt(report.phase_max)}]")
    return EXIT_OK if report.scaled_max <= tol else EXIT_TOLERANCE


# ---------------------------------------------------------------------- verify
def cmd_verify(args, cfg: RunConfig) -> int:
    obj = _load_json(args.file)
    if "family" in obj:
        fam, _ = _family(obj)
        sampler, n, theta, dom = fam.sample, fam.n, fam.theta, fam.domain()
    elif "quadratic" in obj:
        q = obj["quadratic"]
        try:
            p = np.asarray(q["p"], dtype=float)
            sampler = constant_solution_sampler(p, float(q.get("rpp", 0.0)), q.get("q_slope"))
        except (KeyError, TypeError, ValueError) as exc:
            raise CliError(EXIT_PARSE, f"bad quadratic record: {exc}") from None
        n, theta, dom = p.size, float(obj.get("theta", 0.0)), None
    else:
        raise CliError(EXIT_PARSE, "verify needs a 'family' or 'quadratic' record")
    kind = obj.get("kind", args.kind)
    grid = _grid(n, obj, cfg, dom)
    tol = float(obj.get("tolerance", args.tol))
    if kind == "hessian":
        if "equation" in obj:
            h, _ = _equation(obj)
        else:
            h = ThetaSystem(n, theta).coefficients()
        report = hessian_residual(h, sampler, grid, threads=cfg.threads, keep_points=args.points)
    elif kind == "lyz":
        report = lyz_residual(theta, sampler, grid, threads=cfg.threads, keep_points=args.points)
    else:
        raise CliError(EXIT_PARSE, f"unknown verification kind {kind!r}")
    rec = report.to_dict()
    rec.update({"tolerance": tol, "passed": report.scaled_max <= tol})
    _dump(cfg.out / "report.json", rec)
    if args.points:
        report.to_csv(cfg.out / "residuals.csv")
    print(f"{kind}: max |residual| = {fmt(report.max_abs_residual)}, scaled_max = {fmt(report.scaled_max)}")
    return EXIT_OK if report.scaled_max <= tol else EXIT_TOLERANCE


# ---------------------------------------------------------------------- slag
def _angle_error(exc: AngleMismatch) -> CliError:
    return CliError(EXIT_NOT_APPLICABLE,
                    f"required θ = {pretty_angle(exc.theta_required)} (e^{{iθ}}iⁿ = −i); {exc}")


def cmd_slag(args, cfg: RunConfig) -> int:
    obj = _load_json(args.file)
    fam, _ = _family(obj)
    dom = fam.domain()
    lo, hi = (float(v) for v in obj.get("s_range", [-2.0, 2.0]))
    tol = float(obj.get("tolerance", args.tol))
    try:
        if args.mode == "residual":
            grid = _grid(fam.n, obj, cfg, dom)
            report = slag_residual(fam.theta, fam.sample, grid, threads=cfg.threads)
            rec = report.to_dict()
            rec.update({"tolerance": tol, "passed": report.scaled_max <= tol})
            _dump(cfg.out / "slag_residual.json", rec)
            print(f"slag scaled_max = {fmt(report.scaled_max)}")
            return EXIT_OK if report.scaled_max <= tol else EXIT_TOLERANCE
        if args.mode == "pointcloud":
            a, b = _inner_range(dom, lo, hi)
            count = args.count
            xs = np.linspace(-2.0, 2.0, count)
            X = np.stack(np.meshgrid(*([xs] * fam.n), indexing="ij"), axis=-1).reshape(-1, fam.n)
            pts = [graph_map(fam.sample)(X, np.full(X.shape[0], s)) for s in np.linspace(a, b, count)]
            write_point_cloud(cfg.out / "pointcloud.csv", np.concatenate(pts))
            print(f"wrote {sum(len(p) for p in pts)} points")
            return EXIT_OK
        check_angle(fam.n, fam.theta)
        if fam.kappa <= 0:
            raise NotApplicable(f"kappa = {fmt(fam.kappa)} <= 0: the quadric correspondence needs kappa > 0")
        if args.mode == "joyce":
            a, b = _inner_range(dom, lo, hi)
            res = joyce_residual(fam, fam.theta, np.linspace(a, b, args.samples))
            rec = {"absolute": res.absolute, "scaled": res.scaled, "samples": res.samples,
                   "s_range": [a, b], "tolerance": tol, "passed": res.absolute <= tol}
            _dump(cfg.out / "joyce.json", rec)
            print(f"joyce residual = {fmt(res.absolute)} (scaled {fmt(res.scaled)})")
            return EXIT_OK if res.absolute <= tol else EXIT_TOLERANCE
        return _extend(fam, dom, lo, hi, args, cfg, tol)
    except AngleMismatch as exc:
        raise _angle_error(exc) from None
    except NotApplicable as exc:
        raise CliError(EXIT_NOT_APPLICABLE, str(exc)) from None


def _extend(fam, dom, lo, hi, args, cfg, tol) -> int:
    """Continue (w, beta) over [lo, hi] in s (scaled to t) from an interior seed."""
    s0 = 0.0 if dom.contains(0.0) else 0.5 * (max(dom.lo, lo) + min(dom.hi, hi))
    js0 = joyce_map(fam.state(s0), fam.theta)
    root = math.sqrt(fam.kappa)
    ts = np.linspace(lo, hi, args.samples) * root
    back = continue_joyce(js0, lo * root, t_eval=ts[ts <= js0.t])
    fwd = continue_joyce(js0, hi * root, t_eval=ts[ts >= js0.t])
    t = np.concatenate([back.t[::-1], fwd.t])
    keep = np.concatenate([[True], np.diff(t) > 0])
    from .slag import JoyceTrajectory

    traj = JoyceTrajectory(t[keep], np.concatenate([back.w[::-1], fwd.w])[keep],
                           np.concatenate([back.beta[::-1], fwd.beta])[keep], fwd.termination)
    zetas = np.stack(np.meshgrid(*([np.linspace(-1.0, 1.0, 5)] * fam.n), indexing="ij"), axis=-1).reshape(-1, fam.n)
    frame = traj.frame_residual(zetas)
    chart = 0.0
    for i, ti in enumerate(traj.t):
        s = ti / root
        if dom.lo < s < dom.hi:
            try:
                js = joyce_map(fam.state(s), fam.theta)
            except (DomainBoundary, NotApplicable):
                continue
            gap = min(np.max(np.abs(js.w - traj.w[i])), np.max(np.abs(js.w + traj.w[i])))
            chart = max(chart, float(max(gap, abs(js.beta - traj.beta[i]))))
    write_point_cloud(cfg.out / "pointcloud.csv", traj.point_cloud(zetas))
    rec = {"t_range": [float(traj.t[0]), float(traj.t[-1])], "s_range": [lo, hi],
           "domain": dom.to_dict(), "frame_residual": frame, "chart_gap": chart,
           "crosses_boundary": bool(lo < dom.lo or hi > dom.hi), "tolerance": tol,
           "passed": frame <= tol}
    _dump(cfg.out / "extend.json", rec)
    print(f"frame residual = {fmt(frame)}, chart gap = {fmt(chart)}")
    return EXIT_OK if frame <= tol else EXIT_TOLERANCE


# ---------------------------------------------------------------------- main
def _global_flags(parser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=d(0), help="seed for Monte-Carlo sampling")
    parser.add_argument("--threads", type=int, default=d(1), help="worker threads for grid sweeps")
    parser.add_argument("--rtol", type=float, default=d(1e-10), help="integrator relative tolerance")
    parser.add_argument("--atol", type=float, default=d(1e-12), help="integrator absolute tolerance")
    parser.add_argument("--out", type=Path, default=d(Path(".")), help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quadric-ansatz", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common], help="recursive / non-recursive verdict")
    p.add_argument("file")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("solve", parents=[common], help="integrate the reduced system")
    p.add_argument("file")
    p.add_argument("--range", nargs=2, type=float, metavar=("S_MIN", "S_MAX"))
    p.add_argument("--samples", type=int, default=0, help="resample on a uniform grid of this size")
    p.add_argument("--max-step", type=float, default=0.05)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("family", parents=[common], help="sample and verify a closed-form family")
    p.add_argument("file")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--samples", type=int, default=201)
    p.set_defaults(func=cmd_family)

    p = sub.add_parser("verify", parents=[common], help="PDE residual on a grid")
    p.add_argument("file")
    p.add_argument("--kind", choices=["hessian", "lyz"], default="lyz")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--points", action="store_true", help="also write the per-point residual CSV")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("slag", parents=[common], help="special Lagrangian checks")
    p.add_argument("file")
    p.add_argument("--mode", choices=["residual", "joyce", "extend", "pointcloud"], default="residual")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--samples", type=int, default=81)
    p.add_argument("--count", type=int, default=11, help="points per axis for pointcloud")
    p.set_defaults(func=cmd_slag)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = RunConfig(args.seed, args.threads, args.rtol, args.atol, args.out)
        cfg.out.mkdir(parents=True, exist_ok=True)
        return args.func(args, cfg)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except AngleMismatch as exc:
        print(f"error: {_angle_error(exc)}", file=sys.stderr)
        return EXIT_NOT_APPLICABLE
    except NotApplicable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_APPLICABLE
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
