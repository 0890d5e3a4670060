"""Command line entry point: simulate, verify, attract, describe.

Exit status: 0 success, 1 an enabled check failed, 2 invalid configuration,
3 hypothesis failure, 4 blow-up.
"""

from __future__ import annotations

import argparse
import math
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import scipy

from . import __version__
from .analysis import (
    envelope_fit,
    equicontinuity_modulus,
    fractional_bound_check,
    linf_dichotomy,
)
from .attractor import (
    AbsorbingBallSpec,
    attractor_approximate,
    equilibrium_segments,
    hausdorff_semidistance,
    sample_absorbing_ball,
    truncated_equilibria,
)
from .errors import BlowUpError, HypothesisViolationError, InvalidConfigurationError
from .history import InitialSegment
from .integrator import norm_key, reference_method_of_steps, simulate
from .mild import mild_residual
from .model import CATALOG, derived_exponents, make_model, validate_hypotheses
from .runconfig import ArtifactWriter, ConfigError, load_config, parse_q

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_BLOWUP = 0, 1, 2, 3, 4


# --- initial data -----------------------------------------------------------


def initial_segments(cfg, basis, domain):
    """Initial segments named by the ``initial`` section (default: first mode, amplitude 1)."""
    init = cfg.section("initial") or {"kind": "mode", "mode": 1}
    r, dt, k = cfg.model.r, cfg.solver.dt, cfg.solver.modes
    if init["kind"] == "constant":
        a = np.zeros(k)
        a[: len(init["coeffs"])] = init["coeffs"]
        return [InitialSegment.constant(a, r, dt)]
    if init["kind"] == "mode":
        a = np.zeros(k)
        a[init["mode"] - 1] = init.get("amplitude", 1.0)
        return [InitialSegment.constant(a, r, dt)]
    ball = AbsorbingBallSpec(
        R=float(init["R"]),
        q=parse_q(init.get("q", 6.0)),
        count=int(init.get("count", 20)),
        seed=cfg.seed,
        profile=init.get("profile", "constant"),
    )
    return sample_absorbing_ball(ball, basis, domain, r, dt)


# --- per-trajectory work ------------------------------------------------------


def _trajectory_rows(traj):
    keys = ["l2"] + [norm_key("l", q) for q in traj.config.qs] + ["h1"] + [norm_key("frac", z) for z in traj.config.zetas]
    stride = traj.config.record_stride
    header = ["t"] + keys + ["tau", "clamps"]
    rows = []
    for i, t in enumerate(traj.times):
        j = i * stride
        rows.append([t] + [traj.norms[key][i] for key in keys] + [traj.tau[j], int(traj.clamp_counts[j])])
    return header, rows


def _verify_one(traj, cfg):
    """All enabled checks on one trajectory; returns (report dict, mild rows)."""
    ver = cfg.section("verification")
    checks = {}
    mild_rows = []
    basis = traj.basis
    if ver.get("envelope", True):
        keys = ["l2", "h1"] + [norm_key("l", q) for q in traj.config.qs if math.isfinite(q)]
        for key in keys:
            fit = envelope_fit(traj.times, traj.norms[key])
            checks[f"envelope_{key}"] = {
                "passed": fit.passed,
                "B": fit.B, "eta": fit.eta, "rho": fit.rho,
                "sup_violation": fit.sup_violation, "tolerance": fit.tolerance,
            }
        if ver.get("decay_rate", False):
            eta = checks["envelope_l2"]["eta"]
            rel = abs(eta / basis.mu1 - 1.0) if math.isfinite(eta) else math.inf
            checks["decay_rate"] = {"passed": rel <= 0.01, "eta": eta, "mu1": basis.mu1, "relative_error": rel}
    if ver.get("mild", True):
        rep = mild_residual(traj, stride=int(ver.get("mild_stride", 10)))
        tol = float(ver.get("mild_tol", 1e-5))
        checks["mild"] = {"passed": rep.max_residual <= tol, "max_residual": rep.max_residual, "tolerance": tol}
        mild_rows = list(zip(rep.checkpoints, rep.residuals))
    if ver.get("fractional", True) and traj.r > 0:
        for z in ver.get("fractional_zetas", [0.6, 0.75, 0.9]):
            rep = fractional_bound_check(traj, z)
            checks[f"fractional_{z:g}"] = {
                "passed": rep.passed, "empirical": rep.empirical, "bound": rep.bound, "slack": rep.slack,
                "b": rep.b, "C_zeta": rep.C_zeta, "C_zeta_r": rep.C_zeta_r, "delta": rep.delta,
            }
    if ver.get("linf", True) and "linf" in traj.norms:
        res = linf_dichotomy(traj)
        checks["linf_dichotomy"] = {"passed": res.passed, **res.constants, "slack": res.slack}
    if ver.get("equicontinuity", True) and traj.times[-1] >= 2 * traj.r + 0.2:
        for z in traj.config.zetas or (0.75,):
            if not 0.5 < z < 1:
                continue
            rep = equicontinuity_modulus(traj, z)
            checks[f"equicontinuity_{z:g}"] = {
                "passed": math.isfinite(rep.L), "L": rep.L, "pairs": rep.pairs,
                "worst_t": rep.worst_t, "worst_nu": rep.worst_nu,
            }
    if ver.get("oracle", False):
        if cfg.model.delay.kind == "constant" and cfg.model.delay.constant_value > 0:
            ref = reference_method_of_steps(traj.initial, cfg.model, traj.config)
            gap = float(np.sqrt(((traj.fields - ref.fields) ** 2).sum(axis=1)).max())
            tol = float(ver.get("oracle_tol", 5e-6))
            checks["oracle"] = {"passed": gap <= tol, "sup_l2_gap": gap, "tolerance": tol}
        else:
            checks["oracle"] = {"passed": True, "skipped": "method of steps needs a positive constant delay"}
    return {"passed": all(c["passed"] for c in checks.values()), "checks": checks}, mild_rows


def _run_member(args):
    phi, cfg, verify = args
    traj = simulate(phi, cfg.model, cfg.solver, on_blowup="flag")
    if traj.blew_up:
        return {"blowup_time": traj.blowup_time}
    out = {"trajectory": _trajectory_rows(traj)}
    if verify:
        out["report"], out["mild"] = _verify_one(traj, cfg)
    return out


def _map(func, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, jobs))
    return [func(job) for job in jobs]


# --- workflows --------------------------------------------------------------


def _member_name(stem, i, n, ext="csv"):
    return f"{stem}.{ext}" if n == 1 else f"{stem}_{i:03d}.{ext}"


def run_trajectories(cfg, writer, workers, verify):
    basis, domain = cfg.solver.basis(), cfg.solver.domain()
    segs = initial_segments(cfg, basis, domain)
    results = _map(_run_member, [(phi, cfg, verify) for phi in segs], workers)
    n = len(results)
    blowups = {}
    members = {}
    for i, res in enumerate(results):
        if "blowup_time" in res:
            blowups[str(i)] = res["blowup_time"]
            continue
        writer.write_csv(_member_name("trajectory", i, n), *res["trajectory"])
        if verify:
            if res["mild"]:
                writer.write_csv(_member_name("mild", i, n), ["t", "residual"], res["mild"])
            members[str(i)] = res["report"]
    passed = not blowups and all(m["passed"] for m in members.values())
    if verify:
        writer.write_json("verification.json", {
            "model": cfg.model.name, "members": members, "blowups": blowups, "passed": passed,
        })
    if blowups:
        return EXIT_BLOWUP, f"blow-up in {len(blowups)} of {n} member(s)"
    return (EXIT_OK if passed else EXIT_CHECK), ("all checks passed" if passed else "some checks failed")


def run_attract(cfg, writer, workers):
    att = cfg.section("attractor")
    if not att:
        raise ConfigError("<config>", 1, ["attractor"], "attract needs an 'attractor' section")
    ball = AbsorbingBallSpec(
        R=float(att["R"]),
        q=parse_q(att.get("q", 6.0)),
        count=int(att.get("count", 20)),
        seed=cfg.seed,
        profile=att.get("profile", "constant"),
    )
    basis, domain = cfg.solver.basis(), cfg.solver.domain()
    res = attractor_approximate(float(att.get("sigma", 0.0)), att["times"], ball, cfg.model, cfg.solver,
                                eps=att.get("eps"), workers=workers, basis=basis, domain=domain)
    for m, snap in enumerate(res.snapshots):
        rows = []
        for mid, seg in zip(snap.member_ids, snap.members):
            for th, a in zip(snap.thetas, seg):
                rows.extend([int(mid), th, j + 1, float(v)] for j, v in enumerate(a))
        writer.write_csv(f"snapshot_{m:02d}.csv", ["member", "theta", "mode", "coefficient"], rows)
    writer.write_csv("convergence.csv", ["t", "dH_successive", "dH_final"], res.table.rows)
    report = {
        "converged": res.converged,
        "eps": res.eps,
        "excluded": {f"{s.t:g}": s.excluded for s in res.snapshots},
        "checks": {"convergence": {"passed": res.converged, "last_successive": res.table.last_successive}},
    }
    if att.get("equilibria", False):
        roots = truncated_equilibria(cfg.model, basis, domain)
        eq = equilibrium_segments(roots, res.snapshots[-1].thetas)
        d = hausdorff_semidistance(res.snapshots[-1], eq, basis)
        tol = float(att.get("equilibria_tol", 1e-2))
        report["equilibria"] = [list(r) for r in roots]
        report["checks"]["equilibria"] = {"passed": d <= tol, "dH_to_equilibria": d, "tolerance": tol}
    report["passed"] = all(c["passed"] for c in report["checks"].values())
    writer.write_json("attractor.json", report)
    return (EXIT_OK if report["passed"] else EXIT_CHECK), f"converged={res.converged}"


def _manifest(cfg, writer, command, hyp, elapsed):
    files = dict(sorted(writer.digests.items()))
    out = {
        "command": command,
        "config_sha256": cfg.sha256,
        "seed": cfg.seed,
        "hypotheses": hyp.to_dict(),
        "versions": {
            "sddgalerkin": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "files": files,
    }
    if elapsed is not None:
        out["wall_clock_s"] = elapsed
    writer.write_json("manifest.json", out)


def run(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config, seed=args.seed)
    out = args.out or cfg.raw.get("name") or "run"
    hyp = validate_hypotheses(cfg.model)
    writer = ArtifactWriter(out)
    writer.write_text("config.json", cfg.canonical)
    if not hyp.passed:
        failed = [r.name for r in hyp.results if not r.passed]
        _manifest(cfg, writer, args.command, hyp, None)
        print(f"hypothesis check failed for {cfg.model.name}: {', '.join(failed)}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    try:
        if args.command == "attract":
            code, msg = run_attract(cfg, writer, args.workers)
        else:
            code, msg = run_trajectories(cfg, writer, args.workers, verify=args.command == "verify")
    except BlowUpError as exc:
        code, msg = EXIT_BLOWUP, str(exc)
    elapsed = time.perf_counter() - t0 if args.timing else None
    _manifest(cfg, writer, args.command, hyp, elapsed)
    print(f"{args.command}: {msg} -> {out}", file=sys.stderr if code else sys.stdout)
    return code


# --- describe ---------------------------------------------------------------


def describe(model_id, stream=None) -> int:
    stream = stream or sys.stdout
    if model_id not in CATALOG:
        print(f"unknown model {model_id!r}; catalog: {', '.join(CATALOG)}", file=sys.stderr)
        return EXIT_CONFIG
    m = make_model(model_id)
    c = m.constants
    w = lambda s: print(s, file=stream)  # noqa: E731
    w(f"model {m.name}")
    w(f"  f = {m.f!r}")
    w(f"  g = {m.g!r}")
    w(f"  h = {m.h!r}")
    w(f"  delay = {m.delay.kind}, r = {m.r:g}")
    w("declared constants")
    for name in ("p", "beta", "alpha", "Lambda", "N", "a0", "b0"):
        w(f"  {name:<7}= {getattr(c, name):g}")
    w(f"  {'r':<7}= {m.r:g}")
    try:
        ex = derived_exponents(c.p, c.beta, c.alpha)
        w("derived")
        w(f"  p_0    = {ex.p0:g}")
        w(f"  q_0    = {ex.q0:g}")
    except HypothesisViolationError as exc:
        w(f"derived: unavailable ({exc})")
    rep = validate_hypotheses(m)
    w("hypotheses")
    for r in rep.results:
        status = "pass" if r.passed else "FAIL"
        extra = r.note or (f"worst excess {r.worst_excess:.3g} at s={r.worst_sample:.3g}" if not r.passed else "")
        w(f"  {r.name:<5} {status}  {extra}".rstrip())
    return EXIT_OK


# --- argument parsing -------------------------------------------------------


def _u64(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("workers must be >= 1")
    return v


def build_parser():
    ap = argparse.ArgumentParser(prog="sddg", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in (
        ("simulate", "integrate and write trajectory CSVs"),
        ("verify", "integrate and run the enabled checks"),
        ("attract", "pullback ensemble and convergence table"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--out", metavar="DIR")
        p.add_argument("--workers", type=_positive, default=1, metavar="N")
        p.add_argument("--seed", type=_u64, default=None, metavar="U64", help="overrides the config seed")
        p.add_argument("--timing", action="store_true", help="record wall-clock time in the manifest")
    d = sub.add_parser("describe", help="print a catalog model's constants and hypothesis table")
    d.add_argument("model_id", metavar="MODEL")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "describe":
        return describe(args.model_id)
    try:
        return run(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisViolationError as exc:
        print(f"hypothesis check failed: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except InvalidConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
