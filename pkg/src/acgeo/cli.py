"""Command-line verification suites over scene geometries.

Each subcommand samples seeded points on a scene, runs one family of
checks, prints a human-readable summary, and optionally writes a
machine-readable report.  Reports are deterministic: identical
(scene, seed, tolerance, version) inputs produce byte-identical files,
so wall-clock timing appears only in the console output, never in the
report.  Exit codes: 0 all checks passed, 1 at least one check failed
(the report is still written), 2 invalid usage or malformed input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .catalog import (
    BUILTIN_SCENE_IDS,
    Scene,
    SceneCheckError,
    SceneFormatError,
    SceneUsageError,
    builtin_scene,
    load_scene,
)
from .exprlang import to_text
from .fields import (
    FundamentalFormField,
    exterior_derivative,
    lee_dtheta_fd,
    lee_form_4d,
    nijenhuis,
)
from .localsymp4 import (
    anti_invariant_basis,
    build_infinitesimal_solution,
    polarized_symbol_ddelta,
    symbol_dminus_rank,
    _primitive_basis,
)
from .obstruction6 import check_nk_identity, no_symplectic_certificate
from .pointwise import KFormPoint, form_inner

REPORT_SCHEMA = "acgeo-report/1"

DEFAULT_POINTS = 100
DEFAULT_SEED = 42
DEFAULT_TOLS = {
    "nijenhuis": 1e-10,
    "lee-form": 1e-10,
    "nk-check": 1e-8,
    "certify": 1e-6,
    "symbols": 0.0,
    "germ": 0.0,
}


def _tol(value, command: str) -> float:
    return DEFAULT_TOLS[command] if value is None else value


def _render(value) -> str:
    """Serialize a report value with 17-significant-digit floats."""
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not math.isfinite(v):
            return json.dumps(repr(v))
        return format(v, ".17g")
    if isinstance(value, complex):
        return _render({"real": value.real, "imag": value.imag})
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        body = ", ".join(f"{json.dumps(str(k))}: {_render(v)}" for k, v in value.items())
        return "{" + body + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_render(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value).__name__} into a report")


def render_report(report: dict) -> str:
    return _render(report) + "\n"


def _check(name, passed, points, max_residual=None, flagged=False, **details):
    verdict = "pass" if passed else "fail"
    if passed and flagged:
        verdict = "pass-with-flag"
    record = {"name": name, "verdict": verdict, "points": points}
    if max_residual is not None:
        record["max_residual"] = float(max_residual)
    record["details"] = details
    return record


def check_nijenhuis(scene: Scene, points: int, seed: int, tol: float):
    J = scene.j_field()
    pts = scene.sample_points(points, seed)
    max_n = antisym = antilin = 0.0
    for p in pts:
        N = nijenhuis(J, p)
        max_n = max(max_n, N.max_norm())
        antisym = max(antisym, N.antisymmetry_residual())
        antilin = max(antilin, N.anti_linearity_residual(J.at_point(p)))
    scale = max(1.0, max_n)
    ok = antisym <= 1e-12 * scale and antilin <= 1e-8 * scale
    expectation = "unconstrained"
    if "integrable" in scene.tags:
        ok = ok and max_n <= tol
        expectation = "zero"
    elif "non-integrable" in scene.tags or "nearly-kahler" in scene.tags:
        ok = ok and max_n > tol
        expectation = "nonzero"
    return _check(
        "nijenhuis",
        ok,
        points,
        max_residual=max(antisym, antilin),
        max_norm=max_n,
        antisymmetry=antisym,
        anti_linearity=antilin,
        expectation=expectation,
        tol=tol,
    )


def check_lee_form(scene: Scene, form_name: str, points: int, seed: int, tol: float):
    omega = scene.form_field(form_name)
    if scene.dim != 4:
        raise SceneUsageError("the Lee form solve needs a 4-dimensional scene")
    pts = scene.sample_points(points, seed)
    residual = dtheta = theta_max = 0.0
    for p in pts:
        result = lee_form_4d(omega, p)
        scale = max(1.0, abs(result.pfaffian))
        residual = max(residual, result.residual / scale)
        theta_max = max(theta_max, float(np.abs(result.theta).max()))
        dtheta = max(dtheta, lee_dtheta_fd(omega, p).max_norm())
    return _check(
        "lee-form",
        residual <= tol,
        points,
        max_residual=residual,
        form=form_name,
        theta_max=theta_max,
        dtheta_max=dtheta,
        tol=tol,
    )


def check_nk(scene: Scene, points: int, seed: int, tol: float, expect: str = "small"):
    """Residuals of the nearly Kahler identity h(JN(X,Y),Z) = dF(X,Y,Z)/3.

    ``expect`` flips the pass condition for tagged negative controls: a
    scene annotated as not nearly Kahler passes when the residual is
    visibly large.
    """
    J, h = scene.j_field(), scene.metric_field()
    pts = scene.sample_points(points, seed)
    residual = max(check_nk_identity(J, h, p) for p in pts)
    ok = residual <= tol if expect == "small" else residual > tol
    return _check(
        "nk-check", ok, points, max_residual=residual, tol=tol, expectation=expect
    )


def check_certify(scene: Scene, points: int, seed: int, tol: float):
    if scene.dim != 6:
        raise SceneUsageError("certify runs the 6-dimensional pipeline")
    J, h = scene.j_field(), scene.metric_field()
    pts = scene.sample_points(points, seed)
    counts: dict = {}
    worst_residual = 0.0
    spread = 0.0
    lambda_min = math.inf
    obstruction_imag_min = math.inf
    flips = 0
    for p in pts:
        cert = no_symplectic_certificate(J, h, p, scene_id=scene.id, tol=tol)
        counts[cert.verdict] = counts.get(cert.verdict, 0) + 1
        if cert.residuals:
            worst_residual = max(worst_residual, max(cert.residuals.values()))
        if cert.sign_flipped:
            flips += 1
        if cert.eigenvalues is not None and cert.verdict == "NO_COMPATIBLE_SYMPLECTIC_FORM":
            lam = cert.eigenvalues
            spread = max(spread, float((lam.max() - lam.min()) / max(lam.max(), 1e-300)))
            lambda_min = min(lambda_min, float(lam.min()))
            obstruction_imag_min = min(obstruction_imag_min, cert.obstruction.imag)
    not_applicable = counts.get("NOT_APPLICABLE", 0)
    ok = not_applicable == 0 or "nearly-kahler" not in scene.tags
    flagged = counts.get("INCONCLUSIVE", 0) > 0 or (not_applicable > 0)
    details = {"verdicts": dict(sorted(counts.items())), "sign_flips": flips, "tol": tol}
    if lambda_min is not math.inf:
        details["lambda_min"] = lambda_min
        details["lambda_spread_rel"] = spread
        details["obstruction_imag_min"] = obstruction_imag_min
    return _check(
        "certify",
        ok,
        points,
        max_residual=worst_residual,
        flagged=flagged,
        **details,
    )


def check_symbols(scene: Scene, points: int, seed: int):
    if scene.dim != 4:
        raise SceneUsageError("symbol rank sweeps run on 4-dimensional scenes")
    J = scene.j_field()
    h = scene.metric_field() if scene.has_metric else None
    pts = scene.sample_points(points, seed)
    rng = np.random.default_rng(seed)
    dminus_ok = points
    polarized_ok = points if h is not None else 0
    for p in pts:
        Jp = J.at_point(p)
        xi = rng.normal(size=4)
        while np.abs(xi).max() == 0.0:
            xi = rng.normal(size=4)
        if symbol_dminus_rank(Jp, xi) != 2:
            dminus_ok -= 1
        if h is None:
            continue
        hp = h.at_point(p)
        frame = anti_invariant_basis(Jp)
        prim = _primitive_basis(hp, Jp)
        columns = []
        for i in range(4):
            for j in range(i, 4):
                for k in range(2):
                    a2 = np.zeros((4, 4, 4, 4))
                    a2[i, j] = frame[k]
                    a2[j, i] = frame[k]
                    out = polarized_symbol_ddelta(hp, Jp, a2)
                    columns.append([form_inner(out, KFormPoint(b), hp) for b in prim])
        if np.linalg.matrix_rank(np.array(columns).T) != 5:
            polarized_ok -= 1
    ok = dminus_ok == points and (h is None or polarized_ok == points)
    return _check(
        "symbols",
        ok,
        points,
        dminus_rank2=dminus_ok,
        polarized_rank5=polarized_ok if h is not None else None,
        metric_available=h is not None,
    )


def check_germ(scene: Scene, point, seed: int):
    if scene.dim != 4:
        raise SceneUsageError("the germ construction runs on 4-dimensional scenes")
    J, h = scene.j_field(), scene.metric_field()
    point = np.asarray(point, dtype=float)
    try:
        germ = build_infinitesimal_solution(J, h, point, seed=seed)
    except RuntimeError as exc:
        return _check("germ", False, 1, error=str(exc), point=list(point))
    return _check(
        "germ",
        True,
        1,
        max_residual=germ.dminus_norm,
        point=list(point),
        L_value=germ.L_value,
        wedge_value=germ.wedge_value,
        wedge_identity_residual=germ.wedge_identity_residual,
        positivity_radius=germ.positivity_radius,
        conformal=None if germ.conformal is None else to_text(germ.conformal),
    )


def _applicable_checks(scene: Scene, points: int, seed: int, tol):
    records = [
        check_nijenhuis(scene, points, seed, _tol(tol, "nijenhuis"))
    ]
    if scene.dim == 4:
        for name, degree, _ in scene.forms:
            if degree == 2:
                records.append(
                    check_lee_form(scene, name, points, seed, _tol(tol, "lee-form"))
                )
        records.append(check_symbols(scene, points, seed))
        if scene.has_metric:
            records.append(check_germ(scene, scene.chart.center(), seed))
    if scene.dim == 6 and scene.has_metric:
        expect = "large" if "not-nearly-kahler" in scene.tags else "small"
        records.append(check_nk(scene, points, seed, _tol(tol, "nk-check"), expect))
        records.append(check_certify(scene, points, seed, _tol(tol, "certify")))
    return records


def resolve_scene(args) -> Scene:
    path = getattr(args, "scene_file", None)
    name = getattr(args, "scene", None)
    if path is not None:
        return load_scene(path)
    if name is None:
        raise SceneUsageError("no scene given: pass a built-in id or --scene-file")
    alias_pool = set(BUILTIN_SCENE_IDS) | {"s6"}
    if name in alias_pool:
        return builtin_scene(name)
    if "/" in name or name.endswith((".yaml", ".yml", ".scene")):
        return load_scene(name)
    raise SceneUsageError(
        f"unknown scene '{name}'; built-ins: {', '.join(BUILTIN_SCENE_IDS)} "
        "(or pass a file path)"
    )


def _parse_point(text: str, dim: int) -> np.ndarray:
    try:
        values = [float(part) for part in text.split(",")]
    except ValueError as exc:
        raise SceneUsageError(f"could not parse --point '{text}': {exc}")
    if len(values) != dim:
        raise SceneUsageError(
            f"--point needs {dim} comma-separated coordinates, got {len(values)}"
        )
    return np.asarray(values)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acgeo",
        description="Verification suites for chart-based almost complex geometries.",
    )
    parser.add_argument("--version", action="version", version=f"acgeo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scene_positional=True):
        if scene_positional:
            p.add_argument("scene", nargs="?", help="built-in scene id or scene file path")
        p.add_argument("--scene-file", help="explicit scene file path")
        p.add_argument("--points", type=int, default=DEFAULT_POINTS)
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--tol", type=float, default=None,
                       help="override the subcommand's residual tolerance")
        p.add_argument("--out", help="write the machine-readable report here")

    common(sub.add_parser("nijenhuis", help="torsion tensor checks"))
    lee = sub.add_parser("lee-form", help="Lee form solve residuals (4d)")
    common(lee)
    lee.add_argument("--form", default="omega", help="name of the scene 2-form")
    common(sub.add_parser("nk-check", help="nearly Kahler identity residuals (needs metric)"))
    common(sub.add_parser("certify", help="compatible-symplectic obstruction pipeline (6d)"))
    germ = sub.add_parser("germ", help="infinitesimal symplectic germ (4d)")
    common(germ)
    germ.add_argument("--point", help="comma-separated base point (default: chart center)")
    common(sub.add_parser("symbols", help="principal symbol rank sweeps (4d)"))
    common(sub.add_parser("check-all", help="all applicable checks (all built-ins if no scene)"))
    return parser


def run_command(args) -> dict:
    """Execute the parsed subcommand and assemble the report document."""
    tol = args.tol
    scenes: list[Scene]
    if args.command == "check-all" and args.scene is None and args.scene_file is None:
        scenes = [builtin_scene(name) for name in BUILTIN_SCENE_IDS]
    else:
        scenes = [resolve_scene(args)]

    scene_blocks = []
    for scene in scenes:
        if args.command == "nijenhuis":
            records = [check_nijenhuis(scene, args.points, args.seed,
                                       _tol(tol, "nijenhuis"))]
        elif args.command == "lee-form":
            records = [check_lee_form(scene, args.form, args.points, args.seed,
                                      _tol(tol, "lee-form"))]
        elif args.command == "nk-check":
            records = [check_nk(scene, args.points, args.seed,
                                _tol(tol, "nk-check"))]
        elif args.command == "certify":
            records = [check_certify(scene, args.points, args.seed,
                                     _tol(tol, "certify"))]
        elif args.command == "symbols":
            records = [check_symbols(scene, args.points, args.seed)]
        elif args.command == "germ":
            point = (scene.chart.center() if args.point is None
                     else _parse_point(args.point, scene.dim))
            records = [check_germ(scene, point, args.seed)]
        elif args.command == "check-all":
            records = _applicable_checks(scene, args.points, args.seed, tol)
        else:  # pragma: no cover - argparse rejects unknown subcommands
            raise SceneUsageError(f"unknown command {args.command}")
        scene_blocks.append({"scene": scene.id, "dim": scene.dim,
                             "tags": list(scene.tags), "checks": records})

    all_checks = [c for block in scene_blocks for c in block["checks"]]
    overall = "pass" if all(c["verdict"] != "fail" for c in all_checks) else "fail"
    return {
        "schema": REPORT_SCHEMA,
        "version": __version__,
        "command": args.command,
        "seed": args.seed,
        "points": args.points,
        "tol": tol,
        "scenes": scene_blocks,
        "overall": overall,
    }


def print_summary(report: dict, elapsed: float) -> None:
    for block in report["scenes"]:
        print(f"scene {block['scene']} (dim {block['dim']})")
        for check in block["checks"]:
            mark = {"pass": "PASS", "fail": "FAIL", "pass-with-flag": "PASS*"}[check["verdict"]]
            extras = []
            if "max_residual" in check:
                extras.append(f"max residual {check['max_residual']:.3g}")
            details = check.get("details", {})
            if "verdicts" in details:
                extras.append(" ".join(f"{k}:{v}" for k, v in details["verdicts"].items()))
            if "error" in details:
                extras.append(details["error"])
            suffix = f" ({'; '.join(extras)})" if extras else ""
            print(f"  [{mark}] {check['name']}{suffix}")
    print(f"overall {report['overall'].upper()} "
          f"(seed {report['seed']}, {elapsed:.2f} s)")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        report = run_command(args)
    except (SceneFormatError, SceneCheckError, SceneUsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w") as handle:
            handle.write(render_report(report))
    print_summary(report, time.perf_counter() - start)
    return 0 if report["overall"] == "pass" else 1


if __name__ == "__main__":
    sys.exit(main())
