#!/usr/bin/env python3
"""
qgdual command line: verification suites, matrix dumps and simulations.

    python -m scripts.cli verify --scope central --alg C2 --L 2
    python -m scripts.cli dump --object generator --alg A2 --L 3
    python -m scripts.cli simulate --mode duality_mc --alg C2 --L 6 --x 121020 --y 020000

Exit codes: 0 all checks passed, 1 a check failed, 2 bad parameters.
"""
from __future__ import annotations

import argparse
import os
import platform
import sys
import time
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from engines.algebra import Algebra, config_index, config_to_str, parse_config, physical_configs  # noqa: E402
from engines.central import kernel_probe, lattice_hamiltonian, verify_centrality, verify_centrality_float  # noqa: E402
from engines.duality import (Variant, as_variant, dual_domain, duality_from_symmetry, duality_table,  # noqa: E402
                             verify_duality_exact, verify_duality_float)
from engines.groundstate import check_ground_state, ground_state, verify_pseudofactorization  # noqa: E402
from engines.markov import (RATE_NAMES, constructed_generator, float_generator, generator_report,  # noqa: E402
                            reference_generator, reference_rates)
from engines.reports import CheckResult, RunManifest  # noqa: E402
from engines.repkit import fundamental_rep, verify_relations  # noqa: E402
from engines.sim import SimConfig, algebra_rates, current_moment_demo, mc_duality_check, simulate  # noqa: E402
from utils.dumps import (exact_entries, float_entries, sidecar_path, write_json, write_matrix_csv,  # noqa: E402
                         write_trajectory_csv)
from utils.errors import ConfigError, QGDualError  # noqa: E402
from utils.logs import ENV_VAR, setup_logging  # noqa: E402
from utils.qpoly import LaurentPoly  # noqa: E402
from utils.settings import Settings, load_settings  # noqa: E402

SCOPES = ("relations", "central", "kernel", "groundstate", "generator", "duality", "all")
OBJECTS = ("generator", "duality", "groundstate", "hamiltonian")
MODES = ("trajectory", "duality_mc", "moment_demo")
DEFAULT_VARIANT = {"A2": "A2_self", "C2": "C2_to_ASEP"}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None, help="JSON config file (default: config/config.json)")
    p.add_argument("--alg", choices=("A2", "C2"), default=None)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--ring", choices=("exact", "float"), default=None)
    p.add_argument("--q", type=float, default=None, help="numeric q for float runs")
    p.add_argument("--eps", default=None, help="exact rational, e.g. 1/10")
    p.add_argument("--variant", choices=[v.value for v in Variant], default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--traj", type=int, default=None)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out", default=None, help="output path (dump) or directory (verify, simulate)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qgdual", description="Two-species ASEP from quantum groups.")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run exact or float verification suites")
    _add_common(v)
    v.add_argument("--scope", choices=SCOPES, default="all")
    v.add_argument("--rate", action="append", default=[], metavar="NAME=VALUE",
                   help=f"override a reference rate ({', '.join(RATE_NAMES)}), value as Laurent text")

    d = sub.add_parser("dump", help="write matrices and vectors")
    _add_common(d)
    d.add_argument("--object", choices=OBJECTS, required=True)

    s = sub.add_parser("simulate", help="stochastic simulation")
    _add_common(s)
    s.add_argument("--mode", choices=MODES, default=None)
    s.add_argument("--x", default=None, help="initial configuration, e.g. 1200")
    s.add_argument("--y", default=None, help="dual configuration for duality_mc")
    s.add_argument("--sites", type=int, nargs="*", default=None, help="dual particle sites for moment_demo")
    s.add_argument("--types", type=int, nargs="*", default=None, help="dual particle types for moment_demo")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    keys = ("alg", "L", "ring", "q", "eps", "variant", "seed", "traj", "t", "jobs", "out", "mode")
    return {k: getattr(args, k, None) for k in keys}


def _variant(settings: Settings) -> Variant:
    alg = settings.run.alg
    variant = as_variant(settings.run.variant or DEFAULT_VARIANT[alg])
    if variant.algebra.value != alg:
        raise ConfigError(f"variant {variant.value} belongs to {variant.algebra.value}, not {alg}")
    return variant


def _parse_rates(items: Sequence[str]) -> Dict[str, LaurentPoly]:
    out: Dict[str, LaurentPoly] = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep or name not in RATE_NAMES:
            raise ConfigError(f"--rate expects NAME=VALUE with NAME in {', '.join(RATE_NAMES)}, got {item!r}")
        try:
            out[name] = LaurentPoly.from_text(value)
        except ValueError as exc:
            raise ConfigError(f"bad rate value {value!r}: {exc}") from None
    return out


def _out_dir(settings: Settings) -> Path:
    return Path(settings.output.out or settings.output.dir)


def _versions() -> Dict[str, str]:
    out = {"python": platform.python_version()}
    for pkg in ("numpy", "scipy", "pydantic"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


def _print_checks(title: str, checks: Sequence[CheckResult]) -> None:
    for c in checks:
        tag = {"pass": "PASS", "fail": "FAIL", "info": "INFO"}[c.status]
        extra = ""
        if c.first_failure is not None:
            w = c.first_failure
            extra = f"  at ({w.row}, {w.col}) = {w.value}"
        elif c.detail:
            extra = f"  {c.detail}"
        print(f"[{title}] {tag} {c.check_name}{extra}")


def _suite(title: str, report) -> Tuple[bool, Dict[str, Any]]:
    _print_checks(title, report.checks)
    return report.passed, {"scope": title, **report.model_dump()}


def _duality_suite(settings: Settings, variant: Variant, rates, L: int) -> List[Tuple[bool, Dict[str, Any]]]:
    out = []
    if settings.run.ring == "float":
        rep = verify_duality_float(variant, L, settings.numeric.q)
    else:
        gen = reference_generator(reference_rates(variant.algebra).with_overrides(rates), L) if rates else None
        rep = verify_duality_exact(variant, L, gen)
        prop = duality_from_symmetry(variant, L)
        print(f"[duality] {'PASS' if prop.passed else 'FAIL'} G^-1 S G^-1 proportional to D "
              f"({len(prop.constants)} content blocks)")
        out.append((prop.passed, {"scope": "duality-proportionality", **prop.model_dump()}))
    status = "PASS" if rep.passed else "FAIL"
    print(f"[duality] {status} {variant.value} L={L} {rep.ring}: {rep.pairs_checked} pairs, "
          f"{len(rep.failures)} failures")
    for f in rep.failures[:5]:
        print(f"  z={f.z} y={f.y}: {f.lhs} != {f.rhs}")
    out.append((rep.passed, {"scope": "duality", **rep.model_dump()}))
    return out


def run_verify(settings: Settings, scope: str, rate_items: Sequence[str]) -> Tuple[bool, List[Dict[str, Any]]]:
    alg = Algebra(settings.run.alg)
    L = settings.run.L
    rates = _parse_rates(rate_items)
    results: List[Tuple[bool, Dict[str, Any]]] = []
    scopes = SCOPES[:-1] if scope == "all" else (scope,)
    for sc in scopes:
        if sc == "relations":
            results.append(_suite("relations", verify_relations(fundamental_rep(alg), min(L, 3))))
        elif sc == "central":
            if settings.run.ring == "float":
                results.append(_suite("central", verify_centrality_float(alg, L, settings.numeric.q)))
            else:
                results.append(_suite("central", verify_centrality(alg, min(L, 3) if scope == "all" else L)))
        elif sc == "kernel":
            if alg is Algebra.C2:
                results.append(_suite("kernel", kernel_probe(alg)))
            elif scope == "kernel":
                raise ConfigError("the kernel probe is defined for C2 only")
        elif sc == "groundstate":
            gl = min(L, 4) if scope == "all" else L
            gs = ground_state(alg, gl, settings.numeric.eps if alg is Algebra.C2 else 0)
            report = check_ground_state(gs, settings.numeric.q_samples)
            for g in ("e1", "e2", "f1", "f2"):
                ok = verify_pseudofactorization(alg, g, gl)
                report.checks.append(CheckResult(check_name=f"pseudo-factorization {g}",
                                                 status="pass" if ok else "fail"))
            results.append(_suite("groundstate", report))
        elif sc == "generator":
            if L < 2:
                raise ConfigError("generator checks need L >= 2")
            table = reference_rates(alg).with_overrides(rates)
            results.append(_suite("generator", generator_report(alg, L, table, settings.numeric.q_samples)))
        elif sc == "duality":
            if L < 2 and scope == "duality":
                raise ConfigError("duality checks need L >= 2")
            if L >= 2:
                variants = [_variant(settings)] if (scope != "all" or settings.run.variant) else \
                    [v for v in Variant if v.algebra is alg]
                for v in variants:
                    results.extend(_duality_suite(settings, v, rates, min(L, 3) if scope == "all" else L))
    passed = all(ok for ok, _ in results)
    return passed, [r for _, r in results]


def run_dump(settings: Settings, obj: str) -> Path:
    alg = Algebra(settings.run.alg)
    L = settings.run.L
    ring = settings.run.ring
    q = settings.numeric.q
    qtag: Any = "symbolic" if ring == "exact" else q
    stem = f"{obj}_{alg.value}_L{L}"
    if obj == "groundstate":
        eps = settings.numeric.eps if alg is Algebra.C2 else 0
        gs = ground_state(alg, L, eps)
        path = Path(settings.output.out or Path(settings.output.dir) / f"{stem}.json")
        return write_json(path, gs.to_records())
    path = Path(settings.output.out or Path(settings.output.dir) / f"{stem}.csv")
    if obj == "hamiltonian":
        op = lattice_hamiltonian(alg, L).matrix
        entries = exact_entries(op) if ring == "exact" else float_entries(op.to_float(q))
        write_matrix_csv(path, entries, op.dim, ring, alg.value, L)
        write_json(sidecar_path(path), {"algebra": alg.value, "L": L, "q": qtag})
    elif obj == "generator":
        if L < 2:
            raise ConfigError("the generator needs L >= 2")
        if ring == "exact":
            gm = constructed_generator(alg, L)
            entries, const = exact_entries(gm.numerator), gm.denominator.to_text()
        else:
            # float dumps are already divided by the normalization constant
            entries, const = float_entries(float_generator(alg, L, q)), "1"
        write_matrix_csv(path, entries, 3 ** L, ring, alg.value, L)
        write_json(sidecar_path(path), {"algebra": alg.value, "L": L, "q": qtag, "normalization_constant": const})
    else:
        variant = _variant(settings)
        tab = duality_table(variant, L)
        cols = [c for c in dual_domain(variant, L)]
        entries = []
        for eta in physical_configs(L):
            i = config_index(eta, 3)
            for xi in cols:
                j = config_index(xi, 3)
                v = tab.get(i, j)
                entries.append((i, j, v.to_text() if ring == "exact" else repr(v.evaluate(q))))
        write_matrix_csv(path, entries, tab.dim, ring, variant.value, L)
        write_json(sidecar_path(path), {"variant": variant.value, "L": L, "q": qtag})
    return path


def run_simulate(settings: Settings, args: argparse.Namespace) -> Tuple[bool, Dict[str, Any]]:
    alg = Algebra(settings.run.alg)
    L = settings.run.L
    q = settings.numeric.q
    sim = settings.sim
    mode = sim.mode
    out_dir = _out_dir(settings)
    x = parse_config(args.x) if args.x else tuple(1 + (k % 2) for k in range(L // 2)) + (0,) * (L - L // 2)
    if len(x) != L:
        raise ConfigError(f"--x has length {len(x)}, expected L={L}")
    start = time.perf_counter()
    if mode == "trajectory":
        cfg = SimConfig(L, algebra_rates(alg, q), x, sim.t, sim.seed, 1)
        final, events = simulate(cfg, record=True)
        write_trajectory_csv(out_dir / "trajectory.csv", events)
        payload = {"config": {"alg": alg.value, "L": L, "q": q, "t": sim.t, "seed": sim.seed,
                              "initial": config_to_str(x)},
                   "final": config_to_str(final), "events": len(events) // 2}
        ok = True
    elif mode == "duality_mc":
        variant = _variant(settings)
        if not args.y:
            raise ConfigError("duality_mc needs --y")
        y = parse_config(args.y)
        est = mc_duality_check(variant, x, y, sim.t, sim.traj, sim.seed, q, sim.jobs)
        payload = {"config": {"variant": variant.value, "q": q, "t": sim.t, "seed": sim.seed, "n": sim.traj},
                   "estimates": est.model_dump(), "agreement": est.agrees()}
        ok = est.agrees()
        print(f"[duality_mc] lhs {est.lhs_mean:.6g} +- {est.lhs_stderr:.2g}, "
              f"rhs {est.rhs_mean:.6g} +- {est.rhs_stderr:.2g}, agree={ok}")
    else:
        variant = _variant(settings)
        sites = [1] if args.sites is None else args.sites
        rep = current_moment_demo(variant, x, sites, sim.t, q, sim.traj, sim.seed, args.types, sim.jobs)
        payload = {"config": {"variant": variant.value, "q": q, "t": sim.t, "seed": sim.seed, "n": sim.traj},
                   "estimates": rep.model_dump(), "agreement": rep.agreement}
        ok = rep.agreement
        print(f"[moment_demo] r={rep.r} xi={rep.xi}: {rep.estimate.lhs_mean:.6g} vs {rep.estimate.rhs_mean:.6g}, "
              f"agree={ok}")
    payload["elapsed_seconds"] = round(time.perf_counter() - start, 3)
    write_json(out_dir / f"{mode}.json", payload)
    return ok, payload


def _write_manifest(settings: Optional[Settings], command: str, started: datetime, t0: float, passed: bool,
                    summary: str, where: Optional[Path] = None) -> None:
    if settings is None:
        return
    manifest = RunManifest(command=command, parameters=settings.flat(), versions=_versions(),
                           started_at=started.isoformat(), wall_clock_seconds=round(time.perf_counter() - t0, 3),
                           passed=passed, summary=summary)
    write_json((where or _out_dir(settings)) / "manifest.json", manifest.model_dump())


def _manifest_dir(settings: Settings, command: str) -> Path:
    if command == "dump" and settings.output.out:
        return Path(settings.output.out).parent
    return _out_dir(settings)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    command = " ".join(["qgdual", *(argv if argv is not None else sys.argv[1:])])
    settings: Optional[Settings] = None
    where: Optional[Path] = None
    try:
        settings = load_settings(args.config, _overrides(args))
        setup_logging(os.getenv(ENV_VAR) or settings.log.level)
        where = _manifest_dir(settings, args.command)
        if args.command == "verify":
            passed, reports = run_verify(settings, args.scope, args.rate)
            write_json(_out_dir(settings) / f"verify_{args.scope}.json", reports)
            summary = f"{len(reports)} reports"
        elif args.command == "dump":
            path = run_dump(settings, args.object)
            passed, summary = True, f"wrote {path}"
            print(f"[dump] {summary}")
        else:
            passed, _ = run_simulate(settings, args)
            summary = f"mode {settings.sim.mode}"
    except (ConfigError, ValueError) as exc:
        print(f"[error] {exc}", file=sys.stderr)
        # settings is None when the parameters themselves were rejected
        _write_manifest(settings, command, started, t0, False, f"usage error: {exc}", where)
        return 2
    except QGDualError as exc:
        print(f"[error] {exc}", file=sys.stderr)
        _write_manifest(settings, command, started, t0, False, str(exc), where)
        return 1
    _write_manifest(settings, command, started, t0, passed, summary, where)
    print(f"[{args.command}] {'OK' if passed else 'FAIL'}")
    return 0 if passed else 1



if __name__ == "__main__":
    sys.exit(main())
