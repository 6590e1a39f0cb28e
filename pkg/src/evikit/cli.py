"""Command-line front end.

Subcommands: solve, verify, gap, game, region, analyze, selftest.  Reports
are JSON with a config echo, library version, and a digest of their own
canonical form; wall-clock timings go to stderr so report files are
byte-reproducible for a fixed seed.  Exit codes: 0 success, 1 input or
solver error, 2 verification failure (a gap exceeded its target).
"""

import argparse
import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

import evikit
from evikit.analysis import (
    SmoothnessParams,
    check_smoothness,
    quartic_welfare,
    welfare_bound,
)
from evikit.errors import EvikitError, ParseError
from evikit.evicore import EVIProblem, FiniteDistribution, evi_gap_constants, \
    evi_gap_linear
from evikit.games import (
    NormalFormGame,
    bos_conjectured_boundary,
    boundary_curve_distances,
    full_problem,
    phi_gap,
    polymatrix_problem,
    polymatrix_zero_sum,
    reduced_problem,
    region_scan,
)
from evikit.solvers import run_linear_swap_pgd, solve_eah, write_trace_csv

SCHEMA_HELP = """input file schemas:
  problem:      {"polytope": {"A": [[...]], "b": [...], "name": "..."},
                 "operator": {"kind": "sign" | "affine" | "polynomial", ...},
                 "phi": "con" | "lin" | {"product": [sizes]},
                 "epsilon": 1e-3, "name": "...", "meta": {...}}
  game:         {"players": n, "actions": [...], "utilities": [tensor, ...]}
  polymatrix:   {"players": n, "actions": [...], "pairs": {"i,j": [[...]]}}
  distribution: {"support": [[...]], "weights": [...]}

environment: EVIKIT_TOL_SCALE scales all tolerances; EVIKIT_KERNEL=c|python
forces a pivot-kernel backend.
"""


@dataclass
class RunConfig:
    command: str
    problem: str = None
    game: str = None
    distribution: str = None
    epsilon: float = None
    method: str = "eah"
    rounds: int = 1000
    resolution: float = 0.05
    epsilon_region: float = 1e-6
    out: str = "."
    seed: int = 0
    central_cuts: bool = False

    def echo(self):
        # the output directory affects where artifacts land, not what they
        # contain; dropping it keeps report files byte-reproducible
        return {k: v for k, v in asdict(self).items()
                if v is not None and k != "out"}


def load_problem(path):
    """Problem or game from JSON; schema detected from the fields present."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    if "pairs" in data:
        pairs = {}
        for key, mat in data["pairs"].items():
            i, j = (int(part) for part in key.split(","))
            pairs[(i, j)] = mat
        return polymatrix_zero_sum(pairs, int(data["players"]),
                                   [int(a) for a in data["actions"]],
                                   name=data.get("name", "polymatrix"))
    if "utilities" in data:
        return NormalFormGame.from_dict(data)
    if "polytope" in data:
        return EVIProblem.from_dict(data)
    raise ParseError(f"{path}: unrecognized schema (expected problem, game, "
                     f"or polymatrix fields)")


def _problem_for_solving(obj, epsilon):
    if isinstance(obj, EVIProblem):
        if epsilon is not None:
            obj.epsilon = float(epsilon)
        return obj
    eps = 1e-3 if epsilon is None else float(epsilon)
    if obj.pairwise is not None:
        return polymatrix_problem(obj, eps)
    if obj.is_2x2:
        return reduced_problem(obj, eps)
    return full_problem(obj, eps)


def _canonical_report(report_dict):
    blob = json.dumps(report_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _write_report(report, cfg: RunConfig, outdir):
    data = report.to_dict(include_timing=False)
    data["run_config"] = cfg.echo()
    data["canonical_digest"] = _canonical_report(data)
    path = outdir / "report.json"
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
    print(f"wall time: {report.wall_time_s:.3f}s", file=sys.stderr)
    return path


def cmd_solve(cfg: RunConfig):
    obj = load_problem(cfg.problem)
    prob = _problem_for_solving(obj, cfg.epsilon)
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    if cfg.method == "eah":
        report = solve_eah(prob, deep_cuts=not cfg.central_cuts, seed=cfg.seed)
    else:
        report = run_linear_swap_pgd(prob, rounds=cfg.rounds, seed=cfg.seed)
        write_trace_csv(report, outdir / "trace.csv")
    path = _write_report(report, cfg, outdir)
    print(f"{report.method} solved {prob.name!r}: verified affine-deviation gap "
          f"{report.gap_linear:.3e} (target {prob.epsilon:g}); report at {path}")
    return 0


def _gaps_of(obj, mu, epsilon):
    if not isinstance(obj, EVIProblem):
        prob = _problem_for_solving(obj, epsilon)
        if isinstance(obj, NormalFormGame) and obj.is_2x2 and mu.support.shape[1] == 4:
            from evikit.games import reduce_distribution
            mu = reduce_distribution(obj, mu)
    else:
        prob = obj
    con = evi_gap_constants(prob, mu)
    lin = evi_gap_linear(prob, mu)
    out = {"constants": con.value, "constants_raw": con.raw,
           "linear": lin.value, "linear_raw": lin.raw}
    if lin.deviation is not None:
        out["worst_deviation"] = lin.deviation.to_dict()
        if lin.witness is not None:
            out["worst_deviation"]["witness"] = lin.witness.to_dict()
    return out


def cmd_verify(cfg: RunConfig, enforce=True):
    obj = load_problem(cfg.problem)
    mu = FiniteDistribution.from_json(cfg.distribution)
    gaps = _gaps_of(obj, mu, cfg.epsilon)
    target = cfg.epsilon
    if target is None and isinstance(obj, EVIProblem):
        target = obj.epsilon
    print(json.dumps({"gaps": gaps, "epsilon": target}, indent=1))
    if enforce and target is not None and gaps["linear"] > target + 1e-12:
        print(f"verification FAILED: linear gap {gaps['linear']:.3e} "
              f"exceeds {target:g}", file=sys.stderr)
        return 2
    return 0


def cmd_game(cfg: RunConfig):
    obj = load_problem(cfg.game)
    if not isinstance(obj, NormalFormGame):
        raise ParseError("game command needs a game file")
    mu = FiniteDistribution.from_json(cfg.distribution)
    out = {}
    for mode in ("cce", "lce", "alce"):
        rep = phi_gap(obj, mu, mode)
        if mode == "alce":
            out[mode] = {"gap": max(rep.total, 0.0), "raw": rep.total}
        else:
            out[mode] = {"per_player": rep.per_player.tolist(),
                         "clamped": rep.per_player_clamped.tolist()}
    print(json.dumps(out, indent=1))
    return 0


def cmd_region(cfg: RunConfig):
    obj = load_problem(cfg.game)
    if not isinstance(obj, NormalFormGame):
        raise ParseError("region command needs a game file")
    scan = region_scan(obj, resolution=cfg.resolution,
                       epsilon_region=cfg.epsilon_region)
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    scan.to_csv(outdir / "region.csv")
    markers = []
    curve = None
    if obj.name == "bach-or-stravinsky":
        markers = [(0.0, 0.0), (0.6, 0.4), (1.0, 1.0)]
        curve = bos_conjectured_boundary
        d = boundary_curve_distances(scan, curve)
        if d.size:
            print(f"diagnostic: {d.size} boundary cells, max distance "
                  f"{d.max():.4f} from the conjectured curve", file=sys.stderr)
    scan.to_svg(outdir / "region.svg", markers=markers, curve=curve)
    counts = {v: scan.verdicts.count(v) for v in set(scan.verdicts)}
    print(f"region scan of {obj.name!r} at h={cfg.resolution:g}: {counts}; "
          f"outputs in {outdir}")
    return 0


def cmd_analyze(cfg: RunConfig):
    obj = load_problem(cfg.problem)
    if not isinstance(obj, EVIProblem):
        raise ParseError("analyze command needs a problem file")
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    result = {"problem": obj.name, "library": evikit.__version__}
    p = obj.meta.get("quartic_p")
    if p is None:
        raise ParseError("analyze currently certifies quartic-family problems "
                         "(missing meta.quartic_p)")
    sp = SmoothnessParams(lam=1.0, nu=p / 4.0, welfare=quartic_welfare(p),
                          maximizer=[1.0])
    lo = obj.polytope.coord_ranges[0][0]
    hi = obj.polytope.coord_ranges[0][1]
    grid = np.linspace(lo, hi, 10_000)
    rep = check_smoothness(obj.operator, sp, grid)
    result["smoothness"] = rep.to_dict()
    result["smoothness"]["lam"] = 1.0
    result["smoothness"]["nu"] = p / 4.0
    if cfg.distribution:
        mu = FiniteDistribution.from_json(cfg.distribution)
        gap = evi_gap_constants(obj, mu)
        bound, expected, ok = welfare_bound(mu, sp, max(gap.raw, 0.0))
        result["welfare"] = {"bound": bound, "expected": expected, "holds": ok,
                             "gap_constants": gap.raw}
    with open(outdir / "certificate.json", "w") as fh:
        json.dump(result, fh, indent=1, sort_keys=True)
    print(json.dumps(result, indent=1, sort_keys=True))
    return 0 if rep.passed else 2


def cmd_selftest(cfg: RunConfig):
    t0 = time.perf_counter()
    failures = []

    def check(name, ok):
        print(f"  {'PASS' if ok else 'FAIL'}  {name}")
        if not ok:
            failures.append(name)

    fx = Path(__file__).parent / "fixtures"
    sign = load_problem(fx / "sign.json")
    sign.epsilon = 0.05
    rep = solve_eah(sign)
    check("sign ellipsoid solve verified", rep.gap_linear <= 0.05)

    mu = FiniteDistribution.uniform([[-0.05], [0.05]])
    con = evi_gap_constants(sign, mu)
    lin = evi_gap_linear(sign, mu)
    check("sign mixture constant gap", abs(con.raw - 0.05) <= 1e-12)
    check("sign mixture affine gap", abs(lin.raw - 0.10) <= 1e-9)

    bos = load_problem(fx / "bos.json")
    from evikit.games import marginal_feasible, pure_profile_distribution
    mu3 = pure_profile_distribution(bos, [(0, 0), (1, 1), (0, 1)])
    rep3 = phi_gap(bos, mu3, "alce")
    check("correlated play fails joint deviations", rep3.total >= 4.0 / 3.0 - 1e-6)
    check("mixed-equilibrium marginal achievable", marginal_feasible(bos, (0.6, 0.4)))

    quart = load_problem(fx / "quartic-p4.json")
    sp = SmoothnessParams(lam=1.0, nu=1.0, welfare=quartic_welfare(4.0),
                          maximizer=[1.0])
    rep4 = check_smoothness(quart.operator, sp, np.linspace(-1, 2, 2000))
    check("quartic smoothness certificate", rep4.passed)

    print(f"selftest {'passed' if not failures else 'FAILED'} "
          f"in {time.perf_counter() - t0:.1f}s")
    return 0 if not failures else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="evikit",
        description="expected variational inequalities over polytopes",
        epilog=SCHEMA_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version",
                        version=f"evikit {evikit.__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="compute a verified solution")
    sp.add_argument("--problem", required=True)
    sp.add_argument("--method", choices=("eah", "pgd"), default="eah")
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--rounds", type=int, default=1000)
    sp.add_argument("--out", default=".")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--central-cuts", action="store_true")

    for name in ("verify", "gap"):
        vp = sub.add_parser(name, help="evaluate gaps of a distribution")
        vp.add_argument("--problem", required=True)
        vp.add_argument("--distribution", required=True)
        vp.add_argument("--epsilon", type=float)

    gp = sub.add_parser("game", help="per-player deviation gaps")
    gp.add_argument("--game", required=True)
    gp.add_argument("--distribution", required=True)

    rp = sub.add_parser("region", help="scan achievable marginals of a 2x2 game")
    rp.add_argument("--game", required=True)
    rp.add_argument("--resolution", type=float, default=0.05)
    rp.add_argument("--epsilon-region", type=float, default=1e-6)
    rp.add_argument("--out", default=".")

    ap = sub.add_parser("analyze", help="smoothness certificates and welfare bounds")
    ap.add_argument("--problem", required=True)
    ap.add_argument("--distribution")
    ap.add_argument("--out", default=".")

    sub.add_parser("selftest", help="run the bundled fixture checks")
    return parser


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code not in (0, None):
            print(SCHEMA_HELP, file=sys.stderr)
            return 1
        return 0
    cfg = RunConfig(command=args.command,
                    problem=getattr(args, "problem", None),
                    game=getattr(args, "game", None),
                    distribution=getattr(args, "distribution", None),
                    epsilon=getattr(args, "epsilon", None),
                    method=getattr(args, "method", "eah"),
                    rounds=getattr(args, "rounds", 1000),
                    resolution=getattr(args, "resolution", 0.05),
                    epsilon_region=getattr(args, "epsilon_region", 1e-6),
                    out=getattr(args, "out", "."),
                    seed=getattr(args, "seed", 0),
                    central_cuts=getattr(args, "central_cuts", False))
    handlers = {"solve": cmd_solve,
                "verify": cmd_verify,
                "gap": lambda c: cmd_verify(c, enforce=False),
                "game": cmd_game,
                "region": cmd_region,
                "analyze": cmd_analyze,
                "selftest": cmd_selftest}
    try:
        return handlers[cfg.command](cfg)
    except ParseError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        print(SCHEMA_HELP, file=sys.stderr)
        return 1
    except (EvikitError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
