"""Command-line entry point: ``distop <command> [flags]``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import datasets
from .align import AlignConfig, align
from .casestudy import run_case_study, write_case_study
from .distributed import (
    DistributedInvariant,
    SubsetCollection,
    check_cover_closure,
    closure_completion,
    compute_distributed,
    cover_probability_lower_bound,
    enumerate_subsets,
    invariant_of,
    required_sample_count,
    sample_subsets,
)
from .geometry import PointCloud, load_point_cloud, pairwise_distances, save_matrix, save_point_cloud
from .reconstruction import (
    CoverClosureError,
    certify_alignment,
    distances_from_pair_curves,
    euler_reconstruct_pairs,
)


class CommandError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True)


def _emit(text: str, output):
    if output:
        Path(output).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _load(path) -> PointCloud:
    if not Path(path).exists():
        raise CommandError(f"input file not found: {path}")
    return load_point_cloud(path)


def cmd_persist(a):
    cloud = _load(a.input)
    inv = invariant_of(cloud.points, pairwise_distances(cloud), a.kind, a.m)
    _emit(_dump({"kind": a.kind.upper(), "m": a.m, "invariant": inv.to_json()}), a.output)


def cmd_distribute(a):
    cloud = _load(a.input)
    n = cloud.n
    if a.k is None:
        raise CommandError("--k is required")
    if a.all_subsets:
        C = SubsetCollection(n, enumerate_subsets(n, a.k))
    else:
        C = sample_subsets(n, a.k, a.subsets, a.seed)
    if a.closure:
        C = closure_completion(C, a.k, a.m, n)
    inv = compute_distributed(cloud, C, a.kind, a.m)
    _emit(inv.dumps(), a.output)


def cmd_casestudy(a):
    if not a.output:
        raise CommandError("--output directory is required")
    cs = run_case_study(a.n, a.k or 10, a.subsets, a.seed)
    manifest = write_case_study(cs, a.output)
    _emit(_dump(manifest), None)


def cmd_reconstruct(a):
    if not Path(a.input).exists():
        raise CommandError(f"input file not found: {a.input}")
    inv = DistributedInvariant.from_json(Path(a.input).read_text())
    if inv.is_euler:
        pairs = euler_reconstruct_pairs(inv)
    else:
        if any(len(s) != 2 for s in inv.entries):
            raise CommandError("persistence invariants are only accepted at subset size 2")
        pairs = inv
    D = distances_from_pair_curves(pairs)
    if a.output:
        save_matrix(D, a.output)
    else:
        np.savetxt(sys.stdout, D, delimiter=",", fmt="%.17g")


def cmd_certify(a):
    X = _load(a.input)
    if not a.target:
        raise CommandError("--target (the Y cloud) is required")
    Y = _load(a.target)
    phi = None
    if a.phi:
        phi = np.loadtxt(a.phi, dtype=int, delimiter=",", ndmin=1)
    if a.k is None:
        raise CommandError("--k is required")
    n = X.n
    C = closure_completion(sample_subsets(n, a.k, a.subsets, a.seed), a.k, a.m, n)
    rep = certify_alignment(X, Y, phi, C, a.flavor, a.m).to_json()
    rep["cover_probability_lower_bound"] = cover_probability_lower_bound(n, a.k, 2, a.subsets) if a.k >= 2 else None
    rep["sampled_subsets"] = a.subsets
    _emit(_dump(rep), a.output)


def cmd_align(a):
    X = _load(a.input)
    if not a.output:
        raise CommandError("--output directory is required")
    D = pairwise_distances(X)
    sigma = 0.1 * float(D.max()) if a.sigma is None else a.sigma
    if sigma < 0:
        raise CommandError("--sigma must be non-negative")
    Y0 = datasets.add_noise(X, sigma, seed=a.seed)
    cfg = AlignConfig(k=a.k or min(25, X.n), iterations=a.iterations,
                      seed=a.seed, snapshot_every=a.snapshot_every)
    res = align(X, Y0, cfg)
    out = Path(a.output)
    out.mkdir(parents=True, exist_ok=True)
    for it, Y in res.snapshots:
        save_point_cloud(Y, out / f"snapshot_{it:08d}.csv")
    np.savetxt(out / "loss.csv", np.column_stack([np.arange(1, len(res.losses) + 1), res.losses]),
               delimiter=",", fmt=["%d", "%.17g"], header="iteration,loss", comments="")
    summary = {"sigma": sigma, "k": cfg.k, "iterations": cfg.iterations, "seed": cfg.seed,
               "initial_distortion": res.initial_distortion, "final_distortion": res.final_distortion,
               "initial_mean_distortion": res.initial_mean_distortion,
               "final_mean_distortion": res.final_mean_distortion}
    (out / "summary.json").write_text(_dump(summary) + "\n")
    _emit(_dump(summary), None)


def cmd_coverage(a):
    if a.n is None or a.k is None:
        raise CommandError("--n and --k are required")
    out = {"n": a.n, "k": a.k, "p": a.p}
    if a.eps is not None:
        M = required_sample_count(a.n, a.k, a.p, a.eps)
        out["eps"] = a.eps
        out["required_sample_count"] = M
        out["probability_lower_bound_at_required"] = cover_probability_lower_bound(a.n, a.k, a.p, M)
    if a.subsets is not None:
        out["M"] = a.subsets
        out["probability_lower_bound"] = cover_probability_lower_bound(a.n, a.k, a.p, a.subsets)
    if "M" not in out and "eps" not in out:
        raise CommandError("give --subsets M and/or --eps")
    _emit(_dump(out), a.output)


def cmd_generate(a):
    if a.shape == "torus":
        cloud = datasets.torus()
    elif a.shape == "circle":
        cloud = datasets.circle(a.n)
    elif a.shape == "disc":
        cloud = datasets.disc(a.n, seed=a.seed)
    else:
        cloud = datasets.noisy_circle(a.n, seed=a.seed)
    if a.output:
        save_point_cloud(cloud, a.output)
    else:
        np.savetxt(sys.stdout, cloud.points, delimiter=",", fmt="%.17g")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="distop", description="Distributed persistence toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, kind=True):
        p.add_argument("--input")
        p.add_argument("--output")
        p.add_argument("--seed", type=int, default=0)
        if kind:
            p.add_argument("--kind", type=str.lower, choices=["rp", "cp", "re", "ce"], default="rp")
            p.add_argument("--m", type=int, default=1)
        return p

    p = common(sub.add_parser("persist", help="invariant of a whole cloud"))
    p.set_defaults(func=cmd_persist)

    p = common(sub.add_parser("distribute", help="invariants of sampled subsets"))
    p.add_argument("--k", type=int)
    p.add_argument("--subsets", type=int, default=1000)
    p.add_argument("--closure", action="store_true", help="add subsets needed for reconstruction")
    p.add_argument("--all-subsets", action="store_true", help="use every k-subset instead of sampling")
    p.set_defaults(func=cmd_distribute)

    p = common(sub.add_parser("casestudy", help="circle / disc / noisy-circle comparison"), kind=False)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--subsets", type=int, default=1000)
    p.set_defaults(func=cmd_casestudy)

    p = common(sub.add_parser("reconstruct", help="distance matrix from a distributed Euler invariant"), kind=False)
    p.set_defaults(func=cmd_reconstruct)

    p = common(sub.add_parser("certify", help="quasi-isometry certificate for a matched pair of clouds"), kind=False)
    p.add_argument("--target")
    p.add_argument("--phi")
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--subsets", type=int, default=200)
    p.add_argument("--flavor", type=str.upper, choices=["RP", "CP"], default="RP")
    p.set_defaults(func=cmd_certify)

    p = common(sub.add_parser("align", help="align a noisy copy back to the input cloud"), kind=False)
    p.add_argument("--sigma", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--iterations", type=int, default=20000)
    p.add_argument("--snapshot-every", type=int, default=1000)
    p.set_defaults(func=cmd_align)

    p = common(sub.add_parser("coverage", help="covering-probability bounds"), kind=False)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--subsets", type=int)
    p.add_argument("--eps", type=float)
    p.set_defaults(func=cmd_coverage)

    p = common(sub.add_parser("generate", help="write a synthetic cloud"), kind=False)
    p.add_argument("--shape", choices=["circle", "disc", "noisy_circle", "torus"], default="circle")
    p.add_argument("--n", type=int, default=500)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    if a.command not in ("casestudy", "coverage", "generate") and not a.input:
        parser.error("--input is required")
    try:
        a.func(a)
    except CoverClosureError as e:
        sys.stderr.write(f"error: cover/closure precondition violated: {e}\n")
        sys.stderr.write(_dump(e.report.to_json()) + "\n")
        return 1
    except (CommandError, ValueError, OSError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
