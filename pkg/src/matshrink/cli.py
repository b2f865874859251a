"""Command-line front end.

Subcommands: estimate, risk, figure, certify, sure-check, sweep. All
randomness flows from --seed through per-replicate streams, so every command
is byte-reproducible for a fixed seed regardless of --workers.

Matrix files are plain text: one row per line, whitespace-separated decimal
floats, optional leading "# n p" header line.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import estimators as est
from . import risk as riskmod
from . import superharmonic as sh
from .errors import MatShrinkError, Unsupported
from .matcore import ProblemDims, RngState, as_matrix
from .priors import SVS, SteinFrobenius, prior_from_json


def read_matrix(path) -> np.ndarray:
    arr = np.loadtxt(path, comments="#", ndmin=2)
    return as_matrix(arr)


def write_matrix(path, M) -> None:
    M = as_matrix(M)
    np.savetxt(path, M, fmt="%.17g", header=f"{M.shape[0]} {M.shape[1]}")


def _load_json_arg(text: str) -> dict:
    """Parse an inline JSON object, or read JSON from a file path."""
    text = text.strip()
    if text.startswith("{"):
        return json.loads(text)
    with open(text) as fh:
        return json.load(fh)


@dataclass
class ExperimentConfig:
    dims: ProblemDims
    estimators: list
    spectra: list
    n_reps: int
    seed: int
    output_dir: str

    @classmethod
    def from_json(cls, d: dict) -> "ExperimentConfig":
        dims = ProblemDims(int(d["dims"]["n"]), int(d["dims"]["p"]))
        specs = [est.spec_from_json(s) for s in d["estimators"]]
        grid = d["spectra"]
        if isinstance(grid, str):
            spectra = preset_spectra(grid, dims)
        else:
            spectra = [np.asarray(s, dtype=float) for s in grid]
        if not spectra:
            raise ValueError("spectra grid must be nonempty")
        return cls(
            dims=dims,
            estimators=specs,
            spectra=spectra,
            n_reps=int(d.get("n_reps", default_reps(dims.n))),
            seed=int(d.get("seed", 0)),
            output_dir=d.get("output_dir", "."),
        )


def preset_spectra(name: str, dims: ProblemDims) -> list:
    """Spectra grid of a figure preset, for sweep configs that reference one."""
    if name in ("fig1", "fig2"):
        if dims.p != 3:
            raise ValueError(f"{name} preset requires p = 3, got p = {dims.p}")
        _, panels = figure_panels(name, 10_000, 0)
        return panels[0][2]
    if name == "fig3":
        if (dims.n, dims.p) != (100, 20):
            raise ValueError(f"fig3 preset requires (n, p) = (100, 20), got ({dims.n}, {dims.p})")
        _, panels = figure_panels(name, 10_000, 0)
        return panels[0][2]
    raise ValueError(f"no spectra preset named {name!r} (use fig1, fig2 or fig3)")


def default_reps(n: int) -> int:
    """Replicate counts keeping figure sweeps at desk-scale runtime."""
    if n >= 1000:
        return 1_000
    if n >= 100:
        return 10_000
    return 100_000


def _spec_label(spec) -> str:
    return est.spec_to_json(spec)["kind"]


# Figure presets. Grids with implicit step sizes in the source plots use the
# integer steps of the published data tables.
def figure_panels(name: str, is_samples: int, seed: int):
    if name in ("fig1", "fig2"):
        dims = ProblemDims(5, 3)
        cfg = est.ISConfig(n_samples=is_samples, rng=RngState(seed))
        svs = est.GeneralizedBayes(prior=SVS(), is_config=cfg)
        stein = est.GeneralizedBayes(
            prior=SteinFrobenius(c=dims.n * dims.p - 2.0), is_config=cfg
        )
        if name == "fig1":
            spectra = [np.array([10.0, float(s2), 0.0]) for s2 in range(0, 11)]
        else:
            spectra = [np.array([float(s1), 0.0, 0.0]) for s1 in range(0, 11)]
        return dims, [("svs", svs, spectra), ("stein", stein, spectra)]
    if name == "fig3":
        dims = ProblemDims(100, 20)
        spectra = []
        for s1 in range(0, 51, 5):
            sig = np.zeros(20)
            sig[0] = s1
            for i in range(2, 6):
                sig[i - 1] = (6 - i) / 5.0 * s1
            spectra.append(sig)
        return dims, [("em", est.EfronMorris(), spectra), ("js", est.JamesStein(), spectra)]
    if name == "fig4":
        panels = []
        for panel, n, ps, s1max, step in (
            ("left", 100, (10, 20, 30, 40, 50), 30, 1),
            ("right", 1000, (100, 200, 300, 400, 500), 100, 5),
        ):
            for p in ps:
                spectra = []
                for s1 in range(0, s1max + 1, step):
                    sig = np.zeros(p)
                    sig[0] = s1
                    spectra.append(sig)
                panels.append((f"{panel}_p{p}", ProblemDims(n, p), est.EfronMorris(), spectra))
        return None, panels
    raise ValueError(f"unknown figure {name!r}")


def cmd_estimate(args) -> int:
    spec = est.spec_from_json(_load_json_arg(args.spec))
    if args.seed is not None and isinstance(spec, est.GeneralizedBayes):
        spec = est.GeneralizedBayes(
            prior=spec.prior,
            is_config=est.ISConfig(
                n_samples=spec.is_config.n_samples,
                ess_floor=spec.is_config.ess_floor,
                rng=RngState(args.seed),
            ),
        )
    X = read_matrix(args.input)
    if isinstance(spec, est.GeneralizedBayes):
        Mhat, ess = est.gb_posterior_mean(spec.prior, X, spec.is_config)
        print(
            f"ESS {ess:.1f} of {spec.is_config.n_samples} samples "
            f"({ess / spec.is_config.n_samples:.3f})",
            file=sys.stderr,
        )
    else:
        Mhat = est.estimate(spec, X)
    write_matrix(args.out, Mhat)
    return 0


def cmd_risk(args) -> int:
    spec = est.spec_from_json(_load_json_arg(args.spec))
    M = read_matrix(args.mean)
    reps = args.reps or default_reps(M.shape[0])
    report = riskmod.mc_risk(spec, M, reps, RngState(args.seed), workers=args.workers)
    payload = json.dumps(report.to_json(), indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    return 0


def cmd_figure(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    name = args.name
    if name == "fig4":
        _, panels = figure_panels(name, args.is_samples, args.seed)
        for label, dims, spec, spectra in panels:
            reps = args.reps or default_reps(dims.n)
            rows = riskmod.minimaxity_sweep(
                spec, dims, spectra, reps, RngState(args.seed), workers=args.workers
            )
            path = os.path.join(args.out, f"{name}_{label}.csv")
            riskmod.sweep_to_csv(rows, path)
            print(f"wrote {path}", file=sys.stderr)
        return 0
    dims, panels = figure_panels(name, args.is_samples, args.seed)
    reps = args.reps or default_reps(dims.n)
    for label, spec, spectra in panels:
        rows = riskmod.minimaxity_sweep(
            spec, dims, spectra, reps, RngState(args.seed), workers=args.workers
        )
        path = os.path.join(args.out, f"{name}_{label}.csv")
        riskmod.sweep_to_csv(rows, path)
        print(f"wrote {path}", file=sys.stderr)
    return 0


def cmd_certify(args) -> int:
    try:
        prior = prior_from_json(_load_json_arg(args.prior))
        dims = ProblemDims(args.n, args.p)
    except (ValueError, KeyError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    rng = RngState(args.seed)
    points = sh.default_test_points(dims, rng.child(1), n_random=args.points)
    perts = sh.default_perturbations(dims, rng.child(2), n_nodes=args.nodes)
    report = sh.certify(prior, points, perts, rng=rng.child(3))
    payload = json.dumps(report.to_json(), indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    if report.verdict == sh.CERTIFIED_NSD:
        return 0
    if report.verdict == sh.VIOLATION_FOUND:
        return 2
    return 3


def cmd_sure_check(args) -> int:
    spec = est.spec_from_json(_load_json_arg(args.spec))
    M = read_matrix(args.mean)
    reps = args.reps or default_reps(M.shape[0])
    report = riskmod.sure_unbiasedness_check(
        spec, M, reps, RngState(args.seed), workers=args.workers
    )
    payload = json.dumps(report.to_json(), indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    return 0


def cmd_sweep(args) -> int:
    with open(args.config) as fh:
        cfg = ExperimentConfig.from_json(json.load(fh))
    if args.out:
        cfg.output_dir = args.out
    os.makedirs(cfg.output_dir, exist_ok=True)
    seed = cfg.seed if args.seed is None else args.seed
    for spec in cfg.estimators:
        rows = riskmod.minimaxity_sweep(
            spec, cfg.dims, cfg.spectra, cfg.n_reps, RngState(seed), workers=args.workers
        )
        path = os.path.join(cfg.output_dir, f"sweep_{_spec_label(spec)}.csv")
        riskmod.sweep_to_csv(rows, path)
        print(f"wrote {path}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matshrink",
        description="Minimax shrinkage estimation of normal mean matrices "
        "under matrix quadratic loss",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--reps", type=int, default=None, help="Monte Carlo replicates")
    common.add_argument("--workers", type=int, default=1, help="parallel worker count")
    common.add_argument("--out", default=None, help="output file or directory")

    sub = parser.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("estimate", parents=[common], help="apply an estimator to a matrix file")
    pe.add_argument("--spec", required=True, help="estimator spec JSON (inline or file path)")
    pe.add_argument("--in", dest="input", required=True, help="input matrix file")
    pe.set_defaults(func=cmd_estimate)
    # estimate uses --seed only for Bayes specs; default None keeps spec's own seed
    pe.set_defaults(seed=None)

    pr = sub.add_parser("risk", parents=[common], help="Monte Carlo risk report")
    pr.add_argument("--spec", required=True)
    pr.add_argument("--mean", required=True, help="mean matrix file")
    pr.set_defaults(func=cmd_risk)

    pf = sub.add_parser("figure", parents=[common], help="reproduce a figure sweep as CSV")
    pf.add_argument("name", choices=["fig1", "fig2", "fig3", "fig4"])
    pf.add_argument("--is-samples", type=int, default=10_000, help="IS samples per Bayes estimate")
    pf.set_defaults(func=cmd_figure)

    pc = sub.add_parser("certify", parents=[common], help="certify matrix superharmonicity")
    pc.add_argument("--prior", required=True, help="prior spec JSON (inline or file path)")
    pc.add_argument("--n", type=int, required=True)
    pc.add_argument("--p", type=int, required=True)
    pc.add_argument("--points", type=int, default=30, help="random test points")
    pc.add_argument("--nodes", type=int, default=20_000, help="sphere node pairs")
    pc.set_defaults(func=cmd_certify)

    ps = sub.add_parser("sure-check", parents=[common], help="SURE vs MC risk discrepancy")
    ps.add_argument("--spec", required=True)
    ps.add_argument("--mean", required=True)
    ps.set_defaults(func=cmd_sure_check)

    pw = sub.add_parser("sweep", parents=[common], help="risk sweep from a config file")
    pw.add_argument("--config", required=True, help="ExperimentConfig JSON file")
    pw.set_defaults(seed=None)
    pw.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Unsupported as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (MatShrinkError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
