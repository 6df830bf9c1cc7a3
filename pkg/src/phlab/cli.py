"""Command-line entry point for the experiment pipeline."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import charts as charts_mod
from .errors import PhlabError
from .ledger import PartiallyHyperbolicSpectralData, audit_center_bunching
from .manifolds import STARS, compute_manifold
from .pipeline import (ExperimentConfig, build_dynamics, build_ledger,
                       load_bundled, run, run_acceptance)
from .spectral import verify_certificate


def _load_config(args) -> ExperimentConfig:
    if args.config is None:
        raise SystemExit("--config is required for this subcommand")
    cfg = ExperimentConfig.from_json(Path(args.config))
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _out_dir(args, default: str) -> Path:
    out = Path(args.out) if args.out else Path(default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_certify(args) -> int:
    cfg = _load_config(args)
    from .pipeline import build_certified_pair
    cocycle, cert = build_certified_pair(cfg)
    report = verify_certificate(cocycle, cert)
    if args.out:
        out = _out_dir(args, "out")
        (out / "certificate_report.json").write_text(report.to_json())
        (out / "certificate_report.csv").write_text(report.to_csv())
    print(f"certificate: {'PASS' if report.overall else 'FAIL'}")
    return 0 if report.overall else 1


def cmd_ledger(args) -> int:
    cfg = _load_config(args)
    ledger = build_ledger(cfg)
    rows = sorted(ledger.to_dict().items())
    width = max(len(k) for k, _ in rows)
    for key, val in rows:
        print(f"{key:<{width}}  {val}")
    if args.out:
        out = _out_dir(args, "out")
        (out / "ledger.json").write_text(ledger.to_json())
    margins = ledger.inequality_margins()
    ok = all(v > 0 for v in margins.values())
    print(f"inequality margins: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_manifolds(args) -> int:
    cfg = _load_config(args)
    seq = build_dynamics(cfg)
    out = _out_dir(args, "out") if args.out else None
    stars = [args.star] if args.star else list(STARS)
    for star in stars:
        graph = compute_manifold(seq, star, 0, cfg.base_point, tol=cfg.tol)
        print(f"W^{star}: slope_sup = {graph.slope_sup:.3e}")
        if out:
            (out / f"leaf_{star}.csv").write_text(graph.to_csv())
            (out / f"leaf_{star}.json").write_text(graph.to_json())
    return 0


def cmd_holonomy(args) -> int:
    cfg = _load_config(args)
    if args.depth is not None:
        cfg.n_max = args.depth
    if args.samples is not None:
        cfg.samples = args.samples
    out = _out_dir(args, "out")
    manifest = run(cfg, out)
    diag_path = out / "holonomy_diagnostics.json"
    print(diag_path.read_text())
    print(f"manifest: {out / 'manifest.json'}")
    return 0


def cmd_charts(args) -> int:
    system = charts_mod.ToySystem(args.system, perturbation=args.perturbation)
    x0 = np.array([0.13, 0.41, 0.07])
    report = charts_mod.chart_report(system, x0, eps_hat=args.epsilon_hat,
                                     horizon=args.horizon, n_points=100)
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        out = _out_dir(args, "out")
        (out / "chart_report.json").write_text(text)
    if args.export_sequence:
        seq = charts_mod.export_sequence(system, x0,
                                         eps_hat=args.epsilon_hat)
        from .spectral import certificate_from_cocycle
        cert = certificate_from_cocycle(seq.cocycle, slack=1e-6)
        a, b, c = seq.cocycle.blocks_at(0)
        doc = {
            "name": "exported-charts",
            "cocycle": {"dims": {"s": 1, "c": 1, "u": 1},
                        "mode": seq.cocycle.mode,
                        "blocks": [{"A": a.tolist(), "B": b.tolist(),
                                    "C": c.tolist()}],
                        "certificate": cert.to_dict()},
            "perturbation": seq.perturbation.to_json_dict(),
            "beta": 0.8,
            "run": {"seed": 7, "base_point": [0.0, 0.25, 0.0], "n_max": 30,
                    "samples": 24, "tol": 1e-8, "strict": True},
        }
        Path(args.export_sequence).write_text(json.dumps(doc, indent=2))
        print(f"exported sequence config: {args.export_sequence}")
    return 0 if not report["failures"] else 1


def cmd_audit_bunching(args) -> int:
    if args.config is None:
        raise SystemExit("--config (spectral data JSON) is required")
    doc = json.loads(Path(args.config).read_text())
    data = PartiallyHyperbolicSpectralData(
        nu=np.asarray(doc["nu"], dtype=float),
        nu_hat=np.asarray(doc["nu_hat"], dtype=float),
        gamma=np.asarray(doc["gamma"], dtype=float),
        gamma_hat=np.asarray(doc["gamma_hat"], dtype=float),
        mu=np.asarray(doc["mu"], dtype=float),
        mu_hat=np.asarray(doc["mu_hat"], dtype=float),
        beta=float(doc.get("beta", 0.8)))
    verdict = audit_center_bunching(data)
    print(json.dumps(verdict.to_dict(), indent=2, sort_keys=True))
    return 0 if verdict.passed else 1


def cmd_accept(args) -> int:
    linear = load_bundled("linear_oracle")
    perturbed = load_bundled("standard_perturbed")
    if args.seed is not None:
        linear.seed = args.seed
        perturbed.seed = args.seed
    results = run_acceptance(linear, perturbed, jobs=args.jobs)
    if args.out:
        out = _out_dir(args, "out")
        doc = {r.name: {"passed": r.passed, "seconds": r.elapsed,
                        "details": _jsonable(r.details)} for r in results}
        (out / "acceptance.json").write_text(
            json.dumps(doc, indent=2, sort_keys=True))
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 0 if not failed else 1


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phlab",
        description="desk-scale laboratory for spectral certificates, "
                    "graph-transform manifolds and stable holonomies")
    parser.add_argument("--config", help="experiment config JSON")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--jobs", type=int, default=1,
                        help="concurrent workers for independent batches")
    parser.add_argument("--out", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("certify", help="verify a cocycle certificate")
    sub.add_parser("ledger", help="derive and print the constants ledger")
    p_m = sub.add_parser("manifolds", help="compute and export leaves")
    p_m.add_argument("--star", choices=list(STARS))
    p_h = sub.add_parser("holonomy", help="run the full holonomy pipeline")
    p_h.add_argument("--depth", type=int, help="override N_max")
    p_h.add_argument("--samples", type=int)
    p_c = sub.add_parser("charts", help="chart verification for a toy system")
    p_c.add_argument("--system", default="cat_rotation")
    p_c.add_argument("--epsilon-hat", type=float, default=0.2,
                     dest="epsilon_hat")
    p_c.add_argument("--horizon", type=int, default=10000)
    p_c.add_argument("--perturbation", type=float, default=0.0)
    p_c.add_argument("--export-sequence", dest="export_sequence")
    sub.add_parser("audit-bunching",
                   help="strong center bunching audit for spectral data")
    sub.add_parser("accept", help="run the full acceptance suite")
    return parser


COMMANDS = {
    "certify": cmd_certify,
    "ledger": cmd_ledger,
    "manifolds": cmd_manifolds,
    "holonomy": cmd_holonomy,
    "charts": cmd_charts,
    "audit-bunching": cmd_audit_bunching,
    "accept": cmd_accept,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except PhlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
