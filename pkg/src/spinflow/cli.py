"""Command-line frontend: ingest, certify, plot, oneform, verify.

Every subcommand reads an optional JSON config whose keys are the
:class:`RunConfig` field names; command-line flags override it.  Outputs are
JSON and CSV written with fixed formatting, so identical inputs give
byte-identical files.  Exit codes: 0 certified, 1 inconclusive, 2 error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .certificates import Certificate, replay
from .eigcert import J_grid, build_A, spectral_largeness
from .floer import summary_table
from .oneform import load_domain, lower_bound_geodesic, optimize, triangulate
from .pipeline import CertifyConfig, certify_structure
from .spectrum import ManifoldData, SyntheticSpectrum, file_checksum, load_spectrum
from .testfn import TestFunction
from .trace import SpincStructure, make_side, set_side_cache

EXIT_OK, EXIT_INCONCLUSIVE, EXIT_ERROR = 0, 1, 2


@dataclass
class RunConfig:
    spectrum: Optional[str] = None
    domain: Optional[str] = None
    spinc: str = "all"
    K: str = "conv7_x"
    H: str = "conv6"
    basis_n: int = 8
    basis_a: Optional[float] = None
    shifts: Optional[list] = None
    grid: int = 2000
    flanks: list = field(default_factory=lambda: [0.01, 0.015, 0.025, 0.035, 0.05])
    k_max: int = 24
    c_y: Optional[float] = None
    iterations: int = 1000
    seed: int = 0
    output: str = "spinflow_out"

    @classmethod
    def from_sources(cls, path: Optional[str], overrides: dict) -> "RunConfig":
        doc = {}
        if path:
            doc = json.loads(Path(path).read_text())
            unknown = set(doc) - {f.name for f in dataclasses.fields(cls)}
            if unknown:
                raise ValueError(f"unknown config keys: {sorted(unknown)}")
        doc.update({k: v for k, v in overrides.items() if v is not None})
        cfg = cls(**doc)
        cfg.check()
        return cfg

    def check(self) -> None:
        for name in ("spectrum", "domain"):
            p = getattr(self, name)
            if p is not None and not Path(p).exists():
                raise FileNotFoundError(f"{name} file not found: {p}")
        if self.spinc != "all":
            int(self.spinc)
        if self.grid < 10 or self.basis_n < 1 or self.iterations < 0 or self.k_max < 1:
            raise ValueError("grid >= 10, basis_n >= 1, iterations >= 0 and k_max >= 1 are required")

    def certify_config(self) -> CertifyConfig:
        return CertifyConfig(
            basis_n=self.basis_n,
            basis_a=self.basis_a,
            shifts=tuple(self.shifts) if self.shifts is not None else None,
            grid=self.grid,
            flanks=tuple(self.flanks),
            K=self.K,
            H=self.H,
            c_y=self.c_y,
            k_max=self.k_max,
        )

    def out_dir(self) -> Path:
        p = Path(self.output)
        p.mkdir(parents=True, exist_ok=True)
        return p


def load_source(path):
    """Manifold data (checksum-verified) or a planted synthetic spectrum."""
    doc = json.loads(Path(path).read_text())
    if doc.get("kind") == "synthetic":
        return SyntheticSpectrum.from_json(doc)
    return load_spectrum(path)


def _structures(source, spinc: str) -> list[SpincStructure]:
    m = source.torsion_order
    if spinc == "all":
        return [SpincStructure(k, m) for k in range(m)]
    return [SpincStructure(int(spinc), m)]


def _dump(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) for x in r])


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_ingest(cfg: RunConfig, args) -> int:
    if cfg.spectrum is None:
        raise ValueError("ingest needs a spectrum file")
    src = load_source(cfg.spectrum)
    out = cfg.out_dir()
    info = {"file": str(cfg.spectrum), "b1": src.b1, "torsion_order": src.torsion_order}
    if isinstance(src, ManifoldData):
        set_side_cache(out / "cache")
        for tf_id, kinds in ((cfg.K, ("dirac_odd", "dirac_odd_derivative")), (cfg.H, ("dirac_even",))):
            tf = TestFunction.parse(tf_id)
            for kind in kinds:
                if tf.support_radius <= src.cutoff:
                    make_side(src, tf, kind)
        info.update(name=src.name, checksum=src.checksum, geodesics=len(src.geodesics),
                    cutoff_R=src.cutoff, volume=src.volume, systole=src.systole)
    else:
        info.update(name=src.name, checksum=src.checksum, atoms=len(src.atoms), synthetic=True)
    _dump(out / "ingest.json", info)
    print(json.dumps(info, sort_keys=True))
    return EXIT_OK


def cmd_certify(cfg: RunConfig, args) -> int:
    if cfg.spectrum is None:
        raise ValueError("certify needs a spectrum file")
    src = load_source(cfg.spectrum)
    out = cfg.out_dir()
    set_side_cache(out / "cache")
    cc = cfg.certify_config()
    basis = cc.basis(src)
    A = build_A(src, basis)
    results, status = {}, EXIT_OK
    if getattr(args, "largeness", False):
        ok, cert = spectral_largeness(src, basis)
        _dump(out / "spectral_largeness.json", cert.to_json())
        if not ok:
            print("spectral largeness: not certified (coexact exclusion failed)", file=sys.stderr)
            status = EXIT_INCONCLUSIVE
    for st in _structures(src, cfg.spinc):
        res = certify_structure(src, st, cc, A)
        _dump(out / f"certify_k{st.k}.json", res.to_json())
        results[st.k] = (res.floer, st)
        if res.status != "certified":
            status = EXIT_INCONCLUSIVE
            failing = next((c.kind for c in res.certificates if not c.ok), "pipeline")
            print(f"k={st.k}: inconclusive at {failing} certificate: {res.failure}", file=sys.stderr)
        elif res.floer is None:
            status = EXIT_INCONCLUSIVE
            print(f"k={st.k}: {res.failure}", file=sys.stderr)
    table = summary_table(results)
    (out / "summary.txt").write_text(table + "\n")
    print(table)
    return status


def cmd_plot(cfg: RunConfig, args) -> int:
    if cfg.spectrum is None:
        raise ValueError("plot needs a spectrum file")
    src = load_source(cfg.spectrum)
    out = cfg.out_dir()
    set_side_cache(out / "cache")
    cc = cfg.certify_config()
    k = 0 if cfg.spinc == "all" else int(cfg.spinc) % src.torsion_order
    taus = np.arange(cfg.grid) / cfg.grid
    which = args.which
    path = out / f"{which}_k{k}.csv"
    if which == "J0":
        A = build_A(src, cc.basis(src))
        _write_csv(path, ["tau", "J0"], zip(taus, J_grid(A, taus, k, [0.0])[:, 0]))
    elif which == "Js_at_tau":
        A = build_A(src, cc.basis(src))
        ss = np.linspace(0.0, args.s_max, args.s_points)
        path = out / f"Js_at_tau_k{k}_{args.tau!r}.csv"
        _write_csv(path, ["s", "J_s"], zip(ss, J_grid(A, [args.tau], k, ss)[0]))
    elif which == "gamma_odd":
        side = make_side(src, TestFunction.parse(cfg.K), "dirac_odd")
        _write_csv(path, ["tau", "gamma_odd"], zip(taus, side.evaluate_grid(taus, k)))
    elif which == "coexact":
        A = build_A(src, cc.basis(src), "coexact")
        ss = np.linspace(0.0, args.s_max, args.s_points)
        path = out / "coexact.csv"
        _write_csv(path, ["s", "lambda", "J_s"], zip(ss, ss**2, J_grid(A, [0.0], 0, ss)[0]))
    else:
        raise ValueError(f"unknown plot {which!r}")
    print(path)
    return EXIT_OK


def cmd_oneform(cfg: RunConfig, args) -> int:
    if cfg.domain is None:
        raise ValueError("oneform needs a domain file")
    out = cfg.out_dir()
    cx = triangulate(load_domain(cfg.domain))
    rep = optimize(cx, cfg.iterations, cfg.seed)
    doc = rep.to_json()
    doc["tetrahedra"] = int(len(cx.tets))
    doc["domain_checksum"] = file_checksum(cfg.domain)
    if cfg.spectrum is not None:
        src = load_source(cfg.spectrum)
        if isinstance(src, ManifoldData):
            lb = lower_bound_geodesic(src)
            doc["lower_bound_geodesic"] = lb
            if lb > rep.rounded_bound:
                raise ValueError(f"geodesic lower bound {lb} exceeds the optimised upper bound")
    _dump(out / "oneform.json", doc)
    rep.write(out / "oneform_report.json", out / "oneform_iterations.csv")
    print(f"C_Y <= {rep.rounded_bound:.4f} ({len(cx.tets)} tetrahedra, {cfg.iterations} iterations, seed {cfg.seed})")
    return EXIT_OK


def _certificates_in(doc) -> list:
    if isinstance(doc, list):
        return doc
    if "certificates" in doc:
        return doc["certificates"]
    return [doc]


def cmd_verify(cfg: RunConfig, args) -> int:
    status = EXIT_OK
    for p in args.files:
        doc = json.loads(Path(p).read_text())
        for raw in _certificates_in(doc):
            cert = Certificate.from_json(raw)
            if not replay(cert):
                print(f"{p}: {cert.kind} certificate does not replay", file=sys.stderr)
                return EXIT_ERROR
            if not cert.ok:
                status = EXIT_INCONCLUSIVE
        print(f"{p}: replayed")
    return status


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spinflow", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with RunConfig fields")
        p.add_argument("--spectrum")
        p.add_argument("--domain")
        p.add_argument("--spinc", help="torsion character k or 'all'")
        p.add_argument("--K")
        p.add_argument("--H")
        p.add_argument("--basis-n", dest="basis_n", type=int)
        p.add_argument("--basis-a", dest="basis_a", type=float)
        p.add_argument("--grid", type=int)
        p.add_argument("--k-max", dest="k_max", type=int)
        p.add_argument("--c-y", dest="c_y", type=float)
        p.add_argument("--iterations", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--output", "-o")

    p = sub.add_parser("ingest", help="validate a spectrum and cache its formal sides")
    common(p)
    p.set_defaults(func=cmd_ingest)
    p = sub.add_parser("certify", help="certify piercing sequences and Floer groups")
    common(p)
    p.add_argument("--largeness", action="store_true", help="also certify spectral largeness")
    p.set_defaults(func=cmd_certify)
    p = sub.add_parser("plot", help="write CSV data behind the standard plots")
    common(p)
    p.add_argument("which", choices=["J0", "Js_at_tau", "gamma_odd", "coexact"])
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--s-max", dest="s_max", type=float, default=3.0)
    p.add_argument("--s-points", dest="s_points", type=int, default=601)
    p.set_defaults(func=cmd_plot)
    p = sub.add_parser("oneform", help="optimise an upper bound for C_Y on a Dirichlet domain")
    common(p)
    p.set_defaults(func=cmd_oneform)
    p = sub.add_parser("verify", help="replay certificate files from their stored constants")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_verify, config=None)
    return ap


_CONFIG_KEYS = {f.name for f in dataclasses.fields(RunConfig)}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = {k: v for k, v in vars(args).items() if k in _CONFIG_KEYS}
        cfg = RunConfig.from_sources(args.config, overrides)
        return args.func(cfg, args)
    except Exception as exc:  # every module error is surfaced with its context
        print(f"spinflow {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
