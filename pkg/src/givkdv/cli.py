"""Command-line front end: omega tables, identity suites, deformation comparisons, vertex profiles."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass

from .deform import (
    GiventalDatum,
    compare,
    default_datum,
    depth_policy,
    load_datum,
    tilde_residue_check,
    root_correction_check,
)
from .kdv import HierarchyContext, pairing_suite, root_check, sqrt_suite
from .report import VerificationReport
from .vertex import dichotomy_check, first_order_consistency, global_AB

SUITES = ("sqrt", "zs", "pairing", "y-lemma", "tilde-lemma")
SCHEMA = 1


@dataclass
class RunConfig:
    command: str
    N: int = 2
    depth: int | None = None
    ell: list | None = None
    p_max: int | None = None
    matrix: str | None = None
    kind: str = "R"
    fmt: str = "text"
    sign_normalization: bool = True
    seed: int = 0
    suite: str | None = None
    k_max: int = 6
    timing: bool = False

    def validate(self) -> None:
        if self.N < 1:
            raise ValueError("--N must be >= 1")
        if self.p_max is not None and self.p_max < 0:
            raise ValueError("--p-max must be >= 0")
        if self.ell is not None and (not self.ell or any(e < 1 for e in self.ell)):
            raise ValueError("--ell values must be >= 1")
        if self.k_max < 0:
            raise ValueError("--k-max must be >= 0")
        if self.depth is not None and self.depth < 1:
            raise ValueError("--depth must be >= 1")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--N", type=int, default=None, help="number of KdV copies")
    common.add_argument("--depth", type=int, default=None, help="operator floor (default: automatic)")
    common.add_argument("--ell", type=int, nargs="+", default=None, help="level(s) of the deformation")
    common.add_argument("--p-max", type=int, default=None, dest="p_max")
    common.add_argument("--matrix", default=None, help="JSON file with kind, ell/ells and matrix")
    common.add_argument("--kind", choices=("R", "S"), default=None, help="stock datum kind when no --matrix")
    common.add_argument("--format", choices=("text", "json", "csv"), default="text", dest="fmt")
    common.add_argument("--no-sign-normalization", action="store_false", dest="sign_normalization")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--k-max", type=int, default=6, dest="k_max")
    common.add_argument("--timing", action="store_true", help="include wall times (breaks byte-stable output)")

    p = argparse.ArgumentParser(prog="givkdv", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("omega", parents=[common], help="print two-point functions Omega")
    v = sub.add_parser("verify", parents=[common], help="run an identity suite")
    v.add_argument("suite", choices=SUITES)
    sub.add_parser("deform", parents=[common], help="compare both deformation formulas")
    sub.add_parser("vertex", parents=[common], help="degree profiles and first-order consistency")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(
        command=ns.command,
        N=ns.N if ns.N is not None else 2,
        depth=ns.depth,
        ell=ns.ell,
        p_max=ns.p_max,
        matrix=ns.matrix,
        kind=ns.kind or "R",
        fmt=ns.fmt,
        sign_normalization=ns.sign_normalization,
        seed=ns.seed,
        suite=getattr(ns, "suite", None),
        k_max=ns.k_max,
        timing=ns.timing,
    )
    if ns.command == "omega" and ns.N is None:
        cfg.N = 1
    cfg.validate()
    return cfg


def data_for(cfg: RunConfig) -> list[GiventalDatum]:
    if cfg.matrix:
        return [load_datum(cfg.matrix)]
    if cfg.kind == "S":
        return [default_datum("S", cfg.N, levels=max(cfg.ell) if cfg.ell else 4)]
    return [default_datum("R", cfg.N, ell) for ell in (cfg.ell or [1])]


# ---- commands ----------------------------------------------------------------

def cmd_omega(cfg: RunConfig) -> list[VerificationReport]:
    ctx = HierarchyContext(cfg.N)
    pm = 1 if cfg.p_max is None else cfg.p_max
    out = []
    for a, p, b, q, val in ctx.omega_table(pm):
        s = str(val)
        out.append(VerificationReport(f"omega {a},{p};{b},{q}", s, s, "0", extra={"value": s}))
    return out


def cmd_verify(cfg: RunConfig) -> list[VerificationReport]:
    suite = cfg.suite
    if suite == "sqrt":
        depth = cfg.depth or 6
        return sqrt_suite(max(depth, 6)) + [root_check(max(depth, 12))]
    if suite == "zs":
        ctx = HierarchyContext(cfg.N)
        pm = 2 if cfg.p_max is None else cfg.p_max
        return [ctx.verify_zs(k, l, a) for a in range(1, cfg.N + 1) for k in range(pm + 1) for l in range(pm + 1)]
    if suite == "pairing":
        return pairing_suite(50, cfg.seed, cfg.depth or 6)
    if suite == "y-lemma":
        out = []
        for G in data_for(RunConfig("verify", N=cfg.N, ell=cfg.ell or [1, 2], matrix=cfg.matrix, kind="R")):
            if G.kind != "R":
                raise ValueError("y-lemma needs an R datum")
            out += [root_correction_check(G, a, cfg.depth or 8) for a in range(1, G.N + 1)]
        return out
    if suite == "tilde-lemma":
        G = load_datum(cfg.matrix) if cfg.matrix else default_datum("S", cfg.N)
        if G.kind != "S":
            raise ValueError("tilde-lemma needs an S datum")
        pm = 3 if cfg.p_max is None else cfg.p_max
        return [tilde_residue_check(G, a, p) for a in range(1, G.N + 1) for p in range(pm + 1)]
    raise ValueError(f"unknown suite {suite!r}")


def cmd_deform(cfg: RunConfig) -> list[VerificationReport]:
    out = []
    for G in data_for(cfg):
        pm = cfg.p_max if cfg.p_max is not None else (3 if G.kind == "S" else 2)
        if cfg.depth is not None:
            need = depth_policy(max(G.levels), pm)
            if cfg.depth < need:
                raise ValueError(f"--depth {cfg.depth} below the policy minimum {need} for p <= {pm}")
        out += compare(G, pm, HierarchyContext(G.N), cfg.sign_normalization, depth=cfg.depth)
    return out


def cmd_vertex(cfg: RunConfig) -> list[VerificationReport]:
    pm = 3 if cfg.p_max is None else cfg.p_max
    out = []
    for G in data_for(cfg):
        for a in range(1, G.N + 1):
            out.append(first_order_consistency(G, a, pm))
        if len(G.levels) == 1:
            for a in range(1, G.N + 1):
                for n in range(pm + 1):
                    out += dichotomy_check(G, a, n, cfg.k_max)
                    A, B = global_AB(G, a, n, cfg.k_max)
                    out[-2].extra["series"] = A.as_json()
                    out[-1].extra["series"] = B.as_json()
    return out


COMMANDS = {"omega": cmd_omega, "verify": cmd_verify, "deform": cmd_deform, "vertex": cmd_vertex}


# ---- output ------------------------------------------------------------------

def _row(r: VerificationReport, timing: bool) -> dict:
    d = {
        "case": r.case,
        "status": r.status,
        "depth": r.depth,
        "lhs": r.lhs,
        "rhs": r.rhs,
        "difference": r.difference,
    }
    if r.extra:
        d["extra"] = {k: v for k, v in r.extra.items()}
    if timing:
        d["wall_time"] = round(r.wall_time, 4)
    return d


def render(cfg: RunConfig, reports: list[VerificationReport]) -> str:
    ok = all(r.passed for r in reports)
    if cfg.fmt == "json":
        doc = {
            "schema": SCHEMA,
            "command": cfg.command if cfg.suite is None else f"verify {cfg.suite}",
            "all_pass": ok,
            "reports": [_row(r, cfg.timing) for r in reports],
        }
        return json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n"
    if cfg.fmt == "csv":
        buf = io.StringIO()
        cols = ["case", "status", "depth", "lhs", "rhs", "difference"] + (["wall_time"] if cfg.timing else [])
        w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in reports:
            w.writerow(_row(r, cfg.timing))
        return buf.getvalue()
    lines = []
    for r in reports:
        if cfg.command == "omega":
            lines.append(f"{r.case} = {r.lhs}")
            continue
        line = r.line()
        if cfg.timing:
            line += f"  ({r.wall_time:.3f}s)"
        lines.append(line)
    if cfg.command != "omega":
        n_pass = sum(r.passed for r in reports)
        lines.append(f"{n_pass}/{len(reports)} passed")
    return "\n".join(lines) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        reports = COMMANDS[cfg.command](cfg)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(render(cfg, reports))
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
