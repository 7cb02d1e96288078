"""Command-line front end.

Machine-readable single-line JSON records go to standard output; a short
human-readable summary goes to standard error. Exit codes: 0 success, 2 usage,
3 data errors, 4 numeric errors. Seeds are always explicit flags or config
keys: no environment variable is consulted, so any emitted record reproduces
its run from its own metadata.

CSV contract: UTF-8, comma-separated, mandatory header row, dot decimal
separator, no quoting of numeric cells.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .ancova import ancova_rank_test, ancova_workspace, combined_residual_scores
from .anova import (
    anova_rank_test,
    make_scores,
    quadform_statistic,
    quadform_statistic_batch,
    scores_at_ranks,
)
from .design import build_design
from .distributions import parse_law
from .efficiency import are_latent
from .errors import (
    DataError,
    InsufficientDataError,
    NumericError,
    ParseError,
    SchemaError,
)
from .permute import PermMode, PermutationPlan, exact_null_distribution
from .ranking import TiePolicy, rank_collection, ranks
from .scores import ScoreFunction, ScoreMode, from_name, from_table, score_norm_sq
from .simlab import ScenarioConfig, run_power_study

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


@dataclass(frozen=True)
class DataTable:
    y: np.ndarray
    x: np.ndarray
    w: Optional[np.ndarray]
    y_name: str
    x_names: tuple[str, ...]
    w_names: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.y.size

    def write_csv(self, path: str) -> None:
        cols = [self.y_name, *self.x_names, *self.w_names]
        blocks = [self.y[:, None], self.x]
        if self.w is not None:
            blocks.append(self.w)
        data = np.hstack(blocks)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(cols) + "\n")
            for row in data:
                fh.write(",".join(repr(v) for v in row) + "\n")


def parse_csv(path: str, y_col: str, x_cols: list[str],
              w_cols: Optional[list[str]] = None) -> DataTable:
    """Ingest a CSV into typed blocks, rejecting bad cells with their location."""
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise SchemaError(f"cannot open {path!r}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path!r} is empty (header row required)") from None
        header = [h.strip() for h in header]
        wanted = [y_col, *x_cols, *(w_cols or [])]
        missing = [c for c in wanted if c not in header]
        if missing:
            raise SchemaError(f"columns {missing} not found in header {header}")
        idx = {c: header.index(c) for c in wanted}
        rows: list[list[float]] = []
        bad: list[tuple[int, str]] = []
        for rownum, raw in enumerate(reader, start=2):
            vals = []
            for c in wanted:
                cell = raw[idx[c]].strip() if idx[c] < len(raw) else ""
                try:
                    if cell == "":
                        raise ValueError("blank")
                    vals.append(float(cell))
                except ValueError:
                    bad.append((rownum, c))
            if not bad:
                rows.append(vals)
        if bad:
            raise ParseError(bad)
    if not rows:
        raise SchemaError(f"{path!r} has a header but no data rows")
    data = np.array(rows, dtype=float)
    y = data[:, 0]
    x = data[:, 1:1 + len(x_cols)]
    w = data[:, 1 + len(x_cols):] if w_cols else None
    if y.size <= len(x_cols):
        raise InsufficientDataError(
            f"n={y.size} rows with p={len(x_cols)} regressors: need n > p"
        )
    return DataTable(y=y, x=x, w=w, y_name=y_col, x_names=tuple(x_cols),
                     w_names=tuple(w_cols or ()))


def _csv_list(arg: str) -> list[str]:
    return [tok.strip() for tok in arg.split(",") if tok.strip()]


def _add_common_test_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--data", required=True, help="input CSV path")
    sub.add_argument("--y", required=True, help="response column name")
    sub.add_argument("--x", required=True, type=_csv_list,
                     help="comma-separated regressor column names")
    sub.add_argument("--scores", default="wilcoxon",
                     choices=["wilcoxon", "sign", "vdw", "custom"])
    sub.add_argument("--custom-scores", default=None,
                     help="two-column (t, phi(t)) file for --scores custom")
    sub.add_argument("--score-mode", default="approximate",
                     choices=["approximate", "exact"])
    sub.add_argument("--ties", default="error", choices=["error", "midrank", "random"])
    sub.add_argument("--tie-seed", type=int, default=None)
    sub.add_argument("--perm", default="none", choices=["none", "exact", "mc"])
    sub.add_argument("--B", type=int, default=None, help="Monte Carlo permutations")
    sub.add_argument("--seed", type=int, default=None, help="Monte Carlo permutation seed")
    sub.add_argument("--out", default=None, help="also write the JSON record here")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankcov",
        description="Rank ANOVA / rank ANOCOVA tests for corrupted linear models",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    anova = subs.add_parser("rank-anova", help="ANOVA-type rank test of no regression")
    _add_common_test_flags(anova)

    ancova = subs.add_parser("rank-ancova", help="covariance-adjusted rank test")
    _add_common_test_flags(ancova)
    ancova.add_argument("--covariates", required=True, type=_csv_list,
                        help="comma-separated covariate column names")

    pnull = subs.add_parser("perm-null",
                            help="dump the exact permutation null distribution (n <= 8)")
    _add_common_test_flags(pnull)
    pnull.add_argument("--covariates", default=None, type=_csv_list)

    sim = subs.add_parser("simulate", help="run a Monte Carlo power study")
    sim.add_argument("--config", required=True, help="scenario JSON path")
    sim.add_argument("--out", default=None, help="write the power curve CSV here")

    are = subs.add_parser("are", help="asymptotic efficiency under corrupted errors")
    are.add_argument("--scores", default="wilcoxon", choices=["wilcoxon", "sign", "vdw"])
    are.add_argument("--error", required=True, help="error law, e.g. normal:0,1")
    are.add_argument("--noise", required=True, help="noise law or 'none'")
    are.add_argument("--out", default=None)
    return parser


def _resolve_scores(args, parser) -> ScoreFunction:
    if args.scores == "custom":
        if not args.custom_scores:
            parser.error("--scores custom requires --custom-scores FILE")
        return from_table(args.custom_scores)
    return from_name(args.scores)


def _resolve_ties(args, parser) -> TiePolicy:
    if args.ties == "error":
        return TiePolicy.error()
    if args.ties == "midrank":
        return TiePolicy.midrank()
    if args.tie_seed is None:
        parser.error("--ties random requires --tie-seed")
    return TiePolicy.random(args.tie_seed)


def _resolve_plan(args, parser, n: int) -> Optional[PermutationPlan]:
    if args.perm == "none":
        return None
    if args.perm == "exact":
        return PermutationPlan.exact(n)
    if args.B is None or args.seed is None:
        parser.error("--perm mc requires --B and --seed")
    return PermutationPlan.monte_carlo(n, args.B, args.seed)


def _echo_flags(args) -> dict:
    return {
        "data": args.data,
        "y": args.y,
        "x": args.x,
        "covariates": getattr(args, "covariates", None),
        "scores": args.scores,
        "score_mode": args.score_mode,
        "ties": args.ties,
        "tie_seed": args.tie_seed,
        "perm": args.perm,
        "B": args.B,
        "seed": args.seed,
    }


def _emit(record: dict, out: Optional[str], summary: str) -> None:
    line = json.dumps(record, sort_keys=True)
    print(line)
    if out:
        Path(out).write_text(line + "\n", encoding="utf-8")
    print(summary, file=sys.stderr)


def _run_test(args, parser, with_covariates: bool) -> None:
    table = parse_csv(args.data, args.y, args.x,
                      getattr(args, "covariates", None) if with_covariates else None)
    phi = _resolve_scores(args, parser)
    ties = _resolve_ties(args, parser)
    plan = _resolve_plan(args, parser, table.n)
    design = build_design(table.x)
    mode = ScoreMode(args.score_mode)
    if with_covariates:
        result = ancova_rank_test(design, table.y, table.w, phi, ties=ties,
                                  score_mode=mode, permutation=plan)
    else:
        result = anova_rank_test(design, table.y, phi, ties=ties,
                                 score_mode=mode, permutation=plan)
    record = {**result.to_dict(), "config": _echo_flags(args)}
    p_perm = "" if result.p_permutation is None else f", perm p={result.p_permutation:.6g}"
    _emit(record, args.out,
          f"{result.method.value}: statistic={result.statistic:.6g} on df={result.df}, "
          f"asymptotic p={result.p_asymptotic:.6g}{p_perm}")


def _run_perm_null(args, parser) -> None:
    w_cols = args.covariates
    table = parse_csv(args.data, args.y, args.x, w_cols)
    phi = _resolve_scores(args, parser)
    ties = _resolve_ties(args, parser)
    design = build_design(table.x)
    mode = ScoreMode(args.score_mode)
    a = make_scores(phi, design.n, mode)
    if w_cols:
        rc = rank_collection(table.y, table.w, ties)
        work = ancova_workspace(design, rc, a)
        combined = combined_residual_scores(rc, a, work.weights)
        norming = work.v_00_1
        method = "rank-ancova"
    else:
        r = ranks(table.y, ties, where="y")
        combined = scores_at_ranks(a, r.ranks)
        norming = score_norm_sq(phi)
        method = "rank-anova"
    observed = quadform_statistic(design, combined, norming)
    values = exact_null_distribution(
        lambda perm: quadform_statistic(design, combined[np.asarray(perm)], norming),
        design.n,
        recompute_batch=lambda perms: quadform_statistic_batch(
            design, combined, perms, norming),
    )
    p_exact = float(np.mean(values >= observed))
    record = {
        "method": method,
        "n": design.n,
        "permutations": int(values.size),
        "observed": observed,
        "p_exact": p_exact,
        "distinct_values": int(np.unique(values).size),
        "config": _echo_flags(args),
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("statistic\n")
            for v in values:
                fh.write(f"{v!r}\n")
    line = json.dumps(record, sort_keys=True)
    print(line)
    print(f"perm-null: {values.size} permutations, observed={observed:.6g}, "
          f"exact p={p_exact:.6g}", file=sys.stderr)


def _run_simulate(args) -> None:
    with open(args.config, encoding="utf-8") as fh:
        cfg = ScenarioConfig.from_dict(json.load(fh))
    curve = run_power_study(cfg)
    record = {
        "config": curve.config,
        "beta1": curve.beta1.tolist(),
        "power_anova": curve.power_anova.tolist(),
        "power_ancova": curve.power_ancova.tolist(),
        "mc_se": curve.mc_se.tolist(),
        "errors_anova": curve.errors_anova.tolist(),
        "errors_ancova": curve.errors_ancova.tolist(),
    }
    print(json.dumps(record, sort_keys=True))
    if args.out:
        Path(args.out).write_text(curve.to_csv(), encoding="utf-8")
    peak = float(np.max(curve.power_ancova))
    print(f"simulate: n={cfg.n} model={cfg.model.value} reps={cfg.replications} "
          f"grid={len(curve.beta1)} points, max ancova power {peak:.3f}",
          file=sys.stderr)


def _run_are(args) -> None:
    phi = from_name(args.scores)
    error = parse_law(args.error)
    if error is None:
        raise SchemaError("--error may not be 'none'")
    noise = parse_law(args.noise)
    report = are_latent(phi, error, noise)
    record = {
        **report.to_dict(),
        "config": {"scores": args.scores, "error": args.error, "noise": args.noise},
    }
    _emit(record, args.out,
          f"are: latent efficiency {report.are_latent:.6g} "
          f"(gamma_f={report.gamma_phi_f:.6g}, gamma_h={report.gamma_phi_h:.6g})")


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "rank-anova":
            _run_test(args, parser, with_covariates=False)
        elif args.command == "rank-ancova":
            _run_test(args, parser, with_covariates=True)
        elif args.command == "perm-null":
            _run_perm_null(args, parser)
        elif args.command == "simulate":
            _run_simulate(args)
        elif args.command == "are":
            _run_are(args)
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
