"""Command-line entry point: ``riskdex <command> [options]``.

Exit status: 0 on success, 1 for domain or validation failures and bad
invocations, 2 when input files cannot be found, read or parsed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Sequence

from . import __version__, report
from .aggregate import published_tie_order, reconcile, run_variant
from .analysis import CORRELATIONS, summary_stats, top_quintile
from .ingest import DATA_DIR_ENV, DataBundle, SchemaError, ValueRangeError, load_bundle, validate
from .model import (
    PS_IDS,
    PUBLISHED_RULES,
    STATE_CODES,
    US,
    RiskdexError,
    SpsResult,
    TieBreak,
    UsSps,
    VariantConfig,
    default_variant_grid,
    extended_variant_grid,
)

log = logging.getLogger("riskdex")

EXIT_OK, EXIT_DOMAIN, EXIT_IO = 0, 1, 2
FORCE_WARNING = "validation bypassed with --force; inputs failed cross-table checks"


class UsageError(RiskdexError):
    """Bad flag value or combination, detected before any output is written."""


class _Parser(argparse.ArgumentParser):
    # bad invocations are domain errors here; 2 is reserved for I/O trouble
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_DOMAIN, f"{self.prog}: error: {message}\n")


# -- argument handling -------------------------------------------------------

def _scheme(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if len(sizes) != 5 or any(s < 0 for s in sizes) or sum(sizes) != 51:
        raise argparse.ArgumentTypeError("need five nonnegative sizes summing to 51")
    return sizes


def _ps_list(text: str, allow_all: bool) -> list[int]:
    if allow_all and text == "all":
        return list(PS_IDS)
    try:
        ps = int(text.removeprefix("ps").removeprefix("PS"))
    except ValueError:
        ps = -1
    if ps not in PS_IDS:
        choices = "1..10 or all" if allow_all else "1..10"
        raise UsageError(f"unknown process statistic {text!r} (expected {choices})")
    return [ps]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data-dir", help=f"fixture directory (default: ${DATA_DIR_ENV}, "
                                      "./data, then the bundled tables)")
    p.add_argument("--force", action="store_true",
                   help="run even when validation fails; outputs carry a warning")
    g = p.add_argument_group("variant")
    g.add_argument("--preset", choices=["default", "published"], default="default",
                   help="'published' selects the rule set that matches the published SPS "
                        "table; cannot be combined with the individual variant flags")
    g.add_argument("--include-us", action=argparse.BooleanOptionalAction, default=None,
                   help="rank US alongside the states when forming quintiles (default: on)")
    g.add_argument("--zeroing", action=argparse.BooleanOptionalAction, default=None,
                   help="zero weights of difference statistics that fell (default: on)")
    g.add_argument("--zero-rule", choices=["negative", "nonpositive"], default=None,
                   help="zero on a negative difference, or on zero as well (default: negative)")
    g.add_argument("--no-rescale", action="store_true", default=None,
                   help="keep the full raw weight total as divisor after zeroing")
    g.add_argument("--tie-break", choices=[t.value for t in TieBreak], default=None,
                   help="order of equal values when ranking (default: canonical)")
    g.add_argument("--n51-scheme", type=_scheme, default=None, metavar="A,B,C,D,E",
                   help="bucket sizes when US is left out (default: 11,10,10,10,10)")
    g.add_argument("--us-sps", choices=[u.value for u in UsSps], default=None,
                   help="also score US when its weights can be derived (default: skip)")


def variant_from_args(args: argparse.Namespace) -> VariantConfig:
    explicit = {name: getattr(args, name) for name in
                ("include_us", "zeroing", "zero_rule", "no_rescale", "tie_break",
                 "n51_scheme", "us_sps") if getattr(args, name) is not None}
    if args.preset == "published":
        if explicit:
            flags = ", ".join("--" + k.replace("_", "-") for k in explicit)
            raise UsageError(f"--preset published cannot be combined with {flags}")
        return PUBLISHED_RULES
    include_us = explicit.get("include_us", True)
    zeroing = explicit.get("zeroing", True)
    if not zeroing and ("zero_rule" in explicit or "no_rescale" in explicit):
        raise UsageError("--zero-rule and --no-rescale only apply with zeroing on")
    if include_us and "n51_scheme" in explicit:
        raise UsageError("--n51-scheme only applies with --no-include-us")
    return VariantConfig(
        include_us_in_quintiles=include_us,
        zero_negative_weights=zeroing,
        tie_break=TieBreak(explicit.get("tie_break", TieBreak.CANONICAL)),
        us_sps=UsSps(explicit.get("us_sps", UsSps.SKIP)),
        quintile_n51_scheme=explicit.get("n51_scheme", (11, 10, 10, 10, 10)),
        zero_nonpositive=explicit.get("zero_rule") == "nonpositive",
        rescale_after_zeroing=not explicit.get("no_rescale", False),
    )


# -- shared steps ------------------------------------------------------------

def _emit(data: bytes) -> None:
    buffer = getattr(sys.stdout, "buffer", None)
    if buffer is None:
        sys.stdout.write(data.decode("utf-8"))
    else:
        buffer.write(data)
    sys.stdout.flush()


def _load_checked(args: argparse.Namespace) -> tuple[DataBundle, str | None]:
    """Load and validate; a failing validation stops the run unless --force."""
    bundle = load_bundle(args.data_dir)
    rep = validate(bundle)
    if rep.ok:
        return bundle, None
    for c in rep.failures[:20]:
        print(f"validation: {c.check_id} ({c.entity}, ps{c.ps}) expected {c.expected}, "
              f"got {c.actual}", file=sys.stderr)
    if not args.force:
        raise ValueRangeError(f"{len(rep.failures)} validation failure(s); "
                              "use --force to continue anyway")
    log.warning(FORCE_WARNING)
    return bundle, FORCE_WARNING


def _top(bundle: DataBundle, cfg: VariantConfig, ps: int, k: int):
    tie_order = published_tie_order(bundle, ps) if cfg.tie_break is TieBreak.PUBLISHED else None
    return top_quintile(bundle.ps.column(ps), k, bundle.ps.rel_diff, cfg.tie_break, tie_order)


def _out_dir(args: argparse.Namespace) -> Path:
    return Path(args.out_dir)


# -- commands ----------------------------------------------------------------

def cmd_validate(args: argparse.Namespace) -> int:
    bundle = load_bundle(args.data_dir)
    rep = validate(bundle)
    _emit(report.render_validation(rep, args.format))
    return EXIT_OK if rep.ok else EXIT_DOMAIN


def cmd_compute(args: argparse.Namespace) -> int:
    cfg = variant_from_args(args)
    bundle, warning = _load_checked(args)
    result = run_variant(bundle, cfg)
    out = _out_dir(args)
    for fmt in ("csv", "json"):
        path = report.write_atomic(out / f"sps.{fmt}", report.render_sps_table(result, fmt, warning))
        print(path)
    return EXIT_OK


def cmd_profile(args: argparse.Namespace) -> int:
    ps_ids = _ps_list(args.ps, allow_all=True)
    if len(ps_ids) > 1 and not args.out_dir:
        raise UsageError("--ps all writes one file per statistic; give --out-dir")
    cfg = variant_from_args(args)
    bundle, _ = _load_checked(args)
    result = run_variant(bundle, cfg)
    for ps in ps_ids:
        data = report.render_profile(ps, bundle, result, args.format, rank_us=args.rank_us)
        if args.out_dir:
            print(report.write_atomic(_out_dir(args) / f"ps{ps}.{args.format}", data))
        else:
            _emit(data)
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    ps_ids = _ps_list(args.ps, allow_all=True)
    bundle, _ = _load_checked(args)
    rows = [summary_stats(bundle.ps.column(ps), ps) for ps in ps_ids]
    _emit(report.render_stats(rows, args.format))
    return EXIT_OK


def cmd_top(args: argparse.Namespace) -> int:
    (ps,) = _ps_list(args.ps, allow_all=False)
    if not 1 <= args.k <= len(STATE_CODES):
        raise UsageError(f"--k must be between 1 and {len(STATE_CODES)}")
    cfg = variant_from_args(args)
    bundle, _ = _load_checked(args)
    entries = _top(bundle, cfg, ps, args.k)
    _emit(report.render_top(ps, entries, args.format))
    return EXIT_OK


SERIES = ["published_sps", "rel_diff", "sps"] + [f"ps{p}" for p in PS_IDS]


def _series(name: str, bundle: DataBundle, result: Callable[[], SpsResult]) -> dict[str, float]:
    if name == "published_sps":
        return dict(bundle.published.published_sps)
    if name == "rel_diff":
        return dict(bundle.ps.rel_diff)
    if name == "sps":
        return dict(result().sps)
    return bundle.ps.column(int(name[2:]))


def cmd_correlate(args: argparse.Namespace) -> int:
    cfg = variant_from_args(args)
    bundle, _ = _load_checked(args)
    cache: list[SpsResult] = []

    def result() -> SpsResult:
        if not cache:
            cache.append(run_variant(bundle, cfg))
        return cache[0]

    x = _series(args.x, bundle, result)
    y = _series(args.y, bundle, result)
    codes = [c for c in (x.keys() & y.keys()) if args.with_us or c != US]
    codes = [c for c in [US, *STATE_CODES] if c in codes]
    r = CORRELATIONS[args.method]([x[c] for c in codes], [y[c] for c in codes])
    print(f"{args.method} r = {r:.4f} (n={len(codes)}, x={args.x}, y={args.y})")
    return EXIT_OK


def cmd_reconcile(args: argparse.Namespace) -> int:
    bundle, _ = _load_checked(args)
    grid = extended_variant_grid() if args.extended else default_variant_grid()
    data = report.render_reconciliation(reconcile(bundle, grid), args.format)
    if args.out_dir:
        print(report.write_atomic(_out_dir(args) / f"reconciliation.{args.format}", data))
    else:
        _emit(data)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    cfg = variant_from_args(args)
    bundle, warning = _load_checked(args)
    result = run_variant(bundle, cfg)
    files: dict[str, bytes] = {}
    for ps in PS_IDS:
        doc = report.build_profile(ps, bundle, result, rank_us=args.rank_us)
        for fmt in ("md", "json", "csv"):
            files[f"profiles/ps{ps}.{fmt}"] = report.render_profile_doc(doc, fmt)
        files[f"profiles/ps{ps}_bars.svg"] = report.render_bar_svg(doc)
        files[f"maps/ps{ps}.svg"] = report.ps_cartogram(ps, bundle, result)
    published = bundle.published
    for fmt in ("md", "json", "csv"):
        files[f"summary.{fmt}"] = report.render_sps_profile(result, published.published_sps, fmt)
        files[f"decomposition.{fmt}"] = report.render_decomposition(result, published.table4, fmt)
    files["maps/sps.svg"] = report.sps_cartogram(result)
    files["sps.csv"] = report.render_sps_table(result, "csv", warning)
    files["sps.json"] = report.render_sps_table(result, "json", warning)
    files["waffle_2020.svg"] = report.render_waffle_svg(published.table2, year=2020)
    files["waffle_2010.svg"] = report.render_waffle_svg(published.table2, year=2010)
    files["stats.md"] = report.render_stats(
        [summary_stats(bundle.ps.column(ps), ps) for ps in PS_IDS], "md")
    files["top.md"] = b"".join(
        report.render_top(ps, _top(bundle, cfg, ps, 11), "md") + b"\n"
        for ps in PS_IDS)
    recon = reconcile(bundle, extended_variant_grid() if args.extended else default_variant_grid())
    files["reconciliation.md"] = report.render_reconciliation(recon, "md")
    files["reconciliation.json"] = report.render_reconciliation(recon, "json")
    files["validation.json"] = report.render_validation(validate(bundle), "json")
    out = _out_dir(args)
    for name in sorted(files):
        report.write_atomic(out / name, files[name])
    print(f"wrote {len(files)} files to {out}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="riskdex", description="Score census process statistics, "
                     "reproduce the summary tables and render state profiles.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name: str, func, help: str, formats: Sequence[str] | None = None,
                default_format: str | None = None) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help, description=help)
        _add_common(p)
        if formats:
            p.add_argument("--format", choices=list(formats), default=default_format or formats[0],
                           help="output format")
        p.set_defaults(func=func, parser=p)
        return p

    command("validate", cmd_validate, "run the cross-table checks on the fixtures",
            ["text", "md", "json", "csv"])

    p = command("compute", cmd_compute, "compute SPS for one variant and write sps.csv/sps.json")
    p.add_argument("--out-dir", default="out", help="output directory (default: ./out)")

    p = command("profile", cmd_profile, "render process-statistic profiles",
                ["md", "json", "csv", "svg"])
    p.add_argument("--ps", default="all", help="statistic 1..10 or 'all' (default: all)")
    p.add_argument("--out-dir", help="write files here instead of standard output")
    p.add_argument("--rank-us", action="store_true", help="number US among the ranked rows")

    p = command("stats", cmd_stats, "mean, min, max, range and relative range per statistic",
                ["text", "md", "json", "csv"])
    p.add_argument("--ps", default="all", help="statistic 1..10 or 'all' (default: all)")

    p = command("top", cmd_top, "highest-valued states for a statistic with their "
                "census-vs-estimate differences", ["text", "md", "json", "csv"])
    p.add_argument("--ps", required=True, help="statistic 1..10")
    p.add_argument("--k", type=int, default=11, help="number of states (default: 11)")

    p = command("correlate", cmd_correlate, "correlation between two state-level series")
    p.add_argument("--x", choices=SERIES, default="published_sps")
    p.add_argument("--y", choices=SERIES, default="rel_diff")
    p.add_argument("--method", choices=sorted(CORRELATIONS), default="pearson")
    p.add_argument("--with-us", action="store_true", help="include the US row when both "
                   "series have one")

    p = command("reconcile", cmd_reconcile, "compare rule variants with the published SPS table",
                ["md", "json"])
    p.add_argument("--extended", action="store_true",
                   help="add the published-rules variant to the default four")
    p.add_argument("--out-dir", help="write reconciliation.<format> here")

    p = command("report", cmd_report, "write the full artifact set (profiles, maps, summary, "
                "decomposition, waffles, reconciliation)")
    p.add_argument("--out-dir", default="report", help="output directory (default: ./report)")
    p.add_argument("--rank-us", action="store_true", help="number US among the ranked rows")
    p.add_argument("--extended", action="store_true",
                   help="include the published-rules variant in the reconciliation")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, --version and usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_DOMAIN
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        getattr(args, "parser", parser).print_usage(sys.stderr)
        print(f"riskdex: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (SchemaError, OSError) as exc:
        print(f"riskdex: {exc}", file=sys.stderr)
        return EXIT_IO
    except (RiskdexError, ValueError) as exc:
        print(f"riskdex: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
