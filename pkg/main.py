"""
SL2 Toolkit Command Line
Exact verification of the presentations H_m of SL_2(Z[1/m]), their
abelianizations, and the finite presentations of SL_2(Z/rZ)

Exit codes: 0 all checks pass, 1 a check failed, 2 malformed input or
configuration, 3 a resource limit stopped a computation.
"""

from dotenv import load_dotenv
load_dotenv()  # Load SL2_* settings from .env file

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
from pydantic import BaseModel, ValidationError
from pythonjsonlogger import jsonlogger

from models.reports import CampaignReport, CheckResult
from services.abelianization import (
    abelianization_report,
    formula_cross_check,
    formula_frame,
    relation_matrix_frame,
)
from services.cache_manager import CATEGORIES, CacheManager
from services.campaign import cmd_verify_paper
from services.coset_enumeration import STRATEGIES, todd_coxeter, verify_corollary
from services.decomposition import ALPHABETS, decomposition_report
from services.exact_arithmetic import parse_matrix
from services.matrix_groups import (
    GroupTooLargeError,
    check_relations,
    group_order_report,
    parse_assignment,
    residue_campaign,
    verify_lemma_identities,
)
from services.presentations import (
    format_presentation,
    make_corollary,
    make_hm,
    make_serre_behr_mennicke,
    parse_presentation,
    parse_word,
)
from settings import Settings

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2
EXIT_LIMIT = 3

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def configure_logging(level: str = "WARNING", json_logs: bool = False):
    """Route all logs to stderr, plain or as JSON lines"""
    handler = logging.StreamHandler(sys.stderr)
    if json_logs:
        handler.setFormatter(jsonlogger.JsonFormatter('%(asctime)s %(name)s %(levelname)s %(message)s'))
    else:
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(level)


def parse_int_list(text: str) -> List[int]:
    """`1..50`, `3,5,7` or a mix such as `1..4,10`"""
    values: List[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ".." in part:
                low, high = part.split("..", 1)
                values.extend(range(int(low), int(high) + 1))
            else:
                values.append(int(part))
        except ValueError:
            raise ValueError(f"malformed integer list {text!r}")
    return values


# ============================================================================
# OUTPUT
# ============================================================================

def _json_payload(payload: Any) -> Any:
    if isinstance(payload, BaseModel):
        return payload.model_dump(mode="json")
    if isinstance(payload, list):
        return [_json_payload(item) for item in payload]
    return payload


def emit(payload: Any, text: str, fmt: str):
    """Print either the rendered text or deterministic JSON to stdout"""
    if fmt == "json":
        print(json.dumps(_json_payload(payload), indent=2, sort_keys=True))
    else:
        print(text)


def checks_frame(checks: Sequence[CheckResult]) -> pd.DataFrame:
    rows = [{
        "check": c.name,
        "parameters": ", ".join(f"{k}={v}" for k, v in c.parameters.items()),
        "status": "LIMIT" if c.limit_exceeded else ("pass" if c.passed else "FAIL"),
        "details": c.details,
    } for c in checks]
    return pd.DataFrame(rows, columns=["check", "parameters", "status", "details"])


def campaign_exit_code(report: CampaignReport) -> int:
    if report.failed:
        return EXIT_FAILED
    if report.limited:
        return EXIT_LIMIT
    return EXIT_OK


def _read(path: str) -> str:
    return Path(path).read_text()


def _cache(settings: Settings) -> Optional[CacheManager]:
    return CacheManager(str(settings.cache_dir)) if settings.cache_dir else None


# ============================================================================
# SUBCOMMANDS
# ============================================================================

def cmd_verify_paper_handler(args, settings: Settings) -> int:
    m_values = parse_int_list(args.m_range)
    r_values = parse_int_list(args.r)
    report = cmd_verify_paper(m_values, r_values, settings, strategy=args.strategy)

    frame = checks_frame(report.checks)
    failing = frame[frame["status"] != "pass"]
    lines = [
        f"{len(report.checks)} checks over m in {args.m_range}, r in {args.r}",
        "Stage timings: " + ", ".join(f"{k} {v:.2f}s" for k, v in report.stage_timings_s.items()),
    ]
    if args.verbose:
        lines.append(frame.to_string(index=False))
    elif not failing.empty:
        lines.append(failing.to_string(index=False))
    lines.append("PASS" if report.passed else f"FAIL ({len(report.failed)} failed, "
                                              f"{len(report.limited)} stopped by limits)")
    emit(report, "\n".join(lines), args.format)
    return campaign_exit_code(report)


def cmd_abelianize(args, settings: Settings) -> int:
    presentation = parse_presentation(_read(args.file), name=Path(args.file).stem)
    report = abelianization_report(presentation)
    lines = [report.description]
    if args.verbose:
        lines.append(f"invariant factors: {report.invariant_factors}")
        if report.primary_parts:
            lines.append(f"primary parts: {' x '.join(f'Z/{q}' for q in report.primary_parts)}")
        lines.append("relation matrix (generators x relators):")
        lines.append(relation_matrix_frame(presentation).to_string())
    emit(report, "\n".join(lines), args.format)
    return EXIT_OK


def cmd_coset_enum(args, settings: Settings) -> int:
    presentation = parse_presentation(_read(args.file), name=Path(args.file).stem)
    subgroup = [parse_word(text, presentation.generators) for text in args.subgroup]
    outcome = todd_coxeter(presentation, subgroup, settings.enum_limits(),
                           strategy=args.strategy, debug=args.debug)
    summary = outcome.to_summary(presentation, args.strategy, subgroup)
    stats = summary.statistics
    if outcome.completed:
        text = f"index {summary.index}"
    else:
        text = f"limit exceeded: {summary.limit_reason}"
    text += (f"\ncosets defined {stats.cosets_defined}, coincidences {stats.coincidences}, "
             f"deductions {stats.deductions}, peak live {stats.peak_live_cosets}")
    emit(summary, text, args.format)
    return EXIT_OK if outcome.completed else EXIT_LIMIT


def cmd_verify_corollary(args, settings: Settings) -> int:
    try:
        report = verify_corollary(args.r, settings.enum_limits(), args.strategy, _cache(settings),
                                  settings.max_group_elements)
    except GroupTooLargeError as e:
        logger.error(f"BFS stopped: {e}")
        return EXIT_LIMIT

    lines = [
        f"SL2(Z/{report.r}) = <x, y | H_2 relators, x^{report.r}>",
        f"  enumerated order: {report.enumerated_order if report.status == 'completed' else report.status}",
        f"  BFS order of <A, Q_2> mod {report.r}: {report.bfs_order}",
        f"  |SL2(Z/{report.r})| by exhaustive count: {report.exhaustive_order}",
        f"  relators hold mod {report.r}: {report.relators_satisfied}",
        f"  abelianization: {report.abelianization}",
    ]
    lines.extend(f"  FAIL {failure}" for failure in report.failures)
    lines.append("PASS" if report.passed else ("LIMIT" if report.status != "completed" else "FAIL"))
    emit(report, "\n".join(lines), args.format)
    if report.failures:
        return EXIT_FAILED
    return EXIT_OK if report.passed else EXIT_LIMIT


def cmd_decompose(args, settings: Settings) -> int:
    matrix = parse_matrix(args.matrix, args.m)
    report = decomposition_report(matrix, args.alphabet)
    text = (f"{report.word}\n"
            f"verified: evaluation of the {report.word_length}-letter word reproduces {report.matrix}")
    if args.verbose:
        text += (f"\nnorm trace: {' > '.join(report.norm_trace) or '-'}"
                 f"\nabelianization class: {report.abelianization_class} "
                 f"mod {report.abelianization_order}")
    emit(report, text, args.format)
    return EXIT_OK


def cmd_verify_lemma(args, settings: Settings) -> int:
    reports = [verify_lemma_identities(m) for m in parse_int_list(args.m)]
    if not reports:
        raise ValueError("no values of m given")
    checks = [check for report in reports for check in report.checks]
    passed = all(report.passed for report in reports)
    text = checks_frame(checks).to_string(index=False) + ("\nPASS" if passed else "\nFAIL")
    emit(reports, text, args.format)
    return EXIT_OK if passed else EXIT_FAILED


def cmd_check_relations(args, settings: Settings) -> int:
    presentation = parse_presentation(_read(args.file), name=Path(args.file).stem)
    assignment = parse_assignment(_read(args.assignment), args.m)
    if args.moduli:
        report = residue_campaign(presentation, assignment, parse_int_list(args.moduli),
                                  include_tietze_chain=False)
        reports = report.reports
        payload = report
    else:
        reports = [check_relations(presentation, assignment)]
        payload = reports[0]

    lines = []
    for rel_report in reports:
        status = "pass" if rel_report.passed else "FAIL"
        lines.append(f"{rel_report.presentation} over {rel_report.ring}: {status} "
                     f"({rel_report.relator_count} relators)")
        lines.extend(f"  {f.relator} -> {f.image}" for f in rel_report.failures)
    emit(payload, "\n".join(lines), args.format)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


def cmd_sl2_order(args, settings: Settings) -> int:
    try:
        report = group_order_report(args.r, settings.max_group_elements)
    except GroupTooLargeError as e:
        logger.error(f"BFS stopped: {e}")
        return EXIT_LIMIT
    text = (f"<A, Q_2> mod {report.r}: {report.bfs_order} elements (BFS), "
            f"|SL2(Z/{report.r})| = {report.exhaustive_order}")
    emit(report, text, args.format)
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_formula(args, settings: Settings) -> int:
    m_values = parse_int_list(args.m_range)
    if not m_values:
        raise ValueError("no values of m given")
    rows = formula_cross_check(m_values)
    disagreements = [row.m for row in rows if not row.printed_agrees]
    text = formula_frame(rows).to_string()
    text += f"\nprinted gcd(m^2 + 1, 12m, 4m^2 + 8) differs for m in {disagreements}" if disagreements else ""
    emit(rows, text, args.format)
    return EXIT_OK if all(row.agrees for row in rows) else EXIT_FAILED


def cmd_present(args, settings: Settings) -> int:
    if args.family == "hm":
        presentation = make_hm(args.m)
    elif args.family == "sbm":
        presentation = make_serre_behr_mennicke()
    else:
        presentation = make_corollary(args.r)
    text = format_presentation(presentation)
    payload = dict(presentation.describe(), relators=[str(r) for r in presentation.relators])
    emit(payload, text.rstrip("\n"), args.format)
    return EXIT_OK


def cmd_cache(args, settings: Settings) -> int:
    cache = _cache(settings)
    if cache is None:
        raise ValueError("no cache directory: pass --cache-dir or set SL2_CACHE_DIR")
    removed = None
    if args.clear:
        removed = cache.clear_category(args.category) if args.category else cache.clear_all_cache()
    stats = cache.get_cache_statistics()
    lines = [f"cache at {stats['cache_directory']}"]
    if removed is not None:
        lines.append(f"removed {removed} files")
    for category, entry in stats["categories"].items():
        lines.append(f"  {category}: {entry['count']} entries, {entry['size_bytes']} bytes")
    emit(dict(stats, removed_files=removed), "\n".join(lines), args.format)
    return EXIT_OK


# ============================================================================
# ARGUMENT PARSING
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["text", "json"], default="text")
    common.add_argument("--seed", type=int, help="Seed for randomized samples")
    common.add_argument("--max-cosets", type=int, help="Coset limit of each enumeration")
    common.add_argument("--jobs", type=int, help="Parallel workers for campaign stages")
    common.add_argument("--cache-dir", help="Cache finished enumerations and group orders here")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    common.add_argument("--log-json", action="store_true", default=None, help="JSON log lines")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="sl2", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-paper", parents=[common], help="Run the full verification campaign")
    p.add_argument("--m-range", default="1..50")
    p.add_argument("--r", default="3,5,7")
    p.add_argument("--strategy", choices=STRATEGIES, default="hlt")
    p.set_defaults(handler=cmd_verify_paper_handler)

    p = sub.add_parser("abelianize", parents=[common], help="Abelianization of a presentation file")
    p.add_argument("file")
    p.set_defaults(handler=cmd_abelianize)

    p = sub.add_parser("coset-enum", parents=[common], help="Todd-Coxeter coset enumeration")
    p.add_argument("file")
    p.add_argument("--subgroup", action="append", default=[], help="Subgroup generator word")
    p.add_argument("--strategy", choices=STRATEGIES, default="hlt")
    p.add_argument("--debug", action="store_true", help="Check table consistency at every step")
    p.set_defaults(handler=cmd_coset_enum)

    p = sub.add_parser("verify-corollary", parents=[common], help="Certify the SL2(Z/r) presentation")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--strategy", choices=STRATEGIES, default="hlt")
    p.set_defaults(handler=cmd_verify_corollary)

    p = sub.add_parser("decompose", parents=[common], help="Factor a matrix over Z[1/m]")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--matrix", required=True, help="[[a, b], [c, d]]")
    p.add_argument("--alphabet", choices=ALPHABETS, default="abu")
    p.set_defaults(handler=cmd_decompose)

    p = sub.add_parser("verify-lemma", parents=[common], help="Exact matrix identities")
    p.add_argument("--m", required=True, help="m value or range such as 1..200")
    p.set_defaults(handler=cmd_verify_lemma)

    p = sub.add_parser("check-relations", parents=[common], help="Evaluate relators under an assignment")
    p.add_argument("file")
    p.add_argument("--assignment", required=True, help="File of `gen = [[..], [..]]` lines")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--moduli", help="Also check in these residue quotients, e.g. 3,5,7")
    p.set_defaults(handler=cmd_check_relations)

    p = sub.add_parser("sl2-order", parents=[common], help="BFS order of <A, Q_2> mod r")
    p.add_argument("--r", type=int, required=True)
    p.set_defaults(handler=cmd_sl2_order)

    p = sub.add_parser("formula", parents=[common], help="Invariant factor against closed forms")
    p.add_argument("--m-range", default="1..200")
    p.set_defaults(handler=cmd_formula)

    p = sub.add_parser("present", parents=[common], help="Print a presentation in file format")
    p.add_argument("family", choices=["hm", "sbm", "corollary"])
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--r", type=int, default=3)
    p.set_defaults(handler=cmd_present)

    p = sub.add_parser("cache", parents=[common], help="Show or clear the result cache")
    p.add_argument("--clear", action="store_true", help="Delete cached results")
    p.add_argument("--category", choices=CATEGORIES, help="Limit --clear to one category")
    p.set_defaults(handler=cmd_cache)

    return parser


def settings_from_args(args) -> Settings:
    overrides: Dict[str, Any] = {
        "seed": args.seed,
        "max_cosets": args.max_cosets,
        "n_jobs": args.jobs,
        "cache_dir": args.cache_dir,
        "log_level": args.log_level,
        "log_json": args.log_json,
    }
    return Settings(**{k: v for k, v in overrides.items() if v is not None})


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    try:
        settings = settings_from_args(args)
    except ValidationError as e:
        configure_logging()
        logger.error(f"Invalid configuration: {e}")
        return EXIT_INPUT
    configure_logging(settings.log_level, settings.log_json)

    try:
        return args.handler(args, settings)
    except (ValueError, ValidationError, OSError) as e:
        logger.error(f"{args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as e:
        logger.error(f"Unhandled exception in {args.command}: {e}", exc_info=True)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
