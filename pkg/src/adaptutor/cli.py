"""Command-line entry points: adaptutor-serve and adaptutor-sim.

Environment variables with the ADAPTUTOR_ prefix override the matching
flag, e.g. ADAPTUTOR_PACK, ADAPTUTOR_RULES, ADAPTUTOR_RECORDS,
ADAPTUTOR_BIND, ADAPTUTOR_SEED, ADAPTUTOR_TEACHER_TOKEN,
ADAPTUTOR_INSTRUMENT.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path


def _env_default(name: str, fallback):
    return os.environ.get(f"ADAPTUTOR_{name}", fallback)


def _parse_seed(value: str) -> int | None:
    if value == "entropy":
        return None
    return int(value)


def serve_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="adaptutor-serve", description="Run the tutoring HTTP service."
    )
    parser.add_argument("--pack", default=_env_default("PACK", "packs/demo-computing.json"))
    parser.add_argument("--rules", default=_env_default("RULES", "rules/default.json"))
    parser.add_argument(
        "--instrument", default=_env_default("INSTRUMENT", "instruments/demo-20.json")
    )
    parser.add_argument("--records", default=_env_default("RECORDS", "records"))
    parser.add_argument("--bind", default=_env_default("BIND", "127.0.0.1:8000"))
    parser.add_argument(
        "--seed",
        default=_env_default("SEED", "0"),
        help="integer for reproducible test selection, or 'entropy'",
    )
    parser.add_argument(
        "--teacher-token", default=_env_default("TEACHER_TOKEN", "teach-me")
    )
    args = parser.parse_args(argv)

    from .service import ApiConfig, create_app

    try:
        config = ApiConfig(
            pack_path=Path(args.pack),
            rules_path=Path(args.rules),
            instrument_path=Path(args.instrument),
            records_dir=Path(args.records),
            bind=args.bind,
            seed=_parse_seed(args.seed),
            teacher_token=args.teacher_token,
        )
        app = create_app(config)
    except Exception as exc:  # startup failures name the offending file
        print(f"adaptutor-serve: startup failed: {exc}", file=sys.stderr)
        return 2

    import uvicorn

    host, _, port = args.bind.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))
    return 0


def sim_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="adaptutor-sim",
        description="Compare adaptive, fixed-variant, and random-variant sequencing "
        "on simulated learners.",
    )
    parser.add_argument("--pack", default=_env_default("PACK", "packs/demo-computing.json"))
    parser.add_argument("--rules", default=_env_default("RULES", "rules/default.json"))
    parser.add_argument(
        "--instrument", default=_env_default("INSTRUMENT", "instruments/demo-20.json")
    )
    parser.add_argument("--population", type=int, default=50)
    parser.add_argument("--sensitivity", type=float, default=0.3)
    parser.add_argument("--noise", type=float, default=0.1)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--max-attempts", type=int, default=3)
    parser.add_argument(
        "--policies",
        default="adaptive,fixed-variant,random-variant",
        help="comma-separated subset of adaptive, fixed-variant, random-variant, oracle",
    )
    parser.add_argument("--out", default=None, help="write the JSON report here")
    args = parser.parse_args(argv)

    from .content import load_course_pack_file
    from .expert import parse_rulebook
    from .profiler import validate_instrument
    from .sim import report_to_json, run_experiment, summary_table

    pack = load_course_pack_file(args.pack)
    with open(args.rules, encoding="utf-8") as f:
        rulebook = parse_rulebook(json.load(f))
    with open(args.instrument, encoding="utf-8") as f:
        instrument = validate_instrument(json.load(f))

    report = run_experiment(
        pack,
        rulebook,
        instrument,
        population=args.population,
        sensitivity=args.sensitivity,
        seed=args.seed,
        policies=tuple(p.strip() for p in args.policies.split(",") if p.strip()),
        noise=args.noise,
        max_attempts=args.max_attempts,
    )

    if args.out:
        Path(args.out).write_text(report_to_json(report), encoding="utf-8")
    print(summary_table(report))
    return 0
