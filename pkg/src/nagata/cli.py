"""Command-line frontend: norm evaluation, tower build/verify, dimension lab.

Subcommands
-----------
norm          evaluate elements under a base, stage, or limit norm (CSV out)
build-verify  run a tower config, emit per-stage certificates + witness report
dimlab        control-fn | components | envelopes over finite windows
cache         inspect | clear the norm-value cache directory

Exit codes: 0 success, 1 verification failure, 2 inconclusive (a budget or
cap was hit; never a wrong number), 3 configuration error.

Tower configuration file (JSON):
  {"group": "Z"|"Z^d"|"H3", "d": int?, "k": [..], "M": [..], "steps": int,
   "h1_mode": "bounded"|"exact", "verify_radius": int,
   "overrides": {"<stage>": {"a"|"C"|"h1": int}}?}
The optional overrides block replaces chosen parameters at a stage (fault
injection included: an inadmissible C is accepted and then reported by the
stage certificate).

All emitted JSON is deterministic (sorted keys, no timestamps) and carries
big integers as decimal strings.  Negative coordinates on the command line
should follow a ``--`` separator so they are not read as flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .construction import (
    TowerState,
    TowerVerificationError,
    build_tower,
    limit_norm,
)
from .dimlab import EXACT_POINT_CAP, control_function_estimate, witness_report
from .errors import BudgetExceededError, CacheFormatError, ConfigError
from .groups import GroupDescriptor, parse_group
from .metrics import (
    AnalyticL1Norm,
    FiniteMetricSpace,
    NormHandle,
    WordNorm,
    coarse_envelopes,
    load_norm_cache,
    read_cache_entries,
    s_components,
    save_norm_cache,
)

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_INCONCLUSIVE = 2
EXIT_CONFIG = 3


class _Parser(argparse.ArgumentParser):
    # usage problems must exit 3, not argparse's default 2
    def error(self, message):
        raise ConfigError(message)


@dataclass
class RunConfig:
    """Validated tower-run configuration."""

    group: GroupDescriptor
    k: tuple[int, ...]
    M: tuple[int, ...]
    steps: int
    h1_mode: str = "bounded"
    verify_radius: int = 60
    overrides: dict[int, dict] = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if any(not isinstance(x, int) or x < 1 for x in self.k + self.M):
            raise ConfigError("k and M entries must be positive integers")
        if any(b <= a for a, b in zip(self.k, self.k[1:])):
            raise ConfigError("k sequence must be strictly increasing")
        if any(b <= a for a, b in zip(self.M, self.M[1:])):
            raise ConfigError("M sequence must be strictly increasing")
        if not isinstance(self.steps, int) or self.steps < 0:
            raise ConfigError("steps must be a nonnegative integer")
        if self.steps > min(len(self.k), len(self.M)):
            raise ConfigError("steps exceeds the provided k/M sequences")
        if self.h1_mode not in ("bounded", "exact"):
            raise ConfigError(f"unknown h1_mode: {self.h1_mode!r}")
        if not isinstance(self.verify_radius, int) or self.verify_radius < 0:
            raise ConfigError("verify_radius must be a nonnegative integer")
        for stage, ov in self.overrides.items():
            if stage < 1:
                raise ConfigError("override stage indices are 1-based")
            bad = set(ov) - {"a", "C", "h1"}
            if bad:
                raise ConfigError(f"unknown override keys: {sorted(bad)}")
            if any(not isinstance(v, int) or v < 1 for v in ov.values()):
                raise ConfigError("override values must be positive integers")
        return self


def load_tower_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("tower config must be a JSON object")
    unknown = set(raw) - {"group", "d", "k", "M", "steps", "h1_mode", "verify_radius", "overrides"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        group = parse_group(raw.get("group", "Z"), raw.get("d"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    k = raw.get("k", [])
    M = raw.get("M", [])
    if not isinstance(k, list) or not isinstance(M, list):
        raise ConfigError("k and M must be JSON arrays")
    overrides_raw = raw.get("overrides", {})
    if not isinstance(overrides_raw, dict):
        raise ConfigError("overrides must be a JSON object")
    overrides: dict[int, dict] = {}
    for key, ov in overrides_raw.items():
        try:
            stage = int(key)
        except ValueError as exc:
            raise ConfigError(f"override stage {key!r} is not an integer") from exc
        if not isinstance(ov, dict):
            raise ConfigError("per-stage overrides must be JSON objects")
        overrides[stage] = dict(ov)
    cfg = RunConfig(
        group=group,
        k=tuple(k),
        M=tuple(M),
        steps=raw.get("steps", len(k)),
        h1_mode=raw.get("h1_mode", "bounded"),
        verify_radius=raw.get("verify_radius", 60),
        overrides=overrides,
    )
    return cfg.validate()


# ---------------------------------------------------------------------------
# cache plumbing


def _cache_path(cache_dir: str, handle: NormHandle) -> Path:
    return Path(cache_dir) / f"{handle.provenance_hash()}.cache"


def _warm_hook(cache_dir: Optional[str]):
    if cache_dir is None:
        return None

    def hook(handle: NormHandle) -> None:
        path = _cache_path(cache_dir, handle)
        if path.exists():
            load_norm_cache(handle, path)

    return hook


def _save_caches(cache_dir: str, tower: TowerState) -> None:
    Path(cache_dir).mkdir(parents=True, exist_ok=True)
    for stage in tower.stages:
        save_norm_cache(stage.handle, _cache_path(cache_dir, stage.handle))


def _build_from_config(cfg: RunConfig, cache_dir: Optional[str]) -> TowerState:
    return build_tower(
        cfg.group,
        cfg.k,
        cfg.M,
        cfg.steps,
        h1_mode=cfg.h1_mode,
        verify_radius=cfg.verify_radius,
        stage_overrides=cfg.overrides,
        on_stage_handle=_warm_hook(cache_dir),
    )


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="ascii")


def _emit(lines: list[str], out: Optional[str]) -> None:
    text = "\n".join(lines) + ("\n" if lines else "")
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# norm


def _parse_element(text: str, group: GroupDescriptor) -> tuple[int, ...]:
    try:
        coords = tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad element {text!r}: coordinates must be integers") from exc
    try:
        group.check_coords(coords)
    except ValueError as exc:
        raise ConfigError(f"bad element {text!r}: {exc}") from exc
    return coords


def _base_handle(group: GroupDescriptor, metric: str) -> NormHandle:
    if metric == "analytic":
        return AnalyticL1Norm(group)
    if metric == "word":
        return WordNorm(group)
    raise ConfigError(f"unknown metric: {metric!r}")


def cmd_norm(args) -> int:
    tower: Optional[TowerState] = None
    if args.tower:
        cfg = load_tower_config(args.tower)
        group = cfg.group
        tower = _build_from_config(cfg, args.cache_dir)
        if args.stage is not None:
            if not 1 <= args.stage <= len(tower.stages):
                raise ConfigError(f"stage must lie in 1..{len(tower.stages)}")
            handle = tower.stages[args.stage - 1].handle
        else:
            handle = tower.limit_handle
    else:
        if args.stage is not None or args.limit:
            raise ConfigError("--stage/--limit require --tower")
        group = parse_group(args.group, args.d)
        handle = _base_handle(group, args.metric)

    raw_elements = list(args.elements)
    if not raw_elements:
        raw_elements = [ln.strip() for ln in sys.stdin if ln.strip()]
    limit_mode = bool(args.tower) and args.stage is None

    lines: list[str] = []
    partial = False
    for text in raw_elements:
        coords = _parse_element(text, group)
        try:
            if limit_mode:
                value, stabilized = limit_norm(tower, coords)
                flag = "stabilized" if stabilized else "not-stabilized"
                lines.append(f"{text},{value},{flag}")
            else:
                lines.append(f"{text},{handle.value(coords)}")
        except BudgetExceededError:
            partial = True
            lines.append(f"{text},inconclusive")
    _emit(lines, args.out)
    return EXIT_INCONCLUSIVE if partial else EXIT_OK


# ---------------------------------------------------------------------------
# build-verify


def _stage_record(index: int, certificate, R: int, sigma) -> dict:
    return {
        "stage": index,
        "threshold_R": R,
        "slope": f"{sigma.numerator}/{sigma.denominator}" if sigma is not None else None,
        "certificate": certificate.to_dict(),
    }


def cmd_build_verify(args) -> int:
    cfg = load_tower_config(args.config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        tower = _build_from_config(cfg, args.cache_dir)
    except TowerVerificationError as exc:
        for stage in exc.tower.stages:
            _dump_json(
                out_dir / f"stage-{stage.index}.json",
                _stage_record(stage.index, stage.certificate, stage.R, stage.sigma),
            )
        _dump_json(
            out_dir / f"stage-{exc.stage_index}.json",
            _stage_record(exc.stage_index, exc.certificate, exc.certificate.params.R, None),
        )
        print(f"stage {exc.stage_index} verification failed", file=sys.stderr)
        return EXIT_VERIFY
    for stage in tower.stages:
        _dump_json(
            out_dir / f"stage-{stage.index}.json",
            _stage_record(stage.index, stage.certificate, stage.R, stage.sigma),
        )
    report = witness_report(tower)
    _dump_json(out_dir / "witness-report.json", report.to_dict())
    if args.cache_dir:
        _save_caches(args.cache_dir, tower)
    if not report.all_verified:
        print("witness re-verification failed", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


# ---------------------------------------------------------------------------
# dimlab


def _space_from_spec(spec: str) -> FiniteMetricSpace:
    if spec.startswith("Z-ball:"):
        radius = int(spec.split(":", 1)[1])
        if radius < 0:
            raise ConfigError("ball radius must be nonnegative")
        return FiniteMetricSpace.from_l1_points([(t,) for t in range(-radius, radius + 1)])
    if spec.startswith("Z-range:"):
        text = spec.split(":", 1)[1]
        lo_text, sep, hi_text = text.partition("..")
        if not sep:
            raise ConfigError("Z-range spec must look like Z-range:A..B")
        lo, hi = int(lo_text), int(hi_text)
        if hi < lo:
            raise ConfigError("empty Z-range")
        return FiniteMetricSpace.from_l1_points([(t,) for t in range(lo, hi + 1)])
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"unknown space spec: {spec!r}")
    rows = []
    for ln in path.read_text(encoding="utf-8").splitlines():
        if ln.strip():
            rows.append([int(cell) for cell in ln.split(",")])
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ConfigError(f"{spec}: distance matrix must be square")
    space = FiniteMetricSpace(labels=list(range(n)), dist=rows)
    space.validate()
    return space


def _metric_from_spec(spec: str, args) -> tuple[NormHandle, Optional[TowerState]]:
    if spec in ("analytic", "word"):
        group = parse_group(args.group, args.d)
        return _base_handle(group, spec), None
    head, sep, rest = spec.partition(":")
    if not sep:
        raise ConfigError(f"unknown metric spec: {spec!r}")
    cfg = load_tower_config(head)
    tower = _build_from_config(cfg, args.cache_dir)
    if rest == "limit":
        return tower.limit_handle, tower
    if rest.startswith("stage:"):
        idx = int(rest.split(":", 1)[1])
        if not 1 <= idx <= len(tower.stages):
            raise ConfigError(f"stage must lie in 1..{len(tower.stages)}")
        return tower.stages[idx - 1].handle, tower
    raise ConfigError(f"metric spec must end with :limit or :stage:<i>, got {spec!r}")


def _label_json(label):
    return list(label) if isinstance(label, tuple) else label


def cmd_control_fn(args) -> int:
    space = _space_from_spec(args.space)
    scales = [int(s) for s in args.s.split(",") if s]
    if not scales:
        raise ConfigError("--s must list at least one scale")
    lines = []
    for s in scales:
        sol = control_function_estimate(
            space, args.n, s, mode=args.mode, exact_cap=args.exact_cap
        )
        lines.append(f"{sol.s},{sol.value},{sol.mode},{sol.n}")
    _emit(lines, args.out)
    return EXIT_OK


def cmd_components(args) -> int:
    space = _space_from_spec(args.space)
    parts = s_components(space, args.s)
    obj = {
        "s": args.s,
        "count": len(parts),
        "components": [[_label_json(space.labels[i]) for i in part] for part in parts],
    }
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="ascii")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_envelopes(args) -> int:
    a_handle, _ = _metric_from_spec(args.a, args)
    b_handle, _ = _metric_from_spec(args.b, args)
    report = coarse_envelopes(a_handle, b_handle, args.radius)
    _emit([f"{t},{lo},{hi}" for t, lo, hi in report.rows()], args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# cache


def cmd_cache(args) -> int:
    cache_dir = Path(args.cache_dir)
    if args.cache_cmd == "inspect":
        if not cache_dir.is_dir():
            raise ConfigError(f"cache directory {cache_dir} does not exist")
        lines = []
        for path in sorted(cache_dir.glob("*.cache")):
            label, phash, entries = read_cache_entries(path)
            lines.append(f"{path.name}: group={label} hash={phash} entries={len(entries)}")
        _emit(lines or ["(cache empty)"], None)
        return EXIT_OK
    if args.cache_cmd == "clear":
        removed = 0
        if cache_dir.is_dir():
            for path in sorted(cache_dir.glob("*.cache")):
                path.unlink()
                removed += 1
        print(f"removed {removed} cache file(s)")
        return EXIT_OK
    raise ConfigError(f"unknown cache command: {args.cache_cmd!r}")


# ---------------------------------------------------------------------------
# parser


def build_parser() -> _Parser:
    parser = _Parser(prog="nagata", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_norm = sub.add_parser("norm", help="evaluate norms; CSV 'element,value' per line")
    p_norm.add_argument("--group", default="Z", help="Z | Z^d | H3 (ignored with --tower)")
    p_norm.add_argument("--d", type=int, default=None, help="rank for Z^d")
    p_norm.add_argument("--metric", default="analytic", help="analytic | word")
    p_norm.add_argument("--tower", default=None, help="tower config JSON; evaluate its norms")
    p_norm.add_argument("--stage", type=int, default=None, help="evaluate stage i (1-based)")
    p_norm.add_argument("--limit", action="store_true", help="evaluate the limit norm (default with --tower)")
    p_norm.add_argument("--cache-dir", default=None)
    p_norm.add_argument("--out", default=None)
    p_norm.add_argument("elements", nargs="*", help="comma-separated coordinates; use -- before negatives")
    p_norm.set_defaults(func=cmd_norm)

    p_bv = sub.add_parser("build-verify", help="build a tower, write certificates + witness report")
    p_bv.add_argument("--config", required=True)
    p_bv.add_argument("--out-dir", required=True)
    p_bv.add_argument("--cache-dir", default=None)
    p_bv.set_defaults(func=cmd_build_verify)

    p_dim = sub.add_parser("dimlab", help="control functions, components, envelopes")
    dim_sub = p_dim.add_subparsers(dest="dimlab_cmd", required=True)

    p_cf = dim_sub.add_parser("control-fn", help="CSV rows 's,D,mode,n'")
    p_cf.add_argument("--space", required=True, help="Z-ball:R | Z-range:A..B | matrix.csv")
    p_cf.add_argument("--n", type=int, required=True)
    p_cf.add_argument("--s", required=True, help="comma-separated scales")
    p_cf.add_argument("--mode", default="greedy", choices=("exact", "greedy"))
    p_cf.add_argument("--exact-cap", type=int, default=EXACT_POINT_CAP)
    p_cf.add_argument("--out", default=None)
    p_cf.set_defaults(func=cmd_control_fn)

    p_comp = dim_sub.add_parser("components", help="partition JSON at one scale")
    p_comp.add_argument("--space", required=True)
    p_comp.add_argument("--s", type=int, required=True)
    p_comp.add_argument("--out", default=None)
    p_comp.set_defaults(func=cmd_components)

    p_env = dim_sub.add_parser("envelopes", help="CSV rows 't,lo,hi'")
    p_env.add_argument("--a", required=True, help="analytic | word | config.json:limit | config.json:stage:<i>")
    p_env.add_argument("--b", required=True)
    p_env.add_argument("--radius", type=int, required=True)
    p_env.add_argument("--group", default="Z")
    p_env.add_argument("--d", type=int, default=None)
    p_env.add_argument("--cache-dir", default=None)
    p_env.add_argument("--out", default=None)
    p_env.set_defaults(func=cmd_envelopes)

    p_cache = sub.add_parser("cache", help="inspect or clear the cache directory")
    cache_sub = p_cache.add_subparsers(dest="cache_cmd", required=True)
    for name in ("inspect", "clear"):
        p = cache_sub.add_parser(name)
        p.add_argument("--cache-dir", required=True)
        p.set_defaults(func=cmd_cache)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CacheFormatError as exc:
        print(f"cache error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceededError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except TowerVerificationError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
