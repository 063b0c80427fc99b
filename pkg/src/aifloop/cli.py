"""Command line: seeded batch simulation, blanket detection, live service.

Subcommands: simulate (number entry), dyad, blanket, serve, validate-model.
Config comes from a strict-keyed JSON file (--config) with flag overrides;
unknown keys are rejected. Batch outputs are a pure function of
(config, seeds): per-step wall-clock is written as 0 unless --timings is
given, rows are emitted in seed order regardless of --workers, and floats
are serialized with shortest round-trip repr.

Exit codes: 0 success, 2 configuration error, 3 one or more episodes failed.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .agent import Agent, AgentConfig, run_episode
from .blanket import SampleTable, grow_shrink
from .envs.dyad import DyadConfig, run_dyad
from .envs.number_entry import NumberEntryConfig, build_model, run_entry_episode
from .genmodel import ModelError, load_model
from .probmath import make_rng


class ConfigError(ValueError):
    pass


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def read_csv(path: Path) -> tuple[list[str], list[dict]]:
    """Parse a batch CSV back into typed row dicts (the write_csv inverse)."""

    def _parse(v: str):
        if v == "":
            return None
        if v in ("true", "false"):
            return v == "true"
        try:
            return int(v)
        except ValueError:
            pass
        try:
            return float(v)
        except ValueError:
            return v

    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, (_parse(v) for v in line.split(",")))) for line in lines[1:]]
    return header, rows


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config root must be an object, got {type(doc).__name__}")
    return doc


def _parse_seeds(spec) -> list[int]:
    if spec is None:
        return list(range(10))
    if isinstance(spec, int):
        seeds = list(range(spec))
    elif isinstance(spec, list):
        seeds = [int(s) for s in spec]
    elif isinstance(spec, str):
        parts = [p for p in spec.split(",") if p.strip()]
        if len(parts) == 1:
            seeds = list(range(int(parts[0])))
        else:
            seeds = [int(p) for p in parts]
    else:
        raise ConfigError(f"cannot parse seeds from {spec!r}")
    if not seeds:
        raise ConfigError("seed list is empty")
    return seeds


_BATCH_KEYS = {"scenario", "seeds", "out", "diagnostic", "workers", "timings"}


def merge_config(scenario: str, allowed: set[str], file_doc: dict, flag_values: dict) -> dict:
    """File values first, flags override; any unknown key is an error."""
    declared = file_doc.get("scenario")
    if declared is not None and declared != scenario:
        raise ConfigError(f"config file declares scenario {declared!r} but the {scenario} command was invoked")
    merged = {}
    for key, value in file_doc.items():
        if key in _BATCH_KEYS:
            continue
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} for scenario {scenario}; allowed: {sorted(allowed)}")
        merged[key] = value
    for key, value in flag_values.items():
        if value is None:
            continue
        if key not in allowed:
            raise ConfigError(f"unknown flag {key!r} for scenario {scenario}")
        merged[key] = value
    return merged


def _entry_row(seed: int, cfg: NumberEntryConfig, outcome, timings: bool) -> list:
    return [
        seed,
        cfg.N,
        cfg.epsilon_true,
        outcome.queries,
        outcome.committed,
        outcome.correct,
        outcome.cum_surprise,
        outcome.ms if timings else 0.0,
    ]


def _entry_job(cfg_kwargs: dict, seed: int, diagnostic: bool):
    cfg = NumberEntryConfig(**cfg_kwargs)
    model = build_model(cfg)
    agent_cfg = None
    if diagnostic:
        from .envs.number_entry import derive_seeds, entry_agent_config

        agent_cfg = entry_agent_config(cfg, seed=derive_seeds(seed)[1], diagnostic=True)
    trace, outcome = run_entry_episode(cfg, target="random", seed=seed, model=model, agent_cfg=agent_cfg)
    return trace, outcome


def _dyad_job(cfg_kwargs: dict, seed: int):
    cfg = DyadConfig(**{**cfg_kwargs, "seed": seed})
    return run_dyad(cfg)


def _run_parallel(jobs, func, workers: int):
    """Evaluate func over jobs, returning results in job order."""
    if workers <= 1:
        return [func(*j) for j in jobs]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(func, *j) for j in jobs]
        return [f.result() for f in futures]


ENTRY_CSV_HEADER = ["seed", "N", "eps_true", "queries", "committed", "correct", "cum_surprise", "ms"]
DYAD_CSV_HEADER = ["seed", "M", "g", "aligned", "steps_to_goal", "frac_goal_q4", "surprise_user", "surprise_system"]
CUSTOM_CSV_HEADER = ["seed", "steps", "cum_surprise", "ms"]


def cmd_simulate(args) -> int:
    file_doc = _load_config_file(args.config)
    allowed = {f.name for f in dataclasses.fields(NumberEntryConfig)}
    flags = {
        "N": args.N,
        "epsilon_true": args.eps_true,
        "epsilon_grid": tuple(float(x) for x in args.grid.split(",")) if args.grid else None,
        "horizon": args.horizon,
        "precision": args.precision,
        "max_steps": args.max_steps,
    }
    params = merge_config("number_entry", allowed, file_doc, flags)
    if "epsilon_grid" in params and isinstance(params["epsilon_grid"], list):
        params["epsilon_grid"] = tuple(params["epsilon_grid"])
    try:
        cfg = NumberEntryConfig(**params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    seeds = _parse_seeds(args.seeds if args.seeds is not None else file_doc.get("seeds"))
    out_dir = Path(args.out or file_doc.get("out", "."))
    out_dir.mkdir(parents=True, exist_ok=True)

    jobs = [(params, seed, args.diagnostic) for seed in seeds]
    failures, rows = [], []
    results = []
    try:
        results = _run_parallel(jobs, _entry_job, args.workers)
    except Exception:
        # fall back to sequential so one bad episode doesn't sink the batch
        results = []
        for job in jobs:
            try:
                results.append(_entry_job(*job))
            except Exception as exc:  # noqa: BLE001 - recorded, batch continues
                results.append(exc)
    for seed, res in zip(seeds, results):
        if isinstance(res, Exception):
            failures.append((seed, res))
            continue
        trace, outcome = res
        rows.append(_entry_row(seed, cfg, outcome, args.timings))
        if args.diagnostic:
            (out_dir / f"number_entry_trace_{seed}.jsonl").write_text(
                trace.to_jsonl(include_timings=args.timings)
            )
    write_csv(out_dir / "number_entry.csv", ENTRY_CSV_HEADER, rows)
    ok = [r for r in rows if r[5]]
    print(
        f"number_entry: {len(rows)} episodes, accuracy {len(ok) / len(rows):.3f}, "
        f"mean queries {np.mean([r[3] for r in rows]):.2f} -> {out_dir / 'number_entry.csv'}"
    )
    for seed, exc in failures:
        print(f"episode seed={seed} failed: {exc}", file=sys.stderr)
    return 3 if failures else 0


def cmd_dyad(args) -> int:
    file_doc = _load_config_file(args.config)
    allowed = {f.name for f in dataclasses.fields(DyadConfig)}
    flags = {
        "M": args.M,
        "goal": args.goal,
        "z0": args.z0,
        "max_rounds": args.max_rounds,
        "system_mode": args.system_mode,
        "aligned": None if args.misaligned is None else (not args.misaligned),
        "user_precision": args.user_precision,
    }
    params = merge_config("dyad", allowed, file_doc, flags)
    if "goal" in params and params["goal"] != "random":
        params["goal"] = int(params["goal"])
    m_ring, z0 = params.get("M", 9), params.get("z0", 0)
    params.setdefault("goal", (z0 + m_ring // 2) % m_ring)  # diametral benchmark placement
    seeds = _parse_seeds(args.seeds if args.seeds is not None else file_doc.get("seeds"))
    out_dir = Path(args.out or file_doc.get("out", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        DyadConfig(**params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    jobs = [(params, seed) for seed in seeds]
    failures, rows = [], []
    if args.workers > 1:
        results = _run_parallel(jobs, _dyad_job, args.workers)
    else:
        results = []
        for job in jobs:
            try:
                results.append(_dyad_job(*job))
            except Exception as exc:  # noqa: BLE001 - recorded, batch continues
                results.append(exc)
    for seed, res in zip(seeds, results):
        if isinstance(res, Exception):
            failures.append((seed, res))
            continue
        _, s = res
        rows.append(
            [seed, s.M, s.goal, s.aligned, s.steps_to_goal, s.frac_goal_q4, s.surprise_user, s.surprise_system]
        )
    write_csv(out_dir / "dyad.csv", DYAD_CSV_HEADER, rows)
    med = np.median([r[4] for r in rows]) if rows else float("nan")
    print(f"dyad: {len(rows)} episodes, median steps_to_goal {med} -> {out_dir / 'dyad.csv'}")
    for seed, exc in failures:
        print(f"episode seed={seed} failed: {exc}", file=sys.stderr)
    return 3 if failures else 0


def cmd_blanket(args) -> int:
    table = SampleTable.from_csv(args.data)
    if args.window_rows:
        # per-window blanket sets: slide over the rows so an analyst can watch
        # the boundary move; interpretation stays with the analyst
        step = args.window_step or args.window_rows
        windows = []
        start = 0
        while start + args.window_rows <= table.num_rows:
            sliced = SampleTable(table.names, table.data[start : start + args.window_rows])
            result = grow_shrink(
                sliced, args.target, alpha=args.alpha, rng=make_rng(args.seed), num_permutations=args.permutations
            )
            windows.append({"rows": [start, start + args.window_rows], **result.to_dict()})
            start += step
        doc = json.dumps({"target": args.target, "windows": windows})
    else:
        result = grow_shrink(
            table, args.target, alpha=args.alpha, rng=make_rng(args.seed), num_permutations=args.permutations
        )
        doc = result.to_json()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"blanket_{args.target}.json").write_text(doc + "\n")
        print(f"blanket({args.target}) -> {out / f'blanket_{args.target}.json'}")
    else:
        print(doc)
    return 0


def cmd_validate_model(args) -> int:
    try:
        load_model(args.model)
    except ModelError as exc:
        print(f"INVALID: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read model: {exc}", file=sys.stderr)
        return 2
    print("OK")
    return 0


def cmd_serve(args) -> int:
    from .service import ServiceConfig, run_service

    run_service(ServiceConfig(host=args.host, port=args.port, static_dir=args.static))
    return 0


class _SampledModelEnv:
    """Environment drawn from a generative model itself: the true state
    follows B under the agent's actions and emits through A."""

    def __init__(self, model, rng):
        self.model = model
        self.rng = rng
        self.state = None

    def reset(self):
        self.state = int(self.rng.choice(self.model.num_states, p=self.model.D.weights))
        if self.model.A.per_action:
            return None
        return int(self.rng.choice(self.model.num_obs, p=self.model.A.table[:, self.state]))

    def step(self, action: int):
        p_next = self.model.B.stack[action][:, self.state]
        self.state = int(self.rng.choice(self.model.num_states, p=p_next))
        table = self.model.A.for_action(action if self.model.A.per_action else None)
        obs = int(self.rng.choice(self.model.num_obs, p=table[:, self.state]))
        return obs, False


def cmd_run_model(args) -> int:
    model = load_model(args.model)
    seeds = _parse_seeds(args.seeds)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    rows, failures = [], []
    for seed in seeds:
        try:
            agent = Agent(
                model,
                AgentConfig(horizon=args.horizon, precision=args.precision, seed=seed, diagnostic=args.diagnostic),
            )
            env = _SampledModelEnv(model, make_rng(seed))
            trace = run_episode(agent, env, args.max_steps)
            rows.append([seed, len(trace.steps), trace.cumulative_surprise(), 0.0])
            if args.diagnostic:
                (out_dir / f"custom_trace_{seed}.jsonl").write_text(trace.to_jsonl(include_timings=args.timings))
        except Exception as exc:  # noqa: BLE001
            failures.append((seed, exc))
    write_csv(out_dir / "custom_model.csv", CUSTOM_CSV_HEADER, rows)
    print(f"custom model: {len(rows)} episodes -> {out_dir / 'custom_model.csv'}")
    for seed, exc in failures:
        print(f"episode seed={seed} failed: {exc}", file=sys.stderr)
    return 3 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="aifloop",
        description="Exact discrete active inference: simulators, blanket detection, live sessions.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="number-entry episodes over the noisy binary channel")
    sim.add_argument("--config", help="JSON config file (strict keys)")
    sim.add_argument("--seeds", help="count or comma-separated list")
    sim.add_argument("--out", help="output directory")
    sim.add_argument("--diagnostic", action="store_true", help="write per-episode JSONL traces")
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--timings", action="store_true", help="record real wall-clock in outputs")
    sim.add_argument("--N", type=int)
    sim.add_argument("--eps-true", dest="eps_true", type=float)
    sim.add_argument("--grid", help="comma-separated noise grid, e.g. 0,0.1,0.2,0.3")
    sim.add_argument("--horizon", type=int)
    sim.add_argument("--precision", type=float)
    sim.add_argument("--max-steps", dest="max_steps", type=int)
    sim.set_defaults(func=cmd_simulate)

    dy = sub.add_parser("dyad", help="two-agent goal relay on a ring")
    dy.add_argument("--config", help="JSON config file (strict keys)")
    dy.add_argument("--seeds", help="count or comma-separated list")
    dy.add_argument("--out", help="output directory")
    dy.add_argument("--workers", type=int, default=1)
    dy.add_argument("--M", type=int)
    dy.add_argument("--goal", help='ring index or "random" (default: diametral from z0)')
    dy.add_argument("--z0", type=int)
    dy.add_argument("--max-rounds", dest="max_rounds", type=int)
    dy.add_argument("--system-mode", dest="system_mode", choices=["aif", "random", "stay"])
    dy.add_argument("--misaligned", action="store_const", const=True)
    dy.add_argument("--user-precision", dest="user_precision", type=float)
    dy.set_defaults(func=cmd_dyad)

    bl = sub.add_parser(
        "blanket",
        help="Markov blanket of a target column from an integer-coded CSV "
        "(discretize continuous traces upstream, e.g. quantile binning)",
    )
    bl.add_argument("--data", required=True, help="CSV with a header of variable names")
    bl.add_argument("--target", required=True)
    bl.add_argument("--alpha", type=float, default=0.05)
    bl.add_argument("--permutations", type=int, default=200)
    bl.add_argument("--seed", type=int, default=0)
    bl.add_argument("--window-rows", dest="window_rows", type=int,
                    help="slide a fixed-size row window and report one blanket per window")
    bl.add_argument("--window-step", dest="window_step", type=int,
                    help="window stride (default: the window size)")
    bl.add_argument("--out", help="output directory (default: print JSON)")
    bl.set_defaults(func=cmd_blanket)

    vm = sub.add_parser("validate-model", help="check a generative-model JSON document")
    vm.add_argument("model")
    vm.set_defaults(func=cmd_validate_model)

    rm = sub.add_parser("run-model", help="simulate an agent inside its own custom model file")
    rm.add_argument("model")
    rm.add_argument("--seeds", help="count or comma-separated list")
    rm.add_argument("--out")
    rm.add_argument("--horizon", type=int, default=1)
    rm.add_argument("--precision", type=float, default=1.0)
    rm.add_argument("--max-steps", dest="max_steps", type=int, default=50)
    rm.add_argument("--diagnostic", action="store_true")
    rm.add_argument("--timings", action="store_true")
    rm.set_defaults(func=cmd_run_model)

    sv = sub.add_parser("serve", help="live number-entry session service (HTTP + WebSocket)")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8700)
    sv.add_argument("--static", help="directory of built web client assets")
    sv.set_defaults(func=cmd_serve)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
