"""Command-line entry point.

Subcommands: ``plan`` (one-shot adaptation for a menu + history), ``eval``
(the factorial evaluation suite), ``baseline`` (static / frequency
comparators), ``ab`` (simulated-user comparison of the three policies),
``gen-data`` and ``train`` (value network), and ``serve`` (HTTP session
service).  All primary outputs are deterministic for fixed inputs and seed;
only wall-time fields vary between runs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .harness import (
    EvalConfig,
    make_state_sampler,
    run_ab,
    run_baseline,
    run_suite,
)
from .menu import Click, ClickLog, parse_design
from .planner import OBJECTIVES, PlannerConfig, plan
from .user_model import ModelParams
from . import harness, value_net
from .value_net import TrainConfig, generate_training_data, load_dataset, load_model, save_dataset, save_model


def _add_params_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("model constants")
    group.add_argument("--params-file", help="JSON file with model constants")
    group.add_argument("--delta", type=float)
    group.add_argument("--t-c", dest="t_c", type=float)
    group.add_argument("--t-trail", dest="t_trail", type=float)
    group.add_argument("--theta", type=float)
    group.add_argument("--a-p", dest="a_p", type=float)
    group.add_argument("--b-p", dest="b_p", type=float)
    group.add_argument("--n-local-flat", dest="n_local_flat", type=int)


def _params_from_args(args) -> ModelParams:
    params = ModelParams.from_file(args.params_file) if args.params_file else ModelParams()
    return params.with_overrides(
        delta=args.delta,
        t_c=args.t_c,
        t_trail=args.t_trail,
        theta=args.theta,
        a_p=args.a_p,
        b_p=args.b_p,
        n_local_flat=args.n_local_flat,
    )


def _add_eval_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--sizes", default="5,10,15", help="comma-separated menu sizes")
    parser.add_argument("--designs", type=int, default=4)
    parser.add_argument("--histories", type=int, default=8)
    parser.add_argument("--shape", type=float, default=1.5, help="Zipf shape")
    parser.add_argument("--history-clicks", type=int, default=60)
    parser.add_argument("--iterations", type=int, default=400)
    parser.add_argument("--horizon", type=int, default=4)
    parser.add_argument("--objective", choices=OBJECTIVES, default="average")
    parser.add_argument("--reward-source", choices=("simulation", "value-net"), default="simulation")
    parser.add_argument("--model", help="trained value model (for --reward-source value-net)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--session-length", type=int, default=20)
    parser.add_argument("--discount", type=float, default=None,
                        help="per-step reward discount inside the horizon")


def _eval_config_from_args(args) -> EvalConfig:
    return EvalConfig(
        menu_sizes=tuple(int(s) for s in args.sizes.split(",")),
        designs_per_size=args.designs,
        histories_per_size=args.histories,
        zipf_shape=args.shape,
        history_clicks=args.history_clicks,
        iterations=args.iterations,
        horizon=args.horizon,
        objective=args.objective,
        reward_source=args.reward_source,
        seed=args.seed,
        session_length=args.session_length,
        discount=args.discount,
    )


def _load_history(path: str, design) -> ClickLog:
    with open(path) as f:
        data = json.load(f)
    raw = data["clicks"] if isinstance(data, dict) else data
    clicks = []
    for t, entry in enumerate(raw, start=1):
        if isinstance(entry, str):
            label = entry
            location = design.item_index.get(label)
            if location is None:
                raise SystemExit(f"history label {label!r} not in menu")
            clicks.append(Click(label, location, t))
        else:
            clicks.append(Click(entry["label"], entry["location"], entry.get("time", t)))
    return ClickLog(tuple(clicks))


def cmd_plan(args) -> int:
    params = _params_from_args(args)
    design = parse_design(Path(args.menu).read_text())
    log = _load_history(args.history, design) if args.history else ClickLog()
    state = harness.build_state(design, log, window=args.window)
    model = load_model(args.model) if args.model else None
    if args.reward_source == "value-net" and model is None:
        raise SystemExit("--reward-source value-net requires --model")
    overrides = {} if args.discount is None else {"discount": args.discount}
    config = PlannerConfig(
        iterations=args.iterations,
        horizon=args.horizon,
        objective=args.objective,
        reward_source=args.reward_source,
        rng_seed=args.seed,
        session_length=args.session_length,
        **overrides,
    )
    result = plan(state, config, params, model.value_fn() if model else None)
    payload = json.dumps(result.to_json(), sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(payload + "\n")
    else:
        print(payload)
    return 0


def cmd_eval(args) -> int:
    params = _params_from_args(args)
    config = _eval_config_from_args(args)
    model = load_model(args.model) if args.model else None
    if config.reward_source == "value-net" and model is None:
        raise SystemExit("--reward-source value-net requires --model")
    progress = None
    if args.verbose:
        progress = lambda row: print(
            f"{row.config_id}: success={row.success} "
            f"before={row.predicted_before:.2f} after={row.predicted_after:.2f}",
            file=sys.stderr,
        )
    rows, summary = run_suite(config, params, model, out_dir=args.out_dir, progress=progress)
    print(
        f"trials={summary['n_trials']} completed={summary['n_completed']} "
        f"success_rate={summary['success_rate']:.4f}"
    )
    return 0 if summary["n_failed"] == 0 else 1


def cmd_baseline(args) -> int:
    params = _params_from_args(args)
    config = _eval_config_from_args(args)
    rows, summary = run_baseline(args.policy, config, params, out_dir=args.out_dir)
    print(
        f"policy={args.policy} trials={summary['n_trials']} "
        f"success_rate={summary['success_rate']:.4f}"
    )
    return 0


def cmd_ab(args) -> int:
    params = _params_from_args(args)
    config = _eval_config_from_args(args)
    model = load_model(args.model) if args.model else None
    summary = run_ab(config, params, blocks=args.blocks, model=model, out_path=args.out)
    means = summary["mean_time"]
    print(
        f"mcts={means['mcts']:.2f} frequency={means['frequency']:.2f} "
        f"static={means['static']:.2f} "
        f"mcts_beats_static={summary['mcts_beats_static_rate']:.3f}"
    )
    return 0


def cmd_gen_data(args) -> int:
    params = _params_from_args(args)
    sampler = make_state_sampler(
        menu_sizes=tuple(int(s) for s in args.sizes.split(",")),
        zipf_shape=args.shape,
        history_clicks=args.history_clicks,
    )
    rng = np.random.default_rng(args.seed)
    dataset = generate_training_data(
        sampler,
        rng,
        args.count,
        params,
        horizon=args.horizon,
        session_length=args.session_length,
    )
    save_dataset(dataset, args.out)
    print(f"wrote {len(dataset)} samples to {args.out}")
    return 0


def cmd_train(args) -> int:
    dataset = load_dataset(args.dataset)
    from .value_net import ArchConfig

    config = TrainConfig(
        learning_rate=args.learning_rate,
        decay=args.decay,
        max_epochs=args.epochs,
        patience=args.patience,
        batch_size=args.batch_size,
        val_fraction=args.val_fraction,
        dropout=args.dropout,
        input_dropout=args.input_dropout,
        seed=args.seed,
        arch=ArchConfig(
            head_width=args.head_width,
            trunk_width=args.trunk_width,
            tail_width=args.tail_width,
        ),
    )
    model = value_net.train(dataset, config)
    save_model(model, args.out)
    val = model.history["val_loss"]
    print(f"trained {len(val)} epochs, best val loss {min(val):.4f}, saved to {args.out}")
    return 0


def cmd_serve(args) -> int:
    from .server import serve

    params = _params_from_args(args)
    model = load_model(args.model) if args.model else None
    serve(args.host, args.port, args.log_dir, params, model)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="menuplan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="plan adaptations for one menu + history")
    p.add_argument("--menu", required=True, help="menu design JSON file")
    p.add_argument("--history", help="click history JSON file")
    p.add_argument("--window", type=int, default=20, help="interest window (clicks)")
    p.add_argument("--iterations", type=int, default=400)
    p.add_argument("--horizon", type=int, default=4)
    p.add_argument("--objective", choices=OBJECTIVES, default="average")
    p.add_argument("--reward-source", choices=("simulation", "value-net"), default="simulation")
    p.add_argument("--model")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--session-length", type=int, default=20)
    p.add_argument("--discount", type=float, default=None,
                   help="per-step reward discount inside the horizon")
    p.add_argument("--out", help="write the plan JSON here instead of stdout")
    _add_params_args(p)
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("eval", help="run the factorial evaluation suite")
    _add_eval_args(p)
    p.add_argument("--out-dir", default="eval-out")
    p.add_argument("--verbose", action="store_true")
    _add_params_args(p)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("baseline", help="run a non-planning comparator")
    p.add_argument("--policy", choices=("static", "frequency"), required=True)
    _add_eval_args(p)
    p.add_argument("--out-dir", default="baseline-out")
    _add_params_args(p)
    p.set_defaults(fn=cmd_baseline)

    p = sub.add_parser("ab", help="simulated-user A/B of planner vs baselines")
    _add_eval_args(p)
    p.add_argument("--blocks", type=int, default=2)
    p.add_argument("--out", default="ab-summary.json")
    _add_params_args(p)
    p.set_defaults(fn=cmd_ab)

    p = sub.add_parser("gen-data", help="generate value-network training data")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sizes", default="5,10,15")
    p.add_argument("--shape", type=float, default=1.5)
    p.add_argument("--history-clicks", type=int, default=60)
    p.add_argument("--horizon", type=int, default=4)
    p.add_argument("--session-length", type=int, default=20)
    _add_params_args(p)
    p.set_defaults(fn=cmd_gen_data)

    p = sub.add_parser("train", help="train the value network")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--learning-rate", type=float, default=0.001)
    p.add_argument("--decay", type=float, default=0.9)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--input-dropout", action="store_true",
                   help="also mask the input heads (default: hidden layers only)")
    p.add_argument("--head-width", type=int, default=64)
    p.add_argument("--trunk-width", type=int, default=128)
    p.add_argument("--tail-width", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--log-dir", default="sessions")
    p.add_argument("--model")
    _add_params_args(p)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
