"""Technical-evaluation harness: configurations, trials, baselines, reports.

The suite mirrors a fixed factorial layout: menu sizes x starting designs x
Zipf-distributed click histories, one simulated user per cell.  Each trial
plans one adaptation step sequence and records whether the predicted
selection time improved.  Results go to a CSV (one row per trial) and a
summary JSON; both are byte-identical across runs for the same configuration
and seed, wall-time fields aside.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from dataclasses import asdict, dataclass, replace
from typing import Callable, Iterable

import numpy as np

from .adaptation import apply_adaptation, simulate_session, transition
from .menu import (
    SEPARATOR,
    Click,
    ClickLog,
    InteractionState,
    MenuDesign,
    AssociationMatrix,
    UserState,
)
from .planner import PlannerConfig, plan
from .user_model import ModelParams, avg_selection_time, interest
from .value_net import ValueModel

# Common-word categories used to label generated menus; categories define
# the pairwise associations.
WORD_CATEGORIES: dict[str, tuple[str, ...]] = {
    "animals": ("cat", "dog", "horse", "sheep", "otter", "eagle", "trout", "moose"),
    "furniture": ("chair", "table", "sofa", "shelf", "stool", "dresser", "bench", "desk"),
    "vegetables": ("carrot", "potato", "onion", "leek", "pepper", "beet", "celery", "radish"),
    "clothing": ("gloves", "scarf", "jacket", "boots", "shirt", "belt", "socks", "hat"),
    "fruits": ("apple", "pear", "plum", "grape", "mango", "cherry", "melon", "fig"),
    "tools": ("hammer", "wrench", "pliers", "drill", "saw", "chisel", "level", "clamp"),
}

SESSION_WINDOW = 20
HISTORY_CLICKS = 60  # three sessions of twenty selections


@dataclass(frozen=True)
class EvalConfig:
    menu_sizes: tuple[int, ...] = (5, 10, 15)
    designs_per_size: int = 4
    histories_per_size: int = 8
    zipf_shape: float = 1.5
    history_clicks: int = HISTORY_CLICKS
    iterations: int = 400
    horizon: int = 4
    objective: str = "average"
    reward_source: str = "simulation"
    seed: int = 0
    session_length: int = SESSION_WINDOW
    discount: float | None = None  # None: the planner default

    def __post_init__(self):
        if not self.menu_sizes or min(self.menu_sizes) < 1:
            raise ValueError("menu sizes must be positive")
        if self.designs_per_size < 1 or self.histories_per_size < 1:
            raise ValueError("counts must be >= 1")
        if self.zipf_shape <= 0:
            raise ValueError("zipf shape must be positive")

    @property
    def n_trials(self) -> int:
        return len(self.menu_sizes) * self.designs_per_size * self.histories_per_size

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]


@dataclass
class TrialResult:
    config_id: str
    menu_size: int
    design_index: int
    history_index: int
    success: bool
    predicted_before: float
    predicted_after: float
    n_adaptations: int
    adaptations: str  # JSON list
    wall_time_s: float
    error: str = ""


def zipf_weights(n_items: int, shape: float) -> np.ndarray:
    """Rank-frequency probabilities: p(rank r) proportional to r^-shape."""
    if n_items < 1:
        raise ValueError("n_items must be >= 1")
    ranks = np.arange(1, n_items + 1, dtype=float)
    weights = ranks**-shape
    return weights / weights.sum()


def zipf_history(
    design: MenuDesign, shape: float, n_clicks: int, rng: np.random.Generator
) -> ClickLog:
    """Click log sampled from a Zipf law with a random rank-to-label mapping."""
    labels = design.items
    probs = zipf_weights(len(labels), shape)
    order = rng.permutation(len(labels))
    draws = rng.choice(len(labels), size=n_clicks, p=probs)
    item_index = design.item_index
    clicks = []
    for t, rank in enumerate(draws, start=1):
        label = labels[order[rank]]
        clicks.append(Click(label, item_index[label], t))
    return ClickLog(tuple(clicks))


def sample_design(size: int, rng: np.random.Generator) -> MenuDesign:
    """Flat menu of ``size`` common labels grouped into small categories.

    Labels come from distinct word pools, a few per category, so every menu
    has several semantic groups to discover; the starting arrangement is a
    random permutation with no separators.
    """
    names = sorted(WORD_CATEGORIES)
    chunks: list[int] = []
    remaining = size
    pools_left = len(names)
    while remaining > 0:
        low = max(2 if remaining > 1 else 1, -(-remaining // pools_left))
        high = min(5, remaining)
        if not chunks and size >= 4:  # always give a menu at least two categories
            high = min(high, size - 2)
        take = int(rng.integers(low, high + 1)) if high > low else high
        if remaining - take == 1:  # avoid a trailing singleton category
            take = take + 1 if take + 1 <= remaining else take - 1
        chunks.append(take)
        remaining -= take
        pools_left -= 1
    pool_order = rng.permutation(len(names))
    chosen_labels: list[str] = []
    categories: list[tuple[str, ...]] = []
    for chunk, name_idx in zip(chunks, pool_order):
        pool = WORD_CATEGORIES[names[name_idx]]
        picked = [pool[i] for i in sorted(rng.choice(len(pool), size=chunk, replace=False))]
        chosen_labels.extend(picked)
        categories.append(tuple(picked))
    arrangement = [chosen_labels[i] for i in rng.permutation(len(chosen_labels))]
    association = AssociationMatrix.from_categories(arrangement, categories)
    return MenuDesign(tuple(arrangement), association)


def build_state(
    design: MenuDesign, log: ClickLog, window: int = SESSION_WINDOW, decay: float = 0.5
) -> InteractionState:
    now = (log.clicks[-1].time + 1) if log.clicks else 1
    user = UserState(log, now, interest(log, window, design.items), decay)
    return InteractionState.fresh(design, user)


def make_state_sampler(
    menu_sizes: tuple[int, ...] = (5, 10, 15),
    zipf_shape: float = 1.5,
    history_clicks: int = HISTORY_CLICKS,
    window: int = SESSION_WINDOW,
) -> Callable[[np.random.Generator], InteractionState]:
    """Random initial states matching the evaluation suite's distribution."""

    def sampler(rng: np.random.Generator) -> InteractionState:
        size = int(menu_sizes[int(rng.integers(len(menu_sizes)))])
        design = sample_design(size, rng)
        log = zipf_history(design, zipf_shape, history_clicks, rng)
        return build_state(design, log, window)

    return sampler


def _trial_rng(config: EvalConfig, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([config.seed, *key]))


def iter_states(config: EvalConfig) -> Iterable[tuple[str, int, int, int, InteractionState]]:
    """All factorial trial states, in the fixed suite order."""
    for size_idx, size in enumerate(config.menu_sizes):
        for d_idx in range(config.designs_per_size):
            design = sample_design(size, _trial_rng(config, 1, size_idx, d_idx))
            for h_idx in range(config.histories_per_size):
                log = zipf_history(
                    design,
                    config.zipf_shape,
                    config.history_clicks,
                    _trial_rng(config, 2, size_idx, h_idx),
                )
                config_id = f"s{size}-d{d_idx}-h{h_idx}"
                yield config_id, size, d_idx, h_idx, build_state(design, log)


def run_trial(
    config_id: str,
    size: int,
    d_idx: int,
    h_idx: int,
    state: InteractionState,
    planner_config: PlannerConfig,
    params: ModelParams,
    value_fn=None,
) -> TrialResult:
    from .adaptation import adaptation_to_json

    start = time.perf_counter()
    result = plan(state, planner_config, params, value_fn)
    wall = time.perf_counter() - start
    after_design = state.design
    for adaptation in result.chosen:
        after_design = apply_adaptation(after_design, adaptation)
    # steady-state comparison: same user, each design at its own expected layout
    before_time = avg_selection_time(state, params)
    after_time = avg_selection_time(
        InteractionState.fresh(after_design, state.user), params
    )
    return TrialResult(
        config_id=config_id,
        menu_size=size,
        design_index=d_idx,
        history_index=h_idx,
        success=after_time < before_time,
        predicted_before=before_time,
        predicted_after=after_time,
        n_adaptations=len(result.chosen),
        adaptations=json.dumps(
            [adaptation_to_json(a) for a in result.chosen], separators=(",", ":")
        ),
        wall_time_s=wall,
    )


def run_suite(
    config: EvalConfig,
    params: ModelParams,
    model: ValueModel | None = None,
    out_dir=None,
    progress: Callable[[TrialResult], None] | None = None,
    horizon: int | None = None,
) -> tuple[list[TrialResult], dict]:
    """Run every trial sequentially and aggregate the success rate."""
    value_fn = None
    if config.reward_source == "value-net":
        if model is None:
            raise ValueError("value-net suite needs a trained model")
        value_fn = model.value_fn(window=config.session_length)
    rows: list[TrialResult] = []
    for trial_index, (config_id, size, d_idx, h_idx, state) in enumerate(
        iter_states(config)
    ):
        overrides = {} if config.discount is None else {"discount": config.discount}
        planner_config = PlannerConfig(
            iterations=config.iterations,
            horizon=horizon if horizon is not None else config.horizon,
            objective=config.objective,
            reward_source=config.reward_source,
            rng_seed=int(
                np.random.SeedSequence([config.seed, 3, trial_index]).generate_state(1)[0]
            ),
            session_length=config.session_length,
            **overrides,
        )
        try:
            row = run_trial(
                config_id, size, d_idx, h_idx, state, planner_config, params, value_fn
            )
        except Exception as exc:  # recorded, not fatal
            row = TrialResult(
                config_id, size, d_idx, h_idx, False, float("nan"), float("nan"),
                0, "[]", 0.0, error=f"{type(exc).__name__}: {exc}",
            )
        rows.append(row)
        if progress is not None:
            progress(row)
    summary = summarize(config, rows)
    if out_dir is not None:
        write_results(rows, summary, out_dir)
    return rows, summary


def summarize(config: EvalConfig, rows: list[TrialResult]) -> dict:
    completed = [r for r in rows if not r.error]
    per_size: dict[str, dict] = {}
    for size in config.menu_sizes:
        size_rows = [r for r in completed if r.menu_size == size]
        per_size[str(size)] = {
            "trials": len(size_rows),
            "success_rate": (
                sum(r.success for r in size_rows) / len(size_rows) if size_rows else None
            ),
        }
    return {
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "n_trials": len(rows),
        "n_completed": len(completed),
        "n_failed": len(rows) - len(completed),
        "success_rate": (
            sum(r.success for r in completed) / len(completed) if completed else None
        ),
        "per_size": per_size,
        "mean_wall_time_s": (
            sum(r.wall_time_s for r in completed) / len(completed) if completed else None
        ),
    }


CSV_COLUMNS = (
    "config_id",
    "menu_size",
    "design_index",
    "history_index",
    "success",
    "predicted_before",
    "predicted_after",
    "n_adaptations",
    "adaptations",
    "wall_time_s",
    "error",
)


def rows_to_csv(rows: list[TrialResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow(
            [
                r.config_id,
                r.menu_size,
                r.design_index,
                r.history_index,
                str(r.success).lower(),
                repr(r.predicted_before),
                repr(r.predicted_after),
                r.n_adaptations,
                r.adaptations,
                repr(r.wall_time_s),
                r.error,
            ]
        )
    return buf.getvalue()


def write_results(rows: list[TrialResult], summary: dict, out_dir) -> None:
    import pathlib

    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trials.csv").write_text(rows_to_csv(rows))
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Baseline policies
# ---------------------------------------------------------------------------


def frequency_adapted(design: MenuDesign, log: ClickLog) -> MenuDesign:
    """Sort items by descending click count; ties keep prior order, separators stay put."""
    counts: dict[str, int] = {}
    for c in log.clicks:
        counts[c.label] = counts.get(c.label, 0) + 1
    ordered = sorted(design.items, key=lambda label: -counts.get(label, 0))
    it = iter(ordered)
    entries = tuple(e if e == SEPARATOR else next(it) for e in design.entries)
    return design.with_entries(entries)


def baseline_adapted(policy: str, state: InteractionState) -> MenuDesign:
    if policy == "static":
        return state.design
    if policy == "frequency":
        return frequency_adapted(state.design, state.user.log)
    raise ValueError(f"unknown baseline policy {policy!r}")


def run_baseline(
    policy: str, config: EvalConfig, params: ModelParams, out_dir=None
) -> tuple[list[TrialResult], dict]:
    rows = []
    for config_id, size, d_idx, h_idx, state in iter_states(config):
        start = time.perf_counter()
        after_design = baseline_adapted(policy, state)
        wall = time.perf_counter() - start
        before_time = avg_selection_time(state, params)
        after_state = InteractionState(after_design, state.user, state.expected_design)
        after_time = avg_selection_time(after_state, params)
        changed = after_design.entries != state.design.entries
        rows.append(
            TrialResult(
                config_id, size, d_idx, h_idx,
                success=after_time < before_time,
                predicted_before=before_time,
                predicted_after=after_time,
                n_adaptations=1 if changed else 0,
                adaptations=json.dumps({"policy": policy}),
                wall_time_s=wall,
            )
        )
    summary = summarize(config, rows)
    summary["policy"] = policy
    if out_dir is not None:
        write_results(rows, summary, out_dir)
    return rows, summary


# ---------------------------------------------------------------------------
# Simulated-user A/B comparison: planner vs frequency vs static
# ---------------------------------------------------------------------------

AB_POLICIES = ("mcts", "frequency", "static")


def run_ab(
    config: EvalConfig,
    params: ModelParams,
    blocks: int = 2,
    model: ValueModel | None = None,
    out_path=None,
) -> dict:
    """Run each policy over simulated session blocks and compare final times.

    Every policy starts from the same state per configuration; between blocks
    the policy adapts the menu and the simulated user completes one session.
    """
    value_fn = model.value_fn(config.session_length) if model is not None else None
    results: list[dict] = []
    for trial_index, (config_id, size, d_idx, h_idx, state0) in enumerate(
        iter_states(config)
    ):
        per_policy: dict[str, float] = {}
        for policy in AB_POLICIES:
            state = state0
            for block in range(blocks):
                # common random numbers: every policy faces the same simulated
                # user stream, so identical states stay exactly comparable
                rng = np.random.default_rng(
                    np.random.SeedSequence([config.seed, 4, trial_index, block])
                )
                if policy == "mcts":
                    overrides = (
                        {} if config.discount is None else {"discount": config.discount}
                    )
                    planner_config = PlannerConfig(
                        iterations=config.iterations,
                        horizon=config.horizon,
                        objective=config.objective,
                        reward_source=config.reward_source,
                        rng_seed=int(
                            np.random.SeedSequence(
                                [config.seed, 5, trial_index, block]
                            ).generate_state(1)[0]
                        ),
                        session_length=config.session_length,
                        **overrides,
                    )
                    outcome = plan(state, planner_config, params, value_fn)
                    for adaptation in outcome.chosen:
                        state = transition(state, replace(adaptation, visible=False))
                else:
                    adapted = baseline_adapted(policy, state)
                    state = InteractionState(adapted, state.user, state.expected_design)
                state = simulate_session(state, config.session_length, rng)
            per_policy[policy] = avg_selection_time(state, params)
        results.append(
            {
                "config_id": config_id,
                "menu_size": size,
                "design_index": d_idx,
                "history_index": h_idx,
                **{f"{p}_time": per_policy[p] for p in AB_POLICIES},
            }
        )
    n = len(results)
    summary = {
        "config_hash": config.config_hash(),
        "blocks": blocks,
        "n_configs": n,
        "results": results,
        "mean_time": {p: sum(r[f"{p}_time"] for r in results) / n for p in AB_POLICIES},
        "mcts_beats_static_rate": sum(
            r["mcts_time"] <= r["static_time"] for r in results
        )
        / n,
        "mcts_beats_frequency_rate": sum(
            r["mcts_time"] <= r["frequency_time"] for r in results
        )
        / n,
    }
    if out_path is not None:
        import pathlib

        pathlib.Path(out_path).write_text(
            json.dumps(summary, sort_keys=True, indent=2) + "\n"
        )
    return summary
