"""Compare planning wall time across rollout horizons, with and without the net."""

import sys
import time

from menuplan.harness import EvalConfig, iter_states
from menuplan.planner import PlannerConfig, plan
from menuplan.user_model import ModelParams
from menuplan.value_net import load_model

if __name__ == "__main__":
    params = ModelParams()
    model = load_model(sys.argv[1]) if len(sys.argv) > 1 else None
    states = [s for s in iter_states(EvalConfig()) if s[1] == 15][:3]
    for source in ("simulation", "value-net") if model else ("simulation",):
        value_fn = model.value_fn() if source == "value-net" else None
        times = {}
        for depth in (4, 6, 8, 10):
            start = time.perf_counter()
            for i, (_, _, _, _, state) in enumerate(states):
                config = PlannerConfig(
                    iterations=400, horizon=depth, reward_source=source, rng_seed=i
                )
                plan(state, config, params, value_fn)
            times[depth] = time.perf_counter() - start
        print(source, {k: round(v, 2) for k, v in times.items()},
              f"ratio(10/4)={times[10]/times[4]:.2f}")
