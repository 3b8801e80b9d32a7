"""Tasks needed by each coordinate-selection rule on a heavy-tailed graph.

Run: python3 demos/scheduler_race.py
"""

import numpy as np

from localsolve import SCHEDULER_KINDS, GraphSpec, TerminationRule, bonacich_system, generate_graph, make_policy, run
from localsolve.solver import run_synchronous

rule = TerminationRule(1e-4)
tasks = {kind: [] for kind in SCHEDULER_KINDS}
tasks["synchronous"] = []
for seed in range(5):
    system = bonacich_system(generate_graph(GraphSpec("power_law_config", 500, exponent=1.5, seed=seed)))
    for kind in SCHEDULER_KINDS:
        tasks[kind].append(run(system, 0, make_policy(kind, system.G, 0, seed=seed), rule).tasks)
    tasks["synchronous"].append(run_synchronous(system, 0, rule)[0].tasks)

for kind, t in sorted(tasks.items(), key=lambda kv: np.median(kv[1])):
    print(f"{kind:26s} median tasks {np.median(t):8.0f}")
