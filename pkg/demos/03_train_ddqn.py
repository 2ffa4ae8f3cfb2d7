"""
Training the DDQN controller
============================

Train on one fixed layout, watch the greedy evaluation return, and compare
the retained policy against the baselines. Takes about ten minutes on one core.
"""

import sys

import numpy as np

from uavsem import experiments as ex
from uavsem.audit import audit_trace

episodes = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
cfg = ex.field_scenario(device_bandwidth=25e3)


def progress(row):
    if "eval_return" in row and row["episode"] % 100 == 0:
        print(f"episode {row['episode']:5d}  eps {row['epsilon']:.2f}  "
              f"eval PSNR {row['eval_mean_psnr_all']:5.2f}  goal {row['eval_reached_goal']}")


agent, curve, cfg = ex.train_agent(cfg, seed=0, episodes=episodes, dtype=np.float32, on_episode=progress)

# %%
# The retained parameters are the best greedy evaluation seen during training
learned = ex.run_agent(cfg, agent)
print(f"kept parameters from episode {agent.best_episode}")
for name, o in [("ddqn", learned)] + [(p, ex.run_baseline(cfg, p, 8.9)) for p in ("greedy", "tsp")]:
    print(f"{name:6s} all {o.mean_psnr_all:5.2f} dB  visited {o.visited_count}  goal {o.reached_goal}")

# %%
# The learned trajectory obeys the kinematics exactly and serves each device once
report = audit_trace(learned.trace)
print("audit:", "clean" if report.ok else report.violations)
agent.save("demo_agent.ckpt", scenario=cfg)
