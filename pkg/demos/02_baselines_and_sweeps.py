"""
Fixed-speed baselines and the bandwidth / velocity sweeps
=========================================================

Greedy nearest-device and exact path-TSP tours flown at a constant speed,
swept over device bandwidth and cruise speed across ten random layouts.
"""

from pathlib import Path

from uavsem import experiments as ex
from uavsem.plotting import sweep_svg, trajectory_svg

out = Path("demo_out")
out.mkdir(exist_ok=True)
cfg = ex.field_scenario(device_bandwidth=25e3)

# %%
# One layout, both tours at 8.9 m/s
runs = {p: ex.run_baseline(cfg, p, 8.9) for p in ("greedy", "tsp", "straight")}
for name, o in runs.items():
    print(f"{name:8s} visited {o.visited_count:2d}  all {o.mean_psnr_all:5.2f} dB  "
          f"visited-mean {o.mean_psnr_visited:5.2f} dB  goal {o.reached_goal}")
(out / "trajectories.svg").write_text(trajectory_svg([o.trace for o in runs.values()], list(runs)))

# %%
# Bandwidth sweep: more spectrum, more symbols per slot, higher quality
bw = ex.sweep(ex.field_scenario(), "bandwidth", ex.BANDWIDTH_GRID, ["greedy", "tsp"], replicates=10)
ex.write_sweep_csv(bw, out / "bandwidth.csv")
for p in bw:
    print(f"{p.policy:6s} {p.value / 1e3:4.0f} kHz  all {p.mean_psnr_all:5.2f} +- {p.std_psnr_all:4.2f}")

# %%
# Velocity sweep at 25 kHz. Slow flight cannot reach many devices (nor the
# goal below 4.8 m/s); fast flight leaves little dwell time per device.
vel = ex.sweep(cfg, "velocity", ex.VELOCITY_GRID, ["greedy", "tsp"], replicates=10)
ex.write_sweep_csv(vel, out / "velocity.csv")
for p in vel:
    print(f"{p.policy:6s} {p.value:4.1f} m/s  visited-mean {p.mean_psnr_visited:5.2f}  "
          f"all {p.mean_psnr_all:5.2f}  visits {p.visited_mean:3.1f}  goal {p.goal_rate:.1f}")

for name in ("bandwidth", "velocity"):
    rows = ex.read_sweep_csv(out / f"{name}.csv")
    for metric in ("mean_psnr_all", "mean_psnr_visited"):
        (out / f"{name}_{metric}.svg").write_text(sweep_svg(rows, metric))
print("figures in", out.resolve())
