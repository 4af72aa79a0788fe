"""Compare opportunistic play with rate-constrained power minimization."""
import tempfile

from opcgame.experiments import ExperimentSpec, run_experiment

with tempfile.TemporaryDirectory() as out:
    res = run_experiment(ExperimentSpec("fig3_opc_vs_powermin", seeds=[0, 1, 2], out_dir=out))
    for o in res.outcomes:
        print(f"seed {o.seed}: power gap {o.comparison.power_gap_pct[-1]:+.1f}%  "
              f"rate gap {o.comparison.rate_gap_pct[-1]:+.1f}%")
    print("ensemble:", res.manifest["ensemble"])
