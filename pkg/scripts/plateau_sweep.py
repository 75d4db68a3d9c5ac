"""Sweep the measurement budget and track the rescaled variance M*(dO)^2.

Writes one CSV row per (budget, seed) pair; the rescaled variance flattens
once the allocation reaches its 1/M steady state.

    python3 scripts/plateau_sweep.py --out plateau.csv --seeds 3
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from quditmeas.bayes import MCMCConfig
from quditmeas.engine import RunSettings, run_estimation
from quditmeas.observables import Observable
from quditmeas.paulis import PauliString, QuditRegister
from quditmeas.simulator import StateVector, expectation


def demo_problem():
    reg = QuditRegister((2, 2))
    obs = Observable(
        reg,
        [
            (1.0, PauliString(reg, ((0, 1), (0, 0)))),
            (0.8, PauliString(reg, ((0, 0), (0, 1)))),
            (0.6, PauliString(reg, ((0, 1), (0, 1)))),
            (0.5, PauliString(reg, ((1, 0), (1, 0)))),
            (-0.4, PauliString(reg, ((1, 1), (1, 1)))),
        ],
    )
    th = 0.55
    amps = np.zeros(4, dtype=complex)
    amps[0], amps[3] = np.cos(th), np.sin(th)
    return obs, StateVector(reg, amps)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--budgets", type=int, nargs="+", default=[500, 1000, 2000, 5000, 10000, 20000])
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--mode", choices=("gc", "bc"), default="gc")
    ap.add_argument("--non-adaptive", action="store_true")
    ap.add_argument("--out", default="plateau.csv")
    args = ap.parse_args()

    obs, state = demo_problem()
    exact = expectation(obs, state).real
    mcmc = MCMCConfig(n_chains=4, min_samples=150, max_samples=600)
    rows = ["budget,seed,o_est,var_stat,m_times_var,abs_err"]
    for budget in args.budgets:
        for seed in range(args.seeds):
            settings = RunSettings(
                budget=budget,
                mode=args.mode,
                adaptive=not args.non_adaptive,
                seed=seed,
                mcmc=mcmc,
            )
            rep = run_estimation(obs, state, settings)
            rows.append(
                f"{budget},{seed},{rep.o_est.real!r},{rep.var_stat!r},"
                f"{budget * rep.var_stat!r},{abs(rep.o_est.real - exact)!r}"
            )
            print(f"M={budget:>6} seed={seed}  M*var={budget * rep.var_stat:8.4f}  err={abs(rep.o_est.real - exact):.4f}")
    Path(args.out).write_text("\n".join(rows) + "\n")
    print(f"wrote {args.out} (exact <O> = {exact:.6f})")


if __name__ == "__main__":
    main()
