"""Search seeds for a semigroup-failure witness of the second-quantized contraction family.

For each seed a dissipative H_eff is drawn and Phi*_{t1} Phi*_{t2} is compared
with Phi*_{t1+t2} on a mixed monomial.  The best seed per environment is written
to tests/fixtures/semigroup_witness.json.

    python3 scripts/semigroup_witness.py --seeds 200
"""
import argparse
import json
from pathlib import Path

import numpy as np

from fermiclose.environment import gamma_fock, gamma_vacuum
from fermiclose.multiindex import MonomialKey
from fermiclose.secondquant import check_semigroup_failure, random_dissipative

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "semigroup_witness.json"
M, T1, T2 = 2, 0.3, 0.5
PROBES = [MonomialKey((1,), (1,)), MonomialKey((1,), (2,)), MonomialKey((1, 2), (1, 2))]
ENVIRONMENTS = {"vacuum": lambda: gamma_vacuum(M), "fock_1": lambda: gamma_fock(M, (1,))}


def search(n_seeds):
    best = {}
    for env_name, make in ENVIRONMENTS.items():
        gamma = make()
        top = None
        for seed in range(n_seeds):
            H = random_dissipative(M, np.random.default_rng(seed))
            for probe in PROBES:
                dev = check_semigroup_failure(H, gamma, T1, T2, probe).max_deviation
                if top is None or dev > top["max_deviation"]:
                    top = {"seed": seed, "probe": probe.label(), "max_deviation": dev}
        best[env_name] = {"m": M, "t1": T1, "t2": T2, "environment": env_name, **top}
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=200)
    args = ap.parse_args()
    best = search(args.seeds)
    OUT.write_text(json.dumps(best, indent=2, sort_keys=True) + "\n")
    for name, row in best.items():
        print(f"{name:<8} seed={row['seed']:<4} probe={row['probe']:<8} deviation={row['max_deviation']:.3e}")


if __name__ == "__main__":
    main()
