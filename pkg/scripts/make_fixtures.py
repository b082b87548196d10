"""Write the shipped m=2 scenario configs (seeded) and regenerate golden CSVs.

    python3 scripts/make_fixtures.py            # configs only
    python3 scripts/make_fixtures.py --golden   # also rewrite tests/fixtures/golden
"""
import argparse
from pathlib import Path

import numpy as np

from fermiclose import linalg
from fermiclose.config import ScenarioConfig, dump_config, identity_transform, parse_config, unitary_transform
from fermiclose.scenario import random_correlation_matrix, run_scenario
from fermiclose.secondquant import random_dissipative

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
GOLDEN = ROOT / "tests" / "fixtures" / "golden"
SEED = 20240611


def scenarios():
    rng = np.random.default_rng(SEED)
    m = 2
    W = linalg.random_unitary(2 * m, rng)
    X = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    H = (X + X.conj().T) / 2
    C_env = random_correlation_matrix(m, rng)
    C0 = random_correlation_matrix(m, rng)
    H_eff = random_dissipative(m, rng, strength=0.5)
    gauss0 = {"kind": "gaussian", "C0": C0}
    return {
        "gksl_fock": dict(m=m, k=4, transform=unitary_transform(W),
                          environment={"kind": "fock", "M": (1,)},
                          dynamics={"kind": "gksl", "t_grid": [0.0, 0.1, 0.5, 1.0], "hamiltonian": H},
                          initial_moments=gauss0),
        "channel_gaussian": dict(m=m, k=2, transform=unitary_transform(W),
                                 environment={"kind": "gaussian", "C": C_env},
                                 dynamics={"kind": "channel_step"}, initial_moments=gauss0),
        "postselect_parity": dict(m=m, k=2, transform=unitary_transform(W),
                                  environment={"kind": "fock", "M": (2,)},
                                  dynamics={"kind": "postselect", "effect": {"kind": "even_parity"}},
                                  initial_moments=gauss0),
        "identity_vacuum": dict(m=m, k=2, transform=identity_transform(m),
                                environment={"kind": "vacuum"}, dynamics={"kind": "channel_step"},
                                initial_moments={"kind": "fock_occupation", "M": (1,)}),
        "uniform_n1": dict(m=m, k=2, transform=unitary_transform(W),
                           environment={"kind": "uniform", "N": 1}, dynamics={"kind": "channel_step"},
                           initial_moments=gauss0),
        "gaussian_half": dict(m=m, k=2, transform=unitary_transform(W),
                              environment={"kind": "gaussian", "C": 0.5 * np.eye(m)},
                              dynamics={"kind": "channel_step"}, initial_moments=gauss0),
        "semigroup": dict(m=m, k=2, transform={"H_eff": H_eff, "t": 0.4},
                          environment={"kind": "vacuum"},
                          dynamics={"kind": "gksl", "t_grid": [0.0, 0.5, 1.0]},
                          initial_moments={"kind": "fock_occupation", "M": (1, 2)}),
    }


def to_raw(fields):
    return ScenarioConfig(**fields).to_dict()


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--golden", action="store_true")
    args = ap.parse_args()
    CONFIGS.mkdir(exist_ok=True)
    for name, fields in scenarios().items():
        cfg = parse_config(to_raw(fields), name)
        dump_config(cfg, CONFIGS / f"{name}.json")
        if args.golden:
            out = GOLDEN / name
            run_scenario(cfg, out)
            print("golden", out)
        print("config", CONFIGS / f"{name}.json")


if __name__ == "__main__":
    main()
