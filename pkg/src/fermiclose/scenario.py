"""Scenario orchestration behind the command line: runs, oracle verification, timing."""
from __future__ import annotations

import csv
import io
import time
from math import comb
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import fock_oracle, gksl, linalg
from .channel import (
    ChannelSpec,
    MonomialPoly,
    dual_action_even,
    dual_action_general,
    fmt,
    transfer_matrix,
)
from .config import ScenarioConfig, build_effect
from .environment import CorrelationTensor, gamma_fock, gamma_from_density, gamma_gaussian
from .errors import EvennessError, ResourceGuardError
from .multiindex import MonomialKey, basis_dimension, basis_keys
from .postselect import dual_action_postselected, dual_action_postselected_even, expand_effect
from .secondquant import (
    check_dissipative,
    check_semigroup_failure,
    contraction_semigroup,
    exterior_power,
    random_dissipative,
)

VERIFY_MAX_MODES = fock_oracle.MAX_COMBINED_MODES
VERIFY_TIMES = (0.1, 0.5, 1.0)
DEFAULT_TOLERANCE = 1e-6


# -- moment sources -------------------------------------------------------------------


def initial_moment_fn(cfg: ScenarioConfig) -> Callable[[MonomialKey], complex]:
    """Evaluator ``key -> Tr(rho0 f_J^dagger f_I)`` for the configured initial state."""
    init = cfg.initial_moments
    if init["kind"] == "fock_occupation":
        g = gamma_fock(cfg.m, init["M"])
    elif init["kind"] == "gaussian":
        g = gamma_gaussian(init["C0"])
    else:
        table = {}
        for J, I, re, im in init["entries"]:
            table[(tuple(J), tuple(I))] = complex(re, im)
        return lambda key: table.get((key.J, key.I), 0j)
    return lambda key: g(key.J, key.I)


def initial_moments(cfg: ScenarioConfig, keys) -> np.ndarray:
    fn = initial_moment_fn(cfg)
    return np.array([fn(k) for k in keys], dtype=complex)


def evaluate_poly(poly: MonomialPoly, fn: Callable[[MonomialKey], complex]) -> complex:
    total = 0j
    for key, c in poly.items():
        if key.parity:
            raise EvennessError("moments of parity-carrying monomials are not available")
        total += c * fn(key)
    return total


# -- CSV writers ----------------------------------------------------------------------


def moments_csv(keys, values) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "re", "im"])
    for key, v in zip(keys, values):
        w.writerow([key.label(), fmt(v.real), fmt(v.imag)])
    return buf.getvalue()


def trajectory_csv(keys, t_grid, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["t"]
    for key in keys:
        header += [f"re({key.label()})", f"im({key.label()})"]
    w.writerow(header)
    for t, row in zip(t_grid, rows):
        line = [fmt(t)]
        for v in row:
            line += [fmt(v.real), fmt(v.imag)]
        w.writerow(line)
    return buf.getvalue()


def read_trajectory_csv(text: str):
    """Parse a trajectory CSV back into ``(keys, t_grid, complex rows)``."""
    rows = list(csv.reader(io.StringIO(text)))
    header = rows[0]
    keys = [MonomialKey.from_label(h[3:-1]) for h in header[1::2]]
    data = np.array([[float(x) for x in r] for r in rows[1:]])
    return keys, data[:, 0], data[:, 1::2] + 1j * data[:, 2::2]


# -- runs -----------------------------------------------------------------------------


def _with_context(exc: Exception, where: str) -> Exception:
    return type(exc)(f"{where}: {exc}")


def channel_step(cfg: ScenarioConfig) -> tuple[list, np.ndarray]:
    spec = cfg.channel_spec()
    try:
        T = transfer_matrix(spec, cfg.k)
    except EvennessError as exc:
        raise _with_context(exc, "environment") from exc
    mu0 = initial_moments(cfg, T.basis)
    return list(T.basis), T.data @ mu0


def gksl_trajectory(cfg: ScenarioConfig) -> tuple[list, list, np.ndarray]:
    spec = cfg.channel_spec()
    dyn = cfg.dynamics
    try:
        sys = gksl.moment_ode_system(spec, cfg.k, dyn.get("hamiltonian"))
    except EvennessError as exc:
        raise _with_context(exc, "environment") from exc
    mu0 = initial_moments(cfg, sys.basis)
    return list(sys.basis), dyn["t_grid"], gksl.trajectory(sys, mu0, dyn["t_grid"])


def postselected_unitary(cfg: ScenarioConfig) -> np.ndarray:
    """Configured W, or a fixed completion of (A | B) (the result depends on that choice)."""
    return cfg.channel_spec().full_unitary()


def postselect_step(cfg: ScenarioConfig) -> tuple[list, np.ndarray]:
    gamma = cfg.correlation_tensor()
    if not gamma.is_even:
        raise EvennessError("environment: post-selected moments need a parity-even environment")
    W = postselected_unitary(cfg)
    eff = build_effect(cfg.dynamics["effect"], cfg.m)
    fn = initial_moment_fn(cfg)
    keys = basis_keys(cfg.m, cfg.k)
    out = np.array(
        [evaluate_poly(dual_action_postselected_even(W, gamma, eff, k.J, k.I), fn) for k in keys],
        dtype=complex,
    )
    return keys, out


def run_scenario(cfg: ScenarioConfig, out_dir) -> list[Path]:
    """Write the CSV for the configured dynamics and return the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    kind = cfg.dynamics["kind"]
    if kind == "channel_step":
        keys, mu = channel_step(cfg)
        path = out_dir / "moments.csv"
        path.write_text(moments_csv(keys, mu))
    elif kind == "gksl":
        keys, grid, rows = gksl_trajectory(cfg)
        path = out_dir / "trajectory.csv"
        path.write_text(trajectory_csv(keys, grid, rows))
    else:
        keys, mu = postselect_step(cfg)
        path = out_dir / "postselect_moments.csv"
        path.write_text(moments_csv(keys, mu))
    return [path]


def transfer_matrix_csv(cfg: ScenarioConfig) -> str:
    spec = cfg.channel_spec()
    try:
        return transfer_matrix(spec, cfg.k).to_csv()
    except EvennessError as exc:
        raise _with_context(exc, "environment") from exc


# -- oracle verification --------------------------------------------------------------


def _oracle_env(gamma: CorrelationTensor, rep) -> np.ndarray:
    return fock_oracle.environment_density(gamma, rep)


def _corrupted(spec: ChannelSpec, corrupt: float) -> ChannelSpec:
    if not corrupt:
        return spec
    return ChannelSpec.unchecked(spec.A + corrupt, spec.B, spec.gamma)


def general_action_deviation(spec: ChannelSpec, U, sigma, rep) -> float:
    worst = 0.0
    for key in basis_keys(spec.m, 2 * spec.m):
        Y = fock_oracle.dual_apply(U, sigma, fock_oracle.key_matrix(rep, key))
        ref = fock_oracle.expand_with_parity(rep, Y, key.order)
        worst = max(worst, dual_action_general(spec, key.J, key.I).max_deviation(ref))
    return worst


def even_action_deviation(spec: ChannelSpec, U, sigma, rep) -> float:
    worst = 0.0
    for key in basis_keys(spec.m, 2 * spec.m):
        Y = fock_oracle.dual_apply(U, sigma, fock_oracle.key_matrix(rep, key))
        ref = fock_oracle.expand_in_monomials(rep, Y)
        worst = max(worst, dual_action_even(spec, key.J, key.I).max_deviation(ref))
    return worst


def trajectory_deviation(spec: ChannelSpec, U, sigma, rho0, rep, H=None, times=VERIFY_TIMES) -> float:
    sys = gksl.moment_ode_system(spec, 2 * spec.m, H)
    mu0 = fock_oracle.moments(rep, rho0, sys.basis)
    worst = 0.0
    for t in times:
        ref = fock_oracle.moments(rep, fock_oracle.master_equation_evolve(U, sigma, rho0, t, H), sys.basis)
        worst = max(worst, float(np.abs(gksl.evolve_moments(sys, mu0, t) - ref).max()))
    return worst


def postselection_deviation(W, gamma, E, sigma, rep) -> float:
    U = fock_oracle.implement_unitary(rep, W)
    eff = expand_effect(E)
    worst = 0.0
    for key in basis_keys(gamma.m, 2 * gamma.m):
        Y = fock_oracle.postselected_dual(U, sigma, E, fock_oracle.key_matrix(rep, key))
        ref = fock_oracle.expand_with_parity(rep, Y, key.order)
        worst = max(worst, dual_action_postselected(W, gamma, eff, key.J, key.I).max_deviation(ref))
    return worst


def wick_deviation(C, rep) -> float:
    g = gamma_gaussian(C)
    ref = gamma_from_density(fock_oracle.gaussian_density(C, rep))
    return max(abs(g(x, w) - ref(x, w)) for (x, w) in g.table())


def random_correlation_matrix(m: int, rng: np.random.Generator) -> np.ndarray:
    V = linalg.random_unitary(m, rng)
    return (V * rng.uniform(0.0, 1.0, m)) @ V.conj().T


def verify(cfg: ScenarioConfig, seed: int = 0, tolerance: float = DEFAULT_TOLERANCE,
           corrupt: float = 0.0, n_random: int = 2) -> dict:
    """Compare every formula path with the Fock-space oracle.

    The configured channel is checked together with ``n_random`` seeded random
    unitaries.  ``corrupt`` shifts every entry of A on the formula side only,
    which must show up as a deviation.
    """
    m = cfg.m
    if m > VERIFY_MAX_MODES:
        raise ResourceGuardError(f"oracle verification limited to m <= {VERIFY_MAX_MODES}, got m={m}")
    rng = np.random.default_rng(seed)
    rep = fock_oracle.build_rep(m)
    gamma = cfg.correlation_tensor()
    sigma = _oracle_env(gamma, rep)
    H = cfg.dynamics.get("hamiltonian") if cfg.dynamics["kind"] == "gksl" else None

    Ws = [cfg.channel_spec().full_unitary()] + [linalg.random_unitary(2 * m, rng) for _ in range(n_random)]
    sigma_general = fock_oracle.random_density(m, rng)
    gamma_general = gamma_from_density(sigma_general)
    rho0 = fock_oracle.random_even_density(m, rng)
    E = fock_oracle.random_even_effect(m, rng)
    C = gamma.params["C"] if gamma.kind == "gaussian" else random_correlation_matrix(m, rng)

    dev = {"general_action": 0.0, "even_action": 0.0, "gksl_trajectory": 0.0, "postselection": 0.0}
    skipped = {}
    for W in Ws:
        U = fock_oracle.implement_unitary(rep, W)
        spec_gen = _corrupted(ChannelSpec.from_unitary(W, gamma_general), corrupt)
        dev["general_action"] = max(dev["general_action"], general_action_deviation(spec_gen, U, sigma_general, rep))
        if gamma.is_even:
            spec = _corrupted(ChannelSpec.from_unitary(W, gamma), corrupt)
            dev["even_action"] = max(dev["even_action"], even_action_deviation(spec, U, sigma, rep))
            dev["gksl_trajectory"] = max(
                dev["gksl_trajectory"], trajectory_deviation(spec, U, sigma, rho0, rep, H)
            )
        dev["postselection"] = max(dev["postselection"], postselection_deviation(W, gamma, E, sigma, rep))
    if not gamma.is_even:
        for name in ("even_action", "gksl_trajectory"):
            dev.pop(name)
            skipped[name] = "environment is not parity-even"
    dev["wick"] = wick_deviation(C, rep)
    flagged = sorted(k for k, v in dev.items() if v > tolerance)
    return {
        "m": m,
        "seed": seed,
        "tolerance": tolerance,
        "corrupt": corrupt,
        "unitaries_checked": len(Ws),
        "max_deviation": dev,
        "skipped": skipped,
        "flagged": flagged,
        "passed": not flagged,
    }


# -- scaling benchmark ----------------------------------------------------------------


def dimension_formula(m: int, k: int) -> int:
    return sum(comb(m, p) * comb(m, q) for p in range(k + 1) for q in range(k + 1 - p))


def dimension_k2(m: int) -> int:
    return 1 + 2 * m + m * m + 2 * comb(m, 2)


def benchmark_case(m: int, k: int, rng: np.random.Generator, repetitions: int = 1) -> dict:
    W = linalg.random_unitary(2 * m, rng)
    gamma = gamma_gaussian(random_correlation_matrix(m, rng))
    assembly, exponential = [], []
    for _ in range(repetitions):
        spec = ChannelSpec.from_unitary(W, gamma)
        t0 = time.perf_counter()
        T = transfer_matrix(spec, k)
        t1 = time.perf_counter()
        linalg.expm(T.data - gamma.normalization * np.eye(T.dim))
        t2 = time.perf_counter()
        assembly.append(t1 - t0)
        exponential.append(t2 - t1)
    row = {
        "m": m,
        "k": k,
        "D": T.dim,
        "D_formula": dimension_formula(m, k),
        "assembly_seconds": min(assembly),
        "expm_seconds": min(exponential),
        "total_seconds": min(a + e for a, e in zip(assembly, exponential)),
    }
    if k == 2:
        row["D_closed_form"] = dimension_k2(m)
    if m <= VERIFY_MAX_MODES:
        rep = fock_oracle.build_rep(m)
        U = fock_oracle.implement_unitary(rep, W)
        sigma = fock_oracle.gaussian_density(gamma.params["C"], rep)
        t0 = time.perf_counter()
        L = fock_oracle.liouvillian(U, sigma, 1.0)
        linalg.expm(L)
        row["oracle"] = {"state_dim": 2**m, "combined_dim": 2 ** (2 * m), "superoperator_dim": L.shape[0],
                         "seconds": time.perf_counter() - t0}
    else:
        row["oracle"] = {"guarded": True, "combined_dim": f"2^{2 * m}"}
    return row


def benchmark(m_list, k: int = 2, repetitions: int = 1, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    return {"k": k, "repetitions": repetitions, "seed": seed,
            "runs": [benchmark_case(m, k, rng, repetitions) for m in m_list]}


# -- second quantization report -------------------------------------------------------


def _poly_json(poly: MonomialPoly) -> dict:
    return {key.label(): [c.real, c.imag] for key, c in poly.items()}


def secondquant_report(cfg: ScenarioConfig, seed: int = 0, t1: float = 0.3, t2: float = 0.5,
                       probe: Optional[MonomialKey] = None) -> dict:
    rng = np.random.default_rng(seed)
    m = cfg.m
    H_eff = cfg.transform.get("H_eff")
    source = "config"
    if H_eff is None:
        H_eff = random_dissipative(m, rng)
        source = f"random(seed={seed})"
    check_dissipative(H_eff)
    gamma = cfg.correlation_tensor()
    probe = probe or MonomialKey((1,), (1,))
    rep = check_semigroup_failure(H_eff, gamma, t1, t2, probe)
    A1, A2 = contraction_semigroup(H_eff, t1), contraction_semigroup(H_eff, t2)
    multiplicativity = max(
        float(np.abs(exterior_power(A1 @ A2, p).data - exterior_power(A1, p).data @ exterior_power(A2, p).data).max())
        for p in range(min(m, 3) + 1)
    )
    return {
        "m": m,
        "H_eff_source": source,
        "environment": gamma.describe(),
        "t1": t1,
        "t2": t2,
        "probe": probe.label(),
        "contraction_norm_t1": float(np.linalg.norm(A1, 2)),
        "semigroup_deviation": rep.max_deviation,
        "lhs": _poly_json(rep.lhs),
        "rhs": _poly_json(rep.rhs),
        "exterior_power_multiplicativity": multiplicativity,
        "basis_dimension": basis_dimension(m, cfg.k),
    }
