"""JSON scenario files.

Layout (``schema_version`` 1; complex numbers are ``[re, im]`` pairs, matrices
nested row lists of them)::

    {
      "schema_version": 1,
      "m": 2, "k": 2,
      "transform": {"A": M, "B": M} | {"W": M} | {"H_eff": M, "t": 0.5},
      "environment": {"kind": "vacuum"} | {"kind": "gaussian", "C": M}
                   | {"kind": "fock", "M": [1]} | {"kind": "uniform", "N": 1}
                   | {"kind": "explicit", "sigma": M},
      "dynamics": {"kind": "channel_step"}
                | {"kind": "gksl", "t_grid": [0.0, 0.5], "hamiltonian": M (optional)}
                | {"kind": "postselect", "effect": EFFECT},
      "initial_moments": {"kind": "fock_occupation", "M": [1]}
                       | {"kind": "gaussian", "C0": M}
                       | {"kind": "explicit", "entries": [[J, I, re, im], ...]}
    }

``EFFECT`` is one of ``{"kind": "identity"}``, ``{"kind": "number", "mode": 1}``,
``{"kind": "even_parity"}``, ``{"kind": "matrix", "E": M}`` or
``{"kind": "coefficients", "entries": [[M, N, re, im], ...]}``; any of them may
carry ``"complement": true`` to select ``1 - E``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import linalg
from .channel import ChannelSpec
from .environment import (
    CorrelationTensor,
    gamma_fock,
    gamma_from_density,
    gamma_gaussian,
    gamma_uniform,
    gamma_vacuum,
)
from .errors import ConfigError, FermiCloseError
from .multiindex import check_multiindex
from .postselect import EffectExpansion, expand_effect
from .secondquant import contraction_semigroup, dilate_contraction

SCHEMA_VERSION = 1
ENV_KINDS = ("vacuum", "gaussian", "fock", "uniform", "explicit")
DYNAMICS_KINDS = ("channel_step", "gksl", "postselect")
INITIAL_KINDS = ("fock_occupation", "gaussian", "explicit")
EFFECT_KINDS = ("identity", "number", "even_parity", "matrix", "coefficients")


def decode_matrix(raw, path: str) -> np.ndarray:
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: matrix entries must be [re, im] pairs") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ConfigError(f"{path}: expected a nested list of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def encode_matrix(X) -> list:
    X = np.asarray(X, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in X]


def _square(X: np.ndarray, n: int, path: str) -> np.ndarray:
    if X.shape != (n, n):
        raise ConfigError(f"{path}: expected {n}x{n}, got {X.shape[0]}x{X.shape[1]}")
    return X


@dataclass(eq=False)
class ScenarioConfig:
    m: int
    k: int
    transform: dict
    environment: dict
    dynamics: dict
    initial_moments: dict
    schema_version: int = SCHEMA_VERSION
    source: Optional[str] = field(default=None, compare=False)

    # -- derived objects ----------------------------------------------------------------

    def correlation_tensor(self) -> CorrelationTensor:
        return build_environment(self.environment, self.m)

    def channel_spec(self) -> ChannelSpec:
        return build_channel(self.transform, self.m, self.correlation_tensor())

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "m": self.m,
            "k": self.k,
            "transform": _encode_section(self.transform),
            "environment": _encode_section(self.environment),
            "dynamics": _encode_section(self.dynamics),
            "initial_moments": _encode_section(self.initial_moments),
        }


def _encode_section(sec: dict) -> dict:
    out = {}
    for key, val in sec.items():
        if isinstance(val, np.ndarray) and val.ndim == 2:
            out[key] = encode_matrix(val)
        elif isinstance(val, dict):
            out[key] = _encode_section(val)
        elif isinstance(val, tuple):
            out[key] = list(val)
        else:
            out[key] = val
    return out


def build_environment(env: dict, m: int) -> CorrelationTensor:
    kind = env["kind"]
    try:
        if kind == "vacuum":
            return gamma_vacuum(m)
        if kind == "gaussian":
            return gamma_gaussian(env["C"])
        if kind == "fock":
            return gamma_fock(m, env["M"])
        if kind == "uniform":
            return gamma_uniform(m, env["N"])
        return gamma_from_density(env["sigma"])
    except FermiCloseError as exc:
        raise type(exc)(f"environment: {exc}") from exc


def build_channel(tr: dict, m: int, gamma: CorrelationTensor) -> ChannelSpec:
    try:
        if "W" in tr:
            return ChannelSpec.from_unitary(tr["W"], gamma)
        if "H_eff" in tr:
            A = contraction_semigroup(tr["H_eff"], tr["t"])
            return dilate_contraction(A).channel(gamma)
        return ChannelSpec(m, tr["A"], tr["B"], gamma)
    except FermiCloseError as exc:
        raise type(exc)(f"transform: {exc}") from exc


def build_effect(desc: dict, m: int) -> EffectExpansion:
    kind = desc["kind"]
    try:
        if kind == "identity":
            eff = EffectExpansion.identity(m)
        elif kind == "number":
            eff = EffectExpansion.number(m, desc["mode"])
        elif kind == "even_parity":
            eff = EffectExpansion.even_parity_projector(m)
        elif kind == "matrix":
            eff = expand_effect(desc["E"])
        else:
            coeffs = {}
            for M, N, re, im in desc["entries"]:
                key = (tuple(M), tuple(N))
                coeffs[key] = coeffs.get(key, 0j) + complex(re, im)
            eff = EffectExpansion(m, coeffs, trusted=False)
            eff.check()
    except FermiCloseError as exc:
        raise type(exc)(f"dynamics.effect: {exc}") from exc
    return eff.complement() if desc.get("complement") else eff


# -- parsing --------------------------------------------------------------------------


def _require(d: dict, key: str, path: str):
    if not isinstance(d, dict) or key not in d:
        raise ConfigError(f"{path}: missing field '{key}'")
    return d[key]


def _kind(d: dict, allowed, path: str) -> str:
    kind = _require(d, "kind", path)
    if kind not in allowed:
        raise ConfigError(f"{path}.kind: '{kind}' not one of {', '.join(allowed)}")
    return kind


def _multiindex(raw, m: int, path: str) -> tuple:
    try:
        return check_multiindex(tuple(int(x) for x in raw), m)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_transform(raw: dict, m: int) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("transform: expected an object")
    if "W" in raw:
        return {"W": _square(decode_matrix(raw["W"], "transform.W"), 2 * m, "transform.W")}
    if "H_eff" in raw:
        t = float(_require(raw, "t", "transform"))
        if t < 0:
            raise ConfigError("transform.t: must be non-negative")
        return {"H_eff": _square(decode_matrix(raw["H_eff"], "transform.H_eff"), m, "transform.H_eff"), "t": t}
    if "A" in raw and "B" in raw:
        return {
            "A": _square(decode_matrix(raw["A"], "transform.A"), m, "transform.A"),
            "B": _square(decode_matrix(raw["B"], "transform.B"), m, "transform.B"),
        }
    raise ConfigError("transform: need {A, B}, {W} or {H_eff, t}")


def _parse_environment(raw: dict, m: int) -> dict:
    kind = _kind(raw, ENV_KINDS, "environment")
    if kind == "vacuum":
        return {"kind": kind}
    if kind == "gaussian":
        return {"kind": kind, "C": _square(decode_matrix(_require(raw, "C", "environment"), "environment.C"), m, "environment.C")}
    if kind == "fock":
        return {"kind": kind, "M": _multiindex(_require(raw, "M", "environment"), m, "environment.M")}
    if kind == "uniform":
        N = _require(raw, "N", "environment")
        if not isinstance(N, int) or not 0 <= N <= m:
            raise ConfigError(f"environment.N: need an integer in 0..{m}")
        return {"kind": kind, "N": N}
    sigma = decode_matrix(_require(raw, "sigma", "environment"), "environment.sigma")
    return {"kind": kind, "sigma": _square(sigma, 2**m, "environment.sigma")}


def _parse_effect(raw: dict, m: int) -> dict:
    path = "dynamics.effect"
    kind = _kind(raw, EFFECT_KINDS, path)
    out: dict[str, Any] = {"kind": kind}
    if kind == "number":
        mode = _require(raw, "mode", path)
        if not isinstance(mode, int) or not 1 <= mode <= m:
            raise ConfigError(f"{path}.mode: need an integer in 1..{m}")
        out["mode"] = mode
    elif kind == "matrix":
        out["E"] = _square(decode_matrix(_require(raw, "E", path), f"{path}.E"), 2**m, f"{path}.E")
    elif kind == "coefficients":
        entries = []
        for n, row in enumerate(_require(raw, "entries", path)):
            if not isinstance(row, list) or len(row) != 4:
                raise ConfigError(f"{path}.entries[{n}]: expected [M, N, re, im]")
            M = _multiindex(row[0], m, f"{path}.entries[{n}]")
            N = _multiindex(row[1], m, f"{path}.entries[{n}]")
            entries.append([list(M), list(N), float(row[2]), float(row[3])])
        out["entries"] = entries
    if raw.get("complement"):
        out["complement"] = True
    return out


def _parse_dynamics(raw: dict, m: int) -> dict:
    kind = _kind(raw, DYNAMICS_KINDS, "dynamics")
    if kind == "channel_step":
        return {"kind": kind}
    if kind == "postselect":
        return {"kind": kind, "effect": _parse_effect(_require(raw, "effect", "dynamics"), m)}
    grid = [float(t) for t in _require(raw, "t_grid", "dynamics")]
    if not grid:
        raise ConfigError("dynamics.t_grid: empty")
    if grid[0] < 0 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("dynamics.t_grid: must be nonnegative and strictly increasing")
    out: dict[str, Any] = {"kind": kind, "t_grid": grid}
    if raw.get("hamiltonian") is not None:
        H = _square(decode_matrix(raw["hamiltonian"], "dynamics.hamiltonian"), m, "dynamics.hamiltonian")
        if np.linalg.norm(H - H.conj().T) > 1e-9:
            raise ConfigError("dynamics.hamiltonian: must be Hermitian")
        out["hamiltonian"] = H
    return out


def _parse_initial(raw: dict, m: int) -> dict:
    kind = _kind(raw, INITIAL_KINDS, "initial_moments")
    if kind == "fock_occupation":
        return {"kind": kind, "M": _multiindex(_require(raw, "M", "initial_moments"), m, "initial_moments.M")}
    if kind == "gaussian":
        C0 = decode_matrix(_require(raw, "C0", "initial_moments"), "initial_moments.C0")
        return {"kind": kind, "C0": _square(C0, m, "initial_moments.C0")}
    entries = []
    for n, row in enumerate(_require(raw, "entries", "initial_moments")):
        if not isinstance(row, list) or len(row) != 4:
            raise ConfigError(f"initial_moments.entries[{n}]: expected [J, I, re, im]")
        J = _multiindex(row[0], m, f"initial_moments.entries[{n}]")
        I = _multiindex(row[1], m, f"initial_moments.entries[{n}]")
        entries.append([list(J), list(I), float(row[2]), float(row[3])])
    return {"kind": kind, "entries": entries}


def parse_config(raw: dict, source: Optional[str] = None) -> ScenarioConfig:
    """Validate a decoded JSON document and check every derived object once."""
    if not isinstance(raw, dict):
        raise ConfigError("top level must be an object")
    version = _require(raw, "schema_version", "config")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: unsupported value {version!r} (expected {SCHEMA_VERSION})")
    m, k = _require(raw, "m", "config"), _require(raw, "k", "config")
    if not isinstance(m, int) or m < 1:
        raise ConfigError("m: need a positive integer")
    if not isinstance(k, int) or not 0 <= k <= 2 * m:
        raise ConfigError(f"k: need an integer in 0..{2 * m}")
    cfg = ScenarioConfig(
        m=m,
        k=k,
        transform=_parse_transform(_require(raw, "transform", "config"), m),
        environment=_parse_environment(_require(raw, "environment", "config"), m),
        dynamics=_parse_dynamics(_require(raw, "dynamics", "config"), m),
        initial_moments=_parse_initial(_require(raw, "initial_moments", "config"), m),
        schema_version=version,
        source=source,
    )
    cfg.channel_spec()
    if cfg.dynamics["kind"] == "postselect":
        build_effect(cfg.dynamics["effect"], m)
    return cfg


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_config(raw, str(path))


def dump_config(cfg: ScenarioConfig, path=None) -> str:
    text = json.dumps(cfg.to_dict(), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def isometry_residual(cfg: ScenarioConfig) -> float:
    return cfg.channel_spec().isometry_residual


def identity_transform(m: int) -> dict:
    return {"A": np.eye(m, dtype=complex), "B": np.zeros((m, m), dtype=complex)}


def unitary_transform(W) -> dict:
    return {"W": linalg.as_matrix(W)}
