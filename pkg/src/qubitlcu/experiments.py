"""Experiment runners: parameter sweeps, capacity surfaces and profiles.

Every number here is computed through the simulation circuit: parameters
become an LCU plan, the plan becomes a circuit, and channel quantities are
read off the circuit (its Kraus operators or its output state).
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from . import channels
from .channels import ChannelSpecError, QubitChannel, UniversalParams
from .circuit import (
    Circuit,
    build_channel_circuit,
    channel_output,
    circuit_channel,
    expectation_from_counts,
    pauli_expectation,
    sample_shots,
    tomography_reconstruct,
)
from .compile import compile_to_cnot_basis
from .lcu import build_lcu
from .linalg import StateVector, bloch_density, partial_trace, pure_density
from .metrics import (
    coherent_information,
    entanglement_fidelity,
    one_shot_capacity,
    purify,
    state_fidelity,
    von_neumann_entropy,
)
from .qasm import eval_angle, export_qasm

METRICS = ("sx", "sy", "sz", "state_fidelity", "entanglement_fidelity", "entropy", "coherent_info", "capacity")
SAMPLED = ("sx", "sy", "sz", "state_fidelity", "entropy")
LCU_FAMILIES = ("universal", "quasiextreme", "gad", "pd", "unital_a", "unital_b")
WORK_QUBIT = 2

NAMED_STATES = {
    "zero": (0.0, 0.0, 1.0),
    "one": (0.0, 0.0, -1.0),
    "plus": (1.0, 0.0, 0.0),
    "minus": (-1.0, 0.0, 0.0),
    "plus_i": (0.0, 1.0, 0.0),
    "minus_i": (0.0, -1.0, 0.0),
}


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


def fmt(x: float) -> str:
    x = float(x)
    if x == 0.0:
        x = 0.0  # avoid "-0"
    return f"{x:.12g}"


# ---------------------------------------------------------------------------
# Circuit pipeline
# ---------------------------------------------------------------------------


def lcu_route(family: str, params: Mapping[str, float]) -> tuple[UniversalParams, bool]:
    """Universal parameters for ``family`` and whether the final X correction is used.

    Phase damping is realized by the bare duality gates: with b = 0 and
    cos a = sqrt(1 - gamma), L_0 = diag(1, sqrt(1 - gamma)) and
    L_1 = diag(0, sqrt(gamma)).
    """
    ch = channels.channel_from_params(family, params)
    if family == "pd":
        p = ch.provenance
        return (
            UniversalParams(
                p["P"], math.acos(math.sqrt(1 - p["gamma1"])), 0.0, math.acos(math.sqrt(1 - p["gamma2"])), 0.0
            ),
            False,
        )
    if ch.params is None:
        raise ConfigError(f"family: {family!r} has no LCU circuit")
    return ch.params, True


def channel_circuit(family: str, params: Mapping[str, float], with_reference: bool = False) -> Circuit:
    up, x_correction = lcu_route(family, params)
    return build_channel_circuit(build_lcu(up), with_reference=with_reference, x_correction=x_correction)


def simulated_channel(family: str, params: Mapping[str, float]) -> QubitChannel:
    """The channel realized by the circuit of ``family`` at ``params``."""
    return circuit_channel(channel_circuit(family, params), label=family)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def _num(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ConfigError(f"{where}: expected a number or angle expression, got {value!r}")
    if isinstance(value, str):
        try:
            return eval_angle(value)
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    return float(value)


def _int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    return value


@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    step: float

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigError("step: must be positive")
        if self.start > self.stop:
            raise ConfigError("start: must not exceed stop")

    def values(self) -> list[float]:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [self.start + k * self.step for k in range(n)]

    @classmethod
    def linspace(cls, name: str, start: float, stop: float, num: int) -> "Axis":
        if num < 1:
            raise ConfigError("num: must be at least 1")
        step = (stop - start) / (num - 1) if num > 1 else 1.0
        return cls(name, start, stop, step)

    @classmethod
    def from_json(cls, raw: Any, where: str) -> "Axis":
        if not isinstance(raw, Mapping):
            raise ConfigError(f"{where}: expected an object with name/start/stop/step")
        if "name" not in raw:
            raise ConfigError(f"{where}.name: missing")
        name = channels._ALIASES.get(raw["name"], raw["name"])
        try:
            start = _num(raw.get("start", 0.0), f"{where}.start")
            stop = _num(raw.get("stop"), f"{where}.stop") if "stop" in raw else None
            if stop is None:
                raise ConfigError(f"{where}.stop: missing")
            if "num" in raw:
                return cls.linspace(name, start, stop, _int(raw["num"], f"{where}.num"))
            if "step" not in raw:
                raise ConfigError(f"{where}.step: missing (or give num)")
            return cls(name, start, stop, _num(raw["step"], f"{where}.step"))
        except ConfigError as exc:
            msg = str(exc)
            raise ConfigError(msg if msg.startswith(where) else f"{where}.{msg}") from None

    def to_json(self) -> dict:
        return {"name": self.name, "start": self.start, "stop": self.stop, "step": self.step}


@dataclass(frozen=True)
class InputState:
    kind: str  # "bloch", "maximally_mixed" or "bell_purified"
    bloch: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def density(self) -> np.ndarray:
        return bloch_density(self.bloch)

    def is_pure(self) -> bool:
        return self.kind == "bloch" and abs(np.linalg.norm(self.bloch) - 1.0) < 1e-12

    def data_state(self) -> StateVector:
        """State fed to the circuit's data qubits: the pure state, or a purification."""
        if self.is_pure():
            x, y, z = self.bloch
            return StateVector.from_bloch(math.acos(max(-1.0, min(1.0, z))), math.atan2(y, x))
        return purify(self.density())

    @classmethod
    def from_json(cls, raw: Any) -> "InputState":
        if raw in ("maximally_mixed", "bell_purified"):
            return cls(raw)
        if isinstance(raw, str):
            if raw not in NAMED_STATES:
                raise ConfigError(
                    f"input_state: unknown state {raw!r}; use a Bloch vector, {sorted(NAMED_STATES)}, "
                    "'maximally_mixed' or 'bell_purified'"
                )
            return cls("bloch", NAMED_STATES[raw])
        vec = raw.get("bloch") if isinstance(raw, Mapping) else raw
        if not isinstance(vec, (list, tuple)) or len(vec) != 3:
            raise ConfigError("input_state: expected a name or a 3-component Bloch vector")
        r = tuple(_num(v, f"input_state.bloch[{i}]") for i, v in enumerate(vec))
        if np.linalg.norm(r) > 1 + 1e-12:
            raise ConfigError("input_state.bloch: vector longer than 1")
        return cls("bloch", r)

    def to_json(self):
        return {"bloch": list(self.bloch)} if self.kind == "bloch" else self.kind


@dataclass(frozen=True)
class SweepConfig:
    family: str
    fixed_params: Mapping[str, float]
    swept: Axis
    input_state: InputState
    metrics: tuple[str, ...]
    shots: int = 0
    seed: int = 0
    grid_n: int = 21

    def __post_init__(self):
        if self.family not in LCU_FAMILIES:
            raise ConfigError(f"family: expected one of {LCU_FAMILIES}, got {self.family!r}")
        bad = [m for m in self.metrics if m not in METRICS]
        if bad:
            raise ConfigError(f"metrics: unknown metric {bad[0]!r}; expected a subset of {METRICS}")
        if not self.metrics:
            raise ConfigError("metrics: at least one metric is required")
        if self.shots < 0:
            raise ConfigError("shots: must be non-negative")
        if self.grid_n < 2:
            raise ConfigError("grid: must be at least 2")
        if self.swept.name in self.fixed_params:
            raise ConfigError(f"fixed_params.{self.swept.name}: also the swept parameter")
        # Validate the parameter set once, at the first sweep point.
        try:
            lcu_route(self.family, {**self.fixed_params, self.swept.name: self.swept.start})
        except ChannelSpecError as exc:
            raise ConfigError(str(exc).replace("params.", "fixed_params.", 1)) from None

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "fixed_params": dict(self.fixed_params),
            "swept_param": self.swept.to_json(),
            "input_state": self.input_state.to_json(),
            "metrics": list(self.metrics),
            "shots": self.shots,
            "seed": self.seed,
            "grid": self.grid_n,
        }


def sweep_config_from_json(raw: Mapping[str, Any]) -> SweepConfig:
    if not isinstance(raw, Mapping):
        raise ConfigError("top level: expected a JSON object")
    known = {"family", "fixed_params", "swept_param", "input_state", "metrics", "shots", "seed", "grid", "kind"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown field")
    if "family" not in raw:
        raise ConfigError("family: missing")
    if "swept_param" not in raw:
        raise ConfigError("swept_param: missing")
    try:
        fixed = channels.normalize_params(raw.get("fixed_params", {}), "fixed_params")
    except ChannelSpecError as exc:
        raise ConfigError(str(exc)) from None
    metrics = raw.get("metrics", ["sx"])
    if not isinstance(metrics, list):
        raise ConfigError("metrics: expected a list")
    return SweepConfig(
        family=raw["family"],
        fixed_params=fixed,
        swept=Axis.from_json(raw["swept_param"], "swept_param"),
        input_state=InputState.from_json(raw.get("input_state", "plus")),
        metrics=tuple(metrics),
        shots=_int(raw.get("shots", 0), "shots"),
        seed=_int(raw.get("seed", 0), "seed"),
        grid_n=_int(raw.get("grid", 21), "grid"),
    )


def load_json_file(path: str | Path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        return channels.load_channel_spec(text)
    except ChannelSpecError as exc:
        raise ConfigError(f"{path}: {exc}") from None


# Classes (a)-(c): beta1 from 0 to 2 pi in steps of pi/4 with the rest fixed.
_CLASSES = {
    "a": {"P": 0.6, "alpha1": 0.0, "alpha2": math.pi / 2, "beta2": math.pi / 6},
    "b": {"P": 0.6, "alpha1": math.pi, "alpha2": math.pi / 2, "beta2": math.pi / 6},
    "c": {"P": 0.6, "alpha1": math.pi / 3, "alpha2": math.pi / 2, "beta2": math.pi / 6},
}
_BETA1 = Axis("beta1", 0.0, 2 * math.pi, math.pi / 4)
_PURE_METRICS = ("sx", "sy", "sz", "state_fidelity", "entanglement_fidelity", "entropy")
_MIXED_METRICS = ("state_fidelity", "entanglement_fidelity", "entropy", "coherent_info")


def class_config(cls: str, input_state: str = "plus", shots: int = 0, seed: int = 0) -> SweepConfig:
    state = InputState.from_json(input_state)
    metrics = _PURE_METRICS if state.kind == "bloch" else _MIXED_METRICS
    return SweepConfig("universal", dict(_CLASSES[cls]), _BETA1, state, metrics, shots, seed)


PRESETS: dict[str, Callable[..., SweepConfig]] = {
    "class_a": lambda **kw: class_config("a", "plus", **kw),
    "class_b": lambda **kw: class_config("b", "plus", **kw),
    "class_c": lambda **kw: class_config("c", "plus", **kw),
    "mixed_a": lambda **kw: class_config("a", "bell_purified", **kw),
}


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def _row_seed(seed: int, row: int, axis: int) -> int:
    return int(np.random.SeedSequence([seed, row, axis]).generate_state(1)[0])


def sweep_row(cfg: SweepConfig, row: int, value: float) -> dict[str, float]:
    params = {**cfg.fixed_params, cfg.swept.name: value}
    circ = channel_circuit(cfg.family, params)
    ch = circuit_channel(circ)
    rho_in = cfg.input_state.density()
    if cfg.input_state.kind == "bell_purified":
        bell = purify(rho_in).amplitudes
        joint = channel_output(circ, pure_density(bell))
        out = partial_trace(joint, [2, 2], [0])
    else:
        joint = None
        out = channel_output(circ, rho_in)

    res: dict[str, float] = {}
    for m in cfg.metrics:
        if m in ("sx", "sy", "sz"):
            res[m] = pauli_expectation(out, m[1])
        elif m == "state_fidelity":
            res[m] = state_fidelity(rho_in, out)
        elif m == "entanglement_fidelity":
            res[m] = entanglement_fidelity(rho_in, ch)
        elif m == "entropy":
            res[m] = von_neumann_entropy(out)
        elif m == "coherent_info":
            if joint is not None:
                res[m] = von_neumann_entropy(out) - von_neumann_entropy(joint)
            else:
                res[m] = coherent_information(ch, rho_in)
        elif m == "capacity":
            res[m] = one_shot_capacity(ch, cfg.grid_n).value

    sampled = [m for m in cfg.metrics if m in SAMPLED]
    if cfg.shots > 0 and sampled:
        need_all = any(m in ("state_fidelity", "entropy") for m in sampled)
        axes = "XYZ" if need_all else "".join(m[1].upper() for m in sampled)
        data = cfg.input_state.data_state()
        exp = {}
        for a in axes:
            counts = sample_shots(
                circ, data, {WORK_QUBIT: a}, cfg.shots, _row_seed(cfg.seed, row, "XYZ".index(a)), qubits=(WORK_QUBIT,)
            )
            exp[a] = expectation_from_counts(counts)
        for m in sampled:
            if m in ("sx", "sy", "sz"):
                res[f"{m}_shots"] = exp[m[1].upper()]
        if need_all:
            rho_t = tomography_reconstruct(exp["X"], exp["Y"], exp["Z"])
            if "state_fidelity" in sampled:
                res["state_fidelity_shots"] = state_fidelity(rho_in, rho_t)
            if "entropy" in sampled:
                res["entropy_shots"] = von_neumann_entropy(rho_t)
    return res


def sweep_columns(cfg: SweepConfig) -> list[str]:
    cols = [cfg.swept.name, *cfg.metrics]
    if cfg.shots > 0:
        cols += [f"{m}_shots" for m in cfg.metrics if m in SAMPLED]
    return cols


def _sweep_task(args):
    cfg, row, value = args
    return sweep_row(cfg, row, value)


def _pool_map(fn, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * threads))))


def write_csv(title: str, config: Mapping[str, Any], columns: Sequence[str], rows: Iterable[Sequence[float]]) -> str:
    buf = io.StringIO()
    buf.write(f"# {title}\n")
    buf.write(f"# config: {json.dumps(config, sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def run_sweep_rows(cfg: SweepConfig, threads: int = 1) -> list[dict[str, float]]:
    values = cfg.swept.values()
    results = _pool_map(_sweep_task, [(cfg, k, v) for k, v in enumerate(values)], threads)
    return [{cfg.swept.name: v, **r} for v, r in zip(values, results)]


def run_sweep(cfg: SweepConfig, threads: int = 1) -> str:
    rows = run_sweep_rows(cfg, threads)
    cols = sweep_columns(cfg)
    return write_csv("qubitlcu sweep", cfg.to_json(), cols, ([r[c] for c in cols] for r in rows))


# ---------------------------------------------------------------------------
# Capacity surfaces and profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SurfaceFamily:
    family: str
    axes: tuple[str, str]
    ranges: tuple[tuple[float, float], tuple[float, float]]
    default_points: int
    fixed: Mapping[str, float] = field(default_factory=dict)


SURFACES = {
    "gad": SurfaceFamily("gad", ("lam", "P"), ((0.0, 1.0), (0.0, 1.0)), 41),
    "pd": SurfaceFamily("pd", ("gamma1", "gamma2"), ((0.0, 1.0), (0.0, 1.0)), 41, {"P": 0.5}),
    "unital_a": SurfaceFamily("unital_a", ("beta1", "beta2"), ((0.0, math.pi), (0.0, math.pi)), 81, {"P": 0.6}),
    "unital_b": SurfaceFamily("unital_b", ("beta1", "beta2"), ((0.0, math.pi), (0.0, math.pi)), 81, {"P": 0.6}),
}


def default_surface_axes(family: str, points: int | None = None) -> tuple[Axis, Axis]:
    if family not in SURFACES:
        raise ConfigError(f"family: unknown surface family {family!r}; expected one of {sorted(SURFACES)}")
    sf = SURFACES[family]
    n = sf.default_points if points is None else points
    if n < 1:
        raise ConfigError("points: must be at least 1")
    return tuple(Axis.linspace(name, lo, hi, n) for name, (lo, hi) in zip(sf.axes, sf.ranges))  # type: ignore


def _capacity_task(args) -> float:
    family, params, grid_n = args
    return one_shot_capacity(simulated_channel(family, params), grid_n).value


def capacity_surface(
    family: str,
    axis1: Axis | None = None,
    axis2: Axis | None = None,
    fixed: Mapping[str, float] | None = None,
    grid_n: int = 21,
    threads: int = 1,
) -> str:
    """CSV of (axis1, axis2, capacity) over the product grid, axis1 outermost."""
    d1, d2 = default_surface_axes(family)
    axis1, axis2 = axis1 or d1, axis2 or d2
    base = {**SURFACES[family].fixed, **(fixed or {})}
    tasks = [({**base, axis1.name: a, axis2.name: b}, a, b) for a in axis1.values() for b in axis2.values()]
    try:
        lcu_route(family, tasks[0][0])
    except ChannelSpecError as exc:
        raise ConfigError(str(exc)) from None
    caps = _pool_map(_capacity_task, [(family, p, grid_n) for p, _, _ in tasks], threads)
    config = {
        "family": family,
        "axis1": axis1.to_json(),
        "axis2": axis2.to_json(),
        "fixed_params": base,
        "grid": grid_n,
    }
    rows = ((a, b, c) for (_, a, b), c in zip(tasks, caps))
    return write_csv("qubitlcu surface", config, [axis1.name, axis2.name, "capacity"], rows)


def capacity_profiles(grid_n: int = 21, threads: int = 1) -> dict[str, str]:
    """Three capacity profiles: zero-capacity class (a), unitary X family, thermal AD."""
    out = {}

    betas = _BETA1.values()
    caps = _pool_map(_capacity_task, [("universal", {**_CLASSES["a"], "beta1": b}, grid_n) for b in betas], threads)
    plus = bloch_density(NAMED_STATES["plus"])
    rows = []
    for b, c in zip(betas, caps):
        ch = simulated_channel("universal", {**_CLASSES["a"], "beta1": b})
        rows.append((b, coherent_information(ch, plus), c))
    out["profile_a"] = write_csv(
        "qubitlcu profile a: class (a) channels, |+> input",
        {"fixed_params": _CLASSES["a"], "grid": grid_n, "swept": _BETA1.to_json()},
        ["beta1", "coherent_info_plus", "capacity"],
        rows,
    )

    half = math.pi / 2
    ps = [k / 10 for k in range(1, 11)]
    angles = {"alpha1": half, "beta1": half, "alpha2": half, "beta2": half}
    caps = _pool_map(_capacity_task, [("universal", {**angles, "P": p}, grid_n) for p in ps], threads)
    mixed = np.eye(2) / 2
    rows = [(p, coherent_information(simulated_channel("universal", {**angles, "P": p}), mixed), c) for p, c in zip(ps, caps)]
    out["profile_b"] = write_csv(
        "qubitlcu profile b: alpha = beta = pi/2, maximally mixed input",
        {"fixed_params": angles, "grid": grid_n, "P": ps},
        ["P", "coherent_info_mixed", "capacity"],
        rows,
    )

    lams = [k / 10 for k in range(11)]
    rows = []
    for lam in lams:
        ch = simulated_channel("gad", {"lam": lam, "P": 0.6})
        res = one_shot_capacity(ch, grid_n)
        rows.append((lam, res.value, coherent_information(ch, mixed), *res.argmax_bloch))
    out["profile_c"] = write_csv(
        "qubitlcu profile c: generalized amplitude damping, P = 0.6",
        {"P": 0.6, "grid": grid_n, "lam": lams},
        ["lam", "capacity", "coherent_info_mixed", "argmax_x", "argmax_y", "argmax_z"],
        rows,
    )
    return out


# ---------------------------------------------------------------------------
# Channel specs: compile and capacity
# ---------------------------------------------------------------------------


def _spec_family_params(spec: Mapping[str, Any]) -> tuple[str, dict[str, float]]:
    family = spec.get("family")
    if family is None:
        raise ConfigError("family: missing")
    if family == "kraus":
        raise ConfigError("family: 'kraus' channels have no LCU circuit; use a parameterized family")
    if family not in LCU_FAMILIES:
        raise ConfigError(f"family: unknown family {family!r}; expected one of {LCU_FAMILIES}")
    try:
        params = channels.normalize_params(spec.get("params", {}))
        lcu_route(family, params)
    except ChannelSpecError as exc:
        raise ConfigError(str(exc)) from None
    return family, params


def compile_spec(spec: Mapping[str, Any]) -> Circuit:
    family, params = _spec_family_params(spec)
    return compile_to_cnot_basis(channel_circuit(family, params))


def compile_channel(spec_file: str | Path, out: str | Path | None = None) -> tuple[str, dict[str, int]]:
    """Compile a JSON channel spec to OpenQASM; returns the text and gate counts."""
    circ = compile_spec(load_json_file(spec_file))
    text = export_qasm(circ)
    if out is not None:
        Path(out).write_text(text, encoding="utf-8")
    counts = circ.gate_counts()
    return text, {"single_qubit": counts["single_qubit"], "cnot": counts["cnot"]}


def spec_channel(spec: Mapping[str, Any]) -> QubitChannel:
    """Channel of a JSON spec; parameterized families go through the circuit."""
    if spec.get("family") == "kraus":
        try:
            return channels.channel_from_spec(spec)
        except ChannelSpecError as exc:
            raise ConfigError(str(exc)) from None
    family, params = _spec_family_params(spec)
    return simulated_channel(family, params)


def capacity_report(spec: Mapping[str, Any], grid_n: int = 21) -> str:
    ch = spec_channel(spec)
    report = channels.check_cptp(ch)
    if not report.ok:
        raise ConfigError(f"kraus: channel is not trace preserving (residual {report.completeness_residual:.3g})")
    res = one_shot_capacity(ch, grid_n)
    return write_csv(
        "qubitlcu capacity",
        {"spec": spec, "grid": grid_n},
        ["capacity", "argmax_x", "argmax_y", "argmax_z"],
        [(res.value, *res.argmax_bloch)],
    )
