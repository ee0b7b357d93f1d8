"""OpenQASM 2.0 export and a parser for the subset it emits."""

from __future__ import annotations

import ast
import math
import operator
import re

import numpy as np

from .circuit import ANCILLA, CNOT, REFERENCE, SINGLE, WORK, Circuit, Gate, cnot, single
from .linalg import RejectedInputError

_SYMBOLIC = {1: "pi", 2: "pi/2", 4: "pi/4"}


def format_angle(x: float) -> str:
    x = math.remainder(float(x), 2 * math.pi)
    if abs(x) < 1e-14:
        return "0"
    if abs(x + math.pi) < 1e-12:
        x = math.pi
    for den, text in _SYMBOLIC.items():
        k = x * den / math.pi
        kr = round(k)
        if kr and abs(k - kr) < 1e-12 and math.gcd(kr, den) == 1:
            sign = "-" if kr < 0 else ""
            num = abs(kr)
            return sign + (text if num == 1 else f"{num}*{text}")
    return f"{x:.15g}"


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def eval_angle(text: str) -> float:
    """Evaluate an angle expression built from numbers, ``pi`` and + - * /."""

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = walk(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](walk(node.left), walk(node.right))
        raise ValueError(f"unsupported expression {text!r}")

    try:
        return float(walk(ast.parse(text.strip(), mode="eval")))
    except (SyntaxError, ZeroDivisionError):
        raise ValueError(f"cannot parse angle {text!r}") from None


def u3(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [[c, -np.exp(1j * lam) * s], [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]],
        dtype=complex,
    )


def u1(lam: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * lam)])


def u3_params(u: np.ndarray) -> tuple[float, float, float]:
    """Angles of u up to global phase, u proportional to u3(theta, phi, lam)."""
    theta = 2.0 * math.atan2(abs(u[1, 0]), abs(u[0, 0]))
    if abs(u[0, 0]) > 1e-12:
        gamma = np.angle(u[0, 0])
        if abs(u[1, 0]) > 1e-12:
            phi = np.angle(u[1, 0]) - gamma
            lam = np.angle(-u[0, 1]) - gamma
        else:
            phi = 0.0
            lam = np.angle(u[1, 1]) - gamma
    else:
        gamma = np.angle(u[1, 0])
        phi = 0.0
        lam = np.angle(-u[0, 1]) - gamma
    return float(theta), float(phi), float(lam)


def _gate_line(g: Gate) -> str:
    if g.kind == CNOT:
        (c, v), = g.controls
        if v != 1:
            raise RejectedInputError("cnot with control value 0 must be compiled first")
        return f"cx q[{c}],q[{g.targets[0]}];"
    if g.kind != SINGLE:
        raise RejectedInputError(f"cannot export {g.kind} gate {g.label!r}; compile the circuit first")
    u = g.matrix
    q = g.targets[0]
    if abs(u[0, 1]) < 1e-14 and abs(u[1, 0]) < 1e-14:
        return f"u1({format_angle(np.angle(u[1, 1] / u[0, 0]))}) q[{q}];"
    theta, phi, lam = u3_params(u)
    return f"u3({format_angle(theta)},{format_angle(phi)},{format_angle(lam)}) q[{q}];"


def export_qasm(c: Circuit) -> str:
    n = c.num_qubits
    lines = [
        "OPENQASM 2.0;",
        'include "qelib1.inc";',
        f"// roles: {' '.join(c.roles)}",
        f"qreg q[{n}];",
        f"creg c[{n}];",
    ]
    lines += [_gate_line(g) for g in c.gates]
    lines += [f"measure q[{q}] -> c[{q}];" for q in c.measure]
    return "\n".join(lines) + "\n"


_INSTR = re.compile(r"^(?P<name>[A-Za-z_][A-Za-z0-9_]*)\s*(?:\((?P<args>[^)]*)\))?\s*(?P<ops>.*)$")
_QREF = re.compile(r"^q\[(\d+)\]$")

_FIXED = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.diag([1.0, -1.0]).astype(complex),
    "h": np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
    "s": np.diag([1.0, 1j]),
    "sdg": np.diag([1.0, -1j]),
    "t": np.diag([1.0, np.exp(0.25j * math.pi)]),
    "tdg": np.diag([1.0, np.exp(-0.25j * math.pi)]),
    "id": np.eye(2, dtype=complex),
}


class QasmParseError(ValueError):
    pass


def _qubit(tok: str, n: int, lineno: int) -> int:
    m = _QREF.match(tok.strip())
    if not m or int(m.group(1)) >= n:
        raise QasmParseError(f"line {lineno}: bad qubit reference {tok.strip()!r}")
    return int(m.group(1))


def parse_qasm(text: str) -> Circuit:
    """Parse OpenQASM 2.0 restricted to one ``q`` register and u1/u2/u3/cx/basic gates."""
    n = None
    roles: tuple[str, ...] = ()
    gates: list[Gate] = []
    measure: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("// roles:"):
            roles = tuple(line.split(":", 1)[1].split())
            continue
        line = line.split("//", 1)[0].strip()
        if not line:
            continue
        for stmt in filter(None, (s.strip() for s in line.split(";"))):
            if stmt.startswith("OPENQASM") or stmt.startswith("include") or stmt.startswith("creg"):
                continue
            if stmt.startswith("qreg"):
                m = re.match(r"qreg\s+q\[(\d+)\]$", stmt)
                if not m:
                    raise QasmParseError(f"line {lineno}: only a register named q is supported")
                n = int(m.group(1))
                continue
            if n is None:
                raise QasmParseError(f"line {lineno}: instruction before qreg declaration")
            if stmt.startswith("barrier"):
                continue
            if stmt.startswith("measure"):
                m = re.match(r"measure\s+(\S+)\s*->\s*c\[\d+\]$", stmt)
                if not m:
                    raise QasmParseError(f"line {lineno}: malformed measure")
                measure.append(_qubit(m.group(1), n, lineno))
                continue
            m = _INSTR.match(stmt)
            if not m:
                raise QasmParseError(f"line {lineno}: cannot parse {stmt!r}")
            name = m.group("name").lower()
            args = [eval_angle(a) for a in m.group("args").split(",")] if m.group("args") else []
            ops = [_qubit(t, n, lineno) for t in m.group("ops").split(",")]
            if name in ("cx", "cnot") and len(ops) == 2:
                gates.append(cnot(ops[0], ops[1]))
            elif name in ("u3", "u") and len(args) == 3 and len(ops) == 1:
                gates.append(single(ops[0], u3(*args)))
            elif name == "u2" and len(args) == 2 and len(ops) == 1:
                gates.append(single(ops[0], u3(math.pi / 2, *args)))
            elif name in ("u1", "p") and len(args) == 1 and len(ops) == 1:
                gates.append(single(ops[0], u1(args[0])))
            elif name in _FIXED and not args and len(ops) == 1:
                gates.append(single(ops[0], _FIXED[name]))
            else:
                raise QasmParseError(f"line {lineno}: unsupported instruction {stmt!r}")
    if n is None:
        raise QasmParseError("missing qreg declaration")
    if len(roles) != n or any(r not in (ANCILLA, WORK, REFERENCE) for r in roles):
        roles = ()
    return Circuit(n, tuple(gates), roles, tuple(measure))
