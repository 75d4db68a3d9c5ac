"""Dense statevector backend for mixed-dimension registers.

Includes shot sampling under the whole-circuit error model (one Bernoulli
draw per shot with probability ``xi(C)``, on error the outcome is replaced by
uniform random digits) and stabilizer probe runs used for error awareness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clifford import CliffordCircuit, Gate, gate_unitary
from .paulis import PauliString, QuditRegister

NORM_TOL = 1e-12
DEFAULT_DIM_CAP = 4096


@dataclass(frozen=True)
class StateVector:
    register: QuditRegister
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.register.total_dim:
            raise ValueError(f"amplitude count {amps.size} does not match register dimension {self.register.total_dim}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state norm {norm} is not 1")
        amps = amps / norm
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class NoiseModel:
    """Per-gate error rates of the circuit-level depolarizing model."""

    xi_loc: float = 0.0
    xi_ent: float = 0.0
    xi_detect: float = 0.0

    def __post_init__(self):
        for name in ("xi_loc", "xi_ent", "xi_detect"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")


@dataclass
class ProbeTally:
    """Outcomes of stabilizer probe runs for one circuit."""

    n_error: int = 0
    n_ok: int = 0

    @property
    def total(self) -> int:
        return self.n_error + self.n_ok

    def record(self, error: bool) -> None:
        if error:
            self.n_error += 1
        else:
            self.n_ok += 1


def prepare_product_state(register: QuditRegister, qudit_amplitudes) -> StateVector:
    """Normalized tensor product of per-qudit amplitude lists."""
    if len(qudit_amplitudes) != register.q:
        raise ValueError(f"expected {register.q} per-qudit amplitude lists")
    vec = np.array([1.0], dtype=complex)
    for d, amps in zip(register.dims, qudit_amplitudes):
        a = np.asarray(amps, dtype=complex).reshape(-1)
        if a.size != d:
            raise ValueError(f"qudit amplitude list of length {a.size}, expected {d}")
        n = np.linalg.norm(a)
        if n == 0:
            raise ValueError("zero amplitude vector")
        vec = np.kron(vec, a / n)
    return StateVector(register, vec)


def basis_state(register: QuditRegister, digits) -> StateVector:
    vec = np.zeros(register.total_dim, dtype=complex)
    vec[digits_to_flat(digits, register.dims)] = 1.0
    return StateVector(register, vec)


def digits_to_flat(digits, dims) -> int:
    flat = 0
    for n, d in zip(digits, dims):
        if not 0 <= n < d:
            raise ValueError(f"digit {n} out of range for dimension {d}")
        flat = flat * d + int(n)
    return flat


def flat_to_digits(flat: int, dims) -> tuple[int, ...]:
    out = []
    for d in reversed(dims):
        out.append(flat % d)
        flat //= d
    return tuple(reversed(out))


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    dims = state.register.dims
    t = state.amplitudes.reshape(dims)
    if gate.is_entangling:
        c, tg = gate.qudits
        d = gate.dim
        moved = np.moveaxis(t, (c, tg), (0, 1))
        out = np.empty_like(moved)
        for i in range(d):
            out[i] = np.roll(moved[i], shift=i, axis=0)
        t = np.moveaxis(out, (0, 1), (c, tg))
    else:
        (k,) = gate.qudits
        u = gate_unitary(gate)
        t = np.moveaxis(np.tensordot(u, t, axes=([1], [k])), 0, k)
    return StateVector(state.register, t.reshape(-1))


def apply_circuit(state: StateVector, circuit: CliffordCircuit, dim_cap: int = DEFAULT_DIM_CAP) -> StateVector:
    """Gate-by-gate application; no dense circuit matrix is built."""
    if circuit.register != state.register:
        raise ValueError("circuit and state registers differ")
    if state.register.total_dim > dim_cap:
        raise ValueError(f"total dimension {state.register.total_dim} exceeds cap {dim_cap}")
    for g in circuit.gates:
        state = apply_gate(state, g)
    return state


def circuit_error_prob(circuit: CliffordCircuit, noise: NoiseModel) -> float:
    """Complement of the probability that no error occurs anywhere in the circuit."""
    return 1.0 - (
        (1.0 - noise.xi_detect)
        * (1.0 - noise.xi_ent) ** circuit.n_entangling
        * (1.0 - noise.xi_loc) ** circuit.n_local
    )


def sample_shot(state: StateVector, circuit: CliffordCircuit, noise: NoiseModel | None, rng) -> tuple[int, ...]:
    """One preparation-and-measurement repetition.

    The final computational outcome is drawn from ``|U psi|^2``; with
    probability ``xi(C)`` it is replaced by uniformly random digits.
    """
    out = apply_circuit(state, circuit)
    probs = out.probabilities()
    total = state.register.total_dim
    flat = int(rng.choice(total, p=probs / probs.sum()))
    if noise is not None:
        if rng.random() < circuit_error_prob(circuit, noise):
            flat = int(rng.integers(0, total))
    return flat_to_digits(flat, state.register.dims)


def outcome_to_eigenindex(digits, p: PauliString) -> tuple[int, int]:
    """Raw eigenvalue index of a diagonal string on a computational outcome.

    Returns ``(mu, phase_exp)``: the string's eigenvalue on ``|digits>`` is
    ``omega_{2 d_P}^{phase_exp} * omega_{d_P}^mu``.
    """
    if not p.is_diagonal():
        raise ValueError("outcome_to_eigenindex needs a diagonal string")
    d_p = p.register.d_p
    mu = 0
    for d, (_, s), n in zip(p.register.dims, p.exps, digits):
        mu += (d_p // d) * s * int(n)
    return mu % d_p, p.phase_exp


# -- stabilizer probes ---------------------------------------------------------

_CLASSICAL_KINDS = {"S", "S_inv", "Z"}  # diagonal: identity on digits


def build_probe_circuit(circuit: CliffordCircuit) -> tuple[CliffordCircuit, list[tuple]]:
    """Pad Fourier gates to the identity and extract the classical digit map.

    Each ``H`` (or ``H_inv``) is replaced by four copies (the Fourier
    transform has order 4), so the padded circuit maps computational states
    to computational states while keeping all local gates in the noise
    budget.  The returned op list describes the induced permutation of
    digits: X shifts, CSUM additions; diagonal gates act as the identity.
    """
    gates: list[Gate] = []
    ops: list[tuple] = []
    for g in circuit.gates:
        if g.kind in ("H", "H_inv"):
            gates.extend([g] * 4)
        elif g.kind == "X":
            gates.append(g)
            ops.append(("x", g.qudits[0], g.dim))
        elif g.kind == "CSUM":
            gates.append(g)
            ops.append(("csum", g.qudits[0], g.qudits[1], g.dim))
        elif g.kind in _CLASSICAL_KINDS:
            gates.append(g)
        else:
            raise ValueError(f"cannot build a computational-basis probe from gate {g.kind!r}")
    return CliffordCircuit(tuple(gates), circuit.register), ops


def _apply_classical(ops, digits, inverse=False):
    out = list(digits)
    for op in reversed(ops) if inverse else ops:
        if op[0] == "x":
            _, k, d = op
            out[k] = (out[k] + (-1 if inverse else 1)) % d
        else:
            _, c, t, d = op
            out[t] = (out[t] + (-out[c] if inverse else out[c])) % d
    return tuple(out)


def stabilizer_probe(circuit: CliffordCircuit, noise: NoiseModel | None, rng) -> bool:
    """Run one computational-in/computational-out probe of a padded circuit.

    Draws a random target output, classically inverts the probe circuit to
    find the input, simulates one noisy shot, and flags an error iff the
    measured digits differ from the target.
    """
    probe, ops = build_probe_circuit(circuit)
    register = circuit.register
    target = flat_to_digits(int(rng.integers(0, register.total_dim)), register.dims)
    digits_in = _apply_classical(ops, target, inverse=True)
    measured = sample_shot(basis_state(register, digits_in), probe, noise, rng)
    return measured != target


# -- expectation oracle and JSON ------------------------------------------------


def expectation(obs, state: StateVector) -> complex:
    """Dense <psi|O|psi> against an Observable (verification helper)."""
    from .observables import exact_expectation

    return exact_expectation(obs, state.amplitudes)


def state_to_json(qudit_amplitudes, dims) -> dict:
    return {
        "dims": list(dims),
        "qudits": [[[float(np.real(a)), float(np.imag(a))] for a in amps] for amps in qudit_amplitudes],
    }


def state_from_json(data: dict) -> StateVector:
    register = QuditRegister(tuple(int(d) for d in data["dims"]))
    amps = [[complex(e[0], e[1]) for e in qd] for qd in data["qudits"]]
    return prepare_product_state(register, amps)
