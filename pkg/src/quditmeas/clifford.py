"""Qudit Clifford gates, tableau-style conjugation, and clique diagonalization.

The gate set is the generalized Hadamard (discrete Fourier transform), the
phase gate, the controlled-SUM, and the Pauli shift/phase gates.  Conjugation
of Pauli strings is done purely on exponents with exact phase bookkeeping in
``omega_{2d}`` units per gate; dense matrices are only built by the oracles
:func:`gate_unitary` and :func:`circuit_unitary`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .paulis import PauliString, QuditRegister, local_matrix

LOCAL_KINDS = ("H", "H_inv", "S", "S_inv", "X", "Z")
GATE_KINDS = LOCAL_KINDS + ("CSUM",)


@dataclass(frozen=True)
class Gate:
    kind: str
    qudits: tuple[int, ...]
    dim: int

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        n = 2 if self.kind == "CSUM" else 1
        if len(self.qudits) != n:
            raise ValueError(f"{self.kind} acts on {n} qudit(s), got {self.qudits}")
        if self.kind == "CSUM" and self.qudits[0] == self.qudits[1]:
            raise ValueError("CSUM control and target must differ")

    @property
    def is_entangling(self) -> bool:
        return self.kind == "CSUM"


def _phase_diag(d: int) -> np.ndarray:
    """Diagonal of the phase gate S_d.

    For odd d this is ``omega_d^{j(j-1)/2}``.  That formula degenerates to the
    identity at d = 2 (``j(j-1)/2 = 0`` for j in {0,1}), which would leave the
    single-qubit Clifford group unable to map Y-type strings onto Z; for
    qubits we therefore use the standard phase gate diag(1, i).
    """
    if d == 2:
        return np.array([1.0, 1j], dtype=complex)
    j = np.arange(d)
    return np.exp(2j * np.pi / d) ** (j * (j - 1) // 2)


def gate_unitary(g: Gate) -> np.ndarray:
    """Dense matrix of a single gate on its own qudit(s)."""
    d = g.dim
    if g.kind in ("H", "H_inv"):
        j, i = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
        h = np.exp(2j * np.pi / d) ** (j * i) / np.sqrt(d)
        m = h.T  # H|j> = (1/sqrt d) sum_i omega^{ji} |i>
        return m if g.kind == "H" else m.conj().T
    if g.kind in ("S", "S_inv"):
        diag = _phase_diag(d)
        return np.diag(diag if g.kind == "S" else diag.conj())
    if g.kind == "X":
        return local_matrix(d, 1, 0).astype(complex)
    if g.kind == "Z":
        return local_matrix(d, 0, 1).astype(complex)
    # CSUM: |i>|j> -> |i>|(i+j) mod d>
    m = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            m[i * d + (i + j) % d, i * d + j] = 1.0
    return m


@dataclass(frozen=True)
class CliffordCircuit:
    gates: tuple[Gate, ...]
    register: QuditRegister

    def __post_init__(self):
        dims = self.register.dims
        for g in self.gates:
            for k in g.qudits:
                if not 0 <= k < len(dims):
                    raise ValueError(f"gate qudit {k} out of range")
                if dims[k] != g.dim:
                    raise ValueError(f"gate dimension {g.dim} does not match qudit {k} (d={dims[k]})")

    @property
    def n_local(self) -> int:
        return sum(1 for g in self.gates if not g.is_entangling)

    @property
    def n_entangling(self) -> int:
        return sum(1 for g in self.gates if g.is_entangling)

    @property
    def depth(self) -> int:
        """Layered depth; consecutive local gates on one qudit share a layer.

        A maximal run of single-qudit gates compiles to one local unitary, so
        bitwise-mode circuits report depth 1 regardless of how many primitive
        S gates build the local basis change.
        """
        level = [0] * self.register.q
        local_open = [False] * self.register.q
        depth = 0
        for g in self.gates:
            if g.is_entangling:
                a, b = g.qudits
                lvl = max(level[a], level[b]) + 1
                level[a] = level[b] = lvl
                local_open[a] = local_open[b] = False
            else:
                (k,) = g.qudits
                if local_open[k]:
                    lvl = level[k]
                else:
                    lvl = level[k] + 1
                    level[k] = lvl
                    local_open[k] = True
            depth = max(depth, lvl)
        return depth


def circuit_unitary(circuit: CliffordCircuit, dim_cap: int = 4096) -> np.ndarray:
    """Dense unitary of the whole circuit (test oracle only)."""
    dims = circuit.register.dims
    total = circuit.register.total_dim
    if total > dim_cap:
        raise ValueError(f"total dimension {total} exceeds cap {dim_cap}")
    u = np.eye(total, dtype=complex)
    for g in circuit.gates:
        u = _embed_gate(g, dims) @ u
    return u


def _embed_gate(g: Gate, dims: tuple[int, ...]) -> np.ndarray:
    total = int(np.prod(dims))
    if not g.is_entangling:
        mats = [gate_unitary(g) if k == g.qudits[0] else np.eye(d, dtype=complex) for k, d in enumerate(dims)]
        return reduce(np.kron, mats)
    c, t = g.qudits
    d = g.dim
    m = np.zeros((total, total), dtype=complex)
    idx = np.arange(total)
    digits = _flat_to_digits(idx, dims)
    new = digits.copy()
    new[:, t] = (digits[:, t] + digits[:, c]) % d
    m[_digits_to_flat(new, dims), idx] = 1.0
    return m


def _flat_to_digits(flat, dims):
    out = np.empty((np.size(flat), len(dims)), dtype=np.int64)
    rem = np.asarray(flat, dtype=np.int64).copy()
    for j in range(len(dims) - 1, -1, -1):
        out[:, j] = rem % dims[j]
        rem //= dims[j]
    return out


def _digits_to_flat(digits, dims):
    flat = np.zeros(digits.shape[0], dtype=np.int64)
    for j, d in enumerate(dims):
        flat = flat * d + digits[:, j]
    return flat


def conjugate_ps(circuit: CliffordCircuit, p: PauliString) -> PauliString:
    """Exact conjugation ``U P U^dag`` by symplectic per-gate updates.

    Exponent maps per gate (phase increments in omega_{2d} units, scaled by
    d_P/d into the string's global omega_{2 d_P} exponent):

    =========  ====================  ==================
    gate       (r, s) ->             phase increment
    =========  ====================  ==================
    H          (-s, r)               -2 r s
    H_inv      (s, -r)               -2 r s
    S          (r, s + r)            r(r-1)  [d odd], r  [d = 2]
    S_inv      (r, s - r)            -r(r-1) [d odd], -r [d = 2]
    X          (r, s)                -2 s
    Z          (r, s)                +2 r
    CSUM(c,t)  control (r_c, s_c - s_t), target (r_c + r_t, s_t); no phase
    =========  ====================  ==================
    """
    if circuit.register != p.register:
        raise ValueError("circuit and string registers differ")
    dims = p.register.dims
    d_p = p.register.d_p
    exps = list(p.exps)
    tau = p.phase_exp
    for g in circuit.gates:
        if g.is_entangling:
            c, t = g.qudits
            d = g.dim
            rc, sc = exps[c]
            rt, st = exps[t]
            exps[c] = (rc, (sc - st) % d)
            exps[t] = ((rc + rt) % d, st)
            continue
        (k,) = g.qudits
        d = dims[k]
        unit = d_p // d
        r, s = exps[k]
        if g.kind == "H":
            exps[k] = ((-s) % d, r)
            tau += unit * (-2 * r * s)
        elif g.kind == "H_inv":
            exps[k] = (s, (-r) % d)
            tau += unit * (-2 * r * s)
        elif g.kind == "S":
            exps[k] = (r, (s + r) % d)
            tau += unit * (r if d == 2 else r * (r - 1))
        elif g.kind == "S_inv":
            exps[k] = (r, (s - r) % d)
            tau -= unit * (r if d == 2 else r * (r - 1))
        elif g.kind == "X":
            tau += unit * (-2 * s)
        elif g.kind == "Z":
            tau += unit * (2 * r)
    return PauliString(p.register, tuple(exps), tau)


# -- clique diagonalization ----------------------------------------------------


def diagonalize_clique(strings, mode: str) -> CliffordCircuit:
    """Synthesize a circuit mapping every clique string (and every pairwise
    product) to a diagonal string.

    Bitwise mode emits one local basis change per qudit (depth 1, no
    entangling gates).  General mode runs symplectic Gaussian elimination
    independently per prime block: commutation factorizes over the distinct
    prime dimensions, so blocks never need to interact.
    """
    strings = list(strings)
    if not strings:
        raise ValueError("empty clique")
    register = strings[0].register
    if any(p.register != register for p in strings):
        raise ValueError("clique strings live on different registers")
    from .paulis import commutes_bitwise, commutes_general

    check = commutes_bitwise if mode == "bitwise" else commutes_general
    for i in range(len(strings)):
        for j in range(i + 1, len(strings)):
            if not check(strings[i], strings[j]):
                raise ValueError(f"strings {i} and {j} do not commute under {mode} mode")

    if mode == "bitwise":
        gates = _diagonalize_bitwise(strings, register)
    elif mode == "general":
        gates = []
        for d in sorted(set(register.dims)):
            block = [k for k, dk in enumerate(register.dims) if dk == d]
            gates.extend(_diagonalize_block(strings, block, d))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return CliffordCircuit(tuple(gates), register)


def _diagonalize_bitwise(strings, register) -> list[Gate]:
    gates = []
    for k, d in enumerate(register.dims):
        vecs = [p.exps[k] for p in strings if p.exps[k] != (0, 0)]
        if not vecs:
            continue
        alpha, beta = vecs[0]
        for r, s in vecs[1:]:
            if (alpha * s - beta * r) % d != 0:
                raise ValueError(f"per-qudit factors on qudit {k} are not collinear")
        if alpha == 0:
            continue  # already diagonal
        k_s = (-beta * pow(alpha, -1, d)) % d
        gates.extend(Gate("S", (k,), d) for _ in range(k_s))
        gates.append(Gate("H", (k,), d))
    return gates


def _diagonalize_block(strings, block: list[int], d: int) -> list[Gate]:
    """Symplectic elimination on the qudits of one prime dimension.

    Works on a basis of the group spanned by the clique's exponent vectors:
    a circuit that diagonalizes a basis diagonalizes every product as well.
    """
    n = len(block)
    rows = []
    for p in strings:
        vec = [p.exps[k][0] for k in block] + [p.exps[k][1] for k in block]
        rows.append(vec)
    tab = _rref(np.array(rows, dtype=np.int64) % d, d)
    if tab.shape[0] == 0:
        return []
    tab, pivots = _x_block_rref(tab, n, d)
    x, z = tab[:, :n], tab[:, n:]
    gates: list[Gate] = []

    def csum(c, t, times):
        times %= d
        if times == 0:
            return
        gates.extend(Gate("CSUM", (block[c], block[t]), d) for _ in range(times))
        x[:, t] = (x[:, t] + times * x[:, c]) % d
        z[:, c] = (z[:, c] - times * z[:, t]) % d

    # phase 1: leave each pivot row with a single X entry at its pivot column
    for i, c in enumerate(pivots):
        for l in range(n):
            if l != c and x[i, l] % d:
                csum(c, l, d - int(x[i, l]))

    # phase 2a: clear the Z sub-block on pivot columns (symmetric by commutation)
    for i, c in enumerate(pivots):
        k_s = (d - int(z[i, c])) % d
        if k_s:
            gates.extend(Gate("S", (block[c],), d) for _ in range(k_s))
            z[:, c] = (z[:, c] + k_s * x[:, c]) % d
    for i in range(len(pivots)):
        for j in range(i + 1, len(pivots)):
            ci, cj = pivots[i], pivots[j]
            if int(z[i, cj]) != int(z[j, ci]):
                raise AssertionError("commutation-symmetry breach in Z sub-block")
            times = int(z[i, cj]) % d
            if times:
                # H(t) CSUM(c,t)^times H_inv(t) realises the symmetric phase
                # coupling z_c -= times*x_t, z_t -= times*x_c
                gates.append(Gate("H", (block[cj],), d))
                gates.extend(Gate("CSUM", (block[ci], block[cj]), d) for _ in range(times))
                gates.append(Gate("H_inv", (block[cj],), d))
                z[:, cj] = (z[:, cj] - times * x[:, ci]) % d
                z[:, ci] = (z[:, ci] - times * x[:, cj]) % d

    # phase 2b: rotate X pivots into Z
    for i, c in enumerate(pivots):
        gates.append(Gate("H", (block[c],), d))
        xc = x[:, c].copy()
        x[:, c] = (-z[:, c]) % d
        z[:, c] = xc

    if np.any(x % d):
        raise AssertionError("block elimination failed to clear all X exponents")
    return gates


def _rref(mat: np.ndarray, d: int) -> np.ndarray:
    """Reduced row echelon form over F_d; returns the nonzero rows."""
    mat = mat.copy() % d
    rows, cols = mat.shape
    r = 0
    for c in range(cols):
        piv = None
        for i in range(r, rows):
            if mat[i, c] % d:
                piv = i
                break
        if piv is None:
            continue
        mat[[r, piv]] = mat[[piv, r]]
        mat[r] = (mat[r] * pow(int(mat[r, c]), -1, d)) % d
        for i in range(rows):
            if i != r and mat[i, c] % d:
                mat[i] = (mat[i] - mat[i, c] * mat[r]) % d
        r += 1
        if r == rows:
            break
    return mat[:r]


def _x_block_rref(tab: np.ndarray, n: int, d: int):
    """Row-reduce so the X block becomes an identity on its pivot columns.

    Pure-Z rows sink to the bottom; row operations are basis changes of the
    spanned group and act on the full (X|Z) vectors.
    """
    tab = tab.copy() % d
    rows = tab.shape[0]
    pivots = []
    r = 0
    for c in range(n):
        piv = None
        for i in range(r, rows):
            if tab[i, c] % d:
                piv = i
                break
        if piv is None:
            continue
        tab[[r, piv]] = tab[[piv, r]]
        tab[r] = (tab[r] * pow(int(tab[r, c]), -1, d)) % d
        for i in range(rows):
            if i != r and tab[i, c] % d:
                tab[i] = (tab[i] - tab[i, c] * tab[r]) % d
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return tab, pivots


def random_clifford_circuit(register: QuditRegister, n_gates: int, rng) -> CliffordCircuit:
    """Random circuit over the full gate set (test utility)."""
    dims = register.dims
    gates = []
    same_dim_pairs = [
        (a, b)
        for a in range(register.q)
        for b in range(register.q)
        if a != b and dims[a] == dims[b]
    ]
    for _ in range(n_gates):
        if same_dim_pairs and rng.random() < 0.3:
            a, b = same_dim_pairs[int(rng.integers(0, len(same_dim_pairs)))]
            gates.append(Gate("CSUM", (a, b), dims[a]))
        else:
            k = int(rng.integers(0, register.q))
            kind = str(rng.choice(["H", "H_inv", "S", "S_inv", "X", "Z"]))
            gates.append(Gate(kind, (k,), dims[k]))
    return CliffordCircuit(tuple(gates), register)


# -- serialization -------------------------------------------------------------


def circuit_to_json(circuit: CliffordCircuit) -> dict:
    return {
        "dims": list(circuit.register.dims),
        "gates": [{"kind": g.kind, "qudits": list(g.qudits), "dim": g.dim} for g in circuit.gates],
        "n_loc": circuit.n_local,
        "n_ent": circuit.n_entangling,
        "depth": circuit.depth,
    }


def circuit_from_json(data: dict) -> CliffordCircuit:
    register = QuditRegister(tuple(int(d) for d in data["dims"]))
    gates = tuple(Gate(g["kind"], tuple(int(k) for k in g["qudits"]), int(g["dim"])) for g in data["gates"])
    return CliffordCircuit(gates, register)
