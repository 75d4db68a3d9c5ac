"""Commutation graph, overlapping clique covers, tallies, and the estimator.

The graph's vertices are the observable's Pauli strings; edges join commuting
pairs under the chosen rule (general or bitwise).  Tallies hold canonical
eigenvalue-index counts for every vertex and difference-class counts for
every jointly measured pair, so data from different cliques and circuits
merge without phase ambiguity.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .bayes import ps_mean, self_covariance
from .observables import Observable
from .paulis import commutes_bitwise, commutes_general, spectral_offset

MODES = ("general", "bitwise")
IMAG_WARN_TOL = 1e-9


@dataclass
class Clique:
    vertices: tuple[int, ...]
    circuit: object | None = None  # CliffordCircuit once synthesized

    @property
    def n_local(self) -> int:
        return self.circuit.n_local if self.circuit is not None else 0

    @property
    def n_entangling(self) -> int:
        return self.circuit.n_entangling if self.circuit is not None else 0


class TallyStore:
    """Outcome counts for vertices and jointly measured pairs.

    ``s[i, mu]`` counts canonical eigenvalue indices of string i; ``m[i]`` is
    its total shot count.  For each measured pair (i < j), ``pair_s[(i, j)]``
    counts the difference classes of the (1,1) product string and
    ``pair_m[(i, j)]`` the number of joint shots.  Priors default to 1.
    """

    def __init__(self, p: int, d_p: int, priors: np.ndarray | None = None):
        self.p = p
        self.d_p = d_p
        self.s = np.zeros((p, d_p), dtype=np.int64)
        self.m = np.zeros(p, dtype=np.int64)
        self.pair_m: dict[tuple[int, int], int] = {}
        self.pair_s: dict[tuple[int, int], np.ndarray] = {}
        self.priors = np.ones((p, d_p)) if priors is None else np.asarray(priors, dtype=float)
        if self.priors.shape != (p, d_p):
            raise ValueError("prior array shape mismatch")
        self.version = np.zeros(p, dtype=np.int64)

    @staticmethod
    def _key(i: int, j: int) -> tuple[int, int]:
        return (i, j) if i < j else (j, i)

    def add_vertex_counts(self, i: int, counts: np.ndarray) -> None:
        counts = np.asarray(counts, dtype=np.int64)
        if counts.shape != (self.d_p,) or np.any(counts < 0):
            raise ValueError("invalid count vector")
        self.s[i] += counts
        self.m[i] += int(counts.sum())
        self.version[i] += 1

    def add_pair_counts(self, i: int, j: int, counts: np.ndarray) -> None:
        if i == j:
            raise ValueError("pair counts need distinct vertices")
        counts = np.asarray(counts, dtype=np.int64)
        if counts.shape != (self.d_p,) or np.any(counts < 0):
            raise ValueError("invalid count vector")
        key = self._key(i, j)
        if key not in self.pair_s:
            self.pair_s[key] = np.zeros(self.d_p, dtype=np.int64)
            self.pair_m[key] = 0
        self.pair_s[key] += counts
        self.pair_m[key] += int(counts.sum())

    def m_of(self, i: int) -> int:
        return int(self.m[i])

    def m_pair(self, i: int, j: int) -> int:
        if i == j:
            return int(self.m[i])
        return int(self.pair_m.get(self._key(i, j), 0))

    def s_pair(self, i: int, j: int) -> np.ndarray:
        if i == j:
            raise ValueError("diagonal has no product tally")
        return self.pair_s.get(self._key(i, j), np.zeros(self.d_p, dtype=np.int64))

    def pair_fingerprint(self, i: int, j: int) -> tuple[int, int]:
        """Changes whenever the pair's posterior inputs change."""
        key = self._key(i, j)
        return (int(self.version[key[0]]), int(self.version[key[1]]))

    def validate(self) -> None:
        for (i, j), m_ij in self.pair_m.items():
            if m_ij > min(self.m[i], self.m[j]):
                raise AssertionError(f"pair ({i},{j}) has m_ij={m_ij} above min(m_i, m_j)")
            if int(self.pair_s[(i, j)].sum()) != m_ij:
                raise AssertionError(f"pair ({i},{j}) count total mismatch")


class CommutationGraph:
    def __init__(self, observable: Observable, mode: str):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.observable = observable
        self.mode = mode
        p = observable.p
        strings = observable.strings()
        check = commutes_general if mode == "general" else commutes_bitwise
        adj = np.eye(p, dtype=bool)
        for i in range(p):
            for j in range(i + 1, p):
                adj[i, j] = adj[j, i] = check(strings[i], strings[j])
        self.adjacency = adj
        self.offsets = np.array([spectral_offset(s) for s in strings], dtype=np.int64)
        self.cliques: list[Clique] = []
        self.tallies = TallyStore(p, observable.register.d_p)

    @property
    def p(self) -> int:
        return self.observable.p

    def edges(self):
        p = self.p
        for i in range(p):
            for j in range(i + 1, p):
                if self.adjacency[i, j]:
                    yield (i, j)

    def is_clique(self, vertices) -> bool:
        vs = list(vertices)
        return all(self.adjacency[a, b] for k, a in enumerate(vs) for b in vs[k + 1 :])


def build_graph(obs: Observable, mode: str) -> CommutationGraph:
    if obs.p < 1:
        raise ValueError("observable has no terms")
    return CommutationGraph(obs, mode)


def clique_cover(graph: CommutationGraph) -> list[Clique]:
    """Deterministic greedy cover with overlaps.

    Vertices are processed by decreasing |c| (ties: lowest index).  Every
    still-uncovered vertex seeds a clique grown greedily by the largest-|c|
    compatible vertex; a second pass seeds one clique at every vertex to
    create overlaps.  Duplicates are removed and the list capped at 3p.
    """
    p = graph.p
    coeffs = np.abs(graph.observable.coefficients())
    order = sorted(range(p), key=lambda i: (-coeffs[i], i))

    def grow(seed: int) -> tuple[int, ...]:
        members = [seed]
        for cand in order:
            if cand in members:
                continue
            if all(graph.adjacency[cand, m] for m in members):
                members.append(cand)
        return tuple(sorted(members))

    seen: set[tuple[int, ...]] = set()
    cliques: list[Clique] = []
    covered = np.zeros(p, dtype=bool)
    for v in order:
        if covered[v]:
            continue
        members = grow(v)
        covered[list(members)] = True
        if members not in seen:
            seen.add(members)
            cliques.append(Clique(members))
    for v in order:
        members = grow(v)
        if members not in seen:
            seen.add(members)
            cliques.append(Clique(members))
        if len(cliques) >= 3 * p:
            break
    graph.cliques = cliques
    return cliques


def scaled_covariance(m_i: int, m_j: int, m_ij: int, q_ij: complex) -> complex:
    """(m_ij + 2) / ((m_i + 2)(m_j + 2)) times the covariance estimate."""
    return (m_ij + 2.0) / ((m_i + 2.0) * (m_j + 2.0)) * q_ij


@dataclass
class EdgeEstimates:
    """Point estimates feeding the estimator.

    ``q_pairs`` maps (i, j) with i < j to the full covariance estimate
    (spectral phases included); the (j, i) value is its conjugate.
    ``fingerprints`` records the tally state each pair estimate was computed
    from, so only stale pairs are re-estimated.
    """

    p_means: np.ndarray
    q_diag: np.ndarray
    q_pairs: dict[tuple[int, int], complex] = field(default_factory=dict)
    fingerprints: dict[tuple[int, int], tuple[int, int]] = field(default_factory=dict)

    @classmethod
    def from_tallies(cls, graph: CommutationGraph) -> "EdgeEstimates":
        """Vertex-level estimates from the current tallies (pairs not filled)."""
        p = graph.p
        strings = graph.observable.strings()
        p_means = np.zeros(p, dtype=complex)
        q_diag = np.zeros(p, dtype=complex)
        t = graph.tallies
        for i in range(p):
            phased = _with_phase(strings[i], int(graph.offsets[i]))
            p_means[i] = ps_mean(phased, t.s[i], t.priors[i])
            q_diag[i] = self_covariance(t.s[i], t.priors[i])
        return cls(p_means=p_means, q_diag=q_diag)

    @classmethod
    def non_adaptive(cls, graph: CommutationGraph) -> "EdgeEstimates":
        """Weight-only defaults: unit variances, zero covariances."""
        p = graph.p
        est = cls(p_means=np.zeros(p, dtype=complex), q_diag=np.ones(p, dtype=complex))
        for i, j in graph.edges():
            est.q_pairs[(i, j)] = 0.0 + 0.0j
        return est


def _with_phase(string, phase_exp: int):
    from .paulis import PauliString

    if string.phase_exp == phase_exp:
        return string
    return PauliString(string.register, string.exps, phase_exp)


def estimate_observable(graph: CommutationGraph, est: EdgeEstimates) -> tuple[complex, float]:
    """Point estimate and estimation variance from current edge estimates.

    The variance is the conjugate-bilinear combination
    ``sum_ij conj(c_i) c_j scaled_covariance(i, j)``; with the conjugate on
    the first coefficient the diagonal carries |c_i|^2 (as in the graph's
    self-edge weights) and the total stays nonnegative for hermitian
    observables even when Pauli strings are hermitian only up to phase.
    """
    coeffs = graph.observable.coefficients()
    t = graph.tallies
    o_est = complex(np.sum(coeffs * est.p_means))
    var = 0.0 + 0.0j
    for i in range(graph.p):
        var += abs(coeffs[i]) ** 2 * scaled_covariance(t.m_of(i), t.m_of(i), t.m_of(i), est.q_diag[i])
    for i, j in graph.edges():
        if (i, j) not in est.q_pairs:
            if t.m_pair(i, j) > 0:
                raise ValueError(f"measured pair ({i},{j}) has no covariance estimate")
            continue
        q_ij = est.q_pairs[(i, j)]
        contrib = np.conj(coeffs[i]) * coeffs[j] * q_ij
        var += 2.0 * scaled_covariance(t.m_of(i), t.m_of(j), t.m_pair(i, j), contrib.real)
    if graph.observable.hermitian:
        if abs(o_est.imag) > IMAG_WARN_TOL * max(1.0, abs(o_est.real)):
            warnings.warn(f"hermitian observable produced imaginary mean {o_est.imag:.3e}")
        if abs(var.imag) > IMAG_WARN_TOL * max(1.0, abs(var.real)):
            warnings.warn(f"hermitian observable produced imaginary variance {var.imag:.3e}")
        o_est = complex(o_est.real, 0.0)
    return o_est, float(var.real)


def variance_decrease(graph: CommutationGraph, est: EdgeEstimates, clique: Clique, batch: int) -> float:
    """Variance drop from granting ``batch`` extra shots to one clique.

    All covariance estimates are held fixed; only the (m+2) scalings move.
    Terms not touching the clique cancel, so only pairs with at least one
    member inside are evaluated.
    """
    if batch < 1:
        raise ValueError("batch size must be >= 1")
    inside = set(clique.vertices)
    coeffs = graph.observable.coefficients()
    t = graph.tallies
    delta = 0.0

    def scale(m_i, m_j, m_ij):
        return (m_ij + 2.0) / ((m_i + 2.0) * (m_j + 2.0))

    for i in range(graph.p):
        if i not in inside:
            continue
        m_i = t.m_of(i)
        q = est.q_diag[i].real * abs(coeffs[i]) ** 2
        delta += q * (scale(m_i, m_i, m_i) - scale(m_i + batch, m_i + batch, m_i + batch))
    for i, j in graph.edges():
        if i not in inside and j not in inside:
            continue
        q_ij = est.q_pairs.get((i, j))
        if q_ij is None:
            continue
        w = 2.0 * (np.conj(coeffs[i]) * coeffs[j] * q_ij).real
        m_i, m_j, m_ij = t.m_of(i), t.m_of(j), t.m_pair(i, j)
        bi = batch if i in inside else 0
        bj = batch if j in inside else 0
        bij = batch if (i in inside and j in inside) else 0
        delta += w * (scale(m_i, m_j, m_ij) - scale(m_i + bi, m_j + bj, m_ij + bij))
    return float(delta)


def graph_to_json(graph: CommutationGraph) -> dict:
    return {
        "mode": graph.mode,
        "dims": list(graph.observable.register.dims),
        "vertices": [
            {"index": i, "re": float(c.real), "im": float(c.imag), "paulis": [[r, s] for r, s in p.exps]}
            for i, (c, p) in enumerate(graph.observable.terms)
        ],
        "edges": [[i, j] for i, j in graph.edges()],
        "cliques": [list(c.vertices) for c in graph.cliques],
    }
