"""Two-photon linear optics over two spatial paths with polarization encoding.

Mode order is fixed as (control_H, control_V, target_H, target_V).  An
element's 4x4 transfer matrix maps input creation operators to output
creation operators, so column k holds the output amplitudes of a single
photon injected in mode k.  Lossy elements (attenuators whose reflected
port is discarded) carry sub-unitary transfers; post-selection on one
photon per output path removes those events anyway, which keeps the state
space at four modes.

The controlled-phase construction is the standard three-splitter one: a
central splitter that passes H perfectly and splits V with transmission
1/3, followed by one H-attenuating splitter (transmission 1/3 for H) on
each path to rebalance amplitudes.  When both photons are vertical and
indistinguishable, two-photon interference at the central splitter flips
the sign of the coincidence amplitude, yielding the conditional map
diag(1, 1, 1, -1)/3 on (HH, HV, VH, VV) and a 1/9 success probability.

Splitter phase convention: the V modes mix by the rotation
[[t, -r], [r, t]] with t = sqrt(1/3), r = sqrt(2/3), which makes the VV
coincidence amplitude t^2 - r^2 = -1/3 explicit.

Partial distinguishability is modeled as a convex mixture: weight M of the
fully interfering (permanent) outcome and weight 1-M of the classical
photon-to-path assignment sum, where M is the squared overlap of the two
photon wavepackets.  A measured two-photon interference visibility is used
directly as M (identity calibration).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jones

PATHS = ("control", "target")
MODE_NAMES = ("control_H", "control_V", "target_H", "target_V")

#: computational two-qubit basis order used for all tables and matrices
BASIS_ZZ = ("HH", "HV", "VH", "VV")
BASIS_XX = ("DD", "DA", "AD", "AA")

_SV_TOL = 1e-12


class ZeroSuccessProbability(ValueError):
    """Post-selected state undefined: coincidence probability is zero."""


class UnknownElement(ValueError):
    """Unparseable element label."""


@dataclass(frozen=True)
class LinearElement:
    """One linear-optical element with its 4x4 mode-transfer matrix."""

    label: str
    transfer: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.transfer, dtype=complex)
        if t.shape != (4, 4):
            raise ValueError("transfer must be 4x4")
        smax = np.linalg.svd(t, compute_uv=False)[0]
        if smax > 1.0 + _SV_TOL:
            raise ValueError(f"transfer amplifies: max singular value {smax}")
        object.__setattr__(self, "transfer", t)

    @property
    def is_unitary(self) -> bool:
        dev = np.max(np.abs(self.transfer.conj().T @ self.transfer - np.eye(4)))
        return bool(dev < 1e-10)


@dataclass(frozen=True)
class TwoPhotonInput:
    """One photon per path plus the wavepacket overlap M in [0, 1]."""

    control: np.ndarray
    target: np.ndarray
    overlap: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.control, dtype=complex)
        t = np.asarray(self.target, dtype=complex)
        for name, v in (("control", c), ("target", t)):
            if v.shape != (2,):
                raise ValueError(f"{name} must be a Jones 2-vector")
            if abs(np.vdot(v, v).real - 1.0) > 1e-10:
                raise ValueError(f"{name} Jones vector not normalized")
        if not 0.0 <= self.overlap <= 1.0:
            raise ValueError(f"overlap must lie in [0, 1], got {self.overlap}")
        object.__setattr__(self, "control", c)
        object.__setattr__(self, "target", t)


@dataclass(frozen=True)
class PostSelectedState:
    """Conditional two-qubit state on coincidence plus its probability."""

    rho: np.ndarray
    success_prob: float

    def __post_init__(self):
        r = np.asarray(self.rho, dtype=complex)
        if r.shape != (4, 4):
            raise ValueError("rho must be 4x4")
        if np.max(np.abs(r - r.conj().T)) > 1e-10:
            raise ValueError("rho not Hermitian")
        if abs(np.trace(r).real - 1.0) > 1e-10:
            raise ValueError("rho trace != 1")
        if np.min(np.linalg.eigvalsh(r)) < -1e-10:
            raise ValueError("rho not positive semidefinite")
        if not 0.0 <= self.success_prob <= 1.0:
            raise ValueError("success_prob outside [0, 1]")
        object.__setattr__(self, "rho", r)


def _path_slice(path: str) -> slice:
    if path == "control":
        return slice(0, 2)
    if path == "target":
        return slice(2, 4)
    raise ValueError(f"path must be 'control' or 'target', got {path!r}")


def ppbs_central() -> LinearElement:
    """Central partially polarizing splitter: T_H = 1, T_V = 1/3, R_V = 2/3."""
    t, r = np.sqrt(1.0 / 3.0), np.sqrt(2.0 / 3.0)
    m = np.eye(4, dtype=complex)
    m[1, 1] = t
    m[1, 3] = -r
    m[3, 1] = r
    m[3, 3] = t
    return LinearElement("ppbs_central", m)


def ppbs_attenuator(path: str) -> LinearElement:
    """Rotated splitter on one path: H transmission 1/3, V untouched.

    The reflected port is discarded, so the transfer is sub-unitary.
    """
    sl = _path_slice(path)
    m = np.eye(4, dtype=complex)
    m[sl.start, sl.start] = np.sqrt(1.0 / 3.0)
    return LinearElement(f"ppbs_attenuator:{path}", m)


def waveplate(kind: str, path: str, theta_deg: float) -> LinearElement:
    """Half- or quarter-wave plate acting on one path."""
    theta = np.deg2rad(theta_deg)
    if kind == "hwp":
        j = jones.hwp(theta)
    elif kind == "qwp":
        j = jones.qwp(theta)
    else:
        raise UnknownElement(f"waveplate kind must be hwp or qwp, got {kind!r}")
    sl = _path_slice(path)
    m = np.eye(4, dtype=complex)
    m[sl, sl] = j
    return LinearElement(f"{kind}:{path}:{theta_deg:g}deg", m)


def build_cz() -> list[LinearElement]:
    """Three-splitter controlled-phase gate (success probability 1/9)."""
    return [ppbs_central(), ppbs_attenuator("control"), ppbs_attenuator("target")]


def build_cnot() -> list[LinearElement]:
    """CNOT: Hadamard waveplates on the target around the CZ core."""
    return [waveplate("hwp", "target", 22.5), *build_cz(), waveplate("hwp", "target", 22.5)]


def elements_to_json(elements: list[LinearElement]) -> list[str]:
    """Serializable description: ordered element labels."""
    return [e.label for e in elements]


def elements_from_json(labels: list[str]) -> list[LinearElement]:
    """Rebuild an element list from its label description."""
    out = []
    for label in labels:
        parts = label.split(":")
        if parts[0] == "ppbs_central":
            out.append(ppbs_central())
        elif parts[0] == "ppbs_attenuator" and len(parts) == 2:
            out.append(ppbs_attenuator(parts[1]))
        elif parts[0] in ("hwp", "qwp") and len(parts) == 3 and parts[2].endswith("deg"):
            out.append(waveplate(parts[0], parts[1], float(parts[2][:-3])))
        else:
            raise UnknownElement(f"cannot parse element label {label!r}")
    return out


def compose_transfer(elements: list[LinearElement]) -> np.ndarray:
    """Total transfer of elements applied in list order."""
    if not elements:
        raise ValueError("element list must be nonempty")
    u = np.eye(4, dtype=complex)
    for e in elements:
        u = e.transfer @ u
    return u


def _single_photon_outputs(u, inp: TwoPhotonInput):
    a = u @ np.array([inp.control[0], inp.control[1], 0.0, 0.0], dtype=complex)
    b = u @ np.array([0.0, 0.0, inp.target[0], inp.target[1]], dtype=complex)
    return a, b


def two_photon_amplitudes(elements: list[LinearElement], inp: TwoPhotonInput) -> np.ndarray:
    """Coincidence amplitudes for fully indistinguishable photons.

    Returns the unnormalized 4-vector over (HH, HV, VH, VV): entry (a, b) is
    the 2x2 permanent of the composed transfer restricted to the occupied
    input modes and output modes (a in the control path, b in the target
    path).  Because each photon enters a disjoint pair of modes the permanent
    sum factorizes as u_a w_b + w_a u_b.
    """
    u_vec, w_vec = _single_photon_outputs(compose_transfer(elements), inp)
    return np.array(
        [u_vec[a] * w_vec[b] + w_vec[a] * u_vec[b] for a in (0, 1) for b in (2, 3)],
        dtype=complex,
    )


def _distinguishable_conditional(u, inp: TwoPhotonInput):
    # Classical assignment sum: each photon scatters independently; the two
    # photon-to-output-path assignments are orthogonal outcomes, so their
    # (unnormalized) product states add as a mixture.
    a, b = _single_photon_outputs(u, inp)
    first = np.kron(a[:2], b[2:])  # control photon stays control, target stays target
    second = np.kron(b[:2], a[2:])  # paths swapped
    rho = np.outer(first, first.conj()) + np.outer(second, second.conj())
    return rho, float(np.trace(rho).real)


def coincidence_evolve(elements: list[LinearElement], inp: TwoPhotonInput) -> PostSelectedState:
    """Propagate two photons and post-select on one photon per output path.

    The output density matrix is the overlap-weighted mixture of the
    interfering and non-interfering components, renormalized on the
    coincidence subspace; success_prob is the matching mixture of the two
    coincidence probabilities.
    """
    u = compose_transfer(elements)
    psi = two_photon_amplitudes(elements, inp)
    rho_ind = np.outer(psi, psi.conj())
    p_ind = float(np.vdot(psi, psi).real)
    rho_dist, p_dist = _distinguishable_conditional(u, inp)

    m = inp.overlap
    p = m * p_ind + (1.0 - m) * p_dist
    if p < 1e-15:
        raise ZeroSuccessProbability("coincidence probability below 1e-15")
    rho = (m * rho_ind + (1.0 - m) * rho_dist) / p
    rho = 0.5 * (rho + rho.conj().T)  # scrub float asymmetry
    return PostSelectedState(rho=rho, success_prob=p)


def _basis_pairs(basis: str):
    if basis == "ZZ":
        labels = BASIS_ZZ
    elif basis == "XX":
        labels = BASIS_XX
    else:
        raise ValueError(f"basis must be 'ZZ' or 'XX', got {basis!r}")
    return labels, [
        (jones.basis_state(lbl[0]), jones.basis_state(lbl[1])) for lbl in labels
    ]


def truth_table(elements: list[LinearElement], overlap: float, basis: str = "ZZ") -> np.ndarray:
    """4x4 conditional output probabilities, rows = inputs, cols = outcomes.

    ZZ uses the H/V product states, XX the D/A ones, in the fixed orders
    BASIS_ZZ and BASIS_XX.  Rows are conditional on coincidence and sum to 1.
    """
    _, pairs = _basis_pairs(basis)
    probes = [np.kron(c, t) for c, t in pairs]
    table = np.empty((4, 4))
    for i, (c, t) in enumerate(pairs):
        state = coincidence_evolve(elements, TwoPhotonInput(c, t, overlap))
        for j, probe in enumerate(probes):
            table[i, j] = float(np.real(probe.conj() @ state.rho @ probe))
    return table


#: correct-outcome column for each input row of an ideal CNOT
_CNOT_PATTERN = {"ZZ": (0, 1, 3, 2), "XX": (0, 3, 2, 1)}


def basis_fidelity(table: np.ndarray, basis: str) -> float:
    """Mean probability of the four correct CNOT outcomes in a basis table."""
    pattern = _CNOT_PATTERN[basis]
    t = np.asarray(table, dtype=float)
    if t.shape != (4, 4):
        raise ValueError("table must be 4x4")
    return float(np.mean([t[i, j] for i, j in enumerate(pattern)]))
