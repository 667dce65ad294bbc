"""Transmon parameters from capacitance networks and SQUID junction energies.

Energies are represented as frequencies (E/h) in GHz throughout.  Charging
energies follow from inverse-capacitance matrix entries via

    E_C = e^2/(2h) * A_ii,     e^2/(2h) = 19.3702 fF*GHz (CODATA e, h),

with A in 1/fF.  A flux-biased two-junction SQUID with junction energies
``ej_small <= ej_large`` behaves as a single junction with

    E_J(phi_e)  = sqrt(ejs^2 + ejl^2 + 2*ejs*ejl*cos(phi_e))
    phi_0(phi_e) = atan(((ejs - ejl)/(ejs + ejl)) * tan(phi_e/2)).

Fourth-order expansion of the cosine gives the transmon frequency,
anharmonicity and zero-point fluctuations

    xi      = sqrt(2*E_C/E_J)
    omega   = sqrt(8*E_J*E_C) - E_C*(1 + xi/4)
    alpha   = -E_C*(1 + 9*xi/16)
    n_zpf   = (E_J/(8*E_C))^(1/4) / sqrt(2)
    phi_zpf = (8*E_C/E_J)^(1/4) / sqrt(2)      (n_zpf * phi_zpf = 1/2)

and the charge-coupling energy between two qubit modes i, j maps to an
exchange strength

    E_ij = e^2/(2h) * A_ij
    J_ij = E_ij/sqrt(2) * (E_Ji*E_Jj/(E_Ci*E_Cj))^(1/4) * (1 - (xi_i + xi_j)/8).

An exact charge-basis diagonalization is provided as an independent check on
the perturbative formulas.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.constants import e as _ELEMENTARY_CHARGE, h as _PLANCK
from scipy.linalg import eigh_tridiagonal

from .capnet import (
    MODE_QUBIT,
    CapacitanceNetwork,
    InverseBlock,
    build_matrix,
    floating_pair_transform,
    netlist_from_dict,
    reduce_and_invert,
    transform_matrix,
)
from .errors import InputError, RegimeError

# e^2/(2h) in fF*GHz: converts 1/fF inverse-capacitance entries to GHz.
FF_GHZ = _ELEMENTARY_CHARGE**2 / (2.0 * _PLANCK) * 1e6

# Default guard on the perturbative regime: E_J/E_C must be at least this.
MIN_EJ_EC_RATIO = 10.0


@dataclass(frozen=True)
class SquidSpec:
    """Asymmetric two-junction SQUID: junction energies (GHz) and flux bias (rad)."""

    ej_small: float
    ej_large: float
    phi_ext: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.ej_small <= self.ej_large):
            raise InputError(
                f"SquidSpec: requires 0 <= ej_small <= ej_large, "
                f"got ej_small={self.ej_small}, ej_large={self.ej_large}"
            )


@dataclass(frozen=True)
class QubitParams:
    """Derived transmon quantities, energies as frequencies in GHz."""

    ec: float
    ej: float
    xi: float
    omega: float
    alpha: float
    alpha_simple: float  # coarse convention alpha ~ -E_C
    n_zpf: float
    phi_zpf: float
    phi0: float = 0.0


@dataclass(frozen=True)
class CouplingParams:
    """Charge coupling energy and effective exchange strength (GHz)."""

    e12: float
    j12: float


def squid_effective_ej(spec: SquidSpec) -> float:
    """Effective Josephson energy of the SQUID at its flux bias (GHz)."""
    s, l, phi = spec.ej_small, spec.ej_large, spec.phi_ext
    inner = s * s + l * l + 2.0 * s * l * math.cos(phi)
    return math.sqrt(max(inner, 0.0))


def squid_phase_offset(spec: SquidSpec) -> float:
    """Junction phase offset of the SQUID, in (-pi/2, pi/2]."""
    s, l = spec.ej_small, spec.ej_large
    if s + l <= 0.0:
        raise InputError("squid_phase_offset: degenerate SQUID with both junction energies zero")
    return math.atan((s - l) / (s + l) * math.tan(spec.phi_ext / 2.0))


def transmon_params(
    ec: float,
    ej: float,
    phi0: float = 0.0,
    min_ratio: float = MIN_EJ_EC_RATIO,
) -> QubitParams:
    """Fourth-order transmon parameters from charging and Josephson energies.

    Parameters
    ----------
    ec, ej :
        Charging and effective Josephson energies in GHz; requires
        ``ej/ec >= min_ratio`` (transmon regime).
    phi0 :
        SQUID phase offset carried through to the result; it does not affect
        the spectrum.
    """
    if ec <= 0.0 or ej <= 0.0:
        raise RegimeError(f"transmon_params: ec and ej must be positive, got ec={ec}, ej={ej}")
    ratio = ej / ec
    if ratio < min_ratio:
        raise RegimeError(
            f"transmon_params: E_J/E_C = {ratio:.3f} below the perturbative guard "
            f"{min_ratio} (ec={ec} GHz, ej={ej} GHz)"
        )
    xi = math.sqrt(2.0 * ec / ej)
    omega = math.sqrt(8.0 * ej * ec) - ec * (1.0 + xi / 4.0)
    alpha = -ec * (1.0 + 9.0 * xi / 16.0)
    n_zpf = (ej / (8.0 * ec)) ** 0.25 / math.sqrt(2.0)
    phi_zpf = (8.0 * ec / ej) ** 0.25 / math.sqrt(2.0)
    return QubitParams(
        ec=ec,
        ej=ej,
        xi=xi,
        omega=omega,
        alpha=alpha,
        alpha_simple=-ec,
        n_zpf=n_zpf,
        phi_zpf=phi_zpf,
        phi0=phi0,
    )


def coupling_params(block: InverseBlock, q1: QubitParams, q2: QubitParams) -> CouplingParams:
    """Exchange coupling of two qubit modes from their 2x2 inverse block."""
    if len(block.labels) != 2:
        raise InputError(
            f"coupling_params: expected a 2x2 inverse block, got {len(block.labels)} modes"
        )
    e12 = FF_GHZ * float(block.entries[0, 1])
    j12 = (
        e12
        / math.sqrt(2.0)
        * (q1.ej * q2.ej / (q1.ec * q2.ec)) ** 0.25
        * (1.0 - (q1.xi + q2.xi) / 8.0)
    )
    return CouplingParams(e12=e12, j12=j12)


def charge_basis_spectrum(
    ec: float,
    ej: float,
    n_max: int = 20,
    check_levels: int = 3,
) -> np.ndarray:
    """Exact eigenfrequencies of ``4*ec*n^2 - ej*cos(phi)`` in the charge basis.

    Diagonalizes the (2*n_max+1)-dimensional tridiagonal matrix with
    ``4*ec*n^2`` on the diagonal and ``-ej/2`` on the two off-diagonals, and
    returns all eigenvalues sorted ascending, shifted so the ground level is
    zero.  The lowest ``check_levels`` eigenstates must carry less than 1e-8
    weight on the charge-basis boundary, otherwise ``n_max`` is deemed too
    small and :class:`RegimeError` is raised.

    The spectrum is invariant under ``ej -> -ej`` (a charge-basis gauge).
    """
    if ec <= 0.0:
        raise RegimeError(f"charge_basis_spectrum: ec must be positive, got {ec}")
    n_max = int(n_max)
    if n_max < 10:
        raise RegimeError(f"charge_basis_spectrum: n_max must be >= 10, got {n_max}")
    charge = np.arange(-n_max, n_max + 1, dtype=float)
    diag = 4.0 * ec * charge**2
    off = np.full(2 * n_max, -ej / 2.0)
    vals, vecs = eigh_tridiagonal(diag, off)
    order = np.argsort(vals)
    vals = vals[order]
    for level in range(min(check_levels, vals.size)):
        vec = vecs[:, order[level]]
        boundary = max(abs(vec[0]), abs(vec[-1]))
        if boundary > 1e-8:
            raise RegimeError(
                f"charge_basis_spectrum: n_max={n_max} too small, level {level} has "
                f"boundary weight {boundary:.2e} (ec={ec}, ej={ej})"
            )
    return vals - vals[0]


def swap_oscillation(j: float, detuning: float, t: float) -> float:
    """Excitation transfer probability of two exchange-coupled qubits.

    ``j`` and ``detuning`` in GHz, ``t`` in ns.  On resonance the transfer is
    complete at ``t = 1/(4j)`` and the oscillation period is ``1/(2j)``.
    """
    if j < 0.0:
        raise InputError(f"swap_oscillation: coupling must be >= 0, got {j}")
    g2 = j * j + 0.25 * detuning * detuning
    if g2 == 0.0:
        return 0.0
    return (j * j / g2) * math.sin(2.0 * math.pi * math.sqrt(g2) * t) ** 2


def ej_for_frequency(
    ec: float,
    omega_target: float,
    min_ratio: float = MIN_EJ_EC_RATIO,
    tol: float = 1e-6,
) -> float:
    """Josephson energy (GHz) whose transmon frequency equals ``omega_target``.

    Bisection on the monotone map ``ej -> omega(ec, ej)``; ``tol`` is the
    frequency tolerance in GHz.
    """
    if ec <= 0.0:
        raise RegimeError(f"ej_for_frequency: ec must be positive, got {ec}")
    lo = min_ratio * ec
    if transmon_params(ec, lo, min_ratio=min_ratio).omega > omega_target:
        raise RegimeError(
            f"ej_for_frequency: target {omega_target} GHz lies below the "
            f"E_J/E_C >= {min_ratio} regime for ec = {ec} GHz"
        )
    hi = lo
    for _ in range(64):
        hi *= 2.0
        if transmon_params(ec, hi, min_ratio=min_ratio).omega >= omega_target:
            break
    else:
        raise RegimeError(f"ej_for_frequency: could not bracket omega = {omega_target} GHz")
    while True:
        mid = 0.5 * (lo + hi)
        omega = transmon_params(ec, mid, min_ratio=min_ratio).omega
        if abs(omega - omega_target) <= tol and (hi - lo) <= 4.0 * tol * max(mid, 1.0):
            return mid
        if omega < omega_target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(hi, 1.0):
            return mid


def qubit_inverse_block(
    net: CapacitanceNetwork,
    qubit_pads: Sequence[tuple[str, str]],
) -> InverseBlock:
    """Inverse-capacitance block of the qubit difference modes of ``net``.

    ``qubit_pads`` lists the two pad nodes of each floating qubit; remaining
    nodes pass through as intermediate modes and are discarded after the full
    inversion.
    """
    pad_nodes = {n for pair in qubit_pads for n in pair}
    passthrough = [n for n in net.nodes if n not in pad_nodes]
    transform = floating_pair_transform(qubit_pads, passthrough, order=net.nodes)
    cap = build_matrix(net, net.nodes)
    modes = transform_matrix(cap, transform)
    return reduce_and_invert(modes, transform.mode_names(MODE_QUBIT))


def coupled_pair_netlist(
    c_coupler_fF: float,
    c_q1_coupler_fF: float,
    c_q2_coupler_fF: float,
    c_total1_fF: float,
    c_total2_fF: float,
    c_pads1_fF: float = 0.0,
    c_pads2_fF: float = 0.0,
    tol_fF: float = 1e-6,
) -> CapacitanceNetwork:
    """Two floating qubits joined by a grounded coupler island, sized to targets.

    Builds the five-node network ``1,2 | 3 | 4,5`` where nodes 1, 2 and 4, 5
    are the pads of qubits 1 and 2, node 3 is the coupler island with
    ``c_coupler_fF`` to ground, and ``c_q1_coupler_fF`` / ``c_q2_coupler_fF``
    couple one pad of each qubit (nodes 2 and 4) to the island.  The pad
    ground capacitances (equal within each qubit) are found by bisection so
    that each qubit's effective total capacitance ``1/A_ii`` matches its
    ``c_total`` target to within ``tol_fF``.
    """
    pads = [(("1", "2"), c_pads1_fF), (("5", "4"), c_pads2_fF)]
    targets = [c_total1_fF, c_total2_fF]
    for t in targets:
        if t <= 0:
            raise InputError(f"coupled_pair_netlist: total capacitance targets must be positive, got {t}")

    def network(c_pad1: float, c_pad2: float) -> CapacitanceNetwork:
        pairs = {
            ("2", "3"): c_q1_coupler_fF,
            ("3", "4"): c_q2_coupler_fF,
        }
        if c_pads1_fF > 0:
            pairs[("1", "2")] = c_pads1_fF
        if c_pads2_fF > 0:
            pairs[("4", "5")] = c_pads2_fF
        return CapacitanceNetwork(
            ("1", "2", "3", "4", "5"),
            {
                "1": c_pad1,
                "2": c_pad1,
                "3": c_coupler_fF,
                "4": c_pad2,
                "5": c_pad2,
            },
            pairs,
        )

    def totals(c_pad1: float, c_pad2: float) -> tuple[float, float]:
        block = qubit_inverse_block(network(c_pad1, c_pad2), [p for p, _ in pads])
        return 1.0 / block.entries[0, 0], 1.0 / block.entries[1, 1]

    # The effective total of each qubit is monotone in its own pad capacitance
    # and nearly independent of the other's; alternating bisections converge in
    # a few passes.
    c_pad = [2.0 * targets[0], 2.0 * targets[1]]
    for _ in range(8):
        for q in (0, 1):
            lo, hi = 1e-6, 4.0 * targets[q]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                trial = c_pad.copy()
                trial[q] = mid
                if totals(*trial)[q] < targets[q]:
                    lo = mid
                else:
                    hi = mid
            c_pad[q] = 0.5 * (lo + hi)
        achieved = totals(*c_pad)
        if all(abs(a - t) <= tol_fF for a, t in zip(achieved, targets)):
            break
    else:
        raise RegimeError(
            f"coupled_pair_netlist: pad sizing did not converge, achieved {achieved}, "
            f"targets {targets}"
        )
    return network(*c_pad)


# ---------------------------------------------------------------------------
# End-to-end design report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QubitDesign:
    pads: tuple[str, str]
    mode: str
    params: QubitParams


@dataclass(frozen=True)
class CouplingDesign:
    modes: tuple[str, str]
    params: CouplingParams


@dataclass(frozen=True)
class DesignReport:
    qubits: tuple[QubitDesign, ...]
    couplings: tuple[CouplingDesign, ...]

    def to_dict(self) -> dict:
        """JSON-ready report with GHz quantities rounded to 6 decimal places."""

        def ghz(x: float) -> float:
            return round(x, 6)

        return {
            "qubits": [
                {
                    "pads": list(q.pads),
                    "mode": q.mode,
                    "ec_GHz": ghz(q.params.ec),
                    "ej_GHz": ghz(q.params.ej),
                    "xi": q.params.xi,
                    "omega_GHz": ghz(q.params.omega),
                    "alpha_GHz": ghz(q.params.alpha),
                    "alpha_simple_GHz": ghz(q.params.alpha_simple),
                    "n_zpf": q.params.n_zpf,
                    "phi_zpf": q.params.phi_zpf,
                    "phi0_rad": q.params.phi0,
                }
                for q in self.qubits
            ],
            "couplings": [
                {
                    "modes": list(c.modes),
                    "e12_GHz": ghz(c.params.e12),
                    "j12_GHz": ghz(c.params.j12),
                }
                for c in self.couplings
            ],
        }


def derive_design(
    net: CapacitanceNetwork,
    squids: Sequence[tuple[tuple[str, str], SquidSpec]],
) -> DesignReport:
    """Full design report: per-qubit parameters and every pairwise coupling.

    ``squids`` pairs each floating qubit's pad nodes with its SQUID; the pad
    order fixes the qubit-mode sign convention.  Couplings are reported for
    all qubit pairs, including those whose inverse-block entry is zero.
    """
    if not squids:
        raise InputError("derive_design: at least one qubit (pad pair + SQUID) is required")
    pad_pairs = [tuple(str(n) for n in pads) for pads, _ in squids]
    block = qubit_inverse_block(net, pad_pairs)

    qubits: list[QubitDesign] = []
    for (pads, spec), mode in zip(squids, block.labels):
        ec = FF_GHZ * block.entry(mode, mode)
        ej = squid_effective_ej(spec)
        phi0 = squid_phase_offset(spec)
        params = transmon_params(ec, ej, phi0=phi0)
        qubits.append(QubitDesign(pads=tuple(pads), mode=mode, params=params))

    couplings: list[CouplingDesign] = []
    for i in range(len(qubits)):
        for j in range(i + 1, len(qubits)):
            mi, mj = block.labels[i], block.labels[j]
            sub = InverseBlock(
                (mi, mj),
                block.entries[np.ix_([i, j], [i, j])],
            )
            params = coupling_params(sub, qubits[i].params, qubits[j].params)
            couplings.append(CouplingDesign(modes=(mi, mj), params=params))

    return DesignReport(qubits=tuple(qubits), couplings=tuple(couplings))


# ---------------------------------------------------------------------------
# Design JSON interface
# ---------------------------------------------------------------------------

_SQUID_KEYS = {"qubit", "ejs_GHz", "ejl_GHz", "phi_ext_rad"}


def parse_design(text: str, source: str = "design") -> tuple[CapacitanceNetwork, list[tuple[tuple[str, str], SquidSpec]]]:
    """Parse a design JSON: netlist keys plus a top-level ``squids`` list."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise InputError(f"{source}: expected a JSON object at top level")
    net = netlist_from_dict(data, source=source, extra_keys=("squids",))
    squids_raw = data.get("squids", [])
    if not isinstance(squids_raw, list):
        raise InputError(f"{source}: 'squids' must be a list")
    squids: list[tuple[tuple[str, str], SquidSpec]] = []
    for i, entry in enumerate(squids_raw):
        if not isinstance(entry, dict) or set(entry) != _SQUID_KEYS:
            raise InputError(
                f"{source}: squids[{i}] must have exactly keys qubit, ejs_GHz, ejl_GHz, phi_ext_rad"
            )
        pads = entry["qubit"]
        if not (isinstance(pads, list) and len(pads) == 2 and all(isinstance(p, str) for p in pads)):
            raise InputError(f"{source}: squids[{i}].qubit must list exactly two pad node labels")
        for p in pads:
            if p not in net.nodes:
                raise InputError(f"{source}: squids[{i}].qubit: unknown node {p!r}")
        try:
            spec = SquidSpec(
                ej_small=float(entry["ejs_GHz"]),
                ej_large=float(entry["ejl_GHz"]),
                phi_ext=float(entry["phi_ext_rad"]),
            )
        except (TypeError, ValueError) as exc:
            raise InputError(f"{source}: squids[{i}]: {exc}") from None
        squids.append(((pads[0], pads[1]), spec))
    return net, squids


def load_design(path: str) -> tuple[CapacitanceNetwork, list[tuple[tuple[str, str], SquidSpec]]]:
    with open(path, encoding="utf-8") as fh:
        return parse_design(fh.read(), source=path)
