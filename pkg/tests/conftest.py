import json

import numpy as np
import pytest

from abkit import fitkit, quantize, scaffold


@pytest.fixture(scope="session")
def gaussian_edge() -> scaffold.Profile:
    """Reflow-like edge: 3 um tall with a Gaussian tail of sigma = 10 um."""
    x = np.arange(0.0, 100.0 + 1e-9, 0.1)
    return scaffold.Profile(0.0, 0.1, 3.0 * np.exp(-(x**2) / 200.0))


@pytest.fixture(scope="session")
def triangular_edge() -> scaffold.Profile:
    x = np.arange(0.0, 60.0 + 1e-9, 0.1)
    return scaffold.Profile(0.0, 0.1, 3.0 * np.clip(1.0 - x / 30.0, 0.0, None))


@pytest.fixture(scope="session")
def cli_inputs(tmp_path_factory):
    """One directory with every sample input the CLI consumes."""
    root = tmp_path_factory.mktemp("cli_inputs")

    net = quantize.coupled_pair_netlist(29.5, 6.67, 6.75, 83.8, 83.9)
    design = {
        "nodes": list(net.nodes),
        "ground": {n: net.ground_cap(n) for n in net.nodes},
        "pairs": [
            {"a": a, "b": b, "c_fF": c} for (a, b), c in sorted(net.pairs.items())
        ],
        "squids": [
            {"qubit": ["1", "2"], "ejs_GHz": 5.1, "ejl_GHz": 5.1, "phi_ext_rad": 0.0},
            {"qubit": ["5", "4"], "ejs_GHz": 5.1, "ejl_GHz": 5.1, "phi_ext_rad": 0.0},
        ],
    }
    (root / "design.json").write_text(json.dumps(design))

    x = np.arange(0.0, 100.0 + 1e-9, 0.1)
    edge = scaffold.Profile(0.0, 0.1, 3.0 * np.exp(-(x**2) / 200.0))
    (root / "edge.csv").write_text(scaffold.format_profile_csv(edge))

    n = np.arange(0, 100, 10)
    lines = ["n_bridges,inv_qi"] + [f"{int(k)},{5e-7 + 3.84e-9 * k:.12e}" for k in n]
    (root / "loss.csv").write_text("\n".join(lines) + "\n")

    lines = ["n_bridges,resistance_ohm"] + [f"{int(k)},{4.0 + 1.97 * k:.12e}" for k in n]
    (root / "res.csv").write_text("\n".join(lines) + "\n")

    truth = fitkit.notch_result(6.3, 2.0e6, 1.0e5, 0.0)
    half = 5 * 6.3 / truth.q_loaded
    f = np.linspace(6.3 - half, 6.3 + half, 201)
    z = fitkit.notch_s21(f, truth)
    lines = ["f_GHz,re,im"] + [f"{fi:.12e},{zi.real:.12e},{zi.imag:.12e}" for fi, zi in zip(f, z)]
    (root / "s21.csv").write_text("\n".join(lines) + "\n")

    tls_truth = fitkit.TlsFitResult(f_delta0=4.81e-7, n_c=12.0, beta=0.9, q_hp=5.3e7)
    nph = np.logspace(-1, 6, 30)
    y = fitkit.tls_loss(nph, tls_truth)
    lines = ["n_photon,inv_qi"] + [f"{a:.12e},{b:.12e}" for a, b in zip(nph, y)]
    (root / "tls.csv").write_text("\n".join(lines) + "\n")

    units = {
        "units": [
            {
                "bridge": {"length_um": 60.0, "width_um": 16.0, "thickness_nm": 400.0},
                "pad": {"length_um": 5.0, "width_um": 34.0, "thickness_nm": 200.0},
                "resistance_ohm": 2.0,
            },
            {
                "bridge": {"length_um": 60.0, "width_um": 30.0, "thickness_nm": 400.0},
                "pad": None,
                "resistance_ohm": 1.05,
            },
        ]
    }
    (root / "units.json").write_text(json.dumps(units))

    layout_doc = {
        "paths": [
            {"id": "ro1", "role": "readout", "trace_um": 10, "gap_um": 6,
             "vertices": [[0, 0], [1000, 0]]},
            {"id": "ctl1", "role": "control", "trace_um": 5, "gap_um": 3,
             "vertices": [[0, 200], [500, 200], [500, 700]]},
        ]
    }
    (root / "layout.json").write_text(json.dumps(layout_doc))
    (root / "rule.json").write_text('{"spacing_um": 120.0, "end_margin_um": 60.0}')
    return root
