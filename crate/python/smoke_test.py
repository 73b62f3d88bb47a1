#!/usr/bin/env python3
"""Smoke test for the thermoleak_py extension module.

Build the module first:

    cargo build -p thermoleak-python

then run this script with any Python >= 3.9.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def import_module():
    names = ["libthermoleak_py.so", "libthermoleak_py.dylib", "thermoleak_py.dll"]
    candidates = [
        ROOT / "target" / profile / name
        for profile in ("debug", "release")
        for name in names
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("no built module found; run `cargo build -p thermoleak-python` first")
    stage = Path(tempfile.mkdtemp(prefix="thermoleak-py-"))
    shutil.copy(built, stage / "thermoleak_py.so")
    sys.path.insert(0, str(stage))
    import thermoleak_py

    return thermoleak_py


def main():
    tl = import_module()
    thetas = [0.25 * math.pi, 0.4 * math.pi, 0.25 * math.pi]

    # leak detection on the reference circuit
    circuit = tl.Circuit.fig2b()
    assert circuit.qubit_count == 3 and circuit.gate_count == 3
    ensemble = tl.Ensemble(thetas)
    p0 = ensemble.populations()
    assert abs(sum(p0) - 1.0) < 1e-12
    pf = tl.propagate(circuit, p0)

    b = tl.Observable.thermal(thetas[:2])
    p0_sys = tl.marginal(p0, 3, [0, 1])
    pf_sys = tl.marginal(pf, 3, [0, 1])
    sweep = tl.exact_sweep(b, p0_sys, pf_sys, tl.default_alpha_grid())
    assert sweep.value_at(1.0) > 0, "second law alone must stay silent"
    assert sweep.value_at(-1.0) < 0, "negative alphas must expose the leak"
    crossing = tl.detection_boundary(b, p0_sys, pf_sys, 0.05, 1.0)
    assert 0.2 < crossing < 0.5, f"crossing {crossing} outside the expected window"

    # the decoupled circuit stays clean everywhere
    clean = tl.Circuit.fig2b_no_leak()
    pf_clean = tl.propagate(clean, p0)
    sweep_clean = tl.exact_sweep(
        b,
        tl.marginal(p0, 3, [0, 1]),
        tl.marginal(pf_clean, 3, [0, 1]),
        tl.default_alpha_grid(),
    )
    assert sweep_clean.is_nonnegative(1e-10)

    # fluctuation theorem agrees: exactly 1 without the leak, above 1 with it
    ft_leak = tl.fluctuation_theorem(circuit, *thetas)
    ft_clean = tl.fluctuation_theorem(clean, *thetas)
    assert abs(ft_clean - 1.0) < 1e-12
    assert abs(ft_leak - 1.2185080122244103) < 1e-9

    # full-register majorization holds for doubly stochastic dynamics
    majorizes, excess = tl.majorization(p0, pf)
    assert majorizes and excess == 0.0

    # readout model round-trips through compensation
    noise = tl.NoiseProfile.tenerife()
    measured = noise.distort(p0)
    assert max(abs(a - b_) for a, b_ in zip(noise.compensate(measured), p0)) < 1e-12

    # calibration recovers an injected drift from a sampled transfer matrix
    truth = [0.1, -0.15, 0.05, 0.2, -0.1, 0.05, 0.1, -0.05, 0.1, 0.05, -0.1, 0.15]
    outcome = tl.calibrate(circuit, truth, tl.NoiseProfile.yorktown(), shots=8192, seed=3)
    assert outcome.err_final < 0.25 * outcome.err_initial, (
        outcome.err_initial,
        outcome.err_final,
    )

    print("smoke test passed")


if __name__ == "__main__":
    main()
