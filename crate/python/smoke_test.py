#!/usr/bin/env python3
"""Smoke test for the fso_capacity Python module.

Builds the extension with cargo, loads it, and checks a handful of known
values against the Rust test suite.
"""

import importlib.util
import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def load_module():
    subprocess.run(
        ["cargo", "build", "-p", "fso-capacity-py"], cwd=REPO, check=True
    )
    so = REPO / "target" / "debug" / "libfso_capacity.so"
    tmp = Path(tempfile.mkdtemp(prefix="fso_capacity_py_"))
    shutil.copy(so, tmp / "fso_capacity.so")
    spec = importlib.util.spec_from_file_location(
        "fso_capacity", tmp / "fso_capacity.so"
    )
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def check(name, ok, detail=""):
    print(f"[{'ok' if ok else 'FAIL'}] {name} {detail}")
    if not ok:
        sys.exit(1)


def main():
    fso = load_module()

    link = fso.LinkParameters()
    check("baseline constructs", link.beam_width == 2.0)

    d = link.derived()
    check(
        "pointing-error exponent",
        math.isclose(d["gamma_sq"], 8.005238044500, rel_tol=1e-9),
        f"gamma_sq = {d['gamma_sq']:.9f}",
    )
    check(
        "collected fraction at beam center",
        math.isclose(d["a0"], 1.249182251600e-3, rel_tol=1e-9),
    )
    check("outage weight count", len(d["outage_weights"]) == link.series_order + 1)

    p_t = fso.dbm_to_watts(10.0)
    check("dBm conversion", math.isclose(p_t, 0.01, rel_tol=1e-12))

    closed = fso.capacity_bits(link, p_t, "closed")
    check(
        "closed-form capacity",
        math.isclose(closed, 9.8249992951, rel_tol=1e-6),
        f"{closed:.6f} bits",
    )
    report = fso.capacity_report(link, p_t)
    check(
        "exact capacity",
        math.isclose(report["exact_bits"], 9.181697922, rel_tol=1e-5),
        f"{report['exact_bits']:.6f} bits",
    )
    check(
        "report consistent with single-path call",
        math.isclose(report["closed_bits"], closed, rel_tol=1e-12),
    )

    density = fso.ChannelDensity(link)
    check(
        "outage mass",
        math.isclose(density.outage_mass, 7.61775752514067e-4, rel_tol=1e-9),
    )
    check(
        "density normalization",
        abs(density.normalization() - 1.0) < 1e-6,
    )

    rows = fso.sweep(link, p_t, "P_t", fso.dbm_to_watts(0.0), fso.dbm_to_watts(20.0), 5)
    bits = [r[1]["closed"] for r in rows]
    check("power sweep increases", all(b > a for a, b in zip(bits, bits[1:])), f"{bits}")

    jittery = link.replace(orientation_sd=10e-3)
    w, b, boundary = fso.optimize(jittery, p_t, "w_z", 0.2, 6.0, path="exact")
    check(
        "beam-width optimum interior near 3 m",
        not boundary and 2.75 <= w <= 3.75,
        f"w* = {w:.3f} m, {b:.3f} bits",
    )

    try:
        fso.LinkParameters(beam_width=-1.0)
        check("invalid parameters rejected", False)
    except ValueError:
        check("invalid parameters rejected", True)

    print("smoke test passed")


if __name__ == "__main__":
    main()
