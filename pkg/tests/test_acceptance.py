"""Acceptance matrix: one test per suite criterion, tolerances pinned.

Each test runs the same criterion function the ``suite`` subcommand
uses, with the default seed, and fails with the offending certificate
records when a bound check misses.  The final test runs the full suite
twice through the CLI and compares the documents byte for byte after
dropping the wall-clock line.
"""

import json
import subprocess
import sys
import time

SEED = 0


def check(name, cap_seconds=None):
    from waistlab.cli import run_criterion

    started = time.perf_counter()
    records, passed = run_criterion(name, SEED)
    elapsed = time.perf_counter() - started
    failing = [
        rec for rec in records
        if rec.get("kind") == "certificate" and rec["verdict"] != "pass"
    ]
    assert passed, f"{name}: {json.dumps(failing, indent=2)}"
    if cap_seconds is not None:
        assert elapsed < cap_seconds, f"{name} took {elapsed:.1f}s"
    return records


def test_01_vaaler_cube_sections():
    records = check("vaaler", cap_seconds=60.0)
    assert len(records) == 5


def test_02_crofton_calibration():
    records = check("crofton", cap_seconds=30.0)
    estimates = [r for r in records if r["kind"] == "estimate"]
    assert {r["shape"] for r in estimates} == {"greatcircle-s2",
                                               "equator-s1-s3"}


def test_03_transport_certificates():
    records = check("transport")
    lipschitz = [r for r in records if r["bound_ref"] == "gaussian-lipschitz"]
    assert len(lipschitz) == 12
    assert all(r["details"]["points"] == 1000 for r in lipschitz)
    (dets,) = [r for r in records
               if r["bound_ref"] == "restricted-determinant"]
    assert dets["details"]["pairs"] == 100


def test_04_pushforward_mass_and_monotone_smoothing():
    records = check("mass")
    mass = [r for r in records if r["bound_ref"] == "radial-mass"]
    assert len(mass) == 6
    (mono,) = [r for r in records if r["bound_ref"] == "smoothing-monotone"]
    assert mono["details"]["orders"] == [10, 100, 1000]


def test_05_pullback_equality_on_the_diameter():
    records = check("pullback")
    (est,) = [r for r in records if r["kind"] == "estimate"]
    assert abs(est["value"] - 4.0 * 3.141592653589793) < 0.01


def test_06_fibration_tightness_ledger():
    records = check("fibrations")
    meshed = [r for r in records if r["bound_ref"] == "minkowski-content"
              and r["kind"] == "estimate"]
    assert {r["map"] for r in meshed} == {"hopf3", "rp3", "abs-z1-rp3",
                                          "hopf7", "rp7"}


def test_07_torus_fibers_and_half_slabs():
    check("torus")


def test_08_random_half_volume_sets():
    records = check("halfsets")
    (cert,) = [r for r in records if r["kind"] == "certificate"]
    assert cert["details"]["sets"] == 50


def test_09_convex_width_and_minimal_sections():
    records = check("convex")
    widths = [r for r in records if r["bound_ref"] == "width-inradius"]
    assert len(widths) == 10
    searches = [r for r in records
                if r["bound_ref"] == "normalized-ball-section"
                and r["kind"] == "certificate"]
    assert len(searches) == 8


def test_10_bending_budgets():
    records = check("bending", cap_seconds=120.0)
    totals = [r for r in records if r["kind"] == "estimate"
              and r["method"] == "bending-total"]
    assert sorted(r["details"]["subdivisions"] for r in totals) == list(
        range(2, 9))


def test_11_filling_identities():
    records = check("filling", cap_seconds=60.0)
    by_ref = {r["bound_ref"] for r in records}
    assert {"filling-boundary", "filling-ledger-ratio",
            "filling-cover-independence", "star-census"} <= by_ref


def test_12_suite_reports_are_reproducible(tmp_path):
    # The identical invocation twice; the echoed config must match too,
    # so both runs write to the same path and the text is captured in
    # between.
    path = tmp_path / "suite.json"

    def run():
        proc = subprocess.run(
            [sys.executable, "-m", "waistlab.cli", "suite", "--seed",
             str(SEED), "--out", str(path)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        return "\n".join(
            line for line in path.read_text().splitlines()
            if '"timing_seconds"' not in line
        )

    first = run()
    second = run()
    assert first == second
