"""Skill scans over embedding dimension, horizon, and kernel width.

Reproduces the scan protocol on a regenerated Active series: skill as a
function of embedding dimension at a five-step horizon, the serial
correlation signature over horizons, and kernel-width tuning for the S-map.
Writes the scan tables as CSV next to this script.

Run:  python demos/03_embedding_skill_scans.py
"""

from pathlib import Path

from edmcontrol import WorldParams, embed_dimension_scan, run_scenario, theta_scan, tp_scan

OUT = Path(__file__).parent


def show(result, param):
    cells = "  ".join(f"{x:g}:{r:+.3f}" for x, r in zip(result.axis, result.rho))
    print(f"  {param}  ->  rho\n    {cells}")


def main():
    print("generating a 6000-tick nominal run (seed 0)...")
    frame = run_scenario(WorldParams(), steps=6000, seed=0)
    series = frame.column("active")

    print("\nskill vs embedding dimension (simplex, Tp=5):")
    escan = embed_dimension_scan(series, e_max=10, tp=5)
    show(escan, "E")
    best_e = escan.best()
    print(f"    best E = {best_e:g}; skill rises to a plateau around E = 4-6 at this horizon")
    escan.write_csv(OUT / "scan_E.csv", param_name="E")

    print("\nskill vs forecast interval (simplex, E=5):")
    tscan = tp_scan(series, e=5, tp_max=10)
    show(tscan, "Tp")
    print("    short horizons ride serial correlation; Tp=5 avoids it")
    tscan.write_csv(OUT / "scan_Tp.csv", param_name="Tp")

    print("\nskill vs S-map kernel width (E=5, Tp=5):")
    thscan = theta_scan(series, e=5, tp=5)
    show(thscan, "theta")
    print(f"    best theta = {thscan.best():g} (nonzero: the dynamics are state-dependent)")
    thscan.write_csv(OUT / "scan_theta.csv", param_name="theta")

    print(f"\nwrote scan_E.csv, scan_Tp.csv, scan_theta.csv to {OUT}")


if __name__ == "__main__":
    main()
