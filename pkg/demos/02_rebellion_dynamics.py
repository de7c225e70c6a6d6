"""Nominal punctuated equilibrium and the trapped state of the rebellion model.

Runs the civil-disobedience world twice: once with constant legitimacy
(quiet spells broken by abrupt outbursts whose waiting times look
exponential) and once with legitimacy dropped low enough that the jail
saturates and rebellion becomes self-sustaining.

Run:  python demos/02_rebellion_dynamics.py
"""

from edmcontrol import (
    WorldParams,
    detect_trapped_state,
    exponential_gof,
    outburst_onsets,
    run_scenario,
    waiting_times,
)


def describe(frame, label):
    a = frame.column("active")
    j = frame.column("jailed")
    print(f"{label}:")
    print(f"  active: mean {a.mean():6.1f}   max {int(a.max()):4d}   share of quiet ticks {(a == 0).mean():.2f}")
    print(f"  jailed: mean {j.mean():6.1f}   max {int(j.max()):4d}")


def main():
    params = WorldParams()
    print(f"world: {params.grid_width}x{params.grid_height} torus, "
          f"{params.n_citizens} citizens + {params.n_cops} cops, "
          f"jail capacity {params.jail_capacity}")

    nominal = run_scenario(params, steps=5000, seed=7)
    describe(nominal, f"\nnominal run (legitimacy {params.legitimacy})")

    onsets = outburst_onsets(nominal, floor=20)
    waits = waiting_times(onsets)
    stat, p = exponential_gof(waits)
    print(f"  outbursts: {len(onsets)}   mean wait {waits.mean():.0f} ticks")
    print(f"  exponential waiting-time fit: KS p = {p:.3f} "
          f"({'consistent with' if p > 0.01 else 'rejects'} punctuated equilibrium)")
    print(f"  trapped intervals: {detect_trapped_state(nominal).intervals}")

    crisis = run_scenario(params, steps=2000, seed=7, legitimacy=0.62)
    describe(crisis, "\ncrisis run (legitimacy 0.62, no control)")
    trapped = detect_trapped_state(crisis)
    print(f"  trapped intervals: {trapped.intervals}")
    print("  once the jail saturates, arrests merely swap prisoners and the")
    print("  rebellion sustains itself until legitimacy recovers")


if __name__ == "__main__":
    main()
