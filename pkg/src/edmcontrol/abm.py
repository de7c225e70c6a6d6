"""Agent-based model of civil disobedience on a torus grid.

Citizens carry fixed uniform random draws of risk aversion and perceived
hardship, and each tick re-decide whether to rebel: a citizen turns Active
when ``grievance - risk_aversion * arrest_probability`` exceeds the current
propaganda threshold, where ``grievance = hardship * (1 - legitimacy)``.
Cops arrest one Active citizen within vision per tick; arrested citizens sit
out a uniform random jail term.

Scheduling is phase-synchronous: each tick releases finished jail terms,
moves every free agent, lets all citizens re-decide against the post-move
snapshot, then lets cops enforce in a uniformly shuffled order.  All
randomness flows from a single root seed through three named streams
(placement, attributes, per-tick events), so a run is exactly reproducible
from ``(params, seed, schedule, controller)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .timeseries import Frame

__all__ = [
    "STATE_QUIET",
    "STATE_ACTIVE",
    "STATE_JAILED",
    "K_ARREST_90",
    "WorldParams",
    "GovState",
    "TickObservation",
    "WorldState",
    "init_world",
    "grievance",
    "arrest_probability",
    "citizen_behavior",
    "enforce",
    "step",
    "run_scenario",
    "OBSERVATION_COLUMNS",
]

STATE_QUIET = 0
STATE_ACTIVE = 1
STATE_JAILED = 2

# Arrest-rate constant: one cop per active citizen yields a 90% arrest chance.
K_ARREST_90 = math.log(10.0)

OBSERVATION_COLUMNS = ("quiet", "active", "jailed", "legitimacy", "propaganda")


@dataclass(frozen=True)
class WorldParams:
    """World configuration.  Defaults give the 1600-cell, 1200-agent setup."""

    grid_width: int = 40
    grid_height: int = 40
    n_citizens: int = 1120
    n_cops: int = 80
    vision: float = 7.0
    max_jail_term: int = 30
    k_arrest: float = K_ARREST_90
    jail_capacity: int | None = 470
    legitimacy: float = 0.84
    propaganda: float = 0.1
    cop_ratio_mode: str = "neighborhood"

    def __post_init__(self):
        if self.grid_width < 1 or self.grid_height < 1:
            raise ValueError("grid dimensions must be positive")
        if self.n_citizens < 1 or self.n_cops < 0:
            raise ValueError("need at least one citizen and a non-negative cop count")
        if self.vision < 1:
            raise ValueError("vision must be >= 1 cell")
        if 2 * int(self.vision) + 1 > min(self.grid_width, self.grid_height):
            raise ValueError("vision diameter exceeds grid size; torus counts would double")
        if self.max_jail_term < 1:
            raise ValueError("max_jail_term must be >= 1 tick")
        if not 0.0 < self.legitimacy <= 1.0:
            raise ValueError("legitimacy must lie in (0, 1]")
        if self.propaganda < 0.0:
            raise ValueError("propaganda must be >= 0")
        if self.cop_ratio_mode not in ("neighborhood", "cell"):
            raise ValueError("cop_ratio_mode must be 'neighborhood' or 'cell'")

    @property
    def n_cells(self) -> int:
        return self.grid_width * self.grid_height

    @property
    def n_agents(self) -> int:
        return self.n_citizens + self.n_cops


@dataclass
class GovState:
    """Government parameters: legitimacy scales grievance, propaganda is the threshold."""

    legitimacy: float
    propaganda: float


@dataclass(frozen=True)
class TickObservation:
    time: int
    quiet: int
    active: int
    jailed: int
    legitimacy: float
    propaganda: float


@lru_cache(maxsize=8)
def _geometry(width: int, height: int, vision: float):
    """Movement offsets and per-row disc half-widths for one grid."""
    r = int(math.floor(vision))
    offs = [
        (dx, dy)
        for dx in range(-r, r + 1)
        for dy in range(-r, r + 1)
        if 0 < dx * dx + dy * dy <= vision * vision
    ]
    move_offsets = np.array(offs, dtype=np.int64)
    # widths[dy + r] = how far the disc extends in x at vertical offset dy
    widths = np.array(
        [int(math.floor(math.sqrt(vision * vision - dy * dy))) for dy in range(-r, r + 1)],
        dtype=np.int64,
    )
    return move_offsets, widths


def _disc_sums(grid: np.ndarray, vision: float) -> np.ndarray:
    """Torus sum of ``grid`` over the vision disc centered at every cell.

    Row segments come from a wrapped cumulative sum, then rows are combined
    with circular shifts; cost is O(cells * vision) instead of
    O(cells * disc area).
    """
    height, width = grid.shape
    r = int(math.floor(vision))
    _, widths = _geometry(width, height, vision)
    wrapped = np.concatenate([grid[:, width - r :], grid, grid[:, :r]], axis=1)
    cs = np.zeros((height, wrapped.shape[1] + 1), dtype=np.int64)
    np.cumsum(wrapped, axis=1, out=cs[:, 1:])
    xs = np.arange(width) + r
    # vertically padded row segments per distinct half-width; row y of the
    # disc sum adds segment row (y + dy) mod height as a plain slice
    pads: dict[int, np.ndarray] = {}
    out = np.zeros_like(grid, dtype=np.int64)
    for dy in range(-r, r + 1):
        w = int(widths[dy + r])
        padded = pads.get(w)
        if padded is None:
            seg = cs[:, xs + w + 1] - cs[:, xs - w]
            padded = np.concatenate([seg[height - r :], seg, seg[:r]], axis=0)
            pads[w] = padded
        out += padded[r + dy : r + dy + height]
    return out


@dataclass
class WorldState:
    """Full mutable simulation state; reproducible from (params, seed)."""

    params: WorldParams
    t: int
    gov: GovState
    citizen_x: np.ndarray
    citizen_y: np.ndarray
    citizen_state: np.ndarray
    risk_aversion: np.ndarray
    hardship: np.ndarray
    jail_remaining: np.ndarray
    cop_x: np.ndarray
    cop_y: np.ndarray
    rng: np.random.Generator

    def counts(self) -> tuple[int, int, int]:
        c = np.bincount(self.citizen_state, minlength=3)
        return int(c[STATE_QUIET]), int(c[STATE_ACTIVE]), int(c[STATE_JAILED])


def _as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def init_world(params: WorldParams, seed) -> WorldState:
    """Place agents uniformly at random on distinct cells, all citizens Quiet.

    The seed feeds a root ``SeedSequence`` split into three child streams in
    fixed order: agent placement, citizen attribute draws (risk aversion then
    hardship), and the per-tick event stream used by :func:`step`.
    """
    if params.n_agents > params.n_cells:
        raise ValueError(
            f"{params.n_agents} agents exceed {params.n_cells} cells;"
            " distinct placement impossible"
        )
    place_ss, attr_ss, step_ss = _as_seed_sequence(seed).spawn(3)
    place_rng = np.random.default_rng(place_ss)
    attr_rng = np.random.default_rng(attr_ss)

    cells = place_rng.choice(params.n_cells, size=params.n_agents, replace=False)
    cx = cells % params.grid_width
    cy = cells // params.grid_width
    n = params.n_citizens
    return WorldState(
        params=params,
        t=0,
        gov=GovState(legitimacy=params.legitimacy, propaganda=params.propaganda),
        citizen_x=cx[:n].copy(),
        citizen_y=cy[:n].copy(),
        citizen_state=np.full(n, STATE_QUIET, dtype=np.int8),
        risk_aversion=attr_rng.random(n),
        hardship=attr_rng.random(n),
        jail_remaining=np.zeros(n, dtype=np.int64),
        cop_x=cx[n:].copy(),
        cop_y=cy[n:].copy(),
        rng=np.random.default_rng(step_ss),
    )


def grievance(hardship, legitimacy):
    """Perceived hardship scaled by illegitimacy: ``hardship * (1 - legitimacy)``."""
    return hardship * (1.0 - legitimacy)


def arrest_probability(cop_ratio, k: float = K_ARREST_90):
    """``1 - exp(-k * cop_ratio)``; with the default k, ratio 1 gives 0.9."""
    return 1.0 - np.exp(-k * np.asarray(cop_ratio, dtype=np.float64))


def citizen_behavior(hardship, risk_aversion, arrest_prob, gov: GovState):
    """Threshold rule, re-evaluated every tick for every non-jailed citizen.

    Active iff ``grievance - risk_aversion * arrest_prob`` exceeds the
    propaganda threshold; otherwise Quiet.  Accepts scalars or arrays.
    """
    g = grievance(np.asarray(hardship, dtype=np.float64), gov.legitimacy)
    net = g - np.asarray(risk_aversion, dtype=np.float64) * np.asarray(arrest_prob)
    return np.where(net > gov.propaganda, STATE_ACTIVE, STATE_QUIET).astype(np.int8)


def _torus_within(ax, ay, x, y, width, height, vision) -> np.ndarray:
    dx = np.abs(ax - x)
    dy = np.abs(ay - y)
    dx = np.minimum(dx, width - dx)
    dy = np.minimum(dy, height - dy)
    return dx * dx + dy * dy <= vision * vision


def enforce(world: WorldState, cop_index: int) -> int | None:
    """One cop's arrest attempt: jail a uniformly random Active citizen in vision.

    Returns the arrested citizen's index, or None if no Active citizen is
    visible or jail capacity is exhausted.  The jail term is drawn uniformly
    from ``1..max_jail_term``.
    """
    p = world.params
    if p.jail_capacity is not None:
        if int((world.citizen_state == STATE_JAILED).sum()) >= p.jail_capacity:
            return None
    active_ids = np.flatnonzero(world.citizen_state == STATE_ACTIVE)
    if active_ids.size == 0:
        return None
    within = _torus_within(
        world.citizen_x[active_ids],
        world.citizen_y[active_ids],
        world.cop_x[cop_index],
        world.cop_y[cop_index],
        p.grid_width,
        p.grid_height,
        p.vision,
    )
    cand = active_ids[within]
    if cand.size == 0:
        return None
    cid = int(cand[world.rng.integers(cand.size)])
    world.citizen_state[cid] = STATE_JAILED
    world.jail_remaining[cid] = int(world.rng.integers(1, p.max_jail_term + 1))
    return cid


def _neighborhood_counts(world: WorldState):
    """Cop and Active counts seen from every cell (vision disc or single cell)."""
    p = world.params
    shape = (p.grid_height, p.grid_width)
    cop_cells = world.cop_y * p.grid_width + world.cop_x
    active_mask = world.citizen_state == STATE_ACTIVE
    act_cells = (world.citizen_y * p.grid_width + world.citizen_x)[active_mask]
    cop_grid = np.bincount(cop_cells, minlength=p.n_cells)
    act_grid = np.bincount(act_cells, minlength=p.n_cells)
    if p.cop_ratio_mode == "cell":
        return cop_grid, act_grid
    cop_near = _disc_sums(cop_grid.reshape(shape), p.vision).ravel()
    act_near = _disc_sums(act_grid.reshape(shape), p.vision).ravel()
    return cop_near, act_near


def step(world: WorldState) -> TickObservation:
    """Advance the world one tick and return the population observation.

    Phases: jail countdown and release; simultaneous random movement of all
    free agents within vision; simultaneous citizen decisions against the
    post-move snapshot; cop enforcement in shuffled order.
    """
    p = world.params
    move_offsets, _ = _geometry(p.grid_width, p.grid_height, p.vision)
    world.t += 1
    state = world.citizen_state

    # 1. Jail countdown; release exactly when the term reaches zero.
    jailed = state == STATE_JAILED
    if jailed.any():
        world.jail_remaining[jailed] -= 1
        state[jailed & (world.jail_remaining == 0)] = STATE_QUIET

    # 2. Movement: free citizens first, then cops (fixed draw order).
    free = np.flatnonzero(state != STATE_JAILED)
    if free.size:
        picks = world.rng.integers(0, len(move_offsets), size=free.size)
        world.citizen_x[free] = (world.citizen_x[free] + move_offsets[picks, 0]) % p.grid_width
        world.citizen_y[free] = (world.citizen_y[free] + move_offsets[picks, 1]) % p.grid_height
    if p.n_cops:
        picks = world.rng.integers(0, len(move_offsets), size=p.n_cops)
        world.cop_x = (world.cop_x + move_offsets[picks, 0]) % p.grid_width
        world.cop_y = (world.cop_y + move_offsets[picks, 1]) % p.grid_height

    # 3. Decisions: every free citizen re-assesses against the same snapshot.
    cop_near, act_near = _neighborhood_counts(world)
    cells = world.citizen_y[free] * p.grid_width + world.citizen_x[free]
    # Epstein's estimated arrest probability: the citizen counts itself on
    # the active side, and the cop/active ratio is floored.
    actives = 1 + act_near[cells] - (state[free] == STATE_ACTIVE)
    ratio = cop_near[cells] // actives
    prob = arrest_probability(ratio, p.k_arrest)
    state[free] = citizen_behavior(
        world.hardship[free], world.risk_aversion[free], prob, world.gov
    )

    # 4. Enforcement: shuffled cops, each jails one visible Active citizen.
    active_ids = np.flatnonzero(state == STATE_ACTIVE)
    if active_ids.size and p.n_cops:
        jailed_now = int((state == STATE_JAILED).sum())
        within = _torus_within(
            world.citizen_x[active_ids][None, :],
            world.citizen_y[active_ids][None, :],
            world.cop_x[:, None],
            world.cop_y[:, None],
            p.grid_width,
            p.grid_height,
            p.vision,
        )
        if within.any():
            alive = np.ones(active_ids.size, dtype=bool)
            n_alive = active_ids.size
            for c in world.rng.permutation(p.n_cops):
                if n_alive == 0:
                    break
                if p.jail_capacity is not None and jailed_now >= p.jail_capacity:
                    break
                cand = np.flatnonzero(within[c] & alive)
                if cand.size == 0:
                    continue
                pick = int(cand[world.rng.integers(cand.size)])
                cid = int(active_ids[pick])
                state[cid] = STATE_JAILED
                world.jail_remaining[cid] = int(world.rng.integers(1, p.max_jail_term + 1))
                alive[pick] = False
                n_alive -= 1
                jailed_now += 1

    quiet, active, jailed_count = world.counts()
    return TickObservation(
        time=world.t,
        quiet=quiet,
        active=active,
        jailed=jailed_count,
        legitimacy=world.gov.legitimacy,
        propaganda=world.gov.propaganda,
    )


def _legitimacy_per_tick(legitimacy, params: WorldParams, steps: int) -> np.ndarray:
    if legitimacy is None:
        return np.full(steps, params.legitimacy)
    if np.isscalar(legitimacy):
        return np.full(steps, float(legitimacy))
    if hasattr(legitimacy, "materialize"):
        return np.asarray(legitimacy.materialize(steps), dtype=np.float64)
    arr = np.asarray(legitimacy, dtype=np.float64)
    if arr.shape != (steps,):
        raise ValueError(f"legitimacy array must have length {steps}, got {arr.shape}")
    return arr


def run_scenario(
    params: WorldParams,
    steps: int,
    seed,
    legitimacy=None,
    controller: Callable[[Frame], "object"] | None = None,
) -> Frame:
    """Run a full scenario and return the observation frame (ticks 1..steps).

    ``legitimacy`` may be None (constant ``params.legitimacy``), a scalar, a
    per-tick array, or a schedule object with ``materialize(steps)``.  When a
    ``controller`` is supplied it is called after every tick with the history
    frame so far and must return an object with ``propaganda`` (applied from
    the next tick on) and ``forecast`` attributes; the frame then carries a
    ``forecast_active`` audit column.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    leg = _legitimacy_per_tick(legitimacy, params, steps)
    world = init_world(params, seed)

    times = np.arange(1, steps + 1, dtype=np.int64)
    cols = {name: np.empty(steps, dtype=np.float64) for name in OBSERVATION_COLUMNS}
    forecast = np.full(steps, np.nan)

    for i in range(steps):
        world.gov.legitimacy = float(leg[i])
        obs = step(world)
        cols["quiet"][i] = obs.quiet
        cols["active"][i] = obs.active
        cols["jailed"][i] = obs.jailed
        cols["legitimacy"][i] = obs.legitimacy
        cols["propaganda"][i] = obs.propaganda
        if controller is not None:
            history = Frame(
                times[: i + 1],
                {name: cols[name][: i + 1] for name in OBSERVATION_COLUMNS},
            )
            decision = controller(history)
            forecast[i] = decision.forecast
            world.gov.propaganda = float(decision.propaganda)

    columns = {name: cols[name] for name in OBSERVATION_COLUMNS}
    if controller is not None:
        columns["forecast_active"] = forecast
    return Frame(times, columns)
