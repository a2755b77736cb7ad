"""Natural-parameter continuation in the elastic constant with branch bookkeeping.

The elastic constant l = l1 = l2 is marched over a fixed lattice at fixed
coupling.  Each live branch is warm-started from its previous state; a
periodic deflation pass (against everything already present at the current l)
admits new branches, and each newly discovered branch is immediately
back-continued toward the start of the lattice until it ceases to exist,
which brackets its birth between two lattice values.  Folds are therefore
located by branch termination plus re-discovery rather than by arclength
turning, matching the direct parameter-stepping protocol.

Every accepted point stores the energy, the diagram functional (the integral
of Q12 over the channel, identically zero along two-field branches) and the
smallest Hessian eigenvalues with the resulting stability verdict.  Events are
emitted where the smallest eigenvalue changes sign along a branch, and where
branches are born or terminate.  A sign change that coincides with the birth
of two mutually-flipped branches is classified as a pitchfork; two branches
born in the same bracket are classified as a fold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import limit_map_l0
from .bulk import ModelParams
from .deflation import (
    DISTINCTNESS_TOL,
    DeflationOperator,
    default_guess_suite,
    deflated_solve,
    plateau_state,
)
from .discretization import FieldState, ORState, energy, flip_state, make_mesh, residual
from .solver import SolveOptions, newton_solve
from .stability import hessian_spectrum

__all__ = ["BranchPoint", "Branch", "BifurcationEvent", "continue_in_l", "diagram_emit"]

JUMP_TOL = 1.0  # deflation-norm distance beyond which a warm start has left its branch


@dataclass
class BranchPoint:
    l: float
    state: FieldState | ORState
    energy: float
    functional: float
    smallest_eig: float
    verdict: str


@dataclass
class Branch:
    id: int
    points: list[BranchPoint] = field(default_factory=list)
    parent_event: int | None = None

    def point_at(self, l: float) -> BranchPoint | None:
        for p in self.points:
            if abs(p.l - l) < 1e-12:
                return p
        return None

    def l_range(self) -> tuple[float, float]:
        ls = [p.l for p in self.points]
        return min(ls), max(ls)


@dataclass
class BifurcationEvent:
    l_lo: float
    l_hi: float
    kind: str  # "pitchfork" | "fold" | "unclassified"
    branches: tuple[int, ...]


class _Run:
    """Mutable bookkeeping for one continuation sweep."""

    def __init__(self, c, lattice, system, n_cells, xi, opts, stability_k):
        self.c = c
        self.lattice = lattice
        self.system = system
        self.mesh = make_mesh(n_cells)
        self.xi = xi
        self.opts = opts
        self.stability_k = stability_k
        self.branches: list[Branch] = []
        self.events: list[BifurcationEvent] = []
        self.seen: dict[int, list[tuple[int, object]]] = {i: [] for i in range(len(lattice))}
        self._op = DeflationOperator([])  # used for its distance only

    def params(self, idx: int) -> ModelParams:
        l = self.lattice[idx]
        return ModelParams(l1=l, l2=l, c=self.c, xi=self.xi)

    def distance(self, a, b) -> float:
        return self._op.distance(a, b)

    def make_point(self, idx: int, state) -> BranchPoint:
        params = self.params(idx)
        report = hessian_spectrum(state, params, k=self.stability_k)
        func = 0.0
        if isinstance(state, FieldState):
            func = float(np.trapezoid(state.q12, state.mesh.nodes))
        return BranchPoint(
            l=self.lattice[idx],
            state=state,
            energy=energy(state, params),
            functional=func,
            smallest_eig=float(report.smallest_eigenvalues[0]),
            verdict=report.verdict,
        )

    def new_branch(self, idx: int, state, parent_event=None) -> Branch:
        branch = Branch(id=len(self.branches), parent_event=parent_event)
        branch.points.append(self.make_point(idx, state))
        self.branches.append(branch)
        self.seen[idx].append((branch.id, state))
        return branch

    def accept(self, branch: Branch, idx: int, state) -> None:
        branch.points.append(self.make_point(idx, state))
        self.seen[idx].append((branch.id, state))

    def collision(self, idx: int, state, ignore: int | None = None) -> int | None:
        for bid, other in self.seen[idx]:
            if bid == ignore:
                continue
            if self.distance(state, other) < DISTINCTNESS_TOL:
                return bid
        return None

    def bracket(self, i: int, j: int) -> tuple[float, float]:
        a, b = self.lattice[i], self.lattice[j]
        return (a, b) if a <= b else (b, a)

    def add_event(self, l_lo, l_hi, kind, branches) -> int:
        self.events.append(BifurcationEvent(l_lo, l_hi, kind, tuple(branches)))
        return len(self.events) - 1


def _advance(run: _Run, branch: Branch, from_idx: int, to_idx: int):
    """Warm-start one branch to a neighbouring lattice value.

    Returns ("ok", state) or ("fail" | "jump" | "collision", info).
    """
    prev = next(p for p in branch.points if abs(p.l - run.lattice[from_idx]) < 1e-12)
    report = newton_solve(prev.state, run.params(to_idx), run.opts)
    if not report.converged:
        return "fail", report.diagnostic
    state = report.final_state
    if run.distance(state, prev.state) > JUMP_TOL:
        return "jump", state
    hit = run.collision(to_idx, state, ignore=branch.id)
    if hit is not None:
        return "collision", hit
    return "ok", state


def _back_continue(run: _Run, branch: Branch, born_idx: int, march_step: int) -> None:
    """March a newly discovered branch against the sweep direction until it
    ceases to exist; the terminating step brackets the branch's birth."""
    idx = born_idx
    while True:
        prev_idx = idx - march_step
        if prev_idx < 0 or prev_idx >= len(run.lattice):
            return  # reached the start of the lattice: branch predates the sweep
        status, info = _advance(run, branch, idx, prev_idx)
        if status == "ok":
            run.accept(branch, prev_idx, info)
            idx = prev_idx
            continue
        lo, hi = run.bracket(idx, prev_idx)
        involved = [branch.id] if status != "collision" else [branch.id, info]
        branch.parent_event = run.add_event(lo, hi, "unclassified", involved)
        return


def _perturbed_guesses(run: _Run, idx: int, pool: list) -> list:
    """Deflation-pass seeds: standard shapes plus perturbations of the states
    already present at this lattice value."""
    params = run.params(idx)
    mesh = run.mesh
    guesses = [
        plateau_state(mesh, params, run.system, +1.0),
        plateau_state(mesh, params, run.system, -1.0),
    ]
    y = mesh.nodes
    if run.system == "full":
        guesses.append(limit_map_l0(mesh, params.c, "+"))
        guesses.append(limit_map_l0(mesh, params.c, "-"))
        bump = np.sin(math.pi * (y + 1.0) / 2.0)
        for state in pool[:4]:
            for amp in (0.35, -0.35):
                g = state.copy()
                g.q12 = g.q12 + amp * bump
                g.m2 = g.m2 + amp * bump
                guesses.append(g)
    else:
        lin = ORState(mesh, -y, -y.copy())
        guesses.append(lin)
    for g in guesses:
        g.pin()
    return guesses


def _deflation_pass(run: _Run, idx: int, budget: int, march_step: int) -> None:
    params = run.params(idx)
    pool_states = [s for _, s in run.seen[idx]]
    guesses = _perturbed_guesses(run, idx, pool_states)
    attempts = 0
    for guess in guesses:
        if attempts >= budget:
            break
        known = [s for _, s in run.seen[idx]]
        operator = DeflationOperator(known)
        attempts += 1
        report = deflated_solve(guess, params, operator, run.opts)
        if not report.converged:
            continue
        state = report.final_state
        if float(np.linalg.norm(residual(state, params))) > run.opts.abs_tol:
            continue
        if run.collision(idx, state) is not None:
            continue
        branch = run.new_branch(idx, state)
        _back_continue(run, branch, idx, march_step)
        if isinstance(state, FieldState):
            flipped = flip_state(state)
            if run.collision(idx, flipped) is None:
                fbranch = run.new_branch(idx, flipped)
                _back_continue(run, fbranch, idx, march_step)


def _scan_eigen_crossings(run: _Run) -> None:
    for branch in run.branches:
        pts = sorted(branch.points, key=lambda p: p.l)
        for a, b in zip(pts, pts[1:]):
            if a.smallest_eig * b.smallest_eig < 0.0:
                run.add_event(min(a.l, b.l), max(a.l, b.l), "unclassified", [branch.id])


def _classify_events(run: _Run, step: float) -> None:
    """Upgrade eigenvalue crossings to pitchforks and pair births into folds."""
    births = {}
    for branch in run.branches:
        if branch.parent_event is not None:
            births[branch.id] = branch.parent_event

    def flip_mutual(b1: Branch, b2: Branch) -> bool:
        common = {round(p.l, 9) for p in b1.points} & {round(p.l, 9) for p in b2.points}
        if not common:
            return False
        l = min(common)
        s1 = next(p.state for p in b1.points if round(p.l, 9) == l)
        s2 = next(p.state for p in b2.points if round(p.l, 9) == l)
        if not isinstance(s1, FieldState):
            return False
        return run.distance(flip_state(s1), s2) <= 1e-3

    absorbed: set[int] = set()
    for ei, event in enumerate(run.events):
        if event.kind != "unclassified" or len(event.branches) != 1:
            continue
        b0 = event.branches[0]
        if any(ei == pe for pe in births.values()):
            continue  # birth events are classified below
        # eigenvalue crossing on b0: look for a mutually-flipped pair born nearby
        nearby = []
        for bid, pe in births.items():
            birth = run.events[pe]
            if birth.l_lo <= event.l_hi + 3 * step and birth.l_hi >= event.l_lo - 3 * step:
                nearby.append(bid)
        for i in range(len(nearby)):
            for j in range(i + 1, len(nearby)):
                b1, b2 = run.branches[nearby[i]], run.branches[nearby[j]]
                if flip_mutual(b1, b2):
                    run.events[ei] = BifurcationEvent(
                        event.l_lo, event.l_hi, "pitchfork", (b0, b1.id, b2.id)
                    )
                    absorbed.add(births[b1.id])
                    absorbed.add(births[b2.id])
                    break
            else:
                continue
            break

    # births sharing a bracket (and not absorbed by a pitchfork) pair into folds
    by_bracket: dict[tuple[float, float], list[int]] = {}
    for ei, event in enumerate(run.events):
        if ei in absorbed or event.kind != "unclassified":
            continue
        if ei in births.values():
            by_bracket.setdefault((round(event.l_lo, 9), round(event.l_hi, 9)), []).append(ei)
    for event_ids in by_bracket.values():
        if len(event_ids) >= 2:
            for ei in event_ids:
                ev = run.events[ei]
                run.events[ei] = BifurcationEvent(ev.l_lo, ev.l_hi, "fold", ev.branches)

    if absorbed:
        keep = [ev for ei, ev in enumerate(run.events) if ei not in absorbed]
        # remap parent_event indices
        remap = {}
        k = 0
        for ei in range(len(run.events)):
            if ei not in absorbed:
                remap[ei] = k
                k += 1
        for branch in run.branches:
            if branch.parent_event is not None:
                branch.parent_event = remap.get(branch.parent_event)
        run.events = keep


def continue_in_l(
    c: float,
    l_start: float,
    l_end: float,
    step: float,
    system: str = "full",
    n_cells: int = 1000,
    xi: float = 1.0,
    deflate_every: int = 5,
    deflation_budget: int = 10,
    initial_budget: int = 24,
    seed: int = 0,
    stability_k: int = 6,
    opts: SolveOptions | None = None,
    progress=None,
) -> tuple[list[Branch], list[BifurcationEvent]]:
    """March l over [l_start, l_end] at fixed coupling, tracking all branches.

    Returns the discovered branches (points sorted by l) and the bifurcation
    events.  `progress`, if given, is called with (step_index, n_steps).
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if min(l_start, l_end) <= 0:
        raise ValueError("the l range must be positive")
    if system not in ("full", "or"):
        raise ValueError(f"system must be 'full' or 'or', got {system!r}")

    direction = 1 if l_end >= l_start else -1
    n_steps = int(math.floor(abs(l_end - l_start) / step + 1e-9))
    lattice = [l_start + direction * step * i for i in range(n_steps + 1)]
    opts = opts or SolveOptions(rel_tol=1e-300, max_iters=50)

    run = _Run(c, lattice, system, n_cells, xi, opts, stability_k)

    from .deflation import discover_solutions

    suite = default_guess_suite(run.mesh, run.params(0), system, n_random=4, seed=seed)
    for state in discover_solutions(run.params(0), system, suite, budget=initial_budget, opts=opts):
        run.new_branch(0, state)

    for i in range(1, len(lattice)):
        if progress is not None:
            progress(i, len(lattice) - 1)
        for branch in list(run.branches):
            if branch.point_at(lattice[i - 1]) is None:
                continue  # branch not alive at the previous lattice value
            if branch.point_at(lattice[i]) is not None:
                continue
            status, info = _advance(run, branch, i - 1, i)
            if status == "ok":
                run.accept(branch, i, info)
            else:
                lo, hi = run.bracket(i - 1, i)
                involved = [branch.id] if status != "collision" else [branch.id, info]
                run.add_event(lo, hi, "unclassified", involved)
        if i % deflate_every == 0 or i == len(lattice) - 1:
            _deflation_pass(run, i, deflation_budget, march_step=1)

    _scan_eigen_crossings(run)
    _classify_events(run, step)
    for branch in run.branches:
        branch.points.sort(key=lambda p: p.l)
    return run.branches, run.events


def diagram_emit(branches: list[Branch], events: list[BifurcationEvent], outdir) -> dict:
    """Write plot-ready branches.csv and events.csv; returns the file paths."""
    import os

    if not branches:
        raise ValueError("diagram_emit needs at least one branch")
    os.makedirs(outdir, exist_ok=True)
    branches_path = os.path.join(outdir, "branches.csv")
    events_path = os.path.join(outdir, "events.csv")
    with open(branches_path, "w", encoding="utf-8") as fh:
        fh.write("branch_id,l,functional,energy,stability\n")
        for branch in branches:
            for p in branch.points:
                fh.write(
                    f"{branch.id},{p.l:.17g},{p.functional:.17g},{p.energy:.17g},{p.verdict}\n"
                )
    with open(events_path, "w", encoding="utf-8") as fh:
        fh.write("l_lo,l_hi,kind,branches\n")
        for ev in events:
            ids = ";".join(str(b) for b in ev.branches)
            fh.write(f"{ev.l_lo:.17g},{ev.l_hi:.17g},{ev.kind},{ids}\n")
    return {"branches": branches_path, "events": events_path}
