"""Dense bounded-variable primal simplex, the reference LP backend.

Two-phase method with explicit basis inverse, Dantzig pricing and a Bland
fallback that kicks in after a stall (anti-cycling). Adequate at desk
scale; the search code only depends on ``solve_lp``'s contract, so a
faster backend can be swapped in without touching it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

PIVOT_TOL = 1e-9
COST_TOL = 1e-9
FEAS_TOL = 1e-7
STALL_LIMIT = 40
REFACTOR_EVERY = 100


class SimplexError(RuntimeError):
    """Numerical failure or iteration-limit blowup inside the simplex."""


@dataclass
class LpResult:
    status: str
    value: float
    x: np.ndarray | None
    iterations: int


def solve_lp(c, A, senses, b, lb, ub) -> LpResult:
    """Minimize c.x subject to A x (<=, =, >=) b and lb <= x <= ub.

    Every variable needs at least one finite bound. Returns the optimal
    basic solution (structural part only), or an INFEASIBLE/UNBOUNDED
    status. Deterministic for fixed input.
    """
    try:
        return _solve_lp(c, A, senses, b, lb, ub, conservative=False)
    except SimplexError:
        # Numerical trouble: retry once with frequent refactorization and
        # Bland pricing throughout.
        return _solve_lp(c, A, senses, b, lb, ub, conservative=True)


def _solve_lp(c, A, senses, b, lb, ub, conservative: bool) -> LpResult:
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    m = len(b)
    n = len(c)
    if np.any(lb > ub + 1e-12):
        return LpResult(INFEASIBLE, np.inf, None, 0)
    if m == 0:
        # Bound-only problem: each variable sits at its cheaper bound.
        x = np.where(c >= 0, lb, ub)
        if not np.all(np.isfinite(x)):
            return LpResult(UNBOUNDED, -np.inf, None, 0)
        return LpResult(OPTIMAL, float(c @ x), x, 0)

    A = np.asarray(A, dtype=float)
    # Row equilibration keeps capacity-sized coefficients from swamping
    # the unit flow rows.
    row_scale = np.maximum(np.abs(A).max(axis=1), 1e-12)
    A = A / row_scale[:, None]
    b = b / row_scale
    slack_lb = np.empty(m)
    slack_ub = np.empty(m)
    for i, s in enumerate(senses):
        if s == "<=":
            slack_lb[i], slack_ub[i] = 0.0, np.inf
        elif s == ">=":
            slack_lb[i], slack_ub[i] = -np.inf, 0.0
        elif s == "=":
            slack_lb[i], slack_ub[i] = 0.0, 0.0
        else:
            raise ValueError(f"unknown row sense {s!r}")

    full_lb = np.concatenate([lb, slack_lb])
    full_ub = np.concatenate([ub, slack_ub])
    at_upper = ~np.isfinite(full_lb)

    # Crash basis: a row's own slack enters the basis whenever it can absorb
    # the residual of the all-at-bounds point; only the remaining rows get
    # an artificial column.
    v0 = np.where(at_upper[:n], ub[:n], lb[:n])
    resid = b - A @ v0
    need_art = (resid < slack_lb - 1e-12) | (resid > slack_ub + 1e-12)
    art_rows = np.flatnonzero(need_art)
    n_art = len(art_rows)
    n_cols = n + m + n_art

    Ax = np.zeros((m, n_cols))
    Ax[:, :n] = A
    Ax[:, n:n + m] = np.eye(m)
    basis = np.arange(n, n + m)
    for k, i in enumerate(art_rows):
        Ax[i, n + m + k] = 1.0 if resid[i] >= 0 else -1.0
        basis[i] = n + m + k
    full_lb = np.concatenate([full_lb, np.zeros(n_art)])
    full_ub = np.concatenate([full_ub, np.full(n_art, np.inf)])
    at_upper = np.concatenate([at_upper, np.zeros(n_art, dtype=bool)])

    state = _State(Ax, b, full_lb, full_ub, at_upper, basis, n_struct=n,
                   conservative=conservative)

    if n_art:
        scale = max(1.0, float(np.max(np.abs(b))))
        phase1_cost = np.zeros(n_cols)
        phase1_cost[n + m:] = 1.0
        status = _iterate(state, phase1_cost)
        if status != OPTIMAL:
            raise SimplexError("phase 1 cannot be unbounded")
        if phase1_cost @ state.v > FEAS_TOL * scale:
            return LpResult(INFEASIBLE, np.inf, None, state.iterations)
        _expel_artificials(state)
        # Artificials are pinned to zero for phase 2.
        state.ub[n + m:] = 0.0
        state.at_upper[n + m:] = False

    phase2_cost = np.zeros(n_cols)
    phase2_cost[:n] = c
    status = _iterate(state, phase2_cost)
    if status == UNBOUNDED:
        return LpResult(UNBOUNDED, -np.inf, None, state.iterations)
    x = state.v[:n].copy()
    return LpResult(OPTIMAL, float(c @ x), x, state.iterations)


class _State:
    def __init__(self, Ax, b, lb, ub, at_upper, basis, n_struct,
                 conservative=False):
        self.Ax = Ax
        self.b = b
        self.lb = lb
        self.ub = ub
        self.at_upper = at_upper
        self.basis = basis
        self.n_struct = n_struct
        self.conservative = conservative
        self.in_basis = np.zeros(Ax.shape[1], dtype=bool)
        self.in_basis[basis] = True
        self.binv = np.diag(1.0 / np.diag(Ax[:, basis]))
        self.iterations = 0
        self.v = np.zeros(Ax.shape[1])
        self._refresh()

    def _refresh(self, refactor: bool = False):
        if refactor:
            B = self.Ax[:, self.basis]
            try:
                self.binv = np.linalg.inv(B)
            except np.linalg.LinAlgError as exc:
                raise SimplexError("singular basis") from exc
            if not np.all(np.isfinite(self.binv)):
                raise SimplexError("singular basis")
        v = np.where(self.at_upper, self.ub, self.lb)
        v[self.basis] = 0.0
        xb = self.binv @ (self.b - self.Ax @ v)
        v[self.basis] = xb
        self.v = v


def _iterate(st: _State, cost: np.ndarray) -> str:
    movable = st.ub - st.lb > 1e-12
    stall = 0
    bland = st.conservative
    last_obj = np.inf
    refactor_every = 15 if st.conservative else REFACTOR_EVERY
    max_iters = 20000 + 200 * st.Ax.shape[0]
    while True:
        st.iterations += 1
        if st.iterations > max_iters:
            raise SimplexError("simplex iteration limit exceeded")
        if st.iterations % refactor_every == 0:
            st._refresh(refactor=True)
        duals = cost[st.basis] @ st.binv
        reduced = cost - duals @ st.Ax
        improving = np.where(st.at_upper, reduced > COST_TOL, reduced < -COST_TOL)
        eligible = improving & ~st.in_basis & movable
        if not eligible.any():
            st._refresh(refactor=True)
            return OPTIMAL
        if bland:
            j = int(np.flatnonzero(eligible)[0])
        else:
            score = np.where(eligible, np.abs(reduced), 0.0)
            j = int(np.argmax(score))
        sigma = -1.0 if st.at_upper[j] else 1.0
        w = st.binv @ st.Ax[:, j]
        coef = sigma * w
        xb = st.v[st.basis]
        # Largest step before a basic variable hits one of its bounds.
        step = np.full(len(xb), np.inf)
        dec = coef > PIVOT_TOL
        inc = coef < -PIVOT_TOL
        step[dec] = (xb[dec] - st.lb[st.basis[dec]]) / coef[dec]
        step[inc] = (xb[inc] - st.ub[st.basis[inc]]) / coef[inc]
        np.maximum(step, 0.0, out=step)
        own = st.ub[j] - st.lb[j]
        delta = float(step.min(initial=np.inf))
        if delta >= np.inf and own >= np.inf:
            return UNBOUNDED
        if delta < np.inf:
            # Among blocking rows within a whisker of the minimum step,
            # pivot on the largest magnitude for numerical stability
            # (Bland mode keeps its smallest-index guarantee instead).
            ties = np.flatnonzero(step <= delta + 1e-9)
            if bland:
                p = int(min(ties, key=lambda q: st.basis[q]))
            else:
                p = int(max(ties, key=lambda q: (abs(w[q]), -q)))
            delta = float(step[p])
        else:
            p = -1
        if own <= delta:
            # Bound flip: the entering variable crosses to its other bound.
            st.v[st.basis] = xb - own * coef
            st.at_upper[j] = not st.at_upper[j]
            st.v[j] = st.ub[j] if st.at_upper[j] else st.lb[j]
        else:
            leaving = st.basis[p]
            piv = w[p]
            if abs(piv) <= PIVOT_TOL:
                raise SimplexError("zero pivot")
            row = st.binv[p] / piv
            st.binv -= np.outer(w, row)
            st.binv[p] = row
            enter_val = (st.ub[j] if st.at_upper[j] else st.lb[j]) + sigma * delta
            new_xb = xb - delta * coef
            new_xb[p] = enter_val
            st.basis[p] = j
            st.in_basis[leaving] = False
            st.in_basis[j] = True
            # The leaver settles on the bound that blocked the step.
            st.at_upper[leaving] = coef[p] < 0
            st.v[leaving] = st.ub[leaving] if st.at_upper[leaving] else st.lb[leaving]
            st.v[st.basis] = new_xb
        obj = float(cost @ st.v)
        if obj < last_obj - 1e-12:
            last_obj = obj
            stall = 0
            bland = st.conservative
        else:
            stall += 1
            if stall >= STALL_LIMIT:
                bland = True


def _expel_artificials(st: _State) -> None:
    """Pivot zero-valued artificials out of the basis where possible;
    rows with no eligible pivot are redundant and keep a pinned artificial."""
    n_art_start = st.n_struct + st.Ax.shape[0]
    for p in range(len(st.basis)):
        col = st.basis[p]
        if col < n_art_start:
            continue
        row = st.binv[p] @ st.Ax
        candidates = np.flatnonzero(
            (np.abs(row) > 1e-7) & ~st.in_basis
            & (np.arange(st.Ax.shape[1]) < n_art_start))
        if len(candidates) == 0:
            continue
        j = int(candidates[0])
        w = st.binv @ st.Ax[:, j]
        piv = w[p]
        new_row = st.binv[p] / piv
        st.binv -= np.outer(w, new_row)
        st.binv[p] = new_row
        st.in_basis[col] = False
        st.in_basis[j] = True
        st.basis[p] = j
        st.at_upper[col] = False
    st._refresh()
