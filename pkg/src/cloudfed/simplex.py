"""Linear programs, in float and exact-rational flavors.

Both entry points solve
    minimize    c . x
    subject to  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.

`solve_lp` is a dense two-phase tableau over numpy float64 and handles
the placement relaxations (a few dozen rows, a few hundred columns);
its pivot tolerance is far below the smallest real cost quantum in
those models, the amortized power-cycle energies, so epsilon-scale
preferences are resolved rather than treated as ties.
`solve_lp_exact` runs on `fractions.Fraction` with Bland's rule
throughout, guaranteeing termination and exact verdicts; problem sizes
there are tiny, so the quadratic tableau cost is irrelevant.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class LPError(Exception):
    pass


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: object = None  # primal solution over the original columns
    objective: object = None
    duals: object = None  # one multiplier per constraint row (ub rows first)


def _pivot(T, row, col):
    T[row] /= T[row, col]
    piv = T[row]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, piv)


def _run_phase(T, basis, ncols, tol, maxiter=20000):
    """Minimize the last tableau row over columns [0, ncols)."""
    stalled = 0
    last = T[-1, -1]
    bland = False
    for _ in range(maxiter):
        reduced = T[-1, :ncols]
        if bland:
            candidates = np.nonzero(reduced < -tol)[0]
            if candidates.size == 0:
                return
            col = int(candidates[0])
        else:
            col = int(np.argmin(reduced))
            if reduced[col] >= -tol:
                return
        ratios = np.full(T.shape[0] - 1, np.inf)
        positive = T[:-1, col] > tol
        ratios[positive] = T[:-1, -1][positive] / T[:-1, col][positive]
        row = int(np.argmin(ratios))
        if not np.isfinite(ratios[row]):
            raise LPError("unbounded")
        if bland:
            # lowest basis index among ties keeps Bland's guarantee
            best = ratios[row]
            ties = np.nonzero(np.abs(ratios - best) <= tol * (1 + abs(best)))[0]
            row = int(min(ties, key=lambda r: basis[r]))
        _pivot(T, row, col)
        basis[row] = col
        obj = T[-1, -1]
        if obj > last - 1e-12:
            stalled += 1
            if stalled > 2 * (T.shape[0] + ncols):
                bland = True
        else:
            stalled = 0
        last = obj
    raise LPError("simplex iteration limit exceeded")


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, tol=1e-9) -> LPResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    rows = []
    rhs = []
    kinds = []  # "ub" or "eq", in constraint order
    if A_ub is not None and len(A_ub):
        for r, b in zip(np.asarray(A_ub, dtype=float), np.asarray(b_ub, dtype=float)):
            rows.append(r)
            rhs.append(b)
            kinds.append("ub")
    if A_eq is not None and len(A_eq):
        for r, b in zip(np.asarray(A_eq, dtype=float), np.asarray(b_eq, dtype=float)):
            rows.append(r)
            rhs.append(b)
            kinds.append("eq")
    m = len(rows)
    if m == 0:
        if np.any(c < -tol):
            return LPResult(status="unbounded")
        return LPResult(status="optimal", x=np.zeros(n), objective=0.0, duals=np.zeros(0))

    A = np.vstack(rows) if rows else np.zeros((0, n))
    b = np.asarray(rhs, dtype=float)

    n_slack = sum(1 for k in kinds if k == "ub")
    total = n + n_slack + m  # structurals + slacks + one artificial per row
    T = np.zeros((m + 1, total + 1))
    basis = [0] * m
    slack_j = n
    for i in range(m):
        row = A[i].copy()
        bi = b[i]
        sign = 1.0
        if bi < 0:
            row = -row
            bi = -bi
            sign = -1.0
        T[i, :n] = row
        if kinds[i] == "ub":
            T[i, slack_j] = sign
            slack_j += 1
        art = n + n_slack + i
        T[i, art] = 1.0
        T[i, -1] = bi
        basis[i] = art

    # Phase 1: drive the artificials out.
    T[-1, :] = 0.0
    for i in range(m):
        T[-1, :] -= T[i, :]
    T[-1, n + n_slack:n + n_slack + m] = 0.0
    _run_phase(T, basis, n + n_slack, tol)
    if -T[-1, -1] > 1e-7:
        return LPResult(status="infeasible")

    # Pivot any residual artificial out of the basis if possible.
    for i in range(m):
        if basis[i] >= n + n_slack:
            for j in range(n + n_slack):
                if abs(T[i, j]) > tol:
                    _pivot(T, i, j)
                    basis[i] = j
                    break

    # Phase 2 over the real objective.
    T[-1, :] = 0.0
    T[-1, :n] = c
    for i in range(m):
        j = basis[i]
        if j < n and abs(c[j]) > 0:
            T[-1, :] -= c[j] * T[i, :]
    T[:, n + n_slack:n + n_slack + m] = 0.0  # retire artificial columns
    try:
        _run_phase(T, basis, n + n_slack, tol)
    except LPError as exc:
        if "unbounded" in str(exc):
            return LPResult(status="unbounded")
        raise

    x = np.zeros(n)
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = T[i, -1]
    # Row prices are only consumed from the exact-rational path; the
    # float path reports the primal side alone.
    return LPResult(status="optimal", x=x, objective=float(c @ x), duals=None)


# --------------------------------------------------------------------------
# Exact-rational variant
# --------------------------------------------------------------------------

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _pivot_exact(T, row, col):
    p = T[row][col]
    T[row] = [v / p for v in T[row]]
    piv = T[row]
    for r, line in enumerate(T):
        if r != row and line[col] != 0:
            f = line[col]
            T[r] = [v - f * pv for v, pv in zip(line, piv)]


def _run_phase_exact(T, basis, ncols, maxiter=100000):
    """Bland's rule end to end: enter the lowest eligible column, leave
    on the lowest basis index among minimum-ratio rows."""
    for _ in range(maxiter):
        obj = T[-1]
        col = None
        for j in range(ncols):
            if obj[j] < 0:
                col = j
                break
        if col is None:
            return
        row = None
        best = None
        for i in range(len(T) - 1):
            a = T[i][col]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[row]):
                    best = ratio
                    row = i
        if row is None:
            raise LPError("unbounded")
        _pivot_exact(T, row, col)
        basis[row] = col
    raise LPError("exact simplex iteration limit exceeded")


def solve_lp_exact(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None) -> LPResult:
    c = [Fraction(v) for v in c]
    n = len(c)
    rows, rhs, kinds = [], [], []
    if A_ub:
        for r, b in zip(A_ub, b_ub):
            rows.append([Fraction(v) for v in r])
            rhs.append(Fraction(b))
            kinds.append("ub")
    if A_eq:
        for r, b in zip(A_eq, b_eq):
            rows.append([Fraction(v) for v in r])
            rhs.append(Fraction(b))
            kinds.append("eq")
    m = len(rows)
    if m == 0:
        if any(v < 0 for v in c):
            return LPResult(status="unbounded")
        return LPResult(status="optimal", x=[_ZERO] * n, objective=_ZERO, duals=[])

    n_slack = sum(1 for k in kinds if k == "ub")
    total = n + n_slack + m
    T = []
    basis = [0] * m
    slack_j = n
    signs = []
    for i in range(m):
        row = list(rows[i])
        bi = rhs[i]
        sign = _ONE
        if bi < 0:
            row = [-v for v in row]
            bi = -bi
            sign = -_ONE
        signs.append(sign)
        line = row + [_ZERO] * (n_slack + m) + [bi]
        if kinds[i] == "ub":
            line[slack_j] = sign
            slack_j += 1
        line[n + n_slack + i] = _ONE
        T.append(line)
        basis[i] = n + n_slack + i

    phase1 = [_ZERO] * (total + 1)
    for line in T:
        phase1 = [p - v for p, v in zip(phase1, line)]
    for i in range(m):
        phase1[n + n_slack + i] = _ZERO
    T.append(phase1)
    _run_phase_exact(T, basis, n + n_slack)
    if -T[-1][-1] != 0:
        return LPResult(status="infeasible")

    for i in range(m):
        if basis[i] >= n + n_slack:
            for j in range(n + n_slack):
                if T[i][j] != 0:
                    _pivot_exact(T, i, j)
                    basis[i] = j
                    break

    obj = [_ZERO] * (total + 1)
    obj[:n] = list(c)
    T[-1] = obj
    for i in range(m):
        j = basis[i]
        if j < n and c[j] != 0:
            T[-1] = [v - c[j] * pv for v, pv in zip(T[-1], T[i])]
    for line in T:
        for i in range(m):
            line[n + n_slack + i] = _ZERO
    try:
        _run_phase_exact(T, basis, n + n_slack)
    except LPError as exc:
        if "unbounded" in str(exc):
            return LPResult(status="unbounded")
        raise

    x = [_ZERO] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = T[i][-1]
    objective = sum((ci * xi for ci, xi in zip(c, x)), _ZERO)

    # Row duals from slack reduced costs (ub rows) and via the artificial
    # bookkeeping for eq rows: recover y solving B^T y = c_B is overkill
    # here; instead read the phase-2 reduced costs of the identity
    # columns we planted per row before retiring them. They were zeroed,
    # so recompute duals directly from the basis.
    duals = _recover_duals_exact(rows, rhs, kinds, c, basis, T, n, n_slack)
    return LPResult(status="optimal", x=x, objective=objective, duals=duals)


def _recover_duals_exact(rows, rhs, kinds, c, basis, T, n, n_slack):
    """Solve B^T y = c_B exactly for the final basis."""
    m = len(rows)
    cols = []
    cb = []
    slack_map = {}
    slack_j = n
    for i in range(m):
        if kinds[i] == "ub":
            slack_map[slack_j] = (i, _ONE if rhs[i] >= 0 else -_ONE)
            slack_j += 1
    for i in range(m):
        j = basis[i]
        if j < n:
            cols.append([rows[r][j] for r in range(m)])
            cb.append(c[j])
        elif j in slack_map:
            r, sign = slack_map[j]
            col = [_ZERO] * m
            col[r] = sign
            cols.append(col)
            cb.append(_ZERO)
        else:  # artificial left basic at level zero: degenerate row
            r = j - n - n_slack
            col = [_ZERO] * m
            col[r] = _ONE
            cols.append(col)
            cb.append(_ZERO)
    # Gaussian elimination on B^T y = c_B; row k of B^T is basis column k.
    M = [[cols[k][r] for r in range(m)] + [cb[k]] for k in range(m)]
    y = _gauss_exact(M, m)
    return y


def _gauss_exact(M, m):
    row = 0
    where = [-1] * m
    for col in range(m):
        piv = None
        for r in range(row, m):
            if M[r][col] != 0:
                piv = r
                break
        if piv is None:
            continue
        M[row], M[piv] = M[piv], M[row]
        inv = M[row][col]
        M[row] = [v / inv for v in M[row]]
        for r in range(m):
            if r != row and M[r][col] != 0:
                f = M[r][col]
                M[r] = [v - f * pv for v, pv in zip(M[r], M[row])]
        where[col] = row
        row += 1
    y = [_ZERO] * m
    for col in range(m):
        if where[col] >= 0:
            y[col] = M[where[col]][-1]
    return y
