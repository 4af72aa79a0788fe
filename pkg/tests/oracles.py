"""Independent reference computations used by the test-suite.

Nothing here calls into the package's solvers: the grid oracles enumerate
feasible points directly, and the linear-algebra oracles use characteristic
polynomials and explicit minor enumeration.
"""
import itertools

import numpy as np


def simplex_grid(dim, n, total=1.0):
    """All points of ``{x >= 0, sum x <= total}`` on a grid with ``n`` steps per axis."""
    h = total / n
    axes = np.arange(n + 1) * h
    mesh = np.stack(np.meshgrid(*([axes] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    return mesh[mesh.sum(axis=1) <= total * (1 + 1e-12)], h


def steps_for(points, dim, fill=1.0):
    """Steps per axis so a ``dim``-dimensional grid has about ``points`` feasible points."""
    return int(np.ceil((points / fill) ** (1.0 / dim)))


# -- grid oracles --------------------------------------------------------------
# Each enumerates the free coordinates of a feasible set: a first pass over a
# simplex with at least ``points`` feasible points, then boxes of +-2 grid steps
# around the incumbent, refined ``zoom`` times once the incumbent is interior.  Each returns
# (best objective, best point, final grid spacing, number of points evaluated).


ZOOM_POINTS = 20_000
ZOOM_ROUNDS = 60


def _search(evaluate, dim, total, points, zoom, maximize):
    n = steps_for(points, dim, fill=1.0 / np.prod(np.arange(1, dim + 1)))
    free, h = simplex_grid(dim, n, total)
    sign = 1.0 if maximize else -1.0
    obj, full = evaluate(free)
    k = int(np.argmax(sign * obj))
    best_obj, best_p, best_free, count = obj[k], full[k], free[k], len(obj)
    side = max(int(np.ceil(ZOOM_POINTS ** (1.0 / dim))), 5)
    shrinks = 0
    for _ in range(ZOOM_ROUNDS):
        if shrinks == zoom:
            break
        axes = [np.linspace(x - 2 * h, x + 2 * h, side) for x in best_free]
        raw = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
        # clip so faces with zero entries stay reachable
        cand = np.maximum(raw, 0.0)
        keep = cand.sum(axis=1) <= total
        cand, raw = cand[keep], raw[keep]
        obj, full = evaluate(cand)
        count += len(obj)
        k = int(np.argmax(sign * obj))
        on_edge = np.any(np.isclose(np.abs(raw[k] - best_free), 2 * h) & (raw[k] > 0))
        if sign * obj[k] > sign * best_obj:
            best_obj, best_p, best_free = obj[k], full[k], cand[k]
        if not on_edge:
            # incumbent is interior to the box: refine
            h = 4 * h / (side - 1)
            shrinks += 1
    return best_obj, best_p, h, count


def grid_opportunistic(i_eff, varsigma, points=100_000, zoom=6):
    """Max sum(p) over {sum (p I)^2 <= varsigma}.

    The objective increases in every coordinate, so optimal points lie on the
    ellipsoid boundary: parametrize by q_l = (p_l I_l)^2 with ``sum q = varsigma``
    and enumerate the free L-1 coordinates.
    """
    i_eff = np.asarray(i_eff, float)

    def evaluate(q_free):
        q = np.column_stack([q_free, np.maximum(varsigma - q_free.sum(axis=1), 0)])
        p = np.sqrt(q) / i_eff
        return p.sum(axis=1), p

    return _search(evaluate, i_eff.size - 1, varsigma, points, zoom, maximize=True)


def _completing_last(i_eff):
    # order channels so the least-interfered one, active at every optimum of
    # these problems, is the coordinate that completes the constraint
    order = np.argsort(-i_eff, kind="stable")
    return order, np.argsort(order)


def grid_power_min(i_eff, rate_target, points=100_000, zoom=6):
    """Min sum(p) over {sum ln(1 + p/I) >= R}; one coordinate completes the rate.

    The cheapest single-channel allocation bounds the optimal total power, so
    the free coordinates range over a simplex of that size.
    """
    i_eff = np.asarray(i_eff, float)
    order, back = _completing_last(i_eff)
    i_ord = i_eff[order]
    bound = float(i_ord[-1] * np.expm1(rate_target))

    def evaluate(free):
        used = np.log1p(free / i_ord[:-1]).sum(axis=1)
        last = i_ord[-1] * np.maximum(np.expm1(rate_target - used), 0)
        p = np.column_stack([free, last])[:, back]
        return p.sum(axis=1), p

    return _search(evaluate, i_eff.size - 1, bound, points, zoom, maximize=False)


def grid_waterfill(i_eff, budget, points=100_000, zoom=6):
    """Max sum ln(1 + p/I) over {sum p = budget}; the rate increases in every p."""
    i_eff = np.asarray(i_eff, float)
    order, back = _completing_last(i_eff)

    def evaluate(free):
        p = np.column_stack([free, np.maximum(budget - free.sum(axis=1), 0)])[:, back]
        return np.log1p(p / i_eff).sum(axis=1), p

    return _search(evaluate, i_eff.size - 1, budget, points, zoom, maximize=True)


def grid_linear_priced(i_eff, budget, unit_prices, points=100_000, zoom=6):
    """Max sum ln(1 + p/I) - sum c p over {p >= 0, sum p <= budget}.

    The interior and the face ``sum p = budget`` are searched separately so a
    binding budget is represented exactly.
    """
    i_eff = np.asarray(i_eff, float)
    c = np.asarray(unit_prices, float)

    def objective(p):
        return np.log1p(p / i_eff).sum(axis=1) - (p * c).sum(axis=1)

    inner = _search(lambda p: (objective(p), p), i_eff.size, budget, points, zoom, True)
    if i_eff.size == 1:
        p = np.array([[budget]])
        face = (objective(p)[0], p[0], 0.0, 1)
    else:
        order = np.argsort(c + 1.0 / i_eff, kind="stable")[::-1]
        back = np.argsort(order)

        def on_face(free):
            p = np.column_stack([free, np.maximum(budget - free.sum(axis=1), 0)])[:, back]
            return objective(p), p

        face = _search(on_face, i_eff.size - 1, budget, points, zoom, True)
    best = inner if inner[0] >= face[0] else face
    return best[0], best[1], max(inner[2], face[2]), inner[3] + face[3]


# -- scalar and linear-algebra oracles -----------------------------------------


def bisect_scalar(fn, lo, hi, iters=300):
    """Plain bisection for a sign change of ``fn`` on ``[lo, hi]``."""
    f_lo = fn(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if (fn(mid) > 0) == (f_lo > 0):
            lo, f_lo = mid, fn(mid)
        else:
            hi = mid
    return 0.5 * (lo + hi)


def golden_section_min(fn, lo, hi, iters=200):
    phi = (np.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - phi * (b - a), a + phi * (b - a)
    for _ in range(iters):
        if fn(c) < fn(d):
            b, d = d, c
            c = b - phi * (b - a)
        else:
            a, c = c, d
            d = a + phi * (b - a)
    return 0.5 * (a + b)


def charpoly_spectral_radius(matrix):
    """Spectral radius of a 3x3 matrix from the roots of its characteristic cubic."""
    a = np.asarray(matrix, float)
    tr = np.trace(a)
    minors = (a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0] + a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]
              + a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
    det = (a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
           - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
           + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]))
    return float(np.abs(np.roots([1.0, -tr, minors, -det])).max())


def _det(a):
    # Laplace expansion on small blocks, LU beyond
    n = a.shape[0]
    if n > 3:
        return np.linalg.det(a)
    if n == 1:
        return a[0, 0]
    return sum((-1) ** j * a[0, j] * _det(np.delete(a[1:], j, axis=1)) for j in range(n))


def all_principal_minors_positive(matrix):
    a = np.asarray(matrix, float)
    n = a.shape[0]
    for k in range(1, n + 1):
        for rows in itertools.combinations(range(n), k):
            if _det(a[np.ix_(rows, rows)]) <= 0:
                return False
    return True


def interference_loop(cross_gain, noise, p, i, l):
    """Effective interference by an explicit loop in reverse user order."""
    total = 0.0
    for j in reversed(range(p.shape[0])):
        if j != i:
            total += cross_gain[i][j][l] * p[j][l]
    return total + noise[i][l]
