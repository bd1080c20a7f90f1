"""Independent reference computations used to freeze expected values."""

import itertools

import numpy as np

from gridrisk.lpsolve import LpProblem


def vertex_enumeration(problem: LpProblem, tol: float = 1e-9) -> float:
    """Optimal value of a small bounded LP by trying every basic solution.

    Returns inf when no vertex is feasible. Bounds must be finite.
    """
    A = problem.constraint_matrix
    m, n = A.shape
    planes, levels = list(A), list(problem.rhs)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        planes += [e, e]
        levels += [problem.lower[j], problem.upper[j]]
    H, h = np.array(planes), np.array(levels)
    subsets = np.array(list(itertools.combinations(range(len(h)), n)))
    M, r = H[subsets], h[subsets]
    regular = np.abs(np.linalg.det(M)) > 1e-9
    points = np.linalg.solve(M[regular], r[regular][..., None])[..., 0]
    best = np.inf
    for x in points:
        if problem.max_violation(x) <= tol:
            best = min(best, float(problem.objective @ x))
    return best


def random_lp(rng: np.random.Generator, max_vars: int = 6, max_rows: int = 6) -> LpProblem:
    n = int(rng.integers(1, max_vars + 1))
    m = int(rng.integers(1, max_rows + 1))
    A = rng.integers(-5, 6, (m, n)).astype(float)
    lb = rng.integers(-5, 1, n).astype(float)
    ub = lb + rng.integers(1, 10, n)
    senses = tuple(rng.choice(["<=", ">=", "=="], m, p=[0.45, 0.45, 0.1]))
    b = rng.integers(-10, 11, m).astype(float)
    c = rng.integers(-5, 6, n).astype(float)
    return LpProblem(c, A, senses, b, lb, ub)


def tail_mean_by_sorting(samples, alpha, upper=False):
    """Nearest-rank tail mean computed with plain Python sorting."""
    xs = sorted(float(v) for v in samples)
    if upper:
        xs = xs[::-1]
    k = max(1, -(-int(round(alpha * len(xs) * 1000)) // 100000))
    return sum(xs[:k]) / k


def sced_qoi_from_primal(layout, x):
    """Re-derive (cost, shed, reg, op) from a dispatch primal by direct summation."""
    system = layout.system
    energy = 0.0
    for k, g in enumerate(layout.on):
        energy += system.generators[g].energy_cost * x[layout.p[k]]
    shed = sum(x[j] for j in layout.shed)
    reg = sum(x[j] for j in layout.r_reg)
    spin = sum(x[j] for j in layout.r_spin)
    short = x[layout.reg_short] + x[layout.op_short]
    cost = (energy + system.voll * shed + system.reserve_penalty * short) / 12.0
    return cost, shed, reg, reg + spin


def backprop_vs_finite_differences(weights, biases, X, Y, loss, hal, rng, draws=200, h=1e-4):
    """Worst relative gap between backprop and central differences over random weights.

    Draws whose +-h perturbation flips any pre-activation or residual sign are
    skipped: the loss is not differentiable across those kinks. Between kinks
    the loss is linear in any single weight, so a large h only cuts roundoff.
    """
    from gridrisk.surrogate.nn import forward, loss_and_grads

    _, gw, _ = loss_and_grads(weights, biases, X, Y, loss, hal)
    worst, checked = 0.0, 0
    for _ in range(draws):
        layer = rng.integers(len(weights))
        i, j = rng.integers(weights[layer].shape[0]), rng.integers(weights[layer].shape[1])
        W = weights[layer]
        orig = W[i, j]
        W[i, j] = orig + h
        up, (out_up, (_, pre_up)) = loss_and_grads(weights, biases, X, Y, loss, hal)[0], forward(weights, biases, X)
        W[i, j] = orig - h
        down, (out_dn, (_, pre_dn)) = loss_and_grads(weights, biases, X, Y, loss, hal)[0], forward(weights, biases, X)
        W[i, j] = orig
        kink = any((np.sign(a) != np.sign(c)).any() for a, c in zip(pre_up, pre_dn))
        kink |= bool((np.sign(out_up - Y) != np.sign(out_dn - Y)).any())
        fd = (up - down) / (2 * h)
        g = gw[layer][i, j]
        if kink or (abs(fd) < 1e-7 and abs(g) < 1e-7):
            continue
        worst = max(worst, abs(fd - g) / max(abs(g), abs(fd)))
        checked += 1
    return worst, checked
