"""Pure-NumPy implementations of the per-point solver kernels.

``mvtri._core`` (Cython) provides compiled versions of the same functions;
this module is the fallback selected at import time when the extension is
not built.  Both backends implement the identical algorithms, so results
agree to floating-point accuracy.  Every function here is deterministic.
"""
from __future__ import annotations

import numpy as np

from .errors import NonFiniteResidual

BACKEND_NAME = "python"

# Numerical policy shared with the compiled backend.
REAL_IMAG_TOL = 1e-8      # eigenvalue counts as real when |Im| <= tol*(1+|Re|)
ROOT_DEDUP_TOL = 1e-9     # roots closer than this collapse to one
ROOT_RESIDUAL_TOL = 1e-8  # reported roots satisfy |p(r)| <= tol*max|c|
TRIM_TOL = 1e-13          # trailing coefficients below tol*max|c| are dropped
DAMPING_CAP = 1e12        # LM gives up once the damping passes this

LM_GRADIENT_SMALL = 0
LM_STEP_SMALL = 1
LM_MAX_ITERATIONS = 2

HS_OK = 0
HS_EPIPOLE_AT_POINT = 1
HS_RANK_DEFICIENT = 2


def polyval(coeffs, x):
    """Horner evaluation of an ascending-coefficient polynomial."""
    c = np.asarray(coeffs, dtype=float)
    p = np.full_like(np.asarray(x, dtype=float), c[-1])
    for k in range(len(c) - 2, -1, -1):
        p = p * x + c[k]
    return p


def _companion(monic):
    # Frobenius companion of a monic ascending-coefficient polynomial;
    # upper Hessenberg, eigenvalues are the roots.
    n = len(monic) - 1
    C = np.zeros((n, n))
    if n > 1:
        C[np.arange(1, n), np.arange(n - 1)] = 1.0
    C[:, n - 1] = -monic[:n]
    return C


def poly_real_roots(coeffs, residual_filter=True):
    """Real roots of a trimmed polynomial of degree >= 1, ascending order.

    Companion-matrix eigenvalues, near-real filter, one Newton polish step
    per root (kept only when it lowers |p|), optional residual filter, sort,
    and collapse of near-duplicates.
    """
    c = np.asarray(coeffs, dtype=float)
    deg = len(c) - 1
    lam = np.linalg.eigvals(_companion(c / c[deg]))
    re, im = lam.real, lam.imag
    cand = re[np.abs(im) <= REAL_IMAG_TOL * (1.0 + np.abs(re))]
    if cand.size == 0:
        return np.empty(0)
    dc = c[1:] * np.arange(1, deg + 1)
    p0 = polyval(c, cand)
    d0 = polyval(dc, cand)
    with np.errstate(divide="ignore", invalid="ignore"):
        stepped = cand - p0 / d0
    usable = (d0 != 0.0) & np.isfinite(stepped)
    trial = np.where(usable, stepped, cand)
    improved = usable & (np.abs(polyval(c, trial)) < np.abs(p0))
    cand = np.where(improved, trial, cand)
    if residual_filter:
        bound = ROOT_RESIDUAL_TOL * np.max(np.abs(c))
        cand = cand[np.abs(polyval(c, cand)) <= bound]
        if cand.size == 0:
            return np.empty(0)
    cand = np.sort(cand)
    kept = [cand[0]]
    for r in cand[1:]:
        if r - kept[-1] > ROOT_DEDUP_TOL:
            kept.append(r)
    return np.asarray(kept)


def fix_sign(v):
    """Flip sign so the largest-magnitude component is positive."""
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def smallest_singular_vector(A):
    """Unit right-singular vector for the smallest singular value of A."""
    A = np.asarray(A, dtype=float)
    _, _, vt = np.linalg.svd(A, full_matrices=True)
    return fix_sign(vt[-1])


def triangulate_point_linear(Ps, obs):
    """Homogeneous linear solve for one point.

    Ps is (m, 3, 4), obs is (m, 2) pixel coordinates.  Rows u*P3 - P1 and
    v*P3 - P2 are unit-normalized for conditioning; the unit null vector of
    the stacked system is returned (sign-fixed, not dehomogenized).
    """
    Ps = np.asarray(Ps, dtype=float)
    obs = np.asarray(obs, dtype=float)
    rows = np.empty((2 * len(obs), 4))
    rows[0::2] = obs[:, 0:1] * Ps[:, 2, :] - Ps[:, 0, :]
    rows[1::2] = obs[:, 1:2] * Ps[:, 2, :] - Ps[:, 1, :]
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    np.divide(rows, norms, out=rows, where=norms > 0.0)
    return smallest_singular_vector(rows)


def pencil_polynomial(a, b, c, d, f1, f2):
    """Ascending coefficients (degree 6) of the stationarity polynomial

        g(t) = t*((a*t+b)^2 + f2^2*(c*t+d)^2)^2
             - (a*d - b*c)*(1 + f1^2*t^2)^2*(a*t+b)*(c*t+d).
    """
    ab = np.array([b, a])
    cd = np.array([d, c])
    h = np.convolve(ab, ab) + f2 * f2 * np.convolve(cd, cd)
    t_h2 = np.concatenate(([0.0], np.convolve(h, h)))        # degree 5
    quart = np.convolve([1.0, 0.0, f1 * f1], [1.0, 0.0, f1 * f1])
    term2 = (a * d - b * c) * np.convolve(quart, np.convolve(ab, cd))
    g = np.zeros(7)
    g[: t_h2.size] += t_h2
    g -= term2
    return g


def pencil_cost(t, a, b, c, d, f1, f2):
    """Squared correction distance for pencil parameter t (may be inf)."""
    den2 = (a * t + b) ** 2 + f2 * f2 * (c * t + d) ** 2
    term1 = t * t / (1.0 + f1 * f1 * t * t)
    if den2 <= 0.0:
        return np.inf
    return term1 + (c * t + d) ** 2 / den2


def pencil_cost_asymptote(a, b, c, d, f1, f2):
    """Limit of the correction cost as t goes to +/- infinity."""
    if f1 == 0.0:
        return np.inf
    den = a * a + f2 * f2 * c * c
    if den > 0.0:
        second = c * c / den
    else:
        den_const = b * b + f2 * f2 * d * d
        second = d * d / den_const if den_const > 0.0 else np.inf
    return 1.0 / (f1 * f1) + second


def _closest_to_origin(line):
    # Closest point of the line (lx, ly, lz) to the origin, homogeneous.
    lx, ly, lz = line
    return np.array([-lx * lz, -ly * lz, lx * lx + ly * ly])


def hs_correct(F, x1, x2):
    """Optimal two-view correction of a measured pixel pair (Hartley-Sturm).

    Returns (status, x1_corr, x2_corr, t_star, cost) with corrected points
    as (u, v) arrays, the selected pencil parameter (in the internal
    normalized frame, inf for the asymptote) and the summed squared pixel
    correction distance.  Status: 0 ok, 1 epipole at a point, 2 F rank < 2.
    """
    F = np.asarray(F, dtype=float)
    u1, v1 = float(x1[0]), float(x1[1])
    u2, v2 = float(x2[0]), float(x2[1])

    # Conditioning: bring pixel magnitudes to <= 1, F to unit max entry.
    s = max(1.0, abs(u1), abs(v1), abs(u2), abs(v2))
    D = np.diag([s, s, 1.0])
    Fw = D @ F @ D
    fmax = np.max(np.abs(Fw))
    if fmax == 0.0:
        return HS_RANK_DEFICIENT, None, None, 0.0, 0.0
    Fw = Fw / fmax

    # Translate each measured point to its image origin.
    T1inv = np.array([[1.0, 0.0, u1 / s], [0.0, 1.0, v1 / s], [0.0, 0.0, 1.0]])
    T2inv = np.array([[1.0, 0.0, u2 / s], [0.0, 1.0, v2 / s], [0.0, 0.0, 1.0]])
    Ft = T2inv.T @ Fw @ T1inv

    # One SVD gives both epipoles and the rank check.
    U, sv, Vt = np.linalg.svd(Ft)
    if sv[1] <= 1e-12 * sv[0]:
        return HS_RANK_DEFICIENT, None, None, 0.0, 0.0
    e1 = Vt[2]
    e2 = U[:, 2]
    n1 = np.hypot(e1[0], e1[1])
    n2 = np.hypot(e2[0], e2[1])
    if n1 < 1e-12 * abs(e1[2]) or n2 < 1e-12 * abs(e2[2]):
        return HS_EPIPOLE_AT_POINT, None, None, 0.0, 0.0
    e1 = e1 / n1
    e2 = e2 / n2

    # Rotate each epipole onto the positive x axis: e -> (1, 0, f).
    R1 = np.array([[e1[0], e1[1], 0.0], [-e1[1], e1[0], 0.0], [0.0, 0.0, 1.0]])
    R2 = np.array([[e2[0], e2[1], 0.0], [-e2[1], e2[0], 0.0], [0.0, 0.0, 1.0]])
    Fr = R2 @ Ft @ R1.T
    f1, f2 = e1[2], e2[2]
    a, b = Fr[1, 1], Fr[1, 2]
    c, d = Fr[2, 1], Fr[2, 2]

    g = pencil_polynomial(a, b, c, d, f1, f2)
    gmax = np.max(np.abs(g))
    deg = 6
    if gmax > 0.0:
        while deg > 0 and abs(g[deg]) < TRIM_TOL * gmax:
            deg -= 1
    if gmax == 0.0:
        candidates = np.array([0.0])
    elif deg == 0:
        candidates = np.empty(0)
    else:
        candidates = poly_real_roots(g[: deg + 1], residual_filter=False)

    best_t = 0.0
    best_cost = np.inf
    have = False
    for t in candidates:
        cost = pencil_cost(t, a, b, c, d, f1, f2)
        if not np.isfinite(cost):
            continue
        if (not have) or cost < best_cost or (cost == best_cost and abs(t) < abs(best_t)):
            best_t, best_cost, have = t, cost, True
    asym = pencil_cost_asymptote(a, b, c, d, f1, f2)
    use_asymptote = (not have) or asym < best_cost
    if use_asymptote and not np.isfinite(asym):
        # No finite candidate at all; fall back to the untranslated point.
        best_t, best_cost, use_asymptote = 0.0, pencil_cost(0.0, a, b, c, d, f1, f2), False

    if use_asymptote:
        l1 = np.array([f1, 0.0, -1.0])
        if a == 0.0 and c == 0.0:
            l2 = np.array([-f2 * d, b, d])
        else:
            l2 = np.array([-f2 * c, a, c])
        t_star, cost = np.inf, asym
    else:
        t = best_t
        l1 = np.array([t * f1, 1.0, -t])
        l2 = np.array([-f2 * (c * t + d), a * t + b, c * t + d])
        t_star, cost = t, best_cost

    # Undo the rotations and translations, then the pixel scaling.
    h1 = T1inv @ (R1.T @ _closest_to_origin(l1))
    h2 = T2inv @ (R2.T @ _closest_to_origin(l2))
    x1c = s * h1[:2] / h1[2]
    x2c = s * h2[:2] / h2[2]
    return HS_OK, x1c, x2c, float(t_star), float(cost * s * s)


def _forward_jacobian(residual, x, r0):
    # Forward differences with per-parameter step 1e-7*(1+|x_i|).
    # Returns None when any probe produces a non-finite residual.
    J = np.empty((r0.size, x.size))
    for i in range(x.size):
        h = 1e-7 * (1.0 + abs(float(x[i])))
        xp = x.copy()
        xp[i] += h
        ri = np.asarray(residual(xp), dtype=float)
        if not np.all(np.isfinite(ri)):
            return None
        J[:, i] = (ri - r0) / h
    return J


def lm_core(residual, x0, max_iterations, gradient_tolerance, step_tolerance,
            initial_damping):
    """Levenberg-Marquardt loop shared by the generic and point solvers.

    Accepts only strict cost decreases; damping x10 on rejection, /10 on
    acceptance.  The gradient test runs before stepping, so a zero-residual
    start terminates immediately.  Returns the best parameters seen as
    (x, cost, iterations, termination_code).  A non-finite residual at x0
    raises NonFiniteResidual; later non-finite evaluations abort the loop
    and the best-so-far is returned with the max-iterations code.
    """
    x = np.array(x0, dtype=float)
    r = np.asarray(residual(x), dtype=float)
    if not np.all(np.isfinite(r)):
        raise NonFiniteResidual("residual is not finite at the starting point")
    cost = float(r @ r)
    best_x, best_cost = x.copy(), cost
    n = x.size
    lam = float(initial_damping)
    termination = LM_MAX_ITERATIONS
    iterations = 0
    for it in range(1, max_iterations + 1):
        iterations = it
        J = _forward_jacobian(residual, x, r)
        if J is None:
            break
        g = J.T @ r
        if np.max(np.abs(g)) <= gradient_tolerance:
            termination = LM_GRADIENT_SMALL
            break
        A = J.T @ J
        accepted = False
        aborted = False
        while lam <= DAMPING_CAP:
            try:
                delta = np.linalg.solve(A + lam * np.eye(n), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            if not np.all(np.isfinite(delta)):
                lam *= 10.0
                continue
            x_new = x + delta
            r_new = np.asarray(residual(x_new), dtype=float)
            if not np.all(np.isfinite(r_new)):
                aborted = True
                break
            cost_new = float(r_new @ r_new)
            if cost_new < cost:
                accepted = True
                x, r, cost = x_new, r_new, cost_new
                if cost < best_cost:
                    best_x, best_cost = x.copy(), cost
                lam *= 0.1
                if float(np.linalg.norm(delta)) <= step_tolerance * (float(np.linalg.norm(x)) + step_tolerance):
                    termination = LM_STEP_SMALL
                break
            lam *= 10.0
        if aborted:
            break
        if termination == LM_STEP_SMALL:
            break
        if not accepted:
            # Damping exhausted without a decrease: cannot move.
            termination = LM_STEP_SMALL
            break
    return best_x, best_cost, iterations, termination


def refine_point_lm(Ps, obs, x0, max_iterations, gradient_tolerance,
                    step_tolerance, initial_damping):
    """LM refinement of a 3D point against pixel observations.

    Ps is (m, 3, 4), obs (m, 2).  Residual is the stacked (obs - projected)
    pixel components; identical loop semantics to lm_core.
    """
    Ps = np.asarray(Ps, dtype=float)
    obs = np.asarray(obs, dtype=float)

    def residual(x):
        Xh = np.append(x, 1.0)
        proj = Ps @ Xh
        w = proj[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            px = proj[:, :2] / w[:, None]
        return (obs - px).ravel()

    return lm_core(residual, np.asarray(x0, dtype=float), max_iterations,
                   gradient_tolerance, step_tolerance, initial_damping)
