# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-point solver kernels.

Drop-in replacement for ``mvtri._pykernels``: identical algorithms, status
codes, and numerical policy, with the linear algebra hand-rolled so the
hot loops never leave C.  Inputs above the small fixed problem sizes fall
back to the NumPy implementations.

Eigenvalues for the polynomial root step use classic balancing plus the
double-shift Hessenberg QR iteration (the EISPACK balanc/hqr pair);
singular vectors come from one-sided Jacobi rotations.
"""
import numpy as np

from libc.math cimport fabs, sqrt, hypot, isfinite, INFINITY

from . import _pykernels as _py
from .errors import NonFiniteResidual

BACKEND_NAME = "compiled"

# Numerical policy shared with the python backend.
REAL_IMAG_TOL = _py.REAL_IMAG_TOL
ROOT_DEDUP_TOL = _py.ROOT_DEDUP_TOL
ROOT_RESIDUAL_TOL = _py.ROOT_RESIDUAL_TOL
TRIM_TOL = _py.TRIM_TOL
DAMPING_CAP = _py.DAMPING_CAP

LM_GRADIENT_SMALL = 0
LM_STEP_SMALL = 1
LM_MAX_ITERATIONS = 2

HS_OK = 0
HS_EPIPOLE_AT_POINT = 1
HS_RANK_DEFICIENT = 2

cdef double C_REAL_IMAG_TOL = 1e-8
cdef double C_ROOT_DEDUP_TOL = 1e-9
cdef double C_ROOT_RESIDUAL_TOL = 1e-8
cdef double C_TRIM_TOL = 1e-13
cdef double C_DAMPING_CAP = 1e12

cdef enum:
    MAXDEG = 8        # polynomial degree handled in-line
    NMAX = 10         # 1-based padded matrix dimension for the QR pair
    MAXVIEWS = 16     # observations handled on stack buffers
    ROWBUF = 128      # 2 * MAXVIEWS rows of 4
    RESBUF = 32       # 2 * MAXVIEWS residuals
    JACBUF = 96       # RESBUF x 3 Jacobian
    PRJBUF = 192      # MAXVIEWS projection matrices, 12 doubles each
    OBSBUF = 32       # MAXVIEWS pixel pairs


# ---------------------------------------------------------------------------
# polynomial evaluation and companion-matrix eigenvalues

cdef double c_polyval(const double* c, int n, double x) noexcept:
    # Horner evaluation; c holds n ascending coefficients.
    cdef double p = c[n - 1]
    cdef int k
    for k in range(n - 2, -1, -1):
        p = p * x + c[k]
    return p


cdef double c_sign(double a, double b) noexcept:
    return fabs(a) if b >= 0.0 else -fabs(a)


cdef void c_balance(double a[NMAX][NMAX], int n) noexcept:
    # Iterative 2-adic row/column balancing (similarity transform).
    cdef double radix = 2.0
    cdef double sqrdx = radix * radix
    cdef int last = 0
    cdef int i, j
    cdef double s, r, g, f, c
    while last == 0:
        last = 1
        for i in range(1, n + 1):
            r = 0.0
            c = 0.0
            for j in range(1, n + 1):
                if j != i:
                    c += fabs(a[j][i])
                    r += fabs(a[i][j])
            if c != 0.0 and r != 0.0:
                g = r / radix
                f = 1.0
                s = c + r
                while c < g:
                    f *= radix
                    c *= sqrdx
                g = r * radix
                while c > g:
                    f /= radix
                    c /= sqrdx
                if (c + r) / f < 0.95 * s:
                    last = 0
                    g = 1.0 / f
                    for j in range(1, n + 1):
                        a[i][j] *= g
                    for j in range(1, n + 1):
                        a[j][i] *= f


cdef int c_hqr(double a[NMAX][NMAX], int n, double* wr, double* wi) noexcept:
    # Double-shift QR on a real upper Hessenberg matrix (1-based storage).
    # Fills wr/wi[1..n]; returns 0, or -1 when an eigenvalue fails to
    # converge within the iteration budget.
    cdef int nn, m, l, k, j, its, i, mmin
    cdef double z, y, x, w, v, u, t, s, r, q, p, anorm

    anorm = 0.0
    for i in range(1, n + 1):
        j = i - 1 if i - 1 > 1 else 1
        while j <= n:
            anorm += fabs(a[i][j])
            j += 1
    nn = n
    t = 0.0
    p = 0.0
    q = 0.0
    r = 0.0
    while nn >= 1:
        its = 0
        while True:
            l = nn
            while l >= 2:
                s = fabs(a[l - 1][l - 1]) + fabs(a[l][l])
                if s == 0.0:
                    s = anorm
                if fabs(a[l][l - 1]) + s == s:
                    a[l][l - 1] = 0.0
                    break
                l -= 1
            x = a[nn][nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
            else:
                y = a[nn - 1][nn - 1]
                w = a[nn][nn - 1] * a[nn - 1][nn]
                if l == nn - 1:
                    p = 0.5 * (y - x)
                    q = p * p + w
                    z = sqrt(fabs(q))
                    x += t
                    if q >= 0.0:
                        z = p + c_sign(z, p)
                        wr[nn - 1] = x + z
                        wr[nn] = x + z
                        if z != 0.0:
                            wr[nn] = x - w / z
                        wi[nn - 1] = 0.0
                        wi[nn] = 0.0
                    else:
                        wr[nn - 1] = x + p
                        wr[nn] = x + p
                        wi[nn] = z
                        wi[nn - 1] = -z
                    nn -= 2
                else:
                    if its == 30:
                        return -1
                    if its == 10 or its == 20:
                        t += x
                        for i in range(1, nn + 1):
                            a[i][i] -= x
                        s = fabs(a[nn][nn - 1]) + fabs(a[nn - 1][nn - 2])
                        x = 0.75 * s
                        y = x
                        w = -0.4375 * s * s
                    its += 1
                    m = nn - 2
                    while m >= l:
                        z = a[m][m]
                        r = x - z
                        s = y - z
                        p = (r * s - w) / a[m + 1][m] + a[m][m + 1]
                        q = a[m + 1][m + 1] - z - r - s
                        r = a[m + 2][m + 1]
                        s = fabs(p) + fabs(q) + fabs(r)
                        p /= s
                        q /= s
                        r /= s
                        if m == l:
                            break
                        u = fabs(a[m][m - 1]) * (fabs(q) + fabs(r))
                        v = fabs(p) * (fabs(a[m - 1][m - 1]) + fabs(z)
                                       + fabs(a[m + 1][m + 1]))
                        if u + v == v:
                            break
                        m -= 1
                    for i in range(m + 2, nn + 1):
                        a[i][i - 2] = 0.0
                        if i != m + 2:
                            a[i][i - 3] = 0.0
                    for k in range(m, nn):
                        if k != m:
                            p = a[k][k - 1]
                            q = a[k + 1][k - 1]
                            r = 0.0
                            if k != nn - 1:
                                r = a[k + 2][k - 1]
                            x = fabs(p) + fabs(q) + fabs(r)
                            if x != 0.0:
                                p /= x
                                q /= x
                                r /= x
                        s = c_sign(sqrt(p * p + q * q + r * r), p)
                        if s != 0.0:
                            if k == m:
                                if l != m:
                                    a[k][k - 1] = -a[k][k - 1]
                            else:
                                a[k][k - 1] = -s * x
                            p += s
                            x = p / s
                            y = q / s
                            z = r / s
                            q /= p
                            r /= p
                            for j in range(k, nn + 1):
                                p = a[k][j] + q * a[k + 1][j]
                                if k != nn - 1:
                                    p += r * a[k + 2][j]
                                    a[k + 2][j] -= p * z
                                a[k + 1][j] -= p * y
                                a[k][j] -= p * x
                            mmin = nn if nn < k + 3 else k + 3
                            for i in range(l, mmin + 1):
                                p = x * a[i][k] + y * a[i][k + 1]
                                if k != nn - 1:
                                    p += z * a[i][k + 2]
                                    a[i][k + 2] -= p * r
                                a[i][k + 1] -= p * q
                                a[i][k] -= p
            if not (l < nn - 1):
                break
    return 0


cdef int c_poly_real_roots(const double* c, int ncoef, bint residual_filter,
                           double* out) noexcept:
    # Real roots of an ascending-coefficient polynomial, sorted ascending,
    # near-duplicates collapsed.  Mirrors the python kernel: companion
    # eigenvalues, near-real filter, one guarded Newton polish step each,
    # optional residual filter.  Returns the root count, or -1 when the
    # QR iteration did not converge (caller falls back).
    cdef int deg = ncoef - 1
    cdef double a[NMAX][NMAX]
    cdef double wr[NMAX]
    cdef double wi[NMAX]
    cdef double cand[MAXDEG]
    cdef double dc[MAXDEG]
    cdef int ncand = 0
    cdef int i, j, kept
    cdef double lead, re, im, p0, d0, step, bound, cmax, key

    if deg < 1:
        return 0
    lead = c[deg]
    for i in range(1, deg + 1):
        for j in range(1, deg + 1):
            a[i][j] = 0.0
    for i in range(2, deg + 1):
        a[i][i - 1] = 1.0
    for i in range(1, deg + 1):
        a[i][deg] = -c[i - 1] / lead
    c_balance(a, deg)
    if c_hqr(a, deg, wr, wi) != 0:
        return -1

    for i in range(1, deg + 1):
        re = wr[i]
        im = wi[i]
        if fabs(im) <= C_REAL_IMAG_TOL * (1.0 + fabs(re)):
            cand[ncand] = re
            ncand += 1
    if ncand == 0:
        return 0

    # One Newton step per candidate, kept only when it reduces |p|.
    for i in range(deg):
        dc[i] = c[i + 1] * (i + 1)
    for i in range(ncand):
        p0 = c_polyval(c, ncoef, cand[i])
        d0 = c_polyval(dc, deg, cand[i])
        if d0 != 0.0:
            step = cand[i] - p0 / d0
            if isfinite(step) and fabs(c_polyval(c, ncoef, step)) < fabs(p0):
                cand[i] = step

    if residual_filter:
        cmax = 0.0
        for i in range(ncoef):
            if fabs(c[i]) > cmax:
                cmax = fabs(c[i])
        bound = C_ROOT_RESIDUAL_TOL * cmax
        j = 0
        for i in range(ncand):
            if fabs(c_polyval(c, ncoef, cand[i])) <= bound:
                cand[j] = cand[i]
                j += 1
        ncand = j
        if ncand == 0:
            return 0

    # Insertion sort, then collapse near-duplicates.
    for i in range(1, ncand):
        key = cand[i]
        j = i - 1
        while j >= 0 and cand[j] > key:
            cand[j + 1] = cand[j]
            j -= 1
        cand[j + 1] = key
    out[0] = cand[0]
    kept = 1
    for i in range(1, ncand):
        if cand[i] - out[kept - 1] > C_ROOT_DEDUP_TOL:
            out[kept] = cand[i]
            kept += 1
    return kept


def poly_real_roots(coeffs, bint residual_filter=True):
    """Real roots of an ascending-coefficient polynomial, sorted ascending."""
    arr = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef double[::1] c = arr
    cdef int ncoef = c.shape[0]
    cdef double out[MAXDEG]
    cdef int count, i
    if ncoef - 1 > MAXDEG:
        return _py.poly_real_roots(arr, residual_filter)
    if ncoef < 2:
        return np.empty(0)
    count = c_poly_real_roots(&c[0], ncoef, residual_filter, out)
    if count < 0:
        return _py.poly_real_roots(arr, residual_filter)
    result = np.empty(count)
    cdef double[::1] rv = result
    for i in range(count):
        rv[i] = out[i]
    return result


# ---------------------------------------------------------------------------
# one-sided Jacobi orthogonalization (columns), shared by the SVD users

cdef void c_jacobi_columns(double* A, int m, int n, double* V) noexcept:
    # Rotates column pairs of the m x n row-major matrix A until they are
    # mutually orthogonal, accumulating the rotations into the n x n
    # matrix V (pre-initialized to identity).  A becomes U * diag(sigma).
    cdef int sweep, p, q, i, rotated
    cdef double alpha, beta, gamma, zeta, t, cs, sn, aip, aiq
    for sweep in range(60):
        rotated = 0
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for i in range(m):
                    aip = A[i * n + p]
                    aiq = A[i * n + q]
                    alpha += aip * aip
                    beta += aiq * aiq
                    gamma += aip * aiq
                if gamma * gamma <= 1e-28 * alpha * beta:
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                if zeta >= 0.0:
                    t = 1.0 / (zeta + sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + sqrt(1.0 + zeta * zeta))
                cs = 1.0 / sqrt(1.0 + t * t)
                sn = cs * t
                for i in range(m):
                    aip = A[i * n + p]
                    aiq = A[i * n + q]
                    A[i * n + p] = cs * aip - sn * aiq
                    A[i * n + q] = sn * aip + cs * aiq
                for i in range(n):
                    aip = V[i * n + p]
                    aiq = V[i * n + q]
                    V[i * n + p] = cs * aip - sn * aiq
                    V[i * n + q] = sn * aip + cs * aiq
                rotated = 1
        if rotated == 0:
            break


# ---------------------------------------------------------------------------
# linear triangulation

def triangulate_point_linear(Ps, obs):
    """Homogeneous linear solve for one point (same contract as the
    python kernel: unit-normalized rows, sign-fixed unit null vector)."""
    P_arr = np.ascontiguousarray(Ps, dtype=np.float64)
    o_arr = np.ascontiguousarray(obs, dtype=np.float64)
    cdef double[:, :, ::1] P = P_arr
    cdef double[:, ::1] o = o_arr
    cdef int m = o.shape[0]
    if m > MAXVIEWS:
        return _py.triangulate_point_linear(P_arr, o_arr)
    cdef double rows[ROWBUF]
    cdef double V[16]
    cdef int i, j, imax, jmin
    cdef double nrm, best, comp, sig

    for i in range(m):
        for j in range(4):
            rows[(2 * i) * 4 + j] = o[i, 0] * P[i, 2, j] - P[i, 0, j]
            rows[(2 * i + 1) * 4 + j] = o[i, 1] * P[i, 2, j] - P[i, 1, j]
    for i in range(2 * m):
        nrm = 0.0
        for j in range(4):
            nrm += rows[i * 4 + j] * rows[i * 4 + j]
        nrm = sqrt(nrm)
        if nrm > 0.0:
            for j in range(4):
                rows[i * 4 + j] /= nrm
    for i in range(4):
        for j in range(4):
            V[i * 4 + j] = 1.0 if i == j else 0.0
    c_jacobi_columns(rows, 2 * m, 4, V)

    jmin = 0
    best = INFINITY
    for j in range(4):
        sig = 0.0
        for i in range(2 * m):
            sig += rows[i * 4 + j] * rows[i * 4 + j]
        if sig < best:
            best = sig
            jmin = j

    result = np.empty(4)
    cdef double[::1] X = result
    nrm = 0.0
    for i in range(4):
        X[i] = V[i * 4 + jmin]
        nrm += X[i] * X[i]
    nrm = sqrt(nrm)
    imax = 0
    comp = 0.0
    for i in range(4):
        X[i] /= nrm
        if fabs(X[i]) > comp:
            comp = fabs(X[i])
            imax = i
    if X[imax] < 0.0:
        for i in range(4):
            X[i] = -X[i]
    return result


# ---------------------------------------------------------------------------
# optimal two-view correction

cdef void c_mat3_mul(const double* A, const double* B, double* C) noexcept:
    cdef int i, j, k
    cdef double acc
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for k in range(3):
                acc += A[i * 3 + k] * B[k * 3 + j]
            C[i * 3 + j] = acc


cdef void c_conv(const double* x, int nx, const double* y, int ny,
                 double* out) noexcept:
    cdef int i, j
    for i in range(nx + ny - 1):
        out[i] = 0.0
    for i in range(nx):
        for j in range(ny):
            out[i + j] += x[i] * y[j]


cdef double c_pencil_cost(double t, double a, double b, double c, double d,
                          double f1, double f2) noexcept:
    cdef double den2 = (a * t + b) ** 2 + f2 * f2 * (c * t + d) ** 2
    cdef double term1 = t * t / (1.0 + f1 * f1 * t * t)
    if den2 <= 0.0:
        return INFINITY
    return term1 + (c * t + d) ** 2 / den2


cdef double c_pencil_asymptote(double a, double b, double c, double d,
                               double f1, double f2) noexcept:
    cdef double den, den_const, second
    if f1 == 0.0:
        return INFINITY
    den = a * a + f2 * f2 * c * c
    if den > 0.0:
        second = c * c / den
    else:
        den_const = b * b + f2 * f2 * d * d
        second = d * d / den_const if den_const > 0.0 else INFINITY
    return 1.0 / (f1 * f1) + second


def hs_correct(F, x1, x2):
    """Optimal two-view correction of a measured pixel pair.

    Same contract as the python kernel: (status, x1_corr, x2_corr, t_star,
    cost), with status 0 ok / 1 epipole at a point / 2 rank-deficient F.
    """
    F_arr = np.ascontiguousarray(F, dtype=np.float64)
    cdef double[:, ::1] Fm = F_arr
    cdef double u1 = float(x1[0])
    cdef double v1 = float(x1[1])
    cdef double u2 = float(x2[0])
    cdef double v2 = float(x2[1])

    cdef double s = 1.0
    if fabs(u1) > s: s = fabs(u1)
    if fabs(v1) > s: s = fabs(v1)
    if fabs(u2) > s: s = fabs(u2)
    if fabs(v2) > s: s = fabs(v2)

    # Fw = D F D / max|entry| with D = diag(s, s, 1).
    cdef double Fw[9]
    cdef double dscale[3]
    cdef int i, j
    dscale[0] = s
    dscale[1] = s
    dscale[2] = 1.0
    cdef double fmax = 0.0
    for i in range(3):
        for j in range(3):
            Fw[i * 3 + j] = dscale[i] * Fm[i, j] * dscale[j]
            if fabs(Fw[i * 3 + j]) > fmax:
                fmax = fabs(Fw[i * 3 + j])
    if fmax == 0.0:
        return HS_RANK_DEFICIENT, None, None, 0.0, 0.0
    for i in range(9):
        Fw[i] /= fmax

    # Ft = T2inv^T Fw T1inv, translations to the measured points.
    cdef double tx1 = u1 / s
    cdef double ty1 = v1 / s
    cdef double tx2 = u2 / s
    cdef double ty2 = v2 / s
    cdef double T2t[9]
    cdef double T1[9]
    cdef double tmp[9]
    cdef double Ft[9]
    T2t[0] = 1.0; T2t[1] = 0.0; T2t[2] = 0.0
    T2t[3] = 0.0; T2t[4] = 1.0; T2t[5] = 0.0
    T2t[6] = tx2; T2t[7] = ty2; T2t[8] = 1.0
    T1[0] = 1.0; T1[1] = 0.0; T1[2] = tx1
    T1[3] = 0.0; T1[4] = 1.0; T1[5] = ty1
    T1[6] = 0.0; T1[7] = 0.0; T1[8] = 1.0
    c_mat3_mul(T2t, Fw, tmp)
    c_mat3_mul(tmp, T1, Ft)

    # SVD via one-sided Jacobi; columns of the rotated copy are sigma*u.
    cdef double A[9]
    cdef double V[9]
    cdef double sv[3]
    cdef int perm[3]
    for i in range(9):
        A[i] = Ft[i]
        V[i] = 0.0
    V[0] = 1.0
    V[4] = 1.0
    V[8] = 1.0
    c_jacobi_columns(A, 3, 3, V)
    for j in range(3):
        sv[j] = sqrt(A[0 + j] * A[0 + j] + A[3 + j] * A[3 + j]
                     + A[6 + j] * A[6 + j])
        perm[j] = j
    # Sort singular values descending (3 elements).
    cdef int t_i
    for i in range(2):
        for j in range(i + 1, 3):
            if sv[perm[j]] > sv[perm[i]]:
                t_i = perm[i]
                perm[i] = perm[j]
                perm[j] = t_i
    if sv[perm[1]] <= 1e-12 * sv[perm[0]]:
        return HS_RANK_DEFICIENT, None, None, 0.0, 0.0

    # Right singular vector of the smallest value, and the left one via
    # the cross product of the two dominant (U is orthonormal, and the
    # whole construction is invariant to the sign of either epipole).
    cdef double e1[3]
    cdef double e2[3]
    cdef double ua[3]
    cdef double ub[3]
    cdef double nrm
    for i in range(3):
        e1[i] = V[i * 3 + perm[2]]
        ua[i] = A[i * 3 + perm[0]] / sv[perm[0]]
        ub[i] = A[i * 3 + perm[1]] / sv[perm[1]]
    e2[0] = ua[1] * ub[2] - ua[2] * ub[1]
    e2[1] = ua[2] * ub[0] - ua[0] * ub[2]
    e2[2] = ua[0] * ub[1] - ua[1] * ub[0]
    nrm = sqrt(e2[0] * e2[0] + e2[1] * e2[1] + e2[2] * e2[2])
    for i in range(3):
        e2[i] /= nrm

    cdef double n1 = hypot(e1[0], e1[1])
    cdef double n2 = hypot(e2[0], e2[1])
    if n1 < 1e-12 * fabs(e1[2]) or n2 < 1e-12 * fabs(e2[2]):
        return HS_EPIPOLE_AT_POINT, None, None, 0.0, 0.0
    for i in range(3):
        e1[i] /= n1
        e2[i] /= n2

    # Rotate each epipole onto the positive x axis; Fr = R2 Ft R1^T.
    cdef double R1[9]
    cdef double R2[9]
    cdef double R1t[9]
    cdef double Fr[9]
    R1[0] = e1[0]; R1[1] = e1[1]; R1[2] = 0.0
    R1[3] = -e1[1]; R1[4] = e1[0]; R1[5] = 0.0
    R1[6] = 0.0; R1[7] = 0.0; R1[8] = 1.0
    R2[0] = e2[0]; R2[1] = e2[1]; R2[2] = 0.0
    R2[3] = -e2[1]; R2[4] = e2[0]; R2[5] = 0.0
    R2[6] = 0.0; R2[7] = 0.0; R2[8] = 1.0
    for i in range(3):
        for j in range(3):
            R1t[i * 3 + j] = R1[j * 3 + i]
    c_mat3_mul(R2, Ft, tmp)
    c_mat3_mul(tmp, R1t, Fr)

    cdef double f1 = e1[2]
    cdef double f2 = e2[2]
    cdef double pa = Fr[4]
    cdef double pb = Fr[5]
    cdef double pc = Fr[7]
    cdef double pd = Fr[8]

    # Degree-6 stationarity polynomial, built by convolution like the
    # python kernel: g = shift(h*h) - (ad-bc)*(1+f1^2 t^2)^2*(at+b)(ct+d).
    cdef double ab[2]
    cdef double cd[2]
    cdef double habab[3]
    cdef double hcdcd[3]
    cdef double h[3]
    cdef double h2[5]
    cdef double quart[5]
    cdef double abcd[3]
    cdef double qa[7]
    cdef double g[7]
    ab[0] = pb; ab[1] = pa
    cd[0] = pd; cd[1] = pc
    c_conv(ab, 2, ab, 2, habab)
    c_conv(cd, 2, cd, 2, hcdcd)
    for i in range(3):
        h[i] = habab[i] + f2 * f2 * hcdcd[i]
    c_conv(h, 3, h, 3, h2)
    quart[0] = 1.0; quart[1] = 0.0; quart[2] = 2.0 * f1 * f1
    quart[3] = 0.0; quart[4] = f1 * f1 * f1 * f1
    c_conv(ab, 2, cd, 2, abcd)
    c_conv(quart, 5, abcd, 3, qa)
    g[0] = 0.0
    for i in range(5):
        g[i + 1] = h2[i]
    g[6] = 0.0
    cdef double det = pa * pd - pb * pc
    for i in range(7):
        g[i] -= det * qa[i]

    cdef double gmax = 0.0
    for i in range(7):
        if fabs(g[i]) > gmax:
            gmax = fabs(g[i])
    cdef int deg = 6
    if gmax > 0.0:
        while deg > 0 and fabs(g[deg]) < C_TRIM_TOL * gmax:
            deg -= 1

    cdef double roots[MAXDEG]
    cdef int nroots = 0
    if gmax == 0.0:
        roots[0] = 0.0
        nroots = 1
    elif deg == 0:
        nroots = 0
    else:
        nroots = c_poly_real_roots(g, deg + 1, False, roots)
        if nroots < 0:
            # QR did not converge; defer the whole call.
            return _py.hs_correct(F_arr, np.asarray([u1, v1]),
                                  np.asarray([u2, v2]))

    cdef double best_t = 0.0
    cdef double best_cost = INFINITY
    cdef bint have = False
    cdef double tcand, cost
    for i in range(nroots):
        tcand = roots[i]
        cost = c_pencil_cost(tcand, pa, pb, pc, pd, f1, f2)
        if not isfinite(cost):
            continue
        if (not have) or cost < best_cost or (cost == best_cost
                                              and fabs(tcand) < fabs(best_t)):
            best_t = tcand
            best_cost = cost
            have = True
    cdef double asym = c_pencil_asymptote(pa, pb, pc, pd, f1, f2)
    cdef bint use_asymptote = (not have) or asym < best_cost
    if use_asymptote and not isfinite(asym):
        # No finite candidate at all; fall back to the untranslated point.
        best_t = 0.0
        best_cost = c_pencil_cost(0.0, pa, pb, pc, pd, f1, f2)
        use_asymptote = False

    cdef double l1[3]
    cdef double l2[3]
    cdef double t_star
    if use_asymptote:
        l1[0] = f1; l1[1] = 0.0; l1[2] = -1.0
        if pa == 0.0 and pc == 0.0:
            l2[0] = -f2 * pd; l2[1] = pb; l2[2] = pd
        else:
            l2[0] = -f2 * pc; l2[1] = pa; l2[2] = pc
        t_star = INFINITY
        cost = asym
    else:
        t_star = best_t
        cost = best_cost
        l1[0] = best_t * f1; l1[1] = 1.0; l1[2] = -best_t
        l2[0] = -f2 * (pc * best_t + pd)
        l2[1] = pa * best_t + pb
        l2[2] = pc * best_t + pd

    # Closest points to the origins, rotated and translated back.
    cdef double w1[3]
    cdef double w2[3]
    cdef double h1[3]
    cdef double h2v[3]
    w1[0] = -l1[0] * l1[2]
    w1[1] = -l1[1] * l1[2]
    w1[2] = l1[0] * l1[0] + l1[1] * l1[1]
    w2[0] = -l2[0] * l2[2]
    w2[1] = -l2[1] * l2[2]
    w2[2] = l2[0] * l2[0] + l2[1] * l2[1]
    for i in range(3):
        h1[i] = (R1t[i * 3] * w1[0] + R1t[i * 3 + 1] * w1[1]
                 + R1t[i * 3 + 2] * w1[2])
        h2v[i] = R2[0 + i] * w2[0] + R2[3 + i] * w2[1] + R2[6 + i] * w2[2]
    h1[0] += tx1 * h1[2]
    h1[1] += ty1 * h1[2]
    h2v[0] += tx2 * h2v[2]
    h2v[1] += ty2 * h2v[2]

    x1c = np.array([s * h1[0] / h1[2], s * h1[1] / h1[2]])
    x2c = np.array([s * h2v[0] / h2v[2], s * h2v[1] / h2v[2]])
    return HS_OK, x1c, x2c, float(t_star), float(cost * s * s)


# ---------------------------------------------------------------------------
# Levenberg-Marquardt point refinement

cdef bint c_residual(const double* P, const double* obs, int m,
                     const double* x, double* r) noexcept:
    # Stacked (obs - projection) pixel residuals; False when non-finite.
    cdef int i
    cdef double w, u, v
    cdef bint ok = True
    for i in range(m):
        w = (P[i * 12 + 8] * x[0] + P[i * 12 + 9] * x[1]
             + P[i * 12 + 10] * x[2] + P[i * 12 + 11])
        u = (P[i * 12 + 0] * x[0] + P[i * 12 + 1] * x[1]
             + P[i * 12 + 2] * x[2] + P[i * 12 + 3]) / w
        v = (P[i * 12 + 4] * x[0] + P[i * 12 + 5] * x[1]
             + P[i * 12 + 6] * x[2] + P[i * 12 + 7]) / w
        r[2 * i] = obs[i * 2] - u
        r[2 * i + 1] = obs[i * 2 + 1] - v
        if not (isfinite(r[2 * i]) and isfinite(r[2 * i + 1])):
            ok = False
    return ok


cdef bint c_solve3(const double* M, const double* rhs, double* delta) noexcept:
    # 3x3 linear solve by Gaussian elimination with partial pivoting;
    # False on an exactly singular pivot.
    cdef double A[9]
    cdef double b[3]
    cdef int i, j, k, piv
    cdef double big, tmp, f
    for i in range(9):
        A[i] = M[i]
    for i in range(3):
        b[i] = rhs[i]
    for k in range(3):
        piv = k
        big = fabs(A[k * 3 + k])
        for i in range(k + 1, 3):
            if fabs(A[i * 3 + k]) > big:
                big = fabs(A[i * 3 + k])
                piv = i
        if big == 0.0:
            return False
        if piv != k:
            for j in range(3):
                tmp = A[k * 3 + j]
                A[k * 3 + j] = A[piv * 3 + j]
                A[piv * 3 + j] = tmp
            tmp = b[k]
            b[k] = b[piv]
            b[piv] = tmp
        for i in range(k + 1, 3):
            f = A[i * 3 + k] / A[k * 3 + k]
            for j in range(k, 3):
                A[i * 3 + j] -= f * A[k * 3 + j]
            b[i] -= f * b[k]
    for k in range(2, -1, -1):
        tmp = b[k]
        for j in range(k + 1, 3):
            tmp -= A[k * 3 + j] * delta[j]
        delta[k] = tmp / A[k * 3 + k]
    return True


def refine_point_lm(Ps, obs, x0, int max_iterations, double gradient_tolerance,
                    double step_tolerance, double initial_damping):
    """LM refinement of a 3D point against pixel observations.

    Same semantics as the python kernel: strict decreases only, damping
    x10 on rejection and /10 on acceptance, gradient test before stepping,
    best-so-far returned on abort.
    """
    P_arr = np.ascontiguousarray(Ps, dtype=np.float64)
    o_arr = np.ascontiguousarray(obs, dtype=np.float64)
    x_arr = np.ascontiguousarray(x0, dtype=np.float64)
    cdef double[:, :, ::1] Pm = P_arr
    cdef double[:, ::1] om = o_arr
    cdef double[::1] xm = x_arr
    cdef int m = om.shape[0]
    if m > MAXVIEWS:
        return _py.refine_point_lm(P_arr, o_arr, x_arr, max_iterations,
                                   gradient_tolerance, step_tolerance,
                                   initial_damping)

    cdef double Pbuf[PRJBUF]
    cdef double obuf[OBSBUF]
    cdef double x[3]
    cdef double best_x[3]
    cdef double r[RESBUF]
    cdef double rp[RESBUF]
    cdef double rn[RESBUF]
    cdef double J[JACBUF]
    cdef double g[3]
    cdef double A[9]
    cdef double M[9]
    cdef double delta[3]
    cdef double negg[3]
    cdef double xp[3]
    cdef double xn[3]
    cdef int i, j, k, it, nres
    cdef double cost, best_cost, lam, h, cost_new, gmax, dn, x_norm
    cdef bint jac_ok, accepted, aborted, finite_delta
    cdef int termination, iterations

    for i in range(m):
        for j in range(3):
            for k in range(4):
                Pbuf[i * 12 + j * 4 + k] = Pm[i, j, k]
        obuf[i * 2] = om[i, 0]
        obuf[i * 2 + 1] = om[i, 1]
    for i in range(3):
        x[i] = xm[i]
    nres = 2 * m

    if not c_residual(Pbuf, obuf, m, x, r):
        raise NonFiniteResidual("residual is not finite at the starting point")
    cost = 0.0
    for i in range(nres):
        cost += r[i] * r[i]
    for i in range(3):
        best_x[i] = x[i]
    best_cost = cost
    lam = initial_damping
    termination = LM_MAX_ITERATIONS
    iterations = 0

    for it in range(1, max_iterations + 1):
        iterations = it
        # Forward-difference Jacobian, step 1e-7*(1+|x_j|) per parameter.
        jac_ok = True
        for j in range(3):
            h = 1e-7 * (1.0 + fabs(x[j]))
            for k in range(3):
                xp[k] = x[k]
            xp[j] += h
            if not c_residual(Pbuf, obuf, m, xp, rp):
                jac_ok = False
                break
            for i in range(nres):
                J[i * 3 + j] = (rp[i] - r[i]) / h
        if not jac_ok:
            break
        gmax = 0.0
        for j in range(3):
            g[j] = 0.0
            for i in range(nres):
                g[j] += J[i * 3 + j] * r[i]
            if fabs(g[j]) > gmax:
                gmax = fabs(g[j])
        if gmax <= gradient_tolerance:
            termination = LM_GRADIENT_SMALL
            break
        for j in range(3):
            for k in range(3):
                A[j * 3 + k] = 0.0
                for i in range(nres):
                    A[j * 3 + k] += J[i * 3 + j] * J[i * 3 + k]
            negg[j] = -g[j]

        accepted = False
        aborted = False
        while lam <= C_DAMPING_CAP:
            for i in range(9):
                M[i] = A[i]
            for j in range(3):
                M[j * 3 + j] += lam
            if not c_solve3(M, negg, delta):
                lam *= 10.0
                continue
            finite_delta = True
            for j in range(3):
                if not isfinite(delta[j]):
                    finite_delta = False
            if not finite_delta:
                lam *= 10.0
                continue
            for j in range(3):
                xn[j] = x[j] + delta[j]
            if not c_residual(Pbuf, obuf, m, xn, rn):
                aborted = True
                break
            cost_new = 0.0
            for i in range(nres):
                cost_new += rn[i] * rn[i]
            if cost_new < cost:
                accepted = True
                for j in range(3):
                    x[j] = xn[j]
                for i in range(nres):
                    r[i] = rn[i]
                cost = cost_new
                if cost < best_cost:
                    best_cost = cost
                    for j in range(3):
                        best_x[j] = x[j]
                lam *= 0.1
                dn = sqrt(delta[0] * delta[0] + delta[1] * delta[1]
                          + delta[2] * delta[2])
                x_norm = sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
                if dn <= step_tolerance * (x_norm + step_tolerance):
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

    out = np.empty(3)
    cdef double[::1] ov = out
    for i in range(3):
        ov[i] = best_x[i]
    return out, best_cost, iterations, termination
