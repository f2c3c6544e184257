# cython: language_level=3
"""Compiled inner loops.

Every function here has a drop-in twin in ``_pykernels`` with the same
signature and semantics; ``_backend`` picks one at import time.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, INFINITY

cnp.import_array()


cdef inline void _lorenz_rhs(double x, double y, double z, double sigma,
                             double rho, double beta, double* out) noexcept nogil:
    out[0] = sigma * (y - x)
    out[1] = x * (rho - z) - y
    out[2] = x * y - beta * z


def lorenz_rk4(double x, double y, double z, double sigma, double rho, double beta,
               double dt, Py_ssize_t n_transient, Py_ssize_t n_samples):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n_samples, 3), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef double k1[3]
    cdef double k2[3]
    cdef double k3[3]
    cdef double k4[3]
    cdef double h2 = 0.5 * dt
    cdef double h6 = dt / 6.0
    cdef Py_ssize_t step, total = n_transient + n_samples - 1, j = 0
    with nogil:
        if n_transient == 0 and n_samples > 0:
            ov[0, 0] = x
            ov[0, 1] = y
            ov[0, 2] = z
            j = 1
        for step in range(1, total + 1):
            _lorenz_rhs(x, y, z, sigma, rho, beta, k1)
            _lorenz_rhs(x + h2 * k1[0], y + h2 * k1[1], z + h2 * k1[2], sigma, rho, beta, k2)
            _lorenz_rhs(x + h2 * k2[0], y + h2 * k2[1], z + h2 * k2[2], sigma, rho, beta, k3)
            _lorenz_rhs(x + dt * k3[0], y + dt * k3[1], z + dt * k3[2], sigma, rho, beta, k4)
            x = x + h6 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
            y = y + h6 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
            z = z + h6 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
            if step >= n_transient:
                ov[j, 0] = x
                ov[j, 1] = y
                ov[j, 2] = z
                j += 1
    return out


cdef inline void _affine(const double[:, ::1] A, const double[::1] B, double u,
                         double* v, double* out, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t i, k
    cdef double acc
    for i in range(m):
        acc = 0.0
        for k in range(m):
            acc = acc + A[i, k] * v[k]
        out[i] = acc + B[i] * u


def forced_linear_rk4(const double[:, ::1] A, const double[::1] B, const double[::1] v0,
                      const double[::1] u, double dt, Py_ssize_t steps):
    cdef Py_ssize_t m = v0.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((steps, m), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef double[:, ::1] work = np.empty((6, m), dtype=np.float64)
    cdef double* v = &work[0, 0]
    cdef double* k1 = &work[1, 0]
    cdef double* k2 = &work[2, 0]
    cdef double* k3 = &work[3, 0]
    cdef double* k4 = &work[4, 0]
    cdef double* tmp = &work[5, 0]
    cdef double h2 = 0.5 * dt
    cdef double h6 = dt / 6.0
    cdef Py_ssize_t i, s
    if steps == 0:
        return out
    with nogil:
        for i in range(m):
            v[i] = v0[i]
            ov[0, i] = v0[i]
        for s in range(steps - 1):
            _affine(A, B, u[s], v, k1, m)
            for i in range(m):
                tmp[i] = v[i] + h2 * k1[i]
            _affine(A, B, u[s], tmp, k2, m)
            for i in range(m):
                tmp[i] = v[i] + h2 * k2[i]
            _affine(A, B, u[s], tmp, k3, m)
            for i in range(m):
                tmp[i] = v[i] + dt * k3[i]
            _affine(A, B, u[s], tmp, k4, m)
            for i in range(m):
                v[i] = v[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                ov[s + 1, i] = v[i]
    return out


# above this many coordinates the sweep prunes poorly and a k-d tree is faster
SWEEP_MAX_DIM = 4


def nearest_neighbors(const double[:, ::1] points):
    """Exact Euclidean nearest neighbor (excluding self) by a sorted sweep on axis 0."""
    cdef Py_ssize_t n = points.shape[0], d = points.shape[1]
    if d > SWEEP_MAX_DIM:
        from havokts._pykernels import nearest_neighbors as tree_neighbors
        return tree_neighbors(np.asarray(points))
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order_arr = np.argsort(
        np.asarray(points[:, 0]), kind="stable").astype(np.int64)
    cdef const cnp.int64_t[::1] order = order_arr
    cdef cnp.ndarray[cnp.int64_t, ndim=1] idx = np.full(n, -1, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dist = np.full(n, np.inf, dtype=np.float64)
    cdef cnp.int64_t[::1] iv = idx
    cdef double[::1] dv = dist
    cdef Py_ssize_t a, b, i, j, k
    cdef double best, acc, diff, x0
    with nogil:
        for a in range(n):
            i = order[a]
            x0 = points[i, 0]
            best = INFINITY
            for b in range(a + 1, n):
                j = order[b]
                diff = points[j, 0] - x0
                if diff * diff > best:
                    break
                acc = diff * diff
                for k in range(1, d):
                    diff = points[j, k] - points[i, k]
                    acc = acc + diff * diff
                    if acc > best:
                        break
                if acc < best or (acc == best and j < iv[i]):
                    best = acc
                    iv[i] = j
            for b in range(a - 1, -1, -1):
                j = order[b]
                diff = points[j, 0] - x0
                if diff * diff > best:
                    break
                acc = diff * diff
                for k in range(1, d):
                    diff = points[j, k] - points[i, k]
                    acc = acc + diff * diff
                    if acc > best:
                        break
                if acc < best or (acc == best and j < iv[i]):
                    best = acc
                    iv[i] = j
            dv[i] = best
    return idx, dist


def binned_mutual_information(const cnp.int64_t[::1] ia, const cnp.int64_t[::1] ib,
                              Py_ssize_t bins):
    cdef Py_ssize_t n = ia.shape[0], t, p, q
    cdef cnp.int64_t[:, ::1] joint = np.zeros((bins, bins), dtype=np.int64)
    cdef cnp.int64_t[::1] ca = np.zeros(bins, dtype=np.int64)
    cdef cnp.int64_t[::1] cb = np.zeros(bins, dtype=np.int64)
    cdef double mi = 0.0, c, nn = <double>n
    with nogil:
        for t in range(n):
            joint[ia[t], ib[t]] += 1
            ca[ia[t]] += 1
            cb[ib[t]] += 1
        for p in range(bins):
            if ca[p] == 0:
                continue
            for q in range(bins):
                if joint[p, q] == 0:
                    continue
                c = <double>joint[p, q]
                mi = mi + c * log(c * nn / (<double>ca[p] * <double>cb[q]))
    return mi / nn
