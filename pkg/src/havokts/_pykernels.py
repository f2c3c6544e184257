"""Pure-Python/numpy twins of the compiled kernels in ``_kernels.pyx``."""
import numpy as np
from scipy.spatial import cKDTree


def lorenz_rk4(x, y, z, sigma, rho, beta, dt, n_transient, n_samples):
    # Scalar arithmetic in the same order as the compiled loop, so both
    # backends agree bit for bit.
    x, y, z = float(x), float(y), float(z)
    out = np.empty((n_samples, 3), dtype=np.float64)
    h2 = 0.5 * dt
    h6 = dt / 6.0
    total = n_transient + n_samples - 1
    j = 0
    if n_transient == 0 and n_samples > 0:
        out[0] = (x, y, z)
        j = 1
    for step in range(1, total + 1):
        k1x = sigma * (y - x)
        k1y = x * (rho - z) - y
        k1z = x * y - beta * z
        ax, ay, az = x + h2 * k1x, y + h2 * k1y, z + h2 * k1z
        k2x = sigma * (ay - ax)
        k2y = ax * (rho - az) - ay
        k2z = ax * ay - beta * az
        ax, ay, az = x + h2 * k2x, y + h2 * k2y, z + h2 * k2z
        k3x = sigma * (ay - ax)
        k3y = ax * (rho - az) - ay
        k3z = ax * ay - beta * az
        ax, ay, az = x + dt * k3x, y + dt * k3y, z + dt * k3z
        k4x = sigma * (ay - ax)
        k4y = ax * (rho - az) - ay
        k4z = ax * ay - beta * az
        x = x + h6 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y = y + h6 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        z = z + h6 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
        if step >= n_transient:
            out[j] = (x, y, z)
            j += 1
    return out


def forced_linear_rk4(A, B, v0, u, dt, steps):
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    v = np.array(v0, dtype=np.float64)
    out = np.empty((steps, v.size), dtype=np.float64)
    if steps == 0:
        return out
    out[0] = v
    h2 = 0.5 * dt
    h6 = dt / 6.0
    for s in range(steps - 1):
        bu = B * u[s]
        k1 = A @ v + bu
        k2 = A @ (v + h2 * k1) + bu
        k3 = A @ (v + h2 * k2) + bu
        k4 = A @ (v + dt * k3) + bu
        v = v + h6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[s + 1] = v
    return out


def nearest_neighbors(points):
    points = np.ascontiguousarray(points, dtype=np.float64)
    n = points.shape[0]
    if n < 2:
        return np.full(n, -1, dtype=np.int64), np.full(n, np.inf)
    tree = cKDTree(points)
    k = min(n, 3)
    dist, idx = tree.query(points, k=k)
    own = np.arange(n)
    # exact duplicates can push the point itself out of column 0
    pick = np.where(idx[:, 0] == own, 1, 0)
    nn = idx[own, pick].astype(np.int64)
    d = dist[own, pick]
    return nn, d * d


def binned_mutual_information(ia, ib, bins):
    n = ia.size
    joint = np.bincount(ia * bins + ib, minlength=bins * bins).reshape(bins, bins)
    ca = joint.sum(axis=1)
    cb = joint.sum(axis=0)
    p, q = np.nonzero(joint)
    c = joint[p, q].astype(np.float64)
    return float(np.sum(c * np.log(c * n / (ca[p].astype(np.float64) * cb[q]))) / n)
