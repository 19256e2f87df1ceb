"""Zero finding for analytic functions that are real on the real axis."""
import numpy as np
from scipy.optimize import brentq, minimize_scalar


def winding_number(f, center, radius, n=128):
    """Number of zeros of ``f`` inside the circle, from the sampled argument change.

    ``f`` must accept a complex array.
    """
    z = center + radius * np.exp(2j * np.pi * np.arange(n + 1) / n)
    vals = np.asarray(f(z), dtype=complex)
    if np.any(vals == 0):
        return -1
    dphi = np.angle(vals[1:] / vals[:-1])
    return int(round(dphi.sum() / (2 * np.pi)))


def cluster_moments(f, center, radius, n=64):
    """Zero count and zero centroid inside a circle.

    ``f`` is sampled on the circle, its Taylor coefficients are recovered by
    FFT to get ``f'`` exactly on the same nodes, and the contour integrals of
    ``f'/f`` and ``z f'/f`` are evaluated with the (spectrally accurate)
    trapezoidal rule.
    """
    theta = 2 * np.pi * np.arange(n) / n
    w = radius * np.exp(1j * theta)
    vals = np.asarray(f(center + w), dtype=complex)
    a = np.fft.fft(vals) / n / radius ** np.arange(n)
    k = np.arange(n)
    k[n // 2:] = 0  # drop aliased negative powers
    a = np.where(np.arange(n) < n // 2, a, 0)
    deriv = np.array([np.sum(k[1:] * a[1:] * wi ** (k[1:] - 1)) for wi in w])
    ratio = deriv / vals * w
    count = np.mean(ratio)
    first = np.mean(ratio * (center + w))
    m = int(round(count.real))
    return m, (first / m if m else center)


def real_zeros(f, a, b, n, min_radius=0.0):
    """Zeros of ``f`` on ``[a, b]`` with multiplicities.

    ``f`` maps a complex array to complex values, analytic near the real
    segment and real on it.  Odd-order zeros are bracketed by sign changes
    and polished with Brent's method; even-order zeros show up as local
    minima of ``|f|`` and are kept only if a small circle around the refined
    point has nonzero winding number.  Returns a list of ``(t, multiplicity)``.
    """
    t = np.linspace(a, b, n)
    h = t[1] - t[0]
    fv = np.real(f(t.astype(complex)))
    real_f = lambda x: float(np.real(f(np.array([complex(x)]))[0]))
    found = []
    for k in range(n - 1):
        if fv[k] == 0.0:
            found.append(t[k])
        elif fv[k] * fv[k + 1] < 0:
            found.append(brentq(real_f, t[k], t[k + 1], xtol=1e-15, rtol=1e-15, maxiter=200))
    av = np.abs(fv)
    for k in range(1, n - 1):
        if av[k] <= av[k - 1] and av[k] <= av[k + 1] and fv[k - 1] * fv[k + 1] > 0 and fv[k] * fv[k - 1] > 0:
            res = minimize_scalar(lambda x: abs(real_f(x)), bounds=(t[k - 1], t[k + 1]), method="bounded",
                                  options={"xatol": 1e-13})
            found.append(float(res.x))
    found.sort()
    out = []
    for z in found:
        if out and abs(z - out[-1][0]) < 0.5 * h:
            continue
        radius = 0.5 * h
        if min_radius:
            radius = min(radius, max(min_radius, 1e-12))
        m = winding_number(f, z, radius)
        if m > 1:
            m2, c = cluster_moments(f, z, radius)
            if m2 == m and abs(c.imag) < radius and abs(c - z) < radius:
                z = float(c.real)
        if m > 0:
            out.append((z, m))
    return out


def _secant(f, z0, x0, x1, y0, y1, steps=8):
    """Polish a simple zero; falls back to ``z0`` if the iteration strays from the cell."""
    h = 1e-3 * max(x1 - x0, y1 - y0)
    pad = 0.25 * max(x1 - x0, y1 - y0)
    x0, x1, y0, y1 = x0 - pad, x1 + pad, y0 - pad, y1 + pad
    a, b = complex(z0), complex(z0) + h
    fa, fb = (complex(v) for v in f(np.array([a, b])))
    for _ in range(steps):
        if fb == fa:
            break
        a, b, fa = b, b - fb * (b - a) / (fb - fa), fb
        if not (x0 <= b.real <= x1 and y0 <= b.imag <= y1):
            return complex(z0)
        fb = complex(f(np.array([b]))[0])
        if abs(b - a) < 1e-14 * max(1.0, abs(b)):
            break
    return b


def complex_zeros(f, x0, x1, y0, y1, cell=0.25, sub=16, depth=4):
    """Zeros of an analytic ``f`` in a rectangle, located cell by cell.

    The argument principle is applied on each square cell of side ``cell``;
    cells with a nonzero count report the contour centroid of their zeros
    (midpoint rule on ``d log f``).  Cells holding several zeros are
    subdivided up to ``depth`` times.  Returns a list of ``(z, multiplicity)``.
    """
    nx = max(1, int(np.ceil((x1 - x0) / cell)))
    ny = max(1, int(np.ceil((y1 - y0) / cell)))
    xs = np.linspace(x0, x1, nx * sub + 1)
    ys = np.linspace(y0, y1, ny * sub + 1)
    hl = xs[None, :] + 1j * ys[::sub, None]  # horizontal lines (ny+1, nx*sub+1)
    vl = xs[::sub, None] + 1j * ys[None, :]  # vertical lines (nx+1, ny*sub+1)
    fh = np.asarray(f(hl.ravel()), complex).reshape(hl.shape)
    fv = np.asarray(f(vl.ravel()), complex).reshape(vl.shape)
    out = []
    for i in range(nx):
        for j in range(ny):
            sx = slice(i * sub, (i + 1) * sub + 1)
            sy = slice(j * sub, (j + 1) * sub + 1)
            z = np.concatenate([hl[j, sx], vl[i + 1, sy][1:], hl[j + 1, sx][::-1][1:], vl[i, sy][::-1][1:]])
            w = np.concatenate([fh[j, sx], fv[i + 1, sy][1:], fh[j + 1, sx][::-1][1:], fv[i, sy][::-1][1:]])
            if np.any(w == 0):
                out.append((complex(z[np.argmin(np.abs(w))]), 1))
                continue
            dlog = np.log(np.abs(w[1:] / w[:-1])) + 1j * np.angle(w[1:] / w[:-1])
            m = int(round(dlog.imag.sum() / (2 * np.pi)))
            if m > 1 and depth > 0:
                hx, hy = xs[sx][[0, -1]], ys[sy][[0, -1]]
                out.extend(complex_zeros(f, hx[0], hx[1], hy[0], hy[1], (hx[1] - hx[0]) / 3, sub, depth - 1))
            elif m > 0:
                zm = 0.5 * (z[1:] + z[:-1])
                c = np.sum(zm * dlog) / (2j * np.pi) / m
                if m == 1:
                    c = _secant(f, c, xs[sx][0], xs[sx][-1], ys[sy][0], ys[sy][-1])
                out.append((complex(c), m))
    return out
