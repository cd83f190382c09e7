# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tether kernels; mirrors ``_kernels_py`` exactly."""

from libc.math cimport acos, atan2, cos, exp, fabs, hypot, sin, sqrt

from tensile_perch._kernels_py import PenetrationError

cdef double CONTACT_MARGIN = 1e-3


cdef struct Geom:
    double length
    double free_d
    double arc
    double free_p
    double alpha
    double udx
    double udy
    double upx
    double upy
    double tdx
    double tdy
    double tpx
    double tpy


cdef inline double _angle_delta(double ax, double ay, double bx, double by) nogil:
    return atan2(ax * by - ay * bx, ax * bx + ay * by)


def angle_delta(double ax, double ay, double bx, double by):
    return _angle_delta(ax, ay, bx, by)


def accumulate_wrap(xs, ys, double cx, double cy, double R):
    cdef Py_ssize_t n = len(xs)
    cdef Py_ssize_t i
    cdef double ax, ay, bx, by, total = 0.0
    cdef double R2 = R * R
    cdef double[:] xv
    cdef double[:] yv
    if n == 0:
        return 0.0
    import numpy as np
    xv = np.ascontiguousarray(xs, dtype=np.float64)
    yv = np.ascontiguousarray(ys, dtype=np.float64)
    ax = xv[0] - cx
    ay = yv[0] - cy
    if ax * ax + ay * ay < R2:
        raise PenetrationError("polyline vertex 0 lies inside the branch")
    for i in range(1, n):
        bx = xv[i] - cx
        by = yv[i] - cy
        if bx * bx + by * by < R2:
            raise PenetrationError(f"polyline vertex {i} lies inside the branch")
        total += atan2(ax * by - ay * bx, ax * bx + ay * by)
        ax = bx
        ay = by
    return total


cdef int _geometry(double dx, double dy, double px, double py, double cx, double cy,
                   double R, double theta, Geom* g) nogil:
    cdef double rdx = dx - cx, rdy = dy - cy, rpx = px - cx, rpy = py - cy
    cdef double d_d = hypot(rdx, rdy), d_p = hypot(rpx, rpy)
    cdef double b_d, b_p, alpha, ex, ey, length, s, a_d, a_p
    if d_d < R or d_p < R:
        return -1
    b_d = acos(R / d_d)
    b_p = acos(R / d_p)
    alpha = fabs(theta) - b_d - b_p
    if alpha <= 0.0:
        ex = dx - px
        ey = dy - py
        length = hypot(ex, ey)
        g.length = length
        g.free_d = length
        g.arc = 0.0
        g.free_p = 0.0
        g.alpha = 0.0
        if length > 0.0:
            g.udx = ex / length
            g.udy = ey / length
        else:
            g.udx = 0.0
            g.udy = 0.0
        g.upx = -g.udx
        g.upy = -g.udy
        g.tdx = px
        g.tdy = py
        g.tpx = px
        g.tpy = py
        return 0
    s = 1.0 if theta > 0.0 else -1.0
    a_d = atan2(rdy, rdx) + s * b_d
    a_p = atan2(rpy, rpx) - s * b_p
    g.tdx = cx + R * cos(a_d)
    g.tdy = cy + R * sin(a_d)
    g.tpx = cx + R * cos(a_p)
    g.tpy = cy + R * sin(a_p)
    g.free_d = sqrt(max(d_d * d_d - R * R, 0.0))
    g.free_p = sqrt(max(d_p * d_p - R * R, 0.0))
    if g.free_d > 0.0:
        g.udx = (dx - g.tdx) / g.free_d
        g.udy = (dy - g.tdy) / g.free_d
    else:
        g.udx = s * sin(a_d)
        g.udy = -s * cos(a_d)
    if g.free_p > 0.0:
        g.upx = (px - g.tpx) / g.free_p
        g.upy = (py - g.tpy) / g.free_p
    else:
        g.upx = -s * sin(a_p)
        g.upy = s * cos(a_p)
    g.alpha = alpha
    g.arc = R * alpha
    g.length = g.free_d + g.arc + g.free_p
    return 0


def wrap_geometry(double dx, double dy, double px, double py, double cx, double cy,
                  double R, double theta):
    cdef Geom g
    if _geometry(dx, dy, px, py, cx, cy, R, theta, &g) != 0:
        raise PenetrationError("tether endpoint inside the branch")
    return (g.length, g.free_d, g.arc, g.free_p, g.alpha, g.udx, g.udy, g.upx, g.upy,
            g.tdx, g.tdy, g.tpx, g.tpy)


cdef inline bint _push_out(double* x, double* y, double* vx, double* vy,
                           double cx, double cy, double rc) nogil:
    cdef double rx = x[0] - cx, ry = y[0] - cy
    cdef double d = hypot(rx, ry)
    cdef double nx, ny, vn
    if d >= rc:
        return False
    if d == 0.0:
        nx = 0.0
        ny = 1.0
    else:
        nx = rx / d
        ny = ry / d
    vn = vx[0] * nx + vy[0] * ny
    if vn < 0.0:
        vx[0] -= vn * nx
        vy[0] -= vn * ny
    x[0] = cx + rc * nx
    y[0] = cy + rc * ny
    return True


def tether_step(double dx, double dy, double dvx, double dvy,
                double px, double py, double pvx, double pvy,
                double theta, double spooled, bint taut,
                double fdx, double fdy, double fpx, double fpy,
                double winch_rate, double inv_md, double inv_mp,
                double cx, double cy, double R, double mu_eff,
                double total_length, double capacity, double dt, double band):
    cdef Geom g
    cdef double spooled_new, avail, length, alpha, udx, udy, upx, upy, c_d, c_p
    cdef double predicted, threshold, j_d = 0.0, j_p = 0.0, slip = 0.0
    cdef double b, rho, denom, j, js_d, js_p
    cdef double ox_d, oy_d, ox_p, oy_p, w_d, w_p, rc, theta0, err, k
    cdef bint hit_d, hit_p
    cdef int it

    dvx += dt * inv_md * fdx
    dvy += dt * inv_md * fdy
    pvx += dt * inv_mp * fpx
    pvy += dt * inv_mp * fpy

    spooled_new = spooled - winch_rate * dt
    if spooled_new < 0.0:
        spooled_new = 0.0
    elif spooled_new > capacity:
        spooled_new = capacity
    avail = total_length - spooled_new

    if _geometry(dx, dy, px, py, cx, cy, R, theta, &g) != 0:
        raise PenetrationError("tether endpoint inside the branch")
    length = g.length
    alpha = g.alpha
    udx = g.udx
    udy = g.udy
    upx = g.upx
    upy = g.upy
    c_d = udx * dvx + udy * dvy
    c_p = upx * pvx + upy * pvy

    predicted = length + dt * (c_d + c_p)
    threshold = avail - band if taut else avail
    taut = predicted > threshold
    if taut:
        b = (avail - length) / dt
        rho = exp(mu_eff * alpha) if alpha > 0.0 else 1.0
        if alpha <= 0.0:
            denom = inv_md + inv_mp
            j = (c_d + c_p - b) / denom if denom > 0.0 else 0.0
            if j > 0.0:
                j_d = j
                j_p = j
            else:
                taut = False
        elif inv_md == 0.0 or inv_mp == 0.0:
            if inv_mp > 0.0:
                j_p = (c_p - b) / inv_mp
                j_d = j_p
            elif inv_md > 0.0:
                j_d = (c_d - b) / inv_md
                j_p = j_d
            if j_d < 0.0:
                j_d = 0.0
                j_p = 0.0
                taut = False
        else:
            js_d = c_d / inv_md
            js_p = (c_p - b) / inv_mp
            if js_d < 0.0 and js_p < 0.0:
                taut = False
            elif js_d >= 0.0 and js_p >= 0.0 and js_d <= rho * js_p and js_p <= rho * js_d:
                j_d = js_d
                j_p = js_p
            else:
                if js_d > rho * js_p:
                    j_p = (c_d + c_p - b) / (rho * inv_md + inv_mp)
                    j_d = rho * j_p
                else:
                    j_d = (c_d + c_p - b) / (inv_md + rho * inv_mp)
                    j_p = rho * j_d
                if j_d <= 0.0 or j_p <= 0.0:
                    j_d = 0.0
                    j_p = 0.0
                    taut = False
                else:
                    slip = c_d - inv_md * j_d
        dvx -= inv_md * j_d * udx
        dvy -= inv_md * j_d * udy
        pvx -= inv_mp * j_p * upx
        pvy -= inv_mp * j_p * upy

    ox_d = dx
    oy_d = dy
    ox_p = px
    oy_p = py
    dx += dt * dvx
    dy += dt * dvy
    px += dt * pvx
    py += dt * pvy

    w_d = inv_md * j_d
    w_p = inv_mp * j_p
    if w_d + w_p <= 0.0:
        w_d = inv_md
        w_p = inv_mp
    rc = R * (1.0 + CONTACT_MARGIN)
    theta0 = theta
    for it in range(8):
        hit_d = _push_out(&dx, &dy, &dvx, &dvy, cx, cy, rc)
        hit_p = _push_out(&px, &py, &pvx, &pvy, cx, cy, rc)
        theta = theta0 + _angle_delta(ox_p - cx, oy_p - cy, px - cx, py - cy) \
            - _angle_delta(ox_d - cx, oy_d - cy, dx - cx, dy - cy)
        if _geometry(dx, dy, px, py, cx, cy, R, theta, &g) != 0:
            raise PenetrationError("tether endpoint inside the branch")
        err = g.length - avail
        if not taut and err > 0.0:
            taut = True
        if not taut or w_d + w_p <= 0.0 or fabs(err) <= 1e-13:
            if not (hit_d or hit_p):
                break
            continue
        k = err / (w_d + w_p)
        dx -= k * w_d * g.udx
        dy -= k * w_d * g.udy
        px -= k * w_p * g.upx
        py -= k * w_p * g.upy
    theta = theta0 + _angle_delta(ox_p - cx, oy_p - cy, px - cx, py - cy) \
        - _angle_delta(ox_d - cx, oy_d - cy, dx - cx, dy - cy)

    return (dx, dy, dvx, dvy, px, py, pvx, pvy, theta, spooled_new, taut,
            j_d / dt, j_p / dt, slip)
