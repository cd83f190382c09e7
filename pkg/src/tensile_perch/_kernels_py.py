"""Pure-Python tether kernels.

Reference implementation of the per-step tether solve and the winding
accumulation. ``_ckernels.pyx`` mirrors these functions line for line; keep
the two in sync (``tests/test_kernels.py`` compares them).

Conventions: the branch is a circle of radius ``R`` centred at ``(cx, cy)``.
``theta`` is the signed angle swept at the branch centre walking along the
tether from the drone end to the pod end (counter-clockwise positive).
"""

from math import acos, atan2, cos, exp, hypot, sin, sqrt

# points are kept this far outside the branch surface (relative to R)
CONTACT_MARGIN = 1e-3


class PenetrationError(ValueError):
    pass


def angle_delta(ax, ay, bx, by):
    """Signed angle from vector a to vector b, in (-pi, pi]."""
    return atan2(ax * by - ay * bx, ax * bx + ay * by)


def accumulate_wrap(xs, ys, cx, cy, R):
    """Total signed angle swept around ``(cx, cy)`` along a polyline."""
    n = len(xs)
    if n == 0:
        return 0.0
    R2 = R * R
    ax = xs[0] - cx
    ay = ys[0] - cy
    if ax * ax + ay * ay < R2:
        raise PenetrationError("polyline vertex 0 lies inside the branch")
    total = 0.0
    for i in range(1, n):
        bx = xs[i] - cx
        by = ys[i] - cy
        if bx * bx + by * by < R2:
            raise PenetrationError(f"polyline vertex {i} lies inside the branch")
        total += atan2(ax * by - ay * bx, ax * bx + ay * by)
        ax = bx
        ay = by
    return total


def wrap_geometry(dx, dy, px, py, cx, cy, R, theta):
    """Tangent-line routing of the tether around the branch.

    Returns ``(length, free_d, arc, free_p, alpha, udx, udy, upx, upy,
    tdx, tdy, tpx, tpy)`` where ``u*`` are the unit gradients of the routed
    length with respect to each endpoint, ``alpha`` the contact angle and
    ``t*`` the tangent points (equal to the endpoints when not in contact).
    """
    rdx = dx - cx
    rdy = dy - cy
    rpx = px - cx
    rpy = py - cy
    d_d = hypot(rdx, rdy)
    d_p = hypot(rpx, rpy)
    if d_d < R or d_p < R:
        raise PenetrationError("tether endpoint inside the branch")
    b_d = acos(R / d_d)
    b_p = acos(R / d_p)
    alpha = abs(theta) - b_d - b_p
    if alpha <= 0.0:
        ex = dx - px
        ey = dy - py
        length = hypot(ex, ey)
        if length > 0.0:
            udx = ex / length
            udy = ey / length
        else:
            udx = 0.0
            udy = 0.0
        return (length, length, 0.0, 0.0, 0.0, udx, udy, -udx, -udy,
                px, py, px, py)
    s = 1.0 if theta > 0.0 else -1.0
    a_d = atan2(rdy, rdx) + s * b_d
    a_p = atan2(rpy, rpx) - s * b_p
    tdx = cx + R * cos(a_d)
    tdy = cy + R * sin(a_d)
    tpx = cx + R * cos(a_p)
    tpy = cy + R * sin(a_p)
    free_d = sqrt(max(d_d * d_d - R * R, 0.0))
    free_p = sqrt(max(d_p * d_p - R * R, 0.0))
    if free_d > 0.0:
        udx = (dx - tdx) / free_d
        udy = (dy - tdy) / free_d
    else:
        udx = s * sin(a_d)
        udy = -s * cos(a_d)
    if free_p > 0.0:
        upx = (px - tpx) / free_p
        upy = (py - tpy) / free_p
    else:
        upx = -s * sin(a_p)
        upy = s * cos(a_p)
    arc = R * alpha
    return (free_d + arc + free_p, free_d, arc, free_p, alpha, udx, udy, upx, upy,
            tdx, tdy, tpx, tpy)


def _push_out(x, y, vx, vy, cx, cy, rc):
    rx = x - cx
    ry = y - cy
    d = hypot(rx, ry)
    if d >= rc:
        return x, y, vx, vy, False
    if d == 0.0:
        nx, ny = 0.0, 1.0
    else:
        nx = rx / d
        ny = ry / d
    vn = vx * nx + vy * ny
    if vn < 0.0:
        vx -= vn * nx
        vy -= vn * ny
    return cx + rc * nx, cy + rc * ny, vx, vy, True


def tether_step(dx, dy, dvx, dvy, px, py, pvx, pvy, theta, spooled, taut,
                fdx, fdy, fpx, fpy, winch_rate, inv_md, inv_mp,
                cx, cy, R, mu_eff, total_length, capacity, dt, band):
    """Advance drone and pod one semi-implicit Euler step with the tether.

    ``f*`` are the non-tether forces (thrust, gravity, damping). The tether
    is an inextensible, unilateral constraint; across the wrapped arc the
    end tensions may differ by at most ``exp(mu_eff * alpha)`` (capstan),
    otherwise the tether slides toward the high-tension side.

    Returns ``(dx, dy, dvx, dvy, px, py, pvx, pvy, theta, spooled, taut,
    tension_d, tension_p, slip_rate)``; ``slip_rate`` is the rate at which
    tether slides onto the drone side (0 while sticking).
    """
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

    g = wrap_geometry(dx, dy, px, py, cx, cy, R, theta)
    length = g[0]
    alpha = g[4]
    udx, udy, upx, upy = g[5], g[6], g[7], g[8]
    c_d = udx * dvx + udy * dvy
    c_p = upx * pvx + upy * pvy

    predicted = length + dt * (c_d + c_p)
    threshold = avail - band if taut else avail
    j_d = 0.0
    j_p = 0.0
    slip = 0.0
    taut = predicted > threshold
    if taut:
        b = (avail - length) / dt
        rho = exp(mu_eff * alpha) if alpha > 0.0 else 1.0
        if alpha <= 0.0:
            # straight tether: equal end tensions
            denom = inv_md + inv_mp
            j = (c_d + c_p - b) / denom if denom > 0.0 else 0.0
            if j > 0.0:
                j_d = j
                j_p = j
            else:
                taut = False
        elif inv_md == 0.0 or inv_mp == 0.0:
            # one end pinned: the moving end takes the whole correction
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
            # sticking: each side keeps its own length, the winch feeds the pod side
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

    ox_d, oy_d, ox_p, oy_p = dx, dy, px, py
    dx += dt * dvx
    dy += dt * dvy
    px += dt * pvx
    py += dt * pvy

    # weights for sharing position corrections between the two ends
    w_d = inv_md * j_d
    w_p = inv_mp * j_p
    if w_d + w_p <= 0.0:
        w_d = inv_md
        w_p = inv_mp
    rc = R * (1.0 + CONTACT_MARGIN)
    theta0 = theta
    for _ in range(8):
        dx, dy, dvx, dvy, hit_d = _push_out(dx, dy, dvx, dvy, cx, cy, rc)
        px, py, pvx, pvy, hit_p = _push_out(px, py, pvx, pvy, cx, cy, rc)
        theta = theta0 + angle_delta(ox_p - cx, oy_p - cy, px - cx, py - cy) \
            - angle_delta(ox_d - cx, oy_d - cy, dx - cx, dy - cy)
        g = wrap_geometry(dx, dy, px, py, cx, cy, R, theta)
        err = g[0] - avail
        if not taut and err > 0.0:
            taut = True
        if not taut or w_d + w_p <= 0.0 or abs(err) <= 1e-13:
            if not (hit_d or hit_p):
                break
            continue
        k = err / (w_d + w_p)
        dx -= k * w_d * g[5]
        dy -= k * w_d * g[6]
        px -= k * w_p * g[7]
        py -= k * w_p * g[8]
    theta = theta0 + angle_delta(ox_p - cx, oy_p - cy, px - cx, py - cy) \
        - angle_delta(ox_d - cx, oy_d - cy, dx - cx, dy - cy)

    return (dx, dy, dvx, dvy, px, py, pvx, pvy, theta, spooled_new, taut,
            j_d / dt, j_p / dt, slip)
