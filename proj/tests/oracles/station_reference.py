"""Scalar reference for the blade-element/momentum station balance.

Solves the two momentum balances with nested bisection (outer on the
tangential induction, inner on the axial induction). Shares no code with
the C++ solver; the numbers it prints are frozen into tests/unit/test_hydro.cpp.
"""
import math

RADII = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0]
CD = 0.008


def section(design, r):
    nb, pitch, w_rp, w_c, w_rc, camber = design
    s_p = 1.0 - 0.2 * ((r - w_rp) / 0.8) ** 2
    end_val, end_r = (0.6, 0.2) if r <= w_rc else (0.08, 1.0)
    s_c = 1.0 - (1.0 - end_val) * ((r - w_rc) / (end_r - w_rc)) ** 2
    fc = camber if r <= 0.9 else camber * (1.0 - r) / 0.1
    return r, pitch * s_p, 0.35 * w_c * s_c, fc


def blade_element(sec, j, nb, a, ap):
    r, pd, cd_ratio, fc = sec
    u = j * (1 + a)
    w = math.pi * r * (1 - ap)
    w2 = u * u + w * w
    phi = math.atan2(u, w)
    alpha = math.atan(pd / (math.pi * r)) - phi
    cl = min(1.5, max(-1.5, 2 * math.pi * (alpha + 2 * fc)))
    dkt = 0.25 * nb * cd_ratio * w2 * (cl * math.cos(phi) - CD * math.sin(phi))
    dkq = 0.125 * nb * cd_ratio * w2 * (cl * math.sin(phi) + CD * math.cos(phi)) * r
    s = max(math.sin(phi), 1e-6)
    f = (2 / math.pi) * math.acos(math.exp(-(nb / 2) * (1 - r) / (r * s)))
    return dkt, dkq, max(f, 1e-3), phi, cl


def bisect(fn, lo, hi, iters=200):
    flo = fn(lo)
    assert flo * fn(hi) <= 0, (lo, hi, flo, fn(hi))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if flo * fm <= 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def solve(sec, j, nb):
    r = sec[0]

    def axial_for(ap):
        def res(a):
            dkt, _, f, _, _ = blade_element(sec, j, nb, a, ap)
            return dkt - math.pi * j * j * r * (1 + a) * a * f
        return bisect(res, -0.45, 0.99)

    def tangential_res(ap):
        a = axial_for(ap)
        _, dkq, f, _, _ = blade_element(sec, j, nb, a, ap)
        return dkq - 0.5 * math.pi ** 2 * j * r ** 3 * (1 + a) * ap * f

    ap = bisect(tangential_res, -0.3, 0.5)
    a = axial_for(ap)
    dkt, dkq, f, phi, cl = blade_element(sec, j, nb, a, ap)
    return a, ap, dkt, dkq, phi, cl


def trapezoid(xs, ys):
    return sum(0.5 * (ys[i] + ys[i + 1]) * (xs[i + 1] - xs[i]) for i in range(len(xs) - 1))


if __name__ == "__main__":
    ref = (0.7, 1.0, 0.2, 0.02)
    a, ap, dkt, dkq, phi, cl = solve(ref, 0.8, 4)
    print("reference station: a=%.12f a_tan=%.12f dkt=%.12f dkq=%.12f phi=%.12f cl=%.12f"
          % (a, ap, dkt, dkq, phi, cl))
    # Moderately loaded designs at J=0.8 (all stations except the tip, where F hits its guard).
    designs = [
        (3, 1.0, 0.7, 0.75, 0.65, 0.02),
        (4, 1.2, 0.6, 0.9, 0.55, 0.03),
        (2, 0.9, 0.8, 0.6, 0.7, 0.01),
        (5, 1.3, 0.65, 0.7, 0.6, 0.04),
        (4, 1.1, 0.75, 1.0, 0.75, 0.0),
    ]
    for d in designs:
        dkts = []
        for r in RADII[:-1]:
            dkts.append(solve(section(d, r), 0.8, d[0])[2])
        print(d, "partial kT over [0.2,0.95] at J=0.8: %.12f" % trapezoid(RADII[:-1], dkts))
