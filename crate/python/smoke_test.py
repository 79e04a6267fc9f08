"""Smoke test for the kerrfocus Python module.

Build and install first:
    pip install ./crates/python
"""

import math

import kerrfocus as kf


def main():
    co = kf.direct_coefficients(1.0, 5.0, 4.0, 1.0, memory=1)
    assert co.memory == 1 and co.h21 == 4.0

    n1 = kf.select_rings(8.0, co.h21, "explicit", rings=[1, 4, 9], user=1)
    n2 = kf.select_rings(7.0, co.h12, "explicit", rings=[2, 8], user=2)
    f1, f2 = kf.difference_set(n2), kf.difference_set(n1)
    assert f1 == [-6, 0, 6], f1
    assert f2 == [-8, -5, -3, 0, 3, 5, 8], f2
    assert kf.select_rings(8.0, co.h21, "quadratic", c=1) == [1, 4, 9]
    powers = kf.ring_powers(n1, co.h21)
    assert all(abs(p - e) < 1e-12 for p, e in zip(powers, [math.pi / 2, 2 * math.pi, 4.5 * math.pi]))

    c1 = kf.build_constellation(n1, co.h21, 8)
    c2 = kf.build_constellation(n2, co.h12, 8)
    assert len(c1) == 24
    x1 = [c1.points[(5 * j) % len(c1)] for j in range(16)]
    x2 = [c2.points[(3 * j) % len(c2)] for j in range(16)]

    y1, y2 = kf.simulate(x1, x2, f1, f2, co)
    for j in range(1, 16):
        mags = sorted(abs(v) ** 2 for (jj, _, v) in y1 if jj == j)
        assert abs(mags[-1] / abs(x1[j]) ** 2 - 1) < 1e-9 and mags[-2] < 1e-9, (j, mags)

    e1, e2 = kf.oracle_compare(x1, x2, f1, f2, co, os=256)
    assert e1 < 1e-2 and e2 < 1e-2, (e1, e2)

    total = sum(abs(kf.u_factor(0.37, f)) ** 2 for f in range(-200, 201))
    assert 0.99 <= total <= 1.0, total

    ring = kf.build_constellation([1, 4], 2 * math.pi, 4)
    bits, se = kf.mi_monte_carlo(ring, 0.9, ring.mean_power() / 1e4, samples=20_000, seed=1)
    assert abs(bits - 3.0) < 0.05, bits
    amp, _ = kf.amplitude_only_mi(ring, 0.9, ring.mean_power() / 1e4, samples=20_000, seed=1)
    assert abs(amp - 1.0) < 0.05, amp

    grid = [10 ** (s / 10) for s in (20, 25, 30, 35)]
    res = kf.sweep(co, grid, noise=1.0, samples=5_000, seed=3)
    assert len(res.rows) == 4 and res.slope > 0.5, res.slope
    slope, lo, hi = kf.prelog_fit([r[1] for r in res.rows], [r[2] for r in res.rows], [r[5] for r in res.rows])
    assert lo <= slope <= hi

    try:
        kf.select_rings(0.1, co.h21, "quadratic")
    except ValueError:
        pass
    else:
        raise AssertionError("infeasible power accepted")

    print("smoke test passed: focusing slope %.3f over %d points" % (res.slope, res.fit_points))


if __name__ == "__main__":
    main()
