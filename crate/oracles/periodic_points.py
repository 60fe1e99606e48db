"""Brute-force periodic data of cocycles over the cat map.

Fix(f^k) is enumerated as the closure of the subgroup of (Z/D)^2 generated by
the columns of adj(M^k - I), D = |det(M^k - I)|, using exact integers. Cocycle
products along each orbit are formed in float64 with numpy.
"""

import argparse
import json
import math

import numpy as np

M = np.array([[2, 1], [1, 1]], dtype=object)


def matpow(m, k):
    r = np.array([[1, 0], [0, 1]], dtype=object)
    for _ in range(k):
        r = r.dot(m)
    return r


def fixed_points(k):
    b = matpow(M, k) - np.array([[1, 0], [0, 1]], dtype=object)
    det = int(b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0])
    d = abs(det)
    adj = [(int(b[1, 1]) % d, int(-b[1, 0]) % d), (int(-b[0, 1]) % d, int(b[0, 0]) % d)]
    seen = {(0, 0)}
    frontier = [(0, 0)]
    while frontier:
        nxt = []
        for v in frontier:
            for g in adj:
                w = ((v[0] + g[0]) % d, (v[1] + g[1]) % d)
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    assert len(seen) == d, (len(seen), d)
    pts = np.array(sorted(seen), dtype=np.int64)
    return pts, d


def orbit_coords(pts, d, k):
    """coords[j] = f^j p / D for j < k, exact in int64 (D < 2^31 here)."""
    out = []
    v = pts.copy()
    for _ in range(k):
        out.append(v / d)
        v = np.stack([(2 * v[:, 0] + v[:, 1]) % d, (v[:, 0] + v[:, 1]) % d], axis=1)
    assert np.array_equal(v, pts), "not periodic"
    return out


def diag_rotation(coords, c, a, b):
    t = 2 * math.pi * (coords @ np.array(a) + b)
    e0, e1 = math.exp(c[0]), math.exp(c[1])
    m = np.zeros((len(t), 2, 2))
    m[:, 0, 0] = np.cos(t) * e0
    m[:, 0, 1] = -np.sin(t) * e1
    m[:, 1, 0] = np.sin(t) * e0
    m[:, 1, 1] = np.cos(t) * e1
    return m


def triangular(coords, dim, s, g, eta, a, b):
    h = g * (1 + eta * np.cos(2 * math.pi * (coords @ np.array(a) + b)))
    m = np.zeros((len(h), dim, dim))
    m[:, np.arange(dim), np.arange(dim)] = s
    m[:, np.arange(1, dim), np.arange(dim - 1)] = h[:, None]
    return m


def products(coords, make):
    p = None
    log_scale = np.zeros(len(coords[0]))
    for c in coords:
        a = make(c)
        p = a if p is None else a @ p
        s = np.abs(p).max(axis=(1, 2))
        p = p / s[:, None, None]
        log_scale += np.log(s)
    return p, log_scale


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("which", choices=["diag_rotation", "triangular"])
    ap.add_argument("--ks", type=int, nargs="+", required=True)
    ap.add_argument("--ref", type=float, nargs="+", required=True,
                    help="diag_rotation: ascending spectrum; triangular: lambda_plus")
    args = ap.parse_args()
    out = {}
    for k in args.ks:
        pts, d = fixed_points(k)
        coords = orbit_coords(pts, d, k)
        if args.which == "diag_rotation":
            p, ls = products(coords, lambda c: diag_rotation(c, (0.7, -0.7), (1.0, 0.0), 0.0))
            mods = np.sort(np.log(np.abs(np.linalg.eigvals(p))) + ls[:, None], axis=1) / k
            err = np.abs(mods - np.array(args.ref)[None, :]).max(axis=1)
            out[k] = {"points": int(d), "best_max_error": float(err.min())}
        else:
            p, ls = products(coords, lambda c: triangular(c, 20, 1.1, 1.0, 0.25, (1.0, 0.0), 0.0))
            norms = (np.log(np.linalg.norm(p, ord=2, axis=(1, 2))) + ls) / k
            radius = (np.log(np.abs(np.linalg.eigvals(p)).max(axis=1)) + ls) / k
            lp = args.ref[0]
            out[k] = {
                "points": int(d),
                "best_norm_plus_error": float(np.abs(norms - lp).min()),
                "best_radius_error": float(np.abs(radius - lp).min()),
            }
    print(json.dumps(out, indent=1))


if __name__ == "__main__":
    main()
