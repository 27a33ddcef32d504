"""Compiled kernels: grid bucketing, simplex clipping, point queries.

Coordinates are float64, indices int64. Everything here is pure and
allocation-light; Python-facing wrappers live in ``intersect.py``.
"""
import math
import warnings

import numba
import numpy as np

# an outdated system TBB only disables that backend; numba falls back to OpenMP/workqueue
warnings.filterwarnings("ignore", message="The TBB threading layer", category=numba.NumbaWarning)

# distance snapping for on-plane tests, relative to the local cell size
SNAP = 1e-13
# simplices whose measure is below this fraction of their polytope are dropped
SLIVER = 1e-12

MAXV = 64
MAXF = 32
MAXFV = 32
MAXS2 = 16
MAXS3 = 64
CHUNK = 256


# --------------------------------------------------------------------------
# uniform grid

@numba.njit(cache=True)
def _bucket_of(x, lo, size, dims, d):
    b = 0
    for k in range(d):
        c = int(math.floor((x[k] - lo[k]) / size))
        if c < 0:
            c = 0
        elif c >= dims[k]:
            c = dims[k] - 1
        b = b * dims[k] + c
    return b


@numba.njit(cache=True)
def _bucket_range(bmin, bmax, lo, size, dims, d, rlo, rhi):
    for k in range(d):
        c0 = int(math.floor((bmin[k] - lo[k]) / size))
        c1 = int(math.floor((bmax[k] - lo[k]) / size))
        if c0 < 0:
            c0 = 0
        if c1 >= dims[k]:
            c1 = dims[k] - 1
        if c0 > c1:
            return False
        rlo[k] = c0
        rhi[k] = c1
    return True


@numba.njit(cache=True)
def grid_build(boxes_lo, boxes_hi, lo, size, dims):
    """CSR bucket table: every box is listed in every bucket it overlaps."""
    n, d = boxes_lo.shape
    nb = 1
    for k in range(d):
        nb *= dims[k]
    counts = np.zeros(nb + 1, dtype=np.int64)
    rlo = np.zeros(d, dtype=np.int64)
    rhi = np.zeros(d, dtype=np.int64)
    cur = np.zeros(d, dtype=np.int64)
    for pass_ in range(2):
        if pass_ == 1:
            for b in range(nb):
                counts[b + 1] += counts[b]
            fill = counts[:-1].copy()
            items = np.empty(counts[nb], dtype=np.int64)
        for i in range(n):
            if not _bucket_range(boxes_lo[i], boxes_hi[i], lo, size, dims, d, rlo, rhi):
                continue
            for k in range(d):
                cur[k] = rlo[k]
            while True:
                b = 0
                for k in range(d):
                    b = b * dims[k] + cur[k]
                if pass_ == 0:
                    counts[b + 1] += 1
                else:
                    items[fill[b]] = i
                    fill[b] += 1
                k = d - 1
                while k >= 0:
                    cur[k] += 1
                    if cur[k] <= rhi[k]:
                        break
                    cur[k] = rlo[k]
                    k -= 1
                if k < 0:
                    break
    return counts, items


@numba.njit(cache=True)
def _boxes_overlap(alo, ahi, blo, bhi, d):
    for k in range(d):
        if alo[k] > bhi[k] or blo[k] > ahi[k]:
            return False
    return True


@numba.njit(cache=True)
def grid_query_pairs(qlo, qhi, blo, bhi, lo, size, dims, starts, items, write, offsets, out):
    """Box-overlap pairs (query i, indexed j).

    Each pair is reported once, from the bucket holding the lower corner of
    the two boxes' intersection. With ``write`` false only per-query counts
    are returned; otherwise pairs go to ``out`` at ``offsets``.
    """
    nq, d = qlo.shape
    counts = np.zeros(nq, dtype=np.int64)
    rlo = np.zeros(d, dtype=np.int64)
    rhi = np.zeros(d, dtype=np.int64)
    cur = np.zeros(d, dtype=np.int64)
    corner = np.zeros(d)
    for i in range(nq):
        if not _bucket_range(qlo[i], qhi[i], lo, size, dims, d, rlo, rhi):
            continue
        pos = offsets[i] if write else 0
        for k in range(d):
            cur[k] = rlo[k]
        while True:
            b = 0
            for k in range(d):
                b = b * dims[k] + cur[k]
            for t in range(starts[b], starts[b + 1]):
                j = items[t]
                if not _boxes_overlap(qlo[i], qhi[i], blo[j], bhi[j], d):
                    continue
                for k in range(d):
                    corner[k] = max(qlo[i, k], blo[j, k])
                if _bucket_of(corner, lo, size, dims, d) != b:
                    continue
                if write:
                    out[pos, 0] = i
                    out[pos, 1] = j
                    pos += 1
                counts[i] += 1
            k = d - 1
            while k >= 0:
                cur[k] += 1
                if cur[k] <= rhi[k]:
                    break
                cur[k] = rlo[k]
                k -= 1
            if k < 0:
                break
        if write:
            # canonical order within one query
            seg = np.sort(out[offsets[i]:pos, 1])
            for t in range(seg.shape[0]):
                out[offsets[i] + t, 1] = seg[t]
    return counts


# --------------------------------------------------------------------------
# small helpers

@numba.njit(cache=True)
def _tri_area2(p, q, r):
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


@numba.njit(cache=True)
def _tet_vol6(p, q, r, s):
    ax = q[0] - p[0]
    ay = q[1] - p[1]
    az = q[2] - p[2]
    bx = r[0] - p[0]
    by = r[1] - p[1]
    bz = r[2] - p[2]
    cx = s[0] - p[0]
    cy = s[1] - p[1]
    cz = s[2] - p[2]
    return ax * (by * cz - bz * cy) - ay * (bx * cz - bz * cx) + az * (bx * cy - by * cx)


@numba.njit(cache=True)
def _max_edge(c):
    k, d = c.shape
    best = 0.0
    for i in range(k):
        for j in range(i + 1, k):
            s = 0.0
            for t in range(d):
                s += (c[i, t] - c[j, t]) ** 2
            if s > best:
                best = s
    return math.sqrt(best)


@numba.njit(cache=True)
def _snap_to_parents(P, n, a, b, eps):
    # computed points that coincide with a parent vertex take its exact coordinates
    d = P.shape[1]
    for i in range(n):
        for src in range(2):
            c = a if src == 0 else b
            for v in range(c.shape[0]):
                s = 0.0
                for t in range(d):
                    s += (P[i, t] - c[v, t]) ** 2
                if s <= eps * eps:
                    for t in range(d):
                        P[i, t] = c[v, t]


# --------------------------------------------------------------------------
# 2D: triangle clipped by the three half-planes of another triangle

@numba.njit(cache=True)
def clip_tri(a, b, P, Q, dist):
    """Polygon ``a ∩ b`` written to P (counter-clockwise); returns vertex count."""
    scale = max(_max_edge(a), _max_edge(b))
    eps = SNAP * scale
    sb = 1.0 if _tri_area2(b[0], b[1], b[2]) > 0 else -1.0
    n = 3
    if _tri_area2(a[0], a[1], a[2]) > 0:
        for i in range(3):
            P[i, 0] = a[i, 0]
            P[i, 1] = a[i, 1]
    else:
        for i in range(3):
            P[i, 0] = a[2 - i, 0]
            P[i, 1] = a[2 - i, 1]
    for e in range(3):
        p0 = b[e]
        p1 = b[(e + 1) % 3]
        ex = p1[0] - p0[0]
        ey = p1[1] - p0[1]
        elen = math.sqrt(ex * ex + ey * ey)
        any_neg = False
        any_pos = False
        for i in range(n):
            s = sb * (ex * (P[i, 1] - p0[1]) - ey * (P[i, 0] - p0[0])) / elen
            if abs(s) <= eps:
                s = 0.0
            dist[i] = s
            if s < 0:
                any_neg = True
            elif s > 0:
                any_pos = True
        if not any_neg:
            continue
        if not any_pos:
            return 0
        m = 0
        for i in range(n):
            j = (i + 1) % n
            if dist[i] >= 0:
                Q[m, 0] = P[i, 0]
                Q[m, 1] = P[i, 1]
                m += 1
            if (dist[i] > 0 and dist[j] < 0) or (dist[i] < 0 and dist[j] > 0):
                t = dist[i] / (dist[i] - dist[j])
                Q[m, 0] = P[i, 0] + t * (P[j, 0] - P[i, 0])
                Q[m, 1] = P[i, 1] + t * (P[j, 1] - P[i, 1])
                m += 1
        n = m
        for i in range(n):
            P[i, 0] = Q[i, 0]
            P[i, 1] = Q[i, 1]
        if n < 3:
            return 0
    _snap_to_parents(P, n, a, b, 10 * eps)
    return n


@numba.njit(cache=True)
def polygon_area(P, n):
    s = 0.0
    for i in range(n):
        j = (i + 1) % n
        s += P[i, 0] * P[j, 1] - P[j, 0] * P[i, 1]
    return 0.5 * s


@numba.njit(cache=True)
def fan_polygon(P, n, out):
    """Fan from vertex 0; sliver triangles are dropped. Returns count."""
    area = polygon_area(P, n)
    k = 0
    for i in range(1, n - 1):
        tri2 = _tri_area2(P[0], P[i], P[i + 1])
        if 0.5 * tri2 <= SLIVER * area:
            continue
        for t in range(2):
            out[k, 0, t] = P[0, t]
            out[k, 1, t] = P[i, t]
            out[k, 2, t] = P[i + 1, t]
        k += 1
    return k


@numba.njit(cache=True)
def _tri_measure(c):
    return 0.5 * abs(_tri_area2(c[0], c[1], c[2]))


@numba.njit(cache=True)
def _tet_measure(c):
    return abs(_tet_vol6(c[0], c[1], c[2], c[3])) / 6.0


# --------------------------------------------------------------------------
# 3D: tetrahedron clipped by the four half-spaces of another tetrahedron

@numba.njit(cache=True)
def _init_tet_polytope(a, V, flen, fidx):
    for i in range(4):
        for t in range(3):
            V[i, t] = a[i, t]
    # faces opposite each vertex
    fidx[0, 0], fidx[0, 1], fidx[0, 2] = 1, 2, 3
    fidx[1, 0], fidx[1, 1], fidx[1, 2] = 0, 3, 2
    fidx[2, 0], fidx[2, 1], fidx[2, 2] = 0, 1, 3
    fidx[3, 0], fidx[3, 1], fidx[3, 2] = 0, 2, 1
    for f in range(4):
        flen[f] = 3
    return 4, 4


@numba.njit(cache=True)
def _clip_plane(V, nv, flen, fidx, nf, nrm, p0, eps, V2, flen2, fidx2, dist, remap, ekey, cap, ang):
    """One half-space cut. Returns (nv2, nf2); nv2 == -1 means unchanged, 0 means empty."""
    any_neg = False
    any_pos = False
    for i in range(nv):
        s = nrm[0] * (V[i, 0] - p0[0]) + nrm[1] * (V[i, 1] - p0[1]) + nrm[2] * (V[i, 2] - p0[2])
        if abs(s) <= eps:
            s = 0.0
        dist[i] = s
        if s < 0:
            any_neg = True
        elif s > 0:
            any_pos = True
    if not any_neg:
        return -1, nf
    if not any_pos:
        return 0, 0
    nv2 = 0
    ncap = 0
    for i in range(nv):
        if dist[i] >= 0:
            for t in range(3):
                V2[nv2, t] = V[i, t]
            remap[i] = nv2
            if dist[i] == 0:
                cap[ncap] = nv2
                ncap += 1
            nv2 += 1
        else:
            remap[i] = -1
    ne = 0
    nf2 = 0
    for f in range(nf):
        m = 0
        L = flen[f]
        for s_ in range(L):
            i = fidx[f, s_]
            j = fidx[f, (s_ + 1) % L]
            if dist[i] >= 0:
                fidx2[nf2, m] = remap[i]
                m += 1
            if (dist[i] > 0 and dist[j] < 0) or (dist[i] < 0 and dist[j] > 0):
                lo = min(i, j)
                hi = max(i, j)
                found = -1
                for e in range(ne):
                    if ekey[e, 0] == lo and ekey[e, 1] == hi:
                        found = ekey[e, 2]
                        break
                if found < 0:
                    if nv2 >= MAXV:
                        return 0, 0
                    t_ = dist[lo] / (dist[lo] - dist[hi])
                    for t in range(3):
                        V2[nv2, t] = V[lo, t] + t_ * (V[hi, t] - V[lo, t])
                    found = nv2
                    nv2 += 1
                    ekey[ne, 0] = lo
                    ekey[ne, 1] = hi
                    ekey[ne, 2] = found
                    ne += 1
                    cap[ncap] = found
                    ncap += 1
                fidx2[nf2, m] = found
                m += 1
        if m >= 3:
            flen2[nf2] = m
            nf2 += 1
    if ncap >= 3 and nf2 < MAXF:
        cx = 0.0
        cy = 0.0
        cz = 0.0
        for k in range(ncap):
            cx += V2[cap[k], 0]
            cy += V2[cap[k], 1]
            cz += V2[cap[k], 2]
        cx /= ncap
        cy /= ncap
        cz /= ncap
        ux = V2[cap[0], 0] - cx
        uy = V2[cap[0], 1] - cy
        uz = V2[cap[0], 2] - cz
        wx = nrm[1] * uz - nrm[2] * uy
        wy = nrm[2] * ux - nrm[0] * uz
        wz = nrm[0] * uy - nrm[1] * ux
        for k in range(ncap):
            qx = V2[cap[k], 0] - cx
            qy = V2[cap[k], 1] - cy
            qz = V2[cap[k], 2] - cz
            ang[k] = math.atan2(qx * wx + qy * wy + qz * wz, qx * ux + qy * uy + qz * uz)
        for k in range(1, ncap):
            key = ang[k]
            idx = cap[k]
            j = k - 1
            while j >= 0 and ang[j] > key:
                ang[j + 1] = ang[j]
                cap[j + 1] = cap[j]
                j -= 1
            ang[j + 1] = key
            cap[j + 1] = idx
        for k in range(ncap):
            fidx2[nf2, k] = cap[k]
        flen2[nf2] = ncap
        nf2 += 1
    return nv2, nf2


@numba.njit(cache=True)
def clip_tet(a, b, W):
    """Polytope ``a ∩ b``. Returns (nv, nf, which) where ``which`` selects the work buffer holding it."""
    V, flen, fidx, V2, flen2, fidx2, dist, remap, ekey, cap, ang = W
    scale = max(_max_edge(a), _max_edge(b))
    eps = SNAP * scale
    nv, nf = _init_tet_polytope(a, V, flen, fidx)
    nrm = np.empty(3)
    which = 0
    for k in range(4):
        f0 = b[(k + 1) % 4]
        f1 = b[(k + 2) % 4]
        f2 = b[(k + 3) % 4]
        ux = f1[0] - f0[0]
        uy = f1[1] - f0[1]
        uz = f1[2] - f0[2]
        vx = f2[0] - f0[0]
        vy = f2[1] - f0[1]
        vz = f2[2] - f0[2]
        nrm[0] = uy * vz - uz * vy
        nrm[1] = uz * vx - ux * vz
        nrm[2] = ux * vy - uy * vx
        side = nrm[0] * (b[k, 0] - f0[0]) + nrm[1] * (b[k, 1] - f0[1]) + nrm[2] * (b[k, 2] - f0[2])
        norm = math.sqrt(nrm[0] ** 2 + nrm[1] ** 2 + nrm[2] ** 2)
        if side < 0:
            norm = -norm
        for t in range(3):
            nrm[t] /= norm
        if which == 0:
            nv2, nf2 = _clip_plane(V, nv, flen, fidx, nf, nrm, f0, eps, V2, flen2, fidx2, dist, remap, ekey, cap, ang)
        else:
            nv2, nf2 = _clip_plane(V2, nv, flen2, fidx2, nf, nrm, f0, eps, V, flen, fidx, dist, remap, ekey, cap, ang)
        if nv2 == 0:
            return 0, 0, which
        if nv2 > 0:
            nv = nv2
            nf = nf2
            which = 1 - which
            if nf < 4:
                return 0, 0, which
    if which == 0:
        _snap_to_parents(V, nv, a, b, 10 * eps)
    else:
        _snap_to_parents(V2, nv, a, b, 10 * eps)
    return nv, nf, which


def make_work3():
    return _make_work3()


@numba.njit(cache=True)
def _make_work3():
    return (
        np.empty((MAXV, 3)), np.empty(MAXF, dtype=np.int64), np.empty((MAXF, MAXFV), dtype=np.int64),
        np.empty((MAXV, 3)), np.empty(MAXF, dtype=np.int64), np.empty((MAXF, MAXFV), dtype=np.int64),
        np.empty(MAXV), np.empty(MAXV, dtype=np.int64), np.empty((4 * MAXV, 3), dtype=np.int64),
        np.empty(MAXV, dtype=np.int64), np.empty(MAXV),
    )


@numba.njit(cache=True)
def polytope_volume(V, nv, flen, fidx, nf):
    cx = 0.0
    cy = 0.0
    cz = 0.0
    for i in range(nv):
        cx += V[i, 0]
        cy += V[i, 1]
        cz += V[i, 2]
    c = np.array([cx / nv, cy / nv, cz / nv])
    vol = 0.0
    for f in range(nf):
        for s in range(1, flen[f] - 1):
            vol += abs(_tet_vol6(c, V[fidx[f, 0]], V[fidx[f, s]], V[fidx[f, s + 1]]))
    return vol / 6.0


@numba.njit(cache=True)
def fan_polytope(V, nv, flen, fidx, nf, apex_mode, out):
    """Tetrahedralise a convex polytope.

    ``apex_mode`` 1 fans from vertex 0 over the faces not containing it;
    0 fans from the vertex centroid over every face. Slivers are dropped.
    """
    vol = polytope_volume(V, nv, flen, fidx, nf)
    if nv == 4 and nf == 4:
        apex_mode = 1
    c = np.empty(3)
    if apex_mode == 1:
        for t in range(3):
            c[t] = V[0, t]
    else:
        for t in range(3):
            c[t] = 0.0
            for i in range(nv):
                c[t] += V[i, t]
            c[t] /= nv
    k = 0
    for f in range(nf):
        L = flen[f]
        if apex_mode == 1:
            has_apex = False
            for s in range(L):
                if fidx[f, s] == 0:
                    has_apex = True
            if has_apex:
                continue
        for s in range(1, L - 1):
            p = V[fidx[f, 0]]
            q = V[fidx[f, s]]
            r = V[fidx[f, s + 1]]
            v6 = _tet_vol6(c, p, q, r)
            if abs(v6) / 6.0 <= SLIVER * vol:
                continue
            if k >= out.shape[0]:
                return -1
            for t in range(3):
                out[k, 0, t] = c[t]
                if v6 > 0:
                    out[k, 1, t] = p[t]
                    out[k, 2, t] = q[t]
                else:
                    out[k, 1, t] = q[t]
                    out[k, 2, t] = p[t]
                out[k, 3, t] = r[t]
            k += 1
    return k


# --------------------------------------------------------------------------
# batched pair processing

@numba.njit(cache=True)
def _orient_tri(out, k):
    for s in range(k):
        if _tri_area2(out[s, 0], out[s, 1], out[s, 2]) < 0:
            for t in range(2):
                tmp = out[s, 1, t]
                out[s, 1, t] = out[s, 2, t]
                out[s, 2, t] = tmp


@numba.njit(parallel=True, cache=True)
def pairs_2d(ac, bc, am, bm, pairs, rtol, write, offsets, counts, measures, out):
    """Clip + triangulate every pair. Count pass fills ``counts``/``measures``;
    the write pass copies simplices to ``out`` at ``offsets``."""
    npairs = pairs.shape[0]
    nchunks = (npairs + CHUNK - 1) // CHUNK
    for c in numba.prange(nchunks):
        P = np.empty((MAXV, 2))
        Q = np.empty((MAXV, 2))
        dist = np.empty(MAXV)
        tris = np.empty((MAXS2, 3, 2))
        for p in range(c * CHUNK, min((c + 1) * CHUNK, npairs)):
            if write and counts[p] == 0:
                continue
            ia = pairs[p, 0]
            ib = pairs[p, 1]
            n = clip_tri(ac[ia], bc[ib], P, Q, dist)
            area = polygon_area(P, n) if n >= 3 else 0.0
            if area <= rtol * min(am[ia], bm[ib]):
                if not write:
                    counts[p] = 0
                    measures[p] = 0.0
                continue
            k = fan_polygon(P, n, tris)
            if not write:
                counts[p] = k
                measures[p] = area
            else:
                _orient_tri(tris, k)
                o = offsets[p]
                for s in range(k):
                    out[o + s] = tris[s]


@numba.njit(parallel=True, cache=True)
def pairs_3d(ac, bc, am, bm, pairs, rtol, write, offsets, counts, measures, out, apex_mode):
    npairs = pairs.shape[0]
    nchunks = (npairs + CHUNK - 1) // CHUNK
    for c in numba.prange(nchunks):
        W = _make_work3()
        tets = np.empty((MAXS3, 4, 3))
        for p in range(c * CHUNK, min((c + 1) * CHUNK, npairs)):
            if write and counts[p] == 0:
                continue
            ia = pairs[p, 0]
            ib = pairs[p, 1]
            nv, nf, which = clip_tet(ac[ia], bc[ib], W)
            vol = 0.0
            if nv > 0:
                if which == 0:
                    vol = polytope_volume(W[0], nv, W[1], W[2], nf)
                else:
                    vol = polytope_volume(W[3], nv, W[4], W[5], nf)
            if vol <= rtol * min(am[ia], bm[ib]):
                if not write:
                    counts[p] = 0
                    measures[p] = 0.0
                continue
            if which == 0:
                k = fan_polytope(W[0], nv, W[1], W[2], nf, apex_mode, tets)
            else:
                k = fan_polytope(W[3], nv, W[4], W[5], nf, apex_mode, tets)
            if not write:
                counts[p] = k
                measures[p] = vol
            else:
                o = offsets[p]
                for s in range(k):
                    out[o + s] = tets[s]


@numba.njit(parallel=True, cache=True)
def all_pairs_measure_2d(ac, bc, am, bm, rtol):
    """Exhaustive clipping of every (a, b) combination; the brute-force oracle."""
    na = ac.shape[0]
    nb = bc.shape[0]
    hit = np.zeros((na, nb), dtype=np.bool_)
    for i in numba.prange(na):
        P = np.empty((MAXV, 2))
        Q = np.empty((MAXV, 2))
        dist = np.empty(MAXV)
        for j in range(nb):
            n = clip_tri(ac[i], bc[j], P, Q, dist)
            if n >= 3 and polygon_area(P, n) > rtol * min(am[i], bm[j]):
                hit[i, j] = True
    return hit


@numba.njit(parallel=True, cache=True)
def all_pairs_measure_3d(ac, bc, am, bm, rtol):
    na = ac.shape[0]
    nb = bc.shape[0]
    hit = np.zeros((na, nb), dtype=np.bool_)
    for i in numba.prange(na):
        W = _make_work3()
        for j in range(nb):
            nv, nf, which = clip_tet(ac[i], bc[j], W)
            if nv == 0:
                continue
            if which == 0:
                vol = polytope_volume(W[0], nv, W[1], W[2], nf)
            else:
                vol = polytope_volume(W[3], nv, W[4], W[5], nf)
            if vol > rtol * min(am[i], bm[j]):
                hit[i, j] = True
    return hit


# --------------------------------------------------------------------------
# point queries

@numba.njit(cache=True)
def _bary_min(c, x):
    d = x.shape[0]
    if d == 2:
        det = _tri_area2(c[0], c[1], c[2])
        l1 = _tri_area2(c[0], x, c[2]) / det
        l2 = _tri_area2(c[0], c[1], x) / det
        return min(1.0 - l1 - l2, min(l1, l2))
    det = _tet_vol6(c[0], c[1], c[2], c[3])
    l1 = _tet_vol6(c[0], x, c[2], c[3]) / det
    l2 = _tet_vol6(c[0], c[1], x, c[3]) / det
    l3 = _tet_vol6(c[0], c[1], c[2], x) / det
    return min(min(1.0 - l1 - l2 - l3, l1), min(l2, l3))


@numba.njit(parallel=True, cache=True)
def locate_points(points, cc, lo, size, dims, starts, items, tol):
    """Per point: number of cells with all barycentric coordinates >= -tol, and the first such cell."""
    n, d = points.shape
    count = np.zeros(n, dtype=np.int64)
    first = np.full(n, -1, dtype=np.int64)
    for i in numba.prange(n):
        x = points[i]
        inside = True
        for k in range(d):
            if x[k] < lo[k] or x[k] > lo[k] + size * dims[k]:
                inside = False
        if not inside:
            continue
        b = _bucket_of(x, lo, size, dims, d)
        for t in range(starts[b], starts[b + 1]):
            j = items[t]
            if _bary_min(cc[j], x) >= -tol:
                if first[i] < 0 or j < first[i]:
                    first[i] = j
                count[i] += 1
    return count, first


@numba.njit(cache=True)
def _seg_dist2(x, p, q):
    d = x.shape[0]
    num = 0.0
    den = 0.0
    for k in range(d):
        num += (x[k] - p[k]) * (q[k] - p[k])
        den += (q[k] - p[k]) ** 2
    t = 0.0 if den == 0 else min(max(num / den, 0.0), 1.0)
    s = 0.0
    for k in range(d):
        s += (x[k] - p[k] - t * (q[k] - p[k])) ** 2
    return s


@numba.njit(cache=True)
def _tri3_dist2(x, a, b, c):
    # closest point on a 3D triangle (region tests on barycentric parameters)
    ab = b - a
    ac = c - a
    ap = x - a
    d1 = ab @ ap
    d2 = ac @ ap
    if d1 <= 0 and d2 <= 0:
        return ap @ ap
    bp = x - b
    d3 = ab @ bp
    d4 = ac @ bp
    if d3 >= 0 and d4 <= d3:
        return bp @ bp
    vc = d1 * d4 - d3 * d2
    if vc <= 0 and d1 >= 0 and d3 <= 0:
        return _seg_dist2(x, a, b)
    cp = x - c
    d5 = ab @ cp
    d6 = ac @ cp
    if d6 >= 0 and d5 <= d6:
        return cp @ cp
    vb = d5 * d2 - d1 * d6
    if vb <= 0 and d2 >= 0 and d6 <= 0:
        return _seg_dist2(x, a, c)
    va = d3 * d6 - d5 * d4
    if va <= 0 and (d4 - d3) >= 0 and (d5 - d6) >= 0:
        return _seg_dist2(x, b, c)
    den = 1.0 / (va + vb + vc)
    v = vb * den
    w = vc * den
    r = ap - v * ab - w * ac
    return r @ r


@numba.njit(cache=True)
def point_simplex_distance(x, c):
    """Euclidean distance from point ``x`` to the closed simplex ``c``."""
    d = x.shape[0]
    if _bary_min(c, x) >= 0:
        return 0.0
    best = np.inf
    if d == 2:
        for i in range(3):
            best = min(best, _seg_dist2(x, c[i], c[(i + 1) % 3]))
    else:
        for i in range(4):
            best = min(best, _tri3_dist2(x, c[(i + 1) % 4], c[(i + 2) % 4], c[(i + 3) % 4]))
    return math.sqrt(best)


@numba.njit(parallel=True, cache=True)
def within_distance(points, cc, lo, size, dims, starts, items, delta):
    """True where a point lies within ``delta`` of some indexed simplex.

    The index must be built on simplex boxes padded by ``delta``.
    """
    n, d = points.shape
    hit = np.zeros(n, dtype=np.bool_)
    for i in numba.prange(n):
        x = points[i]
        inside = True
        for k in range(d):
            if x[k] < lo[k] or x[k] > lo[k] + size * dims[k]:
                inside = False
        if not inside:
            continue
        b = _bucket_of(x, lo, size, dims, d)
        for t in range(starts[b], starts[b + 1]):
            if point_simplex_distance(x, cc[items[t]]) <= delta:
                hit[i] = True
                break
    return hit
