"""Compiled rasterisation kernels.

The perspective pass writes only view-space depth, owning triangle and
instance id per pixel; colour is resolved afterwards by :func:`shade`.
Pixels are sampled at their centres and a pixel is covered when all three
edge functions are non-negative. Depth ties go to the lower instance id,
then to the earlier triangle.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _edge(ax, ay, bx, by, px, py):
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


@njit(cache=True)
def _raster_tri(sx, sy, iz, tri_index, inst, W, H, zbuf, tri_buf, id_buf):
    area = _edge(sx[0], sy[0], sx[1], sy[1], sx[2], sy[2])
    if abs(area) < 1e-12:
        return
    inv_area = 1.0 / area
    xmin = min(sx[0], min(sx[1], sx[2]))
    xmax = max(sx[0], max(sx[1], sx[2]))
    ymin = min(sy[0], min(sy[1], sy[2]))
    ymax = max(sy[0], max(sy[1], sy[2]))
    j0 = max(0, int(math.ceil(xmin - 0.5)))
    j1 = min(W - 1, int(math.floor(xmax - 0.5)))
    i0 = max(0, int(math.ceil(ymin - 0.5)))
    i1 = min(H - 1, int(math.floor(ymax - 0.5)))
    for i in range(i0, i1 + 1):
        py = i + 0.5
        for j in range(j0, j1 + 1):
            px = j + 0.5
            w0 = _edge(sx[1], sy[1], sx[2], sy[2], px, py) * inv_area
            if w0 < 0.0:
                continue
            w1 = _edge(sx[2], sy[2], sx[0], sy[0], px, py) * inv_area
            if w1 < 0.0:
                continue
            w2 = 1.0 - w0 - w1
            if w2 < 0.0:
                continue
            inv_z = w0 * iz[0] + w1 * iz[1] + w2 * iz[2]
            if inv_z <= 0.0:
                continue
            z = 1.0 / inv_z
            cur = zbuf[i, j]
            if z < cur or (z == cur and inst < id_buf[i, j]):
                zbuf[i, j] = z
                tri_buf[i, j] = tri_index
                id_buf[i, j] = inst


@njit(cache=True)
def rasterize(tris, inst_ids, rot, cam_pos, f, cx, cy, W, H, near, zbuf, tri_buf, id_buf):
    """Perspective z-buffer pass over world-space triangles ``tris`` (M, 3, 3)."""
    M = tris.shape[0]
    cam = np.empty((3, 3))
    poly = np.empty((4, 3))
    sx = np.empty(3)
    sy = np.empty(3)
    iz = np.empty(3)
    # frustum half-extents (slightly padded) in normalised image coords
    tx = (cx + 2.0) / f
    ty = (cy + 2.0) / f
    for m in range(M):
        n_front = 0
        for k in range(3):
            dx = tris[m, k, 0] - cam_pos[0]
            dy = tris[m, k, 1] - cam_pos[1]
            dz = tris[m, k, 2] - cam_pos[2]
            for r in range(3):
                cam[k, r] = rot[r, 0] * dx + rot[r, 1] * dy + rot[r, 2] * dz
            if cam[k, 2] >= near:
                n_front += 1
        if n_front == 0:
            continue
        if n_front == 3:
            # whole triangle outside one side plane
            out = True
            for k in range(3):
                if cam[k, 0] <= tx * cam[k, 2]:
                    out = False
            if out:
                continue
            out = True
            for k in range(3):
                if cam[k, 0] >= -tx * cam[k, 2]:
                    out = False
            if out:
                continue
            out = True
            for k in range(3):
                if cam[k, 1] <= ty * cam[k, 2]:
                    out = False
            if out:
                continue
            out = True
            for k in range(3):
                if cam[k, 1] >= -ty * cam[k, 2]:
                    out = False
            if out:
                continue
            for k in range(3):
                iz[k] = 1.0 / cam[k, 2]
                sx[k] = cx + f * cam[k, 0] * iz[k]
                sy[k] = cy - f * cam[k, 1] * iz[k]
            _raster_tri(sx, sy, iz, m, inst_ids[m], W, H, zbuf, tri_buf, id_buf)
            continue
        # clip against the near plane (Sutherland-Hodgman, one plane)
        n_poly = 0
        for k in range(3):
            a = cam[k]
            b = cam[(k + 1) % 3]
            a_in = a[2] >= near
            b_in = b[2] >= near
            if a_in:
                poly[n_poly, 0] = a[0]
                poly[n_poly, 1] = a[1]
                poly[n_poly, 2] = a[2]
                n_poly += 1
            if a_in != b_in:
                t = (near - a[2]) / (b[2] - a[2])
                poly[n_poly, 0] = a[0] + t * (b[0] - a[0])
                poly[n_poly, 1] = a[1] + t * (b[1] - a[1])
                poly[n_poly, 2] = near
                n_poly += 1
        for fan in range(1, n_poly - 1):
            for k in range(3):
                idx = 0 if k == 0 else fan + k - 1
                iz[k] = 1.0 / poly[idx, 2]
                sx[k] = cx + f * poly[idx, 0] * iz[k]
                sy[k] = cy - f * poly[idx, 1] * iz[k]
            _raster_tri(sx, sy, iz, m, inst_ids[m], W, H, zbuf, tri_buf, id_buf)


@njit(cache=True)
def rasterize_shadow(tris, light_rot, origin_u, origin_v, texel, size, smap):
    """Orthographic depth-only pass along the light direction.

    ``light_rot`` rows are (u, v, d): two axes spanning the map plane and the
    direction light travels. ``smap`` keeps the minimum ``d`` per texel.
    """
    M = tris.shape[0]
    su = np.empty(3)
    sv = np.empty(3)
    sd = np.empty(3)
    for m in range(M):
        for k in range(3):
            x = tris[m, k, 0]
            y = tris[m, k, 1]
            z = tris[m, k, 2]
            su[k] = (light_rot[0, 0] * x + light_rot[0, 1] * y + light_rot[0, 2] * z - origin_u) / texel
            sv[k] = (light_rot[1, 0] * x + light_rot[1, 1] * y + light_rot[1, 2] * z - origin_v) / texel
            sd[k] = light_rot[2, 0] * x + light_rot[2, 1] * y + light_rot[2, 2] * z
        area = _edge(su[0], sv[0], su[1], sv[1], su[2], sv[2])
        if abs(area) < 1e-12:
            continue
        inv_area = 1.0 / area
        j0 = max(0, int(math.ceil(min(su[0], min(su[1], su[2])) - 0.5)))
        j1 = min(size - 1, int(math.floor(max(su[0], max(su[1], su[2])) - 0.5)))
        i0 = max(0, int(math.ceil(min(sv[0], min(sv[1], sv[2])) - 0.5)))
        i1 = min(size - 1, int(math.floor(max(sv[0], max(sv[1], sv[2])) - 0.5)))
        for i in range(i0, i1 + 1):
            py = i + 0.5
            for j in range(j0, j1 + 1):
                px = j + 0.5
                w0 = _edge(su[1], sv[1], su[2], sv[2], px, py) * inv_area
                if w0 < 0.0:
                    continue
                w1 = _edge(su[2], sv[2], su[0], sv[0], px, py) * inv_area
                if w1 < 0.0:
                    continue
                w2 = 1.0 - w0 - w1
                if w2 < 0.0:
                    continue
                d = w0 * sd[0] + w1 * sd[1] + w2 * sd[2]
                if d < smap[i, j]:
                    smap[i, j] = d


@njit(cache=True)
def shade(zbuf, tri_buf, normals, albedo, parts, rot, cam_pos, f, cx, cy,
          sun_dir, sun_color, sun_intensity, ambient, sky_horizon, sky_zenith,
          use_shadow, light_rot, origin_u, origin_v, texel, smap, shadow_bias,
          rgb, depth_m, surface, up_facing):
    """Resolve colour, ray depth, surface part and upward-facing weight per pixel."""
    H, W = zbuf.shape
    size = smap.shape[0]
    for i in range(H):
        ry = (cy - (i + 0.5)) / f
        for j in range(W):
            rx = (j + 0.5 - cx) / f
            # world ray with unit forward component
            dx = rot[0, 0] * rx + rot[1, 0] * ry + rot[2, 0]
            dy = rot[0, 1] * rx + rot[1, 1] * ry + rot[2, 1]
            dz = rot[0, 2] * rx + rot[1, 2] * ry + rot[2, 2]
            ray_len = math.sqrt(dx * dx + dy * dy + dz * dz)
            t = tri_buf[i, j]
            if t < 0:
                elev = dz / ray_len
                s = max(0.0, min(1.0, elev * 2.0))
                for c in range(3):
                    rgb[i, j, c] = sky_horizon[c] + (sky_zenith[c] - sky_horizon[c]) * s
                depth_m[i, j] = np.inf
                surface[i, j] = 0
                up_facing[i, j] = 0.0
                continue
            z = zbuf[i, j]
            depth_m[i, j] = z * ray_len
            nx = normals[t, 0]
            ny = normals[t, 1]
            nz = normals[t, 2]
            # two-sided: face the normal towards the viewer
            if nx * dx + ny * dy + nz * dz > 0.0:
                nx = -nx
                ny = -ny
                nz = -nz
            ndl = nx * sun_dir[0] + ny * sun_dir[1] + nz * sun_dir[2]
            lit = 0.0
            if ndl > 0.0 and sun_intensity > 0.0:
                lit = ndl
                if use_shadow:
                    px = cam_pos[0] + dx * z
                    py = cam_pos[1] + dy * z
                    pz = cam_pos[2] + dz * z
                    lu = (light_rot[0, 0] * px + light_rot[0, 1] * py + light_rot[0, 2] * pz - origin_u) / texel
                    lv = (light_rot[1, 0] * px + light_rot[1, 1] * py + light_rot[1, 2] * pz - origin_v) / texel
                    ld = light_rot[2, 0] * px + light_rot[2, 1] * py + light_rot[2, 2] * pz
                    ju = int(math.floor(lu))
                    iv = int(math.floor(lv))
                    if 0 <= ju < size and 0 <= iv < size:
                        tan_term = math.sqrt(max(0.0, 1.0 - ndl * ndl)) / max(ndl, 0.1)
                        bias = shadow_bias + 1.5 * texel * tan_term
                        if ld - bias > smap[iv, ju]:
                            lit = 0.0
            for c in range(3):
                light = ambient[c] + sun_intensity * sun_color[c] * lit
                rgb[i, j, c] = albedo[t, c] * light
            p = parts[t]
            surface[i, j] = p
            # snow settles on terrain and crown surfaces only
            if (p == 1 or p == 4) and nz > 0.0:
                up_facing[i, j] = nz
            else:
                up_facing[i, j] = 0.0
