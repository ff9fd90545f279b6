"""Planar convex geometry: shapes, contact manifolds, exact pair distances.

Conventions used throughout the package:

* polygon vertices are counter-clockwise, in meters;
* contact normals point from the first body of a pair into the second;
* penetration is positive overlap, and exact touching (zero depth) counts
  as contact;
* polygon-polygon manifolds come from reference-face clipping and carry at
  most two points.

The per-step routines (``contact_*``) deliberately work on plain floats and
tuples: they sit inside the simulator's inner loop and must stay cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

Vec2 = tuple[float, float]

# Separations up to this value still produce a contact point, so that exact
# resting placement (zero gap) is detected on the first step.
TOUCH_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Circle:
    """Circular shape centered on the body origin."""

    radius: float


@dataclass(frozen=True)
class ConvexPolygon:
    """Convex polygon given as a CCW vertex list in the body frame."""

    vertices: tuple[Vec2, ...]


Shape = Circle | ConvexPolygon


def box(half_width: float, half_height: float) -> ConvexPolygon:
    """Axis-aligned box centered on the origin."""
    hw, hh = float(half_width), float(half_height)
    return ConvexPolygon(((-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)))


def polygon_area_centroid(vertices: tuple[Vec2, ...]) -> tuple[float, Vec2]:
    """Signed area (positive for CCW) and centroid of a simple polygon."""
    area2 = 0.0
    cx = 0.0
    cy = 0.0
    n = len(vertices)
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        w = x0 * y1 - x1 * y0
        area2 += w
        cx += (x0 + x1) * w
        cy += (y0 + y1) * w
    if abs(area2) < 1e-18:
        return 0.0, (0.0, 0.0)
    area = 0.5 * area2
    return area, (cx / (3.0 * area2), cy / (3.0 * area2))


def check_convex_ccw(vertices: tuple[Vec2, ...]) -> None:
    """Raise ValueError unless vertices form a strictly convex CCW polygon."""
    n = len(vertices)
    if n < 3:
        raise ValueError("polygon needs at least 3 vertices")
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        x2, y2 = vertices[(i + 2) % n]
        cross = (x1 - x0) * (y2 - y1) - (y1 - y0) * (x2 - x1)
        if cross <= 1e-12:
            if abs(cross) <= 1e-12:
                raise ValueError("degenerate shape: collinear or duplicate vertices")
            raise ValueError("polygon vertices must be convex and counter-clockwise")


def edge_normals(vertices: tuple[Vec2, ...]) -> tuple[Vec2, ...]:
    """Outward unit normals, one per CCW edge (edge i runs vertex i -> i+1)."""
    n = len(vertices)
    normals = []
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        ex, ey = x1 - x0, y1 - y0
        length = math.hypot(ex, ey)
        normals.append((ey / length, -ex / length))
    return tuple(normals)


def min_half_width(shape: Shape) -> float:
    """Smallest half-extent of the shape, used by the tunneling guard."""
    if isinstance(shape, Circle):
        return shape.radius
    verts = shape.vertices
    best = math.inf
    for nx, ny in edge_normals(verts):
        lo = math.inf
        hi = -math.inf
        for vx, vy in verts:
            p = vx * nx + vy * ny
            if p < lo:
                lo = p
            if p > hi:
                hi = p
        if hi - lo < best:
            best = hi - lo
    return 0.5 * best


def effective_spin_radius(shape: Shape) -> float:
    """Lever arm of distributed planar friction torque (uniform pressure).

    For a disk of radius R the exact value is 2R/3; polygons use the same
    2/3 factor on the mean vertex distance from the centroid.
    """
    if isinstance(shape, Circle):
        return 2.0 * shape.radius / 3.0
    verts = shape.vertices
    _, (cx, cy) = polygon_area_centroid(verts)
    mean_r = sum(math.hypot(x - cx, y - cy) for x, y in verts) / len(verts)
    return 2.0 * mean_r / 3.0


def transform_polygon(
    vertices: tuple[Vec2, ...], x: float, y: float, cos_t: float, sin_t: float
) -> list[Vec2]:
    """Body-frame vertices to world frame."""
    return [
        (x + vx * cos_t - vy * sin_t, y + vx * sin_t + vy * cos_t)
        for vx, vy in vertices
    ]


def transform_normals(
    normals: tuple[Vec2, ...], cos_t: float, sin_t: float
) -> list[Vec2]:
    return [(nx * cos_t - ny * sin_t, nx * sin_t + ny * cos_t) for nx, ny in normals]


# ---------------------------------------------------------------------------
# Contact manifolds.  Each contact point is (px, py, nx, ny, penetration)
# with the normal pointing from shape A into shape B.
# ---------------------------------------------------------------------------


def contact_circle_circle(
    ax: float, ay: float, ra: float, bx: float, by: float, rb: float
) -> list[tuple[float, float, float, float, float]]:
    dx = bx - ax
    dy = by - ay
    d = math.hypot(dx, dy)
    sep = d - ra - rb
    if sep > TOUCH_TOLERANCE:
        return []
    if d > 1e-12:
        nx, ny = dx / d, dy / d
    else:
        nx, ny = 0.0, 1.0
    px = ax + nx * ra
    py = ay + ny * ra
    return [(px, py, nx, ny, -sep if sep < 0.0 else 0.0)]


def contact_circle_polygon(
    cx: float,
    cy: float,
    r: float,
    verts: list[Vec2],
    normals: list[Vec2],
    flip: bool,
) -> list[tuple[float, float, float, float, float]]:
    """Circle (A) versus world-frame polygon (B); flip=True swaps roles."""
    n = len(verts)
    best_sep = -math.inf
    best_i = 0
    for i in range(n):
        nx, ny = normals[i]
        vx, vy = verts[i]
        sep = (cx - vx) * nx + (cy - vy) * ny
        if sep > best_sep:
            best_sep = sep
            best_i = i
    if best_sep > r + TOUCH_TOLERANCE:
        return []
    v1 = verts[best_i]
    v2 = verts[(best_i + 1) % n]
    if best_sep < 1e-12:
        # Center inside the polygon: push out along the least-penetrated face.
        nx, ny = normals[best_i]
        pen = r - best_sep
        px, py = cx - nx * best_sep, cy - ny * best_sep
    else:
        ex, ey = v2[0] - v1[0], v2[1] - v1[1]
        t = ((cx - v1[0]) * ex + (cy - v1[1]) * ey) / (ex * ex + ey * ey)
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        qx, qy = v1[0] + t * ex, v1[1] + t * ey
        dx, dy = cx - qx, cy - qy
        d = math.hypot(dx, dy)
        if d - r > TOUCH_TOLERANCE:
            return []
        if d > 1e-12:
            nx, ny = dx / d, dy / d
        else:
            nx, ny = normals[best_i]
        pen = r - d
        px, py = qx, qy
    if pen < 0.0:
        pen = 0.0
    if flip:
        # Roles swapped: polygon is A, circle is B; normal must point A -> B.
        return [(px, py, nx, ny, pen)]
    # Circle is A: normal A -> B points from circle into polygon.
    return [(px, py, -nx, -ny, pen)]


def _max_separation(
    verts_a: list[Vec2], normals_a: list[Vec2], verts_b: list[Vec2]
) -> tuple[float, int]:
    best = -math.inf
    best_i = 0
    for i in range(len(verts_a)):
        nx, ny = normals_a[i]
        vx, vy = verts_a[i]
        lo = math.inf
        for wx, wy in verts_b:
            p = (wx - vx) * nx + (wy - vy) * ny
            if p < lo:
                lo = p
        if lo > best:
            best = lo
            best_i = i
    return best, best_i


def contact_polygon_polygon(
    verts_a: list[Vec2],
    normals_a: list[Vec2],
    verts_b: list[Vec2],
    normals_b: list[Vec2],
) -> list[tuple[float, float, float, float, float]]:
    """SAT with reference-face clipping; at most two contact points."""
    sep_a, face_a = _max_separation(verts_a, normals_a, verts_b)
    if sep_a > TOUCH_TOLERANCE:
        return []
    sep_b, face_b = _max_separation(verts_b, normals_b, verts_a)
    if sep_b > TOUCH_TOLERANCE:
        return []

    # Reference polygon: the one with the larger (shallower) separation.
    if sep_b > sep_a + 1e-10:
        ref_verts, ref_normals, ref_face = verts_b, normals_b, face_b
        inc_verts, inc_normals = verts_a, normals_a
        flip = True
    else:
        ref_verts, ref_normals, ref_face = verts_a, normals_a, face_a
        inc_verts, inc_normals = verts_b, normals_b
        flip = False

    rnx, rny = ref_normals[ref_face]
    # Incident face: most anti-parallel to the reference normal.
    inc_face = 0
    worst = math.inf
    for i in range(len(inc_normals)):
        d = inc_normals[i][0] * rnx + inc_normals[i][1] * rny
        if d < worst:
            worst = d
            inc_face = i
    i1 = inc_verts[inc_face]
    i2 = inc_verts[(inc_face + 1) % len(inc_verts)]

    # Clip the incident edge against the reference face's side planes.
    r1 = ref_verts[ref_face]
    r2 = ref_verts[(ref_face + 1) % len(ref_verts)]
    tx, ty = r2[0] - r1[0], r2[1] - r1[1]
    tlen = math.hypot(tx, ty)
    tx, ty = tx / tlen, ty / tlen

    def clip(p1: Vec2, p2: Vec2, ex: float, ey: float, offset: float):
        d1 = p1[0] * ex + p1[1] * ey - offset
        d2 = p2[0] * ex + p2[1] * ey - offset
        out = []
        if d1 <= 0.0:
            out.append(p1)
        if d2 <= 0.0:
            out.append(p2)
        if d1 * d2 < 0.0:
            t = d1 / (d1 - d2)
            out.append((p1[0] + t * (p2[0] - p1[0]), p1[1] + t * (p2[1] - p1[1])))
        return out

    pts = clip(i1, i2, -tx, -ty, -(r1[0] * tx + r1[1] * ty))
    if len(pts) < 2:
        if not pts:
            return []
        pts = pts + pts
    pts = clip(pts[0], pts[1], tx, ty, r2[0] * tx + r2[1] * ty)
    if not pts:
        return []

    # Normal orientation: the reference normal points out of the reference
    # body.  If A is the reference that is already A -> B; otherwise flip.
    face_offset = r1[0] * rnx + r1[1] * rny
    out = []
    for px, py in pts[:2]:
        sep = px * rnx + py * rny - face_offset
        if sep <= TOUCH_TOLERANCE:
            pen = -sep if sep < 0.0 else 0.0
            if flip:
                out.append((px, py, -rnx, -rny, pen))
            else:
                out.append((px, py, rnx, rny, pen))
    return out


# ---------------------------------------------------------------------------
# Exact separation distances (zero when overlapping).
# ---------------------------------------------------------------------------


def _point_segment_distance(px: float, py: float, a: Vec2, b: Vec2) -> float:
    ex, ey = b[0] - a[0], b[1] - a[1]
    ll = ex * ex + ey * ey
    if ll < 1e-18:
        return math.hypot(px - a[0], py - a[1])
    t = ((px - a[0]) * ex + (py - a[1]) * ey) / ll
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    return math.hypot(px - a[0] - t * ex, py - a[1] - t * ey)


def _point_in_polygon(px: float, py: float, verts: list[Vec2], normals: list[Vec2]) -> bool:
    for (nx, ny), (vx, vy) in zip(normals, verts):
        if (px - vx) * nx + (py - vy) * ny > 0.0:
            return False
    return True


def _polygon_boundary_distance(px: float, py: float, verts: list[Vec2]) -> float:
    n = len(verts)
    return min(
        _point_segment_distance(px, py, verts[i], verts[(i + 1) % n]) for i in range(n)
    )


def distance_circle_circle(
    ax: float, ay: float, ra: float, bx: float, by: float, rb: float
) -> float:
    d = math.hypot(bx - ax, by - ay) - ra - rb
    return d if d > 0.0 else 0.0


def distance_circle_polygon(
    cx: float, cy: float, r: float, verts: list[Vec2], normals: list[Vec2]
) -> float:
    if _point_in_polygon(cx, cy, verts, normals):
        return 0.0
    d = _polygon_boundary_distance(cx, cy, verts) - r
    return d if d > 0.0 else 0.0


def distance_polygon_polygon(
    verts_a: list[Vec2],
    normals_a: list[Vec2],
    verts_b: list[Vec2],
    normals_b: list[Vec2],
) -> float:
    sep_a, _ = _max_separation(verts_a, normals_a, verts_b)
    if sep_a <= 0.0:
        sep_b, _ = _max_separation(verts_b, normals_b, verts_a)
        if sep_b <= 0.0:
            return 0.0
    na = len(verts_a)
    nb = len(verts_b)
    best = math.inf
    for i in range(na):
        vx, vy = verts_a[i]
        for j in range(nb):
            d = _point_segment_distance(vx, vy, verts_b[j], verts_b[(j + 1) % nb])
            if d < best:
                best = d
    for j in range(nb):
        vx, vy = verts_b[j]
        for i in range(na):
            d = _point_segment_distance(vx, vy, verts_a[i], verts_a[(i + 1) % na])
            if d < best:
                best = d
    return best
