//! Exact planar area primitives: convex polygon clipping, disk/polygon
//! intersection and lens areas.

use std::f64::consts::PI;

pub type P2 = [f64; 2];

fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Counter-clockwise rectangle.
pub fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> Vec<P2> {
    vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
}

/// Signed shoelace area (positive for counter-clockwise polygons).
pub fn signed_area(poly: &[P2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        s += cross(poly[i], poly[(i + 1) % n]);
    }
    0.5 * s
}

pub fn area(poly: &[P2]) -> f64 {
    signed_area(poly).abs()
}

/// Clip a convex polygon to the half-plane `{p : w·p >= b}`.
pub fn clip_halfplane(poly: &[P2], w: P2, b: f64) -> Vec<P2> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    if n == 0 {
        return out;
    }
    for i in 0..n {
        let cur = poly[i];
        let nxt = poly[(i + 1) % n];
        let fc = dot(w, cur) - b;
        let fn_ = dot(w, nxt) - b;
        if fc >= 0.0 {
            out.push(cur);
        }
        if (fc >= 0.0) != (fn_ >= 0.0) {
            let t = fc / (fc - fn_);
            out.push([
                cur[0] + t * (nxt[0] - cur[0]),
                cur[1] + t * (nxt[1] - cur[1]),
            ]);
        }
    }
    if out.len() < 3 {
        out.clear();
    }
    out
}

/// Signed area of the intersection of the disk `|p| <= r` with the
/// triangle `(0, a, b)`.
fn disk_triangle(a: P2, b: P2, r: f64) -> f64 {
    let d = sub(b, a);
    let qa = dot(d, d);
    if qa == 0.0 {
        return 0.0;
    }
    let qb = 2.0 * dot(a, d);
    let qc = dot(a, a) - r * r;
    let mut ts = [0.0, 0.0, 0.0, 1.0];
    let mut nt = 1;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc > 0.0 {
        let sq = disc.sqrt();
        for t in [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)] {
            if t > 0.0 && t < 1.0 {
                ts[nt] = t;
                nt += 1;
            }
        }
    }
    ts[nt] = 1.0;
    let mut total = 0.0;
    for k in 0..nt {
        let (t0, t1) = (ts[k], ts[k + 1]);
        if t1 <= t0 {
            continue;
        }
        let p = [a[0] + t0 * d[0], a[1] + t0 * d[1]];
        let q = [a[0] + t1 * d[0], a[1] + t1 * d[1]];
        let tm = 0.5 * (t0 + t1);
        let m = [a[0] + tm * d[0], a[1] + tm * d[1]];
        if dot(m, m) <= r * r {
            total += 0.5 * cross(p, q);
        } else {
            total += 0.5 * r * r * cross(p, q).atan2(dot(p, q));
        }
    }
    total
}

/// Area of the intersection of a disk with a simple polygon.
pub fn disk_polygon_area(center: P2, r: f64, poly: &[P2]) -> f64 {
    if r <= 0.0 || poly.len() < 3 {
        return 0.0;
    }
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        s += disk_triangle(sub(poly[i], center), sub(poly[(i + 1) % n], center), r);
    }
    s.abs()
}

/// Area of the intersection of two disks at center distance `dist`.
pub fn lens_area(r1: f64, r2: f64, dist: f64) -> f64 {
    if r1 <= 0.0 || r2 <= 0.0 || dist >= r1 + r2 {
        return 0.0;
    }
    let rmin = r1.min(r2);
    if dist <= (r1 - r2).abs() {
        return PI * rmin * rmin;
    }
    let a1 = ((dist * dist + r1 * r1 - r2 * r2) / (2.0 * dist * r1)).clamp(-1.0, 1.0);
    let a2 = ((dist * dist + r2 * r2 - r1 * r1) / (2.0 * dist * r2)).clamp(-1.0, 1.0);
    let k = (-dist + r1 + r2) * (dist + r1 - r2) * (dist - r1 + r2) * (dist + r1 + r2);
    r1 * r1 * a1.acos() + r2 * r2 * a2.acos() - 0.5 * k.max(0.0).sqrt()
}

/// Area of the part of a disk (radius `r`) on the far side of a chord at
/// signed distance `h` from the center, i.e. `{p : n·p >= h}`.
pub fn disk_cap_area(r: f64, h: f64) -> f64 {
    if h >= r {
        return 0.0;
    }
    if h <= -r {
        return PI * r * r;
    }
    r * r * (h / r).acos() - h * (r * r - h * h).sqrt()
}
