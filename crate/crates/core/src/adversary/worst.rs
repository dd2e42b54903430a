use crate::concept::{Boundary, Concept, Label};
use crate::error::{Error, Result};
use crate::metric::{Point, Shape, Space};

/// Ratio of consecutive offsets from the anchor. Anything below 1/2 keeps
/// the previous point strictly nearest.
const Q: f64 = 1.0 / 3.0;
const RESTART_CANDIDATES: usize = 64;

/// Generator of alternating-label points `z + scale·(−Q)^k·u` converging
/// to a boundary point `z`; each point's nearest predecessor is the one
/// just before it, which carries the other label.
#[derive(Clone, Debug)]
pub(crate) struct PairGen {
    anchor: Vec<f64>,
    dir: Vec<f64>,
    scale: f64,
    step: i32,
    emitted: usize,
    pending: Option<Vec<f64>>,
}

fn axpy(z: &[f64], a: f64, u: &[f64]) -> Vec<f64> {
    z.iter().zip(u).map(|(zi, ui)| zi + a * ui).collect()
}

/// Largest `a` with `z ± a·u` both in the space.
fn room(space: &Space, z: &[f64], u: &[f64]) -> f64 {
    if let Shape::Interval { lo, hi } | Shape::Box { lo, hi, .. } = space.shape {
        let mut a = f64::INFINITY;
        for (zi, ui) in z.iter().zip(u) {
            if ui.abs() > 0.0 {
                a = a.min((hi - zi) / ui.abs()).min((zi - lo) / ui.abs());
            }
        }
        return a.max(0.0);
    }
    let ok = |a: f64| space.contains(&axpy(z, a, u)) && space.contains(&axpy(z, -a, u));
    let (mut lo, mut hi) = (0.0, space.diameter());
    if !ok(lo) {
        return 0.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn min_dist(space: &Space, p: &[f64], history: &[&[f64]]) -> f64 {
    history
        .iter()
        .map(|h| space.metric.dist(h, p))
        .fold(f64::INFINITY, f64::min)
}

impl PairGen {
    /// Builds a generator anchored at `z`, with first offset at most
    /// `max_offset` (before clipping to the space).
    fn anchored(
        space: &Space,
        concept: &Concept,
        boundary: &Boundary,
        z: &[f64],
        max_offset: f64,
    ) -> Option<PairGen> {
        let mut u = boundary.normal_at(z)?;
        let mut a = room(space, z, &u).min(max_offset);
        if !(a > 0.0) {
            return None;
        }
        // find a scale at which the two sides carry different labels
        let mut tries = 0;
        let (lo_l, hi_l) = loop {
            let l_minus = concept.label(space, &axpy(z, -a, &u));
            let l_plus = concept.label(space, &axpy(z, a, &u));
            if l_minus != l_plus {
                break (l_minus, l_plus);
            }
            a *= Q;
            tries += 1;
            if tries > 40 {
                return None;
            }
        };
        if lo_l > hi_l {
            u.iter_mut().for_each(|v| *v = -*v);
        }
        let low = lo_l.min(hi_l);
        // pin the label change along the normal to float resolution
        let (mut lo, mut hi) = (-a, a);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if concept.label(space, &axpy(z, mid, &u)) == low {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let anchor = axpy(z, hi, &u);
        let scale = room(space, &anchor, &u).min(max_offset * 3.0).min(3.0 * a);
        Some(PairGen {
            anchor,
            dir: u,
            scale,
            step: 1,
            emitted: 0,
            pending: None,
        })
    }

    pub(crate) fn start(space: &Space, concept: &Concept, boundary: &Boundary) -> Result<PairGen> {
        match boundary {
            Boundary::Empty => return Err(separated()),
            Boundary::Sampled { .. } => {
                return Err(Error::Unsupported(
                    "worst-case construction needs an analytic boundary".into(),
                ))
            }
            b if b.is_empty() => return Err(separated()),
            _ => {}
        }
        let z = boundary.point_at(0.5).ok_or_else(separated)?;
        if let Some(g) = PairGen::anchored(space, concept, boundary, &z, f64::INFINITY) {
            return Ok(g);
        }
        let mut g = PairGen {
            anchor: z.into_inner(),
            dir: vec![],
            scale: 0.0,
            step: 1,
            emitted: 0,
            pending: None,
        };
        g.restart(space, concept, boundary, &[])?;
        Ok(g)
    }

    fn at(&self, step: i32) -> Vec<f64> {
        axpy(&self.anchor, self.scale * (-Q).powi(step), &self.dir)
    }

    /// Checks that the next two points have opposite labels and that the
    /// second one's nearest neighbour, among `history` and the first one,
    /// is strictly the first one.
    fn pair_ok(&self, space: &Space, concept: &Concept, history: &[&[f64]]) -> bool {
        let a = self.at(self.step);
        let b = self.at(self.step + 1);
        if !space.contains(&a) || !space.contains(&b) || a == b {
            return false;
        }
        if concept.label(space, &a) == concept.label(space, &b) {
            return false;
        }
        let dab = space.metric.dist(&a, &b);
        dab > 0.0 && dab < min_dist(space, &b, history)
    }

    fn restart(
        &mut self,
        space: &Space,
        concept: &Concept,
        boundary: &Boundary,
        history: &[&[f64]],
    ) -> Result<()> {
        let cands: Vec<Point> = match boundary {
            Boundary::Points { points } => points.clone(),
            _ => (0..RESTART_CANDIDATES)
                .filter_map(|j| boundary.point_at((j as f64 + 0.5) / RESTART_CANDIDATES as f64))
                .collect(),
        };
        let mut scored: Vec<(f64, Point)> = cands
            .into_iter()
            .map(|z| (min_dist(space, &z, history), z))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        for (dz, z) in scored {
            if !(dz > 0.0) {
                break;
            }
            // first point at distance dz/4 from z keeps every older point
            // farther from the second point than the first
            if let Some(g) = PairGen::anchored(space, concept, boundary, &z, 0.25 * dz) {
                let emitted = self.emitted;
                *self = PairGen { emitted, ..g };
                if self.pair_ok(space, concept, history) {
                    return Ok(());
                }
            }
        }
        Err(Error::Unsupported(
            "no boundary anchor left at float resolution; the alternating sequence is exhausted"
                .into(),
        ))
    }

    /// Next point. Pairs start at even counts of emitted points; a pair is
    /// validated in full before its first point goes out.
    pub(crate) fn next(
        &mut self,
        space: &Space,
        concept: &Concept,
        boundary: &Boundary,
        history: &[&[f64]],
    ) -> Result<Point> {
        let p = if let Some(p) = self.pending.take() {
            p
        } else {
            if !self.pair_ok(space, concept, history) {
                self.restart(space, concept, boundary, history)?;
            }
            let a = self.at(self.step);
            self.pending = Some(self.at(self.step + 1));
            self.step += 2;
            // keep the run going past pair boundaries only while valid
            a
        };
        self.emitted += 1;
        Ok(Point::from(p))
    }
}

fn separated() -> Error {
    Error::PositivelySeparated(
        "the concept has no boundary points, so its classes are positively separated and \
         nearest neighbour makes only finitely many mistakes on any sequence"
            .into(),
    )
}

/// `2·pairs` points on which nearest neighbour errs at every even round:
/// `x_{2t-1}` is the nearest stored neighbour of `x_{2t}` and carries the
/// other label.
pub fn build_worst_case_sequence(
    space: &Space,
    concept: &Concept,
    pairs: usize,
) -> Result<Vec<Point>> {
    concept.validate(space)?;
    let boundary = concept.analytic_boundary(space).ok_or_else(|| {
        Error::Unsupported("worst-case construction needs an analytic boundary".into())
    })?;
    let mut gen = PairGen::start(space, concept, &boundary)?;
    let mut out: Vec<Point> = Vec::with_capacity(2 * pairs);
    for _ in 0..2 * pairs {
        let hist: Vec<&[f64]> = out.iter().map(|p| p.coords()).collect();
        let p = gen.next(space, concept, &boundary, &hist)?;
        out.push(p);
    }
    Ok(out)
}

/// Replays `seq` through nearest neighbour and counts mistakes at even
/// rounds.
pub fn even_round_mistakes(space: &Space, concept: &Concept, seq: &[Point]) -> usize {
    let mut h = crate::learner::History::new(space.dim(), space.metric);
    let mut count = 0;
    for (i, x) in seq.iter().enumerate() {
        let y = concept.label(space, x);
        let yhat = h.predict(x, Label(u32::MAX));
        if i % 2 == 1 && yhat != y {
            count += 1;
        }
        h.update(x, y);
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_reproduces_the_geometric_alternation() {
        let space = Space::interval(-1.0, 1.0);
        let c = Concept::threshold(0.0);
        let seq = build_worst_case_sequence(&space, &c, 25).unwrap();
        assert_eq!(seq.len(), 50);
        for (i, p) in seq.iter().enumerate() {
            let want = (-1.0f64 / 3.0).powi(i as i32 + 1);
            assert!(
                (p[0] - want).abs() <= 1e-15 * want.abs(),
                "{i}: {} vs {want}",
                p[0]
            );
        }
        assert_eq!(even_round_mistakes(&space, &c, &seq), 25);
    }

    #[test]
    fn halfspace_pairs_restart_along_the_segment() {
        let space = Space::unit_square();
        let c = Concept::halfspace(vec![1.0, 0.0], 0.5);
        for k in [10, 100] {
            let seq = build_worst_case_sequence(&space, &c, k).unwrap();
            assert_eq!(even_round_mistakes(&space, &c, &seq), k);
        }
        let c = Concept::halfspace(vec![0.6, 0.8], 0.7);
        let seq = build_worst_case_sequence(&space, &c, 150).unwrap();
        assert_eq!(even_round_mistakes(&space, &c, &seq), 150);
    }

    #[test]
    fn separated_clusters_refuse() {
        let (space, c) = Concept::two_clusters(1.0, 0.1).unwrap();
        let err = build_worst_case_sequence(&space, &c, 3).unwrap_err();
        assert!(matches!(err, Error::PositivelySeparated(_)));
    }

    #[test]
    fn disk_and_cantor_boundaries() {
        let space = Space::unit_square();
        let c = Concept::disk(vec![0.5, 0.5], 0.2);
        let seq = build_worst_case_sequence(&space, &c, 60).unwrap();
        assert_eq!(even_round_mistakes(&space, &c, &seq), 60);
        let space = Space::unit_interval();
        let c = Concept::fat_cantor(3);
        let seq = build_worst_case_sequence(&space, &c, 40).unwrap();
        assert_eq!(even_round_mistakes(&space, &c, &seq), 40);
    }
}
