//! Line-of-sight blockage prediction from a short UE trajectory and a set
//! of rectangular obstacles (top-down view).

use thiserror::Error;

use crate::geometry::CartesianPoint;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlockageError {
    #[error("trajectory needs at least one position")]
    EmptyTrajectory,
    #[error("timestamps must be strictly increasing")]
    Timestamps,
    #[error("obstacle must have positive extents")]
    Obstacle,
    #[error("horizon must be finite and non-negative")]
    Horizon,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedPosition {
    pub t_s: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    points: Vec<TimedPosition>,
}

impl Trajectory {
    pub fn new(points: Vec<TimedPosition>) -> Result<Self, BlockageError> {
        if points.is_empty() {
            return Err(BlockageError::EmptyTrajectory);
        }
        if points.windows(2).any(|w| !(w[0].t_s < w[1].t_s)) {
            return Err(BlockageError::Timestamps);
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[TimedPosition] {
        &self.points
    }

    /// Position `horizon_s` after the last sample, extrapolating the last
    /// two samples linearly.
    pub fn extrapolate(&self, horizon_s: f64) -> (f64, f64) {
        let last = self.points[self.points.len() - 1];
        if self.points.len() < 2 {
            return (last.x, last.y);
        }
        let prev = self.points[self.points.len() - 2];
        let dt = last.t_s - prev.t_s;
        let vx = (last.x - prev.x) / dt;
        let vy = (last.y - prev.y) / dt;
        (last.x + vx * horizon_s, last.y + vy * horizon_s)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| TimedPosition { t_s: p.t_s, x: p.x + dx, y: p.y + dy })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, BlockageError> {
        if !(x_min < x_max && y_min < y_max) {
            return Err(BlockageError::Obstacle);
        }
        Ok(Self { x_min, y_min, x_max, y_max })
    }

    /// Liang–Barsky clip of the segment a→b against the closed rectangle.
    pub fn intersects_segment(&self, a: (f64, f64), b: (f64, f64)) -> bool {
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let mut t0 = 0.0f64;
        let mut t1 = 1.0f64;
        for (p, q) in [
            (-dx, a.0 - self.x_min),
            (dx, self.x_max - a.0),
            (-dy, a.1 - self.y_min),
            (dy, self.y_max - a.1),
        ] {
            if p == 0.0 {
                if q < 0.0 {
                    return false;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObstacleSet(pub Vec<Rect>);

/// True when the straight path from the BS to the UE position predicted
/// `horizon_s` ahead crosses an obstacle. Heights are ignored.
pub fn predict_blockage(
    p: &Trajectory,
    obstacles: &ObstacleSet,
    bs: &CartesianPoint,
    horizon_s: f64,
) -> Result<bool, BlockageError> {
    if !(horizon_s >= 0.0 && horizon_s.is_finite()) {
        return Err(BlockageError::Horizon);
    }
    let ue = p.extrapolate(horizon_s);
    let a = (bs.x, bs.y);
    Ok(obstacles.0.iter().any(|r| r.intersects_segment(a, ue)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tp(t: f64, x: f64, y: f64) -> TimedPosition {
        TimedPosition { t_s: t, x, y }
    }

    fn origin() -> CartesianPoint {
        CartesianPoint::new(0.0, 0.0, 3.0)
    }

    #[test]
    fn empty_obstacles_never_block() {
        let tr = Trajectory::new(vec![tp(0.0, 5.0, 0.0)]).unwrap();
        assert!(!predict_blockage(&tr, &ObstacleSet::default(), &origin(), 1.0).unwrap());
    }

    #[test]
    fn stationary_behind_obstacle() {
        let tr = Trajectory::new(vec![tp(0.0, 5.0, 0.0), tp(1.0, 5.0, 0.0)]).unwrap();
        let obs = ObstacleSet(vec![Rect::new(2.0, -0.5, 3.0, 0.5).unwrap()]);
        assert!(predict_blockage(&tr, &obs, &origin(), 3.0).unwrap());
    }

    #[test]
    fn moving_into_shadow() {
        let tr = Trajectory::new(vec![tp(0.0, 5.0, -1.0), tp(1.0, 5.0, 0.0)]).unwrap();
        let obs = ObstacleSet(vec![Rect::new(2.0, 1.0, 3.0, 2.0).unwrap()]);
        assert_eq!(tr.extrapolate(2.0), (5.0, 2.0));
        // Segment (0,0)→(5,2) is at y = 0.8..1.2 over x ∈ [2,3].
        assert!(predict_blockage(&tr, &obs, &origin(), 2.0).unwrap());
        assert!(!predict_blockage(&tr, &obs, &origin(), 0.0).unwrap());
    }

    #[test]
    fn validation() {
        assert!(Trajectory::new(vec![]).is_err());
        assert!(Trajectory::new(vec![tp(1.0, 0.0, 0.0), tp(1.0, 1.0, 0.0)]).is_err());
        assert!(Rect::new(0.0, 0.0, 0.0, 1.0).is_err());
        let tr = Trajectory::new(vec![tp(0.0, 1.0, 1.0)]).unwrap();
        assert!(predict_blockage(&tr, &ObstacleSet::default(), &origin(), -1.0).is_err());
    }

    #[test]
    fn segment_cases() {
        let r = Rect::new(0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(r.intersects_segment((-1.0, 0.5), (2.0, 0.5)));
        assert!(r.intersects_segment((0.5, 0.5), (0.6, 0.6)));
        assert!(!r.intersects_segment((-1.0, 2.0), (2.0, 2.0)));
        assert!(!r.intersects_segment((-1.0, -1.0), (-0.5, 0.5)));
        assert!(r.intersects_segment((1.0, 1.0), (2.0, 2.0)));
    }

    fn arb_rect() -> impl Strategy<Value = Rect> {
        (-10.0..10.0f64, -10.0..10.0f64, 0.1..3.0f64, 0.1..3.0f64)
            .prop_map(|(x, y, w, h)| Rect::new(x, y, x + w, y + h).unwrap())
    }

    /// Multiples of 1/8, so translating by whole metres is exact.
    fn dyadic(lo: i32, hi: i32) -> impl Strategy<Value = f64> {
        (lo * 8..hi * 8).prop_map(|k| k as f64 / 8.0)
    }

    fn dyadic_rect() -> impl Strategy<Value = Rect> {
        (dyadic(-10, 10), dyadic(-10, 10), 1i32..24, 1i32..24)
            .prop_map(|(x, y, w, h)| Rect::new(x, y, x + w as f64 / 8.0, y + h as f64 / 8.0).unwrap())
    }

    proptest! {
        #[test]
        fn translation_invariant(
            rects in prop::collection::vec(dyadic_rect(), 0..5),
            x0 in dyadic(-10, 10), y0 in dyadic(-10, 10),
            vx in dyadic(-2, 2), vy in dyadic(-2, 2),
            dx in -50i32..50, dy in -50i32..50,
            quarter_steps in 0u32..12,
        ) {
            let (dx, dy) = (dx as f64, dy as f64);
            let horizon = quarter_steps as f64 / 4.0;
            let tr = Trajectory::new(vec![tp(0.0, x0, y0), tp(1.0, x0 + vx, y0 + vy)]).unwrap();
            let obs = ObstacleSet(rects.clone());
            let b0 = predict_blockage(&tr, &obs, &origin(), horizon).unwrap();
            let moved = ObstacleSet(rects.iter().map(|r| Rect::new(r.x_min + dx, r.y_min + dy, r.x_max + dx, r.y_max + dy).unwrap()).collect());
            let bs = CartesianPoint::new(dx, dy, 3.0);
            let b1 = predict_blockage(&tr.translated(dx, dy), &moved, &bs, horizon).unwrap();
            prop_assert_eq!(b0, b1);
        }

        #[test]
        fn removing_obstacles_never_creates_blockage(
            rects in prop::collection::vec(arb_rect(), 1..6),
            x in -10.0..10.0f64, y in -10.0..10.0f64,
            drop in 0usize..6,
        ) {
            let tr = Trajectory::new(vec![tp(0.0, x, y)]).unwrap();
            let full = predict_blockage(&tr, &ObstacleSet(rects.clone()), &origin(), 0.0).unwrap();
            let mut fewer = rects.clone();
            fewer.remove(drop % rects.len());
            let less = predict_blockage(&tr, &ObstacleSet(fewer), &origin(), 0.0).unwrap();
            prop_assert!(full || !less);
        }
    }
}
