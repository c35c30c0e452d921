use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GeomError, Line2, Segment2, Vec2, MIN_SEGMENT_LENGTH};

/// Robust 2D line fit.
///
/// Draws `iterations` random two-point hypotheses, keeps the one with the most
/// points within `inlier_tol`, then refits it by orthogonal regression over
/// its inliers. The refit is only accepted when it keeps at least as many
/// inliers, so every returned inlier is within `inlier_tol` of the returned
/// line.
pub fn fit_line_ransac(
    points: &[Vec2],
    inlier_tol: f64,
    iterations: usize,
    rng_seed: u64,
) -> Result<(Line2, Vec<usize>), GeomError> {
    if points.len() < 2 {
        return Err(GeomError::FewerThanTwoPoints(points.len()));
    }
    if !(inlier_tol > 0.0) {
        return Err(GeomError::DegenerateInput("inlier tolerance must be positive"));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(GeomError::NonFinite);
    }
    let anchor = points[0];
    let far = (1..points.len())
        .max_by(|&i, &j| anchor.dist(points[i]).total_cmp(&anchor.dist(points[j])))
        .expect("at least two points");
    if anchor.dist(points[far]) < MIN_SEGMENT_LENGTH {
        return Err(GeomError::DegenerateInput("all points coincide"));
    }

    let count = |line: &Line2| points.iter().filter(|p| line.distance(**p) <= inlier_tol).count();

    let mut best = Line2::through(anchor, points[far])?;
    let mut best_count = count(&best);
    if points.len() > 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let n = points.len();
        for _ in 0..iterations {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let Ok(line) = Line2::through(points[i], points[j]) else {
                continue;
            };
            let c = count(&line);
            if c > best_count {
                best = line;
                best_count = c;
            }
        }
    }

    let inliers_of = |line: &Line2| -> Vec<usize> {
        (0..points.len())
            .filter(|&i| line.distance(points[i]) <= inlier_tol)
            .collect()
    };

    // A couple of refit rounds let the consensus set settle.
    let mut line = best;
    let mut inliers = inliers_of(&line);
    for _ in 0..3 {
        let subset: Vec<Vec2> = inliers.iter().map(|&i| points[i]).collect();
        let Some(refit) = total_least_squares(&subset) else {
            break;
        };
        let refit_inliers = inliers_of(&refit);
        if refit_inliers.len() < inliers.len() {
            break;
        }
        let stable = refit_inliers == inliers;
        line = refit;
        inliers = refit_inliers;
        if stable {
            break;
        }
    }
    Ok((line, inliers))
}

/// Orthogonal regression line; `None` when the points do not span a line.
pub(crate) fn total_least_squares(points: &[Vec2]) -> Option<Line2> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let c = points.iter().fold(Vec2::default(), |a, &p| a + p) / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = *p - c;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    if sxx + syy < MIN_SEGMENT_LENGTH * MIN_SEGMENT_LENGTH {
        return None;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let dir = Vec2::new(theta.cos(), theta.sin());
    Line2::from_point_dir(c, dir).ok()
}

/// Segment on `line` spanning the extreme orthogonal projections of `points`.
pub fn project_segment(line: &Line2, points: &[Vec2]) -> Result<Segment2, GeomError> {
    if points.len() < 2 {
        return Err(GeomError::FewerThanTwoPoints(points.len()));
    }
    let d = line.direction();
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let t = d.dot(*p);
        (lo.min(t), hi.max(t))
    });
    if !(hi - lo >= MIN_SEGMENT_LENGTH) {
        return Err(GeomError::DegenerateInput("projection span below 1e-6"));
    }
    let foot = line.normal * line.offset;
    Segment2::new(foot + d * lo, foot + d * hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_points_fit_exactly() {
        let pts: Vec<Vec2> = (0..10).map(|i| Vec2::new(i as f64 * 0.3, 1.0)).collect();
        let (line, inl) = fit_line_ransac(&pts, 0.02, 100, 1).unwrap();
        assert!((line.normal.x).abs() < 1e-12 && (line.normal.y - 1.0).abs() < 1e-12);
        assert!((line.offset - 1.0).abs() < 1e-12);
        assert_eq!(inl.len(), 10);
    }

    #[test]
    fn minimal_sample() {
        let pts = [Vec2::new(0., 0.), Vec2::new(1., 1.)];
        let (line, inl) = fit_line_ransac(&pts, 0.01, 10, 0).unwrap();
        assert_eq!(inl, vec![0, 1]);
        assert!(line.distance(pts[0]) < 1e-12 && line.distance(pts[1]) < 1e-12);
    }

    #[test]
    fn error_paths() {
        assert_eq!(
            fit_line_ransac(&[Vec2::new(0., 0.)], 0.1, 10, 0),
            Err(GeomError::FewerThanTwoPoints(1))
        );
        let same = vec![Vec2::new(1., 1.); 5];
        assert!(matches!(
            fit_line_ransac(&same, 0.1, 10, 0),
            Err(GeomError::DegenerateInput(_))
        ));
    }

    #[test]
    fn projection_extremes() {
        let line = Line2::new(Vec2::new(0., 1.), 0.).unwrap();
        let s = project_segment(&line, &[Vec2::new(0., 0.01), Vec2::new(2., -0.01), Vec2::new(1., 0.)])
            .unwrap();
        let (lo, hi) = if s.a.x < s.b.x { (s.a, s.b) } else { (s.b, s.a) };
        assert!(lo.dist(Vec2::new(0., 0.)) < 1e-12);
        assert!(hi.dist(Vec2::new(2., 0.)) < 1e-12);

        let x5 = Line2::new(Vec2::new(1., 0.), 5.).unwrap();
        assert!(matches!(
            project_segment(&x5, &[Vec2::new(5., 5.), Vec2::new(5., 5.0000001)]),
            Err(GeomError::DegenerateInput(_))
        ));
    }
}
