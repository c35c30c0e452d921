use super::{Vec2, Vec3};

/// Similarity transform `p ↦ (p - origin) * scale` that maps a cloud's XY
/// bounding box into `[0, 2]²` (aspect ratio preserved) and its lowest
/// point to `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizeFrame {
    pub origin: Vec3,
    pub scale: f64,
}

/// Side length of the normalized XY box.
pub const NORMALIZED_EXTENT: f64 = 2.0;

impl NormalizeFrame {
    pub const IDENTITY: NormalizeFrame = NormalizeFrame { origin: Vec3::new(0.0, 0.0, 0.0), scale: 1.0 };

    /// `None` for an empty cloud or one with zero XY extent.
    pub fn fit(points: &[Vec3]) -> Option<Self> {
        let first = *points.first()?;
        let (lo, hi) = points.iter().fold((first, first), |(lo, hi), p| {
            (
                Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z)),
                Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z)),
            )
        });
        let extent = (hi.x - lo.x).max(hi.y - lo.y);
        if !(extent > 0.0 && extent.is_finite()) {
            return None;
        }
        Some(Self { origin: lo, scale: NORMALIZED_EXTENT / extent })
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        (p - self.origin) * self.scale
    }

    pub fn apply2(&self, p: Vec2) -> Vec2 {
        (p - self.origin.xy()) * self.scale
    }

    pub fn invert(&self, p: Vec3) -> Vec3 {
        p / self.scale + self.origin
    }

    pub fn invert2(&self, p: Vec2) -> Vec2 {
        p / self.scale + self.origin.xy()
    }
}
