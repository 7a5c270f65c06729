//! Implicit geometry: positive inside the fluid domain, zero on its boundary.

use serde::{Deserialize, Serialize};

use crate::scalar::{Point, Scalar};

/// Boundary region identifier carried by every boundary facet.
pub type Region = u16;

pub mod region {
    use super::Region;

    pub const IMMERSED: Region = 1;
    pub const INNER_ARC: Region = 1;
    pub const OUTER_ARC: Region = 2;
    /// Straight edge of the quarter annulus on the x axis.
    pub const X_AXIS: Region = 3;
    /// Straight edge of the quarter annulus on the y axis.
    pub const Y_AXIS: Region = 4;
    pub const CYLINDER: Region = 1;

    pub const AMBIENT_LEFT: Region = 10;
    pub const AMBIENT_RIGHT: Region = 11;
    pub const AMBIENT_BOTTOM: Region = 12;
    pub const AMBIENT_TOP: Region = 13;

    pub fn is_ambient(r: Region) -> bool {
        (AMBIENT_LEFT..=AMBIENT_TOP).contains(&r)
    }

    /// Ambient side id for the cell edge with outward axis `axis` and `upper` side.
    pub fn ambient(axis: usize, upper: bool) -> Region {
        AMBIENT_LEFT + 2 * axis as Region + Region::from(upper)
    }
}

pub trait LevelSet<T: Scalar>: Send + Sync {
    fn value(&self, p: Point<T>) -> T;

    /// Region of the boundary piece closest to `p`.
    fn region(&self, _p: Point<T>) -> Region {
        region::IMMERSED
    }

    /// Lipschitz bound of `value`, used to classify cells far from the boundary.
    fn lipschitz(&self) -> Option<T> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape<T> {
    /// `r_inner < |p| < r_outer` in the first quadrant.
    QuarterAnnulus { r_inner: T, r_outer: T },
    /// Everything outside a disk; the ambient box closes the domain.
    DiskComplement { center: Point<T>, radius: T },
    /// Rectangular channel `[0, length] x [0, height]` minus a cylinder. The
    /// channel walls coincide with the ambient box.
    ChannelWithCylinder {
        length: T,
        height: T,
        center: Point<T>,
        radius: T,
    },
    /// `normal . p < offset`.
    HalfPlane { normal: Point<T>, offset: T },
    /// The inner shape moved by `shift`.
    Translated { shift: Point<T>, inner: Box<Shape<T>> },
}

impl<T: Scalar> Shape<T> {
    pub fn translated(self, shift: Point<T>) -> Self {
        Shape::Translated {
            shift,
            inner: Box::new(self),
        }
    }

    /// Exact area inside the box `lo .. hi`, when known in closed form.
    pub fn exact_area(&self) -> Option<T> {
        match self {
            Shape::QuarterAnnulus { r_inner, r_outer } => {
                Some(T::FRAC_PI_4() * (*r_outer * *r_outer - *r_inner * *r_inner))
            }
            Shape::ChannelWithCylinder {
                length,
                height,
                radius,
                ..
            } => Some(*length * *height - T::PI() * *radius * *radius),
            Shape::Translated { inner, .. } => inner.exact_area(),
            _ => None,
        }
    }

    fn pieces(&self, p: Point<T>) -> (T, Region) {
        match self {
            Shape::QuarterAnnulus { r_inner, r_outer } => {
                let r = p[0].hypot(p[1]);
                let cand = [
                    (r - *r_inner, region::INNER_ARC),
                    (*r_outer - r, region::OUTER_ARC),
                    (p[1], region::X_AXIS),
                    (p[0], region::Y_AXIS),
                ];
                cand.into_iter()
                    .fold((T::infinity(), 0), |a, b| if b.0 < a.0 { b } else { a })
            }
            Shape::DiskComplement { center, radius }
            | Shape::ChannelWithCylinder { center, radius, .. } => (
                (p[0] - center[0]).hypot(p[1] - center[1]) - *radius,
                region::CYLINDER,
            ),
            Shape::HalfPlane { normal, offset } => {
                (*offset - normal[0] * p[0] - normal[1] * p[1], region::IMMERSED)
            }
            Shape::Translated { shift, inner } => inner.pieces([p[0] - shift[0], p[1] - shift[1]]),
        }
    }
}

impl<T: Scalar> LevelSet<T> for Shape<T> {
    fn value(&self, p: Point<T>) -> T {
        self.pieces(p).0
    }

    fn region(&self, p: Point<T>) -> Region {
        self.pieces(p).1
    }

    fn lipschitz(&self) -> Option<T> {
        match self {
            Shape::HalfPlane { normal, .. } => Some(normal[0].hypot(normal[1])),
            Shape::Translated { inner, .. } => inner.lipschitz(),
            _ => Some(T::one()),
        }
    }
}

impl<T: Scalar, L: LevelSet<T> + ?Sized> LevelSet<T> for &L {
    fn value(&self, p: Point<T>) -> T {
        (**self).value(p)
    }
    fn region(&self, p: Point<T>) -> Region {
        (**self).region(p)
    }
    fn lipschitz(&self) -> Option<T> {
        (**self).lipschitz()
    }
}
