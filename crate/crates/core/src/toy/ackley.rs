use std::f64::consts::{E, PI};

use super::Vec2;

const A: f64 = 20.0;
const B: f64 = 0.2;
const C: f64 = 2.0 * PI;

/// The two-dimensional Ackley function (a = 20, b = 0.2, c = 2π).
///
/// Non-negative, with its unique zero at the origin and a lattice of local
/// minima near the integer points.
pub fn ackley(point: Vec2) -> f64 {
    let [x, y] = point;
    let radial = -A * (-B * (0.5 * (x * x + y * y)).sqrt()).exp();
    let cosine = -(0.5 * ((C * x).cos() + (C * y).cos())).exp();
    radial + cosine + E + A
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_at_origin() {
        assert_eq!(ackley([0.0, 0.0]), 0.0);
    }

    #[test]
    fn known_value() {
        // 40-digit mpmath evaluation
        assert!((ackley([1.0, 1.0]) - 3.625_384_938_440_363).abs() < 1e-12);
        assert!((ackley([3.0, 3.0]) - 9.023_767_278_119_471).abs() < 1e-12);
        assert!((ackley([10.0, 0.0]) - 15.137_665_311_315_716).abs() < 1e-12);
    }

    #[test]
    fn point_symmetry() {
        for &(x, y) in &[(0.3, -1.7), (4.0, 2.5), (-9.1, 0.01)] {
            assert_eq!(ackley([x, y]), ackley([-x, -y]));
        }
    }
}
