//! Small fixed-size 3-vector helpers used by the kinematics and generators.
//!
//! Coordinates are meters, y is up, and yaw rotates about the y axis with the
//! right-hand rule: `rotate_y(PI/2)` maps +x to -z.

use crate::num::Real;

pub type Vec3<T> = [T; 3];

pub fn add<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale<T: Real>(a: Vec3<T>, s: T) -> Vec3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn dot<T: Real>(a: Vec3<T>, b: Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm<T: Real>(a: Vec3<T>) -> T {
    dot(a, a).sqrt()
}

pub fn dist<T: Real>(a: Vec3<T>, b: Vec3<T>) -> T {
    norm(sub(a, b))
}

pub fn lerp<T: Real>(a: Vec3<T>, b: Vec3<T>, t: T) -> Vec3<T> {
    add(a, scale(sub(b, a), t))
}

/// Rotation about the y (up) axis: x' = x cos + z sin, z' = -x sin + z cos.
pub fn rotate_y<T: Real>(v: Vec3<T>, yaw: T) -> Vec3<T> {
    let (s, c) = (yaw.sin(), yaw.cos());
    [v[0] * c + v[2] * s, v[1], -v[0] * s + v[2] * c]
}

/// Inverse of [`rotate_y`].
pub fn rotate_y_inv<T: Real>(v: Vec3<T>, yaw: T) -> Vec3<T> {
    rotate_y(v, -yaw)
}

/// Heading unit vector for a yaw angle; yaw 0 faces +z.
pub fn heading<T: Real>(yaw: T) -> Vec3<T> {
    [yaw.sin(), T::zero(), yaw.cos()]
}

pub fn is_finite<T: Real>(v: Vec3<T>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_angle<T: Real>(a: T) -> T {
    let two_pi = T::from_f64(std::f64::consts::TAU);
    let pi = T::from_f64(std::f64::consts::PI);
    let mut x = a % two_pi;
    if x <= -pi {
        x += two_pi;
    } else if x > pi {
        x -= two_pi;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rotate_quarter_turn_maps_x_to_minus_z() {
        let v = rotate_y([1.0, 0.0, 0.0], PI / 2.0);
        assert!((v[0]).abs() < 1e-12);
        assert!((v[1]).abs() < 1e-12);
        assert!((v[2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotate_round_trip() {
        let v = [0.3_f64, -1.2, 2.5];
        let w = rotate_y_inv(rotate_y(v, 0.7), 0.7);
        for i in 0..3 {
            assert!((v[i] - w[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-3.0 * PI) - PI).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
    }
}
