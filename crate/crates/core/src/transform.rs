use std::ops::Mul;

use crate::kinematics::ToolPosition;

/// Row-major 4x4 homogeneous transform.
///
/// Every constructor in this crate leaves the bottom row at exactly `(0, 0, 0, 1)`,
/// and the product keeps it there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transform4 {
    m: [[f64; 4]; 4],
}

impl Default for Transform4 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Transform4 {
    pub const fn identity() -> Self {
        Transform4 {
            m: [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ],
        }
    }

    pub(crate) const fn from_rows(m: [[f64; 4]; 4]) -> Self {
        Transform4 { m }
    }

    pub fn rows(&self) -> &[[f64; 4]; 4] {
        &self.m
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.m[row][col]
    }

    /// Only the upper 3x4 block is writable.
    pub(crate) fn set(&mut self, row: usize, col: usize, value: f64) {
        assert!(row < 3, "bottom row of a homogeneous transform is fixed");
        self.m[row][col] = value;
    }

    /// Last column, i.e. where the frame origin sits in the parent frame.
    pub fn translation(&self) -> ToolPosition {
        ToolPosition::new(self.m[0][3], self.m[1][3], self.m[2][3])
    }

    /// Third column of the rotation block: the local z-axis in parent coordinates.
    pub fn z_axis(&self) -> [f64; 3] {
        [self.m[0][2], self.m[1][2], self.m[2][2]]
    }

    pub fn apply(&self, p: &ToolPosition) -> ToolPosition {
        let v = [p.x, p.y, p.z];
        let row = |r: &[f64; 4]| r[0] * v[0] + r[1] * v[1] + r[2] * v[2] + r[3];
        ToolPosition::new(row(&self.m[0]), row(&self.m[1]), row(&self.m[2]))
    }

    /// Rotate a direction; translation is ignored.
    pub fn apply_vector(&self, p: &ToolPosition) -> ToolPosition {
        let v = [p.x, p.y, p.z];
        let row = |r: &[f64; 4]| r[0] * v[0] + r[1] * v[1] + r[2] * v[2];
        ToolPosition::new(row(&self.m[0]), row(&self.m[1]), row(&self.m[2]))
    }

    pub fn has_homogeneous_bottom_row(&self) -> bool {
        self.m[3] == [0.0, 0.0, 0.0, 1.0]
    }

    /// Largest entry of `|R^T R - I|` over the rotation block.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|r| self.m[r][i] * self.m[r][j]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - expected).abs());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Transform4) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn rotation_diff(&self, other: &Transform4) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..3 {
            for c in 0..3 {
                worst = worst.max((self.m[r][c] - other.m[r][c]).abs());
            }
        }
        worst
    }
}

impl Mul for &Transform4 {
    type Output = Transform4;

    fn mul(self, rhs: &Transform4) -> Transform4 {
        let mut out = [[0.0; 4]; 4];
        for (r, row) in out.iter_mut().enumerate().take(3) {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = (0..4).map(|k| self.m[r][k] * rhs.m[k][c]).sum();
            }
        }
        // Both operands have a (0, 0, 0, 1) bottom row, so the product does too;
        // writing it directly keeps it exact.
        out[3] = [0.0, 0.0, 0.0, 1.0];
        Transform4 { m: out }
    }
}

impl Mul for Transform4 {
    type Output = Transform4;

    fn mul(self, rhs: Transform4) -> Transform4 {
        Mul::mul(&self, &rhs)
    }
}
