use serde::{Deserialize, Serialize};

/// Which side of the inequality `lhs` sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `lhs <= rhs`; margin is `rhs - lhs`.
    Upper,
    /// `lhs >= rhs`; margin is `lhs - rhs`.
    Lower,
}

/// One evaluated inequality instance.
///
/// `satisfied` is true iff `margin >= -tol` with
/// `tol = 1e-9 * max(|lhs|, |rhs|, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub direction: Direction,
    pub satisfied: bool,
    pub margin: f64,
    pub k: Option<usize>,
    pub seed: u64,
    /// Set when the right-hand side drops asymptotic constants or lower-order
    /// terms, so a violation is informative rather than a defect.
    pub asymptotic: bool,
}

pub const RELATIVE_TOLERANCE: f64 = 1e-9;

impl BoundCheck {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, direction: Direction) -> Self {
        let margin = match direction {
            Direction::Upper => rhs - lhs,
            Direction::Lower => lhs - rhs,
        };
        let tol = RELATIVE_TOLERANCE * lhs.abs().max(rhs.abs()).max(1.0);
        BoundCheck {
            name: name.into(),
            lhs,
            rhs,
            direction,
            satisfied: margin >= -tol,
            margin,
            k: None,
            seed: 0,
            asymptotic: false,
        }
    }

    /// Checks `lhs <= rhs`.
    pub fn upper(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::new(name, lhs, rhs, Direction::Upper)
    }

    /// Checks `lhs >= rhs`.
    pub fn lower(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::new(name, lhs, rhs, Direction::Lower)
    }

    pub fn at_step(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn asymptotic(mut self) -> Self {
        self.asymptotic = true;
        self
    }

    /// Margin divided by `max(|lhs|, |rhs|)`, or the raw margin when both are zero.
    pub fn relative_margin(&self) -> f64 {
        let scale = self.lhs.abs().max(self.rhs.abs());
        if scale > 0.0 {
            self.margin / scale
        } else {
            self.margin
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margins_follow_direction() {
        let up = BoundCheck::upper("u", 1.0, 3.0);
        assert_eq!(up.margin, 2.0);
        assert!(up.satisfied);
        let low = BoundCheck::lower("l", 1.0, 3.0);
        assert_eq!(low.margin, -2.0);
        assert!(!low.satisfied);
    }

    #[test]
    fn tolerance_scales_with_magnitude() {
        assert!(BoundCheck::upper("t", 1e12 + 100.0, 1e12).satisfied);
        assert!(!BoundCheck::upper("t", 1e12 + 1e4, 1e12).satisfied);
        assert!(BoundCheck::upper("t", 1e-10, 0.0).satisfied);
    }
}
