//! Space-time points and axis-aligned boxes.

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub x: Vec<f64>,
    pub t: f64,
}

impl Point {
    pub fn new(x: Vec<f64>, t: f64) -> Self {
        Point { x, t }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Euclidean distance in space-time.
    pub fn dist(&self, other: &Point) -> f64 {
        let mut s = (self.t - other.t).powi(2);
        for (a, b) in self.x.iter().zip(&other.x) {
            s += (a - b).powi(2);
        }
        s.sqrt()
    }

    pub fn space_norm(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Axis-aligned space-time box.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeBox {
    pub x_min: Vec<f64>,
    pub x_max: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
}

impl SpaceTimeBox {
    pub fn new(x_min: Vec<f64>, x_max: Vec<f64>, t_min: f64, t_max: f64) -> Self {
        assert_eq!(x_min.len(), x_max.len());
        SpaceTimeBox { x_min, x_max, t_min, t_max }
    }

    pub fn dim(&self) -> usize {
        self.x_min.len()
    }

    /// Closed-box membership.
    pub fn contains(&self, p: &Point) -> bool {
        if p.dim() != self.dim() || p.t < self.t_min || p.t > self.t_max {
            return false;
        }
        p.x.iter()
            .zip(self.x_min.iter().zip(&self.x_max))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn diameter(&self) -> f64 {
        let mut s = (self.t_max - self.t_min).powi(2);
        for (lo, hi) in self.x_min.iter().zip(&self.x_max) {
            s += (hi - lo).powi(2);
        }
        s.sqrt()
    }

    /// Grow the box by `eps` on every side.
    pub fn padded(&self, eps: f64) -> Self {
        SpaceTimeBox {
            x_min: self.x_min.iter().map(|v| v - eps).collect(),
            x_max: self.x_max.iter().map(|v| v + eps).collect(),
            t_min: self.t_min - eps,
            t_max: self.t_max + eps,
        }
    }
}
