/// Uniform midpoint evaluation grid on `[0, 1]`.
///
/// Point `l` (zero-based) sits at `(l + 0.5) / m`; each point carries Riemann
/// weight `1/m`, so univariate grid sums are weighted `1/m` and bivariate
/// sums `1/m^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn uniform(m: usize) -> Self {
        assert!(m >= 1, "grid needs at least one point");
        let points = (0..m).map(|l| (l as f64 + 0.5) / m as f64).collect();
        Grid { points }
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    #[inline]
    pub fn point(&self, l: usize) -> f64 {
        self.points[l]
    }

    /// Riemann weight of one cell, `1/m`.
    #[inline]
    pub fn cell_weight(&self) -> f64 {
        1.0 / self.m() as f64
    }

    /// Indices of grid points inside `[x - radius, x + radius]`, with a
    /// one-cell safety margin. Used to skip kernel evaluations that are
    /// identically zero outside the support window.
    #[inline]
    pub fn support_window(&self, x: f64, radius: f64) -> std::ops::Range<usize> {
        let m = self.m() as f64;
        let lo = ((x - radius) * m - 0.5).floor() as i64 - 1;
        let hi = ((x + radius) * m - 0.5).ceil() as i64 + 2;
        let lo = lo.clamp(0, self.m() as i64) as usize;
        let hi = hi.clamp(0, self.m() as i64) as usize;
        lo..hi
    }
}
