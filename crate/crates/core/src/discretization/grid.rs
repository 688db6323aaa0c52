use serde::Serialize;

use super::DiscretizationError;

/// Uniform grid on `[0, L]` with `N` cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    length: f64,
    n_cells: usize,
    h: f64,
    nodes: Vec<f64>,
}

pub fn build_grid(length: f64, n_cells: usize) -> Result<Grid, DiscretizationError> {
    if !(length.is_finite() && length > 0.0) {
        return Err(DiscretizationError::InvalidLength(length));
    }
    if n_cells < 8 {
        return Err(DiscretizationError::TooCoarse(n_cells));
    }
    let h = length / n_cells as f64;
    let mut nodes: Vec<f64> = (0..=n_cells).map(|j| j as f64 * h).collect();
    nodes[n_cells] = length;
    Ok(Grid { length, n_cells, h, nodes })
}

impl Grid {
    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }
    pub fn node_count(&self) -> usize {
        self.n_cells + 1
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    /// Cell midpoints `x_{j+1/2}`, `j = 0..N-1`.
    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.n_cells).map(|j| (j as f64 + 0.5) * self.h).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let g = build_grid(1.0, 10).unwrap();
        assert!((g.h() - 0.1).abs() < 1e-15);
        assert_eq!(g.node_count(), 11);
        assert!((build_grid(1.0, 100).unwrap().h() - 0.01).abs() < 1e-15);
        assert_eq!(build_grid(2.0, 8).unwrap().nodes()[4], 1.0);
        assert_eq!(build_grid(1.0, 7), Err(DiscretizationError::TooCoarse(7)));
        assert!(build_grid(0.0, 10).is_err());
    }

    #[test]
    fn nodes_increase_and_end_at_length() {
        let g = build_grid(0.7, 37).unwrap();
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(*g.nodes().last().unwrap(), 0.7);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        assert!((g.h() * 37.0 - 0.7).abs() < 1e-14);
    }
}
