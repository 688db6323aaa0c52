use crate::linalg::{BandMatrix, Csr, Triplets};
use crate::model::{DampingConfig, FieldState, PhysicalParams};

use super::{DiscretizationError, Grid};

/// The eight time-domain unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    V,
    Phi,
    Theta,
    Eta,
    Vt,
    PhiT,
    ThetaT,
    EtaT,
}

impl Field {
    pub const ALL: [Field; 8] = [
        Field::V,
        Field::Phi,
        Field::Theta,
        Field::Eta,
        Field::Vt,
        Field::PhiT,
        Field::ThetaT,
        Field::EtaT,
    ];

    fn slot(self) -> usize {
        self as usize
    }

    /// Dirichlet nodes carry no unknown: `v` (and `v_t`) at `x = 0`,
    /// `theta` (and `theta_t`) at both ends.
    fn eliminated(self, j: usize, n_cells: usize) -> bool {
        match self {
            Field::V | Field::Vt => j == 0,
            Field::Theta | Field::ThetaT => j == 0 || j == n_cells,
            _ => false,
        }
    }
}

/// First-order-in-time semi-discretization `y' = L_h y` of the four coupled
/// wave equations.
///
/// Unknowns are ordered node by node so that `L_h` is banded. Spatial
/// operators: centered differences in the interior, ghost reflection for the
/// Neumann conditions on `phi`, `eta`, and the Robin condition
/// `alpha v_x + gamma (phi + eta_t) = 0` at `x = L` eliminated through the
/// ghost value `v_{N+1} = v_{N-1} - (2 h gamma / alpha)(phi + eta_t)_N`.
/// First derivatives use the summation-by-parts operator of
/// [`super::stencil::d1_sbp`].
#[derive(Debug, Clone)]
pub struct SemiDiscreteSystem {
    grid: Grid,
    params: PhysicalParams,
    damping: DampingConfig,
    index: Vec<[Option<usize>; 8]>,
    dimension: usize,
    csr: Csr,
    matrix: BandMatrix,
}

pub fn assemble_time_domain(
    params: &PhysicalParams,
    damping: &DampingConfig,
    grid: &Grid,
) -> Result<SemiDiscreteSystem, DiscretizationError> {
    damping.validate()?;
    if (grid.length() - params.length()).abs() > 1e-12 * params.length() {
        return Err(DiscretizationError::LengthMismatch { grid: grid.length(), params: params.length() });
    }
    let n = grid.n_cells();
    let mut index = vec![[None; 8]; n + 1];
    let mut next = 0;
    for (j, slots) in index.iter_mut().enumerate() {
        for f in Field::ALL {
            if !f.eliminated(j, n) {
                slots[f.slot()] = Some(next);
                next += 1;
            }
        }
    }
    let dimension = next;
    let h = grid.h();
    let (rho, alpha, gamma) = (params.rho(), params.alpha(), params.gamma());
    let (eps3, mu, xi) = (params.eps3(), params.mu(), params.xi());
    let (a, b, c) = (damping.a, damping.b, damping.c);
    let wave = mu / eps3;
    let mass = mu / (xi * eps3);
    let h2 = h * h;

    let mut t = Triplets::new(dimension, dimension);
    let mut put = |rf: Field, rj: usize, cf: Field, cj: usize, v: f64| {
        if let (Some(r), Some(c)) = (index[rj][rf.slot()], index[cj][cf.slot()]) {
            t.push(r, c, v);
        }
    };

    // SBP first derivative row j as (node, weight) pairs
    let d1 = |j: usize| -> Vec<(usize, f64)> {
        if j == 0 {
            vec![(0, -1.0 / h), (1, 1.0 / h)]
        } else if j == n {
            vec![(n - 1, -1.0 / h), (n, 1.0 / h)]
        } else {
            vec![(j - 1, -0.5 / h), (j + 1, 0.5 / h)]
        }
    };
    // Neumann Laplacian by ghost reflection
    let lap_neumann = |j: usize| -> Vec<(usize, f64)> {
        if j == 0 {
            vec![(0, -2.0 / h2), (1, 2.0 / h2)]
        } else if j == n {
            vec![(n - 1, 2.0 / h2), (n, -2.0 / h2)]
        } else {
            vec![(j - 1, 1.0 / h2), (j, -2.0 / h2), (j + 1, 1.0 / h2)]
        }
    };

    for j in 0..=n {
        for (p, pt) in [
            (Field::V, Field::Vt),
            (Field::Phi, Field::PhiT),
            (Field::Theta, Field::ThetaT),
            (Field::Eta, Field::EtaT),
        ] {
            put(p, j, pt, j, 1.0);
        }

        // rho v_tt = alpha v_xx + gamma (phi + eta_t)_x - a v_t
        if j >= 1 {
            let lap: Vec<(usize, f64)> = if j == n {
                vec![(n - 1, 2.0 / h2), (n, -2.0 / h2)]
            } else {
                vec![(j - 1, 1.0 / h2), (j, -2.0 / h2), (j + 1, 1.0 / h2)]
            };
            for (k, w) in lap {
                put(Field::Vt, j, Field::V, k, alpha / rho * w);
            }
            for (k, w) in d1(j) {
                put(Field::Vt, j, Field::Phi, k, gamma / rho * w);
                put(Field::Vt, j, Field::EtaT, k, gamma / rho * w);
            }
            if j == n {
                let g = -2.0 * gamma / (rho * h);
                put(Field::Vt, n, Field::Phi, n, g);
                put(Field::Vt, n, Field::EtaT, n, g);
            }
            put(Field::Vt, j, Field::Vt, j, -a / rho);
        }

        // phi_tt = (mu/eps3) phi_xx - (mu/(xi eps3)) phi + (gamma mu/(xi eps3^2)) v_x
        for (k, w) in lap_neumann(j) {
            put(Field::PhiT, j, Field::Phi, k, wave * w);
            put(Field::EtaT, j, Field::Eta, k, wave * w);
        }
        put(Field::PhiT, j, Field::Phi, j, -mass);
        for (k, w) in d1(j) {
            put(Field::PhiT, j, Field::V, k, gamma * mu / (xi * eps3 * eps3) * w);
        }

        // theta_tt = (mu/eps3) theta_xx - (mu/(xi eps3)) theta - b (theta_t + phi_x)
        if j >= 1 && j < n {
            for (k, w) in [(j - 1, 1.0 / h2), (j, -2.0 / h2), (j + 1, 1.0 / h2)] {
                put(Field::ThetaT, j, Field::Theta, k, wave * w);
            }
            put(Field::ThetaT, j, Field::Theta, j, -mass);
            put(Field::ThetaT, j, Field::ThetaT, j, -b);
            for (k, w) in d1(j) {
                put(Field::ThetaT, j, Field::Phi, k, -b * w);
            }
        }

        // eta_tt = (mu/eps3) eta_xx - (mu/(xi eps3)) eta + (gamma/eps3) v_tx - c (eta_t + phi)
        put(Field::EtaT, j, Field::Eta, j, -mass);
        for (k, w) in d1(j) {
            put(Field::EtaT, j, Field::Vt, k, gamma / eps3 * w);
        }
        put(Field::EtaT, j, Field::EtaT, j, -c);
        put(Field::EtaT, j, Field::Phi, j, -c);
    }

    let csr = Csr::from_triplets(&t);
    let matrix = csr.to_band();
    Ok(SemiDiscreteSystem {
        grid: grid.clone(),
        params: *params,
        damping: *damping,
        index,
        dimension,
        csr,
        matrix,
    })
}

impl SemiDiscreteSystem {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }
    pub fn damping(&self) -> &DampingConfig {
        &self.damping
    }
    pub fn dimension(&self) -> usize {
        self.dimension
    }
    pub fn matrix(&self) -> &BandMatrix {
        &self.matrix
    }
    pub fn sparse(&self) -> &Csr {
        &self.csr
    }

    /// Global index of `field` at node `j`, `None` on eliminated Dirichlet nodes.
    pub fn dof(&self, field: Field, j: usize) -> Option<usize> {
        self.index.get(j).and_then(|s| s[field.slot()])
    }

    /// Packs nodal arrays; values on eliminated nodes are dropped.
    pub fn pack(&self, state: &FieldState) -> Vec<f64> {
        let mut y = vec![0.0; self.dimension];
        let arrays = state.fields();
        for (j, slots) in self.index.iter().enumerate() {
            for (k, slot) in slots.iter().enumerate() {
                if let Some(i) = slot {
                    y[*i] = arrays[k][j];
                }
            }
        }
        y
    }

    /// Unpacks into nodal arrays with Dirichlet values set to zero.
    pub fn unpack(&self, y: &[f64], time: f64) -> FieldState {
        let mut s = FieldState::zeros(&self.grid);
        s.time = time;
        let arrays = s.fields_mut();
        for (j, slots) in self.index.iter().enumerate() {
            for (k, slot) in slots.iter().enumerate() {
                if let Some(i) = slot {
                    arrays[k][j] = y[*i];
                }
            }
        }
        s
    }

    /// `L_h y` as a nodal state of time derivatives.
    pub fn apply(&self, state: &FieldState) -> FieldState {
        let y = self.pack(state);
        let mut out = vec![0.0; self.dimension];
        self.matrix.matvec(&y, &mut out);
        self.unpack(&out, state.time)
    }
}
