//! Adaptive Runge-Kutta integration with stored nodes and cubic Hermite
//! dense output.
//!
//! The Killing machinery integrates small linear systems (2n components,
//! n ≤ a few) but needs the solution and its derivative at prescribed grid
//! points with errors well below the test tolerances. The integrator is a
//! Dormand-Prince 5(4) pair; every accepted step endpoint is stored, steps are
//! forced to land exactly on caller-required points, and the step size is
//! capped so that Hermite interpolation between nodes stays below ~1e-10.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// One stored integration node: abscissa, state, and state derivative.
#[derive(Debug, Clone)]
pub struct Node {
    pub u: f64,
    pub y: DVector<f64>,
    pub f: DVector<f64>,
}

/// A solution trajectory on an interval containing 0, with dense output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    nodes: Vec<Node>,
}

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_H_MAX: f64 = 0.02;

impl Trajectory {
    pub fn u_min(&self) -> f64 {
        self.nodes.first().map(|n| n.u).unwrap_or(0.0)
    }

    pub fn u_max(&self) -> f64 {
        self.nodes.last().map(|n| n.u).unwrap_or(0.0)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    fn locate(&self, u: f64) -> Result<usize> {
        if self.nodes.is_empty() {
            return Err(Error::OutOfRange {
                u,
                min: 0.0,
                max: 0.0,
            });
        }
        let (min, max) = (self.u_min(), self.u_max());
        let span = (max - min).abs().max(1.0);
        if u < min - 1e-9 * span || u > max + 1e-9 * span {
            return Err(Error::OutOfRange { u, min, max });
        }
        // index of the last node with node.u <= u (clamped)
        let idx = self
            .nodes
            .partition_point(|n| n.u <= u)
            .saturating_sub(1)
            .min(self.nodes.len().saturating_sub(2));
        Ok(idx)
    }

    /// State at `u`: exact at nodes, cubic Hermite in between.
    pub fn eval(&self, u: f64) -> Result<DVector<f64>> {
        if self.nodes.len() == 1 {
            return Ok(self.nodes[0].y.clone());
        }
        let i = self.locate(u)?;
        let (a, b) = (&self.nodes[i], &self.nodes[i + 1]);
        if (u - a.u).abs() <= 1e-13 * (1.0 + a.u.abs()) {
            return Ok(a.y.clone());
        }
        if (u - b.u).abs() <= 1e-13 * (1.0 + b.u.abs()) {
            return Ok(b.y.clone());
        }
        let h = b.u - a.u;
        let t = (u - a.u) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Ok(&a.y * h00 + &a.f * (h10 * h) + &b.y * h01 + &b.f * (h11 * h))
    }

    /// State derivative at `u`: exact at nodes, derivative of the Hermite
    /// cubic in between.
    pub fn eval_derivative(&self, u: f64) -> Result<DVector<f64>> {
        if self.nodes.len() == 1 {
            return Ok(self.nodes[0].f.clone());
        }
        let i = self.locate(u)?;
        let (a, b) = (&self.nodes[i], &self.nodes[i + 1]);
        if (u - a.u).abs() <= 1e-13 * (1.0 + a.u.abs()) {
            return Ok(a.f.clone());
        }
        if (u - b.u).abs() <= 1e-13 * (1.0 + b.u.abs()) {
            return Ok(b.f.clone());
        }
        let h = b.u - a.u;
        let t = (u - a.u) / h;
        let t2 = t * t;
        let dh00 = (6.0 * t2 - 6.0 * t) / h;
        let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
        let dh01 = (-6.0 * t2 + 6.0 * t) / h;
        let dh11 = 3.0 * t2 - 2.0 * t;
        Ok(&a.y * dh00 + &a.f * dh10 + &b.y * dh01 + &b.f * dh11)
    }
}

// Dormand-Prince 5(4) coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate `y' = rhs(u, y)` from `u = 0` (initial state `y0`) over the
/// smallest interval containing 0 and all of `required`. Every accepted step
/// endpoint becomes a node and every required point is hit exactly.
pub fn integrate<F>(
    rhs: F,
    y0: DVector<f64>,
    required: &[f64],
    tol: f64,
    h_max: f64,
) -> Result<Trajectory>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let mut targets: Vec<f64> = required.to_vec();
    targets.push(0.0);
    targets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    targets.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let f0 = rhs(0.0, &y0)?;
    let mut nodes = vec![Node {
        u: 0.0,
        y: y0,
        f: f0,
    }];

    // forward sweep
    let forward: Vec<f64> = targets.iter().copied().filter(|&t| t > 1e-14).collect();
    let mut u = 0.0;
    let mut state = nodes[0].clone();
    for target in forward {
        segment(&rhs, &mut state, u, target, tol, h_max, &mut nodes)?;
        u = target;
    }
    // backward sweep
    let backward: Vec<f64> = targets
        .iter()
        .rev()
        .copied()
        .filter(|&t| t < -1e-14)
        .collect();
    let mut back_nodes: Vec<Node> = Vec::new();
    let mut u = 0.0;
    let mut state = nodes[0].clone();
    for target in backward {
        segment(&rhs, &mut state, u, target, tol, h_max, &mut back_nodes)?;
        u = target;
    }
    back_nodes.reverse();
    back_nodes.extend(nodes);
    Ok(Trajectory { nodes: back_nodes })
}

fn segment<F>(
    rhs: &F,
    state: &mut Node,
    u_start: f64,
    u_end: f64,
    tol: f64,
    h_max: f64,
    nodes: &mut Vec<Node>,
) -> Result<()>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let span = u_end - u_start;
    if span.abs() < 1e-14 {
        return Ok(());
    }
    let dir = span.signum();
    let mut u = u_start;
    let mut h = (h_max.min(span.abs())) * dir;
    let mut k1 = state.f.clone();
    let mut safety_counter = 0usize;
    while (u_end - u) * dir > 1e-14 {
        safety_counter += 1;
        if safety_counter > 2_000_000 {
            return Err(Error::StepUnderflow(u));
        }
        if (h.abs()) > (u_end - u).abs() {
            h = u_end - u;
        }
        let mut k = vec![k1.clone()];
        for stage in 0..6 {
            let mut yi = state.y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[stage][j];
                if a != 0.0 {
                    yi += kj * (a * h);
                }
            }
            k.push(rhs(u + C[stage] * h, &yi)?);
        }
        // 5th-order solution is the stage-7 argument (FSAL)
        let mut y5 = state.y.clone();
        for (j, kj) in k.iter().enumerate().take(6) {
            let b = A[5][j];
            if b != 0.0 {
                y5 += kj * (b * h);
            }
        }
        let mut y4 = state.y.clone();
        for (j, kj) in k.iter().enumerate() {
            if B4[j] != 0.0 {
                y4 += kj * (B4[j] * h);
            }
        }
        let mut err: f64 = 0.0;
        for i in 0..y5.len() {
            let scale = tol + tol * y5[i].abs().max(state.y[i].abs());
            err = err.max(((y5[i] - y4[i]) / scale).abs());
        }
        if err <= 1.0 {
            u += h;
            let f_new = k[6].clone();
            *state = Node { u, y: y5, f: f_new };
            nodes.push(state.clone());
            k1 = state.f.clone();
            let grow = if err == 0.0 {
                5.0
            } else {
                0.9 * err.powf(-0.2)
            };
            h = (h * grow.clamp(0.2, 5.0)).clamp(-h_max, h_max);
            if h == 0.0 {
                h = h_max * dir;
            }
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            if h.abs() < 1e-13 * (1.0 + u.abs()) {
                return Err(Error::StepUnderflow(u));
            }
        }
    }
    Ok(())
}

/// Uniformly spaced sample points, endpoints included.
pub fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![a];
    }
    (0..count)
        .map(|i| a + (b - a) * (i as f64) / ((count - 1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_hyperbolic_cosine_system() {
        // psi'' = psi, psi(0) = 0, psi'(0) = 1 -> sinh
        let rhs = |_u: f64, y: &DVector<f64>| Ok(DVector::from_vec(vec![y[1], y[0]]));
        let required = linspace(-2.0, 2.0, 41);
        let traj = integrate(
            rhs,
            DVector::from_vec(vec![0.0, 1.0]),
            &required,
            DEFAULT_TOL,
            DEFAULT_H_MAX,
        )
        .unwrap();
        for &u in &required {
            let y = traj.eval(u).unwrap();
            assert!((y[0] - u.sinh()).abs() < 1e-10, "sinh mismatch at {u}");
            assert!((y[1] - u.cosh()).abs() < 1e-10);
        }
        let y1 = traj.eval(1.0).unwrap();
        assert!((y1[0] - 1.175_201_193_643_801_4).abs() < 1e-10);
    }

    #[test]
    fn dense_output_between_nodes() {
        let rhs = |_u: f64, y: &DVector<f64>| Ok(DVector::from_vec(vec![y[1], -y[0]]));
        let traj = integrate(
            rhs,
            DVector::from_vec(vec![0.0, 1.0]),
            &[3.0],
            DEFAULT_TOL,
            DEFAULT_H_MAX,
        )
        .unwrap();
        // off-node queries (irrational offsets) still track sin to Hermite accuracy
        for &u in &[0.137, 1.731, 2.414] {
            let y = traj.eval(u).unwrap();
            assert!((y[0] - u.sin()).abs() < 1e-9, "sin mismatch at {u}");
            let d = traj.eval_derivative(u).unwrap();
            assert!((d[0] - u.cos()).abs() < 1e-7);
        }
    }

    #[test]
    fn out_of_range_is_an_error() {
        let rhs = |_u: f64, y: &DVector<f64>| Ok(y.clone() * 0.0);
        let traj = integrate(
            rhs,
            DVector::from_vec(vec![1.0]),
            &[1.0],
            DEFAULT_TOL,
            DEFAULT_H_MAX,
        )
        .unwrap();
        assert!(matches!(traj.eval(2.0), Err(Error::OutOfRange { .. })));
    }
}
