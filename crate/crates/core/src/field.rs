//! Scalar potential and normalized external velocity.
//!
//! The potential `u` solves the 5-point discrete Laplace equation on the
//! fluid cells with `u = 1` on target segments, `u = 0` on wall segments and
//! a homogeneous Neumann condition (ghost-cell mirror) on obstacle faces and
//! inflow segments. The external velocity is `w = grad(u) / |grad(u)|`, with
//! a zero fallback at critical points.

use std::io::Write;

use thiserror::Error;

use crate::geometry::{BoundaryLabel, Domain, Side, Vec2};
use crate::macro_engine::GridSpec;
use crate::scalar::Scalar;

/// Threshold below which the gradient is treated as zero.
const EPS_GRAD: f64 = 1e-12;

/// Errors raised by the potential solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("residual {residual} above tolerance after {iters} iterations")]
    NonConvergence { residual: f64, iters: usize },
    #[error("domain has no target-labeled boundary segment")]
    NoTargetSegment,
    #[error("grid does not cover the domain bounds")]
    GridDomainMismatch,
    #[error("obstacle {0} spans fewer than two cells on some side")]
    UnresolvedObstacle(usize),
}

/// Order in which the solver visits cells within one sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOrder {
    RedBlack,
    Lexicographic,
}

/// Iteration controls for [`solve_potential`].
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions<S> {
    pub tol: S,
    pub max_iters: usize,
    pub omega: S,
    pub sweep: SweepOrder,
}

impl<S: Scalar> Default for SolverOptions<S> {
    fn default() -> Self {
        Self {
            tol: S::from_f64c(1e-10),
            max_iters: 100_000,
            omega: S::from_f64c(1.7),
            sweep: SweepOrder::RedBlack,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FaceCond {
    /// Open face toward another fluid cell.
    Fluid(u32),
    /// Face with a fixed potential value on the boundary (targets, walls).
    Dirichlet(u8),
    /// Mirror face: obstacle sides, inflow segments, missing neighbors.
    Neumann,
}

/// Solved potential and its derived unit velocity field.
#[derive(Debug, Clone)]
pub struct PotentialField<S> {
    pub spec: GridSpec<S>,
    u: Vec<S>,
    w: Vec<Vec2<S>>,
    obstacle: Vec<bool>,
    pub iters: usize,
    pub residual: S,
}

impl<S: Scalar> PotentialField<S> {
    pub fn u(&self) -> &[S] {
        &self.u
    }

    pub fn u_at(&self, i: usize, j: usize) -> S {
        self.u[self.spec.index(i, j)]
    }

    pub fn velocity_at(&self, i: usize, j: usize) -> Vec2<S> {
        self.w[self.spec.index(i, j)]
    }

    pub fn is_obstacle(&self, i: usize, j: usize) -> bool {
        self.obstacle[self.spec.index(i, j)]
    }

    /// Builds a field from given potential values; used to derive velocities
    /// from analytically known potentials.
    pub fn from_values(spec: GridSpec<S>, u: Vec<S>, obstacle: Vec<bool>) -> Self {
        assert_eq!(u.len(), spec.n_cells());
        assert_eq!(obstacle.len(), spec.n_cells());
        let w = gradient_velocity(&spec, &u, &obstacle);
        Self {
            spec,
            u,
            w,
            obstacle,
            iters: 0,
            residual: S::zero(),
        }
    }

    /// Dumps the field row-major as `i,j,x,y,u,wx,wy`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "i,j,x,y,u,wx,wy")?;
        for j in 0..self.spec.ny {
            for i in 0..self.spec.nx {
                let c = self.spec.cell_center(i, j);
                let idx = self.spec.index(i, j);
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    i, j, c.x, c.y, self.u[idx], self.w[idx].x, self.w[idx].y
                )?;
            }
        }
        Ok(())
    }
}

/// External velocity of one cell (unit length or zero).
pub fn external_velocity<S: Scalar>(field: &PotentialField<S>, cell: (usize, usize)) -> Vec2<S> {
    field.velocity_at(cell.0, cell.1)
}

struct Stencil<S> {
    faces: Vec<[FaceCond; 4]>,
    diag: Vec<S>,
    rhs: Vec<S>,
    obstacle: Vec<bool>,
}

fn classify_cells<S: Scalar>(domain: &Domain<S>, spec: &GridSpec<S>) -> Vec<bool> {
    let mut obstacle = vec![false; spec.n_cells()];
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let c = spec.cell_center(i, j);
            if domain.obstacles().iter().any(|o| o.contains(c)) {
                obstacle[spec.index(i, j)] = true;
            }
        }
    }
    obstacle
}

fn outer_face_cond<S: Scalar>(domain: &Domain<S>, spec: &GridSpec<S>, side: Side, i: usize, j: usize) -> FaceCond {
    let mid = match side {
        Side::Left | Side::Right => spec.cell_center(i, j).y,
        Side::Bottom | Side::Top => spec.cell_center(i, j).x,
    };
    match domain.label_at(side, mid) {
        BoundaryLabel::Target => FaceCond::Dirichlet(1),
        BoundaryLabel::Wall => FaceCond::Dirichlet(0),
        BoundaryLabel::Inflow => FaceCond::Neumann,
    }
}

fn build_stencil<S: Scalar>(domain: &Domain<S>, spec: &GridSpec<S>, obstacle: &[bool]) -> Stencil<S> {
    let n = spec.n_cells();
    let mut faces = vec![[FaceCond::Neumann; 4]; n];
    let mut diag = vec![S::zero(); n];
    let mut rhs = vec![S::zero(); n];
    let four = S::from_f64c(4.0);
    let two = S::from_f64c(2.0);

    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let idx = spec.index(i, j);
            if obstacle[idx] {
                continue;
            }
            let neighbors = [
                (i.checked_sub(1).map(|ii| (ii, j)), Side::Left),
                ((i + 1 < spec.nx).then_some((i + 1, j)), Side::Right),
                (j.checked_sub(1).map(|jj| (i, jj)), Side::Bottom),
                ((j + 1 < spec.ny).then_some((i, j + 1)), Side::Top),
            ];
            let mut d = four;
            let mut b = S::zero();
            for (f, (nb, side)) in neighbors.into_iter().enumerate() {
                let cond = match nb {
                    Some((ni, nj)) => {
                        let nidx = spec.index(ni, nj);
                        if obstacle[nidx] {
                            FaceCond::Neumann
                        } else {
                            FaceCond::Fluid(nidx as u32)
                        }
                    }
                    None => outer_face_cond(domain, spec, side, i, j),
                };
                match cond {
                    FaceCond::Fluid(_) => {}
                    FaceCond::Dirichlet(g) => {
                        d += S::one();
                        b += two * S::from_count(g as usize);
                    }
                    FaceCond::Neumann => d -= S::one(),
                }
                faces[idx][f] = cond;
            }
            diag[idx] = d;
            rhs[idx] = b;
        }
    }
    Stencil {
        faces,
        diag,
        rhs,
        obstacle: obstacle.to_vec(),
    }
}

fn fluid_neighbor_sum<S: Scalar>(st: &Stencil<S>, u: &[S], idx: usize) -> S {
    let mut sum = S::zero();
    for cond in st.faces[idx] {
        if let FaceCond::Fluid(nb) = cond {
            sum += u[nb as usize];
        }
    }
    sum
}

fn max_residual<S: Scalar>(st: &Stencil<S>, u: &[S]) -> S {
    let mut worst = S::zero();
    for idx in 0..u.len() {
        if st.obstacle[idx] || st.diag[idx] == S::zero() {
            continue;
        }
        let r = (st.diag[idx] * u[idx] - fluid_neighbor_sum(st, u, idx) - st.rhs[idx]).abs();
        worst = worst.max(r);
    }
    worst
}

/// Solves the discrete Laplace problem for the potential and derives `w`.
pub fn solve_potential<S: Scalar>(
    domain: &Domain<S>,
    spec: &GridSpec<S>,
    opts: &SolverOptions<S>,
) -> Result<PotentialField<S>, FieldError> {
    if !domain.has_target() {
        return Err(FieldError::NoTargetSegment);
    }
    let extent = spec.extent();
    let tol_geo = spec.h * S::from_f64c(1e-9);
    let b = domain.bounds();
    if (extent.min - b.min).norm() > tol_geo || (extent.max - b.max).norm() > tol_geo {
        return Err(FieldError::GridDomainMismatch);
    }
    let two_h = spec.h * S::from_f64c(2.0) - tol_geo;
    for (k, o) in domain.obstacles().iter().enumerate() {
        if o.width() < two_h || o.height() < two_h {
            return Err(FieldError::UnresolvedObstacle(k));
        }
    }

    let obstacle = classify_cells(domain, spec);
    let st = build_stencil(domain, spec, &obstacle);

    let mut order: Vec<u32> = Vec::with_capacity(spec.n_cells());
    match opts.sweep {
        SweepOrder::RedBlack => {
            for parity in 0..2usize {
                for j in 0..spec.ny {
                    for i in 0..spec.nx {
                        if (i + j) % 2 == parity && !obstacle[spec.index(i, j)] {
                            order.push(spec.index(i, j) as u32);
                        }
                    }
                }
            }
        }
        SweepOrder::Lexicographic => {
            for j in 0..spec.ny {
                for i in 0..spec.nx {
                    if !obstacle[spec.index(i, j)] {
                        order.push(spec.index(i, j) as u32);
                    }
                }
            }
        }
    }

    let mut u = vec![S::zero(); spec.n_cells()];
    let mut iters = 0;
    while iters < opts.max_iters {
        for &idx in &order {
            let idx = idx as usize;
            let d = st.diag[idx];
            if d == S::zero() {
                continue;
            }
            let gs = (fluid_neighbor_sum(&st, &u, idx) + st.rhs[idx]) / d;
            let correction = opts.omega * (gs - u[idx]);
            u[idx] += correction;
        }
        iters += 1;
        if (iters % 8 == 0 && max_residual(&st, &u) <= opts.tol) || iters == opts.max_iters {
            break;
        }
    }
    let residual = max_residual(&st, &u);
    if residual > opts.tol {
        return Err(FieldError::NonConvergence {
            residual: residual.to_f64().unwrap_or(f64::NAN),
            iters,
        });
    }

    let w = gradient_velocity(spec, &u, &obstacle);
    Ok(PotentialField {
        spec: *spec,
        u,
        w,
        obstacle,
        iters,
        residual,
    })
}

/// Central-difference gradient of `u`, one-sided at the outer boundary, with
/// the component toward any obstacle-adjacent face set to zero, normalized.
fn gradient_velocity<S: Scalar>(spec: &GridSpec<S>, u: &[S], obstacle: &[bool]) -> Vec<Vec2<S>> {
    let h = spec.h;
    let two_h = h + h;
    let mut w = vec![Vec2::zero(); spec.n_cells()];
    let axis_deriv = |lo: Option<usize>, hi: Option<usize>, c: usize| -> S {
        let lo_obstacle = lo.map(|k| obstacle[k]).unwrap_or(false);
        let hi_obstacle = hi.map(|k| obstacle[k]).unwrap_or(false);
        if lo_obstacle || hi_obstacle {
            return S::zero();
        }
        match (lo, hi) {
            (Some(a), Some(b)) => (u[b] - u[a]) / two_h,
            (None, Some(b)) => (u[b] - u[c]) / h,
            (Some(a), None) => (u[c] - u[a]) / h,
            (None, None) => S::zero(),
        }
    };
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let idx = spec.index(i, j);
            if obstacle[idx] {
                continue;
            }
            let west = (i > 0).then(|| spec.index(i - 1, j));
            let east = (i + 1 < spec.nx).then(|| spec.index(i + 1, j));
            let south = (j > 0).then(|| spec.index(i, j - 1));
            let north = (j + 1 < spec.ny).then(|| spec.index(i, j + 1));
            let g = Vec2::new(axis_deriv(west, east, idx), axis_deriv(south, north, idx));
            if g.norm() >= S::from_f64c(EPS_GRAD) {
                w[idx] = g.normalized().unwrap();
            }
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundarySegment, Rect};

    fn left_right_domain() -> Domain<f64> {
        let bounds = Rect::from_corners(0.0, 0.0, 1.0, 1.0).unwrap();
        let mut d = Domain::walled(bounds);
        d.relabel_side(Side::Right, BoundaryLabel::Target);
        d.relabel_side(Side::Top, BoundaryLabel::Inflow);
        d.relabel_side(Side::Bottom, BoundaryLabel::Inflow);
        d
    }

    fn solve(domain: &Domain<f64>, n: usize, opts: &SolverOptions<f64>) -> PotentialField<f64> {
        let spec = GridSpec::cover(domain.bounds(), n, n).unwrap();
        solve_potential(domain, &spec, opts).unwrap()
    }

    #[test]
    fn unit_square_reproduces_linear_potential() {
        let domain = left_right_domain();
        let field = solve(&domain, 32, &SolverOptions::default());
        let spec = field.spec;
        let mut max_err = 0.0f64;
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                let x = spec.cell_center(i, j).x;
                max_err = max_err.max((field.u_at(i, j) - x).abs());
            }
        }
        assert!(max_err <= 1e-6, "max error {max_err}");
    }

    #[test]
    fn unit_square_velocity_is_unit_rightward() {
        let domain = left_right_domain();
        let field = solve(&domain, 32, &SolverOptions::default());
        for j in 0..field.spec.ny {
            for i in 0..field.spec.nx {
                let w = external_velocity(&field, (i, j));
                assert!((w.x - 1.0).abs() < 1e-6 && w.y.abs() < 1e-6, "w = {w:?} at ({i},{j})");
            }
        }
    }

    #[test]
    fn constant_potential_gives_zero_velocity() {
        let spec = GridSpec::cover(&Rect::from_corners(0.0, 0.0, 1.0, 1.0).unwrap(), 8, 8).unwrap();
        let field = PotentialField::from_values(spec, vec![0.5; 64], vec![false; 64]);
        for j in 0..8 {
            for i in 0..8 {
                assert_eq!(field.velocity_at(i, j), Vec2::zero());
            }
        }
    }

    #[test]
    fn missing_target_is_rejected() {
        let bounds = Rect::from_corners(0.0, 0.0, 1.0, 1.0).unwrap();
        let domain = Domain::walled(bounds);
        let spec = GridSpec::cover(&bounds, 8, 8).unwrap();
        let got = solve_potential(&domain, &spec, &SolverOptions::default());
        assert_eq!(got.err(), Some(FieldError::NoTargetSegment));
    }

    #[test]
    fn iteration_starved_solver_reports_nonconvergence() {
        let domain = left_right_domain();
        let spec = GridSpec::cover(domain.bounds(), 32, 32).unwrap();
        let opts = SolverOptions {
            max_iters: 3,
            ..SolverOptions::default()
        };
        let got = solve_potential(&domain, &spec, &opts);
        assert!(matches!(got.err(), Some(FieldError::NonConvergence { .. })));
    }

    #[test]
    fn coarse_obstacle_is_rejected() {
        let bounds = Rect::from_corners(0.0, 0.0, 1.0, 1.0).unwrap();
        let tiny = Rect::from_corners(0.5, 0.5, 0.55, 0.55).unwrap();
        let mut domain = Domain::new(
            bounds,
            vec![tiny],
            Domain::walled(bounds).segments().to_vec(),
        )
        .unwrap();
        domain.relabel_side(Side::Right, BoundaryLabel::Target);
        let spec = GridSpec::cover(&bounds, 8, 8).unwrap();
        let got = solve_potential(&domain, &spec, &SolverOptions::default());
        assert_eq!(got.err(), Some(FieldError::UnresolvedObstacle(0)));
    }

    #[test]
    fn obstacle_solution_is_symmetric_and_bounded() {
        let bounds = Rect::from_corners(0.0, 0.0, 1.0, 1.0).unwrap();
        let obstacle = Rect::from_corners(0.375, 0.375, 0.625, 0.625).unwrap();
        let mut domain = Domain::new(
            bounds,
            vec![obstacle],
            Domain::walled(bounds).segments().to_vec(),
        )
        .unwrap();
        domain.relabel_side(Side::Right, BoundaryLabel::Target);
        let opts = SolverOptions {
            tol: 1e-11,
            ..SolverOptions::default()
        };
        let field = solve(&domain, 32, &opts);
        let spec = field.spec;
        let mut asym = 0.0f64;
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                let u = field.u_at(i, j);
                assert!((0.0..=1.0).contains(&u), "u out of range: {u}");
                let mirrored = field.u_at(i, spec.ny - 1 - j);
                asym = asym.max((u - mirrored).abs());
            }
        }
        assert!(asym <= 1e-8, "asymmetry {asym}");
    }

    #[test]
    fn obstacle_adjacent_cells_have_no_normal_velocity() {
        let bounds = Rect::from_corners(0.0, 0.0, 1.0, 1.0).unwrap();
        let obstacle = Rect::from_corners(0.375, 0.375, 0.625, 0.625).unwrap();
        let mut domain = Domain::new(
            bounds,
            vec![obstacle],
            Domain::walled(bounds).segments().to_vec(),
        )
        .unwrap();
        domain.relabel_side(Side::Right, BoundaryLabel::Target);
        let field = solve(&domain, 32, &SolverOptions::default());
        let spec = field.spec;
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                if field.is_obstacle(i, j) {
                    continue;
                }
                let w = field.velocity_at(i, j);
                let blocked_x = (i > 0 && field.is_obstacle(i - 1, j))
                    || (i + 1 < spec.nx && field.is_obstacle(i + 1, j));
                let blocked_y = (j > 0 && field.is_obstacle(i, j - 1))
                    || (j + 1 < spec.ny && field.is_obstacle(i, j + 1));
                if blocked_x {
                    assert!(w.x.abs() <= 1e-8, "w.x = {} at ({i},{j})", w.x);
                }
                if blocked_y {
                    assert!(w.y.abs() <= 1e-8, "w.y = {} at ({i},{j})", w.y);
                }
            }
        }
    }

    #[test]
    fn sweep_orders_agree_at_convergence() {
        let bounds = Rect::from_corners(0.0f64, 0.0, 1.0, 1.0).unwrap();
        let obstacle = Rect::from_corners(0.25, 0.5, 0.5, 0.75).unwrap();
        let mut domain = Domain::new(
            bounds,
            vec![obstacle],
            Domain::walled(bounds).segments().to_vec(),
        )
        .unwrap();
        domain.relabel_side(Side::Top, BoundaryLabel::Target);
        let spec = GridSpec::cover(&bounds, 24, 24).unwrap();
        let tight = SolverOptions {
            tol: 1e-12,
            ..SolverOptions::default()
        };
        let rb = solve_potential(&domain, &spec, &tight).unwrap();
        let lex = solve_potential(
            &domain,
            &spec,
            &SolverOptions {
                sweep: SweepOrder::Lexicographic,
                ..tight
            },
        )
        .unwrap();
        let diff = rb
            .u()
            .iter()
            .zip(lex.u())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(diff <= 1e-9, "sweep-order difference {diff}");
    }

    #[test]
    fn residual_recheck_matches_contract() {
        let domain = left_right_domain();
        let spec = GridSpec::cover(domain.bounds(), 32, 32).unwrap();
        let opts = SolverOptions::default();
        let field = solve_potential(&domain, &spec, &opts).unwrap();
        let obstacle = vec![false; spec.n_cells()];
        let st = build_stencil(&domain, &spec, &obstacle);
        assert!(max_residual(&st, field.u()) <= opts.tol);
    }

    #[test]
    fn corner_target_pulls_velocity_into_first_quadrant() {
        let bounds = Rect::from_corners(0.0, 0.0, 1.0, 1.0).unwrap();
        let mut segments: Vec<BoundarySegment<f64>> = vec![
            BoundarySegment {
                side: Side::Right,
                span: (0.0, 0.5),
                label: BoundaryLabel::Wall,
            },
            BoundarySegment {
                side: Side::Right,
                span: (0.5, 1.0),
                label: BoundaryLabel::Target,
            },
            BoundarySegment {
                side: Side::Top,
                span: (0.0, 0.5),
                label: BoundaryLabel::Wall,
            },
            BoundarySegment {
                side: Side::Top,
                span: (0.5, 1.0),
                label: BoundaryLabel::Target,
            },
        ];
        for side in [Side::Left, Side::Bottom] {
            segments.push(BoundarySegment::full_side(side, &bounds, BoundaryLabel::Wall));
        }
        let domain = Domain::new(bounds, vec![], segments).unwrap();
        let spec = GridSpec::cover(&bounds, 32, 32).unwrap();
        let field = solve_potential(&domain, &spec, &SolverOptions::default()).unwrap();
        let w = field.velocity_at(1, 1);
        assert!(w.x > 0.0 && w.y > 0.0, "w = {w:?}");
    }
}
