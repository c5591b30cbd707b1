//! Contact-force distribution: grasp matrix, linearized friction cones and
//! the small QP
//!
//! ```text
//! min ½ yᵀy   s.t.   A y = b,   G y ≤ h
//! ```
//!
//! `y` stacks the contact forces, each expressed in the object frame.
//!
//! The solver removes the equalities first. From a pivoted QR of `Aᵀ`,
//! every feasible `y` is `x0 + Z z` where `x0 = A⁺ b` is the minimum-norm solution and the
//! columns of `Z` span the null space of `A`. Since `x0 ⟂ Z` the objective
//! becomes `½‖z‖²` plus a constant, so what remains is the projection of the
//! origin onto a polyhedron. That is solved with the Goldfarb–Idnani dual
//! active-set method, which starts at the unconstrained minimum and adds
//! violated constraints one at a time. A previous active set can seed the
//! search.
//!
//! A rank-deficient `A` is handled through the pivoted QR, which gives the
//! same minimum-norm solution as the pseudoinverse; if `b` is not in its
//! range (residual above [`EQUALITY_TOLERANCE`]) the problem is reported
//! infeasible.

use nalgebra::{DMatrix, DVector, Dyn, Matrix3, PermutationSequence, Vector3};
use thiserror::Error;

/// Equality residual above which `A y = b` is declared inconsistent.
pub const EQUALITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    /// Contact point in the object frame, m.
    pub location: Vector3<f64>,
    /// Unit normal in the object frame, pointing into the object.
    pub normal: Vector3<f64>,
    pub t1: Vector3<f64>,
    pub t2: Vector3<f64>,
}

impl Contact {
    /// Normalizes `normal` and picks tangents completing a right-handed
    /// orthonormal frame `(t1, t2, n)`.
    pub fn new(location: Vector3<f64>, normal: Vector3<f64>) -> Self {
        let n = normal.normalize();
        let axis = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
            Vector3::x()
        } else if n.y.abs() <= n.z.abs() {
            Vector3::y()
        } else {
            Vector3::z()
        };
        let t1 = n.cross(&axis).normalize();
        let t2 = n.cross(&t1);
        Self { location, normal: n, t1, t2 }
    }

    fn check(&self) -> Result<(), GraspError> {
        let frame = [self.t1, self.t2, self.normal];
        for (i, a) in frame.iter().enumerate() {
            if !a.iter().chain(self.location.iter()).all(|x| x.is_finite()) {
                return Err(GraspError::InvalidContact("non-finite contact".into()));
            }
            if (a.norm() - 1.0).abs() > 1e-12 {
                return Err(GraspError::InvalidContact("contact frame vectors must be unit".into()));
            }
            for b in &frame[i + 1..] {
                if a.dot(b).abs() > 1e-12 {
                    return Err(GraspError::InvalidContact("contact frame is not orthogonal".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactSet {
    pub contacts: Vec<Contact>,
    /// Static friction coefficient.
    pub mu: f64,
}

impl ContactSet {
    pub fn new(contacts: Vec<Contact>, mu: f64) -> Result<Self, GraspError> {
        if contacts.is_empty() {
            return Err(GraspError::InvalidContact("at least one contact is required".into()));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(GraspError::InvalidContact(format!("friction coefficient must be positive, got {mu}")));
        }
        for c in &contacts {
            c.check()?;
        }
        Ok(Self { contacts, mu })
    }

    pub fn len(&self) -> usize {
        self.contacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contacts.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraspError {
    #[error("invalid contact set: {0}")]
    InvalidContact(String),
    #[error("invalid problem: {0}")]
    Dimension(String),
    #[error("force distribution infeasible (residual {residual:.3e})")]
    Infeasible { residual: f64 },
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// 6×3k map from stacked contact forces to the wrench about the object
/// origin: force rows on top, moment rows below.
pub fn build_grasp_matrix(contacts: &ContactSet) -> DMatrix<f64> {
    let k = contacts.len();
    let mut a = DMatrix::zeros(6, 3 * k);
    for (i, c) in contacts.contacts.iter().enumerate() {
        a.fixed_view_mut::<3, 3>(0, 3 * i).copy_from(&Matrix3::identity());
        a.fixed_view_mut::<3, 3>(3, 3 * i).copy_from(&skew(&c.location));
    }
    a
}

/// Rows per contact in [`build_friction_pyramid`].
pub const ROWS_PER_CONTACT: usize = 5;

/// Inscribed friction pyramid. Per contact: push-only `-n·f ≤ 0`, then
/// `±t1·f ≤ (μ/√2) n·f` and `±t2·f ≤ (μ/√2) n·f`. `h` is zero.
pub fn build_friction_pyramid(contacts: &ContactSet) -> (DMatrix<f64>, DVector<f64>) {
    let k = contacts.len();
    let slope = contacts.mu / std::f64::consts::SQRT_2;
    let mut g = DMatrix::zeros(ROWS_PER_CONTACT * k, 3 * k);
    for (i, c) in contacts.contacts.iter().enumerate() {
        let rows = [
            -c.normal,
            c.t1 - c.normal * slope,
            -c.t1 - c.normal * slope,
            c.t2 - c.normal * slope,
            -c.t2 - c.normal * slope,
        ];
        for (r, row) in rows.iter().enumerate() {
            g.fixed_view_mut::<1, 3>(ROWS_PER_CONTACT * i + r, 3 * i).copy_from(&row.transpose());
        }
    }
    (g, DVector::zeros(ROWS_PER_CONTACT * k))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraspQp {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
}

impl GraspQp {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, g: DMatrix<f64>, h: DVector<f64>) -> Result<Self, GraspError> {
        let n = a.ncols();
        if a.nrows() != b.len() || g.nrows() != h.len() || g.ncols() != n {
            return Err(GraspError::Dimension(format!(
                "A {}x{}, b {}, G {}x{}, h {}",
                a.nrows(), a.ncols(), b.len(), g.nrows(), g.ncols(), h.len()
            )));
        }
        let finite = |m: &[f64]| m.iter().all(|x| x.is_finite());
        if !(finite(a.as_slice()) && finite(b.as_slice()) && finite(g.as_slice()) && finite(h.as_slice())) {
            return Err(GraspError::Dimension("non-finite problem data".into()));
        }
        Ok(Self { a, b, g, h })
    }

    /// The problem for `contacts` and the object-frame wrench `(force, moment)`.
    pub fn for_wrench(contacts: &ContactSet, force: &Vector3<f64>, moment: &Vector3<f64>) -> Result<Self, GraspError> {
        let (g, h) = build_friction_pyramid(contacts);
        let b = DVector::from_iterator(6, force.iter().chain(moment.iter()).copied());
        Self::new(build_grasp_matrix(contacts), b, g, h)
    }

    pub fn num_variables(&self) -> usize {
        self.a.ncols()
    }

    /// Largest component of `|y + Aᵀν + Gᵀλ|`, `|Ay − b|`, `(Gy − h)₊`,
    /// `(−λ)₊` and `|λᵢ (Gy − h)ᵢ|`.
    pub fn kkt_residual(&self, y: &DVector<f64>, nu: &DVector<f64>, lambda: &DVector<f64>) -> f64 {
        let stationarity = (y + self.a.transpose() * nu + self.g.transpose() * lambda).amax();
        let slack = &self.g * y - &self.h;
        let mut r = stationarity.max(self.equality_residual(y));
        for (s, l) in slack.iter().zip(lambda.iter()) {
            r = r.max(s.max(0.0)).max((-l).max(0.0)).max((l * s).abs());
        }
        r
    }

    pub fn equality_residual(&self, y: &DVector<f64>) -> f64 {
        (&self.a * y - &self.b).norm()
    }

    /// Largest `(Gy − h)ᵢ`, zero when every row holds.
    pub fn max_violation(&self, y: &DVector<f64>) -> f64 {
        (&self.g * y - &self.h).iter().fold(0.0, |m, v| m.max(*v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub y: DVector<f64>,
    /// Multipliers of `A y = b`.
    pub nu: DVector<f64>,
    /// Multipliers of `G y ≤ h`, zero off the active set.
    pub lambda: DVector<f64>,
    /// Active inequality rows, ascending.
    pub active_set: Vec<usize>,
    pub kkt_residual: f64,
    /// `‖A y − b‖`; for an inconsistent `b` this is the certificate.
    pub equality_residual: f64,
    /// Largest `(G y − h)ᵢ`; positive for an infeasible cone system.
    pub max_violation: f64,
    /// Active-set changes performed.
    pub iterations: usize,
    pub status: QpStatus,
}

impl QpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }
}

/// Active-set QP solver keeping the last active set for warm starts. One
/// instance per control loop.
#[derive(Debug, Clone, Default)]
pub struct QpSolver {
    previous: Vec<usize>,
    pub warm_start: bool,
}

impl QpSolver {
    pub fn new(warm_start: bool) -> Self {
        Self { previous: Vec::new(), warm_start }
    }

    pub fn reset(&mut self) {
        self.previous.clear();
    }

    pub fn solve(&mut self, qp: &GraspQp) -> QpSolution {
        let warm = if self.warm_start { self.previous.as_slice() } else { &[] };
        let sol = solve_from(qp, warm);
        if sol.is_optimal() {
            self.previous.clone_from(&sol.active_set);
        }
        sol
    }
}

/// Cold-start solve.
pub fn solve_qp(qp: &GraspQp) -> QpSolution {
    solve_from(qp, &[])
}

/// Minimum-norm solution and null-space basis of `A`, plus what is needed
/// to recover the equality multipliers. Built from a column-pivoted QR of
/// `Aᵀ`, padded with zero columns so that `Q` is square.
struct EqualityReduction {
    x0: DVector<f64>,
    z: DMatrix<f64>,
    q_range: DMatrix<f64>,
    r11: DMatrix<f64>,
    perm: PermutationSequence<Dyn>,
    rows: usize,
}

impl EqualityReduction {
    fn new(a: &DMatrix<f64>, b: &DVector<f64>) -> Self {
        let (m, n) = a.shape();
        let width = m.max(n);
        let at = a.transpose().resize_horizontally(width, 0.0);
        let (q, r, perm) = at.col_piv_qr().unpack();
        let r00 = if r.nrows() > 0 && width > 0 { r[(0, 0)].abs() } else { 0.0 };
        let cutoff = r00 * f64::EPSILON * 100.0 * width as f64;
        let rank = (0..r.nrows().min(width)).take_while(|&i| r[(i, i)].abs() > cutoff).count();

        let mut bp = b.clone().resize_vertically(width, 0.0);
        perm.permute_rows(&mut bp);
        let r11 = r.view((0, 0), (rank, rank)).into_owned();
        let w = r11.tr_solve_upper_triangular(&bp.rows(0, rank)).unwrap_or_else(|| DVector::zeros(rank));
        let q_range = q.columns(0, rank).into_owned();
        let x0 = &q_range * w;
        let z = q.columns(rank, n - rank).into_owned();
        Self { x0, z, q_range, r11, perm, rows: m }
    }

    /// A `ν` with `Aᵀν = s` for `s` in the row space of `A`.
    fn multipliers_for(&self, s: &DVector<f64>) -> DVector<f64> {
        let rank = self.r11.nrows();
        let rhs = self.q_range.transpose() * s;
        let v = self.r11.solve_upper_triangular(&rhs).unwrap_or_else(|| DVector::zeros(rank));
        let mut nu = v.resize_vertically(self.perm_len(), 0.0);
        self.perm.inv_permute_rows(&mut nu);
        nu.rows(0, self.rows).into_owned()
    }

    fn perm_len(&self) -> usize {
        self.rows.max(self.x0.len())
    }
}

struct DualResult {
    z: DVector<f64>,
    active: Vec<usize>,
    u: Vec<f64>,
    iterations: usize,
    feasible: bool,
}

/// Quantities for adding constraint `p` given the active normals: `r` solves
/// `NᵀN r = Nᵀ n_p` and `dz = n_p − N r` is the primal step direction.
fn step_direction(normals: &DMatrix<f64>, active: &[usize], np: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    if active.is_empty() {
        return (DVector::zeros(0), np.clone());
    }
    let na = DMatrix::from_fn(np.len(), active.len(), |row, col| normals[(active[col], row)]);
    let gram = na.transpose() * &na;
    let rhs = na.transpose() * np;
    let r = match gram.clone().cholesky() {
        Some(c) => c.solve(&rhs),
        None => gram.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(active.len())),
    };
    let dz = np - na * &r;
    (r, dz)
}

/// Minimizes `½‖z‖²` subject to `nᵢᵀ z ≥ bᵢ` (rows of `normals`).
fn dual_active_set(normals: &DMatrix<f64>, bounds: &DVector<f64>, warm: &[usize], tol: f64) -> DualResult {
    let (m, p) = normals.shape();
    let row = |i: usize| normals.row(i).transpose();
    let slack = |z: &DVector<f64>, i: usize| normals.row(i).dot(&z.transpose()) - bounds[i];

    let (mut active, mut u) = warm_start(normals, bounds, warm);
    let mut z = DVector::zeros(p);
    for (i, ui) in active.iter().zip(&u) {
        z += row(*i) * *ui;
    }

    let max_iterations = 10 * (m + p) + 50;
    let mut iterations = 0;
    loop {
        // Most violated constraint, lowest index on ties.
        let mut pick: Option<(usize, f64)> = None;
        for i in 0..m {
            if active.contains(&i) {
                continue;
            }
            let s = slack(&z, i);
            if s < -tol && pick.is_none_or(|(_, best)| s < best) {
                pick = Some((i, s));
            }
        }
        let Some((p_idx, _)) = pick else {
            return DualResult { z, active, u, iterations, feasible: true };
        };
        let np = row(p_idx);
        let mut up = 0.0;
        loop {
            iterations += 1;
            if iterations > max_iterations {
                return DualResult { z, active, u, iterations, feasible: false };
            }
            let (r, dz) = step_direction(normals, &active, &np);
            let mut partial = f64::INFINITY;
            let mut leaving = None;
            for (j, rj) in r.iter().enumerate() {
                if *rj > 1e-14 {
                    let t = u[j] / rj;
                    if t < partial {
                        partial = t;
                        leaving = Some(j);
                    }
                }
            }
            let curvature = dz.norm_squared();
            let full = if curvature > 1e-24 * np.norm_squared().max(1e-300) {
                -slack(&z, p_idx) / curvature
            } else {
                f64::INFINITY
            };
            let t = partial.min(full);
            if !t.is_finite() {
                return DualResult { z, active, u, iterations, feasible: false };
            }
            if full.is_finite() {
                z += &dz * t;
            }
            for (uj, rj) in u.iter_mut().zip(r.iter()) {
                *uj = (*uj - t * rj).max(0.0);
            }
            up += t;
            if full <= partial {
                let at = active.partition_point(|&i| i < p_idx);
                active.insert(at, p_idx);
                u.insert(at, up);
                break;
            }
            let l = leaving.expect("partial step has a leaving constraint");
            active.remove(l);
            u.remove(l);
        }
    }
}

/// Seeds the active set with the linearly independent part of `warm`, then
/// drops rows with negative multipliers until the equality-constrained
/// minimum is dual feasible.
fn warm_start(normals: &DMatrix<f64>, bounds: &DVector<f64>, warm: &[usize]) -> (Vec<usize>, Vec<f64>) {
    let m = normals.nrows();
    let mut active: Vec<usize> = Vec::new();
    let mut candidates: Vec<usize> = warm.iter().copied().filter(|&i| i < m).collect();
    candidates.sort_unstable();
    candidates.dedup();
    for i in candidates {
        let ni = normals.row(i).transpose();
        let (_, residual) = step_direction(normals, &active, &ni);
        if residual.norm() > 1e-9 * ni.norm() {
            active.push(i);
        }
    }
    loop {
        if active.is_empty() {
            return (active, Vec::new());
        }
        let na = DMatrix::from_fn(normals.ncols(), active.len(), |r, c| normals[(active[c], r)]);
        let rhs = DVector::from_iterator(active.len(), active.iter().map(|&i| bounds[i]));
        let gram = na.transpose() * &na;
        let Some(chol) = gram.cholesky() else {
            return (Vec::new(), Vec::new());
        };
        let u = chol.solve(&rhs);
        let (worst, min) = u.argmin();
        if min >= 0.0 {
            return (active, u.iter().copied().collect());
        }
        active.remove(worst);
    }
}

fn solve_from(qp: &GraspQp, warm: &[usize]) -> QpSolution {
    let red = EqualityReduction::new(&qp.a, &qp.b);
    let x0_residual = qp.equality_residual(&red.x0);
    // Inequalities on z:  (G Z) z ≤ h − G x0, written as  −(G Z) z ≥ −(h − G x0).
    let normals = -(&qp.g * &red.z);
    let bounds = -(&qp.h - &qp.g * &red.x0);
    let tol = 1e-13 * (1.0 + red.x0.amax());

    let consistent = x0_residual <= EQUALITY_TOLERANCE * (1.0 + qp.b.norm());
    let dual = if consistent {
        dual_active_set(&normals, &bounds, warm, tol)
    } else {
        DualResult { z: DVector::zeros(red.z.ncols()), active: vec![], u: vec![], iterations: 0, feasible: false }
    };

    let y = &red.x0 + &red.z * &dual.z;
    let mut lambda = DVector::zeros(qp.g.nrows());
    for (i, ui) in dual.active.iter().zip(&dual.u) {
        lambda[*i] = *ui;
    }
    let nu = -red.multipliers_for(&(&y + qp.g.transpose() * &lambda));
    QpSolution {
        kkt_residual: qp.kkt_residual(&y, &nu, &lambda),
        equality_residual: qp.equality_residual(&y),
        max_violation: qp.max_violation(&y),
        y,
        nu,
        lambda,
        active_set: dual.active,
        iterations: dual.iterations,
        status: if dual.feasible { QpStatus::Optimal } else { QpStatus::Infeasible },
    }
}

/// Object-frame contact forces producing the object-frame wrench
/// `(force, moment)` with the least total squared force.
pub fn distribute_forces(
    contacts: &ContactSet,
    force: &Vector3<f64>,
    moment: &Vector3<f64>,
) -> Result<Vec<Vector3<f64>>, GraspError> {
    distribute_forces_with(&mut QpSolver::new(false), contacts, force, moment).map(|(f, _)| f)
}

/// Like [`distribute_forces`] but through a caller-owned solver, returning
/// the full solution as well.
pub fn distribute_forces_with(
    solver: &mut QpSolver,
    contacts: &ContactSet,
    force: &Vector3<f64>,
    moment: &Vector3<f64>,
) -> Result<(Vec<Vector3<f64>>, QpSolution), GraspError> {
    if !force.iter().chain(moment.iter()).all(|x| x.is_finite()) {
        return Err(GraspError::Dimension("wrench must be finite".into()));
    }
    let qp = GraspQp::for_wrench(contacts, force, moment)?;
    let sol = solver.solve(&qp);
    if !sol.is_optimal() {
        return Err(GraspError::Infeasible { residual: sol.equality_residual.max(sol.max_violation) });
    }
    let forces = (0..contacts.len())
        .map(|i| Vector3::new(sol.y[3 * i], sol.y[3 * i + 1], sol.y[3 * i + 2]))
        .collect();
    Ok((forces, sol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(normal: Vector3<f64>) -> ContactSet {
        ContactSet::new(vec![Contact::new(Vector3::zeros(), normal)], 1.0).unwrap()
    }

    #[test]
    fn tangent_frame_is_orthonormal_and_right_handed() {
        for n in [Vector3::x(), -Vector3::z(), Vector3::new(0.3, -0.4, 0.8)] {
            let c = Contact::new(Vector3::zeros(), n);
            c.check().unwrap();
            assert!((c.t1.cross(&c.t2) - c.normal).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_contact_sets() {
        assert!(ContactSet::new(vec![], 1.0).is_err());
        assert!(ContactSet::new(vec![Contact::new(Vector3::zeros(), Vector3::z())], 0.0).is_err());
        let mut c = Contact::new(Vector3::zeros(), Vector3::z());
        c.normal *= 1.01;
        assert!(ContactSet::new(vec![c], 1.0).is_err());
    }

    #[test]
    fn zero_lever_arm_grasp_matrix() {
        let a = build_grasp_matrix(&single(Vector3::z()));
        let mut expected = DMatrix::zeros(6, 3);
        expected.view_mut((0, 0), (3, 3)).fill_with_identity();
        assert_eq!(a, expected);
    }

    #[test]
    fn moment_of_offset_contact() {
        let d = 0.05;
        let c = ContactSet::new(vec![Contact::new(Vector3::new(0.0, 0.0, -d), Vector3::z())], 1.0).unwrap();
        let wrench = build_grasp_matrix(&c) * DVector::from_vec(vec![2.0, 0.0, 0.0]);
        assert_eq!(wrench.as_slice(), &[2.0, 0.0, 0.0, 0.0, -d * 2.0, 0.0]);
    }

    #[test]
    fn pyramid_accepts_push_and_rejects_pull() {
        for mu in [0.1, 1.0, 3.0] {
            let mut c = single(Vector3::new(1.0, 2.0, -0.5));
            c.mu = mu;
            let (g, h) = build_friction_pyramid(&c);
            let n = DVector::from_column_slice(c.contacts[0].normal.as_slice());
            assert!((&g * &n - &h).iter().all(|v| *v <= 0.0));
            assert!((&g * -n)[0] > 0.0);
        }
    }

    #[test]
    fn axis_aligned_push() {
        let qp = GraspQp::for_wrench(&single(Vector3::z()), &Vector3::new(0.0, 0.0, 5.0), &Vector3::zeros()).unwrap();
        let sol = solve_qp(&qp);
        assert!(sol.is_optimal());
        assert!((sol.y - DVector::from_vec(vec![0.0, 0.0, 5.0])).amax() < 1e-12);
        assert!(sol.active_set.is_empty());
    }

    #[test]
    fn equality_only_matches_linear_solve() {
        let a = DMatrix::from_fn(6, 6, |i, j| if i == j { 2.0 + i as f64 } else { 0.1 * (i + 2 * j) as f64 });
        let b = DVector::from_fn(6, |i, _| i as f64 - 2.5);
        let qp = GraspQp::new(a.clone(), b.clone(), DMatrix::zeros(0, 6), DVector::zeros(0)).unwrap();
        let sol = solve_qp(&qp);
        let direct = a.lu().solve(&b).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.y - direct).amax() < 1e-12);
        assert!(sol.kkt_residual < 1e-10);
    }

    #[test]
    fn pulling_single_contact_is_infeasible() {
        let c = single(Vector3::z());
        assert!(matches!(
            distribute_forces(&c, &Vector3::new(0.0, 0.0, -1.0), &Vector3::zeros()),
            Err(GraspError::Infeasible { .. })
        ));
    }

    #[test]
    fn inconsistent_equalities_are_infeasible() {
        // A single contact at the origin cannot produce a moment.
        let c = single(Vector3::z());
        let err = distribute_forces(&c, &Vector3::new(0.0, 0.0, 1.0), &Vector3::new(1.0, 0.0, 0.0)).unwrap_err();
        let GraspError::Infeasible { residual } = err else { panic!("{err:?}") };
        assert!((residual - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_wrench_gives_zero_forces() {
        let contacts = ContactSet::new(
            vec![
                Contact::new(Vector3::new(0.03, 0.0, 0.0), -Vector3::x()),
                Contact::new(Vector3::new(0.0, 0.03, 0.0), -Vector3::y()),
                Contact::new(Vector3::new(0.0, -0.03, 0.0), Vector3::y()),
            ],
            1.0,
        )
        .unwrap();
        let f = distribute_forces(&contacts, &Vector3::zeros(), &Vector3::zeros()).unwrap();
        assert!(f.iter().all(|fi| fi.norm() == 0.0));
    }
}
