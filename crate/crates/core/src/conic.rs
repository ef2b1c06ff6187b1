//! Thin wrapper around the clarabel interior-point solver for the handful of
//! conic programs the library needs: support values, projections, inscribed
//! balls and minimization of max-affine-plus-quadratic functions.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, NonnegativeConeT, SecondOrderConeT, SolverStatus,
    SupportedConeT,
};

use crate::error::{Error, Result};
use crate::geometry::ConvexBody;
use crate::linalg::{spectral_norm, sym_eigen, Matrix, Vector};

type Row = Vec<(usize, f64)>;

/// Problem  min ½zᵀPz + qᵀz  s.t.  b − Az ∈ cones.
struct Program {
    nvar: usize,
    p: Vec<(usize, usize, f64)>,
    q: Vec<f64>,
    rows: Vec<Row>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
}

impl Program {
    fn new(nvar: usize) -> Self {
        Program {
            nvar,
            p: Vec::new(),
            q: vec![0.0; nvar],
            rows: Vec::new(),
            b: Vec::new(),
            cones: Vec::new(),
        }
    }

    /// Rows  a·z ≤ b.
    fn nonneg(&mut self, rows: Vec<(Row, f64)>) {
        if rows.is_empty() {
            return;
        }
        let k = rows.len();
        for (r, b) in rows {
            self.rows.push(r);
            self.b.push(b);
        }
        self.cones.push(NonnegativeConeT(k));
    }

    /// Rows defining s = b − Az with s in a second-order cone (s₀ ≥ |s₁..|).
    fn soc(&mut self, rows: Vec<(Row, f64)>) {
        let k = rows.len();
        for (r, b) in rows {
            self.rows.push(r);
            self.b.push(b);
        }
        self.cones.push(SecondOrderConeT(k));
    }

    /// Body constraints on the variables `off..off+n`.
    fn body(&mut self, body: &ConvexBody, off: usize) {
        let n = body.dimension;
        let hs: Vec<(Row, f64)> = body
            .halfspaces
            .iter()
            .map(|h| ((0..n).map(|i| (off + i, h.normal[i])).collect(), h.offset))
            .collect();
        self.nonneg(hs);
        let e = &body.ellipsoid.shape;
        let ec = e * &body.ellipsoid.center;
        let mut rows = vec![(Vec::new(), 1.0)];
        for i in 0..n {
            rows.push(((0..n).map(|j| (off + j, -e[(i, j)])).collect(), -ec[i]));
        }
        self.soc(rows);
    }

    fn solve(self) -> Result<(Vector, f64)> {
        let m = self.rows.len();
        let (mut ii, mut jj, mut vv) = (Vec::new(), Vec::new(), Vec::new());
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                if v != 0.0 {
                    ii.push(i);
                    jj.push(j);
                    vv.push(v);
                }
            }
        }
        let a = CscMatrix::new_from_triplets(m, self.nvar, ii, jj, vv);
        let (mut pi, mut pj, mut pv) = (Vec::new(), Vec::new(), Vec::new());
        for &(i, j, v) in &self.p {
            debug_assert!(i <= j);
            pi.push(i);
            pj.push(j);
            pv.push(v);
        }
        let p = CscMatrix::new_from_triplets(self.nvar, self.nvar, pi, pj, pv);
        let settings = DefaultSettings::<f64> {
            verbose: false,
            tol_gap_abs: 1e-10,
            tol_gap_rel: 1e-10,
            tol_feas: 1e-10,
            max_iter: 500,
            ..Default::default()
        };
        let mut solver = DefaultSolver::new(&p, &self.q, &a, &self.b, &self.cones, settings)
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        solver.solve();
        match solver.solution.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => Ok((
                Vector::from_vec(solver.solution.x.clone()),
                solver.solution.obj_val,
            )),
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                Err(Error::Infeasible("conic program has no feasible point".into()))
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                Err(Error::Unbounded(self.q.clone()))
            }
            s => Err(Error::Solver(format!("status {s:?}"))),
        }
    }
}

/// sup over the body of ⟨d, x⟩ and a maximizer.
pub fn support(body: &ConvexBody, d: &Vector) -> Result<(f64, Vector)> {
    let n = body.dimension;
    let mut prog = Program::new(n);
    for i in 0..n {
        prog.q[i] = -d[i];
    }
    prog.body(body, 0);
    let (x, obj) = prog.solve()?;
    Ok((-obj, x))
}

/// Euclidean projection of `q` onto the body.
pub fn project(body: &ConvexBody, q: &Vector) -> Result<Vector> {
    let n = body.dimension;
    let mut prog = Program::new(n);
    for i in 0..n {
        prog.p.push((i, i, 1.0));
        prog.q[i] = -q[i];
    }
    prog.body(body, 0);
    Ok(prog.solve()?.0)
}

/// Largest ball found inside the body: exact for halfspaces, and for the
/// ellipsoid constraint uses the inner bound |E(x−c)| ≤ 1 − σmax(E)·r, which
/// is exact when E is a multiple of the identity.
pub fn chebyshev_center(body: &ConvexBody) -> Result<(Vector, f64)> {
    let n = body.dimension;
    let r = n;
    let mut prog = Program::new(n + 1);
    prog.q[r] = -1.0;
    let mut rows: Vec<(Row, f64)> = body
        .halfspaces
        .iter()
        .map(|h| {
            let mut row: Row = (0..n).map(|i| (i, h.normal[i])).collect();
            row.push((r, h.normal.norm()));
            (row, h.offset)
        })
        .collect();
    rows.push((vec![(r, -1.0)], 0.0));
    prog.nonneg(rows);
    let e = &body.ellipsoid.shape;
    let sigma = spectral_norm(e);
    let ec = e * &body.ellipsoid.center;
    let mut soc = vec![(vec![(r, sigma)], 1.0)];
    for i in 0..n {
        soc.push(((0..n).map(|j| (j, -e[(i, j)])).collect(), -ec[i]));
    }
    prog.soc(soc);
    let (z, _) = prog.solve()?;
    Ok((z.rows(0, n).into_owned(), z[r].max(0.0)))
}

/// Factor L with P = L Lᵀ for a symmetric PSD matrix (eigenvalues clipped at 0).
fn psd_factor(p: &Matrix) -> Matrix {
    let (vals, vecs) = sym_eigen(p);
    let mut l = vecs.clone();
    for k in 0..vals.len() {
        let s = vals[k].max(0.0).sqrt();
        for i in 0..l.nrows() {
            l[(i, k)] *= s;
        }
    }
    l
}

fn has_quadratic(p: &Matrix) -> bool {
    p.iter().any(|v| *v != 0.0)
}

/// min over the body of max_j (a_j + ⟨y_j, x⟩) + xᵀPx.
pub fn minimize_max_affine(
    body: &ConvexBody,
    pieces: &[(f64, Vector)],
    p: &Matrix,
) -> Result<(Vector, f64)> {
    let n = body.dimension;
    let s = n;
    let mut prog = Program::new(n + 1);
    prog.q[s] = 1.0;
    for i in 0..n {
        for j in i..n {
            let v = 2.0 * p[(i, j)];
            if v != 0.0 {
                prog.p.push((i, j, v));
            }
        }
    }
    let rows: Vec<(Row, f64)> = pieces
        .iter()
        .map(|(a, y)| {
            let mut row: Row = (0..n).map(|i| (i, y[i])).collect();
            row.push((s, -1.0));
            (row, -a)
        })
        .collect();
    prog.nonneg(rows);
    prog.body(body, 0);
    let (z, obj) = prog.solve()?;
    Ok((z.rows(0, n).into_owned(), obj))
}

/// min ⟨c, x⟩ over {x ∈ body : max_j (a_j + ⟨y_j, x⟩) + xᵀPx ≤ level}.
pub fn minimize_linear_in_sublevel(
    body: &ConvexBody,
    pieces: &[(f64, Vector)],
    p: &Matrix,
    level: f64,
    c: &Vector,
) -> Result<Vector> {
    let n = body.dimension;
    let quad = has_quadratic(p);
    let t = n;
    let nvar = if quad { n + 1 } else { n };
    let mut prog = Program::new(nvar);
    for i in 0..n {
        prog.q[i] = c[i];
    }
    let rows: Vec<(Row, f64)> = pieces
        .iter()
        .map(|(a, y)| {
            let mut row: Row = (0..n).map(|i| (i, y[i])).collect();
            if quad {
                row.push((t, 1.0));
            }
            (row, level - a)
        })
        .collect();
    prog.nonneg(rows);
    if quad {
        // t ≥ |Lᵀx|² as  |(2Lᵀx, t − 1)| ≤ t + 1.
        let l = psd_factor(p);
        let mut soc = vec![(vec![(t, -1.0)], 1.0)];
        for k in 0..n {
            soc.push(((0..n).map(|i| (i, -2.0 * l[(i, k)])).collect(), 0.0));
        }
        soc.push((vec![(t, -1.0)], -1.0));
        prog.soc(soc);
    }
    prog.body(body, 0);
    Ok(prog.solve()?.0.rows(0, n).into_owned())
}
