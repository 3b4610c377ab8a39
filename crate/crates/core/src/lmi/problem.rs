//! Block-structured affine matrix-inequality feasibility problems.
//!
//! Each constraint is an affine map `F(y) = F0 + Σ y_k F_k` from the stacked
//! decision vector to symmetric matrices and is required to satisfy
//! `F(y) ⪯ -ε I`. Constraints are supplied as closures over named decision
//! blocks and tabulated once at registration.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lti::linalg::{max_eig_sym, symmetry_defect};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Symmetric,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BlockId(pub usize);

#[derive(Clone, Debug, PartialEq)]
pub struct BlockSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub kind: BlockKind,
    pub offset: usize,
}

impl BlockSpec {
    pub fn dof(&self) -> usize {
        match self.kind {
            BlockKind::Symmetric => self.rows * (self.rows + 1) / 2,
            BlockKind::Full => self.rows * self.cols,
        }
    }
}

/// Matrix values of all decision blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct Values {
    pub names: Vec<String>,
    pub blocks: Vec<DMatrix<f64>>,
}

impl Values {
    pub fn get(&self, id: BlockId) -> &DMatrix<f64> {
        &self.blocks[id.0]
    }

    pub fn by_name(&self, name: &str) -> Option<&DMatrix<f64>> {
        self.names.iter().position(|n| n == name).map(|i| &self.blocks[i])
    }
}

impl std::ops::Index<BlockId> for Values {
    type Output = DMatrix<f64>;
    fn index(&self, id: BlockId) -> &DMatrix<f64> {
        self.get(id)
    }
}

/// Tabulated affine constraint.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub name: String,
    pub size: usize,
    pub f0: DMatrix<f64>,
    pub fk: Vec<DMatrix<f64>>,
}

impl Constraint {
    pub fn eval(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let mut m = self.f0.clone();
        for (k, fk) in self.fk.iter().enumerate() {
            if y[k] != 0.0 {
                m += fk * y[k];
            }
        }
        m
    }
}

#[derive(Clone, Debug)]
pub struct LmiProblem {
    pub blocks: Vec<BlockSpec>,
    pub constraints: Vec<Constraint>,
    /// Strictness margin: each constraint must satisfy `F ⪯ -ε I`.
    pub epsilon: f64,
    pub lambda: f64,
    pub vertices: Vec<DMatrix<f64>>,
    pub seed: u64,
    dim: usize,
}

/// Constraints referencing blocks via closures.
pub type ConstraintFn<'a> = dyn Fn(&Values) -> DMatrix<f64> + 'a;

impl LmiProblem {
    pub fn new(epsilon: f64, seed: u64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid("strictness margin ε must be positive"));
        }
        Ok(LmiProblem {
            blocks: Vec::new(),
            constraints: Vec::new(),
            epsilon,
            lambda: 0.0,
            vertices: Vec::new(),
            seed,
            dim: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn add_block(&mut self, name: &str, rows: usize, cols: usize, kind: BlockKind) -> Result<BlockId> {
        if !self.constraints.is_empty() {
            return Err(Error::invalid("decision blocks must be declared before constraints"));
        }
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!("decision block {name} is empty")));
        }
        if self.blocks.iter().any(|b| b.name == name) {
            return Err(Error::invalid(format!("duplicate decision block {name}")));
        }
        let spec = BlockSpec {
            name: name.to_string(),
            rows,
            cols,
            kind,
            offset: self.dim,
        };
        self.dim += spec.dof();
        self.blocks.push(spec);
        Ok(BlockId(self.blocks.len() - 1))
    }

    pub fn symmetric(&mut self, name: &str, n: usize) -> Result<BlockId> {
        self.add_block(name, n, n, BlockKind::Symmetric)
    }

    pub fn full(&mut self, name: &str, rows: usize, cols: usize) -> Result<BlockId> {
        self.add_block(name, rows, cols, BlockKind::Full)
    }

    /// Block matrices for a decision vector.
    pub fn values(&self, y: &DVector<f64>) -> Values {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let mut m = DMatrix::zeros(b.rows, b.cols);
                let mut idx = b.offset;
                match b.kind {
                    BlockKind::Symmetric => {
                        for i in 0..b.rows {
                            for j in i..b.cols {
                                m[(i, j)] = y[idx];
                                m[(j, i)] = y[idx];
                                idx += 1;
                            }
                        }
                    }
                    BlockKind::Full => {
                        for i in 0..b.rows {
                            for j in 0..b.cols {
                                m[(i, j)] = y[idx];
                                idx += 1;
                            }
                        }
                    }
                }
                m
            })
            .collect();
        Values {
            names: self.blocks.iter().map(|b| b.name.clone()).collect(),
            blocks,
        }
    }

    /// Decision vector for given block values (symmetric blocks read their upper triangle).
    pub fn vector(&self, values: &Values) -> Result<DVector<f64>> {
        if values.blocks.len() != self.blocks.len() {
            return Err(Error::invalid("wrong number of decision blocks"));
        }
        let mut y = DVector::zeros(self.dim);
        for (b, m) in self.blocks.iter().zip(&values.blocks) {
            if m.shape() != (b.rows, b.cols) {
                return Err(Error::invalid(format!(
                    "block {} has shape {:?}, expected {:?}",
                    b.name,
                    m.shape(),
                    (b.rows, b.cols)
                )));
            }
            let mut idx = b.offset;
            match b.kind {
                BlockKind::Symmetric => {
                    for i in 0..b.rows {
                        for j in i..b.cols {
                            y[idx] = m[(i, j)];
                            idx += 1;
                        }
                    }
                }
                BlockKind::Full => {
                    for i in 0..b.rows {
                        for j in 0..b.cols {
                            y[idx] = m[(i, j)];
                            idx += 1;
                        }
                    }
                }
            }
        }
        Ok(y)
    }

    /// Registers `f(values) ⪯ -ε I`. The map is tabulated at the origin and
    /// unit vectors and then probed for affinity at two random points.
    pub fn constraint(&mut self, name: &str, f: &ConstraintFn<'_>) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("no decision blocks declared"));
        }
        let zero = DVector::zeros(self.dim);
        let f0 = f(&self.values(&zero));
        let size = f0.nrows();
        if f0.ncols() != size || size == 0 {
            return Err(Error::invalid(format!("constraint {name} is not square")));
        }
        let check = |m: &DMatrix<f64>| -> Result<()> {
            if m.shape() != (size, size) {
                return Err(Error::invalid(format!("constraint {name} changes dimension")));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("constraint {name} has non-finite entries")));
            }
            if symmetry_defect(m) > 1e-10 * m.norm().max(1.0) {
                return Err(Error::invalid(format!("constraint {name} is not symmetric")));
            }
            Ok(())
        };
        check(&f0)?;
        let mut fk = Vec::with_capacity(self.dim);
        for k in 0..self.dim {
            let mut e = zero.clone();
            e[k] = 1.0;
            let m = f(&self.values(&e));
            check(&m)?;
            fk.push(m - &f0);
        }
        let c = Constraint {
            name: name.to_string(),
            size,
            f0,
            fk,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (self.constraints.len() as u64 + 1));
        for _ in 0..2 {
            let y = DVector::from_fn(self.dim, |_, _| rng.gen_range(-1.0..1.0));
            let direct = f(&self.values(&y));
            let affine = c.eval(&y);
            let scale = 1.0 + direct.norm().max(affine.norm());
            if (&direct - &affine).norm() > 1e-9 * scale {
                return Err(Error::invalid(format!(
                    "constraint {name} is not affine in the decision blocks"
                )));
            }
        }
        self.constraints.push(c);
        Ok(())
    }

    /// Largest eigenvalue of each constraint at `y`.
    pub fn residuals(&self, y: &DVector<f64>) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| max_eig_sym(&c.eval(y)))
            .collect()
    }

    pub fn residuals_at(&self, values: &Values) -> Result<Vec<f64>> {
        Ok(self.residuals(&self.vector(values)?))
    }
}

/// `[[A, B], [C, D]]` from equally partitioned blocks.
pub fn block2(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    block(&[vec![a.clone(), b.clone()], vec![c.clone(), d.clone()]])
}

/// Assembles a block matrix from rows of blocks with consistent sizes.
pub fn block(rows: &[Vec<DMatrix<f64>>]) -> DMatrix<f64> {
    let heights: Vec<usize> = rows.iter().map(|r| r[0].nrows()).collect();
    let widths: Vec<usize> = rows[0].iter().map(|b| b.ncols()).collect();
    let (h, w): (usize, usize) = (heights.iter().sum(), widths.iter().sum());
    let mut m = DMatrix::zeros(h, w);
    let mut r0 = 0;
    for (i, row) in rows.iter().enumerate() {
        let mut c0 = 0;
        for (j, b) in row.iter().enumerate() {
            debug_assert_eq!(b.shape(), (heights[i], widths[j]));
            m.view_mut((r0, c0), (heights[i], widths[j])).copy_from(b);
            c0 += widths[j];
        }
        r0 += heights[i];
    }
    m
}
