//! Trapezoidal rule on a product of circles for integrands of the form
//!
//! `prod_j w_j(xi_j) * prod_{(a,b)} T_ab(xi_a, xi_b)`
//!
//! summed over a list of such terms. Every Bethe-ansatz integrand used in
//! this crate factorises this way once the permutation is fixed.
//!
//! One pass over an `M`-node grid also yields the `M/2` rule (the even
//! nodes), which gives the convergence estimate for free.

use std::f64::consts::TAU;
use std::ops::Range;

use num_complex::Complex64;
use rayon::prelude::*;

/// Upper bound on `terms * M^N` grid points for one evaluation.
pub const WORK_LIMIT: f64 = 8.0e9;

/// Nodes `r_j * exp(2 pi i k / M)` for every variable.
#[derive(Debug, Clone)]
pub struct Grid {
    pub m: usize,
    pub radii: Vec<f64>,
    roots: Vec<Complex64>,
}

impl Grid {
    pub fn new(radii: Vec<f64>, m: usize) -> Self {
        let roots = (0..m)
            .map(|k| Complex64::from_polar(1.0, TAU * k as f64 / m as f64))
            .collect();
        Grid { m, radii, roots }
    }

    pub fn dim(&self) -> usize {
        self.radii.len()
    }

    #[inline]
    pub fn node(&self, j: usize, k: usize) -> Complex64 {
        self.radii[j] * self.roots[k]
    }

    pub fn nodes(&self, j: usize) -> Vec<Complex64> {
        (0..self.m).map(|k| self.node(j, k)).collect()
    }

    /// `xi_{j,k}^n` for all `k`, using exact root-of-unity indexing.
    pub fn powers(&self, j: usize, n: i64) -> Vec<Complex64> {
        let m = self.m as i64;
        let rn = self.radii[j].powi(n as i32);
        (0..m)
            .map(|k| rn * self.roots[(n * k).rem_euclid(m) as usize])
            .collect()
    }

    /// Table `f(xi_{a,ka}, xi_{b,kb})`, row-major in `ka`.
    pub fn pair_table<E>(
        &self,
        a: usize,
        b: usize,
        f: impl Fn(Complex64, Complex64) -> Result<Complex64, E> + Sync,
    ) -> Result<PairTable, E>
    where
        E: Send,
    {
        let m = self.m;
        let values = (0..m)
            .into_par_iter()
            .map(|ka| {
                let xa = self.node(a, ka);
                (0..m)
                    .map(|kb| f(xa, self.node(b, kb)))
                    .collect::<Result<Vec<_>, E>>()
            })
            .collect::<Result<Vec<_>, E>>()?
            .into_iter()
            .flatten()
            .collect();
        Ok(PairTable { m, values })
    }
}

/// `M x M` table of a pairwise factor.
#[derive(Debug, Clone)]
pub struct PairTable {
    m: usize,
    values: Vec<Complex64>,
}

impl PairTable {
    #[inline]
    fn row(&self, ka: usize) -> &[Complex64] {
        &self.values[ka * self.m..(ka + 1) * self.m]
    }
}

/// One product-form term: per-variable weights (including the `1/M` node
/// weight) and pair factors `(a, b, table)` with `a < b`.
#[derive(Debug, Clone)]
pub struct Term<'a> {
    pub weights: Vec<&'a [Complex64]>,
    pub pairs: Vec<(usize, usize, &'a PairTable)>,
}

/// Running sums of one evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Acc {
    /// Sum over the full grid.
    pub full: Complex64,
    /// Sum over the even-index subgrid (not yet rescaled).
    pub half: Complex64,
    /// Sum of `|re| + |im|` over all terms, for the round-off bound.
    pub l1: f64,
    /// Largest `|re| + |im|` of a single term.
    pub max: f64,
}

impl Acc {
    fn merge(self, o: Acc) -> Acc {
        Acc {
            full: self.full + o.full,
            half: self.half + o.half,
            l1: self.l1 + o.l1,
            max: self.max.max(o.max),
        }
    }
}

/// Pairwise (tree) reduction; the order depends only on the slice length.
fn tree_sum(parts: &[Acc]) -> Acc {
    match parts.len() {
        0 => Acc::default(),
        1 => parts[0],
        n => {
            let (l, r) = parts.split_at(n / 2);
            tree_sum(l).merge(tree_sum(r))
        }
    }
}

struct Walker<'t, 'a> {
    term: &'t Term<'a>,
    m: usize,
    n: usize,
    /// pairs grouped by their second variable
    incoming: Vec<Vec<(usize, &'a PairTable)>>,
    idx: Vec<usize>,
}

impl<'t, 'a> Walker<'t, 'a> {
    fn new(term: &'t Term<'a>, m: usize) -> Self {
        let n = term.weights.len();
        let mut incoming = vec![Vec::new(); n];
        for &(a, b, t) in &term.pairs {
            debug_assert!(a < b && b < n);
            incoming[b].push((a, t));
        }
        Walker {
            term,
            m,
            n,
            incoming,
            idx: vec![0; n],
        }
    }

    fn walk(&mut self, level: usize, partial: Complex64, even: bool, acc: &mut Acc) {
        let w = self.term.weights[level];
        if level + 1 == self.n {
            let rows: Vec<&[Complex64]> = self.incoming[level]
                .iter()
                .map(|(a, t)| t.row(self.idx[*a]))
                .collect();
            let mut full = Complex64::new(0.0, 0.0);
            let mut half = Complex64::new(0.0, 0.0);
            let mut l1 = 0.0;
            let mut max: f64 = 0.0;
            for k in 0..self.m {
                let mut v = partial * w[k];
                for row in &rows {
                    v *= row[k];
                }
                let a = v.re.abs() + v.im.abs();
                l1 += a;
                max = max.max(a);
                full += v;
                if k % 2 == 0 {
                    half += v;
                }
            }
            acc.full += full;
            if even {
                acc.half += half;
            }
            acc.l1 += l1;
            acc.max = acc.max.max(max);
            return;
        }
        for k in 0..self.m {
            let mut v = partial * w[k];
            for (a, t) in &self.incoming[level] {
                v *= t.row(self.idx[*a])[k];
            }
            self.idx[level] = k;
            self.walk(level + 1, v, even && k % 2 == 0, acc);
        }
    }

    fn run(&mut self, first: Range<usize>) -> Acc {
        let mut acc = Acc::default();
        let w = self.term.weights[0];
        for k in first {
            self.idx[0] = k;
            if self.n == 1 {
                let v = w[k];
                let a = v.re.abs() + v.im.abs();
                acc.full += v;
                if k % 2 == 0 {
                    acc.half += v;
                }
                acc.l1 += a;
                acc.max = acc.max.max(a);
            } else {
                self.walk(1, w[k], k % 2 == 0, &mut acc);
            }
        }
        acc
    }
}

/// Evaluates `sum_terms sum_grid term` on an `m`-node grid.
///
/// The work is split into fixed `(term, first-index block)` tasks that run
/// in parallel; partial sums are combined by a tree reduction whose shape
/// does not depend on the number of worker threads.
pub fn contract(terms: &[Term<'_>], m: usize) -> Acc {
    let blocks = (m / 8).max(1);
    let block = m.div_ceil(blocks);
    let tasks: Vec<(usize, Range<usize>)> = (0..terms.len())
        .flat_map(|t| (0..blocks).map(move |b| (t, b * block..((b + 1) * block).min(m))))
        .collect();
    let parts: Vec<Acc> = tasks
        .par_iter()
        .map(|(t, range)| Walker::new(&terms[*t], m).run(range.clone()))
        .collect();
    tree_sum(&parts)
}

/// Summary of one grid evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub m: usize,
    pub value: Complex64,
    pub half_value: Complex64,
    /// Round-off bound `16 eps sum|term|`.
    pub noise: f64,
    /// Largest term times `M^N`, i.e. the largest integrand magnitude.
    pub max_integrand: f64,
}

impl Evaluation {
    pub fn from_acc(acc: Acc, m: usize, dim: usize) -> Self {
        let scale = (m as f64).powi(dim as i32);
        Evaluation {
            m,
            value: acc.full,
            half_value: acc.half * 2f64.powi(dim as i32),
            noise: 16.0 * f64::EPSILON * acc.l1,
            max_integrand: acc.max * scale,
        }
    }

    pub fn difference(&self) -> f64 {
        (self.value - self.half_value).norm()
    }

    pub fn converged(&self, rel_tol: f64) -> bool {
        self.difference() <= (rel_tol * self.value.norm()).max(self.noise)
    }

    pub fn abs_error(&self) -> f64 {
        self.difference() + self.noise + self.value.im.abs()
    }

    /// [`abs_error`](Self::abs_error) without the worst-case round-off
    /// bound: only discrepancies that were actually seen.
    pub fn observed_error(&self) -> f64 {
        self.difference() + self.value.im.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(grid: &Grid, j: usize, n: i64) -> Vec<Complex64> {
        let m = grid.m as f64;
        grid.powers(j, n).into_iter().map(|z| z / m).collect()
    }

    #[test]
    fn monomials_give_laurent_coefficients() {
        // with node weight xi/M the rule integrates xi^(k-1) d xi / (2 pi i)
        for m in [16usize, 32] {
            let grid = Grid::new(vec![0.3, 0.7, 1.9], m);
            for k0 in -10i64..=10 {
                for k1 in [-3i64, 0, 4] {
                    let w0 = uniform(&grid, 0, k0);
                    let w1 = uniform(&grid, 1, k1);
                    let w2 = uniform(&grid, 2, 0);
                    let term = Term {
                        weights: vec![&w0, &w1, &w2],
                        pairs: vec![],
                    };
                    let acc = contract(&[term], m);
                    let want = if k0 == 0 && k1 == 0 { 1.0 } else { 0.0 };
                    let scale = 0.3f64.powi(k0 as i32) * 0.7f64.powi(k1 as i32);
                    if (k0.unsigned_abs() as usize) < m && (k1.unsigned_abs() as usize) < m {
                        assert!(
                            (acc.full - want).norm() <= 1e-14 * scale.max(1.0),
                            "{m} {k0} {k1}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn pair_tables_and_half_grid() {
        // sum over the torus of 1/(1 - xa xb / 4) = 1 (only the constant term survives)
        let m = 32;
        let grid = Grid::new(vec![0.9, 1.1], m);
        let w: Vec<Complex64> = vec![Complex64::new(1.0 / m as f64, 0.0); m];
        let table = grid
            .pair_table::<()>(0, 1, |a, b| Ok(1.0 / (1.0 - a * b / 4.0)))
            .unwrap();
        let term = Term {
            weights: vec![&w, &w],
            pairs: vec![(0, 1, &table)],
        };
        let ev = Evaluation::from_acc(contract(&[term], m), m, 2);
        assert!((ev.value - 1.0).norm() < 1e-14);
        assert!((ev.half_value - 1.0).norm() < 1e-6);
        assert!(ev.max_integrand > 0.9);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let m = 16;
        let grid = Grid::new(vec![0.5, 0.6, 0.7], m);
        let w0 = uniform(&grid, 0, -2);
        let w1 = uniform(&grid, 1, 1);
        let w2 = uniform(&grid, 2, 3);
        let t01 = grid
            .pair_table::<()>(0, 1, |a, b| Ok(1.0 / (2.0 - a * b)))
            .unwrap();
        let t12 = grid.pair_table::<()>(1, 2, |a, b| Ok(a - 3.0 * b)).unwrap();
        let term = Term {
            weights: vec![&w0, &w1, &w2],
            pairs: vec![(0, 1, &t01), (1, 2, &t12)],
        };
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = one.install(|| contract(std::slice::from_ref(&term), m));
        let b = four.install(|| contract(std::slice::from_ref(&term), m));
        assert_eq!(a, b);
    }
}
