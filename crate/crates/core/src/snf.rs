//! Smith normal form over Z with unimodular transforms.

pub type Mat = Vec<Vec<i128>>;

fn identity(n: usize) -> Mat {
    (0..n)
        .map(|i| (0..n).map(|j| (i == j) as i128).collect())
        .collect()
}

/// `u * a * v = d` with `d` diagonal, each entry dividing the next, and the
/// nonzero entries first. `v_inv` is the inverse of `v`.
#[derive(Clone, Debug)]
pub struct Smith {
    pub diag: Vec<i128>,
    pub u: Mat,
    pub v: Mat,
    pub v_inv: Mat,
}

impl Smith {
    pub fn rank(&self) -> usize {
        self.diag.iter().take_while(|&&x| x != 0).count()
    }
}

pub fn smith(a: &[Vec<i128>], cols: usize) -> Smith {
    let rows = a.len();
    let mut a: Mat = a.to_vec();
    let mut u = identity(rows);
    let mut v = identity(cols);
    let mut v_inv = identity(cols);

    let swap_cols = |a: &mut Mat, v: &mut Mat, v_inv: &mut Mat, i: usize, j: usize| {
        for row in a.iter_mut() {
            row.swap(i, j);
        }
        for row in v.iter_mut() {
            row.swap(i, j);
        }
        v_inv.swap(i, j);
    };
    // col_j -= q col_i
    let sub_col = |a: &mut Mat, v: &mut Mat, v_inv: &mut Mat, j: usize, i: usize, q: i128| {
        for row in a.iter_mut() {
            row[j] -= q * row[i];
        }
        for row in v.iter_mut() {
            row[j] -= q * row[i];
        }
        // inverse operation on rows of v_inv: row_i += q row_j
        let rj = v_inv[j].clone();
        for (x, y) in v_inv[i].iter_mut().zip(rj) {
            *x += q * y;
        }
    };

    for t in 0..rows.min(cols) {
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if a[i][j] != 0
                        && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else {
                return finish(a, u, v, v_inv, rows, cols);
            };
            a.swap(t, bi);
            u.swap(t, bi);
            if bj != t {
                swap_cols(&mut a, &mut v, &mut v_inv, t, bj);
            }
            let piv = a[t][t];
            let mut clean = true;
            for i in t + 1..rows {
                let q = a[i][t].div_euclid(piv);
                if q != 0 {
                    let (top, rest) = a.split_at_mut(i);
                    for (x, y) in rest[0].iter_mut().zip(&top[t]) {
                        *x -= q * y;
                    }
                    let (top, rest) = u.split_at_mut(i);
                    for (x, y) in rest[0].iter_mut().zip(&top[t]) {
                        *x -= q * y;
                    }
                }
                clean &= a[i][t] == 0;
            }
            for j in t + 1..cols {
                let q = a[t][j].div_euclid(piv);
                if q != 0 {
                    sub_col(&mut a, &mut v, &mut v_inv, j, t, q);
                }
                clean &= a[t][j] == 0;
            }
            if !clean {
                continue;
            }
            let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| a[i][j] % piv != 0));
            match bad {
                Some(i) => {
                    let (top, rest) = a.split_at_mut(i);
                    for (x, y) in top[t].iter_mut().zip(&rest[0]) {
                        *x += y;
                    }
                    let (top, rest) = u.split_at_mut(i);
                    for (x, y) in top[t].iter_mut().zip(&rest[0]) {
                        *x += y;
                    }
                }
                None => break,
            }
        }
        if a[t][t] < 0 {
            for x in a[t].iter_mut() {
                *x = -*x;
            }
            for x in u[t].iter_mut() {
                *x = -*x;
            }
        }
    }
    finish(a, u, v, v_inv, rows, cols)
}

fn finish(a: Mat, u: Mat, v: Mat, v_inv: Mat, rows: usize, cols: usize) -> Smith {
    let diag = (0..rows.min(cols)).map(|i| a[i][i]).collect();
    Smith { diag, u, v, v_inv }
}

pub fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Finite or finitely generated abelian group Z^k / (row span of relations),
/// rewritten as a sum of cyclic groups.
#[derive(Clone, Debug)]
pub struct AbelianPresentation {
    /// orders of the cyclic factors, 0 meaning infinite; trivial factors dropped
    pub invariants: Vec<u64>,
    /// new generator i as an exponent vector in the old generators
    pub generators: Vec<Vec<i128>>,
    /// old coordinates to new: y_i = sum_j x_j * to_new[j][i]
    to_new: Vec<Vec<i128>>,
    keep: Vec<usize>,
}

impl AbelianPresentation {
    pub fn from_relations(relations: &[Vec<i128>], k: usize) -> Self {
        let s = smith(relations, k);
        let mut invariants = Vec::new();
        let mut keep = Vec::new();
        for i in 0..k {
            let d = s.diag.get(i).copied().unwrap_or(0);
            if d != 1 {
                invariants.push(d as u64);
                keep.push(i);
            }
        }
        let generators = keep.iter().map(|&i| s.v_inv[i].clone()).collect();
        AbelianPresentation {
            invariants,
            generators,
            to_new: s.v,
            keep,
        }
    }

    pub fn order(&self) -> Option<u64> {
        if self.invariants.contains(&0) {
            None
        } else {
            Some(self.invariants.iter().product())
        }
    }

    /// Coordinates of an old exponent vector in the cyclic decomposition.
    pub fn coordinates(&self, x: &[i128]) -> Vec<i128> {
        self.keep
            .iter()
            .zip(&self.invariants)
            .map(|(&i, &d)| {
                let y: i128 = x.iter().zip(&self.to_new).map(|(a, row)| a * row[i]).sum();
                if d == 0 {
                    y
                } else {
                    y.rem_euclid(d as i128)
                }
            })
            .collect()
    }
}
