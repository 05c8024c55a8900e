use crate::channel::Observation;

/// Bipartite graph between measurement rows `μ` and symbol columns `k`, with
/// an edge wherever the signature entry `s_μk` is nonzero.
///
/// Edges are stored row-major (CSR); `col_edges` indexes the same edges by
/// column.
#[derive(Clone, Debug)]
pub struct FactorGraph {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    edge_col: Vec<u32>,
    edge_sign: Vec<i8>,
    col_ptr: Vec<usize>,
    col_edges: Vec<usize>,
    l1: f64,
    l2: f64,
}

impl FactorGraph {
    pub fn from_observation(obs: &Observation) -> Self {
        let (rows, cols) = (obs.rows(), obs.cols());
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut edge_col = Vec::new();
        let mut edge_sign = Vec::new();
        row_ptr.push(0);
        for mu in 0..rows {
            for (k, &s) in obs.row(mu).iter().enumerate() {
                if s != 0 {
                    edge_col.push(k as u32);
                    edge_sign.push(s);
                }
            }
            row_ptr.push(edge_col.len());
        }

        let mut col_count = vec![0usize; cols + 1];
        for &k in &edge_col {
            col_count[k as usize + 1] += 1;
        }
        for k in 0..cols {
            col_count[k + 1] += col_count[k];
        }
        let col_ptr = col_count.clone();
        let mut fill = col_count;
        let mut col_edges = vec![0usize; edge_col.len()];
        for (e, &k) in edge_col.iter().enumerate() {
            col_edges[fill[k as usize]] = e;
            fill[k as usize] += 1;
        }

        let (l1, l2) = (0..rows).fold((0.0, 0.0), |(a, b), mu| {
            let d = (row_ptr[mu + 1] - row_ptr[mu]) as f64;
            (a + d, b + d * d)
        });
        FactorGraph { rows, cols, row_ptr, edge_col, edge_sign, col_ptr, col_edges, l1, l2 }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn edge_count(&self) -> usize {
        self.edge_col.len()
    }

    /// `L = Σ_μ |∂μ|`.
    pub fn l1(&self) -> f64 {
        self.l1
    }

    /// `L₂ = Σ_μ |∂μ|²`.
    pub fn l2(&self) -> f64 {
        self.l2
    }

    /// Edge index range of row `μ`.
    pub fn row_edges(&self, mu: usize) -> std::ops::Range<usize> {
        self.row_ptr[mu]..self.row_ptr[mu + 1]
    }

    pub fn row_degree(&self, mu: usize) -> usize {
        self.row_ptr[mu + 1] - self.row_ptr[mu]
    }

    /// Edge indices touching column `k` (`∂k`).
    pub fn col_edges(&self, k: usize) -> &[usize] {
        &self.col_edges[self.col_ptr[k]..self.col_ptr[k + 1]]
    }

    pub fn edge_col(&self, e: usize) -> usize {
        self.edge_col[e] as usize
    }

    pub fn edge_sign(&self, e: usize) -> i8 {
        self.edge_sign[e]
    }

    pub(crate) fn edge_cols(&self) -> &[u32] {
        &self.edge_col
    }

    pub(crate) fn edge_signs(&self) -> &[i8] {
        &self.edge_sign
    }

    /// Dense copy of column `k` over the visible rows, raw ternary values.
    pub fn dense_column(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for &e in self.col_edges(k) {
            let mu = self.row_ptr.partition_point(|&p| p <= e) - 1;
            out[mu] = self.edge_sign[e] as f64;
        }
        out
    }
}
