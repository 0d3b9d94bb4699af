use std::collections::VecDeque;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::symmetry::{invariance_group, OrbitSpace};
use crate::error::{structural, Error, Result};
use crate::operators::OperatorSum;

/// Candidates are processed in blocks of at most this many.
const MAX_CHUNK: usize = 128;
/// Candidate buffers are sized to stay below this many bytes.
const CHUNK_BYTES: usize = 64 << 20;
/// Largest register whose orbit table is built.
const MAX_CLOSURE_SITES: usize = 12;

#[derive(Clone, Debug)]
pub struct ClosureOptions {
    /// Largest admissible dimension; `None` means the dimension of the coordinate space.
    pub max_dim: Option<usize>,
    /// A candidate `ad_g(e)` is independent when its residual after projection exceeds this
    /// fraction of `max(||ad_g(e)||, 2 sum |g_P|)`, the second term bounding the rounding error of
    /// the commutator itself.
    pub rel_tol: f64,
    /// Upper bound on the memory held by the basis rows.
    pub memory_limit_bytes: usize,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        Self {
            max_dim: None,
            rel_tol: 1e-9,
            memory_limit_bytes: 3 << 30,
        }
    }
}

/// Residual statistics of the rank decisions made while building a basis.
///
/// A healthy run has `min_accepted_ratio` many orders of magnitude above `max_rejected_ratio`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClosureDiagnostics {
    pub candidates: usize,
    pub zero_candidates: usize,
    pub min_accepted_ratio: f64,
    pub max_rejected_ratio: f64,
}

/// Orthonormal basis of a real Lie algebra of Hermitian operators.
///
/// The skew-Hermitian algebra is `i * span{b_k}`. The inner product is `Tr(A B) / 2^N`, an
/// ad-invariant form, so every adjoint matrix in this basis is antisymmetric.
///
/// Elements are stored over orbits of the ring permutations that fix every generator: one
/// coefficient per orbit, shared by all its Pauli strings. Each row is kept as an unevaluated
/// double-double sum `hi + lo`, so rounding errors stay far below the rank tolerance even along
/// long chains of Gram-Schmidt steps with small residuals. Rank decisions use `hi` alone.
#[derive(Clone, Debug)]
pub struct LieBasis {
    n_sites: usize,
    space: Arc<OrbitSpace>,
    hi: Vec<f64>,
    lo: Vec<f64>,
    /// `hi` scaled by orbit sizes, so that plain dot products give the trace form.
    whi: Vec<f64>,
    generators: Vec<OperatorSum>,
    gen_maps: Vec<Arc<OrbitMap>>,
    gen_scale: Vec<f64>,
    rel_tol: f64,
    diagnostics: ClosureDiagnostics,
    ad_cache: OnceLock<AdjointData>,
}

#[derive(Clone, Debug)]
struct AdjointData {
    matrices: Vec<DMatrix<f64>>,
    defect: f64,
}

/// `ad_g` over orbit coordinates: output orbit `o` collects `factor * v[source]` over
/// `entries[starts[o]..starts[o + 1]]`.
#[derive(Debug)]
struct OrbitMap {
    starts: Vec<usize>,
    entries: Vec<(u32, f64)>,
}

impl OrbitMap {
    fn new(space: &OrbitSpace, n: usize, gen: &OperatorSum) -> Self {
        use crate::operators::pauli_internals::{product_phase, symplectic_commutes};
        let mask = (1u64 << n) - 1;
        let terms: Vec<(u64, u64, f64)> = gen
            .terms()
            .map(|(p, c)| (p.x_mask(), p.z_mask(), c))
            .collect();
        let mut starts = Vec::with_capacity(space.len() + 1);
        let mut entries = Vec::new();
        for o in 0..space.len() {
            starts.push(entries.len());
            let rep = space.rep(o) as u64;
            let (x, z) = (rep & mask, rep >> n);
            for &(gx, gz, gc) in &terms {
                // -i[t, P] = s * P' with P = t P' up to phase.
                let (px, pz) = (x ^ gx, z ^ gz);
                if symplectic_commutes(gx, gz, px, pz) {
                    continue;
                }
                let s = if product_phase(gx, gz, px, pz) == 1 {
                    2.0
                } else {
                    -2.0
                };
                let src = space.orbit_of((px | (pz << n)) as usize);
                entries.push((src as u32, s * gc));
            }
        }
        starts.push(entries.len());
        Self { starts, entries }
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (o, slot) in out.iter_mut().enumerate() {
            let e = &self.entries[self.starts[o]..self.starts[o + 1]];
            *slot = e.iter().map(|&(s, f)| f * v[s as usize]).sum();
        }
    }

    /// Double-double version of [`OrbitMap::apply`]; factors are exact.
    fn apply_dd(&self, vh: &[f64], vl: &[f64], oh: &mut [f64], ol: &mut [f64]) {
        for o in 0..oh.len() {
            let (mut ah, mut al) = (0.0, 0.0);
            for &(s, f) in &self.entries[self.starts[o]..self.starts[o + 1]] {
                let s = s as usize;
                (ah, al) = dd_add_prod(ah, al, f, vh[s], vl[s]);
            }
            oh[o] = ah;
            ol[o] = al;
        }
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `(ah + al) + f * (bh + bl)` in double-double arithmetic.
#[inline]
fn dd_add_prod(ah: f64, al: f64, f: f64, bh: f64, bl: f64) -> (f64, f64) {
    let p = f * bh;
    let pe = f.mul_add(bh, -p) + f * bl;
    let (s, e) = two_sum(ah, p);
    let e = e + al + pe;
    let h = s + e;
    (h, e - (h - s))
}

/// Smallest real Lie algebra containing `i * generators`.
///
/// New directions come from commutators `ad_g(e) = -i[g, e]` of basis elements with generators,
/// taken from a FIFO worklist of (element, generator) pairs, so the result is deterministic given
/// the generator order. Brackets with generators suffice because right-nested brackets of
/// generators span the generated algebra.
pub fn lie_closure(generators: &[OperatorSum], max_dim: usize) -> Result<LieBasis> {
    let opts = ClosureOptions {
        max_dim: Some(max_dim),
        ..Default::default()
    };
    lie_closure_with(generators, &opts)
}

pub fn lie_closure_with(generators: &[OperatorSum], opts: &ClosureOptions) -> Result<LieBasis> {
    let mut basis = LieBasis::empty(generators, opts)?;
    let mut queue = VecDeque::new();
    for g in generators {
        basis.insert_direction(g, opts, &mut queue)?;
    }
    basis.run(&mut queue, opts, false)?;
    Ok(basis)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `out = rows * cand^T` for row-major `rows` (`k x d`) and `cand` (`m x d`); `out` is `k x m`.
fn project_block(rows: &[f64], k: usize, cand: &[f64], m: usize, d: usize, out: &mut [f64]) {
    if k == 0 {
        return;
    }
    assert!(rows.len() >= k * d && cand.len() >= m * d && out.len() >= k * m);
    // SAFETY: the assertion above bounds every access implied by the strides.
    unsafe {
        matrixmultiply::dgemm(
            k,
            d,
            m,
            1.0,
            rows.as_ptr(),
            d as isize,
            1,
            cand.as_ptr(),
            1,
            d as isize,
            0.0,
            out.as_mut_ptr(),
            m as isize,
            1,
        );
    }
}

/// `cand -= proj^T * rows` for the output of [`project_block`].
fn subtract_block(rows: &[f64], k: usize, proj: &[f64], cand: &mut [f64], m: usize, d: usize) {
    if k == 0 {
        return;
    }
    assert!(rows.len() >= k * d && cand.len() >= m * d && proj.len() >= k * m);
    // SAFETY: the assertion above bounds every access implied by the strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            d,
            -1.0,
            proj.as_ptr(),
            1,
            m as isize,
            rows.as_ptr(),
            d as isize,
            1,
            1.0,
            cand.as_mut_ptr(),
            d as isize,
            1,
        );
    }
}

impl LieBasis {
    fn empty(generators: &[OperatorSum], opts: &ClosureOptions) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(structural("Lie closure needs at least one generator"));
        };
        let n = first.n_sites();
        if let Some(g) = generators.iter().find(|g| g.n_sites() != n) {
            return Err(structural(format!(
                "generators act on {} and {} sites",
                n,
                g.n_sites()
            )));
        }
        if n > MAX_CLOSURE_SITES {
            return Err(Error::Capacity {
                what: "Lie closure register (sites)".into(),
                limit: MAX_CLOSURE_SITES,
                reached: n,
            });
        }
        let space = Arc::new(OrbitSpace::new(n, invariance_group(n, generators)));
        let row_bytes = 3 * 8 * space.len();
        if row_bytes > opts.memory_limit_bytes {
            return Err(Error::Capacity {
                what: "Lie basis memory (bytes per element)".into(),
                limit: opts.memory_limit_bytes,
                reached: row_bytes,
            });
        }
        let gen_maps = generators
            .iter()
            .map(|g| Arc::new(OrbitMap::new(&space, n, g)))
            .collect();
        Ok(Self {
            n_sites: n,
            space,
            hi: Vec::new(),
            lo: Vec::new(),
            whi: Vec::new(),
            generators: generators.to_vec(),
            gen_maps,
            gen_scale: generators.iter().map(scale_of).collect(),
            rel_tol: opts.rel_tol,
            diagnostics: ClosureDiagnostics {
                min_accepted_ratio: f64::INFINITY,
                ..Default::default()
            },
            ad_cache: OnceLock::new(),
        })
    }

    /// Basis of the span of `elements` without taking a closure; fails with a structural error
    /// unless the span is closed under commutators.
    pub fn from_spanning_set(elements: &[OperatorSum], rel_tol: f64) -> Result<Self> {
        let opts = ClosureOptions {
            rel_tol,
            ..Default::default()
        };
        let mut basis = Self::empty(elements, &opts)?;
        let mut queue = VecDeque::new();
        for e in elements {
            basis.insert_direction(e, &opts, &mut queue)?;
        }
        basis.run(&mut queue, &opts, true)?;
        Ok(basis)
    }

    /// Closure of the algebra with one more generator, reusing the existing basis.
    pub fn extended(&self, extra: &OperatorSum, opts: &ClosureOptions) -> Result<Self> {
        if extra.n_sites() != self.n_sites {
            return Err(structural(format!(
                "extra generator acts on {} sites, algebra on {}",
                extra.n_sites(),
                self.n_sites
            )));
        }
        let mut basis = self.clone();
        basis.ad_cache = OnceLock::new();
        basis.rel_tol = opts.rel_tol;
        basis.generators.push(extra.clone());
        basis.gen_scale.push(scale_of(extra));
        let group = invariance_group(self.n_sites, &basis.generators);
        if group.len() != self.space.group().len() {
            let fine = Arc::new(OrbitSpace::new(self.n_sites, group));
            let dim = self.dim();
            let d = self.space.len();
            let remap = |rows: &[f64]| -> Vec<f64> {
                (0..dim)
                    .flat_map(|k| self.space.refine(&fine, &rows[k * d..(k + 1) * d]))
                    .collect()
            };
            basis.hi = remap(&self.hi);
            basis.lo = remap(&self.lo);
            basis.space = fine;
            basis.whi = weighted(&basis.hi, basis.space.sizes());
            basis.gen_maps = basis
                .generators
                .iter()
                .map(|g| Arc::new(OrbitMap::new(&basis.space, self.n_sites, g)))
                .collect();
        } else {
            basis
                .gen_maps
                .push(Arc::new(OrbitMap::new(&basis.space, self.n_sites, extra)));
        }
        let g = basis.generators.len() - 1;
        let mut queue: VecDeque<(usize, usize)> = (0..basis.dim()).map(|e| (e, g)).collect();
        basis.insert_direction(extra, opts, &mut queue)?;
        basis.run(&mut queue, opts, false)?;
        Ok(basis)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.hi.len() / self.space.len()
    }

    /// Dimension of the coordinate space: the number of Pauli-string orbits under the shared
    /// ring symmetries of the generators.
    pub fn coordinate_dim(&self) -> usize {
        self.space.len()
    }

    /// Number of ring permutations (rotations and reflections) fixing every generator.
    pub fn symmetry_order(&self) -> usize {
        self.space.group().len()
    }

    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[OperatorSum] {
        &self.generators
    }

    pub fn diagnostics(&self) -> &ClosureDiagnostics {
        &self.diagnostics
    }

    fn d(&self) -> usize {
        self.space.len()
    }

    fn row(&self, k: usize) -> &[f64] {
        &self.hi[k * self.d()..(k + 1) * self.d()]
    }

    fn row_lo(&self, k: usize) -> &[f64] {
        &self.lo[k * self.d()..(k + 1) * self.d()]
    }

    fn wrow(&self, k: usize) -> &[f64] {
        &self.whi[k * self.d()..(k + 1) * self.d()]
    }

    /// Orthonormal basis element `k` as a Hermitian operator.
    pub fn element(&self, k: usize) -> OperatorSum {
        self.space.to_operator(self.row(k), 1e-14)
    }

    pub fn elements(&self) -> Vec<OperatorSum> {
        (0..self.dim()).map(|k| self.element(k)).collect()
    }

    fn adjoint_data(&self) -> &AdjointData {
        self.ad_cache.get_or_init(|| self.compute_adjoints())
    }

    /// Matrix of `ad_g` for generator `g` in the orthonormal basis (column `e` is `ad_g(b_e)`).
    ///
    /// Computed for all generators on first use.
    pub fn ad_matrix(&self, g: usize) -> DMatrix<f64> {
        self.adjoint_data().matrices[g].clone()
    }

    /// Largest norm of the component of `ad_g(b_e)` outside the span, relative to the bound
    /// `2 sum |g_P|` on `||ad_g||`; near zero for a closed basis.
    pub fn closure_defect(&self) -> f64 {
        self.adjoint_data().defect
    }

    fn compute_adjoints(&self) -> AdjointData {
        let dim = self.dim();
        let d = self.d();
        let chunk = (CHUNK_BYTES / (8 * d)).clamp(1, MAX_CHUNK);
        let mut matrices = vec![DMatrix::<f64>::zeros(dim, dim); self.generators.len()];
        let mut defect: f64 = 0.0;
        let pairs: Vec<(usize, usize)> = (0..self.generators.len())
            .flat_map(|g| (0..dim).map(move |e| (e, g)))
            .collect();
        for block in pairs.chunks(chunk) {
            let m = block.len();
            let mut cand = vec![0.0; m * d];
            cand.par_chunks_mut(d)
                .zip(block.par_iter())
                .for_each(|(out, &(e, g))| self.gen_maps[g].apply(self.row(e), out));
            let mut proj = vec![0.0; dim * m];
            project_block(&self.whi, dim, &cand, m, d, &mut proj);
            subtract_block(&self.hi, dim, &proj, &mut cand, m, d);
            for (j, &(e, g)) in block.iter().enumerate() {
                for k in 0..dim {
                    matrices[g][(k, e)] = proj[k * m + j];
                }
                let r = &cand[j * d..(j + 1) * d];
                let out = self.weighted_norm(r) / self.gen_scale[g].max(f64::MIN_POSITIVE);
                defect = defect.max(out);
            }
        }
        AdjointData { matrices, defect }
    }

    fn weighted_norm(&self, v: &[f64]) -> f64 {
        v.iter()
            .zip(self.space.sizes())
            .map(|(x, w)| w * x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// Coefficients of the orthogonal projection of `op` onto the algebra, and the norm of the
    /// residual.
    pub fn project(&self, op: &OperatorSum) -> Result<(Vec<f64>, f64)> {
        if op.n_sites() != self.n_sites {
            return Err(structural(
                "operator and algebra act on different registers",
            ));
        }
        let (mut r, outside) = self.space.coordinates(op);
        let mut coeffs = vec![0.0; self.dim()];
        for _ in 0..2 {
            for (k, c) in coeffs.iter_mut().enumerate() {
                let a = dot(self.wrow(k), &r);
                axpy(-a, self.row(k), &mut r);
                *c += a;
            }
        }
        let res = self.weighted_norm(&r);
        Ok((coeffs, (res * res + outside).sqrt()))
    }

    /// `op` lies in the algebra up to a residual of `rel_tol * ||op||`.
    pub fn contains(&self, op: &OperatorSum, rel_tol: f64) -> Result<bool> {
        let (_, res) = self.project(op)?;
        Ok(res <= rel_tol * op.norm().max(f64::MIN_POSITIVE))
    }

    fn check_capacity(&self, opts: &ClosureOptions) -> Result<()> {
        let dim = self.dim();
        let limit = opts.max_dim.unwrap_or(self.d());
        if dim + 1 > limit {
            return Err(Error::Capacity {
                what: "Lie algebra dimension".into(),
                limit,
                reached: dim,
            });
        }
        let row_bytes = 3 * self.d() * 8;
        if (dim + 1) * row_bytes > opts.memory_limit_bytes {
            return Err(Error::Capacity {
                what: "Lie basis memory (elements)".into(),
                limit: opts.memory_limit_bytes / row_bytes,
                reached: dim,
            });
        }
        Ok(())
    }

    /// Finishes the rank decision for a residual `r` already orthogonal to rows `..from`, where
    /// `coeffs[..from]` hold the projection coefficients of the candidate `(vh, vl)`. An
    /// independent candidate is re-orthogonalized in double-double arithmetic and appended.
    fn finish_candidate(
        &mut self,
        r: &mut [f64],
        coeffs: &mut Vec<f64>,
        (vh, vl): (&[f64], &[f64]),
        reference: f64,
        opts: &ClosureOptions,
    ) -> Result<bool> {
        for k in coeffs.len()..self.dim() {
            let a = dot(self.wrow(k), r);
            axpy(-a, self.row(k), r);
            coeffs.push(a);
        }
        let ratio = self.weighted_norm(r) / reference;
        self.diagnostics.candidates += 1;
        if ratio <= self.rel_tol {
            self.diagnostics.max_rejected_ratio = self.diagnostics.max_rejected_ratio.max(ratio);
            return Ok(false);
        }
        self.check_capacity(opts)?;
        self.diagnostics.min_accepted_ratio = self.diagnostics.min_accepted_ratio.min(ratio);
        let (mut rh, mut rl) = (vh.to_vec(), vl.to_vec());
        self.subtract_dd(coeffs, &mut rh, &mut rl);
        let second: Vec<f64> = (0..self.dim()).map(|k| dot(self.wrow(k), &rh)).collect();
        self.subtract_dd(&second, &mut rh, &mut rl);
        let n = self.weighted_norm(&rh);
        for (h, l) in rh.iter_mut().zip(rl.iter_mut()) {
            let q = *h / n;
            let rem = (-q).mul_add(n, *h) + *l;
            *h = q;
            *l = rem / n;
        }
        self.whi
            .extend(rh.iter().zip(self.space.sizes()).map(|(x, w)| x * w));
        self.hi.extend_from_slice(&rh);
        self.lo.extend_from_slice(&rl);
        self.ad_cache = OnceLock::new();
        Ok(true)
    }

    /// `(rh, rl) -= sum_k c_k (hi_k + lo_k)` in double-double arithmetic.
    fn subtract_dd(&self, c: &[f64], rh: &mut [f64], rl: &mut [f64]) {
        for (k, &ck) in c.iter().enumerate() {
            if ck == 0.0 {
                continue;
            }
            let (qh, ql) = (self.row(k), self.row_lo(k));
            for i in 0..rh.len() {
                (rh[i], rl[i]) = dd_add_prod(rh[i], rl[i], -ck, qh[i], ql[i]);
            }
        }
    }

    fn enqueue_new(&self, e: usize, queue: &mut VecDeque<(usize, usize)>) {
        for g in 0..self.generators.len() {
            queue.push_back((e, g));
        }
    }

    fn insert_direction(
        &mut self,
        g: &OperatorSum,
        opts: &ClosureOptions,
        queue: &mut VecDeque<(usize, usize)>,
    ) -> Result<()> {
        let nu = g.norm();
        if nu == 0.0 {
            return Ok(());
        }
        let (v, _) = self.space.coordinates(g);
        let lo = vec![0.0; v.len()];
        let mut r = v.clone();
        let mut coeffs = Vec::new();
        if self.finish_candidate(&mut r, &mut coeffs, (&v, &lo), nu, opts)? {
            self.enqueue_new(self.dim() - 1, queue);
        }
        Ok(())
    }

    /// Drains the worklist; with `check_only` every independent commutator is an error.
    fn run(
        &mut self,
        queue: &mut VecDeque<(usize, usize)>,
        opts: &ClosureOptions,
        check_only: bool,
    ) -> Result<()> {
        let d = self.d();
        let chunk = (CHUNK_BYTES / (24 * d)).clamp(1, MAX_CHUNK);
        while !queue.is_empty() {
            let take = chunk.min(queue.len());
            let pairs: Vec<(usize, usize)> = queue.drain(..take).collect();
            let m = pairs.len();
            let mut vh = vec![0.0; m * d];
            let mut vl = vec![0.0; m * d];
            {
                let this = &*self;
                vh.par_chunks_mut(d)
                    .zip(vl.par_chunks_mut(d))
                    .zip(pairs.par_iter())
                    .for_each(|((oh, ol), &(e, g))| {
                        this.gen_maps[g].apply_dd(this.row(e), this.row_lo(e), oh, ol)
                    });
            }
            let mut cand = vh.clone();
            let dim0 = self.dim();
            let mut proj = vec![0.0; dim0 * m];
            project_block(&self.whi, dim0, &cand, m, d, &mut proj);
            subtract_block(&self.hi, dim0, &proj, &mut cand, m, d);
            for (j, &(e, g)) in pairs.iter().enumerate() {
                let span = j * d..(j + 1) * d;
                let norm = self.weighted_norm(&vh[span.clone()]);
                let scale = self.gen_scale[g];
                if norm <= 1e-12 * scale {
                    self.diagnostics.zero_candidates += 1;
                    continue;
                }
                let mut coeffs: Vec<f64> = (0..dim0).map(|k| proj[k * m + j]).collect();
                let added = self.finish_candidate(
                    &mut cand[span.clone()],
                    &mut coeffs,
                    (&vh[span.clone()], &vl[span]),
                    norm.max(scale),
                    opts,
                )?;
                if added {
                    if check_only {
                        return Err(structural(format!(
                            "span is not closed: the commutator of element {e} with element {g} \
                             leaves it"
                        )));
                    }
                    self.enqueue_new(self.dim() - 1, queue);
                }
            }
        }
        Ok(())
    }
}

/// `2 sum |g_P|`, a bound on the norm of `ad_g` for the trace form.
fn scale_of(g: &OperatorSum) -> f64 {
    2.0 * g.terms().map(|(_, c)| c.abs()).sum::<f64>()
}

fn weighted(rows: &[f64], sizes: &[f64]) -> Vec<f64> {
    rows.chunks(sizes.len())
        .flat_map(|r| r.iter().zip(sizes).map(|(x, w)| x * w))
        .collect()
}
