//! Concrete AGE share polynomials over the field.
//!
//! `F_A(x) = C_A(x) + S_A(x)` carries the blocks of `Aᵀ` and `z` uniform
//! masks; `F_B(x) = C_B(x) + S_B(x)` does the same for `B`. Coefficients are
//! stored sparsely by exponent.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use thiserror::Error;

use crate::field::{BlockMatrix, FieldElement, FieldError, PrimeField};
use crate::powersets::{
    powers_coded_a, powers_coded_b, powers_secret_a, powers_secret_b, PartitionScheme, PowerSet,
};

/// RNG stream for source A's masks.
pub const STREAM_SOURCE_A: u64 = 1;
/// RNG stream for source B's masks.
pub const STREAM_SOURCE_B: u64 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodingError {
    #[error("input must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension {m} is not divisible by s = {s} and t = {t}")]
    IndivisibleDimensions { m: usize, s: u64, t: u64 },
    #[error("scheme has m = {scheme:?} but input is {actual}x{actual}")]
    DimensionMismatch { scheme: Option<u64>, actual: usize },
    #[error("expected a {expected:?}-side input")]
    WrongRole { expected: Role },
    #[error("coefficient keys do not match the declared support")]
    SupportMismatch,
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Role {
    A,
    B,
}

/// A source's `m x m` input matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceInput {
    matrix: BlockMatrix,
    role: Role,
}

impl SourceInput {
    pub fn new(matrix: BlockMatrix, role: Role) -> Result<Self, CodingError> {
        if matrix.rows() != matrix.cols() {
            return Err(CodingError::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        Ok(Self { matrix, role })
    }

    pub fn matrix(&self) -> &BlockMatrix {
        &self.matrix
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

/// Row-major grid of equally shaped blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockGrid {
    rows: usize,
    cols: usize,
    blocks: Vec<BlockMatrix>,
}

impl BlockGrid {
    pub fn new(rows: usize, cols: usize, blocks: Vec<BlockMatrix>) -> Self {
        assert_eq!(blocks.len(), rows * cols);
        Self { rows, cols, blocks }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BlockMatrix {
        &self.blocks[i * self.cols + j]
    }

    /// Glues the blocks back into one matrix.
    pub fn assemble(&self) -> BlockMatrix {
        let (br, bc) = self.blocks[0].shape();
        let mut out = BlockMatrix::zeros(self.blocks[0].field(), br * self.rows, bc * self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.put_block(i * br, j * bc, self.get(i, j));
            }
        }
        out
    }
}

fn check_dims(input: &SourceInput, scheme: &PartitionScheme) -> Result<usize, CodingError> {
    let m = input.dim();
    let (s, t) = (scheme.s(), scheme.t());
    if m == 0 || !(m as u64).is_multiple_of(s) || !(m as u64).is_multiple_of(t) {
        return Err(CodingError::IndivisibleDimensions { m, s, t });
    }
    if let Some(sm) = scheme.m() {
        if sm != m as u64 {
            return Err(CodingError::DimensionMismatch {
                scheme: scheme.m(),
                actual: m,
            });
        }
    }
    Ok(m)
}

/// Splits an input into blocks.
///
/// A-side: `Aᵀ` as a `t x s` grid of `(m/t) x (m/s)` blocks `A_{i,j}`.
/// B-side: `B` as an `s x t` grid of `(m/s) x (m/t)` blocks `B_{k,l}`.
pub fn partition(input: &SourceInput, scheme: &PartitionScheme) -> Result<BlockGrid, CodingError> {
    let m = check_dims(input, scheme)?;
    let (s, t) = (scheme.s() as usize, scheme.t() as usize);
    let (source, grid_rows, grid_cols) = match input.role {
        Role::A => (input.matrix.transpose(), t, s),
        Role::B => (input.matrix.clone(), s, t),
    };
    let (br, bc) = (m / grid_rows, m / grid_cols);
    let blocks = (0..grid_rows)
        .flat_map(|i| (0..grid_cols).map(move |j| (i, j)))
        .map(|(i, j)| source.sub_block(i * br, j * bc, br, bc))
        .collect();
    Ok(BlockGrid::new(grid_rows, grid_cols, blocks))
}

/// Sparse block polynomial `sum_e coeffs[e] x^e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedPolynomial {
    support: PowerSet,
    coeffs: BTreeMap<u64, BlockMatrix>,
    block_shape: (usize, usize),
    field: PrimeField,
}

impl MaskedPolynomial {
    /// Fails unless every block has the same shape and `coeffs` is non-empty.
    pub fn from_terms(coeffs: BTreeMap<u64, BlockMatrix>) -> Result<Self, CodingError> {
        let first = coeffs.values().next().ok_or(CodingError::SupportMismatch)?;
        let block_shape = first.shape();
        let field = first.field();
        for b in coeffs.values() {
            if b.shape() != block_shape {
                return Err(FieldError::ShapeMismatch {
                    left_rows: block_shape.0,
                    left_cols: block_shape.1,
                    right_rows: b.rows(),
                    right_cols: b.cols(),
                }
                .into());
            }
        }
        Ok(Self {
            support: coeffs.keys().copied().collect(),
            coeffs,
            block_shape,
            field,
        })
    }

    pub fn support(&self) -> &PowerSet {
        &self.support
    }

    pub fn coeffs(&self) -> &BTreeMap<u64, BlockMatrix> {
        &self.coeffs
    }

    pub fn coeff(&self, exponent: u64) -> Option<&BlockMatrix> {
        self.coeffs.get(&exponent)
    }

    pub fn block_shape(&self) -> (usize, usize) {
        self.block_shape
    }

    pub fn degree(&self) -> u64 {
        self.support.max().unwrap_or(0)
    }

    pub fn evaluate(&self, x: FieldElement) -> BlockMatrix {
        self.evaluate_counted(x).0
    }

    /// Evaluates at `x`, also returning the scalar multiplications spent on
    /// coefficient scaling: one block's worth per term with a nonzero
    /// exponent. Scalar power updates are not counted.
    pub fn evaluate_counted(&self, x: FieldElement) -> (BlockMatrix, u64) {
        let (r, c) = self.block_shape;
        let mut acc = BlockMatrix::zeros(self.field, r, c);
        let mut mults = 0u64;
        let mut power = self.field.one();
        let mut last = 0u64;
        for (&e, block) in &self.coeffs {
            if e == 0 {
                acc.add_assign(block).expect("uniform block shape");
                continue;
            }
            // ascend from the previous exponent
            power *= x.pow(e - last);
            last = e;
            acc.add_scaled(power, block).expect("uniform block shape");
            mults += (r * c) as u64;
        }
        (acc, mults)
    }
}

/// How the mask blocks are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Masking {
    /// Uniform field entries from a ChaCha20 stream per source.
    Seeded(u64),
    /// All masks zero; only for checking the coded part in isolation.
    Zero,
}

fn mask_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn mask_blocks(
    field: PrimeField,
    shape: (usize, usize),
    powers: &PowerSet,
    masking: Masking,
    stream: u64,
) -> Vec<(u64, BlockMatrix)> {
    match masking {
        Masking::Zero => powers
            .iter()
            .map(|e| (e, BlockMatrix::zeros(field, shape.0, shape.1)))
            .collect(),
        Masking::Seeded(seed) => {
            let mut rng = mask_rng(seed, stream);
            powers
                .iter()
                .map(|e| (e, BlockMatrix::random(field, shape.0, shape.1, &mut rng)))
                .collect()
        }
    }
}

/// Builds `F_A` and `F_B`.
///
/// `A_{i,j}` sits at exponent `j + s·i` and `B_{k,l}` at `(s-1-k) + θ·l`;
/// the masks occupy the secret powers of each side.
pub fn build_masked_polynomials(
    a: &SourceInput,
    b: &SourceInput,
    scheme: &PartitionScheme,
    masking: Masking,
) -> Result<(MaskedPolynomial, MaskedPolynomial), CodingError> {
    if a.role != Role::A {
        return Err(CodingError::WrongRole { expected: Role::A });
    }
    if b.role != Role::B {
        return Err(CodingError::WrongRole { expected: Role::B });
    }
    let grid_a = partition(a, scheme)?;
    let grid_b = partition(b, scheme)?;
    let field = a.matrix.field();
    let (s, t) = (scheme.s(), scheme.t());
    let theta = scheme.theta();

    let mut fa = BTreeMap::new();
    for i in 0..t {
        for j in 0..s {
            fa.insert(j + s * i, grid_a.get(i as usize, j as usize).clone());
        }
    }
    let shape_a = grid_a.get(0, 0).shape();
    fa.extend(mask_blocks(
        field,
        shape_a,
        &powers_secret_a(scheme),
        masking,
        STREAM_SOURCE_A,
    ));

    let mut fb = BTreeMap::new();
    for k in 0..s {
        for l in 0..t {
            fb.insert(
                (s - 1 - k) + theta * l,
                grid_b.get(k as usize, l as usize).clone(),
            );
        }
    }
    let shape_b = grid_b.get(0, 0).shape();
    fb.extend(mask_blocks(
        field,
        shape_b,
        &powers_secret_b(scheme),
        masking,
        STREAM_SOURCE_B,
    ));

    let fa = MaskedPolynomial::from_terms(fa)?;
    let fb = MaskedPolynomial::from_terms(fb)?;
    debug_assert_eq!(
        *fa.support(),
        powers_coded_a(scheme).union(&powers_secret_a(scheme))
    );
    debug_assert_eq!(
        *fb.support(),
        powers_coded_b(scheme).union(&powers_secret_b(scheme))
    );
    Ok((fa, fb))
}

/// Coefficient-level product `F_A(x)·F_B(x)`, including zero blocks.
pub fn symbolic_product(
    fa: &MaskedPolynomial,
    fb: &MaskedPolynomial,
) -> Result<BTreeMap<u64, BlockMatrix>, CodingError> {
    let mut out: BTreeMap<u64, BlockMatrix> = BTreeMap::new();
    for (&ea, ba) in &fa.coeffs {
        for (&eb, bb) in &fb.coeffs {
            let prod = ba.mul(bb)?;
            match out.get_mut(&(ea + eb)) {
                Some(acc) => acc.add_assign(&prod)?,
                None => {
                    out.insert(ea + eb, prod);
                }
            }
        }
    }
    Ok(out)
}

/// Exponents of `F_A·F_B` whose coefficient block is nonzero.
pub fn symbolic_product_support(
    fa: &MaskedPolynomial,
    fb: &MaskedPolynomial,
) -> Result<PowerSet, CodingError> {
    Ok(symbolic_product(fa, fb)?
        .into_iter()
        .filter_map(|(e, b)| (!b.is_zero()).then_some(e))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powersets::{important_powers, product_support_parts};

    fn field() -> PrimeField {
        PrimeField::mersenne61()
    }

    fn random_input(m: usize, role: Role, seed: u64) -> SourceInput {
        let mut rng = mask_rng(seed, 99);
        SourceInput::new(BlockMatrix::random(field(), m, m, &mut rng), role).unwrap()
    }

    fn scheme(s: u64, t: u64, z: u64, l: u64) -> PartitionScheme {
        PartitionScheme::new(s, t, z, l).unwrap()
    }

    #[test]
    fn partition_identity() {
        let id = SourceInput::new(BlockMatrix::identity(field(), 4), Role::A).unwrap();
        let g = partition(&id, &scheme(2, 2, 1, 0)).unwrap();
        assert_eq!(*g.get(0, 0), BlockMatrix::identity(field(), 2));
        assert_eq!(*g.get(1, 1), BlockMatrix::identity(field(), 2));
        assert!(g.get(0, 1).is_zero() && g.get(1, 0).is_zero());
    }

    #[test]
    fn partition_column_slices() {
        let a = BlockMatrix::from_values(field(), 2, 2, &[1, 2, 3, 4]).unwrap();
        let g = partition(&SourceInput::new(a, Role::A).unwrap(), &scheme(2, 1, 1, 0)).unwrap();
        // Aᵀ = [[1,3],[2,4]] split into two 2x1 column slices
        assert_eq!((g.rows(), g.cols()), (1, 2));
        assert_eq!(g.get(0, 0).values(), &[1, 2]);
        assert_eq!(g.get(0, 1).values(), &[3, 4]);
    }

    #[test]
    fn partition_round_trip() {
        for (m, s, t) in [(6, 2, 3), (12, 3, 2), (8, 4, 2), (4, 1, 2)] {
            let a = random_input(m, Role::A, m as u64);
            let g = partition(&a, &scheme(s, t, 1, 0)).unwrap();
            assert_eq!(g.assemble(), a.matrix().transpose());
            let b = random_input(m, Role::B, 3);
            let g = partition(&b, &scheme(s, t, 1, 0)).unwrap();
            assert_eq!(g.assemble(), *b.matrix());
        }
    }

    #[test]
    fn partition_rejects_indivisible() {
        let a = random_input(6, Role::A, 1);
        assert!(matches!(
            partition(&a, &scheme(4, 1, 1, 0)),
            Err(CodingError::IndivisibleDimensions { .. })
        ));
    }

    #[test]
    fn supports_s2_t2_z2() {
        let sc = scheme(2, 2, 2, 2);
        let (fa, fb) = build_masked_polynomials(
            &random_input(4, Role::A, 1),
            &random_input(4, Role::B, 2),
            &sc,
            Masking::Seeded(5),
        )
        .unwrap();
        assert_eq!(*fa.support(), PowerSet::interval(0, 5));
        assert_eq!(
            *fb.support(),
            [0, 1, 6, 7, 10, 11].into_iter().collect::<PowerSet>()
        );
        assert_eq!(fa.block_shape(), (2, 2));
        assert_eq!(
            symbolic_product_support(&fa, &fb).unwrap(),
            PowerSet::interval(0, 16)
        );
    }

    #[test]
    fn rectangular_block_shapes() {
        let sc = scheme(2, 3, 3, 1);
        let (fa, fb) = build_masked_polynomials(
            &random_input(12, Role::A, 1),
            &random_input(12, Role::B, 2),
            &sc,
            Masking::Seeded(1),
        )
        .unwrap();
        assert_eq!(fa.block_shape(), (4, 6));
        assert_eq!(fb.block_shape(), (6, 4));
    }

    #[test]
    fn determinism() {
        let sc = scheme(2, 2, 2, 1);
        let a = random_input(4, Role::A, 1);
        let b = random_input(4, Role::B, 2);
        let one = build_masked_polynomials(&a, &b, &sc, Masking::Seeded(9)).unwrap();
        let two = build_masked_polynomials(&a, &b, &sc, Masking::Seeded(9)).unwrap();
        assert_eq!(one, two);
        let other = build_masked_polynomials(&a, &b, &sc, Masking::Seeded(10)).unwrap();
        assert_ne!(one, other);
    }

    #[test]
    fn roles_are_checked() {
        let sc = scheme(2, 2, 2, 1);
        let a = random_input(4, Role::A, 1);
        assert_eq!(
            build_masked_polynomials(&a, &a, &sc, Masking::Zero),
            Err(CodingError::WrongRole { expected: Role::B })
        );
    }

    #[test]
    fn important_coefficients_with_and_without_masks() {
        for (m, s, t, z, l) in [(4, 2, 2, 2, 2), (12, 2, 3, 3, 1), (6, 3, 2, 4, 0), (6, 1, 3, 2, 1)] {
            let sc = scheme(s, t, z, l);
            let a = random_input(m, Role::A, 11);
            let b = random_input(m, Role::B, 12);
            let ga = partition(&a, &sc).unwrap();
            let gb = partition(&b, &sc).unwrap();
            for masking in [Masking::Zero, Masking::Seeded(3)] {
                let (fa, fb) = build_masked_polynomials(&a, &b, &sc, masking).unwrap();
                let h = symbolic_product(&fa, &fb).unwrap();
                for ((i, l), u) in important_powers(&sc) {
                    let mut want = BlockMatrix::zeros(field(), m / t as usize, m / t as usize);
                    for j in 0..s as usize {
                        want.add_assign(&ga.get(i as usize, j).mul(gb.get(j, l as usize)).unwrap())
                            .unwrap();
                    }
                    assert_eq!(h[&u], want, "{sc} {masking:?} ({i},{l})");
                }
            }
        }
    }

    #[test]
    fn zero_masks_give_d1() {
        let sc = scheme(2, 3, 3, 1);
        let (fa, fb) = build_masked_polynomials(
            &random_input(12, Role::A, 1),
            &random_input(12, Role::B, 2),
            &sc,
            Masking::Zero,
        )
        .unwrap();
        assert_eq!(
            symbolic_product_support(&fa, &fb).unwrap(),
            product_support_parts(&sc).d1
        );
    }

    #[test]
    fn zero_inputs_give_empty_support() {
        let sc = scheme(2, 2, 1, 1);
        let a = SourceInput::new(BlockMatrix::zeros(field(), 4, 4), Role::A).unwrap();
        let b = SourceInput::new(BlockMatrix::zeros(field(), 4, 4), Role::B).unwrap();
        let (fa, fb) = build_masked_polynomials(&a, &b, &sc, Masking::Zero).unwrap();
        assert!(symbolic_product_support(&fa, &fb).unwrap().is_empty());
    }

    #[test]
    fn evaluate_edge_points() {
        let sc = scheme(2, 2, 2, 2);
        let (fa, _) = build_masked_polynomials(
            &random_input(4, Role::A, 1),
            &random_input(4, Role::B, 2),
            &sc,
            Masking::Seeded(4),
        )
        .unwrap();
        assert_eq!(fa.evaluate(field().zero()), *fa.coeff(0).unwrap());
        let mut sum = BlockMatrix::zeros(field(), 2, 2);
        for b in fa.coeffs().values() {
            sum.add_assign(b).unwrap();
        }
        let (at_one, mults) = fa.evaluate_counted(field().one());
        assert_eq!(at_one, sum);
        // 5 nonzero exponents, 4 scalars per block
        assert_eq!(mults, 20);
        // entrywise Horner oracle at x = 2
        let at_two = fa.evaluate(field().element(2));
        for r in 0..2 {
            for c in 0..2 {
                let mut acc = field().zero();
                for e in (0..=fa.degree()).rev() {
                    acc = acc * field().element(2)
                        + fa.coeff(e).map(|b| b.get(r, c)).unwrap_or(field().zero());
                }
                assert_eq!(at_two.get(r, c), acc);
            }
        }
    }

    #[test]
    fn missing_zero_exponent_evaluates_to_zero_at_origin() {
        let mut terms = BTreeMap::new();
        terms.insert(3, BlockMatrix::identity(field(), 2));
        let p = MaskedPolynomial::from_terms(terms).unwrap();
        assert!(p.evaluate(field().zero()).is_zero());
    }
}
