//! Walsh-Hadamard code books and DSSS spreading.
//!
//! Codes are columns of the Sylvester Hadamard matrix of order `Nc`, scaled
//! by `1/sqrt(Nc)` so the selected columns are orthonormal. Column `k` has
//! entry `(-1)^popcount(m & k) / sqrt(Nc)` on subcarrier `m`, which lets
//! spreading and despreading run as fast Walsh-Hadamard transforms.
//!
//! The identity book turns the chain back into plain OFDM: one information
//! symbol per subcarrier and no spreading.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::constellation::QamConstellation;
use crate::math::C64;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Hadamard { columns: Vec<usize> },
    Identity,
}

/// Spreading matrix `C` of size `Nc x NC`.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeBook {
    nc: usize,
    kind: Kind,
}

/// Which Hadamard columns a book uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    /// Columns `offset .. offset + NC`.
    Contiguous {
        offset: usize,
    },
    Explicit(Vec<usize>),
}

impl Selection {
    pub const FIRST: Selection = Selection::Contiguous { offset: 0 };
}

impl CodeBook {
    pub fn hadamard(nc: usize, channels: usize, selection: &Selection) -> Result<Self> {
        if !nc.is_power_of_two() {
            return Err(Error::NotPowerOfTwo {
                what: "subcarrier count",
                value: nc,
            });
        }
        let columns: Vec<usize> = match selection {
            Selection::Contiguous { offset } => (*offset..offset + channels).collect(),
            Selection::Explicit(cols) => {
                if cols.len() != channels {
                    return Err(Error::Shape {
                        what: "explicit code channel list",
                        expected: channels,
                        found: cols.len(),
                    });
                }
                cols.clone()
            }
        };
        if channels == 0 || channels > nc {
            return Err(Error::TooManyChannels { channels, nc });
        }
        let mut seen = vec![false; nc];
        for &c in &columns {
            if c >= nc {
                return Err(Error::CodeIndex { index: c, nc });
            }
            if seen[c] {
                return Err(Error::DuplicateCode(c));
            }
            seen[c] = true;
        }
        Ok(Self {
            nc,
            kind: Kind::Hadamard { columns },
        })
    }

    /// `Nc x Nc` identity (OFDM mode).
    pub fn identity(nc: usize) -> Self {
        assert!(nc > 0);
        Self {
            nc,
            kind: Kind::Identity,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, Kind::Identity)
    }

    pub fn subcarriers(&self) -> usize {
        self.nc
    }

    /// Number of code channels `NC`.
    pub fn channels(&self) -> usize {
        match &self.kind {
            Kind::Hadamard { columns } => columns.len(),
            Kind::Identity => self.nc,
        }
    }

    /// Selected Hadamard column indices (`None` for the identity book).
    pub fn columns(&self) -> Option<&[usize]> {
        match &self.kind {
            Kind::Hadamard { columns } => Some(columns),
            Kind::Identity => None,
        }
    }

    /// Processing gain `Nc / NC`.
    pub fn cdm_gain(&self) -> f64 {
        self.nc as f64 / self.channels() as f64
    }

    /// Amplitude that gives every subcarrier power `power` after spreading
    /// unit-power symbols: `sqrt(power * Nc / NC)`.
    pub fn amplitude(&self, power: f64) -> f64 {
        libm::sqrt(power * self.nc as f64 / self.channels() as f64)
    }

    /// Entry `C(m, k)`.
    pub fn entry(&self, m: usize, k: usize) -> f64 {
        match &self.kind {
            Kind::Hadamard { columns } => {
                let sign = if (m & columns[k]).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                sign / libm::sqrt(self.nc as f64)
            }
            Kind::Identity => {
                if m == k {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Dense column-major copy of `C` (column `k` at `k*Nc .. (k+1)*Nc`).
    pub fn matrix(&self) -> Vec<f64> {
        let nch = self.channels();
        let mut out = Vec::with_capacity(self.nc * nch);
        for k in 0..nch {
            for m in 0..self.nc {
                out.push(self.entry(m, k));
            }
        }
        out
    }

    fn check(&self, what: &'static str, expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::Shape {
                what,
                expected,
                found,
            })
        }
    }

    // direct sums beat the fast transform when NC < log2(Nc)
    fn few_channels(&self) -> bool {
        self.channels() < self.nc.trailing_zeros() as usize
    }

    /// `out = C d`.
    pub fn spread_into(&self, d: &[C64], out: &mut [C64]) -> Result<()> {
        self.check("symbols to spread", self.channels(), d.len())?;
        self.check("spread output", self.nc, out.len())?;
        match &self.kind {
            Kind::Identity => out.copy_from_slice(d),
            Kind::Hadamard { columns } if self.few_channels() => {
                let scale = 1.0 / libm::sqrt(self.nc as f64);
                for (m, o) in out.iter_mut().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (&c, &v) in columns.iter().zip(d) {
                        if (m & c).count_ones() % 2 == 0 {
                            acc += v;
                        } else {
                            acc -= v;
                        }
                    }
                    *o = acc * scale;
                }
            }
            Kind::Hadamard { columns } => {
                out.fill(C64::new(0.0, 0.0));
                for (&c, &v) in columns.iter().zip(d) {
                    out[c] = v;
                }
                fwht(out);
                let scale = 1.0 / libm::sqrt(self.nc as f64);
                out.iter_mut().for_each(|v| *v *= scale);
            }
        }
        Ok(())
    }

    pub fn spread(&self, d: &[C64]) -> Result<Vec<C64>> {
        let mut out = vec![C64::new(0.0, 0.0); self.nc];
        self.spread_into(d, &mut out)?;
        Ok(out)
    }

    /// `out = Cᴴ y`. `scratch` must hold `Nc` values.
    pub fn despread_into(&self, y: &[C64], scratch: &mut [C64], out: &mut [C64]) -> Result<()> {
        self.check("signal to despread", self.nc, y.len())?;
        self.check("despread output", self.channels(), out.len())?;
        match &self.kind {
            Kind::Identity => out.copy_from_slice(y),
            Kind::Hadamard { columns } if self.few_channels() => {
                let scale = 1.0 / libm::sqrt(self.nc as f64);
                for (o, &c) in out.iter_mut().zip(columns) {
                    let mut acc = C64::new(0.0, 0.0);
                    for (m, &v) in y.iter().enumerate() {
                        if (m & c).count_ones() % 2 == 0 {
                            acc += v;
                        } else {
                            acc -= v;
                        }
                    }
                    *o = acc * scale;
                }
            }
            Kind::Hadamard { columns } => {
                self.check("despread scratch", self.nc, scratch.len())?;
                scratch.copy_from_slice(y);
                fwht(scratch);
                let scale = 1.0 / libm::sqrt(self.nc as f64);
                for (o, &c) in out.iter_mut().zip(columns) {
                    *o = scratch[c] * scale;
                }
            }
        }
        Ok(())
    }

    pub fn despread(&self, y: &[C64]) -> Result<Vec<C64>> {
        let mut scratch = vec![C64::new(0.0, 0.0); self.nc];
        let mut out = vec![C64::new(0.0, 0.0); self.channels()];
        self.despread_into(y, &mut scratch, &mut out)?;
        Ok(out)
    }
}

/// In-place unnormalized Walsh-Hadamard transform (Sylvester order).
pub fn fwht<T>(x: &mut [T])
where
    T: Copy + core::ops::Add<Output = T> + core::ops::Sub<Output = T>,
{
    let n = x.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for i in start..start + h {
                let a = x[i];
                let b = x[i + h];
                x[i] = a + b;
                x[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// How [`check_zero_free`] explores symbol vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroSearch {
    /// Every one of the `M^NC` symbol vectors.
    Exhaustive,
    /// Uniformly drawn symbol vectors.
    Randomized { trials: u64 },
}

/// Largest `M^NC` accepted by [`ZeroSearch::Exhaustive`].
pub const EXHAUSTIVE_BUDGET: u128 = 10_000_000;

/// A symbol vector whose spread image vanishes on one subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroWitness {
    pub subcarrier: usize,
    pub labels: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroFreeReport {
    pub vectors_checked: u64,
    pub witness: Option<ZeroWitness>,
    /// Smallest `|(C d)(m)|` seen, in the units of a unit-power constellation
    /// and orthonormal code book.
    pub min_abs_entry: f64,
}

impl ZeroFreeReport {
    pub fn zero_free(&self) -> bool {
        self.witness.is_none()
    }
}

/// Searches for symbol vectors `d` for which `C d` has a zero entry.
///
/// Runs in exact integer arithmetic: PAM levels are odd multiples of half the
/// level spacing and Hadamard entries are ±1 up to the common scale, so a
/// spread entry is zero iff its integer image is. With an odd number of code
/// channels every entry is a sum of an odd number of odd integers per axis,
/// hence never zero.
pub fn check_zero_free<R: Rng + ?Sized>(
    book: &CodeBook,
    constellation: &QamConstellation,
    search: ZeroSearch,
    rng: &mut R,
) -> Result<ZeroFreeReport> {
    let nc = book.subcarriers();
    let nch = book.channels();
    let m = constellation.order();
    // integer amplitude of level k: 2k - (side - 1)
    let side = constellation.side() as i64;
    let odd_level = |lvl: usize| 2 * lvl as i64 - (side - 1);
    let coords: Vec<(i64, i64)> = (0..m as u32)
        .map(|label| {
            let d = constellation
                .hard_decide(constellation.point(label))
                .expect("constellation points are finite");
            (odd_level(d.i_level), odd_level(d.q_level))
        })
        .collect();
    let unit = constellation.spacing() / 2.0 / libm::sqrt(nc as f64);

    let mut labels = vec![0u32; nch];
    let mut re = vec![0i64; nc];
    let mut im = vec![0i64; nc];
    let mut report = ZeroFreeReport {
        vectors_checked: 0,
        witness: None,
        min_abs_entry: f64::INFINITY,
    };

    let mut evaluate = |labels: &[u32], report: &mut ZeroFreeReport| {
        re.fill(0);
        im.fill(0);
        match book.columns() {
            Some(cols) => {
                for (&c, &l) in cols.iter().zip(labels) {
                    re[c] = coords[l as usize].0;
                    im[c] = coords[l as usize].1;
                }
                fwht(&mut re);
                fwht(&mut im);
            }
            None => {
                for (k, &l) in labels.iter().enumerate() {
                    re[k] = coords[l as usize].0;
                    im[k] = coords[l as usize].1;
                }
            }
        }
        report.vectors_checked += 1;
        let mut min_sq = i64::MAX;
        let mut zero_at = None;
        for (sub, (&a, &b)) in re.iter().zip(im.iter()).enumerate() {
            let sq = a * a + b * b;
            if sq < min_sq {
                min_sq = sq;
            }
            if sq == 0 && zero_at.is_none() {
                zero_at = Some(sub);
            }
        }
        let min_abs = libm::sqrt(min_sq as f64) * unit;
        if min_abs < report.min_abs_entry {
            report.min_abs_entry = min_abs;
        }
        if let (Some(sub), None) = (zero_at, &report.witness) {
            report.witness = Some(ZeroWitness {
                subcarrier: sub,
                labels: labels.to_vec(),
            });
        }
    };

    match search {
        ZeroSearch::Exhaustive => {
            let combinations = (m as u128).checked_pow(nch as u32).unwrap_or(u128::MAX);
            if combinations > EXHAUSTIVE_BUDGET {
                return Err(Error::Budget {
                    combinations,
                    budget: EXHAUSTIVE_BUDGET,
                });
            }
            // odometer over all label vectors
            loop {
                evaluate(&labels, &mut report);
                let mut pos = 0;
                loop {
                    if pos == nch {
                        return Ok(report);
                    }
                    labels[pos] += 1;
                    if labels[pos] < m as u32 {
                        break;
                    }
                    labels[pos] = 0;
                    pos += 1;
                }
            }
        }
        ZeroSearch::Randomized { trials } => {
            for _ in 0..trials {
                for l in labels.iter_mut() {
                    *l = rng.random_range(0..m as u32);
                }
                evaluate(&labels, &mut report);
            }
            Ok(report)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_symbols(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = QamConstellation::new(4).unwrap();
        (0..n)
            .map(|_| c.point(rand::Rng::random_range(&mut rng, 0..4)))
            .collect()
    }

    fn gram_error(book: &CodeBook) -> f64 {
        let nc = book.subcarriers();
        let nch = book.channels();
        let c = book.matrix();
        let mut worst: f64 = 0.0;
        for k in 0..nch {
            for l in 0..nch {
                let dot: f64 = (0..nc).map(|m| c[k * nc + m] * c[l * nc + m]).sum();
                let target = if k == l { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    #[test]
    fn order_two_columns() {
        let b = CodeBook::hadamard(2, 2, &Selection::FIRST).unwrap();
        let s = core::f64::consts::FRAC_1_SQRT_2;
        for (x, y) in b.matrix().iter().zip([s, s, s, -s]) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            CodeBook::hadamard(12, 3, &Selection::FIRST),
            Err(Error::NotPowerOfTwo { .. })
        ));
        assert!(matches!(
            CodeBook::hadamard(8, 2, &Selection::Explicit(vec![3, 3])),
            Err(Error::DuplicateCode(3))
        ));
        assert!(matches!(
            CodeBook::hadamard(8, 1, &Selection::Explicit(vec![8])),
            Err(Error::CodeIndex { index: 8, nc: 8 })
        ));
        assert!(matches!(
            CodeBook::hadamard(8, 9, &Selection::FIRST),
            Err(Error::TooManyChannels { .. })
        ));
        assert!(matches!(
            CodeBook::hadamard(8, 3, &Selection::Contiguous { offset: 6 }),
            Err(Error::CodeIndex { .. })
        ));
    }

    #[test]
    fn gram_is_identity() {
        let b = CodeBook::hadamard(8, 8, &Selection::FIRST).unwrap();
        assert!(gram_error(&b) < 1e-12);
        let b = CodeBook::hadamard(1024, 255, &Selection::FIRST).unwrap();
        assert!(gram_error(&b) < 1e-12);
        let b = CodeBook::hadamard(64, 5, &Selection::Explicit(vec![63, 1, 17, 40, 2])).unwrap();
        assert!(gram_error(&b) < 1e-12);
    }

    #[test]
    fn entries_have_constant_magnitude() {
        let b = CodeBook::hadamard(32, 7, &Selection::Contiguous { offset: 3 }).unwrap();
        assert!(b
            .matrix()
            .iter()
            .all(|v| (v.abs() - 1.0 / 32f64.sqrt()).abs() < 1e-15));
    }

    #[test]
    fn spread_matches_triple_sum() {
        let b = CodeBook::hadamard(8, 3, &Selection::FIRST).unwrap();
        let d = random_symbols(3, 1);
        let fast = b.spread(&d).unwrap();
        // naive Sylvester recursion, independent of the popcount formula
        let mut h = vec![vec![1.0f64]];
        while h.len() < 8 {
            let n = h.len();
            let mut next = vec![vec![0.0; 2 * n]; 2 * n];
            for i in 0..n {
                for j in 0..n {
                    next[i][j] = h[i][j];
                    next[i][j + n] = h[i][j];
                    next[i + n][j] = h[i][j];
                    next[i + n][j + n] = -h[i][j];
                }
            }
            h = next;
        }
        for m in 0..8 {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..3 {
                acc += d[k] * h[m][k] / 8f64.sqrt();
            }
            assert!((acc - fast[m]).norm() < 1e-12);
        }
    }

    #[test]
    fn direct_and_fast_paths_agree() {
        let cols = vec![5, 77, 300];
        let small = CodeBook::hadamard(1024, 3, &Selection::Explicit(cols.clone())).unwrap();
        assert!(small.few_channels());
        let d = random_symbols(3, 17);
        let direct = small.spread(&d).unwrap();
        // same columns padded with more channels carrying zeros uses the FWHT
        let mut wide_cols = cols.clone();
        wide_cols.extend(600..620);
        let wide =
            CodeBook::hadamard(1024, wide_cols.len(), &Selection::Explicit(wide_cols)).unwrap();
        assert!(!wide.few_channels());
        let mut dw = d.clone();
        dw.resize(wide.channels(), C64::new(0.0, 0.0));
        let fast = wide.spread(&dw).unwrap();
        for (a, b) in direct.iter().zip(&fast) {
            assert!((a - b).norm() < 1e-12);
        }
        let back_direct = small.despread(&fast).unwrap();
        let back_fast = wide.despread(&fast).unwrap();
        for k in 0..3 {
            assert!((back_direct[k] - back_fast[k]).norm() < 1e-12);
            assert!((back_direct[k] - d[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_and_identity_cases() {
        let b = CodeBook::hadamard(16, 5, &Selection::FIRST).unwrap();
        let zeros = vec![C64::new(0.0, 0.0); 5];
        assert!(b.spread(&zeros).unwrap().iter().all(|v| v.norm() == 0.0));
        let id = CodeBook::identity(16);
        let d = random_symbols(16, 2);
        assert_eq!(id.spread(&d).unwrap(), d);
        assert_eq!(id.despread(&d).unwrap(), d);
        assert_eq!(id.channels(), 16);
        assert_eq!(id.amplitude(2.0), 2f64.sqrt());
    }

    #[test]
    fn despread_inverts_spread() {
        let b = CodeBook::hadamard(1024, 511, &Selection::FIRST).unwrap();
        let d = random_symbols(511, 3);
        let back = b.despread(&b.spread(&d).unwrap()).unwrap();
        let err = d
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn despread_single_column() {
        let b = CodeBook::hadamard(16, 4, &Selection::Explicit(vec![9, 2, 5, 12])).unwrap();
        let col: Vec<C64> = (0..16)
            .map(|m| C64::new(3.0 * b.entry(m, 2), 0.0))
            .collect();
        let out = b.despread(&col).unwrap();
        for (k, v) in out.iter().enumerate() {
            let want = if k == 2 { 3.0 } else { 0.0 };
            assert!((v - C64::new(want, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn dimension_errors() {
        let b = CodeBook::hadamard(8, 3, &Selection::FIRST).unwrap();
        assert!(b.spread(&random_symbols(4, 0)).is_err());
        assert!(b.despread(&random_symbols(4, 0)).is_err());
    }

    #[test]
    fn cdm_gains() {
        let gain_db = |nch| {
            let b = CodeBook::hadamard(1024, nch, &Selection::FIRST).unwrap();
            10.0 * b.cdm_gain().log10()
        };
        assert!((gain_db(1) - 30.10).abs() < 0.005);
        assert!((gain_db(255) - 6.04).abs() < 0.01);
        assert!((gain_db(511) - 3.02).abs() < 0.005);
    }

    #[test]
    fn theorem_small_exhaustive() {
        let qpsk = QamConstellation::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for nch in 1..=8 {
            let b = CodeBook::hadamard(8, nch, &Selection::FIRST).unwrap();
            let r = check_zero_free(&b, &qpsk, ZeroSearch::Exhaustive, &mut rng).unwrap();
            assert_eq!(r.vectors_checked, 4u64.pow(nch as u32));
            assert_eq!(r.zero_free(), nch % 2 == 1, "NC={nch}");
            if let Some(w) = &r.witness {
                // confirm with the floating-point spreader
                let d: Vec<C64> = w.labels.iter().map(|&l| qpsk.point(l)).collect();
                assert!(b.spread(&d).unwrap()[w.subcarrier].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn theorem_brute_force_oracle() {
        // float-domain enumeration for Nc=8, NC=3
        let qpsk = QamConstellation::new(4).unwrap();
        let b = CodeBook::hadamard(8, 3, &Selection::FIRST).unwrap();
        let pts = qpsk.points();
        let mut min_abs = f64::INFINITY;
        for a in &pts {
            for c in &pts {
                for e in &pts {
                    let s = b.spread(&[*a, *c, *e]).unwrap();
                    min_abs = s.iter().map(|v| v.norm()).fold(min_abs, f64::min);
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = check_zero_free(&b, &qpsk, ZeroSearch::Exhaustive, &mut rng).unwrap();
        assert!(r.zero_free());
        assert!((r.min_abs_entry - min_abs).abs() < 1e-12);
    }

    #[test]
    fn budget_enforced() {
        let qam = QamConstellation::new(16).unwrap();
        let b = CodeBook::hadamard(64, 7, &Selection::FIRST).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            check_zero_free(&b, &qam, ZeroSearch::Exhaustive, &mut rng),
            Err(Error::Budget { .. })
        ));
    }

    #[test]
    fn identity_book_is_zero_free() {
        let qam = QamConstellation::new(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = check_zero_free(
            &CodeBook::identity(32),
            &qam,
            ZeroSearch::Randomized { trials: 100 },
            &mut rng,
        )
        .unwrap();
        assert!(r.zero_free());
        // smallest QAM point magnitude: unit * sqrt(2)
        let smallest = qam.spacing() / 2.0 * 2f64.sqrt();
        // identity book has no 1/sqrt(Nc) scale; report is in scaled units
        assert!((r.min_abs_entry * 32f64.sqrt() - smallest).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn spread_is_linear(
            seed in 0u64..1000,
            alpha in -3.0f64..3.0,
            beta in -3.0f64..3.0,
        ) {
            let b = CodeBook::hadamard(64, 9, &Selection::Contiguous { offset: 20 }).unwrap();
            let d1 = random_symbols(9, seed);
            let d2 = random_symbols(9, seed + 1);
            let mix: Vec<C64> = d1.iter().zip(&d2).map(|(x, y)| x * alpha + y * beta).collect();
            let lhs = b.spread(&mix).unwrap();
            let s1 = b.spread(&d1).unwrap();
            let s2 = b.spread(&d2).unwrap();
            for m in 0..64 {
                prop_assert!((lhs[m] - (s1[m] * alpha + s2[m] * beta)).norm() < 1e-12);
            }
        }

        #[test]
        fn round_trip_any_selection(seed in 0u64..1000, nch in 1usize..=32) {
            let b = CodeBook::hadamard(32, nch, &Selection::FIRST).unwrap();
            let d = random_symbols(nch, seed);
            let back = b.despread(&b.spread(&d).unwrap()).unwrap();
            for (x, y) in d.iter().zip(&back) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }
    }
}
