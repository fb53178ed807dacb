//! Orthonormal periodic discrete wavelet transform.
//!
//! Coefficients live in a single flat buffer of length `n = 2^J`:
//! the `2^J0` scaling coefficients first, then the detail block of each
//! level `j = J0..J-1`, which occupies `[2^j, 2^(j+1))`. This ordering is
//! also the serialization order.

use std::io::{Read, Write};
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Daubechies extremal-phase families, indexed by vanishing moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wavelet {
    Haar,
    Daub2,
    Daub4,
    Daub10,
}

impl Wavelet {
    pub const ALL: [Wavelet; 4] = [Wavelet::Haar, Wavelet::Daub2, Wavelet::Daub4, Wavelet::Daub10];

    pub fn name(self) -> &'static str {
        match self {
            Wavelet::Haar => "haar",
            Wavelet::Daub2 => "daub2",
            Wavelet::Daub4 => "daub4",
            Wavelet::Daub10 => "daub10",
        }
    }

    fn taps(self) -> &'static [f64] {
        match self {
            Wavelet::Haar => &HAAR,
            Wavelet::Daub2 => &DAUB2,
            Wavelet::Daub4 => &DAUB4,
            Wavelet::Daub10 => &DAUB10,
        }
    }

    pub fn filter(self) -> WaveletFilter {
        WaveletFilter::new(self)
    }
}

impl FromStr for Wavelet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Wavelet::ALL
            .into_iter()
            .find(|w| w.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownName {
                kind: "filter",
                name: s.to_string(),
                valid: "haar, daub2, daub4, daub10".to_string(),
            })
    }
}

impl std::fmt::Display for Wavelet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

const HAAR: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

const DAUB2: [f64; 4] = [
    0.48296291314453416,
    0.8365163037378079,
    0.2241438680420134,
    -0.12940952255126037,
];

const DAUB4: [f64; 8] = [
    0.2303778133088965,
    0.7148465705529157,
    0.6308807679298589,
    -0.027983769416859854,
    -0.18703481171909309,
    0.030841381835560764,
    0.0328830116668852,
    -0.010597401785069032,
];

const DAUB10: [f64; 20] = [
    0.026670057900555554,
    0.1881768000776915,
    0.5272011889317256,
    0.6884590394536035,
    0.2811723436605775,
    -0.24984642432731538,
    -0.19594627437737705,
    0.12736934033579325,
    0.09305736460357235,
    -0.07139414716639708,
    -0.029457536821875813,
    0.033212674059341,
    0.0036065535669561697,
    -0.010733175483330575,
    0.001395351747052901,
    0.001992405295185056,
    -0.0006858566949597116,
    -0.00011646685512928545,
    9.358867032006959e-05,
    -1.3264202894521244e-05,
];

/// Quadrature mirror filter pair for one wavelet family.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilter {
    wavelet: Wavelet,
    low: Vec<f64>,
    high: Vec<f64>,
}

impl WaveletFilter {
    pub fn new(wavelet: Wavelet) -> Self {
        let low = wavelet.taps().to_vec();
        let len = low.len();
        // g_l = (-1)^l h_{L-1-l}
        let high = (0..len)
            .map(|l| {
                let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
                sign * low[len - 1 - l]
            })
            .collect();
        Self { wavelet, low, high }
    }

    pub fn wavelet(&self) -> Wavelet {
        self.wavelet
    }

    /// Scaling (low-pass) taps.
    pub fn low_pass(&self) -> &[f64] {
        &self.low
    }

    /// Wavelet (high-pass) taps.
    pub fn high_pass(&self) -> &[f64] {
        &self.high
    }
}

/// Returns `J` such that `n == 2^J`.
pub fn dyadic_exponent(n: usize) -> Result<usize> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotDyadic { len: n });
    }
    Ok(n.trailing_zeros() as usize)
}

/// Scaling coefficients at the primary level followed by detail blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    coeffs: Vec<f64>,
    primary_level: usize,
    levels: usize,
}

impl Decomposition {
    pub fn new(coeffs: Vec<f64>, primary_level: usize) -> Result<Self> {
        let levels = dyadic_exponent(coeffs.len())?;
        if primary_level >= levels {
            return Err(Error::PrimaryLevel {
                primary: primary_level,
                levels,
            });
        }
        Ok(Self {
            coeffs,
            primary_level,
            levels,
        })
    }

    pub fn zeros(n: usize, primary_level: usize) -> Result<Self> {
        Self::new(vec![0.0; n], primary_level)
    }

    /// A decomposition with the same layout as `self` holding `coeffs`.
    pub fn with_coeffs(&self, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != self.coeffs.len() {
            return Err(Error::Shape {
                expected: self.coeffs.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            coeffs,
            primary_level: self.primary_level,
            levels: self.levels,
        })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Number of resolution levels `J`.
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn primary_level(&self) -> usize {
        self.primary_level
    }

    pub fn detail_levels(&self) -> Range<usize> {
        self.primary_level..self.levels
    }

    pub fn coarse_len(&self) -> usize {
        1 << self.primary_level
    }

    pub fn coarse(&self) -> &[f64] {
        &self.coeffs[..self.coarse_len()]
    }

    pub fn coarse_mut(&mut self) -> &mut [f64] {
        let c = self.coarse_len();
        &mut self.coeffs[..c]
    }

    /// Index range of level `j` inside the flat buffer.
    pub fn level_range(&self, level: usize) -> Result<Range<usize>> {
        if !self.detail_levels().contains(&level) {
            return Err(Error::LevelRange {
                level,
                lo: self.primary_level,
                hi: self.levels.saturating_sub(1),
            });
        }
        Ok((1 << level)..(2 << level))
    }

    pub fn detail(&self, level: usize) -> Result<&[f64]> {
        let r = self.level_range(level)?;
        Ok(&self.coeffs[r])
    }

    pub fn detail_mut(&mut self, level: usize) -> Result<&mut [f64]> {
        let r = self.level_range(level)?;
        Ok(&mut self.coeffs[r])
    }

    /// All detail coefficients, level by level.
    pub fn details(&self) -> &[f64] {
        &self.coeffs[self.coarse_len()..]
    }

    pub fn details_mut(&mut self) -> &mut [f64] {
        let c = self.coarse_len();
        &mut self.coeffs[c..]
    }

    /// Detail level of a flat index, `None` for scaling coefficients.
    pub fn level_of(&self, index: usize) -> Option<usize> {
        if index < self.coarse_len() || index >= self.coeffs.len() {
            None
        } else {
            Some(usize::BITS as usize - 1 - index.leading_zeros() as usize)
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn same_shape(&self, other: &Decomposition) -> bool {
        self.coeffs.len() == other.coeffs.len() && self.primary_level == other.primary_level
    }

    fn check_shape(&self, other: &Decomposition) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Shape {
                expected: self.coeffs.len(),
                got: other.coeffs.len(),
            })
        }
    }

    /// Coefficientwise `self - other`.
    pub fn difference(&self, other: &Decomposition) -> Result<Decomposition> {
        self.check_shape(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        self.with_coeffs(coeffs)
    }

    /// Squared Euclidean norm of all coefficients.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Writes `kind,level,index,value` rows in flat order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["kind", "level", "index", "value"])?;
        for (i, v) in self.coeffs.iter().enumerate() {
            let (kind, level, index) = match self.level_of(i) {
                None => ("coarse", self.primary_level, i),
                Some(j) => ("detail", j, i - (1 << j)),
            };
            w.write_record([kind.to_string(), level.to_string(), index.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Decomposition> {
        let mut r = csv::Reader::from_reader(reader);
        let mut coarse = Vec::new();
        let mut details: Vec<(usize, usize, f64)> = Vec::new();
        let mut primary = None;
        for record in r.records() {
            let record = record?;
            if record.len() != 4 {
                return Err(Error::Input(format!("expected 4 columns, got {}", record.len())));
            }
            let level: usize = parse_field(&record[1])?;
            let index: usize = parse_field(&record[2])?;
            let value: f64 = parse_field(&record[3])?;
            match &record[0] {
                "coarse" => {
                    if *primary.get_or_insert(level) != level || index != coarse.len() {
                        return Err(Error::Input("inconsistent coarse block".into()));
                    }
                    coarse.push(value);
                }
                "detail" => details.push((level, index, value)),
                other => return Err(Error::Input(format!("unknown coefficient kind '{other}'"))),
            }
        }
        let primary = primary.ok_or_else(|| Error::Input("no coarse coefficients".into()))?;
        if coarse.len() != 1 << primary {
            return Err(Error::Shape {
                expected: 1 << primary,
                got: coarse.len(),
            });
        }
        let n = coarse.len() + details.len();
        let mut out = Decomposition::zeros(n, primary)?;
        out.coarse_mut().copy_from_slice(&coarse);
        let mut seen = vec![false; n];
        for (level, index, value) in details {
            let range = out.level_range(level)?;
            let pos = range.start + index;
            if pos >= range.end || seen[pos] {
                return Err(Error::Input(format!("bad detail index {index} at level {level}")));
            }
            seen[pos] = true;
            out.coeffs[pos] = value;
        }
        if seen[out.coarse_len()..].iter().any(|s| !s) {
            return Err(Error::Input("missing detail coefficients".into()));
        }
        Ok(out)
    }
}

fn parse_field<T: FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Input(format!("cannot parse field '{s}'")))
}

/// Forward transform by the periodized pyramid algorithm.
pub fn forward(signal: &[f64], filter: &WaveletFilter, primary_level: usize) -> Result<Decomposition> {
    let levels = dyadic_exponent(signal.len())?;
    if primary_level >= levels {
        return Err(Error::PrimaryLevel {
            primary: primary_level,
            levels,
        });
    }
    let n = signal.len();
    let mut out = vec![0.0; n];
    let mut approx = signal.to_vec();
    let mut scratch = vec![0.0; n / 2];
    let mut len = n;
    let stop = 1usize << primary_level;
    while len > stop {
        let half = len / 2;
        for k in 0..half {
            let mut a = 0.0;
            let mut d = 0.0;
            for (l, (h, g)) in filter.low.iter().zip(&filter.high).enumerate() {
                let x = approx[(2 * k + l) % len];
                a += h * x;
                d += g * x;
            }
            scratch[k] = a;
            out[half + k] = d;
        }
        approx[..half].copy_from_slice(&scratch[..half]);
        len = half;
    }
    out[..len].copy_from_slice(&approx[..len]);
    Decomposition::new(out, primary_level)
}

/// Inverse transform.
pub fn inverse(decomp: &Decomposition, filter: &WaveletFilter) -> Vec<f64> {
    let mut out = vec![0.0; decomp.len()];
    let mut scratch = vec![0.0; decomp.len()];
    inverse_into(
        decomp.as_slice(),
        decomp.primary_level(),
        filter,
        &mut out,
        &mut scratch,
    );
    out
}

/// Allocation-free inverse of a flat coefficient buffer. `out` and
/// `scratch` must have the same length as `coeffs`.
pub(crate) fn inverse_into(
    coeffs: &[f64],
    primary_level: usize,
    filter: &WaveletFilter,
    out: &mut [f64],
    scratch: &mut [f64],
) {
    let n = coeffs.len();
    debug_assert_eq!(out.len(), n);
    debug_assert_eq!(scratch.len(), n);
    let mut len = 1usize << primary_level;
    out[..len].copy_from_slice(&coeffs[..len]);
    while len < n {
        let full = 2 * len;
        let next = &mut scratch[..full];
        next.fill(0.0);
        let details = &coeffs[len..full];
        for k in 0..len {
            let a = out[k];
            let d = details[k];
            for (l, (h, g)) in filter.low.iter().zip(&filter.high).enumerate() {
                next[(2 * k + l) % full] += h * a + g * d;
            }
        }
        out[..full].copy_from_slice(next);
        len = full;
    }
}

/// Time-domain residuals `W^T (d - theta)`.
pub fn residual_time_domain(d: &Decomposition, theta: &Decomposition, filter: &WaveletFilter) -> Result<Vec<f64>> {
    Ok(inverse(&d.difference(theta)?, filter))
}
