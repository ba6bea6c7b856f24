//! Fingerprint/activity datasets.
//!
//! On disk a dataset is a CSV file with header `id,activity,fp`. The `fp`
//! column is a 32-character hex string holding the 128 fingerprint bits,
//! most significant first; a 128-character string of `0`/`1` is also
//! accepted on input. Lines starting with `#` are comments, except that
//! `# name: ...` and `# target_id: ...` set dataset metadata.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Fingerprint length in bits.
pub const N_BITS: usize = 128;

/// Smallest dataset accepted; below this no split has usable train and test sides.
pub const MIN_DATASET_SIZE: usize = 10;

/// A 128-bit molecular fingerprint. Bit `j` is feature `j`; feature 0 is
/// the most significant bit of the hex encoding.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Fingerprint(u128);

impl Fingerprint {
    pub const fn from_u128(raw: u128) -> Self {
        Fingerprint(raw)
    }

    pub const fn as_u128(self) -> u128 {
        self.0
    }

    /// Builds a fingerprint from 128 values that must each be 0 or 1.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.len() != N_BITS {
            return Err(Error::domain(format!(
                "fingerprint has {} bits, expected {N_BITS}",
                bits.len()
            )));
        }
        let mut raw = 0u128;
        for (j, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => raw |= 1u128 << (N_BITS - 1 - j),
                other => {
                    return Err(Error::domain(format!(
                        "fingerprint bit {j} is {other}, expected 0 or 1"
                    )))
                }
            }
        }
        Ok(Fingerprint(raw))
    }

    #[inline]
    pub fn bit(self, j: usize) -> bool {
        debug_assert!(j < N_BITS);
        (self.0 >> (N_BITS - 1 - j)) & 1 == 1
    }

    #[inline]
    pub fn count_ones(self) -> u32 {
        self.0.count_ones()
    }

    /// Number of bits set in both fingerprints, i.e. the dot product of the
    /// two 0/1 vectors.
    #[inline]
    pub fn dot(self, other: Fingerprint) -> f64 {
        (self.0 & other.0).count_ones() as f64
    }

    pub fn to_dense(self) -> [f64; N_BITS] {
        let mut out = [0.0; N_BITS];
        for (j, v) in out.iter_mut().enumerate() {
            if self.bit(j) {
                *v = 1.0;
            }
        }
        out
    }

    pub fn with_bit(self, j: usize, value: bool) -> Self {
        let mask = 1u128 << (N_BITS - 1 - j);
        if value {
            Fingerprint(self.0 | mask)
        } else {
            Fingerprint(self.0 & !mask)
        }
    }

    pub fn to_hex(self) -> String {
        format!("{:032x}", self.0)
    }

    /// Parses either the 32-digit hex form or a 128-character 0/1 string.
    pub fn parse(field: &str) -> std::result::Result<Self, String> {
        let field = field.trim();
        if field.len() == 32 && field.chars().all(|c| c.is_ascii_hexdigit()) {
            return u128::from_str_radix(field, 16)
                .map(Fingerprint)
                .map_err(|e| e.to_string());
        }
        if field.len() == N_BITS {
            if let Some(pos) = field.find(|c| c != '0' && c != '1') {
                let bad = field[pos..].chars().next().unwrap_or('?');
                return Err(format!("non-binary bit {bad:?} at position {pos}"));
            }
            return u128::from_str_radix(field, 2)
                .map(Fingerprint)
                .map_err(|e| e.to_string());
        }
        if field.chars().all(|c| c == '0' || c == '1') {
            return Err(format!(
                "fingerprint has {} bits, expected {N_BITS}",
                field.len()
            ));
        }
        Err(format!(
            "fingerprint must be 32 hex digits or {N_BITS} binary digits, got {:?}",
            field
        ))
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({})", self.to_hex())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    pub id: String,
    pub fingerprint: Fingerprint,
    pub activity: f64,
}

/// Options for reading dataset files.
#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    /// Merge rows that share an id, averaging their activities.
    pub dedup_average: bool,
    /// Overrides the dataset name (otherwise `# name:` or the file stem).
    pub name: Option<String>,
}

/// An immutable collection of molecules sorted by (activity, id).
///
/// Index `i` is the activity rank of the molecule, so index-based cuts are
/// activity thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    target_id: String,
    molecules: Vec<Molecule>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        target_id: impl Into<String>,
        mut molecules: Vec<Molecule>,
    ) -> Result<Self> {
        if molecules.len() < MIN_DATASET_SIZE {
            return Err(Error::Size {
                found: molecules.len(),
                required: MIN_DATASET_SIZE,
            });
        }
        let mut seen = HashMap::with_capacity(molecules.len());
        for m in &molecules {
            if m.id.is_empty() {
                return Err(Error::Validation("empty molecule id".into()));
            }
            if !m.activity.is_finite() {
                return Err(Error::Validation(format!(
                    "molecule {} has non-finite activity {}",
                    m.id, m.activity
                )));
            }
            if seen.insert(m.id.as_str(), ()).is_some() {
                return Err(Error::Validation(format!("duplicate molecule id {}", m.id)));
            }
        }
        molecules.sort_by(|a, b| {
            a.activity
                .total_cmp(&b.activity)
                .then_with(|| a.id.cmp(&b.id))
        });
        Ok(Dataset {
            name: name.into(),
            target_id: target_id.into(),
            molecules,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn target_id(&self) -> &str {
        &self.target_id
    }

    pub fn len(&self) -> usize {
        self.molecules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.molecules.is_empty()
    }

    pub fn molecules(&self) -> &[Molecule] {
        &self.molecules
    }

    pub fn activities(&self) -> Vec<f64> {
        self.molecules.iter().map(|m| m.activity).collect()
    }

    pub fn fingerprints(&self) -> Vec<Fingerprint> {
        self.molecules.iter().map(|m| m.fingerprint).collect()
    }

    /// Gathers fingerprints and activities for `indices` (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> (Vec<Fingerprint>, Vec<f64>) {
        indices
            .iter()
            .map(|&i| (self.molecules[i].fingerprint, self.molecules[i].activity))
            .unzip()
    }

    /// Activity of the molecule at sorted index `⌊N·fraction⌋`, clamped to
    /// the last index.
    pub fn empirical_quantile(&self, fraction: f64) -> Result<f64> {
        empirical_quantile(self, fraction)
    }

    /// Serializes to the CSV format read by [`parse_dataset`].
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.len() + 3));
        out.push_str(&format!("# name: {}\n", self.name));
        if !self.target_id.is_empty() {
            out.push_str(&format!("# target_id: {}\n", self.target_id));
        }
        out.push_str("id,activity,fp\n");
        for m in &self.molecules {
            out.push_str(&format!(
                "{},{},{}\n",
                m.id,
                m.activity,
                m.fingerprint.to_hex()
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn summary(&self) -> DatasetSummary {
        let acts = self.activities();
        let n = acts.len();
        let median = if n % 2 == 1 {
            acts[n / 2]
        } else {
            0.5 * (acts[n / 2 - 1] + acts[n / 2])
        };
        let mut column_counts = [0usize; N_BITS];
        let mut total_ones = 0usize;
        for m in &self.molecules {
            total_ones += m.fingerprint.count_ones() as usize;
            for (j, c) in column_counts.iter_mut().enumerate() {
                if m.fingerprint.bit(j) {
                    *c += 1;
                }
            }
        }
        let distinct: std::collections::HashSet<_> =
            self.molecules.iter().map(|m| m.fingerprint).collect();
        DatasetSummary {
            name: self.name.clone(),
            target_id: self.target_id.clone(),
            n,
            activity_min: acts[0],
            activity_median: median,
            activity_max: acts[n - 1],
            bit_density: total_ones as f64 / (n * N_BITS) as f64,
            constant_columns: column_counts.iter().filter(|&&c| c == 0 || c == n).count(),
            distinct_fingerprints: distinct.len(),
        }
    }
}

/// Summary statistics reported by `validate-data`.
#[derive(Debug, Clone, Serialize)]
pub struct DatasetSummary {
    pub name: String,
    pub target_id: String,
    pub n: usize,
    pub activity_min: f64,
    pub activity_median: f64,
    pub activity_max: f64,
    /// Fraction of all fingerprint bits that are set.
    pub bit_density: f64,
    /// Columns that are all-zero or all-one.
    pub constant_columns: usize,
    pub distinct_fingerprints: usize,
}

pub fn empirical_quantile(dataset: &Dataset, fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::domain(format!(
            "quantile fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n = dataset.len();
    let idx = ((n as f64 * fraction).floor() as usize).min(n - 1);
    Ok(dataset.molecules[idx].activity)
}

pub fn parse_dataset(path: impl AsRef<Path>, options: &IngestOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_dataset_str(&text, &path.display().to_string(), &stem, options)
}

/// Parses dataset text. `source` is used in error messages; `default_name`
/// applies when neither the options nor the file name the dataset.
pub fn parse_dataset_str(
    text: &str,
    source: &str,
    default_name: &str,
    options: &IngestOptions,
) -> Result<Dataset> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };

    let mut name: Option<String> = None;
    let mut target_id = String::new();
    let mut header_seen = false;
    let mut rows: Vec<(usize, Molecule)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("name:") {
                name = Some(v.trim().to_string());
            } else if let Some(v) = comment.strip_prefix("target_id:") {
                target_id = v.trim().to_string();
            }
            continue;
        }
        if !header_seen {
            let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if cols != ["id", "activity", "fp"] {
                return Err(parse_err(
                    lineno,
                    format!("expected header `id,activity,fp`, found `{trimmed}`"),
                ));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(parse_err(
                lineno,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let id = fields[0];
        if id.is_empty() {
            return Err(parse_err(lineno, "empty id".into()));
        }
        let activity: f64 = fields[1]
            .parse()
            .map_err(|_| parse_err(lineno, format!("unparseable activity {:?}", fields[1])))?;
        if !activity.is_finite() {
            return Err(parse_err(
                lineno,
                format!("non-finite activity {}", fields[1]),
            ));
        }
        let fingerprint = Fingerprint::parse(fields[2]).map_err(|msg| parse_err(lineno, msg))?;
        rows.push((
            lineno,
            Molecule {
                id: id.to_string(),
                fingerprint,
                activity,
            },
        ));
    }
    if !header_seen {
        return Err(parse_err(0, "missing header `id,activity,fp`".into()));
    }

    let molecules = merge_duplicates(rows, options.dedup_average)?;
    let name = options
        .name
        .clone()
        .or(name)
        .unwrap_or_else(|| default_name.to_string());
    Dataset::new(name, target_id, molecules)
}

fn merge_duplicates(rows: Vec<(usize, Molecule)>, average: bool) -> Result<Vec<Molecule>> {
    // id -> (position in `merged`, activity sum, count)
    let mut index: HashMap<String, (usize, f64, usize)> = HashMap::new();
    let mut merged: Vec<Molecule> = Vec::with_capacity(rows.len());
    for (lineno, m) in rows {
        match index.get_mut(&m.id) {
            None => {
                index.insert(m.id.clone(), (merged.len(), m.activity, 1));
                merged.push(m);
            }
            Some(entry) => {
                if !average {
                    return Err(Error::Validation(format!(
                        "duplicate id {} at line {lineno}",
                        m.id
                    )));
                }
                if merged[entry.0].fingerprint != m.fingerprint {
                    return Err(Error::Validation(format!(
                        "id {} at line {lineno} repeats with a different fingerprint",
                        m.id
                    )));
                }
                entry.1 += m.activity;
                entry.2 += 1;
            }
        }
    }
    for (pos, sum, count) in index.into_values() {
        if count > 1 {
            merged[pos].activity = sum / count as f64;
        }
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp(seed: u128) -> String {
        Fingerprint::from_u128(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15_F39C_C060_5CED_C835))
            .to_hex()
    }

    fn csv(rows: &[(&str, f64)]) -> String {
        let mut s = String::from("id,activity,fp\n");
        for (k, (id, a)) in rows.iter().enumerate() {
            s.push_str(&format!("{id},{a},{}\n", fp(k as u128 + 1)));
        }
        s
    }

    fn ten() -> Vec<(String, f64)> {
        (1..=10).map(|i| (format!("m{i:02}"), i as f64)).collect()
    }

    fn ten_csv() -> String {
        let rows = ten();
        let refs: Vec<(&str, f64)> = rows.iter().map(|(a, b)| (a.as_str(), *b)).collect();
        csv(&refs)
    }

    #[test]
    fn parses_and_sorts() {
        let mut rows = ten();
        rows.reverse();
        let refs: Vec<(&str, f64)> = rows.iter().map(|(a, b)| (a.as_str(), *b)).collect();
        let d = parse_dataset_str(&csv(&refs), "t.csv", "t", &IngestOptions::default()).unwrap();
        assert_eq!(d.len(), 10);
        assert_eq!(d.name(), "t");
        let acts = d.activities();
        assert!(acts.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn ties_sorted_by_id() {
        let mut text = String::from("id,activity,fp\n");
        for (k, id) in ["e", "b", "d", "a", "c", "j", "h", "i", "f", "g"]
            .iter()
            .enumerate()
        {
            text.push_str(&format!("{id},5.0,{}\n", fp(k as u128)));
        }
        let d = parse_dataset_str(&text, "t", "t", &IngestOptions::default()).unwrap();
        let ids: Vec<&str> = d.molecules().iter().map(|m| m.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"]);
    }

    #[test]
    fn dedup_averages_activity() {
        let mut text = ten_csv();
        let dup_fp = text
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(2)
            .unwrap()
            .to_string();
        text = text.replacen("m01,1,", "m01,5,", 1);
        text.push_str(&format!("m01,7.0,{dup_fp}\n"));
        let opts = IngestOptions {
            dedup_average: true,
            ..Default::default()
        };
        let d = parse_dataset_str(&text, "t", "t", &opts).unwrap();
        assert_eq!(d.len(), 10);
        let m = d.molecules().iter().find(|m| m.id == "m01").unwrap();
        assert_eq!(m.activity, 6.0);

        let err = parse_dataset_str(&text, "t", "t", &IngestOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn short_fingerprint_names_line() {
        let mut text = ten_csv();
        text.push_str(&format!("bad,1.0,{}\n", "1".repeat(127)));
        match parse_dataset_str(&text, "x.csv", "x", &IngestOptions::default()) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 12);
                assert!(message.contains("127 bits"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_binary_bit_rejected() {
        let mut text = ten_csv();
        let mut bits = "0".repeat(127);
        bits.push('2');
        text.push_str(&format!("bad,1.0,{bits}\n"));
        let err = parse_dataset_str(&text, "x", "x", &IngestOptions::default()).unwrap_err();
        assert!(err.to_string().contains("non-binary"), "{err}");
    }

    #[test]
    fn bad_activity_rejected() {
        let mut text = ten_csv();
        text.push_str(&format!("bad,abc,{}\n", fp(99)));
        let err = parse_dataset_str(&text, "x", "x", &IngestOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 12, .. }), "{err}");
        let mut text = ten_csv();
        text.push_str(&format!("bad,NaN,{}\n", fp(99)));
        assert!(parse_dataset_str(&text, "x", "x", &IngestOptions::default()).is_err());
    }

    #[test]
    fn too_small_rejected() {
        let text = csv(&[("a", 1.0), ("b", 2.0)]);
        let err = parse_dataset_str(&text, "x", "x", &IngestOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Size { found: 2, .. }));
    }

    #[test]
    fn comments_metadata_and_crlf() {
        let text = format!(
            "# name: Tiny\r\n# target_id: CHEMBL1\r\n# free comment\r\n{}",
            ten_csv().replace('\n', "\r\n")
        );
        let d = parse_dataset_str(&text, "x", "x", &IngestOptions::default()).unwrap();
        assert_eq!(d.name(), "Tiny");
        assert_eq!(d.target_id(), "CHEMBL1");
        let again = parse_dataset_str(&d.to_csv(), "y", "y", &IngestOptions::default()).unwrap();
        assert_eq!(d, again);
    }

    #[test]
    fn quantile_examples() {
        let d = parse_dataset_str(&ten_csv(), "x", "x", &IngestOptions::default()).unwrap();
        assert_eq!(d.empirical_quantile(0.4).unwrap(), 5.0);
        assert_eq!(d.empirical_quantile(0.999).unwrap(), 10.0);
        assert!(d.empirical_quantile(0.0).is_err());
        assert!(d.empirical_quantile(1.0).is_err());
        assert!(d.empirical_quantile(f64::NAN).is_err());

        let flat: Vec<(String, f64)> = (0..12).map(|i| (format!("c{i}"), 3.25)).collect();
        let refs: Vec<(&str, f64)> = flat.iter().map(|(a, b)| (a.as_str(), *b)).collect();
        let d = parse_dataset_str(&csv(&refs), "x", "x", &IngestOptions::default()).unwrap();
        for f in [0.01, 0.3, 0.77, 0.99] {
            assert_eq!(d.empirical_quantile(f).unwrap(), 3.25);
        }
    }

    #[test]
    fn fingerprint_bit_order() {
        let f = Fingerprint::parse("80000000000000000000000000000001").unwrap();
        assert!(f.bit(0));
        assert!(f.bit(127));
        assert!(!f.bit(1));
        let mut bits = vec![0u8; N_BITS];
        bits[0] = 1;
        bits[127] = 1;
        assert_eq!(Fingerprint::from_bits(&bits).unwrap(), f);
        let binary: String = bits
            .iter()
            .map(|b| if *b == 1 { '1' } else { '0' })
            .collect();
        assert_eq!(Fingerprint::parse(&binary).unwrap(), f);
    }

    #[test]
    fn summary_statistics() {
        let d = parse_dataset_str(&ten_csv(), "x", "x", &IngestOptions::default()).unwrap();
        let s = d.summary();
        assert_eq!(s.n, 10);
        assert_eq!(s.activity_min, 1.0);
        assert_eq!(s.activity_median, 5.5);
        assert_eq!(s.activity_max, 10.0);
        assert!(s.bit_density > 0.0 && s.bit_density < 1.0);
    }
}
