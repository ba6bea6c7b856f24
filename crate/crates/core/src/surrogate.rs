//! Synthetic stand-ins for the 25-target benchmark panel.
//!
//! The curated fingerprint/activity files are distributed separately; when
//! they are not at hand, [`generate`] produces a dataset of the same size for
//! each panel entry so the whole pipeline can run end to end.
//!
//! Molecules are assembled from a library of substructure fragments. Each
//! fragment sets a few fingerprint bits; several fragments can share a bit,
//! as happens when a circular fingerprint is folded to 128 bits. Fragment
//! popularity is skewed, so some bits are set in most molecules and many are
//! rare.
//!
//! Molecules come in chemical series: a series has a core of fragments, and
//! each member keeps most of the core and adds a few substituents. Activity
//! is the sum of
//!
//! * a series offset,
//! * a global effect of each fragment present, shared across series,
//! * a series-local fragment effect (the same substituent helps in one
//!   series and hurts in another),
//! * measurement noise.
//!
//! The global part is what a model can carry into unseen, more active
//! regions; the series-local part rewards memorizing neighbourhoods.

use rand::distributions::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::data::{Dataset, Fingerprint, Molecule, N_BITS};
use crate::error::{Error, Result};
use crate::rng;

/// Panel entry: abbreviation, ChEMBL target id, number of molecules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PanelEntry {
    pub name: &'static str,
    pub chembl_id: &'static str,
    pub size: usize,
}

const fn entry(name: &'static str, chembl_id: &'static str, size: usize) -> PanelEntry {
    PanelEntry {
        name,
        chembl_id,
        size,
    }
}

/// The 25 targets, in table order.
pub const PANEL: [PanelEntry; 25] = [
    entry("A2a", "CHEMBL1867", 203),
    entry("ABL1", "CHEMBL1862", 773),
    entry("Acetylcholin", "CHEMBL220", 3159),
    entry("Androgen", "CHEMBL1871", 1290),
    entry("Aurora-A", "CHEMBL4722", 2125),
    entry("B-raf", "CHEMBL5145", 1730),
    entry("Cannabinoid", "CHEMBL218", 1116),
    entry("Carbonic", "CHEMBL205", 603),
    entry("Caspase", "CHEMBL2334", 1606),
    entry("Coagulation", "CHEMBL204", 1700),
    entry("COX-1", "CHEMBL221", 1343),
    entry("COX-2", "CHEMBL230", 2855),
    entry("Dihydrofolate", "CHEMBL202", 584),
    entry("Dopamine", "CHEMBL217", 479),
    entry("Ephrin", "CHEMBL222", 1740),
    entry("erbB1", "CHEMBL203", 4868),
    entry("Estrogen", "CHEMBL206", 1705),
    entry("Glucocorticoid", "CHEMBL2034", 1447),
    entry("Glycogen", "CHEMBL262", 1757),
    entry("HERG", "CHEMBL240", 5207),
    entry("JAK2", "CHEMBL2971", 2655),
    entry("LCK", "CHEMBL258", 1352),
    entry("Monoamine", "CHEMBL1951", 1379),
    entry("Opioid", "CHEMBL233", 840),
    entry("Vanilloid", "CHEMBL4794", 1923),
];

pub fn panel_entry(name: &str) -> Option<PanelEntry> {
    PANEL
        .iter()
        .copied()
        .find(|e| e.name.eq_ignore_ascii_case(name))
}

/// The `k` smallest panel entries, smallest first.
pub fn smallest(k: usize) -> Vec<PanelEntry> {
    let mut v = PANEL.to_vec();
    v.sort_by_key(|e| e.size);
    v.truncate(k);
    v
}

/// Generator settings. Standard deviations are in activity units.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateParams {
    pub baseline: f64,
    /// Molecules per series, on average.
    pub series_size: usize,
    pub n_fragments: usize,
    /// Mean number of bits a fragment sets.
    pub fragment_bits: f64,
    /// Fragment popularity falls off as `rank^-popularity_exponent`.
    pub popularity_exponent: f64,
    pub core_fragments: usize,
    /// Probability that a member keeps a given core fragment.
    pub core_keep: f64,
    /// Mean number of substituent fragments per member.
    pub substituents: f64,
    pub series_sd: f64,
    /// Fraction of fragments with a nonzero global effect.
    pub global_fraction: f64,
    pub global_sd: f64,
    /// Fraction of fragments with a nonzero effect inside a given series.
    pub local_fraction: f64,
    pub local_sd: f64,
    pub noise_sd: f64,
}

impl Default for SurrogateParams {
    fn default() -> Self {
        SurrogateParams {
            baseline: 6.0,
            series_size: 20,
            n_fragments: 300,
            fragment_bits: 3.0,
            popularity_exponent: 1.0,
            core_fragments: 8,
            core_keep: 0.9,
            substituents: 3.0,
            series_sd: 0.5,
            global_fraction: 0.4,
            global_sd: 0.3,
            local_fraction: 0.25,
            local_sd: 0.5,
            noise_sd: 0.3,
        }
    }
}

/// Dataset with `size` molecules, a pure function of its arguments.
pub fn generate(
    name: &str,
    target_id: &str,
    size: usize,
    params: &SurrogateParams,
    seed: u64,
) -> Result<Dataset> {
    if params.n_fragments == 0 || params.core_fragments == 0 {
        return Err(Error::Validation(
            "n_fragments and core_fragments must be positive".into(),
        ));
    }
    let mut r = rng::rng_from_seed(rng::derive_seed(seed, name, 0));
    let normal = |sd: f64| Normal::new(0.0, sd).expect("finite standard deviation");
    let poisson = |mean: f64| {
        Poisson::new(mean).map_err(|e| Error::Validation(format!("poisson mean {mean}: {e}")))
    };
    let extra_bits = poisson(params.fragment_bits.max(1.0) - 1.0 + 1e-12)?;

    let fragments: Vec<Fingerprint> = (0..params.n_fragments)
        .map(|_| {
            let k = 1 + extra_bits.sample(&mut r) as usize;
            (0..k).fold(Fingerprint::default(), |fp, _| {
                fp.with_bit(rng::index(&mut r, N_BITS), true)
            })
        })
        .collect();
    let popularity = WeightedIndex::new(
        (1..=params.n_fragments).map(|rank| (rank as f64).powf(-params.popularity_exponent)),
    )
    .map_err(|e| Error::Validation(format!("fragment popularity: {e}")))?;
    let effect = |r: &mut rng::ChaCha8Rng, fraction: f64, sd: f64| -> Vec<f64> {
        (0..params.n_fragments)
            .map(|_| {
                if r.gen_bool(fraction) {
                    normal(sd).sample(r)
                } else {
                    0.0
                }
            })
            .collect()
    };
    let global = effect(&mut r, params.global_fraction, params.global_sd);

    let n_series = (size / params.series_size.max(1)).max(3);
    struct Series {
        core: Vec<usize>,
        offset: f64,
        local: Vec<f64>,
    }
    let series: Vec<Series> = (0..n_series)
        .map(|_| {
            let mut core: Vec<usize> = (0..params.core_fragments)
                .map(|_| popularity.sample(&mut r))
                .collect();
            core.sort_unstable();
            core.dedup();
            Series {
                core,
                offset: normal(params.series_sd).sample(&mut r),
                local: effect(&mut r, params.local_fraction, params.local_sd),
            }
        })
        .collect();

    let substituents = poisson(params.substituents)?;
    let noise = normal(params.noise_sd);
    let mut seen = std::collections::HashSet::with_capacity(size);
    let mut molecules = Vec::with_capacity(size);
    let max_attempts = 1000 * size.max(1);
    let mut attempts = 0;
    while molecules.len() < size {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::Validation(format!(
                "could not draw {size} distinct fingerprints for {name}"
            )));
        }
        let s = &series[rng::index(&mut r, n_series)];
        let mut parts: Vec<usize> = s
            .core
            .iter()
            .copied()
            .filter(|_| r.gen_bool(params.core_keep))
            .collect();
        for _ in 0..substituents.sample(&mut r) as usize {
            parts.push(popularity.sample(&mut r));
        }
        parts.sort_unstable();
        parts.dedup();
        let fp = parts.iter().fold(Fingerprint::default(), |fp, &f| {
            Fingerprint::from_u128(fp.as_u128() | fragments[f].as_u128())
        });
        if !seen.insert(fp) {
            continue;
        }
        let mut activity = params.baseline + s.offset + noise.sample(&mut r);
        for &f in &parts {
            activity += global[f] + s.local[f];
        }
        molecules.push(Molecule {
            id: format!("{name}-{:05}", molecules.len()),
            fingerprint: fp,
            activity: (activity * 1000.0).round() / 1000.0,
        });
    }
    Dataset::new(name, target_id, molecules)
}

/// Surrogates for the whole panel.
pub fn generate_panel(params: &SurrogateParams, seed: u64) -> Result<Vec<Dataset>> {
    PANEL
        .iter()
        .map(|e| generate(e.name, e.chembl_id, e.size, params, seed))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panel_matches_table() {
        assert_eq!(PANEL.len(), 25);
        assert_eq!(panel_entry("a2a").unwrap().size, 203);
        let small: Vec<&str> = smallest(3).iter().map(|e| e.name).collect();
        assert_eq!(small, ["A2a", "Dopamine", "Dihydrofolate"]);
        assert_eq!(PANEL.iter().map(|e| e.size).sum::<usize>(), 44_439);
    }

    #[test]
    fn generation_is_deterministic() {
        let p = SurrogateParams::default();
        let a = generate("A2a", "CHEMBL1867", 203, &p, 1).unwrap();
        let b = generate("A2a", "CHEMBL1867", 203, &p, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 203);
        let c = generate("A2a", "CHEMBL1867", 203, &p, 2).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.summary().distinct_fingerprints, 203);
    }
}
