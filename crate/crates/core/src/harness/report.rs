//! Suite configuration and the report schema.
//!
//! Every tolerance lives here, in one table, with the defaults the checks
//! assert. Reports are deterministic given (config, seed) apart from the
//! runtime fields, which `normalized_json` zeroes for byte-comparisons.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// max |g⁻¹g − id| at evaluation.
    pub ginv_identity: f64,
    /// Riemann/Weyl/Cotton index symmetries, relative.
    pub symmetry_rel: f64,
    /// curvature decomposition reconstruction, relative.
    pub decomposition_rel: f64,
    /// Cotton vs Weyl-divergence identity, relative.
    pub cotton_weyl_div_rel: f64,
    /// Bach symmetry and trace, relative.
    pub bach_trace_rel: f64,
    /// n = 4 Bach divergence via extrapolated differencing, relative.
    pub bach_divergence_rel: f64,
    /// sphere pipeline: |R − 12|, |W|, |C| ceilings.
    pub sphere_scalar_abs: f64,
    pub sphere_weyl_abs: f64,
    pub sphere_cotton_abs: f64,
    pub sphere_bach_abs: f64,
    /// closed form vs pipeline, componentwise absolute over scale.
    pub oracle_weyl_abs: f64,
    pub oracle_cotton_abs: f64,
    /// φ derivative formulas vs jets, relative.
    pub phi_formula_rel: f64,
    /// star² = id and related duality identities.
    pub duality_abs: f64,
    /// n = 4 Bach conformal covariance, relative to the Bach scale.
    pub bach_covariance_rel: f64,
    /// |W|² = 1 after unit normalization.
    pub unit_normalize_abs: f64,
    /// |C̃(0)|² ceiling at the bump center.
    pub cotton_center_abs: f64,
    /// least-squares slope floor for the convergence studies.
    pub convergence_slope_min: f64,
    /// norm² floor for conformal normalization regions.
    pub norm_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            ginv_identity: 1e-12,
            symmetry_rel: 1e-9,
            decomposition_rel: 1e-9,
            cotton_weyl_div_rel: 1e-8,
            bach_trace_rel: 1e-8,
            bach_divergence_rel: 1e-7,
            sphere_scalar_abs: 1e-8,
            sphere_weyl_abs: 1e-8,
            sphere_cotton_abs: 1e-8,
            sphere_bach_abs: 1e-6,
            oracle_weyl_abs: 1e-8,
            oracle_cotton_abs: 1e-7,
            phi_formula_rel: 1e-10,
            duality_abs: 1e-9,
            bach_covariance_rel: 1e-6,
            unit_normalize_abs: 1e-6,
            cotton_center_abs: 1e-10,
            convergence_slope_min: 1.0,
            norm_floor: 1e-22,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Counts {
    pub sphere_points: usize,
    pub oracle_param_sets: usize,
    pub oracle_points_per_set: usize,
    pub divergence_points: usize,
    pub scan_samples: usize,
    pub normalize_samples: usize,
    pub covariance_points: usize,
    pub obstruction_budget: u64,
    pub spot_check_samples: usize,
}

impl Default for Counts {
    fn default() -> Self {
        Counts {
            sphere_points: 20,
            oracle_param_sets: 20,
            oracle_points_per_set: 100,
            divergence_points: 20,
            scan_samples: 10_000,
            normalize_samples: 200,
            covariance_points: 20,
            obstruction_budget: 1_000_000,
            spot_check_samples: 100_000,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub seed: u64,
    pub tolerances: Tolerances,
    pub counts: Counts,
    /// Subset of check names to run; None runs everything.
    pub checks: Option<Vec<String>>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 20240,
            tolerances: Tolerances::default(),
            counts: Counts::default(),
            checks: None,
        }
    }
}

impl SuiteConfig {
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hex_string(&hasher.finalize())
    }

    /// Derive a per-check RNG seed from the suite seed.
    pub fn check_seed(&self, name: &str) -> u64 {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(name.as_bytes());
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[0..8].try_into().unwrap())
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Measured and reported without a pass/fail verdict.
    Diagnostic,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// The identity or expansion the check verifies, or "plumbing".
    pub provenance: String,
    pub status: CheckStatus,
    /// Everything the check measured, with its tolerances inline.
    pub measured: serde_json::Value,
    /// Wall-clock budget from the acceptance criteria, if any.
    pub budget_ms: Option<u64>,
    pub runtime_ms: u64,
}

impl CheckRecord {
    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub seed: u64,
    pub config_hash: String,
    pub checks: Vec<CheckRecord>,
    pub verdict: bool,
}

impl SuiteReport {
    pub fn new(config: &SuiteConfig, mut checks: Vec<CheckRecord>) -> SuiteReport {
        checks.sort_by(|a, b| a.name.cmp(&b.name));
        let verdict = checks.iter().all(CheckRecord::passed);
        SuiteReport {
            schema_version: REPORT_SCHEMA_VERSION,
            seed: config.seed,
            config_hash: config.config_hash(),
            checks,
            verdict,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report body with runtimes zeroed, for determinism comparisons.
    pub fn normalized_json(&self) -> String {
        let mut clone = self.clone();
        for c in &mut clone.checks {
            c.runtime_ms = 0;
        }
        serde_json::to_string_pretty(&clone).expect("report serializes")
    }
}
