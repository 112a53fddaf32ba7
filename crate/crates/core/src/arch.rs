//! Memory, processing-unit and latency arithmetic for table-based
//! dynamics architectures.
//!
//! A single unstructured table indexed by `(q, q̇, q̈)` needs `Π b_k³`
//! entries. Splitting the equation into per-term tables indexed by `q` alone
//! brings that down to `Π b_k` per unit, at the cost of `n³ + n² + 12n`
//! units in the first layer. All sizes are exact big integers.

use std::fmt::Write as _;
use std::time::Duration;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::BasisLayout;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ArchError {
    #[error("{field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("unknown preset {0:?} (known: paper-2.3)")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureParams {
    pub n: u32,
    /// Quantization levels: one uniform value or one per joint.
    pub levels: Vec<u64>,
    #[serde(with = "humantime_serde")]
    pub t_ins: Duration,
    #[serde(with = "humantime_serde")]
    pub t_c: Duration,
    /// Instruction count of a full dynamics evaluation, if known.
    #[serde(default)]
    pub n_dm: Option<u64>,
    #[serde(default = "one")]
    pub bytes_per_entry: u64,
}

fn one() -> u64 {
    1
}

mod humantime_serde {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&humantime::format_duration(*d).to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let s = String::deserialize(d)?;
        humantime::parse_duration(&s).map_err(serde::de::Error::custom)
    }
}

pub const PRESETS: [&str; 1] = ["paper-2.3"];

impl ArchitectureParams {
    pub fn uniform(n: u32, b: u64, t_ins: Duration, t_c: Duration) -> Self {
        ArchitectureParams { n, levels: vec![b], t_ins, t_c, n_dm: None, bytes_per_entry: 1 }
    }

    /// Ten joints, 16 levels, 100 µs per instruction, 10 ms control period.
    pub fn preset(name: &str) -> Result<Self, ArchError> {
        match name {
            "paper-2.3" => Ok(Self::uniform(10, 16, Duration::from_micros(100), Duration::from_millis(10))),
            other => Err(ArchError::UnknownPreset(other.to_string())),
        }
    }

    pub fn validate(&self) -> Result<(), ArchError> {
        let bad = |field, reason: &str| Err(ArchError::Invalid { field, reason: reason.to_string() });
        if self.n == 0 {
            return bad("n", "need at least one joint");
        }
        if self.levels.len() != 1 && self.levels.len() != self.n as usize {
            return bad("levels", &format!("give 1 or {} entries, got {}", self.n, self.levels.len()));
        }
        if self.levels.iter().any(|&b| b < 2) {
            return bad("levels", "every joint needs at least 2 levels");
        }
        if self.t_ins.is_zero() {
            return bad("t_ins", "must be positive");
        }
        if self.t_c.is_zero() {
            return bad("t_c", "must be positive");
        }
        if self.bytes_per_entry == 0 {
            return bad("bytes_per_entry", "must be positive");
        }
        Ok(())
    }

    fn level(&self, k: u32) -> u64 {
        if self.levels.len() == 1 {
            self.levels[0]
        } else {
            self.levels[k as usize]
        }
    }

    /// `Π_k b_k^power`.
    fn entries(&self, power: u32) -> BigUint {
        (0..self.n).fold(BigUint::from(1u32), |acc, k| acc * BigUint::from(self.level(k)).pow(power))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchitectureEstimate {
    /// Bits needed to address every entry.
    pub address_bits: u64,
    pub entries: BigUint,
    pub memory_bytes: BigUint,
    pub pu_count_layer1: u64,
    pub pu_count_layer2: u64,
    pub latency: Duration,
}

fn address_bits(entries: &BigUint) -> u64 {
    (entries - 1u32).bits()
}

/// One table indexed by position, speed and acceleration of every joint.
pub fn unstructured_table(p: &ArchitectureParams) -> Result<ArchitectureEstimate, ArchError> {
    p.validate()?;
    let entries = p.entries(3);
    Ok(ArchitectureEstimate {
        address_bits: address_bits(&entries),
        memory_bytes: &entries * p.bytes_per_entry,
        entries,
        pu_count_layer1: 1,
        pu_count_layer2: 0,
        latency: p.t_ins,
    })
}

/// Per-term tables indexed by joint position only; sizes are per unit.
pub fn structured_table(p: &ArchitectureParams) -> Result<ArchitectureEstimate, ArchError> {
    p.validate()?;
    let entries = p.entries(1);
    let (l1, l2) = pu_count(p.n as u64);
    Ok(ArchitectureEstimate {
        address_bits: address_bits(&entries),
        memory_bytes: &entries * p.bytes_per_entry,
        entries,
        pu_count_layer1: l1,
        pu_count_layer2: l2,
        latency: p.t_ins * 2,
    })
}

/// `(n·(n + n² + 3 + 3 + 6), n)`: inertial, Coriolis, gravity and wrench
/// units per joint, then one summing unit per joint.
pub fn pu_count(n: u64) -> (u64, u64) {
    (n * (n + n * n + 3 + 3 + 6), n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Latencies {
    /// `n_dm · T_ins`, when `n_dm` is known.
    pub single: Option<Duration>,
    /// `2n · T_ins`: n forward and n backward recursion steps.
    pub multi: Duration,
    /// `2 · T_ins`, whatever `n`.
    pub layered: Duration,
}

pub fn latencies(p: &ArchitectureParams) -> Result<Latencies, ArchError> {
    p.validate()?;
    let single = match p.n_dm {
        Some(n_dm) => Some(mul_duration(p.t_ins, n_dm)?),
        None => None,
    };
    Ok(Latencies {
        single,
        multi: mul_duration(p.t_ins, 2 * p.n as u64)?,
        layered: p.t_ins * 2,
    })
}

fn mul_duration(d: Duration, k: u64) -> Result<Duration, ArchError> {
    let nanos = d.as_nanos().checked_mul(k as u128).filter(|&v| v <= u64::MAX as u128);
    match nanos {
        Some(v) => Ok(Duration::from_nanos(v as u64)),
        None => Err(ArchError::Invalid { field: "n_dm", reason: "latency overflows".into() }),
    }
}

/// Bytes of position-code weights held by `n_microzones` microzones, each
/// with `2n + 5` Purkinje cells over `layout`.
pub fn encoder_memory(layout: &BasisLayout, n_microzones: usize, bytes_per_weight: u64) -> BigUint {
    let pcs = 2 * layout.dims() as u64 + 5;
    BigUint::from(layout.cell_count() as u64) * pcs * n_microzones as u64 * bytes_per_weight
}

/// Scientific rendering of a big integer with four significant digits.
pub fn approx(v: &BigUint) -> String {
    let digits = v.to_string();
    if digits.len() <= 6 {
        return digits;
    }
    let mantissa = format!("{}.{}", &digits[..1], &digits[1..4]);
    format!("{mantissa}e{}", digits.len() - 1)
}

/// Every quantity for one parameter set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchReport {
    pub params_n: u32,
    pub unstructured: ArchitectureEstimate,
    pub structured: ArchitectureEstimate,
    pub latencies: Latencies,
    pub t_c: Duration,
    /// `unstructured / structured` entries.
    pub reduction: BigUint,
}

impl ArchReport {
    pub fn new(p: &ArchitectureParams) -> Result<Self, ArchError> {
        let unstructured = unstructured_table(p)?;
        let structured = structured_table(p)?;
        Ok(ArchReport {
            params_n: p.n,
            reduction: &unstructured.entries / &structured.entries,
            unstructured,
            structured,
            latencies: latencies(p)?,
            t_c: p.t_c,
        })
    }

    pub fn meets_deadline(&self) -> bool {
        self.latencies.layered <= self.t_c
    }

    /// `(section, name, value)` rows, exact values only.
    pub fn rows(&self) -> Vec<(&'static str, &'static str, String)> {
        let ns = |d: Duration| d.as_nanos().to_string();
        let mut rows = vec![
            ("params", "n", self.params_n.to_string()),
            ("unstructured", "address_bits", self.unstructured.address_bits.to_string()),
            ("unstructured", "entries", self.unstructured.entries.to_string()),
            ("unstructured", "memory_bytes", self.unstructured.memory_bytes.to_string()),
            ("structured", "address_bits", self.structured.address_bits.to_string()),
            ("structured", "entries_per_pu", self.structured.entries.to_string()),
            ("structured", "memory_bytes_per_pu", self.structured.memory_bytes.to_string()),
            ("structured", "reduction_factor", self.reduction.to_string()),
            ("pu", "layer1", self.structured.pu_count_layer1.to_string()),
            ("pu", "layer2", self.structured.pu_count_layer2.to_string()),
        ];
        if let Some(s) = self.latencies.single {
            rows.push(("latency_ns", "single", ns(s)));
        }
        rows.extend([
            ("latency_ns", "multi", ns(self.latencies.multi)),
            ("latency_ns", "layered", ns(self.latencies.layered)),
            ("latency_ns", "t_c", ns(self.t_c)),
            ("deadline", "layered_meets_t_c", self.meets_deadline().to_string()),
        ]);
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,name,value\n");
        for (s, n, v) in self.rows() {
            let _ = writeln!(out, "{s},{n},{v}");
        }
        out
    }

    pub fn to_text(&self) -> String {
        let h = |d: Duration| humantime::format_duration(d).to_string();
        let mut out = String::new();
        let u = &self.unstructured;
        let s = &self.structured;
        let _ = writeln!(out, "joints                     {}", self.params_n);
        let _ = writeln!(out, "unstructured address bits  {}", u.address_bits);
        let _ = writeln!(out, "unstructured memory        {} B (~{})", u.memory_bytes, approx(&u.memory_bytes));
        let _ = writeln!(out, "structured address bits    {}", s.address_bits);
        let _ = writeln!(out, "structured memory per PU   {} B (~{})", s.memory_bytes, approx(&s.memory_bytes));
        let _ = writeln!(out, "reduction factor           {} (~{})", self.reduction, approx(&self.reduction));
        let _ = writeln!(out, "PUs layer 1 / layer 2      {} / {}", s.pu_count_layer1, s.pu_count_layer2);
        if let Some(t) = self.latencies.single {
            let _ = writeln!(out, "single-processor latency   {}", h(t));
        }
        let _ = writeln!(out, "multiprocessor latency     {}", h(self.latencies.multi));
        let _ = writeln!(out, "two-layer latency          {}", h(self.latencies.layered));
        let verdict = if self.meets_deadline() { "meets" } else { "misses" };
        let _ = writeln!(out, "control period             {} ({verdict} deadline)", h(self.t_c));
        out
    }
}
