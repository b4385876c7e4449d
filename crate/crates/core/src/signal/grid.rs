use super::quad::Evaluator;
use super::short_te::coincidence_short_te;
use super::{Mode, QuadratureSpec, SignalError};
use crate::biphoton::BiphotonAmplitude;
use crate::model::LiouvilleOperatorSet;
use crate::pathways::HomSpec;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScanAxes {
    pub tau: Vec<f64>,
    pub big_t: Vec<f64>,
    pub s: Vec<f64>,
}

fn check_axis(name: &'static str, v: &[f64]) -> Result<(), SignalError> {
    if let Some(x) = v.iter().find(|x| !x.is_finite()) {
        return Err(SignalError::Axis(name, format!("non-finite value {x}")));
    }
    let up = v.windows(2).all(|w| w[1] > w[0]);
    let down = v.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(SignalError::Axis(name, "values must be strictly monotone".into()));
    }
    Ok(())
}

impl ScanAxes {
    pub fn point(tau: f64, big_t: f64, s: f64) -> Self {
        Self {
            tau: vec![tau],
            big_t: vec![big_t],
            s: vec![s],
        }
    }

    /// `count` values start, start+step, …
    pub fn range(start: f64, step: f64, count: usize) -> Vec<f64> {
        (0..count).map(|k| start + k as f64 * step).collect()
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        check_axis("tau", &self.tau)?;
        check_axis("T", &self.big_t)?;
        check_axis("s", &self.s)
    }

    pub fn len(&self) -> usize {
        self.tau.len() * self.big_t.len() * self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lattice point of flat index k (τ slowest, s fastest).
    pub fn coords(&self, k: usize) -> (f64, f64, f64) {
        let ns = self.s.len();
        let nt = self.big_t.len();
        (self.tau[k / (nt * ns)], self.big_t[(k / ns) % nt], self.s[k % ns])
    }
}

/// Scan result with its provenance header.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalGrid {
    pub mode: Mode,
    pub quadrature: QuadratureSpec,
    pub system_hash: String,
    pub amplitude_hash: String,
    pub axes: ScanAxes,
    /// C in `ScanAxes::coords` order.
    pub values: Vec<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseGridError {
    pub line: usize,
    pub message: String,
}

fn perr(line: usize, message: impl Into<String>) -> ParseGridError {
    ParseGridError {
        line,
        message: message.into(),
    }
}

const MAGIC: &str = "# signal_grid v1";
const COLUMNS: &str = "tau\tT\ts\tC";

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ")
}

impl SignalGrid {
    pub fn value(&self, i_tau: usize, i_t: usize, i_s: usize) -> f64 {
        let (nt, ns) = (self.axes.big_t.len(), self.axes.s.len());
        self.values[(i_tau * nt + i_t) * ns + i_s]
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "# mode = {}", self.mode);
        let _ = writeln!(out, "# quadrature = {}", self.quadrature);
        let _ = writeln!(out, "# system_sha256 = {}", self.system_hash);
        let _ = writeln!(out, "# amplitude_sha256 = {}", self.amplitude_hash);
        let _ = writeln!(out, "# tau = {}", join(&self.axes.tau));
        let _ = writeln!(out, "# T = {}", join(&self.axes.big_t));
        let _ = writeln!(out, "# s = {}", join(&self.axes.s));
        let _ = writeln!(out, "{COLUMNS}");
        for (k, c) in self.values.iter().enumerate() {
            let (tau, big_t, s) = self.axes.coords(k);
            let _ = writeln!(out, "{tau:e}\t{big_t:e}\t{s:e}\t{c:e}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ParseGridError> {
        let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l));
        let mut next = |what: &str| lines.next().ok_or_else(|| perr(0, format!("missing {what}")));
        let (n, l) = next("header")?;
        if l != MAGIC {
            return Err(perr(n, format!("expected `{MAGIC}`")));
        }
        let mut field = |key: &str| -> Result<(usize, String), ParseGridError> {
            let (n, l) = next(key)?;
            let prefix = format!("# {key} =");
            let rest = l
                .strip_prefix(&prefix)
                .ok_or_else(|| perr(n, format!("expected `{prefix}`")))?;
            Ok((n, rest.strip_prefix(' ').unwrap_or(rest).to_string()))
        };
        let (n, mode) = field("mode")?;
        let mode: Mode = mode.parse().map_err(|e: String| perr(n, e))?;
        let (n, q) = field("quadrature")?;
        let quadrature: QuadratureSpec = q.parse().map_err(|e: String| perr(n, e))?;
        let (_, system_hash) = field("system_sha256")?;
        let (_, amplitude_hash) = field("amplitude_sha256")?;
        let mut axis = |key: &str| -> Result<Vec<f64>, ParseGridError> {
            let (n, v) = field(key)?;
            v.split_whitespace()
                .map(|x| x.parse::<f64>().map_err(|_| perr(n, format!("invalid number `{x}`"))))
                .collect()
        };
        let axes = ScanAxes {
            tau: axis("tau")?,
            big_t: axis("T")?,
            s: axis("s")?,
        };
        axes.validate().map_err(|e| perr(0, e.to_string()))?;
        let (n, l) = next("column header")?;
        if l != COLUMNS {
            return Err(perr(n, "expected tab-separated `tau T s C` column header"));
        }
        let total = axes.len();
        let mut values = Vec::with_capacity(total.min(1 << 20));
        for (n, l) in lines {
            if values.len() == total {
                return Err(perr(n, "more rows than the axes describe"));
            }
            let cols: Vec<&str> = l.split('\t').collect();
            if cols.len() != 4 {
                return Err(perr(n, format!("{} columns, expected 4", cols.len())));
            }
            let mut nums = [0.0; 4];
            for (slot, tok) in nums.iter_mut().zip(&cols) {
                *slot = tok.parse().map_err(|_| perr(n, format!("invalid number `{tok}`")))?;
            }
            let (tau, big_t, s) = axes.coords(values.len());
            if nums[..3] != [tau, big_t, s] {
                return Err(perr(n, "coordinates do not match the axes"));
            }
            if !nums[3].is_finite() {
                return Err(perr(n, "non-finite signal value"));
            }
            values.push(nums[3]);
        }
        if values.len() != total {
            return Err(perr(0, format!("{} rows, expected {total}", values.len())));
        }
        Ok(Self {
            mode,
            quadrature,
            system_hash,
            amplitude_hash,
            axes,
            values,
        })
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub(crate) fn system_hash(ops: &LiouvilleOperatorSet) -> String {
    let mut b = ops.system().canonical_bytes();
    b.extend_from_slice(&ops.frame().to_le_bytes());
    sha256_hex(&b)
}

/// Evaluates `mode` over the lattice. Points run in parallel on the current
/// rayon pool; the result does not depend on the pool size.
pub fn scan(
    axes: &ScanAxes,
    mode: Mode,
    amp: &BiphotonAmplitude,
    ops: &LiouvilleOperatorSet,
    q: &QuadratureSpec,
    hom: &HomSpec,
) -> Result<SignalGrid, SignalError> {
    axes.validate()?;
    q.validate(ops)?;
    hom.validate()?;
    let mut grid = SignalGrid {
        mode,
        quadrature: *q,
        system_hash: system_hash(ops),
        amplitude_hash: sha256_hex(&amp.canonical_bytes()),
        axes: axes.clone(),
        values: vec![0.0; axes.len()],
    };
    if axes.is_empty() {
        return Ok(grid);
    }
    match mode {
        Mode::ShortTe => {
            for k in 0..axes.len() {
                let (tau, big_t, s) = axes.coords(k);
                coincidence_short_te(tau, big_t, s, ops, q)?;
            }
            let vals: Result<Vec<f64>, SignalError> = (0..axes.len())
                .into_par_iter()
                .map(|k| {
                    let (tau, big_t, s) = axes.coords(k);
                    coincidence_short_te(tau, big_t, s, ops, q)
                })
                .collect();
            grid.values = vals?;
        }
        Mode::Full | Mode::BsRemoved => {
            let hom = HomSpec {
                bs_removed: mode == Mode::BsRemoved,
                ..*hom
            };
            let (nt, ns) = (axes.big_t.len(), axes.s.len());
            for (is, &s) in axes.s.iter().enumerate() {
                let shifted = amp.with_delay(s, amp.delay_arm());
                let ev = Evaluator::new(&shifted, ops, q, &hom)?;
                let plane: Vec<f64> = (0..axes.tau.len() * nt)
                    .into_par_iter()
                    .map(|k| ev.coincidence(axes.tau[k / nt], axes.big_t[k % nt]))
                    .collect();
                for (k, v) in plane.into_iter().enumerate() {
                    grid.values[k * ns + is] = v;
                }
            }
        }
    }
    if let Some(k) = grid.values.iter().position(|v| !v.is_finite()) {
        let (tau, big_t, s) = axes.coords(k);
        return Err(SignalError::Domain {
            tau,
            big_t,
            s,
            reason: "non-finite signal value".into(),
        });
    }
    Ok(grid)
}
