use std::fmt::Write;

use crate::frontend::format_number;
use crate::sim::SimError;

/// Per-channel zero-mean Gaussian noise variances used to build a trace.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NoiseSpec {
    pub process: Vec<f64>,
    pub measurement: Vec<f64>,
}

/// Ground truth, noisy measurements and call-time inputs. Step `k` covers
/// the interval ending at `times[k]`: predict with `extras[k]` and
/// `modes[k]`, then update with `measurements[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub times: Vec<f64>,
    pub truth: Vec<Vec<f64>>,
    pub measurements: Vec<Vec<f64>>,
    pub extras: Vec<Vec<f64>>,
    pub modes: Vec<usize>,
    pub initial: Vec<f64>,
    pub seed: u64,
    pub noise: NoiseSpec,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let n = self.times.len();
        for (what, len) in [
            ("truth", self.truth.len()),
            ("measurements", self.measurements.len()),
            ("extras", self.extras.len()),
            ("modes", self.modes.len()),
        ] {
            if len != n {
                return Err(SimError::LengthMismatch { what: what.into(), expected: n, found: len });
            }
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SimError::InvalidTrace("times are not strictly increasing".into()));
        }
        Ok(())
    }

    /// Trace CSV: `t,z_0..,extra_0..,mode`.
    pub fn to_csv(&self) -> String {
        TraceInput::from(self).to_csv()
    }
}

/// The columns of a trace CSV; truth is not part of the file.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceInput {
    pub times: Vec<f64>,
    pub measurements: Vec<Vec<f64>>,
    pub extras: Vec<Vec<f64>>,
    pub modes: Vec<usize>,
}

impl TraceInput {
    pub fn to_csv(&self) -> String {
        let z = self.measurements.first().map_or(0, Vec::len);
        let e = self.extras.first().map_or(0, Vec::len);
        let mut out = String::from("t");
        (0..z).for_each(|i| write!(out, ",z_{i}").unwrap());
        (0..e).for_each(|i| write!(out, ",extra_{i}").unwrap());
        out.push_str(",mode\n");
        for k in 0..self.times.len() {
            out.push_str(&format_number(self.times[k]));
            for v in self.measurements[k].iter().chain(&self.extras[k]) {
                out.push(',');
                out.push_str(&format_number(*v));
            }
            writeln!(out, ",{}", self.modes[k]).unwrap();
        }
        out
    }
}

impl From<&SimulationTrace> for TraceInput {
    fn from(t: &SimulationTrace) -> Self {
        TraceInput { times: t.times.clone(), measurements: t.measurements.clone(), extras: t.extras.clone(), modes: t.modes.clone() }
    }
}

fn columns(header: &csv::StringRecord, prefix: &str) -> usize {
    header.iter().filter(|h| h.trim().strip_prefix(prefix).is_some_and(|r| r.parse::<usize>().is_ok())).count()
}

fn parse_f64(s: &str, line: usize) -> Result<f64, SimError> {
    s.trim().parse().map_err(|_| SimError::InvalidTrace(format!("line {line}: `{s}` is not a number")))
}

/// Parses a trace CSV and checks it has exactly `z` measurement and `e`
/// extra columns. A missing `mode` column means mode 0 throughout.
pub fn read_trace_csv(text: &str, z: usize, e: usize) -> Result<TraceInput, SimError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|err| SimError::InvalidTrace(err.to_string()))?.clone();
    if header.get(0) != Some("t") {
        return Err(SimError::InvalidTrace("first column must be `t`".into()));
    }
    let (fz, fe) = (columns(&header, "z_"), columns(&header, "extra_"));
    if fz != z || fe != e {
        return Err(SimError::Arity { measurements: (z, fz), extras: (e, fe) });
    }
    let has_mode = header.get(1 + z + e) == Some("mode");
    let mut t = TraceInput { times: vec![], measurements: vec![], extras: vec![], modes: vec![] };
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|err| SimError::InvalidTrace(err.to_string()))?;
        let line = i + 2;
        let want = 1 + z + e + usize::from(has_mode);
        if rec.len() != want {
            return Err(SimError::InvalidTrace(format!("line {line}: expected {want} fields, found {}", rec.len())));
        }
        let vals: Vec<f64> = rec.iter().take(1 + z + e).map(|s| parse_f64(s, line)).collect::<Result<_, _>>()?;
        t.times.push(vals[0]);
        t.measurements.push(vals[1..1 + z].to_vec());
        t.extras.push(vals[1 + z..].to_vec());
        t.modes.push(if has_mode {
            rec[1 + z + e].parse().map_err(|_| SimError::InvalidTrace(format!("line {line}: bad mode")))?
        } else {
            0
        });
    }
    Ok(t)
}

/// Estimate CSV: `t,s_0..`.
pub fn estimates_to_csv(times: &[f64], estimates: &[Vec<f64>]) -> String {
    let n = estimates.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    (0..n).for_each(|i| write!(out, ",s_{i}").unwrap());
    out.push('\n');
    for (t, s) in times.iter().zip(estimates) {
        out.push_str(&format_number(*t));
        for v in s {
            out.push(',');
            out.push_str(&format_number(*v));
        }
        out.push('\n');
    }
    out
}

/// Parses an estimate CSV into `(times, states)`.
pub fn read_estimates_csv(text: &str) -> Result<(Vec<f64>, Vec<Vec<f64>>), SimError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|err| SimError::InvalidTrace(err.to_string()))?.clone();
    let n = columns(&header, "s_");
    if header.get(0) != Some("t") || n + 1 != header.len() {
        return Err(SimError::InvalidTrace("estimate header must be `t,s_0,..`".into()));
    }
    let (mut times, mut states) = (vec![], vec![]);
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|err| SimError::InvalidTrace(err.to_string()))?;
        let vals: Vec<f64> = rec.iter().map(|s| parse_f64(s, i + 2)).collect::<Result<_, _>>()?;
        times.push(vals[0]);
        states.push(vals[1..].to_vec());
    }
    Ok((times, states))
}
