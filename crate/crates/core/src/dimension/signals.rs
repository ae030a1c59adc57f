use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::diagnostic::Diagnostic;
use crate::dimension::DimensionVector;
use crate::frontend::{self, Description, FrontendError, UnitExpr};

/// File name the bundled fallback table stands in for.
pub const BASE_SIGNALS_FILE: &str = "NewtonBaseSignals.nt";

/// Signal and unit names mapped to their dimensions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SignalTable {
    entries: BTreeMap<String, DimensionVector>,
}

impl SignalTable {
    pub fn new() -> Self {
        SignalTable::default()
    }

    /// SI base signals, their unit symbols, and the derived signals used by
    /// the bundled models.
    pub fn builtin() -> Self {
        use DimensionVector as D;
        let length = D::base(D::LENGTH, 1);
        let mass = D::base(D::MASS, 1);
        let time = D::base(D::TIME, 1);
        let current = D::base(D::CURRENT, 1);
        let temperature = D::base(D::TEMPERATURE, 1);
        let amount = D::base(D::AMOUNT, 1);
        let luminous = D::base(D::LUMINOUS, 1);
        let one = D::dimensionless();
        let rate = time.powi(-1);
        let velocity = length - time;
        let acceleration = length - time.powi(2);
        let force = mass + acceleration;

        let mut t = SignalTable::new();
        for (name, dim) in [
            ("m", length),
            ("kg", mass),
            ("s", time),
            ("A", current),
            ("K", temperature),
            ("mol", amount),
            ("cd", luminous),
            ("rad", one),
            ("Hz", rate),
            ("N", force),
            ("distance", length),
            ("length", length),
            ("mass", mass),
            ("time", time),
            ("current", current),
            ("temperature", temperature),
            ("amount", amount),
            ("luminousIntensity", luminous),
            ("angle", one),
            ("dimensionless", one),
            ("angularRate", rate),
            ("angularAcceleration", time.powi(-2)),
            ("frequency", rate),
            ("speed", velocity),
            ("velocity", velocity),
            ("acceleration", acceleration),
            ("force", force),
            ("dampingRate", mass - time),
            // unit alias for gravitational acceleration used by the pendulum corpus
            ("ajf", acceleration),
        ] {
            t.insert(name, dim);
        }
        t
    }

    pub fn insert(&mut self, name: impl Into<String>, dim: DimensionVector) {
        self.entries.insert(name.into(), dim);
    }

    pub fn get(&self, name: &str) -> Option<DimensionVector> {
        self.entries.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Dimension of a unit expression, or the first unknown unit name.
    pub fn unit_dimension(&self, unit: &UnitExpr) -> Result<DimensionVector, Diagnostic> {
        unit.factors.iter().try_fold(DimensionVector::dimensionless(), |acc, f| match self.get(&f.name) {
            Some(d) => Ok(acc + d.powi(f.exponent)),
            None => Err(Diagnostic::error(f.span, format!("unknown unit `{}`", f.name))),
        })
    }

    /// Adds the signal declarations of `d`; returns diagnostics for
    /// declarations whose units do not resolve.
    pub fn extend_from(&mut self, d: &Description) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        for s in &d.signals {
            match self.unit_dimension(&s.unit) {
                Ok(dim) => self.insert(s.name.clone(), dim),
                Err(diag) => diags.push(diag),
            }
        }
        diags
    }

    /// Builds the table for `d`: built-in entries, then signals from included
    /// files found on `search_path`, then signals declared in `d` itself.
    /// Missing include files fall back to the built-in table with a warning
    /// unless the file is the standard base-signal file.
    pub fn for_description(d: &Description, search_path: &[PathBuf]) -> Result<(Self, Vec<Diagnostic>), FrontendError> {
        let mut table = SignalTable::builtin();
        let mut diags = Vec::new();
        for inc in frontend::load_includes(d, search_path)? {
            match &inc.description {
                Some(child) => diags.extend(table.extend_from(child)),
                None if inc.file == BASE_SIGNALS_FILE => {}
                None => diags.push(Diagnostic::warning(
                    inc.span,
                    format!("include `{}` not found; using built-in signals", inc.file),
                )),
            }
        }
        diags.extend(table.extend_from(d));
        Ok((table, diags))
    }
}
