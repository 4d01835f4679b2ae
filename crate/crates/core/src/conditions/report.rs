use std::fmt;

use crate::P2;

/// Where the worst margin of a check was observed.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Witness {
    pub node: Option<usize>,
    pub x: Option<P2>,
    pub p: Option<P2>,
    pub xi: Option<P2>,
    pub eta: Option<P2>,
    /// Target point, for cost-function checks.
    pub y: Option<P2>,
}

impl Witness {
    pub fn at(x: P2) -> Self {
        Witness {
            x: Some(x),
            ..Default::default()
        }
    }

    pub fn node(node: usize, x: P2) -> Self {
        Witness {
            node: Some(node),
            x: Some(x),
            ..Default::default()
        }
    }

    pub fn with_p(mut self, p: P2) -> Self {
        self.p = Some(p);
        self
    }

    pub fn with_y(mut self, y: P2) -> Self {
        self.y = Some(y);
        self
    }

    pub fn with_dirs(mut self, xi: P2, eta: P2) -> Self {
        self.xi = Some(xi);
        self.eta = Some(eta);
        self
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(n) = self.node {
            parts.push(format!("node={n}"));
        }
        for (label, v) in [
            ("x", self.x),
            ("p", self.p),
            ("xi", self.xi),
            ("eta", self.eta),
            ("y", self.y),
        ] {
            if let Some(v) = v {
                parts.push(format!("{label}=({:.6},{:.6})", v.x, v.y));
            }
        }
        write!(f, "{}", parts.join(" "))
    }
}

/// Outcome of one hypothesis check. Margins are signed so that `≥ 0` passes;
/// `pass ⇔ min_margin ≥ −tolerance`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub name: String,
    pub samples: usize,
    pub min_margin: f64,
    pub tolerance: f64,
    pub witness: Option<Witness>,
    pub pass: bool,
    pub notes: Vec<String>,
    /// Named auxiliary values (e.g. the admissible `δ₀`).
    pub extras: Vec<(String, f64)>,
}

impl ConditionReport {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        ConditionReport {
            name: name.into(),
            samples: 0,
            min_margin: f64::INFINITY,
            tolerance,
            witness: None,
            pass: true,
            notes: Vec::new(),
            extras: Vec::new(),
        }
    }

    /// Records one sampled margin.
    pub fn observe(&mut self, margin: f64, witness: Witness) {
        self.samples += 1;
        if margin < self.min_margin || self.witness.is_none() || margin.is_nan() {
            self.min_margin = margin;
            self.witness = Some(witness);
        }
        self.pass = self.min_margin >= -self.tolerance;
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn extra(&mut self, key: impl Into<String>, value: f64) {
        self.extras.push((key.into(), value));
    }

    pub fn get_extra(&self, key: &str) -> Option<f64> {
        self.extras.iter().find(|(k, _)| k == key).map(|&(_, v)| v)
    }

    /// Forces failure, e.g. when an evaluation error stops the check.
    pub fn fail(&mut self, note: impl Into<String>) {
        self.pass = false;
        self.notes.push(note.into());
    }

    pub const CSV_HEADER: &'static str = "name,samples,min_margin,witness,pass";

    /// The witness column is quoted since it contains commas.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:e},\"{}\",{}",
            self.name,
            self.samples,
            self.min_margin,
            self.witness.map(|w| w.to_string()).unwrap_or_default(),
            self.pass
        )
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<28} {} min margin {:+.6e} (tol {:.0e}, {} samples)",
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.min_margin,
            self.tolerance,
            self.samples
        )?;
        if let Some(w) = self
            .witness
            .map(|w| w.to_string())
            .filter(|w| !w.is_empty())
        {
            write!(f, " at {w}")?;
        }
        for (k, v) in &self.extras {
            write!(f, "; {k} = {v:.6e}")?;
        }
        for n in &self.notes {
            write!(f, "; {n}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracks_minimum_and_tolerance() {
        let mut r = ConditionReport::new("demo", 1e-6);
        r.observe(0.5, Witness::at(P2::new(0.0, 0.0)));
        r.observe(-1e-7, Witness::at(P2::new(1.0, 0.0)));
        assert!(r.pass);
        assert_eq!(r.witness.unwrap().x, Some(P2::new(1.0, 0.0)));
        r.observe(-1e-3, Witness::at(P2::new(2.0, 0.0)));
        assert!(!r.pass);
        assert_eq!(r.samples, 3);
        assert!(r
            .csv_row()
            .starts_with("demo,3,-1e-3,\"x=(2.000000,0.000000)\","));
    }
}
