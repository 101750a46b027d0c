use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// `n` equispaced points on `[a, b]`, endpoints included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let h = (b - a) / (n - 1) as f64;
            (0..n)
                .map(|i| if i + 1 == n { b } else { a + h * i as f64 })
                .collect()
        }
    }
}

/// `n` logarithmically spaced points on `[a, b]`, `0 < a < b`.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    linspace(la, lb, n)
        .into_iter()
        .enumerate()
        .map(|(i, t)| match i {
            0 => a,
            _ if i + 1 == n => b,
            _ => t.exp(),
        })
        .collect()
}

/// `{base^0, base^1, …, base^k}` with `base^k <= max`.
pub fn doubling(max_exponent: u32) -> Vec<f64> {
    (0..=max_exponent).map(|e| 2f64.powi(e as i32)).collect()
}

/// `{1, 1/2, …, 2^-k}`.
pub fn halving(max_exponent: u32) -> Vec<f64> {
    (0..=max_exponent).map(|e| 2f64.powi(-(e as i32))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Lin,
    Log,
}

/// Textual grid descriptor `lin:a:b:n` or `log:a:b:n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GridSpec {
    pub spacing: Spacing,
    pub start: f64,
    pub end: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn lin(start: f64, end: f64, n: usize) -> Self {
        GridSpec { spacing: Spacing::Lin, start, end, n }
    }

    pub fn log(start: f64, end: f64, n: usize) -> Self {
        GridSpec { spacing: Spacing::Log, start, end, n }
    }

    pub fn points(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Lin => linspace(self.start, self.end, self.n),
            Spacing::Log => logspace(self.start, self.end, self.n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("grid", "needs at least one point"));
        }
        if !(self.start.is_finite() && self.end.is_finite()) || self.end < self.start {
            return Err(invalid("grid", format!("bad range [{}, {}]", self.start, self.end)));
        }
        if self.spacing == Spacing::Log && self.start <= 0.0 {
            return Err(invalid("grid", "log spacing needs a positive start"));
        }
        Ok(())
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 {
            return Err(invalid("grid", format!("expected kind:start:end:n, got `{s}`")));
        }
        let spacing = match parts[0] {
            "lin" => Spacing::Lin,
            "log" => Spacing::Log,
            other => return Err(invalid("grid", format!("unknown spacing `{other}`"))),
        };
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| invalid("grid", format!("`{t}`: {e}")))
        };
        let n = parts[3]
            .trim()
            .parse::<usize>()
            .map_err(|e| invalid("grid", format!("`{}`: {e}", parts[3])))?;
        let spec = GridSpec { spacing, start: num(parts[1])?, end: num(parts[2])?, n };
        spec.validate()?;
        Ok(spec)
    }
}

impl TryFrom<String> for GridSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GridSpec> for String {
    fn from(g: GridSpec) -> String {
        g.to_string()
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.spacing {
            Spacing::Lin => "lin",
            Spacing::Log => "log",
        };
        write!(f, "{kind}:{}:{}:{}", self.start, self.end, self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_hit_endpoints() {
        let g = logspace(1e-3, 1e5, 1000);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[999], 1e5);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(linspace(-1.0, 1.0, 3), vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn spec_round_trip() {
        let g: GridSpec = "log:0.5:100:40".parse().unwrap();
        assert_eq!(g, GridSpec::log(0.5, 100.0, 40));
        assert_eq!(g.to_string().parse::<GridSpec>().unwrap(), g);
        assert!("log:0:1:3".parse::<GridSpec>().is_err());
        assert!("cube:0:1:3".parse::<GridSpec>().is_err());
    }
}
