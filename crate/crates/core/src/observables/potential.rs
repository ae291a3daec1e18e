use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{least_squares, line_fit};

/// One entry `⟨W(R, T)⟩` of a Wilson loop table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilsonCell {
    pub r: u32,
    pub t: u32,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PotentialPoint {
    pub r: u32,
    /// Slope of `-log|W|` in `T`; `None` when fewer than two cells survive.
    pub v: Option<f64>,
    pub err: f64,
    pub t_used: Vec<u32>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CreutzRatio {
    pub r: u32,
    pub t: u32,
    pub chi: f64,
    pub err: f64,
}

/// `-log|W| ≈ c + p (R + T) + σ R T`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AreaFit {
    pub constant: f64,
    pub perimeter: f64,
    pub sigma: f64,
    pub constant_err: f64,
    pub perimeter_err: f64,
    pub sigma_err: f64,
    pub chi2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PotentialFit {
    pub potential: Vec<PotentialPoint>,
    pub creutz: Vec<CreutzRatio>,
    pub area: Option<AreaFit>,
    /// Cells dropped because `|W|` is not positive within one standard error.
    pub excluded: Vec<(u32, u32)>,
}

pub fn potential_extract(table: &[WilsonCell]) -> Result<PotentialFit> {
    let mut rows: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for c in table {
        if c.r == 0 || c.t == 0 || !c.mean.is_finite() || !(c.stderr >= 0.0) {
            return Err(Error::InvalidSpec(format!("bad table cell {c:?}")));
        }
        rows.entry(c.r).or_default().push(c.t);
    }
    if let Some((r, ts)) = rows.iter().find(|(_, ts)| ts.len() < 3) {
        return Err(Error::InvalidSpec(format!("R = {r} has {} T values, need at least 3", ts.len())));
    }
    let mut excluded = Vec::new();
    let mut good: BTreeMap<(u32, u32), (f64, f64)> = BTreeMap::new();
    for c in table {
        let w = c.mean.abs();
        if c.mean <= 0.0 || w <= c.stderr {
            excluded.push((c.r, c.t));
        } else {
            good.insert((c.r, c.t), (-w.ln(), c.stderr / w));
        }
    }
    let weights = |s: &[f64]| s.iter().all(|&v| v > 0.0).then_some(s.to_vec());

    let potential = rows
        .keys()
        .map(|&r| {
            let cells: Vec<(u32, f64, f64)> = good.range((r, 0)..=(r, u32::MAX)).map(|(&(_, t), &(y, s))| (t, y, s)).collect();
            let t_used: Vec<u32> = cells.iter().map(|c| c.0).collect();
            if cells.len() < 2 {
                return PotentialPoint { r, v: None, err: f64::NAN, t_used };
            }
            let x: Vec<f64> = cells.iter().map(|c| c.0 as f64).collect();
            let y: Vec<f64> = cells.iter().map(|c| c.1).collect();
            let s: Vec<f64> = cells.iter().map(|c| c.2).collect();
            match line_fit(&x, &y, weights(&s).as_deref()) {
                Ok(f) => PotentialPoint { r, v: Some(f.coeffs[1]), err: f.errors[1], t_used },
                Err(_) => PotentialPoint { r, v: None, err: f64::NAN, t_used },
            }
        })
        .collect();

    let creutz = good
        .keys()
        .filter(|&&(r, t)| r >= 2 && t >= 2)
        .filter_map(|&(r, t)| {
            let a = good.get(&(r, t))?;
            let b = good.get(&(r - 1, t - 1))?;
            let c = good.get(&(r, t - 1))?;
            let d = good.get(&(r - 1, t))?;
            // Entries hold -log W, so the ratio is a signed sum.
            let chi = a.0 + b.0 - c.0 - d.0;
            let err = (a.1 * a.1 + b.1 * b.1 + c.1 * c.1 + d.1 * d.1).sqrt();
            Some(CreutzRatio { r, t, chi, err })
        })
        .collect();

    let area = (good.len() >= 3)
        .then(|| {
            let design: Vec<Vec<f64>> = good.keys().map(|&(r, t)| vec![1.0, (r + t) as f64, (r * t) as f64]).collect();
            let y: Vec<f64> = good.values().map(|v| v.0).collect();
            let s: Vec<f64> = good.values().map(|v| v.1).collect();
            let f = least_squares(&design, &y, weights(&s).as_deref()).ok()?;
            Some(AreaFit {
                constant: f.coeffs[0],
                perimeter: f.coeffs[1],
                sigma: f.coeffs[2],
                constant_err: f.errors[0],
                perimeter_err: f.errors[1],
                sigma_err: f.errors[2],
                chi2: f.chi2,
            })
        })
        .flatten();

    Ok(PotentialFit { potential, creutz, area, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(w: impl Fn(u32, u32) -> f64) -> Vec<WilsonCell> {
        (1..=4).flat_map(|r| (1..=4).map(move |t| (r, t))).map(|(r, t)| WilsonCell { r, t, mean: w(r, t), stderr: 0.0 }).collect()
    }

    #[test]
    fn recovers_pure_area_law() {
        let fit = potential_extract(&table(|r, t| (-0.3 * (r * t) as f64).exp())).unwrap();
        let a = fit.area.unwrap();
        assert!((a.sigma - 0.3).abs() < 1e-6 && a.perimeter.abs() < 1e-6);
        for c in &fit.creutz {
            assert!((c.chi - 0.3).abs() < 1e-12);
        }
        for p in &fit.potential {
            assert!((p.v.unwrap() - 0.3 * p.r as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn perimeter_law_has_no_string_tension() {
        let fit = potential_extract(&table(|r, t| (-0.5 * (r + t) as f64).exp())).unwrap();
        assert!(fit.creutz.iter().all(|c| c.chi.abs() < 1e-12));
        assert!(fit.potential.iter().all(|p| (p.v.unwrap() - 0.5).abs() < 1e-10));
        assert!(fit.area.unwrap().sigma.abs() < 1e-8);
    }

    #[test]
    fn nonpositive_cells_are_excluded() {
        let mut t = table(|r, t| (-0.3 * (r * t) as f64).exp());
        for c in t.iter_mut().filter(|c| c.r == 4) {
            c.mean = -0.01;
        }
        t[0].stderr = 1.0;
        let fit = potential_extract(&t).unwrap();
        assert_eq!(fit.excluded.len(), 5);
        assert!(fit.potential.iter().find(|p| p.r == 4).unwrap().v.is_none());
        assert!(potential_extract(&t[..2]).is_err());
    }
}
