//! Flag-string parsers: alpha grids, integer lists, and size pairs.

use anyhow::{bail, ensure, Context, Result};

/// Parses an alpha grid given either as `start:stop:step` (inclusive of the
/// endpoint up to a step-relative tolerance) or as an explicit comma list.
/// The result is sorted, deduplicated, and every value must lie in (0, 1).
pub fn parse_alpha_grid(text: &str) -> Result<Vec<f64>> {
    let trimmed = text.trim();
    ensure!(!trimmed.is_empty(), "the alpha list is empty");
    let mut alphas = if trimmed.contains(':') {
        let parts: Vec<&str> = trimmed.split(':').collect();
        ensure!(
            parts.len() == 3,
            "grid format is start:stop:step, got {trimmed:?}"
        );
        let start: f64 = parts[0].trim().parse().context("bad grid start")?;
        let stop: f64 = parts[1].trim().parse().context("bad grid stop")?;
        let step: f64 = parts[2].trim().parse().context("bad grid step")?;
        ensure!(step > 0.0, "grid step must be positive, got {step}");
        ensure!(stop >= start, "grid stop {stop} is below start {start}");
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let v = start + step * k as f64;
            if v > stop + step * 1e-9 {
                break;
            }
            out.push(v);
            k += 1;
            if k > 1_000_000 {
                bail!("grid has more than a million points");
            }
        }
        out
    } else {
        trimmed
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .with_context(|| format!("bad alpha entry {:?}", s.trim()))
            })
            .collect::<Result<Vec<f64>>>()?
    };
    for &a in &alphas {
        ensure!(
            a > 0.0 && a < 1.0,
            "alpha must lie in (0,1), got {a}"
        );
    }
    alphas.sort_by(|a, b| a.partial_cmp(b).expect("alphas are finite"));
    alphas.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    ensure!(!alphas.is_empty(), "the alpha list is empty");
    Ok(alphas)
}

/// Parses a comma list of positive integers, e.g. `10,20,40,80`.
pub fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    let trimmed = text.trim();
    ensure!(!trimmed.is_empty(), "the list is empty");
    let out = trimmed
        .split(',')
        .map(|s| {
            let v: usize = s
                .trim()
                .parse()
                .with_context(|| format!("bad integer entry {:?}", s.trim()))?;
            ensure!(v >= 1, "list entries must be at least 1, got {v}");
            Ok(v)
        })
        .collect::<Result<Vec<usize>>>()?;
    Ok(out)
}

/// Parses size pairs like `10x6,4x3` into `(alphabet, dimension)` tuples.
pub fn parse_size_pairs(text: &str) -> Result<Vec<(usize, usize)>> {
    let trimmed = text.trim();
    ensure!(!trimmed.is_empty(), "the size list is empty");
    trimmed
        .split(',')
        .map(|pair| {
            let (n, d) = pair
                .trim()
                .split_once(['x', 'X'])
                .with_context(|| format!("size pairs look like 10x6, got {:?}", pair.trim()))?;
            let n: usize = n.trim().parse().context("bad alphabet size")?;
            let d: usize = d.trim().parse().context("bad dimension")?;
            ensure!(n >= 1 && d >= 1, "sizes must be at least 1x1");
            Ok((n, d))
        })
        .collect()
}

/// Parses the stochastic rows of a commuting channel given as
/// `0.9,0.1;0.1,0.9` (rows separated by semicolons).
pub fn parse_stochastic_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    let trimmed = text.trim();
    ensure!(!trimmed.is_empty(), "the row list is empty");
    trimmed
        .split(';')
        .map(|row| {
            row.trim()
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .with_context(|| format!("bad row entry {:?}", s.trim()))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn colon_grid_is_inclusive() {
        let g = parse_alpha_grid("0.1:0.9:0.1").unwrap();
        assert_eq!(g.len(), 9);
        assert!((g[0] - 0.1).abs() <= TOL);
        assert!((g[8] - 0.9).abs() <= TOL);
    }

    #[test]
    fn comma_list_is_sorted_and_deduplicated() {
        let g = parse_alpha_grid("0.5, 0.2, 0.5, 0.8").unwrap();
        assert_eq!(g.len(), 3);
        assert!((g[0] - 0.2).abs() <= TOL);
        assert!((g[2] - 0.8).abs() <= TOL);
    }

    #[test]
    fn out_of_range_alpha_is_rejected() {
        assert!(parse_alpha_grid("1.5").is_err());
        assert!(parse_alpha_grid("0.0,0.5").is_err());
        assert!(parse_alpha_grid("").is_err());
        assert!(parse_alpha_grid("0.9:0.1:0.1").is_err());
    }

    #[test]
    fn single_point_grid() {
        let g = parse_alpha_grid("0.5:0.5:0.1").unwrap();
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn usize_and_size_lists() {
        assert_eq!(parse_usize_list("10,20, 40").unwrap(), vec![10, 20, 40]);
        assert!(parse_usize_list("10,0").is_err());
        assert_eq!(
            parse_size_pairs("10x6, 4x3").unwrap(),
            vec![(10, 6), (4, 3)]
        );
        assert!(parse_size_pairs("10-6").is_err());
    }

    #[test]
    fn stochastic_rows() {
        let rows = parse_stochastic_rows("0.9,0.1;0.1,0.9").unwrap();
        assert_eq!(rows.len(), 2);
        assert!((rows[1][0] - 0.1).abs() <= TOL);
        assert!(parse_stochastic_rows("0.9,oops").is_err());
    }
}
