//! Attack success rate, per-episode aggregates, CSV export and SVG curves.

mod svg;

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::game::{EpisodeRecord, Outcome, UserKind};

pub use svg::{render_curves, render_svg, Series};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("invalid counts: {n_success} successes out of {n_total}")]
    InvalidCounts { n_success: usize, n_total: usize },
    #[error("no records to aggregate")]
    EmptyInput,
    #[error("{path}: line {line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Successful attackers over all attackers.
pub fn asr(n_success: usize, n_total: usize) -> Result<f64, MetricsError> {
    if n_total == 0 || n_success > n_total {
        return Err(MetricsError::InvalidCounts { n_success, n_total });
    }
    Ok(n_success as f64 / n_total as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStats {
    pub episode: usize,
    pub algo: String,
    pub seed: u64,
    pub n_success: usize,
    pub n_attackers: usize,
    pub asr: f64,
    pub mean_dr: f64,
    pub mean_ar: f64,
}

/// Statistics over the attacker rollouts among `records`; benign sessions
/// are ignored.
pub fn aggregate(records: &[EpisodeRecord], episode: usize, algo: &str, seed: u64) -> Result<EpisodeStats, MetricsError> {
    let attackers: Vec<&EpisodeRecord> = records.iter().filter(|r| r.user == UserKind::Attacker).collect();
    if attackers.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = attackers.len();
    let n_success = attackers.iter().filter(|r| r.outcome == Outcome::Success).count();
    let mut dr: Vec<f64> = attackers.iter().map(|r| r.total_dr()).collect();
    let mut ar: Vec<f64> = attackers.iter().map(|r| r.total_ar()).collect();
    Ok(EpisodeStats {
        episode,
        algo: algo.to_string(),
        seed,
        n_success,
        n_attackers: n,
        asr: asr(n_success, n)?,
        mean_dr: ordered_mean(&mut dr),
        mean_ar: ordered_mean(&mut ar),
    })
}

/// Mean of the sorted values, so the result does not depend on input order.
fn ordered_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

pub const CSV_HEADER: &str = "episode,algo,seed,asr,mean_dr,mean_ar";

/// One CSV row, at the declared precision.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub episode: usize,
    pub algo: String,
    pub seed: u64,
    pub asr: f64,
    pub mean_dr: f64,
    pub mean_ar: f64,
}

pub fn write_csv<W: Write>(stats: &[EpisodeStats], mut w: W) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for s in stats {
        writeln!(w, "{},{},{},{:.6},{:.6},{:.6}", s.episode, s.algo, s.seed, s.asr, s.mean_dr, s.mean_ar)?;
    }
    Ok(())
}

pub fn export_csv(stats: &[EpisodeStats], path: &Path) -> Result<(), MetricsError> {
    let mut buf = Vec::new();
    write_csv(stats, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn parse_csv(text: &str, origin: &str) -> Result<Vec<CsvRow>, MetricsError> {
    let err = |line: usize, message: String| MetricsError::Parse { path: origin.to_string(), line, message };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(err(1, format!("expected header `{CSV_HEADER}`"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 6 {
            return Err(err(i + 1, format!("expected 6 fields, found {}", f.len())));
        }
        let num = |k: usize| f[k].parse::<f64>().map_err(|e| err(i + 1, format!("field {}: {e}", k + 1)));
        rows.push(CsvRow {
            episode: f[0].parse().map_err(|e| err(i + 1, format!("episode: {e}")))?,
            algo: f[1].to_string(),
            seed: f[2].parse().map_err(|e| err(i + 1, format!("seed: {e}")))?,
            asr: num(3)?,
            mean_dr: num(4)?,
            mean_ar: num(5)?,
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>, MetricsError> {
    parse_csv(&fs::read_to_string(path)?, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacker::{IdleUser, ScriptedAttacker};
    use crate::game::{run_episode, Game, NoOpDefender};
    use crate::world::Scenario;

    #[test]
    fn asr_values() {
        assert_eq!(asr(0, 100).unwrap(), 0.0);
        assert_eq!(asr(100, 100).unwrap(), 1.0);
        assert_eq!(asr(30, 100).unwrap(), 0.30);
        assert!(asr(1, 0).is_err());
        assert!(asr(5, 4).is_err());
    }

    #[test]
    fn single_record_stats() {
        let scn = Scenario::bundled();
        let game = Game::new(&scn);
        let rec = run_episode(&game, &scn.initial, &mut ScriptedAttacker::new(&scn), &mut NoOpDefender).unwrap();
        let s = aggregate(std::slice::from_ref(&rec), 0, "x", 1).unwrap();
        assert_eq!((s.n_success, s.n_attackers, s.asr), (1, 1, 1.0));
        assert_eq!(s.mean_dr, rec.total_dr());
        assert_eq!(s.mean_ar, rec.total_ar());
    }

    #[test]
    fn timeouts_carry_the_no_harvest_terminal() {
        let scn = Scenario::bundled();
        let game = Game::new(&scn);
        let recs: Vec<_> = (0..3)
            .map(|_| {
                run_episode(&game, &scn.initial, &mut IdleUser(UserKind::Attacker), &mut NoOpDefender).unwrap()
            })
            .collect();
        let s = aggregate(&recs, 0, "x", 1).unwrap();
        assert_eq!(s.asr, 0.0);
        assert_eq!(s.mean_ar, -5.0);
        assert_eq!(s.mean_ar + s.mean_dr, -5.0);
        assert!(matches!(aggregate(&[], 0, "x", 1), Err(MetricsError::EmptyInput)));
    }

    #[test]
    fn csv_shapes() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\n"));
        let stats: Vec<EpisodeStats> = (0..100)
            .map(|e| EpisodeStats {
                episode: e,
                algo: "dqn".into(),
                seed: 3,
                n_success: e % 7,
                n_attackers: 7,
                asr: (e % 7) as f64 / 7.0,
                mean_dr: -1.25 * e as f64,
                mean_ar: 0.5,
            })
            .collect();
        let mut buf = Vec::new();
        write_csv(&stats, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 101);
        let rows = parse_csv(&text, "mem").unwrap();
        assert_eq!(rows.len(), 100);
        assert_eq!(rows[8].mean_dr, -10.0);
        assert!(parse_csv("nope\n", "mem").is_err());
    }
}
