use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Outcome of one outer fold.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldResult {
    pub repetition: usize,
    pub fold: usize,
    /// `None` when training diverged and the fold was dropped.
    pub accuracy: Option<f64>,
    /// Selected hyperparameters as `key=value` items separated by `;`.
    pub selected: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub dataset: String,
    pub method: String,
    pub folds: Vec<FoldResult>,
    pub wall_clock_secs: f64,
    pub config_echo: String,
}

/// Which spread [`Report::std`] measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spread {
    /// Standard deviation of the per-repetition mean accuracies.
    RepetitionMeans,
    /// Only one repetition: standard deviation over its folds.
    Folds,
}

impl std::fmt::Display for Spread {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Spread::RepetitionMeans => "std over repetition means",
            Spread::Folds => "std over folds (one repetition)",
        })
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

impl Report {
    pub fn accuracies(&self) -> Vec<f64> {
        self.folds.iter().filter_map(|f| f.accuracy).collect()
    }

    pub fn repetitions(&self) -> usize {
        self.folds.iter().map(|f| f.repetition + 1).max().unwrap_or(0)
    }

    pub fn failed_folds(&self) -> usize {
        self.folds.iter().filter(|f| f.accuracy.is_none()).count()
    }

    /// Mean accuracy over every completed fold, in percent.
    pub fn mean(&self) -> f64 {
        100.0 * mean(&self.accuracies())
    }

    pub fn spread(&self) -> Spread {
        if self.repetitions() > 1 {
            Spread::RepetitionMeans
        } else {
            Spread::Folds
        }
    }

    /// Standard deviation in percent, see [`Report::spread`].
    pub fn std(&self) -> f64 {
        match self.spread() {
            Spread::Folds => 100.0 * std_dev(&self.accuracies()),
            Spread::RepetitionMeans => {
                let means: Vec<f64> = (0..self.repetitions())
                    .filter_map(|r| {
                        let accs: Vec<f64> = self
                            .folds
                            .iter()
                            .filter(|f| f.repetition == r)
                            .filter_map(|f| f.accuracy)
                            .collect();
                        (!accs.is_empty()).then(|| mean(&accs))
                    })
                    .collect();
                100.0 * std_dev(&means)
            }
        }
    }

    /// True when both reports hold bitwise-identical fold results.
    pub fn same_results(&self, other: &Report) -> bool {
        self.folds.len() == other.folds.len()
            && self.folds.iter().zip(&other.folds).all(|(a, b)| {
                a.repetition == b.repetition
                    && a.fold == b.fold
                    && a.selected == b.selected
                    && a.accuracy.map(f64::to_bits) == b.accuracy.map(f64::to_bits)
            })
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("repetition,fold,accuracy,selected\n");
        for f in &self.folds {
            let acc = f.accuracy.map_or("failed".to_string(), |a| format!("{a:?}"));
            writeln!(out, "{},{},{acc},{}", f.repetition, f.fold, f.selected).unwrap();
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        writeln!(out, "dataset: {}", self.dataset).unwrap();
        writeln!(out, "method: {}", self.method).unwrap();
        writeln!(
            out,
            "accuracy: {:.2} ± {:.2} ({})",
            self.mean(),
            self.std(),
            self.spread()
        )
        .unwrap();
        writeln!(out, "folds: {} ({} failed)", self.folds.len(), self.failed_folds()).unwrap();
        writeln!(out, "repetitions: {}", self.repetitions()).unwrap();
        writeln!(out, "wall clock: {:.1} s", self.wall_clock_secs).unwrap();
        out
    }

    /// Writes `report.csv`, `report.txt` and `config.echo` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, body) in [
            ("report.csv", self.csv()),
            ("report.txt", self.summary()),
            ("config.echo", self.config_echo.clone()),
        ] {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    /// Reads a report written by [`Report::write`].
    pub fn load(dir: impl AsRef<Path>) -> Result<Report> {
        let dir = dir.as_ref();
        let read = |name: &str| {
            let path = dir.join(name);
            if !path.exists() {
                return Err(Error::MissingFile { path });
            }
            fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
        };
        let (csv, txt, echo) = (read("report.csv")?, read("report.txt")?, read("config.echo")?);
        let field = |key: &str| {
            txt.lines()
                .find_map(|l| l.strip_prefix(key).map(str::trim))
                .unwrap_or_default()
                .to_string()
        };
        let bad = |line: usize, message: &str| Error::Format {
            file: dir.join("report.csv").display().to_string(),
            line,
            message: message.to_string(),
        };
        let mut folds = Vec::new();
        for (i, line) in csv.lines().enumerate().skip(1) {
            let parts: Vec<&str> = line.splitn(4, ',').collect();
            if parts.len() != 4 {
                return Err(bad(i + 1, "expected 4 columns"));
            }
            let num = |s: &str| s.parse::<usize>().map_err(|_| bad(i + 1, "bad index"));
            let accuracy = match parts[2] {
                "failed" => None,
                s => Some(s.parse::<f64>().map_err(|_| bad(i + 1, "bad accuracy"))?),
            };
            folds.push(FoldResult {
                repetition: num(parts[0])?,
                fold: num(parts[1])?,
                accuracy,
                selected: parts[3].to_string(),
            });
        }
        let wall = field("wall clock:");
        Ok(Report {
            dataset: field("dataset:"),
            method: field("method:"),
            folds,
            wall_clock_secs: wall.trim_end_matches(" s").parse().unwrap_or(0.0),
            config_echo: echo,
        })
    }
}

/// Mean ± std table with one row per method and one column per dataset; the
/// best mean in each column is marked with `*`.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub methods: Vec<String>,
    pub datasets: Vec<String>,
    /// `cells[m][d]` is `(mean, std, spread)` when that pair was reported.
    pub cells: Vec<Vec<Option<(f64, f64, Spread)>>>,
}

pub fn aggregate(reports: &[Report]) -> Result<Comparison> {
    if reports.is_empty() {
        return Err(Error::InvalidArgument("no reports to aggregate".into()));
    }
    let mut methods: Vec<String> = Vec::new();
    let mut datasets: Vec<String> = Vec::new();
    for r in reports {
        if !methods.contains(&r.method) {
            methods.push(r.method.clone());
        }
        if !datasets.contains(&r.dataset) {
            datasets.push(r.dataset.clone());
        }
    }
    let mut cells = vec![vec![None; datasets.len()]; methods.len()];
    for r in reports {
        let m = methods.iter().position(|x| *x == r.method).unwrap();
        let d = datasets.iter().position(|x| *x == r.dataset).unwrap();
        cells[m][d] = Some((r.mean(), r.std(), r.spread()));
    }
    Ok(Comparison {
        methods,
        datasets,
        cells,
    })
}

impl Comparison {
    /// Row index of the best mean in column `d`; ties go to the first row.
    pub fn best(&self, d: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (m, row) in self.cells.iter().enumerate() {
            if let Some((mean, _, _)) = row[d] {
                if best.is_none_or(|(_, b)| mean > b) {
                    best = Some((m, mean));
                }
            }
        }
        best.map(|(m, _)| m)
    }

    pub fn text(&self) -> String {
        let cell = |m: usize, d: usize| match self.cells[m][d] {
            None => "-".to_string(),
            Some((mean, std, spread)) => {
                let mark = if self.best(d) == Some(m) { "*" } else { "" };
                let fold_note = if spread == Spread::Folds { " (f)" } else { "" };
                format!("{mean:.2} ± {std:.2}{fold_note}{mark}")
            }
        };
        let mut rows = vec![std::iter::once("method".to_string())
            .chain(self.datasets.iter().cloned())
            .collect::<Vec<_>>()];
        for m in 0..self.methods.len() {
            let mut row = vec![self.methods[m].clone()];
            row.extend((0..self.datasets.len()).map(|d| cell(m, d)));
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap())
            .collect();
        let mut out = String::new();
        for row in rows {
            let padded: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(s, w)| format!("{s}{}", " ".repeat(w - s.chars().count())))
                .collect();
            writeln!(out, "{}", padded.join("  ").trim_end()).unwrap();
        }
        out.push_str("* best in column; (f) std over folds of a single repetition, otherwise over repetition means\n");
        out
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("method,dataset,mean,std,spread,best\n");
        for (m, method) in self.methods.iter().enumerate() {
            for (d, dataset) in self.datasets.iter().enumerate() {
                if let Some((mean, std, spread)) = self.cells[m][d] {
                    let spread = match spread {
                        Spread::RepetitionMeans => "repetitions",
                        Spread::Folds => "folds",
                    };
                    writeln!(
                        out,
                        "{method},{dataset},{mean:.4},{std:.4},{spread},{}",
                        self.best(d) == Some(m)
                    )
                    .unwrap();
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(method: &str, dataset: &str, accs: &[(usize, f64)]) -> Report {
        Report {
            dataset: dataset.into(),
            method: method.into(),
            folds: accs
                .iter()
                .enumerate()
                .map(|(i, &(r, a))| FoldResult {
                    repetition: r,
                    fold: i % 10,
                    accuracy: Some(a),
                    selected: "h=2;C=1".into(),
                })
                .collect(),
            wall_clock_secs: 1.5,
            config_echo: "seed = 0\n".into(),
        }
    }

    #[test]
    fn single_repetition_uses_fold_spread() {
        let r = report("dgcnn", "MUTAG", &[(0, 0.8), (0, 0.9), (0, 1.0), (0, 0.9)]);
        assert_eq!(r.spread(), Spread::Folds);
        assert!((r.mean() - 90.0).abs() < 1e-12);
        assert!((r.std() - 100.0 * (0.005f64).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn repetitions_use_spread_of_means() {
        let r = report("dgcnn", "MUTAG", &[(0, 0.8), (0, 1.0), (1, 0.6), (1, 0.6)]);
        assert_eq!(r.spread(), Spread::RepetitionMeans);
        assert!((r.mean() - 75.0).abs() < 1e-12);
        assert!((r.std() - 15.0).abs() < 1e-9);
    }

    #[test]
    fn failed_folds_are_excluded() {
        let mut r = report("dgcnn", "MUTAG", &[(0, 0.5), (0, 1.0)]);
        r.folds[1].accuracy = None;
        assert_eq!(r.failed_folds(), 1);
        assert_eq!(r.mean(), 50.0);
    }

    #[test]
    fn write_and_load() {
        let mut r = report("kernel_svm", "MUTAG", &[(0, 0.1 + 0.2), (0, 2.0 / 3.0)]);
        r.folds[0].accuracy = None;
        let dir = tempfile::tempdir().unwrap();
        r.write(dir.path()).unwrap();
        let back = Report::load(dir.path()).unwrap();
        assert!(back.same_results(&r));
        assert_eq!(back.dataset, "MUTAG");
        assert_eq!(back.method, "kernel_svm");
        assert_eq!(back.config_echo, r.config_echo);
        assert!(matches!(
            Report::load(dir.path().join("nope")),
            Err(Error::MissingFile { .. })
        ));
    }

    #[test]
    fn comparison_tables() {
        let a = report("dgcnn", "MUTAG", &[(0, 0.8)]);
        let table = aggregate(std::slice::from_ref(&a)).unwrap();
        assert_eq!(table.methods.len(), 1);
        assert_eq!(table.text().lines().count(), 3);

        let b = report("pretrained_dgcnn", "MUTAG", &[(0, 0.9)]);
        let table = aggregate(&[a, b]).unwrap();
        assert_eq!(table.methods, vec!["dgcnn", "pretrained_dgcnn"]);
        assert_eq!(table.best(0), Some(1));
        assert!(table.text().contains("90.00 ± 0.00 (f)*"));
        assert!(table.csv().contains("pretrained_dgcnn,MUTAG,90.0000,0.0000,folds,true"));
        assert!(aggregate(&[]).is_err());
    }
}
