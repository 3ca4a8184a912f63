//! Two-sample data model, CSV ingestion, cross-fitting fold plans and the
//! eigenvector sign convention shared by every downstream estimator.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Control (`x`) and treatment (`z`) samples, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    z: Array2<f64>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, z: Array2<f64>, feature_names: Option<Vec<String>>) -> Result<Self> {
        let p = x.ncols();
        if z.ncols() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: z.ncols(),
            });
        }
        if p == 0 {
            return Err(Error::invalid("dataset must have at least one feature"));
        }
        if x.nrows() < 2 || z.nrows() < 2 {
            return Err(Error::invalid(format!(
                "each group needs at least 2 samples (control has {}, treatment has {})",
                x.nrows(),
                z.nrows()
            )));
        }
        if let Some(names) = &feature_names {
            if names.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: names.len(),
                });
            }
        }
        for (label, m) in [("control", &x), ("treatment", &z)] {
            if let Some(((i, j), v)) = m.indexed_iter().find(|(_, v)| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "{label} sample {i}, feature {j} is not finite ({v})"
                )));
            }
        }
        Ok(Self {
            x,
            z,
            feature_names,
        })
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn z(&self) -> &Array2<f64> {
        &self.z
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_x(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_z(&self) -> usize {
        self.z.nrows()
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Name of feature `j`, falling back to `f{j+1}` for unnamed data.
    pub fn feature_name(&self, j: usize) -> String {
        match &self.feature_names {
            Some(names) => names[j].clone(),
            None => format!("f{}", j + 1),
        }
    }

    /// Rows of `x` and `z` selected by index lists.
    pub fn subset(&self, x_rows: &[usize], z_rows: &[usize]) -> (Array2<f64>, Array2<f64>) {
        (
            self.x.select(Axis(0), x_rows),
            self.z.select(Axis(0), z_rows),
        )
    }
}

/// Column layout of a two-group CSV file.
#[derive(Debug, Clone)]
pub struct CsvLayout {
    pub group_column: String,
    pub control_label: String,
    pub treatment_label: String,
}

impl CsvLayout {
    pub fn new(group_column: &str, control_label: &str, treatment_label: &str) -> Self {
        Self {
            group_column: group_column.to_string(),
            control_label: control_label.to_string(),
            treatment_label: treatment_label.to_string(),
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, layout: &CsvLayout) -> Result<Dataset> {
    read_csv(File::open(path)?, layout)
}

pub fn read_csv<R: Read>(reader: R, layout: &CsvLayout) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let group_idx = headers
        .iter()
        .position(|h| h == layout.group_column)
        .ok_or_else(|| Error::Parse {
            row: 0,
            column: layout.group_column.clone(),
            message: format!(
                "group column not found in header ({})",
                headers.iter().collect::<Vec<_>>().join(", ")
            ),
        })?;
    let feature_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != group_idx)
        .map(|(i, h)| (i, h.to_string()))
        .collect();
    let p = feature_cols.len();

    let mut x_vals = Vec::new();
    let mut z_vals = Vec::new();
    let (mut n_x, mut n_z) = (0usize, 0usize);
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record?;
        let label = record.get(group_idx).unwrap_or("").trim();
        let target = if label == layout.control_label {
            n_x += 1;
            &mut x_vals
        } else if label == layout.treatment_label {
            n_z += 1;
            &mut z_vals
        } else {
            return Err(Error::Parse {
                row,
                column: layout.group_column.clone(),
                message: format!(
                    "unexpected group label '{label}' (expected '{}' or '{}')",
                    layout.control_label, layout.treatment_label
                ),
            });
        };
        for (col, name) in &feature_cols {
            let cell = record.get(*col).unwrap_or("").trim();
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: name.clone(),
                message: format!("non-numeric value '{cell}'"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: name.clone(),
                    message: format!("non-finite value '{cell}'"),
                });
            }
            target.push(value);
        }
    }
    for (label, n) in [(&layout.control_label, n_x), (&layout.treatment_label, n_z)] {
        if n < 2 {
            return Err(Error::Parse {
                row: 0,
                column: layout.group_column.clone(),
                message: format!("group '{label}' has {n} rows; at least 2 are required"),
            });
        }
    }
    let x = Array2::from_shape_vec((n_x, p), x_vals).map_err(|e| Error::invalid(e.to_string()))?;
    let z = Array2::from_shape_vec((n_z, p), z_vals).map_err(|e| Error::invalid(e.to_string()))?;
    Dataset::new(x, z, Some(feature_cols.into_iter().map(|(_, n)| n).collect()))
}

pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>, layout: &CsvLayout) -> Result<()> {
    let mut file = File::create(path)?;
    write_csv_to(dataset, &mut file, layout)?;
    file.flush()?;
    Ok(())
}

/// Writes control rows then treatment rows. Floats use Rust's shortest
/// round-trip formatting, so reading the file back is bit-exact.
pub fn write_csv_to<W: Write>(dataset: &Dataset, writer: W, layout: &CsvLayout) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec![layout.group_column.clone()];
    header.extend((0..dataset.p()).map(|j| dataset.feature_name(j)));
    wtr.write_record(&header)?;
    for (label, m) in [
        (&layout.control_label, dataset.x()),
        (&layout.treatment_label, dataset.z()),
    ] {
        for row in m.rows() {
            let mut rec = Vec::with_capacity(row.len() + 1);
            rec.push(label.clone());
            rec.extend(row.iter().map(|v| v.to_string()));
            wtr.write_record(&rec)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Deterministic M-way partition of both groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    m_folds: usize,
    x_assignment: Vec<usize>,
    z_assignment: Vec<usize>,
    seed: u64,
}

impl FoldPlan {
    /// Plan from explicit fold labels in `0..m`; every fold needs at least
    /// one sample of each group.
    pub fn from_assignments(m: usize, x_assignment: Vec<usize>, z_assignment: Vec<usize>) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid(format!("need at least 2 folds, got {m}")));
        }
        for (name, a) in [("control", &x_assignment), ("treatment", &z_assignment)] {
            if let Some(f) = a.iter().find(|&&f| f >= m) {
                return Err(Error::invalid(format!("{name} fold label {f} out of range for {m} folds")));
            }
            if let Some(f) = (0..m).find(|f| !a.contains(f)) {
                return Err(Error::invalid(format!("fold {f} has no {name} samples")));
            }
        }
        Ok(Self {
            m_folds: m,
            x_assignment,
            z_assignment,
            seed: 0,
        })
    }

    pub fn m_folds(&self) -> usize {
        self.m_folds
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn x_assignment(&self) -> &[usize] {
        &self.x_assignment
    }

    pub fn z_assignment(&self) -> &[usize] {
        &self.z_assignment
    }

    /// Indices of control samples in fold `m`.
    pub fn x_in(&self, m: usize) -> Vec<usize> {
        members(&self.x_assignment, |f| f == m)
    }

    pub fn z_in(&self, m: usize) -> Vec<usize> {
        members(&self.z_assignment, |f| f == m)
    }

    /// Indices of control samples outside fold `m`.
    pub fn x_out(&self, m: usize) -> Vec<usize> {
        members(&self.x_assignment, |f| f != m)
    }

    pub fn z_out(&self, m: usize) -> Vec<usize> {
        members(&self.z_assignment, |f| f != m)
    }

    pub fn check_compatible(&self, dataset: &Dataset) -> Result<()> {
        if self.x_assignment.len() != dataset.n_x() || self.z_assignment.len() != dataset.n_z() {
            return Err(Error::invalid(format!(
                "fold plan built for ({}, {}) samples but dataset has ({}, {})",
                self.x_assignment.len(),
                self.z_assignment.len(),
                dataset.n_x(),
                dataset.n_z()
            )));
        }
        Ok(())
    }
}

fn members(assignment: &[usize], keep: impl Fn(usize) -> bool) -> Vec<usize> {
    assignment
        .iter()
        .enumerate()
        .filter(|(_, &f)| keep(f))
        .map(|(i, _)| i)
        .collect()
}

/// Seeded shuffle then round-robin, each group on its own ChaCha8 stream so
/// that the control assignment does not depend on the treatment count.
pub fn make_folds(n_x: usize, n_z: usize, m: usize, seed: u64) -> Result<FoldPlan> {
    if m < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {m}")));
    }
    if m > n_x.min(n_z) {
        return Err(Error::invalid(format!(
            "{m} folds exceed the smaller group size {} (a fold would have an empty group)",
            n_x.min(n_z)
        )));
    }
    let assign = |n: usize, stream: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut out = vec![0; n];
        for (pos, &idx) in order.iter().enumerate() {
            out[idx] = pos % m;
        }
        out
    };
    Ok(FoldPlan {
        m_folds: m,
        x_assignment: assign(n_x, 0),
        z_assignment: assign(n_z, 1),
        seed,
    })
}

/// Where a projection direction came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionOrigin {
    /// k-th principal component (1-based).
    Pc(usize),
    Classifier,
    Anchored,
    User,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    weights: Array1<f64>,
    origin: DirectionOrigin,
}

impl Direction {
    pub fn new(weights: Array1<f64>, origin: DirectionOrigin) -> Result<Self> {
        if let Some(v) = weights.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("direction has a non-finite weight ({v})")));
        }
        if let DirectionOrigin::Pc(_) = origin {
            let norm = weights.dot(&weights).sqrt();
            if (norm - 1.0).abs() > 1e-8 {
                return Err(Error::invalid(format!(
                    "principal component direction must have unit norm, got {norm}"
                )));
            }
        }
        Ok(Self { weights, origin })
    }

    pub fn user(weights: Array1<f64>) -> Result<Self> {
        Self::new(weights, DirectionOrigin::User)
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn view(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }

    pub fn origin(&self) -> DirectionOrigin {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.weights.dot(&self.weights).sqrt()
    }

    pub fn nonzeros(&self) -> usize {
        self.weights.iter().filter(|w| **w != 0.0).count()
    }

    pub fn negated(&self) -> Self {
        Self {
            weights: -&self.weights,
            origin: self.origin,
        }
    }

    pub fn with_origin(mut self, origin: DirectionOrigin) -> Self {
        self.origin = origin;
        self
    }

    pub fn into_weights(self) -> Array1<f64> {
        self.weights
    }
}

/// Flips `candidate` when its inner product with `reference` is negative. An
/// exactly zero inner product leaves it unchanged.
pub fn align_sign(reference: &Direction, candidate: &Direction) -> Result<Direction> {
    if reference.len() != candidate.len() {
        return Err(Error::DimensionMismatch {
            expected: reference.len(),
            found: candidate.len(),
        });
    }
    if reference.weights.dot(&candidate.weights) < 0.0 {
        Ok(candidate.negated())
    } else {
        Ok(candidate.clone())
    }
}

/// Reads a two-column `feature_name,weight` file. When `feature_names` is
/// given, weights are matched by name; otherwise rows are taken in order.
pub fn load_direction_csv(path: impl AsRef<Path>, feature_names: Option<&[String]>, p: usize) -> Result<Direction> {
    read_direction_csv(File::open(path)?, feature_names, p)
}

pub fn read_direction_csv<R: Read>(reader: R, feature_names: Option<&[String]>, p: usize) -> Result<Direction> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut entries = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let name = record.get(0).unwrap_or("").trim().to_string();
        let cell = record.get(1).unwrap_or("").trim();
        let w: f64 = cell.parse().map_err(|_| Error::Parse {
            row,
            column: "weight".into(),
            message: format!("non-numeric value '{cell}'"),
        })?;
        if !w.is_finite() {
            return Err(Error::Parse {
                row,
                column: "weight".into(),
                message: format!("non-finite value '{cell}'"),
            });
        }
        entries.push((name, w));
    }
    if entries.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: entries.len(),
        });
    }
    let mut weights = Array1::zeros(p);
    match feature_names {
        Some(names) => {
            let mut seen = vec![false; p];
            for (row, (name, w)) in entries.iter().enumerate() {
                let j = names.iter().position(|n| n == name).ok_or_else(|| Error::Parse {
                    row: row + 1,
                    column: "feature_name".into(),
                    message: format!("unknown feature '{name}'"),
                })?;
                if seen[j] {
                    return Err(Error::Parse {
                        row: row + 1,
                        column: "feature_name".into(),
                        message: format!("duplicate feature '{name}'"),
                    });
                }
                seen[j] = true;
                weights[j] = *w;
            }
        }
        None => {
            for (j, (_, w)) in entries.iter().enumerate() {
                weights[j] = *w;
            }
        }
    }
    Direction::user(weights)
}

pub fn write_direction_csv<W: Write>(direction: &Direction, names: &[String], writer: W) -> Result<()> {
    if names.len() != direction.len() {
        return Err(Error::DimensionMismatch {
            expected: direction.len(),
            found: names.len(),
        });
    }
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["feature_name", "weight"])?;
    for (name, w) in names.iter().zip(direction.weights.iter()) {
        wtr.write_record([name.clone(), w.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn layout() -> CsvLayout {
        CsvLayout::new("group", "ctl", "trt")
    }

    #[test]
    fn loads_small_two_group_file() {
        let text = "group,a,b,c\nctl,1,2,3\ntrt,4,5,6\nctl,7,8,9\ntrt,1.5,2.5,3.5\n";
        let d = read_csv(text.as_bytes(), &layout()).unwrap();
        assert_eq!((d.n_x(), d.n_z(), d.p()), (2, 2, 3));
        assert_eq!(d.x()[[1, 0]], 7.0);
        assert_eq!(d.z()[[1, 2]], 3.5);
        assert_eq!(d.feature_names().unwrap(), ["a", "b", "c"]);
    }

    #[test]
    fn group_column_may_sit_anywhere() {
        let text = "a,group,b\n1,ctl,2\n3,trt,4\n5,ctl,6\n7,trt,8\n";
        let d = read_csv(text.as_bytes(), &layout()).unwrap();
        assert_eq!(d.x().row(1).to_vec(), vec![5.0, 6.0]);
        assert_eq!(d.feature_names().unwrap(), ["a", "b"]);
    }

    #[test]
    fn nan_cell_reports_row_and_column() {
        let text = "group,a,b\nctl,1,2\ntrt,3,NaN\nctl,1,1\ntrt,2,2\n";
        match read_csv(text.as_bytes(), &layout()) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn third_label_is_named_in_error() {
        let text = "group,a\nctl,1\ntrt,2\nplacebo,3\n";
        let err = read_csv(text.as_bytes(), &layout()).unwrap_err();
        assert!(err.to_string().contains("placebo"), "{err}");
    }

    #[test]
    fn missing_group_column_and_single_group() {
        let err = read_csv("grp,a\nctl,1\n".as_bytes(), &layout()).unwrap_err();
        assert!(err.to_string().contains("group"));
        let err = read_csv("group,a\nctl,1\nctl,2\nctl,3\n".as_bytes(), &layout()).unwrap_err();
        assert!(err.to_string().contains("'group'"), "{err}");
        let err = read_csv("group,a\nctl,1\nctl,x\n".as_bytes(), &layout()).unwrap_err();
        assert!(err.to_string().contains("non-numeric"));
    }

    #[test]
    fn fold_examples() {
        let plan = make_folds(6, 6, 3, 11).unwrap();
        for m in 0..3 {
            assert_eq!(plan.x_in(m).len(), 2);
            assert_eq!(plan.z_in(m).len(), 2);
        }
        let plan = make_folds(7, 6, 3, 1).unwrap();
        let mut sizes: Vec<usize> = (0..3).map(|m| plan.x_in(m).len()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![2, 2, 3]);
        assert_eq!(plan, make_folds(7, 6, 3, 1).unwrap());
        assert!(make_folds(7, 2, 3, 1).is_err());
        assert!(make_folds(7, 7, 1, 1).is_err());
    }

    #[test]
    fn control_assignment_ignores_treatment_count() {
        let a = make_folds(20, 5, 4, 9).unwrap();
        let b = make_folds(20, 13, 4, 9).unwrap();
        assert_eq!(a.x_assignment(), b.x_assignment());
    }

    #[test]
    fn sign_alignment_examples() {
        let r = Direction::user(array![1.0, 0.0]).unwrap();
        let flipped = align_sign(&r, &Direction::user(array![-0.6, 0.8]).unwrap()).unwrap();
        assert_eq!(flipped.weights(), &array![0.6, -0.8]);
        let same = Direction::user(array![0.6, 0.8]).unwrap();
        assert_eq!(align_sign(&r, &same).unwrap(), same);
        let tie = Direction::user(array![0.0, -1.0]).unwrap();
        assert_eq!(align_sign(&r, &tie).unwrap(), tie);
        assert!(align_sign(&r, &Direction::user(array![1.0]).unwrap()).is_err());
    }

    #[test]
    fn pc_direction_requires_unit_norm() {
        assert!(Direction::new(array![1.0, 1.0], DirectionOrigin::Pc(1)).is_err());
        assert!(Direction::new(array![0.6, 0.8], DirectionOrigin::Pc(1)).is_ok());
        assert!(Direction::user(array![f64::NAN]).is_err());
    }

    #[test]
    fn direction_csv_matches_by_name() {
        let names = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let text = "feature_name,weight\nc,3\na,1\nb,2\n";
        let d = read_direction_csv(text.as_bytes(), Some(&names), 3).unwrap();
        assert_eq!(d.weights(), &array![1.0, 2.0, 3.0]);
        assert!(read_direction_csv("feature_name,weight\nq,1\na,1\nb,1\n".as_bytes(), Some(&names), 3).is_err());
        assert!(read_direction_csv("feature_name,weight\na,1\n".as_bytes(), Some(&names), 3).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_both_groups(n_x in 2usize..60, n_z in 2usize..60, m in 2usize..6, seed in any::<u64>()) {
            prop_assume!(m <= n_x.min(n_z));
            let plan = make_folds(n_x, n_z, m, seed).unwrap();
            for (assignment, n) in [(plan.x_assignment(), n_x), (plan.z_assignment(), n_z)] {
                prop_assert_eq!(assignment.len(), n);
                let mut sizes = vec![0usize; m];
                for &f in assignment {
                    prop_assert!(f < m);
                    sizes[f] += 1;
                }
                let spread = sizes.iter().max().unwrap() - sizes.iter().min().unwrap();
                prop_assert!(spread <= 1);
            }
            for f in 0..m {
                prop_assert_eq!(plan.x_in(f).len() + plan.x_out(f).len(), n_x);
            }
            prop_assert_eq!(&plan, &make_folds(n_x, n_z, m, seed).unwrap());
        }

        #[test]
        fn align_sign_is_idempotent(r in proptest::collection::vec(-5.0f64..5.0, 4), c in proptest::collection::vec(-5.0f64..5.0, 4)) {
            let r = Direction::user(Array1::from(r)).unwrap();
            let c = Direction::user(Array1::from(c)).unwrap();
            let once = align_sign(&r, &c).unwrap();
            let twice = align_sign(&r, &once).unwrap();
            prop_assert!(r.weights().dot(once.weights()) >= 0.0);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn csv_round_trip_is_bit_exact(vals in proptest::collection::vec(-1e6f64..1e6, 12)) {
            let x = Array2::from_shape_vec((2, 3), vals[..6].to_vec()).unwrap();
            let z = Array2::from_shape_vec((2, 3), vals[6..].to_vec()).unwrap();
            let names = Some(vec!["a".into(), "b".into(), "c".into()]);
            let d = Dataset::new(x, z, names).unwrap();
            let mut buf = Vec::new();
            write_csv_to(&d, &mut buf, &layout()).unwrap();
            let back = read_csv(buf.as_slice(), &layout()).unwrap();
            prop_assert_eq!(back, d);
        }
    }
}
