use super::*;
use crate::experiments::{InitialSpec, ReportMeta, SweepRow, Timings};
use crate::multiplier::FilterShape;
use crate::potential::{PotentialSpec, SingularTreatment};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn grid2() -> Arc<Grid> {
    Arc::new(Grid::new(&[(-8.0, 8.0), (-2.0, 6.0)], &[8, 4]).unwrap())
}

fn random_field(grid: &Arc<Grid>) -> SpectralField {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let v = (0..grid.len())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    SpectralField::from_values(grid, v).unwrap()
}

#[test]
fn header_layout_is_fixed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.ewif");
    let g = Arc::new(Grid::new(&[(-1.5, 2.5)], &[4]).unwrap());
    let f = SpectralField::from_values(&g, vec![Complex64::new(1.0, 2.0); 4]).unwrap();
    write_field(&path, &f, SampleKind::ComplexF64, Space::Nodes).unwrap();
    let bytes = fs::read(&path).unwrap();
    let mut expected = b"EWIF".to_vec();
    expected.extend(1u16.to_le_bytes());
    expected.extend([2u8, 0u8]);
    expected.extend(1u32.to_le_bytes());
    expected.extend(4u64.to_le_bytes());
    expected.extend((-1.5f64).to_le_bytes());
    expected.extend(2.5f64.to_le_bytes());
    assert_eq!(&bytes[..expected.len()], &expected[..]);
    assert_eq!(bytes.len(), expected.len() + 4 * 16);
    assert_eq!(&bytes[expected.len()..expected.len() + 8], &1.0f64.to_le_bytes());
}

#[test]
fn round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let g = grid2();
    let f = random_field(&g);
    for space in [Space::Nodes, Space::Fourier] {
        let path = dir.path().join(format!("{space:?}.ewif"));
        write_field(&path, &f, SampleKind::ComplexF64, space).unwrap();
        let back = read_field(&path).unwrap();
        assert_eq!(**back.grid(), *g);
        let worst = back.coeffs().iter().zip(f.coeffs()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        // node values pass through two transforms
        assert!(worst < 1e-15, "{space:?} {worst:e}");
        if space == Space::Fourier {
            assert!(back.coeffs() == f.coeffs());
        }
    }
    let path = dir.path().join("single.ewif");
    write_field(&path, &f, SampleKind::ComplexF32, Space::Fourier).unwrap();
    let back = read_field(&path).unwrap();
    for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
        assert!((a - b).norm() < 1e-7);
    }
    let path = dir.path().join("density.ewif");
    write_density(&path, &f).unwrap();
    let (header, samples) = read_samples(&path).unwrap();
    assert_eq!(header.kind, SampleKind::RealF64);
    for (s, v) in samples.iter().zip(f.values()) {
        assert_eq!(s.re, v.norm_sqr());
        assert_eq!(s.im, 0.0);
    }
}

#[test]
fn rejects_damaged_files() {
    let dir = tempfile::tempdir().unwrap();
    let g = grid2();
    let path = dir.path().join("f.ewif");
    write_field(&path, &random_field(&g), SampleKind::ComplexF64, Space::Nodes).unwrap();
    let bytes = fs::read(&path).unwrap();

    let bad = dir.path().join("bad.ewif");
    let mut b = bytes.clone();
    b[0] = b'X';
    fs::write(&bad, &b).unwrap();
    assert!(matches!(read_field(&bad), Err(Error::Format(_))));

    fs::write(&bad, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(read_field(&bad), Err(Error::Io { .. })));

    let mut b = bytes.clone();
    b.push(0);
    fs::write(&bad, &b).unwrap();
    assert!(matches!(read_field(&bad), Err(Error::Format(_))));

    match read_field(&dir.path().join("missing.ewif")) {
        Err(Error::Io { path, .. }) => assert!(path.ends_with("missing.ewif")),
        other => panic!("{other:?}"),
    }
}

fn report(rows: Vec<SweepRow>) -> ConvergenceReport {
    ConvergenceReport {
        norms: vec![NormKind::L2, NormKind::H1],
        rows,
        fit_l2: None,
        fit_h1: None,
        fit_notes: vec![],
        degenerate: false,
        monotone: true,
        reference_check: None,
        meta: ReportMeta {
            grid: grid2().spec(),
            potential: PotentialSpec::inverse_power(&[0.0, 0.0], -1.0, 1.0),
            treatment: SingularTreatment::Spectral,
            oversample: 2,
            t_final: 1.0,
            beta: 1.0,
            sigma: 1.0,
            filter: Some(FilterShape::Smooth),
            tau_ref: 1e-5,
            initial: InitialSpec::standard_gaussian(),
            ground_state: None,
        },
        timings: Timings {
            setup: 1.5,
            ..Timings::default()
        },
    }
}

fn row(tau: f64, e: f64) -> SweepRow {
    SweepRow {
        tau,
        err_l2: Some(e),
        err_h1: Some(10.0 * e),
        failure: None,
    }
}

#[test]
fn report_files_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let r = report(vec![row(0.1, 1e-2), row(0.05, 5e-3), row(0.025, 2.5e-3)]);
    let run = RunInfo {
        preset: Some("fig1a".into()),
        seed: 7,
        notes: vec![],
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let files = write_report(&r, &run, &a).unwrap();
    write_report(&r, &run, &b).unwrap();
    for name in ["errors.csv", "manifest.json", "loglog_L2.dat", "loglog_H1.dat"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let csv = fs::read_to_string(&files.csv).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "tau,err_L2,err_H1");
    assert_eq!(lines[1], "1e-1,1e-2,1e-1");
    assert_eq!(lines.len(), 4);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(&files.manifest).unwrap()).unwrap();
    assert_eq!(manifest["run"]["preset"], "fig1a");
    assert!(manifest.get("timings").is_none());
    let timings: serde_json::Value = serde_json::from_str(&fs::read_to_string(&files.timings).unwrap()).unwrap();
    assert_eq!(timings["setup"], 1.5);
    let plot = fs::read_to_string(&files.plots[0]).unwrap();
    assert_eq!(plot.lines().nth(1).unwrap(), "-1e0 -2e0");
}

#[test]
fn failed_sweep_keeps_annotations_and_no_rows() {
    let dir = tempfile::tempdir().unwrap();
    let failed = SweepRow {
        tau: 0.1,
        err_l2: None,
        err_h1: None,
        failure: Some("non-finite state at step 3".into()),
    };
    let files = write_report(&report(vec![failed]), &RunInfo::default(), dir.path()).unwrap();
    assert_eq!(fs::read_to_string(&files.csv).unwrap(), "tau,err_L2,err_H1\n");
    let manifest = fs::read_to_string(&files.manifest).unwrap();
    assert!(manifest.contains("non-finite state at step 3"));
}

#[test]
fn unwritable_target_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    match write_json(&blocker.join("sub").join("m.json"), &1) {
        Err(Error::Io { path, .. }) => assert!(path.starts_with(&blocker)),
        other => panic!("{other:?}"),
    }
}
