use hicontrast::config::StudyConfig;
use hicontrast::studies::*;
use hicontrast::*;

fn cfg(inclusions: &str, eps: &str, count: usize) -> StudyConfig {
    StudyConfig::from_json(&format!(
        r#"{{"medium": {{"dim": 1, "domain": [-1, 1], "inclusions": {inclusions}, "h": 0.002}},
            "task": "converge", "eps_list": {eps}, "count": {count}}}"#
    ))
    .unwrap()
}

#[test]
fn homogeneous_medium_has_flat_branches() {
    // no inclusion: ε plays no role
    let r = run_converge(&cfg("[]", "[0.008, 0.004, 0.002, 0.001]", 3)).unwrap();
    assert!(r.pass);
    for b in &r.branches {
        assert!(b.fit.unwrap().slope.abs() < 1e-8);
        assert!(b.limit.is_none());
    }
}

#[test]
fn single_inclusion_extrapolates_to_the_limit() {
    let r = run_converge(&cfg("[[-0.5, 0.5]]", "[0.004, 0.002, 0.001, 0.0005]", 2)).unwrap();
    assert!(r.pass, "{r:?}");
    let b = &r.branches[0];
    assert!((b.limit.unwrap() - 2.960695537579868).abs() < 1e-9);
    assert!(b.fit.unwrap().slope < 0.0);
    let mut buf = vec![];
    write_converge_csv(&r, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.split("\n\n").count(), 2);
}

#[test]
fn geometric_sequence_checks() {
    assert!(check_geometric(&[0.008, 0.004, 0.002, 0.001]).is_ok());
    assert!(check_geometric(&[0.008, 0.004, 0.002]).is_err());
    assert!(check_geometric(&[0.008, 0.006, 0.0045, 0.003375]).is_err());
    assert!(check_geometric(&[0.008, 0.004, 0.001, 0.0005]).is_err());
}

#[test]
fn applicability() {
    assert_eq!(applicable(None), (1..=11).filter(|&i| i != 5).collect::<Vec<_>>());
    let sphere = ContrastMedium::new(Geometry::Radial(RadialGeometry::new(0.5).unwrap()), 0.0, BoundaryKind::Dirichlet, 1e-2).unwrap();
    assert_eq!(applicable(Some(&sphere)), vec![5, 9]);
}

#[test]
fn validate_csv_header() {
    let v = run_validate(&[8]);
    assert!(v[0].pass, "{}", v[0].detail);
    let mut buf = vec![];
    write_validate_csv(&v, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().next().unwrap(), "id,name,pass,seconds,detail");
}
