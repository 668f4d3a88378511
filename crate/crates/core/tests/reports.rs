//! Report emission: JSON schema conformance, CSV headers, pixmap layout.

use fpp_core::config::{ExperimentConfig, ExperimentKind};
use fpp_core::emit::{csv_bytes, decode_rle, emit, json_bytes, Format, RleGrid};
use fpp_core::harness::{run, ExperimentReport};
use jsonschema::JSONSchema;

const SCHEMA: &str = include_str!("../schemas/report.schema.json");

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut c = ExperimentConfig::default_for(kind);
    c.experiment.replications = 4;
    if let Some(s) = c.limit_shape.as_mut() {
        s.n = 24;
        s.replications = 3;
        s.angular_resolution = 8;
    }
    if let Some(p) = c.shape.as_mut() {
        p.n = 24;
        p.angular_resolution = 8;
        p.raster_half_width = 30;
    }
    if let Some(p) = c.tau.as_mut() {
        p.n_values = vec![10.0, 20.0];
        p.symmetry_n = Some(10.0);
    }
    if let Some(p) = c.busemann_bn.as_mut() {
        p.m_big = 10.0;
        p.n_count = 3;
    }
    if let Some(p) = c.busemann_slope.as_mut() {
        p.m_values = vec![10.0, 20.0];
        p.n_count = 3;
    }
    if let Some(p) = c.busemann_highprob.as_mut() {
        p.m_big = 10.0;
        p.n_count = 3;
    }
    if let Some(p) = c.coexist.as_mut() {
        p.half_width = 30;
        p.m_values = vec![3.0, 6.0];
        p.boundary_threshold = 5;
    }
    if let Some(p) = c.ends.as_mut() {
        p.half_width = 30;
        p.radii = vec![[5, 10], [10, 20]];
    }
    if let Some(p) = c.localize.as_mut() {
        p.m_big = 8.0;
        p.n = 16.0;
    }
    c
}

const KINDS: [ExperimentKind; 8] = [
    ExperimentKind::Shape,
    ExperimentKind::Tau,
    ExperimentKind::BusemannBn,
    ExperimentKind::BusemannSlope,
    ExperimentKind::BusemannHighprob,
    ExperimentKind::Coexist,
    ExperimentKind::Ends,
    ExperimentKind::Localize,
];

fn report(kind: ExperimentKind) -> ExperimentReport {
    run(&small(kind)).unwrap_or_else(|e| panic!("{}: {e}", kind.name()))
}

#[test]
fn every_kind_validates_against_the_schema() {
    let schema: serde_json::Value = serde_json::from_str(SCHEMA).unwrap();
    let compiled = JSONSchema::compile(&schema).unwrap();
    for kind in KINDS {
        let doc: serde_json::Value = serde_json::from_slice(&json_bytes(&report(kind)).unwrap()).unwrap();
        if let Err(errors) = compiled.validate(&doc) {
            let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
            panic!("{}: {msgs:#?}", kind.name());
        }
        assert_eq!(doc.as_object().unwrap().keys().collect::<Vec<_>>(), ["config", "provenance", "results"]);
    }
}

#[test]
fn schema_rejects_a_report_without_provenance() {
    let schema: serde_json::Value = serde_json::from_str(SCHEMA).unwrap();
    let compiled = JSONSchema::compile(&schema).unwrap();
    let mut doc: serde_json::Value = serde_json::from_slice(&json_bytes(&report(ExperimentKind::Ends)).unwrap()).unwrap();
    doc.as_object_mut().unwrap().remove("provenance");
    assert!(!compiled.is_valid(&doc));
}

#[test]
fn csv_headers_match_the_documented_schema() {
    let expected = [
        (ExperimentKind::Shape, "angle,radius,ci"),
        (ExperimentKind::Tau, "n,mean,sd,ci_low,ci_high,clipped,total"),
        (ExperimentKind::BusemannBn, "n,M,epsilon,fraction,ci_low,ci_high,clipped_fraction"),
        (ExperimentKind::Coexist, "M,replicates,coexist_fraction,ci_low,ci_high,check_fraction,argmin_violations"),
        (ExperimentKind::Ends, "replicate,rho0,rho,count"),
        (ExperimentKind::Localize, "event,M,n,epsilon,fraction,ci_low,ci_high,clipped_fraction"),
    ];
    for (kind, header) in expected {
        let bytes = csv_bytes(&report(kind).results).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(text.lines().next(), Some(header), "{}", kind.name());
        assert!(text.lines().count() > 1);
    }
}

#[test]
fn pixmaps_have_one_pixel_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    for kind in [ExperimentKind::Coexist, ExperimentKind::Shape] {
        let r = report(kind);
        assert!(!r.grids.is_empty(), "{}", kind.name());
        emit(&r, dir.path(), kind.name(), &[Format::Pixmap]).unwrap();
        for g in &r.grids {
            let ppm = std::fs::read(dir.path().join(format!("{}_{}.ppm", kind.name(), g.name))).unwrap();
            let header = format!("P6\n{} {}\n255\n", g.region.width(), g.region.height());
            assert!(ppm.starts_with(header.as_bytes()));
            assert_eq!(ppm.len(), header.len() + 3 * g.region.len());
            let rle: RleGrid =
                serde_json::from_slice(&std::fs::read(dir.path().join(format!("{}_{}.grid.json", kind.name(), g.name))).unwrap())
                    .unwrap();
            assert_eq!(decode_rle(&rle), g.cells);
        }
    }
}

#[test]
fn non_spatial_experiments_emit_no_pixmaps() {
    let dir = tempfile::tempdir().unwrap();
    let written = emit(&report(ExperimentKind::Tau), dir.path(), "tau", &[Format::Csv, Format::Pixmap]).unwrap();
    assert_eq!(written.len(), 1);
}

#[test]
fn same_config_gives_identical_bytes() {
    let c = small(ExperimentKind::Coexist);
    let a = run(&c).unwrap();
    let b = run(&c).unwrap();
    assert_eq!(csv_bytes(&a.results).unwrap(), csv_bytes(&b.results).unwrap());
    assert_eq!(json_bytes(&a).unwrap(), json_bytes(&b).unwrap());
}
