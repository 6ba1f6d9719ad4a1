use malab::deformation::DeformationRegistry;
use malab::model::{build_model, ModelRegistry, EXHAUSTION_KINDS};
use malab::run::{run, RunConfig, SuiteRegistry};
use malab::symmetric::{catalog, export_catalog};
use malab::LabError;

fn quick(model: &str) -> RunConfig {
    RunConfig { model: model.into(), samples: Some(4), ..RunConfig::default() }
}

#[test]
fn every_model_passes_its_default_suites() {
    for model in ["euclidean(2)", "euclidean(3)", "sphere(2)", "sphere(3)", "rproj(2)", "rproj(3)", "cproj(1)"] {
        let report = run(&quick(model)).unwrap();
        assert!(report.pass(), "{model}\n{}", report.render());
    }
}

#[test]
fn model_kinds_follow_the_family() {
    assert_eq!(ModelRegistry::default().families(), ["euclidean", "sphere", "rproj", "cproj"]);
    assert_eq!(build_model("euclidean(3)").unwrap().ma_kind(), "log_tau");
    for name in ["sphere(2)", "rproj(3)", "cproj(1)"] {
        let m = build_model(name).unwrap();
        assert_eq!(m.ma_kind(), "sqrt_tau");
        assert!(EXHAUSTION_KINDS.contains(&m.ma_kind()));
    }
    for bad in ["cproj(2)", "sphere", "sphere(x)", "hyperbolic(2)"] {
        assert!(matches!(build_model(bad), Err(LabError::UnsupportedModel(_))), "{bad}");
    }
}

#[test]
fn registries_list_their_strategies() {
    assert_eq!(
        SuiteRegistry::default().names(),
        ["algebra", "lemma33", "structure", "psh", "ma", "foliation", "deformation", "catalog"]
    );
    let names = DeformationRegistry::default().names();
    for expected in ["identity", "unitary", "leaf-rotation", "fibre-twist", "non-leaf-holomorphic"] {
        assert!(names.contains(&expected), "{expected}");
    }
}

#[test]
fn report_echoes_configuration() {
    let mut c = quick("cproj(1)");
    c.suites = vec!["structure".into()];
    c.tolerances.apply_override("structure.nijenhuis=1e-20").unwrap();
    let report = run(&c).unwrap();
    let text = report.render();
    assert!(text.contains("config.model = cproj(1)\n"));
    assert!(text.contains("tolerance.structure.nijenhuis = 1e-20\n"));
    assert!(text.contains("suite.structure.nijenhuis.pass = false\n"));
    assert!(!report.pass());
}

#[test]
fn catalog_export_has_one_line_per_entry() {
    let entries = catalog();
    let mut buf = Vec::new();
    export_catalog(&entries, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), entries.len() + 2);
    assert!(text.lines().skip(2).all(|l| l.split('\t').count() == 9));
}
