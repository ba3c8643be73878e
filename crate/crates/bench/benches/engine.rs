use std::path::{Path, PathBuf};

use criterion::{criterion_group, criterion_main, Criterion};

use placidus_cli::Workspace;
use placidus_core::artifact::DataValue;
use placidus_core::fts::{mc_family_exact, mc_product, TemporalFormula};
use placidus_core::vgsn::vdeductive_check;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/demo")
}

fn bench_engine(c: &mut Criterion) {
    let ws = Workspace::load(&fixtures().join("workspace.json")).expect("demo workspace");
    let DataValue::FeatureModel(infusion_model) = ws.load_value("infusion").unwrap() else {
        unreachable!()
    };
    let DataValue::Fts(infusion_fts) = ws.load_value("infusion_fts").unwrap() else {
        unreachable!()
    };
    let DataValue::Formula(property) = ws.load_value("dose_rate_formula").unwrap() else {
        unreachable!()
    };
    let DataValue::Plac(infusion_plac) = ws.load_value("infusion_plac").unwrap() else {
        unreachable!()
    };
    let _: &TemporalFormula = &property;

    c.bench_function("valid_configs/infusion", |b| {
        b.iter(|| infusion_model.valid_configs().len())
    });

    let full = infusion_model.valid_configs().into_iter().last().expect("36 configs");
    let product = infusion_fts.derive(&full).unwrap();
    c.bench_function("mc_product/infusion_full", |b| {
        b.iter(|| mc_product(&product, &property).verdict)
    });

    c.bench_function("mc_family_exact/infusion", |b| {
        b.iter(|| mc_family_exact(&infusion_fts, &property).unwrap().all_pass())
    });

    let ctx = ws.context();
    c.bench_function("vdeductive_check/infusion_plac", |b| {
        b.iter(|| vdeductive_check(&infusion_plac, &ctx).unwrap().verdict)
    });
}

criterion_group!(benches, bench_engine);
criterion_main!(benches);
