use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use robinhom_bench::periodic_cell;
use robinhom_core::assembly::{assemble_cell_forms, constraint_form};
use robinhom_core::cellmesh::{build_cell_mesh, OuterMode};
use robinhom_core::cellspec::{capacity, lambda_eps_kappa, CellOptions, CellSetup};
use robinhom_core::numkernel::cg_solve;
use robinhom_core::strangeterm::{kappa_star, ClosedForm, ExteriorNumeric};

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assembly");
    for level in [2u32, 3] {
        let mesh = build_cell_mesh(0.25, level, OuterMode::Periodic).unwrap();
        g.bench_with_input(BenchmarkId::new("cell_forms", level), &mesh, |b, m| {
            b.iter(|| assemble_cell_forms(black_box(m)).unwrap())
        });
    }
    g.finish();
}

fn linear(c: &mut Criterion) {
    let setup = CellSetup::critical(0.5, 3).unwrap();
    let opts = CellOptions::default();
    c.bench_function("capacity_cg_level3", |b| {
        b.iter(|| capacity(black_box(&setup.bounded), &setup.bounded_forms, &opts).unwrap())
    });
    let (_, forms) = periodic_cell(0.5, 3);
    let free = forms.dofs.free_dofs(&forms.dofs.hole);
    let k = forms.a.principal_submatrix(&free).lin_comb(1.0, &forms.m.principal_submatrix(&free), 1.0);
    let rhs = vec![1.0; k.dim()];
    c.bench_function("cg_shifted_laplacian_level3", |b| b.iter(|| cg_solve(black_box(&k), &rhs, 1e-10).unwrap()));
}

fn pencil(c: &mut Criterion) {
    let mut g = c.benchmark_group("pencil");
    g.sample_size(10);
    let (mesh, forms) = periodic_cell(0.5, 2);
    let opts = CellOptions::default();
    for kappa in [0.5, 2.0] {
        let guess = 0.25 * robinhom_core::lambda_star_ball(kappa, 3);
        g.bench_with_input(BenchmarkId::new("lambda_eps_kappa_level2", kappa), &kappa, |b, &k| {
            b.iter(|| lambda_eps_kappa(&mesh, &forms, k, guess, &opts).unwrap())
        });
    }
    g.bench_function("constraint_form_level2", |b| b.iter(|| constraint_form(black_box(&forms), 2.0)));
    g.finish();
}

fn strange_term(c: &mut Criterion) {
    let ball = ClosedForm { n: 3 };
    c.bench_function("kappa_star_closed_form", |b| b.iter(|| kappa_star(black_box(4.0 * PI), &ball, None).unwrap()));
    let ext = ExteriorNumeric::default();
    let mut g = c.benchmark_group("strange_term");
    g.sample_size(10);
    g.bench_function("kappa_star_exterior_numeric", |b| b.iter(|| kappa_star(black_box(4.0 * PI), &ext, None).unwrap()));
    g.finish();
}

criterion_group!(benches, assembly, linear, pencil, strange_term);
criterion_main!(benches);
