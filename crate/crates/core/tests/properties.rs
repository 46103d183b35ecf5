use dll_core::completion::{knapsack_dual, prodplan_dual, ConicProblemData};
use dll_core::cones::{
    contains, membership_slack, project_euclidean, radial_projection, radial_ray, smat, svec, ConeSpec,
};
use dll_core::linalg::{lambda_min, solve_linear, sym_eigen, DenseMatrix, SymMatrix};
use dll_core::neural::{adam_step, Activation, AdamState, LrSchedule, Mlp};
use dll_core::problems::rng::SplitMix64;
use dll_core::problems::{gen_knapsack, gen_prodplan, Dataset, Instance, KnapsackInstance, ProdPlanInstance, SplitSizes};
use dll_core::refsolve::{optimality_gap, prodplan_dual_value, solve_knapsack_lp, solve_lp, solve_prodplan, LpProblem, RowSense};
use dll_core::training::dc3;
use dll_core::training::Normalizer;
use proptest::prelude::*;

fn vec_of(len: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, len)
}

fn sym_from(n: usize, raw: &[f64]) -> SymMatrix {
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = 0.5 * (raw[i * n + j] + raw[j * n + i]);
        }
    }
    SymMatrix::new(n, data).unwrap()
}

fn sym_matrix() -> impl Strategy<Value = SymMatrix> {
    (1usize..=8).prop_flat_map(|n| vec_of(n * n, -5.0, 5.0).prop_map(move |raw| sym_from(n, &raw)))
}

fn self_dual_cone() -> impl Strategy<Value = ConeSpec> {
    prop_oneof![
        (1usize..12).prop_map(ConeSpec::nonneg),
        (1usize..12).prop_map(ConeSpec::nonpos),
        (2usize..20).prop_map(ConeSpec::soc),
        (3usize..20).prop_map(ConeSpec::rsoc),
        (1usize..6).prop_map(ConeSpec::psd),
    ]
}

fn cone_and_point() -> impl Strategy<Value = (ConeSpec, Vec<f64>)> {
    self_dual_cone().prop_flat_map(|k| (Just(k), vec_of(k.dim(), -10.0, 10.0)))
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    let scale = 1.0 + a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn eigenvectors_are_orthonormal(x in sym_matrix()) {
        let n = x.order();
        let eig = sym_eigen(&x);
        for a in 0..n {
            for b in 0..n {
                let va = eig.vector(a);
                let vb = eig.vector(b);
                let ip: f64 = va.iter().zip(&vb).map(|(p, q)| p * q).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                prop_assert!((ip - expect).abs() < 1e-9);
            }
        }
        let back = eig.reconstruct_with(|l| l);
        prop_assert!(close(back.as_slice(), x.as_slice(), 1e-10));
    }

    #[test]
    fn lambda_min_shifts_with_identity(x in sym_matrix(), c in -20.0f64..20.0) {
        let mut shifted = x.clone();
        shifted.shift_diagonal(c);
        let scale = 1.0 + x.frobenius_norm() + c.abs();
        prop_assert!((lambda_min(&shifted) - lambda_min(&x) - c).abs() < 1e-9 * scale);
    }

    #[test]
    fn linear_solve_inverts_multiplication(
        (n, raw, b) in (1usize..8).prop_flat_map(|n| (Just(n), vec_of(n * n, -1.0, 1.0), vec_of(n, -10.0, 10.0)))
    ) {
        let mut a = DenseMatrix::from_row_major(n, n, raw).unwrap();
        for i in 0..n {
            a.set(i, i, a.get(i, i) + n as f64);
        }
        let x = solve_linear(&a, &b).unwrap();
        prop_assert!(close(&a.mul_vec(&x), &b, 1e-8));
    }

    #[test]
    fn euclidean_projection_is_idempotent_member((k, x) in cone_and_point()) {
        let p = project_euclidean(&k, &x).unwrap();
        prop_assert!(contains(&k, &p, 1e-8).unwrap());
        prop_assert!(close(&project_euclidean(&k, &p).unwrap(), &p, 1e-9));
    }

    #[test]
    fn polar_part_comes_from_the_dual_projection((k, x) in cone_and_point()) {
        // x = Π_K(x) + Π_K°(x) and Π_K°(x) = −Π_K*(−x)
        let p = project_euclidean(&k, &x).unwrap();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let q = project_euclidean(&k.dual(), &neg).unwrap();
        let recon: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a - b).collect();
        prop_assert!(close(&recon, &x, 1e-8));
        let ip: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
        let nx: f64 = x.iter().map(|v| v * v).sum();
        prop_assert!(ip.abs() <= 1e-8 * (1.0 + nx));
    }

    #[test]
    fn radial_step_is_minimal((k, x) in cone_and_point()) {
        let r = radial_projection(&k, &x).unwrap();
        prop_assert!(r.step >= 0.0);
        prop_assert!(contains(&k, &r.point, 1e-8).unwrap());
        if r.step > 1e-8 && !matches!(k, ConeSpec::Nonneg { .. } | ConeSpec::Nonpos { .. }) {
            let ray = radial_ray(&k);
            let shorter: Vec<f64> = x.iter().zip(&ray).map(|(xi, ri)| xi + r.step * (1.0 - 1e-6) * ri).collect();
            prop_assert!(membership_slack(&k, &shorter).unwrap() < 0.0);
        }
    }

    #[test]
    fn psd_packing_round_trips(x in sym_matrix()) {
        let back = smat(x.order(), &svec(&x));
        prop_assert!(close(back.as_slice(), x.as_slice(), 1e-15));
    }

    #[test]
    fn knapsack_completion_is_feasible_and_valid(seed in any::<u64>(), m in 1usize..4, n in 1usize..12, mult in vec_of(3, 0.0, 3.0)) {
        let inst = KnapsackInstance::generate(m, n, seed, 0);
        let y: Vec<f64> = mult[..m].iter().map(|v| -v).collect();
        let sol = knapsack_dual(&inst, &y).unwrap();
        let data = ConicProblemData::from_knapsack(&inst).unwrap();
        prop_assert!(data.is_dual_feasible(&sol, 1e-9).unwrap());
        let opt = solve_knapsack_lp(&inst).unwrap().value;
        prop_assert!(sol.bound <= opt + 1e-7 * (1.0 + opt.abs()));
        prop_assert!(optimality_gap(opt, sol.bound).unwrap() >= -1e-12);
    }

    #[test]
    fn prodplan_completion_is_feasible_and_valid(seed in any::<u64>(), n in 1usize..12, y in -5000.0f64..0.0) {
        let inst = ProdPlanInstance::generate(n, seed, 3);
        let sol = prodplan_dual(&inst, y).unwrap();
        let data = ConicProblemData::from_prodplan(&inst).unwrap();
        prop_assert!(data.is_dual_feasible(&sol, 1e-9).unwrap());
        let opt = solve_prodplan(&inst).unwrap().value;
        prop_assert!(sol.bound <= opt + 1e-7 * (1.0 + opt.abs()));
    }

    #[test]
    fn prodplan_dual_is_concave(seed in any::<u64>(), ys in vec_of(3, -2000.0, 0.0), t in 0.0f64..1.0) {
        let inst = ProdPlanInstance::generate(5, seed, 1);
        let mut ys = ys;
        ys.sort_by(f64::total_cmp);
        let (y1, y3) = (ys[0], ys[2]);
        let y2 = y1 + t * (y3 - y1);
        let (g1, g2, g3) = (prodplan_dual_value(&inst, y1), prodplan_dual_value(&inst, y2), prodplan_dual_value(&inst, y3));
        let chord = g1 + t * (g3 - g1);
        prop_assert!(g2 >= chord - 1e-10 * (1.0 + chord.abs()));
    }

    #[test]
    fn prodplan_optimum_is_complementary(seed in any::<u64>(), n in 1usize..30) {
        let inst = ProdPlanInstance::generate(n, seed, 0);
        let sol = solve_prodplan(&inst).unwrap();
        let used: f64 = inst.r.iter().zip(&sol.primal[..n]).map(|(r, x)| r * x).sum();
        let y = sol.y[0];
        prop_assert!((y * (used - inst.b)).abs() <= 1e-8 * (1.0 + y.abs() * inst.b));
    }

    #[test]
    fn generated_prodplan_is_in_the_completion_domain(seed in any::<u64>(), index in 0u64..1000, n in 1usize..40) {
        let inst = ProdPlanInstance::generate(n, seed, index);
        prop_assert!(inst.d.iter().chain(&inst.f).chain(&inst.r).all(|v| *v > 0.0));
        prop_assert!(inst.b > 0.0);
        prop_assert_eq!(inst, ProdPlanInstance::generate(n, seed, index));
    }

    #[test]
    fn lp_dual_objective_matches_primal(
        (n, c, a, slack) in (1usize..6).prop_flat_map(|n| (Just(n), vec_of(n, -3.0, 3.0), vec_of(3 * n, -2.0, 2.0), vec_of(3, 0.0, 2.0)))
    ) {
        let x0 = vec![0.5; n];
        let w = DenseMatrix::from_row_major(3, n, a).unwrap();
        let rhs: Vec<f64> = w.mul_vec(&x0).iter().zip(&slack).map(|(v, s)| v + s).collect();
        let lp = LpProblem {
            objective: c,
            constraints: w,
            senses: vec![RowSense::Le; 3],
            rhs,
            lower: vec![0.0; n],
            upper: vec![1.0; n],
        };
        let sol = solve_lp(&lp).unwrap();
        prop_assert!((sol.objective - sol.dual_objective).abs() <= 1e-9 * (1.0 + sol.objective.abs()));
        let at_x0: f64 = lp.objective.iter().map(|ci| ci * 0.5).sum();
        prop_assert!(sol.objective <= at_x0 + 1e-9);
    }

    #[test]
    fn negated_softplus_is_negative_and_decreasing(z in -30.0f64..30.0, dz in 1e-3f64..5.0) {
        let f = Activation::NegatedSoftplus;
        prop_assert!(f.apply(z) < 0.0);
        prop_assert!(f.apply(z + dz) < f.apply(z));
    }

    #[test]
    fn forward_is_deterministic(seed in any::<u64>(), x in vec_of(12, -3.0, 3.0)) {
        let net = Mlp::new(&[4, 7, 2], &[Activation::Sigmoid, Activation::NegatedSoftplus], seed).unwrap();
        let a = net.predict(&x, 3).unwrap();
        let b = Mlp::new(&[4, 7, 2], &[Activation::Sigmoid, Activation::NegatedSoftplus], seed).unwrap().predict(&x, 3).unwrap();
        prop_assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert!(a.iter().all(|v| *v < 0.0));
    }

    #[test]
    fn schedule_never_increases_or_undershoots(losses in prop::collection::vec(-10.0f64..10.0, 1..300), patience in 1usize..8) {
        let mut s = LrSchedule::new(1e-3, patience, 10_000);
        let mut prev = s.lr;
        for (e, l) in losses.iter().enumerate() {
            let (_, stop) = s.update(*l, e + 1);
            prop_assert!(s.lr <= prev && s.lr >= s.lr_min);
            prev = s.lr;
            if stop {
                break;
            }
        }
    }

    #[test]
    fn adam_ignores_zero_gradients(params in vec_of(6, -2.0, 2.0)) {
        let mut p = params.clone();
        let mut state = AdamState::new(6);
        adam_step(&mut p, &[0.0; 6], &mut state, 1e-2, 1, 0).unwrap();
        prop_assert_eq!(p, params);
    }

    #[test]
    fn splits_partition_the_pool(train in 0usize..50, val in 0usize..50, test in 0usize..50, count in 1usize..500) {
        let s = SplitSizes::new(train, val, test);
        let mut counts = [0usize; 3];
        for i in 0..s.total() {
            counts[s.split_of(i) as usize] += 1;
        }
        prop_assert_eq!(counts, [train, val, test]);
        prop_assert_eq!(SplitSizes::from_count(count).total(), count);
    }

    #[test]
    fn splitmix_streams_are_reproducible(seed in any::<u64>(), index in any::<u64>(), tag in 0u64..16) {
        let mut a = SplitMix64::for_field(seed, index, tag);
        let mut b = SplitMix64::for_field(seed, index, tag);
        for _ in 0..8 {
            let u = a.uniform();
            prop_assert!((0.0..1.0).contains(&u));
            prop_assert_eq!(u.to_bits(), b.uniform().to_bits());
        }
    }

    #[test]
    fn normalizer_maps_training_rows_into_unit_box(rows in prop::collection::vec(vec_of(5, -1e3, 1e3), 1..20)) {
        let nz = Normalizer::fit(rows.iter().map(|r| r.as_slice())).unwrap();
        for r in &rows {
            let mut out = Vec::new();
            nz.apply_into(r, &mut out).unwrap();
            prop_assert!(out.iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
        }
    }

    #[test]
    fn dc3_corrections_leave_feasible_points_alone(seed in any::<u64>(), y in -0.5f64..0.0, zl in vec_of(6, 0.0, 1.0)) {
        let inst = Instance::Knapsack(KnapsackInstance::generate(1, 6, seed, 0));
        let Instance::Knapsack(k) = &inst else { unreachable!() };
        // z_u = p + Wᵀy + z_l must also be nonnegative
        let v: Vec<f64> = std::iter::once(y).chain(zl.iter().zip(&k.p).zip(k.w.row(0)).map(|((z, p), w)| z.max(-(p + w * y)))).collect();
        prop_assert_eq!(dc3::phi(&inst, &v), 0.0);
        let iterates = dc3::correct(&inst, &v, 10, 1e-4);
        prop_assert_eq!(iterates.last().unwrap(), &v);
    }
}

#[test]
fn datasets_round_trip_through_jsonl() {
    let mut ds = gen_knapsack(3, 7, SplitSizes::new(6, 2, 2), 5, 2).unwrap();
    dll_core::refsolve::attach_oracles(&mut ds, 2).unwrap();
    let back = Dataset::from_jsonl(&ds.to_jsonl()).unwrap();
    assert_eq!(back, ds);
    let mut pp = gen_prodplan(4, SplitSizes::new(6, 2, 2), 5, 3).unwrap();
    dll_core::refsolve::attach_oracles(&mut pp, 3).unwrap();
    assert_eq!(Dataset::from_jsonl(&pp.to_jsonl()).unwrap(), pp);
}

#[test]
fn gap_is_undefined_at_zero_optimum() {
    assert!(optimality_gap(0.0, -1.0).is_err());
    assert_eq!(optimality_gap(-4.0, -5.0).unwrap(), 0.25);
}
