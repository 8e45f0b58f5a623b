use std::sync::OnceLock;

use faer::Mat;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use tcshift::bdg_lattice::random::{self, InstanceRng};
use tcshift::bdg_lattice::*;
use tcshift::error::Error;
use tcshift::gl::{compute_dc, compute_gl_coefficients, default_cutoff, GlCoefficients, GlField, GlSpectralResult};
use tcshift::linalg::{adjoint, block, blocks, conj, eigvalsh, frobenius_sq, hermitian_defect, identity, max_abs, trace, CMat};
use tcshift::model::{ExternalFields, InteractionPotential, ModelConfig};
use tcshift::specfun;
use tcshift::ti_bcs::{compute_pairing, PairingData, PositionGrid};

fn pairing() -> &'static PairingData {
    static P: OnceLock<PairingData> = OnceLock::new();
    P.get_or_init(|| compute_pairing(&ModelConfig::benchmark(0.2), &PositionGrid::benchmark()).unwrap())
}

fn gl_data() -> &'static (GlCoefficients, GlSpectralResult) {
    static G: OnceLock<(GlCoefficients, GlSpectralResult)> = OnceLock::new();
    G.get_or_init(|| {
        let c = compute_gl_coefficients(pairing()).unwrap();
        let s = compute_dc(&c, &ModelConfig::benchmark(0.2).fields, default_cutoff(1)).unwrap();
        (c, s)
    })
}

fn psi_plane_wave() -> GlField {
    GlField::from_modes(1, 1, &[([1, 0, 0], C64::new(1.0, 0.0))]).unwrap()
}

/// `E M E†`: mode-basis matrix in the position basis.
fn to_positions(m: &CMat, grid: &TorusGrid) -> CMat {
    let e = grid.fourier_matrix();
    &(&e * m) * e.adjoint()
}

/// Small `d = 1` system with one fiber: `h = 0.2`, `N = 40`.
fn small_system(fields: ExternalFields) -> LatticeSystem {
    let config = ModelConfig::benchmark(0.2).with_fields(fields);
    LatticeSystem::new(&config, Lattice::new(0.2, 1, 40, 1).unwrap()).unwrap()
}

fn random_gaps(rng: &mut InstanceRng, system: &LatticeSystem, scale: f64) -> Vec<GapOperator> {
    let psi = random::field(rng, 1, 2, scale).unwrap();
    let p = pairing();
    system.gap(&psi, &|q| p.t(q)).unwrap()
}

#[test]
fn one_body_hamiltonian_is_hermitian_for_random_fields() {
    let mut rng = random::rng(11);
    for dim in [1, 2] {
        let grid = TorusGrid::new(dim, if dim == 1 { 16 } else { 8 }).unwrap();
        for _ in 0..10 {
            let f = random::fields(&mut rng, dim, 2, 1.0, 0.5);
            let m = assemble_h(0.3, 1.0, &f, &grid).unwrap();
            assert!(hermitian_defect(&m) < 1e-13, "defect {}", hermitian_defect(&m));
            let shifted = assemble_h(0.3, 1.0, &f, &grid.with_bloch([0.4, -0.2, 0.0])).unwrap();
            assert!(hermitian_defect(&shifted) < 1e-13);
        }
    }
}

#[test]
fn conjugate_hamiltonian_is_entrywise_conjugate_in_positions() {
    let mut rng = random::rng(12);
    let grid = TorusGrid::new(1, 16).unwrap();
    for _ in 0..5 {
        let f = random::fields(&mut rng, 1, 2, 1.0, 0.7);
        let one = OneBody::new(0.25, 1.3, &f, &grid).unwrap();
        let lhs = to_positions(&one.h_bar, &grid);
        let rhs = conj(&to_positions(&one.h_op, &grid));
        assert!(max_abs(&(&lhs - &rhs)) < 1e-12);
        assert!(max_abs(&(&one.h_bar - &conjugate_operator(&one.h_op, &grid))) < 1e-12);
    }
}

#[test]
fn trace_is_the_same_in_both_bases() {
    let grid = TorusGrid::new(1, 20).unwrap();
    let f = |q: f64| (-q * q).exp() / (1.0 + q * q);
    let d = Mat::from_fn(grid.len(), grid.len(), |i, j| {
        if i == j {
            C64::new(f(0.3 * grid.momentum(i)[0].abs()), 0.0)
        } else {
            C64::default()
        }
    });
    let want: f64 = (0..grid.len()).map(|i| f(0.3 * grid.momentum(i)[0].abs())).sum();
    assert!((trace(&to_positions(&d, &grid)).re - want).abs() < 1e-12);
}

#[test]
fn aliasing_of_fields_is_an_assembly_error() {
    let grid = TorusGrid::new(1, 6).unwrap();
    let w = ExternalFields::cosine_w([4, 0, 0], 1.0);
    assert!(matches!(assemble_h(0.2, 1.0, &w, &grid), Err(Error::Assembly(_))));
    let psi = GlField::from_modes(1, 4, &[([4, 0, 0], C64::new(1.0, 0.0))]).unwrap();
    assert!(matches!(make_symmetrized_pair(&psi, &|_| 1.0, 0.2, &grid), Err(Error::Assembly(_))));
}

#[test]
fn symmetrized_pair_of_real_field_is_self_adjoint() {
    let mut rng = random::rng(13);
    let grid = TorusGrid::new(1, 16).unwrap();
    for _ in 0..5 {
        let psi = random::real_field(&mut rng, 1, 3, 1.0).unwrap();
        let prof = random::profile(&mut rng);
        let gap = GapOperator::new(&psi, &prof, 0.2, &grid).unwrap();
        assert!(max_abs(&(&gap.delta_bar - &adjoint(&gap.delta))) < 1e-14);
        let zero = GapOperator::new(&GlField::zeros(1, 3).unwrap(), &prof, 0.2, &grid).unwrap();
        assert!(zero.is_zero());
    }
}

#[test]
fn symmetrized_pair_matches_position_kernel() {
    // (h/2)(ψ(x) + ψ(y)) ǧ((x-y)/h) with ǧ the lattice transform of g(h p)
    let grid = TorusGrid::new(1, 40).unwrap();
    let h = 0.3;
    let psi = GlField::from_modes(1, 2, &[([0, 0, 0], C64::new(0.5, 0.0)), ([2, 0, 0], C64::new(0.2, -0.1))]).unwrap();
    let g = |q: f64| (-q * q).exp();
    let m = to_positions(&make_symmetrized_pair(&psi, &g, h, &grid).unwrap(), &grid);
    let len = grid.len();
    let psi_at = |x: f64| psi.get(&[0, 0, 0]) + psi.get(&[2, 0, 0]) * C64::from_polar(1.0, 4.0 * std::f64::consts::PI * x);
    for i in 0..len {
        for j in 0..len {
            let (x, y) = (grid.position(i)[0], grid.position(j)[0]);
            let kernel: C64 = (0..len)
                .map(|n| C64::from_polar(g(h * grid.momentum(n)[0].abs()), grid.momentum(n)[0] * (x - y)))
                .sum::<C64>()
                / len as f64;
            let want = 0.5 * h * (psi_at(x) + psi_at(y)) * kernel;
            assert!((m[(i, j)] - want).norm() < 1e-13);
        }
    }
}

#[test]
fn bdg_hamiltonian_has_particle_hole_symmetry() {
    let mut rng = random::rng(14);
    let grid = TorusGrid::new(1, 16).unwrap();
    for _ in 0..10 {
        let f = random::fields(&mut rng, 1, 2, 1.0, 0.5);
        let one = OneBody::new(0.25, 1.0, &f, &grid).unwrap();
        let psi = random::field(&mut rng, 1, 3, 1.0).unwrap();
        let prof = random::profile(&mut rng);
        let h = assemble_hdelta(&one, &GapOperator::new(&psi, &prof, 0.25, &grid).unwrap()).unwrap();
        assert!(hermitian_defect(&h) < 1e-13);
        let defect = max_abs(&(&particle_hole(&h) + &conjugate_operator(&h, &grid)));
        assert!(defect < 1e-12, "defect {defect}");
        let ev = eigvalsh(&h).unwrap();
        let n = ev.len();
        for k in 0..n {
            assert!((ev[k] + ev[n - 1 - k]).abs() < 1e-11);
        }
    }
}

#[test]
fn zero_gap_gives_block_diagonal_normal_state() {
    let grid = TorusGrid::new(1, 16).unwrap();
    let f = ExternalFields::cosine_w([1, 0, 0], 1.0);
    let one = OneBody::new(0.2, 1.0, &f, &grid).unwrap();
    let h0 = assemble_hdelta(&one, &GapOperator::zero(grid.len())).unwrap();
    let n = grid.len();
    assert_eq!(max_abs(&block(&h0, n, 0, 1)), 0.0);
    let beta = 3.0;
    let s = gibbs_state(&h0, beta, &grid).unwrap();
    let e = tcshift::linalg::eigh(&one.h_op).unwrap();
    let eb = tcshift::linalg::eigh(&one.h_bar).unwrap();
    assert!(max_abs(&(&s.gamma_block() - &e.apply(|l| specfun::fermi(beta * l)))) < 1e-13);
    assert!(max_abs(&(&block(&s.gamma, n, 1, 1) - &eb.apply(|l| specfun::fermi(-beta * l)))) < 1e-13);
    assert!(max_abs(&s.alpha()) < 1e-14);
}

#[test]
fn gibbs_state_becomes_projector_at_large_beta() {
    let mut rng = random::rng(15);
    let grid = TorusGrid::new(1, 16).unwrap();
    let one = OneBody::new(0.25, 1.0, &ExternalFields::zero(), &grid).unwrap();
    let psi = GlField::constant(1, 1, C64::new(1.0, 0.0)).unwrap();
    let prof = random::profile(&mut rng);
    let h = assemble_hdelta(&one, &GapOperator::new(&psi, &prof, 0.25, &grid).unwrap()).unwrap();
    let gap = eigvalsh(&h).unwrap().iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
    assert!(gap > 1e-3);
    let s = gibbs_state(&h, 40.0 / gap, &grid).unwrap();
    for x in eigvalsh(&s.gamma).unwrap() {
        assert!(x.abs() < 1e-10 || (x - 1.0).abs() < 1e-10, "{x}");
    }
}

#[test]
fn gibbs_state_rejects_bad_input() {
    let grid = TorusGrid::new(1, 4).unwrap();
    let h = identity(2 * grid.len());
    assert!(matches!(gibbs_state(&h, 0.0, &grid), Err(Error::Precondition(_))));
    let mut bad = h.clone();
    bad[(0, 1)] = C64::new(0.5, 0.0);
    assert!(matches!(gibbs_state(&bad, 1.0, &grid), Err(Error::Precondition(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gibbs_states_are_admissible(seed in 0u64..1_000_000, beta in 0.2f64..30.0, amp in 0.0f64..2.0) {
        let mut rng = random::rng(seed);
        let grid = TorusGrid::new(1, 12).unwrap();
        let f = random::fields(&mut rng, 1, 2, 1.0, 0.5);
        let one = OneBody::new(0.3, 1.0, &f, &grid).unwrap();
        let psi = random::field(&mut rng, 1, 2, amp).unwrap();
        let prof = random::profile(&mut rng);
        let h = assemble_hdelta(&one, &GapOperator::new(&psi, &prof, 0.3, &grid).unwrap()).unwrap();
        let d = gibbs_state(&h, beta, &grid).unwrap().defects().unwrap();
        prop_assert!(d.max() < 1e-12, "{:?}", d);
        prop_assert!(d.admissibility.is_some() && d.alpha_symmetry.is_some());
    }
}

#[test]
fn trace_norms_follow_the_trace_convention() {
    let k = 7;
    let id = identity(k);
    assert!((trace_norm(std::slice::from_ref(&id), 1.0, 1.0).unwrap() - k as f64).abs() < 1e-12);
    assert!((trace_norm(&[id], f64::INFINITY, 1.0).unwrap() - 1.0).abs() < 1e-12);
    let mut rng = random::rng(16);
    for _ in 0..10 {
        let a = &random::hermitian(&mut rng, 9, 1.0) * &random::hermitian(&mut rng, 9, 1.0);
        let b = random::hermitian(&mut rng, 9, 1.0);
        let ops = [a.clone(), b.clone()];
        let two = trace_norm(&ops, 2.0, 0.5).unwrap();
        let direct = 0.5 * (frobenius_sq(&a) + frobenius_sq(&b));
        assert!((two * two - direct).abs() < 1e-12 * direct);
        let tr = 0.5 * (trace(&(&adjoint(&a) * &a)).re + trace(&(&adjoint(&b) * &b)).re);
        assert!((two * two - tr).abs() < 1e-12 * tr);
    }
    assert!(matches!(trace_norm(&[identity(2)], 0.5, 1.0), Err(Error::Domain(_))));
}

#[test]
fn leading_pair_h1_norm_scales_like_root_h() {
    let p = pairing();
    let psi = psi_plane_wave();
    let mut pts = Vec::new();
    for h in [0.2, 0.1, 0.05] {
        let lat = Lattice::auto(h, 1, p.momentum_cutoff(), p.mu, p.tc, false).unwrap();
        let grids = lat.fibers();
        let ops: Vec<CMat> =
            grids.iter().map(|g| make_symmetrized_pair(&psi, &|q| p.profile.alpha_hat(q), h, g).unwrap()).collect();
        pts.push((h.ln(), 0.5 * h1_norm_sq(&ops, &grids, h, lat.fiber_weight()).ln()));
    }
    let slope = (pts[2].1 - pts[0].1) / (pts[2].0 - pts[0].0);
    assert!((slope - 0.5).abs() < 0.1, "slope {slope}");
}

#[test]
fn lattice_defaults_cover_momenta_and_microscale() {
    let p = pairing();
    for h in [0.2, 0.1, 0.05] {
        let lat = Lattice::auto(h, 1, p.momentum_cutoff(), p.mu, p.tc, true).unwrap();
        assert_eq!(lat.grid.n % 2, 0);
        assert!(lat.resolves_interaction());
        assert!(lat.momentum_reach() >= p.momentum_cutoff());
        let ks: Vec<f64> = lat.fibers().iter().map(|g| g.bloch[0]).collect();
        let sum: f64 = ks.iter().sum();
        assert!(sum.abs() < 1e-12 && ks.iter().all(|k| k.abs() < std::f64::consts::PI));
    }
    let coarse = Lattice::new(0.2, 1, 20, 1).unwrap();
    let config = ModelConfig::benchmark(0.2);
    assert!(matches!(InteractionTable::new(&config.potential, &coarse), Err(Error::Resolution(_))));
    let system = LatticeSystem::new(&config, coarse).unwrap();
    let normal = system.normal_state(1.0).unwrap();
    assert!(matches!(bcs_free_energy(&normal, 1.0, &system), Err(Error::Resolution(_))));
}

#[test]
fn normal_state_attains_the_normal_free_energy() {
    let system = small_system(ExternalFields::cosine_w([1, 0, 0], 1.0));
    for t in [0.3, 0.77, 2.0] {
        let f = bcs_free_energy(&system.normal_state(1.0 / t).unwrap(), t, &system).unwrap();
        assert!((f.total - f.normal_reference).abs() < 1e-12 * (1.0 + f.normal_reference.abs()), "{f:?}");
        assert_eq!(f.interaction, 0.0);
        assert_eq!(f.total, f.kinetic - t * f.entropy + f.interaction);
    }
}

#[test]
fn normal_states_perturbed_without_pairing_cost_free_energy() {
    let system = small_system(ExternalFields::cosine_w([1, 0, 0], 1.0));
    let t = 0.6;
    let one = &system.one_body[0];
    let grid = &one.grid;
    let e = tcshift::linalg::eigh(&one.h_op).unwrap();
    let mut rng = random::rng(17);
    let f0 = system.normal_free_energy(t).unwrap();
    for _ in 0..20 {
        let occ: Vec<f64> = e
            .values
            .iter()
            .map(|&l| (specfun::fermi(l / t) + 0.2 * (rand::Rng::gen_range(&mut rng, -1.0..1.0))).clamp(0.0, 1.0))
            .collect();
        let v = &e.vectors;
        let gamma = &Mat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * occ[j]) * v.adjoint();
        let n = grid.len();
        let lower = &identity(n) - &conjugate_operator(&gamma, grid);
        let state = BdGState::custom(grid, blocks(&gamma, &Mat::zeros(n, n), &Mat::zeros(n, n), &lower)).unwrap();
        assert!(state.defects().unwrap().max() < 1e-12);
        let f = bcs_free_energy(&[state], t, &system).unwrap();
        assert!(f.total >= f0 - 1e-12 * (1.0 + f0.abs()), "{} < {f0}", f.total);
    }
}

#[test]
fn pairing_states_have_negative_interaction_energy() {
    let system = small_system(ExternalFields::cosine_w([1, 0, 0], 1.0));
    let p = pairing();
    let gaps = system.gap(&psi_plane_wave(), &|q| p.t(q)).unwrap();
    let t = p.tc;
    let f = bcs_free_energy(&system.gibbs(&gaps, 1.0 / t).unwrap(), t, &system).unwrap();
    assert!(f.interaction < 0.0 && f.interaction.is_finite());
}

#[test]
fn pair_kernel_inner_product_matches_trace() {
    let config = ModelConfig::benchmark(0.2);
    let system = LatticeSystem::new(&config, Lattice::new(0.2, 1, 40, 2).unwrap()).unwrap();
    let mut rng = random::rng(18);
    let n = system.lattice.grid.len();
    let a: Vec<CMat> = (0..2).map(|_| random::hermitian(&mut rng, n, 1.0)).collect();
    let b: Vec<CMat> = (0..2).map(|_| random::hermitian(&mut rng, n, 1.0)).collect();
    let (ka, kb) = (system.pair_kernel(&a).unwrap(), system.pair_kernel(&b).unwrap());
    let via_kernel: C64 = ka
        .shifts
        .iter()
        .zip(&kb.shifts)
        .map(|(x, y)| {
            let mut s = C64::default();
            for j in 0..n {
                for i in 0..n {
                    s += x[(i, j)].conj() * y[(i, j)];
                }
            }
            s
        })
        .sum();
    let direct = system.inner(&a, &b);
    assert!((via_kernel - direct).norm() < 1e-10 * (1.0 + direct.norm()));
}

#[test]
fn relative_entropy_is_nonnegative_and_quadratic() {
    let system = small_system(ExternalFields::cosine_w([1, 0, 0], 1.0));
    let beta = 1.0 / 0.7;
    let normal = system.normal_state(beta).unwrap();
    let own = relative_entropy(&normal[0], &normal[0]).unwrap();
    assert!(own.abs() < 1e-12, "{own}");
    let mut rng = random::rng(19);
    for _ in 0..100 {
        let g1 = random_gaps(&mut rng, &system, 1.0);
        let g2 = random_gaps(&mut rng, &system, 1.0);
        let s1 = system.gibbs(&g1, beta).unwrap();
        let s2 = system.gibbs(&g2, beta).unwrap();
        assert!(relative_entropy(&s1[0], &s2[0]).unwrap() >= -1e-12);
    }
    let base = random_gaps(&mut rng, &system, 1.0);
    let dir = random_gaps(&mut rng, &system, 1.0);
    let reference = system.gibbs(&base, beta).unwrap();
    let at = |eps: f64| {
        let g = GapOperator {
            delta: &base[0].delta + &dir[0].scaled(eps).delta,
            delta_bar: &base[0].delta_bar + &dir[0].scaled(eps).delta_bar,
        };
        relative_entropy(&system.gibbs(&[g], beta).unwrap()[0], &reference[0]).unwrap()
    };
    let (a, b) = (at(1e-2), at(5e-3));
    assert!(a > 0.0 && b > 0.0);
    assert!((a / b - 4.0).abs() < 0.1, "ratio {}", a / b);
}

#[test]
fn relative_entropy_flags_disjoint_support() {
    let grid = TorusGrid::new(1, 2).unwrap();
    let n = 2 * grid.len();
    let proj = Mat::from_fn(n, n, |i, j| if i == j && i < n / 2 { C64::new(1.0, 0.0) } else { C64::default() });
    let half = tcshift::linalg::scale(&identity(n), C64::new(0.5, 0.0));
    let prime = BdGState::custom(&grid, proj).unwrap();
    let gamma = BdGState::custom(&grid, half).unwrap();
    assert_eq!(relative_entropy(&gamma, &prime).unwrap(), f64::INFINITY);
}

#[test]
fn klein_inequality_holds_on_random_instances() {
    let mut rng = random::rng(20);
    for k in 0..100 {
        let n = 3 + k % 6;
        let h0 = random::block_diagonal(&mut rng, n, 0.5 + (k % 5) as f64);
        let gamma = random::density(&mut rng, 2 * n).unwrap();
        let gap = klein_gap(&gamma, &h0).unwrap();
        assert!(gap >= -1e-12, "instance {k}: {gap}");
        let g0 = tcshift::linalg::eigh(&h0).unwrap().apply(specfun::fermi);
        assert!(klein_gap(&g0, &h0).unwrap().abs() < 1e-12);
    }
    let mut off = random::block_diagonal(&mut rng, 3, 1.0);
    off[(0, 4)] = C64::new(0.1, 0.0);
    off[(4, 0)] = C64::new(0.1, 0.0);
    assert!(matches!(klein_gap(&identity(6), &off), Err(Error::Precondition(_))));
}

#[test]
fn klein_gap_vanishes_to_high_order_near_the_reference() {
    let mut rng = random::rng(21);
    let n = 4;
    let target = random::density(&mut rng, 2 * n).unwrap();
    // Γ = (1 - ε)Γ⁰ + εΓ₁ stays in [0, 1]
    let at = |h0: &CMat, eps: f64| {
        let g0 = tcshift::linalg::eigh(h0).unwrap().apply(specfun::fermi);
        let g = &tcshift::linalg::scale(&g0, C64::new(1.0 - eps, 0.0)) + &tcshift::linalg::scale(&target, C64::new(eps, 0.0));
        klein_gap(&g, h0).unwrap()
    };
    // Γ⁰ = 1/2: both sides agree beyond second order, so the gap is O(ε³) or smaller
    let zero = Mat::zeros(2 * n, 2 * n);
    let gaps: Vec<f64> = [0.4, 0.2, 0.1, 0.05].iter().map(|&e| at(&zero, e)).collect();
    for w in gaps.windows(2) {
        assert!(w[1] >= -1e-14 && w[1] < w[0] / 7.0, "{gaps:?}");
    }
    // general H⁰: the gap is nonnegative and decreases with ε
    let h0 = random::block_diagonal(&mut rng, n, 2.0);
    let gaps: Vec<f64> = [0.4, 0.2, 0.1, 0.05].iter().map(|&e| at(&h0, e)).collect();
    for w in gaps.windows(2) {
        assert!(w[1] >= 0.0 && w[1] < w[0], "{gaps:?}");
    }
}

#[test]
fn key_identity_holds_on_random_instances() {
    let mut rng = random::rng(22);
    for k in 0..20 {
        let f = random::fields(&mut rng, 1, 2, 1.0, if k % 2 == 0 { 0.0 } else { 0.5 });
        let system = small_system(f);
        let t = rand::Rng::gen_range(&mut rng, 0.3..1.2);
        let gaps = random_gaps(&mut rng, &system, 1.0);
        let tilde = system.table().unwrap().divide(&system.delta_kernel(&gaps).unwrap()).unwrap();
        let states = if k % 2 == 0 {
            system.gibbs(&gaps, 1.0 / t).unwrap()
        } else {
            let other = random_gaps(&mut rng, &system, 1.5);
            system.gibbs(&other, 1.0 / t).unwrap()
        };
        let r = key_identity_residual(&states, &gaps, &tilde, t, &system).unwrap();
        assert!(r.residual < 1e-10, "instance {k}: {r:?}");
        assert!(r.lhs.abs() > 1e-8);
    }
}

#[test]
fn key_identity_is_trivial_for_the_normal_state() {
    let system = small_system(ExternalFields::cosine_w([1, 0, 0], 1.0));
    let gaps = system.zero_gap();
    let tilde = system.table().unwrap().divide(&system.delta_kernel(&gaps).unwrap()).unwrap();
    let r = key_identity_residual(&system.normal_state(2.0).unwrap(), &gaps, &tilde, 0.5, &system).unwrap();
    assert_eq!(r.lhs, 0.0);
    assert!(r.residual < 1e-10, "{r:?}");
}

#[test]
fn vanishing_potential_cannot_carry_a_gap() {
    let well = InteractionPotential::from_fn(|x: &[f64]| if x[0].abs() < 1.0 { -1.0 } else { 0.0 }, 1.0);
    let config = ModelConfig::benchmark(0.2).with_potential(well);
    let system = LatticeSystem::new(&config, Lattice::new(0.2, 1, 40, 1).unwrap()).unwrap();
    let mut rng = random::rng(23);
    let gaps = random_gaps(&mut rng, &system, 1.0);
    let delta = system.delta_kernel(&gaps).unwrap();
    assert!(matches!(system.table().unwrap().divide(&delta), Err(Error::Domain(_))));
    let zero = system.table().unwrap().divide(&system.delta_kernel(&system.zero_gap()).unwrap()).unwrap();
    let states = system.gibbs(&gaps, 1.0).unwrap();
    assert!(matches!(key_identity_residual(&states, &gaps, &zero, 1.0, &system), Err(Error::Precondition(_))));
}

#[test]
fn ktaw_is_bounded_below_by_twice_the_temperature() {
    let grid = TorusGrid::new(1, 16).unwrap();
    let (h, mu, t) = (0.25, 1.0, 0.4);
    let free = assemble_ktaw(t, h, mu, &ExternalFields::zero(), &grid).unwrap();
    for i in 0..grid.len() {
        let x = (h * grid.momentum(i)[0]).powi(2) - mu;
        assert!((free[(i, i)].re - specfun::kt(x, t)).abs() < 1e-12 * (1.0 + x.abs()));
    }
    let mut rng = random::rng(24);
    for _ in 0..10 {
        let f = random::fields(&mut rng, 1, 2, 2.0, 0.5);
        let k = assemble_ktaw(t, h, mu, &f, &grid).unwrap();
        assert!(hermitian_defect(&k) < 1e-12 * max_abs(&k));
        let low = eigvalsh(&k).unwrap()[0];
        assert!(low >= 2.0 * t - 1e-10, "{low}");
    }
    assert!(matches!(assemble_ktaw(0.0, h, mu, &ExternalFields::zero(), &grid), Err(Error::Domain(_))));
}

#[test]
fn semiclassical_terms_vanish_without_pairing() {
    let p = pairing();
    let lat = Lattice::auto(0.2, 1, p.momentum_cutoff(), p.mu, p.tc, false).unwrap();
    let fields = ExternalFields::cosine_w([1, 0, 0], 1.0);
    let zero = GlField::zeros(1, 1).unwrap();
    let r = semiclassical_residual(&zero, p, p.beta_c, &fields, &lat).unwrap();
    assert_eq!((r.lhs, r.e1_term, r.e2_term, r.residual), (0.0, 0.0, 0.0, 0.0));
    let a = alpha_delta_deviation(&zero, p, p.beta_c, &fields, &lat).unwrap();
    assert_eq!((a.h1_norm_dev, a.h1_norm_lead), (0.0, 0.0));
}

#[test]
fn semiclassical_leading_term_is_negative_and_dominant() {
    let p = pairing();
    let lat = Lattice::auto(0.1, 1, p.momentum_cutoff(), p.mu, p.tc, false).unwrap();
    let fields = ExternalFields::cosine_w([1, 0, 0], 1.0);
    let r = semiclassical_residual(&psi_plane_wave(), p, p.beta_c, &fields, &lat).unwrap();
    assert!(r.e1_term < 0.0);
    assert!(r.residual.abs() < 0.05 * r.e1_term.abs(), "{r:?}");
    let short = Lattice::new(0.1, 1, 8, 1).unwrap();
    assert!(matches!(semiclassical_residual(&psi_plane_wave(), p, p.beta_c, &fields, &short), Err(Error::Resolution(_))));
}

#[test]
fn leading_profile_is_the_pair_wave_function_at_the_critical_temperature() {
    let p = pairing();
    let phi = leading_profile(p, p.beta_c);
    let grid = TorusGrid::new(1, 60).unwrap();
    let h = 0.2;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..grid.len() {
        let q = h * grid.momentum(i)[0].abs();
        worst = worst.max((phi(q) - p.profile.alpha_hat(q)).abs());
        scale = scale.max(p.profile.alpha_hat(q).abs());
    }
    assert!(worst <= 1e-6 * scale, "{worst} vs {scale}");
}

#[test]
fn trial_state_gain_vanishes_at_zero_amplitude() {
    let p = pairing();
    let (c, s) = gl_data();
    let config = ModelConfig::benchmark(0.2);
    let lat = Lattice::auto(0.2, 1, p.momentum_cutoff(), p.mu, p.tc, true).unwrap();
    let scan = WitnessScan::new(p, c, s, &config, lat).unwrap();
    for t in [0.5 * p.tc, p.tc, 1.2 * p.tc] {
        assert_eq!(scan.gain(t, 0.0).unwrap(), 0.0);
    }
    assert!(scan.gain(0.9 * p.tc, scan.theta_scale(2.5)).unwrap() < 0.0);
    let coarse = Lattice::new(0.2, 1, 20, 1).unwrap();
    assert!(matches!(WitnessScan::new(p, c, s, &config, coarse), Err(Error::Resolution(_))));
}
