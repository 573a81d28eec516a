use ginreal::kernel::*;
use ginreal::real::DoubleDouble;
use proptest::prelude::*;
use std::sync::OnceLock;

fn ctx(m: u32) -> &'static KernelContext {
    static CTX: [OnceLock<KernelContext>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    CTX[m as usize - 1].get_or_init(|| make_context(50, m).unwrap())
}

fn large_ctx(m: u32) -> &'static KernelContext {
    static CTX: [OnceLock<KernelContext>; 2] = [OnceLock::new(), OnceLock::new()];
    CTX[m as usize - 1].get_or_init(|| make_context(400, m).unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 { 0.0 } else { (a - b).abs() / s }
}

#[test]
fn reflection_symmetries_on_grid() {
    let grid = [-0.8, -0.35, 0.1, 0.45, 0.9];
    for m in 1..=3 {
        let c = ctx(m);
        for &x in &grid {
            for &y in &grid {
                let s1 = s_kernel_log(x, y, c).unwrap();
                let s2 = s_kernel_log(-x, -y, c).unwrap();
                assert!(s1.rel_diff(s2) <= 1e-9, "S m={m} ({x},{y})");
                let (d1, d2) = (d_kernel_log(x, y, c), d_kernel_log(-x, -y, c));
                assert!(d1.rel_diff(-d2) <= 1e-9, "D m={m} ({x},{y})");
                let (i1, i2) = (i_kernel(x, y, c).unwrap(), i_kernel(-x, -y, c).unwrap());
                assert!(rel(i1, -i2) <= 1e-9, "I m={m} ({x},{y}): {i1} {i2}");
            }
        }
    }
}

#[test]
fn moment_identities_in_double_double() {
    for &(x, n, m) in &[(0.3, 20, 1), (0.8, 60, 2)] {
        let r = integral_identities::<DoubleDouble>(x, n, m, &IdentityQuadrature::new(m)).unwrap();
        assert!(r.sign_rel_err <= 1e-7, "{r:?}");
        assert!(r.moment_rel_err <= 1e-6, "{r:?}");
    }
}

#[test]
fn mixed_sign_bulk_entries_are_negligible() {
    let c = make_context(400, 1).unwrap();
    for &(x, y) in &[(0.3, -0.4), (-0.6, 0.5), (0.8, -0.3)] {
        let k = normalized_kernel(x, y, &c).unwrap();
        for v in [k.d, k.s_xy, k.s_yx, k.i] {
            assert!(v.abs() <= 1e-8, "({x},{y}): {k:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn diagonal_density_is_nonnegative(x in -0.99f64..0.99, m in 1u32..=3) {
        prop_assume!(x.abs() > 1e-3);
        prop_assert!(s_kernel(x, x, ctx(m)).unwrap() >= 0.0);
    }

    #[test]
    fn reflection_symmetry_random(x in -1.2f64..1.2, y in -1.2f64..1.2) {
        let c = ctx(1);
        let s1 = s_kernel_log(x, y, c).unwrap();
        let s2 = s_kernel_log(-x, -y, c).unwrap();
        prop_assert!(s1.rel_diff(s2) <= 1e-9);
        prop_assert!(rel(i_kernel(x, y, c).unwrap(), -i_kernel(-x, -y, c).unwrap()) <= 1e-9);
    }

    #[test]
    fn integrated_kernel_is_antisymmetric(x in -0.9f64..0.9, dy in -0.5f64..0.5) {
        // I(x,y) = −I(y,x) follows from the Pfaffian structure of the kernel
        let c = ctx(1);
        let y = x + dy;
        let (a, b) = (i_kernel(x, y, c).unwrap(), i_kernel(y, x, c).unwrap());
        prop_assert!((a + b).abs() <= 1e-9, "{} {}", a, b);
    }

    #[test]
    fn same_sign_decay(xi in 2.0f64..8.0, sep in 8.0f64..12.0, m in 1u32..=2) {
        // root coordinates: x = (ξ/√N)^m, separation in units of 1/√(Nm)
        let c = large_ctx(m);
        let n = 400f64;
        let mf = m as f64;
        let x = (xi / n.sqrt()).powi(m as i32);
        let ry = xi / n.sqrt() + sep / (n * mf).sqrt();
        prop_assume!(ry < 0.95);
        let y = ry.powi(m as i32);
        let k = normalized_kernel(x, y, c).unwrap();
        let dxi = (ry - xi / n.sqrt()) * n.sqrt();
        let bound = 10.0 * (-0.2 * dxi * dxi).exp();
        for v in [k.d, k.s_xy, k.s_yx, k.i] {
            prop_assert!(v.abs() <= bound, "{:?} bound {}", k, bound);
        }
    }
}
