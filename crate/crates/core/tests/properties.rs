mod common;

use afields::ad::{Real, D1, D2};
use afields::algebroid::{anchor_apply, bracket, BaseFunction};
use afields::grid::{fd_apply, fit_order, Layout, Norms, Stencil};
use afields::legendre::{legendre_forward, legendre_invert};
use afields::prolongation::{vertical_endomorphism, vertical_lift, ProlongedElement};
use afields::{Grid, GridField, LegendreMap, SectionField, Side, StructureTensor, WhitneyPoint};
use common::{coupled_lie_poisson, lie_poisson};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn coeffs(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0_f64, len)
}

/// `σ^α(q) = a^α + b^α_i q^i + c^α q^0 q^1`.
fn section(c: Vec<f64>) -> SectionField {
    SectionField::new(move |q: &[D1]| {
        (0..3)
            .map(|al| {
                let mut s = D1::from_f64(c[al * 5]);
                for i in 0..3 {
                    s += q[i] * c[al * 5 + 1 + i];
                }
                s + q[0] * q[1] * c[al * 5 + 4]
            })
            .collect()
    })
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_antisymmetric(s in coeffs(15), t in coeffs(15), q in coeffs(3)) {
        let alg = lie_poisson();
        let st = bracket(&alg, &section(s.clone()), &section(t.clone()), &q).unwrap();
        let ts = bracket(&alg, &section(t), &section(s), &q).unwrap();
        let neg: Vec<f64> = ts.iter().map(|v| -v).collect();
        prop_assert!(close(&st, &neg, 1e-12));
    }

    #[test]
    fn bracket_obeys_leibniz(s in coeffs(15), t in coeffs(15), q in coeffs(3), f in coeffs(3)) {
        let alg = lie_poisson();
        let ff = f.clone();
        let func = BaseFunction::new(move |x: &[D2]| (x[0] * ff[0] + x[1] * x[2] * ff[1]).sin() + x[2] * ff[2]);
        let sig = section(s);
        let tau = section(t);
        let lhs = bracket(&alg, &sig, &tau.scaled(func.clone()), &q).unwrap();
        let base = bracket(&alg, &sig, &tau, &q).unwrap();
        let rho_s = anchor_apply(&alg, &q, &sig.eval(&q)).unwrap();
        let df: f64 = func.gradient(&q).iter().zip(&rho_s).map(|(a, b)| a * b).sum();
        let fv = func.eval(&q);
        let rhs: Vec<f64> = base.iter().zip(tau.eval(&q)).map(|(b, t)| fv * b + df * t).collect();
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn structure_tensor_apply_is_bilinear(u in coeffs(3), v in coeffs(3), w in coeffs(3), a in -2.0..2.0_f64) {
        let c = StructureTensor::levi_civita();
        let uw: Vec<f64> = u.iter().zip(&w).map(|(x, y)| a * x + y).collect();
        let lhs = c.apply(&uw, &v);
        let (cu, cw) = (c.apply(&u, &v), c.apply(&w, &v));
        let rhs: Vec<f64> = cu.iter().zip(&cw).map(|(x, y)| a * x + y).collect();
        prop_assert!(close(&lhs, &rhs, 1e-12));
        let uu = c.apply(&u, &u);
        prop_assert!(uu.iter().all(|x| x.abs() <= 1e-15));
    }

    #[test]
    fn vertical_lift_is_linear(y in coeffs(6), e1 in coeffs(3), e2 in coeffs(3), a in -2.0..2.0_f64, slot in 0..2_usize) {
        let b = WhitneyPoint::new(vec![], DMatrix::from_vec(3, 2, y));
        let mix: Vec<f64> = e1.iter().zip(&e2).map(|(x, z)| a * x + z).collect();
        let lhs = vertical_lift(&b, &mix, slot).unwrap();
        let rhs = vertical_lift(&b, &e1, slot).unwrap().scaled(a).plus(&vertical_lift(&b, &e2, slot).unwrap());
        prop_assert!(lhs.plus(&rhs.scaled(-1.0)).amax() <= 1e-15);
        prop_assert_eq!(lhs.z.amax(), 0.0);
    }

    #[test]
    fn vertical_endomorphisms_compose_to_zero(v in coeffs(3 + 9), a in 0..3_usize, b in 0..3_usize) {
        let z = ProlongedElement::from_vector(Side::Lagrangian, 3, 3, &v).unwrap();
        let jj = vertical_endomorphism(&vertical_endomorphism(&z, b).unwrap(), a).unwrap();
        prop_assert_eq!(jj.amax(), 0.0);
    }

    #[test]
    fn central_difference_is_exact_on_quadratics(c in coeffs(6), i in 1..6_usize, j in 1..6_usize) {
        let grid = Grid::new(vec![7, 7], vec![0.1, 0.25], vec![-0.3, 0.2], vec![false, false]).unwrap();
        let f = |t: &[f64]| c[0] + c[1] * t[0] + c[2] * t[1] + c[3] * t[0] * t[0] + c[4] * t[0] * t[1] + c[5] * t[1] * t[1];
        let node = [i, j];
        let t = grid.coords(&node);
        let sample = |nd: &[usize]| Ok(DVector::from_element(1, f(&grid.coords(nd))));
        let d0 = fd_apply(&grid, &node, 0, Stencil::Central, sample).unwrap()[0];
        let d1 = fd_apply(&grid, &node, 1, Stencil::Central, sample).unwrap()[0];
        prop_assert!((d0 - (c[1] + 2.0 * c[3] * t[0] + c[4] * t[1])).abs() <= 1e-12);
        prop_assert!((d1 - (c[2] + c[4] * t[0] + 2.0 * c[5] * t[1])).abs() <= 1e-12);
    }

    #[test]
    fn fit_order_recovers_power_laws(p in 0.5..4.0_f64, c in 0.01..100.0_f64) {
        let h = [0.1_f64, 0.05, 0.025, 0.0125];
        let e: Vec<f64> = h.iter().map(|x| c * x.powf(p)).collect();
        prop_assert!((fit_order(&h, &e).unwrap() - p).abs() <= 1e-9);
    }

    #[test]
    fn norms_scale_linearly(v in coeffs(12), s in -3.0..3.0_f64, vol in 0.01..1.0_f64) {
        let rows: Vec<&[f64]> = v.chunks(3).collect();
        let n = Norms::of(rows.iter().copied(), vol);
        let scaled: Vec<f64> = v.iter().map(|x| s * x).collect();
        let m = Norms::of(scaled.chunks(3), vol);
        prop_assert!((m.linf - s.abs() * n.linf).abs() <= 1e-12);
        prop_assert!((m.l2 - s.abs() * n.l2).abs() <= 1e-12);
        prop_assert!(n.l2 <= n.linf * (v.len() as f64 * vol).sqrt() + 1e-12);
    }

    #[test]
    fn csv_round_trips(data in coeffs(4 * 3 * 5), side in prop::bool::ANY) {
        let side = if side { Side::Lagrangian } else { Side::Hamiltonian };
        let grid = Grid::new(vec![4, 3], vec![0.5, 0.25], vec![1.0, -1.0], vec![false, false]).unwrap();
        let field = GridField::new(grid, Layout { side, n: 1, m: 2, k: 2 }, data).unwrap();
        let mut buf = Vec::new();
        field.write_csv(&mut buf).unwrap();
        let back = GridField::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.layout, field.layout);
        prop_assert_eq!(&back.grid.shape, &field.grid.shape);
        prop_assert_eq!(back.data, field.data);
    }

    #[test]
    fn legendre_round_trips(q in coeffs(3), y in coeffs(6)) {
        let map = LegendreMap::new(coupled_lie_poisson(2));
        let b = WhitneyPoint::new(q, DMatrix::from_vec(3, 2, y));
        let p = legendre_forward(&map, &b).unwrap();
        let guess = WhitneyPoint::new(b.q.clone(), DMatrix::zeros(3, 2));
        let inv = legendre_invert(&map, &p, &guess).unwrap();
        prop_assert!((&inv.point.y - &b.y).amax() <= 1e-10);
    }
}
