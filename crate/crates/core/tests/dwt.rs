mod common;

use common::{dense_dwt_matrix, mat_t_vec, mat_vec, random_vec, rng};
use poswave::dwt::{forward, inverse, residual_time_domain, Decomposition, Wavelet};
use proptest::prelude::*;

#[test]
fn filter_invariants() {
    for w in Wavelet::ALL {
        let f = w.filter();
        let h = f.low_pass();
        let sum: f64 = h.iter().sum();
        let sq: f64 = h.iter().map(|x| x * x).sum();
        assert!((sum - 2f64.sqrt()).abs() < 1e-12, "{w}: sum {sum}");
        assert!((sq - 1.0).abs() < 1e-12, "{w}: energy {sq}");
        for m in 1..h.len() / 2 {
            let dot: f64 = (0..h.len() - 2 * m).map(|k| h[k] * h[k + 2 * m]).sum();
            assert!(dot.abs() < 1e-12, "{w}: shift {m} gives {dot}");
        }
        let g = f.high_pass();
        assert!(g.iter().sum::<f64>().abs() < 1e-12);
    }
}

#[test]
fn tap_counts() {
    let counts: Vec<usize> = Wavelet::ALL.iter().map(|w| w.filter().low_pass().len()).collect();
    assert_eq!(counts, vec![2, 4, 8, 20]);
}

#[test]
fn forward_matches_dense_matrix() {
    let mut r = rng(11);
    for w in Wavelet::ALL {
        for n in [8usize, 16, 32] {
            for j0 in [0usize, 1, 2] {
                let f = w.filter();
                let mat = dense_dwt_matrix(f.low_pass(), n, j0);
                let x = random_vec(&mut r, n);
                let fast = forward(&x, &f, j0).unwrap();
                let slow = mat_vec(&mat, n, &x);
                for (a, b) in fast.as_slice().iter().zip(&slow) {
                    assert!((a - b).abs() < 1e-10, "{w} n={n} j0={j0}");
                }
            }
        }
    }
}

#[test]
fn dense_matrix_is_orthonormal() {
    for w in Wavelet::ALL {
        let n = 16;
        let m = dense_dwt_matrix(w.filter().low_pass(), n, 1);
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| m[i * n + k] * m[j * n + k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn impulse_reproduces_dense_column() {
    let f = Wavelet::Daub4.filter();
    let n = 16;
    let m = dense_dwt_matrix(f.low_pass(), n, 2);
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let col = forward(&e, &f, 2).unwrap();
        for (r, v) in col.as_slice().iter().enumerate() {
            assert!((v - m[r * n + i]).abs() < 1e-12);
        }
    }
}

#[test]
fn residual_matches_dense_transpose() {
    let mut r = rng(5);
    for w in Wavelet::ALL {
        let f = w.filter();
        let n = 8;
        let mat = dense_dwt_matrix(f.low_pass(), n, 1);
        let d = Decomposition::new(random_vec(&mut r, n), 1).unwrap();
        let t = Decomposition::new(random_vec(&mut r, n), 1).unwrap();
        let e = residual_time_domain(&d, &t, &f).unwrap();
        let diff: Vec<f64> = d.as_slice().iter().zip(t.as_slice()).map(|(a, b)| a - b).collect();
        let want = mat_t_vec(&mat, n, &diff);
        for (a, b) in e.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn residual_identity_cases() {
    let f = Wavelet::Haar.filter();
    let d = forward(&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0], &f, 0).unwrap();
    assert!(residual_time_domain(&d, &d, &f).unwrap().iter().all(|&x| x == 0.0));
    let zero = Decomposition::zeros(8, 0).unwrap();
    assert_eq!(residual_time_domain(&d, &zero, &f).unwrap(), inverse(&d, &f));
}

#[test]
fn round_trip_and_parseval_large() {
    let mut r = rng(99);
    for w in Wavelet::ALL {
        let f = w.filter();
        for p in 3..=10 {
            let n = 1usize << p;
            let x = random_vec(&mut r, n);
            let d = forward(&x, &f, 0).unwrap();
            let ex: f64 = x.iter().map(|v| v * v).sum();
            assert!((d.energy() - ex).abs() < 1e-10 * ex.max(1.0));
            let back = inverse(&d, &f);
            assert!(back.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-10));
        }
    }
}

#[test]
fn non_dyadic_is_rejected() {
    let err = forward(&[1.0; 12], &Wavelet::Haar.filter(), 0).unwrap_err();
    assert!(err.to_string().contains("12"));
}

#[test]
fn serialization_order_is_coarse_then_levels() {
    let d = Decomposition::new((0..16).map(f64::from).collect(), 1).unwrap();
    let mut buf = Vec::new();
    d.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "kind,level,index,value");
    assert_eq!(lines[1], "coarse,1,0,0");
    assert_eq!(lines[3], "detail,1,0,2");
    assert_eq!(lines[5], "detail,2,0,4");
    assert_eq!(lines[16], "detail,3,7,15");
    assert_eq!(Decomposition::read_csv(text.as_bytes()).unwrap(), d);
}

fn wavelet_strategy() -> impl Strategy<Value = Wavelet> {
    prop::sample::select(Wavelet::ALL.to_vec())
}

proptest! {
    #[test]
    fn round_trip_property(
        w in wavelet_strategy(),
        p in 2usize..8,
        seed in any::<u64>(),
    ) {
        let n = 1usize << p;
        let f = w.filter();
        let x = random_vec(&mut rng(seed), n);
        let j0 = (seed as usize) % p;
        let d = forward(&x, &f, j0).unwrap();
        let back = inverse(&d, &f);
        for (a, b) in back.iter().zip(&x) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn linearity_property(
        w in wavelet_strategy(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        seed in any::<u64>(),
    ) {
        let f = w.filter();
        let mut r = rng(seed);
        let u = Decomposition::new(random_vec(&mut r, 32), 2).unwrap();
        let v = Decomposition::new(random_vec(&mut r, 32), 2).unwrap();
        let combo = u.with_coeffs(
            u.as_slice().iter().zip(v.as_slice()).map(|(x, y)| a * x + b * y).collect(),
        ).unwrap();
        let lhs = inverse(&combo, &f);
        let (iu, iv) = (inverse(&u, &f), inverse(&v, &f));
        for i in 0..32 {
            prop_assert!((lhs[i] - (a * iu[i] + b * iv[i])).abs() < 1e-10);
        }
    }
}
