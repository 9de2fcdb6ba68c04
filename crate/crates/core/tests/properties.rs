mod common;

use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use commdim::bounds::{binomial, faces, nrank_lb_from_rnrank, phi_prime, phi_r};
use commdim::ensembles::antidist_matrix;
use commdim::factor::{nmf, nmf_rank_search, stochastic_normalize, NmfConfig};
use commdim::io::{format_matrix, parse_matrix, MatrixFormat};
use commdim::majorize::{uw_leq_identity, Answer, MajorizationWitness};
use commdim::matcore::{deterministic_dimension, numerical_rank, reduce, validate};
use commdim::quantum::{gram, qubit_implementation};
use commdim::shared::{block_factorization, min_coordinated_actions, mix};
use commdim::{CommMatrix, Error, Tolerances};

use common::{random_protocol, random_stochastic};

fn tol() -> Tolerances {
    Tolerances::default()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn max_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Stochastic matrix with some rows copied and some columns forced to zero.
fn redundant(seed: u64, n: usize, m: usize) -> CommMatrix {
    let mut r = rng(seed);
    let mut base = random_stochastic(&mut r, n, m, 0.4);
    if m > 1 && r.random_bool(0.5) {
        let dead = r.random_range(0..m);
        let alive = (dead + 1) % m;
        for mut row in base.rows_mut() {
            row[alive] += row[dead];
            row[dead] = 0.0;
        }
    }
    for _ in 0..n / 2 {
        let (a, b) = (r.random_range(0..n), r.random_range(0..n));
        let copy = base.row(a).to_owned();
        base.row_mut(b).assign(&copy);
    }
    validate(base, &tol()).unwrap()
}

fn deterministic(seed: u64, n: usize, m: usize) -> CommMatrix {
    let mut r = rng(seed);
    let mut c = Array2::zeros((n, m));
    for a in 0..n {
        c[[a, r.random_range(0..m)]] = 1.0;
    }
    validate(c, &tol()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduce_reconstructs_and_is_idempotent(seed: u64, n in 1usize..9, m in 1usize..9) {
        let c = redundant(seed, n, m);
        let red = reduce(&c, &tol());
        prop_assert!(max_diff(&red.reconstruct(), c.as_array()) <= 1e-15);

        let again = reduce(&red.reduced, &tol());
        prop_assert_eq!(again.reduced.shape(), red.reduced.shape());
        prop_assert_eq!(&again.reduced, &red.reduced);

        // no zero columns survive, and rows are pairwise distinct
        let v = red.reduced.view();
        for col in v.columns() {
            prop_assert!(col.iter().any(|&x| x >= tol().nonneg_tol));
        }
        for i in 0..v.nrows() {
            for j in i + 1..v.nrows() {
                let gap = v.row(i).iter().zip(v.row(j)).fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
                prop_assert!(gap > tol().entry_eq_tol);
            }
        }
        prop_assert!(numerical_rank(&red.reduced, &tol()) == numerical_rank(&c, &tol()));
    }

    #[test]
    fn deterministic_dimension_counts_distinct_rows(seed: u64, n in 1usize..12, m in 1usize..8) {
        let c = deterministic(seed, n, m);
        let mut distinct: Vec<usize> = c
            .view()
            .rows()
            .into_iter()
            .map(|row| row.iter().position(|&x| x == 1.0).unwrap())
            .collect();
        distinct.sort_unstable();
        distinct.dedup();
        prop_assert_eq!(deterministic_dimension(&c, &tol()).unwrap(), distinct.len());
    }

    #[test]
    fn rank_is_bounded_and_row_order_free(seed: u64, n in 1usize..9, m in 1usize..9) {
        let c = redundant(seed, n, m);
        let rank = numerical_rank(&c, &tol());
        prop_assert!(rank >= 1 && rank <= n.min(m));
        let mut rows: Vec<Vec<f64>> = c.view().rows().into_iter().map(|r| r.to_vec()).collect();
        rows.reverse();
        let flipped = CommMatrix::from_rows(&rows, &tol()).unwrap();
        prop_assert_eq!(numerical_rank(&flipped, &tol()), rank);
    }

    #[test]
    fn validate_rejects_broken_row_sums(seed: u64, n in 1usize..8, m in 1usize..8) {
        let mut r = rng(seed);
        let mut raw = random_stochastic(&mut r, n, m, 0.2);
        prop_assert!(validate(raw.clone(), &tol()).is_ok());
        let (a, b) = (r.random_range(0..n), r.random_range(0..m));
        raw[[a, b]] += 1e-3;
        let rejected = matches!(validate(raw, &tol()), Err(Error::RowSumViolation { row, .. }) if row == a + 1);
        prop_assert!(rejected);
    }

    #[test]
    fn stochastic_normalize_keeps_the_product(seed: u64, n in 1usize..7, d in 1usize..6, m in 1usize..7) {
        let mut r = rng(seed);
        let l = random_stochastic(&mut r, n, d, 0.3);
        let rr = random_stochastic(&mut r, d, m, 0.3);
        // skew the inner scaling so W, H are far from stochastic
        let scale: Vec<f64> = (0..d).map(|_| 10f64.powf(r.random_range(-2.0..2.0))).collect();
        let w = Array2::from_shape_fn((n, d), |(i, j)| l[[i, j]] * scale[j]);
        let h = Array2::from_shape_fn((d, m), |(j, b)| rr[[j, b]] / scale[j]);
        let f = stochastic_normalize(w.view(), h.view(), &tol()).unwrap();
        prop_assert!(f.inner_dim() <= d);
        prop_assert!(max_diff(&f.product(), &l.dot(&rr)) <= 1e-12);
        for m in [&f.l, &f.r] {
            for row in m.rows() {
                prop_assert!((row.sum() - 1.0).abs() <= 1e-12);
                prop_assert!(row.iter().all(|&x| x >= 0.0));
            }
        }
    }

    #[test]
    fn block_factorization_matches_mixture(seed: u64, k in 1usize..5, d in 1usize..4, n in 1usize..6, m in 1usize..6) {
        let p = random_protocol(&mut rng(seed), k, d, n, m);
        let mixed = mix(&p, &tol()).unwrap();
        let bf = block_factorization(&p);
        prop_assert_eq!(bf.inner_dim(), d * k);
        prop_assert!(max_diff(&bf.product(), mixed.as_array()) <= 1e-12);
        // the block form is itself a valid nonnegative factorization
        prop_assert!(bf.l.iter().chain(bf.r.iter()).all(|&x| x >= 0.0));
    }

    #[test]
    fn coordinated_actions_bracket(lb in 1usize..500, d in 1usize..50) {
        let k = min_coordinated_actions(lb, d).unwrap();
        prop_assert!(d * k >= lb);
        prop_assert!(d * (k - 1) < lb);
        prop_assert!(min_coordinated_actions(lb + 1, d).unwrap() >= k);
        prop_assert!(min_coordinated_actions(lb, d + 1).unwrap() <= k);
    }

    #[test]
    fn io_round_trip_is_byte_exact(seed: u64, n in 1usize..8, m in 1usize..8) {
        let raw = random_stochastic(&mut rng(seed), n, m, 0.3);
        for fmt in [MatrixFormat::Csv, MatrixFormat::Json] {
            let text = format_matrix(&raw, fmt);
            let back = parse_matrix(&text, fmt).unwrap();
            prop_assert_eq!(&back, &raw);
            prop_assert_eq!(format_matrix(&back, fmt), text);
        }
    }

    #[test]
    fn composed_witnesses_verify(seed: u64, n in 1usize..6, p in 1usize..5, q in 1usize..5, m in 1usize..6) {
        // E (q x q) <- D = L2 E R2 (p x p) <- C = L1 D R1 (n x m)
        let mut r = rng(seed);
        let e = random_stochastic(&mut r, q, q, 0.3);
        let w2 = MajorizationWitness {
            l: random_stochastic(&mut r, p, q, 0.3),
            r: random_stochastic(&mut r, q, p, 0.3),
            residual: 0.0,
        };
        let d = w2.l.dot(&e).dot(&w2.r);
        let w1 = MajorizationWitness {
            l: random_stochastic(&mut r, n, p, 0.3),
            r: random_stochastic(&mut r, p, m, 0.3),
            residual: 0.0,
        };
        let c = validate(w1.l.dot(&d).dot(&w1.r), &tol()).unwrap();
        let both = w1.compose(&w2);
        prop_assert!(both.verify(&c, e.view(), &tol()).unwrap() <= 1e-12);
    }

    #[test]
    fn antidist_structure(n in 2usize..200) {
        let a = antidist_matrix(n).unwrap();
        let v = a.view();
        for i in 0..n {
            prop_assert_eq!(v[[i, i]], 0.0);
            prop_assert!((v.row(i).sum() - 1.0).abs() <= 1e-12);
            for j in 0..n {
                prop_assert_eq!(v[[i, j]], v[[j, i]]);
                prop_assert_eq!(v[[i, j]], v[[(i + 1) % n, (j + 1) % n]]);
            }
        }
        let g = gram(&qubit_implementation(n).unwrap(), &tol()).unwrap();
        prop_assert!(max_diff(g.as_array(), a.as_array()) <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn faces_vertices_and_edges(d in 2usize..10, extra in 1usize..20) {
        let n = d + extra;
        prop_assert_eq!(faces(n, d, 0).unwrap(), n as u128);
        // cyclic polytopes of dimension >= 4 are neighborly
        let edges = faces(n, d, 1).unwrap();
        if d >= 4 {
            prop_assert_eq!(edges, binomial(n as i64, 2).unwrap());
        } else {
            prop_assert!(edges <= binomial(n as i64, 2).unwrap());
        }
    }

    #[test]
    fn faces_satisfy_euler(d in 2usize..10, extra in 1usize..20) {
        let n = (d + extra) as u128;
        let mut even: u128 = 0;
        let mut odd: u128 = 0;
        for k in 0..d {
            let f = faces(n as usize, d, k).unwrap();
            if k % 2 == 0 { even += f } else { odd += f }
        }
        // sum (-1)^k f_k = 1 - (-1)^d over proper faces
        let expected: i128 = if d % 2 == 0 { 0 } else { 2 };
        prop_assert_eq!(even as i128 - odd as i128, expected);
    }

    #[test]
    fn faces_grow_with_vertices(d in 2usize..9, extra in 1usize..15, k_frac in 0.0f64..1.0) {
        let k = ((d as f64) * k_frac) as usize % d;
        let n = d + extra;
        prop_assert!(faces(n + 1, d, k).unwrap() >= faces(n, d, k).unwrap());
    }

    #[test]
    fn phi_is_monotone_and_ordered(r_plus in 3usize..24) {
        let p = phi_prime(r_plus).unwrap();
        let p3 = phi_r(r_plus, 3).unwrap();
        prop_assert!(p <= p3);
        prop_assert!(phi_prime(r_plus + 1).unwrap() >= p);
        prop_assert!(phi_r(r_plus + 1, 3).unwrap() >= p3);
        prop_assert!(p >= r_plus as u128);
    }

    #[test]
    fn nrank_lower_bound_is_sound(rnrank in 3usize..400) {
        let lb = nrank_lb_from_rnrank(rnrank, 3).unwrap();
        prop_assert!(lb >= 3 && lb <= rnrank);
        // lb is the least r+ whose bound admits rnrank
        if lb < rnrank {
            prop_assert!(phi_prime(lb).unwrap() >= rnrank as u128);
        }
        if lb > 3 {
            prop_assert!(phi_prime(lb - 1).unwrap() < rnrank as u128);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn nmf_is_deterministic(seed: u64, n in 2usize..6, m in 2usize..6) {
        let c = validate(random_stochastic(&mut rng(seed), n, m, 0.3), &tol()).unwrap();
        let r = n.min(m) - 1;
        let cfg = NmfConfig { max_iter: 300, restarts: 6, seed, target_residual: 1e-6 };
        let a = nmf(&c, r, &cfg);
        let b = nmf(&c, r, &cfg);
        match (a, b) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
            (Err(Error::NmfFailed { best_residual: x }), Err(Error::NmfFailed { best_residual: y })) => {
                prop_assert_eq!(x.to_bits(), y.to_bits())
            }
            other => prop_assert!(false, "diverged: {other:?}"),
        }
    }

    #[test]
    fn nmf_never_beats_the_rank(seed: u64, n in 2usize..6, m in 2usize..6) {
        let c = validate(random_stochastic(&mut rng(seed), n, m, 0.2), &tol()).unwrap();
        let cfg = NmfConfig { max_iter: 2000, restarts: 4, seed, target_residual: 1e-6 };
        let f = nmf_rank_search(&c, 1, n.min(m), &cfg).unwrap();
        prop_assert!(f.inner_dim >= numerical_rank(&c, &tol()));
        prop_assert!(f.residual <= 1e-6);
        prop_assert!(f.w.iter().chain(f.h.iter()).all(|&x| x >= 0.0));
    }

    #[test]
    fn identity_answers_are_monotone(n in 4usize..12) {
        let a = antidist_matrix(n).unwrap();
        let cfg = NmfConfig { restarts: 8, ..NmfConfig::default() };
        let answers: Vec<Answer> = (1..=n).map(|d| uw_leq_identity(&a, d, &tol(), &cfg).unwrap()).collect();
        let mut seen_non_no = false;
        for (i, ans) in answers.iter().enumerate() {
            match ans {
                Answer::No { .. } => prop_assert!(!seen_non_no, "No at d = {} after a weaker answer", i + 1),
                _ => seen_non_no = true,
            }
        }
        // n symbols always suffice
        prop_assert!(answers[n - 1].is_yes());
        if let Answer::Yes { witness } = &answers[n - 1] {
            prop_assert!(witness.verify(&a, Array2::<f64>::eye(n).view(), &tol()).unwrap() <= 1e-6);
        }
    }
}
