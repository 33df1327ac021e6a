//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the report is printed in order; exits non-zero on any failure.

use std::time::{Duration, Instant};

use elgen::budget::{budget_verify, epsilon1_threshold, m_bound, s4_size, BoundScalar, Budget, DEFAULT_K0, ELEMENTARY_COUNT};
use elgen::decompose::{
    antidiag3, check_certificate, commutator, commutator_expand40, corner_reduce_gl4, decompose_full, peel_dimension,
    pipeline_el4n, whitehead_diag5, Mode, Stage, Strategy, B_PEEL,
};
use elgen::decompose::certificate::commutator_bound;
use elgen::elwords::{gen_set_s_d, uniform_set, Level};
use elgen::random;
use elgen::ring::{det, mat_inv_exact};
use elgen::spectral::{dense_gap, family_gens, gap_table, schreier_graph, Action, Family, ORACLE_LIMIT};
use elgen::unimodular::{is_unimodular, reduce_unimodular, UniSeq};
use elgen::{Mat, Ring};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::Rng;

type Outcome = Result<String, Box<dyn std::error::Error>>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), Box<dyn std::error::Error>> {
    if ok {
        Ok(())
    } else {
        Err(msg().into())
    }
}

fn prod(ms: &[Mat]) -> Mat {
    ms.iter().skip(1).fold(ms[0].clone(), |acc, m| &acc * m)
}

fn is_block_unitriangular(m: &Mat) -> bool {
    let s = m.flat_rows() / 2;
    let (a, b, c, d) = (m.sub(0, 0, s, s), m.sub(0, s, s, s), m.sub(s, 0, s, s), m.sub(s, s, s, s));
    a.is_identity() && d.is_identity() && (b.is_zero() || c.is_zero())
}

fn corner() -> Outcome {
    let start = Instant::now();
    let mut g = random::rng(101);
    let mut worst = 0;
    for k in 0..500 {
        let n = 1 + k % 3;
        let len = g.gen_range(1..=30);
        let m = random::gl4_blocks(&mut g, n, len);
        let r = corner_reduce_gl4(&m).map_err(|e| format!("input {k}: {e}"))?;
        let out = &(&r.left.eval().flatten() * &m.flatten()) * &r.right.eval().flatten();
        ensure(out == r.w.flatten().embed(4 * n), || format!("input {k}: reconstruction differs"))?;
        worst = worst.max(r.len());
    }
    let t = start.elapsed();
    ensure(worst <= 20, || format!("{worst} factors"))?;
    ensure(t < Duration::from_secs(30), || format!("took {t:?}"))?;
    Ok(format!("500 inputs, max {worst} <= 20 factors, {t:.2?} < 30s"))
}

fn commutators() -> Outcome {
    let mut g = random::rng(202);
    let mut worst = 0;
    for k in 0..100 {
        let n = 1 + k % 2;
        let (a, b) = (random::gl(&mut g, 2 * n, 15), random::gl(&mut g, 2 * n, 15));
        let w = commutator_expand40(&a, &b).map_err(|e| e.to_string())?;
        worst = worst.max(w.len());
        let ai = mat_inv_exact(&a).map_err(|e| e.to_string())?;
        let bi = mat_inv_exact(&b).map_err(|e| e.to_string())?;
        let c = &(&(&a * &b) * &ai) * &bi;
        ensure(w.eval().flatten() == c.embed(4 * n), || format!("pair {k}: product is not diag([g,h], I)"))?;

        let wd = whitehead_diag5(&a).map_err(|e| e.to_string())?;
        let mut want = Mat::zi(4 * n);
        want.set_sub(0, 0, &a);
        want.set_sub(2 * n, 2 * n, &ai);
        ensure(wd.iter().all(is_block_unitriangular) && prod(&wd) == want, || format!("pair {k}: diag(h, h^-1)"))?;

        let ad = antidiag3(&a).map_err(|e| e.to_string())?;
        let mut want = Mat::zeros(Ring::Integers, 4 * n, 4 * n);
        want.set_sub(0, 2 * n, &a);
        want.set_sub(2 * n, 0, &ai.neg());
        ensure(ad.iter().all(is_block_unitriangular) && prod(&ad) == want, || format!("pair {k}: antidiagonal"))?;

        // antidiag(g) antidiag(-h^-1) diag((hg)^-1, hg) = diag([g, h], I).
        let hg = &b * &a;
        let mut tail = Mat::zi(4 * n);
        tail.set_sub(0, 0, &mat_inv_exact(&hg).map_err(|e| e.to_string())?);
        tail.set_sub(2 * n, 2 * n, &hg);
        let first = &(&prod(&antidiag3(&a).unwrap()) * &prod(&antidiag3(&bi.neg()).unwrap())) * &tail;
        let mut want = Mat::zi(4 * n);
        want.set_sub(0, 0, &commutator(&a, &b).map_err(|e| e.to_string())?);
        ensure(first == want, || format!("pair {k}: composed identity"))?;
    }
    ensure(worst <= 40, || format!("{worst} factors"))?;
    Ok(format!("100 pairs, max {worst} <= 40 factors, identities exact"))
}

fn pipeline() -> Outcome {
    let mut g = random::rng(303);
    let mut max_k = 0;
    let mut max_el = 0;
    let mut gap = i64::MIN;
    for k in 0..200 {
        let size = if k % 2 == 0 { 8 } else { 12 };
        let t = random::sl(&mut g, size, 40);
        let c = pipeline_el4n(&t, 3, Strategy::Recursive).map_err(|e| format!("input {k}: {e}"))?;
        check_certificate(&c).map_err(|e| format!("input {k}: {e}"))?;
        ensure(c.reconstruct() == t, || format!("input {k}: reconstruction differs"))?;
        ensure(c.residue.flat_rows() == 3 && det(&c.residue).is_one(), || format!("input {k}: residue not in SL_3"))?;
        let kk = c.counts.commutators;
        let bound = commutator_bound(2 * c.block_n, 3);
        ensure(kk <= bound, || format!("input {k}: K = {kk} > {bound}"))?;
        ensure(c.counts.elementary_block <= 20 + 40 * kk, || format!("input {k}: elementary count over 20 + 40K"))?;
        max_k = max_k.max(kk);
        max_el = max_el.max(c.counts.elementary_block);
        gap = gap.max(c.bounds.gap_to_340);
    }
    let mut slowest = Duration::ZERO;
    for _ in 0..5 {
        let t = random::sl(&mut g, 16, 40);
        let start = Instant::now();
        let c = pipeline_el4n(&t, 3, Strategy::Recursive).map_err(|e| e.to_string())?;
        check_certificate(&c)?;
        slowest = slowest.max(start.elapsed());
    }
    ensure(slowest < Duration::from_secs(5), || format!("16x16 took {slowest:?}"))?;
    let dv2 = pipeline_el4n(&Mat::zi(8), 3, Strategy::Dv2).is_ok();
    Ok(format!(
        "200 inputs, max K {max_k}, max elementary {max_el}, gap to 340 up to {gap} (dv2 {}), 16x16 <= {slowest:.2?}",
        if dv2 { "present" } else { "absent, 340 not asserted" }
    ))
}

fn peeling() -> Outcome {
    let mut g = random::rng(404);
    let mut maxima = Vec::new();
    for m in [5usize, 7, 13, 21] {
        let mut hist = [0usize; B_PEEL + 1];
        for k in 0..40 {
            let t = random::sl(&mut g, m, 30);
            let c = peel_dimension(&t, 3).map_err(|e| format!("m = {m}, input {k}: {e}"))?;
            ensure(c.reconstruct(m) == t, || format!("m = {m}, input {k}: reconstruction differs"))?;
            for &f in &c.per_index {
                ensure(f <= B_PEEL, || format!("m = {m}: {f} factors for one index"))?;
                hist[f] += 1;
            }
        }
        maxima.push((m, hist.iter().rposition(|&h| h > 0).unwrap_or(0)));
    }
    let top = maxima[0].1;
    ensure(maxima.iter().all(|&(_, x)| x == top), || format!("maxima differ: {maxima:?}"))?;
    Ok(format!("m in 5,7,13,21 reconstruct, per-index max {top} <= {B_PEEL} for every m"))
}

fn budget() -> Outcome {
    let start = Instant::now();
    let one = BoundScalar::int(1);
    let tol = BigRational::new(BigInt::one(), BigInt::from(10u64).pow(12));
    let t = epsilon1_threshold(&one, 1).refined(&tol);
    let s2 = BoundScalar::sqrt(2);
    let closed = &s2 / &(&(&BoundScalar::int(680) * &(&BoundScalar::int(6) + &(&BoundScalar::int(9) * &s2))) + &BoundScalar::int(2));
    let closed = closed.refined(&tol);
    ensure(t.width() <= tol, || format!("width {}", t.width()))?;
    ensure(t.lower() <= closed.upper() && closed.lower() <= t.upper(), || "enclosure misses closed form".into())?;
    let f = 2f64.sqrt() / (680.0 * (6.0 + 9.0 * 2f64.sqrt()) + 2.0);
    ensure((t.approx() - f).abs() < 1e-15 && (t.approx() - 1.1103e-4).abs() < 5e-9, || format!("value {}", t.approx()))?;
    ensure(m_bound(2).lt(&BoundScalar::int(19))? && BoundScalar::int(18).lt(&m_bound(2))?, || "M(2)".into())?;
    let k = DEFAULT_K0 + s4_size(1);
    let at = |num: i64, den: i64| budget_verify(&Budget::new(1, DEFAULT_K0, ELEMENTARY_COUNT, one.clone(), &t * &BoundScalar::ratio(num, den)));
    let below = at(999_999, 1_000_000)?;
    let above = at(101, 100)?;
    let el = start.elapsed();
    ensure(below && !above, || format!("verdicts {below} / {above}"))?;
    ensure(el < Duration::from_secs(1), || format!("took {el:?}"))?;
    Ok(format!("threshold {:.6e}, width {:.1e}, k = {k}, verify 0.999999x true / 1.01x false, {el:.2?}", t.approx(), t.width().to_f64().unwrap()))
}

fn generating_sets() -> Outcome {
    let s3 = gen_set_s_d(&Ring::Integers, 3)?;
    ensure(s3.matrices.len() == 20 && 2 * (9 - 3) + 4 * (3 - 1) == 20, || format!("|S_3(Z)| = {}", s3.matrices.len()))?;
    let mut s4 = Vec::new();
    for n in 1..=3 {
        let set = gen_set_s_d(&Ring::matrix(Ring::Integers, n)?, 4)?;
        let l = set.metadata.l;
        ensure(set.matrices.len() == 2 * (16 - 4) + 4 * l * 3, || format!("|S_4(M_{n}(Z))| = {}", set.matrices.len()))?;
        s4.push(set.matrices.len());
    }
    let u = uniform_set(12, 3)?;
    ensure(u.matrices.len() == 60 && u.matrices.iter().all(|m| det(m).is_one()), || "uniform set".into())?;
    ensure(s4[1] == 48 && s4[2] == 48, || format!("S_4 sizes {s4:?}"))?;
    let mut g = random::rng(606);
    for k in 0..50 {
        let t = random::sl(&mut g, 12, 40);
        let c = decompose_full(&t, 3, Mode::Shallow, Strategy::Recursive).map_err(|e| e.to_string())?;
        check_certificate(&c).map_err(|e| format!("input {k}: {e}"))?;
        // Block factors live in EL_4(M_3(Z)), the residue word in EL_3(Z).
        let blocks_ok = c.stages.iter().all(|s| match s {
            Stage::Corner { factors, .. } | Stage::Commutator { factors, .. } => {
                factors.size == 4 && factors.factors.iter().all(|f| f.level == Level::Block(3))
            }
            Stage::Peel { .. } => false,
            Stage::Ulul { .. } => true,
        });
        let residue_ok = c.residue_word.size == 3 && c.residue_word.factors.iter().all(|f| f.level == Level::Base);
        ensure(blocks_ok && residue_ok && c.block_n == 3, || format!("input {k}: factor outside the uniform ingredients"))?;
    }
    Ok(format!("|S_3(Z)| = 20, |S_4(M_n(Z))| = {s4:?}, uniform(12) = 60 in SL_12, 50 certificates verified"))
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn minors_gcd(bs: &[[i64; 4]]) -> i128 {
    let rows: Vec<[i128; 2]> = bs.iter().flat_map(|b| [[b[0] as i128, b[1] as i128], [b[2] as i128, b[3] as i128]]).collect();
    let mut g = 0;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            g = gcd(g, rows[i][0] * rows[j][1] - rows[i][1] * rows[j][0]);
        }
    }
    g
}

fn to_i64(m: &Mat) -> Vec<i64> {
    m.data().iter().map(|x| x.to_i64().expect("small")).collect()
}

fn oracle() -> Outcome {
    let mut g = random::rng(707);
    let (mut reduced_z, mut reduced_m) = (0, 0);
    for k in 0..1000 {
        let len = g.gen_range(1..=6);
        let xs: Vec<i64> = (0..len).map(|_| g.gen_range(-40..=40)).collect();
        let s = UniSeq::integers(&xs);
        let want = xs.iter().fold(0i128, |a, &x| gcd(a, x as i128)) == 1;
        ensure(is_unimodular(&s) == want, || format!("Z sequence {k}: {xs:?}"))?;
        if want && len >= 3 {
            let r = reduce_unimodular(&s)?;
            let red: Vec<i64> = r.reduced.elements.iter().map(|e| to_i64(e)[0]).collect();
            ensure(red.iter().fold(0i128, |a, &x| gcd(a, x as i128)) == 1, || format!("Z reduction {k}"))?;
            reduced_z += 1;
        }
    }
    for k in 0..1000 {
        let len = g.gen_range(1..=4);
        let bs: Vec<[i64; 4]> = (0..len).map(|_| std::array::from_fn(|_| g.gen_range(-4..=4))).collect();
        let s = UniSeq::blocks(2, bs.iter().map(|b| Mat::z(&[&[b[0], b[1]], &[b[2], b[3]]])).collect())?;
        let want = minors_gcd(&bs) == 1;
        ensure(is_unimodular(&s) == want, || format!("M_2 sequence {k}: {bs:?}"))?;
        if want && len >= 3 {
            let r = reduce_unimodular(&s)?;
            let red: Vec<[i64; 4]> = r.reduced.elements.iter().map(|e| to_i64(e).try_into().unwrap()).collect();
            ensure(minors_gcd(&red) == 1, || format!("M_2 reduction {k}"))?;
            reduced_m += 1;
        }
    }
    Ok(format!("2000 sequences agree with the oracle, {reduced_z} + {reduced_m} reductions pass"))
}

fn spectral() -> Outcome {
    let start = Instant::now();
    let ns = [3, 4, 5, 6];
    let fams = [Family::Elementary, Family::Uniform];
    let a = gap_table(&ns, 2, &fams, Action::Projective, 1e-10, true)?;
    let el = start.elapsed();
    let b = gap_table(&ns, 2, &fams, Action::Projective, 1e-10, true)?;
    let c = gap_table(&ns, 2, &fams, Action::Projective, 1e-10, false)?;
    ensure(el < Duration::from_secs(60), || format!("took {el:?}"))?;
    ensure(a.rows.iter().all(|r| r.gap > 0.0 && r.connected), || "non-positive gap".into())?;
    let json = |t: &elgen::spectral::GapTable| serde_json::to_string(t).unwrap();
    ensure(json(&a) == json(&b) && json(&a) == json(&c) && a.to_tsv() == b.to_tsv(), || "reruns differ".into())?;
    let mut worst = 0f64;
    for r in &a.rows {
        if r.vertices > ORACLE_LIMIT {
            continue;
        }
        let set = family_gens(r.family, r.n)?;
        let (l2, abs) = dense_gap(&schreier_graph(r.n, 2, &set.matrices, Action::Projective)?);
        worst = worst.max((l2 - r.lambda2).abs()).max((1.0 - abs - r.gap_abs).abs());
    }
    ensure(worst <= 1e-8, || format!("dense mismatch {worst:e}"))?;
    Ok(format!("{} rows in {el:.2?}, gaps > 0, dense error {worst:.1e} <= 1e-8, reruns identical", a.rows.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("corner reduction", corner),
        ("commutator expansion", commutators),
        ("sl pipeline", pipeline),
        ("peeling", peeling),
        ("budget arithmetic", budget),
        ("generating sets", generating_sets),
        ("unimodular oracle", oracle),
        ("spectral probe", spectral),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let r = f();
        let t = start.elapsed();
        match r {
            Ok(msg) => println!("criterion {} {name}: PASS ({msg}) [{t:.2?}]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({msg}) [{t:.2?}]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
