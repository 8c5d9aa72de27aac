//! Acceptance suite: one PASS/FAIL line per criterion. Expected values are
//! recomputed here (closed forms, plaintext products, binomial bounds)
//! rather than read back from the library.

use std::time::Instant;

use proptest::prelude::*;
use proptest::strategy::Strategy as PropStrategy;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use compacttag::attack::{run_attack, AttackConfig, Strategy, Target};
use compacttag::cli::{op_scope, run_pipeline, PipelineOptions};
use compacttag::dealer::{plan_matmul_trunc, Dealer, Request};
use compacttag::metrics::{CostRow, Protocol};
use compacttag::oracle::{check_mac_invariant, reconstruct_all, reconstruct_raw};
use compacttag::protocol::{Session, SessionConfig};
use compacttag::ring::{RElem, RMatrix, RingParams};
use compacttag::shapes::builtin_model;
use compacttag::sharing::{add_public, lin_combine};
use compacttag::transport::{commit, verify, AdversarySpec, Network};

type Outcome = Result<String, String>;

const PROPTEST_CASES: u32 = 200;

fn baseline_tag(a: u64, b: u64, c: u64) -> u64 {
    3 * a * b * c + a * c
}

fn compact_tag(a: u64, b: u64, c: u64) -> u64 {
    4 * a * c + 2 * b * c + 3 * a * b + a
}

/// Acceptance bound 2^-(s - log2(s+1)) and the 3-sigma slack for n trials.
fn bound_with_slack(s: u32, n: u64) -> (f64, f64) {
    let bound = 2f64.powf(-(s as f64 - ((s + 1) as f64).log2()));
    (bound, 3.0 * (bound * (1.0 - bound) / n as f64).sqrt())
}

fn criterion_1() -> Outcome {
    let (a, b, c) = (2048u64, 1024, 1024);
    let want = baseline_tag(a, b, c) as f64 / compact_tag(a, b, c) as f64;
    let model = builtin_model("transformer").map_err(|e| e.to_string())?;
    let layer = model.layers.iter().find(|l| l.dims() == (2048, 1024, 1024)).ok_or("no (2048,1024,1024) layer")?;
    let p = RingParams::k64();
    let row = CostRow::formula(&layer.name, &p, Protocol::CompactTag, a, b, c);
    if (row.tag_ratio - want).abs() > 1e-9 {
        return Err(format!("report ratio {} vs closed form {want}", row.tag_ratio));
    }
    if !(380.0..=388.0).contains(&row.tag_ratio) {
        return Err(format!("ratio {:.3} outside [380, 388]", row.tag_ratio));
    }
    Ok(format!("ratio {:.3} (baseline {}, compact {})", row.tag_ratio, row.baseline_tag_formula, row.compact_tag_formula))
}

fn criterion_2() -> Outcome {
    let p = RingParams::k64();
    for (t1, t2, t3) in [(1, 1, 1), (4, 4, 4), (16, 12, 8), (32, 32, 32)] {
        for (protocol, label) in [(Protocol::Baseline, "matmul"), (Protocol::CompactTag, "compact")] {
            let run = run_pipeline(p, 2, protocol, (t1, t2, t3), 1, &PipelineOptions::default()).map_err(|e| e.to_string())?;
            let (a, b, c) = (t1 as u64, t2 as u64, t3 as u64);
            let want = match protocol {
                Protocol::Baseline => baseline_tag(a, b, c),
                Protocol::CompactTag => compact_tag(a, b, c),
            };
            for i in 0..2 {
                let got = run.session.counter(i).get(label).tag;
                if got != want {
                    return Err(format!("{t1}x{t2}x{t3} {label} party {}: {got} != {want}", i + 1));
                }
            }
        }
    }
    Ok("4 shapes x 2 protocols x 2 parties exact".into())
}

fn plain_product(x: &[i128], y: &[i128], t1: usize, t2: usize, t3: usize) -> Vec<i128> {
    let mut out = vec![0; t1 * t3];
    for i in 0..t1 {
        for t in 0..t2 {
            for j in 0..t3 {
                out[i * t3 + j] += x[i * t2 + t] * y[t * t3 + j];
            }
        }
    }
    out
}

fn criterion_3() -> Outcome {
    let p = RingParams::new(64, 64, 16).map_err(|e| e.to_string())?;
    let bound = 1i128 << (p.k - 2 - 2 * p.f);
    let mut worst = 0;
    for n in [2usize, 3] {
        for t in 0..100u64 {
            let seed = 1000 * n as u64 + t;
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let x: Vec<i128> = (0..64).map(|_| rng.gen_range(-bound + 1..bound)).collect();
            let y: Vec<i128> = (0..64).map(|_| rng.gen_range(-bound + 1..bound)).collect();
            let mut outs = Vec::new();
            for protocol in [Protocol::Baseline, Protocol::CompactTag] {
                let mut d = Dealer::from_seed_u64(p, n, seed).map_err(|e| e.to_string())?;
                let m = d.provision(&plan_matmul_trunc(8, 8, 8)).map_err(|e| e.to_string())?;
                let xs = d.share_signed(8, 8, &x).map_err(|e| e.to_string())?;
                let ys = d.share_signed(8, 8, &y).map_err(|e| e.to_string())?;
                let mut s = Session::new(m, SessionConfig { seed, ..Default::default() }).map_err(|e| e.to_string())?;
                let z = s.matmul_trunc(&xs, &ys, protocol).map_err(|e| e.to_string())?;
                s.flush().map_err(|e| format!("{}: {e}", protocol.name()))?;
                check_mac_invariant(&z, d.keys()).map_err(|e| e.to_string())?;
                outs.push(z);
            }
            let b = reconstruct_raw(&outs[0]).map_err(|e| e.to_string())?.resize(p.k);
            let c = reconstruct_raw(&outs[1]).map_err(|e| e.to_string())?.resize(p.k);
            if b != c {
                return Err(format!("n={n} trial {t}: outputs differ mod 2^k"));
            }
            let got = reconstruct_all(&outs[1], &p).map_err(|e| e.to_string())?.values;
            for (g, w) in got.iter().zip(plain_product(&x, &y, 8, 8, 8)) {
                let want = w.div_euclid(1 << p.f);
                let diff = (g - want).abs();
                worst = worst.max(diff);
                if diff > 1 {
                    return Err(format!("n={n} trial {t}: {g} vs {want}"));
                }
            }
        }
    }
    Ok(format!("200 runs, max |error| {worst}, compact == baseline bit-for-bit"))
}

fn attack_criterion(target: Target) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for strategy in [Strategy::RandomE, Strategy::AllYZero] {
        let cfg = AttackConfig::small(target, strategy, 20_000, 7);
        let (bound, slack) = bound_with_slack(cfg.params.s, cfg.trials);
        if (bound - 0.03516).abs() > 1e-4 {
            return Err(format!("bound {bound}"));
        }
        let r = run_attack(&cfg).map_err(|e| e.to_string())?;
        let pass = r.rate <= bound + slack;
        ok &= pass;
        lines.push(format!("{}: {}/{} = {:.5} (limit {:.5})", strategy, r.accepted, r.trials, r.rate, bound + slack));
    }
    let msg = lines.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn random_shapes(n: usize, seed: u64) -> Vec<(usize, usize, usize)> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n).map(|_| (rng.gen_range(1..=9), rng.gen_range(1..=9), rng.gen_range(1..=9))).collect()
}

fn criterion_6() -> Outcome {
    let p = RingParams::k64();
    for shape in random_shapes(10, 6) {
        let mut totals = Vec::new();
        for protocol in [Protocol::Baseline, Protocol::CompactTag] {
            let run = run_pipeline(p, 3, protocol, shape, 2, &PipelineOptions::default()).map_err(|e| e.to_string())?;
            let per: Vec<u64> = (1..=3).map(|i| run.session.comm_log().party_total(i, op_scope).elements).collect();
            totals.push(per);
        }
        let (t1, t2, t3) = shape;
        let want = (t1 * t2 + t2 * t3 + t1 * t3) as u64;
        if totals[0] != totals[1] || totals[0].iter().any(|&e| e != want) {
            return Err(format!("{shape:?}: baseline {:?} compact {:?} expected {want}", totals[0], totals[1]));
        }
    }
    Ok("10 random shapes, 3 parties, equal element counts".into())
}

fn criterion_7() -> Outcome {
    let p = RingParams::k32();
    for shape in random_shapes(10, 7) {
        let mut logs = Vec::new();
        for protocol in [Protocol::Baseline, Protocol::CompactTag] {
            let run = run_pipeline(p, 2, protocol, shape, 3, &PipelineOptions::default()).map_err(|e| e.to_string())?;
            let mut l: Vec<Request> = run.session.consumption_log().to_vec();
            l.sort();
            logs.push(l);
        }
        if logs[0] != logs[1] {
            return Err(format!("{shape:?}: {:?} vs {:?}", logs[0], logs[1]));
        }
    }
    Ok("10 random shapes, identical consumption multisets".into())
}

fn run_prop<S: PropStrategy>(name: &str, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let mut runner = TestRunner::new(Config { cases: PROPTEST_CASES, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

fn criterion_8() -> Outcome {
    let p = RingParams::new(32, 16, 8).map_err(|e| e.to_string())?;

    run_prop("mac invariant", (any::<u64>(), 1usize..4, 1usize..4, 2usize..5), |(seed, r, c, n)| {
        let mut d = Dealer::from_seed_u64(p, n, seed).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let vals: Vec<i128> = (0..r * c).map(|_| rng.gen_range(-1000..1000)).collect();
        let x = d.share_signed(r, c, &vals).unwrap();
        prop_assert!(check_mac_invariant(&x, d.keys()).is_ok());
        prop_assert_eq!(reconstruct_all(&x, &p).unwrap().values, vals);
        Ok(())
    })?;

    run_prop("lin_combine / add_public", (any::<u64>(), any::<u16>(), any::<u16>()), |(seed, c1, c2)| {
        let n = 3;
        let mut d = Dealer::from_seed_u64(p, n, seed).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 1);
        let a = d.random_auth(2, 3).unwrap();
        let b = d.random_auth(2, 3).unwrap();
        let coeffs = [RElem::from_u64(c1 as u64, 16), RElem::from_u64(c2 as u64, 16)];
        let pubm = RMatrix::random(&mut rng, 2, 3, p.w_k2s());
        let mut out = Vec::new();
        for i in 0..n {
            let l = lin_combine(&coeffs, &[&a[i], &b[i]], &mut 0).unwrap();
            out.push(add_public(&l, &pubm, &d.keys()[i], i, &mut 0).unwrap());
        }
        prop_assert!(check_mac_invariant(&out, d.keys()).is_ok());
        let want = reconstruct_raw(&a)
            .unwrap()
            .scale(&coeffs[0], &mut 0)
            .unwrap()
            .add(&reconstruct_raw(&b).unwrap().scale(&coeffs[1], &mut 0).unwrap())
            .unwrap()
            .add(&pubm)
            .unwrap();
        prop_assert_eq!(reconstruct_raw(&out).unwrap(), want);
        Ok(())
    })?;

    run_prop("honest compact checksum", (any::<u64>(), 1usize..4, 1usize..4, 1usize..4, 2usize..4), |(seed, a, b, c, n)| {
        let mut d = Dealer::from_seed_u64(p, n, seed).unwrap();
        let m = d.provision(&plan_matmul_trunc(a, b, c)).unwrap();
        let x = d.random_auth(a, b).unwrap();
        let y = d.random_auth(b, c).unwrap();
        let mut s = Session::new(m, SessionConfig { seed, ..Default::default() }).unwrap();
        s.compact_matmul(&x, &y).unwrap();
        prop_assert!(s.compact_tag_check().is_ok());
        prop_assert!(s.flush().is_ok());
        Ok(())
    })?;

    run_prop("coin-toss agreement", (any::<u64>(), 2usize..5, 0usize..5), |(seed, n, who)| {
        let who = who % n;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let contrib: Vec<([u8; 32], [u8; 16])> = (0..n)
            .map(|_| {
                let mut a = [0u8; 32];
                let mut b = [0u8; 16];
                rng.fill_bytes(&mut a);
                rng.fill_bytes(&mut b);
                (a, b)
            })
            .collect();
        let toss = |c: Vec<([u8; 32], [u8; 16])>| {
            let mut net = Network::new(n, 32, AdversarySpec::honest(), 0).unwrap();
            net.coin_toss("coin.test", c, 4, 1, 16).unwrap()
        };
        let first = toss(contrib.clone());
        prop_assert_eq!(&first, &toss(contrib.clone()));
        let mut changed = contrib;
        changed[who].0[0] ^= 1;
        prop_assert_ne!(first, toss(changed));
        Ok(())
    })?;

    run_prop("commitment binding", (proptest::collection::vec(any::<u8>(), 1..64), any::<u64>(), any::<usize>(), 1u8..), |(payload, seed, at, flip)| {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (c, o) = commit(&payload, &mut rng);
        prop_assert!(verify(&c, &o));
        let mut bad = o.clone();
        let i = at % (payload.len() + 16);
        if i < payload.len() {
            bad.payload[i] ^= flip;
        } else {
            bad.randomness[i - payload.len()] ^= flip;
        }
        prop_assert!(!verify(&c, &bad));
        Ok(())
    })?;

    Ok(format!("5 properties x {PROPTEST_CASES} cases"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("flagship tag-count ratio in [380, 388]", criterion_1),
        ("instrumented counters equal closed forms", criterion_2),
        ("honest correctness, +-1 and compact == baseline", criterion_3),
        ("compact D soundness <= 0.03516 + 3 sigma", || attack_criterion(Target::CompactD)),
        ("BatchRec soundness <= 0.03516 + 3 sigma", || attack_criterion(Target::BatchRec)),
        ("communication parity", criterion_6),
        ("offline parity", criterion_7),
        ("invariant property suite", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let r = f();
        let secs = start.elapsed().as_secs_f64();
        match r {
            Ok(d) => println!("PASS {} {name}: {d} [{secs:.1}s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {} {name}: {d} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
