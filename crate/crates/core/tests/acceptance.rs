//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::{Duration, Instant};

use efpo::bvn::{birkhoff_bound, decompose, Sampler};
use efpo::envy::{compute_rho, synthesize_weights, EnvyGraph, RhoEpsilon, WeightVector};
use efpo::instance::{expected_utility, int, one, rat, social_welfare, validate_lottery, zero, SquareMatrix};
use efpo::solver::{fixpoint_solve, hull_solve, max_welfare_ef_po, weighted_sum_lp, DEFAULT_PROFILE_CAP};
use efpo::verify::{verify_ef, verify_pareto, Backend, ParetoObjective};
use efpo::x3c::{generate, planted_instance, witness_lottery};
use efpo::{Instance, Lottery, Rational};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_611;
const SUITE_SIZE: usize = 200;
const SUITE_TIME_LIMIT: Duration = Duration::from_secs(120);
const FIXPOINT_MAX_ITERS: usize = 100;
const WEIGHTED_INSTANCES: usize = 100;
const WEIGHTS_PER_INSTANCE: usize = 5;
const DAG_CASES: usize = 500;
const BVN_CASES: usize = 1000;
const SAMPLED_DECOMPOSITIONS: usize = 10;
const SAMPLE_DRAWS: usize = 100_000;
const SAMPLE_TOLERANCE: f64 = 0.01;
const X3C_TIME_LIMIT: Duration = Duration::from_secs(30);
const GRID: i64 = 64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_instance(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Instance {
    let parts = (0..m)
        .map(|_| {
            let rows: Vec<Vec<Rational>> = (0..n).map(|_| (0..n).map(|_| int(rng.gen_range(-3..=3))).collect()).collect();
            SquareMatrix::from_rows(rows).unwrap()
        })
        .collect();
    Instance::new(parts).unwrap()
}

/// n in {2, 3} and m in {1, 2, 3}, cycled so every pair is covered.
fn suite() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..SUITE_SIZE).map(|idx| random_instance(&mut rng, 2 + idx % 2, 1 + (idx / 2) % 3)).collect()
}

fn ef_po(inst: &Instance, lot: &Lottery) -> (bool, bool) {
    let ef = verify_ef(inst, lot).unwrap().envy_free;
    let cert = verify_pareto(inst, lot, Backend::Exact).unwrap();
    (ef, !cert.dominated)
}

struct SuiteRun {
    hull: Vec<(bool, bool)>,
    hull_errors: usize,
    hull_time: Duration,
    fixpoint: Vec<Option<(bool, bool)>>,
}

fn run_suite(instances: &[Instance]) -> SuiteRun {
    let start = Instant::now();
    let mut hull = Vec::new();
    let mut hull_errors = 0;
    for inst in instances {
        match hull_solve(inst, DEFAULT_PROFILE_CAP) {
            Ok(report) => hull.push(ef_po(inst, &report.lottery)),
            Err(_) => {
                hull_errors += 1;
                hull.push((false, false));
            }
        }
    }
    let hull_time = start.elapsed();
    let fixpoint = instances
        .iter()
        .map(|inst| {
            fixpoint_solve(inst, FIXPOINT_MAX_ITERS)
                .unwrap()
                .converged()
                .map(|report| ef_po(inst, &report.lottery))
        })
        .collect();
    SuiteRun {
        hull,
        hull_errors,
        hull_time,
        fixpoint,
    }
}

fn criterion_1(run: &SuiteRun) -> Outcome {
    let ok = run.hull.iter().filter(|&&v| v == (true, true)).count();
    outcome(
        ok == SUITE_SIZE && run.hull_errors == 0 && run.hull_time <= SUITE_TIME_LIMIT,
        format!(
            "{ok}/{SUITE_SIZE} hull lotteries EF and PO, {} errors, {:.1}s (limit {}s)",
            run.hull_errors,
            run.hull_time.as_secs_f64(),
            SUITE_TIME_LIMIT.as_secs()
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut zero_objective = 0;
    for idx in 0..WEIGHTED_INSTANCES {
        let n = 1 + idx % 3;
        let m = rng.gen_range(1..=3);
        let inst = random_instance(&mut rng, n, m);
        for _ in 0..WEIGHTS_PER_INSTANCE {
            let w: Vec<Rational> = (0..n).map(|_| rat(rng.gen_range(1..=20), rng.gen_range(1..=20))).collect();
            let opt = weighted_sum_lp(&inst, &WeightVector::new(w)).unwrap();
            let cert = verify_pareto(&inst, &opt.lottery, Backend::Exact).unwrap();
            if cert.objective == ParetoObjective::Exact(zero()) {
                zero_objective += 1;
            }
        }
    }
    let total = WEIGHTED_INSTANCES * WEIGHTS_PER_INSTANCE;
    outcome(zero_objective == total, format!("{zero_objective}/{total} weighted-sum optima have dominance objective 0"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut held = 0;
    for idx in 0..WEIGHTED_INSTANCES {
        let n = 2 + idx % 2;
        let m = rng.gen_range(1..=3);
        let inst = random_instance(&mut rng, n, m);
        let rho = compute_rho(&inst).rho;
        let mut agents: Vec<usize> = (0..n).collect();
        agents.shuffle(&mut rng);
        let (l, h) = (agents[0], agents[1]);
        let mut w: Vec<Rational> = (0..n).map(|_| rat(rng.gen_range(1..=20), rng.gen_range(1..=20))).collect();
        // w_h = rho * w_l * s with s in (0, 1]
        w[h] = &rho * &w[l] * rat(rng.gen_range(1..=10), 10);
        let opt = weighted_sum_lp(&inst, &WeightVector::new(w)).unwrap();
        let own = expected_utility(&inst, &opt.lottery, l, l).unwrap();
        let other = expected_utility(&inst, &opt.lottery, l, h).unwrap();
        if own >= other {
            held += 1;
        }
    }
    outcome(
        held == WEIGHTED_INSTANCES,
        format!("{held}/{WEIGHTED_INSTANCES} optima free of envy from l to h"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut good = 0;
    for _ in 0..DAG_CASES {
        let n = rng.gen_range(1..=8);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let density: f64 = rng.gen();
        let mut arcs = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(density) {
                    arcs.push((order[a], order[b]));
                }
            }
        }
        let graph = EnvyGraph::new(n, arcs).unwrap();
        let den = rng.gen_range(2..=40);
        let rho = rat(rng.gen_range(1..=den / 2), den);
        let re = RhoEpsilon::from_rho(rho.clone(), n, 0);
        let w = synthesize_weights(&graph, &re).unwrap();
        let ws = w.as_slice();
        let sums = ws.iter().sum::<Rational>() == one();
        let floor = ws.iter().all(|x| x >= &re.epsilon);
        let arcs_ok = graph.arcs().iter().all(|&(l, h)| ws[h] <= &rho * &ws[l]);
        if sums && floor && arcs_ok {
            good += 1;
        }
    }
    outcome(good == DAG_CASES, format!("{good}/{DAG_CASES} synthesized weight vectors valid"))
}

fn criterion_5(run: &SuiteRun) -> Outcome {
    let converged: Vec<_> = run.fixpoint.iter().flatten().collect();
    let ok = converged.iter().filter(|&&&v| v == (true, true)).count();
    outcome(
        ok == converged.len(),
        format!(
            "{ok}/{} converged runs EF and PO; convergence rate {}/{SUITE_SIZE} ({:.1}%)",
            converged.len(),
            converged.len(),
            100.0 * converged.len() as f64 / SUITE_SIZE as f64
        ),
    )
}

/// Convex combination of random permutation matrices with random
/// rational weights.
fn random_bistochastic(rng: &mut ChaCha8Rng) -> SquareMatrix {
    let n = rng.gen_range(1..=6);
    let terms = rng.gen_range(1..=3 * n * n);
    let weights: Vec<i64> = (0..terms).map(|_| rng.gen_range(1..=50)).collect();
    let total: i64 = weights.iter().sum();
    let mut m = SquareMatrix::zeros(n);
    for w in weights {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let a = rat(w, total);
        for (i, &j) in perm.iter().enumerate() {
            m[(i, j)] += &a;
        }
    }
    m
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let mut exact = 0;
    let mut worst_ratio = 0.0f64;
    let mut worst_freq_error = 0.0f64;
    for case in 0..BVN_CASES {
        let m = random_bistochastic(&mut rng);
        let n = m.dim();
        let lot = Lottery::new(vec![one()], vec![m]).unwrap();
        let dec = decompose(&lot).unwrap();
        let terms = &dec.partitions()[0].terms;
        let count = terms.len();
        worst_ratio = worst_ratio.max(count as f64 / birkhoff_bound(n) as f64);
        if dec.reconstruct() == lot && count <= birkhoff_bound(n) {
            exact += 1;
        }
        if case < SAMPLED_DECOMPOSITIONS {
            let mut hits = vec![0usize; count];
            for (_, perm) in Sampler::new(&dec, SEED + case as u64).take(SAMPLE_DRAWS) {
                hits[terms.iter().position(|(p, _)| p == &perm).unwrap()] += 1;
            }
            for ((_, alpha), h) in terms.iter().zip(hits) {
                let err = (h as f64 / SAMPLE_DRAWS as f64 - efpo::instance::to_f64(alpha)).abs();
                worst_freq_error = worst_freq_error.max(err);
            }
        }
    }
    outcome(
        exact == BVN_CASES && worst_freq_error <= SAMPLE_TOLERANCE,
        format!(
            "{exact}/{BVN_CASES} exact within the Birkhoff bound (max count/bound {worst_ratio:.2}); \
             max sampling error {worst_freq_error:.4} over {SAMPLE_DRAWS} draws (tolerance {SAMPLE_TOLERANCE})"
        ),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let (phi, cover) = planted_instance(9, 6, SEED + 7).unwrap();
    let out = generate(&phi).unwrap();
    let lot = witness_lottery(&out, &cover).unwrap();
    let shape = out.instance.n() == 199 && out.instance.m() == 27 && out.params.epsilon == rat(1, 972);
    let valid = validate_lottery(&out.instance, &lot).unwrap().is_empty();
    let ef = verify_ef(&out.instance, &lot).unwrap().envy_free;
    let sw = social_welfare(&out.instance, &lot).unwrap();
    let p = &out.params;
    let t = int(9);
    let k = &p.big_r + &p.big_r / &t + &p.big_q + int(6) + int(9) / &t;
    let elapsed = start.elapsed();
    outcome(
        shape && valid && ef && sw == k && elapsed <= X3C_TIME_LIMIT,
        format!(
            "n={} m={} eps={}, valid={valid}, EF={ef}, SW={sw} vs K={k}, {:.1}s (limit {}s)",
            out.instance.n(),
            out.instance.m(),
            p.epsilon,
            elapsed.as_secs_f64(),
            X3C_TIME_LIMIT.as_secs()
        ),
    )
}

/// Point of the 2-agent profile plane, scaled by a common denominator.
type Point = (i128, i128);

/// Largest `y` over the hull of `pts` restricted to `x >= x0`, as a
/// fraction `(num, den)` with `den > 0`.
fn max_y_beyond(pts: &[Point], x0: i128) -> Option<(i128, i128)> {
    let mut best: Option<(i128, i128)> = None;
    let mut consider = |num: i128, den: i128| {
        if best.map_or(true, |(bn, bd)| num * bd > bn * den) {
            best = Some((num, den));
        }
    };
    for &(x, y) in pts {
        if x >= x0 {
            consider(y, 1);
        }
    }
    for &(ax, ay) in pts {
        for &(bx, by) in pts {
            if ax < x0 && x0 <= bx {
                // y on segment a-b at x0
                let den = bx - ax;
                consider(ay * den + (by - ay) * (x0 - ax), den);
            }
        }
    }
    best
}

fn undominated(pts: &[Point], u: Point) -> bool {
    let swapped: Vec<Point> = pts.iter().map(|&(x, y)| (y, x)).collect();
    let y_ok = max_y_beyond(pts, u.0).map_or(true, |(num, den)| num <= u.1 * den);
    let x_ok = max_y_beyond(&swapped, u.1).map_or(true, |(num, den)| num <= u.0 * den);
    y_ok && x_ok
}

/// Best welfare over envy-free, undominated lotteries of a 2-agent
/// instance on the grid `p_k = a_k / GRID`, `q^k = p_k [[t, 1-t], [1-t, t]]`
/// with `t = b_k / GRID`. Returns the welfare times `GRID^2`.
fn grid_oracle(u: &[[[i64; 2]; 2]]) -> Option<i128> {
    let m = u.len();
    let scale = (GRID * GRID) as i128;
    let mut pts = Vec::new();
    for uk in u {
        pts.push(((uk[0][0] as i128) * scale, (uk[1][1] as i128) * scale));
        pts.push(((uk[0][1] as i128) * scale, (uk[1][0] as i128) * scale));
    }
    let mut best: Option<i128> = None;
    let mut a = vec![0i64; m];
    let mut b = vec![0i64; m];
    loop {
        if a.iter().sum::<i64>() == GRID {
            loop {
                let mut own = [0i128; 2];
                let mut other = [0i128; 2];
                for k in 0..m {
                    let (ak, bk) = (a[k] as i128, b[k] as i128);
                    for i in 0..2 {
                        let (mine, theirs) = (u[k][i][i] as i128, u[k][i][1 - i] as i128);
                        own[i] += ak * (bk * mine + (GRID as i128 - bk) * theirs);
                        other[i] += ak * (bk * theirs + (GRID as i128 - bk) * mine);
                    }
                }
                if own[0] >= other[0] && own[1] >= other[1] && undominated(&pts, (own[0], own[1])) {
                    let sw = own[0] + own[1];
                    best = Some(best.map_or(sw, |v: i128| v.max(sw)));
                }
                if !odometer(&mut b, GRID) {
                    break;
                }
            }
        }
        if !odometer(&mut a, GRID) {
            break;
        }
    }
    best
}

fn odometer(v: &mut [i64], max: i64) -> bool {
    for d in v.iter_mut().rev() {
        if *d < max {
            *d += 1;
            return true;
        }
        *d = 0;
    }
    false
}

fn criterion_8() -> Outcome {
    let instances: Vec<Vec<[[i64; 2]; 2]>> = vec![
        vec![[[1, 0], [1, 0]]],
        vec![[[2, 0], [0, 2]]],
        vec![[[3, 1], [2, 2]]],
        vec![[[1, 2], [2, 1]]],
        vec![[[2, -1], [3, 1]]],
        vec![[[1, 0], [1, 0]], [[0, 1], [0, 1]]],
        vec![[[3, 0], [0, 1]], [[1, 1], [2, 0]]],
        vec![[[-1, 2], [3, -2]], [[1, 1], [1, 1]]],
        vec![[[2, 1], [1, 0]], [[0, 0], [3, 3]]],
        vec![[[0, 3], [1, 0]], [[2, 2], [0, 1]]],
    ];
    let scale = GRID * GRID;
    let mut agree = 0;
    let mut cases = 0;
    let mut notes = Vec::new();
    for u in &instances {
        let inst = Instance::new(
            u.iter()
                .map(|uk| SquareMatrix::from_ints(&[&uk[0], &uk[1]]).unwrap())
                .collect(),
        )
        .unwrap();
        let exact = max_welfare_ef_po(&inst, DEFAULT_PROFILE_CAP).unwrap().welfare;
        let grid = grid_oracle(u).expect("the grid contains an EF and PO lottery");
        let grid_value = rat(grid as i64, scale);
        for k in [grid_value.clone(), &grid_value + rat(1, GRID)] {
            cases += 1;
            if (exact >= k) == (grid_value >= k) {
                agree += 1;
            }
        }
        notes.push(format!("{exact} vs {grid_value}"));
    }
    outcome(
        agree == cases,
        format!("{agree}/{cases} decisions agree (exact vs grid optimum: {})", notes.join(", ")),
    )
}

fn criterion_9(run: &SuiteRun) -> Outcome {
    let mut compared = 0;
    let mut same = 0;
    for (h, f) in run.hull.iter().zip(&run.fixpoint) {
        if let Some(f) = f {
            compared += 1;
            if h == f {
                same += 1;
            }
        }
    }
    outcome(same == compared, format!("{same}/{compared} instances with matching verdicts"))
}

fn main() {
    let instances = suite();
    let start = Instant::now();
    let run = run_suite(&instances);
    println!("suite of {SUITE_SIZE} instances solved by both methods in {:.1}s", start.elapsed().as_secs_f64());
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("existence at desk scale", Box::new(|| criterion_1(&run))),
        ("weighted-sum optima are Pareto-optimal", Box::new(criterion_2)),
        ("low weight prevents envy", Box::new(criterion_3)),
        ("weight synthesis", Box::new(criterion_4)),
        ("fixed-point iteration", Box::new(|| criterion_5(&run))),
        ("Birkhoff-von Neumann decomposition", Box::new(criterion_6)),
        ("X3C witness lottery", Box::new(criterion_7)),
        ("welfare decision vs grid oracle", Box::new(criterion_8)),
        ("hull and fixpoint cross-verification", Box::new(|| criterion_9(&run))),
    ];
    let mut failed = 0;
    for (idx, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {} [{name}]: {tag}: {} [{:.1}s]",
            idx + 1,
            result.detail,
            start.elapsed().as_secs_f64()
        );
        if !result.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
