//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tempfile::TempDir;

use fxcast::baselines::{fit_garch11, select_lag, Criterion, GarchOptions};
use fxcast::eval::{classification_metrics, dm_test, improvement_rate, regression_metrics, DmLoss, RateCheck};
use fxcast::harness::*;
use fxcast::metaheuristics::{optimize, pso_update, AlgoKind, Algorithm, SearchSpace};
use fxcast::rnn::{forward, loss_and_gradients, CellKind, RnnParams};
use fxcast::sentiment::sentiment_index;
use fxcast::synth::{planted_topic_corpus, synthetic_market, PlantedTopicsConfig, SyntheticMarketConfig};
use fxcast::textmine::{fit_lda_gibbs, select_topic_count, LdaParams};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn timed(budget: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let mut o = f();
    let took = t.elapsed();
    if took > budget {
        o.pass = false;
    }
    o.detail = format!("{}; {:.1}s (budget {}s)", o.detail, took.as_secs_f64(), budget.as_secs());
    o
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn gradient_check() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    for cell_seed in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + cell_seed);
        let mut p = RnnParams::init(CellKind::Lstm, 2, 4, &mut rng);
        p.data.iter_mut().for_each(|v| *v += rng.random_range(-0.3..0.3));
        let windows: Vec<Vec<f64>> = (0..3).map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let refs: Vec<&[f64]> = windows.iter().map(Vec::as_slice).collect();
        let targets: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let loss = |q: &RnnParams| {
            refs.iter()
                .zip(&targets)
                .map(|(w, y)| (forward(q, w).unwrap() - y).powi(2))
                .sum::<f64>()
                / targets.len() as f64
        };
        let (_, grad) = loss_and_gradients(&p, &refs, &targets).unwrap();
        let eps = 1e-5;
        for (name, range) in p.tensor_ranges() {
            for i in range {
                let mut up = p.clone();
                up.data[i] += eps;
                let mut dn = p.clone();
                dn.data[i] -= eps;
                let num = (loss(&up) - loss(&dn)) / (2.0 * eps);
                let err = (grad.data[i] - num).abs() / grad.data[i].abs().max(num.abs()).max(1e-7);
                if err > worst {
                    worst = err;
                    worst_at = name.clone();
                }
            }
        }
    }
    outcome(worst < 1e-4, format!("worst relative error {worst:.2e} ({worst_at})"))
}

fn sphere(x: &[f64], _seed: u64) -> fxcast::Result<f64> {
    Ok(x.iter().map(|v| v * v).sum())
}

fn swarm_benchmarks() -> Outcome {
    let space10 = SearchSpace::uniform(10, -5.12, 5.12).unwrap();
    let pso_hits = (0..10u64)
        .filter(|&s| {
            let r = optimize(&sphere, &space10, Algorithm::default_for(AlgoKind::Pso), 20, 200, s).unwrap();
            r.best_fitness < 1e-3
        })
        .count();
    let space5 = SearchSpace::uniform(5, -5.12, 5.12).unwrap();
    let mut parts = vec![format!("PSO {pso_hits}/10 below 1e-3")];
    let mut ok = pso_hits >= 9;
    for kind in [AlgoKind::Ga, AlgoKind::Cs, AlgoKind::Woa, AlgoKind::Bat] {
        let r = optimize(&sphere, &space5, Algorithm::default_for(kind), 20, 200, 7).unwrap();
        ok &= r.best_fitness < 1e-2;
        parts.push(format!("{} {:.1e}", kind.as_str().to_uppercase(), r.best_fitness));
    }
    outcome(ok, parts.join(", "))
}

fn pso_hand_arithmetic() -> Outcome {
    let (v, x) = pso_update(0.5, 1.0, 1.0, 0.5, 0.5, 0.0, 1.0, 2.0, 4.0);
    outcome(v == 3.5 && x == 3.5, format!("V'={v}, X'={x}"))
}

fn sentiment_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let sv: Vec<f64> = (0..200).map(|_| rng.random_range(-1.0..1.0)).collect();
        let rec = sentiment_index(&sv, 7.0).unwrap();
        for t in 0..sv.len() {
            let closed: f64 = (0..=t).map(|i| sv[i] * (-((t - i) as f64) / 7.0).exp()).sum();
            worst = worst.max((closed - rec[t]).abs());
        }
    }
    let mut impulse = vec![0.0; 60];
    impulse[0] = 1.0;
    let si = sentiment_index(&impulse, 7.0).unwrap();
    let decay_err = (0..60).map(|m| (si[m] - (-(m as f64) / 7.0).exp()).abs()).fold(0.0, f64::max);
    outcome(
        worst <= 1e-12 && decay_err <= 1e-12,
        format!("max closed-form gap {worst:.1e}, impulse decay gap {decay_err:.1e}"),
    )
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn planted_topics() -> Outcome {
    let cfg = PlantedTopicsConfig::default();
    let planted = planted_topic_corpus(&cfg).unwrap();
    let params = LdaParams {
        k: 4,
        alpha: Some(0.1),
        beta: 0.01,
        iterations: 200,
        burn_in: 100,
        seed: 11,
    };
    let model = fit_lda_gibbs(&planted.corpus, &params).unwrap();
    let sims: Vec<Vec<f64>> = planted
        .true_phi
        .iter()
        .map(|t| model.phi.iter().map(|r| cosine(t, r)).collect())
        .collect();
    let best = permutations(4)
        .into_iter()
        .map(|p| p.iter().enumerate().map(|(i, &j)| sims[i][j]).collect::<Vec<f64>>())
        .max_by(|a, b| a.iter().sum::<f64>().total_cmp(&b.iter().sum::<f64>()))
        .unwrap();
    let min_cos = best.iter().copied().fold(f64::INFINITY, f64::min);
    let sel = select_topic_count(&planted.corpus, &(2..=8).collect::<Vec<_>>(), &params, 10).unwrap();
    outcome(
        min_cos >= 0.9 && sel.best_k == 4,
        format!("min matched cosine {min_cos:.4}, selected K={}", sel.best_k),
    )
}

fn var2_lag_selection() -> Outcome {
    let a1 = [[0.5, 0.1], [0.2, 0.3]];
    let a2 = [[-0.3, 0.15], [0.1, -0.25]];
    let mut hits = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2000 + 100;
        let mut y = vec![[0.0f64; 2]; n];
        for t in 2..n {
            for i in 0..2 {
                y[t][i] = (0..2).map(|j| a1[i][j] * y[t - 1][j] + a2[i][j] * y[t - 2][j]).sum::<f64>() + normal(&mut rng);
            }
        }
        let target: Vec<f64> = y[100..].iter().map(|r| r[0]).collect();
        let ind: Vec<f64> = y[100..].iter().map(|r| r[1]).collect();
        if select_lag(&target, &ind, 8, Criterion::Aic).unwrap().best_lag == 2 {
            hits += 1;
        }
    }
    outcome(hits >= 40, format!("p*=2 in {hits}/50 trials"))
}

fn garch_recovery() -> Outcome {
    let (omega, alpha, beta) = (0.1, 0.1, 0.8);
    let mut hits = 0;
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s2: f64 = omega / (1.0 - alpha - beta);
        let mut e_prev = 0.0;
        let mut r = Vec::with_capacity(10_000);
        for t in 0..10_500 {
            s2 = omega + alpha * e_prev * e_prev + beta * s2;
            let e = s2.sqrt() * normal(&mut rng);
            e_prev = e;
            if t >= 500 {
                r.push(e);
            }
        }
        let m = fit_garch11(&r, GarchOptions::default()).unwrap();
        let dev = (m.omega - omega).abs().max((m.alpha - alpha).abs()).max((m.beta - beta).abs());
        worst = worst.max(dev);
        if dev <= 0.05 {
            hits += 1;
        }
    }
    outcome(hits >= 8, format!("{hits}/10 seeds within 0.05, worst deviation {worst:.3}"))
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let mut rmse_ok = true;
    let mut dm_ok = true;
    for _ in 0..1000 {
        let n = rng.random_range(10..60);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let m = regression_metrics(&a, &p).unwrap();
        let mut abs = 0.0;
        let mut sq = 0.0;
        for i in 0..n {
            let d = a[i] - p[i];
            abs += d.abs();
            sq += d * d;
        }
        let mae = abs / n as f64;
        let rmse = (sq / n as f64).sqrt();
        worst = worst.max((mae - m.mae).abs()).max((rmse - m.rmse).abs());
        rmse_ok &= m.rmse >= m.mae;

        let la: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let lp: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let rep = classification_metrics(&la, &lp).unwrap();
        for c in 0..2u8 {
            let tp = (0..n).filter(|&i| la[i] == c && lp[i] == c).count() as f64;
            let pred = (0..n).filter(|&i| lp[i] == c).count() as f64;
            let act = (0..n).filter(|&i| la[i] == c).count() as f64;
            let prec = if pred > 0.0 { tp / pred } else { 0.0 };
            let rec = if act > 0.0 { tp / act } else { 0.0 };
            let f1 = if prec + rec > 0.0 { 2.0 * prec * rec / (prec + rec) } else { 0.0 };
            let got = &rep.classes[c as usize];
            worst = worst
                .max((got.precision - prec).abs())
                .max((got.recall - rec).abs())
                .max((got.f1 - f1).abs());
        }
        let acc = (0..n).filter(|&i| la[i] == lp[i]).count() as f64 / n as f64;
        worst = worst.max((rep.accuracy - acc).abs());

        let ea: Vec<f64> = a.iter().zip(&p).map(|(x, y)| x - y).collect();
        let eb: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let ab = dm_test(&ea, &eb, DmLoss::Squared, 1).unwrap();
        let ba = dm_test(&eb, &ea, DmLoss::Squared, 1).unwrap();
        dm_ok &= (ab.statistic + ba.statistic).abs() < 1e-12 && (ab.p_value - ba.p_value).abs() < 1e-12;
        let same = dm_test(&ea, &ea, DmLoss::Squared, 1).unwrap();
        dm_ok &= same.statistic == 0.0 && same.p_value == 1.0;
    }
    outcome(
        worst <= 1e-12 && rmse_ok && dm_ok,
        format!("max oracle gap {worst:.1e}, RMSE>=MAE {rmse_ok}, DM antisymmetric and (0,1) {dm_ok}"),
    )
}

fn improvement_reproduction() -> Outcome {
    let rate = improvement_rate(0.0903, 0.0746).unwrap();
    let check = RateCheck::new(0.0903, 0.0746, 17.2946).unwrap();
    outcome(
        (rate - 0.1739).abs() <= 1e-4 && check.flagged(0.01),
        format!(
            "rate {rate:.6} ({:.4}%), reported 17.2946%, delta {:+.4} points, flagged {}",
            100.0 * rate,
            check.delta_percent,
            check.flagged(0.01)
        ),
    )
}

/// Reduced search and training budget for the synthetic pipeline.
fn pipeline_config(dir: &Path, seed: u64) -> ExperimentConfig {
    let market = synthetic_market(&SyntheticMarketConfig {
        seed,
        ..Default::default()
    })
    .unwrap();
    market.write(dir).unwrap();
    let mut cfg = ExperimentConfig::template(dir, market.segmentation.clone());
    cfg.seed = seed;
    cfg.search.swarm_size = 6;
    cfg.search.iterations = 4;
    cfg.search.hidden_units = [2, 16];
    cfg.search.timesteps = [2, 10];
    cfg.search.learning_rate = [1e-3, 1e-1];
    cfg.rnn.epochs = 60;
    cfg
}

fn check_structures(session: &mut Session) -> Result<String, String> {
    let cmp = run_compare(session).map_err(|e| e.to_string())?;
    let ranked: Vec<&ModelRun> = cmp.runs.iter().filter(|r| r.status != RowStatus::External).collect();
    if ranked.len() < 8 {
        return Err(format!("compare has {} model rows", ranked.len()));
    }
    for (i, r) in cmp.runs.iter().enumerate() {
        if r.is_ok() && (cmp.ranking.ranks[i].iter().any(Option::is_none) || cmp.ranking.weighted_rank[i].is_none()) {
            return Err(format!("compare row {} lacks ranks", r.model));
        }
    }
    let groups: BTreeSet<&str> = ranked.iter().map(|r| r.group.as_str()).collect();
    if groups.len() < 4 {
        return Err(format!("compare covers groups {groups:?}"));
    }
    if !cmp.table_csv().unwrap().starts_with("model,MAE,rank_MAE,RMSE,rank_RMSE,weighted_rank") {
        return Err("compare header".into());
    }

    let text = run_text_ablation(session).map_err(|e| e.to_string())?;
    let grid_ok = text.rows.len() == 4
        && text.rows.iter().all(|r| {
            [&r.mae, &r.rmse]
                .iter()
                .all(|c| c.text.is_some() && c.financial.is_some() && c.combined.is_some() && c.improvement_percent.is_some())
        });
    if !grid_ok {
        return Err("text ablation grid is not 4x3 with improvements".into());
    }

    let kinds = run_kind_ablation(session).map_err(|e| e.to_string())?;
    let expected: Vec<String> = KIND_COMBINATIONS.iter().map(|k| kind_label(k)).collect();
    if kinds.labels != expected || kinds.runs.iter().any(|r| !r.is_ok()) {
        return Err(format!("kind ablation rows {:?}", kinds.labels));
    }
    let full: BTreeSet<&String> = kinds.runs[0].columns.iter().collect();
    let union: BTreeSet<&String> = kinds.runs[1..].iter().flat_map(|r| r.columns.iter()).collect();
    if full != union {
        return Err("full-kinds row is not the union of kind columns".into());
    }

    let dm = run_dm(session).map_err(|e| e.to_string())?;
    let m = dm.models.len();
    if m != 9 || dm.pairs.len() != m * (m - 1) || dm.ranks.iter().any(|r| *r < 1.0 || *r > m as f64) {
        return Err(format!("dm has {m} models and {} pairs", dm.pairs.len()));
    }
    Ok(format!(
        "tables: compare {} rows, text 4x3, kinds 7 rows, dm {m}x{m}",
        cmp.runs.len()
    ))
}

fn end_to_end() -> Outcome {
    let pso: ModelKind = "PSO-LSTM".parse().unwrap();
    let plain: ModelKind = "LSTM".parse().unwrap();
    let mut wins = 0;
    let mut lines = Vec::new();
    let mut structure = Err("not run".to_string());
    for seed in 0..10u64 {
        let tmp = TempDir::new().unwrap();
        let cfg = pipeline_config(tmp.path(), seed);
        let data = build_dataset(&cfg).unwrap();
        let mut s = Session::new(&cfg, &data);
        let rmse = |r: ModelRun| r.metrics().map_or(f64::INFINITY, |m| m.rmse);
        let text = rmse(s.run(pso, &FeatureSet::Combined).unwrap());
        let default = rmse(s.run(plain, &FeatureSet::Combined).unwrap());
        let financial = rmse(s.run(pso, &FeatureSet::Financial).unwrap());
        let won = text < default && text < financial;
        wins += won as usize;
        lines.push(format!(
            "      seed {seed}: text {text:.5} default {default:.5} financial {financial:.5} {}",
            if won { "win" } else { "loss" }
        ));
        if seed == 0 {
            structure = check_structures(&mut s);
        }
    }
    println!("{}", lines.join("\n"));
    let (ok, note) = match structure {
        Ok(n) => (wins >= 7, n),
        Err(e) => (false, e),
    };
    outcome(ok, format!("text features win in {wins}/10 seeds; {note}"))
}

fn report_bytes(dir: &Path, cfg: &ExperimentConfig) -> Vec<(String, Vec<u8>)> {
    let data = build_dataset(cfg).unwrap();
    let mut s = Session::new(cfg, &data);
    let mut files = run_compare(&mut s).unwrap().write(dir).unwrap();
    files.extend(run_text_ablation(&mut s).unwrap().write(dir).unwrap());
    files.extend(run_kind_ablation(&mut s).unwrap().write(dir).unwrap());
    files.extend(run_dm(&mut s).unwrap().write(dir).unwrap());
    files
        .iter()
        .map(|f| (f.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(f).unwrap()))
        .collect()
}

fn determinism() -> Outcome {
    let tmp = TempDir::new().unwrap();
    let mut cfg = pipeline_config(tmp.path(), 21);
    cfg.search.swarm_size = 3;
    cfg.search.iterations = 2;
    cfg.rnn.epochs = 5;
    let a_dir = tmp.path().join("a");
    let b_dir = tmp.path().join("b");
    let a = report_bytes(&a_dir, &cfg);
    let b = report_bytes(&b_dir, &cfg);
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    outcome(
        differing.is_empty() && a.len() == 12,
        format!("{} report files compared, differing: {differing:?}", a.len()),
    )
}

fn main() {
    let criteria: Vec<(&str, Duration, fn() -> Outcome)> = vec![
        ("LSTM gradient check", Duration::from_secs(5), gradient_check),
        ("swarm sphere benchmarks", Duration::from_secs(30), swarm_benchmarks),
        ("PSO hand arithmetic", Duration::from_secs(1), pso_hand_arithmetic),
        ("sentiment index identity", Duration::from_secs(60), sentiment_identity),
        ("LDA planted topics", Duration::from_secs(120), planted_topics),
        ("VAR(2) lag selection", Duration::from_secs(120), var2_lag_selection),
        ("GARCH(1,1) recovery", Duration::from_secs(300), garch_recovery),
        ("metric oracles", Duration::from_secs(60), metric_oracles),
        ("improvement rate", Duration::from_secs(1), improvement_reproduction),
        ("end-to-end synthetic pipeline", Duration::from_secs(15 * 60), end_to_end),
        ("determinism", Duration::from_secs(15 * 60), determinism),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.into_iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let o = timed(budget, f);
        println!("{} criterion {n:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += (!o.pass) as usize;
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
