//! Acceptance criteria, each at its stated tolerance and time budget.
//!
//! One test runs every criterion in sequence (so timings are not skewed by
//! parallel tests) and writes one `PASS`/`FAIL` line per criterion straight
//! to stderr, bypassing the test harness's output capture.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use topicswitch::core::analytics::{box_summary, median, summarize_values, yearly_trend};
use topicswitch::core::encoder::{
    attention_weights, multi_head_attention, position_wise_ffn, softmax_rows, HeadWeights, LayerWeights,
};
use topicswitch::core::market::{label, LabelSpec, PositiveClass};
use topicswitch::core::math::Matrix;
use topicswitch::core::models::{
    evaluate_accuracy, logistic_objective, mlp_objective, sgd_train, svm_objective, Activation, Dataset, LinearModel,
    MlpModel, Model, ModelKind, TrainConfig,
};
use topicswitch::core::regression::ols_fit;
use topicswitch::core::transcript::{segment_and_pair, Role, Roster};
use topicswitch::core::tsi::{cosine_similarity, score_call, CallMeta, Weighting};
use topicswitch::core::{Date, EmbeddingVector, Encoder, EncoderConfig, QaPair, Sector};
use topicswitch::embed::BuiltinEmbedder;
use topicswitch::formats::{parse_transcript, to_json_turns, TranscriptFormat};
use topicswitch::records::{read_csv, AccuracyRow, RegressionRow};
use topicswitch::synth::{self, SynthConfig};

type Outcome = Result<String, String>;

/// Name, time budget and runner.
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

// ---------------------------------------------------------------- cosine / index

fn pair(ordinal: usize, analyst: &str) -> QaPair {
    QaPair {
        analyst_name: analyst.to_string(),
        question_text: String::new(),
        answer_text: String::new(),
        pair_ordinal: ordinal,
    }
}

fn meta() -> CallMeta {
    CallMeta {
        company_symbol: "TEST".into(),
        call_date: Date::from_ymd_opt(2016, 5, 1).unwrap(),
        sector: Sector::Industrials,
    }
}

fn cosine_suite() -> Outcome {
    const TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let encoder = Encoder::new(EncoderConfig::default()).map_err(|e| e.to_string())?;
    let text_vec = encoder.encode("Can you talk about demand in China?").unwrap();
    let idx = |a: &[f64], b: &[f64]| 1.0 - cosine_similarity(a, b).unwrap();

    check(idx(text_vec.values(), text_vec.values()).abs() <= TOL, || {
        "encoded self index not 0".into()
    })?;
    for _ in 0..1000 {
        let d = rng.random_range(1..64);
        let a = random_vec(&mut rng, d);
        let b = random_vec(&mut rng, d);
        let k: f64 = rng.random_range(1e-3..1e3);
        let scaled: Vec<f64> = a.iter().map(|v| v * k).collect();
        let s_ab = cosine_similarity(&a, &b).unwrap();
        check(idx(&a, &a).abs() <= TOL, || format!("self index {}", idx(&a, &a)))?;
        check((s_ab - cosine_similarity(&b, &a).unwrap()).abs() <= TOL, || {
            "asymmetric".into()
        })?;
        check((s_ab - cosine_similarity(&scaled, &b).unwrap()).abs() <= TOL, || {
            "not scale invariant".into()
        })?;
        let i = idx(&a, &b);
        check((-TOL..=2.0 + TOL).contains(&i), || format!("index {i} outside [0, 2]"))?;
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        check((idx(&a, &neg) - 2.0).abs() <= TOL, || {
            "opposite vectors do not give 2".into()
        })?;
    }
    let ortho = idx(&[1.0, 0.0, 0.0, 0.0], &[0.0, 3.0, 0.0, 0.0]);
    check((ortho - 1.0).abs() <= TOL, || format!("orthogonal index {ortho}"))?;
    let ortho2 = idx(&[1.0, 1.0, 0.0], &[1.0, -1.0, 5.0]);
    check((ortho2 - 1.0).abs() <= TOL, || format!("orthogonal index {ortho2}"))?;

    // Zero-norm pairs are skipped, not scored.
    let q = [
        EmbeddingVector::new(vec![1.0, 0.0]).unwrap(),
        EmbeddingVector::zeros(2),
        EmbeddingVector::new(vec![1.0, 1.0]).unwrap(),
    ];
    let a = [
        EmbeddingVector::new(vec![0.0, 2.0]).unwrap(),
        EmbeddingVector::new(vec![1.0, 0.0]).unwrap(),
        EmbeddingVector::new(vec![1.0, 1.0]).unwrap(),
    ];
    let pairs = [pair(0, "A"), pair(1, "B"), pair(2, "C")];
    let rec = score_call(
        pairs.iter().zip(&q).zip(&a).map(|((p, q), a)| (p, q, a)),
        meta(),
        Weighting::PerPair,
    )
    .map_err(|e| e.to_string())?;
    check(rec.n_pairs_scored == 2 && rec.n_pairs_skipped == 1, || {
        format!("{rec:?}")
    })?;
    check((rec.index - 0.5).abs() <= TOL, || {
        format!("index {} != mean(1, 0)", rec.index)
    })?;
    Ok("1000 random pairs; self 0, orthogonal 1, opposite 2, zero-norm pair skipped".into())
}

// ---------------------------------------------------------------- labels

fn label_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let absolute = LabelSpec::absolute();
    let relative0 = LabelSpec::relative(0.0);
    for _ in 0..10_000 {
        let prev: f64 = rng.random_range(0.5..500.0);
        let next = if rng.random_bool(0.05) {
            prev
        } else {
            rng.random_range(0.5..500.0)
        };
        let (a, r) = (label(prev, next, &absolute), label(prev, next, &relative0));
        check(a == r, || {
            format!("prev {prev} next {next}: absolute {a} relative(0) {r}")
        })?;
    }
    for _ in 0..2_000 {
        let prev: f64 = rng.random_range(1.0..200.0);
        let next: f64 = rng.random_range(1.0..200.0);
        let mut taus: Vec<f64> = (0..8).map(|_| rng.random_range(-0.5..0.5)).collect();
        taus.sort_by(f64::total_cmp);
        let labels: Vec<i8> = taus
            .iter()
            .map(|&t| label(prev, next, &LabelSpec::relative(t)))
            .collect();
        check(labels.windows(2).all(|w| w[0] >= w[1]), || {
            format!("labels rise with tau: {labels:?}")
        })?;
    }
    check(label(100.0, 100.0, &absolute) == 1, || {
        "equal prices are not positive".into()
    })?;
    check(label(100.0, 99.99, &absolute) == -1, || "a fall is positive".into())?;
    check(label(100.0, 102.0, &LabelSpec::relative(0.02)) == 1, || {
        "change equal to tau is not positive".into()
    })?;
    check(label(100.0, 101.99, &LabelSpec::relative(0.02)) == -1, || {
        "change below tau is positive".into()
    })?;
    let down = LabelSpec {
        positive_class: PositiveClass::Down,
        ..LabelSpec::absolute()
    };
    check(
        label(100.0, 90.0, &down) == 1 && label(100.0, 110.0, &down) == -1,
        || "down class".into(),
    )?;
    Ok("10,000 random pairs agree; monotone in tau on 2,000 pairs; boundaries use >=".into())
}

// ---------------------------------------------------------------- attention / FFN

type M = Vec<Vec<f64>>;

fn to_m(m: &Matrix) -> M {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn mm(a: &M, b: &M) -> M {
    (0..a.len())
        .map(|i| {
            (0..b[0].len())
                .map(|j| (0..b.len()).map(|t| a[i][t] * b[t][j]).sum())
                .collect()
        })
        .collect()
}

fn oracle_attention(q: &M, k: &M, v: &M) -> M {
    let dk = q[0].len() as f64;
    q.iter()
        .map(|qi| {
            let s: Vec<f64> = k
                .iter()
                .map(|kj| qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() / dk.sqrt())
                .collect();
            let m = s.iter().cloned().fold(f64::MIN, f64::max);
            let e: Vec<f64> = s.iter().map(|x| (x - m).exp()).collect();
            let z: f64 = e.iter().sum();
            (0..v[0].len())
                .map(|c| (0..k.len()).map(|j| e[j] / z * v[j][c]).sum())
                .collect()
        })
        .collect()
}

fn oracle_mha(x: &M, layer: &LayerWeights) -> M {
    let heads: Vec<M> = layer
        .heads
        .iter()
        .map(|h| oracle_attention(&mm(x, &to_m(&h.w_q)), &mm(x, &to_m(&h.w_k)), &mm(x, &to_m(&h.w_v))))
        .collect();
    let concat: M = (0..x.len())
        .map(|i| heads.iter().flat_map(|h| h[i].clone()).collect())
        .collect();
    mm(&concat, &to_m(&layer.w_o))
}

fn oracle_ffn(x: &[f64], layer: &LayerWeights) -> Vec<f64> {
    let (w1, w2) = (to_m(&layer.w1), to_m(&layer.w2));
    let hidden: Vec<f64> = (0..layer.b1.len())
        .map(|j| (x.iter().enumerate().map(|(k, xk)| xk * w1[k][j]).sum::<f64>() + layer.b1[j]).max(0.0))
        .collect();
    (0..layer.b2.len())
        .map(|j| hidden.iter().enumerate().map(|(k, h)| h * w2[k][j]).sum::<f64>() + layer.b2[j])
        .collect()
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_vec(r, c, random_vec(rng, r * c))
}

fn random_layer(rng: &mut ChaCha8Rng, d: usize, h: usize, d_ff: usize) -> LayerWeights {
    LayerWeights {
        heads: (0..h)
            .map(|_| HeadWeights {
                w_q: random_matrix(rng, d, d / h),
                w_k: random_matrix(rng, d, d / h),
                w_v: random_matrix(rng, d, d / h),
            })
            .collect(),
        w_o: random_matrix(rng, d, d),
        w1: random_matrix(rng, d, d_ff),
        b1: random_vec(rng, d_ff),
        w2: random_matrix(rng, d_ff, d),
        b2: random_vec(rng, d),
    }
}

fn attention_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let (n, d) = (rng.random_range(1..9), rng.random_range(1..9));
        let scores = Matrix::from_vec(n, d, (0..n * d).map(|_| rng.random_range(-40.0..40.0)).collect());
        let s = softmax_rows(&scores);
        for i in 0..n {
            let sum: f64 = s.row(i).iter().sum();
            check((sum - 1.0).abs() <= 1e-9, || format!("softmax row sums to {sum}"))?;
        }
    }
    let one = attention_weights(
        &Matrix::from_vec(1, 3, vec![5.0, -2.0, 1.0]),
        &Matrix::from_vec(1, 3, vec![0.3, 7.0, -1.0]),
    )
    .map_err(|e| e.to_string())?;
    check(one.as_slice() == [1.0], || {
        format!("single token weights {:?}", one.as_slice())
    })?;
    for n in [2usize, 3, 4, 7] {
        let zeros = Matrix::from_vec(n, 2, vec![0.0; 2 * n]);
        let w = attention_weights(&zeros, &zeros).map_err(|e| e.to_string())?;
        let u = 1.0 / n as f64;
        check(w.as_slice().iter().all(|&x| x == u), || {
            format!("zero scores not uniform for n = {n}")
        })?;
    }

    let layer = random_layer(&mut rng, 4, 2, 6);
    let x = random_matrix(&mut rng, 2, 4);
    let got = multi_head_attention(&x, &layer).map_err(|e| e.to_string())?;
    let want = oracle_mha(&to_m(&x), &layer);
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..4 {
            worst = worst.max((got[(i, j)] - want[i][j]).abs());
        }
        let f = position_wise_ffn(x.row(i), &layer).map_err(|e| e.to_string())?;
        for (a, b) in f.iter().zip(oracle_ffn(x.row(i), &layer)) {
            worst = worst.max((a - b).abs());
        }
    }
    check(worst <= 1e-12, || {
        format!("2-token case differs from oracle by {worst:e}")
    })?;

    let text = "Guidance for gross margin reflects investment in price and the mix of natural and organic brands.";
    let a = Encoder::new(EncoderConfig::default()).unwrap().encode(text).unwrap();
    let b = Encoder::new(EncoderConfig::default()).unwrap().encode(text).unwrap();
    let bits = |v: &EmbeddingVector| v.values().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    check(bits(&a) == bits(&b), || {
        "encode is not bit-exact across instances".into()
    })?;
    Ok(format!(
        "softmax rows on 500 matrices; 2-token oracle max diff {worst:.1e}; encode bit-exact"
    ))
}

// ---------------------------------------------------------------- optimisation

const FD_STEP: f64 = 1e-6;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn random_dataset(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Dataset {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let labels = (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
    Dataset::from_rows(&rows, labels).unwrap()
}

fn away_from_zero(rng: &mut ChaCha8Rng) -> f64 {
    let v: f64 = rng.random_range(0.05..1.5);
    if rng.random_bool(0.5) {
        v
    } else {
        -v
    }
}

/// Worst relative error between the analytic gradient and central
/// differences of `value`, over all weights and the bias.
fn linear_fd(value: impl Fn(&LinearModel) -> f64, analytic: &LinearModel, model: &LinearModel) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..=model.weights.len() {
        let bump = |delta: f64| {
            let mut m = model.clone();
            if j < m.weights.len() {
                m.weights[j] += delta;
            } else {
                m.bias += delta;
            }
            value(&m)
        };
        let fd = (bump(FD_STEP) - bump(-FD_STEP)) / (2.0 * FD_STEP);
        let an = analytic.weights.get(j).copied().unwrap_or(analytic.bias);
        worst = worst.max(rel_err(an, fd));
    }
    worst
}

fn oracle_logistic(params: &[f64], data: &Dataset, l2: f64) -> (f64, Vec<f64>) {
    let p = params.len() - 1;
    let n = data.len() as f64;
    let (mut value, mut grad) = (0.0, vec![0.0; params.len()]);
    for i in 0..data.len() {
        let (x, y) = (data.row(i), f64::from(data.label(i)));
        let m = y * (x.iter().zip(params).map(|(a, b)| a * b).sum::<f64>() + params[p]);
        value += if m > 0.0 {
            (-m).exp().ln_1p()
        } else {
            -m + m.exp().ln_1p()
        };
        let c = -y / (1.0 + m.exp()) / n;
        for j in 0..p {
            grad[j] += c * x[j];
        }
        grad[p] += c;
    }
    value /= n;
    for (j, w) in params.iter().enumerate() {
        value += 0.5 * l2 * w * w;
        grad[j] += l2 * w;
    }
    (value, grad)
}

fn optimization_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;

    let mut hinge = 0;
    while hinge < 20 {
        let data = random_dataset(&mut rng, 8, 4);
        let model = LinearModel {
            weights: (0..4).map(|_| away_from_zero(&mut rng)).collect(),
            bias: away_from_zero(&mut rng),
        };
        let near_kink =
            (0..data.len()).any(|i| (1.0 - f64::from(data.label(i)) * model.score(data.row(i)).unwrap()).abs() <= 1e-3);
        if near_kink {
            continue;
        }
        let cfg = TrainConfig {
            l1: rng.random_range(0.0..0.5),
            l2: rng.random_range(0.0..0.5),
            ..Default::default()
        };
        let g = svm_objective(&model, &data, &cfg).gradient;
        worst = worst.max(linear_fd(|m| svm_objective(m, &data, &cfg).value, &g, &model));
        hinge += 1;
    }
    for _ in 0..20 {
        let (n, p) = (rng.random_range(3..12), rng.random_range(1..6));
        let data = random_dataset(&mut rng, n, p);
        let model = LinearModel {
            weights: (0..p).map(|_| away_from_zero(&mut rng)).collect(),
            bias: away_from_zero(&mut rng),
        };
        let cfg = TrainConfig {
            l1: rng.random_range(0.0..0.5),
            l2: rng.random_range(0.0..1.0),
            ..Default::default()
        };
        let g = logistic_objective(&model, &data, &cfg).gradient;
        worst = worst.max(linear_fd(|m| logistic_objective(m, &data, &cfg).value, &g, &model));
    }
    for k in 0..20 {
        let activation = if k % 2 == 0 { Activation::Relu } else { Activation::Tanh };
        let sizes = vec![3, 4, 2];
        let n_params = MlpModel::zeros(sizes.clone(), activation).unwrap().params().len();
        let params: Vec<f64> = (0..n_params).map(|_| away_from_zero(&mut rng) * 0.7).collect();
        let data = random_dataset(&mut rng, 6, 3);
        let cfg = TrainConfig {
            l1: rng.random_range(0.0..0.1),
            l2: rng.random_range(0.0..0.1),
            ..Default::default()
        };
        let model = MlpModel::from_params(sizes.clone(), activation, params.clone()).unwrap();
        let g = mlp_objective(&model, &data, &cfg).map_err(|e| e.to_string())?.gradient;
        for j in 0..n_params {
            let bump = |delta: f64| {
                let mut p = params.clone();
                p[j] += delta;
                let m = MlpModel::from_params(sizes.clone(), activation, p).unwrap();
                mlp_objective(&m, &data, &cfg).unwrap().value
            };
            worst = worst.max(rel_err(g[j], (bump(FD_STEP) - bump(-FD_STEP)) / (2.0 * FD_STEP)));
        }
    }
    check(worst <= 1e-4, || format!("gradient relative error {worst:e}"))?;

    // SGD against full-batch gradient descent on the l2-regularised logistic objective.
    let mut frng = ChaCha8Rng::seed_from_u64(50);
    let truth = [1.5, -2.0, 0.5];
    let rows: Vec<Vec<f64>> = (0..50)
        .map(|_| (0..3).map(|_| frng.random_range(-1.0..1.0)).collect())
        .collect();
    let labels = rows
        .iter()
        .map(|r| {
            let s: f64 = r.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() + 0.2 + frng.random_range(-0.8..0.8);
            if s >= 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();
    let data = Dataset::from_rows(&rows, labels).unwrap();
    let l2 = 0.05;
    let mut params = vec![0.0; 4];
    for _ in 0..200_000 {
        let (_, g) = oracle_logistic(&params, &data, l2);
        if g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-8 {
            break;
        }
        params.iter_mut().zip(&g).for_each(|(p, gj)| *p -= 0.5 * gj);
    }
    let optimum = oracle_logistic(&params, &data, l2).0;
    let cfg = TrainConfig {
        l2,
        learning_rate: 0.02,
        epochs: 400,
        ..Default::default()
    };
    let trained = sgd_train(ModelKind::Logistic, &data, &cfg).map_err(|e| e.to_string())?;
    let Model::Linear(m) = &trained.model else {
        return Err("logistic model is not linear".into());
    };
    let mut sgd_params = m.weights.clone();
    sgd_params.push(m.bias);
    let gap = oracle_logistic(&sgd_params, &data, l2).0 - optimum;
    check((-1e-9..=1e-3).contains(&gap), || format!("SGD objective gap {gap:e}"))?;

    // Separable blobs and determinism.
    let mut brng = ChaCha8Rng::seed_from_u64(5);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..80 {
        let y: i8 = if i % 2 == 0 { 1 } else { -1 };
        let c = 3.0 * f64::from(y);
        rows.push(vec![c + brng.random_range(-1.0..1.0), c + brng.random_range(-1.0..1.0)]);
        labels.push(y);
    }
    let blobs = Dataset::from_rows(&rows, labels).unwrap();
    for kind in ModelKind::ALL {
        let cfg = TrainConfig {
            seed: 9,
            ..Default::default()
        };
        let a = sgd_train(kind, &blobs, &cfg).map_err(|e| e.to_string())?;
        let b = sgd_train(kind, &blobs, &cfg).map_err(|e| e.to_string())?;
        let acc = evaluate_accuracy(&a.model, &blobs).map_err(|e| e.to_string())?;
        check(acc == 1.0, || format!("{kind:?} blob accuracy {acc}"))?;
        check(
            format!("{:?}", a.model) == format!("{:?}", b.model) && a.model == b.model,
            || format!("{kind:?} training is not deterministic"),
        )?;
    }
    Ok(format!(
        "60 gradient instances, worst rel err {worst:.1e}; SGD gap {gap:.1e}; blobs 1.0; deterministic"
    ))
}

// ---------------------------------------------------------------- regression

fn regression_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let n = rng.random_range(3..60);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|xi| 0.7 - 1.3 * xi + rng.random_range(-1.0..1.0))
            .collect();
        let fit = ols_fit(&x, &y).map_err(|e| e.to_string())?;
        // Normal equations [n Σx; Σx Σx²][a; b] = [Σy; Σxy] by Cramer's rule.
        let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let det = n as f64 * sxx - sx * sx;
        let b = (n as f64 * sxy - sx * sy) / det;
        let a = (sxx * sy - sx * sxy) / det;
        let rss: f64 = x.iter().zip(&y).map(|(xi, yi)| (yi - a - b * xi).powi(2)).sum();
        let se = (rss / (n as f64 - 2.0) / (sxx - sx * sx / n as f64)).sqrt();
        check(rel_err(fit.coefficient, b) <= 1e-8, || {
            format!("slope {} vs {b}", fit.coefficient)
        })?;
        check(rel_err(fit.intercept, a) <= 1e-8, || {
            format!("intercept {} vs {a}", fit.intercept)
        })?;
        check(rel_err(fit.std_error, se) <= 1e-8, || {
            format!("SE {} vs {se}", fit.std_error)
        })?;
        check((fit.t_value - fit.coefficient / fit.std_error).abs() <= 1e-9, || {
            "t != beta / SE".into()
        })?;
    }
    // Exact fits on data whose means and products are exact in binary
    // floating point, so "zero" means exactly zero.
    for (x, a, b) in [
        (vec![1.0, 2.0, 3.0, 4.0, 5.0, 9.0], 3.0, 2.0),
        (vec![0.0, 2.0, 4.0, 6.0], 0.5, -0.25),
    ] {
        let y: Vec<f64> = x.iter().map(|v| a + b * v).collect();
        let fit = ols_fit(&x, &y).map_err(|e| e.to_string())?;
        let max_resid = x
            .iter()
            .zip(&y)
            .map(|(xi, yi)| (yi - fit.intercept - fit.coefficient * xi).abs())
            .fold(0.0, f64::max);
        check(max_resid == 0.0 && fit.std_error == 0.0, || {
            format!("exact fit residual {max_resid:e}, SE {:e}", fit.std_error)
        })?;
        check(fit.coefficient == b && fit.intercept == a, || format!("{fit:?}"))?;
    }
    Ok("200 random fits match the normal equations; exact fit has zero residuals".into())
}

// ---------------------------------------------------------------- planted study

fn planted_study() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = SynthConfig::default();
    let embedder = BuiltinEmbedder::new(EncoderConfig::default()).map_err(|e| e.to_string())?;
    let corpus = synth::generate(&cfg, &embedder).map_err(|e| e.to_string())?;
    check(corpus.calls.len() >= 200, || {
        format!("only {} calls generated", corpus.calls.len())
    })?;
    check(cfg.slope == -0.02 && cfg.noise_sd == 0.001, || {
        "generator is not planting -0.02 with sigma 0.001".into()
    })?;
    synth::write_corpus(&corpus, dir.path()).map_err(|e| e.to_string())?;

    let out_dir = dir.path().join("out");
    let tau = format!("{}", corpus.median_change());
    let p = |name: &str| dir.path().join(name).display().to_string();
    let output = Command::new(env!("CARGO_BIN_EXE_topicswitch"))
        .args([
            "study",
            "--transcript-dir",
            &p("transcripts"),
            "--price-dir",
            &p("prices"),
        ])
        .args([
            "--output-dir",
            &out_dir.display().to_string(),
            "--label",
            "relative",
            "--tau",
            &tau,
        ])
        .output()
        .map_err(|e| e.to_string())?;
    check(output.status.success(), || {
        String::from_utf8_lossy(&output.stderr).into_owned()
    })?;

    let index_rows = fs::read_to_string(out_dir.join("index.csv"))
        .map_err(|e| e.to_string())?
        .lines()
        .count()
        - 1;
    check(index_rows >= 200, || format!("only {index_rows} calls indexed"))?;
    let regression: Vec<RegressionRow> = read_csv(&out_dir.join("regression.csv")).map_err(|e| e.to_string())?;
    let overall = regression
        .iter()
        .find(|r| r.sector == "Overall")
        .ok_or("no Overall row")?;
    let within = (overall.coefficient - -0.02).abs() <= 3.0 * overall.std_error;
    check(
        overall.coefficient < 0.0 && within && overall.t_value.abs() > 2.0,
        || {
            format!(
                "slope {} (SE {}, t {})",
                overall.coefficient, overall.std_error, overall.t_value
            )
        },
    )?;
    let accuracy: Vec<AccuracyRow> = read_csv(&out_dir.join("accuracy.csv")).map_err(|e| e.to_string())?;
    let index_row = accuracy
        .iter()
        .find(|r| r.feature_set == "Topic-Switching Index")
        .ok_or("no index-only accuracy row")?;
    let accs = [index_row.svm, index_row.logistic, index_row.nn];
    let spread = accs.iter().cloned().fold(f64::MIN, f64::max) - accs.iter().cloned().fold(f64::MAX, f64::min);
    check(accs.iter().all(|&a| a > 0.9) && spread <= 0.02, || {
        format!(
            "index-only accuracy svm {:.4} logistic {:.4} nn {:.4}",
            accs[0], accs[1], accs[2]
        )
    })?;
    Ok(format!(
        "{index_rows} calls; slope {:.5} (SE {:.5}, t {:.1}); index-only svm {:.3} logistic {:.3} nn {:.3}",
        overall.coefficient, overall.std_error, overall.t_value, accs[0], accs[1], accs[2]
    ))
}

// ---------------------------------------------------------------- parser

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn parser_suite() -> Outcome {
    let parse = |path: &Path| -> Result<_, String> {
        let format = TranscriptFormat::from_path(path).ok_or("unknown extension")?;
        parse_transcript(&fs::read(path).map_err(|e| e.to_string())?, format).map_err(|e| e.to_string())
    };
    for (file, analyst, manager) in [
        ("apple_china_qa.txt", "Shannon Cross", "Tim Cook"),
        ("kroger_margin_qa.txt", "Judah Frommer", "J. Michael Schlotman"),
    ] {
        let call = segment_and_pair(parse(&fixture(file))?, &Roster::new()).map_err(|e| e.to_string())?;
        let speakers: Vec<(&str, Role)> = call.turns.iter().map(|t| (t.speaker_name.as_str(), t.role)).collect();
        check(speakers == [(analyst, Role::Analyst), (manager, Role::Manager)], || {
            format!("{file}: {speakers:?}")
        })?;
        check(
            call.qa_pairs.len() == 1 && call.qa_pairs[0].analyst_name == analyst,
            || format!("{file}: {:?}", call.qa_pairs),
        )?;
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(fixture("corpus20/transcripts"))
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    paths.sort();
    check(paths.len() == 20, || format!("{} corpus files", paths.len()))?;
    for path in &paths {
        let call = parse(path)?;
        let back = parse_transcript(to_json_turns(&call).as_bytes(), TranscriptFormat::JsonTurns)
            .map_err(|e| e.to_string())?;
        check(back == call, || format!("{} does not round-trip", path.display()))?;
        let once = segment_and_pair(call, &Roster::new()).map_err(|e| e.to_string())?;
        let twice = segment_and_pair(once.clone(), &Roster::new()).map_err(|e| e.to_string())?;
        check(once == twice, || {
            format!("{}: pairing is not idempotent", path.display())
        })?;
    }
    Ok("both samples give one pair with the right speakers; 20 files round-trip and pair idempotently".into())
}

// ---------------------------------------------------------------- analytics

fn analytics_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let raw: Vec<f64> = (0..1387).map(|_| rng.sample(StandardNormal)).collect();
    let n = raw.len() as f64;
    let m = raw.iter().sum::<f64>() / n;
    let s = (raw.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let values: Vec<f64> = raw.iter().map(|v| 0.24 + 0.07 * (v - m) / s).collect();
    let summary = summarize_values(Sector::Industrials, &values).map_err(|e| e.to_string())?;
    check(summary.count == 1387, || format!("count {}", summary.count))?;
    check((summary.mean - 0.24).abs() <= 1e-12, || {
        format!("mean {}", summary.mean)
    })?;
    check((summary.std_dev - 0.07).abs() <= 1e-12, || {
        format!("std {}", summary.std_dev)
    })?;

    let b = box_summary(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0], Sector::Energy).map_err(|e| e.to_string())?;
    check((b.q1, b.median, b.q3) == (3.0, 5.0, 7.0), || format!("{b:?}"))?;
    check(
        (b.lower_whisker, b.upper_whisker) == (1.0, 9.0) && b.outliers.is_empty(),
        || format!("{b:?}"),
    )?;
    let b = box_summary(&[1.0, 2.0, 3.0, 4.0, 100.0], Sector::Energy).map_err(|e| e.to_string())?;
    check((b.q1, b.median, b.q3) == (2.0, 3.0, 4.0), || format!("{b:?}"))?;
    check(b.upper_whisker == 4.0 && b.outliers == [100.0], || format!("{b:?}"))?;
    let b = box_summary(&[0.5], Sector::Energy).map_err(|e| e.to_string())?;
    check(b.q1 == 0.5 && b.q3 == 0.5 && b.outliers.is_empty(), || format!("{b:?}"))?;

    let d = |y: i32, m: u32| Date::from_ymd_opt(y, m, 15).unwrap();
    let points = [
        (d(2017, 2), 0.1),
        (d(2017, 5), 0.12),
        (d(2017, 8), 0.11),
        (d(2017, 11), 0.9),
        (d(2018, 2), 0.3),
    ];
    let trend = yearly_trend(&points).map_err(|e| e.to_string())?;
    let y2017 = trend.iter().find(|t| t.year == 2017).ok_or("no 2017 point")?;
    check(y2017.mean > y2017.median && y2017.count == 4, || format!("{y2017:?}"))?;
    check(
        (y2017.median - median(&[0.1, 0.12, 0.11, 0.9]).unwrap()).abs() == 0.0,
        || "median".into(),
    )?;
    Ok("n 1387 fixture mean 0.24 / std 0.07 to 1e-12; box hand cases; skewed year has mean > median".into())
}

// ---------------------------------------------------------------- runner

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 8] = [
        ("cosine and index suite", Duration::from_secs(1), cosine_suite),
        ("label suite", Duration::from_secs(1), label_suite),
        (
            "attention and feed-forward suite",
            Duration::from_secs(5),
            attention_suite,
        ),
        ("optimization suite", Duration::from_secs(30), optimization_suite),
        ("regression suite", Duration::from_secs(1), regression_suite),
        ("end-to-end planted study", Duration::from_secs(120), planted_study),
        ("parser suite", Duration::from_secs(1), parser_suite),
        ("analytics suite", Duration::from_secs(1), analytics_suite),
    ];
    let mut err = std::io::stderr().lock();
    let mut failed = Vec::new();
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > budget => Err(format!("{detail}; took {elapsed:.2?}, budget {budget:?}")),
            other => other,
        };
        let line = match &outcome {
            Ok(detail) => format!("PASS  {name} ({elapsed:.2?}, budget {budget:?}): {detail}"),
            Err(why) => format!("FAIL  {name} ({elapsed:.2?}, budget {budget:?}): {why}"),
        };
        writeln!(err, "acceptance: {line}").unwrap();
        if outcome.is_err() {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
