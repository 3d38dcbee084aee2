//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Tolerances and time budgets are pinned
//! below.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use chartkit::dataset::{
    build_stage_manifest, compute_stats, is_admissible, read_records, stage_tasks, DatasetError, InstructionRecord,
    Stage, SubsetStats, Task,
};
use chartkit::metrics::{bleu, relaxed_accuracy, rms_f1, rms_score};
use chartkit::moe::{
    aux_grad_check, aux_loss, combine_losses, load_stats, nll_loss, router_probs, MoeError, RouterLogits,
};
use chartkit::ocr::{apply_noise, extract, NoiseConfig, OcrToken};
use chartkit::qa::{gen_low_level_qa, template, QASample};
use chartkit::render::{extract_value_from_mark, render_fitted, BBox, ChartSpec, MarkGeometry, RenderedChart, TextRole};
use chartkit::synth::random_table;
use chartkit::table::{extract_markdown_table, to_triples, ChartType, DataTable};
use chartkit::visual_prompt::{bezier_points, make_prompt, sample_prompt_kinds, PromptGeometry, PromptKind};
use chartkit_cli::generate::SUBSET_VISUAL_PROMPT;
use chartkit_cli::{cmd_generate, PipelineConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const AUX_TOL: f64 = 1e-12;
const NLL_TOL: f64 = 1e-12;
const GRAD_TOL: f64 = 1e-5;
const GRAD_STEP: f64 = 1e-5;
const VALUE_REL_TOL: f64 = 0.02;
const RMS_TOL: f64 = 1e-9;
const BLEU_TOL: f64 = 1e-6;
const FREQ_TARGET: f64 = 0.75;
const FREQ_TOL: f64 = 0.05;
const SIGMAS: f64 = 3.0;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- 1

fn moe_formulas() -> Check {
    for n in [2usize, 4, 8, 16] {
        let uniform = router_probs(&RouterLogits::new(vec![vec![0.0; n]; 32]).map_err(|e| e.to_string())?);
        let a = aux_loss(&load_stats(&uniform), n);
        ensure((a - 1.0).abs() <= AUX_TOL, || format!("uniform N={n}: aux {a}"))?;
        let mut onehot = vec![0.0; n];
        onehot[0] = 1.0;
        let c = aux_loss(&load_stats(&vec![onehot; 32]), n);
        ensure((c - n as f64).abs() <= AUX_TOL, || format!("collapsed N={n}: aux {c}"))?;
    }
    let (l_reg, l_aux) = (2.5, 1.75);
    for lambda in [0.0, 0.01, 0.1, 0.5, 1.0, 3.0] {
        let b = combine_losses(l_reg, l_aux, lambda).map_err(|e| e.to_string())?;
        let want = l_reg + lambda * l_aux;
        ensure((b.total - want).abs() <= 1e-12, || format!("lambda {lambda}: total {} vs {want}", b.total))?;
    }
    let t1 = combine_losses(l_reg, l_aux, 0.2).unwrap().total - l_reg;
    let t2 = combine_losses(l_reg, l_aux, 0.4).unwrap().total - l_reg;
    ensure((t2 - 2.0 * t1).abs() <= 1e-12, || "aux term not linear in lambda".into())?;
    for v in [2usize, 3, 16, 100, 1000, 32000] {
        let probs = vec![vec![1.0 / v as f64; v]; 4];
        let nll = nll_loss(&probs, &[0, v - 1, v / 2, 1]).map_err(|e| e.to_string())?.value;
        ensure((nll - (v as f64).ln()).abs() <= NLL_TOL, || format!("V={v}: nll {nll}"))?;
    }
    Ok("uniform=1, collapsed=N for N in {2,4,8,16}; lambda-linear; nll(uniform V)=ln V".into())
}

// ---------------------------------------------------------------- 2

fn gradient_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut passed = 0;
    let mut rejected = 0;
    while passed < 50 {
        let l = rng.gen_range(1..=32);
        let n = rng.gen_range(2..=8);
        let rows: Vec<Vec<f64>> = (0..l).map(|_| (0..n).map(|_| rng.gen_range(-4.0..4.0)).collect()).collect();
        let logits = RouterLogits::new(rows).map_err(|e| e.to_string())?;
        match aux_grad_check(&logits, GRAD_STEP) {
            Ok(r) => {
                ensure(r.max_abs_error <= GRAD_TOL, || format!("L={l} N={n}: error {}", r.max_abs_error))?;
                worst = worst.max(r.max_abs_error);
                passed += 1;
            }
            // near-ties are not valid instances; draw again
            Err(MoeError::TieTooClose { .. }) => rejected += 1,
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok(format!("50/50 within {GRAD_TOL:e}, worst {worst:.2e} ({rejected} near-tie draws redrawn)"))
}

// ---------------------------------------------------------------- 3

fn check_completeness(t: &DataTable, c: &RenderedChart) -> Result<(), String> {
    let (w, h) = (c.width() as f64, c.height() as f64);
    let mut cells = BTreeSet::new();
    for s in t.series() {
        for (cat, _) in &s.points {
            cells.insert((s.name.to_string(), cat.to_string()));
        }
    }
    let marks: Vec<(String, String)> = c.marks().iter().map(|m| (m.series.clone(), m.category.clone())).collect();
    let mark_set: BTreeSet<_> = marks.iter().cloned().collect();
    ensure(marks.len() == mark_set.len(), || "duplicate marks".into())?;
    ensure(mark_set == cells, || "marks do not match numeric cells one-to-one".into())?;
    for m in c.marks() {
        ensure(m.bbox.within(w, h), || format!("mark {m:?} outside image"))?;
        ensure(m.bbox.area() > 0.0 || m.value == 0.0 || matches!(m.geometry, MarkGeometry::Point), || {
            format!("non-zero mark with empty box {m:?}")
        })?;
    }
    for tx in c.texts() {
        ensure(!tx.content.is_empty() && tx.bbox.within(w, h), || format!("bad text {tx:?}"))?;
    }
    if !t.title().is_empty() {
        ensure(c.texts().iter().any(|x| x.role == TextRole::Title), || "title missing".into())?;
    }
    for name in &c.spec().legend {
        ensure(c.texts().iter().any(|x| x.role == TextRole::LegendEntry && &x.content == name), || {
            format!("legend entry {name} missing")
        })?;
    }
    Ok(())
}

fn renderer_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut marks = 0;
    let mut worst: f64 = 0.0;
    for i in 0..500 {
        let ty = ChartType::ALL[i % ChartType::ALL.len()];
        let t = random_table(&mut rng, ty);
        let (w, h) = (rng.gen_range(320..=800), rng.gen_range(240..=600));
        let spec = ChartSpec::for_table(&t, ty, w, h, i as u64).with_data_labels(rng.gen_bool(0.5));
        let c = render_fitted(&t, &spec).map_err(|e| format!("pair {i} ({ty}): {e}"))?;
        check_completeness(&t, &c).map_err(|e| format!("pair {i} ({ty}): {e}"))?;
        for m in c.marks() {
            let truth = t.value(&m.series, &m.category).ok_or("mark without cell")?;
            let got = extract_value_from_mark(&c, m).map_err(|e| e.to_string())?;
            let rel = if truth == 0.0 { got.abs() } else { (got - truth).abs() / truth.abs() };
            ensure(rel <= VALUE_REL_TOL, || format!("pair {i} ({ty}) {}/{}: {got} vs {truth}", m.series, m.category))?;
            worst = worst.max(rel);
            marks += 1;
        }
    }
    Ok(format!("500 charts, {marks} marks, worst relative error {worst:.2e}"))
}

// ---------------------------------------------------------------- 4

/// Integer-cent arithmetic with ties to even; values carry at most two
/// decimals by construction.
mod cents {
    pub fn of(v: f64) -> Option<i64> {
        let c = (v * 100.0).round();
        ((v * 100.0 - c).abs() < 1e-6).then_some(c as i64)
    }

    pub fn div_half_even(num: i64, den: i64) -> i64 {
        let (q, r) = (num.div_euclid(den), num.rem_euclid(den));
        match (2 * r).cmp(&den) {
            std::cmp::Ordering::Less => q,
            std::cmp::Ordering::Greater => q + 1,
            std::cmp::Ordering::Equal if q % 2 == 0 => q,
            std::cmp::Ordering::Equal => q + 1,
        }
    }

    pub fn format(c: i64) -> String {
        let sign = if c < 0 { "-" } else { "" };
        let (int, frac) = (c.abs() / 100, c.abs() % 100);
        match frac {
            0 => format!("{sign}{int}"),
            f if f % 10 == 0 => format!("{sign}{int}.{}", f / 10),
            f => format!("{sign}{int}.{f:02}"),
        }
    }
}

/// Every answer a template could give for `q`, found by trying every
/// element assignment whose filled-in text equals the question.
fn brute_force_answers(t: &DataTable, q: &QASample) -> Result<BTreeSet<String>, String> {
    let tp = template(&q.template_id).ok_or("unknown template")?;
    let mut els: Vec<(String, String, i64)> = Vec::new();
    for s in t.series() {
        for cat in t.categories() {
            if let Some(v) = t.value(s.name, cat) {
                els.push((s.name.to_string(), cat.clone(), cents::of(v).ok_or("value with more than 2 decimals")?));
            }
        }
    }
    let n = els.len() as i64;
    let sum: i64 = els.iter().map(|e| e.2).sum();
    let max = els.iter().map(|e| e.2).max().ok_or("no values")?;
    let min = els.iter().map(|e| e.2).min().ok_or("no values")?;
    let id = tp.id;
    let fill = |pairs: &[(&str, &str)]| pairs.iter().fold(tp.text.to_string(), |acc, (k, v)| acc.replace(k, v));
    let mut out = BTreeSet::new();
    let whole = |c: i64| cents::format(c);
    match id {
        "reasoning.sum_all" => {
            out.insert(whole(sum));
        }
        "reasoning.mean_all" => {
            out.insert(whole(cents::div_half_even(sum, n)));
        }
        _ if id.starts_with("extremum.max") => {
            out.insert(whole(max));
        }
        _ if id.starts_with("extremum.min") => {
            out.insert(whole(min));
        }
        _ if id.starts_with("range.") => {
            out.insert(whole(max - min));
        }
        "retrieval.count_bars" | "retrieval.count_pieces" => {
            out.insert(n.to_string());
        }
        "retrieval.value" | "retrieval.value_in" => {
            for (s, c, v) in &els {
                if fill(&[("{x_axis}", c), ("{y_axis}", s)]) == q.question {
                    out.insert(whole(*v));
                }
            }
        }
        _ => {
            for (i, a) in els.iter().enumerate() {
                for (j, b) in els.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let text = fill(&[
                        ("{first_x_axis}", &a.1),
                        ("{first_y_axis}", &a.0),
                        ("{second_x_axis}", &b.1),
                        ("{second_y_axis}", &b.0),
                    ]);
                    if text != q.question {
                        continue;
                    }
                    let v = if id.contains("sum_") {
                        a.2 + b.2
                    } else if id.contains("diff_") {
                        a.2 - b.2
                    } else {
                        cents::div_half_even(a.2 + b.2, 2)
                    };
                    out.insert(whole(v));
                }
            }
        }
    }
    Ok(out)
}

fn qa_soundness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut checked = 0;
    let mut per_template: BTreeMap<String, usize> = BTreeMap::new();
    let mut i = 0u64;
    while checked < 5000 {
        let ty = ChartType::ALL[i as usize % ChartType::ALL.len()];
        let t = random_table(&mut rng, ty);
        let spec = ChartSpec::for_table(&t, ty, 480, 360, i);
        for q in gen_low_level_qa(&t, &spec, i).map_err(|e| e.to_string())? {
            let answers = brute_force_answers(&t, &q)?;
            ensure(answers.len() == 1 && answers.contains(&q.answer), || {
                format!("{} on {:?}: generated {:?}, oracle {answers:?}", q.template_id, q.question, q.answer)
            })?;
            *per_template.entry(q.template_id.clone()).or_default() += 1;
            checked += 1;
            if checked == 5000 {
                break;
            }
        }
        i += 1;
    }
    Ok(format!("5000/5000 answers reproduced over {} templates and {i} tables", per_template.len()))
}

// ---------------------------------------------------------------- 5

fn metric_golden() -> Check {
    ensure(relaxed_accuracy("104.9", "100"), || "104.9 vs 100 should pass".into())?;
    ensure(!relaxed_accuracy("105.1", "100"), || "105.1 vs 100 should fail".into())?;
    ensure(relaxed_accuracy("0", "0") && !relaxed_accuracy("0.001", "0"), || "zero-gold rule".into())?;
    let table = |s: &str| to_triples(&extract_markdown_table(s).expect("table"));
    let gold = table("| k | a | b |\n|---|---|---|\n| x | 1 | 2 |\n| y | 3 | 4 |");
    let rows = table("| k | a | b |\n|---|---|---|\n| y | 3 | 4 |\n| x | 1 | 2 |");
    let cols = table("| k | b | a |\n|---|---|---|\n| x | 2 | 1 |\n| y | 4 | 3 |");
    ensure(rms_f1(&gold, &gold) == 1.0, || "self-match".into())?;
    ensure(rms_f1(&rows, &gold) == 1.0 && rms_f1(&cols, &gold) == 1.0, || "permutation".into())?;
    let disjoint = table("| q | zz |\n|---|---|\n| yy | bar |");
    let other = table("| k | a |\n|---|---|\n| x | foo |");
    ensure(rms_f1(&disjoint, &other) == 0.0, || "disjoint".into())?;
    let off = rms_score(&table("| k | v |\n|---|---|\n| A | 105 |"), &table("| k | v |\n|---|---|\n| A | 100 |"));
    ensure((off.f1 - 0.95).abs() <= RMS_TOL, || format!("5% off gives {}", off.f1))?;
    let refs = ["the chart shows a steady rise .", "sales fell in 2020"];
    let id = bleu(&refs, &refs).map_err(|e| e.to_string())?;
    ensure(id == 100.0, || format!("identity BLEU {id}"))?;
    // hyp "the cat sat" vs ref "the cat sat on the mat": c=3, r=6,
    // p1 = 3/3, p2 = (2+1)/(2+1), p3 = (1+1)/(1+1), p4 = (0+1)/(0+1)
    let oracle = 100.0 * (1.0f64 - 6.0 / 3.0).exp();
    let got = bleu(&["the cat sat"], &["the cat sat on the mat"]).map_err(|e| e.to_string())?;
    ensure((got - oracle).abs() <= BLEU_TOL, || format!("brevity case {got} vs {oracle}"))?;
    Ok(format!("RA boundary and zero rules; RMS 1/1/0/0.95; BLEU identity 100, brevity {got:.6}"))
}

// ---------------------------------------------------------------- 6

fn inside(b: &BBox, p: (f64, f64)) -> bool {
    p.0 >= b.x && p.0 <= b.x + b.w && p.1 >= b.y && p.1 <= b.y + b.h
}

fn prompt_geometry() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    for kind in PromptKind::ALL {
        for i in 0..1000u64 {
            let (w, h) = (rng.gen_range(128..=1024u32), rng.gen_range(128..=1024u32));
            let bw = rng.gen_range(1.0..w as f64 / 2.0);
            let bh = rng.gen_range(1.0..h as f64 / 2.0);
            let b = BBox::new(rng.gen_range(0.0..w as f64 - bw), rng.gen_range(0.0..h as f64 - bh), bw, bh);
            let p = make_prompt(kind, b, (w, h), i).map_err(|e| e.to_string())?;
            let (fw, fh) = (w as f64, h as f64);
            let ok = match &p.geometry {
                PromptGeometry::Arrow { head, .. } => {
                    let (cx, cy) = (head.0 - fw / 2.0, head.1 - fh / 2.0);
                    cx.abs() <= fw / 2.0 && cy.abs() <= fh / 2.0
                }
                PromptGeometry::Ellipse { center, semi_axes, ratio } => {
                    (1.0..=1.5).contains(ratio)
                        && (semi_axes.0 - ratio * b.w / 2.0).abs() < 1e-9
                        && (semi_axes.1 - ratio * b.h / 2.0).abs() < 1e-9
                        && (center.0 - (b.x + b.w / 2.0)).abs() < 1e-9
                        && (center.1 - (b.y + b.h / 2.0)).abs() < 1e-9
                }
                PromptGeometry::BoundingBox { bbox } => *bbox == b,
                PromptGeometry::Triangle { vertices } => vertices.iter().all(|v| inside(&b, *v)),
                PromptGeometry::Scribble { anchors } => {
                    // a quadratic Bezier stays in its control hull, hence in the box
                    anchors.iter().all(|v| inside(&b, *v))
                        && bezier_points(anchors, 32).iter().all(|v| inside(&b, *v))
                }
            };
            ensure(ok && p.kind == kind && (0.5..=1.0).contains(&p.alpha), || format!("{kind:?} #{i}: {p:?}"))?;
            ensure(p.footprint().count() > 0, || format!("{kind:?} #{i}: empty footprint"))?;
        }
    }
    let draws = 10_000;
    let mut counts: BTreeMap<PromptKind, usize> = BTreeMap::new();
    for seed in 0..draws {
        let kinds = sample_prompt_kinds(seed);
        ensure(kinds.len() == 3 && kinds.iter().collect::<BTreeSet<_>>().len() == 3, || "need 3 distinct".into())?;
        for k in kinds {
            *counts.entry(k).or_default() += 1;
        }
    }
    ensure(!counts.contains_key(&PromptKind::Scribble), || "default sampling produced a scribble".into())?;
    let mut freqs = Vec::new();
    for k in PromptKind::DEFAULT_SET {
        let f = counts.get(&k).copied().unwrap_or(0) as f64 / draws as f64;
        ensure((f - FREQ_TARGET).abs() <= FREQ_TOL, || format!("{k:?} frequency {f}"))?;
        freqs.push(format!("{}={f:.3}", k.name()));
    }
    Ok(format!("5x1000 prompts satisfy invariants; frequencies {}", freqs.join(" ")))
}

// ---------------------------------------------------------------- 7

/// Reading order by repeatedly taking the highest remaining box as a band
/// anchor.
fn oracle_scan_order(boxes: &[BBox]) -> Vec<usize> {
    let mut hs: Vec<f64> = boxes.iter().map(|b| b.h).collect();
    hs.sort_by(f64::total_cmp);
    let median = match hs.len() {
        0 => 0.0,
        n if n % 2 == 1 => hs[n / 2],
        n => (hs[n / 2 - 1] + hs[n / 2]) / 2.0,
    };
    let cy = |i: usize| boxes[i].y + boxes[i].h / 2.0;
    let mut left: Vec<usize> = (0..boxes.len()).collect();
    let mut bands: Vec<Vec<usize>> = Vec::new();
    while !left.is_empty() {
        let anchor = *left
            .iter()
            .min_by(|&&a, &&b| cy(a).total_cmp(&cy(b)).then(a.cmp(&b)))
            .expect("non-empty");
        let (mut band, rest): (Vec<usize>, Vec<usize>) =
            left.iter().partition(|&&i| cy(i) - cy(anchor) < median / 2.0);
        band.sort_by(|&a, &b| boxes[a].x.total_cmp(&boxes[b].x).then(a.cmp(&b)));
        bands.push(band);
        left = rest;
    }
    let top = |b: &Vec<usize>| b.iter().map(|&i| boxes[i].y).fold(f64::INFINITY, f64::min);
    bands.sort_by(|a, b| top(a).total_cmp(&top(b)));
    bands.concat()
}

fn within_sigmas(observed: usize, trials: usize, p: f64) -> Result<String, String> {
    let mean = trials as f64 * p;
    let sd = (trials as f64 * p * (1.0 - p)).sqrt();
    let z = (observed as f64 - mean) / sd;
    ensure(z.abs() <= SIGMAS, || format!("{observed}/{trials} at p={p}: z={z:.2}"))?;
    Ok(format!("{observed}/{trials} (z={z:+.2})"))
}

fn ocr_contract() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for i in 0..200 {
        let ty = ChartType::ALL[i % ChartType::ALL.len()];
        let t = random_table(&mut rng, ty);
        let spec = ChartSpec::for_table(&t, ty, 480, 360, i as u64).with_data_labels(i % 2 == 0);
        let c = render_fitted(&t, &spec).map_err(|e| e.to_string())?;
        let r = extract(&c, &NoiseConfig::none()).map_err(|e| e.to_string())?;
        let got: Vec<&str> = r.tokens.iter().map(|x| x.content.as_str()).collect();
        let mut a: Vec<&str> = got.clone();
        let mut b: Vec<&str> = c.texts().iter().map(|x| x.content.as_str()).collect();
        a.sort_unstable();
        b.sort_unstable();
        ensure(a == b, || format!("chart {i}: content multiset differs"))?;
        let boxes: Vec<BBox> = c.texts().iter().map(|x| x.bbox).collect();
        let want: Vec<&str> = oracle_scan_order(&boxes).into_iter().map(|k| c.texts()[k].content.as_str()).collect();
        ensure(got == want, || format!("chart {i}: order {got:?} vs {want:?}"))?;
    }

    // 10,000 characters of chart-like text for substitution, 10,000 tokens
    // for drop and merge
    let alphabet: Vec<char> = "0123456789.,%$abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ ".chars().collect();
    let mut tokens = Vec::new();
    let mut chars = 0;
    while chars < 10_000 {
        let len = rng.gen_range(1..=8).min(10_000 - chars);
        let s: String = (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len() - 1)]).collect();
        chars += len;
        tokens.push(OcrToken {
            content: s,
            bbox: BBox::new(0.0, 0.0, 1.0, 1.0),
        });
    }
    let p_sub = 0.1;
    let (noisy, _) = apply_noise(
        tokens.clone(),
        &NoiseConfig {
            char_substitution_rate: p_sub,
            rng_seed: 1,
            ..NoiseConfig::none()
        },
    );
    ensure(noisy.len() == tokens.len(), || "substitution changed the token count".into())?;
    let changed = tokens
        .iter()
        .zip(&noisy)
        .flat_map(|(a, b)| a.content.chars().zip(b.content.chars()))
        .filter(|(x, y)| x != y)
        .count();
    let sub = within_sigmas(changed, chars, p_sub)?;

    let unit: Vec<OcrToken> = (0..10_000)
        .map(|i| OcrToken {
            content: format!("t{i}"),
            bbox: BBox::new(i as f64, 0.0, 1.0, 1.0),
        })
        .collect();
    let p_drop = 0.2;
    let (kept, _) = apply_noise(
        unit.clone(),
        &NoiseConfig {
            token_drop_rate: p_drop,
            rng_seed: 2,
            ..NoiseConfig::none()
        },
    );
    let drop = within_sigmas(unit.len() - kept.len(), unit.len(), p_drop)?;
    let p_merge = 0.15;
    let (merged, _) = apply_noise(
        unit.clone(),
        &NoiseConfig {
            merge_adjacent_rate: p_merge,
            rng_seed: 3,
            ..NoiseConfig::none()
        },
    );
    let joined: String = merged.iter().map(|t| t.content.as_str()).collect();
    let original: String = unit.iter().map(|t| t.content.as_str()).collect();
    ensure(joined == original, || "merging lost text".into())?;
    let merge = within_sigmas(unit.len() - merged.len(), unit.len() - 1, p_merge)?;
    Ok(format!("200 charts in band order; substitutions {sub}, drops {drop}, merges {merge}"))
}

// ---------------------------------------------------------------- 8

fn pipeline_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let base = PipelineConfig {
        seed: 8,
        synth_tables: 14,
        ..Default::default()
    };
    let a = PipelineConfig {
        output_dir: dir.path().join("a"),
        workers: 4,
        ..base.clone()
    };
    let b = PipelineConfig {
        output_dir: dir.path().join("b"),
        workers: 1,
        ..base.clone()
    };
    cmd_generate(&a).map_err(|e| format!("{e:#}"))?;
    cmd_generate(&b).map_err(|e| format!("{e:#}"))?;
    let ra = std::fs::read(a.output_dir.join("records.jsonl")).map_err(|e| e.to_string())?;
    let rb = std::fs::read(b.output_dir.join("records.jsonl")).map_err(|e| e.to_string())?;
    ensure(!ra.is_empty() && ra == rb, || "records.jsonl differs between runs".into())?;

    let mut ratios = Vec::new();
    for (q, v) in [(2usize, 3usize), (3, 2), (1, 4)] {
        let cfg = PipelineConfig {
            output_dir: dir.path().join(format!("r{q}{v}")),
            questions_per_chart: q,
            prompt_variants: v,
            stages: vec![Stage::II],
            ..base.clone()
        };
        cmd_generate(&cfg).map_err(|e| format!("{e:#}"))?;
        let recs: Vec<InstructionRecord> =
            read_records(&cfg.output_dir.join("records.jsonl")).map_err(|e| e.to_string())?;
        let s = compute_stats(&recs);
        let vp = s.subsets.get(SUBSET_VISUAL_PROMPT).ok_or("no visual prompt subset")?;
        ensure(vp.samples_per_chart == (q * v) as f64, || {
            format!("q={q} v={v}: samples/chart {} ({} / {})", vp.samples_per_chart, vp.samples, vp.charts)
        })?;
        ratios.push(format!("{q}x{v}={}", vp.samples_per_chart));
    }
    let published = SubsetStats::from_counts(4, 104_445, 417_780);
    ensure(published.samples_per_chart == 4.0, || format!("417780/104445 gave {}", published.samples_per_chart))?;
    Ok(format!("byte-identical across worker counts ({} bytes); ratios {}; 417780/104445 = 4.0", ra.len(), ratios.join(" ")))
}

// ---------------------------------------------------------------- 9

fn stage_matrix() -> Check {
    use Task::*;
    const EXPECTED: [(Stage, &[Task]); 3] = [
        (Stage::I, &[ChartToTable]),
        (Stage::II, &[Summarization, NumVisReasoning, OpenCqa, LowLevelQa]),
        (Stage::III, &[ChartToText, OpenCqa, ChartToTable, ChartQa]),
    ];
    let mut cells = 0;
    for (stage, allowed) in EXPECTED {
        for task in Task::ALL {
            let want = allowed.contains(&task);
            ensure(is_admissible(stage, task) == want, || format!("{stage}/{task}: expected {want}"))?;
            let rec = InstructionRecord::new(format!("{stage}-{task}"), stage, task, "x.png");
            let built = build_stage_manifest(stage, std::slice::from_ref(&rec));
            match (want, built) {
                (true, Ok(m)) => ensure(m.total == 1, || "manifest count".into())?,
                (false, Err(DatasetError::ForbiddenTaskForStage { .. })) => {}
                (w, r) => return Err(format!("{stage}/{task}: admissible {w} but manifest gave {r:?}")),
            }
            cells += 1;
        }
        let listed: BTreeSet<Task> = stage_tasks(stage).into_iter().collect();
        ensure(listed == allowed.iter().copied().collect(), || format!("{stage}: listed {listed:?}"))?;
    }
    Ok(format!("{cells} stage/task cells match"))
}

// ----------------------------------------------------------------

fn main() {
    let criteria: [(&str, Duration, fn() -> Check); 9] = [
        ("1 moe-formula-suite", Duration::from_secs(1), moe_formulas),
        ("2 aux-gradient-check", Duration::from_secs(10), gradient_check),
        ("3 renderer-round-trip", Duration::from_secs(120), renderer_round_trip),
        ("4 qa-soundness", Duration::from_secs(30), qa_soundness),
        ("5 metric-golden-suite", Duration::from_secs(5), metric_golden),
        ("6 visual-prompt-geometry", Duration::from_secs(60), prompt_geometry),
        ("7 ocr-contract", Duration::from_secs(120), ocr_contract),
        ("8 pipeline-determinism-stats", Duration::from_secs(120), pipeline_determinism),
        ("9 stage-manifests", Duration::from_secs(5), stage_matrix),
    ];
    let mut failed = 0;
    for (name, budget, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(d) if took > budget => Err(format!("{d}; took {took:.2?}, budget {budget:?}")),
            o => o,
        };
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail} ({took:.2?})"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail} ({took:.2?})");
            }
        }
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
