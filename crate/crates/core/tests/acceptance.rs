//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use condsep_core::search::{ppt_check, SearchConfig, Verdict};
use condsep_core::states::{
    bell_state, build_extension, dedegenerate_weights, make_decomposition, random_density, random_separable_with_rank,
    werner_state, ExtensionState,
};
use condsep_core::theorem1::extract;
use condsep_core::{
    classical_cmi, classify, hermitian_eig, partial_trace, quantum_cmi, saturation_residual, search_extension,
    verify_extension, DensityMatrix, JointDistribution, SeparableDecomposition, SubsystemDims,
    Tolerances,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

/// Seeded decompositions over (de ≤ 6, 2, 2) and (de ≤ 4, 2, 3). Every third
/// one gets repeated weights and every fifth one a zero weight.
fn corpus(count: usize) -> Vec<SeparableDecomposition> {
    let tols = Tolerances::default();
    (0..count as u64)
        .map(|seed| {
            let (dims, max_terms) = if seed % 2 == 0 { ((2, 2), 6) } else { ((2, 3), 4) };
            let n = 1 + (seed as usize / 2) % max_terms;
            let rank = 1 + (seed as usize / 3) % 3;
            let base = random_separable_with_rank(dims, n, rank, 1000 + seed).unwrap();
            let mut w = base.weights();
            if seed % 3 == 0 && n >= 2 {
                let shared = (w[0] + w[1]) / 2.0;
                w[0] = shared;
                w[1] = shared;
            }
            if seed % 5 == 0 && n >= 2 {
                let last = w.len() - 1;
                w[0] += w[last];
                w[last] = 0.0;
            }
            if seed % 7 == 0 {
                w = vec![1.0 / n as f64; n];
            }
            let terms = base.terms().iter().zip(w).map(|(t, w)| (w, t.x.clone(), t.y.clone()));
            make_decomposition(terms, &tols).unwrap()
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst_q = f64::INFINITY;
    for (k, dims) in [(2, 2, 2), (2, 2, 3)].into_iter().enumerate() {
        let layout = SubsystemDims::exy(dims.0, dims.1, dims.2).unwrap();
        let n = layout.total();
        for i in 0..1000u64 {
            let seed = (k as u64) << 32 | i;
            let sigma = random_density(&layout, 1 + (i as usize % n), seed).unwrap();
            let cmi = quantum_cmi(&sigma).map_err(|e| e.to_string())?.cmi;
            worst_q = worst_q.min(cmi);
            ensure(cmi >= -1e-9, || format!("quantum cmi {cmi:e} on {dims:?} seed {seed}"))?;
        }
    }
    let tols = Tolerances::default();
    let mut worst_c = f64::INFINITY;
    for seed in 0..1000u64 {
        let dims = [1 + seed as usize % 3, 1 + (seed as usize / 3) % 3, 1 + (seed as usize / 9) % 3];
        let len = dims.iter().product::<usize>();
        let mut rng = condsep_core::rng::rng_from_seed(seed);
        let mut probs: Vec<f64> = (0..len)
            .map(|j| {
                let u: f64 = rand::Rng::random(&mut rng);
                if (seed + j as u64).is_multiple_of(4) {
                    0.0
                } else {
                    u
                }
            })
            .collect();
        if probs.iter().all(|&p| p == 0.0) {
            probs[0] = 1.0;
        }
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        let p = JointDistribution::new(dims, probs, &tols).map_err(|e| e.to_string())?;
        let cmi = classical_cmi(&p);
        worst_c = worst_c.min(cmi);
        ensure(cmi >= -1e-12, || format!("classical cmi {cmi:e} on seed {seed}"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {}", secs(elapsed)))?;
    Ok(format!(
        "min quantum cmi {worst_q:.2e}, min classical cmi {worst_c:.2e}, {}",
        secs(elapsed)
    ))
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    for d in corpus(200) {
        let ext = build_extension(&dedegenerate_weights(&d)).map_err(|e| e.to_string())?;
        let cmi = quantum_cmi(ext.sigma()).map_err(|e| e.to_string())?.cmi;
        worst = worst.max(cmi.abs());
    }
    ensure(worst <= 1e-9, || format!("max |cmi| {worst:e}"))?;
    Ok(format!("max |cmi| {worst:.2e} over 200 extensions"))
}

fn criterion_3() -> Outcome {
    let tols = Tolerances::default();
    let mut worst = 0.0f64;
    let mut degenerate = 0;
    for (i, d) in corpus(200).into_iter().enumerate() {
        if !d.has_distinct_weights() {
            degenerate += 1;
        }
        let rho = d.reconstruct();
        let ext = build_extension(&dedegenerate_weights(&d)).map_err(|e| e.to_string())?;
        let cert = verify_extension(&rho, &ext, &tols).map_err(|e| e.to_string())?;
        ensure(cert.verdict.overall, || format!("case {i} failed conditions {:?}", cert.verdict.failed()))?;
        let marginal = partial_trace(ext.sigma(), &["x", "y"]).unwrap();
        worst = worst.max(marginal.matrix().distance(rho.matrix()));
    }
    ensure(worst <= 1e-8, || format!("reconstruction error {worst:e}"))?;
    ensure(degenerate > 0, || "corpus has no degenerate weights".into())?;
    Ok(format!(
        "200 verified ({degenerate} with repeated weights), max reconstruction error {worst:.2e}"
    ))
}

fn criterion_4() -> Outcome {
    let tols = Tolerances::default();
    let (mut rebuild_err, mut weight_err) = (0.0f64, 0.0f64);
    for (i, d) in corpus(200).into_iter().enumerate() {
        let spread = dedegenerate_weights(&d);
        let ext = build_extension(&spread).map_err(|e| e.to_string())?;
        let x = extract(&ext, &tols).map_err(|e| format!("case {i}: {e}"))?;
        let mut input = spread.weights();
        input.sort_by(|a, b| b.total_cmp(a));
        rebuild_err = rebuild_err.max(x.rebuild().distance(ext.sigma().matrix()));
        let sigma_e = partial_trace(ext.sigma(), &["e"]).unwrap();
        let eig = hermitian_eig(sigma_e.matrix()).unwrap();
        let mut ws = x.decomposition.weights();
        ws.sort_by(|a, b| b.total_cmp(a));
        ensure(ws.len() == eig.eigenvalues.len(), || format!("case {i}: {} weights", ws.len()))?;
        for ((w, l), v) in ws.iter().zip(&eig.eigenvalues).zip(&input) {
            weight_err = weight_err.max((w - l).abs()).max((w - v).abs());
        }
    }
    ensure(rebuild_err <= 1e-8, || format!("rebuild error {rebuild_err:e}"))?;
    ensure(weight_err <= 1e-9, || format!("weight error {weight_err:e}"))?;
    Ok(format!(
        "200 extracted, max rebuild error {rebuild_err:.2e}, max weight error {weight_err:.2e}"
    ))
}

fn criterion_5() -> Outcome {
    let tols = Tolerances::default();
    let mut sigmas = Vec::new();
    for seed in 0..50u64 {
        let (dx, dy) = if seed % 2 == 0 { (2, 2) } else { (2, 3) };
        let d = random_separable_with_rank((dx, dy), 2 + seed as usize % 3, 3, 5000 + seed).unwrap();
        sigmas.push((true, build_extension(&d).map_err(|e| e.to_string())?.into_sigma()));
    }
    for seed in 0..50u64 {
        let layout = SubsystemDims::exy(2 + seed as usize % 2, 2, 2 + (seed as usize / 2) % 2).unwrap();
        sigmas.push((false, random_density(&layout, layout.total(), 6000 + seed).unwrap()));
    }
    let (mut zero_cmi, mut counterexamples) = (0, Vec::new());
    for (k, (separable, sigma)) in sigmas.iter().enumerate() {
        ensure(sigma.min_eigenvalue() > 1e-9, || format!("case {k} is not full rank"))?;
        let residual = saturation_residual(sigma, tols.log_cutoff).map_err(|e| format!("case {k}: {e}"))?;
        let cmi = quantum_cmi(sigma).unwrap().cmi;
        let saturated = residual <= 1e-8;
        let vanishing = cmi.abs() <= 1e-6;
        if vanishing {
            zero_cmi += 1;
        }
        if saturated != vanishing || vanishing != *separable {
            counterexamples.push(format!("case {k}: residual {residual:e}, cmi {cmi:e}"));
        }
    }
    ensure(counterexamples.is_empty(), || counterexamples.join("; "))?;
    Ok(format!("100 states, {zero_cmi} saturated, 0 counterexamples"))
}

fn criterion_6() -> Outcome {
    let tols = Tolerances::default();
    let x = random_density(&SubsystemDims::new(["x"], [2]).unwrap(), 2, 1).unwrap();
    let y = random_density(&SubsystemDims::new(["y"], [3]).unwrap(), 2, 2).unwrap();
    let e = DensityMatrix::maximally_mixed(SubsystemDims::new(["e"], [2]).unwrap());
    let rho = x.tensor(&y).unwrap();
    let product = ExtensionState::new(e.tensor(&rho).unwrap()).unwrap();
    let cert = verify_extension(&rho, &product, &tols).map_err(|e| e.to_string())?;
    ensure(cert.verdict.failed() == vec![4], || {
        format!("product failed {:?}", cert.verdict.failed())
    })?;

    let trivial = DensityMatrix::maximally_mixed(SubsystemDims::new(["e"], [1]).unwrap());
    let bell = ExtensionState::new(trivial.tensor(&bell_state()).unwrap()).unwrap();
    let cert = verify_extension(&bell_state(), &bell, &tols).map_err(|e| e.to_string())?;
    ensure(cert.verdict.failed() == vec![2], || format!("Bell failed {:?}", cert.verdict.failed()))?;
    ensure((cert.cond2_cmi - 2.0).abs() <= 1e-9, || format!("Bell cmi {}", cert.cond2_cmi))?;
    Ok(format!(
        "product fails only condition 4, Bell fails only condition 2 with cmi {:.12}",
        cert.cond2_cmi
    ))
}

fn criterion_7() -> Outcome {
    let bell = ppt_check(&bell_state()).map_err(|e| e.to_string())?.min_eigenvalue;
    ensure((bell + 0.5).abs() <= 1e-10, || format!("Bell min eigenvalue {bell}"))?;
    let f = |p: f64| ppt_check(&werner_state(p).unwrap()).unwrap().min_eigenvalue;
    for k in 0..=20 {
        let p = k as f64 / 20.0;
        let expected = (1.0 - 3.0 * p) / 4.0;
        let got = f(p);
        ensure((got - expected).abs() <= 1e-10, || format!("p = {p}: {got} vs {expected}"))?;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    ensure((root - 1.0 / 3.0).abs() <= 1e-6, || format!("root {root}"))?;
    Ok(format!("Bell {bell:.12}, Werner sign change at p = {root:.9}"))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let config = SearchConfig::default();
    let mut inputs: Vec<(String, DensityMatrix, Option<Verdict>)> = vec![
        (
            "I/4".into(),
            DensityMatrix::maximally_mixed(SubsystemDims::xy(2, 2).unwrap()),
            Some(Verdict::SeparableCertified),
        ),
        ("Werner 0.2".into(), werner_state(0.2).unwrap(), Some(Verdict::SeparableCertified)),
        ("Werner 0.9".into(), werner_state(0.9).unwrap(), Some(Verdict::EntangledCertified)),
        ("Bell".into(), bell_state(), Some(Verdict::EntangledCertified)),
    ];
    for seed in 0..6u64 {
        let layout = if seed % 2 == 0 { SubsystemDims::xy(2, 2) } else { SubsystemDims::xy(2, 3) }.unwrap();
        inputs.push((format!("random {seed}"), random_density(&layout, 1 + seed as usize % 4, seed).unwrap(), None));
    }
    for (name, rho, expected) in &inputs {
        for report in [classify(rho, &config), search_extension(rho, &config)] {
            let report = report.map_err(|e| format!("{name}: {e}"))?;
            let separable = report.verdict == Verdict::SeparableCertified;
            let entangled = report.verdict == Verdict::EntangledCertified;
            if separable {
                let cert = report.certificate.as_ref().ok_or(format!("{name}: no certificate"))?;
                let residual = report.residual.unwrap_or(f64::INFINITY);
                ensure(cert.verdict.overall && residual <= 1e-7, || format!("{name}: weak separable claim"))?;
            }
            ensure(!(separable && !report.is_ppt), || format!("{name}: both certificates"))?;
            ensure(!(entangled && report.is_ppt), || format!("{name}: entangled without a PPT witness"))?;
            if let Some(v) = expected {
                ensure(report.verdict == *v, || format!("{name}: {:?}, note {:?}", report.verdict, report.note))?;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(120), || format!("took {}", secs(elapsed)))?;
    Ok(format!("{} inputs classified consistently, {}", inputs.len(), secs(elapsed)))
}

fn criterion_9() -> Outcome {
    let inputs = [
        werner_state(0.2).unwrap(),
        werner_state(0.3).unwrap(),
        bell_state(),
        random_density(&SubsystemDims::xy(2, 3).unwrap(), 6, 11).unwrap(),
    ];
    let mut documents = 0;
    for (i, rho) in inputs.iter().enumerate() {
        let render = |parallel: bool, search: bool| {
            let config = SearchConfig {
                seed: 42,
                parallel,
                trace: true,
                ..Default::default()
            };
            let report = if search {
                search_extension(rho, &config)
            } else {
                classify(rho, &config)
            };
            serde_json::to_string(&report.unwrap()).unwrap()
        };
        for search in [false, true] {
            let reference = render(false, search);
            for parallel in [false, true, true] {
                documents += 1;
                ensure(render(parallel, search) == reference, || {
                    format!("input {i}: document differs (search {search}, parallel {parallel})")
                })?;
            }
        }
    }
    Ok(format!("{documents} repeated documents byte-identical to their serial reference"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("strong subadditivity", criterion_1),
        ("conditionally separable extensions have zero CMI", criterion_2),
        ("forward round trip", criterion_3),
        ("backward round trip", criterion_4),
        ("saturation equivalence", criterion_5),
        ("negative controls", criterion_6),
        ("PPT oracle", criterion_7),
        ("classifier", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", k + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {} FAIL {name}: {detail}", k + 1);
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
