//! Invariant suites exposed through `verify`.

use anyhow::Result;
use clap::ValueEnum;
use num_complex::Complex64;
use rand::Rng;
use serde_json::{json, Value};

use channel_moments::channels::{
    kraus_to_super, pauli_string, standard_noise, NoiseKind, NoiseModel, Pauli,
};
use channel_moments::localized::{gram_for_basis, phi_inverse, phi_matrix};
use channel_moments::moments::{frame_potential_mc, invariance_checks, norm_squared, spectrum, transfer};
use channel_moments::sampling::{stream_rng, CMatrix};
use channel_moments::symmgroup::{catalan, mobius, Permutation};
use channel_moments::twirlsim::{
    gate_twirl_t2, initial_state, mc_expectation_moments, twirl_quadrature, variance_reference, InitialState,
    RefEnsemble,
};
use channel_moments::weingarten::{gram_matrix, weingarten_matrix};
use channel_moments::{BasisKind, EnsembleSpec};

use crate::output::{float, Report};

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Mobius,
    Weingarten,
    Spectrum,
    Invariance,
    Channels,
    Twirl,
    Mc,
    All,
}

const SUITES: [Suite; 7] =
    [Suite::Mobius, Suite::Weingarten, Suite::Spectrum, Suite::Invariance, Suite::Channels, Suite::Twirl, Suite::Mc];

struct Checks {
    suite: &'static str,
    rows: Vec<(String, bool, String)>,
}

impl Checks {
    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.rows.push((name.into(), passed, detail.into()));
    }
}

pub fn run(global: Value, seed: u64, suite: Suite, samples: u64) -> Result<(Report, bool)> {
    let selected: Vec<Suite> = if suite == Suite::All { SUITES.to_vec() } else { vec![suite] };
    let params = json!({ "suite": format!("{suite:?}").to_lowercase(), "samples": samples });
    let mut report = Report::new("verify", global, params, &["suite", "check", "passed", "detail"]);
    let mut all = true;
    for s in selected {
        let mut c = Checks { suite: name(s), rows: Vec::new() };
        match s {
            Suite::Mobius => mobius_suite(&mut c)?,
            Suite::Weingarten => weingarten_suite(&mut c)?,
            Suite::Spectrum => spectrum_suite(&mut c)?,
            Suite::Invariance => invariance_suite(&mut c)?,
            Suite::Channels => channels_suite(&mut c)?,
            Suite::Twirl => twirl_suite(&mut c, seed)?,
            Suite::Mc => mc_suite(&mut c, seed, samples)?,
            Suite::All => unreachable!(),
        }
        for (check, passed, detail) in c.rows {
            all &= passed;
            report.row(vec![c.suite.into(), check, passed.to_string(), detail]);
        }
    }
    Ok((report, all))
}

fn name(s: Suite) -> &'static str {
    match s {
        Suite::Mobius => "mobius",
        Suite::Weingarten => "weingarten",
        Suite::Spectrum => "spectrum",
        Suite::Invariance => "invariance",
        Suite::Channels => "channels",
        Suite::Twirl => "twirl",
        Suite::Mc => "mc",
        Suite::All => "all",
    }
}

fn mobius_suite(c: &mut Checks) -> Result<()> {
    for t in 1..=5 {
        let prod = &phi_matrix(t)? * &phi_inverse(t)?;
        c.push(format!("phi_inverse_t{t}"), prod.is_identity(), "φ φ⁻¹ = I");
    }
    for n in 1..=5usize {
        let cycle = Permutation::from_cycles(n, &[(0..n).collect()])?;
        let expect = if n == 1 { 1 } else { (if n % 2 == 0 { -1 } else { 1 }) * catalan(n - 1) as i64 };
        let got = mobius(&cycle);
        c.push(format!("cycle_{n}"), got == expect, format!("μ = {got}, expected {expect}"));
    }
    Ok(())
}

fn weingarten_suite(c: &mut Checks) -> Result<()> {
    for t in 1..=4usize {
        for d in [t as u64, t as u64 + 1, 8] {
            let ok = (&gram_matrix(t, d)? * &weingarten_matrix(t, d)?).is_identity();
            c.push(format!("inverse_t{t}_d{d}"), ok, "G · Wg = I");
        }
    }
    Ok(())
}

fn spectrum_suite(c: &mut Checks) -> Result<()> {
    for t in 2..=3usize {
        for d in 2..=4u64 {
            for de in 1..=4u64 {
                if d * de < t as u64 {
                    continue;
                }
                let r = spectrum(&EnsembleSpec::chaar(t, d, de))?;
                let res = r.residuals.closed_form.max(r.residuals.right).max(r.residuals.left);
                let mut ok = res < 1e-10 && (r.eigenvalues[0].re - 1.0).abs() < 1e-10;
                let mut detail = format!("max residual {res:e}");
                if t == 2 {
                    let (df, ef) = (d as f64, de as f64);
                    let expect = ef * (df * df - 1.0) / (df * df * ef * ef - 1.0);
                    let err = (r.eigenvalues[1].re - expect).abs();
                    ok &= err < 1e-10;
                    detail += &format!(", second eigenvalue error {err:e}");
                }
                c.push(format!("chaar_t{t}_d{d}_dE{de}"), ok, detail);
            }
        }
    }
    Ok(())
}

fn invariance_suite(c: &mut Checks) -> Result<()> {
    for t in 1..=3usize {
        for (d, de) in [(3u64, 2u64), (4, 3)] {
            let r = invariance_checks(t, d, de)?;
            for ch in r.checks {
                c.push(format!("t{t}_d{d}_dE{de}_{}", ch.name), ch.passed, ch.detail);
            }
        }
    }
    Ok(())
}

fn channels_suite(c: &mut Checks) -> Result<()> {
    for kind in NoiseKind::ALL {
        let k = standard_noise(kind, 0.3)?;
        let s1 = kraus_to_super(&k, 1)?;
        let tp = s1.trace_preservation_error();
        c.push(format!("{kind}_trace_preserving"), tp < 1e-12, format!("error {tp:e}"));
        c.push(format!("{kind}_unitality"), s1.is_unital(1e-12) == kind.is_unital(), "unital iff not amplitude damping");
        let direct = kraus_to_super(&k, 2)?;
        let dev = (direct.matrix - s1.tensor_power(2)?.matrix).camax();
        c.push(format!("{kind}_tensor_square"), dev < 1e-12, format!("deviation {dev:e}"));
    }
    for gamma in [0.0, 0.2, 0.6, 1.0] {
        for eta in [0.0, 0.05] {
            let m = NoiseModel::uniform(1, gamma)?.with_eta(&[Pauli::Z], eta)?;
            if (gamma == 0.0 || gamma == 1.0) && eta > 0.0 {
                continue;
            }
            let min = m.to_super().min_choi_eigenvalue()?;
            c.push(format!("noise_model_cp_g{gamma}_e{eta}"), min >= -1e-10, format!("min Choi eigenvalue {min:e}"));
        }
    }
    let bad = NoiseModel::uniform(1, 0.0)?.with_eta(&[Pauli::Z], 0.5)?;
    c.push("noise_model_rejects_invalid", bad.validate().is_err(), "η = 0.5 with γ = 0");
    Ok(())
}

fn twirl_suite(c: &mut Checks, seed: u64) -> Result<()> {
    let mut rng = stream_rng(seed, 0);
    for label in ["XI", "IY", "ZZ"] {
        let g = pauli_string(&Pauli::parse_string(label)?);
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let x = CMatrix::from_fn(16, 16, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let exact = gate_twirl_t2(&x, &g)?;
            worst = worst.max((&exact - twirl_quadrature(&x, &g, 2, 8)).camax());
            worst = worst.max((&exact - twirl_quadrature(&x, &g, 2, 512)).camax());
        }
        c.push(format!("twirl_{label}"), worst < 1e-10, format!("max deviation {worst:e}"));
    }
    Ok(())
}

fn mc_suite(c: &mut Checks, seed: u64, samples: u64) -> Result<()> {
    for (label, spec) in [("haar_d2_t2", EnsembleSpec::haar(2, 2)), ("chaar_d2_dE2_t2", EnsembleSpec::chaar(2, 2, 2))] {
        let est = frame_potential_mc(&spec, samples, seed)?;
        let tau = transfer(&spec, BasisKind::Permutation, true)?;
        let exact = norm_squared(&tau, &gram_for_basis(tau.basis, true)?)?.to_f64();
        let z = (est.mean - exact) / est.std_error;
        c.push(
            format!("frame_potential_{label}"),
            z.abs() < 3.0,
            format!("{} ± {} vs {} ({}σ)", float(est.mean), float(est.std_error), float(exact), float(z)),
        );
    }
    let rho = initial_state(1, InitialState::Zero);
    let o = pauli_string(&[Pauli::Z]);
    let est = mc_expectation_moments(&EnsembleSpec::haar(2, 2), &rho, &o, samples, seed.wrapping_add(1000))?;
    let exact = variance_reference(&rho, &o, RefEnsemble::Haar)?;
    let z = (est.second_moment - exact.second_moment) / est.second_moment_se;
    c.push(
        "haar_expectation_second_moment",
        z.abs() < 3.0,
        format!("{} ± {} vs {} ({}σ)", float(est.second_moment), float(est.second_moment_se), float(exact.second_moment), float(z)),
    );
    let dep = variance_reference(&rho, &o, RefEnsemble::Depolarize)?;
    c.push("depolarize_variance_zero", dep.variance == 0.0, format!("variance {}", float(dep.variance)));
    Ok(())
}
