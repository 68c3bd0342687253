//! Lag selection, VAR estimation, Granger causality, impulse responses,
//! variance decomposition and residual diagnostics on a simulated system.

use nalgebra::{DMatrix, DVector};
use topictrend::multivar::{
    diagnostics, fevd, fit_var, granger_table, granger_wald, impulse_response, select_lag, BootstrapSpec, GrangerMode,
    ModelRef,
};
use topictrend::synthetic::simulate_var;

fn main() -> topictrend::Result<()> {
    // y1 drives y2; nothing feeds back.
    let a1 = DMatrix::from_row_slice(3, 3, &[0.5, 0.0, 0.0, 0.4, 0.3, 0.0, 0.0, 0.0, 0.2]);
    let a2 = DMatrix::from_row_slice(3, 3, &[0.2, 0.0, 0.0, 0.0, 0.1, 0.0, 0.0, 0.0, 0.1]);
    let data = simulate_var(&[a1, a2], &DVector::zeros(3), 1.0, 200, 100, 3)?;

    let selection = select_lag(&data, 4)?;
    print!("{}", selection.to_table().to_csv()?);

    let var = fit_var(&data, 2)?;
    println!("\nlog likelihood {:.3}, stable {}", var.loglik, var.is_stable());

    let granger = granger_wald(&data, 2, 1, GrangerMode::AllLags)?;
    print!("\n{}", granger_table(&granger).to_csv()?);

    let spec = BootstrapSpec {
        replications: 200,
        seed: 1,
        ..BootstrapSpec::default()
    };
    let irf = impulse_response(ModelRef::Var(&var), 6, true, Some(spec))?;
    let lower = irf.lower.as_ref().unwrap();
    let upper = irf.upper.as_ref().unwrap();
    println!("\nresponse of y2 to a y1 shock:");
    for h in 0..=6 {
        println!("  step {h}: {:+.3} [{:+.3}, {:+.3}]", irf.responses[h][(1, 0)], lower[h][(1, 0)], upper[h][(1, 0)]);
    }

    let decomposition = fevd(&var, 8, Some(spec))?;
    println!("\nshare of y2's forecast error variance due to y1: {:?}",
        decomposition.share(1, 0).iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>());

    let diag = diagnostics(ModelRef::Var(&var), 2)?;
    print!("\n{}", diag.normality_table().to_csv()?);
    print!("{}", diag.lm_table().to_csv()?);
    Ok(())
}
