//! Johansen and Engle-Granger tests on a cointegrated pair, then the
//! error-correction model at the selected rank.

use topictrend::multivar::{
    cointegration, engle_granger_critical_values, fit_vecm, impulse_response, johansen_trace_critical_5pct,
    stability, CointegrationMethod, DetSpec, ModelRef,
};
use topictrend::synthetic::cointegrated_pair;

fn main() -> topictrend::Result<()> {
    println!("trace 5% critical values, K=3: {:?}", johansen_trace_critical_5pct(3, DetSpec::Constant));
    println!("Engle-Granger critical values, 3 variables: {:?}", engle_granger_critical_values(3));

    let data = cointegrated_pair(150, 2.0, 0.5, 0.0, 9)?;
    for method in [CointegrationMethod::Johansen, CointegrationMethod::EngleGranger] {
        print!("\n{}", cointegration(&data, method, 2, DetSpec::Constant)?.to_table().to_csv()?);
    }

    let vecm = fit_vecm(&data, 2, 1, DetSpec::Constant)?;
    println!("\nbeta' = {:?}", vecm.beta.column(0).iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>());
    println!("alpha = {:?}", vecm.alpha.column(0).iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>());
    let (roots, stable) = stability(ModelRef::Vecm(&vecm));
    println!("companion moduli {:?}, stable apart from imposed unit roots: {stable}",
        roots.iter().map(|r| (r.modulus * 1000.0).round() / 1000.0).collect::<Vec<_>>());
    let irf = impulse_response(ModelRef::Vecm(&vecm), 5, true, Some(Default::default()))?;
    println!("bands: {}", irf.bands_refused.as_deref().unwrap_or("computed"));
    Ok(())
}
