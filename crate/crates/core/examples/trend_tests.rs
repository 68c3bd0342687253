//! Yearly prevalence by category, the unit-root battery, a one-sided
//! dominance test and the top-probability trend.

use topictrend::synthetic::{generating_theta, synthetic_records, theme_names, RecordSpec};
use topictrend::trend_series::{
    battery_table, ks_dominance, newey_west_lag, top_quantile_series, unit_root_battery, yearly_prevalence,
    CategoryMap, Grouping,
};

fn main() -> topictrend::Result<()> {
    // The generating theme shares stand in for a fitted theta.
    let rows = synthetic_records(&RecordSpec::default())?;
    let theta = generating_theta(&rows);
    let records: Vec<_> = rows.into_iter().map(|r| r.record).collect();
    println!("themes: {:?}", theme_names());

    // Empirics (theme 2) stays unmapped and lands in the external bucket.
    let map = CategoryMap::parse("topic,category\n1,game_theory\n3,policy\n4,policy\n")?;
    let series = yearly_prevalence(&theta, &records, &Grouping::Categories(map))?;
    let table = series.to_table().to_csv()?;
    println!("{}", table.lines().take(4).collect::<Vec<_>>().join("\n"));

    let t = series.years.len();
    println!("\nT = {t}, Newey-West bandwidth {}", newey_west_lag(t)?);
    let logs = series.log_values()?;
    let mut battery = Vec::new();
    for (j, label) in series.labels.iter().enumerate() {
        let y: Vec<f64> = logs.column(j).iter().copied().collect();
        battery.push((label.clone(), unit_root_battery(&y, None)?));
    }
    print!("{}", battery_table(&battery).to_csv()?);

    // Log external share, papers up to 2010 against later ones.
    let (mut early, mut late) = (Vec::new(), Vec::new());
    for (d, r) in records.iter().enumerate() {
        let v = theta[(d, 1)].ln();
        if r.year <= 2010 { early.push(v) } else { late.push(v) }
    }
    let ks = ks_dominance(&early, &late)?;
    println!("\nD+ = {:.3} (m = {}, n = {}), p {}", ks.d_plus, ks.m, ks.n, ks.p_value);

    let years: Vec<i32> = records.iter().map(|r| r.year).collect();
    let top = top_quantile_series(&theta, &years, 3)?;
    println!("cubic trend of the mean top probability: {:?}", top.trend.coefficients);
    Ok(())
}
