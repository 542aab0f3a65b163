use doubleshrink::backtest::{run_backtest, BacktestConfig};
use doubleshrink::simulate::{draw_model, gen_t5, Scenario};
use doubleshrink::{Strategy, StrategyKind, Target};

#[test]
fn double_is_less_volatile_than_traditional_near_c_one() {
    let p = 45;
    let model = draw_model(Scenario::T5, p, 404).unwrap();
    let panel = gen_t5(&model, 50 + 250, 405).unwrap();
    let strategies = [StrategyKind::Traditional, StrategyKind::Double]
        .map(|k| Strategy::new(k, Target::EquallyWeighted))
        .to_vec();
    let mut config = BacktestConfig::new(50, strategies);
    config.rebalance_every = 5;
    let report = run_backtest(&panel, &config).unwrap();
    let trad = report.get("Traditional").unwrap();
    let double = report.get("Double-ew").unwrap();
    assert!(double.failed_windows.is_empty());
    assert!(
        double.sigma < trad.sigma,
        "Double {} vs Traditional {}",
        double.sigma,
        trad.sigma
    );
}

#[test]
fn report_does_not_depend_on_strategy_order() {
    let model = draw_model(Scenario::Var1, 6, 9).unwrap();
    let panel = doubleshrink::simulate::gen_var1(&model, 80, 50, 10).unwrap();
    let a = [StrategyKind::Double, StrategyKind::Target]
        .map(|k| Strategy::new(k, Target::EqualCorrelation));
    let mut b = a.clone();
    b.reverse();
    let ra = run_backtest(&panel, &BacktestConfig::new(30, a.to_vec())).unwrap();
    let rb = run_backtest(&panel, &BacktestConfig::new(30, b.to_vec())).unwrap();
    for s in &ra.strategies {
        assert_eq!(Some(s), rb.get(&s.strategy));
    }
}
