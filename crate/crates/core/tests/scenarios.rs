use fedload::loaddata::SyntheticSpec;
use fedload::nn::Architecture;
use fedload::scenarios::{
    emit_report, run_scenario, table_csv, ClippingMode, DataSource, RowKind, ScenarioConfig,
    ScenarioId,
};

fn tiny(id: ScenarioId, clients: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::preset(id);
    cfg.data = DataSource::Synthetic {
        groups: vec![SyntheticSpec {
            n_clients: clients,
            days: 6,
            ..SyntheticSpec::default()
        }],
    };
    cfg.model = Architecture::StackedLstm { hidden: vec![3] };
    cfg.prep.lookback = 6;
    cfg.train.batch_size = 16;
    cfg.train.max_epochs = 3;
    cfg.federation.rounds = 3;
    cfg.federation.local_epochs = 1;
    cfg
}

#[test]
fn toml_layers_over_preset_and_accepts_overrides() {
    let text = r#"
scenario = "A"
federation_sizes = [2, 5]

[federation]
rounds = 10
"#;
    let cfg = ScenarioConfig::from_toml_str(text, &["train.learning_rate=0.05".into()]).unwrap();
    assert_eq!(cfg.scenario, ScenarioId::A);
    assert_eq!(cfg.federation_sizes, vec![2, 5]);
    assert_eq!(cfg.federation.rounds, 10);
    assert_eq!(cfg.federation.local_epochs, 5);
    assert_eq!(cfg.train.learning_rate, 0.05);
    assert_eq!(cfg.train.batch_size, 256);

    let central = ScenarioConfig::from_overrides(ScenarioId::A, &["scenario=0".into()]).unwrap();
    assert_eq!(central.scenario, ScenarioId::Central);

    let swapped = ScenarioConfig::from_toml_str(
        "scenario = \"A\"\n[model]\ntype = \"stacked_lstm\"\nhidden = [4]\n",
        &[],
    )
    .unwrap();
    assert_eq!(swapped.model, Architecture::StackedLstm { hidden: vec![4] });

    let round_trip = ScenarioConfig::from_toml_str(&cfg.to_toml_string().unwrap(), &[]).unwrap();
    assert_eq!(round_trip, cfg);
}

#[test]
fn presets_follow_the_published_hyperparameters() {
    let d = ScenarioConfig::preset(ScenarioId::D);
    assert_eq!(d.federation.participation_ratio, 0.1);
    assert_eq!(d.federation.rounds, 100);
    assert_eq!(d.train.batch_size, 64);
    assert_eq!(d.federation.post_training_local_epochs, 1);
    assert_eq!(d.model, Architecture::stacked_lstm());
    let sweep = d.dp.unwrap();
    assert_eq!(sweep.delta, 4e-3);
    assert_eq!(sweep.noise_scales.len(), 9);
    assert_eq!(sweep.clip_values.len(), 7);
    let a = ScenarioConfig::preset(ScenarioId::A);
    assert_eq!((a.federation.rounds, a.federation.local_epochs), (300, 5));
    assert_eq!(a.federation_sizes, vec![2, 5, 8, 11, 14, 17, 20, 23]);
    assert_eq!(ScenarioConfig::preset(ScenarioId::C).model, Architecture::conv_seq2seq());
    for id in [ScenarioId::Central, ScenarioId::A, ScenarioId::B, ScenarioId::C, ScenarioId::D, ScenarioId::E] {
        ScenarioConfig::preset(id).validate().unwrap();
    }
}

#[test]
fn incompatible_options_are_rejected_before_running() {
    let mut a = tiny(ScenarioId::A, 3);
    a.secagg = Some(Default::default());
    assert!(run_scenario(&a).is_err());
    let mut d = tiny(ScenarioId::D, 3);
    d.dp = None;
    assert!(run_scenario(&d).is_err());
    let mut big = tiny(ScenarioId::A, 3);
    big.federation_sizes = vec![4];
    assert!(run_scenario(&big).is_err());
    assert!(ScenarioConfig::from_toml_str("scenario = \"Z\"", &[]).is_err());
    assert!(ScenarioConfig::from_toml_str("federation_sizes = [1]", &[]).is_err());
    let typo = ScenarioConfig::from_overrides(ScenarioId::A, &["federation.round=3".into()]);
    assert!(typo.unwrap_err().to_string().contains("federation.round"));
    // Encoder-decoder has no `hidden` widths.
    assert!(ScenarioConfig::from_overrides(ScenarioId::A, &["model.hidden=[4]".into()]).is_err());
}

#[test]
fn scenario_a_emits_one_row_per_size() {
    let mut cfg = tiny(ScenarioId::A, 5);
    cfg.federation_sizes = vec![2, 5];
    cfg.federation.rounds = 10;
    let result = run_scenario(&cfg).unwrap();
    assert_eq!(result.rows.len(), 2);
    assert_eq!(result.rows[1].clients.len(), 5);
    assert_eq!(result.rows[0].mape_curve.len(), 10);
    let csv = table_csv(&result);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("federation_size,mse,rmse,mae,mape,time_per_round_s"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn scenario_d_fixed_sweeps_clip_norms_then_noise() {
    let mut cfg = tiny(ScenarioId::D, 10);
    cfg.federation.rounds = 2;
    let result = run_scenario(&cfg).unwrap();
    let kinds: Vec<RowKind> = result.rows.iter().map(|r| r.kind).collect();
    assert_eq!(&kinds[..7], &[RowKind::ClipSweep; 7]);
    assert_eq!(&kinds[7..], &[RowKind::NoiseSweep; 9]);
    assert_eq!(result.rows[0].clip_norm, Some(0.1));
    assert_eq!(result.rows[15].noise_scale, Some(0.9));
    assert!(result.rows[7].epsilon.unwrap() > result.rows[15].epsilon.unwrap());
    let header = table_csv(&result).lines().next().unwrap().to_string();
    assert!(header.contains("epsilon,delta"));
}

#[test]
fn scenario_d_adaptive_reports_effective_noise_and_trajectory() {
    let mut cfg = tiny(ScenarioId::D, 10);
    cfg.federation.rounds = 3;
    let sweep = cfg.dp.as_mut().unwrap();
    sweep.clipping = ClippingMode::Adaptive;
    sweep.sigma_b = Some(2.0);
    let result = run_scenario(&cfg).unwrap();
    assert_eq!(result.rows.len(), 9);
    let row = &result.rows[8];
    let expected = (0.9f64.powi(-2) - 4.0f64.powi(-2)).powf(-0.5);
    assert!((row.effective_noise.unwrap() - expected).abs() < 1e-12);
    // The guarantee is that of the nominal z, not of z_Δ alone.
    let q = cfg.federation.participation_ratio;
    let (eps, _) = fedload::accountant::epsilon_for(3, q, 0.9, cfg.dp.as_ref().unwrap().delta).unwrap();
    assert_eq!(row.epsilon, Some(eps));
    assert_eq!(row.clip_trajectory.as_ref().unwrap().len(), 4);
    assert!(table_csv(&result).starts_with(
        "noise_scale,effective_noise,epsilon,delta,mse,rmse,mae,mape,time_per_round_s\n"
    ));
}

#[test]
fn scenario_b_reports_correlation_rates() {
    let mut cfg = tiny(ScenarioId::B, 0);
    cfg.data = DataSource::Synthetic {
        groups: vec![
            SyntheticSpec { n_clients: 4, days: 6, id_prefix: "H".into(), ..Default::default() },
            SyntheticSpec { n_clients: 4, days: 6, seed: 3, id_prefix: "L".into(), ..Default::default() },
        ],
    };
    cfg.federation_sizes = vec![2, 4];
    let result = run_scenario(&cfg).unwrap();
    let rates: Vec<f64> = result.rows.iter().map(|r| r.correlation_rate.unwrap()).collect();
    assert!(rates[0] >= rates[1]);
    assert!(table_csv(&result).starts_with("federation_size,mse,rmse,mae,mape,correlation_rate\n"));
}

#[test]
fn scenario_e_logs_transcripts_and_both_splits() {
    let mut cfg = tiny(ScenarioId::E, 3);
    cfg.federation_sizes = vec![3];
    let result = run_scenario(&cfg).unwrap();
    assert!(!result.rows[0].transcript.is_empty());
    let dir = tempfile::tempdir().unwrap();
    emit_report(&result, dir.path()).unwrap();
    let splits = std::fs::read_to_string(dir.path().join("splits.csv")).unwrap();
    assert!(splits.contains("size=3,validation,"));
    assert!(splits.contains("size=3,train,"));
    assert!(dir.path().join("secagg_transcript.jsonl").exists());
}

#[test]
fn runs_are_deterministic_and_reports_reproducible() {
    let mut cfg = tiny(ScenarioId::Central, 3);
    cfg.federation_sizes = vec![2, 3];
    cfg.seed = Some(11);
    let first = run_scenario(&cfg).unwrap();
    let second = run_scenario(&cfg).unwrap();
    assert_eq!(first.without_timing(), second.without_timing());
    assert!(table_csv(&first).starts_with("central_dataset_size,mse,rmse,mae,mape,time_per_epoch_s\n"));

    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let files = emit_report(&first, a.path()).unwrap();
    emit_report(&first, b.path()).unwrap();
    for f in &files {
        let name = f.file_name().unwrap();
        assert_eq!(std::fs::read(f).unwrap(), std::fs::read(b.path().join(name)).unwrap());
    }
    let fp = std::fs::read_to_string(a.path().join("fingerprint.txt")).unwrap();
    assert_eq!(fp.trim(), first.fingerprint);
    assert_eq!(fp.trim().len(), 64);
}

#[test]
fn central_training_beats_federated_training_on_equal_budget() {
    let mut wins = 0;
    for s in 0..10 {
        let mut central = tiny(ScenarioId::Central, 4);
        central.model = Architecture::StackedLstm { hidden: vec![6] };
        central.data = DataSource::Synthetic {
            groups: vec![SyntheticSpec { n_clients: 4, days: 10, shared_weight: 0.3, ..Default::default() }],
        };
        central.federation_sizes = vec![4];
        central.seed = Some(s);
        central.train.max_epochs = 10;
        let mut fed = central.clone();
        fed.scenario = ScenarioId::A;
        fed.federation.rounds = 10;
        let c = run_scenario(&central).unwrap();
        let f = run_scenario(&fed).unwrap();
        if c.rows[0].validation.mse <= f.rows[0].validation.mse {
            wins += 1;
        }
    }
    assert!(wins >= 7, "centralized won {wins} of 10");
}
