use dks_cli::config::RunConfig;
use proptest::prelude::*;

fn pulse() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("bragg"), Just("raman")]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dump_reparses_to_the_same_config(
        n in 2u64..10_000_000,
        tau in prop_oneof![Just(None), (-1.0f64..1.0).prop_map(Some)],
        tau_ai in -1e-2f64..1e-2,
        delta_n in 0.0f64..100.0,
        freqs in prop::array::uniform3(1e-3f64..1e4),
        t_exp in 0.0f64..0.05,
        grid in (0.0f64..1e-3, 1e-3f64..1.0, 1usize..100),
        pulses in prop::collection::vec(pulse(), 1..3),
        refine in any::<bool>(),
    ) {
        let mut cfg = RunConfig::default();
        let sets = vec![
            format!("N={n}"),
            format!("tau={}", tau.map_or("auto".to_string(), |t| t.to_string())),
            format!("tau_ai={tau_ai}"),
            format!("delta_n={delta_n}"),
            format!("f_dks1={},{},{}", freqs[0], freqs[1], freqs[2]),
            format!("t_exp={t_exp}"),
            format!("dt1_grid={}:{}:{}", grid.0, grid.1, grid.2),
            format!("pulse_types={}", pulses.join(",")),
            format!("refine={refine}"),
        ];
        cfg.apply_overrides(&sets).unwrap();
        let back = RunConfig::parse(&cfg.dump()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn garbage_values_are_rejected_with_the_key(key in prop_oneof![Just("N"), Just("t_exp"), Just("refine")], junk in "[a-z]{3,8}") {
        prop_assume!(!["yes", "no", "true", "false"].contains(&junk.as_str()));
        let err = RunConfig::parse(&format!("# header\n{key} = {junk}\n")).unwrap_err();
        prop_assert_eq!(err.line, Some(2));
        prop_assert_eq!(err.key.as_deref(), Some(key));
    }
}
