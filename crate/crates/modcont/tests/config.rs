use modcont::config::{RunConfig, SweepMode};
use modcont::moduli::GProfile;

#[test]
fn default_config_round_trips() {
    let c = RunConfig::default();
    let text = c.to_json().unwrap();
    let back = RunConfig::from_json(&text).unwrap();
    assert_eq!(back, c);
    assert_eq!(back.to_json().unwrap(), text);
}

#[test]
fn populated_config_round_trips() {
    let text = r#"{
        "seed": 11,
        "threads": 2,
        "verify": { "kind": "THM4_CRIT", "params": { "alpha": 0.8, "beta": 0.6, "C_d": 0.3, "dim": 3 }, "certify": true },
        "simulate": { "scenario": "drift-diffusion", "n": 128, "T": 0.25, "g": { "kind": "affine", "a": 1.0, "b": 0.5 },
                      "constants": { "B": 3.5 }, "scan": { "random_shifts": 500, "seed": 4, "slack": 1e-3 } },
        "sweep": { "mode": "verify", "alphas": [0.6, 1.0], "betas": [0.5] },
        "hypothesis": { "lambda0": 4.0 }
    }"#;
    let c = RunConfig::from_json(text).unwrap();
    assert_eq!(c.simulate.constants["B"], 3.5);
    assert_eq!(c.simulate.g, Some(GProfile::Affine { a: 1.0, b: 0.5 }));
    let again = RunConfig::from_json(&c.to_json().unwrap()).unwrap();
    assert_eq!(again, c);
}

#[test]
fn malformed_fields_are_config_errors() {
    for bad in [
        r#"{"sweep": {"mode": "both"}}"#,
        r#"{"seed": -1}"#,
        "not json",
    ] {
        assert!(
            matches!(RunConfig::from_json(bad), Err(modcont::Error::Config(_))),
            "{bad}"
        );
    }
}

#[test]
fn sweep_cells_cover_the_grid() {
    let mut c = RunConfig::default();
    c.seed = 5;
    let (v, s) = c.sweep_cells();
    assert!(v.is_empty());
    assert_eq!(s.len(), 3);
    assert!(s.iter().all(|x| x.seed == 5 && x.n.is_none()));

    c.sweep.resolutions = vec![64, 128];
    assert_eq!(c.sweep_cells().1.len(), 6);

    c.sweep.mode = SweepMode::Verify;
    c.sweep.alphas = vec![0.5, 0.75, 1.0];
    c.sweep.betas = vec![0.4, 0.6];
    let (v, s) = c.sweep_cells();
    assert!(s.is_empty());
    assert_eq!(v.len(), 6);
    assert_eq!((v[1].params.alpha, v[1].params.beta), (0.5, 0.6));
}
