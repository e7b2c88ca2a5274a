use std::ffi::CStr;
use std::process::Command;
use std::ptr;

use lifnet_ffi::*;

fn model(phi: f64) -> LifnetWeightModel {
    LifnetWeightModel {
        phi,
        mu: 0.0,
        sparsity_p: 0.0,
        theta: 1.0,
    }
}

fn params(phi: f64, gamma: f64, horizon: usize) -> LifnetMeanFieldParams {
    LifnetMeanFieldParams {
        model: model(phi),
        gamma,
        x0: 0.15,
        clamp_at_zero: true,
        horizon,
    }
}

fn sim_config(n: usize, horizon: usize) -> LifnetSimConfig {
    LifnetSimConfig {
        n,
        model: model(5.0),
        gamma: 0.0,
        x0: 0.15,
        v_min: 0.0,
        horizon,
        seed: 3,
        self_connections: true,
    }
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(lifnet_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn scalar_functions_match_core() {
    assert_eq!(lifnet_gaussian_tail(1.0), lifnet::prob::gaussian_tail(1.0));
    assert_eq!(
        lifnet_death_threshold(2.0),
        lifnet::meanfield::death_threshold(2.0)
    );
    let m = model(5.0);
    let core = lifnet::prob::WeightModel::centered(5.0, 1.0).unwrap();
    let mut out = 0.0;
    unsafe {
        assert_eq!(lifnet_p_phi(0.3, &m, &mut out), LifnetStatus::Ok);
        assert_eq!(out, lifnet::prob::p_phi(0.3, &core).unwrap());
        assert_eq!(lifnet_p_phi_deriv(0.3, &m, &mut out), LifnetStatus::Ok);
        assert_eq!(out, lifnet::prob::p_phi_deriv(0.3, &core).unwrap());
        assert_eq!(
            lifnet_charge_prob_vmin(0.4, 0.1, 0.0, &m, &mut out),
            LifnetStatus::Ok
        );
        assert!(out > 0.0 && out < 0.5);
    }
    let version = unsafe { CStr::from_ptr(lifnet_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn errors_are_reported() {
    let mut out = 0.0;
    unsafe {
        assert_eq!(
            lifnet_p_phi(0.3, ptr::null(), &mut out),
            LifnetStatus::NullPointer
        );
        assert!(last_error().contains("model"));
        assert_eq!(
            lifnet_p_phi(-1.0, &model(5.0), &mut out),
            LifnetStatus::InvalidArgument
        );
        assert!(!last_error().is_empty());
        let bad = model(-1.0);
        assert_eq!(
            lifnet_p_phi(0.3, &bad, &mut out),
            LifnetStatus::InvalidArgument
        );
        assert_eq!(
            lifnet_pgf_eval(21, 0.5, &params(5.0, 0.0, 5), 10, &mut out),
            LifnetStatus::InvalidArgument
        );
    }
}

#[test]
fn fixed_points_buffer_protocol() {
    let m = model(5.0);
    let mut len = 0;
    let mut death = true;
    let mut values = [0.0; 8];
    let mut stable = [false; 8];
    unsafe {
        let status = lifnet_fixed_points(
            &m,
            values.as_mut_ptr(),
            stable.as_mut_ptr(),
            1,
            &mut len,
            &mut death,
        );
        assert_eq!(status, LifnetStatus::BufferTooSmall);
        assert_eq!(len, 3);
        let status = lifnet_fixed_points(
            &m,
            values.as_mut_ptr(),
            stable.as_mut_ptr(),
            8,
            &mut len,
            &mut death,
        );
        assert_eq!(status, LifnetStatus::Ok);
    }
    assert!(!death);
    assert_eq!(values[0], 0.0);
    assert!(stable[0] && !stable[1] && stable[2]);
    assert!((values[2] - 0.3713863860912).abs() < 1e-9);

    unsafe {
        lifnet_fixed_points(
            &model(2.0),
            values.as_mut_ptr(),
            stable.as_mut_ptr(),
            8,
            &mut len,
            &mut death,
        );
    }
    assert!(death);
    assert_eq!(len, 1);
}

#[test]
fn meanfield_handle() {
    let p = params(5.0, 0.5, 30);
    let mut trace: *mut LifnetTrace = ptr::null_mut();
    unsafe {
        assert_eq!(lifnet_meanfield_run(&p, &mut trace), LifnetStatus::Ok);
        assert_eq!(lifnet_trace_len(trace), 31);
        let mut x = vec![0.0; 31];
        assert_eq!(
            lifnet_trace_activity(trace, x.as_mut_ptr(), 30),
            LifnetStatus::BufferTooSmall
        );
        assert_eq!(
            lifnet_trace_activity(trace, x.as_mut_ptr(), 31),
            LifnetStatus::Ok
        );
        assert_eq!(x[0], 0.15);
        assert!((x[1] - lifnet_trace_fire_prob(trace, 0, 1)).abs() < 1e-15);
        let mut conv = 0;
        assert_eq!(
            lifnet_trace_converged_at(trace, &mut conv),
            LifnetStatus::Ok
        );
        assert!(conv > 0);

        let mut e = vec![0.0; 31];
        let mut v = vec![0.0; 31];
        assert_eq!(
            lifnet_moments(&p, 1000, e.as_mut_ptr(), v.as_mut_ptr(), 31),
            LifnetStatus::Ok
        );
        assert!((e[30] - 1000.0 * x[30]).abs() < 1e-9);

        let mut g = 0.0;
        assert_eq!(lifnet_pgf_eval(3, 1.0, &p, 1000, &mut g), LifnetStatus::Ok);
        assert!((g - 1.0).abs() < 1e-12);

        lifnet_trace_free(trace);
        lifnet_trace_free(ptr::null_mut());
        assert_eq!(lifnet_trace_len(ptr::null()), 0);
    }
}

#[test]
fn simulation_and_ensemble_handles() {
    let c = sim_config(200, 25);
    let mut a = vec![0u64; 26];
    let mut b = vec![0u64; 26];
    unsafe {
        assert_eq!(
            lifnet_simulate_counts(&c, 1, a.as_mut_ptr(), 26),
            LifnetStatus::Ok
        );
        assert_eq!(
            lifnet_simulate_counts(&c, 1, b.as_mut_ptr(), 26),
            LifnetStatus::Ok
        );
    }
    assert_eq!(a, b);
    let core = lifnet::simulator::SimConfig::new(
        200,
        lifnet::prob::WeightModel::centered(5.0, 1.0).unwrap(),
        0.0,
        0.15,
    )
    .unwrap()
    .with_seed(3)
    .with_horizon(25);
    let trace = lifnet::simulator::run_simulation(&core, 1);
    assert_eq!(
        a,
        trace
            .spike_counts
            .iter()
            .map(|&x| x as u64)
            .collect::<Vec<_>>()
    );

    let mut e: *mut LifnetEnsemble = ptr::null_mut();
    unsafe {
        assert_eq!(lifnet_ensemble_run(&c, 5, &mut e), LifnetStatus::Ok);
        assert_eq!(lifnet_ensemble_len(e), 26);
        let mut mean = vec![0.0; 26];
        let mut std = vec![0.0; 26];
        assert_eq!(
            lifnet_ensemble_mean_activity(e, mean.as_mut_ptr(), 26),
            LifnetStatus::Ok
        );
        assert_eq!(
            lifnet_ensemble_std_activity(e, std.as_mut_ptr(), 26),
            LifnetStatus::Ok
        );
        assert!(mean.iter().all(|&m| (0.0..=1.0).contains(&m)));
        let mut asym = 0.0;
        assert_eq!(lifnet_ensemble_asymptote(e, &mut asym), LifnetStatus::Ok);
        assert!(asym > 0.2 && asym < 0.5);
        let mut tv = 0.0;
        assert_eq!(lifnet_ensemble_isi_tv(e, 0.37, &mut tv), LifnetStatus::Ok);
        assert!((0.0..=1.0).contains(&tv));
        assert_eq!(
            lifnet_ensemble_isi_tv(e, 0.0, &mut tv),
            LifnetStatus::InvalidArgument
        );
        lifnet_ensemble_free(e);
    }

    let mut bad = sim_config(200, 25);
    bad.v_min = 0.5;
    unsafe {
        assert_eq!(
            lifnet_simulate_counts(&bad, 0, a.as_mut_ptr(), 26),
            LifnetStatus::InvalidArgument
        );
    }
}

#[test]
fn header_declares_every_export() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let header = std::fs::read_to_string(format!("{dir}/include/lifnet.h")).unwrap();
    let source = std::fs::read_to_string(format!("{dir}/src/lib.rs")).unwrap();
    let exports: Vec<String> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap().to_string())
        .collect();
    assert!(exports.len() > 20);
    for name in &exports {
        assert!(
            header.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
    for item in [
        "LIFNET_STATUS_OK = 0",
        "typedef struct LifnetTrace LifnetTrace;",
        "typedef struct LifnetEnsemble",
    ] {
        assert!(header.contains(item), "{item}");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let Ok(out) = Command::new("cc")
        .args([
            "-fsyntax-only",
            "-Wall",
            "-Werror",
            "-x",
            "c",
            &format!("{dir}/include/lifnet.h"),
        ])
        .output()
    else {
        eprintln!("no C compiler, skipped");
        return;
    };
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
