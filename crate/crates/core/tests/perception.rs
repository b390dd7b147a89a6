use std::f64::consts::PI;

use active_search::geometry::{backproject, CameraModel, Vec3, Viewpoint};
use active_search::perception::{distance_from_scale, observe, true_pose_angles, NoiseConfig};
use active_search::rng_from;
use active_search::scene::{generate_scene, Catalog, EnvConfig};

/// Asymptotic Kolmogorov survival function.
fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for k in 1..100 {
        let k = k as f64;
        p += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
    }
    p.clamp(0.0, 1.0)
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

#[test]
fn detection_rate_matches_true_positive_rate() {
    let catalog = Catalog::default();
    let scene = generate_scene(&catalog, &EnvConfig::default(), 1, 1, &[2]).unwrap();
    let obj = scene.objects[0];
    let camera = Viewpoint::new(obj.position, 0.4, 0.7, 1.0).unwrap().to_camera_pose();
    let model = CameraModel::default();
    let noise = NoiseConfig::default();
    let mut rng = rng_from(2, 0);
    let n = 10_000;
    let hits = (0..n)
        .filter(|_| observe(&scene, &catalog, &camera, &model, &noise, &mut rng).get(2).is_some())
        .count();
    let p = noise.true_positive_rate;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    let rate = hits as f64 / n as f64;
    assert!((rate - p).abs() <= 3.0 * se, "rate {rate} vs {p}");
}

#[test]
fn symmetric_azimuth_estimates_are_uniform() {
    let catalog = Catalog::default();
    let scene = generate_scene(&catalog, &EnvConfig::default(), 2, 1, &[3]).unwrap();
    let obj = scene.objects[0];
    let camera = Viewpoint::new(obj.position, 0.4, 0.7, 0.3).unwrap().to_camera_pose();
    let model = CameraModel::default();
    let mut rng = rng_from(3, 0);
    let mut samples: Vec<f64> = Vec::new();
    while samples.len() < 10_000 {
        if let Some(d) = observe(&scene, &catalog, &camera, &model, &NoiseConfig::default(), &mut rng).get(3) {
            samples.push(d.pose_estimate.azimuth_rel);
        }
    }
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    let d = samples
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let cdf = (x + PI) / (2.0 * PI);
            (cdf - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - cdf).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks_p_value(d, n) > 0.01, "KS D = {d}");
}

#[test]
fn finite_symmetry_pose_estimates_are_unbiased() {
    let catalog = Catalog::default();
    let scene = generate_scene(&catalog, &EnvConfig::default(), 4, 1, &[4]).unwrap();
    let obj = scene.objects[0];
    let camera = Viewpoint::new(obj.position, 0.45, 0.5, -2.0).unwrap().to_camera_pose();
    let model = CameraModel::default();
    let noise = NoiseConfig::default();
    let (true_az, true_el) = true_pose_angles(&camera, &obj.position, obj.yaw);
    let mut rng = rng_from(5, 0);
    let (mut s_az, mut c_az, mut s_el, mut c_el, mut n) = (0.0, 0.0, 0.0, 0.0, 0usize);
    while n < 5000 {
        if let Some(d) = observe(&scene, &catalog, &camera, &model, &noise, &mut rng).get(4) {
            let ea = wrap(d.pose_estimate.azimuth_rel - true_az);
            let ee = wrap(d.pose_estimate.elevation - true_el);
            s_az += ea.sin();
            c_az += ea.cos();
            s_el += ee.sin();
            c_el += ee.cos();
            n += 1;
        }
    }
    let se = noise.pose_noise_std / (n as f64).sqrt();
    assert!(s_az.atan2(c_az).abs() <= 3.0 * se);
    assert!(s_el.atan2(c_el).abs() <= 3.0 * se);
}

#[test]
fn noiseless_detections_invert_to_the_object() {
    let catalog = Catalog::default();
    let env = EnvConfig::default();
    let model = CameraModel::default();
    let mut rng = rng_from(6, 0);
    for seed in 0..50 {
        let scene = generate_scene(&catalog, &env, seed, 1, &[(seed % 5) as usize]).unwrap();
        let obj = scene.objects[0];
        let offset = Vec3::new(0.03, -0.02, 0.01);
        let camera = Viewpoint::new(obj.position + offset, 0.5, 0.6, seed as f64).unwrap().to_camera_pose();
        let obs = observe(&scene, &catalog, &camera, &model, &NoiseConfig::noiseless(), &mut rng);
        let d = obs.get(obj.category).expect("visible object is detected");
        let dist = (obj.position - camera.position).norm();
        assert!((distance_from_scale(d.scale).unwrap() - dist).abs() < 1e-9);
        let ray = backproject(&camera, &model, &d.pixel_center).unwrap();
        assert!((ray.at(dist) - obj.position).norm() < 1e-6);
        assert!(d.scale > 0.0);
    }
}
