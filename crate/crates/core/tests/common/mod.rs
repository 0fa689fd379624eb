//! Test-only reference implementations, kept deliberately naive.
//!
//! `ref_nifti` writes NIfTI-1 bytes field by field without touching the crate.
//! `oracle` scores a pair with brute-force searches, Horn's quaternion ICP
//! step and a successive-shortest-path assignment. It shares only the
//! subsampling RNG convention with the crate.

#![allow(dead_code)]

use std::io::Write;
use std::path::{Path, PathBuf};

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("data")
}

pub fn phantom_dir() -> PathBuf {
    data_dir().join("phantom")
}

pub mod ref_nifti {
    use super::*;

    /// Raw voxel payload, one variant per supported datatype.
    #[derive(Debug, Clone, PartialEq)]
    pub enum Payload {
        U8(Vec<u8>),
        I16(Vec<i16>),
        I32(Vec<i32>),
        F32(Vec<f32>),
        F64(Vec<f64>),
    }

    impl Payload {
        pub fn code(&self) -> i16 {
            match self {
                Payload::U8(_) => 2,
                Payload::I16(_) => 4,
                Payload::I32(_) => 8,
                Payload::F32(_) => 16,
                Payload::F64(_) => 64,
            }
        }

        pub fn bitpix(&self) -> i16 {
            match self {
                Payload::U8(_) => 8,
                Payload::I16(_) => 16,
                Payload::I32(_) | Payload::F32(_) => 32,
                Payload::F64(_) => 64,
            }
        }

        pub fn as_f64(&self) -> Vec<f64> {
            match self {
                Payload::U8(v) => v.iter().map(|&x| x as f64).collect(),
                Payload::I16(v) => v.iter().map(|&x| x as f64).collect(),
                Payload::I32(v) => v.iter().map(|&x| x as f64).collect(),
                Payload::F32(v) => v.iter().map(|&x| x as f64).collect(),
                Payload::F64(v) => v.clone(),
            }
        }

        fn bytes(&self, big_endian: bool) -> Vec<u8> {
            macro_rules! enc {
                ($v:expr) => {
                    $v.iter()
                        .flat_map(|x| {
                            if big_endian {
                                x.to_be_bytes().to_vec()
                            } else {
                                x.to_le_bytes().to_vec()
                            }
                        })
                        .collect()
                };
            }
            match self {
                Payload::U8(v) => v.clone(),
                Payload::I16(v) => enc!(v),
                Payload::I32(v) => enc!(v),
                Payload::F32(v) => enc!(v),
                Payload::F64(v) => enc!(v),
            }
        }
    }

    pub struct Image {
        pub dims: [i16; 3],
        pub spacing: [f32; 3],
        pub payload: Payload,
        pub slope: f32,
        pub intercept: f32,
    }

    struct Buf {
        bytes: Vec<u8>,
        big_endian: bool,
    }

    impl Buf {
        fn put(&mut self, offset: usize, raw_le: &[u8]) {
            let mut raw = raw_le.to_vec();
            if self.big_endian {
                raw.reverse();
            }
            self.bytes[offset..offset + raw.len()].copy_from_slice(&raw);
        }
        fn i16(&mut self, offset: usize, v: i16) {
            self.put(offset, &v.to_le_bytes());
        }
        fn i32(&mut self, offset: usize, v: i32) {
            self.put(offset, &v.to_le_bytes());
        }
        fn f32(&mut self, offset: usize, v: f32) {
            self.put(offset, &v.to_le_bytes());
        }
    }

    /// Single-file `n+1` image: 348-byte header, 4 zero extension bytes, data
    /// at offset 352. No spatial transform codes are set.
    pub fn encode(img: &Image, big_endian: bool) -> Vec<u8> {
        let mut b = Buf {
            bytes: vec![0u8; 352],
            big_endian,
        };
        b.i32(0, 348);
        b.i16(40, 3);
        for (a, &d) in img.dims.iter().enumerate() {
            b.i16(42 + 2 * a, d);
        }
        for a in 3..7 {
            b.i16(42 + 2 * a, 1);
        }
        b.i16(70, img.payload.code());
        b.i16(72, img.payload.bitpix());
        b.f32(76, 1.0);
        for (a, &s) in img.spacing.iter().enumerate() {
            b.f32(80 + 4 * a, s);
        }
        b.f32(108, 352.0);
        b.f32(112, img.slope);
        b.f32(116, img.intercept);
        b.bytes[344..348].copy_from_slice(b"n+1\0");
        let mut out = b.bytes;
        out.extend(img.payload.bytes(big_endian));
        out
    }

    pub fn gzip(bytes: &[u8]) -> Vec<u8> {
        let mut enc = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(bytes).unwrap();
        enc.finish().unwrap()
    }
}

pub mod oracle {
    use nalgebra::{Matrix3, Matrix4, SymmetricEigen, UnitQuaternion, Vector3};
    use volbench::geometry::{subsample, Frame, PointCloud};

    pub type P = [f64; 3];

    pub fn d2(a: &P, b: &P) -> f64 {
        let dx = a[0] - b[0];
        let dy = a[1] - b[1];
        let dz = a[2] - b[2];
        dx * dx + dy * dy + dz * dz
    }

    /// Brute-force nearest neighbor: (index, squared distance), lowest index on ties.
    pub fn nearest(p: &P, set: &[P]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, q) in set.iter().enumerate() {
            let d = d2(p, q);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    /// Boundary voxels by explicit neighbor checks, in (i, j, k) order.
    pub fn surface(dims: [usize; 3], spacing: [f64; 3], bits: &[bool]) -> Vec<P> {
        let at = |i: i64, j: i64, k: i64| -> bool {
            if i < 0 || j < 0 || k < 0 || i >= dims[0] as i64 || j >= dims[1] as i64 || k >= dims[2] as i64 {
                return false;
            }
            bits[i as usize + dims[0] * (j as usize + dims[1] * k as usize)]
        };
        let mut out = Vec::new();
        for i in 0..dims[0] as i64 {
            for j in 0..dims[1] as i64 {
                for k in 0..dims[2] as i64 {
                    if !at(i, j, k) {
                        continue;
                    }
                    let interior = at(i - 1, j, k)
                        && at(i + 1, j, k)
                        && at(i, j - 1, k)
                        && at(i, j + 1, k)
                        && at(i, j, k - 1)
                        && at(i, j, k + 1);
                    if !interior {
                        out.push([i as f64 * spacing[0], j as f64 * spacing[1], k as f64 * spacing[2]]);
                    }
                }
            }
        }
        out
    }

    pub fn normalize(points: &[P]) -> Vec<P> {
        let n = points.len() as f64;
        let mut c = [0.0; 3];
        for p in points {
            for a in 0..3 {
                c[a] += p[a];
            }
        }
        for v in &mut c {
            *v /= n;
        }
        let mut s: f64 = 0.0;
        for p in points {
            for a in 0..3 {
                s = s.max((p[a] - c[a]).abs());
            }
        }
        if s < 1e-12 {
            return vec![[0.0; 3]; points.len()];
        }
        points
            .iter()
            .map(|p| [(p[0] - c[0]) / s, (p[1] - c[1]) / s, (p[2] - c[2]) / s])
            .collect()
    }

    #[derive(Clone, Copy, Debug)]
    pub struct Rigid {
        pub r: Matrix3<f64>,
        pub t: Vector3<f64>,
    }

    impl Rigid {
        pub fn identity() -> Self {
            Self {
                r: Matrix3::identity(),
                t: Vector3::zeros(),
            }
        }
        pub fn apply(&self, p: &P) -> P {
            let v = self.r * Vector3::new(p[0], p[1], p[2]) + self.t;
            [v.x, v.y, v.z]
        }
    }

    /// Horn's closed-form absolute orientation via the 4×4 quaternion matrix.
    pub fn horn(src: &[P], dst: &[P]) -> Rigid {
        let n = src.len() as f64;
        let mean = |s: &[P]| {
            let mut m = Vector3::zeros();
            for p in s {
                m += Vector3::new(p[0], p[1], p[2]);
            }
            m / n
        };
        let (cs, cd) = (mean(src), mean(dst));
        let mut m = Matrix3::<f64>::zeros();
        for (a, b) in src.iter().zip(dst) {
            let a = Vector3::new(a[0], a[1], a[2]) - cs;
            let b = Vector3::new(b[0], b[1], b[2]) - cd;
            m += a * b.transpose();
        }
        let (sxx, sxy, sxz) = (m[(0, 0)], m[(0, 1)], m[(0, 2)]);
        let (syx, syy, syz) = (m[(1, 0)], m[(1, 1)], m[(1, 2)]);
        let (szx, szy, szz) = (m[(2, 0)], m[(2, 1)], m[(2, 2)]);
        #[rustfmt::skip]
        let nm = Matrix4::new(
            sxx + syy + szz, syz - szy,        szx - sxz,        sxy - syx,
            syz - szy,       sxx - syy - szz,  sxy + syx,        szx + sxz,
            szx - sxz,       sxy + syx,        -sxx + syy - szz, syz + szy,
            sxy - syx,       szx + sxz,        syz + szy,        -sxx - syy + szz,
        );
        let eig = SymmetricEigen::new(nm);
        let best = eig.eigenvalues.imax();
        let q = eig.eigenvectors.column(best);
        let quat = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]));
        let r = *quat.to_rotation_matrix().matrix();
        Rigid { r, t: cd - r * cs }
    }

    /// (pairs of moved source point and target point, inlier RMSE)
    fn correspond(src: &[P], tf: &Rigid, tgt: &[P], threshold: f64) -> (Vec<(P, P)>, f64) {
        let mut pairs = Vec::new();
        let mut sum = 0.0;
        for p in src {
            let q = tf.apply(p);
            let (i, d) = nearest(&q, tgt);
            if d <= threshold * threshold {
                pairs.push((q, tgt[i]));
                sum += d;
            }
        }
        let rmse = if pairs.is_empty() {
            0.0
        } else {
            (sum / pairs.len() as f64).sqrt()
        };
        (pairs, rmse)
    }

    pub fn inlier_rmse(src: &[P], tgt: &[P], threshold: f64) -> f64 {
        correspond(src, &Rigid::identity(), tgt, threshold).1
    }

    pub fn icp(src: &[P], tgt: &[P], threshold: f64, max_iter: usize, tol: f64) -> Rigid {
        let id_rmse = inlier_rmse(src, tgt, threshold);
        let mut cur = Rigid::identity();
        let mut prev: Option<f64> = None;
        let mut moved = false;
        for _ in 0..max_iter {
            let (pairs, rmse) = correspond(src, &cur, tgt, threshold);
            if pairs.len() < 3 {
                break;
            }
            if let Some(p) = prev {
                if (p - rmse).abs() < tol {
                    break;
                }
            }
            prev = Some(rmse);
            let (a, b): (Vec<P>, Vec<P>) = pairs.into_iter().unzip();
            let step = horn(&a, &b);
            cur = Rigid {
                r: step.r * cur.r,
                t: step.r * cur.t + step.t,
            };
            moved = true;
        }
        if !moved {
            return Rigid::identity();
        }
        let final_rmse = correspond(src, &cur, tgt, threshold).1;
        if final_rmse > id_rmse {
            Rigid::identity()
        } else {
            cur
        }
    }

    pub fn directed_distances(from: &[P], to: &[P]) -> Vec<f64> {
        from.iter().map(|p| nearest(p, to).1.sqrt()).collect()
    }

    pub fn chamfer(a: &[P], b: &[P]) -> f64 {
        let m = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
        m(directed_distances(a, b)) + m(directed_distances(b, a))
    }

    pub fn voxels(points: &[P], g: usize) -> std::collections::HashSet<[i64; 3]> {
        let v = 2.0 / g as f64;
        points
            .iter()
            .map(|p| {
                let mut idx = [0i64; 3];
                for a in 0..3 {
                    let raw = ((p[a] + 1.0) / v).floor() as i64;
                    idx[a] = raw.max(0).min(g as i64 - 1);
                }
                idx
            })
            .collect()
    }

    /// Min-cost perfect matching on a square matrix by successive shortest
    /// augmenting paths (dense Dijkstra with node potentials) on the
    /// residual graph source → rows → cols → sink.
    #[allow(clippy::needless_range_loop)]
    pub fn min_cost_matching(cost: &[Vec<f64>]) -> f64 {
        let n = cost.len();
        let (s, t) = (0, 2 * n + 1);
        let nodes = 2 * n + 2;
        let row = |i: usize| 1 + i;
        let col = |j: usize| 1 + n + j;
        let mut match_row: Vec<Option<usize>> = vec![None; n];
        let mut match_col: Vec<Option<usize>> = vec![None; n];
        let mut pot = vec![0.0f64; nodes];

        for _ in 0..n {
            let mut dist = vec![f64::INFINITY; nodes];
            let mut prev = vec![usize::MAX; nodes];
            let mut done = vec![false; nodes];
            dist[s] = 0.0;
            loop {
                let mut u = usize::MAX;
                for v in 0..nodes {
                    if !done[v] && dist[v].is_finite() && (u == usize::MAX || dist[v] < dist[u]) {
                        u = v;
                    }
                }
                if u == usize::MAX {
                    break;
                }
                done[u] = true;
                let relax = |v: usize, c: f64, dist: &mut Vec<f64>, prev: &mut Vec<usize>| {
                    let nd = dist[u] + c + pot[u] - pot[v];
                    if nd < dist[v] {
                        dist[v] = nd;
                        prev[v] = u;
                    }
                };
                if u == s {
                    for i in 0..n {
                        if match_row[i].is_none() {
                            relax(row(i), 0.0, &mut dist, &mut prev);
                        }
                    }
                } else if u <= n {
                    let i = u - 1;
                    for j in 0..n {
                        if match_row[i] != Some(j) {
                            relax(col(j), cost[i][j], &mut dist, &mut prev);
                        }
                    }
                } else if u < t {
                    let j = u - 1 - n;
                    match match_col[j] {
                        Some(i) => relax(row(i), -cost[i][j], &mut dist, &mut prev),
                        None => relax(t, 0.0, &mut dist, &mut prev),
                    }
                }
            }
            let mut v = t;
            while v != s {
                let u = prev[v];
                if u >= 1 && u <= n && v > n && v < t {
                    let (i, j) = (u - 1, v - 1 - n);
                    match_row[i] = Some(j);
                    match_col[j] = Some(i);
                }
                v = u;
            }
            for v in 0..nodes {
                if dist[v].is_finite() {
                    pot[v] += dist[v];
                }
            }
        }
        (0..n).map(|i| cost[i][match_row[i].unwrap()]).sum()
    }

    /// Exhaustive minimum over all bijections (small n only).
    pub fn brute_matching(cost: &[Vec<f64>]) -> f64 {
        use itertools::Itertools;
        let n = cost.len();
        (0..n)
            .permutations(n)
            .map(|perm| perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn cost_matrix(a: &[P], b: &[P]) -> Vec<Vec<f64>> {
        a.iter().map(|p| b.iter().map(|q| d2(p, q).sqrt()).collect()).collect()
    }

    fn to_cloud(points: &[P]) -> PointCloud {
        PointCloud::from_xyz(points, Frame::Normalized).unwrap()
    }

    fn from_cloud(c: &PointCloud) -> Vec<P> {
        c.points().iter().map(|p| [p.x, p.y, p.z]).collect()
    }

    /// EMD with the crate's subsampling convention (both clouds, seed ^ 1).
    pub fn emd(a: &[P], b: &[P], cap: usize, seed: u64) -> f64 {
        let n = a.len().min(b.len()).min(cap);
        let sa = from_cloud(&subsample(&to_cloud(a), n, seed ^ 1));
        let sb = from_cloud(&subsample(&to_cloud(b), n, seed ^ 1));
        min_cost_matching(&cost_matrix(&sa, &sb)) / n as f64
    }

    #[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
    pub struct OracleScores {
        pub f1: f64,
        pub precision: f64,
        pub recall: f64,
        pub voxel_iou: f64,
        pub voxel_dice: f64,
        pub chamfer: f64,
        pub emd: f64,
    }

    pub struct Protocol {
        pub tau: f64,
        pub grid: usize,
        pub cap: usize,
        pub seed: u64,
        pub icp_threshold: f64,
        pub icp_iters: usize,
        pub icp_tol: f64,
    }

    impl Protocol {
        pub fn defaults(seed: u64) -> Self {
            Self {
                tau: 0.01,
                grid: 64,
                cap: 2048,
                seed,
                icp_threshold: 0.02,
                icp_iters: 50,
                icp_tol: 1e-6,
            }
        }
    }

    pub fn evaluate(pred: &[P], gt: &[P], cfg: &Protocol) -> OracleScores {
        let pn = normalize(pred);
        let gn = normalize(gt);
        let tf = icp(&pn, &gn, cfg.icp_threshold, cfg.icp_iters, cfg.icp_tol);
        let pa: Vec<P> = pn.iter().map(|p| tf.apply(p)).collect();

        let fwd = directed_distances(&pa, &gn);
        let bwd = directed_distances(&gn, &pa);
        let precision = fwd.iter().filter(|&&d| d <= cfg.tau).count() as f64 / fwd.len() as f64;
        let recall = bwd.iter().filter(|&&d| d <= cfg.tau).count() as f64 / bwd.len() as f64;
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };

        let vp = voxels(&pa, cfg.grid);
        let vg = voxels(&gn, cfg.grid);
        let inter = vp.intersection(&vg).count() as f64;
        let union = vp.union(&vg).count() as f64;

        OracleScores {
            f1,
            precision,
            recall,
            voxel_iou: inter / union,
            voxel_dice: 2.0 * inter / (vp.len() + vg.len()) as f64,
            chamfer: fwd.iter().sum::<f64>() / fwd.len() as f64 + bwd.iter().sum::<f64>() / bwd.len() as f64,
            emd: emd(&pa, &gn, cfg.cap, cfg.seed),
        }
    }
}

pub mod rand_clouds {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use volbench::geometry::{Frame, PointCloud};

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn uniform(rng: &mut impl Rng, n: usize, half_width: f64) -> Vec<[f64; 3]> {
        (0..n)
            .map(|_| {
                [
                    rng.gen_range(-half_width..half_width),
                    rng.gen_range(-half_width..half_width),
                    rng.gen_range(-half_width..half_width),
                ]
            })
            .collect()
    }

    pub fn cloud(points: &[[f64; 3]]) -> PointCloud {
        PointCloud::from_xyz(points, Frame::PhysicalMm).unwrap()
    }

    pub fn coords(cloud: &PointCloud) -> Vec<[f64; 3]> {
        cloud.points().iter().map(|p| [p.x, p.y, p.z]).collect()
    }
}

pub mod golden {
    use std::collections::BTreeMap;
    use std::path::PathBuf;

    use serde::{Deserialize, Serialize};
    use volbench::geometry::PointCloud;
    use volbench::harness::seed::{mesh_sampling_seed, sample_seed};
    use volbench::harness::{load_manifest, MetricRecord, RunConfig};
    use volbench::mesh::{load_mesh, prediction_cloud};
    use volbench::nifti::{linear_index, parse_nifti};
    use volbench::volume::Plane;

    use super::oracle::{self, OracleScores, Protocol, P};

    pub const TOLERANCE: f64 = 1e-6;

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct GoldenRecord {
        pub sample_id: String,
        pub model: String,
        /// `None` when the sample is expected to be skipped.
        pub metrics: Option<OracleScores>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub reason: Option<String>,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct GoldenFile {
        pub global_seed: u64,
        pub records: Vec<GoldenRecord>,
    }

    pub fn manifest_path() -> PathBuf {
        super::phantom_dir().join("manifest.json")
    }

    pub fn golden_path() -> PathBuf {
        super::phantom_dir().join("golden.json")
    }

    pub fn load() -> GoldenFile {
        let text = std::fs::read_to_string(golden_path()).expect("golden.json missing; run with VOLBENCH_BLESS=1");
        serde_json::from_str(&text).unwrap()
    }

    fn coords(c: &PointCloud) -> Vec<P> {
        c.points().iter().map(|p| [p.x, p.y, p.z]).collect()
    }

    fn protocol(cfg: &RunConfig, seed: u64) -> Protocol {
        Protocol {
            tau: cfg.tau,
            grid: cfg.grid_size,
            cap: cfg.emd_cap,
            seed,
            icp_threshold: cfg.icp.max_correspondence_distance,
            icp_iters: cfg.icp.max_iterations,
            icp_tol: cfg.icp.rmse_convergence_tol,
        }
    }

    /// Scores the phantom manifest with the oracle. The manifest's scans are
    /// RAS, so coronal slices index axis 1 and axial slices axis 2.
    pub fn oracle_records(global_seed: u64) -> Vec<GoldenRecord> {
        let manifest = load_manifest(manifest_path()).unwrap();
        let cfg = manifest.config;
        let mut jobs = Vec::new();
        for entry in &manifest.samples {
            let mask = parse_nifti(&entry.mask_path).unwrap();
            let dims = mask.dims();
            let bits: Vec<bool> = mask.data().iter().map(|&v| v > cfg.mask_threshold).collect();
            let axis = match entry.plane {
                Plane::Coronal => 1,
                Plane::Axial => 2,
            };
            let mid = dims[axis] / 2;
            let mut present = false;
            for k in 0..dims[2] {
                for j in 0..dims[1] {
                    for i in 0..dims[0] {
                        if [i, j, k][axis] == mid && bits[linear_index(dims, i, j, k)] {
                            present = true;
                        }
                    }
                }
            }
            let gt = oracle::surface(dims, mask.spacing(), &bits);
            for (model, path) in &entry.predictions {
                jobs.push((entry.id.clone(), model.clone(), path.clone(), present, gt.clone()));
            }
        }
        use rayon::prelude::*;
        jobs.into_par_iter()
            .map(|(id, model, path, present, gt)| {
                if !present {
                    return GoldenRecord {
                        sample_id: id,
                        model,
                        metrics: None,
                        reason: Some("structure-absent-at-midpoint".into()),
                    };
                }
                let seed = sample_seed(global_seed, &id, &model);
                let geometry = load_mesh(&path).unwrap();
                let pred = prediction_cloud(
                    &geometry,
                    cfg.prediction_mode,
                    cfg.sample_points,
                    mesh_sampling_seed(seed),
                )
                .unwrap();
                let scores = oracle::evaluate(&coords(&pred), &gt, &protocol(&cfg, seed));
                GoldenRecord {
                    sample_id: id,
                    model,
                    metrics: Some(scores),
                    reason: None,
                }
            })
            .collect()
    }

    fn as_array(s: &OracleScores) -> [(&'static str, f64); 7] {
        [
            ("f1", s.f1),
            ("precision", s.precision),
            ("recall", s.recall),
            ("voxel_iou", s.voxel_iou),
            ("voxel_dice", s.voxel_dice),
            ("chamfer", s.chamfer),
            ("emd", s.emd),
        ]
    }

    pub fn to_oracle(m: &volbench::metrics::Scores) -> OracleScores {
        OracleScores {
            f1: m.f1,
            precision: m.precision,
            recall: m.recall,
            voxel_iou: m.voxel_iou,
            voxel_dice: m.voxel_dice,
            chamfer: m.chamfer,
            emd: m.emd,
        }
    }

    /// Every mismatch between pipeline records and the golden file.
    pub fn compare(records: &[MetricRecord], golden: &GoldenFile) -> Vec<String> {
        let mut problems = Vec::new();
        let by_key: BTreeMap<(&str, &str), &MetricRecord> = records
            .iter()
            .map(|r| ((r.sample_id.as_str(), r.model.as_str()), r))
            .collect();
        if records.len() != golden.records.len() {
            problems.push(format!(
                "{} records, golden has {}",
                records.len(),
                golden.records.len()
            ));
        }
        for g in &golden.records {
            let Some(r) = by_key.get(&(g.sample_id.as_str(), g.model.as_str())) else {
                problems.push(format!("{}/{}: missing", g.sample_id, g.model));
                continue;
            };
            match (&g.metrics, &r.metrics) {
                (None, None) => {
                    let reason = r.reason.map(|x| x.as_str().to_string());
                    if reason != g.reason {
                        problems.push(format!(
                            "{}/{}: reason {:?} != {:?}",
                            g.sample_id, g.model, reason, g.reason
                        ));
                    }
                }
                (Some(want), Some(got)) => {
                    for ((name, w), (_, h)) in as_array(want).iter().zip(as_array(&to_oracle(got))) {
                        if (w - h).abs() > TOLERANCE {
                            problems.push(format!("{}/{} {name}: {h} vs golden {w}", g.sample_id, g.model));
                        }
                    }
                }
                _ => problems.push(format!("{}/{}: status differs from golden", g.sample_id, g.model)),
            }
        }
        problems
    }

    /// Samples where `planar` fails to score strictly worse than `exact`.
    pub fn planar_not_worse(records: &[MetricRecord]) -> Vec<String> {
        let mut problems = Vec::new();
        let find = |id: &str, model: &str| {
            records
                .iter()
                .find(|r| r.sample_id == id && r.model == model)
                .and_then(|r| r.metrics)
        };
        let ids: std::collections::BTreeSet<&str> = records.iter().map(|r| r.sample_id.as_str()).collect();
        let mut compared = 0;
        for id in ids {
            let (Some(e), Some(p)) = (find(id, "exact"), find(id, "planar")) else {
                continue;
            };
            compared += 1;
            let checks = [
                ("f1", p.f1 < e.f1),
                ("voxel_iou", p.voxel_iou < e.voxel_iou),
                ("voxel_dice", p.voxel_dice < e.voxel_dice),
                ("chamfer", p.chamfer > e.chamfer),
                ("emd", p.emd > e.emd),
            ];
            for (name, worse) in checks {
                if !worse {
                    problems.push(format!("{id}: planar not worse on {name}"));
                }
            }
        }
        if compared == 0 {
            problems.push("no sample has both exact and planar scores".into());
        }
        problems
    }
}
