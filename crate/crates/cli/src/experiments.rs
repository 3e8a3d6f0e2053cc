//! The six experiments. Each validates its parameters before computing.

use serde_json::json;

use noiselab::pb::{
    loglog_slope, nu_c, pb4_quadrilateral, pb4_upper_estimate, ramp_family, spin_overlap, FourSets, QuadrilateralSpec,
};
use noiselab::phase_space::{
    build_band_cover, build_band_partition, build_greedy_cover, greedy_center_bound, merge_refinement,
    nerve_degree_bound, nerve_graph, power_graph_coloring, QuadratureGrid, ScalarField,
};
use noiselab::povm::{
    commutative_sharp_parent, inherent_noise_bracket_with, joint_marginals, joint_noise_lower_with,
    smearing_noise_sup_with, CubeSearch, SmearingCandidate,
};
use noiselab::quantization::{
    bt_axiom_report, error_bar_check, joint_toeplitz, line_povm, partition_kernel, registration_povm,
    spectral_line_povm, step_seven_witness, DiscretizedGm, ToeplitzScheme,
};

use crate::config::{
    parse_field, BtVerifyParams, CoverBuildParams, ErrorbarParams, NoiseLocalizationParams, Pb4QuadParams,
    SpinOverlapParams,
};
use crate::record::{num, Kind, ResultRecord, Table};
use crate::CliError;

/// Tolerance of the bracket ordering `lower ≤ upper`.
const BRACKET_TOL: f64 = 1e-9;

fn sorted_unique(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn max_min_ratio(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

fn search(seed: u64, gradient_starts: usize) -> CubeSearch {
    CubeSearch { gradient_starts, ..CubeSearch::with_seed(seed) }
}

pub fn cmd_bt_verify(p: &BtVerifyParams, seed: u64) -> Result<ResultRecord, CliError> {
    p.validate()?;
    let ms = sorted_unique(&p.m);
    let mut rec = ResultRecord::new("bt-verify", json!({ "seed": seed, "params": p }));
    let mut rows = Vec::new();
    let mut worst_defect1: f64 = 0.0;
    for [fname, gname] in &p.pairs {
        let (f, g) = (parse_field(fname)?, parse_field(gname)?);
        let report = bt_axiom_report(&f, &g, &ms)?;
        for r in &report {
            if !r.resolved {
                rec.warnings.push(format!("m = {}: grid under-resolves {fname}, {gname}", r.m));
            }
            worst_defect1 = worst_defect1.max(r.defect1);
            rows.push(vec![
                fname.clone(),
                gname.clone(),
                r.m.to_string(),
                num(r.defect1),
                num(r.defect3),
                num(r.defect4),
                num(r.defect5),
                r.resolved.to_string(),
            ]);
        }
        let d4: Vec<f64> = report.iter().map(|r| r.defect4).collect();
        let id = format!("correspondence[{fname},{gname}]");
        rec.scalar(format!("defect4[{fname},{gname}] at m={}", ms[ms.len() - 1]), d4[d4.len() - 1], Kind::Exact);
        if d4.iter().all(|d| *d <= 1e-9) {
            rec.check(&id, true, "defect4 ≈ 0 at every m");
            continue;
        }
        let monotone = d4.windows(2).all(|w| w[1] <= w[0]);
        let mut bad = Vec::new();
        for (i, a) in report.iter().enumerate() {
            if let Some(b) = report[i + 1..].iter().find(|b| b.m == 2 * a.m) {
                let ratio = b.defect4 / a.defect4;
                if ratio > p.contraction {
                    bad.push(format!("defect4({})/defect4({}) = {ratio:.4}", b.m, a.m));
                }
            }
        }
        let detail = if bad.is_empty() {
            {
                let col: Vec<String> = d4.iter().map(|d| format!("{d:.3e}")).collect();
                format!("defect4 column [{}] monotone: {monotone}, doubling ratios ≤ {}", col.join(", "), p.contraction)
            }
        } else {
            bad.join("; ")
        };
        rec.check(&id, monotone && bad.is_empty(), detail);
    }
    rec.scalar("max defect1", worst_defect1, Kind::Exact);
    rec.check("normalization", worst_defect1 <= 1e-8, format!("max ‖T(1) − I‖ = {worst_defect1:.3e} ≤ 1e-8"));
    let mut worst_min_eig = f64::INFINITY;
    for &m in &ms {
        let s = ToeplitzScheme::new(m)?;
        let t = s.toeplitz(&ScalarField::coordinate(3).affine(1.0, 1.0));
        worst_min_eig = worst_min_eig.min(t.min_eigenvalue());
    }
    rec.scalar("min eigenvalue of T(1+q3)", worst_min_eig, Kind::Exact);
    rec.check("positivity", worst_min_eig >= -1e-9, format!("min eigenvalue {worst_min_eig:.3e} ≥ −1e−9"));
    rec.tables.push(Table::new(
        "defects",
        &["f", "g", "m", "defect1", "defect3", "defect4", "defect5", "resolved"],
        rows,
    ));
    Ok(rec)
}

/// Per-`m` bracket of the inherent noise of the registration POVM.
#[derive(Clone, Debug, serde::Serialize)]
pub struct NoiseIndicatorEstimate {
    pub m: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub m_lower: Vec<f64>,
    pub m_upper: Vec<f64>,
    /// `ν_c/2` of the partition.
    pub classical_reference: f64,
}

pub fn noise_indicator_estimate(
    p: &NoiseLocalizationParams,
    seed: u64,
) -> Result<(NoiseIndicatorEstimate, Vec<String>), CliError> {
    p.validate()?;
    let cover = build_band_cover(p.axis, p.n, p.c1)?;
    let delta = cover.band.as_ref().expect("band cover").delta;
    let part = build_band_partition(&cover, Some(p.width_fraction * 2.0 * delta))?;
    let nuc = nu_c(&part, &QuadratureGrid::new(p.nu_c_grid, 2 * p.nu_c_grid)?);
    let search = search(seed, p.gradient_starts);
    let ms = sorted_unique(&p.m);
    let mut est = NoiseIndicatorEstimate {
        m: ms.clone(),
        lower: Vec::new(),
        upper: Vec::new(),
        m_lower: Vec::new(),
        m_upper: Vec::new(),
        classical_reference: nuc.value / 2.0,
    };
    let mut witnesses = Vec::new();
    for &m in &ms {
        let scheme = ToeplitzScheme::new(m)?;
        let a = registration_povm(&scheme, &part)?;
        let gm = DiscretizedGm::new(&scheme)?;
        let kernel = partition_kernel(&scheme, &part)?;
        let sharp = commutative_sharp_parent(&a);
        let mut candidates = vec![SmearingCandidate { name: "G_m".into(), parent: &gm, kernel: &kernel }];
        if let Some((parent, k)) = &sharp {
            candidates.push(SmearingCandidate { name: "commuting sharp parent".into(), parent, kernel: k });
        }
        let b = inherent_noise_bracket_with(&a, &candidates, &search);
        let mf = m as f64;
        est.lower.push(b.lower);
        est.upper.push(b.upper);
        est.m_lower.push(mf * b.lower);
        est.m_upper.push(mf * b.upper);
        witnesses.push(b.witness);
    }
    Ok((est, witnesses))
}

pub fn cmd_noise_localization(p: &NoiseLocalizationParams, seed: u64) -> Result<ResultRecord, CliError> {
    let (est, witnesses) = noise_indicator_estimate(p, seed)?;
    let mut rec = ResultRecord::new("noise-localization", json!({ "seed": seed, "params": p }));
    rec.scalar("classical reference nu_c/2", est.classical_reference, Kind::Heuristic);
    let mut rows = Vec::new();
    for (i, &m) in est.m.iter().enumerate() {
        rec.bracketed(format!("N_in lower m={m}"), est.lower[i], Kind::Lower);
        rec.bracketed(format!("N_in upper m={m}"), est.upper[i], Kind::Upper);
        rows.push(vec![
            m.to_string(),
            num(est.lower[i]),
            num(est.upper[i]),
            num(est.m_lower[i]),
            num(est.m_upper[i]),
            witnesses[i].clone(),
        ]);
        rec.check(
            &format!("bracket-order m={m}"),
            est.lower[i] <= est.upper[i] + BRACKET_TOL,
            format!("lower {:.4e} ≤ upper {:.4e}", est.lower[i], est.upper[i]),
        );
    }
    let bounded = if est.m_upper.iter().all(|u| *u <= BRACKET_TOL) {
        (true, "m·upper ≈ 0 at every m".to_string())
    } else {
        let r = max_min_ratio(&est.m_upper);
        (r <= p.bounded_ratio, format!("m·upper {:.4?}, max/min {r:.3} ≤ {}", est.m_upper, p.bounded_ratio))
    };
    rec.check("m-upper-bounded", bounded.0, bounded.1);
    let last = est.m_lower[est.m_lower.len() - 1];
    let tol = p.lower_rel_tolerance * est.classical_reference + p.lower_abs_tolerance;
    rec.check(
        "m-lower-classical",
        (last - est.classical_reference).abs() <= tol,
        format!("|m·lower − ν_c/2| = |{last:.4e} − {:.4e}| ≤ {tol:.3e}", est.classical_reference),
    );
    rec.tables.push(Table::new(
        "noise",
        &["m", "lower (bracketed estimate)", "upper (bracketed estimate)", "m_lower", "m_upper", "upper_witness"],
        rows,
    ));
    Ok(rec)
}

pub fn cmd_spin_overlap(p: &SpinOverlapParams, seed: u64) -> Result<ResultRecord, CliError> {
    p.validate()?;
    let ns = sorted_unique(&p.n);
    let mut rec = ResultRecord::new("spin-overlap", json!({ "seed": seed, "params": p }));
    let sweep = ns.iter().map(|&n| spin_overlap(n, p.c1)).collect::<Result<Vec<_>, _>>()?;
    let hbar = 1.0 / p.joint_m as f64;
    let rows = sweep
        .iter()
        .map(|s| {
            vec![
                s.n.to_string(),
                s.k.to_string(),
                num(s.area),
                num(s.area_times_n2),
                num(s.pb4),
                num(s.pb_lower),
                num(s.mu_lower),
                num(s.mu_lower * hbar),
            ]
        })
        .collect();
    rec.tables.push(Table::new(
        "overlap",
        &["N", "k", "area", "area_N2", "pb4", "pb_lower", "mu_lower (bracketed estimate)", "noise_lower_at_joint_m"],
        rows,
    ));
    let c2 = sweep.iter().map(|s| s.mu_lower / (s.n * s.n) as f64).fold(f64::INFINITY, f64::min);
    rec.bracketed("mu lower / N^2 (min over sweep)", c2, Kind::Lower);
    if sweep.len() >= 2 {
        let xs: Vec<f64> = sweep.iter().map(|s| s.n as f64).collect();
        let ys: Vec<f64> = sweep.iter().map(|s| s.mu_lower).collect();
        let slope = loglog_slope(&xs, &ys)?;
        rec.scalar("log-log slope of mu lower vs N", slope, Kind::Exact);
        rec.check(
            "overlap-slope",
            (slope - p.slope).abs() <= p.slope_tolerance,
            format!("slope {slope:.4} within {} of {}", p.slope_tolerance, p.slope),
        );
        let areas: Vec<f64> = sweep.iter().map(|s| s.area_times_n2).collect();
        let r = max_min_ratio(&areas);
        rec.check("area-scaling", r <= p.area_ratio, format!("Area·N² max/min {r:.4} ≤ {}", p.area_ratio));
    }

    let jn = p.joint_n.unwrap_or(ns[0]);
    let fu = build_band_partition(&build_band_cover(1, jn, p.c1)?, None)?;
    let fv = build_band_partition(&build_band_cover(2, jn, p.c1)?, None)?;
    let scheme = ToeplitzScheme::new(p.joint_m)?;
    let joint = joint_toeplitz(&scheme, &fu, &fv)?;
    let (ma, mb) = joint_marginals(&joint)?;
    let (ra, rb) = (registration_povm(&scheme, &fu)?, registration_povm(&scheme, &fv)?);
    let gap = ma.distance(&ra)?.max(mb.distance(&rb)?);
    rec.scalar("joint marginal defect", gap, Kind::Exact);
    rec.check("joint-marginals", gap <= 1e-8, format!("N = {jn}, m = {}: max op-norm gap {gap:.3e} ≤ 1e−8", p.joint_m));
    let lower = joint_noise_lower_with(&ra, &rb, &CubeSearch::with_seed(seed))?;
    let overlap = spin_overlap(jn, p.c1)?.mu_lower * hbar;
    rec.bracketed(format!("N_in(joint) lower N={jn} m={}", p.joint_m), lower, Kind::Lower);
    rec.bracketed(format!("asymptotic overlap bound 2·pb4·ħ N={jn}"), overlap, Kind::Lower);
    if lower < overlap {
        rec.warnings.push(format!(
            "at m = {} the joint lower bound {lower:.3e} is below 2·pb4·ħ = {overlap:.3e}; the overlap bound holds for large m",
            p.joint_m
        ));
    }
    Ok(rec)
}

pub fn cmd_errorbar(p: &ErrorbarParams, seed: u64) -> Result<ResultRecord, CliError> {
    p.validate()?;
    let axis = p.axis()?;
    let nf = p.n as f64;
    // Overlap half-width leaving every interval strictly shorter than c.
    let delta = 0.9 * (p.c - 2.0 / nf) / 2.0;
    let cover = build_band_cover(axis, p.n, 2.0 + 2.0 * nf * delta)?;
    let part = build_band_partition(&cover, None)?;
    let points = p.points.clone().unwrap_or_else(|| (0..p.n).map(|i| -1.0 + (2 * i + 1) as f64 / nf).collect());
    let tau = 2.0;
    let (lo, hi) = (tau / (8.0 * nf), 2.0 * p.c);
    let search = search(seed, p.gradient_starts);
    let mut rec = ResultRecord::new("errorbar", json!({ "seed": seed, "params": p }));
    let mut rows = Vec::new();
    let mut thetas = Vec::new();
    let ms = sorted_unique(&p.m);
    for &m in &ms {
        let scheme = ToeplitzScheme::new(m)?;
        let a = line_povm(&registration_povm(&scheme, &part)?, &points)?;
        let e = spectral_line_povm(&scheme.toeplitz(&ScalarField::coordinate(axis)));
        rec.warnings.extend(a.warnings.iter().cloned());
        if m == ms[0] {
            let self_theta = error_bar_check(&e, &e, p.epsilon)?.theta;
            rec.check("self-test", self_theta == 0.0, format!("θ(Ê, Ê) = {self_theta}"));
        }
        let report = error_bar_check(&a, &e, p.epsilon)?;
        let theta = report.theta;
        thetas.push(theta);
        let witness = step_seven_witness(&a, &e, (-1.0, 1.0));
        let gm = DiscretizedGm::new(&scheme)?;
        let sns = smearing_noise_sup_with(&gm, &partition_kernel(&scheme, &part)?, &search)?.value;
        let product = sns * theta * theta;
        rec.scalar(format!("theta m={m}"), theta, Kind::Exact);
        rec.bracketed(format!("N_in upper m={m}"), sns, Kind::Upper);
        rec.check(&format!("theta-lower m={m}"), theta >= lo, format!("θ = {theta:.4} ≥ τ/8N = {lo:.4}"));
        rec.check(&format!("theta-upper m={m}"), theta <= hi, format!("θ = {theta:.4} ≤ 2c = {hi:.4}"));
        let (wx, wp, wok) = match &witness {
            Some(w) => (w.x, w.probability, w.probability == 0.0 && theta >= w.lower_bound),
            None => (f64::NAN, f64::NAN, false),
        };
        rec.check(
            &format!("step-7-witness m={m}"),
            wok,
            match &witness {
                Some(w) => format!(
                    "eigenvalue {:.4} with ρ(J_(x,w/2)) = {} and w/2 = {:.4}",
                    w.x, w.probability, w.lower_bound
                ),
                None => "no point-free interval with a nearby eigenvalue".into(),
            },
        );
        rows.push(vec![
            m.to_string(),
            num(theta),
            num(report.worst),
            num(lo),
            num(hi),
            num(wx),
            num(wp),
            num(sns),
            num(product),
            num(product * m as f64),
        ]);
    }
    if thetas.len() >= 2 {
        rec.scalar("theta max/min over m", max_min_ratio(&thetas), Kind::Exact);
    }
    rec.tables.push(Table::new(
        "errorbar",
        &[
            "m",
            "theta",
            "worst_point",
            "theta_lower_bound",
            "theta_upper_bound",
            "witness_eigenvalue",
            "witness_probability",
            "noise_upper (bracketed estimate)",
            "noise_upper_theta2",
            "noise_upper_theta2_over_hbar",
        ],
        rows,
    ));
    Ok(rec)
}

pub fn cmd_cover_build(p: &CoverBuildParams, seed: u64) -> Result<ResultRecord, CliError> {
    p.validate()?;
    let mut rec = ResultRecord::new("cover-build", json!({ "seed": seed, "params": p }));
    let gc = build_greedy_cover(p.r, seed)?;
    let nerve = nerve_graph(&gc.cover)?;
    let d = nerve.max_degree();
    let (center_bound, degree_bound) = (greedy_center_bound(p.r), nerve_degree_bound(p.r));
    rec.scalar("centers", gc.centers.len() as f64, Kind::Exact);
    rec.scalar("max nerve degree", d as f64, Kind::Exact);
    rec.check(
        "center-count",
        gc.centers.len() <= center_bound,
        format!("{} centers ≤ packing bound {center_bound}", gc.centers.len()),
    );
    rec.check("degree", d <= degree_bound, format!("max degree {d} ≤ packing bound {degree_bound}"));
    let ks = sorted_unique(&p.k);
    let colorings: Vec<_> = ks.iter().map(|&k| power_graph_coloring(&nerve, k)).collect();
    let mut rows = Vec::new();
    for (&k, col) in ks.iter().zip(&colorings) {
        let bound = d.checked_pow(k as u32).map_or(usize::MAX, |v| v.saturating_add(1));
        let dist = col.min_same_color_distance(&nerve, k + 1);
        let merged = merge_refinement(&gc.cover, col)?;
        rec.check(&format!("colors k={k}"), col.count <= bound, format!("{} colors ≤ d^k + 1 = {bound}", col.count));
        rec.check(
            &format!("distance k={k}"),
            col.is_distance_coloring(&nerve, k),
            format!("same-color distance ≥ {} (nearest repeat within {}: {dist:?})", k + 1, k + 1),
        );
        rows.push(vec![
            k.to_string(),
            col.count.to_string(),
            bound.to_string(),
            dist.map_or("none".into(), |v| v.to_string()),
            merged.cover.len().to_string(),
        ]);
    }
    rec.tables.push(Table::new(
        "colorings",
        &["k", "colors", "bound", "min_same_color_distance", "merged_regions"],
        rows,
    ));
    let mut header = vec!["region".to_string(), "x".into(), "y".into(), "z".into(), "degree".into()];
    header.extend(ks.iter().map(|k| format!("color_k{k}")));
    let rows = gc
        .centers
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let v = c.vector();
            let mut row = vec![i.to_string(), num(v.x), num(v.y), num(v.z), nerve.degree(i).to_string()];
            row.extend(colorings.iter().map(|col| col.colors[i].to_string()));
            row
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    rec.tables.push(Table::new("regions", &header, rows));
    Ok(rec)
}

pub fn cmd_pb4_quad(p: &Pb4QuadParams, _seed: u64) -> Result<ResultRecord, CliError> {
    p.validate()?;
    let mut rec = ResultRecord::new("pb4-quad", json!({ "params": p }));
    let rows =
        p.areas.iter().map(|&a| Ok(vec![num(a), num(pb4_quadrilateral(a)?)])).collect::<Result<Vec<_>, CliError>>()?;
    if !rows.is_empty() {
        rec.tables.push(Table::new("formula", &["area", "pb4"], rows));
    }
    let (u, v) = ((p.u[0], p.u[1]), (p.v[0], p.v[1]));
    let quad = match QuadrilateralSpec::new(p.axis_u, u, p.axis_v, v) {
        Ok(q) => q,
        Err(e) => {
            rec.warnings.push(format!("no quadrilateral: {e}"));
            rec.scalar("pb4", 0.0, Kind::Exact);
            return Ok(rec);
        }
    };
    let exact = quad.pb4();
    rec.scalar("area", quad.area, Kind::Exact);
    rec.scalar("pb4 formula", exact, Kind::Exact);
    let grid = QuadratureGrid::new(p.grid, 2 * p.grid)?;
    let est = pb4_upper_estimate(&quad.boundary_sets(), &ramp_family(p.axis_u, u, p.axis_v, v), &grid)?;
    rec.scalar("pb4 ramp estimate", est.value, Kind::Upper);
    let ratio = est.value / exact;
    rec.check(
        "ramp-ratio",
        (1.0..=2.0).contains(&ratio),
        format!("estimate/formula = {ratio:.4} ∈ [1, 2] ({})", est.witness),
    );

    // Shrinking Π enlarges the four sets, so pb₄ can only grow.
    let shrink = |(a, b): (f64, f64)| {
        let (c, h) = ((a + b) / 2.0, (b - a) / 2.0 * p.shrink);
        (c - h, c + h)
    };
    let (su, sv) = (shrink(u), shrink(v));
    let small = QuadrilateralSpec::new(p.axis_u, su, p.axis_v, sv)?;
    let mut family = ramp_family(p.axis_u, u, p.axis_v, v);
    family.extend(ramp_family(p.axis_u, su, p.axis_v, sv));
    let big_sets = FourSets::coordinate_halfspaces(p.axis_u, u, p.axis_v, v);
    let small_sets = FourSets::coordinate_halfspaces(p.axis_u, su, p.axis_v, sv);
    let e_given = pb4_upper_estimate(&big_sets, &family, &grid)?.value;
    let e_shrunk = pb4_upper_estimate(&small_sets, &family, &grid)?.value;
    rec.check(
        "monotone",
        small.pb4() >= exact && e_shrunk >= e_given,
        format!(
            "shrunk by {}: formula {:.4} ≥ {exact:.4}, estimate {e_shrunk:.4} ≥ {e_given:.4}",
            p.shrink,
            small.pb4()
        ),
    );
    rec.tables.push(Table::new(
        "quadrilateral",
        &["case", "u_lo", "u_hi", "v_lo", "v_hi", "area", "pb4_formula", "pb4_estimate"],
        vec![
            vec!["given".into(), num(u.0), num(u.1), num(v.0), num(v.1), num(quad.area), num(exact), num(e_given)],
            vec![
                "shrunk".into(),
                num(su.0),
                num(su.1),
                num(sv.0),
                num(sv.1),
                num(small.area),
                num(small.pb4()),
                num(e_shrunk),
            ],
        ],
    ));
    Ok(rec)
}
