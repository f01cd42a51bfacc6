//! End-to-end editing suite: align → drag → inverse-align → metrics.
//!
//! Cases run in parallel and independently; the report is assembled in case
//! id order, so a run is bit-for-bit reproducible. A failing case is recorded
//! and the rest of the suite carries on.

use rayon::prelude::*;
use serde::Serialize;

use panodrag_core::drag::{
    apply_field_delta, build_field, build_search_region, run_drag_traced, DragConfig, TraceRecord,
};
use panodrag_core::hash::Fingerprint;
use panodrag_core::metrics::{evaluate_fidelity, evaluate_metrics, EvalOptions, VARIANTS};
use panodrag_core::reproject::{align_case, inverse_align, AlignmentRecord, DragCase};
use panodrag_core::{ErpImage, Error, SphericalCoord};

use crate::report::{f17, f17_opt, f17_vec, TraceLine};

/// A drag counts as tracked when it ends within this many field cells.
pub const TRACKING_TOLERANCE_CELLS: f64 = 2.0;

/// Module switches for ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Ablation {
    /// Adaptive reprojection: rotate the case before editing.
    pub ar: bool,
    /// Great-circle motion direction.
    pub gcta: bool,
    /// Latitude-scaled tracking window.
    pub ssrt: bool,
}

impl Ablation {
    pub const ALL_ON: Self = Self {
        ar: true,
        gcta: true,
        ssrt: true,
    };
    pub const ALL_OFF: Self = Self {
        ar: false,
        gcta: false,
        ssrt: false,
    };
}

impl Default for Ablation {
    fn default() -> Self {
        Self::ALL_ON
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    /// Optimization settings; `gcta` and `ssrt` are overridden by `ablation`.
    pub drag: DragConfig,
    pub downsample: usize,
    pub fovs: Vec<f64>,
    pub eval: EvalOptions,
    pub ablation: Ablation,
    pub target_lon: f64,
    pub keep_lat: bool,
    /// Skip editing: the edited panorama is the original.
    pub dry_run: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            drag: DragConfig::default(),
            downsample: 8,
            fovs: vec![30.0, 60.0, 90.0],
            eval: EvalOptions::default(),
            ablation: Ablation::default(),
            target_lon: 0.0,
            keep_lat: true,
            dry_run: false,
        }
    }
}

impl SuiteConfig {
    /// Drag settings with the ablation switches applied.
    pub fn effective_drag(&self) -> DragConfig {
        DragConfig {
            gcta: self.ablation.gcta,
            ssrt: self.ablation.ssrt,
            ..self.drag
        }
    }
}

/// Fingerprints of intermediate artifacts, one per switchable module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PathHashes {
    /// Rotation and aligned image / mask / pairs.
    pub align: u64,
    /// Motion direction at the first iteration of each pair.
    pub direction: u64,
    /// Search region at the first iteration of each pair.
    pub region: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairOutcome {
    pub converged: bool,
    pub iterations: usize,
    #[serde(serialize_with = "f17")]
    pub final_error_cells: f64,
    #[serde(serialize_with = "f17_vec")]
    pub final_handle: Vec<f64>,
}

impl PairOutcome {
    pub fn tracked(&self) -> bool {
        self.final_error_cells <= TRACKING_TOLERANCE_CELLS
    }
}

/// Everything produced for one case.
#[derive(Debug, Clone)]
pub struct CaseOutcome {
    pub case_id: String,
    pub record: AlignmentRecord,
    pub pairs: Vec<PairOutcome>,
    pub hashes: PathHashes,
    pub edited: ErpImage,
    /// View center of the evaluation (first pair's midpoint, original frame).
    pub center: SphericalCoord,
    /// `(pair index, record)` for every iteration.
    pub trace: Vec<(usize, TraceRecord)>,
}

impl CaseOutcome {
    /// `None` on dry runs, where nothing is dragged.
    pub fn tracked(&self) -> Option<bool> {
        (!self.pairs.is_empty()).then(|| self.pairs.iter().all(PairOutcome::tracked))
    }

    pub fn trace_lines(&self) -> Vec<TraceLine<'_>> {
        self.trace
            .iter()
            .map(|(p, r)| TraceLine::new(&self.case_id, *p, r))
            .collect()
    }
}

fn hash_image(fp: &mut Fingerprint, img: &ErpImage) {
    fp.u64(img.width() as u64)
        .u64(img.height() as u64)
        .f64s(img.raster().data());
}

fn align_hash(case: &DragCase, rec: &AlignmentRecord) -> u64 {
    let mut fp = Fingerprint::new();
    for row in rec.rotation.rows() {
        fp.f64s(&row);
    }
    hash_image(&mut fp, case.image());
    fp.bytes(case.mask().data());
    for p in case.pairs() {
        fp.f64s(&[p.handle.i, p.handle.j, p.target.i, p.target.j]);
    }
    fp.finish()
}

/// Align (unless AR is off), drag every pair on the shared field, write the
/// field delta back and undo the alignment.
pub fn run_case(case: &DragCase, cfg: &SuiteConfig) -> Result<CaseOutcome, Error> {
    let (aligned, record) = if cfg.ablation.ar {
        align_case(case, cfg.target_lon, cfg.keep_lat)?
    } else {
        (case.clone(), AlignmentRecord::identity(case)?)
    };
    let center = record.midpoint_before;
    let align = align_hash(&aligned, &record);

    if cfg.dry_run {
        return Ok(CaseOutcome {
            case_id: case.id.clone(),
            record,
            pairs: Vec::new(),
            hashes: PathHashes {
                align,
                direction: 0,
                region: 0,
            },
            edited: case.image().clone(),
            center,
            trace: Vec::new(),
        });
    }

    let drag = cfg.effective_drag();
    let field0 = build_field(aligned.image(), cfg.downsample)?;
    let mask = aligned.mask().downsample_majority(cfg.downsample)?;
    let (fw, fh) = (field0.width(), field0.height());

    let mut field = field0.clone();
    let mut pairs = Vec::new();
    let mut trace = Vec::new();
    let mut dir_fp = Fingerprint::new();
    let mut region_fp = Fingerprint::new();
    for (k, pair) in aligned.pairs().iter().enumerate() {
        let handle = field.image_to_field(pair.handle);
        let target = field.image_to_field(pair.target);
        let region = build_search_region(handle, &drag, fw, fh);
        region_fp.f64(region.rx).f64(region.ry);
        for &(x, y) in &region.cells {
            fp_cell(&mut region_fp, x, y);
        }
        let mut first = true;
        let res = run_drag_traced(&field, &mask, handle, target, &drag, |r| {
            if first {
                dir_fp.f64(r.direction.di).f64(r.direction.dj);
                first = false;
            }
            trace.push((k, *r));
        })?;
        let end = res.final_handle();
        pairs.push(PairOutcome {
            converged: res.converged,
            iterations: res.iterations,
            final_error_cells: res.final_distance,
            final_handle: vec![end.i, end.j],
        });
        field = res.final_field;
    }

    let edited_aligned = apply_field_delta(aligned.image(), &field0, &field)?;
    let edited = inverse_align(&aligned.with_image(edited_aligned)?, &record)?;
    Ok(CaseOutcome {
        case_id: case.id.clone(),
        record,
        pairs,
        hashes: PathHashes {
            align,
            direction: dir_fp.finish(),
            region: region_fp.finish(),
        },
        edited: edited.image().clone(),
        center,
        trace,
    })
}

fn fp_cell(fp: &mut Fingerprint, x: usize, y: usize) {
    fp.u64(x as u64).u64(y as u64);
}

/// One `(case, FOV)` metric row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub case_id: String,
    #[serde(serialize_with = "f17")]
    pub fov: f64,
    #[serde(rename = "if", serialize_with = "f17")]
    pub if_score: f64,
    #[serde(serialize_with = "f17_opt")]
    pub fid: Option<f64>,
    #[serde(serialize_with = "f17_opt")]
    pub sfid: Option<f64>,
    pub metric_variant: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub case_id: String,
    pub tracked: Option<bool>,
    pub pairs: Vec<PairOutcome>,
    pub hashes: PathHashes,
    #[serde(serialize_with = "f17")]
    pub if_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseFailure {
    pub case_id: String,
    pub error: String,
}

/// Per-FOV aggregate: IF is the mean of the case rows, FID / sFID are
/// computed once over the set of all successful cases (they need ≥ 2).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    #[serde(serialize_with = "f17")]
    pub fov: f64,
    pub cases: usize,
    #[serde(rename = "if", serialize_with = "f17")]
    pub if_mean: f64,
    #[serde(serialize_with = "f17_opt")]
    pub fid: Option<f64>,
    #[serde(serialize_with = "f17_opt")]
    pub sfid: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    #[serde(serialize_with = "f17")]
    pub lambda: f64,
    #[serde(serialize_with = "f17")]
    pub lr: f64,
    #[serde(serialize_with = "f17")]
    pub r_base: f64,
    #[serde(serialize_with = "f17")]
    pub r0: f64,
    pub r_motion: usize,
    pub max_iter: usize,
    #[serde(serialize_with = "f17")]
    pub stop_eps: f64,
    pub ablation: Ablation,
    pub downsample: usize,
    #[serde(serialize_with = "f17_vec")]
    pub fovs: Vec<f64>,
    pub view_size: usize,
    #[serde(serialize_with = "f17")]
    pub target_lon: f64,
    pub keep_lat: bool,
    pub dry_run: bool,
}

impl ConfigEcho {
    fn new(cfg: &SuiteConfig) -> Self {
        let d = &cfg.drag;
        Self {
            lambda: d.lambda,
            lr: d.lr,
            r_base: d.r_base,
            r0: d.r0(),
            r_motion: d.r_motion,
            max_iter: d.max_iter,
            stop_eps: d.stop_eps,
            ablation: cfg.ablation,
            downsample: cfg.downsample,
            fovs: cfg.fovs.clone(),
            view_size: cfg.eval.view_size,
            target_lon: cfg.target_lon,
            keep_lat: cfg.keep_lat,
            dry_run: cfg.dry_run,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub version: &'static str,
    pub config: ConfigEcho,
    pub metric_seed: u64,
    pub rows: Vec<MetricRow>,
    pub aggregate: Vec<AggregateRow>,
    pub cases: Vec<CaseReport>,
    pub failures: Vec<CaseFailure>,
    /// Fraction of cases whose every pair was tracked; failed cases count
    /// as untracked. `None` on dry runs.
    #[serde(serialize_with = "f17_opt")]
    pub tracking_success_rate: Option<f64>,
}

impl SuiteReport {
    pub fn has_failures(&self) -> bool {
        !self.failures.is_empty()
    }
}

/// Suite run result: the report plus the raw per-case outcomes.
#[derive(Debug)]
pub struct SuiteRun {
    pub report: SuiteReport,
    pub outcomes: Vec<CaseOutcome>,
}

fn variant_label(with_frechet: bool) -> String {
    if with_frechet {
        format!(
            "{}+{}+{}",
            VARIANTS.image_fidelity, VARIANTS.fid, VARIANTS.sfid
        )
    } else {
        VARIANTS.image_fidelity.to_string()
    }
}

/// A case outcome with its mean IF and per-FOV IF.
type Scored = (CaseOutcome, f64, Vec<f64>);

pub fn run_suite(cases: &[DragCase], cfg: &SuiteConfig) -> Result<SuiteRun, Error> {
    if cases.is_empty() {
        return Err(Error::InvalidArgument(
            "the suite needs at least one case".into(),
        ));
    }
    cfg.effective_drag().validate()?;
    if cfg.fovs.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one FOV is required".into(),
        ));
    }

    let mut order: Vec<&DragCase> = cases.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    let results: Vec<(String, Result<Scored, Error>)> = order
        .par_iter()
        .map(|case| {
            let r = run_case(case, cfg).and_then(|out| {
                let m = evaluate_fidelity(
                    std::slice::from_ref(case.image()),
                    std::slice::from_ref(&out.edited),
                    &[out.center],
                    &cfg.fovs,
                    &cfg.eval,
                )?;
                let per_fov = m.per_fov.iter().map(|f| f.if_score).collect();
                Ok((out, m.if_score, per_fov))
            });
            (case.id.clone(), r)
        })
        .collect();

    let mut outcomes = Vec::new();
    let mut per_fov_if = Vec::new();
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (id, r) in results {
        match r {
            Ok((out, if_score, fov_if)) => {
                reports.push(CaseReport {
                    case_id: id,
                    tracked: out.tracked(),
                    pairs: out.pairs.clone(),
                    hashes: out.hashes,
                    if_score,
                });
                per_fov_if.push(fov_if);
                outcomes.push(out);
            }
            Err(e) => failures.push(CaseFailure {
                case_id: id,
                error: e.to_string(),
            }),
        }
    }

    let mut rows = Vec::new();
    for (rep, fov_if) in reports.iter().zip(&per_fov_if) {
        for (&fov, &v) in cfg.fovs.iter().zip(fov_if) {
            rows.push(MetricRow {
                case_id: rep.case_id.clone(),
                fov,
                if_score: v,
                fid: None,
                sfid: None,
                metric_variant: variant_label(false),
                seed: cfg.eval.seed,
            });
        }
    }

    let by_id = |id: &str| {
        cases
            .iter()
            .find(|c| c.id == id)
            .expect("outcome of a known case")
    };
    let originals: Vec<ErpImage> = outcomes
        .iter()
        .map(|o| by_id(&o.case_id).image().clone())
        .collect();
    let editeds: Vec<ErpImage> = outcomes.iter().map(|o| o.edited.clone()).collect();
    let centers: Vec<SphericalCoord> = outcomes.iter().map(|o| o.center).collect();
    let frechet = if outcomes.len() >= 2 {
        Some(evaluate_metrics(
            &originals, &editeds, &centers, &cfg.fovs, &cfg.eval,
        )?)
    } else {
        None
    };

    let n = reports.len();
    let aggregate = cfg
        .fovs
        .iter()
        .enumerate()
        .map(|(k, &fov)| {
            let set = frechet.as_ref().map(|m| &m.per_fov[k]);
            AggregateRow {
                fov,
                cases: n,
                if_mean: if n == 0 {
                    f64::NAN
                } else {
                    per_fov_if.iter().map(|v| v[k]).sum::<f64>() / n as f64
                },
                fid: set.and_then(|m| m.fid),
                sfid: set.and_then(|m| m.sfid),
            }
        })
        .collect();

    // failed cases count as untracked
    let tracking_success_rate = (!cfg.dry_run).then(|| {
        let ok = reports.iter().filter(|r| r.tracked == Some(true)).count();
        ok as f64 / (reports.len() + failures.len()) as f64
    });

    Ok(SuiteRun {
        report: SuiteReport {
            version: crate::VERSION,
            config: ConfigEcho::new(cfg),
            metric_seed: cfg.eval.seed,
            rows,
            aggregate,
            cases: reports,
            failures,
            tracking_success_rate,
        },
        outcomes,
    })
}
