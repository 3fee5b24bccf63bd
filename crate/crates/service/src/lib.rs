//! HTTP front end for hazgrid: create regions, evaluate scenarios
//! synchronously and run optimization, marginal-sweep and scaling jobs in
//! a per-region FIFO queue.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/regions` | synthetic spec or uploaded bundle |
//! | GET | `/regions/{id}` | summary; `?geometry=true` adds hexagon GeoJSON |
//! | POST | `/regions/{id}/scenario` | risk field for a scenario |
//! | POST | `/regions/{id}/jobs` | queue a job |
//! | GET | `/jobs/{id}` | job record |
//! | GET | `/regions/{id}/compare?job=` | before/after risk comparison |
//! | GET | `/regions/{id}/marginal?job=` | marginal-value curve |

mod error;
mod jobs;
mod store;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use hazgrid::hexgrid::{hexagons_geojson, CellId};
use hazgrid::ingest::{
    parse_ascii_grid, parse_geojson_polygons, parse_network, parse_points_csv, synth_region,
    RegionBundle, SynthSpec,
};
use hazgrid::region::{Region, RegionConfig, RegionSummary};
use hazgrid::riskmodel::{
    compare_fields, features, risk_field, CompareReport, RiskSummary, Scenario,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use error::{ApiError, ApiResult};
pub use jobs::{CostKind, JobKind, JobRequest};
pub use store::{AppState, JobRecord, JobStatus};

use jobs::{Artifact, ScenarioInput};

pub const DATA_DIR_ENV: &str = "HAZGRID_DATA_DIR";

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/regions", post(create_region))
        .route("/regions/{id}", get(get_region))
        .route("/regions/{id}/scenario", post(evaluate_scenario))
        .route("/regions/{id}/jobs", post(submit_job))
        .route("/regions/{id}/compare", get(compare))
        .route("/regions/{id}/marginal", get(marginal))
        .route("/jobs/{id}", get(get_job))
        .layer(DefaultBodyLimit::max(512 * 1024 * 1024))
        .with_state(state)
}

/// Serves until ctrl-c. The data directory defaults to `HAZGRID_DATA_DIR`.
pub async fn serve(addr: SocketAddr, data_dir: Option<PathBuf>) -> std::io::Result<()> {
    let data_dir = data_dir.or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from));
    let state = AppState::new(data_dir)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("request body: {e}")))
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker panicked: {e}")))?
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthRequest {
    seed: u64,
    n: usize,
    m: usize,
    #[serde(default)]
    spec: SynthSpec,
}

/// Raw file contents, keyed by layer or set name.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleUpload {
    nodes_csv: String,
    edges_csv: String,
    #[serde(default)]
    rasters: BTreeMap<String, String>,
    #[serde(default)]
    points: BTreeMap<String, String>,
    #[serde(default)]
    polygons: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRegion {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    synth: Option<SynthRequest>,
    #[serde(default)]
    bundle: Option<BundleUpload>,
    #[serde(default)]
    edge_m: Option<f64>,
    #[serde(default)]
    cutoff_m: Option<f64>,
}

fn bundle_from_upload(name: String, up: BundleUpload) -> hazgrid::Result<RegionBundle> {
    let net = parse_network(&up.nodes_csv, "nodes.csv", &up.edges_csv, "edges.csv")?;
    let mut bundle = RegionBundle::from_network(name, net);
    for (k, text) in up.rasters {
        let label = format!("rasters/{k}.asc");
        bundle.rasters.insert(k, parse_ascii_grid(&text, &label)?);
    }
    for (k, text) in up.points {
        let label = format!("points/{k}.csv");
        bundle
            .point_sets
            .insert(k, parse_points_csv(&text, &label)?);
    }
    for (k, text) in up.polygons {
        bundle
            .polygon_sets
            .insert(k, parse_geojson_polygons(&text)?);
    }
    Ok(bundle)
}

#[derive(Debug, Serialize)]
struct RegionPayload {
    id: String,
    #[serde(flatten)]
    summary: RegionSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    hexagons: Option<Value>,
}

async fn create_region(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<RegionPayload>)> {
    let req: CreateRegion = parse_body(&body)?;
    let mut config = RegionConfig::default();
    if let Some(e) = req.edge_m {
        config.edge_m = e;
    }
    if let Some(c) = req.cutoff_m {
        config.cutoff_m = c;
    }
    let region = blocking(move || {
        let mut bundle = match (req.synth, req.bundle) {
            (Some(s), None) => synth_region(s.seed, s.n, s.m, &s.spec)?,
            (None, Some(up)) => {
                bundle_from_upload(req.name.clone().unwrap_or_else(|| "upload".into()), up)?
            }
            _ => {
                return Err(ApiError::bad_request(
                    "give exactly one of `synth` or `bundle`",
                ))
            }
        };
        if let Some(name) = req.name {
            bundle.name = name;
        }
        Ok(Region::build(&bundle, config)?)
    })
    .await?;
    let summary = region.summary();
    let id = state.insert_region(region);
    Ok((
        StatusCode::CREATED,
        Json(RegionPayload {
            id,
            summary,
            hexagons: None,
        }),
    ))
}

#[derive(Debug, Deserialize)]
struct RegionQuery {
    #[serde(default)]
    geometry: bool,
}

async fn get_region(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<RegionQuery>,
) -> ApiResult<Json<RegionPayload>> {
    let entry = state.region(&id)?;
    let hexagons = if q.geometry {
        Some(hexagons_geojson(&entry.region.layers_with_sttfs()?))
    } else {
        None
    };
    Ok(Json(RegionPayload {
        id,
        summary: entry.region.summary(),
        hexagons,
    }))
}

#[derive(Debug, Serialize)]
struct ScenarioPayload {
    region: String,
    scenario: Scenario,
    summary: RiskSummary,
    cells: Vec<CellId>,
    fb: Vec<f64>,
    sd: Vec<f64>,
    base: Vec<f64>,
    s: Vec<Option<f64>>,
    ri: Vec<Option<f64>>,
    /// Current response seconds; `None` where no station reaches the cell.
    sttfs: Vec<Option<f64>>,
}

async fn evaluate_scenario(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<ScenarioPayload>> {
    let entry = state.region(&id)?;
    let scenario = parse_body::<ScenarioInput>(&body)?.resolve()?;
    let payload = blocking(move || {
        let region = &entry.region;
        let f = features(&region.layers, &scenario)?;
        let field = risk_field(region.layers.cells(), &f, &region.sttfs, &scenario)?;
        Ok(ScenarioPayload {
            region: id,
            summary: field.summary(),
            scenario,
            cells: field.cells,
            fb: f.fb,
            sd: f.sd,
            base: field.base,
            s: field.s,
            ri: field.ri,
            sttfs: region
                .sttfs
                .seconds
                .iter()
                .map(|t| t.is_finite().then_some(*t))
                .collect(),
        })
    })
    .await?;
    Ok(Json(payload))
}

async fn submit_job(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<JobRecord>)> {
    let entry = state.region(&id)?;
    let request: Value = parse_body(&body)?;
    let job = parse_body::<JobRequest>(&body)?.validate()?;
    let record = state.enqueue(&entry, job, request)?;
    Ok((StatusCode::ACCEPTED, Json(record)))
}

async fn get_job(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<JobRecord>> {
    Ok(Json(state.job(&id)?))
}

#[derive(Debug, Deserialize)]
struct JobQuery {
    job: String,
}

fn finished_artifact(state: &AppState, region: &str, job: &str) -> ApiResult<Arc<Artifact>> {
    state.region(region)?;
    let record = state.job(job)?;
    if record.region != region {
        return Err(ApiError::not_found("job for this region", job));
    }
    match record.status {
        JobStatus::Done => state.artifact(job),
        JobStatus::Failed => Err(ApiError::conflict(format!(
            "job {job} failed: {}",
            record.error.unwrap_or_default()
        ))),
        _ => Err(ApiError::conflict(format!("job {job} has not finished"))),
    }
}

#[derive(Debug, Serialize)]
struct ComparePayload {
    region: String,
    job: String,
    #[serde(flatten)]
    report: CompareReport,
    cells: Vec<CellId>,
    stations_before: Vec<CellId>,
    stations_after: Vec<CellId>,
}

async fn compare(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<JobQuery>,
) -> ApiResult<Json<ComparePayload>> {
    let artifact = finished_artifact(&state, &id, &q.job)?;
    let Artifact::Optimize {
        output,
        baseline,
        optimized,
    } = artifact.as_ref()
    else {
        return Err(ApiError::bad_request(format!(
            "job {} is not an optimization",
            q.job
        )));
    };
    Ok(Json(ComparePayload {
        region: id,
        job: q.job,
        report: compare_fields(baseline, optimized)?,
        cells: baseline.cells.clone(),
        stations_before: output.stations_before.clone(),
        stations_after: output.stations_after.clone(),
    }))
}

async fn marginal(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<JobQuery>,
) -> ApiResult<Json<Value>> {
    let artifact = finished_artifact(&state, &id, &q.job)?;
    match artifact.as_ref() {
        Artifact::Sweep(_) => Ok(Json(artifact.result_json())),
        _ => Err(ApiError::bad_request(format!(
            "job {} is not a marginal sweep",
            q.job
        ))),
    }
}
