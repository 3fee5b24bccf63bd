use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use hazgrid::region::Region;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::sync::mpsc;

use crate::error::{ApiError, ApiResult};
use crate::jobs::{self, Artifact, JobKind, ValidJob};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: String,
    pub region: String,
    pub kind: JobKind,
    pub status: JobStatus,
    /// Unix milliseconds.
    pub submitted_ms: u64,
    pub started_ms: Option<u64>,
    pub finished_ms: Option<u64>,
    pub request: Value,
    pub error: Option<String>,
    pub result: Option<Value>,
}

pub(crate) struct RegionEntry {
    pub id: String,
    pub region: Region,
    queue: mpsc::UnboundedSender<(String, ValidJob)>,
}

pub struct AppState {
    regions: RwLock<HashMap<String, Arc<RegionEntry>>>,
    jobs: RwLock<HashMap<String, JobRecord>>,
    artifacts: RwLock<HashMap<String, Arc<Artifact>>>,
    next_region: AtomicU64,
    next_job: AtomicU64,
    data_dir: Option<PathBuf>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl AppState {
    /// Job records and region summaries are also written as JSON under
    /// `data_dir` when one is given.
    pub fn new(data_dir: Option<PathBuf>) -> std::io::Result<Arc<Self>> {
        if let Some(dir) = &data_dir {
            fs::create_dir_all(dir.join("jobs"))?;
            fs::create_dir_all(dir.join("regions"))?;
        }
        Ok(Arc::new(AppState {
            regions: RwLock::default(),
            jobs: RwLock::default(),
            artifacts: RwLock::default(),
            next_region: AtomicU64::new(1),
            next_job: AtomicU64::new(1),
            data_dir,
        }))
    }

    fn persist(&self, sub: &str, id: &str, value: &impl Serialize) {
        let Some(dir) = &self.data_dir else { return };
        let path = dir.join(sub).join(format!("{id}.json"));
        let text = serde_json::to_vec_pretty(value).expect("record serializes");
        if let Err(e) = fs::write(&path, text) {
            log::warn!("could not write {}: {e}", path.display());
        }
    }

    /// Registers the region and starts its job worker. Needs a tokio runtime.
    pub fn insert_region(self: &Arc<Self>, region: Region) -> String {
        let id = format!("r{}", self.next_region.fetch_add(1, Ordering::Relaxed));
        let (tx, rx) = mpsc::unbounded_channel();
        let entry = Arc::new(RegionEntry {
            id: id.clone(),
            region,
            queue: tx,
        });
        self.persist("regions", &id, &entry.region.summary());
        self.regions
            .write()
            .unwrap()
            .insert(id.clone(), entry.clone());
        tokio::spawn(worker(Arc::clone(self), entry, rx));
        id
    }

    pub(crate) fn region(&self, id: &str) -> ApiResult<Arc<RegionEntry>> {
        self.regions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("region", id))
    }

    pub fn job(&self, id: &str) -> ApiResult<JobRecord> {
        self.jobs
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("job", id))
    }

    pub(crate) fn artifact(&self, job: &str) -> ApiResult<Arc<Artifact>> {
        self.artifacts
            .read()
            .unwrap()
            .get(job)
            .cloned()
            .ok_or_else(|| ApiError::internal(format!("job {job} is done but has no result")))
    }

    pub(crate) fn enqueue(
        &self,
        entry: &RegionEntry,
        job: ValidJob,
        request: Value,
    ) -> ApiResult<JobRecord> {
        let id = format!("j{}", self.next_job.fetch_add(1, Ordering::Relaxed));
        let record = JobRecord {
            id: id.clone(),
            region: entry.id.clone(),
            kind: job.kind(),
            status: JobStatus::Queued,
            submitted_ms: now_ms(),
            started_ms: None,
            finished_ms: None,
            request,
            error: None,
            result: None,
        };
        self.jobs
            .write()
            .unwrap()
            .insert(id.clone(), record.clone());
        self.persist("jobs", &id, &record);
        entry
            .queue
            .send((id, job))
            .map_err(|_| ApiError::internal("region worker stopped"))?;
        Ok(record)
    }

    fn update(&self, id: &str, f: impl FnOnce(&mut JobRecord)) {
        let snapshot = {
            let mut jobs = self.jobs.write().unwrap();
            let Some(rec) = jobs.get_mut(id) else { return };
            f(rec);
            rec.clone()
        };
        self.persist("jobs", id, &snapshot);
    }
}

/// Runs one region's jobs strictly in submission order.
async fn worker(
    state: Arc<AppState>,
    entry: Arc<RegionEntry>,
    mut rx: mpsc::UnboundedReceiver<(String, ValidJob)>,
) {
    while let Some((id, job)) = rx.recv().await {
        state.update(&id, |r| {
            r.status = JobStatus::Running;
            r.started_ms = Some(now_ms());
        });
        let region = Arc::clone(&entry);
        let outcome = tokio::task::spawn_blocking(move || jobs::run(&region.region, &job)).await;
        match outcome {
            Ok(Ok(artifact)) => {
                let result = artifact.result_json();
                state
                    .artifacts
                    .write()
                    .unwrap()
                    .insert(id.clone(), Arc::new(artifact));
                state.update(&id, |r| {
                    r.status = JobStatus::Done;
                    r.result = Some(result);
                    r.finished_ms = Some(now_ms());
                });
            }
            Ok(Err(e)) => state.update(&id, |r| {
                r.status = JobStatus::Failed;
                r.error = Some(e.to_string());
                r.finished_ms = Some(now_ms());
            }),
            Err(e) => state.update(&id, |r| {
                r.status = JobStatus::Failed;
                r.error = Some(format!("job panicked: {e}"));
                r.finished_ms = Some(now_ms());
            }),
        }
    }
}
